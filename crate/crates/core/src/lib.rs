//! Teacher-student curriculum learning over sub-goal graphs proposed by a
//! language model, with a labeled gridworld, a tabular student and
//! baselines to compare against.

pub mod baselines;
pub mod env;
pub mod graph;
pub mod harness;
pub mod llm;
pub mod metrics;
pub mod student;
pub mod subtask;
pub mod symbolic;
pub mod teacher;
