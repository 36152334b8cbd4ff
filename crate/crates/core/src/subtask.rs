//! One DAG edge as an episodic reach-avoid task.
//!
//! Starting from a state satisfying the edge's source, an episode succeeds
//! when the label satisfies the destination and fails as soon as it
//! satisfies any other successor of the source. Episodes that start away
//! from the initial state are reached by replaying the learned policies of a
//! [`PolicyChain`].

use std::sync::Arc;

use thiserror::Error;

use crate::env::{Action, EnvError, GridEnv, LowState, Terminal};
use crate::graph::{GraphError, NodeId, SubgoalDag, TaskEdge};
use crate::metrics::Meter;
use crate::student::{Policy, Rng};

pub const DEFAULT_ALLOCATED: u32 = 100;
pub const DEFAULT_RESET_RETRIES: u32 = 5;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("could not reach the start of {task} after {attempts} chain rollout(s)")]
    ResetFailure { task: String, attempts: u32 },
    #[error("interaction budget exhausted")]
    BudgetExhausted,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubTaskOutcome {
    Running,
    Success,
    AvoidViolation,
    EnvTerminal,
}

/// Result of one environment step inside an episodic task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskStep {
    pub next: LowState,
    pub reward: f64,
    pub outcome: SubTaskOutcome,
    /// Whether the transition ends the MDP (no bootstrapping). Running out
    /// of allocated steps is a truncation, not a terminal.
    pub terminal: bool,
}

impl TaskStep {
    pub fn done(&self) -> bool {
        self.outcome != SubTaskOutcome::Running
    }
}

/// Shared shape of everything the student can train on.
pub trait Episodic {
    fn env(&self) -> &GridEnv;

    /// Interaction limit of one episode.
    fn allocated(&self) -> u32;

    /// Initial state of a fresh episode, with any setup interactions charged
    /// to `meter.reset`.
    fn begin(&self, meter: &mut Meter, rng: &mut Rng) -> Result<LowState, TaskError>;

    /// Advance by `action`; `steps` counts interactions of this episode
    /// including this one.
    fn advance(&self, state: &LowState, action: Action, steps: u32) -> Result<TaskStep, EnvError>;
}

/// Reward for reaching the target after `steps` of `allocated` interactions.
pub fn success_reward(steps: u32, allocated: u32) -> f64 {
    1.0 - 0.9 * f64::from(steps) / f64::from(allocated)
}

/// A learned edge replayed greedily to set up later tasks.
#[derive(Clone)]
pub struct ChainLink {
    pub edge: TaskEdge,
    pub policy: Arc<dyn Policy>,
    /// Label mask of the edge's destination; `None` if it can never hold.
    pub target: Option<u64>,
    pub allocated: u32,
}

impl std::fmt::Debug for ChainLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChainLink")
            .field("edge", &self.edge)
            .field("target", &self.target)
            .field("allocated", &self.allocated)
            .finish_non_exhaustive()
    }
}

/// Learned policies leading from the start node to some node, in order.
#[derive(Debug, Clone, Default)]
pub struct PolicyChain {
    pub links: Vec<ChainLink>,
}

impl PolicyChain {
    pub fn edges(&self) -> Vec<TaskEdge> {
        self.links.iter().map(|l| l.edge).collect()
    }

    pub fn extended(&self, link: ChainLink) -> Self {
        let mut links = self.links.clone();
        links.push(link);
        Self { links }
    }

    /// Roll the chain greedily from a fresh reset. `Ok(None)` means the
    /// rollout failed to reach some link's target.
    pub fn rollout(
        &self,
        env: &GridEnv,
        layout_seed: u64,
        meter: &mut Meter,
        rng: &mut Rng,
    ) -> Result<Option<LowState>, TaskError> {
        let mut s = env.reset(layout_seed);
        for link in &self.links {
            let Some(target) = link.target else {
                return Ok(None);
            };
            env.restart_clock(&mut s);
            let mut reached = env.label_mask(&s) & target == target;
            let mut steps = 0;
            while !reached && steps < link.allocated {
                if meter.exhausted() {
                    return Err(TaskError::BudgetExhausted);
                }
                let a = link.policy.greedy_action(env.state_key(&s), rng);
                let out = env.step(&s, a)?;
                meter.reset += 1;
                steps += 1;
                s = out.next;
                reached = env.label_mask(&s) & target == target;
                if !reached && out.terminal != Terminal::None {
                    return Ok(None);
                }
            }
            if !reached {
                return Ok(None);
            }
        }
        env.restart_clock(&mut s);
        Ok(Some(s))
    }
}

/// The reach-avoid task of one DAG edge.
#[derive(Debug, Clone)]
pub struct SubTask {
    pub edge: TaskEdge,
    pub name: String,
    /// Successors of the source other than the destination.
    pub avoid: Vec<NodeId>,
    dst_mask: Option<u64>,
    avoid_masks: Vec<u64>,
    env: GridEnv,
    pub allocated: u32,
    pub step_penalty: f64,
    pub retries: u32,
    pub layout_seed: u64,
    pub chain: PolicyChain,
}

impl SubTask {
    /// Build the task for `edge`; the environment's horizon is set to
    /// `allocated` so every episode is cut at that length.
    pub fn new(
        dag: &SubgoalDag,
        edge: TaskEdge,
        env: &GridEnv,
        allocated: u32,
    ) -> Result<Self, TaskError> {
        if !dag.contains_edge(edge) {
            return Err(GraphError::UnknownEdge(edge).into());
        }
        assert!(allocated >= 1);
        let avoid: Vec<NodeId> = dag
            .successors(edge.src)?
            .iter()
            .copied()
            .filter(|&v| v != edge.dst)
            .collect();
        let avoid_masks = avoid
            .iter()
            .filter_map(|&v| env.mask_of(&dag.nodes()[v]))
            .collect();
        Ok(Self {
            edge,
            name: dag.describe(edge),
            avoid,
            dst_mask: env.mask_of(&dag.nodes()[edge.dst]),
            avoid_masks,
            env: env.with_horizon(allocated),
            allocated,
            step_penalty: 0.0,
            retries: DEFAULT_RESET_RETRIES,
            layout_seed: 0,
            chain: PolicyChain::default(),
        })
    }

    pub fn with_chain(mut self, chain: PolicyChain) -> Self {
        self.chain = chain;
        self
    }

    pub fn target_mask(&self) -> Option<u64> {
        self.dst_mask
    }

    /// Classify a label mask reached after a step.
    pub fn classify(&self, mask: u64) -> Option<SubTaskOutcome> {
        if self.avoid_masks.iter().any(|&m| m & !mask == 0) {
            Some(SubTaskOutcome::AvoidViolation)
        } else if self.dst_mask.is_some_and(|m| mask & m == m) {
            Some(SubTaskOutcome::Success)
        } else {
            None
        }
    }

    /// Reach the task's source by replaying the chain, retrying failed
    /// rollouts.
    pub fn task_reset(&self, meter: &mut Meter, rng: &mut Rng) -> Result<LowState, TaskError> {
        for _ in 0..self.retries.max(1) {
            if let Some(s) = self.chain.rollout(&self.env, self.layout_seed, meter, rng)? {
                return Ok(s);
            }
        }
        Err(TaskError::ResetFailure {
            task: self.name.clone(),
            attempts: self.retries.max(1),
        })
    }

    pub fn task_step(
        &self,
        state: &LowState,
        action: Action,
        steps: u32,
    ) -> Result<TaskStep, EnvError> {
        let out = self.env.step(state, action)?;
        let mask = self.env.label_mask(&out.next);
        let (outcome, reward) = match self.classify(mask) {
            Some(SubTaskOutcome::Success) => {
                (SubTaskOutcome::Success, success_reward(steps, self.allocated))
            }
            Some(o) => (o, self.step_penalty),
            None if out.terminal != Terminal::None || steps >= self.allocated => {
                (SubTaskOutcome::EnvTerminal, self.step_penalty)
            }
            None => (SubTaskOutcome::Running, self.step_penalty),
        };
        let terminal = match outcome {
            SubTaskOutcome::Running => false,
            SubTaskOutcome::EnvTerminal => {
                matches!(out.terminal, Terminal::LavaDeath | Terminal::GoalReached)
            }
            _ => true,
        };
        Ok(TaskStep {
            next: out.next,
            reward,
            outcome,
            terminal,
        })
    }
}

impl Episodic for SubTask {
    fn env(&self) -> &GridEnv {
        &self.env
    }

    fn allocated(&self) -> u32 {
        self.allocated
    }

    fn begin(&self, meter: &mut Meter, rng: &mut Rng) -> Result<LowState, TaskError> {
        self.task_reset(meter, rng)
    }

    fn advance(&self, state: &LowState, action: Action, steps: u32) -> Result<TaskStep, EnvError> {
        self.task_step(state, action, steps)
    }
}
