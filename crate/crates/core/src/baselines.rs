//! Comparison methods: learning from scratch (LFS), a graph-free
//! teacher-student curriculum (TSCL), reward shaping from a graph (AgRS with
//! an oracle graph, LgRS with a proposed one), and AgTS, which is the
//! teacher loop fed an oracle graph.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvError, GridEnv, LowState, Terminal};
use crate::graph::{GraphError, NodeId, SubgoalDag, TaskEdge};
use crate::metrics::{Event, Ledger, Meter, QSnapshot, RunMetrics, Summary};
use crate::student::{self, Rng, StudentConfig, TabularQ};
use crate::subtask::{success_reward, Episodic, SubTask, SubTaskOutcome, TaskError, TaskStep};
use crate::symbolic::SymbolicState;
use crate::teacher::{
    check_convergence, run_lgts, EpsilonGreedy, RunResult, TaskSampler, TaskStats, TeacherConfig,
    TeacherError, TeacherState,
};

/// Episode length of full-task baselines.
pub const FULL_TASK_HORIZON: u32 = 500;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapingMode {
    /// `gamma * phi(s') * [not terminal] - phi(s)`.
    #[default]
    Potential,
    /// `phi(s')` added to every step.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// Episode length of the full task.
    pub horizon: u32,
    pub shaping: ShapingMode,
    pub shaping_scale: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            horizon: FULL_TASK_HORIZON,
            shaping: ShapingMode::Potential,
            shaping_scale: 1.0,
        }
    }
}

/// `(D - dist(q, goal)) / D` with `D = dist(start, goal)`, clamped to
/// `[0, 1]`; nodes that cannot reach the goal get 0.
pub fn shaping_potential(dag: &SubgoalDag, node: NodeId) -> Result<f64, GraphError> {
    dag.node(node)?;
    let dist = dag.distances_to_goal();
    let d = dist[dag.start()].ok_or(GraphError::NoGoalPath)? as f64;
    Ok(match dist[node] {
        Some(k) => ((d - k as f64) / d).clamp(0.0, 1.0),
        None => 0.0,
    })
}

/// Potential of each DAG node paired with its label mask; a state's
/// potential is the largest among the nodes its label satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    table: Vec<(u64, f64)>,
    pub gamma: f64,
    pub mode: ShapingMode,
    pub scale: f64,
}

impl Potential {
    pub fn new(dag: &SubgoalDag, env: &GridEnv, gamma: f64, mode: ShapingMode, scale: f64) -> Result<Self, GraphError> {
        let mut table = Vec::new();
        for id in 0..dag.node_count() {
            if let Some(mask) = env.mask_of(dag.node(id)?) {
                table.push((mask, shaping_potential(dag, id)?));
            }
        }
        Ok(Self {
            table,
            gamma,
            mode,
            scale,
        })
    }

    pub fn phi(&self, mask: u64) -> f64 {
        self.table
            .iter()
            .filter(|(m, _)| mask & m == *m)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max)
    }

    /// Shaping term for the transition `mask -> next_mask`.
    pub fn term(&self, mask: u64, next_mask: u64, terminal: bool) -> f64 {
        let next = self.phi(next_mask);
        self.scale
            * match self.mode {
                ShapingMode::Potential => {
                    let next = if terminal { 0.0 } else { next };
                    self.gamma * next - self.phi(mask)
                }
                ShapingMode::Raw => next,
            }
    }
}

/// The whole problem as one episodic task: reach a label satisfying the
/// goal within `allocated` steps.
#[derive(Debug, Clone)]
pub struct FullTask {
    env: GridEnv,
    goal_mask: Option<u64>,
    pub allocated: u32,
    pub layout_seed: u64,
    pub shaping: Option<Potential>,
}

impl FullTask {
    pub fn new(env: &GridEnv, goal: &SymbolicState, allocated: u32) -> Self {
        assert!(allocated >= 1);
        Self {
            goal_mask: env.mask_of(goal),
            env: env.with_horizon(allocated),
            allocated,
            layout_seed: 0,
            shaping: None,
        }
    }

    pub fn with_shaping(mut self, potential: Potential) -> Self {
        self.shaping = Some(potential);
        self
    }
}

impl Episodic for FullTask {
    fn env(&self) -> &GridEnv {
        &self.env
    }

    fn allocated(&self) -> u32 {
        self.allocated
    }

    fn begin(&self, _meter: &mut Meter, _rng: &mut Rng) -> Result<LowState, TaskError> {
        Ok(self.env.reset(self.layout_seed))
    }

    fn advance(&self, state: &LowState, action: Action, steps: u32) -> Result<TaskStep, EnvError> {
        let out = self.env.step(state, action)?;
        let next_mask = self.env.label_mask(&out.next);
        let reached = self.goal_mask.is_some_and(|m| next_mask & m == m);
        let (outcome, mut reward) = if reached {
            (SubTaskOutcome::Success, success_reward(steps, self.allocated))
        } else if out.terminal != Terminal::None || steps >= self.allocated {
            (SubTaskOutcome::EnvTerminal, 0.0)
        } else {
            (SubTaskOutcome::Running, 0.0)
        };
        let terminal = reached || matches!(out.terminal, Terminal::LavaDeath | Terminal::GoalReached);
        if let Some(p) = &self.shaping {
            reward += p.term(self.env.label_mask(state), next_mask, terminal);
        }
        Ok(TaskStep {
            next: out.next,
            reward,
            outcome,
            terminal,
        })
    }
}

/// Greedy success rate of `policy` on `task`, not charged to any budget.
fn free_success<T: Episodic>(policy: &TabularQ, task: &T, episodes: u32, seed: u64) -> Result<f64, TaskError> {
    let mut meter = Meter::new(u64::MAX);
    let mut rng = Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    student::evaluate(policy, task, episodes.max(1), &mut meter, &mut rng)
}

/// Train one policy on the full task until it converges or the budget runs
/// out. Shared by LFS and the shaped baselines.
fn run_single(
    task: &FullTask,
    name: &str,
    t: &TeacherConfig,
    student_cfg: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    let mut ledger = Ledger::new(t.budget);
    let mut metrics = RunMetrics::default();
    let mut rng = Rng::seed_from_u64(seed);
    let mut policy = TabularQ::new(*student_cfg, seed);
    let mut stats = TaskStats::default();
    let mut step = 0;
    let note = loop {
        if ledger.exhausted() {
            metrics.push(step, "", None, None, ledger.used(), Event::BudgetExhausted);
            break "budget exhausted";
        }
        step += 1;
        let mut meter = ledger.meter();
        let burst = student::train_for(&mut policy, task, t.x, &mut meter, &mut rng)?;
        ledger.commit(name, &meter);
        stats.record(burst.g);
        let mut rate = None;
        if burst.successes > 0 && !ledger.exhausted() {
            let mut meter = ledger.meter();
            match student::evaluate(&policy, task, t.eval_episodes, &mut meter, &mut rng) {
                Ok(r) => rate = Some(r),
                Err(TaskError::BudgetExhausted) => {}
                Err(e) => return Err(e.into()),
            }
            ledger.commit(name, &meter);
        }
        stats.success_rate = rate;
        metrics.push(step, name, Some(burst.g), rate, ledger.used(), Event::Step);
        if check_convergence(&stats, t.eta, t.mu).unwrap_or(false) {
            metrics.push(step, name, Some(burst.g), rate, ledger.used(), Event::Converged);
            metrics.push(step, "", None, None, ledger.used(), Event::Finished);
            break "goal reached";
        }
    };
    let mut plain = task.clone();
    plain.shaping = None;
    let final_success = free_success(&policy, &plain, t.final_eval_episodes, seed)?;
    let policy = Arc::new(policy);
    let edge = TaskEdge::new(0, 1);
    metrics.finalize(Summary {
        total_interactions: ledger.used(),
        success_rate: final_success,
        succeeded: final_success >= t.eta,
        teacher_steps: step,
        note: note.into(),
    });
    Ok(RunResult {
        policy_list: vec![(edge, Arc::clone(&policy))],
        edge_policies: BTreeMap::from([(edge, policy)]),
        total_interactions: ledger.used(),
        succeeded: metrics.summary.succeeded,
        final_success,
        ledger,
        metrics,
        teacher: TeacherState::default(),
    })
}

fn full_name(start: &SymbolicState, goal: &SymbolicState) -> String {
    format!("{start} -> {goal}")
}

/// Learning from scratch: one policy on the full task with the sparse
/// reward. The result's single edge `0 -> 1` stands for start to goal.
pub fn run_lfs(
    env: &GridEnv,
    start: &SymbolicState,
    goal: &SymbolicState,
    teacher: &TeacherConfig,
    baseline: &BaselineConfig,
    student: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    let mut task = FullTask::new(env, goal, baseline.horizon);
    task.layout_seed = seed;
    run_single(&task, &full_name(start, goal), teacher, student, seed)
}

/// One policy on the full task with a graph-derived shaping term.
pub fn run_shaped(
    env: &GridEnv,
    dag: &SubgoalDag,
    teacher: &TeacherConfig,
    baseline: &BaselineConfig,
    student: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    let potential = Potential::new(dag, env, student.gamma, baseline.shaping, baseline.shaping_scale)?;
    let goal = dag.node(dag.goal())?;
    let mut task = FullTask::new(env, goal, baseline.horizon).with_shaping(potential);
    task.layout_seed = seed;
    let name = full_name(dag.node(dag.start())?, goal);
    run_single(&task, &name, teacher, student, seed)
}

/// Teacher-student curriculum over every edge of `dag` at once. Each task
/// starts from a fresh reset; converged tasks are retired; the run succeeds
/// once a task ending at the goal converges.
pub fn run_tscl(
    dag: &SubgoalDag,
    env: &GridEnv,
    t: &TeacherConfig,
    student_cfg: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    let mut state = TeacherState::with_active(dag.edges(), t.alpha);
    let sampler = EpsilonGreedy { epsilon: t.epsilon };
    let mut tasks = BTreeMap::new();
    for e in dag.edges() {
        let mut task = SubTask::new(dag, e, env, t.allocated)?;
        task.step_penalty = t.step_penalty;
        task.layout_seed = seed;
        tasks.insert(e, task);
    }
    let mut policies: BTreeMap<TaskEdge, TabularQ> = BTreeMap::new();
    let mut ledger = Ledger::new(t.budget);
    let mut metrics = RunMetrics::default();
    let mut rng = Rng::seed_from_u64(seed);
    let mut step = 0;
    for e in dag.edges() {
        metrics.push(0, dag.describe(e), None, None, 0, Event::Activated);
    }
    let note = loop {
        if ledger.exhausted() {
            metrics.push(step, "", None, None, ledger.used(), Event::BudgetExhausted);
            break "budget exhausted";
        }
        let e = match sampler.sample(&state, &mut rng) {
            Ok(e) => e,
            Err(TeacherError::EmptyActiveSet) => {
                metrics.push(step, "", None, None, ledger.used(), Event::Stalled);
                break "every task retired without reaching the goal";
            }
            Err(err) => return Err(err),
        };
        step += 1;
        let task = &tasks[&e];
        let policy_seed = seed ^ ((e.src as u64) << 32 | e.dst as u64);
        let policy = policies
            .entry(e)
            .or_insert_with(|| TabularQ::new(*student_cfg, policy_seed));
        let mut meter = ledger.meter();
        let burst = student::train_for(policy, task, t.x, &mut meter, &mut rng)?;
        ledger.commit(&task.name, &meter);
        let stats = state.stats.entry(e).or_default();
        stats.record(burst.g);
        state.update(e, burst.g)?;
        let mut rate = None;
        if burst.g > 0.5 * t.eta && !ledger.exhausted() {
            let mut meter = ledger.meter();
            match student::evaluate(&*policy, task, t.eval_episodes, &mut meter, &mut rng) {
                Ok(r) => rate = Some(r),
                Err(TaskError::BudgetExhausted) => {}
                Err(err) => return Err(err.into()),
            }
            ledger.commit(&task.name, &meter);
        }
        let stats = state.stats.get_mut(&e).expect("stats of sampled task");
        stats.success_rate = rate;
        let converged = check_convergence(stats, t.eta, t.mu).unwrap_or(false);
        metrics.push(step, task.name.clone(), Some(burst.g), rate, ledger.used(), Event::Step);
        metrics.qvals.push(QSnapshot {
            teacher_step: step,
            values: state
                .qvals()
                .filter(|(_, v)| v.is_finite())
                .map(|(e, v)| (dag.describe(e), v))
                .collect(),
        });
        if converged {
            metrics.push(step, task.name.clone(), Some(burst.g), rate, ledger.used(), Event::Converged);
            state.active.remove(&e);
            state.learned.push(e);
            if e.dst == dag.goal() {
                metrics.push(step, "", None, None, ledger.used(), Event::Finished);
                break "goal reached";
            }
        }
    };
    // Any policy for an edge into the goal is tried on the full task.
    let goal = dag.node(dag.goal())?;
    let mut full = FullTask::new(env, goal, t.allocated);
    full.layout_seed = seed;
    let mut final_success: f64 = 0.0;
    for (e, p) in &policies {
        if e.dst == dag.goal() {
            final_success = final_success.max(free_success(p, &full, t.final_eval_episodes, seed)?);
        }
    }
    metrics.finalize(Summary {
        total_interactions: ledger.used(),
        success_rate: final_success,
        succeeded: final_success >= t.eta,
        teacher_steps: step,
        note: note.into(),
    });
    let edge_policies: BTreeMap<TaskEdge, Arc<TabularQ>> =
        policies.into_iter().map(|(e, p)| (e, Arc::new(p))).collect();
    let policy_list = edge_policies
        .iter()
        .filter(|(e, _)| e.dst == dag.goal())
        .map(|(e, p)| (*e, Arc::clone(p)))
        .collect();
    Ok(RunResult {
        policy_list,
        edge_policies,
        total_interactions: ledger.used(),
        succeeded: metrics.summary.succeeded,
        final_success,
        ledger,
        metrics,
        teacher: state,
    })
}

/// The teacher loop on an oracle graph.
pub fn run_agts(
    oracle: &SubgoalDag,
    env: &GridEnv,
    config: &TeacherConfig,
    student: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    run_lgts(oracle, env, config, student, seed)
}
