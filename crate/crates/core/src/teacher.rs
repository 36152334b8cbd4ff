//! Teacher loop over a sub-goal DAG.
//!
//! The teacher keeps active (AT), learned (LT) and discarded (DT) task sets
//! and a value per task. Each step it samples an active task, lets the
//! student train on it for `x` interactions, folds the burst's average
//! return into the task's value and, when the task has converged, moves it
//! to LT, discards the edges it makes redundant and activates the edges
//! leaving its destination. The run ends when a learned edge reaches the
//! goal node.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::GridEnv;
use crate::graph::{GraphError, NodeId, SubgoalDag, TaskEdge};
use crate::metrics::{Event, Ledger, Meter, QSnapshot, RunMetrics, Summary};
use crate::student::{self, CheckpointError, Rng, StudentConfig, TabularQ};
use crate::subtask::{ChainLink, PolicyChain, SubTask, TaskError};

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("no active tasks to sample from")]
    EmptyActiveSet,
    #[error("task {0} is not active")]
    InactiveTask(TaskEdge),
    #[error("convergence needs two recorded returns")]
    InsufficientHistory,
    #[error("task {0} has not converged")]
    NotConverged(TaskEdge),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Policy(#[from] CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeacherConfig {
    /// Teacher learning rate.
    pub alpha: f64,
    /// Teacher exploration rate.
    pub epsilon: f64,
    /// Interactions per student burst.
    pub x: u64,
    /// Success rate a converged policy must reach.
    pub eta: f64,
    /// Largest change in burst return still counted as a plateau.
    pub mu: f64,
    pub eval_episodes: u32,
    pub final_eval_episodes: u32,
    pub budget: u64,
    pub allocated: u32,
    pub step_penalty: f64,
    pub reset_retries: u32,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            epsilon: 0.1,
            x: 1000,
            eta: 0.9,
            mu: 0.01,
            eval_episodes: 20,
            final_eval_episodes: 100,
            budget: 5_000_000,
            allocated: crate::subtask::DEFAULT_ALLOCATED,
            step_penalty: 0.0,
            reset_retries: crate::subtask::DEFAULT_RESET_RETRIES,
        }
    }
}

/// Running statistics of one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub g: Option<f64>,
    pub prev_g: Option<f64>,
    /// Greedy success rate from the latest evaluation, if the latest burst
    /// triggered one.
    pub success_rate: Option<f64>,
    pub bursts: u64,
}

impl TaskStats {
    pub fn record(&mut self, g: f64) {
        self.prev_g = self.g;
        self.g = Some(g);
        self.bursts += 1;
        self.success_rate = None;
    }
}

/// Converged once the evaluated success rate reaches `eta` and the burst
/// return has stopped moving by `mu` or more.
pub fn check_convergence(stats: &TaskStats, eta: f64, mu: f64) -> Result<bool, TeacherError> {
    let (Some(g), Some(prev)) = (stats.g, stats.prev_g) else {
        return Err(TeacherError::InsufficientHistory);
    };
    Ok(stats.success_rate.is_some_and(|r| r >= eta) && (g - prev).abs() < mu)
}

/// Strategy for picking the next task among the active ones.
pub trait TaskSampler {
    fn sample(&self, state: &TeacherState, rng: &mut Rng) -> Result<TaskEdge, TeacherError>;
}

/// With probability `epsilon` a uniform active task, otherwise the one with
/// the highest value; ties are broken uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonGreedy {
    pub epsilon: f64,
}

impl TaskSampler for EpsilonGreedy {
    fn sample(&self, state: &TeacherState, rng: &mut Rng) -> Result<TaskEdge, TeacherError> {
        let active: Vec<TaskEdge> = state.active.iter().copied().collect();
        if active.is_empty() {
            return Err(TeacherError::EmptyActiveSet);
        }
        if rng.gen::<f64>() < self.epsilon {
            return Ok(active[rng.gen_range(0..active.len())]);
        }
        let best = active
            .iter()
            .map(|e| state.qval(*e))
            .fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<TaskEdge> = active
            .into_iter()
            .filter(|e| state.qval(*e) == best)
            .collect();
        Ok(ties[rng.gen_range(0..ties.len())])
    }
}

/// Task sets and teacher values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TeacherState {
    pub active: BTreeSet<TaskEdge>,
    /// In order of convergence.
    pub learned: Vec<TaskEdge>,
    pub discarded: BTreeSet<TaskEdge>,
    #[serde(with = "qvals_serde")]
    qvals: BTreeMap<TaskEdge, f64>,
    #[serde(with = "edge_map")]
    pub stats: BTreeMap<TaskEdge, TaskStats>,
    pub alpha: f64,
}

/// Edge-keyed maps as lists of pairs, since JSON keys must be strings.
mod edge_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer, V: Serialize>(m: &BTreeMap<TaskEdge, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>, V: Deserialize<'de>>(
        d: D,
    ) -> Result<BTreeMap<TaskEdge, V>, D::Error> {
        let list: Vec<(TaskEdge, V)> = Vec::deserialize(d)?;
        Ok(list.into_iter().collect())
    }
}

mod qvals_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BTreeMap<TaskEdge, f64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<(TaskEdge, Option<f64>)> =
            q.iter().map(|(e, v)| (*e, v.is_finite().then_some(*v))).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<TaskEdge, f64>, D::Error> {
        let list: Vec<(TaskEdge, Option<f64>)> = Vec::deserialize(d)?;
        Ok(list
            .into_iter()
            .map(|(e, v)| (e, v.unwrap_or(f64::NEG_INFINITY)))
            .collect())
    }
}

impl TeacherState {
    /// Fresh state with the start node's outgoing edges active.
    pub fn new(dag: &SubgoalDag, alpha: f64) -> Result<Self, TeacherError> {
        let mut state = Self {
            alpha,
            ..Self::default()
        };
        for e in dag.outgoing_tasks(dag.start())? {
            state.activate(e);
        }
        Ok(state)
    }

    /// A state whose active set is exactly `tasks`, all valued at zero.
    pub fn with_active(tasks: impl IntoIterator<Item = TaskEdge>, alpha: f64) -> Self {
        let mut state = Self {
            alpha,
            ..Self::default()
        };
        for e in tasks {
            state.activate(e);
        }
        state
    }

    fn activate(&mut self, e: TaskEdge) {
        self.active.insert(e);
        self.qvals.insert(e, 0.0);
        self.stats.entry(e).or_default();
    }

    pub fn qval(&self, e: TaskEdge) -> f64 {
        self.qvals.get(&e).copied().unwrap_or(0.0)
    }

    pub fn set_qval(&mut self, e: TaskEdge, v: f64) -> Result<(), TeacherError> {
        if !self.active.contains(&e) {
            return Err(TeacherError::InactiveTask(e));
        }
        self.qvals.insert(e, v);
        Ok(())
    }

    pub fn qvals(&self) -> impl Iterator<Item = (TaskEdge, f64)> + '_ {
        self.qvals.iter().map(|(e, v)| (*e, *v))
    }

    pub fn is_learned(&self, e: TaskEdge) -> bool {
        self.learned.contains(&e)
    }

    /// `Q[e] <- alpha * g + (1 - alpha) * Q[e]`.
    pub fn update(&mut self, e: TaskEdge, g: f64) -> Result<f64, TeacherError> {
        if !self.active.contains(&e) {
            return Err(TeacherError::InactiveTask(e));
        }
        let q = self.qvals.entry(e).or_insert(0.0);
        *q = self.alpha * g + (1.0 - self.alpha) * *q;
        Ok(*q)
    }

    /// Move `e` to the learned set, discard the edges it makes redundant and
    /// activate the next tasks. Returns `(activated, newly_discarded)`.
    pub fn on_converged(
        &mut self,
        dag: &SubgoalDag,
        e: TaskEdge,
    ) -> Result<(BTreeSet<TaskEdge>, BTreeSet<TaskEdge>), TeacherError> {
        if !self.active.remove(&e) {
            return Err(TeacherError::InactiveTask(e));
        }
        self.learned.push(e);
        self.qvals.insert(e, f64::NEG_INFINITY);
        let learned: BTreeSet<TaskEdge> = self.learned.iter().copied().collect();
        let mut newly = BTreeSet::new();
        for d in dag.discarded_tasks(e)? {
            if learned.contains(&d) || !self.discarded.insert(d) {
                continue;
            }
            self.active.remove(&d);
            self.qvals.insert(d, f64::NEG_INFINITY);
            newly.insert(d);
        }
        let next = dag.next_tasks(e, &self.discarded, &learned)?;
        for &n in &next {
            if !self.active.contains(&n) {
                self.activate(n);
            }
        }
        Ok((next, newly))
    }

    /// AT, LT and DT are pairwise disjoint and exactly the LT and DT edges
    /// carry a value of minus infinity.
    pub fn check_invariants(&self) -> Result<(), String> {
        let learned: BTreeSet<_> = self.learned.iter().copied().collect();
        if learned.len() != self.learned.len() {
            return Err("task learned twice".into());
        }
        for e in &self.active {
            if learned.contains(e) || self.discarded.contains(e) {
                return Err(format!("{e} is active and closed"));
            }
        }
        if let Some(e) = learned.intersection(&self.discarded).next() {
            return Err(format!("{e} is learned and discarded"));
        }
        for (e, v) in &self.qvals {
            let closed = learned.contains(e) || self.discarded.contains(e);
            if closed != (*v == f64::NEG_INFINITY) {
                return Err(format!("{e} has value {v} but closed={closed}"));
            }
        }
        for e in learned.iter().chain(&self.discarded).chain(&self.active) {
            if !self.qvals.contains_key(e) {
                return Err(format!("{e} has no value"));
            }
        }
        Ok(())
    }
}

/// Learned chain and bookkeeping of a finished run.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// Edges from start to goal with their frozen policies, in order.
    pub policy_list: Vec<(TaskEdge, Arc<TabularQ>)>,
    pub edge_policies: BTreeMap<TaskEdge, Arc<TabularQ>>,
    pub total_interactions: u64,
    pub succeeded: bool,
    pub final_success: f64,
    pub ledger: Ledger,
    pub metrics: RunMetrics,
    pub teacher: TeacherState,
}

impl RunResult {
    pub fn chain_edges(&self) -> Vec<TaskEdge> {
        self.policy_list.iter().map(|(e, _)| e).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Running,
    Done,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    seed: u64,
    step: u64,
    finished: Option<String>,
    teacher: TeacherState,
    ledger: Ledger,
    metrics: RunMetrics,
    rng: Rng,
    /// Edges whose policies are stored as `policy_<src>_<dst>.qtable`.
    policies: Vec<TaskEdge>,
}

/// An in-progress teacher run; [`run_lgts`] drives it to completion.
pub struct LgtsRun {
    dag: SubgoalDag,
    env: GridEnv,
    config: TeacherConfig,
    student: StudentConfig,
    sampler: Box<dyn TaskSampler>,
    seed: u64,
    state: TeacherState,
    policies: BTreeMap<TaskEdge, TabularQ>,
    frozen: BTreeMap<TaskEdge, Arc<TabularQ>>,
    chains: BTreeMap<NodeId, PolicyChain>,
    ledger: Ledger,
    metrics: RunMetrics,
    rng: Rng,
    step: u64,
    finished: Option<String>,
}

impl LgtsRun {
    pub fn new(
        dag: SubgoalDag,
        env: GridEnv,
        config: TeacherConfig,
        student: StudentConfig,
        seed: u64,
    ) -> Result<Self, TeacherError> {
        let state = TeacherState::new(&dag, config.alpha)?;
        let mut run = Self {
            chains: BTreeMap::from([(dag.start(), PolicyChain::default())]),
            sampler: Box::new(EpsilonGreedy {
                epsilon: config.epsilon,
            }),
            ledger: Ledger::new(config.budget),
            metrics: RunMetrics::default(),
            rng: Rng::seed_from_u64(seed),
            dag,
            env,
            config,
            student,
            seed,
            state,
            policies: BTreeMap::new(),
            frozen: BTreeMap::new(),
            step: 0,
            finished: None,
        };
        let active: Vec<_> = run.state.active.iter().copied().collect();
        for e in active {
            let name = run.dag.describe(e);
            run.metrics.push(0, name, None, None, 0, Event::Activated);
        }
        Ok(run)
    }

    pub fn with_sampler(mut self, sampler: Box<dyn TaskSampler>) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn state(&self) -> &TeacherState {
        &self.state
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn dag(&self) -> &SubgoalDag {
        &self.dag
    }

    pub fn is_finished(&self) -> bool {
        self.finished.is_some()
    }

    fn make_task(&self, e: TaskEdge) -> Result<SubTask, TeacherError> {
        let mut task = SubTask::new(&self.dag, e, &self.env, self.config.allocated)?;
        task.step_penalty = self.config.step_penalty;
        task.retries = self.config.reset_retries;
        task.layout_seed = self.seed;
        let chain = self
            .chains
            .get(&e.src)
            .cloned()
            .ok_or_else(|| TeacherError::Checkpoint(format!("no chain reaches the source of {e}")))?;
        Ok(task.with_chain(chain))
    }

    fn finish(&mut self, event: Event, note: impl Into<String>) {
        let note = note.into();
        self.metrics
            .push(self.step, "", None, None, self.ledger.used(), event);
        self.finished = Some(note);
    }

    /// Run one teacher step: sample, train, update, and handle convergence.
    pub fn teacher_step(&mut self) -> Result<StepStatus, TeacherError> {
        if self.finished.is_some() {
            return Ok(StepStatus::Done);
        }
        if self.ledger.exhausted() {
            self.finish(Event::BudgetExhausted, "budget exhausted");
            return Ok(StepStatus::Done);
        }
        if self.state.active.is_empty() {
            self.finish(Event::Stalled, "no active tasks left before reaching the goal");
            return Ok(StepStatus::Done);
        }
        let e = self.sampler.sample(&self.state, &mut self.rng)?;
        self.step += 1;
        let task = self.make_task(e)?;
        let student_cfg = self.student;
        let policy_seed = self.seed ^ ((e.src as u64) << 32 | e.dst as u64);
        let policy = self
            .policies
            .entry(e)
            .or_insert_with(|| TabularQ::new(student_cfg, policy_seed));

        let mut meter = self.ledger.meter();
        let burst = match student::train_for(policy, &task, self.config.x, &mut meter, &mut self.rng) {
            Ok(b) => b,
            Err(TaskError::ResetFailure { task: t, attempts }) => {
                self.ledger.commit(&task.name, &meter);
                self.finish(
                    Event::Stalled,
                    format!("chain replay failed to reach the start of {t} after {attempts} attempts"),
                );
                return Ok(StepStatus::Done);
            }
            Err(err) => return Err(err.into()),
        };
        self.ledger.commit(&task.name, &meter);
        let stats = self.state.stats.entry(e).or_default();
        stats.record(burst.g);
        self.state.update(e, burst.g)?;

        let mut rate = None;
        if burst.g > 0.5 * self.config.eta && !self.ledger.exhausted() {
            let mut meter = self.ledger.meter();
            let policy = &self.policies[&e];
            match student::evaluate(policy, &task, self.config.eval_episodes, &mut meter, &mut self.rng) {
                Ok(r) => rate = Some(r),
                Err(TaskError::BudgetExhausted) => {}
                Err(TaskError::ResetFailure { task: t, attempts }) => {
                    self.ledger.commit(&task.name, &meter);
                    self.finish(
                        Event::Stalled,
                        format!("chain replay failed to reach the start of {t} after {attempts} attempts"),
                    );
                    return Ok(StepStatus::Done);
                }
                Err(err) => return Err(err.into()),
            }
            self.ledger.commit(&task.name, &meter);
        }
        let stats = self.state.stats.get_mut(&e).expect("stats exist for sampled task");
        stats.success_rate = rate;
        let converged = check_convergence(stats, self.config.eta, self.config.mu).unwrap_or(false);

        let used = self.ledger.used();
        self.metrics
            .push(self.step, task.name.clone(), Some(burst.g), rate, used, Event::Step);
        self.metrics.qvals.push(QSnapshot {
            teacher_step: self.step,
            values: self
                .state
                .qvals()
                .filter(|(_, v)| v.is_finite())
                .map(|(e, v)| (self.dag.describe(e), v))
                .collect(),
        });

        if converged {
            let (activated, discarded) = self.state.on_converged(&self.dag, e)?;
            let policy = Arc::new(self.policies.remove(&e).expect("policy of converged task"));
            self.frozen.insert(e, Arc::clone(&policy));
            let link = ChainLink {
                edge: e,
                policy,
                target: task.target_mask(),
                allocated: self.config.allocated,
            };
            let chain = self.chains[&e.src].extended(link);
            self.chains.entry(e.dst).or_insert(chain);
            self.metrics
                .push(self.step, task.name.clone(), Some(burst.g), rate, used, Event::Converged);
            for d in discarded {
                self.policies.remove(&d);
                self.metrics
                    .push(self.step, self.dag.describe(d), None, None, used, Event::Discarded);
            }
            for a in activated {
                self.metrics
                    .push(self.step, self.dag.describe(a), None, None, used, Event::Activated);
            }
            if e.dst == self.dag.goal() {
                self.finish(Event::Finished, "goal reached");
            }
        }
        debug_assert_eq!(self.state.check_invariants(), Ok(()));
        if self.finished.is_none() && self.ledger.exhausted() {
            self.finish(Event::BudgetExhausted, "budget exhausted");
        }
        Ok(if self.finished.is_some() {
            StepStatus::Done
        } else {
            StepStatus::Running
        })
    }

    /// Greedy success of the chain to `node` from a fresh reset. Not charged
    /// to the budget.
    pub fn chain_success(&self, node: NodeId, episodes: u32) -> Result<f64, TeacherError> {
        let Some(chain) = self.chains.get(&node) else {
            return Ok(0.0);
        };
        let env = self.env.with_horizon(self.config.allocated);
        let mut rng = Rng::seed_from_u64(self.seed.wrapping_add(0x5eed));
        let mut hits = 0;
        for _ in 0..episodes {
            let mut meter = Meter::new(u64::MAX);
            if chain.rollout(&env, self.seed, &mut meter, &mut rng)?.is_some() {
                hits += 1;
            }
        }
        Ok(f64::from(hits) / f64::from(episodes.max(1)))
    }

    pub fn into_result(mut self) -> Result<RunResult, TeacherError> {
        let goal = self.dag.goal();
        let succeeded_chain = self.chains.contains_key(&goal);
        let final_success = self.chain_success(goal, self.config.final_eval_episodes)?;
        let policy_list = self
            .chains
            .get(&goal)
            .map(|c| {
                c.links
                    .iter()
                    .map(|l| (l.edge, Arc::clone(&self.frozen[&l.edge])))
                    .collect()
            })
            .unwrap_or_default();
        let mut edge_policies = self.frozen.clone();
        for (e, p) in std::mem::take(&mut self.policies) {
            edge_policies.insert(e, Arc::new(p));
        }
        self.metrics.finalize(Summary {
            total_interactions: self.ledger.used(),
            success_rate: final_success,
            succeeded: succeeded_chain && final_success >= self.config.eta,
            teacher_steps: self.step,
            note: self.finished.clone().unwrap_or_default(),
        });
        Ok(RunResult {
            policy_list,
            edge_policies,
            total_interactions: self.ledger.used(),
            succeeded: self.metrics.summary.succeeded,
            final_success,
            ledger: self.ledger,
            metrics: self.metrics,
            teacher: self.state,
        })
    }

    /// Write the run's state to `dir`.
    pub fn checkpoint(&self, dir: &Path) -> Result<(), TeacherError> {
        std::fs::create_dir_all(dir)?;
        let mut stored: Vec<TaskEdge> = Vec::new();
        for (e, p) in self
            .policies
            .iter()
            .chain(self.frozen.iter().map(|(e, p)| (e, p.as_ref())))
        {
            p.save(dir.join(format!("policy_{}_{}.qtable", e.src, e.dst)))?;
            stored.push(*e);
        }
        let header = CheckpointHeader {
            seed: self.seed,
            step: self.step,
            finished: self.finished.clone(),
            teacher: self.state.clone(),
            ledger: self.ledger.clone(),
            metrics: self.metrics.clone(),
            rng: self.rng.clone(),
            policies: stored,
        };
        let json = serde_json::to_string_pretty(&header)
            .map_err(|e| TeacherError::Checkpoint(e.to_string()))?;
        std::fs::write(dir.join("teacher.json"), json)?;
        Ok(())
    }

    /// Continue a run from [`LgtsRun::checkpoint`] output. The DAG,
    /// environment and configuration must match the original run.
    pub fn resume(
        dir: &Path,
        dag: SubgoalDag,
        env: GridEnv,
        config: TeacherConfig,
        student: StudentConfig,
    ) -> Result<Self, TeacherError> {
        let text = std::fs::read_to_string(dir.join("teacher.json"))?;
        let header: CheckpointHeader =
            serde_json::from_str(&text).map_err(|e| TeacherError::Checkpoint(e.to_string()))?;
        let mut run = Self::new(dag, env, config, student, header.seed)?;
        run.state = header.teacher;
        run.ledger = header.ledger;
        run.metrics = header.metrics;
        run.rng = header.rng;
        run.step = header.step;
        run.finished = header.finished;
        let mut loaded = BTreeMap::new();
        for e in header.policies {
            let p = TabularQ::load(dir.join(format!("policy_{}_{}.qtable", e.src, e.dst)))?;
            loaded.insert(e, p);
        }
        // Rebuild chains in learning order.
        for &e in &run.state.learned {
            let p = Arc::new(
                loaded
                    .remove(&e)
                    .ok_or_else(|| TeacherError::Checkpoint(format!("missing policy for {e}")))?,
            );
            run.frozen.insert(e, Arc::clone(&p));
            let target = run.env.mask_of(run.dag.node(e.dst)?);
            let link = ChainLink {
                edge: e,
                policy: p,
                target,
                allocated: config.allocated,
            };
            let chain = run.chains[&e.src].extended(link);
            run.chains.entry(e.dst).or_insert(chain);
        }
        run.policies = loaded;
        Ok(run)
    }
}

/// Run the teacher loop on `dag` until the goal is reached or the budget
/// runs out.
pub fn run_lgts(
    dag: &SubgoalDag,
    env: &GridEnv,
    config: &TeacherConfig,
    student: &StudentConfig,
    seed: u64,
) -> Result<RunResult, TeacherError> {
    let mut run = LgtsRun::new(dag.clone(), env.clone(), *config, *student, seed)?;
    while run.teacher_step()? == StepStatus::Running {}
    run.into_result()
}
