//! Tabular Q-learning student.

mod checkpoint;

use rand::Rng as _;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::env::{Action, StateKey};
use crate::metrics::Meter;
use crate::subtask::{Episodic, SubTaskOutcome, TaskError};

pub use checkpoint::CheckpointError;

pub type Rng = ChaCha8Rng;

const N: usize = Action::COUNT;

/// Action selection from a discrete state.
pub trait Policy: Send + Sync {
    /// Best action by the current estimate, ties broken with `rng`.
    fn greedy_action(&self, key: StateKey, rng: &mut Rng) -> Action;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Interactions over which exploration decays linearly.
    pub epsilon_decay: u64,
}

impl Default for StudentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Explore,
    Greedy,
}

/// Q-table over exact state keys; unseen entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    pub config: StudentConfig,
    pub seed: u64,
    table: FxHashMap<StateKey, [f64; N]>,
    /// Training interactions seen so far, driving the exploration schedule.
    pub interactions: u64,
}

fn argmax(values: &[f64; N], rng: &mut Rng) -> Action {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == best).count();
    let mut pick = if ties == 1 { 0 } else { rng.gen_range(0..ties) };
    for (i, &v) in values.iter().enumerate() {
        if v == best {
            if pick == 0 {
                return Action::from_index(i);
            }
            pick -= 1;
        }
    }
    unreachable!("argmax over a non-empty array")
}

impl TabularQ {
    pub fn new(config: StudentConfig, seed: u64) -> Self {
        Self {
            config,
            seed,
            table: FxHashMap::default(),
            interactions: 0,
        }
    }

    pub fn q(&self, key: StateKey) -> [f64; N] {
        self.table.get(&key).copied().unwrap_or([0.0; N])
    }

    pub fn set_q(&mut self, key: StateKey, action: Action, value: f64) {
        self.table.entry(key).or_insert([0.0; N])[action.index()] = value;
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&StateKey, &[f64; N])> {
        self.table.iter()
    }

    /// Largest absolute value in the table.
    pub fn sup_norm(&self) -> f64 {
        self.table
            .values()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn epsilon(&self) -> f64 {
        let c = &self.config;
        if c.epsilon_decay == 0 || self.interactions >= c.epsilon_decay {
            return c.epsilon_end;
        }
        let frac = self.interactions as f64 / c.epsilon_decay as f64;
        c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac
    }

    pub fn select_action(&self, key: StateKey, mode: Mode, rng: &mut Rng) -> Action {
        if mode == Mode::Explore && rng.gen::<f64>() < self.epsilon() {
            return Action::from_index(rng.gen_range(0..N));
        }
        argmax(&self.q(key), rng)
    }

    /// One-step Q-learning backup.
    pub fn update(&mut self, s: StateKey, a: Action, r: f64, s2: StateKey, terminal: bool) {
        let next = if terminal {
            0.0
        } else {
            self.table
                .get(&s2)
                .map_or(0.0, |row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        let (alpha, gamma) = (self.config.alpha, self.config.gamma);
        let row = self.table.entry(s).or_insert([0.0; N]);
        let q = &mut row[a.index()];
        *q += alpha * (r + gamma * next - *q);
    }
}

impl Policy for TabularQ {
    fn greedy_action(&self, key: StateKey, rng: &mut Rng) -> Action {
        argmax(&self.q(key), rng)
    }
}

/// Outcome of a training burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    /// Mean undiscounted return over the episodes completed in the burst;
    /// zero if none completed.
    pub g: f64,
    pub episodes: u32,
    pub successes: u32,
    /// The budget ran out before `x` interactions were spent.
    pub exhausted: bool,
}

/// Train on `task` for exactly `x` interactions (fewer if the meter runs
/// out). An episode cut by the end of the burst is left out of `g`, but its
/// updates stand.
pub fn train_for<T: Episodic>(
    policy: &mut TabularQ,
    task: &T,
    x: u64,
    meter: &mut Meter,
    rng: &mut Rng,
) -> Result<Burst, TaskError> {
    let env = task.env();
    let allocated = task.allocated();
    let mut spent = 0u64;
    let (mut total, mut episodes, mut successes) = (0.0, 0u32, 0u32);
    'episodes: while spent < x {
        let mut s = match task.begin(meter, rng) {
            Ok(s) => s,
            Err(TaskError::BudgetExhausted) => break,
            Err(e) => return Err(e),
        };
        let mut key = env.state_key(&s);
        let mut ret = 0.0;
        let mut steps = 0u32;
        loop {
            if spent >= x || meter.exhausted() {
                break 'episodes;
            }
            let a = policy.select_action(key, Mode::Explore, rng);
            steps += 1;
            let out = task.advance(&s, a, steps)?;
            spent += 1;
            meter.train += 1;
            policy.interactions += 1;
            let key2 = env.state_key(&out.next);
            policy.update(key, a, out.reward, key2, out.terminal);
            ret += out.reward;
            if out.done() || steps >= allocated {
                total += ret;
                episodes += 1;
                successes += u32::from(out.outcome == SubTaskOutcome::Success);
                break;
            }
            s = out.next;
            key = key2;
        }
    }
    Ok(Burst {
        g: if episodes == 0 { 0.0 } else { total / f64::from(episodes) },
        episodes,
        successes,
        exhausted: meter.exhausted() && spent < x,
    })
}

/// Greedy success rate over `episodes` rollouts, charged to `meter.eval`
/// (setup steps to `meter.reset`).
pub fn evaluate<T: Episodic, P: Policy + ?Sized>(
    policy: &P,
    task: &T,
    episodes: u32,
    meter: &mut Meter,
    rng: &mut Rng,
) -> Result<f64, TaskError> {
    assert!(episodes >= 1);
    let env = task.env();
    let mut successes = 0;
    for _ in 0..episodes {
        let mut s = task.begin(meter, rng)?;
        let mut steps = 0;
        loop {
            if meter.exhausted() {
                return Err(TaskError::BudgetExhausted);
            }
            let a = policy.greedy_action(env.state_key(&s), rng);
            steps += 1;
            let out = task.advance(&s, a, steps)?;
            meter.eval += 1;
            if out.done() || steps >= task.allocated() {
                successes += u32::from(out.outcome == SubTaskOutcome::Success);
                break;
            }
            s = out.next;
        }
    }
    Ok(f64::from(successes) / f64::from(episodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn key(k: u128) -> StateKey {
        StateKey(k)
    }

    #[test]
    fn unique_argmax_is_greedy() {
        let mut q = TabularQ::new(StudentConfig::default(), 0);
        q.set_q(key(1), Action::Forward, 1.0);
        let mut rng = Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(q.select_action(key(1), Mode::Greedy, &mut rng), Action::Forward);
        }
    }

    #[test]
    fn full_tie_is_broken_across_all_actions() {
        let q = TabularQ::new(StudentConfig::default(), 0);
        let mut rng = Rng::seed_from_u64(3);
        let mut seen = [false; N];
        for _ in 0..200 {
            seen[q.select_action(key(7), Mode::Greedy, &mut rng).index()] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn update_substitutions() {
        let cfg = StudentConfig {
            alpha: 0.5,
            ..StudentConfig::default()
        };
        let mut q = TabularQ::new(cfg, 0);
        q.update(key(1), Action::Pickup, 1.0, key(2), true);
        assert_eq!(q.q(key(1))[Action::Pickup.index()], 0.5);
        q.update(key(3), Action::Drop, 0.0, key(4), false);
        assert_eq!(q.q(key(3))[Action::Drop.index()], 0.0);
    }

    #[test]
    fn two_state_chain_converges_to_closed_form() {
        // State 0 loops on itself with reward 1 and no end; the fixed point is
        // r / (1 - gamma).
        let mut q = TabularQ::new(StudentConfig::default(), 0);
        for _ in 0..5_000 {
            q.update(key(0), Action::Forward, 1.0, key(0), false);
        }
        let expected = 1.0 / (1.0 - 0.95);
        assert!((q.q(key(0))[0] - expected).abs() < 1e-6);
        // A state one step before an absorbing reward of 1.
        for _ in 0..500 {
            q.update(key(5), Action::Forward, 0.0, key(6), false);
            q.update(key(6), Action::Forward, 1.0, key(7), true);
        }
        assert!((q.q(key(5))[0] - 0.95).abs() < 1e-9);
    }

    #[test]
    fn epsilon_schedule_is_linear_then_flat() {
        let mut q = TabularQ::new(StudentConfig::default(), 0);
        assert_eq!(q.epsilon(), 1.0);
        q.interactions = 50_000;
        assert!((q.epsilon() - 0.525).abs() < 1e-12);
        q.interactions = 1_000_000;
        assert_eq!(q.epsilon(), 0.05);
    }
}
