//! Deterministic labeled grid worlds.
//!
//! [`GridEnv`] is immutable; episodes are driven by passing [`LowState`]
//! values through [`GridEnv::step`], which is a pure function. The labeling
//! function is available both as a [`SymbolicState`] ([`Labeler::label`]) and
//! as a bitmask over the environment's literal table
//! ([`GridEnv::label_mask`]) for the training hot path.

mod layout;

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{Atom, Labeler, SymbolicInfo, SymbolicState};

pub use layout::{Domain, GridLayout, LayoutError, ObjectKind, ObjectSpec, Terrain, MAX_CELLS};

pub const DOORKEY_8X8: &str = include_str!("../../assets/layouts/doorkey_8x8.layout");
pub const DOORKEY_DISTRACTORS_8X8: &str =
    include_str!("../../assets/layouts/doorkey_distractors_8x8.layout");
pub const SEARCH_RESCUE: &str = include_str!("../../assets/layouts/search_rescue.layout");
pub const CORRIDOR: &str = include_str!("../../assets/layouts/corridor.layout");
pub const TINY_DOORKEY: &str = include_str!("../../assets/layouts/tiny_doorkey.layout");

/// Objects per world, including the distractor pool.
pub const MAX_OBJECTS: usize = 8;
const HELD: u8 = 255;
const ABSENT: u8 = 254;

pub const OUTSIDE_ENTITY: &str = "OutsideRoom";
pub const GOAL_ENTITY: &str = "Green_Goal";

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("cannot step a terminal state")]
    InvalidState,
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("too many objects: {0} (max {MAX_OBJECTS})")]
    TooManyObjects(usize),
    #[error("environment literal {0} is not declared in the symbolic description")]
    Undeclared(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    East,
    South,
    West,
    North,
}

impl Direction {
    fn index(self) -> u8 {
        self as u8
    }

    fn from_index(i: u8) -> Self {
        match i & 3 {
            0 => Direction::East,
            1 => Direction::South,
            2 => Direction::West,
            _ => Direction::North,
        }
    }

    pub fn right(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    pub fn left(self) -> Self {
        Self::from_index(self.index() + 3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    RotateLeft,
    RotateRight,
    Pickup,
    Drop,
    Toggle,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Forward,
        Action::RotateLeft,
        Action::RotateRight,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }
}

/// Full low-level state. Copyable; object cells use `u8` indices into the
/// layout with sentinels for held and absent objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LowState {
    pub agent: u8,
    pub dir: Direction,
    pub inventory: Option<u8>,
    pub doors_open: u8,
    pub objects: [u8; MAX_OBJECTS],
    pub step_count: u32,
    pub fire_out: bool,
    pub rescued: bool,
}

/// Exact discrete key of a [`LowState`], excluding the step counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub u128);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    None,
    LavaDeath,
    GoalReached,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub next: LowState,
    pub terminal: Terminal,
}

#[derive(Debug, Clone)]
struct EnvObject {
    name: String,
    kind: ObjectKind,
    home: u8,
}

/// A labeled grid MDP.
#[derive(Debug, Clone)]
pub struct GridEnv {
    layout: Arc<GridLayout>,
    objects: Vec<EnvObject>,
    n_distractors: usize,
    horizon: u32,
    literals: Vec<Atom>,
    holding_bit: [u8; MAX_OBJECTS],
    door_bit: [u8; layout::MAX_DOORS],
    goal_bit: Option<u8>,
    outside_bit: u8,
    fire_bit: Option<u8>,
    rescued_bit: Option<u8>,
}

const NO_BIT: u8 = u8::MAX;

impl GridEnv {
    pub fn new(layout: GridLayout, horizon: u32) -> Result<Self, EnvError> {
        Self::with_distractors(layout, horizon, &[])
    }

    pub fn from_text(text: &str, horizon: u32) -> Result<Self, EnvError> {
        Self::new(GridLayout::parse(text)?, horizon)
    }

    /// Build an environment whose resets place one to three objects drawn
    /// from `pool` onto the layout's distractor slots.
    pub fn with_distractors(
        layout: GridLayout,
        horizon: u32,
        pool: &[String],
    ) -> Result<Self, EnvError> {
        let mut objects: Vec<EnvObject> = layout
            .objects
            .iter()
            .map(|o| EnvObject {
                name: o.name.clone(),
                kind: o.kind,
                home: o.cell as u8,
            })
            .collect();
        objects.extend(pool.iter().map(|name| EnvObject {
            name: name.clone(),
            kind: ObjectKind::Distractor,
            home: ABSENT,
        }));
        if objects.len() > MAX_OBJECTS {
            return Err(EnvError::TooManyObjects(objects.len()));
        }

        let mut literals = Vec::new();
        let bit = |atom: Atom, literals: &mut Vec<Atom>| {
            literals.push(atom);
            (literals.len() - 1) as u8
        };
        let mut holding_bit = [NO_BIT; MAX_OBJECTS];
        for (i, o) in objects.iter().enumerate() {
            if o.kind.pickupable() {
                holding_bit[i] = bit(Atom::new("Holding", &[&o.name]), &mut literals);
            }
        }
        let mut door_bit = [NO_BIT; layout::MAX_DOORS];
        for (i, d) in layout.door_names.iter().enumerate() {
            door_bit[i] = bit(Atom::new("Unlocked", &[d]), &mut literals);
        }
        let goal_bit = layout
            .has_goal()
            .then(|| bit(Atom::new("At", &[GOAL_ENTITY]), &mut literals));
        let outside_bit = bit(Atom::new("At", &[OUTSIDE_ENTITY]), &mut literals);
        let fire_bit = layout
            .has_fire()
            .then(|| bit(Atom::new("Extinguished", &["Fire"]), &mut literals));
        let rescued_bit = objects
            .iter()
            .find(|o| o.kind == ObjectKind::Survivor)
            .map(|o| bit(Atom::new("Rescued", &[&o.name]), &mut literals));

        Ok(Self {
            layout: Arc::new(layout),
            objects,
            n_distractors: pool.len(),
            horizon,
            literals,
            holding_bit,
            door_bit,
            goal_bit,
            outside_bit,
            fire_bit,
            rescued_bit,
        })
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Same world with a different episode horizon.
    pub fn with_horizon(&self, horizon: u32) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    /// Every atom this world can label a state with, in bit order.
    pub fn literal_table(&self) -> &[Atom] {
        &self.literals
    }

    pub fn object_names(&self) -> impl Iterator<Item = &str> {
        self.objects.iter().map(|o| o.name.as_str())
    }

    /// Fail unless every literal the labeler can emit is expressible in
    /// `info`.
    pub fn check_declared(&self, info: &SymbolicInfo) -> Result<(), EnvError> {
        for atom in &self.literals {
            info.check_atom(atom)
                .map_err(|_| EnvError::Undeclared(atom.to_string()))?;
        }
        Ok(())
    }

    /// Bitmask of `state` over [`Self::literal_table`]; `None` if some atom
    /// of `state` can never hold in this world.
    pub fn mask_of(&self, state: &SymbolicState) -> Option<u64> {
        state.atoms().try_fold(0u64, |acc, atom| {
            self.literals
                .iter()
                .position(|l| l == atom)
                .map(|i| acc | (1 << i))
        })
    }

    pub fn reset(&self, seed: u64) -> LowState {
        let mut objects = [ABSENT; MAX_OBJECTS];
        for (slot, o) in objects.iter_mut().zip(&self.objects) {
            *slot = o.home;
        }
        let slots = &self.layout.distractor_slots;
        if self.n_distractors > 0 && !slots.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let max = 3.min(self.n_distractors).min(slots.len());
            let count = rng.gen_range(1..=max);
            let names = sample(&mut rng, self.n_distractors, count);
            let cells = sample(&mut rng, slots.len(), count);
            let base = self.objects.len() - self.n_distractors;
            for (n, c) in names.iter().zip(cells.iter()) {
                objects[base + n] = slots[c] as u8;
            }
        }
        LowState {
            agent: self.layout.agent_start as u8,
            dir: self.layout.agent_dir,
            inventory: None,
            doors_open: 0,
            objects,
            step_count: 0,
            fire_out: false,
            rescued: false,
        }
    }

    /// Zero the episode clock, e.g. when a sub-task episode begins mid-way
    /// through a longer rollout.
    pub fn restart_clock(&self, state: &mut LowState) {
        state.step_count = 0;
    }

    pub fn is_terminal(&self, state: &LowState) -> bool {
        matches!(
            self.layout.terrain[state.agent as usize],
            Terrain::Lava | Terrain::Goal
        ) || state.step_count >= self.horizon
    }

    fn front(&self, state: &LowState) -> Option<usize> {
        let (w, h) = (self.layout.width, self.layout.height);
        let (x, y) = self.layout.coords(state.agent as usize);
        let (nx, ny) = match state.dir {
            Direction::East => (x + 1, y),
            Direction::West => (x.checked_sub(1)?, y),
            Direction::South => (x, y + 1),
            Direction::North => (x, y.checked_sub(1)?),
        };
        (nx < w && ny < h).then(|| ny * w + nx)
    }

    fn object_at(&self, state: &LowState, cell: usize) -> Option<usize> {
        state.objects[..self.objects.len()]
            .iter()
            .position(|&c| c as usize == cell)
    }

    fn holding_kind(&self, state: &LowState, kind: ObjectKind) -> bool {
        state
            .inventory
            .is_some_and(|i| self.objects[i as usize].kind == kind)
    }

    fn passable(&self, state: &LowState, cell: usize) -> bool {
        let open = match self.layout.terrain[cell] {
            Terrain::Wall => false,
            Terrain::Door(d) => state.doors_open & (1 << d) != 0,
            Terrain::Fire => state.fire_out,
            _ => true,
        };
        open && self.object_at(state, cell).is_none()
    }

    pub fn step(&self, state: &LowState, action: Action) -> Result<StepOutcome, EnvError> {
        if self.is_terminal(state) {
            return Err(EnvError::InvalidState);
        }
        let mut next = *state;
        next.step_count += 1;
        let mut terminal = Terminal::None;
        let front = self.front(state);
        match action {
            Action::RotateLeft => next.dir = state.dir.left(),
            Action::RotateRight => next.dir = state.dir.right(),
            Action::Forward => {
                if let Some(f) = front.filter(|&f| self.passable(state, f)) {
                    next.agent = f as u8;
                    terminal = match self.layout.terrain[f] {
                        Terrain::Lava => Terminal::LavaDeath,
                        Terrain::Goal => Terminal::GoalReached,
                        _ => Terminal::None,
                    };
                }
            }
            Action::Pickup => {
                if state.inventory.is_none() {
                    if let Some(i) = front.and_then(|f| self.object_at(state, f)) {
                        if self.objects[i].kind.pickupable() {
                            next.objects[i] = HELD;
                            next.inventory = Some(i as u8);
                        }
                    }
                }
            }
            Action::Drop => {
                if let (Some(i), Some(f)) = (state.inventory, front) {
                    if self.layout.terrain[f] == Terrain::Floor && self.object_at(state, f).is_none()
                    {
                        next.objects[i as usize] = f as u8;
                        next.inventory = None;
                    }
                }
            }
            Action::Toggle => {
                if let Some(f) = front {
                    match self.layout.terrain[f] {
                        Terrain::Door(d) if self.holding_kind(state, ObjectKind::Key) => {
                            next.doors_open ^= 1 << d;
                        }
                        Terrain::Fire
                            if !state.fire_out
                                && self.holding_kind(state, ObjectKind::Extinguisher) =>
                        {
                            next.fire_out = true;
                        }
                        _ => {
                            if let Some(i) = self.object_at(state, f) {
                                if self.objects[i].kind == ObjectKind::Survivor {
                                    next.rescued = true;
                                }
                            }
                        }
                    }
                }
            }
        }
        if terminal == Terminal::None && next.step_count >= self.horizon {
            terminal = Terminal::Timeout;
        }
        Ok(StepOutcome { next, terminal })
    }

    /// Labeling function as a bitmask over [`Self::literal_table`].
    pub fn label_mask(&self, state: &LowState) -> u64 {
        let mut mask = 0u64;
        if let Some(i) = state.inventory {
            let b = self.holding_bit[i as usize];
            if b != NO_BIT {
                mask |= 1 << b;
            }
        }
        for (d, &b) in self.door_bit.iter().enumerate() {
            if b != NO_BIT && state.doors_open & (1 << d) != 0 {
                mask |= 1 << b;
            }
        }
        let cell = state.agent as usize;
        if let Some(b) = self.goal_bit {
            if self.layout.terrain[cell] == Terrain::Goal {
                mask |= 1 << b;
            }
        }
        if self.layout.outside[cell] {
            mask |= 1 << self.outside_bit;
        }
        if let (Some(b), true) = (self.fire_bit, state.fire_out) {
            mask |= 1 << b;
        }
        if let (Some(b), true) = (self.rescued_bit, state.rescued) {
            mask |= 1 << b;
        }
        mask
    }

    pub fn state_from_mask(&self, mask: u64) -> SymbolicState {
        SymbolicState::from_atoms(
            self.literals
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, a)| a.clone()),
        )
    }

    pub fn state_key(&self, state: &LowState) -> StateKey {
        let mut k = state.agent as u128;
        k |= (state.dir.index() as u128) << 8;
        k |= (state.inventory.map_or(0, |i| i + 1) as u128) << 10;
        k |= (state.doors_open as u128 & 0xf) << 14;
        k |= (state.fire_out as u128) << 18;
        k |= (state.rescued as u128) << 19;
        for (i, &c) in state.objects.iter().enumerate() {
            k |= (c as u128) << (20 + 8 * i);
        }
        StateKey(k)
    }

    /// ASCII picture of a state, for debugging and docs.
    pub fn render(&self, state: &LowState) -> String {
        let l = &self.layout;
        let mut out = String::new();
        for y in 0..l.height {
            for x in 0..l.width {
                let cell = l.cell(x, y);
                let ch = if cell == state.agent as usize {
                    match state.dir {
                        Direction::East => '>',
                        Direction::West => '<',
                        Direction::North => '^',
                        Direction::South => 'v',
                    }
                } else if let Some(i) = self.object_at(state, cell) {
                    match self.objects[i].name.as_str() {
                        "Key_1" => '1',
                        "Key_2" => '2',
                        "Key" => 'K',
                        "Extinguisher" => 'X',
                        "Survivor" => 'S',
                        _ => 'o',
                    }
                } else {
                    match l.terrain[cell] {
                        Terrain::Floor => '.',
                        Terrain::Wall => '#',
                        Terrain::Lava => 'L',
                        Terrain::Goal => 'G',
                        Terrain::Door(d) if state.doors_open & (1 << d) != 0 => '/',
                        Terrain::Door(_) => 'D',
                        Terrain::Fire if state.fire_out => '.',
                        Terrain::Fire => 'F',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

impl Labeler for GridEnv {
    type State = LowState;

    fn label(&self, state: &LowState) -> SymbolicState {
        self.state_from_mask(self.label_mask(state))
    }
}
