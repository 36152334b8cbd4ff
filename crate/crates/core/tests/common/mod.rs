#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use lgts::graph::SubgoalDag;
use lgts::symbolic::{SymbolicInfo, SymbolicState};

pub fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn doorkey_info() -> SymbolicInfo {
    SymbolicInfo::from_names(
        &["Key_1", "Key_2", "Door", "OutsideRoom", "Green_Goal", "Lava"],
        &[("Holding", 1), ("At", 1), ("Unlocked", 1)],
        "At(OutsideRoom)",
        "At(Green_Goal)",
    )
    .unwrap()
}

/// q0..q4 of the door-key running example.
pub fn doorkey_states(info: &SymbolicInfo) -> [SymbolicState; 5] {
    [
        "At(OutsideRoom)",
        "Holding(Key_1)",
        "Holding(Key_2)",
        "Unlocked(Door)",
        "At(Green_Goal)",
    ]
    .map(|s| info.parse_state(s).unwrap())
}

/// Graph merged from the four model paths.
pub fn four_path_dag(info: &SymbolicInfo) -> SubgoalDag {
    let [q0, q1, q2, q3, q4] = doorkey_states(info);
    let paths = vec![
        vec![q0.clone(), q1, q3.clone(), q4.clone()],
        vec![q0.clone(), q2.clone(), q3.clone(), q4.clone()],
        vec![q0.clone(), q3, q4.clone()],
        vec![q0.clone(), q2, q4.clone()],
    ];
    SubgoalDag::build(&paths, &q0, &q4).unwrap()
}
