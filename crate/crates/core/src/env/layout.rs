//! Text layouts for grid worlds.
//!
//! ```text
//! 8 8
//! ########
//! #1.L#..#
//! ...
//! ```
//!
//! The first non-comment line holds `width height`; each following row has
//! one character per cell:
//!
//! | char | meaning |
//! |------|---------|
//! | `.` | empty floor |
//! | `#` | wall |
//! | `L` | lava |
//! | `G` | goal (`Green_Goal`) |
//! | `D` | door, closed at reset |
//! | `1`, `2` | `Key_1`, `Key_2` |
//! | `K` | `Key` |
//! | `X` | `Extinguisher` |
//! | `F` | fire, blocks movement until extinguished |
//! | `S` | `Survivor` |
//! | `o` | empty floor that may receive a distractor object |
//! | `>` `<` `^` `v` | agent start and heading |
//!
//! Lines starting with `;` are comments.

use std::path::Path;

use thiserror::Error;

use super::Direction;

/// Largest grid accepted; cell indices are stored in a `u8` with a few
/// sentinel values reserved.
pub const MAX_CELLS: usize = 250;
pub const MAX_DOORS: usize = 4;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("layout invariant violated: {0}")]
    Invariant(String),
    #[error("cannot read layout {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terrain {
    Floor,
    Wall,
    Lava,
    Goal,
    Door(u8),
    Fire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    Key,
    Extinguisher,
    Survivor,
    Distractor,
}

impl ObjectKind {
    pub fn pickupable(self) -> bool {
        !matches!(self, ObjectKind::Survivor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectSpec {
    pub name: String,
    pub kind: ObjectKind,
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    DoorKey,
    SearchRescue,
}

#[derive(Debug, Clone)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    pub terrain: Vec<Terrain>,
    pub objects: Vec<ObjectSpec>,
    pub door_names: Vec<String>,
    pub agent_start: usize,
    pub agent_dir: Direction,
    pub distractor_slots: Vec<usize>,
    /// Cells connected to the agent start without crossing walls, doors or
    /// fire.
    pub outside: Vec<bool>,
    pub domain: Domain,
}

impl GridLayout {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LayoutError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LayoutError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with(';'));

        let (hline, header) = lines.next().ok_or(LayoutError::Parse {
            line: 1,
            reason: "missing `width height` header".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| LayoutError::Parse {
                line: hline,
                reason: format!("bad header: {e}"),
            })?;
        let [width, height] = dims[..] else {
            return Err(LayoutError::Parse {
                line: hline,
                reason: "header must be `width height`".into(),
            });
        };
        if width == 0 || height == 0 || width * height > MAX_CELLS {
            return Err(LayoutError::Invariant(format!(
                "grid {width}x{height} outside supported size (1..={MAX_CELLS} cells)"
            )));
        }

        let mut terrain = Vec::with_capacity(width * height);
        let mut objects = Vec::new();
        let mut door_cells = Vec::new();
        let mut starts = Vec::new();
        let mut distractor_slots = Vec::new();
        let mut goals = 0;
        let mut rows = 0;

        for (line, row) in lines {
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != width {
                return Err(LayoutError::Parse {
                    line,
                    reason: format!("row has {} cells, expected {width}", chars.len()),
                });
            }
            if rows == height {
                return Err(LayoutError::Parse {
                    line,
                    reason: format!("more than {height} rows"),
                });
            }
            for (x, ch) in chars.into_iter().enumerate() {
                let cell = rows * width + x;
                let mut object = |name: &str, kind| {
                    objects.push(ObjectSpec {
                        name: name.to_string(),
                        kind,
                        cell,
                    })
                };
                let t = match ch {
                    '.' => Terrain::Floor,
                    '#' => Terrain::Wall,
                    'L' => Terrain::Lava,
                    'G' => {
                        goals += 1;
                        Terrain::Goal
                    }
                    'D' => {
                        door_cells.push(cell);
                        Terrain::Door((door_cells.len() - 1) as u8)
                    }
                    'F' => Terrain::Fire,
                    '1' => {
                        object("Key_1", ObjectKind::Key);
                        Terrain::Floor
                    }
                    '2' => {
                        object("Key_2", ObjectKind::Key);
                        Terrain::Floor
                    }
                    'K' => {
                        object("Key", ObjectKind::Key);
                        Terrain::Floor
                    }
                    'X' => {
                        object("Extinguisher", ObjectKind::Extinguisher);
                        Terrain::Floor
                    }
                    'S' => {
                        object("Survivor", ObjectKind::Survivor);
                        Terrain::Floor
                    }
                    'o' => {
                        distractor_slots.push(cell);
                        Terrain::Floor
                    }
                    '>' | '<' | '^' | 'v' => {
                        let dir = match ch {
                            '>' => Direction::East,
                            '<' => Direction::West,
                            '^' => Direction::North,
                            _ => Direction::South,
                        };
                        starts.push((cell, dir));
                        Terrain::Floor
                    }
                    other => {
                        return Err(LayoutError::Parse {
                            line,
                            reason: format!("unknown cell character `{other}`"),
                        })
                    }
                };
                terrain.push(t);
            }
            rows += 1;
        }
        if rows != height {
            return Err(LayoutError::Parse {
                line: 0,
                reason: format!("found {rows} rows, expected {height}"),
            });
        }

        let [(agent_start, agent_dir)] = starts[..] else {
            return Err(LayoutError::Invariant(format!(
                "expected exactly one agent start, found {}",
                starts.len()
            )));
        };
        if door_cells.len() > MAX_DOORS {
            return Err(LayoutError::Invariant(format!(
                "at most {MAX_DOORS} doors supported"
            )));
        }
        let mut names: Vec<&str> = objects.iter().map(|o| o.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(LayoutError::Invariant("duplicate object character".into()));
        }

        let search_rescue = terrain.contains(&Terrain::Fire)
            || objects.iter().any(|o| o.kind == ObjectKind::Survivor);
        let domain = if search_rescue {
            if goals > 1 {
                return Err(LayoutError::Invariant("more than one goal cell".into()));
            }
            Domain::SearchRescue
        } else {
            if goals != 1 {
                return Err(LayoutError::Invariant(format!(
                    "door-key layouts need exactly one goal cell, found {goals}"
                )));
            }
            Domain::DoorKey
        };

        let door_names = if door_cells.len() == 1 {
            vec!["Door".to_string()]
        } else {
            (1..=door_cells.len()).map(|i| format!("Door_{i}")).collect()
        };

        let outside = flood_outside(width, height, &terrain, agent_start);
        Ok(Self {
            width,
            height,
            terrain,
            objects,
            door_names,
            agent_start,
            agent_dir,
            distractor_slots,
            outside,
            domain,
        })
    }

    pub fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.width, cell / self.width)
    }

    pub fn has_fire(&self) -> bool {
        self.terrain.contains(&Terrain::Fire)
    }

    pub fn has_goal(&self) -> bool {
        self.terrain.contains(&Terrain::Goal)
    }
}

fn flood_outside(width: usize, height: usize, terrain: &[Terrain], start: usize) -> Vec<bool> {
    let mut seen = vec![false; terrain.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(c) = stack.pop() {
        let (x, y) = (c % width, c / width);
        let mut push = |nx: usize, ny: usize| {
            let n = ny * width + nx;
            let passable = !matches!(terrain[n], Terrain::Wall | Terrain::Door(_) | Terrain::Fire);
            if passable && !seen[n] {
                seen[n] = true;
                stack.push(n);
            }
        };
        if x > 0 {
            push(x - 1, y);
        }
        if x + 1 < width {
            push(x + 1, y);
        }
        if y > 0 {
            push(x, y - 1);
        }
        if y + 1 < height {
            push(x, y + 1);
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_doorkey_layout() {
        let layout = GridLayout::parse(crate::env::DOORKEY_8X8).unwrap();
        assert_eq!((layout.width, layout.height), (8, 8));
        assert_eq!(layout.domain, Domain::DoorKey);
        let keys: Vec<_> = layout
            .objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Key)
            .map(|o| o.name.as_str())
            .collect();
        assert_eq!(keys, vec!["Key_1", "Key_2"]);
        assert_eq!(layout.door_names, vec!["Door"]);
        assert!(layout.terrain.contains(&Terrain::Lava));
        assert_eq!(layout.terrain.iter().filter(|t| **t == Terrain::Goal).count(), 1);
        let goal = layout.terrain.iter().position(|t| *t == Terrain::Goal).unwrap();
        assert!(!layout.outside[goal]);
        assert!(layout.outside[layout.agent_start]);
    }

    #[test]
    fn bundled_search_rescue_layout() {
        let layout = GridLayout::parse(crate::env::SEARCH_RESCUE).unwrap();
        assert_eq!(layout.domain, Domain::SearchRescue);
        let names: Vec<_> = layout.objects.iter().map(|o| o.name.as_str()).collect();
        for needed in ["Key", "Extinguisher", "Survivor"] {
            assert!(names.contains(&needed), "{needed} missing");
        }
        assert!(layout.has_fire());
        assert_eq!(layout.door_names.len(), 1);
    }

    #[test]
    fn two_goals_is_an_invariant_violation() {
        let text = "4 3\n####\n#GG#\n#>.#\n";
        assert!(matches!(
            GridLayout::parse(text),
            Err(LayoutError::Invariant(_))
        ));
    }

    #[test]
    fn malformed_rows_are_parse_errors() {
        assert!(matches!(
            GridLayout::parse("4 2\n####\n#>G\n"),
            Err(LayoutError::Parse { .. })
        ));
        assert!(matches!(
            GridLayout::parse("4 2\n####\n#>Q#\n"),
            Err(LayoutError::Parse { .. })
        ));
        assert!(matches!(GridLayout::parse(""), Err(LayoutError::Parse { .. })));
    }

    #[test]
    fn missing_agent_is_rejected() {
        assert!(matches!(
            GridLayout::parse("3 1\n.G.\n"),
            Err(LayoutError::Invariant(_))
        ));
    }
}
