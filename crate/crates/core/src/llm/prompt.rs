use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LlmError, PathCheck, SubgoalPath};
use crate::symbolic::SymbolicInfo;

/// Prompt layout variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptTemplate {
    #[default]
    Default,
    /// Adds a line per entity describing what kind of thing it is, so the
    /// model can tell objects from places.
    Typed,
}

impl FromStr for PromptTemplate {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(Self::Default),
            "typed" => Ok(Self::Typed),
            other => Err(LlmError::UnknownTemplate(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub n: usize,
}

fn entity_kind(name: &str) -> &'static str {
    let lower = name.to_ascii_lowercase();
    if lower.contains("room") || lower.contains("goal") || lower.contains("lava") {
        "location"
    } else if lower.contains("door") || lower.contains("gate") || lower.contains("fire") {
        "obstacle"
    } else if lower.contains("survivor") {
        "person"
    } else {
        "object"
    }
}

fn inventory(info: &SymbolicInfo, template: PromptTemplate, out: &mut String) {
    let entities: Vec<&str> = info.entities().iter().map(|e| e.name()).collect();
    let predicates: Vec<String> = info
        .predicates()
        .iter()
        .map(|p| format!("{}/{}", p.name, p.arity))
        .collect();
    let _ = writeln!(out, "Entities: {}", entities.join(", "));
    let _ = writeln!(out, "Predicates (name/arity): {}", predicates.join(", "));
    if template == PromptTemplate::Typed {
        let _ = writeln!(out, "Entity kinds:");
        for e in &entities {
            let _ = writeln!(out, "- {e}: {}", entity_kind(e));
        }
    }
}

fn format_rules(info: &SymbolicInfo, n: usize, out: &mut String) {
    let plural = if n == 1 { "path" } else { "paths" };
    let _ = writeln!(
        out,
        "Propose exactly {n} distinct {plural} of high-level states leading from the initial state to the goal state."
    );
    let _ = writeln!(
        out,
        "Write each path as a numbered list under a heading `Path k:`, one state per line."
    );
    let _ = writeln!(
        out,
        "A state is a conjunction of atoms such as `Pred(Arg)` joined by `&`; list only atoms that are true and make no assumption about the others."
    );
    let _ = writeln!(
        out,
        "The first state of every path must be `{}` and the last must be `{}`.",
        info.initial(),
        info.goal()
    );
    let _ = writeln!(out, "Use only the entities and predicates listed above.");
}

/// The initial prompt requesting `n` paths.
pub fn build_prompt(info: &SymbolicInfo, n: usize, template: PromptTemplate) -> PromptText {
    assert!(n >= 1, "at least one path must be requested");
    let mut text = String::new();
    text.push_str("An agent acts in an environment described by symbolic states.\n\n");
    inventory(info, template, &mut text);
    let _ = writeln!(text);
    let _ = writeln!(text, "Initial state: {}", info.initial());
    let _ = writeln!(text, "Goal state: {}", info.goal());
    let _ = writeln!(text);
    format_rules(info, n, &mut text);
    PromptText { text, n }
}

/// A follow-up prompt asking for `missing` more paths and quoting what was
/// wrong with the rejected ones.
pub fn build_reprompt(
    info: &SymbolicInfo,
    missing: usize,
    template: PromptTemplate,
    rejected: &[(SubgoalPath, PathCheck)],
    unparsed: &[String],
) -> PromptText {
    let mut prompt = build_prompt(info, missing, template);
    let mut extra = String::from("\nYour previous answer had problems:\n");
    for (path, check) in rejected {
        let _ = match check {
            PathCheck::StartViolation => writeln!(
                extra,
                "- `{path}`: the first element must be `{}`.",
                info.initial()
            ),
            PathCheck::GoalViolation => writeln!(
                extra,
                "- `{path}`: the last element must be `{}`.",
                info.goal()
            ),
            PathCheck::Ok => writeln!(extra, "- `{path}`: duplicate of an accepted path."),
        };
    }
    for reason in unparsed {
        let _ = writeln!(extra, "- {reason}");
    }
    if rejected.is_empty() && unparsed.is_empty() {
        extra.push_str("- no usable numbered lists were found.\n");
    }
    let _ = writeln!(extra, "Provide {missing} new path(s) in the required format.");
    prompt.text.push_str(&extra);
    prompt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doorkey() -> SymbolicInfo {
        SymbolicInfo::from_names(
            &["Key_1", "Key_2", "Door", "OutsideRoom", "Green_Goal", "Lava"],
            &[("Holding", 1), ("At", 1), ("Unlocked", 1)],
            "At(OutsideRoom)",
            "At(Green_Goal)",
        )
        .unwrap()
    }

    #[test]
    fn prompt_mentions_inventory_and_count() {
        let p = build_prompt(&doorkey(), 4, PromptTemplate::Default);
        for word in ["Key_1", "Key_2", "Door", "Lava", "Holding/1", "At(OutsideRoom)", "At(Green_Goal)"] {
            assert!(p.text.contains(word), "{word} missing");
        }
        assert!(p.text.contains("exactly 4 distinct paths"));
        let inventory = p.text.lines().find(|l| l.starts_with("Entities:")).unwrap();
        for e in ["Key_1", "Key_2", "Door", "OutsideRoom", "Green_Goal", "Lava"] {
            assert_eq!(inventory.matches(&format!(" {e}")).count(), 1, "{e}");
        }
        assert_eq!(p, build_prompt(&doorkey(), 4, PromptTemplate::Default));
    }

    #[test]
    fn single_path_prompt() {
        let p = build_prompt(&doorkey(), 1, PromptTemplate::Default);
        assert_eq!(p.n, 1);
        assert!(p.text.contains("exactly 1 distinct path "));
    }

    #[test]
    fn synonyms_substitute_words_only() {
        let info = doorkey();
        let renamed = info
            .renamed(|w| w.replace("Key", "Code").replace("Door", "Gate"))
            .unwrap();
        let a = build_prompt(&info, 4, PromptTemplate::Default).text;
        let b = build_prompt(&renamed, 4, PromptTemplate::Default).text;
        assert!(b.contains("Code_1") && b.contains("Gate") && !b.contains("Key"));
        assert_eq!(a.replace("Key", "Code").replace("Door", "Gate"), b);
    }

    #[test]
    fn template_ids() {
        assert_eq!("typed".parse::<PromptTemplate>().unwrap(), PromptTemplate::Typed);
        assert!(matches!(
            "fancy".parse::<PromptTemplate>(),
            Err(LlmError::UnknownTemplate(_))
        ));
        let typed = build_prompt(&doorkey(), 2, PromptTemplate::Typed).text;
        assert!(typed.contains("Entity kinds:"));
    }
}
