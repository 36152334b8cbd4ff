//! Reprompt loop driven by the shipped fixture scenarios and by randomized
//! responses.

mod common;

use std::collections::BTreeMap;

use common::oracles::{list, render};

use lgts::llm::{
    query_paths, query_paths_with_synonyms, validate_path, FixtureProvider, LlmError, PathCheck,
    PromptTemplate,
};
use proptest::prelude::*;

fn fixture(scenario: &str) -> FixtureProvider {
    FixtureProvider::load(common::asset("fixtures/doorkey.toml"), scenario).unwrap()
}

#[test]
fn four_paths_in_one_attempt() {
    let info = common::doorkey_info();
    let (paths, session) =
        query_paths(&mut fixture("four_paths"), &info, 4, 5, PromptTemplate::Default).unwrap();
    assert_eq!(session.attempts, 1);
    assert_eq!(paths.len(), 4);
    assert!(session.rejected.is_empty());
}

#[test]
fn three_valid_one_invalid_converges_on_second_attempt() {
    let info = common::doorkey_info();
    let (paths, session) =
        query_paths(&mut fixture("reprompt"), &info, 4, 5, PromptTemplate::Default).unwrap();
    assert_eq!(session.attempts, 2);
    assert_eq!(paths.len(), 4);
    assert!(paths.iter().all(|p| validate_path(p, &info) == PathCheck::Ok));
    assert_eq!(session.rejected.len(), 1);
    assert!(session.rejected[0].starts_with("start violation"));
    // The second prompt names the rejected path and asks for one more.
    let second = &session.transcripts[1].prompt;
    assert!(second.contains("Holding(Key_2) -> At(Green_Goal)"), "{second}");
}

#[test]
fn garbage_errors_after_exactly_max_retries() {
    let info = common::doorkey_info();
    for max in [1, 3, 5] {
        let mut p = fixture("garbage");
        match query_paths(&mut p, &info, 4, max, PromptTemplate::Default) {
            Err(LlmError::NoValidPaths { attempts }) => assert_eq!(attempts, max),
            other => panic!("expected NoValidPaths, got {other:?}"),
        }
    }
}

#[test]
fn synonym_scenario_maps_back_to_original_names() {
    let info = common::doorkey_info();
    let synonyms = BTreeMap::from([("Key".to_string(), "Code".to_string()), ("Door".into(), "Gate".into())]);
    let (paths, session) = query_paths_with_synonyms(
        &mut fixture("synonyms"),
        &info,
        &synonyms,
        4,
        5,
        PromptTemplate::Default,
    )
    .unwrap();
    assert_eq!(paths.len(), 4);
    assert!(paths.iter().all(|p| validate_path(p, &info) == PathCheck::Ok));
    let prompt = &session.transcripts[0].prompt;
    assert!(prompt.contains("Code_1") && prompt.contains("Gate"));
    assert!(!prompt.contains("Key_1") && !prompt.contains("Door"));
    let text: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
    assert!(text.contains(&"At(OutsideRoom) -> Holding(Key_1) -> Unlocked(Door) -> At(Green_Goal)".to_string()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn returned_paths_always_validate(
        responses in prop::collection::vec(prop::collection::vec(list(), 0..5), 1..4),
        noise in "[a-z ,.]{0,30}",
        n in 1usize..5,
        retries in 1usize..4,
    ) {
        let info = common::doorkey_info();
        let texts: Vec<String> = responses.iter().map(|r| render(r, &noise)).collect();
        let mut p = FixtureProvider::from_responses("random", texts);
        match query_paths(&mut p, &info, n, retries, PromptTemplate::Default) {
            Ok((paths, session)) => {
                prop_assert!(!paths.is_empty() && paths.len() <= n);
                prop_assert!(session.attempts <= retries);
                for (i, path) in paths.iter().enumerate() {
                    prop_assert_eq!(validate_path(path, &info), PathCheck::Ok);
                    prop_assert!(!paths[..i].contains(path));
                }
            }
            Err(LlmError::NoValidPaths { attempts }) => prop_assert_eq!(attempts, retries),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
