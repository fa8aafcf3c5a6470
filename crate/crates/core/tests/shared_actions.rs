use std::sync::Arc;

use histwidget_core::actions::{OverrideRecipe, UserFunction};
use histwidget_core::demo::explorer::{self, make_explorer, select_type, GET_NODE_DISTRIBUTION};
use histwidget_core::fixtures::g0;
use histwidget_core::state::InteractionType;
use histwidget_core::testkit::{random_graph, DIRECTIONS, NODE_TYPES, REL_TYPES};
use histwidget_core::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Value};

fn random_params(rng: &mut StdRng) -> Value {
    json!({
        "node_type": NODE_TYPES.choose(rng),
        "rel_type": REL_TYPES.choose(rng),
        "direction": DIRECTIONS.choose(rng).map(|d| d.as_str()),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn identity_wrapper_equals_default(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let graph = Arc::new(random_graph(&mut rng, 80, 300));
        let plain = make_explorer(graph.clone()).unwrap();
        let mut wrapped = make_explorer(graph).unwrap();
        wrapped
            .set_override(GET_NODE_DISTRIBUTION, OverrideRecipe::Identity.into_user_function())
            .unwrap();
        let params = random_params(&mut rng);
        let a = plain.actions().invoke(GET_NODE_DISTRIBUTION, &params).map_err(|e| e.code());
        let b = wrapped.actions().invoke(GET_NODE_DISTRIBUTION, &params).map_err(|e| e.code());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn label_sort_is_a_sorted_permutation(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let graph = Arc::new(random_graph(&mut rng, 80, 300));
        let mut w = make_explorer(graph).unwrap();
        let params = random_params(&mut rng);
        let default = w.actions().invoke(GET_NODE_DISTRIBUTION, &params);
        w.set_override(GET_NODE_DISTRIBUTION, OverrideRecipe::SortByLabel { descending: false }.into_user_function())
            .unwrap();
        let Ok(default) = default else { return Ok(()) };
        let sorted = w.actions().invoke(GET_NODE_DISTRIBUTION, &params).unwrap();
        let mut expected: Vec<(String, u64)> = serde_json::from_value(default).unwrap();
        let got: Vec<(String, u64)> = serde_json::from_value(sorted).unwrap();
        prop_assert!(got.windows(2).all(|p| p[0].0 <= p[1].0));
        expected.sort();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        prop_assert_eq!(got_sorted, expected);
    }
}

#[test]
fn override_and_clear_are_recorded_once_each() {
    let mut w = make_explorer(Arc::new(g0())).unwrap();
    w.handle_action(&select_type("Skill")).unwrap();
    w.set_override(
        GET_NODE_DISTRIBUTION,
        OverrideRecipe::SortByLabel { descending: false }.into_user_function(),
    )
    .unwrap();
    assert_eq!(
        w.current_payload()["node_distribution"],
        json!([["baking", 1], ["cooking", 2]])
    );
    w.clear_override(GET_NODE_DISTRIBUTION).unwrap();
    assert_eq!(
        w.current_payload()["node_distribution"],
        json!([["cooking", 2], ["baking", 1]])
    );

    let kinds: Vec<InteractionType> = w
        .history_list(None)
        .unwrap()
        .iter()
        .map(|r| r.interaction_type)
        .collect();
    assert_eq!(kinds.iter().filter(|k| **k == InteractionType::Override).count(), 1);
    assert_eq!(
        kinds.iter().filter(|k| **k == InteractionType::ClearOverride).count(),
        1
    );
}

#[test]
fn raising_user_function_changes_nothing() {
    let mut w = make_explorer(Arc::new(g0())).unwrap();
    w.handle_action(&select_type("Skill")).unwrap();
    let before = (w.history_len(), w.export_data(None).unwrap().payload);

    let err = w
        .set_override(
            GET_NODE_DISTRIBUTION,
            UserFunction::new("boom", |_, _| Err("raised".into())),
        )
        .unwrap_err();
    assert!(matches!(err, Error::Udf { .. }), "{err:?}");
    assert_eq!((w.history_len(), w.export_data(None).unwrap().payload), before);

    let err = w
        .set_override(
            GET_NODE_DISTRIBUTION,
            UserFunction::new("panics", |_, _| panic!("bad udf")),
        )
        .unwrap_err();
    assert_eq!(err.code(), "udf_error");
    assert_eq!((w.history_len(), w.export_data(None).unwrap().payload), before);
    assert!(w.actions().override_of(GET_NODE_DISTRIBUTION).unwrap().is_none());
}

#[test]
fn init_time_override_is_recorded_in_the_init_record() {
    let w = explorer::make_explorer_with(
        Arc::new(g0()),
        explorer::ExplorerOptions {
            initial_node_type: Some("Skill".into()),
            ..Default::default()
        },
        vec![(
            GET_NODE_DISTRIBUTION.into(),
            OverrideRecipe::SortByLabel { descending: false }.into_user_function(),
        )],
    )
    .unwrap();
    assert_eq!(
        w.current_payload()["node_distribution"],
        json!([["baking", 1], ["cooking", 2]])
    );
    let init = &w.history_list(None).unwrap()[0];
    assert_eq!(init.params["init_overrides"][0]["name"], GET_NODE_DISTRIBUTION);
}
