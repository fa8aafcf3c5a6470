use std::sync::Arc;

use histwidget_core::demo::explorer::{make_explorer, select_type};
use histwidget_core::fixtures::g0;
use histwidget_core::protocol::{codes, decode, encode, headless_session, Envelope, Flow, MsgType, Script, Session};
use histwidget_core::state::StateId;
use histwidget_core::testkit::{apply_step, random_explorer_step, random_json, Step};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

const MSG_TYPES: [MsgType; 7] = [
    MsgType::Ready,
    MsgType::ActionDispatch,
    MsgType::RestoreRequest,
    MsgType::RenderSpec,
    MsgType::StateUpdate,
    MsgType::HistoryUpdate,
    MsgType::Error,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn decode_inverts_encode(seed in any::<u64>(), t in 0usize..7, seq in any::<u64>(), id in "[a-z0-9-]{1,12}") {
        let mut rng = StdRng::seed_from_u64(seed);
        let msg_type = MSG_TYPES[t];
        let env = Envelope::new(id, seq, msg_type, random_json(&mut rng, 4));
        let flow = msg_type.flow();
        let frame = encode(&env, flow).unwrap();
        prop_assert_eq!(decode(&frame, flow).unwrap(), env.clone());
        let other = match flow {
            Flow::FrontendToKernel => Flow::KernelToFrontend,
            Flow::KernelToFrontend => Flow::FrontendToKernel,
        };
        prop_assert!(encode(&env, other).is_err());
    }

    #[test]
    fn one_state_update_per_success(seed in any::<u64>(), len in 0usize..25) {
        let graph = Arc::new(g0());
        let mut probe = make_explorer(graph.clone()).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let mut script = Script::new("explorer").ready();
        for _ in 0..len {
            match random_explorer_step(&mut rng, &graph, &probe) {
                Step::Dispatch(d) => {
                    apply_step(&mut probe, &Step::Dispatch(d.clone()));
                    script = script.dispatch(&d);
                }
                Step::Restore(k) => {
                    apply_step(&mut probe, &Step::Restore(k));
                    script = script.restore(k);
                }
                _ => {}
            }
        }
        let mut session = Session::new(make_explorer(graph).unwrap());
        let transcript = headless_session(&mut session, script.build());
        let successes = session.widget().history_len() - 1;
        prop_assert_eq!(transcript.count(MsgType::StateUpdate), successes + 1);
        prop_assert_eq!(transcript.count(MsgType::HistoryUpdate), successes);
        prop_assert_eq!(session.widget().current_payload(), probe.current_payload());
        let log = transcript.action_log().unwrap();
        if successes > 0 {
            prop_assert_eq!(log, session.widget().history_list(None).unwrap());
        }
    }
}

fn session_after_one_select() -> Session {
    let mut session = Session::new(make_explorer(Arc::new(g0())).unwrap());
    headless_session(
        &mut session,
        Script::new("explorer").ready().dispatch(&select_type("Skill")).build(),
    );
    session
}

#[test]
fn repeated_seq_is_rejected_without_state_change() {
    let mut session = session_after_one_select();
    let before = session.widget().export_data(None).unwrap().payload;
    let body = serde_json::to_value(select_type("Occupation")).unwrap();
    for seq in [1, 0] {
        let replies = session.handle_inbound(&Envelope::new("explorer", seq, MsgType::ActionDispatch, body.clone()));
        assert_eq!(replies.len(), 1);
        assert_eq!(replies[0].error_code(), Some(codes::SEQ_ORDER));
    }
    assert_eq!(session.widget().history_len(), 2);
    assert_eq!(session.widget().export_data(None).unwrap().payload, before);
}

#[test]
fn kernel_message_from_frontend_is_rejected() {
    let mut session = session_after_one_select();
    let replies = session.handle_inbound(&Envelope::new(
        "explorer",
        7,
        MsgType::StateUpdate,
        json!({ "state_id": 0, "payload": {} }),
    ));
    assert_eq!(replies[0].error_code(), Some(codes::DIRECTION));
    assert_eq!(session.widget().history_len(), 2);
    assert_eq!(session.widget().current_state_id(), StateId(1));
}

#[test]
fn unknown_widget_and_bad_body() {
    let mut session = session_after_one_select();
    let replies = session.handle_inbound(&Envelope::new("nope", 5, MsgType::Ready, json!({})));
    assert_eq!(replies[0].error_code(), Some(codes::UNKNOWN_WIDGET));
    let replies = session.handle_inbound(&Envelope::new("explorer", 5, MsgType::RestoreRequest, json!({"id": 1})));
    assert_eq!(replies[0].error_code(), Some(codes::BAD_BODY));
    assert_eq!(session.widget().history_len(), 2);
}

#[test]
fn malformed_frame_is_a_protocol_error() {
    let mut session = session_after_one_select();
    let err = session.handle_frame(b"{\"seq\":").unwrap_err();
    assert_eq!(err.code(), "protocol");
}
