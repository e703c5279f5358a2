use microworld::ants::SteerAction;
use microworld::engine::log::{replay, CommandLog};
use microworld::engine::{shipped, LogEntry};
use microworld_session::{ClientId, ClientMsg, Session, SessionOptions, SessionState};
use proptest::prelude::*;
use tokio::sync::mpsc::channel;

#[derive(Debug, Clone)]
enum Op {
    Join(ClientId),
    Leave(ClientId),
    Cmd(ClientId, u32, SteerAction),
    Vote(ClientId, &'static str),
    Choice(&'static str),
    Toggle,
    Boundary,
}

fn op() -> impl Strategy<Value = Op> {
    let client = 1u64..8;
    prop_oneof![
        1 => client.clone().prop_map(Op::Join),
        1 => client.clone().prop_map(Op::Leave),
        6 => (client.clone(), 0u32..6, prop_oneof![
            Just(SteerAction::Stop),
            Just(SteerAction::Go),
            Just(SteerAction::TurnRight),
            (0.0f64..360.0).prop_map(|degrees| SteerAction::SetHeading { degrees }),
        ]).prop_map(|(c, a, s)| Op::Cmd(c, a, s)),
        1 => (client, prop::sample::select(vec!["a", "b", "c", "zz"])).prop_map(|(c, o)| Op::Vote(c, o)),
        1 => prop::sample::select(vec!["a", "b", "c"]).prop_map(Op::Choice),
        1 => Just(Op::Toggle),
        8 => Just(Op::Boundary),
    ]
}

const FACILITATOR: ClientId = 100;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Commands only ever reach the log for an agent owned by the sender, and
    /// the log always replays to the live hash.
    #[test]
    fn clients_only_steer_their_own_ants(ops in prop::collection::vec(op(), 1..200)) {
        let config = shipped("fig4_few_ants").unwrap();
        let mut s = Session::new("s", "key", config.clone(), 30, SessionOptions::default()).unwrap();
        let mut rx = Vec::new();
        let (tx, r) = channel(4);
        rx.push(r);
        s.join(FACILITATOR, "f", Some("key"), tx).unwrap();
        s.start();
        let mut accepted = Vec::new();
        for op in ops {
            match op {
                Op::Join(c) => {
                    let (tx, r) = channel(4);
                    rx.push(r);
                    let _ = s.join(c, &format!("c{c}"), None, tx);
                }
                Op::Leave(c) => s.leave(c),
                Op::Cmd(c, agent, action) => {
                    let owner = s.agent_of(c);
                    let ok = s.handle(c, ClientMsg::Cmd { agent, action }).is_ok();
                    prop_assert_eq!(ok, owner == Some(agent) && s.state() == SessionState::Running);
                    if ok {
                        accepted.push((s.engine().clock(), agent, action));
                    }
                }
                Op::Vote(c, o) => {
                    let _ = s.handle(c, ClientMsg::Vote { menu: "QA5".into(), option: o.into() });
                }
                Op::Choice(o) => {
                    s.handle(FACILITATOR, ClientMsg::Choice { menu: "QA5".into(), option: o.into() }).unwrap();
                }
                Op::Toggle => {
                    let msg = if s.state() == SessionState::Running { ClientMsg::Pause } else { ClientMsg::Resume };
                    s.handle(FACILITATOR, msg).unwrap();
                }
                Op::Boundary => {
                    s.boundary();
                }
            }
        }
        let summary = s.finish();
        for e in &summary.log {
            if let LogEntry::Command { at, agent, action } = e {
                prop_assert!(accepted.iter().any(|(c, a, x)| c == at && a == agent && x == action));
            }
        }
        let out = replay(&config, &CommandLog { header: None, entries: summary.log }).unwrap();
        prop_assert!(out.verified());
    }
}
