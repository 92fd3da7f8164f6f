use super::*;
use crate::fsm::AbortOn;
use proptest::prelude::*;
use rand::SeedableRng;

const S: fn() -> BtNode = BtNode::success;
const F: fn() -> BtNode = BtNode::failure;

fn ch() -> CharacterSpec {
    CharacterSpec::default_fighter()
}

fn punches(n: usize) -> BtNode {
    BtNode::Tactic(Tactic::new("punches", &vec!["attack:punch"; n]))
}

struct Harness {
    tree: BehaviorTree,
    rt: BtRuntime,
    rng: ChaCha8Rng,
}

impl Harness {
    fn new(root: &BtNode) -> Self {
        let tree = BehaviorTree::new(root, &ch()).unwrap();
        let rt = BtRuntime::new(&tree);
        Self {
            tree,
            rt,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    fn tick(&mut self, obs: &Observation) -> BtTick {
        let mut ctx = BtContext {
            obs,
            game: None,
            rng: &mut self.rng,
        };
        tick(&self.tree, &mut self.rt, &mut ctx)
    }
}

fn obs() -> Observation {
    Observation::default()
}

#[test]
fn selector_stops_at_first_success() {
    // ids: 0 selector, 1 F, 2 S, 3 never reached
    let mut h = Harness::new(&BtNode::Selector(vec![F(), S(), punches(1)]));
    let t = h.tick(&obs());
    assert_eq!(t, BtTick { status: Status::Success, action: None });
    assert_eq!(h.rt.trace, vec![1, 2]);
}

#[test]
fn sequencer_stops_at_first_failure() {
    let mut h = Harness::new(&BtNode::Sequencer(vec![S(), F(), punches(1)]));
    assert_eq!(h.tick(&obs()).status, Status::Failure);
    assert_eq!(h.rt.trace, vec![1, 2]);
}

#[test]
fn running_resumes_at_the_running_child() {
    let mut h = Harness::new(&BtNode::Sequencer(vec![S(), punches(2)]));
    let punch = Action::parse("attack:punch", &ch()).unwrap();
    let t = h.tick(&obs());
    assert_eq!(t, BtTick { status: Status::Running, action: Some(punch) });
    assert_eq!(h.rt.trace, vec![1, 2]);
    assert_eq!(h.rt.resume_path(), vec![(0, 1)]);

    let t = h.tick(&obs());
    assert_eq!(t.status, Status::Running);
    assert_eq!(h.rt.trace, vec![2], "condition not re-run");

    // Busy fighter: the leaf keeps running without emitting.
    let busy = Observation { can_act: false, ..obs() };
    assert_eq!(h.tick(&busy), BtTick { status: Status::Running, action: None });

    let t = h.tick(&obs());
    assert_eq!(t, BtTick { status: Status::Success, action: None });
    assert!(h.rt.resume_path().is_empty());
}

#[test]
fn all_failures() {
    let mut h = Harness::new(&BtNode::Selector(vec![F(), F(), F()]));
    assert_eq!(h.tick(&obs()).status, Status::Failure);
    assert_eq!(h.rt.trace, vec![1, 2, 3]);
}

#[test]
fn tactic_abort_fails_the_leaf() {
    let mut t = Tactic::new("combo", &["attack:punch", "attack:punch", "attack:heavy"]);
    t.abort_on = AbortOn {
        blocked_hit: true,
        took_hit: false,
    };
    let mut h = Harness::new(&BtNode::Selector(vec![BtNode::Tactic(t), BtNode::Action("block".into())]));
    assert_eq!(h.tick(&obs()).status, Status::Running);
    let blocked = Observation { hit_blocked: true, ..obs() };
    let out = h.tick(&blocked);
    assert_eq!(out, BtTick { status: Status::Running, action: Some(Action::Block) });
}

#[test]
fn oracle_examples() {
    use Status::*;
    assert_eq!(bt_oracle(&BtNode::Selector(vec![BtNode::Sequencer(vec![S(), S()]), F()])), Some(Success));
    assert_eq!(bt_oracle(&S()), Some(Success));
    assert_eq!(bt_oracle(&BtNode::Sequencer(vec![BtNode::Selector(vec![F(), F()]), S()])), Some(Failure));
    assert_eq!(bt_oracle(&punches(1)), None);
}

#[test]
fn empty_composite_is_malformed() {
    assert_eq!(BehaviorTree::new(&BtNode::Selector(vec![]), &ch()), Err(BtError::MalformedTree));
    let nested = BtNode::Sequencer(vec![S(), BtNode::Selector(vec![])]);
    assert_eq!(nested.validate(), Err(BtError::MalformedTree));
    assert!(matches!(
        BehaviorTree::new(&BtNode::Action("attack:kick".into()), &ch()),
        Err(BtError::UnknownAction(_))
    ));
}

#[test]
fn fixture_parses() {
    let root = BtNode::from_json(include_str!("../../data/bt/aggressive_defensive.json")).unwrap();
    let tree = BehaviorTree::new(&root, &ch()).unwrap();
    assert!(tree.len() > 5);
}

#[test]
fn json_shape() {
    let root = BtNode::from_json(
        r#"{"selector": [{"condition": "never"}, {"sequencer": [{"condition": {"fact": "can_act"}}, {"action": "grab"}]}]}"#,
    )
    .unwrap();
    let mut h = Harness::new(&root);
    assert_eq!(h.tick(&obs()).action, Some(Action::Grab));
}

fn constant_tree() -> impl Strategy<Value = BtNode> {
    let leaf = prop_oneof![Just(S()), Just(F())];
    leaf.prop_recursive(4, 256, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=4).prop_map(BtNode::Selector),
            prop::collection::vec(inner, 1..=4).prop_map(BtNode::Sequencer),
        ]
    })
}

fn depth(n: &BtNode) -> usize {
    match n {
        BtNode::Selector(cs) | BtNode::Sequencer(cs) => 1 + cs.iter().map(depth).max().unwrap_or(0),
        _ => 0,
    }
}

/// Preorder ids of the leaves a short-circuiting evaluation touches.
fn visited(n: &BtNode, next_id: &mut usize, out: &mut Vec<usize>) -> Status {
    let id = *next_id;
    *next_id += 1;
    match n {
        BtNode::Selector(cs) | BtNode::Sequencer(cs) => {
            let stop = if matches!(n, BtNode::Selector(_)) { Status::Success } else { Status::Failure };
            let mut result = None;
            for c in cs {
                if result.is_some() {
                    skip(c, next_id);
                    continue;
                }
                if visited(c, next_id, out) == stop {
                    result = Some(stop);
                }
            }
            result.unwrap_or(if stop == Status::Success { Status::Failure } else { Status::Success })
        }
        _ => {
            out.push(id);
            bt_oracle(n).unwrap()
        }
    }
}

fn skip(n: &BtNode, next_id: &mut usize) {
    *next_id += 1;
    if let BtNode::Selector(cs) | BtNode::Sequencer(cs) = n {
        cs.iter().for_each(|c| skip(c, next_id));
    }
}

fn dual(n: &BtNode) -> BtNode {
    match n {
        BtNode::Selector(cs) => BtNode::Sequencer(cs.iter().map(dual).collect()),
        BtNode::Sequencer(cs) => BtNode::Selector(cs.iter().map(dual).collect()),
        BtNode::Condition(Condition::Always) => F(),
        BtNode::Condition(Condition::Never) => S(),
        other => other.clone(),
    }
}

fn mixed_tree() -> impl Strategy<Value = BtNode> {
    let leaf = prop_oneof![
        Just(S()),
        Just(F()),
        (1usize..4).prop_map(punches),
        Just(BtNode::Condition(Condition::fact("landed_hit"))),
    ];
    leaf.prop_recursive(4, 128, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=4).prop_map(BtNode::Selector),
            prop::collection::vec(inner, 1..=4).prop_map(BtNode::Sequencer),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tick_agrees_with_oracle(tree in constant_tree()) {
        prop_assume!(depth(&tree) <= 4);
        let mut h = Harness::new(&tree);
        let t = h.tick(&obs());
        prop_assert_eq!(Some(t.status), bt_oracle(&tree));
        prop_assert_eq!(t.action, None);
        prop_assert!(h.rt.resume_path().is_empty());

        let mut expected = vec![];
        visited(&tree, &mut 0, &mut expected);
        prop_assert_eq!(&h.rt.trace, &expected);

        let d = dual(&tree);
        let negated = match bt_oracle(&tree).unwrap() {
            Status::Success => Status::Failure,
            _ => Status::Success,
        };
        prop_assert_eq!(Harness::new(&d).tick(&obs()).status, negated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resume_and_single_action(tree in mixed_tree(), events in prop::collection::vec(any::<(bool, bool)>(), 1..30)) {
        let mut h = Harness::new(&tree);
        let mut last_running_leaf: Option<usize> = None;
        for (landed, busy) in events {
            let o = Observation { landed_hit: landed, can_act: !busy, ..obs() };
            let t = h.tick(&o);
            if let Some(leaf) = last_running_leaf {
                prop_assert_eq!(h.rt.trace.first().copied(), Some(leaf));
            }
            // Only a Running tick can emit, and only from its last evaluated leaf.
            if t.action.is_some() {
                prop_assert_eq!(t.status, Status::Running);
            }
            if t.status != Status::Running {
                prop_assert!(h.rt.resume_path().is_empty());
            }
            last_running_leaf = (t.status == Status::Running).then(|| *h.rt.trace.last().unwrap());
        }
    }
}
