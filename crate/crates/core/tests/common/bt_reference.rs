//! Direct recursive evaluator for the tick engine.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use prevent_core::bt::{BehaviorTree, Blackboard, Leaf, LeafCall, LeafRegistry, NodeKind, NodeStatus, TreeNode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use NodeStatus::{Failure, Running, Success};

type Script = Rc<RefCell<HashMap<String, NodeStatus>>>;

struct Scripted {
    name: String,
    script: Script,
    halts: Rc<RefCell<Vec<String>>>,
}

impl Leaf<Blackboard> for Scripted {
    fn tick(&mut self, _: &mut Blackboard, _: &LeafCall<'_>) -> NodeStatus {
        self.script.borrow()[&self.name]
    }

    fn halt(&mut self, _: &mut Blackboard) {
        self.halts.borrow_mut().push(self.name.clone());
    }
}

/// Reference evaluator holding per-path cursor and running flags.
#[derive(Default)]
struct Reference {
    cursor: HashMap<String, usize>,
    running: HashMap<String, bool>,
    visits: Vec<(String, NodeStatus)>,
    halts: Vec<String>,
}

impl Reference {
    fn tick(&mut self, root: &TreeNode, script: &HashMap<String, NodeStatus>) -> NodeStatus {
        self.visits.clear();
        self.halts.clear();
        let s = self.eval(root, "/", script);
        if s != Running {
            self.cursor.clear();
            self.running.clear();
        }
        s
    }

    fn eval(&mut self, node: &TreeNode, path: &str, script: &HashMap<String, NodeStatus>) -> NodeStatus {
        let slot = self.visits.len();
        self.visits.push((path.to_string(), Running));
        let child = |i: usize| format!("{path}{i}/");
        let status = match node.kind {
            NodeKind::Sequence | NodeKind::Fallback => {
                let go_on = if node.kind == NodeKind::Sequence {
                    Success
                } else {
                    Failure
                };
                let start = if node.memory() {
                    self.cursor.get(path).copied().unwrap_or(0)
                } else {
                    0
                };
                let mut result = (go_on, 0);
                for i in start..node.children.len() {
                    let s = self.eval(&node.children[i], &child(i), script);
                    if s != go_on {
                        for j in i + 1..node.children.len() {
                            self.halt(&node.children[j], &child(j));
                        }
                        result = (s, i);
                        break;
                    }
                }
                let resume = if result.0 == Running { result.1 } else { 0 };
                self.cursor.insert(path.to_string(), resume);
                result.0
            }
            NodeKind::Parallel => {
                let mut ok = 0;
                let mut failed = false;
                for (i, c) in node.children.iter().enumerate() {
                    match self.eval(c, &child(i), script) {
                        Success => ok += 1,
                        Failure => failed = true,
                        Running => {}
                    }
                }
                let s = if failed {
                    Failure
                } else if ok >= node.success_threshold().required(node.children.len()) {
                    Success
                } else {
                    Running
                };
                if s != Running {
                    for (i, c) in node.children.iter().enumerate() {
                        self.halt(c, &child(i));
                    }
                }
                s
            }
            NodeKind::Action | NodeKind::Condition => script[node.leaf_name.as_deref().unwrap()],
        };
        self.running.insert(path.to_string(), status == Running);
        self.visits[slot].1 = status;
        status
    }

    fn halt(&mut self, node: &TreeNode, path: &str) {
        if !self.running.get(path).copied().unwrap_or(false) {
            return;
        }
        self.running.insert(path.to_string(), false);
        self.cursor.insert(path.to_string(), 0);
        if node.kind.is_composite() {
            for (i, c) in node.children.iter().enumerate() {
                self.halt(c, &format!("{path}{i}/"));
            }
        } else {
            self.halts.push(node.leaf_name.clone().unwrap());
        }
    }
}

pub fn random_script(leaves: &[(String, NodeKind)], rng: &mut ChaCha8Rng) -> HashMap<String, NodeStatus> {
    leaves
        .iter()
        .map(|(name, kind)| {
            let s = match (kind, rng.random_range(0..3)) {
                (_, 0) => Success,
                (_, 1) => Failure,
                (NodeKind::Condition, _) => Success,
                _ => Running,
            };
            (name.clone(), s)
        })
        .collect()
}

pub fn check_engine(mut root: TreeNode, seed: u64, ticks: usize) -> Result<(), TestCaseError> {
    super::name_leaves(&mut root);
    let leaves = super::leaves(&root);
    let script: Script = Rc::default();
    let halts = Rc::new(RefCell::new(Vec::new()));
    let mut reg = LeafRegistry::new();
    for (name, _) in &leaves {
        reg.register_leaf(
            name.clone(),
            Scripted {
                name: name.clone(),
                script: script.clone(),
                halts: halts.clone(),
            },
        )
        .unwrap();
    }
    let mut tree = BehaviorTree::new(root.clone()).unwrap();
    let mut reference = Reference::default();
    let mut bb = Blackboard::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..ticks {
        let s = random_script(&leaves, &mut rng);
        *script.borrow_mut() = s.clone();
        halts.borrow_mut().clear();
        let got = tree.tick(&mut bb, &mut reg).unwrap();
        let want = reference.tick(&root, &s);
        prop_assert_eq!(got, want, "tick {}", t);
        prop_assert_eq!(&tree.last_trace().unwrap().visits, &reference.visits, "tick {}", t);
        prop_assert_eq!(&*halts.borrow(), &reference.halts, "tick {}", t);
    }
    Ok(())
}
