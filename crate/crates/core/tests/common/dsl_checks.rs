use prevent_core::bt::TreeNode;
use prevent_core::dsl::{parse, parse_bytes, serialize, DslError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHABET: &[&str] = &[
    "btdsl",
    " 1",
    "\n",
    " ",
    "{",
    "}",
    "(",
    ")",
    "=",
    ",",
    "#",
    "sequence",
    "fallback",
    "parallel",
    "action",
    "condition",
    "A",
    "memory",
    "true",
    "success",
    "all",
    "2",
    "é",
    "\t",
    "-",
    ".",
];

fn mutate(text: &str, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut bytes = text.as_bytes().to_vec();
    for _ in 0..rng.random_range(1..4) {
        let at = rng.random_range(0..=bytes.len());
        match rng.random_range(0..3) {
            0 if at < bytes.len() => {
                bytes.remove(at);
            }
            1 if at < bytes.len() => bytes[at] = rng.random(),
            _ => bytes.insert(at, rng.random()),
        }
    }
    bytes
}

fn check_no_panic(bytes: &[u8]) {
    match parse_bytes(bytes) {
        Ok(doc) => {
            let again = parse(&serialize(&doc.root)).expect("canonical text parses");
            assert_eq!(again.root, doc.root);
        }
        Err(e) => {
            if let Some(pos) = e.position() {
                assert!(pos.line >= 1 && pos.col >= 1, "{e}");
            } else {
                assert_eq!(e, DslError::EmptyDocument);
            }
        }
    }
}

/// Feeds `n` random inputs to the parser: raw bytes, keyword soup and
/// mutated valid documents. Panics propagate.
pub fn fuzz(n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valid = [
        serialize(&TreeNode::sequence(vec![
            TreeNode::action("A"),
            TreeNode::condition("B"),
        ])),
        include_str!("../../data/trees/cin.bt").to_string(),
        include_str!("../../data/trees/ibm.bt").to_string(),
    ];
    for i in 0..n {
        let input: Vec<u8> = match i % 3 {
            0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
            1 => (0..rng.random_range(0..40))
                .flat_map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())].bytes())
                .collect(),
            _ => mutate(&valid[rng.random_range(0..valid.len())], &mut rng),
        };
        check_no_panic(&input);
    }
}

pub fn with_leaf_params(mut node: TreeNode, params: &[(String, String)]) -> TreeNode {
    fn go(node: &mut TreeNode, params: &[(String, String)], k: &mut usize) {
        if node.kind.is_composite() {
            for c in &mut node.children {
                go(c, params, k);
            }
        } else if !params.is_empty() {
            let (key, value) = &params[*k % params.len()];
            node.params.insert(key.clone(), value.clone());
            *k += 1;
        }
    }
    go(&mut node, params, &mut 0);
    node
}
