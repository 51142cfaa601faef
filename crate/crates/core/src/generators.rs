//! Small deterministic graph families used by tests, benches and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_graph, EdgeList, Graph};

fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Graph {
    build_graph(&pairs.into_iter().collect::<EdgeList>()).expect("generator emits edges")
}

pub fn complete(n: usize) -> Graph {
    assert!(n >= 2);
    let n = n as u64;
    from_pairs((0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

pub fn path(n: usize) -> Graph {
    assert!(n >= 2);
    from_pairs((0..n as u64 - 1).map(|u| (u, u + 1)))
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3);
    let n = n as u64;
    from_pairs((0..n).map(|u| (u, (u + 1) % n)))
}

/// Node 0 joined to `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    assert!(leaves >= 1);
    from_pairs((1..=leaves as u64).map(|v| (0, v)))
}

/// One G(n, p) draw. Isolated nodes are dropped, so the result can have
/// fewer than `n` nodes.
pub fn erdos_renyi<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    let mut pairs = Vec::new();
    for u in 0..n as u64 {
        for v in u + 1..n as u64 {
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    build_graph(&EdgeList::new(pairs))
}

/// First G(n, p) draw from the seeded stream that spans all `n` nodes, is
/// connected and is not bipartite.
pub fn erdos_renyi_connected(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let Ok(g) = erdos_renyi(n, p, &mut rng) else {
            continue;
        };
        if g.n() == n && g.is_connected() && !g.is_bipartite() {
            return Ok(g);
        }
    }
    Err(Error::InvalidParameter(format!(
        "no connected non-bipartite G({n}, {p}) found"
    )))
}
