//! Seeded instance generators for fuzz suites and fixed demo instances.
//!
//! Everything here is deterministic given the RNG state, so fuzz suites are
//! reproducible bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::exact::{DistributionTable, Pinning, Spin};
use crate::graph::Graph;

/// The crate's seeded generator. One named, versioned algorithm everywhere.
pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the seeded generator, for parallel chains.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut r = ChaCha12Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// The six-vertex demo graph: two triangles sharing the hub `d`, plus a
/// pendant vertex `b` (edges a-b, a-c, a-d, c-d, d-e, d-f, e-f).
pub fn twin_triangles() -> Graph {
    Graph::from_edge_list_str(
        "6 7\n0 1\n0 2\n0 3\n2 3\n3 4\n3 5\n4 5\n\
         #name 0 a\n#name 1 b\n#name 2 c\n#name 3 d\n#name 4 e\n#name 5 f\n",
    )
    .expect("static demo graph")
}

/// Uniform random connected graph: a random spanning tree plus `extra`
/// random chords (duplicates and loops skipped).
pub fn random_connected_graph(rng: &mut ChaCha12Rng, n: usize, extra: usize) -> Graph {
    assert!(n >= 1);
    let mut edges = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (u, v) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
        edges.push((u, v));
    }
    for _ in 0..extra {
        if n < 2 {
            break;
        }
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    Graph::new(n, edges).expect("generated edges are simple")
}

/// Uniform random labelled tree on `n` vertices.
pub fn random_tree(rng: &mut ChaCha12Rng, n: usize) -> Graph {
    random_connected_graph(rng, n, 0)
}

/// Fugacity drawn uniformly from `(0, 4]`.
pub fn random_lambda(rng: &mut ChaCha12Rng) -> f64 {
    let x: f64 = rng.gen_range(0.0..4.0);
    4.0 - x
}

/// A random pinning consistent with the hardcore constraint (in-pins form an
/// independent set), never touching `exclude`, each vertex pinned with
/// probability ~0.4.
pub fn random_consistent_pinning(
    rng: &mut ChaCha12Rng,
    g: &Graph,
    exclude: Option<usize>,
) -> Pinning {
    let mut pin = Pinning::empty();
    for v in 0..g.n() {
        if Some(v) == exclude {
            continue;
        }
        let x: f64 = rng.gen();
        if x < 0.2 {
            let blocked = g
                .neighbors(v)
                .iter()
                .any(|&w| pin.get(w) == Some(Spin::In));
            if !blocked {
                pin.pin(v, Spin::In).unwrap();
            }
        } else if x < 0.4 {
            pin.pin(v, Spin::Out).unwrap();
        }
    }
    pin
}

/// Product of `n` independent fair coins as an explicit table.
pub fn product_fair(n: usize) -> DistributionTable {
    let weights = (0..(1u32 << n)).map(|m| (m, 1.0));
    DistributionTable::from_weights(n, weights).expect("product table")
}

/// Product over `n` elements where each is in with odds `lambda`.
pub fn product_odds(n: usize, lambda: f64) -> DistributionTable {
    let weights = (0..(1u32 << n)).map(|m| (m, lambda.powi(m.count_ones() as i32)));
    DistributionTable::from_weights(n, weights).expect("product table")
}

/// Mass 1/2 each on the first half of the ground set and on its complement.
pub fn half_half(n: usize) -> DistributionTable {
    assert!(n >= 2 && n % 2 == 0);
    let lo: u32 = (1 << (n / 2)) - 1;
    let hi: u32 = ((1u32 << n) - 1) ^ lo;
    DistributionTable::from_weights(n, [(lo, 1.0), (hi, 1.0)]).expect("half-half table")
}

/// Uniform distribution over all `k`-subsets of `0..n`.
pub fn uniform_k_subsets(n: usize, k: u32) -> DistributionTable {
    let weights =
        (0..(1u32 << n)).filter(|m| m.count_ones() == k).map(|m| (m, 1.0));
    DistributionTable::from_weights(n, weights).expect("homogeneous table")
}
