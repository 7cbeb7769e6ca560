//! Minimum-weight perfect matching on complete graphs.
//!
//! Small instances are solved by an exact subset dynamic program that also
//! fixes the tie-break (lowest unmatched index takes the lowest-index partner
//! among optimal choices). Larger instances go to the blossom solver from
//! `rustworkx-core` run in maximum-cardinality mode on complemented weights.

use petgraph::graph::UnGraph;
use rustworkx_core::max_weight_matching::max_weight_matching;

use crate::error::{Error, Result};

/// Largest node count handled by the subset dynamic program.
pub const EXACT_DP_LIMIT: usize = 10;

/// A perfect matching as sorted `(i, j)` pairs with `i < j`, plus its weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub weight: u64,
}

/// Exact minimum-weight perfect matching of `n` nodes under `weight(i, j)`.
pub fn min_weight_perfect_matching<F>(n: usize, weight: F) -> Result<Matching>
where
    F: Fn(usize, usize) -> u32,
{
    if n % 2 == 1 {
        return Err(Error::Consistency(format!(
            "odd number of defects ({n}) cannot be perfectly matched"
        )));
    }
    match n {
        0 => Ok(Matching {
            pairs: Vec::new(),
            weight: 0,
        }),
        2 => Ok(Matching {
            pairs: vec![(0, 1)],
            weight: weight(0, 1) as u64,
        }),
        _ if n <= EXACT_DP_LIMIT => Ok(subset_dp(n, &weight)),
        _ => blossom(n, &weight),
    }
}

/// Subset DP: `best[mask]` is the minimum cost of matching the nodes in `mask`.
pub fn subset_dp<F>(n: usize, weight: &F) -> Matching
where
    F: Fn(usize, usize) -> u32,
{
    assert!(n.is_multiple_of(2) && n <= 24);
    let full = (1usize << n) - 1;
    let mut w = vec![0u64; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i * n + j] = weight(i.min(j), i.max(j)) as u64;
            }
        }
    }
    // cost[mask] for masks of unmatched nodes; computed by increasing popcount
    let mut cost = vec![u64::MAX; 1 << n];
    let mut choice = vec![0u8; 1 << n];
    cost[0] = 0;
    for mask in 1..=full {
        if (mask as u32).count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best = u64::MAX;
        let mut arg = 0u8;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let sub = cost[rest & !(1 << j)];
            let c = sub + w[i * n + j];
            if c < best {
                best = c;
                arg = j as u8;
            }
        }
        cost[mask] = best;
        choice[mask] = arg;
    }
    let mut pairs = Vec::with_capacity(n / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask] as usize;
        pairs.push((i, j));
        mask &= !(1 << i) & !(1 << j);
    }
    Matching {
        pairs,
        weight: cost[full],
    }
}

fn blossom<F>(n: usize, weight: &F) -> Result<Matching>
where
    F: Fn(usize, usize) -> u32,
{
    let mut graph: UnGraph<(), u32> = UnGraph::with_capacity(n, n * (n - 1) / 2);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    let mut max_w = 0u32;
    for i in 0..n {
        for j in i + 1..n {
            let w = weight(i, j);
            max_w = max_w.max(w);
            graph.add_edge(nodes[i], nodes[j], w);
        }
    }
    // maximizing Σ (C - w) over perfect matchings minimizes Σ w
    let c = max_w as i128 + 1;
    let matched = max_weight_matching(
        &graph,
        true,
        |e| Ok::<i128, std::convert::Infallible>(c - *e.weight() as i128),
        false,
    )
    .expect("infallible weight function");
    let mut pairs: Vec<(usize, usize)> = matched.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    pairs.sort_unstable();
    if pairs.len() * 2 != n {
        return Err(Error::Consistency(format!(
            "blossom returned {} pairs for {n} nodes",
            pairs.len()
        )));
    }
    let weight_sum = pairs.iter().map(|&(a, b)| weight(a, b) as u64).sum();
    Ok(Matching {
        pairs,
        weight: weight_sum,
    })
}
