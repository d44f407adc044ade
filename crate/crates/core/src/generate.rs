//! Seeded random structures and models for benchmarks and stress tests.
//!
//! Structures come out chordal by construction: each new vertex attaches to
//! a subset of an existing clique, so it is simplicial at insertion time and
//! the reverse insertion order is a perfect elimination order. Potentials
//! are strictly positive, so generated models tolerate negative exponents
//! and logarithms everywhere.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::factor::Factor;
use crate::graph::UndirectedGraph;
use crate::jt::{build_forest, calibrate};
use crate::model::DecomposableModel;
use crate::vars::{VarId, VariableTable};

/// Path graph 0-1-2-...-(n-1).
pub fn chain_graph(n: usize) -> UndirectedGraph {
    let edges: Vec<(VarId, VarId)> = (1..n).map(|i| ((i - 1) as VarId, i as VarId)).collect();
    UndirectedGraph::from_edges(n, &edges).expect("consecutive ids are valid")
}

/// Connected random chordal graph on vertices `offset..offset+n` inside a
/// graph with `total` vertices. Clique size stays within `max_clique`.
fn random_chordal_block(
    g: &mut UndirectedGraph,
    offset: usize,
    n: usize,
    max_clique: usize,
    rng: &mut impl Rng,
) {
    assert!(max_clique >= 2);
    if n == 0 {
        return;
    }
    let mut cliques: Vec<Vec<VarId>> = vec![vec![offset as VarId]];
    for v in 1..n {
        let v = (offset + v) as VarId;
        let base = &cliques[rng.random_range(0..cliques.len())];
        let take = rng.random_range(1..=base.len().min(max_clique - 1));
        let mut subset = base.clone();
        subset.shuffle(rng);
        subset.truncate(take);
        subset.sort_unstable();
        for &u in &subset {
            g.add_edge(u, v).expect("fresh vertex");
        }
        subset.push(v);
        cliques.push(subset);
    }
}

/// Random connected chordal graph on `n` vertices with cliques of at most
/// `max_clique` vertices (treewidth at most `max_clique - 1`).
pub fn random_chordal_graph(n: usize, max_clique: usize, rng: &mut impl Rng) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(n);
    random_chordal_block(&mut g, 0, n, max_clique, rng);
    g
}

/// Random chordal graph made of independent connected blocks over
/// consecutive id ranges; `block_sizes` must sum to the vertex count.
pub fn random_chordal_blocks(
    block_sizes: &[usize],
    max_clique: usize,
    rng: &mut impl Rng,
) -> UndirectedGraph {
    let n: usize = block_sizes.iter().sum();
    let mut g = UndirectedGraph::new(n);
    let mut offset = 0;
    for &size in block_sizes {
        random_chordal_block(&mut g, offset, size, max_clique, rng);
        offset += size;
    }
    g
}

/// Random strictly positive decomposable model on a chordal graph: draw
/// clique potentials uniformly from [0.1, 1), calibrate, and normalize each
/// tree.
pub fn random_model(
    vars: &VariableTable,
    graph: &UndirectedGraph,
    rng: &mut impl Rng,
) -> Result<DecomposableModel> {
    let forest = build_forest(graph)?;
    let potentials: Vec<(usize, Factor)> = (0..forest.cliques().len())
        .map(|c| {
            let scope = forest.cliques().get(c);
            let len: usize = vars.scope_cards(scope).iter().product();
            let values: Vec<f64> = (0..len).map(|_| 0.1 + 0.9 * rng.random::<f64>()).collect();
            Ok((c, Factor::from_values(vars, scope, values)?))
        })
        .collect::<Result<_>>()?;
    let cal = calibrate(vars, &forest, &potentials)?;
    let tables: Vec<Factor> = (0..forest.cliques().len())
        .map(|c| {
            let total = cal.belief_total(forest.tree_of(c));
            let mut t = cal.belief(c).clone();
            for v in t.values_mut() {
                *v /= total;
            }
            t
        })
        .collect();
    DecomposableModel::new(vars.clone(), graph.clone(), tables)
}

/// A pair of independent random models over the same variables and the same
/// block partition, so both joints factor over the same disconnected
/// components. With a single block the graphs are connected.
pub fn random_model_pair(
    vars: &VariableTable,
    block_sizes: &[usize],
    max_clique: usize,
    rng: &mut impl Rng,
) -> Result<(DecomposableModel, DecomposableModel)> {
    assert_eq!(block_sizes.iter().sum::<usize>(), vars.len());
    let gp = random_chordal_blocks(block_sizes, max_clique, rng);
    let gq = random_chordal_blocks(block_sizes, max_clique, rng);
    let p = random_model(vars, &gp, rng)?;
    let q = random_model(vars, &gq, rng)?;
    Ok((p, q))
}
