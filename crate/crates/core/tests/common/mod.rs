//! Graph corpora shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use graphdep::rational::{ratio, Rational};
use graphdep::{Graph, LipschitzProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `K_3` plus six isolated vertices.
pub fn example_graph() -> Graph {
    Graph::new(9, &[(1, 2), (1, 3), (2, 3)]).unwrap()
}

pub fn uniform(n: usize, c: Rational) -> LipschitzProfile {
    LipschitzProfile::uniform(n, c).unwrap()
}

/// Random profile with entries `k/4`, `k` in `0..=12`, not all zero.
pub fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> LipschitzProfile {
    loop {
        let c: Vec<Rational> = (0..n).map(|_| ratio(rng.random_range(0..=12), 4)).collect();
        if c.iter().any(|x| *x != ratio(0, 1)) {
            return LipschitzProfile::new(c).unwrap();
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

/// Adjacency bitmasks, 0-based.
fn masks(g: &Graph) -> Vec<u64> {
    let mut m = vec![0u64; g.n()];
    for &(u, v) in g.edges() {
        m[u - 1] |= 1 << (v - 1);
        m[v - 1] |= 1 << (u - 1);
    }
    m
}

/// Upper-triangle code of the relabelled graph `perm[old] = new`.
fn code(adj: &[u64], perm: &[usize]) -> u64 {
    let n = adj.len();
    let mut bits = vec![0u64; n];
    for u in 0..n {
        for v in 0..n {
            if adj[u] >> v & 1 == 1 {
                bits[perm[u]] |= 1 << perm[v];
            }
        }
    }
    let mut out = 0u64;
    let mut k = 0;
    for u in 0..n {
        for v in u + 1..n {
            if bits[u] >> v & 1 == 1 {
                out |= 1 << k;
            }
            k += 1;
        }
    }
    out
}

/// Canonical code: minimum over relabellings that respect a degree-based
/// vertex colouring (vertices of equal colour are permuted among themselves).
fn canonical(adj: &[u64]) -> u64 {
    let n = adj.len();
    let deg: Vec<u32> = adj.iter().map(|m| m.count_ones()).collect();
    let colour: Vec<(u32, Vec<u32>)> = (0..n)
        .map(|v| {
            let mut nd: Vec<u32> = (0..n).filter(|&u| adj[v] >> u & 1 == 1).map(|u| deg[u]).collect();
            nd.sort_unstable();
            (deg[v], nd)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| colour[*a].cmp(&colour[*b]));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        match classes.last_mut() {
            Some(c) if colour[c[0]] == colour[v] => c.push(v),
            _ => classes.push(vec![v]),
        }
    }
    let mut best = u64::MAX;
    let mut perm = vec![0usize; n];
    fn go(classes: &mut [Vec<usize>], k: usize, start: usize, perm: &mut Vec<usize>, adj: &[u64], best: &mut u64) {
        if k == classes.len() {
            *best = (*best).min(code(adj, perm));
            return;
        }
        let len = classes[k].len();
        heap_permute(classes, k, len, start, perm, adj, best);
    }
    fn heap_permute(classes: &mut [Vec<usize>], k: usize, size: usize, start: usize, perm: &mut Vec<usize>, adj: &[u64], best: &mut u64) {
        if size <= 1 {
            for (i, &v) in classes[k].iter().enumerate() {
                perm[v] = start + i;
            }
            let next = start + classes[k].len();
            go(classes, k + 1, next, perm, adj, best);
            return;
        }
        for i in 0..size {
            heap_permute(classes, k, size - 1, start, perm, adj, best);
            let j = if size % 2 == 0 { i } else { 0 };
            classes[k].swap(j, size - 1);
        }
    }
    go(&mut classes, 0, 0, &mut perm, adj, &mut best);
    best
}

fn from_masks(adj: &[u64]) -> Graph {
    let n = adj.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if adj[u] >> v & 1 == 1 {
                edges.push((u + 1, v + 1));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

fn is_connected(adj: &[u64]) -> bool {
    let n = adj.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut seen = 1u64;
    let mut frontier = 1u64;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & !seen;
        seen |= new;
        frontier |= new;
    }
    seen == all
}

/// One representative of every isomorphism class of graphs on `1..=max_n`
/// vertices, grouped by order (index `n - 1`).
pub fn all_graphs_by_order(max_n: usize) -> Vec<Vec<Vec<u64>>> {
    let mut levels: Vec<Vec<Vec<u64>>> = vec![vec![vec![0]]];
    for n in 2..=max_n {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for g in &levels[n - 2] {
            for nb in 0..(1u64 << (n - 1)) {
                let mut adj: Vec<u64> = g.clone();
                for (u, m) in adj.iter_mut().enumerate() {
                    if nb >> u & 1 == 1 {
                        *m |= 1 << (n - 1);
                    }
                }
                adj.push(nb);
                if seen.insert(canonical(&adj)) {
                    next.push(adj);
                }
            }
        }
        levels.push(next);
    }
    levels
}

/// Connected graphs up to isomorphism, all orders `1..=max_n`.
pub fn connected_graphs(max_n: usize) -> Vec<Graph> {
    all_graphs_by_order(max_n)
        .into_iter()
        .flatten()
        .filter(|adj| is_connected(adj))
        .map(|adj| from_masks(&adj))
        .collect()
}

/// Canonical string of a rooted tree (AHU encoding).
fn ahu(adj: &[Vec<usize>], v: usize, parent: usize) -> String {
    let mut kids: Vec<String> = adj[v].iter().filter(|&&u| u != parent).map(|&u| ahu(adj, u, v)).collect();
    kids.sort();
    format!("({})", kids.concat())
}

fn tree_key(adj: &[Vec<usize>]) -> String {
    (0..adj.len()).map(|r| ahu(adj, r, usize::MAX)).min().unwrap()
}

/// Unlabelled trees on exactly `n` vertices as 0-based adjacency lists.
pub fn trees(max_n: usize) -> Vec<Vec<Vec<Vec<usize>>>> {
    let mut by_size: Vec<Vec<Vec<Vec<usize>>>> = vec![vec![vec![vec![]]]];
    for n in 2..=max_n {
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for t in &by_size[n - 2] {
            for v in 0..t.len() {
                let mut adj = t.clone();
                adj.push(vec![v]);
                adj[v].push(n - 1);
                if seen.insert(tree_key(&adj)) {
                    next.push(adj);
                }
            }
        }
        by_size.push(next);
    }
    by_size
}

/// Every unlabelled forest on `n` vertices, with its number of trees.
pub fn forests(n: usize, tree_table: &[Vec<Vec<Vec<usize>>>]) -> Vec<(Graph, usize)> {
    // multisets of (size, index) pairs in non-increasing order
    let mut items: Vec<(usize, usize)> = Vec::new();
    for (s, ts) in tree_table.iter().enumerate() {
        for k in 0..ts.len() {
            items.push((s + 1, k));
        }
    }
    items.sort_unstable_by(|a, b| b.cmp(a));
    let mut out = Vec::new();
    fn go(items: &[(usize, usize)], from: usize, left: usize, chosen: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if left == 0 {
            out.push(chosen.clone());
            return;
        }
        for i in from..items.len() {
            if items[i].0 <= left {
                chosen.push(items[i]);
                go(items, i, left - items[i].0, chosen, out);
                chosen.pop();
            }
        }
    }
    let mut combos = Vec::new();
    go(&items, 0, n, &mut Vec::new(), &mut combos);
    for combo in combos {
        let mut edges = Vec::new();
        let mut offset = 0;
        for &(size, k) in &combo {
            let t = &tree_table[size - 1][k];
            for (u, nb) in t.iter().enumerate() {
                for &v in nb {
                    if u < v {
                        edges.push((offset + u + 1, offset + v + 1));
                    }
                }
            }
            offset += size;
        }
        out.push((Graph::new(n, &edges).unwrap(), combo.len()));
    }
    out
}
