//! Fractional vertex covers by independent sets and by induced forests.
//!
//! Vertex sets are handled internally as `u64` bitmasks (bit `v-1` for vertex
//! `v`), which bounds every routine here at 64 vertices. Public results use
//! 1-based vertex lists.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::Graph;
use crate::lp::{self, CoveringLp, LpSolution, Pricing, Scalar};
use crate::profile::LipschitzProfile;
use crate::rational::{self, Rational};

/// Largest graph handled by exhaustive enumeration.
pub const ENUMERATION_MAX_VERTICES: usize = 25;
/// Largest graph whose enumerated programs are solved in exact arithmetic.
pub const EXACT_LP_MAX_VERTICES: usize = 15;
/// Default limit on the number of enumerated parts.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 21;
/// Parts up to this size are priced exhaustively during column generation.
pub const PRICING_EXHAUSTIVE_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverKind {
    Independent,
    Forest,
}

impl CoverKind {
    fn admits(self, masks: &[u64], subset: u64) -> bool {
        match self {
            CoverKind::Independent => is_independent_mask(masks, subset),
            CoverKind::Forest => Graph::mask_is_forest(masks, subset),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverPart {
    /// Ascending 1-based vertices; never empty.
    pub vertices: Vec<usize>,
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCover {
    pub kind: CoverKind,
    pub parts: Vec<CoverPart>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverViolation {
    /// Total weight on the vertex differs from one.
    Coverage { vertex: usize, total: Rational },
    EmptyPart { part: usize },
    NegativeWeight { part: usize },
    VertexOutOfRange { part: usize, vertex: usize },
    NotIndependent { part: usize, edge: (usize, usize) },
    NotForest { part: usize },
}

impl std::fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoverViolation::Coverage { vertex, total } => {
                write!(f, "vertex {vertex} is covered with total weight {total}, expected 1")
            }
            CoverViolation::EmptyPart { part } => write!(f, "part {part} is empty"),
            CoverViolation::NegativeWeight { part } => write!(f, "part {part} has negative weight"),
            CoverViolation::VertexOutOfRange { part, vertex } => {
                write!(f, "part {part} contains vertex {vertex} outside the graph")
            }
            CoverViolation::NotIndependent { part, edge } => {
                write!(f, "part {part} is not independent: contains edge {{{}, {}}}", edge.0, edge.1)
            }
            CoverViolation::NotForest { part } => write!(f, "part {part} induces a cycle"),
        }
    }
}

/// Lists every vertex whose coverage differs from one and every part that
/// violates its kind. An empty list means the cover is valid.
pub fn validate_cover(g: &Graph, cover: &WeightedCover) -> Vec<CoverViolation> {
    let mut violations = Vec::new();
    let mut coverage = vec![Rational::zero(); g.n() + 1];
    for (k, part) in cover.parts.iter().enumerate() {
        let part_no = k + 1;
        if part.vertices.is_empty() {
            violations.push(CoverViolation::EmptyPart { part: part_no });
            continue;
        }
        if part.weight.is_negative() {
            violations.push(CoverViolation::NegativeWeight { part: part_no });
        }
        let mut in_range = true;
        for &v in &part.vertices {
            if v == 0 || v > g.n() {
                violations.push(CoverViolation::VertexOutOfRange { part: part_no, vertex: v });
                in_range = false;
            } else {
                coverage[v] += &part.weight;
            }
        }
        if !in_range {
            continue;
        }
        match cover.kind {
            CoverKind::Independent => {
                let members: std::collections::BTreeSet<_> = part.vertices.iter().copied().collect();
                if let Some(&edge) = g
                    .edges()
                    .iter()
                    .find(|(u, v)| members.contains(u) && members.contains(v))
                {
                    violations.push(CoverViolation::NotIndependent { part: part_no, edge });
                }
            }
            CoverKind::Forest => {
                let sub = g.induced_subgraph(&part.vertices).expect("range checked");
                if !sub.graph.classify().is_forest {
                    violations.push(CoverViolation::NotForest { part: part_no });
                }
            }
        }
    }
    for v in 1..=g.n() {
        if !coverage[v].is_one() {
            violations.push(CoverViolation::Coverage { vertex: v, total: coverage[v].clone() });
        }
    }
    violations
}

impl WeightedCover {
    pub fn total_weight(&self) -> Rational {
        rational::sum(self.parts.iter().map(|p| &p.weight))
    }

    /// Linear objective `sum_k w_k * forest_part_cost(F_k)` of this cover.
    pub fn decomposable_objective(&self, g: &Graph, c: &LipschitzProfile) -> Result<f64> {
        self.parts
            .iter()
            .map(|p| Ok(rational::to_f64(&p.weight) * forest_part_cost(g, &p.vertices, c)?))
            .sum()
    }

    fn from_masks(kind: CoverKind, parts: &[(u64, Rational)]) -> Self {
        let parts = parts
            .iter()
            .map(|(mask, w)| CoverPart { vertices: mask_vertices(*mask), weight: w.clone() })
            .collect();
        WeightedCover { kind, parts }
    }
}

/// JSON form `{"kind": ..., "parts": [{"s": [v...], "w": "p/q"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedCoverJson {
    pub kind: CoverKind,
    pub parts: Vec<CoverPartJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverPartJson {
    pub s: Vec<usize>,
    pub w: String,
}

impl From<&WeightedCover> for WeightedCoverJson {
    fn from(cover: &WeightedCover) -> Self {
        WeightedCoverJson {
            kind: cover.kind,
            parts: cover
                .parts
                .iter()
                .map(|p| CoverPartJson { s: p.vertices.clone(), w: rational::format(&p.weight) })
                .collect(),
        }
    }
}

impl TryFrom<WeightedCoverJson> for WeightedCover {
    type Error = Error;

    fn try_from(json: WeightedCoverJson) -> Result<Self> {
        let mut parts = Vec::with_capacity(json.parts.len());
        for (k, p) in json.parts.into_iter().enumerate() {
            if p.s.is_empty() {
                return input(format!("cover part {} is empty", k + 1));
            }
            let mut vertices = p.s;
            vertices.sort_unstable();
            vertices.dedup();
            parts.push(CoverPart { vertices, weight: rational::parse(&p.w)? });
        }
        Ok(WeightedCover { kind: json.kind, parts })
    }
}

fn mask_vertices(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize + 1);
        mask &= mask - 1;
    }
    out
}

fn vertices_mask(vertices: &[usize]) -> u64 {
    vertices.iter().fold(0, |m, &v| m | (1u64 << (v - 1)))
}

fn is_independent_mask(masks: &[u64], subset: u64) -> bool {
    let mut rest = subset;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        if masks[v] & subset != 0 {
            return false;
        }
        rest &= rest - 1;
    }
    true
}

fn enumeration_guard(g: &Graph) -> Result<Vec<u64>> {
    if g.n() > ENUMERATION_MAX_VERTICES {
        return Err(Error::Scale(format!(
            "exhaustive enumeration supports at most {ENUMERATION_MAX_VERTICES} vertices, graph has {}; use column generation",
            g.n()
        )));
    }
    g.neighbor_masks()
}

fn cap_exceeded(what: &str, cap: usize) -> Error {
    Error::Scale(format!(
        "more than {cap} {what}; enumeration aborted, use column generation instead"
    ))
}

/// All nonempty independent sets as bitmasks, in lexicographic order of
/// their ascending vertex lists. With `maximal_only`, only maximal ones.
pub fn independent_set_masks(g: &Graph, cap: usize, maximal_only: bool) -> Result<Vec<u64>> {
    let masks = enumeration_guard(g)?;
    let n = g.n();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut out = Vec::new();
    // stack of (current set, candidate vertices above the last one added)
    fn visit(
        current: u64,
        candidates: u64,
        masks: &[u64],
        all: u64,
        maximal_only: bool,
        cap: usize,
        out: &mut Vec<u64>,
    ) -> Result<()> {
        let mut rest = candidates;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let next = current | (1 << v);
            let blocked = masks[v] | (1u64 << v) | ((1u64 << v) - 1);
            let emit = if maximal_only {
                let mut free = all & !next;
                let mut r = next;
                while r != 0 {
                    free &= !masks[r.trailing_zeros() as usize];
                    r &= r - 1;
                }
                free == 0
            } else {
                true
            };
            if emit {
                out.push(next);
                if out.len() > cap {
                    return Err(cap_exceeded("independent sets", cap));
                }
            }
            visit(next, candidates & !blocked, masks, all, maximal_only, cap, out)?;
        }
        Ok(())
    }
    visit(0, all, &masks, all, maximal_only, cap, &mut out)?;
    Ok(out)
}

pub fn enumerate_independent_sets(g: &Graph, cap: usize, maximal_only: bool) -> Result<Vec<Vec<usize>>> {
    Ok(independent_set_masks(g, cap, maximal_only)?.into_iter().map(mask_vertices).collect())
}

/// All nonempty vertex sets inducing a forest, as bitmasks.
pub fn induced_forest_masks(g: &Graph, cap: usize) -> Result<Vec<u64>> {
    let masks = enumeration_guard(g)?;
    let n = g.n();
    let mut out = Vec::new();
    fn visit(current: u64, start: usize, n: usize, masks: &[u64], cap: usize, out: &mut Vec<u64>) -> Result<()> {
        for v in start..n {
            let next = current | (1 << v);
            if !joins_without_cycle(masks, current, v) {
                continue;
            }
            out.push(next);
            if out.len() > cap {
                return Err(cap_exceeded("induced forests", cap));
            }
            visit(next, v + 1, n, masks, cap, out)?;
        }
        Ok(())
    }
    visit(0, 0, n, &masks, cap, &mut out)?;
    Ok(out)
}

/// Whether adding vertex `v` to the forest `current` keeps it acyclic: its
/// neighbours in `current` must lie in pairwise distinct components.
fn joins_without_cycle(masks: &[u64], current: u64, v: usize) -> bool {
    let mut touching = masks[v] & current;
    while touching != 0 {
        let u = touching.trailing_zeros() as usize;
        touching &= touching - 1;
        // component of u inside `current`
        let mut comp = 1u64 << u;
        let mut frontier = comp;
        while frontier != 0 {
            let w = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = masks[w] & current & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        if comp & touching != 0 {
            return false;
        }
    }
    true
}

pub fn enumerate_induced_forests(g: &Graph, cap: usize) -> Result<Vec<Vec<usize>>> {
    Ok(induced_forest_masks(g, cap)?.into_iter().map(mask_vertices).collect())
}

/// Squared part cost `sum_{edges of G[F]} (c_i + c_j)^2 + sum_{trees T} (min_T c)^2`, exactly.
pub fn forest_part_cost_squared(g: &Graph, part: &[usize], c: &LipschitzProfile) -> Result<Rational> {
    c.check_len(g.n())?;
    let sub = g.induced_subgraph(part)?;
    let class = sub.graph.classify();
    if !class.is_forest {
        return Err(Error::Kind(format!("part {:?} does not induce a forest", sub.labels)));
    }
    let coeff = |local: usize| c.get(sub.labels[local - 1]);
    let mut total = Rational::zero();
    for &(u, v) in sub.graph.edges() {
        let s = coeff(u) + coeff(v);
        total += &s * &s;
    }
    for comp in &class.components {
        let min = comp.iter().map(|&v| coeff(v)).min().expect("components are nonempty");
        total += min * min;
    }
    Ok(total)
}

/// Square root of [`forest_part_cost_squared`].
pub fn forest_part_cost(g: &Graph, part: &[usize], c: &LipschitzProfile) -> Result<f64> {
    Ok(rational::to_f64(&forest_part_cost_squared(g, part, c)?).sqrt())
}

/// Floating-point part cost on bitmasks; the subset must induce a forest.
fn forest_mask_cost(masks: &[u64], c: &[f64], subset: u64) -> f64 {
    let mut total = 0.0;
    let mut seen = 0u64;
    let mut rest = subset;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let mut higher = masks[v] & subset & !(u64::MAX >> (63 - v));
        while higher != 0 {
            let u = higher.trailing_zeros() as usize;
            higher &= higher - 1;
            total += (c[v] + c[u]).powi(2);
        }
        if seen & (1 << v) == 0 {
            let mut min = c[v];
            let mut frontier = 1u64 << v;
            seen |= frontier;
            while frontier != 0 {
                let u = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                min = min.min(c[u]);
                let fresh = masks[u] & subset & !seen;
                seen |= fresh;
                frontier |= fresh;
            }
            total += min * min;
        }
    }
    total.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EnumeratedLp,
    ColumnGeneration,
    Greedy,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "enumerated_lp" | "enumerated" | "lp" => Ok(Strategy::EnumeratedLp),
            "column_generation" | "colgen" => Ok(Strategy::ColumnGeneration),
            "greedy" | "heuristic" => Ok(Strategy::Greedy),
            other => input(format!("unknown strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveMethod {
    EnumeratedLp,
    ColumnGeneration,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Optimality {
    Exact,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Exact(Rational),
    Real(f64),
}

impl Objective {
    pub fn to_f64(&self) -> f64 {
        match self {
            Objective::Exact(r) => rational::to_f64(r),
            Objective::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Objective::Exact(r) => Some(r),
            Objective::Real(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSolution {
    pub objective: Objective,
    pub cover: WeightedCover,
    pub method: SolveMethod,
    pub optimality: Optimality,
}

/// Optimum of the decomposable-bound program together with `D = objective^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposableSolution {
    pub solution: CoverSolution,
    /// `D(G, c)` (exact optimum or upper bound, per `solution.optimality`).
    pub d: f64,
    /// The fractional chromatic number used for the `D <= chi_f * |c|^2` check.
    pub chi_f: CoverSolution,
}

/// Removes surplus coverage part by part until every vertex is covered with
/// total weight exactly one. Dropping vertices from a part keeps it
/// independent, resp. acyclic.
fn normalize_cover(n: usize, parts: Vec<(u64, Rational)>) -> Vec<(u64, Rational)> {
    let mut parts: Vec<(u64, Rational)> = parts.into_iter().filter(|(m, w)| *m != 0 && w.is_positive()).collect();
    for v in 0..n {
        let bit = 1u64 << v;
        let total = rational::sum(parts.iter().filter(|(m, _)| m & bit != 0).map(|(_, w)| w));
        let mut surplus = total - Rational::one();
        let mut k = 0;
        while surplus.is_positive() && k < parts.len() {
            if parts[k].0 & bit != 0 {
                if parts[k].1 <= surplus {
                    surplus -= &parts[k].1;
                    parts[k].0 &= !bit;
                } else {
                    parts[k].1 -= &surplus;
                    let reduced = parts[k].0 & !bit;
                    parts.push((reduced, surplus.clone()));
                    surplus = Rational::zero();
                }
            }
            k += 1;
        }
    }
    let mut merged: BTreeMap<u64, Rational> = BTreeMap::new();
    for (mask, w) in parts {
        if mask != 0 && w.is_positive() {
            *merged.entry(mask).or_insert_with(Rational::zero) += w;
        }
    }
    let mut out: Vec<(u64, Rational)> = merged.into_iter().collect();
    out.sort_by(|a, b| {
        b.0.count_ones()
            .cmp(&a.0.count_ones())
            .then_with(|| mask_vertices(a.0).cmp(&mask_vertices(b.0)))
    });
    out
}

fn exact_weights_of<S: Scalar>(
    rows: usize,
    lp_masks: &[u64],
    solution: &LpSolution<S>,
    costs: &[S],
) -> Result<Vec<(u64, Rational)>> {
    if let Some(weights) = lp::exact_basic_weights(rows, lp_masks, &solution.basis) {
        return Ok(weights.into_iter().map(|(j, w)| (lp_masks[j], w)).collect());
    }
    // the float basis is not exactly feasible; re-solve its columns exactly
    let mut exact = CoveringLp::<Rational>::new(rows);
    let mut chosen: Vec<usize> = (0..lp_masks.len())
        .filter(|&j| lp_masks[j].count_ones() == 1)
        .collect();
    chosen.extend(solution.weights.iter().map(|(j, _)| *j));
    chosen.sort_unstable();
    chosen.dedup();
    for &j in &chosen {
        exact.add_column(lp_masks[j], rational::from_f64(costs[j].to_f64())?);
    }
    let sol = exact.solve()?;
    Ok(sol.weights.into_iter().map(|(j, w)| (exact.masks()[j], w)).collect())
}

fn family_masks(g: &Graph, kind: CoverKind) -> Result<Vec<u64>> {
    match kind {
        CoverKind::Independent => independent_set_masks(g, DEFAULT_ENUMERATION_CAP, false),
        CoverKind::Forest => induced_forest_masks(g, DEFAULT_ENUMERATION_CAP),
    }
}

/// Unit-cost covering program: `chi_f` for independent sets, `a_f` for forests.
fn unit_cover(g: &Graph, kind: CoverKind, strategy: Strategy) -> Result<CoverSolution> {
    let n = g.n();
    if n == 0 {
        return Ok(CoverSolution {
            objective: Objective::Exact(Rational::zero()),
            cover: WeightedCover { kind, parts: Vec::new() },
            method: SolveMethod::EnumeratedLp,
            optimality: Optimality::Exact,
        });
    }
    let (parts, method, optimality) = match strategy {
        Strategy::EnumeratedLp => {
            let columns = family_masks(g, kind)?;
            let parts = if n <= EXACT_LP_MAX_VERTICES {
                let mut lp = CoveringLp::<Rational>::new(n);
                for &mask in &columns {
                    lp.add_column(mask, Rational::one());
                }
                let sol = lp.solve()?;
                sol.weights.into_iter().map(|(j, w)| (columns[j], w)).collect()
            } else {
                let mut lp = CoveringLp::<f64>::new(n);
                for &mask in &columns {
                    lp.add_column(mask, 1.0);
                }
                let sol = lp.solve()?;
                exact_weights_of(n, lp.masks(), &sol, lp.costs())?
            };
            (parts, SolveMethod::EnumeratedLp, Optimality::Exact)
        }
        Strategy::ColumnGeneration => {
            let masks = g.neighbor_masks()?;
            let mut lp = CoveringLp::<f64>::new(n);
            for v in 0..n {
                lp.add_column(1 << v, 1.0);
            }
            let mut pricing = HeuristicPricing { masks: &masks, kind, cost: |_: u64| 1.0 };
            let sol = lp.solve_with(&mut pricing)?;
            let parts = exact_weights_of(n, lp.masks(), &sol, lp.costs())?;
            (parts, SolveMethod::ColumnGeneration, Optimality::UpperBound)
        }
        Strategy::Greedy => {
            let masks = g.neighbor_masks()?;
            let order: Vec<usize> = (0..n).collect();
            let parts = greedy_partition(&masks, kind, &order)
                .into_iter()
                .map(|m| (m, Rational::one()))
                .collect();
            (parts, SolveMethod::Heuristic, Optimality::UpperBound)
        }
    };
    let parts = normalize_cover(n, parts);
    let cover = WeightedCover::from_masks(kind, &parts);
    let objective = Objective::Exact(cover.total_weight());
    Ok(CoverSolution { objective, cover, method, optimality })
}

pub fn fractional_chromatic_number(g: &Graph) -> Result<CoverSolution> {
    fractional_chromatic_number_with(g, Strategy::EnumeratedLp)
}

pub fn fractional_chromatic_number_with(g: &Graph, strategy: Strategy) -> Result<CoverSolution> {
    unit_cover(g, CoverKind::Independent, strategy)
}

pub fn fractional_vertex_arboricity(g: &Graph) -> Result<CoverSolution> {
    fractional_vertex_arboricity_with(g, Strategy::EnumeratedLp)
}

pub fn fractional_vertex_arboricity_with(g: &Graph, strategy: Strategy) -> Result<CoverSolution> {
    unit_cover(g, CoverKind::Forest, strategy)
}

/// First-fit partition into parts of the given kind, visiting `order`.
fn greedy_partition(masks: &[u64], kind: CoverKind, order: &[usize]) -> Vec<u64> {
    let mut parts: Vec<u64> = Vec::new();
    for &v in order {
        let bit = 1u64 << v;
        match parts.iter_mut().find(|p| kind.admits(masks, **p | bit)) {
            Some(p) => *p |= bit,
            None => parts.push(bit),
        }
    }
    parts
}

/// Column-generation oracle: exhaustive over small parts, then local search
/// seeded by the best small parts.
struct HeuristicPricing<'a, F> {
    masks: &'a [u64],
    kind: CoverKind,
    cost: F,
}

impl<F: Fn(u64) -> f64> HeuristicPricing<'_, F> {
    fn reduced(&self, subset: u64, duals: &[f64]) -> f64 {
        let mut rc = (self.cost)(subset);
        let mut rest = subset;
        while rest != 0 {
            rc -= duals[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        rc
    }

    fn small_parts(&self, n: usize) -> Vec<u64> {
        let mut out = Vec::new();
        fn grow(cur: u64, start: usize, left: usize, n: usize, kind: CoverKind, masks: &[u64], out: &mut Vec<u64>) {
            for v in start..n {
                let next = cur | (1 << v);
                if !kind.admits(masks, next) {
                    continue;
                }
                out.push(next);
                if left > 1 {
                    grow(next, v + 1, left - 1, n, kind, masks, out);
                }
            }
        }
        grow(0, 0, PRICING_EXHAUSTIVE_SIZE, n, self.kind, self.masks, &mut out);
        out
    }

    /// Add/remove moves while the reduced cost strictly improves.
    fn improve(&self, mut subset: u64, duals: &[f64]) -> u64 {
        let n = duals.len();
        let mut best = self.reduced(subset, duals);
        loop {
            let mut moved = false;
            for v in 0..n {
                let candidate = subset ^ (1 << v);
                if candidate == 0 || !self.kind.admits(self.masks, candidate) {
                    continue;
                }
                let rc = self.reduced(candidate, duals);
                if rc < best - lp::FLOAT_TOLERANCE {
                    best = rc;
                    subset = candidate;
                    moved = true;
                }
            }
            if !moved {
                return subset;
            }
        }
    }
}

const PRICING_SEEDS: usize = 16;
const PRICING_COLUMNS: usize = 8;

impl<F: Fn(u64) -> f64 + Sync> Pricing<f64> for HeuristicPricing<'_, F> {
    fn price(&mut self, duals: &[f64]) -> Vec<(u64, f64)> {
        let n = duals.len();
        let mut scored: Vec<(f64, u64)> = self
            .small_parts(n)
            .into_par_iter()
            .map(|s| (self.reduced(s, duals), s))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut found: BTreeMap<u64, f64> = BTreeMap::new();
        for &(_, seed) in scored.iter().take(PRICING_SEEDS) {
            let improved = self.improve(seed, duals);
            let rc = self.reduced(improved, duals);
            if rc < -lp::FLOAT_TOLERANCE {
                found.insert(improved, rc);
            }
        }
        let mut cols: Vec<(u64, f64)> = found.into_iter().collect();
        cols.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        cols.truncate(PRICING_COLUMNS);
        cols.into_iter().map(|(m, _)| (m, (self.cost)(m))).collect()
    }
}

/// Minimises `sum_k w_k * forest_part_cost(F_k)` over fractional forest
/// covers; `D(G, c)` is the square of the optimum.
pub fn optimize_d(g: &Graph, c: &LipschitzProfile, strategy: Strategy) -> Result<DecomposableSolution> {
    c.check_len(g.n())?;
    let n = g.n();
    let masks = g.neighbor_masks()?;
    let cf = c.as_f64().to_vec();
    let cost = |m: u64| forest_mask_cost(&masks, &cf, m);

    let chi_strategy = match strategy {
        Strategy::EnumeratedLp => Strategy::EnumeratedLp,
        _ if n <= ENUMERATION_MAX_VERTICES => Strategy::EnumeratedLp,
        _ => Strategy::ColumnGeneration,
    };
    let chi_f = fractional_chromatic_number_with(g, chi_strategy)?;

    let (parts, method, optimality) = match strategy {
        Strategy::EnumeratedLp => {
            let columns = induced_forest_masks(g, DEFAULT_ENUMERATION_CAP)?;
            let costs: Vec<f64> = columns.par_iter().map(|&m| cost(m)).collect();
            let mut lp = CoveringLp::<f64>::new(n);
            for (&m, &k) in columns.iter().zip(&costs) {
                lp.add_column(m, k);
            }
            let sol = lp.solve()?;
            (exact_weights_of(n, lp.masks(), &sol, lp.costs())?, SolveMethod::EnumeratedLp, Optimality::Exact)
        }
        Strategy::ColumnGeneration => {
            let mut lp = CoveringLp::<f64>::new(n);
            for v in 0..n {
                lp.add_column(1 << v, cost(1 << v));
            }
            // seed with the independent cover so the result never loses to it
            for part in &chi_f.cover.parts {
                let m = vertices_mask(&part.vertices);
                if m.count_ones() > 1 {
                    lp.add_column(m, cost(m));
                }
            }
            let mut pricing = HeuristicPricing { masks: &masks, kind: CoverKind::Forest, cost };
            let sol = lp.solve_with(&mut pricing)?;
            (
                exact_weights_of(n, lp.masks(), &sol, lp.costs())?,
                SolveMethod::ColumnGeneration,
                Optimality::UpperBound,
            )
        }
        Strategy::Greedy => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| c.get(b + 1).cmp(c.get(a + 1)).then(a.cmp(&b)));
            let partition: Vec<(u64, Rational)> = greedy_partition(&masks, CoverKind::Forest, &order)
                .into_iter()
                .map(|m| (m, Rational::one()))
                .collect();
            let independent: Vec<(u64, Rational)> = chi_f
                .cover
                .parts
                .iter()
                .map(|p| (vertices_mask(&p.vertices), p.weight.clone()))
                .collect();
            let value = |parts: &[(u64, Rational)]| -> f64 {
                parts.iter().map(|(m, w)| rational::to_f64(w) * cost(*m)).sum()
            };
            let best = if value(&partition) <= value(&independent) { partition } else { independent };
            (best, SolveMethod::Heuristic, Optimality::UpperBound)
        }
    };
    let parts = normalize_cover(n, parts);
    let cover = WeightedCover::from_masks(CoverKind::Forest, &parts);
    let objective = cover.decomposable_objective(g, c)?;
    let d = objective * objective;
    let janson = chi_f.objective.to_f64() * rational::to_f64(&c.squared_norm());
    if d > janson * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::Internal(format!(
            "decomposable denominator {d} exceeds chi_f * |c|^2 = {janson}"
        )));
    }
    Ok(DecomposableSolution {
        solution: CoverSolution { objective: Objective::Real(objective), cover, method, optimality },
        d,
        chi_f,
    })
}
