//! Tail-bound denominators `Δ` for `P(f - Ef >= t) <= exp(-2 t^2 / Δ)`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::covers::{self, CoverSolution, Optimality, Strategy, WeightedCover, WeightedCoverJson};
use crate::error::{input, Error, Result};
use crate::graph::{block_partition, BlockPartition, Graph};
use crate::profile::LipschitzProfile;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Mcdiarmid,
    Janson,
    Tree,
    Forest,
    Decomposable,
    MDependent,
    MDependentPaulin,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Mcdiarmid,
        Method::Janson,
        Method::Tree,
        Method::Forest,
        Method::Decomposable,
        Method::MDependent,
        Method::MDependentPaulin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mcdiarmid => "MCDIARMID",
            Method::Janson => "JANSON",
            Method::Tree => "TREE",
            Method::Forest => "FOREST",
            Method::Decomposable => "DECOMPOSABLE",
            Method::MDependent => "M_DEPENDENT",
            Method::MDependentPaulin => "M_DEPENDENT_PAULIN",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .or(match key.as_str() {
                "M_DEP" | "MDEPENDENT" => Some(Method::MDependent),
                "PAULIN" => Some(Method::MDependentPaulin),
                _ => None,
            })
            .ok_or_else(|| Error::Input(format!("unknown bound method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidUnder {
    Dependence,
    IndependenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BlockVariant {
    MinBlock,
    Paulin,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Cover(WeightedCover),
    Blocks(BlockPartition),
    /// Trees of a forest dependency graph, as vertex lists.
    Trees(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub method: Method,
    pub denominator: f64,
    pub denominator_exact: Option<Rational>,
    pub t: f64,
    pub bound: f64,
    pub valid_under: ValidUnder,
    /// `UpperBound` when the denominator comes from a heuristic cover.
    pub optimality: Optimality,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedMethod {
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Applicable methods, sorted by bound ascending.
    pub reports: Vec<BoundReport>,
    pub skipped: Vec<SkippedMethod>,
}

/// `||c||^2`. Zero only for an all-zero profile, which is degenerate.
pub fn mcdiarmid_denominator(c: &LipschitzProfile) -> Rational {
    c.squared_norm()
}

/// `chi_f(G) * ||c||^2` with the fractional colouring as witness.
pub fn janson_denominator(g: &Graph, c: &LipschitzProfile) -> Result<(Rational, CoverSolution)> {
    c.check_len(g.n())?;
    let chi = covers::fractional_chromatic_number(g)?;
    let value = chi
        .objective
        .exact()
        .ok_or_else(|| Error::Internal("fractional chromatic number is not exact".into()))?
        * c.squared_norm();
    Ok((value, chi))
}

/// `sum_trees (min_T c)^2 + sum_edges (c_i + c_j)^2` for a forest.
pub fn forest_denominator(g: &Graph, c: &LipschitzProfile) -> Result<Rational> {
    c.check_len(g.n())?;
    let class = g.classify();
    if !class.is_forest {
        return Err(Error::Kind(
            "the dependency graph has a cycle; use the DECOMPOSABLE bound instead".into(),
        ));
    }
    let mut total = Rational::zero();
    for comp in &class.components {
        let min = c.min_over(comp).expect("components are nonempty");
        total += min * min;
    }
    for &(u, v) in g.edges() {
        let s = c.get(u) + c.get(v);
        total += &s * &s;
    }
    Ok(total)
}

/// `c_min^2 + sum_edges (c_i + c_j)^2` for a tree.
pub fn tree_denominator(g: &Graph, c: &LipschitzProfile) -> Result<Rational> {
    let class = g.classify();
    if !class.is_forest || class.tree_count != 1 {
        return Err(Error::Kind("the dependency graph is not a tree".into()));
    }
    forest_denominator(g, c)
}

pub fn decomposable_denominator(
    g: &Graph,
    c: &LipschitzProfile,
    strategy: Strategy,
) -> Result<covers::DecomposableSolution> {
    covers::optimize_d(g, c, strategy)
}

/// Block-sum denominator for `m`-dependent sequences with blocks of `m`
/// consecutive coordinates.
pub fn m_dependent_denominator(
    n: usize,
    m: usize,
    c: &LipschitzProfile,
    variant: BlockVariant,
) -> Result<(Rational, BlockPartition)> {
    let blocks = block_partition(n, m)?;
    let value = block_denominator(&blocks, c, variant)?;
    Ok((value, blocks))
}

/// The block bound for an arbitrary grouping into consecutive runs: the
/// blocks form a path, so the tree denominator applies with block sums as
/// coefficients.
pub fn block_denominator(blocks: &BlockPartition, c: &LipschitzProfile, variant: BlockVariant) -> Result<Rational> {
    c.check_len(blocks.n)?;
    let sums: Vec<Rational> = blocks
        .blocks
        .iter()
        .map(|b| rational::sum(b.iter().map(|&v| c.get(v))))
        .collect();
    let mut total = Rational::zero();
    for pair in sums.windows(2) {
        let s = &pair[0] + &pair[1];
        total += &s * &s;
    }
    let tail = match variant {
        BlockVariant::MinBlock => sums.iter().min().expect("at least one block").clone(),
        BlockVariant::Paulin => sums.last().expect("at least one block").clone(),
    };
    total += &tail * &tail;
    Ok(total)
}

/// `exp(-2 t^2 / denominator)`, at most one.
pub fn tail_bound(denominator: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return input(format!("deviation t must be positive and finite, got {t}"));
    }
    if denominator.is_nan() || denominator < 0.0 {
        return input(format!("denominator must be nonnegative, got {denominator}"));
    }
    if denominator == 0.0 {
        return input("degenerate denominator 0: every Lipschitz coefficient is zero");
    }
    Ok((-2.0 * t * t / denominator).exp().min(1.0))
}

/// Options for [`compare_bounds`].
#[derive(Debug, Clone)]
pub struct CompareFlags {
    /// Include McDiarmid's bound as a reference line.
    pub assume_independent: bool,
    /// The statistic is a sum (more generally forest-decomposable), which
    /// the JANSON and DECOMPOSABLE bounds require.
    pub decomposable: bool,
    /// Gap `m` of an assumed `m`-dependence; enables the block bounds.
    pub m_dependence: Option<usize>,
    pub blocks: Option<BlockPartition>,
    pub strategy: Strategy,
    /// Restrict to these methods; `None` means all.
    pub methods: Option<Vec<Method>>,
}

impl Default for CompareFlags {
    fn default() -> Self {
        Self {
            assume_independent: false,
            decomposable: true,
            m_dependence: None,
            blocks: None,
            strategy: Strategy::EnumeratedLp,
            methods: None,
        }
    }
}

struct Denominator {
    value: f64,
    exact: Option<Rational>,
    optimality: Optimality,
    valid_under: ValidUnder,
    witness: Option<Witness>,
}

impl Denominator {
    fn exact(value: Rational, witness: Option<Witness>) -> Self {
        Denominator {
            value: rational::to_f64(&value),
            exact: Some(value),
            optimality: Optimality::Exact,
            valid_under: ValidUnder::Dependence,
            witness,
        }
    }
}

fn skip(method: Method, reason: impl Into<String>) -> Result<Option<Denominator>, SkippedMethod> {
    Err(SkippedMethod { method, reason: reason.into() })
}

fn evaluate(method: Method, g: &Graph, c: &LipschitzProfile, flags: &CompareFlags) -> Result<Option<Denominator>, SkippedMethod> {
    let fail = |e: Error| SkippedMethod { method, reason: e.to_string() };
    match method {
        Method::Mcdiarmid => {
            if !flags.assume_independent {
                return skip(method, "requires independent coordinates; pass the independence flag to show it as a reference line");
            }
            let mut d = Denominator::exact(mcdiarmid_denominator(c), None);
            if g.edge_count() > 0 {
                d.valid_under = ValidUnder::IndependenceOnly;
            }
            Ok(Some(d))
        }
        Method::Janson => {
            if !flags.decomposable {
                return skip(method, "requires a sum (forest-decomposable) statistic");
            }
            let (value, chi) = janson_denominator(g, c).map_err(fail)?;
            Ok(Some(Denominator::exact(value, Some(Witness::Cover(chi.cover)))))
        }
        Method::Tree => {
            let value = tree_denominator(g, c).map_err(fail)?;
            Ok(Some(Denominator::exact(value, Some(Witness::Trees(g.classify().components)))))
        }
        Method::Forest => {
            let value = forest_denominator(g, c).map_err(fail)?;
            Ok(Some(Denominator::exact(value, Some(Witness::Trees(g.classify().components)))))
        }
        Method::Decomposable => {
            if !flags.decomposable {
                return skip(method, "requires a forest-decomposable statistic");
            }
            let sol = decomposable_denominator(g, c, flags.strategy).map_err(fail)?;
            Ok(Some(Denominator {
                value: sol.d,
                exact: None,
                optimality: sol.solution.optimality,
                valid_under: ValidUnder::Dependence,
                witness: Some(Witness::Cover(sol.solution.cover)),
            }))
        }
        Method::MDependent | Method::MDependentPaulin => {
            let Some(m) = flags.m_dependence else {
                return skip(method, "requires an m-dependence gap");
            };
            if let Some(&(u, v)) = g.edges().iter().find(|(u, v)| v - u > m) {
                return skip(method, format!("edge {{{u}, {v}}} spans more than m = {m} positions"));
            }
            let variant = if method == Method::MDependent { BlockVariant::MinBlock } else { BlockVariant::Paulin };
            let blocks = match &flags.blocks {
                Some(b) => b.clone(),
                None => block_partition(g.n(), m).map_err(fail)?,
            };
            if blocks.blocks.iter().any(|b| b.len() > m) {
                return skip(method, format!("a block is longer than m = {m}"));
            }
            let value = block_denominator(&blocks, c, variant).map_err(fail)?;
            Ok(Some(Denominator::exact(value, Some(Witness::Blocks(blocks)))))
        }
    }
}

/// Evaluates every requested method whose preconditions hold. Inapplicable
/// methods are reported with the reason instead of being applied.
pub fn compare_bounds(g: &Graph, c: &LipschitzProfile, t: f64, flags: &CompareFlags) -> Result<Comparison> {
    c.check_len(g.n())?;
    if !(t > 0.0) || !t.is_finite() {
        return input(format!("deviation t must be positive and finite, got {t}"));
    }
    let methods: Vec<Method> = flags.methods.clone().unwrap_or_else(|| Method::ALL.to_vec());
    let outcomes: Vec<_> = {
        use rayon::prelude::*;
        methods.par_iter().map(|&m| (m, evaluate(m, g, c, flags))).collect()
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (method, outcome) in outcomes {
        match outcome {
            Ok(Some(d)) => match tail_bound(d.value, t) {
                Ok(bound) => reports.push(BoundReport {
                    method,
                    denominator: d.value,
                    denominator_exact: d.exact,
                    t,
                    bound,
                    valid_under: d.valid_under,
                    optimality: d.optimality,
                    witness: d.witness,
                }),
                Err(e) => skipped.push(SkippedMethod { method, reason: e.to_string() }),
            },
            Ok(None) => {}
            Err(s) => skipped.push(s),
        }
    }
    reports.sort_by(|a, b| a.bound.total_cmp(&b.bound).then(a.method.cmp(&b.method)));
    Ok(Comparison { reports, skipped })
}

/// JSON form of a [`BoundReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReportJson {
    pub method: Method,
    pub denominator: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub denominator_exact: Option<String>,
    pub t: f64,
    pub bound: f64,
    pub valid_under: ValidUnder,
    pub optimality: Optimality,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<serde_json::Value>,
}

impl From<&BoundReport> for BoundReportJson {
    fn from(r: &BoundReport) -> Self {
        let witness = r.witness.as_ref().map(|w| match w {
            Witness::Cover(cover) => serde_json::json!({ "cover": WeightedCoverJson::from(cover) }),
            Witness::Blocks(b) => serde_json::json!({ "blocks": b.blocks }),
            Witness::Trees(trees) => serde_json::json!({ "trees": trees }),
        });
        BoundReportJson {
            method: r.method,
            denominator: r.denominator,
            denominator_exact: r.denominator_exact.as_ref().map(rational::format),
            t: r.t,
            bound: r.bound,
            valid_under: r.valid_under,
            optimality: r.optimality,
            witness,
        }
    }
}

pub const CSV_HEADER: [&str; 8] =
    ["method", "denominator", "denominator_exact", "t", "bound", "valid_under", "optimality", "status"];

impl Comparison {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "reports": self.reports.iter().map(BoundReportJson::from).collect::<Vec<_>>(),
            "skipped": self.skipped,
        })
    }

    /// CSV rows in [`CSV_HEADER`] order; skipped methods carry their reason
    /// in the status column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.reports {
            let json = BoundReportJson::from(r);
            w.write_record([
                r.method.name().to_string(),
                format_float(r.denominator),
                json.denominator_exact.unwrap_or_default(),
                format_float(r.t),
                format_float(r.bound),
                enum_name(&r.valid_under),
                enum_name(&r.optimality),
                "ok".to_string(),
            ])
            .map_err(io)?;
        }
        for s in &self.skipped {
            w.write_record([
                s.method.name().to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("skipped: {}", s.reason),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
            .map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Shortest representation that parses back to the same double.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn enum_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}
