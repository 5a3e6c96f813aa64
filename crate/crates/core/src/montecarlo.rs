//! Reproducible sampling of graph-dependent vectors and empirical checks of
//! the analytic tail bounds.
//!
//! Sample `j` draws its latents from a ChaCha8 stream selected by `j`, in a
//! fixed latent order, so every sample is a pure function of `(seed, j)`.
//! Work is split into fixed index chunks and merged in chunk order, which
//! makes results identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, compare_bounds, format_float, CompareFlags, Method, SkippedMethod, ValidUnder};
use crate::coupling::FiniteJoint;
use crate::covers::Strategy;
use crate::error::{input, Error, Result};
use crate::graph::{m_dependence_graph, Graph, GraphJson};
use crate::profile::LipschitzProfile;
use crate::rational::{self, Rational};

/// Confidence level of the one-sided upper limit on tail probabilities.
pub const CONFIDENCE: f64 = 0.99;
/// Failure probability allotted to the estimated mean when it is not analytic.
pub const MEAN_FAILURE: f64 = 1e-3;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const THREADS_ENV: &str = "GRAPHDEP_THREADS";
const CHUNK: u64 = 1 << 14;
/// Streams at or above this index feed the mean-estimation pass.
const MEAN_STREAM_OFFSET: u64 = 1 << 62;

/// Bounded latent distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Latent {
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Latent {
    fn validate(&self) -> Result<()> {
        match self {
            Latent::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return input(format!("uniform latent needs finite lo <= hi, got [{lo}, {hi}]"));
                }
            }
            Latent::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return input(format!("Bernoulli parameter {p} is outside [0, 1]"));
                }
            }
            Latent::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return input("discrete latent needs equally many values and probabilities");
                }
                if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|p| !(*p >= 0.0)) {
                    return input("discrete latent has a non-finite value or negative probability");
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return input(format!("discrete latent probabilities sum to {total}"));
                }
            }
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            Latent::Uniform { lo, hi } => (*lo, *hi),
            Latent::Bernoulli { .. } => (0.0, 1.0),
            Latent::Discrete { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Latent::Uniform { lo, hi } => (lo + hi) / 2.0,
            Latent::Bernoulli { p } => *p,
            Latent::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Latent::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Latent::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < *p)),
            Latent::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
        }
    }

    /// Finite support with exact probabilities, for discrete latents.
    fn finite_support(&self) -> Option<Vec<(f64, Rational)>> {
        match self {
            Latent::Uniform { lo, hi } if lo == hi => Some(vec![(*lo, rational::one())]),
            Latent::Uniform { .. } => None,
            Latent::Bernoulli { p } => {
                let p = rational::from_f64(*p).ok()?;
                Some(vec![(0.0, rational::one() - &p), (1.0, p)])
            }
            Latent::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(v, p)| Some((*v, rational::from_f64(*p).ok()?)))
                .collect(),
        }
    }
}

/// How a coordinate combines the latents feeding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Sum,
    #[serde(alias = "mean")]
    Average,
    Max,
    /// Only the coordinate's own latent.
    Own,
}

impl Combine {
    fn apply(self, inputs: &[f64]) -> f64 {
        match self {
            Combine::Sum => inputs.iter().sum(),
            Combine::Average => inputs.iter().sum::<f64>() / inputs.len() as f64,
            Combine::Max => inputs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Combine::Own => inputs[0],
        }
    }

    fn range(self, ranges: &[(f64, f64)]) -> (f64, f64) {
        let k = ranges.len() as f64;
        match self {
            Combine::Sum => (ranges.iter().map(|r| r.0).sum(), ranges.iter().map(|r| r.1).sum()),
            Combine::Average => (ranges.iter().map(|r| r.0).sum::<f64>() / k, ranges.iter().map(|r| r.1).sum::<f64>() / k),
            Combine::Max => (
                ranges.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max),
                ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
            ),
            Combine::Own => ranges[0],
        }
    }

    fn mean(self, means: &[f64]) -> Option<f64> {
        match self {
            Combine::Sum => Some(means.iter().sum()),
            Combine::Average => Some(means.iter().sum::<f64>() / means.len() as f64),
            Combine::Max => None,
            Combine::Own => Some(means[0]),
        }
    }
}

/// The Lipschitz statistic whose tail is estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    Sum,
    WeightedSum(Vec<f64>),
    Max,
}

impl Statistic {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Statistic::Sum => x.iter().sum(),
            Statistic::WeightedSum(w) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
            Statistic::Max => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Sums are forest-decomposable; the maximum is not.
    pub fn is_decomposable(&self) -> bool {
        !matches!(self, Statistic::Max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// One latent per vertex plus one per factor (a clique of the graph);
    /// `X_v` combines its own latent with those of the factors containing `v`.
    LatentGraph { graph: Graph, vertex: Vec<Latent>, factors: Vec<(Vec<usize>, Latent)>, combine: Combine },
    /// `X_i = g(Y_i, .., Y_{i+k-1})` with i.i.d. `Y_j`.
    BlockFactor { n: usize, k: usize, latent: Latent, g: Combine },
    /// Every coordinate equals one shared latent.
    Common { n: usize, latent: Latent },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    pub model: Model,
    /// Optional clamp applied to every coordinate; shrinks the declared ranges.
    pub clamp: Option<(f64, f64)>,
    pub statistic: Statistic,
}

/// Flattened form used for sampling.
#[derive(Debug, Clone)]
struct Compiled {
    latents: Vec<Latent>,
    inputs: Vec<Vec<usize>>,
    combine: Combine,
    clamp: Option<(f64, f64)>,
    ranges: Vec<(f64, f64)>,
    means: Vec<Option<f64>>,
}

impl Compiled {
    fn coordinates(&self, latent_values: &[f64], buf: &mut Vec<f64>, out: &mut Vec<f64>) {
        out.clear();
        for inputs in &self.inputs {
            buf.clear();
            buf.extend(inputs.iter().map(|&l| latent_values[l]));
            let mut x = self.combine.apply(buf);
            if let Some((lo, hi)) = self.clamp {
                x = x.clamp(lo, hi);
            }
            out.push(x);
        }
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, latent_values: &mut Vec<f64>, buf: &mut Vec<f64>, out: &mut Vec<f64>) {
        latent_values.clear();
        latent_values.extend(self.latents.iter().map(|l| l.draw(rng)));
        self.coordinates(latent_values, buf, out);
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl SamplerSpec {
    pub fn n(&self) -> usize {
        match &self.model {
            Model::LatentGraph { graph, .. } => graph.n(),
            Model::BlockFactor { n, .. } | Model::Common { n, .. } => *n,
        }
    }

    /// Dependency graph guaranteed by the construction.
    pub fn dependency_graph(&self) -> Result<Graph> {
        match &self.model {
            Model::LatentGraph { graph, .. } => Ok(graph.clone()),
            Model::BlockFactor { n, k, .. } => {
                if *k == 1 {
                    Ok(Graph::empty(*n))
                } else {
                    m_dependence_graph(*n, k - 1)
                }
            }
            Model::Common { n, .. } => Ok(Graph::complete(*n)),
        }
    }

    /// The gap `m` of an `m`-dependent model.
    pub fn m_dependence(&self) -> Option<usize> {
        match &self.model {
            Model::BlockFactor { k, .. } if *k >= 2 => Some(k - 1),
            _ => None,
        }
    }

    fn compile(&self) -> Result<Compiled> {
        let n = self.n();
        if n == 0 {
            return input("a sampler needs at least one coordinate");
        }
        let (latents, inputs, combine) = match &self.model {
            Model::LatentGraph { graph, vertex, factors, combine } => {
                if vertex.len() != graph.n() {
                    return input(format!("{} vertex latents for {} vertices", vertex.len(), graph.n()));
                }
                let mut latents = vertex.clone();
                let mut inputs: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
                for (k, (members, latent)) in factors.iter().enumerate() {
                    if members.is_empty() || members.iter().any(|&v| v == 0 || v > n) {
                        return input(format!("factor {} has a vertex outside 1..={n}", k + 1));
                    }
                    for (a, &u) in members.iter().enumerate() {
                        for &v in &members[a + 1..] {
                            if u == v || !graph.has_edge(u, v) {
                                return input(format!(
                                    "factor {} joins vertices {u} and {v}, which are not adjacent in the dependency graph",
                                    k + 1
                                ));
                            }
                        }
                    }
                    latents.push(latent.clone());
                    for &v in members {
                        inputs[v - 1].push(n + k);
                    }
                }
                (latents, inputs, *combine)
            }
            Model::BlockFactor { n, k, latent, g } => {
                if *k == 0 {
                    return input("block factors need k >= 1");
                }
                let latents = vec![latent.clone(); n + k - 1];
                let inputs = (0..*n).map(|i| (i..i + k).collect()).collect();
                (latents, inputs, *g)
            }
            Model::Common { n, latent } => (vec![latent.clone()], vec![vec![0]; *n], Combine::Own),
        };
        for l in &latents {
            l.validate()?;
        }
        if let Some((lo, hi)) = self.clamp {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return input(format!("clamp needs finite lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if let Statistic::WeightedSum(w) = &self.statistic {
            if w.len() != n || w.iter().any(|x| !x.is_finite()) {
                return input(format!("weighted sum needs {n} finite weights, got {}", w.len()));
            }
        }
        let mut ranges = Vec::with_capacity(n);
        let mut means = Vec::with_capacity(n);
        for inp in &inputs {
            let r: Vec<(f64, f64)> = inp.iter().map(|&l| latents[l].range()).collect();
            let m: Vec<f64> = inp.iter().map(|&l| latents[l].mean()).collect();
            let (mut lo, mut hi) = combine.range(&r);
            let mut mean = combine.mean(&m);
            if let Some((a, b)) = self.clamp {
                if lo < a || hi > b {
                    // clamping binds somewhere, so the plain mean no longer applies
                    mean = None;
                }
                lo = lo.clamp(a, b);
                hi = hi.clamp(a, b);
            }
            ranges.push((lo, hi));
            means.push(mean);
        }
        Ok(Compiled { latents, inputs, combine, clamp: self.clamp, ranges, means })
    }

    /// Per-coordinate `(lo, hi)` ranges implied by the latents, emit rule and clamp.
    pub fn ranges(&self) -> Result<Vec<(f64, f64)>> {
        Ok(self.compile()?.ranges)
    }

    /// Lipschitz profile of the statistic over the declared ranges.
    pub fn profile(&self) -> Result<LipschitzProfile> {
        let ranges = self.ranges()?;
        let widths: Vec<f64> = match &self.statistic {
            Statistic::Sum | Statistic::Max => ranges.iter().map(|(lo, hi)| hi - lo).collect(),
            Statistic::WeightedSum(w) => ranges.iter().zip(w).map(|((lo, hi), w)| w.abs() * (hi - lo)).collect(),
        };
        LipschitzProfile::from_f64(&widths)
    }

    /// `E f` when it follows from the latent means.
    pub fn analytic_mean(&self) -> Result<Option<f64>> {
        let compiled = self.compile()?;
        let means: Option<Vec<f64>> = compiled.means.iter().copied().collect();
        Ok(match (&self.statistic, means) {
            (Statistic::Sum, Some(m)) => Some(m.iter().sum()),
            (Statistic::WeightedSum(w), Some(m)) => Some(m.iter().zip(w).map(|(a, b)| a * b).sum()),
            _ => None,
        })
    }

    fn statistic_range(&self, compiled: &Compiled) -> f64 {
        match &self.statistic {
            Statistic::Sum => compiled.ranges.iter().map(|(lo, hi)| hi - lo).sum(),
            Statistic::WeightedSum(w) => compiled.ranges.iter().zip(w).map(|((lo, hi), w)| w.abs() * (hi - lo)).sum(),
            Statistic::Max => {
                let lo = compiled.ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
                let hi = compiled.ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            }
        }
    }

    /// Exact joint law when every latent is discrete; coordinates are
    /// relabelled to symbols `0..` in increasing order of their values.
    pub fn exact_joint(&self) -> Result<FiniteJoint> {
        let compiled = self.compile()?;
        let supports: Vec<Vec<(f64, Rational)>> = compiled
            .latents
            .iter()
            .map(|l| l.finite_support())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Input("exact joints need discrete latents".into()))?;
        let configs = supports.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()));
        if configs.is_none_or(|c| c > crate::coupling::MAX_LATENT_CONFIGURATIONS) {
            return Err(Error::Scale("too many latent configurations for an exact joint".into()));
        }
        let total = configs.expect("checked");
        let mut outcomes: Vec<(Vec<f64>, Rational)> = Vec::new();
        let (mut values, mut buf, mut x) = (Vec::new(), Vec::new(), Vec::new());
        for cfg in 0..total {
            let mut rest = cfg;
            let mut p = rational::one();
            values.clear();
            for s in &supports {
                let (v, q) = &s[rest % s.len()];
                rest /= s.len();
                values.push(*v);
                p *= q;
            }
            compiled.coordinates(&values, &mut buf, &mut x);
            outcomes.push((x.clone(), p));
        }
        let n = compiled.inputs.len();
        let mut symbols: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (x, _) in &outcomes {
            for (k, v) in x.iter().enumerate() {
                if !symbols[k].contains(v) {
                    symbols[k].push(*v);
                }
            }
        }
        for s in &mut symbols {
            s.sort_by(f64::total_cmp);
        }
        let entries: Vec<(Vec<usize>, Rational)> = outcomes
            .into_iter()
            .map(|(x, p)| {
                let idx = x
                    .iter()
                    .enumerate()
                    .map(|(k, v)| symbols[k].iter().position(|s| s == v).expect("symbol recorded"))
                    .collect();
                (idx, p)
            })
            .collect();
        FiniteJoint::from_entries(symbols.iter().map(Vec::len).collect(), &entries, Some(self.dependency_graph()?))
    }
}

/// Sampling parameters shared by every pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self { seed, samples, threads: None }
    }

    fn run<T: Send>(&self, job: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(job()),
            Some(threads) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads.max(1))
                    .build()
                    .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(job))
            }
        }
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => input(format!("{THREADS_ENV} must be a positive integer, got '{text}'")),
        },
    }
}

/// First `count` sample vectors, in index order.
pub fn sample(spec: &SamplerSpec, seed: u64, count: u64) -> Result<Vec<Vec<f64>>> {
    let compiled = spec.compile()?;
    let (mut values, mut buf) = (Vec::new(), Vec::new());
    Ok((0..count)
        .map(|j| {
            let mut rng = stream_rng(seed, j);
            let mut x = Vec::new();
            compiled.sample_into(&mut rng, &mut values, &mut buf, &mut x);
            x
        })
        .collect())
}

fn chunks(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(CHUNK)).map(|k| (k * CHUNK, ((k + 1) * CHUNK).min(total))).collect()
}

/// Estimated or analytic mean with its error radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    /// Zero when analytic; otherwise a Hoeffding radius holding with
    /// probability `1 - MEAN_FAILURE`.
    pub error: f64,
}

fn mean_of(spec: &SamplerSpec, compiled: &Compiled, config: &RunConfig) -> Result<MeanEstimate> {
    if let Some(value) = spec.analytic_mean()? {
        return Ok(MeanEstimate { value, error: 0.0 });
    }
    let total = config.samples.checked_mul(10).ok_or_else(|| Error::Scale("sample count overflows".into()))?;
    let seed = config.seed;
    let partial: Vec<f64> = config.run(|| {
        chunks(total)
            .into_par_iter()
            .map(|(start, end)| {
                let (mut values, mut buf, mut x) = (Vec::new(), Vec::new(), Vec::new());
                (start..end)
                    .map(|j| {
                        let mut rng = stream_rng(seed, MEAN_STREAM_OFFSET + j);
                        compiled.sample_into(&mut rng, &mut values, &mut buf, &mut x);
                        spec.statistic.evaluate(&x)
                    })
                    .sum::<f64>()
            })
            .collect()
    })?;
    let value = partial.iter().sum::<f64>() / total as f64;
    let width = spec.statistic_range(compiled);
    let error = width * ((2.0 / MEAN_FAILURE).ln() / (2.0 * total as f64)).sqrt();
    Ok(MeanEstimate { value, error })
}

/// One-sided Clopper-Pearson upper limit for `hits` successes in `n` trials.
pub fn clopper_pearson_upper(hits: u64, n: u64, confidence: f64) -> f64 {
    if n == 0 || hits >= n {
        return 1.0;
    }
    let alpha = 1.0 - confidence;
    if hits == 0 {
        return 1.0 - alpha.powf(1.0 / n as f64);
    }
    // P(Bin(n, p) <= hits) = 1 - I_p(hits + 1, n - hits); find where it drops to alpha
    let (a, b) = ((hits + 1) as f64, (n - hits) as f64);
    let (mut lo, mut hi) = (hits as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if statrs::function::beta::beta_reg(a, b, mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t: f64,
    pub n_samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_upper: f64,
    pub seed: u64,
}

/// Estimates `P(f - Ef >= t)` for every `t` in one sampling pass. When the
/// mean is estimated, hits are counted at `t - error` so the upper limit
/// stays conservative.
pub fn estimate_tails(spec: &SamplerSpec, t_grid: &[f64], config: &RunConfig) -> Result<(MeanEstimate, Vec<TailEstimate>)> {
    if config.samples == 0 {
        return input("the sample count must be positive");
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return input("thresholds must be finite and nonnegative");
    }
    let compiled = spec.compile()?;
    let mean = mean_of(spec, &compiled, config)?;
    let thresholds: Vec<f64> = t_grid.iter().map(|t| mean.value + t - mean.error).collect();
    let seed = config.seed;
    let per_chunk: Vec<Vec<u64>> = config.run(|| {
        chunks(config.samples)
            .into_par_iter()
            .map(|(start, end)| {
                let mut hits = vec![0u64; thresholds.len()];
                let (mut values, mut buf, mut x) = (Vec::new(), Vec::new(), Vec::new());
                for j in start..end {
                    let mut rng = stream_rng(seed, j);
                    compiled.sample_into(&mut rng, &mut values, &mut buf, &mut x);
                    let f = spec.statistic.evaluate(&x);
                    for (h, th) in hits.iter_mut().zip(&thresholds) {
                        *h += u64::from(f >= *th);
                    }
                }
                hits
            })
            .collect()
    })?;
    let estimates = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let hits: u64 = per_chunk.iter().map(|h| h[k]).sum();
            TailEstimate {
                t,
                n_samples: config.samples,
                hits,
                p_hat: hits as f64 / config.samples as f64,
                ci_upper: clopper_pearson_upper(hits, config.samples, CONFIDENCE),
                seed,
            }
        })
        .collect();
    Ok((mean, estimates))
}

pub fn estimate_tail(spec: &SamplerSpec, t: f64, config: &RunConfig) -> Result<TailEstimate> {
    let (_, mut out) = estimate_tails(spec, &[t], config)?;
    Ok(out.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub method: Method,
    pub t: f64,
    pub denominator: f64,
    pub bound: f64,
    pub p_hat: f64,
    pub ci_upper: f64,
    pub verdict: Verdict,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub valid_under: ValidUnder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub rows: Vec<VerdictRow>,
    pub skipped: Vec<SkippedMethod>,
    pub mean: MeanEstimate,
}

pub const CSV_HEADER: [&str; 10] =
    ["method", "t", "denominator", "bound", "p_hat", "ci_upper", "verdict", "seed", "N", "valid_under"];

impl Validation {
    /// Failures among methods whose assumptions the model satisfies.
    pub fn defects(&self) -> impl Iterator<Item = &VerdictRow> {
        self.rows
            .iter()
            .filter(|r| r.verdict == Verdict::Fail && r.valid_under == ValidUnder::Dependence)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                format_float(r.t),
                format_float(r.denominator),
                format_float(r.bound),
                format_float(r.p_hat),
                format_float(r.ci_upper),
                bounds::enum_name(&r.verdict),
                r.seed.to_string(),
                r.n.to_string(),
                bounds::enum_name(&r.valid_under),
            ])
            .map_err(io)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Internal(e.to_string()))?)
            .map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean": self.mean.value,
            "mean_error": self.mean.error,
            "rows": self.rows,
            "skipped": self.skipped,
        })
    }
}

/// Thresholds where the tightest valid bound falls geometrically from 0.8 to 1e-3.
pub fn default_t_grid(denominator: f64, points: usize) -> Vec<f64> {
    let (hi, lo) = (0.8f64, 1e-3f64);
    (0..points)
        .map(|k| {
            let frac = if points > 1 { k as f64 / (points - 1) as f64 } else { 0.0 };
            let target = hi * (lo / hi).powf(frac);
            (denominator * (1.0 / target).ln() / 2.0).sqrt()
        })
        .collect()
}

/// Joins every applicable bound with the empirical tails. McDiarmid's bound
/// is always included as a reference line and labelled independence-only
/// when the dependency graph has edges.
pub fn validate_bounds(
    spec: &SamplerSpec,
    t_grid: Option<&[f64]>,
    config: &RunConfig,
    strategy: Strategy,
) -> Result<Validation> {
    let g = spec.dependency_graph()?;
    let c = spec.profile()?;
    if c.is_all_zero() {
        return input("the statistic is constant over the declared ranges");
    }
    let flags = CompareFlags {
        assume_independent: true,
        decomposable: spec.statistic.is_decomposable(),
        m_dependence: spec.m_dependence(),
        blocks: None,
        strategy,
        methods: None,
    };
    let comparison = config.run(|| compare_bounds(&g, &c, 1.0, &flags))??;
    let grid: Vec<f64> = match t_grid {
        Some(t) => t.to_vec(),
        None => {
            let tightest = comparison
                .reports
                .iter()
                .filter(|r| r.valid_under == ValidUnder::Dependence)
                .map(|r| r.denominator)
                .fold(f64::INFINITY, f64::min);
            if !tightest.is_finite() {
                return input("no bound applies to this model; pass an explicit t grid");
            }
            default_t_grid(tightest, 10)
        }
    };
    if grid.iter().any(|t| !(*t > 0.0)) {
        return input("every threshold in the t grid must be positive");
    }
    let (mean, tails) = estimate_tails(spec, &grid, config)?;
    let mut rows = Vec::new();
    for report in &comparison.reports {
        for tail in &tails {
            let bound = bounds::tail_bound(report.denominator, tail.t)?;
            rows.push(VerdictRow {
                method: report.method,
                t: tail.t,
                denominator: report.denominator,
                bound,
                p_hat: tail.p_hat,
                ci_upper: tail.ci_upper,
                verdict: if tail.ci_upper <= bound { Verdict::Pass } else { Verdict::Fail },
                seed: config.seed,
                n: config.samples,
                valid_under: report.valid_under,
            });
        }
    }
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.t.total_cmp(&b.t)));
    Ok(Validation { rows, skipped: comparison.skipped, mean })
}

/// Serialized sampler specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SamplerSpecJson {
    LatentGraph {
        graph: GraphJson,
        /// One latent for every vertex, or a list with one per vertex.
        #[serde(default)]
        vertex_latent: Option<LatentJson>,
        #[serde(default)]
        vertex_latents: Option<Vec<LatentJson>>,
        /// Explicit clique factors; when absent every edge gets `edge_latent`.
        #[serde(default)]
        factors: Option<Vec<FactorJson>>,
        #[serde(default)]
        edge_latent: Option<LatentJson>,
        #[serde(default = "default_combine")]
        emit: Combine,
        #[serde(default)]
        clamp: Option<[f64; 2]>,
        #[serde(default)]
        statistic: StatisticJson,
    },
    BlockFactor {
        n: usize,
        k: usize,
        latent: LatentJson,
        #[serde(default = "default_combine")]
        g: Combine,
        #[serde(default)]
        clamp: Option<[f64; 2]>,
        #[serde(default)]
        statistic: StatisticJson,
    },
    Common {
        n: usize,
        latent: LatentJson,
        #[serde(default)]
        statistic: StatisticJson,
    },
}

fn default_combine() -> Combine {
    Combine::Average
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorJson {
    pub vertices: Vec<usize>,
    pub latent: LatentJson,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LatentJson {
    pub dist: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl LatentJson {
    pub fn into_latent(self) -> Result<Latent> {
        let latent = match self.dist.to_ascii_lowercase().as_str() {
            "uniform" => Latent::Uniform { lo: self.lo.unwrap_or(0.0), hi: self.hi.unwrap_or(1.0) },
            "bernoulli" => Latent::Bernoulli { p: self.p.unwrap_or(0.5) },
            "discrete" => match (self.values, self.probs) {
                (Some(values), Some(probs)) => Latent::Discrete { values, probs },
                (Some(values), None) => {
                    let k = values.len() as f64;
                    let probs = vec![1.0 / k; values.len()];
                    Latent::Discrete { values, probs }
                }
                _ => return input("discrete latent needs 'values'"),
            },
            "constant" => {
                let v = self.lo.or(self.values.and_then(|v| v.first().copied())).unwrap_or(0.0);
                Latent::Uniform { lo: v, hi: v }
            }
            "normal" | "gaussian" | "exponential" | "cauchy" | "poisson" | "geometric" | "laplace" => {
                return input(format!(
                    "latent distribution '{}' is unbounded; bounded differences need bounded coordinates (use uniform, bernoulli or discrete, or add a clamp to a bounded latent)",
                    self.dist
                ))
            }
            other => return input(format!("unknown latent distribution '{other}'")),
        };
        latent.validate()?;
        Ok(latent)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatisticJson {
    #[default]
    #[serde(skip)]
    Default,
    Named(String),
    Weighted { weighted_sum: Vec<f64> },
}

impl StatisticJson {
    fn resolve(self) -> Result<Statistic> {
        match self {
            StatisticJson::Default => Ok(Statistic::Sum),
            StatisticJson::Named(name) => match name.to_ascii_lowercase().as_str() {
                "sum" => Ok(Statistic::Sum),
                "max" => Ok(Statistic::Max),
                other => input(format!("unknown statistic '{other}'")),
            },
            StatisticJson::Weighted { weighted_sum } => Ok(Statistic::WeightedSum(weighted_sum)),
        }
    }
}

fn clamp_of(c: Option<[f64; 2]>) -> Option<(f64, f64)> {
    c.map(|[lo, hi]| (lo, hi))
}

impl SamplerSpecJson {
    pub fn resolve(self) -> Result<SamplerSpec> {
        let spec = match self {
            SamplerSpecJson::LatentGraph { graph, vertex_latent, vertex_latents, factors, edge_latent, emit, clamp, statistic } => {
                let graph = graph.into_graph()?;
                let n = graph.n();
                let vertex = match (vertex_latent, vertex_latents) {
                    (Some(_), Some(_)) => return input("give either 'vertex_latent' or 'vertex_latents', not both"),
                    (Some(one), None) => vec![one.into_latent()?; n],
                    (None, Some(list)) => list.into_iter().map(LatentJson::into_latent).collect::<Result<_>>()?,
                    (None, None) => vec![Latent::Uniform { lo: 0.0, hi: 1.0 }; n],
                };
                let factors = match (factors, edge_latent) {
                    (Some(f), None) => f
                        .into_iter()
                        .map(|f| Ok((f.vertices, f.latent.into_latent()?)))
                        .collect::<Result<Vec<_>>>()?,
                    (None, Some(l)) => {
                        let l = l.into_latent()?;
                        graph.edges().iter().map(|&(u, v)| (vec![u, v], l.clone())).collect()
                    }
                    (None, None) => Vec::new(),
                    (Some(_), Some(_)) => return input("give either 'factors' or 'edge_latent', not both"),
                };
                SamplerSpec {
                    model: Model::LatentGraph { graph, vertex, factors, combine: emit },
                    clamp: clamp_of(clamp),
                    statistic: statistic.resolve()?,
                }
            }
            SamplerSpecJson::BlockFactor { n, k, latent, g, clamp, statistic } => SamplerSpec {
                model: Model::BlockFactor { n, k, latent: latent.into_latent()?, g },
                clamp: clamp_of(clamp),
                statistic: statistic.resolve()?,
            },
            SamplerSpecJson::Common { n, latent, statistic } => SamplerSpec {
                model: Model::Common { n, latent: latent.into_latent()? },
                clamp: None,
                statistic: statistic.resolve()?,
            },
        };
        spec.compile()?;
        Ok(spec)
    }
}

pub fn parse_sampler_spec(text: &str) -> Result<SamplerSpec> {
    let json: SamplerSpecJson = serde_json::from_str(text)
        .map_err(|e| Error::Input(format!("malformed sampler spec at line {} column {}: {e}", e.line(), e.column())))?;
    json.resolve()
}
