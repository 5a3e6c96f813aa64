//! Exact finite-probability engine: dependency checks, conditional laws and
//! the step-`i` coupling of the vertex-exposure martingale on a forest.
//!
//! Every probability here is an exact rational. Joint laws are stored densely
//! with the first coordinate as the most significant digit, so fixing a
//! prefix of coordinates selects a contiguous slice of the table.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{ExposureOrder, Graph, GraphJson};
use crate::profile::{json_number, LipschitzProfile};
use crate::rational::{self, Rational};

pub const MAX_COORDINATES: usize = 8;
pub const MAX_ALPHABET: usize = 6;
/// Upper limit on latent configurations summed by [`build_tree_joint`].
pub const MAX_LATENT_CONFIGURATIONS: usize = 1_000_000;

/// Exact joint law of `(X_1, .., X_n)` over `prod_i {0, .., sizes[i]-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJoint {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    pmf: Vec<Rational>,
    dependency: Option<Graph>,
}

fn strides_of(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}

fn check_space(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return input("a joint law needs at least one coordinate");
    }
    if sizes.len() > MAX_COORDINATES {
        return Err(Error::Scale(format!(
            "exact verification supports at most {MAX_COORDINATES} coordinates, got {}",
            sizes.len()
        )));
    }
    if let Some((i, &s)) = sizes.iter().enumerate().find(|(_, &s)| s == 0 || s > MAX_ALPHABET) {
        if s == 0 {
            return input(format!("coordinate {} has an empty alphabet", i + 1));
        }
        return Err(Error::Scale(format!(
            "coordinate {} has {s} symbols; exact verification supports at most {MAX_ALPHABET}",
            i + 1
        )));
    }
    Ok(())
}

impl FiniteJoint {
    pub fn new(sizes: Vec<usize>, pmf: Vec<Rational>, dependency: Option<Graph>) -> Result<Self> {
        check_space(&sizes)?;
        let states: usize = sizes.iter().product();
        if pmf.len() != states {
            return input(format!("pmf has {} entries, expected {states}", pmf.len()));
        }
        if pmf.iter().any(Signed::is_negative) {
            return input("pmf has a negative probability");
        }
        let total = rational::sum(&pmf);
        if !total.is_one() {
            return input(format!("pmf sums to {total}, not 1"));
        }
        if let Some(g) = &dependency {
            if g.n() != sizes.len() {
                return input(format!(
                    "dependency graph has {} vertices but the joint has {} coordinates",
                    g.n(),
                    sizes.len()
                ));
            }
        }
        let strides = strides_of(&sizes);
        Ok(Self { sizes, strides, pmf, dependency })
    }

    /// Builds from `(assignment, probability)` pairs; repeated assignments add up.
    pub fn from_entries(sizes: Vec<usize>, entries: &[(Vec<usize>, Rational)], dependency: Option<Graph>) -> Result<Self> {
        check_space(&sizes)?;
        let strides = strides_of(&sizes);
        let mut pmf = vec![Rational::zero(); sizes.iter().product()];
        for (x, p) in entries {
            if x.len() != sizes.len() || x.iter().zip(&sizes).any(|(v, s)| v >= s) {
                return input(format!("assignment {x:?} is outside the declared spaces {sizes:?}"));
            }
            let idx: usize = x.iter().zip(&strides).map(|(v, s)| v * s).sum();
            pmf[idx] += p;
        }
        Self::new(sizes, pmf, dependency)
    }

    /// Independent coordinates with the given marginals.
    pub fn product(marginals: &[Vec<Rational>]) -> Result<Self> {
        let sizes: Vec<usize> = marginals.iter().map(Vec::len).collect();
        check_space(&sizes)?;
        let states: usize = sizes.iter().product();
        let strides = strides_of(&sizes);
        let pmf = (0..states)
            .map(|idx| {
                marginals
                    .iter()
                    .enumerate()
                    .fold(Rational::one(), |acc, (k, m)| acc * &m[idx / strides[k] % sizes[k]])
            })
            .collect();
        Self::new(sizes, pmf, Some(Graph::empty(marginals.len())))
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn pmf(&self) -> &[Rational] {
        &self.pmf
    }

    pub fn dependency(&self) -> Option<&Graph> {
        self.dependency.as_ref()
    }

    pub fn with_dependency(mut self, g: Graph) -> Result<Self> {
        if g.n() != self.n() {
            return input("dependency graph size does not match the joint");
        }
        self.dependency = Some(g);
        Ok(self)
    }

    pub fn states(&self) -> usize {
        self.pmf.len()
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.sizes).map(|(s, n)| idx / s % n).collect()
    }

    pub fn encode(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.strides).map(|(v, s)| v * s).sum()
    }

    pub fn prob(&self, x: &[usize]) -> &Rational {
        &self.pmf[self.encode(x)]
    }

    /// Law of the 0-based coordinates `coords`, densely indexed in that order.
    pub fn marginal(&self, coords: &[usize]) -> Vec<Rational> {
        let sub_sizes: Vec<usize> = coords.iter().map(|&c| self.sizes[c]).collect();
        let sub_strides = strides_of(&sub_sizes);
        let mut out = vec![Rational::zero(); sub_sizes.iter().product()];
        for (idx, p) in self.pmf.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let j: usize = coords
                .iter()
                .zip(&sub_strides)
                .map(|(&c, s)| (idx / self.strides[c] % self.sizes[c]) * s)
                .sum();
            out[j] += p;
        }
        out
    }

    /// Joint of the remaining coordinates (ascending) given `fixed`
    /// (1-based coordinate, value) pairs.
    pub fn conditional(&self, fixed: &[(usize, usize)]) -> Result<FiniteJoint> {
        let mut is_fixed = vec![None; self.n()];
        for &(coord, value) in fixed {
            if coord == 0 || coord > self.n() || value >= self.sizes[coord - 1] {
                return input(format!("cannot fix coordinate {coord} to {value}"));
            }
            is_fixed[coord - 1] = Some(value);
        }
        let free: Vec<usize> = (0..self.n()).filter(|&k| is_fixed[k].is_none()).collect();
        if free.is_empty() {
            // conditioning on every coordinate: a point mass, on a one-symbol space
            let x: Vec<usize> = is_fixed.iter().map(|v| v.expect("all fixed")).collect();
            if self.prob(&x).is_zero() {
                return Err(Error::Precondition("conditioning on a null event".into()));
            }
            return FiniteJoint::new(vec![1], vec![Rational::one()], None);
        }
        let sub_sizes: Vec<usize> = free.iter().map(|&k| self.sizes[k]).collect();
        let sub_strides = strides_of(&sub_sizes);
        let mut pmf = vec![Rational::zero(); sub_sizes.iter().product()];
        for (idx, p) in self.pmf.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let x = self.decode(idx);
            if is_fixed.iter().zip(&x).any(|(f, v)| f.is_some_and(|f| f != *v)) {
                continue;
            }
            let j: usize = free.iter().zip(&sub_strides).map(|(&k, s)| x[k] * s).sum();
            pmf[j] += p;
        }
        let mass = rational::sum(&pmf);
        if mass.is_zero() {
            return Err(Error::Precondition("conditioning on a null event".into()));
        }
        for p in &mut pmf {
            *p /= &mass;
        }
        FiniteJoint::new(sub_sizes, pmf, None)
    }

    /// Reorders coordinates: new coordinate `k` is old 1-based coordinate `labels[k]`.
    pub fn permuted(&self, labels: &[usize]) -> FiniteJoint {
        let sizes: Vec<usize> = labels.iter().map(|&v| self.sizes[v - 1]).collect();
        let strides = strides_of(&sizes);
        let mut pmf = vec![Rational::zero(); self.pmf.len()];
        for (idx, p) in self.pmf.iter().enumerate() {
            let x = self.decode(idx);
            let j: usize = labels.iter().zip(&strides).map(|(&v, s)| x[v - 1] * s).sum();
            pmf[j] = p.clone();
        }
        FiniteJoint { sizes, strides, pmf, dependency: None }
    }
}

/// Total-variation distance between two laws on the same index set.
fn total_variation(a: &[Rational], b: &[Rational]) -> Rational {
    let sum = a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + (x - y).abs());
    sum / Rational::from_integer(2.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyCheck {
    /// Largest TV gap between the joint of `S ∪ T` and the product of marginals.
    pub max_deviation: Rational,
    /// A pair `(S, T)` attaining the gap, when it is positive.
    pub worst: Option<(Vec<usize>, Vec<usize>)>,
}

impl DependencyCheck {
    pub fn is_ok(&self) -> bool {
        self.max_deviation.is_zero()
    }
}

/// Checks that the joint is `G`-dependent: for disjoint non-adjacent `S`, `T`
/// the coordinates in `S` and `T` are independent. Only maximal `T = V \ N+(S)`
/// are visited; independence of the maximal pair implies it for subsets and
/// the TV gap can only shrink under marginalisation.
pub fn verify_dependency(joint: &FiniteJoint, g: &Graph) -> Result<DependencyCheck> {
    if g.n() != joint.n() {
        return input(format!(
            "graph has {} vertices but the joint has {} coordinates",
            g.n(),
            joint.n()
        ));
    }
    let n = joint.n();
    let masks = g.neighbor_masks()?;
    let all = (1u64 << n) - 1;
    let mut best = DependencyCheck { max_deviation: Rational::zero(), worst: None };
    for s in 1..=all {
        let mut closed = s;
        let mut rest = s;
        while rest != 0 {
            closed |= masks[rest.trailing_zeros() as usize];
            rest &= rest - 1;
        }
        let t = all & !closed;
        if t == 0 {
            continue;
        }
        let s_coords: Vec<usize> = (0..n).filter(|b| s >> b & 1 == 1).collect();
        let t_coords: Vec<usize> = (0..n).filter(|b| t >> b & 1 == 1).collect();
        let both: Vec<usize> = s_coords.iter().chain(&t_coords).copied().collect();
        let joint_st = joint.marginal(&both);
        let ms = joint.marginal(&s_coords);
        let mt = joint.marginal(&t_coords);
        let product: Vec<Rational> = ms.iter().flat_map(|a| mt.iter().map(move |b| a * b)).collect();
        let gap = total_variation(&joint_st, &product);
        if gap > best.max_deviation {
            best = DependencyCheck {
                max_deviation: gap,
                worst: Some((
                    s_coords.iter().map(|c| c + 1).collect(),
                    t_coords.iter().map(|c| c + 1).collect(),
                )),
            };
        }
    }
    Ok(best)
}

/// A function on the finite product space with a declared Hamming-Lipschitz profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzFunction {
    sizes: Vec<usize>,
    values: Vec<Rational>,
    profile: LipschitzProfile,
}

impl LipschitzFunction {
    /// Validates `|f(x) - f(x')| <= sum_i c_i 1[x_i != x'_i]` over the whole
    /// space. Checking pairs that differ in one coordinate is equivalent: any
    /// pair is joined by a path of single-coordinate changes.
    pub fn new(sizes: Vec<usize>, values: Vec<Rational>, profile: LipschitzProfile) -> Result<Self> {
        check_space(&sizes)?;
        profile.check_len(sizes.len())?;
        let states: usize = sizes.iter().product();
        if values.len() != states {
            return input(format!("function table has {} entries, expected {states}", values.len()));
        }
        let strides = strides_of(&sizes);
        for idx in 0..states {
            for (k, (&stride, &size)) in strides.iter().zip(&sizes).enumerate() {
                let digit = idx / stride % size;
                for other in digit + 1..size {
                    let jdx = idx + (other - digit) * stride;
                    let diff = (&values[idx] - &values[jdx]).abs();
                    if &diff > profile.get(k + 1) {
                        let x: Vec<usize> = strides.iter().zip(&sizes).map(|(s, n)| idx / s % n).collect();
                        return input(format!(
                            "function is not c-Lipschitz: changing coordinate {} of {:?} to {} moves f by {}, above c_{} = {}",
                            k + 1,
                            x,
                            other,
                            diff,
                            k + 1,
                            profile.get(k + 1)
                        ));
                    }
                }
            }
        }
        Ok(Self { sizes, values, profile })
    }

    pub fn from_fn(sizes: Vec<usize>, profile: LipschitzProfile, f: impl Fn(&[usize]) -> Rational) -> Result<Self> {
        check_space(&sizes)?;
        let strides = strides_of(&sizes);
        let states: usize = sizes.iter().product();
        let values = (0..states)
            .map(|idx| {
                let x: Vec<usize> = strides.iter().zip(&sizes).map(|(s, n)| idx / s % n).collect();
                f(&x)
            })
            .collect();
        Self::new(sizes, values, profile)
    }

    /// `f(x) = sum_i x_i` with `c_i = |Omega_i| - 1`.
    pub fn sum(sizes: &[usize]) -> Result<Self> {
        let profile = LipschitzProfile::from_integers(&sizes.iter().map(|&s| s as i64 - 1).collect::<Vec<_>>())?;
        Self::from_fn(sizes.to_vec(), profile, |x| rational::int(x.iter().sum::<usize>() as i64))
    }

    /// Table with the smallest valid profile: `c_i` is the largest change
    /// caused by altering coordinate `i` alone.
    pub fn with_tight_profile(sizes: Vec<usize>, values: Vec<Rational>) -> Result<Self> {
        check_space(&sizes)?;
        let strides = strides_of(&sizes);
        let mut c = vec![Rational::zero(); sizes.len()];
        for idx in 0..values.len() {
            for k in 0..sizes.len() {
                let digit = idx / strides[k] % sizes[k];
                for other in digit + 1..sizes[k] {
                    let diff = (&values[idx] - &values[idx + (other - digit) * strides[k]]).abs();
                    if diff > c[k] {
                        c[k] = diff;
                    }
                }
            }
        }
        Self::new(sizes, values, LipschitzProfile::new(c)?)
    }

    pub fn profile(&self) -> &LipschitzProfile {
        &self.profile
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    fn permuted(&self, labels: &[usize]) -> Vec<Rational> {
        let sizes: Vec<usize> = labels.iter().map(|&v| self.sizes[v - 1]).collect();
        let new_strides = strides_of(&sizes);
        let old_strides = strides_of(&self.sizes);
        let mut out = vec![Rational::zero(); self.values.len()];
        for (idx, v) in self.values.iter().enumerate() {
            let j: usize = labels
                .iter()
                .zip(&new_strides)
                .map(|(&l, s)| (idx / old_strides[l - 1] % self.sizes[l - 1]) * s)
                .sum();
            out[j] = v.clone();
        }
        out
    }
}

/// The joint and function rewritten in exposure positions: coordinate `k`
/// (0-based) is the vertex exposed at step `k + 1`.
struct Exposed<'a> {
    joint: FiniteJoint,
    order: &'a ExposureOrder,
}

impl<'a> Exposed<'a> {
    fn new(joint: &FiniteJoint, order: &'a ExposureOrder) -> Result<Self> {
        if order.len() != joint.n() {
            return input(format!(
                "exposure order covers {} vertices but the joint has {} coordinates",
                order.len(),
                joint.n()
            ));
        }
        Ok(Self { joint: joint.permuted(order.labels()), order })
    }

    fn n(&self) -> usize {
        self.joint.n()
    }

    /// Number of prefixes of length `len`.
    fn prefix_count(&self, len: usize) -> usize {
        self.joint.sizes[..len].iter().product()
    }

    fn decode_prefix(&self, len: usize, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; len];
        for k in (0..len).rev() {
            out[k] = idx % self.joint.sizes[k];
            idx /= self.joint.sizes[k];
        }
        out
    }

    /// Unnormalised slice of states extending the given first-`len` values.
    fn slice(&self, prefix: &[usize]) -> &[Rational] {
        let len = prefix.len();
        let width = if len == 0 { self.joint.states() } else { self.joint.strides[len - 1] };
        let start: usize = prefix.iter().zip(&self.joint.strides).map(|(v, s)| v * s).sum();
        &self.joint.pmf[start..start + width]
    }

    /// Law of positions `len+1..n` given the first `len` values, or `None` on a null event.
    fn conditional_rest(&self, prefix: &[usize]) -> Option<Vec<Rational>> {
        let slice = self.slice(prefix);
        let mass = rational::sum(slice);
        if mass.is_zero() {
            return None;
        }
        Some(slice.iter().map(|p| p / &mass).collect())
    }

    /// Sizes of positions `from..=n` (1-based `from`).
    fn rest_sizes(&self, from: usize) -> &[usize] {
        &self.joint.sizes[from - 1..]
    }
}

/// Marginal of a dense law over `sizes` onto the listed 0-based coordinates.
fn project(law: &[Rational], sizes: &[usize], coords: &[usize]) -> Vec<Rational> {
    let strides = strides_of(sizes);
    let sub_sizes: Vec<usize> = coords.iter().map(|&c| sizes[c]).collect();
    let sub_strides = strides_of(&sub_sizes);
    let mut out = vec![Rational::zero(); sub_sizes.iter().product::<usize>().max(1)];
    for (idx, p) in law.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let j: usize = coords
            .iter()
            .zip(&sub_strides)
            .map(|(&c, s)| (idx / strides[c] % sizes[c]) * s)
            .sum();
        out[j] += p;
    }
    out
}

/// How the coupled parent coordinate `Z_{p_i}` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentRule {
    /// Conditional on the substituted prefix and on `Z_{S_i} = Y_{S_i}`.
    Conditional,
    /// Unconditional marginal of `X_{p_i}`: a deliberately wrong coupling
    /// kept as a negative control.
    UnconditionalMarginal,
}

/// Explicit coupled law of `(Y, Z)` at exposure step `i`, in exposure positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPair {
    pub step: usize,
    pub parent: Option<usize>,
    pub prefix: Vec<usize>,
    pub a: usize,
    pub b: usize,
    /// `(y, z, probability)`, full-length vectors in exposure positions.
    pub entries: Vec<(Vec<usize>, Vec<usize>, Rational)>,
    s_set: Vec<usize>,
}

impl CouplingPair {
    /// Probability mass on outcomes violating a structural requirement:
    /// `Y_[i] = (prefix, a)`, `Z_[i] = (prefix, b)`, `Z_{S_i} = Y_{S_i}` and
    /// agreement everywhere outside `{i, p_i}`.
    pub fn structural_defect(&self) -> Rational {
        let i = self.step;
        let mut bad = Rational::zero();
        for (y, z, p) in &self.entries {
            let mut ok = y[..i - 1] == self.prefix[..] && z[..i - 1] == self.prefix[..];
            ok &= y[i - 1] == self.a && z[i - 1] == self.b;
            ok &= self.s_set.iter().all(|&j| y[j - 1] == z[j - 1]);
            ok &= (1..=y.len())
                .filter(|&j| j != i && Some(j) != self.parent)
                .all(|j| y[j - 1] == z[j - 1]);
            if !ok {
                bad += p;
            }
        }
        bad
    }

    pub fn total_mass(&self) -> Rational {
        rational::sum(self.entries.iter().map(|(_, _, p)| p))
    }

    /// `E f(Y) - E f(Z)` for a function given in exposure positions.
    fn expectation_gap(&self, f_positions: &[Rational], strides: &[usize]) -> Rational {
        let index = |x: &[usize]| -> usize { x.iter().zip(strides).map(|(v, s)| v * s).sum() };
        self.entries.iter().fold(Rational::zero(), |acc, (y, z, p)| {
            acc + p * (&f_positions[index(y)] - &f_positions[index(z)])
        })
    }
}

/// Builds the coupling at step `i` (1-based exposure position, `i < n`)
/// for prefix values `x_[i-1]` and the two values `a`, `b` of position `i`.
pub fn build_coupling(
    joint: &FiniteJoint,
    order: &ExposureOrder,
    i: usize,
    prefix: &[usize],
    a: usize,
    b: usize,
    rule: ParentRule,
) -> Result<CouplingPair> {
    let ex = Exposed::new(joint, order)?;
    build_coupling_exposed(&ex, i, prefix, a, b, rule)
}

fn build_coupling_exposed(
    ex: &Exposed<'_>,
    i: usize,
    prefix: &[usize],
    a: usize,
    b: usize,
    rule: ParentRule,
) -> Result<CouplingPair> {
    let n = ex.n();
    if i == 0 || i >= n {
        return input(format!("coupling step must lie in 1..{n}, got {i}"));
    }
    if prefix.len() != i - 1 {
        return input(format!("prefix must fix {} positions, got {}", i - 1, prefix.len()));
    }
    let size_i = ex.joint.sizes[i - 1];
    if a >= size_i || b >= size_i || prefix.iter().zip(&ex.joint.sizes).any(|(v, s)| v >= s) {
        return input("coupling values lie outside the coordinate alphabets");
    }
    let with = |v: usize| prefix.iter().copied().chain(std::iter::once(v)).collect::<Vec<_>>();
    let (ya, yb) = match (ex.conditional_rest(&with(a)), ex.conditional_rest(&with(b))) {
        (Some(ya), Some(yb)) => (ya, yb),
        _ => {
            return Err(Error::Precondition(format!(
                "conditioning event at step {i} with prefix {prefix:?} has probability zero"
            )))
        }
    };
    let rest_sizes = ex.rest_sizes(i + 1).to_vec();
    let rest_strides = strides_of(&rest_sizes);
    let s_set = ex.order.s_set(i);
    let parent = ex.order.parent(i);
    // positions > i map to rest coordinates position - i - 1
    let s_coords: Vec<usize> = s_set.iter().map(|&j| j - i - 1).collect();
    let law_s_a = project(&ya, &rest_sizes, &s_coords);
    let law_s_b = project(&yb, &rest_sizes, &s_coords);
    if law_s_a != law_s_b {
        return Err(Error::Precondition(format!(
            "the law of X_S at step {i} depends on the value of X_{i}; the joint is not dependent along this forest"
        )));
    }
    let s_strides = strides_of(&s_coords.iter().map(|&c| rest_sizes[c]).collect::<Vec<_>>());
    let s_index = |rest_idx: usize| -> usize {
        s_coords
            .iter()
            .zip(&s_strides)
            .map(|(&c, s)| (rest_idx / rest_strides[c] % rest_sizes[c]) * s)
            .sum()
    };
    let mut entries = Vec::new();
    let Some(p) = parent else {
        // a root: every later position lies in S_i and is copied
        for (rest_idx, py) in ya.iter().enumerate() {
            if py.is_zero() {
                continue;
            }
            let omega = decode_with(rest_idx, &rest_strides, &rest_sizes);
            let y: Vec<usize> = with(a).into_iter().chain(omega.iter().copied()).collect();
            let z: Vec<usize> = with(b).into_iter().chain(omega).collect();
            entries.push((y, z, py.clone()));
        }
        return Ok(CouplingPair { step: i, parent, prefix: prefix.to_vec(), a, b, entries, s_set });
    };
    let pc = p - i - 1;
    let unconditional_parent = ex.joint.marginal(&[p - 1]);
    let parent_size = rest_sizes[pc];
    // one pass per value of X_{S_i}: the states with parent digit 0
    for base in (0..ya.len()).filter(|idx| (idx / rest_strides[pc]).is_multiple_of(parent_size)) {
        let mass = &law_s_a[s_index(base)];
        if mass.is_zero() {
            continue;
        }
        let at = |law: &[Rational], u: usize| &law[base + u * rest_strides[pc]] / mass;
        let qa: Vec<Rational> = (0..parent_size).map(|u| at(&ya, u)).collect();
        let joint_pu = match rule {
            ParentRule::Conditional => {
                let qb: Vec<Rational> = (0..parent_size).map(|u| at(&yb, u)).collect();
                maximal_coupling(&qa, &qb)
            }
            ParentRule::UnconditionalMarginal => qa
                .iter()
                .enumerate()
                .flat_map(|(u, pu)| unconditional_parent.iter().enumerate().map(move |(w, pw)| (u, w, pu * pw)))
                .collect(),
        };
        let omega = decode_with(base, &rest_strides, &rest_sizes);
        for (u, w, q) in joint_pu {
            if q.is_zero() {
                continue;
            }
            let mut y_rest = omega.clone();
            y_rest[pc] = u;
            let mut z_rest = omega.clone();
            z_rest[pc] = w;
            let y: Vec<usize> = with(a).into_iter().chain(y_rest).collect();
            let z: Vec<usize> = with(b).into_iter().chain(z_rest).collect();
            entries.push((y, z, mass * q));
        }
    }
    Ok(CouplingPair { step: i, parent, prefix: prefix.to_vec(), a, b, entries, s_set })
}

fn decode_with(idx: usize, strides: &[usize], sizes: &[usize]) -> Vec<usize> {
    strides.iter().zip(sizes).map(|(s, n)| idx / s % n).collect()
}

/// Joint law with marginals `p` and `q` that keeps the two equal with the
/// largest possible probability; equal laws give the identity coupling.
fn maximal_coupling(p: &[Rational], q: &[Rational]) -> Vec<(usize, usize, Rational)> {
    let common: Vec<Rational> = p.iter().zip(q).map(|(a, b)| if a < b { a.clone() } else { b.clone() }).collect();
    let mut out: Vec<(usize, usize, Rational)> = common.iter().cloned().enumerate().map(|(u, m)| (u, u, m)).collect();
    let rest = Rational::one() - rational::sum(&common);
    if rest.is_positive() {
        for (u, (pu, cu)) in p.iter().zip(&common).enumerate() {
            for (w, (qw, cw)) in q.iter().zip(&common).enumerate() {
                let mass = (pu - cu) * (qw - cw) / &rest;
                if !mass.is_zero() {
                    out.push((u, w, mass));
                }
            }
        }
    }
    out
}

/// Largest TV gap between the coupled marginals of `Y_[i+1,n]`, `Z_[i+1,n]`
/// and the conditional laws given `(prefix, a)` and `(prefix, b)`.
pub fn verify_coupling_marginals(pair: &CouplingPair, joint: &FiniteJoint, order: &ExposureOrder) -> Result<Rational> {
    let ex = Exposed::new(joint, order)?;
    coupling_marginal_gap(pair, &ex)
}

fn coupling_marginal_gap(pair: &CouplingPair, ex: &Exposed<'_>) -> Result<Rational> {
    let i = pair.step;
    let with = |v: usize| pair.prefix.iter().copied().chain(std::iter::once(v)).collect::<Vec<_>>();
    let (Some(ya), Some(yb)) = (ex.conditional_rest(&with(pair.a)), ex.conditional_rest(&with(pair.b))) else {
        return Err(Error::Precondition("coupling context has probability zero".into()));
    };
    let rest_strides = strides_of(ex.rest_sizes(i + 1));
    let index = |x: &[usize]| -> usize { x[i..].iter().zip(&rest_strides).map(|(v, s)| v * s).sum() };
    let mut my = vec![Rational::zero(); ya.len()];
    let mut mz = vec![Rational::zero(); yb.len()];
    for (y, z, p) in &pair.entries {
        my[index(y)] += p;
        mz[index(z)] += p;
    }
    let gy = total_variation(&my, &ya);
    let gz = total_variation(&mz, &yb);
    Ok(if gy > gz { gy } else { gz })
}

/// Largest gap `|P(X_S = w | x_[i]) - P(X_S = w | x^(i)_[i])|` over prefixes,
/// substituted values and `w`, at exposure step `i`.
pub fn verify_independence_lemma(joint: &FiniteJoint, order: &ExposureOrder, i: usize) -> Result<Rational> {
    let ex = Exposed::new(joint, order)?;
    independence_gap(&ex, i)
}

fn independence_gap(ex: &Exposed<'_>, i: usize) -> Result<Rational> {
    let n = ex.n();
    if i == 0 || i > n {
        return input(format!("step must lie in 1..={n}"));
    }
    let rest_sizes = ex.rest_sizes(i + 1).to_vec();
    let s_coords: Vec<usize> = ex.order.s_set(i).iter().map(|&j| j - i - 1).collect();
    let mut worst = Rational::zero();
    for pidx in 0..ex.prefix_count(i - 1) {
        let prefix = ex.decode_prefix(i - 1, pidx);
        let laws: Vec<Vec<Rational>> = (0..ex.joint.sizes[i - 1])
            .filter_map(|v| {
                let mut x = prefix.clone();
                x.push(v);
                ex.conditional_rest(&x)
            })
            .map(|law| project(&law, &rest_sizes, &s_coords))
            .collect();
        for (k, first) in laws.iter().enumerate() {
            for second in &laws[k + 1..] {
                for (p, q) in first.iter().zip(second) {
                    let gap = (p - q).abs();
                    if gap > worst {
                        worst = gap;
                    }
                }
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCheck {
    /// `max (E[f | x_[i-1], a] - E[f | x_[i-1], b]) - bound_i`; at most zero when the bound holds.
    pub max_excess: Rational,
    /// Largest observed spread `sup_a - inf_b` over all steps and prefixes.
    pub max_spread: Rational,
    /// `(step, prefix)` where the excess is largest.
    pub worst: Option<(usize, Vec<usize>)>,
}

/// Spread of conditional expectations at every exposure step against the
/// per-step bounds `bounds[i-1]`.
fn spread_check(ex: &Exposed<'_>, f_pos: &[Rational], bounds: &[Rational]) -> DifferenceCheck {
    let n = ex.n();
    let mut out = DifferenceCheck { max_excess: Rational::zero(), max_spread: Rational::zero(), worst: None };
    let mut first = true;
    for i in 1..=n {
        let width = ex.joint.strides[i - 1];
        for pidx in 0..ex.prefix_count(i - 1) {
            let prefix = ex.decode_prefix(i - 1, pidx);
            let mut lo: Option<Rational> = None;
            let mut hi: Option<Rational> = None;
            for v in 0..ex.joint.sizes[i - 1] {
                let mut x = prefix.clone();
                x.push(v);
                let slice = ex.slice(&x);
                let mass = rational::sum(slice);
                if mass.is_zero() {
                    continue;
                }
                let start: usize = x.iter().zip(&ex.joint.strides).map(|(a, s)| a * s).sum();
                let weighted = slice
                    .iter()
                    .zip(&f_pos[start..start + width])
                    .fold(Rational::zero(), |acc, (p, f)| acc + p * f);
                let e = weighted / mass;
                if lo.as_ref().is_none_or(|l| e < *l) {
                    lo = Some(e.clone());
                }
                if hi.as_ref().is_none_or(|h| e > *h) {
                    hi = Some(e);
                }
            }
            let (Some(lo), Some(hi)) = (lo, hi) else { continue };
            let spread = hi - lo;
            let excess = &spread - &bounds[i - 1];
            if spread > out.max_spread {
                out.max_spread = spread;
            }
            if first || excess > out.max_excess {
                first = false;
                out.max_excess = excess;
                out.worst = Some((i, prefix));
            }
        }
    }
    out
}

/// Checks `E[f | x_[i]] - E[f | x^(i)_[i]] <= c_i + c_{p_i}` (just `c_i` at a
/// root) for every step, prefix and pair of values, using `f`'s declared profile.
pub fn verify_difference_bound(joint: &FiniteJoint, order: &ExposureOrder, f: &LipschitzFunction) -> Result<DifferenceCheck> {
    check_function(joint, f)?;
    let ex = Exposed::new(joint, order)?;
    let f_pos = f.permuted(order.labels());
    let bounds = order.effective_coefficients(f.profile());
    Ok(spread_check(&ex, &f_pos, &bounds))
}

fn check_function(joint: &FiniteJoint, f: &LipschitzFunction) -> Result<()> {
    if f.sizes != joint.sizes {
        return input("function and joint are defined on different spaces");
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum MgfOutcome {
    /// Largest `E exp(s (f - Ef)) / exp(s^2 sum c^2 / 8)` over the grid.
    Ratio { worst: f64, at_s: f64 },
    /// The per-step spread exceeded the supplied coefficient.
    SpreadViolation { step: usize, prefix: Vec<usize>, spread: Rational, allowed: Rational },
}

/// Checks the moment-generating-function bound for the exposure martingale
/// along `order`, with per-step coefficients `effective_c` (indexed by
/// exposure position). The spread condition is verified exhaustively first.
pub fn mgf_check(
    joint: &FiniteJoint,
    order: &ExposureOrder,
    f: &LipschitzFunction,
    effective_c: &[Rational],
    s_grid: &[f64],
) -> Result<MgfOutcome> {
    check_function(joint, f)?;
    if effective_c.len() != joint.n() {
        return input("one effective coefficient per coordinate is required");
    }
    if s_grid.iter().any(|&s| !(s > 0.0)) {
        return input("MGF grid points must be positive");
    }
    let ex = Exposed::new(joint, order)?;
    let f_pos = f.permuted(order.labels());
    let check = spread_check(&ex, &f_pos, effective_c);
    if check.max_excess.is_positive() {
        let (step, prefix) = check.worst.expect("positive excess has a witness");
        let allowed = effective_c[step - 1].clone();
        return Ok(MgfOutcome::SpreadViolation { step, prefix, spread: &check.max_excess + &allowed, allowed });
    }
    let mean = expectation(&ex.joint, &f_pos);
    let sum_sq = rational::to_f64(&effective_c.iter().map(|c| c * c).fold(Rational::zero(), |a, b| a + b));
    let deviations: Vec<(f64, f64)> = ex
        .joint
        .pmf
        .iter()
        .zip(&f_pos)
        .filter(|(p, _)| !p.is_zero())
        .map(|(p, v)| (rational::to_f64(p), rational::to_f64(&(v - &mean))))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut at_s = s_grid.first().copied().unwrap_or(0.0);
    for &s in s_grid {
        let mgf: f64 = deviations.iter().map(|(p, d)| p * (s * d).exp()).sum();
        let ratio = mgf / (s * s * sum_sq / 8.0).exp();
        if ratio > worst {
            worst = ratio;
            at_s = s;
        }
    }
    Ok(MgfOutcome::Ratio { worst, at_s })
}

fn expectation(joint: &FiniteJoint, values: &[Rational]) -> Rational {
    joint.pmf.iter().zip(values).fold(Rational::zero(), |acc, (p, v)| acc + p * v)
}

/// `E f(X)` exactly.
pub fn mean(joint: &FiniteJoint, f: &LipschitzFunction) -> Result<Rational> {
    check_function(joint, f)?;
    Ok(expectation(joint, &f.values))
}

/// `P(f(X) - E f(X) >= t)` exactly; `t` is converted to a rational without rounding.
pub fn exact_tail(joint: &FiniteJoint, f: &LipschitzFunction, t: f64) -> Result<Rational> {
    let m = mean(joint, f)?;
    let threshold = m + rational::from_f64(t)?;
    Ok(joint
        .pmf
        .iter()
        .zip(&f.values)
        .filter(|(_, v)| **v >= threshold)
        .fold(Rational::zero(), |acc, (p, _)| acc + p))
}

/// How vertex `v` turns its latent values into a symbol of `Omega_v`.
#[derive(Debug, Clone, PartialEq)]
pub enum Emit {
    /// `(xi_v + sum of incident edge latents) mod |Omega_v|`.
    SumMod,
    /// Table indexed in mixed radix by the vertex latent (most significant)
    /// followed by incident edge latents in edge-list order.
    Table(Vec<usize>),
}

/// Latent construction of a `G`-dependent vector: independent latents on
/// vertices and edges, each coordinate a function of its own latents only.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpec {
    pub graph: Graph,
    pub alphabets: Vec<usize>,
    pub vertex_latents: Vec<Vec<Rational>>,
    /// One law per edge, in `graph.edges()` order.
    pub edge_latents: Vec<Vec<Rational>>,
    pub emit: Vec<Emit>,
}

/// Exact joint law of a latent construction, declared against its graph.
pub fn build_tree_joint(spec: &LatentSpec) -> Result<FiniteJoint> {
    let n = spec.graph.n();
    check_space(&spec.alphabets)?;
    if spec.alphabets.len() != n || spec.vertex_latents.len() != n || spec.emit.len() != n {
        return input("latent spec needs one alphabet, vertex latent and emit rule per vertex");
    }
    if spec.edge_latents.len() != spec.graph.edge_count() {
        return input(format!(
            "latent spec has {} edge latents for {} edges",
            spec.edge_latents.len(),
            spec.graph.edge_count()
        ));
    }
    let laws: Vec<&Vec<Rational>> = spec.vertex_latents.iter().chain(&spec.edge_latents).collect();
    for (k, law) in laws.iter().enumerate() {
        if law.is_empty() || law.iter().any(Signed::is_negative) || !rational::sum(law.iter()).is_one() {
            return input(format!("latent law {} is not a probability vector", k + 1));
        }
    }
    let configs = laws.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
    match configs {
        Some(c) if c <= MAX_LATENT_CONFIGURATIONS => {}
        _ => {
            return Err(Error::Scale(format!(
                "latent construction has more than {MAX_LATENT_CONFIGURATIONS} configurations"
            )))
        }
    }
    let incident: Vec<Vec<usize>> = (1..=n)
        .map(|v| {
            spec.graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a == v || b == v)
                .map(|(e, _)| e)
                .collect()
        })
        .collect();
    for (v, rule) in spec.emit.iter().enumerate() {
        if let Emit::Table(table) = rule {
            let expected = spec.vertex_latents[v].len()
                * incident[v].iter().map(|&e| spec.edge_latents[e].len()).product::<usize>();
            if table.len() != expected {
                return input(format!("emit table of vertex {} has {} entries, expected {expected}", v + 1, table.len()));
            }
            if table.iter().any(|&s| s >= spec.alphabets[v]) {
                return input(format!("emit table of vertex {} produces a symbol outside its alphabet", v + 1));
            }
        }
    }
    let sizes: Vec<usize> = laws.iter().map(|l| l.len()).collect();
    let strides = strides_of(&sizes);
    let out_strides = strides_of(&spec.alphabets);
    let mut pmf = vec![Rational::zero(); spec.alphabets.iter().product()];
    let total: usize = sizes.iter().product();
    for cfg in 0..total {
        let latent: Vec<usize> = strides.iter().zip(&sizes).map(|(s, k)| cfg / s % k).collect();
        let p = latent
            .iter()
            .zip(&laws)
            .fold(Rational::one(), |acc, (&l, law)| acc * &law[l]);
        if p.is_zero() {
            continue;
        }
        let mut idx = 0;
        for v in 0..n {
            let symbol = match &spec.emit[v] {
                Emit::SumMod => {
                    let s: usize = latent[v] + incident[v].iter().map(|&e| latent[n + e]).sum::<usize>();
                    s % spec.alphabets[v]
                }
                Emit::Table(table) => {
                    let mut key = latent[v];
                    for &e in &incident[v] {
                        key = key * spec.edge_latents[e].len() + latent[n + e];
                    }
                    table[key]
                }
            };
            idx += symbol * out_strides[v];
        }
        pmf[idx] += p;
    }
    FiniteJoint::new(spec.alphabets.clone(), pmf, Some(spec.graph.clone()))
}

impl LatentSpec {
    /// Random latent construction on a random tree with `n` vertices and
    /// alphabets of size `2..=max_alphabet`. Latents are binary with small
    /// rational weights; emit tables are uniform. Labels are shuffled so the
    /// exposure order is not the identity.
    pub fn random_tree(seed: u64, n: usize, max_alphabet: usize) -> Result<Self> {
        if n == 0 || max_alphabet < 2 {
            return input("random trees need n >= 1 and alphabets of at least two symbols");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<usize> = (1..=n).collect();
        for k in (1..n).rev() {
            let j = rng.random_range(0..=k);
            labels.swap(k, j);
        }
        let edges: Vec<(usize, usize)> = (1..n)
            .map(|k| (labels[rng.random_range(0..k)], labels[k]))
            .collect();
        let graph = Graph::new(n, &edges)?;
        let law = |rng: &mut ChaCha8Rng| -> Vec<Rational> {
            let w: Vec<i64> = (0..2).map(|_| rng.random_range(1..=4)).collect();
            let total: i64 = w.iter().sum();
            w.iter().map(|&x| rational::ratio(x, total)).collect()
        };
        let alphabets: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_alphabet)).collect();
        let vertex_latents: Vec<_> = (0..n).map(|_| law(&mut rng)).collect();
        let edge_latents: Vec<_> = (0..graph.edge_count()).map(|_| law(&mut rng)).collect();
        let emit = (1..=n)
            .map(|v| {
                let entries = 2 * (1usize << graph.degree(v));
                Emit::Table((0..entries).map(|_| rng.random_range(0..alphabets[v - 1])).collect())
            })
            .collect();
        Ok(LatentSpec { graph, alphabets, vertex_latents, edge_latents, emit })
    }
}

/// Outcome of the full exact check of a forest-dependent joint and a function.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub dependency_deviation: Rational,
    pub independence_gap: Rational,
    pub marginal_deviation: Rational,
    pub structural_defect: Rational,
    pub difference_excess: Rational,
    /// Contexts whose substituted event had probability zero and were skipped.
    pub unreachable_contexts: usize,
    pub contexts_checked: usize,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.dependency_deviation.is_zero()
            && self.independence_gap.is_zero()
            && self.marginal_deviation.is_zero()
            && self.structural_defect.is_zero()
            && !self.difference_excess.is_positive()
    }
}

/// Runs the dependency check, the independence lemma at every step, the
/// coupling marginal and structure checks for every reachable context, and
/// the martingale-difference bound. A failed dependency check ends the run
/// with only `dependency_deviation` set.
pub fn verify_forest_joint(joint: &FiniteJoint, g: &Graph, f: &LipschitzFunction, rule: ParentRule) -> Result<CouplingReport> {
    let order = ExposureOrder::for_forest(g, f.profile())?;
    let dependency = verify_dependency(joint, g)?;
    let ex = Exposed::new(joint, &order)?;
    let n = ex.n();
    let mut report = CouplingReport {
        dependency_deviation: dependency.max_deviation,
        independence_gap: Rational::zero(),
        marginal_deviation: Rational::zero(),
        structural_defect: Rational::zero(),
        difference_excess: Rational::zero(),
        unreachable_contexts: 0,
        contexts_checked: 0,
    };
    if !report.dependency_deviation.is_zero() {
        // the couplings presuppose the declared dependency structure
        return Ok(report);
    }
    let f_pos = f.permuted(order.labels());
    let full_strides = ex.joint.strides.clone();
    let effective = order.effective_coefficients(f.profile());
    for i in 1..n {
        let gap = independence_gap(&ex, i)?;
        if gap > report.independence_gap {
            report.independence_gap = gap;
        }
        for pidx in 0..ex.prefix_count(i - 1) {
            let prefix = ex.decode_prefix(i - 1, pidx);
            let size = ex.joint.sizes[i - 1];
            for a in 0..size {
                for b in 0..size {
                    if a == b {
                        continue;
                    }
                    let pair = match build_coupling_exposed(&ex, i, &prefix, a, b, rule) {
                        Ok(pair) => pair,
                        Err(Error::Precondition(_)) if reach_is_null(&ex, &prefix, a, b) => {
                            report.unreachable_contexts += 1;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    report.contexts_checked += 1;
                    let gap = coupling_marginal_gap(&pair, &ex)?;
                    if gap > report.marginal_deviation {
                        report.marginal_deviation = gap;
                    }
                    let defect = pair.structural_defect();
                    if defect > report.structural_defect {
                        report.structural_defect = defect;
                    }
                    // E f(Y) - E f(Z) through the coupling must respect the step bound
                    let gap = pair.expectation_gap(&f_pos, &full_strides);
                    let excess = gap - &effective[i - 1];
                    if excess > report.difference_excess {
                        report.difference_excess = excess;
                    }
                }
            }
        }
    }
    let diff = spread_check(&ex, &f_pos, &effective);
    if diff.max_excess > report.difference_excess {
        report.difference_excess = diff.max_excess;
    }
    Ok(report)
}

pub const DEFAULT_S_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_TAIL_POINTS: usize = 20;
/// Slack for comparisons between exact values and double-precision bounds.
pub const FLOAT_SLACK: f64 = 1e-12;

/// The MGF bound and the resulting tail bound checked against the exact law.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    /// `c_min^2 + sum_edges (c_i + c_j)^2` (per tree for forests).
    pub denominator: Rational,
    pub mgf: MgfOutcome,
    pub mgf_worst_ratio: f64,
    /// `(t, exact P(f - Ef >= t), exp(-2 t^2 / denominator))`.
    pub tails: Vec<(f64, Rational, f64)>,
    /// Largest `exact - bound` over the grid; at most zero when the bound holds.
    pub tail_worst_margin: f64,
}

impl TheoremCheck {
    pub fn passed(&self) -> bool {
        matches!(self.mgf, MgfOutcome::Ratio { worst, .. } if worst <= 1.0 + 1e-9) && self.tail_worst_margin <= FLOAT_SLACK
    }
}

/// Runs the MGF check with the per-step coefficients `c_i + c_{p_i}` and
/// compares exact tails with the forest bound on `points` thresholds
/// spread over `(0, max f - Ef]`.
pub fn theorem_check(joint: &FiniteJoint, g: &Graph, f: &LipschitzFunction, points: usize, s_grid: &[f64]) -> Result<TheoremCheck> {
    check_function(joint, f)?;
    let order = ExposureOrder::for_forest(g, f.profile())?;
    let effective = order.effective_coefficients(f.profile());
    let denominator = crate::bounds::forest_denominator(g, f.profile())?;
    let mgf = mgf_check(joint, &order, f, &effective, s_grid)?;
    let mgf_worst_ratio = match &mgf {
        MgfOutcome::Ratio { worst, .. } => *worst,
        MgfOutcome::SpreadViolation { .. } => f64::INFINITY,
    };
    let m = mean(joint, f)?;
    let max_dev = joint
        .pmf
        .iter()
        .zip(&f.values)
        .filter(|(p, _)| !p.is_zero())
        .map(|(_, v)| v - &m)
        .max()
        .unwrap_or_else(Rational::zero);
    let scale = if max_dev.is_positive() {
        rational::to_f64(&max_dev)
    } else {
        rational::to_f64(&denominator).sqrt().max(1.0)
    };
    let mut tails = Vec::with_capacity(points);
    let mut tail_worst_margin = f64::NEG_INFINITY;
    for k in 1..=points {
        let t = scale * k as f64 / points as f64;
        let exact = exact_tail(joint, f, t)?;
        let bound = if denominator.is_zero() { 0.0 } else { (-2.0 * t * t / rational::to_f64(&denominator)).exp() };
        tail_worst_margin = tail_worst_margin.max(rational::to_f64(&exact) - bound);
        tails.push((t, exact, bound));
    }
    Ok(TheoremCheck { denominator, mgf, mgf_worst_ratio, tails, tail_worst_margin })
}

fn reach_is_null(ex: &Exposed<'_>, prefix: &[usize], a: usize, b: usize) -> bool {
    let with = |v: usize| prefix.iter().copied().chain(std::iter::once(v)).collect::<Vec<_>>();
    ex.conditional_rest(&with(a)).is_none() || ex.conditional_rest(&with(b)).is_none()
}

/// Serialized joint specification: a latent construction or a raw pmf.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JointSpecJson {
    Latent(LatentSpecJson),
    Raw(RawJointJson),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentSpecJson {
    #[serde(alias = "graph")]
    pub tree: GraphJson,
    pub alphabets: Vec<usize>,
    pub latents: LatentsJson,
    pub emit: Vec<EmitJson>,
    #[serde(default)]
    pub f: Option<FunctionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentsJson {
    pub vertex: Vec<Vec<serde_json::Value>>,
    #[serde(default)]
    pub edge: Vec<Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EmitJson {
    Rule(String),
    Table { table: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawJointJson {
    pub spaces: Vec<usize>,
    pub pmf: Vec<PmfEntryJson>,
    #[serde(default, alias = "tree")]
    pub graph: Option<GraphJson>,
    #[serde(default)]
    pub f: Option<FunctionJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfEntryJson {
    pub x: Vec<usize>,
    pub p: serde_json::Value,
}

/// `"sum"` or an explicit table, optionally with a declared profile `c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionJson {
    Named(String),
    Table {
        table: Vec<serde_json::Value>,
        #[serde(default)]
        c: Option<Vec<serde_json::Value>>,
    },
}

fn law_from_json(values: &[serde_json::Value]) -> Result<Vec<Rational>> {
    values.iter().map(json_number).collect()
}

impl JointSpecJson {
    /// The joint (declared against its graph) and the function to check,
    /// defaulting to the coordinate sum.
    pub fn resolve(self) -> Result<(FiniteJoint, LipschitzFunction)> {
        let (joint, f) = match self {
            JointSpecJson::Latent(spec) => {
                let graph = spec.tree.into_graph()?;
                let emit = spec
                    .emit
                    .into_iter()
                    .map(|e| match e {
                        EmitJson::Rule(r) if r == "sum_mod" || r == "xor" => Ok(Emit::SumMod),
                        EmitJson::Rule(r) => input(format!("unknown emit rule '{r}'")),
                        EmitJson::Table { table } => Ok(Emit::Table(table)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let latent = LatentSpec {
                    graph,
                    alphabets: spec.alphabets,
                    vertex_latents: spec.latents.vertex.iter().map(|l| law_from_json(l)).collect::<Result<_>>()?,
                    edge_latents: spec.latents.edge.iter().map(|l| law_from_json(l)).collect::<Result<_>>()?,
                    emit,
                };
                (build_tree_joint(&latent)?, spec.f)
            }
            JointSpecJson::Raw(raw) => {
                let graph = raw.graph.map(GraphJson::into_graph).transpose()?;
                let entries = raw
                    .pmf
                    .iter()
                    .map(|e| Ok((e.x.clone(), json_number(&e.p)?)))
                    .collect::<Result<Vec<_>>>()?;
                (FiniteJoint::from_entries(raw.spaces, &entries, graph)?, raw.f)
            }
        };
        let f = match f {
            None => LipschitzFunction::sum(joint.sizes())?,
            Some(FunctionJson::Named(name)) if name == "sum" => LipschitzFunction::sum(joint.sizes())?,
            Some(FunctionJson::Named(name)) => return input(format!("unknown function '{name}'")),
            Some(FunctionJson::Table { table, c }) => {
                let values = law_from_json(&table)?;
                match c {
                    Some(c) => LipschitzFunction::new(joint.sizes().to_vec(), values, LipschitzProfile::new(law_from_json(&c)?)?)?,
                    None => LipschitzFunction::with_tight_profile(joint.sizes().to_vec(), values)?,
                }
            }
        };
        Ok((joint, f))
    }
}

pub fn parse_joint_spec(text: &str) -> Result<(FiniteJoint, LipschitzFunction)> {
    let spec: JointSpecJson = serde_json::from_str(text)
        .map_err(|e| Error::Input(format!("malformed joint spec at line {} column {}: {e}", e.line(), e.column())))?;
    spec.resolve()
}

/// Assignments with positive probability.
pub fn support(joint: &FiniteJoint) -> BTreeMap<Vec<usize>, Rational> {
    joint
        .pmf
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(idx, p)| (joint.decode(idx), p.clone()))
        .collect()
}
