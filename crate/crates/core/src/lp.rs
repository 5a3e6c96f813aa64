//! Revised primal simplex for covering programs
//!
//! ```text
//! minimise   sum_j cost_j * x_j
//! subject to sum_{j : v in S_j} x_j >= 1   for every vertex v
//!            x >= 0
//! ```
//!
//! where every column `S_j` is a vertex bitmask. All singleton columns must be
//! present; they form the starting basis, so no phase one is needed. The same
//! code runs over exact rationals and over `f64`.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub trait Scalar: Clone + PartialOrd + std::fmt::Debug {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn abs(&self) -> Self;
    /// Strictly positive beyond the arithmetic's tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_zero_ish(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
    fn to_f64(&self) -> f64;
}

/// Feasibility and pricing tolerance for floating-point solves.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

impl Scalar for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn one_value() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_TOLERANCE
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_TOLERANCE
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn to_f64(&self) -> f64 {
        crate::rational::to_f64(self)
    }
}

/// A basic variable: a part column or the surplus of a covering row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    Column(usize),
    Surplus(usize),
}

/// Optimal basic solution of a covering program.
#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub objective: S,
    /// `(column index, value)` for basic columns with positive value.
    pub weights: Vec<(usize, S)>,
    /// Final basis, one variable per row.
    pub basis: Vec<Var>,
    pub duals: Vec<S>,
    pub pivots: usize,
}

/// Column source consulted once the restricted problem is optimal.
pub trait Pricing<S> {
    /// Returns columns with negative reduced cost `cost - sum_{v in S} dual_v`,
    /// or an empty list when none can be found.
    fn price(&mut self, duals: &[S]) -> Vec<(u64, S)>;
}

pub struct NoPricing;

impl<S> Pricing<S> for NoPricing {
    fn price(&mut self, _: &[S]) -> Vec<(u64, S)> {
        Vec::new()
    }
}

/// Covering program over `rows` vertices.
pub struct CoveringLp<S> {
    rows: usize,
    masks: Vec<u64>,
    costs: Vec<S>,
}

const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_STREAK_FOR_BLAND: usize = 50;
const REFACTOR_EVERY: usize = 64;

impl<S: Scalar> CoveringLp<S> {
    pub fn new(rows: usize) -> Self {
        Self { rows, masks: Vec::new(), costs: Vec::new() }
    }

    pub fn add_column(&mut self, mask: u64, cost: S) -> usize {
        self.masks.push(mask);
        self.costs.push(cost);
        self.masks.len() - 1
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn costs(&self) -> &[S] {
        &self.costs
    }

    pub fn solve(&mut self) -> Result<LpSolution<S>> {
        self.solve_with(&mut NoPricing)
    }

    pub fn solve_with(&mut self, pricing: &mut dyn Pricing<S>) -> Result<LpSolution<S>> {
        let m = self.rows;
        if m == 0 {
            return Ok(LpSolution {
                objective: S::zero_value(),
                weights: Vec::new(),
                basis: Vec::new(),
                duals: Vec::new(),
                pivots: 0,
            });
        }
        let mut basis: Vec<Var> = Vec::with_capacity(m);
        for v in 0..m {
            let bit = 1u64 << v;
            let j = match self.masks.iter().position(|&mask| mask == bit) {
                Some(j) => j,
                None => {
                    return Err(Error::Internal(format!(
                        "covering program is missing the singleton column for vertex {}",
                        v + 1
                    )))
                }
            };
            basis.push(Var::Column(j));
        }
        let mut inverse = identity::<S>(m);
        let mut values = vec![S::one_value(); m];
        let mut pivots = 0usize;
        let mut degenerate_streak = 0usize;
        let mut bland = false;

        loop {
            let duals = self.duals(&basis, &inverse);
            let entering = match self.choose_entering(&basis, &duals, bland) {
                Some(var) => var,
                None => {
                    let fresh = pricing.price(&duals);
                    let mut added = false;
                    for (mask, cost) in fresh {
                        if mask == 0 || self.masks.contains(&mask) {
                            continue;
                        }
                        self.add_column(mask, cost);
                        added = true;
                    }
                    if added {
                        continue;
                    }
                    return Ok(self.finish(&basis, &values, duals, pivots));
                }
            };
            let direction = self.direction(entering, &inverse);
            let leave = ratio_test(&direction, &values, &basis);
            let Some(r) = leave else {
                return Err(Error::Internal("covering program reported unbounded".into()));
            };
            let step = values[r].div(&direction[r]);
            if step.is_zero_ish() {
                degenerate_streak += 1;
                if degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
            }
            pivot(&mut inverse, &mut values, &direction, r);
            basis[r] = entering;
            pivots += 1;
            if pivots > MAX_PIVOTS {
                return Err(Error::Internal("simplex pivot limit exceeded".into()));
            }
            if pivots.is_multiple_of(REFACTOR_EVERY) {
                self.refactor(&basis, &mut inverse, &mut values)?;
            }
        }
    }

    fn column_entries(&self, var: Var) -> Vec<S> {
        let mut col = vec![S::zero_value(); self.rows];
        match var {
            Var::Column(j) => {
                let mut mask = self.masks[j];
                while mask != 0 {
                    col[mask.trailing_zeros() as usize] = S::one_value();
                    mask &= mask - 1;
                }
            }
            Var::Surplus(i) => col[i] = S::zero_value().sub(&S::one_value()),
        }
        col
    }

    fn cost(&self, var: Var) -> S {
        match var {
            Var::Column(j) => self.costs[j].clone(),
            Var::Surplus(_) => S::zero_value(),
        }
    }

    fn duals(&self, basis: &[Var], inverse: &[Vec<S>]) -> Vec<S> {
        let m = self.rows;
        let basic_costs: Vec<S> = basis.iter().map(|&v| self.cost(v)).collect();
        (0..m)
            .map(|col| {
                basic_costs
                    .iter()
                    .enumerate()
                    .fold(S::zero_value(), |acc, (r, c)| acc.add(&c.mul(&inverse[r][col])))
            })
            .collect()
    }

    fn reduced_cost(&self, j: usize, duals: &[S]) -> S {
        let mut rc = self.costs[j].clone();
        let mut mask = self.masks[j];
        while mask != 0 {
            rc = rc.sub(&duals[mask.trailing_zeros() as usize]);
            mask &= mask - 1;
        }
        rc
    }

    fn choose_entering(&self, basis: &[Var], duals: &[S], bland: bool) -> Option<Var> {
        let in_basis = |v: Var| basis.contains(&v);
        let mut best: Option<(Var, S)> = None;
        let candidates = (0..self.masks.len())
            .map(|j| (Var::Column(j), self.reduced_cost(j, duals)))
            .chain((0..self.rows).map(|i| (Var::Surplus(i), duals[i].clone())));
        for (var, rc) in candidates {
            if !rc.is_neg() || in_basis(var) {
                continue;
            }
            if bland {
                // smallest index: columns before surpluses
                return Some(var);
            }
            match &best {
                Some((_, b)) if rc >= *b => {}
                _ => best = Some((var, rc)),
            }
        }
        best.map(|(v, _)| v)
    }

    fn direction(&self, var: Var, inverse: &[Vec<S>]) -> Vec<S> {
        let col = self.column_entries(var);
        inverse
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&col)
                    .filter(|(_, a)| !a.is_zero_ish())
                    .fold(S::zero_value(), |acc, (b, a)| acc.add(&b.mul(a)))
            })
            .collect()
    }

    fn refactor(&self, basis: &[Var], inverse: &mut Vec<Vec<S>>, values: &mut Vec<S>) -> Result<()> {
        let m = self.rows;
        let mut matrix = vec![vec![S::zero_value(); m]; m];
        for (c, &var) in basis.iter().enumerate() {
            for (r, a) in self.column_entries(var).into_iter().enumerate() {
                matrix[r][c] = a;
            }
        }
        *inverse = invert(matrix)
            .ok_or_else(|| Error::Internal("simplex basis became singular".into()))?;
        *values = inverse
            .iter()
            .map(|row| row.iter().fold(S::zero_value(), |acc, b| acc.add(b)))
            .collect();
        Ok(())
    }

    fn finish(&self, basis: &[Var], values: &[S], duals: Vec<S>, pivots: usize) -> LpSolution<S> {
        let mut weights = Vec::new();
        let mut objective = S::zero_value();
        for (r, &var) in basis.iter().enumerate() {
            if let Var::Column(j) = var {
                if values[r].is_pos() {
                    objective = objective.add(&self.costs[j].mul(&values[r]));
                    weights.push((j, values[r].clone()));
                }
            }
        }
        weights.sort_by_key(|(j, _)| *j);
        LpSolution { objective, weights, basis: basis.to_vec(), duals, pivots }
    }
}

fn identity<S: Scalar>(m: usize) -> Vec<Vec<S>> {
    (0..m)
        .map(|r| (0..m).map(|c| if r == c { S::one_value() } else { S::zero_value() }).collect())
        .collect()
}

/// Minimum-ratio row; ties go to the basic variable with the smallest index.
fn ratio_test<S: Scalar>(direction: &[S], values: &[S], basis: &[Var]) -> Option<usize> {
    let mut best: Option<(usize, S)> = None;
    for (r, d) in direction.iter().enumerate() {
        if !d.is_pos() {
            continue;
        }
        let ratio = values[r].div(d);
        best = match best {
            None => Some((r, ratio)),
            Some((br, bratio)) => {
                let better = if ratio.sub(&bratio).is_neg() {
                    true
                } else if ratio.sub(&bratio).is_pos() {
                    false
                } else {
                    basis[r] < basis[br]
                };
                if better {
                    Some((r, ratio))
                } else {
                    Some((br, bratio))
                }
            }
        };
    }
    best.map(|(r, _)| r)
}

fn pivot<S: Scalar>(inverse: &mut [Vec<S>], values: &mut [S], direction: &[S], r: usize) {
    let d_r = direction[r].clone();
    for x in inverse[r].iter_mut() {
        *x = x.div(&d_r);
    }
    values[r] = values[r].div(&d_r);
    let pivot_row = inverse[r].clone();
    let pivot_value = values[r].clone();
    for (i, d_i) in direction.iter().enumerate() {
        if i == r || d_i.is_zero_ish() {
            continue;
        }
        for (x, p) in inverse[i].iter_mut().zip(&pivot_row) {
            *x = x.sub(&d_i.mul(p));
        }
        values[i] = values[i].sub(&d_i.mul(&pivot_value));
    }
    // clamp float noise so feasibility is preserved
    for v in values.iter_mut() {
        if v.is_zero_ish() {
            *v = S::zero_value();
        }
    }
}

/// Gauss-Jordan inverse with largest-magnitude pivoting.
pub fn invert<S: Scalar>(mut matrix: Vec<Vec<S>>) -> Option<Vec<Vec<S>>> {
    let m = matrix.len();
    let mut inv = identity::<S>(m);
    for col in 0..m {
        let (best, _) = (col..m)
            .map(|r| (r, matrix[r][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))?;
        if matrix[best][col].is_zero_ish() {
            return None;
        }
        matrix.swap(col, best);
        inv.swap(col, best);
        let p = matrix[col][col].clone();
        for x in matrix[col].iter_mut() {
            *x = x.div(&p);
        }
        for x in inv[col].iter_mut() {
            *x = x.div(&p);
        }
        for r in 0..m {
            if r == col || matrix[r][col].is_zero_ish() {
                continue;
            }
            let factor = matrix[r][col].clone();
            for c in 0..m {
                let a = matrix[col][c].mul(&factor);
                matrix[r][c] = matrix[r][c].sub(&a);
                let b = inv[col][c].mul(&factor);
                inv[r][c] = inv[r][c].sub(&b);
            }
        }
    }
    Some(inv)
}

/// Re-solves the final basis of a floating-point solve in exact arithmetic.
///
/// Basic solutions of a covering program depend only on which variables are
/// basic, not on the costs, so the exact weights can be recovered even when
/// the costs are irrational. Returns `(column, weight)` for positive weights,
/// or `None` if the basis is singular or infeasible in exact arithmetic.
pub fn exact_basic_weights(rows: usize, masks: &[u64], basis: &[Var]) -> Option<Vec<(usize, Rational)>> {
    if basis.len() != rows {
        return None;
    }
    let mut matrix = vec![vec![Rational::zero(); rows]; rows];
    for (c, &var) in basis.iter().enumerate() {
        match var {
            Var::Column(j) => {
                for (r, row) in matrix.iter_mut().enumerate() {
                    if masks[j] >> r & 1 == 1 {
                        row[c] = Rational::one();
                    }
                }
            }
            Var::Surplus(i) => matrix[i][c] = -Rational::one(),
        }
    }
    let inv = invert(matrix)?;
    let mut out = Vec::new();
    for (row, var) in inv.iter().zip(basis) {
        let value = row.iter().fold(Rational::zero(), |acc, b| acc + b);
        if value.is_negative() {
            return None;
        }
        if let Var::Column(j) = var {
            if value.is_positive() {
                out.push((*j, value));
            }
        }
    }
    out.sort_by_key(|(j, _)| *j);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn singletons<S: Scalar>(lp: &mut CoveringLp<S>, n: usize, cost: S) {
        for v in 0..n {
            lp.add_column(1 << v, cost.clone());
        }
    }

    #[test]
    fn triangle_pairs_give_three_halves() {
        let mut lp = CoveringLp::<Rational>::new(3);
        singletons(&mut lp, 3, int(1));
        for mask in [0b011, 0b101, 0b110] {
            lp.add_column(mask, int(1));
        }
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, ratio(3, 2));
    }

    #[test]
    fn five_cycle_independent_sets_give_five_halves() {
        // independent sets of C5 (vertices 0..5, edges i ~ i+1 mod 5)
        let mut lp = CoveringLp::<Rational>::new(5);
        singletons(&mut lp, 5, int(1));
        for i in 0..5u32 {
            let j = (i + 2) % 5;
            lp.add_column((1 << i) | (1 << j), int(1));
        }
        let sol = lp.solve().unwrap();
        assert_eq!(sol.objective, ratio(5, 2));
    }

    #[test]
    fn float_and_exact_agree() {
        let mut exact = CoveringLp::<Rational>::new(4);
        let mut float = CoveringLp::<f64>::new(4);
        singletons(&mut exact, 4, int(1));
        singletons(&mut float, 4, 1.0);
        for mask in [0b0011u64, 0b0110, 0b1100, 0b1001] {
            exact.add_column(mask, int(1));
            float.add_column(mask, 1.0);
        }
        let a = exact.solve().unwrap();
        let b = float.solve().unwrap();
        assert_eq!(a.objective, int(2));
        assert!((b.objective - 2.0).abs() < 1e-12);
        let w = exact_basic_weights(4, float.masks(), &b.basis).unwrap();
        let total = w.iter().fold(Rational::zero(), |acc, (_, x)| acc + x);
        assert_eq!(total, int(2));
    }

    #[test]
    fn missing_singleton_is_internal_error() {
        let mut lp = CoveringLp::<f64>::new(2);
        lp.add_column(0b11, 1.0);
        assert!(matches!(lp.solve(), Err(Error::Internal(_))));
    }

    #[test]
    fn pricing_adds_columns() {
        struct Pair(bool);
        impl Pricing<Rational> for Pair {
            fn price(&mut self, duals: &[Rational]) -> Vec<(u64, Rational)> {
                let rc = int(1) - &duals[0] - &duals[1];
                if !self.0 && rc.is_negative() {
                    self.0 = true;
                    vec![(0b11, int(1))]
                } else {
                    Vec::new()
                }
            }
        }
        let mut lp = CoveringLp::<Rational>::new(2);
        singletons(&mut lp, 2, int(1));
        let sol = lp.solve_with(&mut Pair(false)).unwrap();
        assert_eq!(sol.objective, int(1));
    }
}
