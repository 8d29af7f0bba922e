//! The competitive ratio certificate for H⊗SH+.
//!
//! For a pair of cases `(i,j)` and a mixing weight `λ` we build
//! `f(y) = λ·W_H(y) + (1−λ)·W_B^i(y)` and
//! `g(x) = sup_y W^{i,j}(x,y) / f(y)`, both piecewise constant on the type
//! intervals `I_m = (t_{m+1}, t_m]` and linear below `ε`. Then
//! `W^{i,j}(x,y) ≤ f(y)·g(x)`, and the asymptotic ratio is at most
//! `P(f)·P(g)` where `P` is the best single-bin pattern weight. Swapping the
//! roles of the coordinates shows that `W^{i,j}` and `W^{j,i}` have the same
//! maximum, so either product bounds both.

mod model;
mod search;

pub use model::{validate_cut, CutCheck, LinearConstraint, PatternModel, CUT_SUPPORT_LIMIT};
pub use search::{brute_force_max, objective, pattern_max, PatternMax, BRUTE_FORCE_LIMIT, BRUTE_FORCE_TYPES};

use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::harmonic1d::TENSOR_K;
use crate::rational::{q_int, to_q, Rational, Q};
use crate::weighting::WeightFunctionSet;
use crate::{Error, Result};

/// A function that is constant on each type interval `I_m` (`values[m-1]`)
/// and equal to `tail_slope·x` on `(0, ε]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    pub values: Vec<Q>,
    pub tail_slope: Q,
}

impl PiecewiseFn {
    /// Value at `x`, using `set`'s table for the intervals.
    pub fn at(&self, x: Rational, set: &WeightFunctionSet) -> Result<Q> {
        let ty = set.table().classify(x)?;
        Ok(if ty > set.table().k() { &self.tail_slope * to_q(&x) } else { self.values[ty - 1].clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailMode {
    /// The slope of `g` on tiny items is taken as the tiny/tiny ratio
    /// `c_H·c_B/c_f`, which is `38/37` for the SH+ table. This is the value
    /// the published model files use.
    TinyRatio,
    /// The slope of `g` on tiny items is the true supremum, which can be
    /// larger when `λ ≠ 1/2`.
    Exact,
}

impl TailMode {
    pub fn name(self) -> &'static str {
        match self {
            TailMode::TinyRatio => "tiny-ratio",
            TailMode::Exact => "exact",
        }
    }
}

/// `λ_{i,j}` for every ordered pair of cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaTable {
    rows: Vec<Vec<Rational>>,
}

impl LambdaTable {
    /// A square table; every entry must lie in `[0, 1]`.
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("λ table must be square".into()));
        }
        let unit = |l: &Rational| *l >= Rational::zero() && *l <= Rational::one();
        if !rows.iter().flatten().all(unit) {
            return Err(Error::InvalidParameter("λ must lie in [0, 1]".into()));
        }
        Ok(LambdaTable { rows })
    }

    pub fn uniform(cases: usize, lambda: Rational) -> Result<Self> {
        LambdaTable::new(alloc::vec![alloc::vec![lambda; cases]; cases])
    }

    /// The tuned values for the SH+ table (7 cases).
    pub fn shplus() -> Self {
        const MILLI: [[i128; 7]; 7] = [
            [500, 500, 540, 550, 565, 565, 600],
            [500, 500, 530, 550, 565, 565, 600],
            [500, 500, 530, 550, 565, 565, 600],
            [500, 500, 535, 550, 565, 565, 600],
            [500, 500, 535, 550, 565, 565, 600],
            [500, 500, 530, 550, 565, 565, 600],
            [500, 515, 535, 555, 565, 570, 600],
        ];
        let rows = MILLI.iter().map(|r| r.iter().map(|&v| Rational::new(v, 1000)).collect()).collect();
        LambdaTable { rows }
    }

    pub fn cases(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.rows[i - 1][j - 1]
    }
}

/// Which product bounds `W^{i,j}` for each ordered pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetainRule {
    /// `min(product(i,j), product(j,i))`.
    MinOfBoth,
    /// `product(i,j)`, except for the listed ordered pairs, which use
    /// `product(j,i)`.
    Transposes(Vec<(usize, usize)>),
}

impl RetainRule {
    /// The four transposed pairs of the published argument.
    pub fn published() -> Self {
        RetainRule::Transposes(alloc::vec![(2, 1), (1, 6), (2, 5), (2, 6)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub lambda: Rational,
    pub f: PiecewiseFn,
    pub g: PiecewiseFn,
    pub pf: PatternMax,
    pub pg: PatternMax,
    pub product: Q,
}

/// The product bounding `W^{i,j}`, taken from the ordered pair `used`.
#[derive(Debug, Clone, PartialEq)]
pub struct Retained {
    pub i: usize,
    pub j: usize,
    pub used: (usize, usize),
    pub value: Q,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCertificate {
    pub cases: usize,
    pub mode: TailMode,
    pub rule: RetainRule,
    /// Row-major over `(i, j)`.
    pub pairs: Vec<PairResult>,
    pub retained: Vec<Retained>,
    /// Largest retained value.
    pub max_retained: Q,
    pub argmax: (usize, usize),
    pub delta: Option<Rational>,
    /// `max_retained / (1−δ)`, or `max_retained` without `δ`.
    pub bound: Q,
}

impl RatioCertificate {
    pub fn pair(&self, i: usize, j: usize) -> &PairResult {
        &self.pairs[(i - 1) * self.cases + (j - 1)]
    }

    /// Whether the product of `(i,j)` bounds some ordered pair.
    pub fn is_retained(&self, i: usize, j: usize) -> bool {
        self.retained.iter().any(|r| r.used == (i, j))
    }

    pub fn retained_for(&self, i: usize, j: usize) -> &Retained {
        &self.retained[(i - 1) * self.cases + (j - 1)]
    }
}

/// Builds and evaluates `f` and `g` for a weight system.
#[derive(Debug, Clone)]
pub struct Certifier<'a> {
    set: &'a WeightFunctionSet,
    model: PatternModel,
    // W_H on each interval
    h: Vec<Q>,
    h_slope: Q,
}

impl<'a> Certifier<'a> {
    /// Requires `W_H` to be constant on every type interval, which holds
    /// when each `(t_{m+1}, t_m]` lies inside a Harmonic interval, and
    /// `ε = 1/38` so that both weights turn linear at the same point.
    pub fn new(set: &'a WeightFunctionSet, model: PatternModel) -> Result<Self> {
        let table = set.table();
        let k = table.k();
        if model.len() != k {
            return Err(Error::InvalidParameter("pattern model and table disagree on k".into()));
        }
        let mut h = Vec::with_capacity(k);
        for m in 1..=k {
            let upper = table.t(m).recip().floor().to_integer();
            let lower_ok = table.t(m + 1) >= Rational::new(1, upper + 1);
            if upper >= TENSOR_K as i128 || !lower_ok {
                return Err(Error::InvalidParameter(alloc::format!("W_H is not constant on interval {m}")));
            }
            h.push(q_int(1) / q_int(upper as i64));
        }
        // Below ε both functions must be in their linear regime.
        if table.epsilon() != Rational::new(1, TENSOR_K as i128) {
            return Err(Error::InvalidParameter(alloc::format!("ε must be 1/{TENSOR_K}")));
        }
        let h_slope = q_int(TENSOR_K as i64) / q_int(TENSOR_K as i64 - 1);
        Ok(Certifier { set, model, h, h_slope })
    }

    pub fn model(&self) -> &PatternModel {
        &self.model
    }

    pub fn set(&self) -> &WeightFunctionSet {
        self.set
    }

    /// `W_H` on interval `m`.
    pub fn harmonic_value(&self, m: usize) -> &Q {
        &self.h[m - 1]
    }

    pub fn build_f(&self, i: usize, lambda: &Q) -> PiecewiseFn {
        let mix = Q::one() - lambda;
        let values = (1..=self.h.len()).map(|n| lambda * &self.h[n - 1] + &mix * self.set.value(i, n)).collect();
        let tail_slope = lambda * &self.h_slope + &mix * self.set.tail_slope();
        PiecewiseFn { values, tail_slope }
    }

    /// `g = sup_y W^{i,j}(·, y) / f(y)`. On `I_m` the ratio is constant for
    /// `y` in each interval `I_n` and for tiny `y`, so the supremum is a
    /// maximum over `k+1` candidates.
    pub fn build_g(&self, i: usize, j: usize, f: &PiecewiseFn, mode: TailMode) -> Result<PiecewiseFn> {
        let k = self.h.len();
        if let Some(n) = f.values.iter().position(|v| !v.is_positive()) {
            return Err(Error::NonPositive { interval: n + 1 });
        }
        if !f.tail_slope.is_positive() {
            return Err(Error::NonPositive { interval: k + 1 });
        }
        let c_b = self.set.tail_slope();
        let c_h = &self.h_slope;
        let two = q_int(2);
        let inv_f: Vec<Q> = f.values.iter().map(|v| Q::one() / (&two * v)).collect();
        let a: Vec<&Q> = (1..=k).map(|n| self.set.value(i, n)).collect();
        let values = (1..=k)
            .map(|m| {
                let hm = &self.h[m - 1];
                let bm = self.set.value(j, m);
                let mut best = (hm * c_b + bm * c_h) / (&two * &f.tail_slope);
                for n in 0..k {
                    let v = (hm * a[n] + bm * &self.h[n]) * &inv_f[n];
                    if v > best {
                        best = v;
                    }
                }
                best
            })
            .collect();
        let tiny_tiny = c_h * c_b / &f.tail_slope;
        let tail_slope =
            match mode {
                TailMode::TinyRatio => tiny_tiny,
                TailMode::Exact => (0..k)
                    .map(|n| (c_h * a[n] + c_b * &self.h[n]) * &inv_f[n])
                    .fold(tiny_tiny, |acc, v| if v > acc { v } else { acc }),
            };
        Ok(PiecewiseFn { values, tail_slope })
    }

    pub fn pair(&self, i: usize, j: usize, lambda: Rational, mode: TailMode) -> Result<PairResult> {
        let f = self.build_f(i, &to_q(&lambda));
        let g = self.build_g(i, j, &f, mode)?;
        let pf = pattern_max(&f, &self.model)?;
        let pg = pattern_max(&g, &self.model)?;
        let product = &pf.value * &pg.value;
        Ok(PairResult { i, j, lambda, f, g, pf, pg, product })
    }

    /// Evaluates every ordered pair and assembles the bound.
    pub fn certificate(
        &self,
        lambdas: &LambdaTable,
        mode: TailMode,
        rule: RetainRule,
        delta: Option<Rational>,
    ) -> Result<RatioCertificate> {
        let cases = self.set.cases();
        let mut pairs = Vec::with_capacity(cases * cases);
        for i in 1..=cases {
            for j in 1..=cases {
                pairs.push(self.pair(i, j, lambda_of(lambdas, i, j)?, mode)?);
            }
        }
        assemble(pairs, mode, rule, delta)
    }
}

fn lambda_of(lambdas: &LambdaTable, i: usize, j: usize) -> Result<Rational> {
    if i > lambdas.cases() || j > lambdas.cases() {
        return Err(Error::InvalidParameter("λ table has too few cases".into()));
    }
    Ok(lambdas.get(i, j))
}

/// Builds a certificate from already computed pairs (row-major, all ordered
/// pairs of `1..=n`).
pub fn assemble(
    pairs: Vec<PairResult>,
    mode: TailMode,
    rule: RetainRule,
    delta: Option<Rational>,
) -> Result<RatioCertificate> {
    let n = (1..=pairs.len()).find(|n| n * n >= pairs.len()).unwrap_or(0);
    if n * n != pairs.len() || n == 0 {
        return Err(Error::InvalidParameter("need every ordered pair of cases".into()));
    }
    let product = |i: usize, j: usize| &pairs[(i - 1) * n + (j - 1)].product;
    let mut retained = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            let used = match &rule {
                RetainRule::MinOfBoth if product(j, i) < product(i, j) => (j, i),
                RetainRule::MinOfBoth => (i, j),
                RetainRule::Transposes(list) if list.contains(&(i, j)) => (j, i),
                RetainRule::Transposes(_) => (i, j),
            };
            retained.push(Retained { i, j, used, value: product(used.0, used.1).clone() });
        }
    }
    let top = retained.iter().fold(&retained[0], |best, r| if r.value > best.value { r } else { best });
    let max_retained = top.value.clone();
    let argmax = top.used;
    let bound = match &delta {
        Some(d) => {
            if *d < Rational::zero() || *d >= Rational::one() {
                return Err(Error::InvalidParameter("δ must lie in [0, 1)".into()));
            }
            &max_retained / (Q::one() - to_q(d))
        }
        None => max_retained.clone(),
    };
    Ok(RatioCertificate { cases: n, mode, rule, pairs, retained, max_retained, argmax, delta, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::builtin_shplus;
    use crate::rational::{rat, render_decimal};

    fn setup() -> WeightFunctionSet {
        WeightFunctionSet::new(&builtin_shplus())
    }

    #[test]
    fn f_mixes_harmonic_and_case_weight() {
        let set = setup();
        let c = Certifier::new(&set, PatternModel::shplus(set.table()).unwrap()).unwrap();
        let f = c.build_f(1, &(q_int(1) / q_int(2)));
        assert_eq!(f.values[1], Q::one());
        assert_eq!(f.tail_slope, q_int(38) / q_int(37));
        let f = c.build_f(3, &Q::one());
        for m in 1..=50 {
            assert_eq!(&f.values[m - 1], c.harmonic_value(m));
        }
    }

    #[test]
    fn g_tail_at_half() {
        let set = setup();
        let c = Certifier::new(&set, PatternModel::shplus(set.table()).unwrap()).unwrap();
        let f = c.build_f(1, &(q_int(1) / q_int(2)));
        let g = c.build_g(1, 1, &f, TailMode::Exact).unwrap();
        assert_eq!(g.tail_slope, q_int(38) / q_int(37));
    }

    #[test]
    fn zero_f_rejected() {
        let set = setup();
        let c = Certifier::new(&set, PatternModel::shplus(set.table()).unwrap()).unwrap();
        // case 7 gives nothing to types 2..7
        let f = c.build_f(7, &Q::zero());
        assert_eq!(c.build_g(7, 1, &f, TailMode::Exact), Err(Error::NonPositive { interval: 2 }));
    }

    #[test]
    fn first_pair_value() {
        let set = setup();
        let c = Certifier::new(&set, PatternModel::shplus(set.table()).unwrap()).unwrap();
        let r = c.pair(1, 1, rat(1, 2), TailMode::TinyRatio).unwrap();
        assert_eq!(render_decimal(&r.pf.value, 6), "1.598272");
    }

    #[test]
    fn retain_rules() {
        let pf = PatternMax { value: Q::one(), pattern: alloc::vec![], nodes: 0 };
        let fnz = PiecewiseFn { values: alloc::vec![], tail_slope: Q::one() };
        let mk = |i, j, p: i64| PairResult {
            i,
            j,
            lambda: rat(1, 2),
            f: fnz.clone(),
            g: fnz.clone(),
            pf: pf.clone(),
            pg: pf.clone(),
            product: q_int(p),
        };
        let pairs = alloc::vec![mk(1, 1, 2), mk(1, 2, 5), mk(2, 1, 3), mk(2, 2, 1)];
        let cert = assemble(pairs.clone(), TailMode::Exact, RetainRule::MinOfBoth, None).unwrap();
        assert_eq!(cert.max_retained, q_int(3));
        assert_eq!(cert.argmax, (2, 1));
        let cert = assemble(pairs.clone(), TailMode::Exact, RetainRule::Transposes(alloc::vec![]), None).unwrap();
        assert_eq!(cert.max_retained, q_int(5));
        let rule = RetainRule::Transposes(alloc::vec![(1, 2)]);
        let cert = assemble(pairs.clone(), TailMode::Exact, rule, None).unwrap();
        assert_eq!(cert.max_retained, q_int(3));
        assert_eq!(cert.retained_for(1, 2).used, (2, 1));
        let cert = assemble(pairs, TailMode::Exact, RetainRule::MinOfBoth, Some(rat(1, 4))).unwrap();
        assert_eq!(cert.bound, q_int(4));
    }

    #[test]
    fn lambda_table_checks() {
        assert!(LambdaTable::new(alloc::vec![alloc::vec![rat(1, 2)], alloc::vec![rat(1, 2)]]).is_err());
        assert!(LambdaTable::uniform(2, rat(3, 2)).is_err());
        assert_eq!(LambdaTable::shplus().get(7, 2), rat(515, 1000));
        assert_eq!(LambdaTable::shplus().get(1, 3), rat(54, 100));
    }
}
