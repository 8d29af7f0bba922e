//! Exact maximization of a piecewise weight over the patterns of a model.
//!
//! The objective of a pattern `x` is
//! `Σ x_m·w_m + (1 − Σ x_m·size_m)·c`, where `c` is the tail slope: the
//! leftover room is assumed filled with tiny items.

use alloc::vec;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::model::{LinearConstraint, PatternModel};
use super::PiecewiseFn;
use crate::rational::{q_int, q_to_f64, to_f64, to_q, Rational, Q};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PatternMax {
    pub value: Q,
    /// Count per type, `pattern[m-1]` for type `m`.
    pub pattern: Vec<u32>,
    /// Search nodes visited.
    pub nodes: u64,
}

/// Exact objective of `pattern`.
pub fn objective(f: &PiecewiseFn, model: &PatternModel, pattern: &[u32]) -> Q {
    let mut value = Q::zero();
    let mut used = Rational::zero();
    for (m, &x) in pattern.iter().enumerate() {
        if x > 0 {
            value += &f.values[m] * q_int(x as i64);
            used += model.size(m + 1) * Rational::from(x as i128);
        }
    }
    value + (Q::from_integer(1.into()) - to_q(&used)) * &f.tail_slope
}

// A constraint scaled to integers: Σ coef[v]·x_v ≤ rhs.
#[derive(Debug, Clone)]
struct IntRow {
    rhs: i128,
}

fn scale_row(c: &LinearConstraint) -> Result<(Vec<(usize, i128)>, i128)> {
    let overflow = Error::Overflow("constraint scaling");
    let mut l: i128 = *c.rhs.denom();
    for (_, coef) in &c.terms {
        let d = *coef.denom();
        let g = l.gcd(&d);
        l = (l / g).checked_mul(d).ok_or(overflow.clone())?;
    }
    let scaled = |r: &Rational| -> Result<i128> { r.numer().checked_mul(l / r.denom()).ok_or(overflow.clone()) };
    let terms = c.terms.iter().map(|(m, coef)| Ok((*m, scaled(coef)?))).collect::<Result<Vec<_>>>()?;
    Ok((terms, scaled(&c.rhs)?))
}

// Integer constraint system shared by both solvers. Variables are
// identified by their position in `vars`.
struct System {
    rows: Vec<IntRow>,
    // per variable: (row, coefficient > 0)
    uses: Vec<Vec<(usize, i128)>>,
}

impl System {
    fn build(model: &PatternModel, vars: &[usize]) -> Result<Self> {
        let mut rows = Vec::new();
        let mut uses = vec![Vec::new(); vars.len()];
        for c in model.constraints() {
            let (terms, rhs) = scale_row(&c)?;
            let r = rows.len();
            rows.push(IntRow { rhs });
            for (m, coef) in terms {
                if coef.is_zero() {
                    continue;
                }
                if let Some(p) = vars.iter().position(|&v| v == m) {
                    match uses[p].iter_mut().find(|(row, _)| *row == r) {
                        Some((_, c)) => *c += coef,
                        None => uses[p].push((r, coef)),
                    }
                }
            }
        }
        Ok(System { rows, uses })
    }

    fn residuals(&self) -> Vec<i128> {
        self.rows.iter().map(|r| r.rhs).collect()
    }

    // Largest value of variable p allowed by the residuals.
    fn room(&self, p: usize, residual: &[i128]) -> i128 {
        self.uses[p].iter().map(|&(r, c)| residual[r].div_euclid(c)).min().unwrap_or(i128::MAX)
    }

    fn apply(&self, p: usize, x: i128, residual: &mut [i128]) {
        for &(r, c) in &self.uses[p] {
            residual[r] -= c * x;
        }
    }
}

// Headroom for floating point shadows of exact quantities.
const ETA: f64 = 1e-9;

/// Maximum of the objective over the model's patterns, by depth-first branch
/// and bound. Only types with positive profit `w_m − c·size_m` can improve on
/// the empty pattern and are branched on. The bound at each node is the
/// fractional greedy fill of the remaining capacity by profit density, with
/// each variable limited by what the residual constraints still allow.
///
/// Pruning uses floating point shadows with a safety margin, so a subtree is
/// dropped only when it provably cannot beat the incumbent. Incumbents are
/// compared exactly.
pub fn pattern_max(f: &PiecewiseFn, model: &PatternModel) -> Result<PatternMax> {
    check_fn(f, model)?;
    let n = model.len();
    let mut vars: Vec<usize> = Vec::new();
    for m in 1..=n {
        let profit = &f.values[m - 1] - to_q(&model.size(m)) * &f.tail_slope;
        if profit.is_positive() {
            vars.push(m);
        }
    }
    let tail_f = q_to_f64(&f.tail_slope);
    let density = |m: usize| {
        let size = to_f64(&model.size(m));
        (q_to_f64(&f.values[m - 1]) - tail_f * size) / size
    };
    vars.sort_by(|&a, &b| density(b).total_cmp(&density(a)).then(a.cmp(&b)));
    let system = System::build(model, &vars)?;
    let profit: Vec<f64> = vars.iter().map(|&m| q_to_f64(&f.values[m - 1]) - tail_f * to_f64(&model.size(m))).collect();
    let size: Vec<f64> = vars.iter().map(|&m| to_f64(&model.size(m))).collect();
    let cap_scale = to_f64(&model.capacity().rhs) / system.rows[0].rhs as f64;
    let empty = vec![0u32; n];
    let best = objective(f, model, &empty);
    let mut search = BranchAndBound {
        f,
        model,
        vars: &vars,
        system: &system,
        profit,
        size,
        cap_scale,
        residual: system.residuals(),
        x: vec![0; vars.len()],
        best_f: q_to_f64(&best),
        best,
        best_pattern: empty,
        tail_f,
        nodes: 0,
    };
    search.dfs(0, 0.0);
    Ok(PatternMax { value: search.best, pattern: search.best_pattern, nodes: search.nodes })
}

struct BranchAndBound<'a> {
    f: &'a PiecewiseFn,
    model: &'a PatternModel,
    vars: &'a [usize],
    system: &'a System,
    profit: Vec<f64>,
    size: Vec<f64>,
    // capacity units per integer unit of the scaled capacity row
    cap_scale: f64,
    residual: Vec<i128>,
    x: Vec<i128>,
    best: Q,
    best_f: f64,
    best_pattern: Vec<u32>,
    tail_f: f64,
    nodes: u64,
}

impl BranchAndBound<'_> {
    fn dfs(&mut self, d: usize, gain: f64) {
        self.nodes += 1;
        if d == self.vars.len() {
            self.leaf(gain);
            return;
        }
        if gain + self.greedy_bound(d) < self.best_f - self.tail_f - ETA {
            return;
        }
        let top = self.system.room(d, &self.residual).max(0);
        for x in (0..=top).rev() {
            self.system.apply(d, x, &mut self.residual);
            self.x[d] = x;
            self.dfs(d + 1, gain + x as f64 * self.profit[d]);
            self.system.apply(d, -x, &mut self.residual);
        }
        self.x[d] = 0;
    }

    fn leaf(&mut self, gain: f64) {
        if gain + self.tail_f < self.best_f - ETA {
            return;
        }
        let mut pattern = vec![0u32; self.model.len()];
        for (p, &m) in self.vars.iter().enumerate() {
            pattern[m - 1] = self.x[p] as u32;
        }
        let value = objective(self.f, self.model, &pattern);
        if value > self.best {
            self.best_f = q_to_f64(&value);
            self.best = value;
            self.best_pattern = pattern;
        }
    }

    // Profit of the fractional greedy fill of variables d.. into the
    // remaining capacity.
    fn greedy_bound(&self, d: usize) -> f64 {
        let mut room = self.residual[0] as f64 * self.cap_scale;
        let mut bound = 0.0;
        for p in d..self.vars.len() {
            if room <= 0.0 {
                break;
            }
            let cap = self.system.room(p, &self.residual).max(0) as f64;
            let take = cap.min(room / self.size[p]);
            bound += take * self.profit[p];
            room -= take * self.size[p];
        }
        bound * (1.0 + ETA) + ETA
    }
}

/// Patterns the exhaustive oracle will enumerate at most.
pub const BRUTE_FORCE_LIMIT: u128 = 100_000_000;

/// Largest number of types [`brute_force_max`] accepts.
pub const BRUTE_FORCE_TYPES: usize = 15;

/// Exhaustive maximum: every admitted pattern is evaluated exactly. Meant as
/// an independent check of [`pattern_max`] on small models.
pub fn brute_force_max(f: &PiecewiseFn, model: &PatternModel) -> Result<PatternMax> {
    check_fn(f, model)?;
    let n = model.len();
    if n > BRUTE_FORCE_TYPES {
        return Err(Error::TooLarge {
            what: "types for exhaustive search",
            size: n as u128,
            limit: BRUTE_FORCE_TYPES as u128,
        });
    }
    let vars: Vec<usize> = (1..=n).collect();
    let system = System::build(model, &vars)?;
    let residual = system.residuals();
    let mut boxes: u128 = 1;
    for p in 0..n {
        let room = system.room(p, &residual).max(0) as u128;
        boxes = boxes.saturating_mul(room + 1);
    }
    if boxes > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { what: "pattern enumeration", size: boxes, limit: BRUTE_FORCE_LIMIT });
    }
    let empty = vec![0u32; n];
    let mut walk = Exhaustive {
        f,
        model,
        system: &system,
        residual,
        pattern: empty.clone(),
        best: objective(f, model, &empty),
        best_pattern: empty,
        nodes: 0,
    };
    walk.visit(0);
    Ok(PatternMax { value: walk.best, pattern: walk.best_pattern, nodes: walk.nodes })
}

struct Exhaustive<'a> {
    f: &'a PiecewiseFn,
    model: &'a PatternModel,
    system: &'a System,
    residual: Vec<i128>,
    pattern: Vec<u32>,
    best: Q,
    best_pattern: Vec<u32>,
    nodes: u64,
}

impl Exhaustive<'_> {
    fn visit(&mut self, d: usize) {
        self.nodes += 1;
        if d == self.pattern.len() {
            let value = objective(self.f, self.model, &self.pattern);
            if value > self.best {
                self.best = value;
                self.best_pattern.clone_from(&self.pattern);
            }
            return;
        }
        let top = self.system.room(d, &self.residual).max(0);
        for x in 0..=top {
            self.system.apply(d, x, &mut self.residual);
            self.pattern[d] = x as u32;
            self.visit(d + 1);
            self.system.apply(d, -x, &mut self.residual);
        }
        self.pattern[d] = 0;
    }
}

fn check_fn(f: &PiecewiseFn, model: &PatternModel) -> Result<()> {
    if f.values.len() < model.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "weight function has {} intervals, model has {} types",
            f.values.len(),
            model.len()
        )));
    }
    if f.values.iter().any(|v| v.is_negative()) || f.tail_slope.is_negative() {
        return Err(Error::InvalidParameter("weights must be non-negative".into()));
    }
    Ok(())
}
