//! Weighting functions `W^1..W^{K+1}` for Super Harmonic and the per-run
//! bound check `cost ≤ max_c Σ W^c + O(1)`.
//!
//! `W^c` is constant on each type `i ≤ k` and equals `x/(1−ε)` on type
//! `k+1`. Case 1 charges only blue items. Case `K+2−j` (for `2 ≤ j ≤ K`)
//! halves the blue part of types with `φ(i) ≥ j` and the red part of types
//! with `φ̂(i) < j`. Case `K+1` is the `j = 1` case, where types with
//! `φ(i) > 0` give away their blue charge entirely.

use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::params::ParamTable;
use crate::rational::{q_int, to_q, Rational, Q};
use crate::superharmonic::{FinalCase, ShState};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct WeightFunctionSet {
    table: ParamTable,
    // values[c - 1][i - 1]
    values: Vec<Vec<Q>>,
    tail: Q,
}

impl WeightFunctionSet {
    pub fn new(table: &ParamTable) -> Self {
        let k = table.k();
        let big_k = table.big_k();
        let values = (1..=big_k + 1).map(|c| (1..=k).map(|i| type_weight(table, c, i)).collect()).collect();
        let tail = Q::one() / (Q::one() - to_q(&table.epsilon()));
        WeightFunctionSet { table: table.clone(), values, tail }
    }

    pub fn table(&self) -> &ParamTable {
        &self.table
    }

    /// Number of cases, `K+1`.
    pub fn cases(&self) -> usize {
        self.values.len()
    }

    /// `W^c` on type `i ≤ k`.
    pub fn value(&self, case: usize, i: usize) -> &Q {
        &self.values[case - 1][i - 1]
    }

    /// `1/(1−ε)`, the slope of every `W^c` on type `k+1`.
    pub fn tail_slope(&self) -> &Q {
        &self.tail
    }

    pub fn w_sh(&self, size: Rational, case: usize) -> Result<Q> {
        if case == 0 || case > self.cases() {
            return Err(Error::InvalidParameter(alloc::format!("case {case} out of range")));
        }
        let ty = self.table.classify(size)?;
        Ok(if ty > self.table.k() { &self.tail * to_q(&size) } else { self.value(case, ty).clone() })
    }
}

fn type_weight(table: &ParamTable, case: usize, i: usize) -> Q {
    let alpha = to_q(&table.alpha(i));
    let beta = q_int(table.beta(i) as i64);
    let gamma = table.gamma(i);
    let blue = (Q::one() - &alpha) / beta;
    let red = if gamma == 0 { Q::zero() } else { &alpha / q_int(gamma as i64) };
    let two = q_int(2);
    let (phi, varphi) = (table.phi(i), table.varphi(i));
    let big_k = table.big_k();
    if case == 1 {
        return blue;
    }
    if case == big_k + 1 {
        return match (phi == 0, varphi == 0) {
            (true, true) => blue,
            (true, false) => blue + red,
            (false, true) => Q::zero(),
            (false, false) => red,
        };
    }
    let j = big_k + 2 - case;
    let blue_part = if phi < j { blue } else { blue / &two };
    let red_part = if varphi >= j { red } else { red / two };
    blue_part + red_part
}

/// Outcome of [`bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub cost: u64,
    /// `Σ_p W^c(p)` for `c = 1..=K+1`.
    pub sums: Vec<Q>,
    /// Case attaining the largest sum (smallest index on ties).
    pub max_case: usize,
    pub final_case: FinalCase,
    /// `cost − max_c Σ W^c`.
    pub slack: Q,
    /// `cost − Σ W^{case}` for the case realized at the end of the run.
    pub final_slack: Q,
}

impl BoundReport {
    pub fn max_sum(&self) -> &Q {
        &self.sums[self.max_case - 1]
    }

    pub fn final_sum(&self) -> &Q {
        &self.sums[self.final_case.case_id - 1]
    }
}

/// Compares the cost of a run with the weight of its items under every case.
pub fn bound_check(state: &ShState<'_>, set: &WeightFunctionSet) -> BoundReport {
    let table = set.table();
    let tiny = set.tail_slope() * to_q(&state.small_mass());
    let sums: Vec<Q> = (1..=set.cases())
        .map(|c| (1..=table.k()).fold(tiny.clone(), |acc, i| acc + set.value(c, i) * q_int(state.seen(i) as i64)))
        .collect();
    let mut max_case = 1;
    for c in 2..=sums.len() {
        if sums[c - 1] > sums[max_case - 1] {
            max_case = c;
        }
    }
    let final_case = state.final_case();
    let cost = state.cost() as u64;
    let cost_q = q_int(cost as i64);
    BoundReport {
        cost,
        slack: &cost_q - &sums[max_case - 1],
        final_slack: &cost_q - &sums[final_case.case_id - 1],
        sums,
        max_case,
        final_case,
    }
}
