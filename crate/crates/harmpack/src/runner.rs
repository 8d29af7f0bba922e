//! Runs one algorithm on one instance, validates it and reports.

use std::time::Instant;

use harmpack_core::harmonic1d::{w_h, HarmonicState};
use harmpack_core::pack2d::{averaged_bound, validate_geometry, weight_sums, Item2D, Orientation, TensorRun};
use harmpack_core::params::ParamTable;
use harmpack_core::rational::{q_int, render_decimal, to_q, Rational};
use harmpack_core::superharmonic::{ShState, TraceRecord};
use harmpack_core::weighting::{bound_check, WeightFunctionSet};
use harmpack_core::Q;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::instance::{Instance, Items};
use crate::HarnessError;

/// Additive constant allowed for SH+ over `max_c Σ W^c`.
pub const SH_SLACK_LIMIT: i64 = 108;
/// Additive constant allowed for the 2D runs over their weight bound.
pub const TENSOR_SLACK_LIMIT: i64 = 300;
/// Default slice rounding parameter.
pub const DEFAULT_DELTA: (i128, i128) = (1, 10_000);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Algorithm {
    #[value(name = "harmonic")]
    #[serde(rename = "harmonic")]
    Harmonic,
    #[value(name = "sh+")]
    #[serde(rename = "sh+")]
    ShPlus,
    #[value(name = "hxb")]
    #[serde(rename = "hxb")]
    HxB,
    #[value(name = "bxh")]
    #[serde(rename = "bxh")]
    BxH,
    #[value(name = "tensor-avg")]
    #[serde(rename = "tensor-avg")]
    TensorAvg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Harmonic => "harmonic",
            Algorithm::ShPlus => "sh+",
            Algorithm::HxB => "hxb",
            Algorithm::BxH => "bxh",
            Algorithm::TensorAvg => "tensor-avg",
        }
    }

    pub fn dims(self) -> u8 {
        match self {
            Algorithm::Harmonic | Algorithm::ShPlus => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Check the state invariants after every insertion and the geometry at
    /// the end.
    pub verify: bool,
    /// Parameter `k` of the standalone Harmonic algorithm.
    pub harmonic_k: usize,
    pub delta: Rational,
    pub trace: bool,
    /// Record wall time. Off by default so reports are byte-stable.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            verify: false,
            harmonic_k: 38,
            delta: Rational::new(DEFAULT_DELTA.0, DEFAULT_DELTA.1),
            trace: false,
            timing: false,
        }
    }
}

/// One row of the 2D results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientationRow {
    pub orientation: &'static str,
    pub bins: usize,
    pub slices: usize,
    pub weight_bound: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: &'static str,
    pub instance: String,
    pub items: usize,
    /// Bins used; the mean of both orientations for `tensor-avg`.
    pub cost: String,
    pub lower_bound: u64,
    pub ratio: Option<String>,
    pub weight_bound: String,
    /// `cost − weight_bound`.
    pub slack: String,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub orientations: Vec<OrientationRow>,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRecord>>,
}

impl RunReport {
    pub const CSV_HEADER: [&'static str; 9] =
        ["algorithm", "instance", "items", "cost", "lower_bound", "ratio", "weight_bound", "slack", "verified"];

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.algorithm.to_string(),
            self.instance.clone(),
            self.items.to_string(),
            self.cost.clone(),
            self.lower_bound.to_string(),
            self.ratio.clone().unwrap_or_default(),
            self.weight_bound.clone(),
            self.slack.clone(),
            self.verified.to_string(),
        ]
    }
}

struct Outcome {
    cost: Rational,
    weight_bound: Q,
    limit: i64,
    problems: Vec<String>,
    orientations: Vec<OrientationRow>,
    trace: Option<Vec<TraceRecord>>,
}

pub fn run(
    instance: &Instance,
    description: &str,
    algorithm: Algorithm,
    table: &ParamTable,
    options: &RunOptions,
) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let outcome = match (&instance.items, algorithm) {
        (Items::OneD(sizes), Algorithm::Harmonic) => run_harmonic(sizes, options)?,
        (Items::OneD(sizes), Algorithm::ShPlus) => run_shplus(sizes, table, options)?,
        (Items::TwoD(items), Algorithm::HxB) => run_orientation(items, table, Orientation::HxB, options)?,
        (Items::TwoD(items), Algorithm::BxH) => run_orientation(items, table, Orientation::BxH, options)?,
        (Items::TwoD(items), Algorithm::TensorAvg) => run_tensor(items, table, options)?,
        _ => return Err(HarnessError::Config(format!("{} needs a {}D instance", algorithm.name(), algorithm.dims()))),
    };
    let volume = instance.items.volume();
    let lower_bound = instance.known_opt.unwrap_or_else(|| volume.ceil().to_integer() as u64);
    let cost_q = to_q(&outcome.cost);
    let slack = &cost_q - &outcome.weight_bound;
    let mut problems = outcome.problems;
    if options.verify && slack > q_int(outcome.limit) {
        problems.push(format!("cost exceeds the weight bound by {} > {}", render_decimal(&slack, 6), outcome.limit));
    }
    if !problems.is_empty() {
        return Err(HarnessError::Validation(problems));
    }
    let ratio = (lower_bound > 0).then(|| render_decimal(&(&cost_q / q_int(lower_bound as i64)), 6));
    Ok(RunReport {
        algorithm: algorithm.name(),
        instance: description.to_string(),
        items: instance.items.len(),
        cost: render_decimal(&cost_q, if outcome.cost.is_integer() { 0 } else { 1 }),
        lower_bound,
        ratio,
        weight_bound: render_decimal(&outcome.weight_bound, 6),
        slack: render_decimal(&slack, 6),
        verified: options.verify,
        wall_ms: options.timing.then(|| start.elapsed().as_millis() as u64),
        orientations: outcome.orientations,
        trace: outcome.trace,
    })
}

fn run_harmonic(sizes: &[Rational], options: &RunOptions) -> Result<Outcome, HarnessError> {
    let k = options.harmonic_k;
    let mut h = HarmonicState::new(k)?;
    let mut weight = Rational::zero();
    for &s in sizes {
        h.insert(s)?;
        weight += w_h(s, k)?;
    }
    Ok(Outcome {
        cost: Rational::from(h.cost() as i128),
        weight_bound: to_q(&weight),
        limit: k as i64,
        problems: Vec::new(),
        orientations: Vec::new(),
        trace: None,
    })
}

fn run_shplus(sizes: &[Rational], table: &ParamTable, options: &RunOptions) -> Result<Outcome, HarnessError> {
    let mut sh = if options.trace { ShState::with_trace(table)? } else { ShState::new(table)? };
    let mut problems = Vec::new();
    for (n, &s) in sizes.iter().enumerate() {
        let p = sh.insert(s)?;
        if options.verify {
            problems.extend(sh.check_step(&p).into_iter().map(|e| format!("after item {n}: {e}")));
        }
    }
    if options.verify {
        problems.extend(sh.check_invariants());
        problems.extend(sh.check_structural_zeroes());
    }
    let set = WeightFunctionSet::new(table);
    let report = bound_check(&sh, &set);
    Ok(Outcome {
        cost: Rational::from(report.cost as i128),
        weight_bound: report.max_sum().clone(),
        limit: SH_SLACK_LIMIT,
        problems,
        orientations: Vec::new(),
        trace: sh.trace().map(<[_]>::to_vec),
    })
}

fn max_sum(items: &[Item2D], orientation: Orientation, set: &WeightFunctionSet) -> Result<Q, HarnessError> {
    Ok(weight_sums(items, orientation, set)?.into_iter().fold(Q::zero(), |a, b| if b > a { b } else { a }))
}

fn orientation_row(
    items: &[Item2D],
    table: &ParamTable,
    orientation: Orientation,
    options: &RunOptions,
    problems: &mut Vec<String>,
) -> Result<(OrientationRow, Q), HarnessError> {
    let mut run = TensorRun::new(table, orientation, options.delta)?;
    for item in items {
        run.insert(*item)?;
    }
    if options.verify {
        let issues = validate_geometry(&run.packing());
        problems.extend(issues.iter().map(|i| format!("{}: {i:?}", orientation.name())));
        problems
            .extend(run.shelf_state().check_invariants().into_iter().map(|e| format!("{}: {e}", orientation.name())));
    }
    let set = WeightFunctionSet::new(table);
    let bound = max_sum(items, orientation, &set)? / (Q::one() - to_q(&options.delta));
    let row = OrientationRow {
        orientation: orientation.name(),
        bins: run.cost(),
        slices: run.slices().len(),
        weight_bound: render_decimal(&bound, 6),
    };
    Ok((row, bound))
}

fn run_orientation(
    items: &[Item2D],
    table: &ParamTable,
    orientation: Orientation,
    options: &RunOptions,
) -> Result<Outcome, HarnessError> {
    let mut problems = Vec::new();
    let (row, bound) = orientation_row(items, table, orientation, options, &mut problems)?;
    Ok(Outcome {
        cost: Rational::from(row.bins as i128),
        weight_bound: bound,
        limit: TENSOR_SLACK_LIMIT,
        problems,
        orientations: vec![row],
        trace: None,
    })
}

fn run_tensor(items: &[Item2D], table: &ParamTable, options: &RunOptions) -> Result<Outcome, HarnessError> {
    let mut problems = Vec::new();
    let (a, _) = orientation_row(items, table, Orientation::HxB, options, &mut problems)?;
    let (b, _) = orientation_row(items, table, Orientation::BxH, options, &mut problems)?;
    let set = WeightFunctionSet::new(table);
    let avg = averaged_bound(&set, items, options.delta)?;
    let cost = Rational::new((a.bins + b.bins) as i128, 2);
    debug_assert_eq!(cost, avg.cost.avg);
    Ok(Outcome {
        cost,
        weight_bound: avg.rhs,
        limit: TENSOR_SLACK_LIMIT,
        problems,
        orientations: vec![a, b],
        trace: None,
    })
}
