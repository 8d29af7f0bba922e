//! Slice-based 2D packing: H×B, B×H and their fair-coin average.
//!
//! In H×B an item of width `w` goes to a slice of width equal to its width
//! class and height 1. Slices of one class are filled by Harmonic(38) on the
//! item heights; every new slice is requested from Super Harmonic as a 1D
//! item whose size is the class width. B×H is the same algorithm run on the
//! transposed items, so its slices are horizontal strips.
//!
//! A width of type `i ≤ k` gets a slice of width `t_i`. Widths of at most
//! `ε` use the geometric ladder `ε(1−δ)^n`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Zero};

use crate::harmonic1d::{w_h, HarmonicState, TENSOR_K};
use crate::params::ParamTable;
use crate::rational::{q_int, to_f64, to_q, Rational, Q};
use crate::superharmonic::ShState;
use crate::weighting::WeightFunctionSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Item2D {
    pub w: Rational,
    pub h: Rational,
}

impl Item2D {
    pub fn new(w: Rational, h: Rational) -> Result<Self> {
        let unit = |x: Rational| x > Rational::zero() && x <= Rational::one();
        if unit(w) && unit(h) {
            Ok(Item2D { w, h })
        } else {
            Err(Error::SizeOutOfRange)
        }
    }

    pub fn transposed(self) -> Self {
        Item2D { w: self.h, h: self.w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Slices are vertical: Super Harmonic on widths, Harmonic on heights.
    HxB,
    /// The transpose: Super Harmonic on heights, Harmonic on widths.
    BxH,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::HxB => "HxB",
            Orientation::BxH => "BxH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WidthClass {
    /// Width of type `i ≤ k`; the slice is `t_i` wide.
    Type(usize),
    /// Width below `ε`; the slice is about `ε(1−δ)^n` wide.
    Tiny(u64),
}

/// An axis-aligned rectangle inside bin `bin`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub bin: usize,
    pub x: Rational,
    pub y: Rational,
    pub w: Rational,
    pub h: Rational,
}

impl Rect {
    fn overlaps(&self, other: &Rect) -> bool {
        self.bin == other.bin
            && self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    fn contains(&self, other: &Rect) -> bool {
        self.bin == other.bin
            && self.x <= other.x
            && self.y <= other.y
            && other.x + other.w <= self.x + self.w
            && other.y + other.h <= self.y + self.h
    }

    fn in_unit_square(&self) -> bool {
        self.x >= Rational::zero()
            && self.y >= Rational::zero()
            && self.x + self.w <= Rational::one()
            && self.y + self.h <= Rational::one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub class: WidthClass,
    /// The region the slice occupies in its bin.
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement2D {
    pub slice: usize,
    pub opened_slice: bool,
    pub rect: Rect,
}

/// A finished (or partial) packing: rectangles tagged with their slice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Packing2D {
    pub rects: Vec<(usize, Rect)>,
    pub slices: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryIssue {
    OutsideBin {
        rect: usize,
    },
    SliceOutsideBin {
        slice: usize,
    },
    /// The rectangle is not inside the slice it was assigned to (too wide,
    /// too tall or misplaced).
    OutsideSlice {
        rect: usize,
        slice: usize,
    },
    Overlap {
        a: usize,
        b: usize,
    },
    SliceOverlap {
        a: usize,
        b: usize,
    },
}

#[derive(Debug, Clone)]
struct ClassState {
    harmonic: HarmonicState,
    // slice id for each Harmonic bin id
    slices: Vec<usize>,
}

/// The smallest `δ` accepted. Below this the geometric width ladder cannot be
/// kept strictly decreasing with the dyadic rounding used for class widths.
pub const MIN_DELTA: f64 = 1e-8;

// Tiny class widths are kept at or above this value; narrower items share the
// last class.
const TINY_FLOOR: f64 = 1e-21;

#[derive(Debug, Clone)]
pub struct TensorRun<'a> {
    orientation: Orientation,
    table: &'a ParamTable,
    sh: ShState<'a>,
    log_keep: f64,
    max_tiny: u64,
    tiny_widths: BTreeMap<u64, Rational>,
    classes: BTreeMap<WidthClass, ClassState>,
    slices: Vec<Slice>,
    rects: Vec<(usize, Rect)>,
}

impl<'a> TensorRun<'a> {
    /// `delta` must lie in `[MIN_DELTA, 1/2)`.
    pub fn new(table: &'a ParamTable, orientation: Orientation, delta: Rational) -> Result<Self> {
        let d = to_f64(&delta);
        if !(MIN_DELTA..0.5).contains(&d) {
            return Err(Error::InvalidParameter(alloc::format!("slice rounding δ must lie in [{MIN_DELTA}, 1/2)")));
        }
        let log_keep = libm::log1p(-d);
        let eps = to_f64(&table.epsilon());
        let max_tiny = libm::floor(libm::log(TINY_FLOOR / eps) / log_keep) as u64;
        Ok(TensorRun {
            orientation,
            table,
            sh: ShState::new(table)?,
            log_keep,
            max_tiny,
            tiny_widths: BTreeMap::new(),
            classes: BTreeMap::new(),
            slices: Vec::new(),
            rects: Vec::new(),
        })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Bins used so far.
    pub fn cost(&self) -> usize {
        self.sh.cost()
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn shelf_state(&self) -> &ShState<'a> {
        &self.sh
    }

    /// Width of the slices of a class.
    pub fn class_width(&mut self, class: WidthClass) -> Rational {
        match class {
            WidthClass::Type(i) => self.table.t(i),
            WidthClass::Tiny(n) => self.tiny_width(n),
        }
    }

    /// Class of a slice-direction length `w` (the width in H×B).
    pub fn class_of(&mut self, w: Rational) -> Result<WidthClass> {
        let ty = self.table.classify(w)?;
        if ty <= self.table.k() {
            return Ok(WidthClass::Type(ty));
        }
        let eps = self.table.epsilon();
        if w == eps {
            return Ok(WidthClass::Tiny(0));
        }
        let guess = libm::log(to_f64(&w) / to_f64(&eps)) / self.log_keep;
        let mut n = if guess.is_finite() && guess > 0.0 { libm::floor(guess) as u64 } else { 0 };
        n = n.min(self.max_tiny);
        // The stored widths are the class boundaries: class n is
        // (width(n+1), width(n)].
        while n > 0 && w > self.tiny_width(n) {
            n -= 1;
        }
        while n < self.max_tiny && self.tiny_width(n + 1) >= w {
            n += 1;
        }
        Ok(WidthClass::Tiny(n))
    }

    /// `ε(1−δ)^n` rounded up onto a dyadic grid fine enough to keep the
    /// ladder strictly decreasing. Class 0 is `ε` itself.
    fn tiny_width(&mut self, n: u64) -> Rational {
        if n == 0 {
            return self.table.epsilon();
        }
        if let Some(w) = self.tiny_widths.get(&n) {
            return *w;
        }
        let eps = to_f64(&self.table.epsilon());
        let v = eps * libm::exp(n as f64 * self.log_keep) * (1.0 + 1e-9);
        // about 52 significant bits, and never a denominator above 2^100
        let shift = (52 - libm::floor(libm::log2(v)) as i32).clamp(0, 100) as u32;
        let scale = 1i128 << shift;
        let numer = libm::ceil(v * scale as f64) as i128;
        let w = Rational::new(numer, scale);
        self.tiny_widths.insert(n, w);
        w
    }

    pub fn insert(&mut self, item: Item2D) -> Result<Placement2D> {
        let local = match self.orientation {
            Orientation::HxB => item,
            Orientation::BxH => item.transposed(),
        };
        let class = self.class_of(local.w)?;
        let width = self.class_width(class);
        let state = self.classes.entry(class).or_insert_with(|| ClassState {
            harmonic: HarmonicState::new(TENSOR_K).expect("k ≥ 2"),
            slices: Vec::new(),
        });
        // Harmonic numbers its bins 0, 1, 2, … in opening order; each one is
        // a slice.
        let hp = state.harmonic.insert(local.h)?;
        if hp.opened {
            let sp = self.sh.insert(width)?;
            let region = self.frame(sp.bin, sp.offset, Rational::zero(), width, Rational::one());
            self.slices.push(Slice { class, region });
            let id = self.slices.len() - 1;
            self.classes.get_mut(&class).expect("class state").slices.push(id);
        }
        let slice = self.classes[&class].slices[hp.bin];
        let region = &self.slices[slice].region;
        let u0 = match self.orientation {
            Orientation::HxB => region.x,
            Orientation::BxH => region.y,
        };
        let rect = self.frame(region.bin, u0, hp.offset, local.w, local.h);
        self.rects.push((slice, rect.clone()));
        Ok(Placement2D { slice, opened_slice: hp.opened, rect })
    }

    // Builds a bin rectangle from slice-frame coordinates: u runs along the
    // slice direction, v along the Harmonic direction.
    fn frame(&self, bin: usize, u: Rational, v: Rational, du: Rational, dv: Rational) -> Rect {
        match self.orientation {
            Orientation::HxB => Rect { bin, x: u, y: v, w: du, h: dv },
            Orientation::BxH => Rect { bin, x: v, y: u, w: dv, h: du },
        }
    }

    pub fn packing(&self) -> Packing2D {
        Packing2D { rects: self.rects.clone(), slices: self.slices.iter().map(|s| s.region.clone()).collect() }
    }

    /// Slices opened for each class.
    pub fn slice_counts(&self) -> BTreeMap<WidthClass, usize> {
        self.classes.iter().map(|(c, s)| (*c, s.slices.len())).collect()
    }
}

/// Checks that every rectangle and slice lies in its unit bin, every
/// rectangle lies in its slice and nothing overlaps with positive area.
pub fn validate_geometry(packing: &Packing2D) -> Vec<GeometryIssue> {
    let mut issues = Vec::new();
    for (s, region) in packing.slices.iter().enumerate() {
        if !region.in_unit_square() {
            issues.push(GeometryIssue::SliceOutsideBin { slice: s });
        }
    }
    for (r, (slice, rect)) in packing.rects.iter().enumerate() {
        if !rect.in_unit_square() {
            issues.push(GeometryIssue::OutsideBin { rect: r });
        }
        match packing.slices.get(*slice) {
            Some(region) if region.contains(rect) => {}
            _ => issues.push(GeometryIssue::OutsideSlice { rect: r, slice: *slice }),
        }
    }
    let slice_rects: Vec<&Rect> = packing.slices.iter().collect();
    for (a, b) in overlapping_pairs(&slice_rects) {
        issues.push(GeometryIssue::SliceOverlap { a, b });
    }
    let rects: Vec<&Rect> = packing.rects.iter().map(|(_, r)| r).collect();
    for (a, b) in overlapping_pairs(&rects) {
        issues.push(GeometryIssue::Overlap { a, b });
    }
    issues
}

// Sweep along x within each bin.
fn overlapping_pairs(rects: &[&Rect]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (rects[a], rects[b]);
        ra.bin.cmp(&rb.bin).then_with(|| ra.x.cmp(&rb.x)).then(a.cmp(&b))
    });
    let mut out = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut bin = usize::MAX;
    for &idx in &order {
        let r = rects[idx];
        if r.bin != bin {
            active.clear();
            bin = r.bin;
        }
        active.retain(|&a| rects[a].x + rects[a].w > r.x);
        for &a in &active {
            if rects[a].overlaps(r) {
                out.push((a.min(idx), a.max(idx)));
            }
        }
        active.push(idx);
    }
    out
}

/// Costs of both orientations and their average, the expected cost of the
/// fair-coin algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorCost {
    pub hxb: usize,
    pub bxh: usize,
    pub avg: Rational,
}

pub fn tensor_cost(table: &ParamTable, items: &[Item2D], delta: Rational) -> Result<TensorCost> {
    let mut costs = [0usize; 2];
    for (slot, orientation) in [Orientation::HxB, Orientation::BxH].into_iter().enumerate() {
        let mut run = TensorRun::new(table, orientation, delta)?;
        for item in items {
            run.insert(*item)?;
        }
        costs[slot] = run.cost();
    }
    Ok(TensorCost { hxb: costs[0], bxh: costs[1], avg: Rational::new((costs[0] + costs[1]) as i128, 2) })
}

/// `W^{i,j}(x,y) = (W_H(x)·W_B^i(y) + W_B^j(x)·W_H(y)) / 2`.
pub fn w2d(i: usize, j: usize, x: Rational, y: Rational, set: &WeightFunctionSet) -> Result<Q> {
    let hx = to_q(&w_h(x, TENSOR_K)?);
    let hy = to_q(&w_h(y, TENSOR_K)?);
    Ok((hx * set.w_sh(y, i)? + set.w_sh(x, j)? * hy) / q_int(2))
}

/// `Σ_p W_H(p_v)·W_B^c(p_u)` for every case `c`, where `u` is the slice
/// direction of the orientation (width for H×B) and `v` the other side.
pub fn weight_sums(items: &[Item2D], orientation: Orientation, set: &WeightFunctionSet) -> Result<Vec<Q>> {
    let table = set.table();
    let k = table.k();
    // Group by (Harmonic type of v, Super Harmonic type of u). Tail types
    // are linear, so their sizes are summed instead of counted.
    let mut both: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut u_tail: BTreeMap<usize, Q> = BTreeMap::new();
    let mut v_tail: BTreeMap<usize, Q> = BTreeMap::new();
    let mut uv_tail = Q::zero();
    for item in items {
        let (u, v) = match orientation {
            Orientation::HxB => (item.w, item.h),
            Orientation::BxH => (item.h, item.w),
        };
        let hv = crate::harmonic1d::harmonic_type(v, TENSOR_K)?;
        let bu = table.classify(u)?;
        match (hv < TENSOR_K, bu <= k) {
            (true, true) => *both.entry((hv, bu)).or_insert(0) += 1,
            (true, false) => *u_tail.entry(hv).or_insert_with(Q::zero) += to_q(&u),
            (false, true) => *v_tail.entry(bu).or_insert_with(Q::zero) += to_q(&v),
            (false, false) => uv_tail += to_q(&(u * v)),
        }
    }
    let h_slope = q_int(TENSOR_K as i64) / q_int(TENSOR_K as i64 - 1);
    let b_slope = set.tail_slope();
    let sums = (1..=set.cases())
        .map(|c| {
            let mut s = &uv_tail * &h_slope * b_slope;
            for (&(hv, bu), &n) in &both {
                s += set.value(c, bu) * q_int(n as i64) / q_int(hv as i64);
            }
            for (&hv, mass) in &u_tail {
                s += mass * b_slope / q_int(hv as i64);
            }
            for (&bu, mass) in &v_tail {
                s += mass * &h_slope * set.value(c, bu);
            }
            s
        })
        .collect();
    Ok(sums)
}

/// The averaged-weight inequality for one list:
/// `avg ≤ (max_c ΣW^c_{H×B} + max_c ΣW^c_{B×H}) / (2(1−δ)) + slack`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedBound {
    pub cost: TensorCost,
    pub max_hxb: Q,
    pub max_bxh: Q,
    pub rhs: Q,
    /// `avg − rhs`.
    pub slack: Q,
}

pub fn averaged_bound(set: &WeightFunctionSet, items: &[Item2D], delta: Rational) -> Result<AveragedBound> {
    let cost = tensor_cost(set.table(), items, delta)?;
    let max_of = |orientation| -> Result<Q> {
        let sums = weight_sums(items, orientation, set)?;
        Ok(sums.into_iter().max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal)).unwrap_or_else(Q::zero))
    };
    let max_hxb = max_of(Orientation::HxB)?;
    let max_bxh = max_of(Orientation::BxH)?;
    let rhs = (&max_hxb + &max_bxh) / (q_int(2) * (Q::one() - to_q(&delta)));
    let slack = to_q(&cost.avg) - &rhs;
    Ok(AveragedBound { cost, max_hxb, max_bxh, rhs, slack })
}

/// Slices opened for each Super Harmonic type in a run (tiny classes are
/// reported under type `k+1`).
pub fn slices_by_type(run: &TensorRun<'_>, k: usize) -> Vec<u64> {
    let mut out = vec![0u64; k + 1];
    for s in run.slices() {
        let ty = match s.class {
            WidthClass::Type(i) => i,
            WidthClass::Tiny(_) => k + 1,
        };
        out[ty - 1] += 1;
    }
    out
}
