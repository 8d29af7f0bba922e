//! Super Harmonic parameter tables.
//!
//! A table fixes the type breakpoints `t_1 = 1 > t_2 > … > t_{k+1} = ε > 0`,
//! the red fractions `α_i`, blue and red capacities `β_i`/`γ_i`, the reserved
//! spaces `Δ_0 = 0 < Δ_1 < … < Δ_K < 1/2` and the maps `φ` (space reserved in
//! a bin of blue type-i items) and `φ̂` (smallest space a red type-i item fits
//! into). All per-type accessors are 1-based, matching the type numbering.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::rational::{parse_rational, rat, Rational};
use crate::{Error, Result};

/// The raw fields of a parameter table, as read from a file or built by hand.
///
/// Per-type vectors are 0-based (`alpha[0]` is `α_1`). `t` holds
/// `t_1..t_{k+1}`, optionally followed by the trailing `t_{k+2} = 0`.
/// `delta` is optional; when absent it is derived as `1 − t_i·β_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamParts {
    pub k: usize,
    pub big_k: usize,
    pub t: Vec<Rational>,
    pub alpha: Vec<Rational>,
    pub beta: Vec<u32>,
    pub delta: Option<Vec<Rational>>,
    pub spaces: Vec<Rational>,
    pub phi: Vec<usize>,
    pub varphi: Vec<usize>,
    pub gamma: Vec<u32>,
}

/// An immutable Super Harmonic instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamTable {
    parts: ParamParts,
}

impl ParamTable {
    /// Builds a table after checking only the shape of the input (lengths and
    /// index ranges). Use [`validate`] for the definitional invariants.
    pub fn from_parts(mut parts: ParamParts) -> Result<Self> {
        let k = parts.k;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if parts.t.len() == k + 2 {
            if !parts.t[k + 1].is_zero() {
                return Err(Error::InvalidParameter("t_{k+2} must be 0".into()));
            }
            parts.t.pop();
        }
        if parts.t.len() != k + 1 {
            return Err(Error::InvalidParameter("t must have k+1 or k+2 entries".into()));
        }
        let per_type: [(&str, usize); 5] = [
            ("alpha", parts.alpha.len()),
            ("beta", parts.beta.len()),
            ("phi", parts.phi.len()),
            ("varphi", parts.varphi.len()),
            ("gamma", parts.gamma.len()),
        ];
        for (name, len) in per_type {
            if len != k {
                return Err(Error::InvalidParameter(alloc::format!("{name} must have k = {k} entries, got {len}")));
            }
        }
        if parts.spaces.len() != parts.big_k + 1 {
            return Err(Error::InvalidParameter("Delta must have K+1 entries".into()));
        }
        if parts.phi.iter().chain(&parts.varphi).any(|&j| j > parts.big_k) {
            return Err(Error::InvalidParameter("phi/varphi entries must be ≤ K".into()));
        }
        if parts.t.iter().any(|x| *x <= Rational::zero() || *x > Rational::one()) {
            return Err(Error::InvalidParameter("t entries must lie in (0, 1]".into()));
        }
        if parts.beta.contains(&0) {
            return Err(Error::InvalidParameter("beta entries must be positive".into()));
        }
        match &parts.delta {
            Some(d) if d.len() != k => return Err(Error::InvalidParameter("delta must have k entries".into())),
            Some(_) => {}
            None => {
                let derived =
                    (0..k).map(|i| Rational::one() - parts.t[i] * Rational::from(parts.beta[i] as i128)).collect();
                parts.delta = Some(derived);
            }
        }
        Ok(ParamTable { parts })
    }

    pub fn parts(&self) -> &ParamParts {
        &self.parts
    }

    pub fn into_parts(self) -> ParamParts {
        self.parts
    }

    /// Number of large types `k` (type `k+1` holds the tiny items).
    pub fn k(&self) -> usize {
        self.parts.k
    }

    /// Number of reserved spaces `K`.
    pub fn big_k(&self) -> usize {
        self.parts.big_k
    }

    /// `t_i` for `1 ≤ i ≤ k+2`.
    pub fn t(&self, i: usize) -> Rational {
        if i == self.parts.k + 2 {
            Rational::zero()
        } else {
            self.parts.t[i - 1]
        }
    }

    /// `ε = t_{k+1}`.
    pub fn epsilon(&self) -> Rational {
        self.parts.t[self.parts.k]
    }

    pub fn alpha(&self, i: usize) -> Rational {
        self.parts.alpha[i - 1]
    }

    pub fn beta(&self, i: usize) -> u32 {
        self.parts.beta[i - 1]
    }

    pub fn gamma(&self, i: usize) -> u32 {
        self.parts.gamma[i - 1]
    }

    pub fn delta(&self, i: usize) -> Rational {
        self.parts.delta.as_ref().expect("filled by from_parts")[i - 1]
    }

    pub fn phi(&self, i: usize) -> usize {
        self.parts.phi[i - 1]
    }

    pub fn varphi(&self, i: usize) -> usize {
        self.parts.varphi[i - 1]
    }

    /// `Δ_j` for `0 ≤ j ≤ K`.
    pub fn space(&self, j: usize) -> Rational {
        self.parts.spaces[j]
    }

    /// Whether red type-`j` items may join blue type-`i` items:
    /// `φ(i) ≠ 0`, `α_j ≠ 0` and `γ_j·t_j ≤ Δ_{φ(i)}`.
    pub fn compatible(&self, blue: usize, red: usize) -> bool {
        let phi = self.phi(blue);
        phi != 0
            && !self.alpha(red).is_zero()
            && self.gamma(red) > 0
            && Rational::from(self.gamma(red) as i128) * self.t(red) <= self.space(phi)
    }

    /// Type of an item: the unique `i ∈ 1..=k+1` with `t_{i+1} < size ≤ t_i`.
    pub fn classify(&self, size: Rational) -> Result<usize> {
        if size <= Rational::zero() || size > Rational::one() {
            return Err(Error::SizeOutOfRange);
        }
        // t is strictly decreasing; find the last index with size ≤ t_i.
        let t = &self.parts.t;
        let idx = t.partition_point(|ti| size <= *ti);
        Ok(idx.max(1))
    }
}

/// Builds the SH+ instance used for H⊗SH+.
pub fn builtin_shplus() -> ParamTable {
    let d = |s: &str| parse_rational(s).expect("literal");
    let mut t: Vec<Rational> = [
        "1", "0.706", "0.657", "0.647", "0.625", "0.6", "0.58", "0.5", "0.42", "0.4", "0.375", "0.353", "0.343", "1/3",
        "0.294", "1/4", "1/5", "1/6", "0.147", "1/7",
    ]
    .iter()
    .map(|s| d(s))
    .collect();
    for i in 21..=49 {
        t.push(rat(1, i - 13));
    }
    t.push(rat(1, 37));
    t.push(rat(1, 38));

    let mut alpha: Vec<Rational> = [
        "0", "0", "0", "0", "0", "0", "0", "0", "0.162", "0.192", "0.2346", "0.3004", "0.3077", "0", "0.0816", "0.186",
        "0.092", "0.1456", "0.2162", "0.1525",
    ]
    .iter()
    .map(|s| d(s))
    .collect();
    // ff(i) = 1.35 (50 − i) / (37 (i − 12)) for rows 21..=49.
    for i in 21..=49i128 {
        alpha.push(rat(135 * (50 - i), 100 * 37 * (i - 12)));
    }
    alpha.push(Rational::zero());

    let mut beta: Vec<u32> = alloc::vec![1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 4, 5, 6, 6, 7];
    beta.extend((21..=49).map(|i| i - 13));
    beta.push(37);

    let mut delta: Vec<Rational> = [
        "0", "0.294", "0.343", "0.353", "0.375", "0.4", "0.42", "0", "0.16", "0.2", "0.25", "0.294", "0.314", "0",
        "0.118", "0", "0", "0", "0.118", "0",
    ]
    .iter()
    .map(|s| d(s))
    .collect();
    delta.extend((21..=50).map(|_| Rational::zero()));

    let mut phi: Vec<usize> = alloc::vec![0, 1, 2, 3, 4, 5, 6, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0];
    phi.extend((21..=50).map(|_| 0));

    let mut varphi: Vec<usize> = alloc::vec![0, 0, 0, 0, 0, 0, 0, 0, 6, 5, 4, 3, 2, 0, 1, 1, 1, 1, 1, 1];
    varphi.extend((21..=49).map(|_| 1));
    varphi.push(0);

    let spaces: Vec<Rational> = ["0", "0.294", "0.343", "0.353", "0.375", "0.4", "0.42"].iter().map(|s| d(s)).collect();

    let mut gamma: Vec<u32> = alloc::vec![0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 2, 2];
    // ⌊Δ_1 / t_i⌋ = ⌊0.294 (i − 13)⌋ for rows 21..=49.
    gamma.extend((21..=49i128).map(|i| (294 * (i - 13) / 1000) as u32));
    gamma.push(0);

    ParamTable::from_parts(ParamParts {
        k: 50,
        big_k: 6,
        t,
        alpha,
        beta,
        delta: Some(delta),
        spaces,
        phi,
        varphi,
        gamma,
    })
    .expect("builtin table is well formed")
}

/// A broken invariant of a parameter table. `row` is the type index, or 0 for
/// table-wide rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: usize,
    pub rule: Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    FirstBreakpointNotOne,
    BreakpointsNotDecreasing,
    SpacesNotIncreasing,
    SpacesNotBelowHalf,
    AlphaOutOfRange,
    BetaNotFloor,
    DeltaNotLeftover,
    PhiSpaceTooLarge,
    VarphiNotSmallestSpace,
    GammaNotCapacity,
    RedWithoutCapacity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = self.row;
        match self.rule {
            Rule::FirstBreakpointNotOne => write!(f, "t_1 ≠ 1"),
            Rule::BreakpointsNotDecreasing => write!(f, "t_{} ≥ t_{}", i + 1, i),
            Rule::SpacesNotIncreasing => write!(f, "Δ_{} ≥ Δ_{} (or Δ_0 ≠ 0)", i.saturating_sub(1), i),
            Rule::SpacesNotBelowHalf => write!(f, "Δ_K ≥ 1/2"),
            Rule::AlphaOutOfRange => write!(f, "α_{i} ∉ [0, 1]"),
            Rule::BetaNotFloor => write!(f, "β_{i} ≠ ⌊1/t_{i}⌋"),
            Rule::DeltaNotLeftover => write!(f, "δ_{i} ≠ 1 − t_{i}·β_{i}"),
            Rule::PhiSpaceTooLarge => write!(f, "Δ_φ({i}) > δ_{i}"),
            Rule::VarphiNotSmallestSpace => write!(f, "φ̂({i}) is not the smallest space admitting t_{i}"),
            Rule::GammaNotCapacity => write!(f, "γ_{i} does not match Δ_1 and t_{i}"),
            Rule::RedWithoutCapacity => write!(f, "α_{i} > 0 but γ_{i} = 0"),
        }
    }
}

impl Violation {
    pub fn describe(&self) -> String {
        alloc::format!("row {}: {}", self.row, self)
    }
}

/// Checks every definitional constraint of a table. An empty result means the
/// table is a valid Super Harmonic instance.
///
/// Types that never receive red items (`α_i = 0`) may record `φ̂(i) = 0` and
/// `γ_i = 0` instead of the derived values; the SH+ table does so for rows 14
/// and 50.
pub fn validate(table: &ParamTable) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |row, rule| out.push(Violation { row, rule });
    let k = table.k();
    let big_k = table.big_k();
    if table.t(1) != Rational::one() {
        bad(1, Rule::FirstBreakpointNotOne);
    }
    for i in 1..=k {
        if table.t(i + 1) >= table.t(i) {
            bad(i, Rule::BreakpointsNotDecreasing);
        }
    }
    if !table.space(0).is_zero() {
        bad(0, Rule::SpacesNotIncreasing);
    }
    for j in 1..=big_k {
        if table.space(j) <= table.space(j - 1) {
            bad(j, Rule::SpacesNotIncreasing);
        }
    }
    if table.space(big_k) >= rat(1, 2) {
        bad(0, Rule::SpacesNotBelowHalf);
    }
    let delta_1 = if big_k >= 1 { table.space(1) } else { Rational::zero() };
    let delta_max = table.space(big_k);
    for i in 1..=k {
        let t = table.t(i);
        let alpha = table.alpha(i);
        if alpha < Rational::zero() || alpha > Rational::one() {
            bad(i, Rule::AlphaOutOfRange);
        }
        let beta = table.beta(i);
        if Rational::from(beta as i128) != t.recip().floor() {
            bad(i, Rule::BetaNotFloor);
        }
        if table.delta(i) != Rational::one() - t * Rational::from(beta as i128) {
            bad(i, Rule::DeltaNotLeftover);
        }
        if table.phi(i) > 0 && table.space(table.phi(i)) > table.delta(i) {
            bad(i, Rule::PhiSpaceTooLarge);
        }
        let expected_varphi = (1..=big_k).find(|&j| t <= table.space(j)).unwrap_or(0);
        let expected_gamma = if t > delta_max {
            0
        } else if t > delta_1 {
            1
        } else {
            (delta_1 / t).floor().to_integer() as u32
        };
        let red_free = alpha.is_zero() && table.varphi(i) == 0 && table.gamma(i) == 0;
        if table.varphi(i) != expected_varphi && !red_free {
            bad(i, Rule::VarphiNotSmallestSpace);
        }
        if table.gamma(i) != expected_gamma && !red_free {
            bad(i, Rule::GammaNotCapacity);
        }
        if !alpha.is_zero() && table.gamma(i) == 0 {
            bad(i, Rule::RedWithoutCapacity);
        }
    }
    out
}
