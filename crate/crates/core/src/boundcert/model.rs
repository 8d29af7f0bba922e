//! Integer pattern models: which multisets of item types fit in one bin.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::params::ParamTable;
use crate::rational::{parse_rational, rat, render_fraction, Rational};
use crate::{Error, Result};

/// `Σ coef·x_m ≤ rhs` over 1-based type indices, all coefficients ≥ 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, Rational)>,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        LinearConstraint { terms, rhs }
    }

    /// Builds from `(type, "coefficient")` pairs and a literal right-hand side.
    pub fn parse(terms: &[(usize, &str)], rhs: &str) -> Result<Self> {
        let terms = terms.iter().map(|&(m, c)| Ok((m, parse_rational(c)?))).collect::<Result<Vec<_>>>()?;
        Ok(LinearConstraint { terms, rhs: parse_rational(rhs)? })
    }

    pub fn lhs(&self, pattern: &[u32]) -> Rational {
        self.terms.iter().map(|&(m, c)| c * Rational::from(pattern.get(m - 1).copied().unwrap_or(0) as i128)).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|&(m, _)| m)
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "x{m}")?;
            } else {
                write!(f, "{}·x{m}", render_fraction(c))?;
            }
        }
        write!(f, " ≤ {}", render_fraction(&self.rhs))
    }
}

/// A pattern model over types `1..=n`. Type `m` items are larger than
/// `sizes[m-1]`; a pattern `x` is admitted when `Σ x_m·sizes[m-1] ≤ 1` and
/// every cap and cut holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternModel {
    sizes: Vec<Rational>,
    caps: Vec<LinearConstraint>,
    cuts: Vec<LinearConstraint>,
}

impl PatternModel {
    pub fn new(sizes: Vec<Rational>, caps: Vec<LinearConstraint>, cuts: Vec<LinearConstraint>) -> Result<Self> {
        if sizes.iter().any(|s| *s <= Rational::zero()) {
            return Err(Error::InvalidParameter("pattern sizes must be positive".into()));
        }
        let n = sizes.len();
        for c in caps.iter().chain(&cuts) {
            for &(m, coef) in &c.terms {
                if m == 0 || m > n {
                    return Err(Error::InvalidParameter(alloc::format!("x{m} is not a model variable")));
                }
                if coef < Rational::zero() {
                    return Err(Error::InvalidParameter(alloc::format!("negative coefficient in {c}")));
                }
            }
            if c.rhs < Rational::zero() {
                return Err(Error::InvalidParameter(alloc::format!("negative right-hand side in {c}")));
            }
        }
        Ok(PatternModel { sizes, caps, cuts })
    }

    /// The model for the SH+ table: the 50 large types with lower bounds
    /// `t_2..t_51`, the per-class caps and the six compound cuts.
    pub fn shplus(table: &ParamTable) -> Result<Self> {
        if table.k() != 50 {
            return Err(Error::InvalidParameter("the SH+ pattern model needs k = 50".into()));
        }
        let sizes = (2..=51).map(|m| table.t(m)).collect();
        let one = rat(1, 1);
        let sum = |range: core::ops::RangeInclusive<usize>, rhs: i128| {
            LinearConstraint::new(range.map(|m| (m, one)).collect(), rat(rhs, 1))
        };
        let mut caps = vec![
            sum(1..=7, 1),
            sum(8..=13, 2),
            sum(14..=14, 3),
            sum(15..=15, 3),
            sum(16..=16, 4),
            sum(17..=17, 5),
            sum(18..=19, 6),
        ];
        caps.extend((20..=50).map(|m| sum(m..=m, m as i128 - 13)));
        let cut = |terms: &[(usize, &str)], rhs: &str| LinearConstraint::parse(terms, rhs).expect("literal");
        let cuts = vec![
            cut(&[(7, "2"), (15, "1")], "3.9"),
            cut(&[(7, "3"), (13, "2"), (17, "1")], "5.9"),
            cut(&[(13, "4"), (15, "3"), (24, "1")], "11.9"),
            cut(&[(7, "5"), (11, "3.53"), (18, "1.47")], "9"),
            cut(&[(7, "12"), (13, "8"), (20, "3"), (36, "1")], "23"),
            cut(&[(7, "9"), (13, "6"), (21, "2"), (30, "1")], "17"),
        ];
        PatternModel::new(sizes, caps, cuts)
    }

    /// A model for any table: lower bounds `t_{m+1}` and, per type, the
    /// largest count whose total lower bound stays strictly below 1.
    pub fn basic(table: &ParamTable) -> Self {
        let sizes: Vec<Rational> = (2..=table.k() + 1).map(|m| table.t(m)).collect();
        let caps = sizes
            .iter()
            .enumerate()
            .map(|(m, s)| LinearConstraint::new(vec![(m + 1, rat(1, 1))], rat(strict_count(s) as i128, 1)))
            .collect();
        PatternModel { sizes, caps, cuts: Vec::new() }
    }

    /// Keeps types `1..=n`; constraints lose their terms on dropped types.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let cut_down = |cs: &[LinearConstraint]| -> Vec<LinearConstraint> {
            cs.iter()
                .filter_map(|c| {
                    let terms: Vec<_> = c.terms.iter().copied().filter(|&(m, _)| m <= n).collect();
                    (!terms.is_empty()).then(|| LinearConstraint::new(terms, c.rhs))
                })
                .collect()
        };
        PatternModel { sizes: self.sizes[..n].to_vec(), caps: cut_down(&self.caps), cuts: cut_down(&self.cuts) }
    }

    pub fn without_cuts(&self) -> Self {
        PatternModel { cuts: Vec::new(), ..self.clone() }
    }

    pub fn with_cut(&self, cut: LinearConstraint) -> Result<Self> {
        let mut cuts = self.cuts.clone();
        cuts.push(cut);
        PatternModel::new(self.sizes.clone(), self.caps.clone(), cuts)
    }

    /// Number of types.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Lower size bound of type `m`.
    pub fn size(&self, m: usize) -> Rational {
        self.sizes[m - 1]
    }

    pub fn caps(&self) -> &[LinearConstraint] {
        &self.caps
    }

    pub fn cuts(&self) -> &[LinearConstraint] {
        &self.cuts
    }

    /// The capacity row `Σ x_m·size_m ≤ 1`.
    pub fn capacity(&self) -> LinearConstraint {
        LinearConstraint::new(self.sizes.iter().enumerate().map(|(m, s)| (m + 1, *s)).collect(), Rational::one())
    }

    /// Capacity, caps and cuts, in that order.
    pub fn constraints(&self) -> Vec<LinearConstraint> {
        let mut all = vec![self.capacity()];
        all.extend(self.caps.iter().cloned());
        all.extend(self.cuts.iter().cloned());
        all
    }

    pub fn admits(&self, pattern: &[u32]) -> bool {
        self.constraints().iter().all(|c| c.lhs(pattern) <= c.rhs)
    }
}

/// Largest `x` with `x·s < 1`.
pub(crate) fn strict_count(s: &Rational) -> u32 {
    let q = s.recip();
    let c = q.ceil().to_integer() - 1;
    c.max(0) as u32
}

/// Outcome of [`validate_cut`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCheck {
    /// Largest left-hand side over all patterns that physically fit.
    pub max_lhs: Rational,
    /// A fitting pattern (1-based type, count) breaking the cut, if any.
    pub counterexample: Option<Vec<(usize, u32)>>,
}

impl CutCheck {
    pub fn is_valid(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Largest support accepted by [`validate_cut`].
pub const CUT_SUPPORT_LIMIT: usize = 8;

/// Enumerates every pattern on the cut's support that fits in a bin and
/// reports the largest left-hand side, plus a violating pattern if there is
/// one. Other types are zero, which is enough since coefficients are
/// non-negative.
///
/// A non-empty pattern fits when `Σ x_m·size_m < 1`: type-m items are
/// strictly larger than `size_m`, so a total lower bound of exactly 1 cannot
/// be realized.
pub fn validate_cut(cut: &LinearConstraint, model: &PatternModel) -> Result<CutCheck> {
    let mut support: Vec<usize> = cut.support().collect();
    support.sort_unstable();
    support.dedup();
    if support.len() > CUT_SUPPORT_LIMIT {
        return Err(Error::TooLarge {
            what: "cut support",
            size: support.len() as u128,
            limit: CUT_SUPPORT_LIMIT as u128,
        });
    }
    if let Some(&m) = support.iter().find(|&&m| m == 0 || m > model.len()) {
        return Err(Error::InvalidParameter(alloc::format!("x{m} is not a model variable")));
    }
    let coef = |m: usize| -> Rational { cut.terms.iter().filter(|&&(v, _)| v == m).map(|&(_, c)| c).sum() };
    let coefs: Vec<Rational> = support.iter().map(|&m| coef(m)).collect();
    let sizes: Vec<Rational> = support.iter().map(|&m| model.size(m)).collect();
    let mut search = CutSearch {
        coefs,
        sizes,
        counts: vec![0; support.len()],
        best: Rational::zero(),
        best_counts: vec![0; support.len()],
    };
    search.walk(0, Rational::zero(), Rational::zero());
    let counterexample =
        (search.best > cut.rhs).then(|| support.iter().copied().zip(search.best_counts.iter().copied()).collect());
    Ok(CutCheck { max_lhs: search.best, counterexample })
}

struct CutSearch {
    coefs: Vec<Rational>,
    sizes: Vec<Rational>,
    counts: Vec<u32>,
    best: Rational,
    best_counts: Vec<u32>,
}

impl CutSearch {
    fn walk(&mut self, d: usize, load: Rational, lhs: Rational) {
        if d == self.counts.len() {
            if lhs > self.best {
                self.best = lhs;
                self.best_counts.clone_from(&self.counts);
            }
            return;
        }
        let mut x = 0u32;
        let mut load_x = load;
        let mut lhs_x = lhs;
        loop {
            self.counts[d] = x;
            self.walk(d + 1, load_x, lhs_x);
            load_x += self.sizes[d];
            lhs_x += self.coefs[d];
            if load_x >= Rational::one() {
                break;
            }
            x += 1;
        }
        self.counts[d] = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::builtin_shplus;

    fn model() -> PatternModel {
        PatternModel::shplus(&builtin_shplus()).unwrap()
    }

    #[test]
    fn shape() {
        let m = model();
        assert_eq!(m.len(), 50);
        assert_eq!(m.caps().len(), 7 + 31);
        assert_eq!(m.cuts().len(), 6);
        assert_eq!(m.size(50), rat(1, 38));
        assert_eq!(m.size(7), rat(1, 2));
    }

    #[test]
    fn caps_and_integral_cuts_are_valid() {
        let m = model();
        for c in m.caps().iter().chain(m.cuts()).filter(|c| c.terms.iter().all(|(_, a)| a.is_integer())) {
            let check = validate_cut(c, &m).unwrap();
            assert!(check.is_valid(), "{c}: {:?}", check.counterexample);
        }
    }

    #[test]
    fn fractional_cut_excludes_a_fitting_pattern() {
        // 0.353 + 4·0.147 < 1, yet 3.53 + 4·1.47 = 9.41 > 9
        let m = model();
        let check = validate_cut(&m.cuts()[3], &m).unwrap();
        assert_eq!(check.counterexample, Some(vec![(7, 0), (11, 1), (18, 4)]));
        assert_eq!(check.max_lhs, rat(941, 100));
    }

    #[test]
    fn fabricated_cut_fails() {
        let m = model();
        let c = LinearConstraint::parse(&[(50, "1")], "2").unwrap();
        let check = validate_cut(&c, &m).unwrap();
        assert_eq!(check.max_lhs, rat(37, 1));
        assert!(!check.is_valid());
    }

    #[test]
    fn strictness_matters() {
        // two type-7 items are larger than 1/2 each
        let m = model();
        let c = LinearConstraint::parse(&[(7, "1")], "1").unwrap();
        assert_eq!(validate_cut(&c, &m).unwrap().max_lhs, rat(1, 1));
    }

    #[test]
    fn truncation_drops_terms() {
        let m = model().truncated(12);
        assert_eq!(m.len(), 12);
        assert!(m.caps().iter().all(|c| c.support().all(|v| v <= 12)));
        assert_eq!(m.caps()[1].terms.len(), 5);
        assert!(m.cuts().iter().all(|c| c.support().all(|v| v <= 12)));
    }

    #[test]
    fn oversized_support_refused() {
        let m = model();
        let c = LinearConstraint::new((1..=9).map(|v| (v, rat(1, 1))).collect(), rat(1, 1));
        assert!(matches!(validate_cut(&c, &m), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn basic_caps() {
        let m = PatternModel::basic(&builtin_shplus());
        assert_eq!(m.caps()[6].rhs, rat(1, 1));
        assert_eq!(m.caps()[49].rhs, rat(37, 1));
        assert_eq!(strict_count(&rat(1, 8)), 7);
        assert_eq!(strict_count(&rat(3, 10)), 3);
    }

    #[test]
    fn display() {
        let c = LinearConstraint::parse(&[(7, "5"), (11, "3.53")], "9").unwrap();
        assert_eq!(alloc::format!("{c}"), "5·x7 + 353/100·x11 ≤ 9");
    }

    #[test]
    fn negative_coefficients_refused() {
        let c = LinearConstraint::new(vec![(1, rat(-1, 1))], rat(1, 1));
        assert!(PatternModel::new(vec![rat(1, 2)], vec![], vec![c]).is_err());
    }
}
