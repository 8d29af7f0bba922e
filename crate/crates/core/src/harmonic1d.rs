//! The Harmonic(k) online packer.
//!
//! Items in `(1/(i+1), 1/i]` for `i < k` are type `i` and are packed `i` to a
//! bin; everything at most `1/k` is type `k` and is packed by Next Fit. Each
//! type has at most one open bin.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::rational::Rational;
use crate::{Error, Result};

/// Harmonic's own parameter when it runs inside H⊗SH+: `k/(k−1) = 38/37`
/// matches the tail weight `1/(1−ε)` of SH+.
pub const TENSOR_K: usize = 38;

/// Where an item went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPlacement {
    pub bin: usize,
    pub opened: bool,
    pub ty: usize,
    /// Load of the bin before the item, i.e. the item's offset when items
    /// are stacked in arrival order.
    pub offset: Rational,
}

#[derive(Debug, Clone)]
struct OpenBin {
    id: usize,
    count: u64,
    load: Rational,
}

#[derive(Debug, Clone)]
pub struct HarmonicState {
    k: usize,
    open: Vec<Option<OpenBin>>,
    closed_bins: Vec<u64>,
    closed_items: Vec<u64>,
    items: Vec<u64>,
    cost: usize,
}

impl HarmonicState {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter("Harmonic needs k ≥ 2".into()));
        }
        Ok(HarmonicState {
            k,
            open: vec![None; k],
            closed_bins: vec![0; k],
            closed_items: vec![0; k],
            items: vec![0; k],
            cost: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Bins opened so far.
    pub fn cost(&self) -> usize {
        self.cost
    }

    pub fn type_of(&self, size: Rational) -> Result<usize> {
        harmonic_type(size, self.k)
    }

    pub fn insert(&mut self, size: Rational) -> Result<HPlacement> {
        let ty = harmonic_type(size, self.k)?;
        let slot = ty - 1;
        self.items[slot] += 1;
        let fits = match &self.open[slot] {
            None => false,
            Some(bin) if ty < self.k => (bin.count as usize) < ty,
            Some(bin) => bin.load + size <= Rational::one(),
        };
        let opened = !fits;
        if opened {
            if let Some(old) = self.open[slot].take() {
                self.close(slot, old);
            }
            self.open[slot] = Some(OpenBin { id: self.cost, count: 0, load: Rational::zero() });
            self.cost += 1;
        }
        let bin = self.open[slot].as_mut().expect("open bin");
        let placement = HPlacement { bin: bin.id, opened, ty, offset: bin.load };
        bin.count += 1;
        bin.load += size;
        if ty < self.k && bin.count as usize == ty {
            let full = self.open[slot].take().expect("open bin");
            self.close(slot, full);
        }
        Ok(placement)
    }

    fn close(&mut self, slot: usize, bin: OpenBin) {
        self.closed_bins[slot] += 1;
        self.closed_items[slot] += bin.count;
    }

    /// Closed bins of type `ty`.
    pub fn closed_bins(&self, ty: usize) -> u64 {
        self.closed_bins[ty - 1]
    }

    /// Items of type `ty` that sit in closed bins.
    pub fn closed_items(&self, ty: usize) -> u64 {
        self.closed_items[ty - 1]
    }

    /// Items of type `ty` in the open bin of that type (0 when none is open).
    pub fn open_items(&self, ty: usize) -> u64 {
        self.open[ty - 1].as_ref().map_or(0, |b| b.count)
    }

    /// Items of type `ty` placed so far.
    pub fn items(&self, ty: usize) -> u64 {
        self.items[ty - 1]
    }

    pub fn open_bins(&self) -> usize {
        self.open.iter().filter(|b| b.is_some()).count()
    }
}

/// Harmonic type of `size`: `i < k` on `(1/(i+1), 1/i]`, otherwise `k`.
pub fn harmonic_type(size: Rational, k: usize) -> Result<usize> {
    if size <= Rational::zero() || size > Rational::one() {
        return Err(Error::SizeOutOfRange);
    }
    let i = size.recip().floor().to_integer();
    Ok(if i >= k as i128 { k } else { i as usize })
}

/// The Harmonic weighting function `W_H`.
pub fn w_h(size: Rational, k: usize) -> Result<Rational> {
    let ty = harmonic_type(size, k)?;
    Ok(if ty < k { Rational::new(1, ty as i128) } else { Rational::new(k as i128, k as i128 - 1) * size })
}
