//! The Super Harmonic online packer.
//!
//! Every item of type `i ≤ k` is colored: the counters keep exactly
//! `e_i = ⌊α_i s_i⌋` of the `s_i` type-i items red. Blue items fill bins
//! `β_i` at a time; red items go `γ_i` at a time into the space `Δ_{φ(j)}`
//! left in bins of blue type-j items. Bins waiting for a partner color are
//! the indeterminate groups `(i,?)` and `(?,j)`. Type `k+1` items use Next
//! Fit in bins of their own.
//!
//! Whenever several bins satisfy a rule, the oldest bin (smallest id) is
//! used; conversions scan partner types in increasing order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::params::{validate, ParamTable};
use crate::rational::{floor_mul, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupTag {
    /// `(i)`: blue items of a type with `φ(i) = 0`.
    Blue(usize),
    /// `(i,?)`: blue items waiting for red ones.
    BlueOpen(usize),
    /// `(?,j)`: red items waiting for blue ones.
    RedOpen(usize),
    /// `(i,j)`.
    Pair(usize, usize),
    /// A Next Fit bin of type `k+1` items.
    NextFit,
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::Blue(i) => write!(f, "({i})"),
            GroupTag::BlueOpen(i) => write!(f, "({i},?)"),
            GroupTag::RedOpen(j) => write!(f, "(?,{j})"),
            GroupTag::Pair(i, j) => write!(f, "({i},{j})"),
            GroupTag::NextFit => write!(f, "NF"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Blue,
    Red,
    /// Type `k+1`, packed by Next Fit and never colored.
    Tiny,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Blue => "blue",
            Color::Red => "red",
            Color::Tiny => "tiny",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShBin {
    pub blue_type: Option<usize>,
    pub blue_count: u32,
    pub red_type: Option<usize>,
    pub red_count: u32,
    pub load: Rational,
    pub next_fit: bool,
}

impl ShBin {
    fn empty() -> Self {
        ShBin { blue_type: None, blue_count: 0, red_type: None, red_count: 0, load: Rational::zero(), next_fit: false }
    }

    pub fn group(&self, table: &ParamTable) -> GroupTag {
        if self.next_fit {
            return GroupTag::NextFit;
        }
        match (self.blue_type, self.red_type) {
            (Some(i), Some(j)) => GroupTag::Pair(i, j),
            (Some(i), None) if table.phi(i) == 0 => GroupTag::Blue(i),
            (Some(i), None) => GroupTag::BlueOpen(i),
            (None, Some(j)) => GroupTag::RedOpen(j),
            (None, None) => unreachable!("bins are opened with an item"),
        }
    }
}

/// Where an item went.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShPlacement {
    pub bin: usize,
    pub ty: usize,
    pub color: Color,
    pub opened: bool,
    pub group_before: Option<GroupTag>,
    pub group_after: GroupTag,
    /// Left end of the slot the item occupies. Blue items sit at multiples of
    /// `t_i` from the left, red items at multiples of `t_j` from the right,
    /// Next Fit items are stacked.
    pub offset: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub item_index: usize,
    pub size: Rational,
    pub placement: ShPlacement,
}

#[derive(Debug, Clone)]
pub struct ShState<'a> {
    table: &'a ParamTable,
    s: Vec<u64>,
    e: Vec<u64>,
    bins: Vec<ShBin>,
    // bins holding blue type-i items with fewer than β_i of them
    blue_room: Vec<BTreeSet<usize>>,
    // (?,i) bins with fewer than γ_i red items
    red_room_open: Vec<BTreeSet<usize>>,
    // (j,i) bins with fewer than γ_i red items
    red_room_paired: Vec<BTreeSet<usize>>,
    // all (?,j) bins, by j
    red_only: Vec<BTreeSet<usize>>,
    // all (i,?) bins, by i
    blue_only: Vec<BTreeSet<usize>>,
    // blue types j, increasing, whose (j,?) bins may take a red type-i item
    red_hosts: Vec<Vec<usize>>,
    // red types j, increasing, whose (?,j) bins may take a blue type-i item
    blue_hosts: Vec<Vec<usize>>,
    next_fit: Option<usize>,
    small_mass: Rational,
    small_count: u64,
    inserted: usize,
    trace: Option<Vec<TraceRecord>>,
}

impl<'a> ShState<'a> {
    /// Starts an empty run. The table must pass [`validate`].
    pub fn new(table: &'a ParamTable) -> Result<Self> {
        let violations = validate(table);
        if !violations.is_empty() {
            return Err(Error::InvalidTable(violations.len()));
        }
        let k = table.k();
        let red_hosts = (1..=k).map(|red| (1..=k).filter(|&blue| table.compatible(blue, red)).collect()).collect();
        let blue_hosts = (1..=k).map(|blue| (1..=k).filter(|&red| table.compatible(blue, red)).collect()).collect();
        Ok(ShState {
            table,
            s: vec![0; k],
            e: vec![0; k],
            bins: Vec::new(),
            blue_room: vec![BTreeSet::new(); k],
            red_room_open: vec![BTreeSet::new(); k],
            red_room_paired: vec![BTreeSet::new(); k],
            red_only: vec![BTreeSet::new(); k],
            blue_only: vec![BTreeSet::new(); k],
            red_hosts,
            blue_hosts,
            next_fit: None,
            small_mass: Rational::zero(),
            small_count: 0,
            inserted: 0,
            trace: None,
        })
    }

    /// Same as [`ShState::new`] but records a [`TraceRecord`] per item.
    pub fn with_trace(table: &'a ParamTable) -> Result<Self> {
        let mut state = Self::new(table)?;
        state.trace = Some(Vec::new());
        Ok(state)
    }

    pub fn table(&self) -> &'a ParamTable {
        self.table
    }

    /// Bins opened so far.
    pub fn cost(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[ShBin] {
        &self.bins
    }

    pub fn trace(&self) -> Option<&[TraceRecord]> {
        self.trace.as_deref()
    }

    /// `s_i`: type-i items seen so far.
    pub fn seen(&self, i: usize) -> u64 {
        self.s[i - 1]
    }

    /// `e_i`: type-i items colored red so far.
    pub fn red(&self, i: usize) -> u64 {
        self.e[i - 1]
    }

    /// `D`: total size of type `k+1` items.
    pub fn small_mass(&self) -> Rational {
        self.small_mass
    }

    pub fn small_count(&self) -> u64 {
        self.small_count
    }

    pub fn insert(&mut self, size: Rational) -> Result<ShPlacement> {
        let ty = self.table.classify(size)?;
        let placement = if ty == self.table.k() + 1 {
            self.insert_tiny(size, ty)
        } else {
            let slot = ty - 1;
            self.s[slot] += 1;
            if self.e[slot] < floor_mul(&self.table.alpha(ty), self.s[slot]) {
                self.e[slot] += 1;
                self.insert_red(size, ty)
            } else {
                self.insert_blue(size, ty)
            }
        };
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord { item_index: self.inserted, size, placement: placement.clone() });
        }
        self.inserted += 1;
        Ok(placement)
    }

    fn insert_tiny(&mut self, size: Rational, ty: usize) -> ShPlacement {
        self.small_mass += size;
        self.small_count += 1;
        let current = self.next_fit.filter(|&b| self.bins[b].load + size <= Rational::one());
        let (bin, opened) = match current {
            Some(b) => (b, false),
            None => {
                let b = self.open_bin();
                self.bins[b].next_fit = true;
                self.next_fit = Some(b);
                (b, true)
            }
        };
        let offset = self.bins[bin].load;
        self.bins[bin].load += size;
        ShPlacement {
            bin,
            ty,
            color: Color::Tiny,
            opened,
            group_before: if opened { None } else { Some(GroupTag::NextFit) },
            group_after: GroupTag::NextFit,
            offset,
        }
    }

    fn insert_red(&mut self, size: Rational, ty: usize) -> ShPlacement {
        let slot = ty - 1;
        let found = self.red_room_open[slot].first().or_else(|| self.red_room_paired[slot].first()).copied();
        let (bin, opened, before) = match found {
            Some(b) => (b, false, Some(self.bins[b].group(self.table))),
            None => {
                let host = self.red_hosts[slot].iter().find_map(|&blue| self.blue_only[blue - 1].first().copied());
                match host {
                    Some(b) => {
                        let blue = self.bins[b].blue_type.expect("(j,?) bin");
                        let before = Some(self.bins[b].group(self.table));
                        self.blue_only[blue - 1].remove(&b);
                        self.bins[b].red_type = Some(ty);
                        (b, false, before)
                    }
                    None => {
                        let b = self.open_bin();
                        self.bins[b].red_type = Some(ty);
                        self.red_only[slot].insert(b);
                        (b, true, None)
                    }
                }
            }
        };
        let gamma = self.table.gamma(ty);
        let t = self.table.t(ty);
        let bin_ref = &mut self.bins[bin];
        let offset = Rational::one() - t * Rational::from(bin_ref.red_count as i128 + 1);
        bin_ref.red_count += 1;
        bin_ref.load += size;
        let paired = bin_ref.blue_type.is_some();
        let full = bin_ref.red_count >= gamma;
        self.red_room_open[slot].remove(&bin);
        self.red_room_paired[slot].remove(&bin);
        if !full {
            if paired {
                self.red_room_paired[slot].insert(bin);
            } else {
                self.red_room_open[slot].insert(bin);
            }
        }
        ShPlacement {
            bin,
            ty,
            color: Color::Red,
            opened,
            group_before: before,
            group_after: self.bins[bin].group(self.table),
            offset,
        }
    }

    fn insert_blue(&mut self, size: Rational, ty: usize) -> ShPlacement {
        let slot = ty - 1;
        let phi = self.table.phi(ty);
        let (bin, opened, before) = match self.blue_room[slot].first().copied() {
            Some(b) => (b, false, Some(self.bins[b].group(self.table))),
            None if phi == 0 => {
                let b = self.open_bin();
                self.bins[b].blue_type = Some(ty);
                (b, true, None)
            }
            None => {
                let host = self.blue_hosts[slot].iter().find_map(|&red| self.red_only[red - 1].first().copied());
                match host {
                    Some(b) => {
                        let red = self.bins[b].red_type.expect("(?,j) bin");
                        let before = Some(self.bins[b].group(self.table));
                        self.red_only[red - 1].remove(&b);
                        if self.red_room_open[red - 1].remove(&b) {
                            self.red_room_paired[red - 1].insert(b);
                        }
                        self.bins[b].blue_type = Some(ty);
                        (b, false, before)
                    }
                    None => {
                        let b = self.open_bin();
                        self.bins[b].blue_type = Some(ty);
                        self.blue_only[slot].insert(b);
                        (b, true, None)
                    }
                }
            }
        };
        let beta = self.table.beta(ty);
        let t = self.table.t(ty);
        let bin_ref = &mut self.bins[bin];
        let offset = t * Rational::from(bin_ref.blue_count as i128);
        bin_ref.blue_count += 1;
        bin_ref.load += size;
        if bin_ref.blue_count >= beta {
            self.blue_room[slot].remove(&bin);
        } else {
            self.blue_room[slot].insert(bin);
        }
        ShPlacement {
            bin,
            ty,
            color: Color::Blue,
            opened,
            group_before: before,
            group_after: self.bins[bin].group(self.table),
            offset,
        }
    }

    fn open_bin(&mut self) -> usize {
        self.bins.push(ShBin::empty());
        self.bins.len() - 1
    }

    /// Bins that can still take an item of some color: blue-capable bins
    /// below `β`, red-capable bins below `γ`, and the current Next Fit bin.
    pub fn non_full_bins(&self) -> usize {
        let mut open: BTreeSet<usize> = BTreeSet::new();
        for set in self.blue_room.iter().chain(&self.red_room_open).chain(&self.red_room_paired) {
            open.extend(set.iter().copied());
        }
        open.extend(self.next_fit);
        open.len()
    }

    pub fn census(&self) -> Census {
        let k = self.table.k();
        let mut census = Census {
            only_blue: vec![0; k],
            blue_open: vec![0; k],
            red_open: vec![0; k],
            pairs: BTreeMap::new(),
            items: self.s.clone(),
            red_items: self.e.clone(),
            tiny_items: self.small_count,
            tiny_mass: self.small_mass,
            next_fit_bins: 0,
        };
        for bin in &self.bins {
            match bin.group(self.table) {
                GroupTag::Blue(i) => census.only_blue[i - 1] += 1,
                GroupTag::BlueOpen(i) => census.blue_open[i - 1] += 1,
                GroupTag::RedOpen(j) => census.red_open[j - 1] += 1,
                GroupTag::Pair(i, j) => *census.pairs.entry((i, j)).or_insert(0) += 1,
                GroupTag::NextFit => census.next_fit_bins += 1,
            }
        }
        census
    }

    /// Which weighting function governs this run, from the red indeterminate
    /// bins left at the end.
    pub fn final_case(&self) -> FinalCase {
        let indeterminate: u64 = self.red_only.iter().map(|s| s.len() as u64).sum();
        if indeterminate == 0 {
            return FinalCase { indeterminate, smallest_type: None, space: None, case_id: 1 };
        }
        // Larger type index means strictly smaller items, so the smallest red
        // item in a (?,·) bin has the largest type with such a bin.
        let r = (1..=self.table.k()).rev().find(|&j| !self.red_only[j - 1].is_empty()).unwrap();
        let j = self.table.varphi(r);
        let big_k = self.table.big_k();
        let case_id = if j >= 2 { big_k + 2 - j } else { big_k + 1 };
        FinalCase { indeterminate, smallest_type: Some(r), space: Some(j), case_id }
    }

    /// Checks the state invariants: the counter law, capacities, bin loads,
    /// group admissibility and the index structures. Returns a description of
    /// each failure.
    pub fn check_invariants(&self) -> Vec<String> {
        let table = self.table;
        let mut out = self.check_counters();
        for id in 0..self.bins.len() {
            self.check_bin(id, &mut out);
        }
        let mut blue_counts = vec![0u64; table.k()];
        let mut red_counts = vec![0u64; table.k()];
        for bin in &self.bins {
            if let Some(i) = bin.blue_type {
                blue_counts[i - 1] += bin.blue_count as u64;
            }
            if let Some(j) = bin.red_type {
                red_counts[j - 1] += bin.red_count as u64;
            }
        }
        for i in 1..=table.k() {
            if blue_counts[i - 1] != self.s[i - 1] - self.e[i - 1] {
                out.push(alloc::format!("blue type-{i} items lost"));
            }
            if red_counts[i - 1] != self.e[i - 1] {
                out.push(alloc::format!("red type-{i} items lost"));
            }
        }
        let bound = 2 * table.k() + table.big_k() + 2;
        if self.non_full_bins() > bound {
            out.push(alloc::format!("more than {bound} bins with room"));
        }
        out
    }

    /// The checks that one insertion can break: the counter law and the bin
    /// that received the item. Since no other bin changes, running this after
    /// every insertion of a run is equivalent to a full check after each one.
    pub fn check_step(&self, placement: &ShPlacement) -> Vec<String> {
        let mut out = self.check_counters();
        self.check_bin(placement.bin, &mut out);
        out
    }

    /// For a final case driven by space `j ≥ 2`: no `(?,i)` bin with
    /// `φ̂(i) < j` and no `(i,?)` bin with `φ(i) ≥ j` remains.
    pub fn check_structural_zeroes(&self) -> Vec<String> {
        let fc = self.final_case();
        let mut out = Vec::new();
        let j = match fc.space {
            Some(j) if j >= 2 => j,
            _ => return out,
        };
        for i in 1..=self.table.k() {
            if self.table.varphi(i) < j && !self.red_only[i - 1].is_empty() {
                out.push(alloc::format!("B_(?,{i}) > 0 although φ̂({i}) < {j}"));
            }
            if self.table.phi(i) >= j && !self.blue_only[i - 1].is_empty() {
                out.push(alloc::format!("B_({i},?) > 0 although φ({i}) ≥ {j}"));
            }
        }
        out
    }

    fn check_counters(&self) -> Vec<String> {
        let table = self.table;
        (1..=table.k())
            .filter(|&i| self.e[i - 1] != floor_mul(&table.alpha(i), self.s[i - 1]))
            .map(|i| alloc::format!("e_{i} ≠ ⌊α_{i} s_{i}⌋"))
            .collect()
    }

    fn check_bin(&self, id: usize, out: &mut Vec<String>) {
        let table = self.table;
        let bin = &self.bins[id];
        if bin.load > Rational::one() {
            out.push(alloc::format!("bin {id} is overfull"));
        }
        if let Some(i) = bin.blue_type {
            if bin.blue_count > table.beta(i) {
                out.push(alloc::format!("bin {id} holds more than β_{i} blue items"));
            }
            let has_room = bin.blue_count < table.beta(i);
            if has_room != self.blue_room[i - 1].contains(&id) {
                out.push(alloc::format!("bin {id}: blue room index out of date"));
            }
        }
        if let Some(j) = bin.red_type {
            if bin.red_count > table.gamma(j) {
                out.push(alloc::format!("bin {id} holds more than γ_{j} red items"));
            }
        }
        match bin.group(table) {
            GroupTag::Pair(i, j) if !table.compatible(i, j) => {
                out.push(alloc::format!("bin {id} pairs incompatible types ({i},{j})"));
            }
            GroupTag::Blue(i) if table.phi(i) != 0 => {
                out.push(alloc::format!("bin {id} in group ({i}) but φ({i}) ≠ 0"));
            }
            GroupTag::RedOpen(j) if !self.red_only[j - 1].contains(&id) => {
                out.push(alloc::format!("bin {id}: red-only index out of date"));
            }
            GroupTag::BlueOpen(i) if !self.blue_only[i - 1].contains(&id) => {
                out.push(alloc::format!("bin {id}: blue-only index out of date"));
            }
            _ => {}
        }
    }
}

/// Bin and item counts of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Census {
    /// `B_(i)`
    pub only_blue: Vec<u64>,
    /// `B_(i,?)`
    pub blue_open: Vec<u64>,
    /// `B_(?,j)`
    pub red_open: Vec<u64>,
    /// `B_(i,j)`
    pub pairs: BTreeMap<(usize, usize), u64>,
    /// `l_i`
    pub items: Vec<u64>,
    pub red_items: Vec<u64>,
    pub tiny_items: u64,
    pub tiny_mass: Rational,
    pub next_fit_bins: u64,
}

impl Census {
    /// Bins holding blue type-i items: `B_(i) + B_(i,?) + Σ_s B_(i,s)`.
    pub fn blue_bins(&self, i: usize) -> u64 {
        let paired: u64 = self.pairs.iter().filter(|((b, _), _)| *b == i).map(|(_, n)| n).sum();
        self.only_blue[i - 1] + self.blue_open[i - 1] + paired
    }

    /// Bins holding red type-i items: `B_(?,i) + Σ_s B_(s,i)`.
    pub fn red_bins(&self, i: usize) -> u64 {
        let paired: u64 = self.pairs.iter().filter(|((_, r), _)| *r == i).map(|(_, n)| n).sum();
        self.red_open[i - 1] + paired
    }

    pub fn total_bins(&self) -> u64 {
        self.only_blue.iter().sum::<u64>()
            + self.blue_open.iter().sum::<u64>()
            + self.red_open.iter().sum::<u64>()
            + self.pairs.values().sum::<u64>()
            + self.next_fit_bins
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalCase {
    /// `E`: number of `(?,·)` bins at the end.
    pub indeterminate: u64,
    /// `r`: type of the smallest red item in a `(?,·)` bin.
    pub smallest_type: Option<usize>,
    /// `j = φ̂(r)`.
    pub space: Option<usize>,
    /// Index of the weighting function: 1 when `E = 0`, `K+2−j` for
    /// `j ≥ 2`, `K+1` for `j = 1`.
    pub case_id: usize,
}
