//! Instance files and seeded generators.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so a config
//! yields the same list on every platform. Random lengths are multiples of
//! `1/GRID`.

use std::fmt::Write as _;
use std::path::PathBuf;

use harmpack_core::pack2d::Item2D;
use harmpack_core::params::ParamTable;
use harmpack_core::rational::{parse_rational, rat, render_fraction};
use harmpack_core::Rational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::HarnessError;

pub const GRID: i128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Sides uniform on `(lo, hi]`.
    Uniform,
    /// Batches of sizes just above a class boundary, smallest batches first.
    HarmonicAdversarial,
    /// Items that exactly fill `bins` bins.
    TiledKnownOpt,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceConfig {
    pub kind: Kind,
    pub n: usize,
    pub seed: u64,
    pub dims: u8,
    #[serde(serialize_with = "fraction")]
    pub lo: Rational,
    #[serde(serialize_with = "fraction")]
    pub hi: Rational,
    /// Bins to fill for `tiled-known-opt`.
    pub bins: usize,
    /// Contents of one tiled bin, as 1D sizes or `(w, h)` pieces; random
    /// tilings are drawn per bin when absent.
    #[serde(skip)]
    pub pattern: Option<Vec<Item2D>>,
    pub shuffle: bool,
    pub path: Option<PathBuf>,
}

fn fraction<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&render_fraction(r))
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            kind: Kind::Uniform,
            n: 1000,
            seed: 0,
            dims: 1,
            lo: Rational::zero(),
            hi: Rational::one(),
            bins: 10,
            pattern: None,
            shuffle: false,
            path: None,
        }
    }
}

impl InstanceConfig {
    pub fn describe(&self) -> String {
        match self.kind {
            Kind::File => format!("file {}", self.path.as_deref().unwrap_or("-".as_ref()).display()),
            Kind::Uniform => format!(
                "uniform({},{}] n={} seed={} dims={}",
                render_fraction(&self.lo),
                render_fraction(&self.hi),
                self.n,
                self.seed,
                self.dims
            ),
            Kind::HarmonicAdversarial => {
                format!("harmonic-adversarial n={} seed={} dims={}", self.n, self.seed, self.dims)
            }
            Kind::TiledKnownOpt => {
                let mut s = format!("tiled-known-opt bins={} seed={} dims={}", self.bins, self.seed, self.dims);
                if self.pattern.is_some() {
                    s.push_str(" pattern");
                }
                if self.shuffle {
                    s.push_str(" shuffled");
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Items {
    OneD(Vec<Rational>),
    TwoD(Vec<Item2D>),
}

impl Items {
    pub fn len(&self) -> usize {
        match self {
            Items::OneD(v) => v.len(),
            Items::TwoD(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total size (1D) or area (2D).
    pub fn volume(&self) -> Rational {
        match self {
            Items::OneD(v) => v.iter().copied().sum(),
            Items::TwoD(v) => v.iter().map(|p| p.w * p.h).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub items: Items,
    /// The optimal number of bins, when the generator knows it.
    pub known_opt: Option<u64>,
}

pub fn generate(config: &InstanceConfig, table: &ParamTable) -> Result<Instance, HarnessError> {
    if config.dims != 1 && config.dims != 2 {
        return Err(HarnessError::Config("dims must be 1 or 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let two = config.dims == 2;
    let wrap = |sides: Vec<Item2D>| {
        if two {
            Items::TwoD(sides)
        } else {
            Items::OneD(sides.into_iter().map(|p| p.w).collect())
        }
    };
    match config.kind {
        Kind::File => {
            let path = config.path.as_ref().ok_or_else(|| HarnessError::Config("file kind needs a path".into()))?;
            let text = std::fs::read_to_string(path)?;
            let items = if two { Items::TwoD(parse_2d(&text)?) } else { Items::OneD(parse_1d(&text)?) };
            Ok(Instance { items, known_opt: None })
        }
        Kind::Uniform => {
            if config.lo < Rational::zero() || config.hi > Rational::one() || config.lo >= config.hi {
                return Err(HarnessError::Config("need 0 ≤ lo < hi ≤ 1".into()));
            }
            let lo = (config.lo * GRID).ceil().to_integer();
            let hi = (config.hi * GRID).floor().to_integer();
            if lo >= hi {
                return Err(HarnessError::Config("(lo, hi] holds no grid point".into()));
            }
            let mut side = || rat(rng.gen_range(lo + 1..=hi), GRID);
            let items = (0..config.n)
                .map(|_| {
                    let w = side();
                    let h = if two { side() } else { Rational::one() };
                    Item2D { w, h }
                })
                .collect();
            Ok(Instance { items: wrap(items), known_opt: None })
        }
        Kind::HarmonicAdversarial => {
            let sizes = critical_sizes(table);
            let mut batches: Vec<(Rational, Vec<Item2D>)> = Vec::new();
            let mut left = config.n;
            while left > 0 {
                let len = rng.gen_range(1..=(config.n / 10).max(1)).min(left);
                left -= len;
                let w = *sizes.choose(&mut rng).expect("non-empty");
                let h = if two { *sizes.choose(&mut rng).expect("non-empty") } else { Rational::one() };
                batches.push((w * h, vec![Item2D { w, h }; len]));
            }
            // Small items first, so that larger ones arrive when the bins
            // holding the small ones can no longer take them.
            batches.sort_by_key(|b| b.0);
            let items = batches.into_iter().flat_map(|(_, b)| b).collect();
            Ok(Instance { items: wrap(items), known_opt: None })
        }
        Kind::TiledKnownOpt => {
            let mut items = Vec::new();
            for _ in 0..config.bins {
                match &config.pattern {
                    Some(p) => items.extend_from_slice(p),
                    None if two => items.extend(random_tiling_2d(&mut rng)),
                    None => items.extend(random_tiling_1d(&mut rng)),
                }
            }
            if let Some(p) = &config.pattern {
                let volume: Rational = p.iter().map(|q| if two { q.w * q.h } else { q.w }).sum();
                if volume != Rational::one() {
                    return Err(HarnessError::Config(format!(
                        "tiling pattern fills {} of a bin, not exactly 1",
                        render_fraction(&volume)
                    )));
                }
            }
            if config.shuffle {
                items.shuffle(&mut rng);
            }
            Ok(Instance { items: wrap(items), known_opt: Some(config.bins as u64) })
        }
    }
}

// Sizes just above each class boundary of the table and of Harmonic(38).
fn critical_sizes(table: &ParamTable) -> Vec<Rational> {
    let eta = rat(1, GRID);
    let mut out: Vec<Rational> = (2..=table.k() + 1).map(|i| table.t(i) + eta).collect();
    out.extend((2..=38).map(|m| rat(1, m) + eta));
    out.push(rat(1, 100));
    out.sort();
    out.dedup();
    out
}

fn random_tiling_1d(rng: &mut ChaCha8Rng) -> Vec<Item2D> {
    let pieces = rng.gen_range(2..=8);
    let mut cuts: Vec<i128> = (1..pieces).map(|_| rng.gen_range(1..GRID)).collect();
    cuts.push(0);
    cuts.push(GRID);
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| Item2D { w: rat(w[1] - w[0], GRID), h: Rational::one() }).collect()
}

// Guillotine splits of the unit square.
fn random_tiling_2d(rng: &mut ChaCha8Rng) -> Vec<Item2D> {
    let pieces = rng.gen_range(1..=8);
    let mut rects = vec![(GRID, GRID)];
    while rects.len() < pieces {
        let idx = rng.gen_range(0..rects.len());
        let (w, h) = rects[idx];
        if rng.gen_bool(0.5) && w > 1 {
            let cut = rng.gen_range(1..w);
            rects[idx] = (cut, h);
            rects.push((w - cut, h));
        } else if h > 1 {
            let cut = rng.gen_range(1..h);
            rects[idx] = (w, cut);
            rects.push((w, h - cut));
        }
    }
    rects.into_iter().map(|(w, h)| Item2D { w: rat(w, GRID), h: rat(h, GRID) }).collect()
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((n + 1, l))
    })
}

fn side(line: usize, s: &str) -> Result<Rational, HarnessError> {
    let x = parse_rational(s).map_err(|e| HarnessError::Input(format!("line {line}: {e}")))?;
    if x <= Rational::zero() || x > Rational::one() {
        return Err(HarnessError::Input(format!("line {line}: {s} is not in (0, 1]")));
    }
    Ok(x)
}

/// One size per line; `#` starts a comment.
pub fn parse_1d(text: &str) -> Result<Vec<Rational>, HarnessError> {
    lines(text).map(|(n, l)| side(n, l)).collect()
}

/// `w h` per line; `#` starts a comment.
pub fn parse_2d(text: &str) -> Result<Vec<Item2D>, HarnessError> {
    lines(text)
        .map(|(n, l)| {
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(h), None) => Ok(Item2D { w: side(n, w)?, h: side(n, h)? }),
                _ => Err(HarnessError::Input(format!("line {n}: expected `w h`"))),
            }
        })
        .collect()
}

/// Renders `r` as a finite decimal when it has one, else as `p/q`.
pub fn render_exact(r: &Rational) -> String {
    let mut d = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let places = twos.max(fives);
    if d != 1 || places > 30 {
        return render_fraction(r);
    }
    let scaled = *r * Rational::from(10i128.pow(places));
    let units = scaled.to_integer();
    if places == 0 {
        return units.to_string();
    }
    let digits = format!("{:0>width$}", units.abs(), width = places as usize + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places as usize);
    let sign = if units < 0 { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

pub fn write_items(items: &Items, header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    match items {
        Items::OneD(v) => v.iter().for_each(|s| {
            let _ = writeln!(out, "{}", render_exact(s));
        }),
        Items::TwoD(v) => v.iter().for_each(|p| {
            let _ = writeln!(out, "{} {}", render_exact(&p.w), render_exact(&p.h));
        }),
    }
    out
}
