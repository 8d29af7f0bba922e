//! Ratio certificates: parallel evaluation, λ files and report formats.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use harmpack_core::boundcert::{assemble, Certifier, LambdaTable, PairResult, RatioCertificate, RetainRule, TailMode};
use harmpack_core::rational::{parse_rational, q_to_f64, render_decimal, render_fraction, Rational};
use serde::Serialize;

use crate::HarnessError;

/// Pairs whose exact-tail product exceeds the tiny-ratio one by more than
/// this are flagged.
pub const TAIL_FLAG: f64 = 1e-6;

/// Evaluates every ordered pair on up to `threads` workers and assembles the
/// certificate. The result does not depend on the thread count.
pub fn certificate(
    certifier: &Certifier<'_>,
    lambdas: &LambdaTable,
    mode: TailMode,
    rule: RetainRule,
    delta: Option<Rational>,
    threads: usize,
) -> Result<RatioCertificate, HarnessError> {
    let cases = certifier.set().cases();
    if lambdas.cases() < cases {
        return Err(HarnessError::Input(format!("λ table has {} cases, need {cases}", lambdas.cases())));
    }
    let jobs: Vec<(usize, usize)> = (1..=cases).flat_map(|i| (1..=cases).map(move |j| (i, j))).collect();
    let slots: Vec<Mutex<Option<harmpack_core::Result<PairResult>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.len()) {
            s.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, j)) = jobs.get(n) else { break };
                let r = certifier.pair(i, j, lambdas.get(i, j), mode);
                *slots[n].lock().expect("slot") = Some(r);
            });
        }
    });
    let pairs = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("every job ran"))
        .collect::<harmpack_core::Result<Vec<_>>>()?;
    Ok(assemble(pairs, mode, rule, delta)?)
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(NonZeroUsize::get).unwrap_or(1)
}

/// Square table of λ values, one row per line, separated by spaces or
/// commas; `#` starts a comment.
pub fn parse_lambda_file(text: &str) -> Result<LambdaTable, HarnessError> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| parse_rational(s).map_err(|e| HarnessError::Input(format!("line {}: {e}", n + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(LambdaTable::new(rows)?)
}

pub const CERT_HEADER: [&str; 7] = ["i", "j", "lambda", "Pf", "Pg", "product", "retained"];

/// Rows of the certificate CSV. `retained` is 1 when the pair's product
/// bounds some ordered pair.
pub fn certificate_rows(cert: &RatioCertificate) -> Vec<[String; 7]> {
    cert.pairs
        .iter()
        .map(|p| {
            [
                p.i.to_string(),
                p.j.to_string(),
                render_fraction(&p.lambda),
                render_decimal(&p.pf.value, 6),
                render_decimal(&p.pg.value, 6),
                render_decimal(&p.product, 6),
                u8::from(cert.is_retained(p.i, p.j)).to_string(),
            ]
        })
        .collect()
}

pub fn summary_line(cert: &RatioCertificate) -> String {
    let mut s = format!(
        "# mode={} max_retained={} at ({},{})",
        cert.mode.name(),
        render_decimal(&cert.max_retained, 6),
        cert.argmax.0,
        cert.argmax.1
    );
    if let Some(d) = cert.delta {
        s.push_str(&format!(" delta={} bound={}", render_fraction(&d), render_decimal(&cert.bound, 6)));
    } else {
        s.push_str(&format!(" bound={}", render_decimal(&cert.bound, 6)));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessEntry {
    pub i: usize,
    pub j: usize,
    pub pf: String,
    pub pg: String,
    /// `(type, count)` for the maximizing pattern of `f`.
    pub f_pattern: Vec<(usize, u32)>,
    pub g_pattern: Vec<(usize, u32)>,
}

fn sparse(pattern: &[u32]) -> Vec<(usize, u32)> {
    pattern.iter().enumerate().filter(|(_, &c)| c > 0).map(|(m, &c)| (m + 1, c)).collect()
}

pub fn witness(cert: &RatioCertificate) -> Vec<WitnessEntry> {
    cert.pairs
        .iter()
        .map(|p| WitnessEntry {
            i: p.i,
            j: p.j,
            pf: p.pf.value.to_string(),
            pg: p.pg.value.to_string(),
            f_pattern: sparse(&p.pf.pattern),
            g_pattern: sparse(&p.pg.pattern),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TailComparison {
    pub i: usize,
    pub j: usize,
    pub lambda: String,
    pub tiny_ratio: String,
    pub exact: String,
    pub excess: String,
    pub flagged: bool,
}

/// Both tail modes side by side for every pair with `λ ≠ 1/2`.
pub fn compare_tails(compat: &RatioCertificate, exact: &RatioCertificate) -> Vec<TailComparison> {
    let half = Rational::new(1, 2);
    compat
        .pairs
        .iter()
        .zip(&exact.pairs)
        .filter(|(c, _)| c.lambda != half)
        .map(|(c, e)| {
            let excess = &e.product - &c.product;
            TailComparison {
                i: c.i,
                j: c.j,
                lambda: render_fraction(&c.lambda),
                tiny_ratio: render_decimal(&c.product, 6),
                exact: render_decimal(&e.product, 6),
                excess: render_decimal(&excess, 9),
                flagged: q_to_f64(&excess) > TAIL_FLAG,
            }
        })
        .collect()
}
