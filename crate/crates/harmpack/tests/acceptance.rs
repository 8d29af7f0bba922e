//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The process fails when a criterion outside `KNOWN_FAILURES` fails, or when
//! any criterion fails and `ACCEPTANCE_STRICT=1` is set. Known failures still
//! print FAIL with the measured evidence.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use harmpack::certify::{self, compare_tails};
use harmpack::instance::{generate, InstanceConfig, Items, Kind};
use harmpack_core::boundcert::{
    assemble, brute_force_max, pattern_max, validate_cut, Certifier, LambdaTable, LinearConstraint, PatternModel,
    PiecewiseFn, RatioCertificate, RetainRule, TailMode,
};
use harmpack_core::harmonic1d::{w_h, HarmonicState};
use harmpack_core::pack2d::{validate_geometry, weight_sums, Orientation, TensorRun};
use harmpack_core::params::{builtin_shplus, ParamTable};
use harmpack_core::rational::{q_int, q_to_f64, rat, render_decimal, render_fraction, to_q, Rational};
use harmpack_core::superharmonic::ShState;
use harmpack_core::weighting::{bound_check, WeightFunctionSet};
use harmpack_core::Q;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest accepted distance between a 6-decimal rendering and a table entry.
const TABLE_TOL: f64 = 5e-7;
/// The retained bound must lie in this closed interval.
const BOUND_RANGE: (f64, f64) = (2.5544, 2.5545);
const ORACLE_FUNCTIONS: usize = 100;
const ORACLE_TYPES: usize = 12;
const SH_SLACK: i64 = 108;
/// Allowed growth of the worst SH+ slack from n = 10³ to n = 10⁵.
const SLACK_GROWTH: f64 = 10.0;
const SH_INSTANCES_PER_N: usize = 70;
const HARMONIC_K: usize = 38;
const TENSOR_LISTS: usize = 1000;
const TENSOR_MAX_N: usize = 10_000;
const TENSOR_SLACK: i64 = 300;
const TENSOR_DELTA: (i128, i128) = (1, 10_000);
/// Exact-tail products above tiny-ratio by more than this are flagged.
const TAIL_FLAG: f64 = certify::TAIL_FLAG;

/// Criteria that are expected to fail, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[
    (1, "about a third of the reference entries differ in the 6th decimal from exact maxima"),
    (4, "the cut 5·x7 + 3.53·x11 + 1.47·x18 ≤ 9 excludes a fitting pattern"),
];

const REFERENCE_PF: [[f64; 7]; 7] = [
    [1.598272, 1.598272, 1.605095, 1.606845, 1.609490, 1.609490, 1.615665],
    [1.597328, 1.597328, 1.597148, 1.597028, 1.596938, 1.596938, 1.596729],
    [1.573676, 1.573676, 1.572837, 1.572777, 1.572732, 1.572732, 1.572627],
    [1.581245, 1.581245, 1.577140, 1.575380, 1.573621, 1.573621, 1.569515],
    [1.585370, 1.585370, 1.580113, 1.577860, 1.575607, 1.575607, 1.570350],
    [1.586853, 1.586853, 1.582237, 1.579160, 1.576853, 1.576853, 1.571468],
    [1.568686, 1.560602, 1.549821, 1.539044, 1.533655, 1.530958, 1.517143],
];

const REFERENCE_PG: [[f64; 7]; 7] = [
    [1.598272, 1.597872, 1.574422, 1.581742, 1.585430, 1.587508, 1.575580],
    [1.609235, 1.598326, 1.586301, 1.595016, 1.602278, 1.604268, 1.589545],
    [1.609235, 1.598326, 1.586301, 1.595016, 1.602278, 1.604268, 1.589545],
    [1.609235, 1.598326, 1.586855, 1.595016, 1.602278, 1.604268, 1.589545],
    [1.609542, 1.598326, 1.587240, 1.595374, 1.602747, 1.604737, 1.589740],
    [1.609785, 1.598326, 1.586682, 1.595657, 1.603117, 1.605107, 1.589894],
    [1.621572, 1.609605, 1.602462, 1.612258, 1.622822, 1.638219, 1.624359],
];

const REFERENCE_PRODUCT: [[f64; 7]; 7] = [
    [2.554474, 2.553834, 2.527096, 2.541614, 2.551734, 2.555079, 2.545610],
    [2.570476, 2.553051, 2.533557, 2.547285, 2.558739, 2.561917, 2.538073],
    [2.532414, 2.515247, 2.494992, 2.508604, 2.519954, 2.523084, 2.499762],
    [2.544594, 2.527344, 2.502692, 2.512755, 2.521378, 2.524510, 2.494814],
    [2.551720, 2.533939, 2.508019, 2.517277, 2.525300, 2.528436, 2.496449],
    [2.554493, 2.536309, 2.510507, 2.519798, 2.527881, 2.531019, 2.498468],
    [2.543738, 2.511952, 2.483529, 2.481335, 2.488849, 2.508043, 2.464386],
];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: Vec<String>,
    secs: f64,
}

fn main() {
    let table = builtin_shplus();
    let set = WeightFunctionSet::new(&table);
    let mut outcomes = Vec::new();

    let t = Instant::now();
    let certifier = Certifier::new(&set, PatternModel::shplus(&table).expect("model")).expect("certifier");
    let compat = certify::certificate(
        &certifier,
        &LambdaTable::shplus(),
        TailMode::TinyRatio,
        RetainRule::published(),
        None,
        certify::default_threads(),
    )
    .expect("tiny-ratio certificate");
    let cert_secs = t.elapsed().as_secs_f64();

    outcomes.push(timed(1, "reference tables reproduced in tiny-ratio mode", || reference_tables(&compat), cert_secs));
    outcomes.push(timed(2, "retained bound with the four transposes", || retained_bound(&compat), 0.0));
    outcomes.push(timed(3, "branch and bound equals exhaustive search", || oracle_equivalence(&table), 0.0));
    outcomes.push(timed(4, "caps and cuts valid, mutations caught", || cut_validity(&table), 0.0));
    let (c5, c6, c8) = one_dimensional_suite(&table, &set);
    outcomes.extend([c5, c6]);
    outcomes.push(timed(7, "2D geometry and averaged weight inequality", || tensor_suite(&table, &set), 0.0));
    outcomes.push(c8);
    outcomes.push(timed(9, "exact-tail versus tiny-ratio report", || tail_report(&certifier, &compat), 0.0));
    outcomes.sort_by_key(|o| o.id);

    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_FAILURES.iter().find(|(id, _)| *id == o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (known)",
            (false, None) => "FAIL",
        };
        println!("[{tag}] criterion {}: {} ({:.1}s)", o.id, o.name, o.secs);
        for line in &o.detail {
            println!("        {line}");
        }
        if let (false, Some((_, why))) = (o.pass, known) {
            println!("        known failure: {why}");
        }
        if !o.pass && (known.is_none() || strict) {
            unexpected += 1;
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}

fn timed(id: u32, name: &'static str, f: impl FnOnce() -> (bool, Vec<String>), extra: f64) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome { id, name, pass, detail, secs: t.elapsed().as_secs_f64() + extra }
}

fn six(q: &Q) -> f64 {
    render_decimal(q, 6).parse().expect("decimal")
}

type Column = fn(&harmpack_core::boundcert::PairResult) -> &Q;

fn reference_tables(cert: &RatioCertificate) -> (bool, Vec<String>) {
    let mut detail = Vec::new();
    let mut all = true;
    let tables: [(&str, &[[f64; 7]; 7], Column); 3] = [
        ("P(f)", &REFERENCE_PF, |p| &p.pf.value),
        ("P(g)", &REFERENCE_PG, |p| &p.pg.value),
        ("product", &REFERENCE_PRODUCT, |p| &p.product),
    ];
    for (name, reference, pick) in tables {
        let mut bad = Vec::new();
        let mut worst = 0.0f64;
        for i in 1..=7 {
            for j in 1..=7 {
                let ours = six(pick(cert.pair(i, j)));
                let diff = (ours - reference[i - 1][j - 1]).abs();
                worst = worst.max(diff);
                if diff > TABLE_TOL {
                    bad.push(format!("({i},{j}) {ours:.6} vs {:.6}", reference[i - 1][j - 1]));
                }
            }
        }
        all &= bad.is_empty();
        detail.push(format!("{name}: {}/49 match, max |diff| {worst:.1e}", 49 - bad.len()));
        if !bad.is_empty() {
            detail.push(format!("  {}", bad.iter().take(6).cloned().collect::<Vec<_>>().join("; ")));
        }
    }
    (all, detail)
}

fn retained_bound(cert: &RatioCertificate) -> (bool, Vec<String>) {
    let v = q_to_f64(&cert.bound);
    let pass = (BOUND_RANGE.0..=BOUND_RANGE.1).contains(&v);
    let mut detail = vec![format!(
        "bound {} at ({},{}), required within [{}, {}]",
        render_decimal(&cert.bound, 6),
        cert.argmax.0,
        cert.argmax.1,
        BOUND_RANGE.0,
        BOUND_RANGE.1
    )];
    if let Ok(min) = assemble(cert.pairs.clone(), cert.mode, RetainRule::MinOfBoth, None) {
        detail.push(format!("min-of-both rule gives {}", render_decimal(&min.bound, 6)));
    }
    (pass, detail)
}

fn random_fn(rng: &mut ChaCha8Rng, n: usize) -> PiecewiseFn {
    let value = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.2) {
            Q::zero()
        } else {
            q_int(rng.gen_range(1..=2000)) / q_int(1000)
        }
    };
    let values = (0..n).map(|_| value(rng)).collect();
    let tail_slope = value(rng);
    PiecewiseFn { values, tail_slope }
}

fn oracle_equivalence(table: &ParamTable) -> (bool, Vec<String>) {
    let full = PatternModel::shplus(table).expect("model");
    let model = full.truncated(ORACLE_TYPES).without_cuts();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = Vec::new();
    let mut nodes = (0u64, 0u64);
    for n in 0..ORACLE_FUNCTIONS {
        let f = random_fn(&mut rng, ORACLE_TYPES);
        let (fast, slow) = match (pattern_max(&f, &model), brute_force_max(&f, &model)) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                mismatches.push(format!("function {n}: {:?} / {:?}", a.err(), b.err()));
                continue;
            }
        };
        nodes.0 += fast.nodes;
        nodes.1 += slow.nodes;
        if fast.value != slow.value {
            mismatches.push(format!("function {n}: {} vs {}", fast.value, slow.value));
        }
    }
    let detail = vec![format!(
        "{}/{ORACLE_FUNCTIONS} equal on {ORACLE_TYPES} types; nodes {} (branch and bound) vs {} (exhaustive)",
        ORACLE_FUNCTIONS - mismatches.len(),
        nodes.0,
        nodes.1
    )];
    let pass = mismatches.is_empty();
    (pass, detail.into_iter().chain(mismatches.into_iter().take(5)).collect())
}

fn cut_validity(table: &ParamTable) -> (bool, Vec<String>) {
    let model = PatternModel::shplus(table).expect("model");
    let mut invalid = Vec::new();
    let mut missed = Vec::new();
    let constraints: Vec<&LinearConstraint> = model.caps().iter().chain(model.cuts()).collect();
    for c in &constraints {
        let check = validate_cut(c, &model).expect("validate");
        if let Some(x) = &check.counterexample {
            invalid.push(format!("{c}: pattern {x:?} reaches {}", render_fraction(&check.max_lhs)));
        }
        // Tightening the rhs to just below the attained maximum must be caught.
        if check.max_lhs.is_zero() {
            continue;
        }
        let tighter = LinearConstraint::new(c.terms.clone(), check.max_lhs - rat(1, 1000));
        if validate_cut(&tighter, &model).expect("validate").is_valid() {
            missed.push(format!("{tighter}"));
        }
    }
    let example = LinearConstraint::new(vec![(50, Rational::one())], Rational::from(2));
    let example_caught = !validate_cut(&example, &model).expect("validate").is_valid();
    let mut detail = vec![
        format!(
            "{}/{} constraints valid ({} caps, {} cuts)",
            constraints.len() - invalid.len(),
            constraints.len(),
            model.caps().len(),
            model.cuts().len()
        ),
        format!(
            "{}/{} tightened copies rejected; x50 ≤ 2 rejected: {example_caught}",
            constraints.len() - missed.len(),
            constraints.len()
        ),
    ];
    detail.extend(invalid.iter().cloned());
    detail.extend(missed.iter().map(|m| format!("not caught: {m}")));
    (invalid.is_empty() && missed.is_empty() && example_caught, detail)
}

/// Runs `f` over `jobs` on all cores and returns results in job order.
fn par_map<T: Sync, R: Send>(jobs: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..certify::default_threads().min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let n = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(n) else { break };
                let r = f(job);
                *slots[n].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot").expect("ran")).collect()
}

fn one_d_configs() -> Vec<InstanceConfig> {
    let mut configs = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        for s in 0..SH_INSTANCES_PER_N as u64 {
            let base = InstanceConfig { n, seed: s * 1009 + n as u64, ..InstanceConfig::default() };
            configs.push(match s % 7 {
                0 | 1 => base,
                2 => InstanceConfig { hi: rat(1, 2), ..base },
                3 => InstanceConfig { lo: rat(1, 10), hi: rat(1, 2), ..base },
                4 => InstanceConfig { hi: rat(1, 10), ..base },
                5 => InstanceConfig { kind: Kind::HarmonicAdversarial, ..base },
                _ => InstanceConfig { kind: Kind::TiledKnownOpt, bins: n / 5, shuffle: s % 2 == 0, ..base },
            });
        }
    }
    configs
}

struct OneDResult {
    n: usize,
    sh_slack: f64,
    sh_final_slack: f64,
    invariant_errors: Vec<String>,
    zero_errors: Vec<String>,
    space: Option<usize>,
    harmonic_slack: Q,
}

fn run_one_d(config: &InstanceConfig, table: &ParamTable, set: &WeightFunctionSet) -> OneDResult {
    let Items::OneD(sizes) = generate(config, table).expect("generate").items else { unreachable!() };
    let mut sh = ShState::new(table).expect("state");
    let mut invariant_errors = Vec::new();
    for (idx, &s) in sizes.iter().enumerate() {
        let p = sh.insert(s).expect("insert");
        for e in sh.check_step(&p) {
            invariant_errors.push(format!("{}: item {idx}: {e}", config.describe()));
        }
    }
    invariant_errors.extend(sh.check_invariants().into_iter().map(|e| format!("{}: {e}", config.describe())));
    let zero_errors = sh.check_structural_zeroes().into_iter().map(|e| format!("{}: {e}", config.describe())).collect();
    let report = bound_check(&sh, set);

    let mut h = HarmonicState::new(HARMONIC_K).expect("harmonic");
    let mut weight = Rational::zero();
    for &s in &sizes {
        h.insert(s).expect("insert");
        weight += w_h(s, HARMONIC_K).expect("weight");
    }
    OneDResult {
        n: config.n,
        sh_slack: q_to_f64(&report.slack),
        sh_final_slack: q_to_f64(&report.final_slack),
        invariant_errors,
        zero_errors,
        space: sh.final_case().space,
        harmonic_slack: q_int(h.cost() as i64) - to_q(&weight),
    }
}

fn one_dimensional_suite(table: &ParamTable, set: &WeightFunctionSet) -> (Outcome, Outcome, Outcome) {
    let t = Instant::now();
    let configs = one_d_configs();
    let results = par_map(&configs, |s| run_one_d(s, table, set));
    let secs = t.elapsed().as_secs_f64();

    let worst = |n: usize| results.iter().filter(|r| r.n == n).map(|r| r.sh_slack).fold(f64::NEG_INFINITY, f64::max);
    let worst_final = results.iter().map(|r| r.sh_final_slack).fold(f64::NEG_INFINITY, f64::max);
    let over: Vec<&OneDResult> = results.iter().filter(|r| r.sh_slack > SH_SLACK as f64).collect();
    let (w3, w4, w5) = (worst(1_000), worst(10_000), worst(100_000));
    let growth_ok = w5 <= w3 + SLACK_GROWTH;
    let c5 = Outcome {
        id: 5,
        name: "SH+ cost within max_c ΣW^c + 108, slack not growing",
        pass: over.is_empty() && growth_ok && results.len() >= 200,
        detail: vec![
            format!("{} instances; worst slack by n: 10³ {w3:.3}, 10⁴ {w4:.3}, 10⁵ {w5:.3}", results.len()),
            format!("worst slack against the realized case only: {worst_final:.3}"),
            format!("{} instances above {SH_SLACK}; growth allowance {SLACK_GROWTH}", over.len()),
        ],
        secs,
    };

    let inv: Vec<&String> = results.iter().flat_map(|r| &r.invariant_errors).collect();
    let zeros: Vec<&String> = results.iter().flat_map(|r| &r.zero_errors).collect();
    let driven = results.iter().filter(|r| r.space.is_some_and(|j| j >= 2)).count();
    let insertions: usize = configs.iter().map(|s| s.n).sum();
    let mut detail = vec![
        format!("about {insertions} insertions checked, {} invariant violations", inv.len()),
        format!("{driven} runs end in a case with space j ≥ 2; {} structural-zero violations", zeros.len()),
    ];
    detail.extend(inv.iter().chain(&zeros).take(5).map(|s| s.to_string()));
    let c6 = Outcome {
        id: 6,
        name: "Super Harmonic state machine invariants",
        pass: inv.is_empty() && zeros.is_empty(),
        detail,
        secs: 0.0,
    };

    let worst_h = results.iter().map(|r| &r.harmonic_slack).fold(None::<&Q>, |a, b| match a {
        Some(a) if a >= b => Some(a),
        _ => Some(b),
    });
    let bad_h = results.iter().filter(|r| r.harmonic_slack > q_int(HARMONIC_K as i64)).count();
    let c8 = Outcome {
        id: 8,
        name: "Harmonic(38) cost within ΣW_H + 38",
        pass: bad_h == 0,
        detail: vec![format!(
            "{} instances, worst slack {}, {bad_h} above {HARMONIC_K}",
            results.len(),
            worst_h.map(|q| render_decimal(q, 3)).unwrap_or_default()
        )],
        secs: 0.0,
    };
    (c5, c6, c8)
}

fn tensor_configs() -> Vec<InstanceConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    (0..TENSOR_LISTS as u64)
        .map(|s| {
            let n = if s % 50 == 0 { TENSOR_MAX_N } else { rng.gen_range(1..=2000) };
            let base = InstanceConfig { n, dims: 2, seed: 7919 * s + 1, ..InstanceConfig::default() };
            match s % 6 {
                0 | 1 => base,
                2 => InstanceConfig { hi: rat(1, 10), ..base },
                3 => InstanceConfig { hi: rat(1, 1000), ..base },
                4 => InstanceConfig { kind: Kind::HarmonicAdversarial, ..base },
                _ => InstanceConfig { kind: Kind::TiledKnownOpt, bins: n.div_ceil(4), shuffle: true, ..base },
            }
        })
        .collect()
}

struct TensorResult {
    geometry: Vec<String>,
    slack: f64,
}

fn run_tensor(config: &InstanceConfig, table: &ParamTable, set: &WeightFunctionSet) -> TensorResult {
    let delta = Rational::new(TENSOR_DELTA.0, TENSOR_DELTA.1);
    let Items::TwoD(items) = generate(config, table).expect("generate").items else { unreachable!() };
    let mut geometry = Vec::new();
    let mut costs = [0usize; 2];
    let mut maxima = [Q::zero(), Q::zero()];
    for (slot, orientation) in [Orientation::HxB, Orientation::BxH].into_iter().enumerate() {
        let mut run = TensorRun::new(table, orientation, delta).expect("run");
        for item in &items {
            run.insert(*item).expect("insert");
        }
        for issue in validate_geometry(&run.packing()) {
            geometry.push(format!("{} {}: {issue:?}", config.describe(), orientation.name()));
        }
        costs[slot] = run.cost();
        maxima[slot] = max_of(weight_sums(&items, orientation, set).expect("weights"));
    }
    let avg = q_int((costs[0] + costs[1]) as i64) / q_int(2);
    let rhs = (&maxima[0] + &maxima[1]) / (q_int(2) * (Q::one() - to_q(&delta)));
    TensorResult { geometry, slack: q_to_f64(&(avg - rhs)) }
}

fn max_of(v: Vec<Q>) -> Q {
    v.into_iter().fold(Q::zero(), |a, b| if b > a { b } else { a })
}

fn tensor_suite(table: &ParamTable, set: &WeightFunctionSet) -> (bool, Vec<String>) {
    let configs = tensor_configs();
    let results = par_map(&configs, |s| run_tensor(s, table, set));
    let issues: Vec<&String> = results.iter().flat_map(|r| &r.geometry).collect();
    let worst = results.iter().map(|r| r.slack).fold(f64::NEG_INFINITY, f64::max);
    let over = results.iter().filter(|r| r.slack > TENSOR_SLACK as f64).count();
    let items: usize = configs.iter().map(|s| s.n).sum();
    let mut detail = vec![
        format!(
            "{} lists, about {items} rectangles, δ = {}",
            configs.len(),
            render_fraction(&Rational::new(TENSOR_DELTA.0, TENSOR_DELTA.1))
        ),
        format!("{} geometry issues; worst averaged slack {worst:.3}, {over} lists above {TENSOR_SLACK}", issues.len()),
    ];
    detail.extend(issues.iter().take(5).map(|s| s.to_string()));
    (issues.is_empty() && over == 0, detail)
}

fn tail_report(certifier: &Certifier<'_>, compat: &RatioCertificate) -> (bool, Vec<String>) {
    let exact = certify::certificate(
        certifier,
        &LambdaTable::shplus(),
        TailMode::Exact,
        RetainRule::published(),
        None,
        certify::default_threads(),
    );
    let exact = match exact {
        Ok(c) => c,
        Err(e) => return (false, vec![format!("exact-tail certificate failed: {e}")]),
    };
    let rows = compare_tails(compat, &exact);
    let flagged: Vec<_> = rows.iter().filter(|r| r.flagged).collect();
    let mut detail = vec![
        format!(
            "{} pairs with λ ≠ 1/2; {} flagged (exact-tail above tiny-ratio by more than {TAIL_FLAG:e})",
            rows.len(),
            flagged.len()
        ),
        format!(
            "retained bound: tiny-ratio {}, exact-tail {} at ({},{})",
            render_decimal(&compat.bound, 6),
            render_decimal(&exact.bound, 6),
            exact.argmax.0,
            exact.argmax.1
        ),
    ];
    for r in &rows {
        detail.push(format!(
            "({},{}) λ={} tiny-ratio {} exact {} excess {}{}",
            r.i,
            r.j,
            r.lambda,
            r.tiny_ratio,
            r.exact,
            r.excess,
            if r.flagged { "  FLAG" } else { "" }
        ));
    }
    (true, detail)
}
