use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use harmpack::certify::{self, CERT_HEADER};
use harmpack::instance::{generate, write_items, Instance, InstanceConfig, Items, Kind};
use harmpack::params_io::{load_table, ParamFile};
use harmpack::runner::{run, Algorithm, RunOptions, RunReport, DEFAULT_DELTA};
use harmpack::{write_trace, write_weights, HarnessError};
use harmpack_core::boundcert::{validate_cut, Certifier, LambdaTable, PatternModel, RetainRule, TailMode};
use harmpack_core::pack2d::Item2D;
use harmpack_core::params::{validate, ParamTable};
use harmpack_core::rational::{parse_rational, render_fraction};
use harmpack_core::weighting::WeightFunctionSet;
use harmpack_core::Rational;

#[derive(Parser)]
#[command(name = "harmpack", version, about = "Harmonic-class online bin packing and ratio certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack a 1D list with Harmonic or Super Harmonic.
    Pack1d(PackArgs),
    /// Pack a 2D list with H×B, B×H or the averaged H⊗B.
    Pack2d(PackArgs),
    /// Print the weighting functions as a case × type table.
    Weights {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Render decimals instead of exact fractions.
        #[arg(long)]
        decimals: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Compute the ratio certificate.
    Bound(BoundArgs),
    /// Run the parameter, cut and packing checks.
    Verify {
        #[arg(long)]
        params: Option<PathBuf>,
        /// Skip validating the caps and cuts of the pattern model.
        #[arg(long)]
        skip_cuts: bool,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Generate an instance file.
    Gen {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print a parameter table (the builtin one by default) as JSON.
    DumpParams {
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Read items from a file instead of generating them.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Kind::Uniform)]
    kind: Kind,
    #[arg(long, short, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 1 or 2; pack2d always uses 2.
    #[arg(long, default_value_t = 1)]
    dims: u8,
    #[arg(long, default_value = "0")]
    lo: String,
    #[arg(long, default_value = "1")]
    hi: String,
    /// Bins filled by tiled-known-opt.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Contents of one tiled bin: `0.51,0.49` or `0.5x0.5,0.5x0.5,...`.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    shuffle: bool,
}

impl InstanceArgs {
    fn config(&self, dims: u8) -> anyhow::Result<InstanceConfig> {
        let pattern = self
            .pattern
            .as_deref()
            .map(|p| {
                p.split(',')
                    .map(|piece| {
                        let (w, h) = piece.split_once('x').unwrap_or((piece, "1"));
                        Ok(Item2D { w: parse_rational(w)?, h: parse_rational(h)? })
                    })
                    .collect::<Result<Vec<_>, harmpack_core::Error>>()
            })
            .transpose()
            .context("--pattern")?;
        let kind = if self.input.is_some() { Kind::File } else { self.kind };
        Ok(InstanceConfig {
            kind,
            n: self.n,
            seed: self.seed,
            dims,
            lo: parse_rational(&self.lo).context("--lo")?,
            hi: parse_rational(&self.hi).context("--hi")?,
            bins: self.bins,
            pattern,
            shuffle: self.shuffle,
            path: self.input.clone(),
        })
    }
}

#[derive(Args)]
struct PackArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// harmonic or sh+ for pack1d; hxb, bxh or tensor-avg for pack2d.
    #[arg(long, short, value_enum)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Check invariants after every insertion, the geometry and the weight bound.
    #[arg(long)]
    verify: bool,
    /// Parameter k of the standalone Harmonic algorithm.
    #[arg(long, default_value_t = 38)]
    k: usize,
    /// Slice rounding δ for 2D runs.
    #[arg(long)]
    delta: Option<String>,
    /// Write the Super Harmonic placement trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Include wall time in the report.
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    TinyRatio,
    Exact,
    /// Both modes, compared pair by pair.
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    /// The four fixed transposes.
    Published,
    /// The smaller of the two products of every pair.
    Min,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::TinyRatio)]
    mode: ModeArg,
    /// λ table, one row per line. Defaults to the tuned SH+ values.
    #[arg(long)]
    lambda_file: Option<PathBuf>,
    /// Drop the six compound cuts from the pattern model.
    #[arg(long)]
    no_cuts: bool,
    /// Divide the bound by 1−δ.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, value_enum, default_value_t = RuleArg::Published)]
    rule: RuleArg,
    /// Write the maximizing patterns as JSON.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<HarnessError>() {
                Some(HarnessError::Validation(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    let stdout = io::stdout();
    match command {
        Command::Pack1d(args) => pack(args, 1),
        Command::Pack2d(args) => pack(args, 2),
        Command::Weights { params, decimals, format } => {
            let set = WeightFunctionSet::new(&load_table(params.as_deref())?);
            match format {
                Format::Csv => write_weights(stdout.lock(), &set, decimals)?,
                Format::Json => {
                    let rows: Vec<Vec<String>> = (1..=set.cases())
                        .map(|c| (1..=set.table().k()).map(|i| set.value(c, i).to_string()).collect())
                        .collect();
                    let doc = serde_json::json!({ "values": rows, "tail_slope": set.tail_slope().to_string() });
                    writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&doc)?)?;
                }
            }
            Ok(())
        }
        Command::Bound(args) => bound(args),
        Command::Verify { params, skip_cuts, instance } => verify(params.as_deref(), skip_cuts, &instance),
        Command::Gen { instance, out } => {
            let table = load_table(None)?;
            let config = instance.config(instance.dims)?;
            let inst = generate(&config, &table)?;
            let mut header = config.describe();
            if let Some(opt) = inst.known_opt {
                header.push_str(&format!("\nOPT = {opt}"));
            }
            let text = write_items(&inst.items, &header);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| path.display().to_string())?,
                None => stdout.lock().write_all(text.as_bytes())?,
            }
            Ok(())
        }
        Command::DumpParams { params } => {
            let table = load_table(params.as_deref())?;
            writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&ParamFile::from_table(&table))?)?;
            Ok(())
        }
    }
}

fn parse_delta(s: Option<&str>) -> anyhow::Result<Rational> {
    match s {
        Some(s) => Ok(parse_rational(s).context("--delta")?),
        None => Ok(Rational::new(DEFAULT_DELTA.0, DEFAULT_DELTA.1)),
    }
}

fn pack(args: PackArgs, dims: u8) -> anyhow::Result<()> {
    let table = load_table(args.params.as_deref())?;
    let algorithm = args.algorithm.unwrap_or(if dims == 1 { Algorithm::ShPlus } else { Algorithm::TensorAvg });
    if algorithm.dims() != dims {
        anyhow::bail!("{} is not a {dims}D algorithm", algorithm.name());
    }
    if args.trace.is_some() && algorithm != Algorithm::ShPlus {
        anyhow::bail!("--trace needs --algorithm sh+");
    }
    let config = args.instance.config(dims)?;
    let inst = generate(&config, &table)?;
    let options = RunOptions {
        verify: args.verify,
        harmonic_k: args.k,
        delta: parse_delta(args.delta.as_deref())?,
        trace: args.trace.is_some(),
        timing: args.timing,
    };
    let report = run(&inst, &config.describe(), algorithm, &table, &options)?;
    if let (Some(path), Some(trace)) = (&args.trace, &report.trace) {
        let file = std::fs::File::create(path).with_context(|| path.display().to_string())?;
        write_trace(io::BufWriter::new(file), trace)?;
    }
    emit_report(&report, dims, args.format)
}

fn emit_report(report: &RunReport, dims: u8, format: Format) -> anyhow::Result<()> {
    let stdout = io::stdout();
    match format {
        Format::Json => writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(report)?)?,
        Format::Csv if dims == 2 => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(["orientation", "bins", "slices", "weight_bound"])?;
            for row in &report.orientations {
                w.write_record([
                    row.orientation.to_string(),
                    row.bins.to_string(),
                    row.slices.to_string(),
                    row.weight_bound.clone(),
                ])?;
            }
            if report.orientations.len() > 1 {
                w.write_record(["avg", report.cost.as_str(), "", report.weight_bound.as_str()])?;
            }
            w.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(RunReport::CSV_HEADER)?;
            w.write_record(report.csv_row())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn bound(args: BoundArgs) -> anyhow::Result<()> {
    let table = load_table(None)?;
    let set = WeightFunctionSet::new(&table);
    let mut model = PatternModel::shplus(&table)?;
    if args.no_cuts {
        model = model.without_cuts();
    }
    let certifier = Certifier::new(&set, model)?;
    let lambdas = match &args.lambda_file {
        Some(path) => {
            certify::parse_lambda_file(&std::fs::read_to_string(path).with_context(|| path.display().to_string())?)?
        }
        None => LambdaTable::shplus(),
    };
    let rule = match args.rule {
        RuleArg::Published => RetainRule::published(),
        RuleArg::Min => RetainRule::MinOfBoth,
    };
    let delta = args.delta.as_deref().map(|d| parse_delta(Some(d))).transpose()?;
    let threads = args.threads.unwrap_or_else(certify::default_threads);
    let run_mode = |mode| certify::certificate(&certifier, &lambdas, mode, rule.clone(), delta, threads);
    let stdout = io::stdout();
    if let ModeArg::Both = args.mode {
        let compat = run_mode(TailMode::TinyRatio)?;
        let exact = run_mode(TailMode::Exact)?;
        let rows = certify::compare_tails(&compat, &exact);
        match args.format {
            Format::Json => writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&rows)?)?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(stdout.lock());
                for r in &rows {
                    w.serialize(r)?;
                }
                w.flush()?;
                let flagged = rows.iter().filter(|r| r.flagged).count();
                let mut out = stdout.lock();
                writeln!(out, "{}", certify::summary_line(&compat))?;
                writeln!(out, "{}", certify::summary_line(&exact))?;
                writeln!(out, "# flagged pairs: {flagged} of {}", rows.len())?;
            }
        }
        return Ok(());
    }
    let mode = if let ModeArg::Exact = args.mode { TailMode::Exact } else { TailMode::TinyRatio };
    let cert = run_mode(mode)?;
    if let Some(path) = &args.witness {
        let text = serde_json::to_string_pretty(&certify::witness(&cert))?;
        std::fs::write(path, text).with_context(|| path.display().to_string())?;
    }
    match args.format {
        Format::Json => {
            let rows: Vec<serde_json::Value> = certify::certificate_rows(&cert)
                .into_iter()
                .map(|r| {
                    serde_json::Value::Object(
                        CERT_HEADER.iter().map(|h| h.to_string()).zip(r.map(serde_json::Value::String)).collect(),
                    )
                })
                .collect();
            let doc = serde_json::json!({
                "mode": mode.name(),
                "pairs": rows,
                "max_retained": harmpack_core::rational::render_decimal(&cert.max_retained, 6),
                "argmax": [cert.argmax.0, cert.argmax.1],
                "delta": cert.delta.map(|d| render_fraction(&d)),
                "bound": harmpack_core::rational::render_decimal(&cert.bound, 6),
            });
            writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(stdout.lock());
            w.write_record(CERT_HEADER)?;
            for row in certify::certificate_rows(&cert) {
                w.write_record(row)?;
            }
            w.flush()?;
            writeln!(stdout.lock(), "{}", certify::summary_line(&cert))?;
        }
    }
    Ok(())
}

fn verify(params: Option<&Path>, skip_cuts: bool, instance: &InstanceArgs) -> anyhow::Result<()> {
    let table: ParamTable = load_table(params)?;
    let mut failures = Vec::new();
    let mut out = io::stdout().lock();
    let mut report = |name: String, problems: Vec<String>, out: &mut dyn Write| -> io::Result<()> {
        if problems.is_empty() {
            writeln!(out, "ok    {name}")
        } else {
            writeln!(out, "FAIL  {name}")?;
            for p in &problems {
                writeln!(out, "      {p}")?;
            }
            failures.push(name);
            Ok(())
        }
    };
    report("parameter table".into(), validate(&table).iter().map(|v| v.describe()).collect(), &mut out)?;
    if !skip_cuts && table == harmpack_core::params::builtin_shplus() {
        let model = PatternModel::shplus(&table)?;
        for c in model.caps().iter().chain(model.cuts()) {
            let check = validate_cut(c, &model)?;
            let problems = match &check.counterexample {
                None => Vec::new(),
                Some(x) => vec![format!("fitting pattern {x:?} reaches {}", render_fraction(&check.max_lhs))],
            };
            report(format!("constraint {c}"), problems, &mut out)?;
        }
    }
    let options = RunOptions { verify: true, ..RunOptions::default() };
    for dims in [1u8, 2] {
        if instance.input.is_some() && dims != instance.dims {
            continue;
        }
        let config = instance.config(dims)?;
        let inst: Instance = generate(&config, &table)?;
        let algorithms: &[Algorithm] = match inst.items {
            Items::OneD(_) => &[Algorithm::Harmonic, Algorithm::ShPlus],
            Items::TwoD(_) => &[Algorithm::TensorAvg],
        };
        for &alg in algorithms {
            let problems = match run(&inst, &config.describe(), alg, &table, &options) {
                Ok(_) => Vec::new(),
                Err(HarnessError::Validation(p)) => p,
                Err(e) => return Err(e.into()),
            };
            report(format!("{} on {}", alg.name(), config.describe()), problems, &mut out)?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Validation(failures).into())
    }
}
