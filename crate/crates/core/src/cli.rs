//! Command-line front end.
//!
//! Value flags are accepted as raw strings and validated together so that a
//! single diagnostic can name every bad flag. Exit codes: 0 success, 1
//! runtime or I/O failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::decoder::run_engine;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::framegen::{superpose, AccessMap};
use crate::harness::{run_point_with, run_sweep_with, Execution, LoadAxis, PointResult, SweepRow, SweepSpec};
use crate::model::{
    build_power_pool, format_rational, parse_rational, Alpha, ChannelParams, PowerPool, Rational, SystemConfig,
};
use crate::oracle::{closure_decode, exact_access_probability};
use crate::plot::{emit_plot, AxesSpec};
use crate::report::{render, write_results, Format};

pub const THREADS_ENV: &str = "GFA_THREADS";

#[derive(Debug, Parser)]
#[command(name = "iic-dsa", version, about = "Blind iterative IC decoder for K-repetition grant-free NOMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one configuration.
    Run(RunArgs),
    /// Simulate a grid of configurations.
    Sweep(SweepArgs),
    /// Exact results by exhaustive enumeration (small instances only).
    Oracle(OracleArgs),
    /// Print a built-in frame and its decoding traces.
    Fixtures(FixtureArgs),
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// SINR threshold (integer, p/q or decimal).
    #[arg(long)]
    tau: Option<String>,
    /// Noise power in watts.
    #[arg(long)]
    noise: Option<String>,
    /// Number of power levels derived from tau and noise.
    #[arg(long)]
    levels: Option<String>,
    /// Explicit comma-separated power levels; cannot be combined with --levels.
    #[arg(long)]
    pool: Option<String>,
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Per-window storage budget in cells.
    #[arg(long)]
    budget: Option<String>,
    /// Iteration cap applied when alpha is inf.
    #[arg(long)]
    safety_cap: Option<String>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Positive integer or inf.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    windows: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// JSON file holding a system configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Number of RBs per frame (default 100).
    #[arg(long)]
    r: Option<String>,
    /// Load values as start:stop:step or a comma list; N = round(gamma * R).
    #[arg(long)]
    gamma: Option<String>,
    /// Device counts instead of --gamma.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Comma list of positive integers or inf.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    windows: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// JSON file holding a sweep specification; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// SVG chart path.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Chart x axis: gamma (one panel) or alpha (access and counter panels).
    #[arg(long)]
    plot_x: Option<String>,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct OracleArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Access map JSON; decodes that frame instead of enumerating all frames.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    channel: ChannelArgs,
}

#[derive(Debug, Args)]
struct FixtureArgs {
    /// worked or exclusive.
    #[arg(long, default_value = "worked")]
    name: String,
}

enum Failure {
    Usage(Vec<String>),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. } | Error::EmptyPool | Error::BoundPrecondition(_) => {
                Failure::Usage(vec![usage_message(&e)])
            }
            other => Failure::Runtime(other),
        }
    }
}

fn usage_message(e: &Error) -> String {
    match e {
        Error::InvalidConfig { field, reason } => format!("--{}: {reason}", flag_for_field(field)),
        Error::EmptyPool => "--pool: must contain at least one level".into(),
        other => other.to_string(),
    }
}

fn flag_for_field(field: &str) -> &str {
    match field {
        "noise_power" => "noise",
        "storage_budget" => "budget",
        "safety_iterations" => "safety-cap",
        "pool" | "levels" => "pool",
        other => other,
    }
}

/// Collects per-flag diagnostics while parsing.
#[derive(Default)]
struct Diagnostics(Vec<String>);

impl Diagnostics {
    fn parse<T>(&mut self, flag: &str, raw: &Option<String>, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Option<T> {
        let text = raw.as_deref()?;
        match parse(text.trim()) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.0.push(format!("--{flag}: {msg}"));
                None
            }
        }
    }

    fn require<T>(&mut self, flag: &str, value: Option<T>, given: bool) -> Option<T> {
        if value.is_none() && !given {
            self.0.push(format!("--{flag}: required"));
        }
        value
    }

    fn finish(self) -> std::result::Result<(), Failure> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Failure::Usage(self.0))
        }
    }
}

fn positive<T: FromStr + PartialOrd + Default>(s: &str) -> std::result::Result<T, String> {
    match s.parse::<T>() {
        Ok(v) if v > T::default() => Ok(v),
        Ok(_) => Err(format!("must be positive, got {s:?}")),
        Err(_) => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn non_negative<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("expected a non-negative integer, got {s:?}"))
}

fn rational(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).ok_or_else(|| format!("expected a number such as 1, 3/2 or 0.25, got {s:?}"))
}

fn alpha(s: &str) -> std::result::Result<Alpha, String> {
    s.parse()
}

/// `a,b,c` where each item may also be an inclusive `start:stop[:step]` range.
fn int_list<T>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T: FromStr + Copy + PartialOrd + Default + TryFrom<u64> + Into<u64>,
{
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(positive::<T>(single)?),
            [start, stop] | [start, stop, _] => {
                let start: u64 = positive::<T>(start)?.into();
                let stop: u64 = positive::<T>(stop)?.into();
                let step: u64 = if parts.len() == 3 { positive::<T>(parts[2])?.into() } else { 1 };
                if stop < start {
                    return Err(format!("range {item:?} is empty"));
                }
                let mut v = start;
                while v <= stop {
                    out.push(T::try_from(v).map_err(|_| format!("{v} is out of range"))?);
                    v += step;
                }
            }
            _ => return Err(format!("cannot parse {item:?}")),
        }
    }
    Ok(out)
}

fn alpha_list(s: &str) -> std::result::Result<Vec<Alpha>, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        if item.contains(':') {
            out.extend(int_list::<u32>(item)?.into_iter().map(Alpha::Finite));
        } else {
            out.push(alpha(item)?);
        }
    }
    Ok(out)
}

/// Gamma values: comma list or inclusive `start:stop:step`, snapped to 1e-9.
fn gamma_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let number = |t: &str| -> std::result::Result<f64, String> {
        match t.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(format!("expected a positive number, got {t:?}")),
        }
    };
    let snap = |v: f64| (v * 1e9).round() / 1e9;
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [single] => out.push(number(single)?),
            [start, stop, step] => {
                let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
                if stop < start {
                    return Err(format!("range {item:?} is empty"));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > 10_000 {
                    return Err(format!("range {item:?} has too many points"));
                }
                out.extend((0..count).map(|i| snap(start + i as f64 * step)));
            }
            _ => return Err(format!("expected a value or start:stop:step, got {item:?}")),
        }
    }
    Ok(out)
}

fn rational_list(s: &str) -> std::result::Result<Vec<Rational>, String> {
    s.split(',').map(|t| rational(t.trim())).collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        Failure::Runtime(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(vec![format!("--config: {}: {e}", path.display())]))
}

struct ChannelFlags {
    tau: Option<Rational>,
    noise: Option<Rational>,
    levels: Option<usize>,
    pool: Option<Vec<Rational>>,
}

impl ChannelFlags {
    fn parse(args: &ChannelArgs, diag: &mut Diagnostics) -> Self {
        let flags = ChannelFlags {
            tau: diag.parse("tau", &args.tau, rational),
            noise: diag.parse("noise", &args.noise, rational),
            levels: diag.parse("levels", &args.levels, positive::<usize>),
            pool: diag.parse("pool", &args.pool, rational_list),
        };
        if args.levels.is_some() && args.pool.is_some() {
            diag.0.push("--levels: conflicts with --pool".into());
        }
        flags
    }

    fn apply(&self, channel: &mut ChannelParams, pool: &mut PowerPool) -> Result<()> {
        if let Some(tau) = self.tau {
            channel.tau = tau;
        }
        if let Some(noise) = self.noise {
            channel.noise_power = noise;
        }
        channel.validate()?;
        if let Some(levels) = &self.pool {
            *pool = PowerPool::new(levels.clone())?;
        } else if self.levels.is_some() || self.tau.is_some() || self.noise.is_some() {
            *pool = build_power_pool(channel, self.levels.unwrap_or(pool.len()))?;
        }
        Ok(())
    }
}

fn parse_limits(args: &LimitArgs, diag: &mut Diagnostics) -> (Option<u64>, Option<u32>) {
    (
        diag.parse("budget", &args.budget, positive::<u64>),
        diag.parse("safety-cap", &args.safety_cap, positive::<u32>),
    )
}

fn parse_format(args: &OutputArgs, diag: &mut Diagnostics) -> Format {
    diag.parse("format", &args.format, |s| Format::from_str(s).map_err(|e| e.to_string()))
        .unwrap_or_default()
}

fn emit(rows: &[SweepRow], output: &OutputArgs, format: Format, stdout: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => write_results(rows, format, path),
        None => stdout
            .write_all(render(rows, format)?.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn report_limits(points: &[PointResult], stderr: &mut dyn Write) {
    for p in points {
        let (budget, cap) = (p.budget_exhausted_windows(), p.safety_cap_windows());
        if budget > 0 || cap > 0 {
            let _ = writeln!(
                stderr,
                "n={} r={} k={} alpha={}: storage budget exhausted in {budget} of {} windows, safety cap hit in {cap}",
                p.row.n, p.row.r, p.row.k, p.row.alpha, p.row.windows
            );
        }
    }
}

fn execution_in_pool<T: Send>(job: impl FnOnce() -> T + Send) -> std::result::Result<T, Failure> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => return Err(Failure::Usage(vec![format!("{THREADS_ENV}: expected a positive integer, got {v:?}")])),
        },
        Err(_) => None,
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(Error::Parse(format!("thread pool: {e}"))))?;
        return Ok(pool.install(job));
    }
    let _ = threads;
    Ok(job())
}

fn cmd_run(args: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> std::result::Result<(), Failure> {
    let mut diag = Diagnostics::default();
    let n = diag.parse("n", &args.n, non_negative::<usize>);
    let r = diag.parse("r", &args.r, positive::<usize>);
    let k = diag.parse("k", &args.k, positive::<usize>);
    let a = diag.parse("alpha", &args.alpha, alpha);
    let windows = diag.parse("windows", &args.windows, positive::<usize>);
    let seed = diag.parse("seed", &args.seed, non_negative::<u64>);
    let channel = ChannelFlags::parse(&args.channel, &mut diag);
    let (budget, cap) = parse_limits(&args.limits, &mut diag);
    let format = parse_format(&args.output, &mut diag);
    let from_file = args.config.is_some();
    if !from_file {
        diag.require("n", n.as_ref(), args.n.is_some());
        diag.require("r", r.as_ref(), args.r.is_some());
        diag.require("k", k.as_ref(), args.k.is_some());
        diag.require("alpha", a.as_ref(), args.alpha.is_some());
    }
    diag.finish()?;

    let mut config = match &args.config {
        Some(path) => read_json::<SystemConfig>(path)?,
        None => SystemConfig::new(0, 1, 1, Alpha::Finite(1)),
    };
    config.n_devices = n.unwrap_or(config.n_devices);
    config.n_rbs = r.unwrap_or(config.n_rbs);
    config.k_repetitions = k.unwrap_or(config.k_repetitions);
    config.alpha = a.unwrap_or(config.alpha);
    config.windows = windows.unwrap_or(config.windows);
    config.seed = seed.unwrap_or(config.seed);
    config.limits.storage_budget = budget.unwrap_or(config.limits.storage_budget);
    config.limits.safety_iterations = cap.unwrap_or(config.limits.safety_iterations);
    channel.apply(&mut config.channel, &mut config.pool)?;
    config.validate()?;

    let point = execution_in_pool(|| run_point_with(&config, Execution::Parallel))??;
    report_limits(std::slice::from_ref(&point), stderr);
    emit(std::slice::from_ref(&point.row), &args.output, format, stdout)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> std::result::Result<(), Failure> {
    let mut diag = Diagnostics::default();
    let r = diag.parse("r", &args.r, positive::<usize>);
    let gammas = diag.parse("gamma", &args.gamma, gamma_list);
    let ns = diag.parse("n", &args.n, int_list::<u64>);
    let ks = diag.parse("k", &args.k, int_list::<u64>);
    let alphas = diag.parse("alpha", &args.alpha, alpha_list);
    let windows = diag.parse("windows", &args.windows, positive::<usize>);
    let seed = diag.parse("seed", &args.seed, non_negative::<u64>);
    let axes = diag.parse("plot-x", &args.plot_x, |s| AxesSpec::from_str(s).map_err(|e| e.to_string()));
    let channel = ChannelFlags::parse(&args.channel, &mut diag);
    let (budget, cap) = parse_limits(&args.limits, &mut diag);
    let format = parse_format(&args.output, &mut diag);
    if args.gamma.is_some() && args.n.is_some() {
        diag.0.push("--gamma: conflicts with --n".into());
    }
    if args.config.is_none() {
        if args.gamma.is_none() && args.n.is_none() {
            diag.0.push("--gamma: required (or --n)".into());
        }
        diag.require("k", ks.as_ref(), args.k.is_some());
        diag.require("alpha", alphas.as_ref(), args.alpha.is_some());
    }
    if args.plot_x.is_some() && args.plot.is_none() {
        diag.0.push("--plot-x: requires --plot".into());
    }
    diag.finish()?;

    let mut spec = match &args.config {
        Some(path) => read_json::<SweepSpec>(path)?,
        None => SweepSpec::gamma_grid(Vec::new(), 100, Vec::new(), Vec::new()),
    };
    let current_r = match &spec.load {
        LoadAxis::Gamma { r, .. } => *r,
        LoadAxis::Pairs(pairs) => pairs.first().map_or(100, |p| p.1),
    };
    let r_value = r.unwrap_or(current_r);
    if let Some(values) = gammas {
        spec.load = LoadAxis::Gamma { values, r: r_value };
    } else if let Some(ns) = ns {
        spec.load = LoadAxis::Pairs(ns.into_iter().map(|n| (n as usize, r_value)).collect());
    } else if let Some(r) = r {
        spec.load = match spec.load {
            LoadAxis::Gamma { values, .. } => LoadAxis::Gamma { values, r },
            LoadAxis::Pairs(pairs) => LoadAxis::Pairs(pairs.into_iter().map(|(n, _)| (n, r)).collect()),
        };
    }
    if let Some(ks) = ks {
        spec.k_values = ks.into_iter().map(|k| k as usize).collect();
    }
    if let Some(alphas) = alphas {
        spec.alpha_values = alphas;
    }
    spec.windows = windows.unwrap_or(spec.windows);
    spec.base_seed = seed.unwrap_or(spec.base_seed);
    spec.limits.storage_budget = budget.unwrap_or(spec.limits.storage_budget);
    spec.limits.safety_iterations = cap.unwrap_or(spec.limits.safety_iterations);
    channel.apply(&mut spec.channel, &mut spec.pool)?;
    spec.configs()?;

    let points = execution_in_pool(|| run_sweep_with(&spec, Execution::Parallel))??;
    report_limits(&points, stderr);
    let rows: Vec<SweepRow> = points.into_iter().map(|p| p.row).collect();
    emit(&rows, &args.output, format, stdout)?;
    if let Some(path) = &args.plot {
        let axes = axes.unwrap_or_else(AxesSpec::by_gamma);
        emit_plot(&rows, &axes, path)?;
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let mut diag = Diagnostics::default();
    let n = diag.parse("n", &args.n, positive::<usize>);
    let r = diag.parse("r", &args.r, positive::<usize>);
    let k = diag.parse("k", &args.k, positive::<usize>);
    let channel_flags = ChannelFlags::parse(&args.channel, &mut diag);
    if args.map.is_none() {
        diag.require("n", n.as_ref(), args.n.is_some());
        diag.require("k", k.as_ref(), args.k.is_some());
    }
    diag.require("r", r.as_ref(), args.r.is_some());
    diag.finish()?;

    let mut config = SystemConfig::new(n.unwrap_or(1), r.unwrap_or(1), k.unwrap_or(1), Alpha::Unbounded);
    channel_flags.apply(&mut config.channel, &mut config.pool)?;
    let io = |source| {
        Failure::Runtime(Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
    };

    match &args.map {
        Some(path) => {
            let map: AccessMap = read_json(path)?;
            config.n_devices = map.n_devices();
            if map.devices.iter().any(|d| d.rbs.iter().any(|&rb| rb as usize >= config.n_rbs)) {
                return Err(Failure::Usage(vec![format!("--map: {} uses RBs outside 0..R", path.display())]));
            }
            let m0 = superpose(&map, config.n_rbs);
            let closure = closure_decode(&m0, &config.channel)?;
            let engine = run_engine(&m0, &config, &map)?;
            let value = serde_json::json!({
                "closure_decodable": closure.decodable,
                "engine_decoded": engine.decoded,
                "engine_iterations": engine.iterations_run,
            });
            writeln!(stdout, "{value}").map_err(io)?;
        }
        None => {
            config.validate()?;
            let p = exact_access_probability(&config)?;
            let exact = format_rational(&Rational::new(*p.numer(), *p.denom()));
            let value = serde_json::json!({
                "n": config.n_devices,
                "r": config.n_rbs,
                "k": config.k_repetitions,
                "access_prob_exact": exact,
                "access_prob": *p.numer() as f64 / *p.denom() as f64,
            });
            writeln!(stdout, "{value}").map_err(io)?;
        }
    }
    Ok(())
}

fn cmd_fixtures(args: FixtureArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let map = match args.name.as_str() {
        "worked" => fixtures::worked_example(),
        "exclusive" => fixtures::exclusive_rb_example(),
        other => return Err(Failure::Usage(vec![format!("--name: unknown fixture {other:?} (expected worked or exclusive)")])),
    };
    let io = |source| {
        Failure::Runtime(Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
    };
    writeln!(stdout, "{}", serde_json::to_string(&map).map_err(Error::from)?).map_err(io)?;
    let m0 = superpose(&map, 10);
    for a in 1..=3 {
        let config = SystemConfig::new(map.n_devices(), 10, 3, Alpha::Finite(a)).with_windows(1);
        let outcome = run_engine(&m0, &config, &map)?;
        writeln!(stdout, "# alpha={a} decoded={:?} terminated_by={:?}", outcome.decoded, outcome.terminated_by).map_err(io)?;
        write!(stdout, "{}", outcome.trace_json_lines()).map_err(io)?;
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Oracle(a) => cmd_oracle(a, stdout),
        Command::Fixtures(a) => cmd_fixtures(a, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(messages)) => {
            for m in messages {
                let _ = writeln!(stderr, "error: {m}");
            }
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("iic-dsa").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn gamma_ranges() {
        let g = gamma_list("0.1:0.9:0.1").unwrap();
        assert_eq!(g, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(gamma_list("0.3,0.6").unwrap(), vec![0.3, 0.6]);
        assert!(gamma_list("0.9:0.1:0.1").is_err());
        assert!(gamma_list("-1").is_err());
    }

    #[test]
    fn int_and_alpha_lists() {
        assert_eq!(int_list::<u64>("2,3,4,5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(int_list::<u64>("2:5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(int_list::<u64>("1:5:2").unwrap(), vec![1, 3, 5]);
        assert!(int_list::<u64>("0,1").is_err());
        assert_eq!(
            alpha_list("1,2,inf").unwrap(),
            vec![Alpha::Finite(1), Alpha::Finite(2), Alpha::Unbounded]
        );
        assert_eq!(alpha_list("1:3").unwrap().len(), 3);
        assert!(alpha_list("0").is_err());
    }

    #[test]
    fn single_window_run() {
        let (code, out, _) = call(&["run", "--n", "5", "--r", "10", "--k", "3", "--alpha", "3", "--windows", "1", "--seed", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
        assert!(out.lines().nth(1).unwrap().starts_with("0.5,5,10,3,3,1,"));
    }

    #[test]
    fn every_bad_flag_is_named() {
        let (code, _, err) = call(&["run", "--n", "5", "--r", "x", "--k", "0", "--alpha", "0"]);
        assert_eq!(code, 2);
        for flag in ["--r", "--k", "--alpha"] {
            assert!(err.contains(flag), "{flag} missing from {err}");
        }
    }

    #[test]
    fn k_above_r_is_a_usage_error() {
        let (code, _, err) = call(&["run", "--n", "5", "--r", "3", "--k", "4", "--alpha", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--k"), "{err}");
    }

    #[test]
    fn unknown_flag_is_rejected() {
        let (code, _, _) = call(&["run", "--bogus", "1"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn oracle_exact_value() {
        let (code, out, _) = call(&["oracle", "--n", "2", "--r", "2", "--k", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains(r#""access_prob_exact":"5/6""#), "{out}");
    }

    #[test]
    fn fixtures_print_traces() {
        let (code, out, _) = call(&["fixtures"]);
        assert_eq!(code, 0);
        assert!(out.contains("# alpha=3 decoded=[0, 1, 2, 3, 4]"));
        assert!(out.contains(r#"{"iter":3,"new_matrices":6,"new_decoded":[2],"pool_size":5}"#));
    }

    #[test]
    fn levels_and_pool_conflict() {
        let (code, _, err) = call(&["run", "--n", "2", "--r", "2", "--k", "1", "--alpha", "1", "--levels", "2", "--pool", "1,2"]);
        assert_eq!(code, 2);
        assert!(err.contains("--levels"));
    }
}
