mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use highdist_core::apps::reductions::{instances_for, is_valid, multisets, run_reduction, Bias, ClassicalTargets, Reduction};
use highdist_core::apps::{
    f_infinity_relative_with, f_infinity_with, gapped_k_distinctness_with, nonlinearity_with, AppDecision, FrequencyEstimate, NonlinRoute,
};
use highdist_core::classical::{self, exact_highamp_answer, exact_highdist_answer, exact_pmax, PromiseClass};
use highdist_core::hadamard::{estimate_overlap, Preparer};
use highdist_core::highdist::{highamp_params, highamp_with, highdist_with, Backend, EngineConfig, HighDistParams, HighDistResult};
use highdist_core::oracle::{explicit_distribution_oracle, ArrayOracle, BooleanFunctionOracle};
use highdist_core::pmax::{interval_search_rel_with, interval_search_with, min_entropy_with, PmaxEstimate, QuantumDecider};
use highdist_core::simulae::{naive_serial_baseline, simul_amp_est, IndexedAlgorithmFamily};
use highdist_core::state::{factorize_by_branch, Operator, RegId, C64, DEFAULT_DENSE_CAP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::io::{Array, Distribution, Function};
use crate::report::{params, Row};

pub const DENSE_CAP_ENV: &str = "HIGHDIST_DENSE_QUBITS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] highdist_core::Error),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Input(String),
    #[error("ground-truth mismatch on {0}")]
    Check(String),
}

#[derive(Parser, Debug)]
#[command(name = "highdist", version, about = "Threshold detection on simulated quantum distribution oracles")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Seed for random instances, shot sampling and benchmark states.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// CSV report path; a `.json` sidecar with the run parameters is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit nonzero when an answer disagrees with the classical ground truth.
    #[arg(long, global = true)]
    check: bool,
    /// Fill the `wall_ms` column.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Dense,
    Branch,
    Auto,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PresetArg {
    Desk,
    Full,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Is some outcome probability at least tau?
    Highdist(HighDistArgs),
    /// Is some amplitude magnitude at least tau + 2 eps?
    Highamp(HighAmpArgs),
    /// Interval estimate of the largest outcome probability.
    Pmax(PmaxArgs),
    /// Min-entropy estimate in bits.
    Minentropy(MinEntropyArgs),
    /// Does some value occur at least k times?
    Kdist(KDistArgs),
    /// Gapped k-distinctness.
    Gkd(GkdArgs),
    /// Modal frequency of an array.
    Finf(FinfArgs),
    /// Non-linearity of a Boolean function.
    Nonlin(NonlinArgs),
    /// Simultaneous amplitude estimation query counts across family sizes.
    SimulaeBench(SimulaeArgs),
    /// Hadamard-test overlap estimation on random state pairs.
    HadamardBench(HadamardArgs),
    /// Every reduction against exact classical target solvers, exhaustively.
    ReductionsCheck(ReductionsArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct DistSource {
    /// Probability vector; its length must be a power of two.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    /// Junk qubits attached to every outcome.
    #[arg(long, default_value_t = 0)]
    a: usize,
    /// Instance file (JSON or `key: value` text).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of seeded random instances.
    #[arg(long)]
    random: Option<usize>,
    /// Outcome count for random instances.
    #[arg(long, default_value_t = 8)]
    m: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ArraySource {
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    /// Value range; defaults to the next power of two above the largest value.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    random: Option<usize>,
    /// Array length for random instances.
    #[arg(long, default_value_t = 8)]
    n: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FnSource {
    /// `and2`, `or2`, `xor2`, `const0` or a truth table such as `0110`.
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    random: Option<usize>,
    /// Input bits for random functions.
    #[arg(long, default_value_t = 3)]
    bits: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct HighDistArgs {
    #[command(flatten)]
    source: DistSource,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
    /// Override the number of estimate copies.
    #[arg(long)]
    copies: Option<usize>,
    /// Override the phase-estimation precision.
    #[arg(long)]
    precision: Option<usize>,
    /// Sample this many accept/reject outcomes from the exact probability.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct HighAmpArgs {
    #[command(flatten)]
    source: DistSource,
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PmaxArgs {
    #[command(flatten)]
    source: DistSource,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Relative instead of additive accuracy.
    #[arg(long)]
    relative: bool,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    preset: PresetArg,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MinEntropyArgs {
    #[command(flatten)]
    source: DistSource,
    /// Accuracy in bits.
    #[arg(long, default_value_t = 0.5)]
    bits: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct KDistArgs {
    #[command(flatten)]
    source: ArraySource,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GkdArgs {
    #[command(flatten)]
    source: ArraySource,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    gap: usize,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FinfArgs {
    #[command(flatten)]
    source: ArraySource,
    /// Additive accuracy in counts (0.99 gives the exact value), or relative with `--relative`.
    #[arg(long, default_value_t = 0.99)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long)]
    relative: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RouteArg {
    Highamp,
    HighdistSquared,
}

#[derive(Args, Debug, Clone, Serialize)]
struct NonlinArgs {
    #[command(flatten)]
    source: FnSource,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Highamp)]
    route: RouteArg,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulaeArgs {
    /// Family sizes (powers of two).
    #[arg(long = "N", value_delimiter = ',', default_value = "2,4,8")]
    sizes: Vec<usize>,
    /// Oracle calls per family member.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Phase-estimation precision.
    #[arg(long, default_value_t = 4)]
    m: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct HadamardArgs {
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    /// State dimension (power of two).
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 0.0625)]
    eps: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BiasArg {
    Exact,
    Low,
    High,
    All,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ReductionsArgs {
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    /// How the classical target solvers resolve promise gaps.
    #[arg(long, value_enum, default_value_t = BiasArg::All)]
    bias: BiasArg,
}

struct Ctx {
    global: Global,
    config: EngineConfig,
}

fn engine_config(backend: BackendArg) -> Result<EngineConfig, CliError> {
    let dense_cap = match std::env::var(DENSE_CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Input(format!("{DENSE_CAP_ENV}={v} is not a qubit count")))?,
        Err(_) => DEFAULT_DENSE_CAP,
    };
    let backend = match backend {
        BackendArg::Dense => Backend::Dense,
        BackendArg::Branch => Backend::Branch,
        BackendArg::Auto => Backend::Auto,
    };
    Ok(EngineConfig { backend, dense_cap })
}

fn distributions(src: &DistSource, seed: u64) -> Result<Vec<Distribution>, CliError> {
    let mut out = Vec::new();
    if let Some(p) = &src.probs {
        out.push(Distribution { id: "probs".into(), probs: p.clone(), a: src.a });
    }
    if let Some(path) = &src.input {
        out.extend(io::distributions(&io::read_records(path)?)?);
    }
    if let Some(count) = src.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.extend((0..count).map(|i| Distribution {
            id: format!("random-{i}"),
            probs: io::random_distribution(&mut rng, src.m),
            a: src.a,
        }));
    }
    nonempty(out, "--probs, --input or --random")
}

fn arrays(src: &ArraySource, seed: u64) -> Result<Vec<Array>, CliError> {
    let mut out = Vec::new();
    if let Some(v) = &src.values {
        let m = src.m.unwrap_or_else(|| v.iter().max().map_or(1, |x| (x + 1).next_power_of_two()));
        out.push(Array { id: "values".into(), values: v.clone(), m });
    }
    if let Some(path) = &src.input {
        out.extend(io::arrays(&io::read_records(path)?)?);
    }
    if let Some(count) = src.random {
        let m = src.m.unwrap_or(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.extend((0..count).map(|i| Array { id: format!("random-{i}"), values: io::random_array(&mut rng, src.n, m), m }));
    }
    nonempty(out, "--values, --input or --random")
}

fn functions(src: &FnSource, seed: u64) -> Result<Vec<Function>, CliError> {
    let mut out = Vec::new();
    if let Some(name) = &src.function {
        out.push(Function { id: name.clone(), table: io::named_function(name)? });
    }
    if let Some(path) = &src.input {
        out.extend(io::functions(&io::read_records(path)?)?);
    }
    if let Some(count) = src.random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.extend((0..count).map(|i| Function { id: format!("random-{i}"), table: io::random_table(&mut rng, src.bits) }));
    }
    nonempty(out, "--fn, --input or --random")
}

fn nonempty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        Err(CliError::Input(format!("no instances: pass {what}")))
    } else {
        Ok(v)
    }
}

fn parallel<T: Sync>(
    items: &[T],
    f: impl Fn(usize, &T) -> Result<Row, CliError> + Sync + Send,
    timing: bool,
) -> Result<Vec<Row>, CliError> {
    items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let start = Instant::now();
            let mut row = f(i, item)?;
            if timing {
                row.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            Ok(row)
        })
        .collect()
}

fn class_name(c: PromiseClass) -> &'static str {
    match c {
        PromiseClass::True => "TRUE",
        PromiseClass::False => "FALSE",
        PromiseClass::NonPromise => "NON-PROMISE",
    }
}

fn verdict(b: bool) -> &'static str {
    if b {
        "TRUE"
    } else {
        "FALSE"
    }
}

fn success_given(class: PromiseClass, p_true: f64) -> f64 {
    match class {
        PromiseClass::True => p_true,
        PromiseClass::False => 1.0 - p_true,
        PromiseClass::NonPromise => 1.0,
    }
}

fn mismatched(class: PromiseClass, decision: bool) -> bool {
    match class {
        PromiseClass::True => !decision,
        PromiseClass::False => decision,
        PromiseClass::NonPromise => false,
    }
}

fn backend_name(b: Backend) -> &'static str {
    match b {
        Backend::Dense => "dense",
        Backend::Branch => "branch",
        Backend::Auto => "auto",
    }
}

fn shots_suffix(shots: Option<u64>, p: f64, seed: u64, i: usize) -> String {
    match shots {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let hits = (0..n).filter(|_| rng.gen::<f64>() < p).count();
            format!(" (shots {hits}/{n})")
        }
        None => String::new(),
    }
}

fn decision_row(id: &str, problem: &str, r: &HighDistResult, class: PromiseClass, extra: Vec<(&str, String)>, suffix: String) -> Row {
    let p = &r.params;
    let mut pairs = extra;
    pairs.extend([
        ("K", p.k.to_string()),
        ("l", p.l.to_string()),
        ("q", p.q.to_string()),
        ("aa_iterations", r.schedule_length.to_string()),
    ]);
    let mut row = Row::new(id, problem).with_queries(&r.queries);
    row.params = params(&pairs);
    row.result = format!("{}{suffix}", verdict(r.decision));
    row.success_probability = success_given(class, r.exact_success_probability);
    row.truth = class_name(class).into();
    row.backend = backend_name(r.backend).into();
    row.qubits = r.qubits;
    row.mismatch = mismatched(class, r.decision);
    row
}

fn search_row(id: &str, problem: &str, s: &PmaxEstimate, result: String, truth: String, pairs: Vec<(&str, String)>) -> Row {
    let mut row = Row::new(id, problem).with_queries(&s.queries);
    let mut pairs = pairs;
    pairs.push(("rounds", s.transcript.len().to_string()));
    row.params = params(&pairs);
    row.result = result;
    row.success_probability = s.coverage_probability;
    row.truth = truth;
    row
}

fn run_highdist(ctx: &Ctx, a: &HighDistArgs) -> Result<Vec<Row>, CliError> {
    let items = distributions(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |i, d| {
            let o = explicit_distribution_oracle(&d.probs, d.a)?;
            let mut p = HighDistParams::derive(o.m(), o.a(), a.tau, a.eps, a.delta)?;
            if a.preset == PresetArg::Full {
                p = p.full_copies();
            }
            if let Some(k) = a.copies {
                p = p.with_copies(k)?;
            }
            if let Some(l) = a.precision {
                p = p.with_precision(l)?;
            }
            let r = highdist_with(&o, &p, &ctx.config)?;
            let class = exact_highdist_answer(&o.probabilities(), a.tau, a.eps);
            let extra = vec![
                ("m", o.m().to_string()),
                ("tau", a.tau.to_string()),
                ("eps", a.eps.to_string()),
                ("delta", a.delta.to_string()),
                ("preset", format!("{:?}", a.preset).to_lowercase()),
            ];
            let suffix = shots_suffix(a.shots, r.exact_success_probability, ctx.global.seed, i);
            Ok(decision_row(&d.id, "highdist", &r, class, extra, suffix))
        },
        ctx.global.timing,
    )
}

fn run_highamp(ctx: &Ctx, a: &HighAmpArgs) -> Result<Vec<Row>, CliError> {
    let items = distributions(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |i, d| {
            let o = explicit_distribution_oracle(&d.probs, d.a)?;
            let p = highamp_params(o.m(), a.tau, a.eps, a.delta / 2.0)?;
            let r = highamp_with(&o, a.tau, &p, &ctx.config)?;
            let alpha: Vec<f64> = o.probabilities().iter().map(|v| v.sqrt()).collect();
            let class = exact_highamp_answer(&alpha, a.tau, a.eps);
            let extra =
                vec![("m", o.m().to_string()), ("tau", a.tau.to_string()), ("eps", a.eps.to_string()), ("delta", a.delta.to_string())];
            let suffix = shots_suffix(a.shots, r.exact_success_probability, ctx.global.seed, i);
            Ok(decision_row(&d.id, "highamp", &r, class, extra, suffix))
        },
        ctx.global.timing,
    )
}

fn interval_text(s: &PmaxEstimate) -> String {
    format!("{:.6} in [{:.6}, {:.6})", s.estimate, s.lower, s.upper)
}

fn run_pmax(ctx: &Ctx, a: &PmaxArgs) -> Result<Vec<Row>, CliError> {
    let items = distributions(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |_, d| {
            let o = explicit_distribution_oracle(&d.probs, d.a)?;
            let pm = exact_pmax(&o.probabilities()).0;
            let mut dec = QuantumDecider { oracle: &o, config: ctx.config, full_copies: a.preset == PresetArg::Full };
            let s = if a.relative {
                interval_search_rel_with(&mut dec, a.eps, a.delta, pm)?
            } else {
                interval_search_with(&mut dec, a.eps, a.delta, pm)?
            };
            let pairs = vec![
                ("m", o.m().to_string()),
                ("eps", a.eps.to_string()),
                ("delta", a.delta.to_string()),
                ("mode", if a.relative { "relative" } else { "additive" }.to_string()),
            ];
            let mut row = search_row(&d.id, "pmax", &s, interval_text(&s), format!("{pm:.6}"), pairs);
            row.backend = backend_name(ctx.config.backend).into();
            row.mismatch = !s.contains(pm);
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn run_minentropy(ctx: &Ctx, a: &MinEntropyArgs) -> Result<Vec<Row>, CliError> {
    let items = distributions(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |_, d| {
            let o = explicit_distribution_oracle(&d.probs, d.a)?;
            let p = o.probabilities();
            let pm = exact_pmax(&p).0;
            let mut dec = QuantumDecider { oracle: &o, config: ctx.config, full_copies: false };
            let e = min_entropy_with(&mut dec, a.bits, a.delta, pm)?;
            let pairs = vec![("m", o.m().to_string()), ("bits", a.bits.to_string()), ("delta", a.delta.to_string())];
            let truth = classical::min_entropy(&p);
            let mut row = search_row(&d.id, "minentropy", &e.search, format!("{:.6}", e.bits), format!("{truth:.6}"), pairs);
            row.backend = backend_name(ctx.config.backend).into();
            row.mismatch = !e.search.contains(pm);
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn app_row(arr: &Array, problem: &str, d: &AppDecision, pairs: Vec<(&str, String)>) -> Row {
    let class = match d.truth {
        Some(true) => PromiseClass::True,
        Some(false) => PromiseClass::False,
        None => PromiseClass::NonPromise,
    };
    let mut pairs = pairs;
    pairs.insert(0, ("n", arr.values.len().to_string()));
    pairs.insert(1, ("m", arr.m.to_string()));
    decision_row(&arr.id, problem, &d.run, class, pairs, String::new())
}

fn run_kdist(ctx: &Ctx, a: &KDistArgs) -> Result<Vec<Row>, CliError> {
    let items = arrays(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |_, arr| {
            let o = ArrayOracle::new(arr.values.clone(), arr.m)?;
            let d = gapped_k_distinctness_with(&o, a.k, 1, a.delta, &ctx.config)?;
            Ok(app_row(arr, "kdist", &d, vec![("k", a.k.to_string()), ("delta", a.delta.to_string())]))
        },
        ctx.global.timing,
    )
}

fn run_gkd(ctx: &Ctx, a: &GkdArgs) -> Result<Vec<Row>, CliError> {
    let items = arrays(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |_, arr| {
            let o = ArrayOracle::new(arr.values.clone(), arr.m)?;
            let d = gapped_k_distinctness_with(&o, a.k, a.gap, a.delta, &ctx.config)?;
            let pairs = vec![("k", a.k.to_string()), ("gap", a.gap.to_string()), ("delta", a.delta.to_string())];
            Ok(app_row(arr, "gkd", &d, pairs))
        },
        ctx.global.timing,
    )
}

fn run_finf(ctx: &Ctx, a: &FinfArgs) -> Result<Vec<Row>, CliError> {
    let items = arrays(&a.source, ctx.global.seed)?;
    parallel(
        &items,
        |_, arr| {
            let o = ArrayOracle::new(arr.values.clone(), arr.m)?;
            let e: FrequencyEstimate = if a.relative {
                f_infinity_relative_with(&o, a.eps, a.delta, &ctx.config)?
            } else {
                f_infinity_with(&o, a.eps, a.delta, &ctx.config)?
            };
            let n = arr.values.len();
            let pairs = vec![
                ("n", n.to_string()),
                ("m", arr.m.to_string()),
                ("eps", a.eps.to_string()),
                ("delta", a.delta.to_string()),
                ("mode", if a.relative { "relative" } else { "additive" }.to_string()),
            ];
            let result = format!("{:.6} (rounded {})", e.estimate, e.rounded);
            let mut row = search_row(&arr.id, "finf", &e.search, result, e.truth.to_string(), pairs);
            row.backend = backend_name(ctx.config.backend).into();
            row.mismatch = !e.search.contains(e.truth as f64 / n as f64) || (!a.relative && a.eps < 1.0 && e.rounded != e.truth);
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn run_nonlin(ctx: &Ctx, a: &NonlinArgs) -> Result<Vec<Row>, CliError> {
    let items = functions(&a.source, ctx.global.seed)?;
    let route = match a.route {
        RouteArg::Highamp => NonlinRoute::HighAmp,
        RouteArg::HighdistSquared => NonlinRoute::HighDistSquared,
    };
    parallel(
        &items,
        |_, f| {
            let o = BooleanFunctionOracle::new(f.table.clone())?;
            let e = nonlinearity_with(&o, a.lambda, a.delta, route, &ctx.config)?;
            let pairs = vec![
                ("bits", o.n().to_string()),
                ("lambda", a.lambda.to_string()),
                ("delta", a.delta.to_string()),
                ("route", format!("{:?}", a.route).to_lowercase()),
            ];
            let result = format!("{:.6} (fhat {:.6})", e.eta, e.fhat_estimate);
            let mut row = search_row(&f.id, "nonlin", &e.search, result, format!("{:.6}", e.truth), pairs);
            row.backend = backend_name(ctx.config.backend).into();
            row.mismatch = (e.eta - e.truth).abs() > a.lambda;
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn bench_family(n: usize, k: usize) -> Result<(IndexedAlgorithmFamily, Operator), CliError> {
    if !n.is_power_of_two() || n < 2 {
        return Err(CliError::Input(format!("family size {n} must be a power of two of at least 2")));
    }
    let layers: Vec<Vec<Operator>> =
        (0..=k).map(|j| (0..n).map(|y| Operator::ry(0.4 + 0.61 * y as f64 + 0.3 * j as f64)).collect()).collect();
    let family = IndexedAlgorithmFamily::new(layers, Operator::ry(1.1), "O")?;
    let amp = 1.0 / (n as f64).sqrt();
    let init = Operator::state_preparation(&vec![C64::new(amp, 0.0); n])?;
    Ok((family, init))
}

fn run_simulae(ctx: &Ctx, a: &SimulaeArgs) -> Result<Vec<Row>, CliError> {
    let mut rows = parallel(
        &a.sizes,
        |_, &n| {
            let (family, init) = bench_family(n, a.k)?;
            let simul = simul_amp_est(&family, &init, a.m)?;
            let naive = naive_serial_baseline(&family, &init, a.m)?;
            let mut worst = 1.0f64;
            let (bs, bn) = (factorize_by_branch(&simul.state, RegId(0))?, factorize_by_branch(&naive.state, RegId(0))?);
            for (x, y) in bs.iter().zip(&bn) {
                worst = worst.min(x.sub_state.fidelity(&y.sub_state)?);
            }
            let (s, nv) = (simul.queries.total("O"), naive.queries.total("O"));
            let mut row = Row::new(&format!("N={n}"), "simulae-bench").with_queries(&simul.queries);
            row.params = params(&[("N", n.to_string()), ("k", a.k.to_string()), ("m", a.m.to_string())]);
            row.result = format!("simultaneous {s}; serial {nv}; min branch fidelity {worst:.12}");
            row.success_probability = worst;
            row.truth = format!("serial/simultaneous = {}", nv as f64 / s as f64);
            row.backend = "dense".into();
            row.qubits = simul.state.layout().total_width();
            row.mismatch = worst < 1.0 - 1e-10 || nv != n as u64 * s;
            Ok(row)
        },
        ctx.global.timing,
    )?;
    let first = rows.first().map(|r| r.queries.clone());
    for r in &mut rows {
        r.mismatch |= Some(&r.queries) != first.as_ref();
    }
    Ok(rows)
}

fn random_state(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / norm).collect()
}

fn run_hadamard(ctx: &Ctx, a: &HadamardArgs) -> Result<Vec<Row>, CliError> {
    if !a.dim.is_power_of_two() {
        return Err(CliError::Input(format!("dimension {} must be a power of two", a.dim)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.global.seed);
    let pairs: Vec<(Vec<C64>, Vec<C64>)> = (0..a.pairs).map(|_| (random_state(&mut rng, a.dim), random_state(&mut rng, a.dim))).collect();
    parallel(
        &pairs,
        |i, (x, y)| {
            let px = Preparer::new(Operator::state_preparation(x)?, "psi");
            let py = Preparer::new(Operator::state_preparation(y)?, "phi");
            let e = estimate_overlap(&px, &py, a.eps, a.delta)?;
            let mut row = Row::new(&format!("pair-{i}"), "hadamard-bench").with_queries(&e.queries);
            row.params = params(&[
                ("dim", a.dim.to_string()),
                ("eps", a.eps.to_string()),
                ("delta", a.delta.to_string()),
                ("precision", e.precision.to_string()),
                ("repetitions", e.repetitions.to_string()),
            ]);
            row.result = format!("{:.6}", e.estimate);
            row.success_probability = e.success_probability;
            row.truth = format!("{:.6}", e.exact);
            row.mismatch = (e.estimate - e.exact).abs() > a.eps;
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn run_reductions(ctx: &Ctx, a: &ReductionsArgs) -> Result<Vec<Row>, CliError> {
    let biases: Vec<Bias> = match a.bias {
        BiasArg::Exact => vec![Bias::Exact],
        BiasArg::Low => vec![Bias::Low],
        BiasArg::High => vec![Bias::High],
        BiasArg::All => vec![Bias::Exact, Bias::Low, Bias::High],
    };
    let instances: Vec<_> = (1..=a.max_n).flat_map(|n| multisets(n, a.m)).flat_map(|v| instances_for(&v)).collect();
    let jobs: Vec<(Reduction, Bias)> = Reduction::ALL.iter().flat_map(|&r| biases.iter().map(move |&b| (r, b))).collect();
    parallel(
        &jobs,
        |_, &(r, bias)| {
            let mut s = ClassicalTargets { bias };
            let (mut total, mut valid) = (0usize, 0usize);
            for inst in instances.iter().filter(|i| r.accepts(i)) {
                total += 1;
                valid += is_valid(inst, &run_reduction(r, inst, &mut s)?) as usize;
            }
            let mut row = Row::new(r.name(), "reductions-check");
            row.params = params(&[("max_n", a.max_n.to_string()), ("m", a.m.to_string()), ("bias", format!("{bias:?}").to_lowercase())]);
            row.result = format!("{valid}/{total} valid");
            row.success_probability = if total == 0 { 1.0 } else { valid as f64 / total as f64 };
            row.truth = "classical".into();
            row.backend = "classical".into();
            row.mismatch = valid != total;
            Ok(row)
        },
        ctx.global.timing,
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx { config: engine_config(cli.global.backend)?, global: cli.global.clone() };
    let rows = match &cli.command {
        Command::Highdist(a) => run_highdist(&ctx, a)?,
        Command::Highamp(a) => run_highamp(&ctx, a)?,
        Command::Pmax(a) => run_pmax(&ctx, a)?,
        Command::Minentropy(a) => run_minentropy(&ctx, a)?,
        Command::Kdist(a) => run_kdist(&ctx, a)?,
        Command::Gkd(a) => run_gkd(&ctx, a)?,
        Command::Finf(a) => run_finf(&ctx, a)?,
        Command::Nonlin(a) => run_nonlin(&ctx, a)?,
        Command::SimulaeBench(a) => run_simulae(&ctx, a)?,
        Command::HadamardBench(a) => run_hadamard(&ctx, a)?,
        Command::ReductionsCheck(a) => run_reductions(&ctx, a)?,
    };
    let sidecar = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "global": ctx.global,
        "dense_cap": ctx.config.dense_cap,
        "command": cli.command,
        "rows": rows.len(),
    });
    report::emit(&rows, ctx.global.out.as_deref(), &sidecar)?;
    if ctx.global.check {
        let bad: Vec<&str> = rows.iter().filter(|r| r.mismatch).map(|r| r.id.as_str()).collect();
        if !bad.is_empty() {
            return Err(CliError::Check(bad.join(", ")));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Check(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
