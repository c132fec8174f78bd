use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use causalbench::harness::{
    average_matrices, corr_matrix, lambda_values, read_pair_csv, run_sweep, timing_table,
    write_pair_csv, write_timing_csv, CorrKind, Manifest, Statistic, SweepConfig, SweepResult,
};
use causalbench::oracle::{ctir_lp_analytic, te_lp_analytic};
use causalbench::perturb::{summarize_fg, Perturbation, PerturbationSpec, Target};
use causalbench::registry::{Preset, Registry};
use causalbench::simulate::{Coupling, LpParams, SystemKind};
use causalbench::{Direction, Status};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

const WORKERS_ENV: &str = "CAUSALITY_WORKERS";

#[derive(Parser)]
#[command(
    name = "causalbench",
    version,
    about = "Benchmark bivariate causality indices on coupled systems"
)]
struct Cli {
    /// TOML file of option values; its entries override flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one coupled system and write `t,x,y` CSV.
    Simulate(SimulateArgs),
    /// Estimate indices on a series CSV.
    Indices(IndicesArgs),
    /// Run a coupling sweep and write records plus a manifest.
    Sweep(SweepArgs),
    /// Compare a perturbed sweep with its baseline and write f/g.
    Perturb(PerturbArgs),
    /// Closed-form TE and CTIR of the linear process over a coupling grid.
    Oracle(OracleArgs),
    /// Correlation matrices and timing tables from stored sweep records.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct SimulateArgs {
    #[arg(long)]
    system: Option<String>,
    /// Coupling, or X->Y coupling for the bidirectional maps.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_yx: Option<f64>,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct IndicesArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Parameter preset; defaults to the first preset of --system.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    system: Option<String>,
    /// Index to compute; repeat or comma-separate. All when absent.
    #[arg(long = "index", value_delimiter = ',')]
    indices: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default, Clone)]
struct SweepOpts {
    #[arg(long)]
    preset: Option<String>,
    /// Coupling step 0.01 with 10 runs.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Override the preset series length.
    #[arg(long)]
    len: Option<usize>,
    #[arg(long = "index", value_delimiter = ',')]
    indices: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record Ulam synchrony windows as skipped.
    #[arg(long)]
    skip_synchrony: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Default)]
struct SweepArgs {
    #[command(flatten)]
    opts: SweepOpts,
}

#[derive(Args, Default)]
struct PerturbArgs {
    #[command(flatten)]
    opts: SweepOpts,
    /// identity, data_size, standardize, scale, round, missing or noise.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    decimals: Option<u32>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    variance: Option<f64>,
    /// Series length kept by data_size.
    #[arg(long)]
    keep: Option<usize>,
    /// x, y or both.
    #[arg(long)]
    target: Option<String>,
    /// Directory holding a baseline `sweep.csv` and `manifest.toml`; defaults to --out-dir.
    #[arg(long)]
    baseline_dir: Option<PathBuf>,
}

#[derive(Args, Default)]
struct OracleArgs {
    /// Linear-process parameters as key=value (b_x, b_y, var_x, var_y).
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    lp: Vec<String>,
    /// Grid `start:stop:step`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    tau_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ReportArgs {
    /// A `sweep.csv` file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// pearson, spearman or both.
    #[arg(long)]
    kind: Option<String>,
    /// d, xy or yx; per-system default when absent.
    #[arg(long)]
    statistic: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Values accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    system: Option<String>,
    preset: Option<String>,
    lambda: Option<f64>,
    lambda_yx: Option<f64>,
    len: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    input: Option<PathBuf>,
    indices: Option<Vec<String>>,
    full: Option<bool>,
    step: Option<f64>,
    runs: Option<usize>,
    skip_synchrony: Option<bool>,
    kind: Option<String>,
    factor: Option<f64>,
    decimals: Option<u32>,
    fraction: Option<f64>,
    variance: Option<f64>,
    keep: Option<usize>,
    target: Option<String>,
    baseline_dir: Option<PathBuf>,
    lp: Option<Vec<String>>,
    tau_max: Option<usize>,
    statistic: Option<String>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Validation(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numerical = e.chain().any(|c| {
            c.downcast_ref::<causalbench::Error>()
                .is_some_and(causalbench::Error::is_numerical)
        });
        if numerical {
            Failure::Numerical(e)
        } else {
            Failure::Validation(e)
        }
    }
}

impl From<causalbench::Error> for Failure {
    fn from(e: causalbench::Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn merge<T: PartialEq + std::fmt::Debug>(name: &str, flag: &mut Option<T>, file: Option<T>) {
    if let Some(v) = file {
        if let Some(f) = flag.as_ref() {
            if *f != v {
                log::warn!("{name}: config file value {v:?} overrides flag value {f:?}");
            }
        }
        *flag = Some(v);
    }
}

fn merge_bool(name: &str, flag: &mut bool, file: Option<bool>) {
    let mut opt = flag.then_some(true);
    merge(name, &mut opt, file);
    *flag = opt.unwrap_or(false);
}

fn merge_vec(name: &str, flag: &mut Vec<String>, file: Option<Vec<String>>) {
    let mut opt = (!flag.is_empty()).then(|| flag.clone());
    merge(name, &mut opt, file);
    *flag = opt.unwrap_or_default();
}

fn load_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn apply_sweep_config(o: &mut SweepOpts, f: &mut FileConfig) {
    merge("preset", &mut o.preset, f.preset.take());
    merge("step", &mut o.step, f.step.take());
    merge("runs", &mut o.runs, f.runs.take());
    merge("len", &mut o.len, f.len.take());
    merge("seed", &mut o.seed, f.seed.take());
    merge("out_dir", &mut o.out_dir, f.out_dir.take());
    merge_vec("indices", &mut o.indices, f.indices.take());
    merge_bool("full", &mut o.full, f.full.take());
    merge_bool(
        "skip_synchrony",
        &mut o.skip_synchrony,
        f.skip_synchrony.take(),
    );
}

fn apply_config(cmd: &mut Command, mut f: FileConfig) {
    match cmd {
        Command::Simulate(a) => {
            merge("system", &mut a.system, f.system);
            merge("lambda", &mut a.lambda, f.lambda);
            merge("lambda_yx", &mut a.lambda_yx, f.lambda_yx);
            merge("len", &mut a.len, f.len);
            merge("seed", &mut a.seed, f.seed);
            merge("out", &mut a.out, f.out);
        }
        Command::Indices(a) => {
            merge("input", &mut a.input, f.input);
            merge("preset", &mut a.preset, f.preset);
            merge("system", &mut a.system, f.system);
            merge_vec("indices", &mut a.indices, f.indices);
            merge("seed", &mut a.seed, f.seed);
            merge("out", &mut a.out, f.out);
        }
        Command::Sweep(a) => apply_sweep_config(&mut a.opts, &mut f),
        Command::Perturb(a) => {
            apply_sweep_config(&mut a.opts, &mut f);
            merge("kind", &mut a.kind, f.kind);
            merge("factor", &mut a.factor, f.factor);
            merge("decimals", &mut a.decimals, f.decimals);
            merge("fraction", &mut a.fraction, f.fraction);
            merge("variance", &mut a.variance, f.variance);
            merge("keep", &mut a.keep, f.keep);
            merge("target", &mut a.target, f.target);
            merge("baseline_dir", &mut a.baseline_dir, f.baseline_dir);
        }
        Command::Oracle(a) => {
            merge_vec("lp", &mut a.lp, f.lp);
            merge("tau_max", &mut a.tau_max, f.tau_max);
            merge("out", &mut a.out, f.out);
        }
        Command::Report(a) => {
            merge("input", &mut a.input, f.input);
            merge("kind", &mut a.kind, f.kind);
            merge("statistic", &mut a.statistic, f.statistic);
            merge("out_dir", &mut a.out_dir, f.out_dir);
        }
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_system(s: &str) -> anyhow::Result<SystemKind> {
    SystemKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = SystemKind::ALL.iter().map(|k| k.name()).collect();
        anyhow!(
            "unknown system '{s}' (expected one of {})",
            names.join(", ")
        )
    })
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let system = parse_system(
        a.system
            .as_deref()
            .ok_or_else(|| anyhow!("--system is required"))?,
    )?;
    let lambda = a.lambda.unwrap_or(0.0);
    let coupling = if system.is_bidirectional() {
        Coupling {
            xy: lambda,
            yx: a.lambda_yx.unwrap_or(0.0),
        }
    } else {
        if a.lambda_yx.is_some() {
            return Err(anyhow!("{} takes a single --lambda", system.name()).into());
        }
        system.coupling(lambda)
    };
    let len = a.len.unwrap_or(Preset::default_for(system).len);
    let pair = system.simulate(coupling, len, a.seed.unwrap_or(0))?;
    write_pair_csv(&pair, output(a.out.as_deref())?)?;
    Ok(())
}

fn cmd_indices(a: IndicesArgs) -> CmdResult {
    let input = a.input.ok_or_else(|| anyhow!("--input is required"))?;
    let pair =
        read_pair_csv(File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
    let preset = match (&a.preset, &a.system) {
        (Some(p), _) => Preset::lookup(p)?,
        (None, Some(s)) => Preset::default_for(parse_system(s)?),
        (None, None) => Preset::lookup("ulam-1e3")?,
    };
    let registry = Registry::from_preset(&preset, &a.indices)?;
    let estimates = registry.estimate_all(&pair, a.seed.unwrap_or(0))?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "index,value_xy,value_yx,directed,status")?;
    let fmt = |v: f64| {
        if v.is_finite() {
            format!("{v}")
        } else {
            "NA".to_string()
        }
    };
    let mut degenerate = Vec::new();
    for e in &estimates {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.index,
            fmt(e.value_xy),
            fmt(e.value_yx),
            fmt(e.directed),
            e.status.as_str()
        )?;
        if e.status == Status::Degenerate {
            degenerate.push(e.index.clone());
        }
    }
    w.flush()?;
    if !degenerate.is_empty() {
        return Err(Failure::Numerical(anyhow!(
            "degenerate estimates: {}",
            degenerate.join(", ")
        )));
    }
    Ok(())
}

fn sweep_config(o: &SweepOpts) -> anyhow::Result<SweepConfig> {
    let name = o
        .preset
        .as_deref()
        .ok_or_else(|| anyhow!("--preset is required"))?;
    let mut preset = Preset::lookup(name)?;
    if let Some(len) = o.len {
        preset.len = len;
    }
    let mut cfg = if o.full {
        SweepConfig::full(preset)?
    } else {
        SweepConfig::desk(preset)?
    };
    if let Some(step) = o.step {
        cfg = SweepConfig {
            runs: cfg.runs,
            ..SweepConfig::with_grid(cfg.preset, step, cfg.runs)?
        };
    }
    if let Some(runs) = o.runs {
        cfg.runs = runs;
    }
    cfg.indices = o.indices.clone();
    cfg.base_seed = o.seed.unwrap_or(0);
    cfg.skip_synchrony = o.skip_synchrony;
    cfg.validate()?;
    Ok(cfg)
}

fn write_sweep(dir: &Path, cfg: &SweepConfig, res: &SweepResult) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    res.write_csv(BufWriter::new(File::create(dir.join("sweep.csv"))?))?;
    let manifest = toml::to_string_pretty(&Manifest::new(cfg))?;
    fs::write(dir.join("manifest.toml"), manifest)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> anyhow::Result<Option<Manifest>> {
    let path = dir.join("manifest.toml");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    Ok(Some(
        toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?,
    ))
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let cfg = sweep_config(&a.opts)?;
    let dir = a
        .opts
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let res = run_sweep(&cfg)?;
    write_sweep(&dir, &cfg, &res)?;
    log::info!(
        "{} records written to {}",
        res.records.len(),
        dir.join("sweep.csv").display()
    );
    Ok(())
}

fn perturbation(a: &PerturbArgs) -> anyhow::Result<Perturbation> {
    let kind = a
        .kind
        .as_deref()
        .ok_or_else(|| anyhow!("--kind is required"))?;
    let target = match &a.target {
        Some(t) => Target::parse(t).ok_or_else(|| anyhow!("unknown target '{t}'"))?,
        None => Target::Both,
    };
    let need =
        |v: Option<f64>, flag: &str| v.ok_or_else(|| anyhow!("--kind {kind} requires --{flag}"));
    Ok(match kind {
        "identity" => Perturbation::Identity,
        "standardize" => Perturbation::Standardize,
        "data_size" => Perturbation::DataSize {
            len: a
                .keep
                .ok_or_else(|| anyhow!("--kind data_size requires --keep"))?,
        },
        "scale" => Perturbation::Scale {
            factor: need(a.factor, "factor")?,
            target,
        },
        "round" => Perturbation::Round {
            decimals: a
                .decimals
                .ok_or_else(|| anyhow!("--kind round requires --decimals"))?,
            target,
        },
        "missing" => Perturbation::Missing {
            fraction: need(a.fraction, "fraction")?,
            target,
        },
        "noise" => Perturbation::Noise {
            variance: need(a.variance, "variance")?,
            target,
        },
        other => bail!("unknown perturbation kind '{other}'"),
    })
}

fn cmd_perturb(a: PerturbArgs) -> CmdResult {
    let kind = perturbation(&a)?;
    let out_dir = a
        .opts
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let base_dir = a.baseline_dir.clone().unwrap_or_else(|| out_dir.clone());
    let stored = match read_manifest(&base_dir)? {
        Some(m)
            if base_dir.join("sweep.csv").exists()
                && a.opts
                    .preset
                    .as_ref()
                    .is_none_or(|p| *p == m.config.preset.name) =>
        {
            let res = SweepResult::read_csv(File::open(base_dir.join("sweep.csv"))?)?;
            log::info!("baseline read from {}", base_dir.display());
            Some((m.config, res))
        }
        _ => None,
    };
    let (base_cfg, baseline) = match stored {
        Some(s) => s,
        None => {
            let cfg = sweep_config(&a.opts)?;
            let res = run_sweep(&cfg)?;
            write_sweep(&out_dir, &cfg, &res)?;
            (cfg, res)
        }
    };
    let spec = PerturbationSpec::new(kind, base_cfg.base_seed);
    let cfg = SweepConfig {
        perturbation: Some(spec.clone()),
        ..base_cfg.clone()
    };
    let perturbed = run_sweep(&cfg)?;
    let label = spec
        .label()
        .replace(['(', ')', ','], "_")
        .trim_end_matches('_')
        .to_string();
    let pdir = out_dir.join(format!("perturbed_{label}"));
    write_sweep(&pdir, &cfg, &perturbed)?;
    let summary = summarize_fg(&baseline, &perturbed, base_cfg.preset.system)?;
    fs::create_dir_all(&out_dir)?;
    summary.write_csv(File::create(out_dir.join(format!("fg_{label}.csv")))?)?;
    summary.write_csv(io::stdout().lock())?;
    Ok(())
}

fn lp_params(kv: &[String]) -> anyhow::Result<LpParams> {
    let mut p = LpParams::default();
    for item in kv {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got '{item}'"))?;
        let v: f64 = v
            .parse()
            .with_context(|| format!("bad number in '{item}'"))?;
        match k {
            "b_x" => p.b_x = v,
            "b_y" => p.b_y = v,
            "var_x" => p.var_x = v,
            "var_y" => p.var_y = v,
            _ => bail!("unknown linear-process parameter '{k}'"),
        }
    }
    Ok(p)
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid '{s}'"))
        })
        .collect::<anyhow::Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        bail!("grid '{s}' is not start:stop:step");
    };
    if stop < start {
        bail!("grid '{s}' has stop < start");
    }
    Ok(lambda_values(stop - start, step)?
        .into_iter()
        .map(|v| ((start + v) * 1e10).round() / 1e10)
        .collect())
}

fn cmd_oracle(a: OracleArgs) -> CmdResult {
    let base = lp_params(&a.lp)?;
    let grid = parse_grid(a.lambda.as_deref().unwrap_or("0:1:0.1"))?;
    let tau_max = a
        .tau_max
        .unwrap_or(Preset::default_for(SystemKind::LinearProcess).ctir_tau_max);
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "lambda,te_xy,te_yx,ctir_xy,ctir_yx")?;
    for lambda in grid {
        let p = LpParams {
            lambda,
            ..base.clone()
        };
        let v = [
            te_lp_analytic(&p, Direction::XtoY)?,
            te_lp_analytic(&p, Direction::YtoX)?,
            ctir_lp_analytic(&p, tau_max, Direction::XtoY)?,
            ctir_lp_analytic(&p, tau_max, Direction::YtoX)?,
        ];
        writeln!(w, "{lambda},{},{},{},{}", v[0], v[1], v[2], v[3])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CmdResult {
    let input = a.input.ok_or_else(|| anyhow!("--input is required"))?;
    let res = SweepResult::read_csv(
        File::open(&input).with_context(|| format!("opening {}", input.display()))?,
    )?;
    let kinds = match a.kind.as_deref().unwrap_or("both") {
        "both" => vec![CorrKind::Pearson, CorrKind::Spearman],
        k => vec![CorrKind::parse(k).ok_or_else(|| anyhow!("unknown correlation '{k}'"))?],
    };
    let forced = match &a.statistic {
        Some(s) => Some(Statistic::parse(s).ok_or_else(|| anyhow!("unknown statistic '{s}'"))?),
        None => None,
    };
    let dir = a
        .out_dir
        .unwrap_or_else(|| input.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&dir)?;
    for kind in kinds {
        let kname = format!("{kind:?}").to_ascii_lowercase();
        let mut all = Vec::new();
        for sim in res.simulations() {
            let sub = res.filter_simulation(&sim);
            let system = Preset::lookup(&sim).map(|p| p.system).ok();
            let stats = match (forced, system) {
                (Some(s), _) => vec![s],
                (None, Some(sys)) => Statistic::defaults_for(sys),
                (None, None) => vec![Statistic::Directed],
            };
            for stat in stats {
                let m = corr_matrix(&sub, kind, stat)?;
                let tag = stat.label().replace("->", "");
                m.write_csv(File::create(
                    dir.join(format!("corr_{sim}_{tag}_{kname}.csv")),
                )?)?;
                all.push(m);
            }
        }
        if let Some(avg) = average_matrices(&all) {
            avg.write_csv(File::create(dir.join(format!("corr_average_{kname}.csv")))?)?;
        }
    }
    write_timing_csv(&timing_table(&res), File::create(dir.join("timing.csv"))?)?;
    log::info!("report written to {}", dir.display());
    Ok(())
}

fn init_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{WORKERS_ENV}='{v}' is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    init_workers()?;
    let mut command = cli.command;
    if let Some(path) = &cli.config {
        apply_config(&mut command, load_config(path)?);
    }
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Indices(a) => cmd_indices(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
