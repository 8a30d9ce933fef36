//! `mterm`: mixed Lorentz norms, M-term approximants and rate sweeps.
//!
//! Exit codes: 0 success or pass, 1 rate outside its acceptance band,
//! 2 usage, configuration or computation error.

mod config;
mod suites;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mterm_core::classes::{block_norm_profile, BlockNormProfile};
use mterm_core::io::{read_grid_binary, read_grid_csv, read_spectrum_csv, write_spectrum_csv};
use mterm_core::lorentz::{mixed_lebesgue, mixed_lorentz};
use mterm_core::mterm::{approximation_error, budget_plan, build_approximant, theorem_exponent, truncation_level};
use mterm_core::spectral::{grid_sizes_for, synthesize};
use mterm_core::testfns::{dirichlet_cubic, f3, g1, lacunary_random, rudin_shapiro_product};
use mterm_core::verify::{dual_certificate, rate_experiment};
use mterm_core::{
    BesovParams, BlockShape, Error, GridFunction, LorentzExponents, Regime, Result, SchemeKind, SeededSampler,
    Spectrum, Tau,
};
use serde::Serialize;

use config::{output_dir, ExperimentConfig, RawClass, RawConfig, RawFamily, RawScheme, RawTarget};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "mterm", version, about = "M-term trigonometric approximation in mixed Lorentz norms")]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mixed Lorentz (or Lebesgue) norm of a grid or spectrum file.
    Norm(NormArgs),
    /// Build one approximant and report its error.
    Approx(ExperimentArgs),
    /// Sweep M, fit the decay exponent and compare with the prediction.
    Rates(RatesArgs),
    /// Run a seeded inequality suite.
    Check(CheckArgs),
    /// Emit a test function as spectrum CSV.
    Testfn(TestfnArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Binary,
    GridCsv,
    SpectrumCsv,
}

#[derive(Args)]
struct NormArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Second Lorentz index per axis (default: equal to p).
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Use the iterated Lebesgue quadrature instead of the Lorentz functional.
    #[arg(long)]
    lebesgue: bool,
    /// Grid oversampling for spectrum inputs.
    #[arg(long, default_value_t = 8)]
    oversample: usize,
    /// Print a JSON report instead of the bare value.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    /// Third Besov index; `inf` selects the Nikol'skii class.
    #[arg(long)]
    tau: Option<Tau>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    target_theta: Option<Vec<f64>>,
    /// greedy | block-budget | truncation
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// Within-block selection for block-budget: greedy | sampled
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ms: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    oversample: Option<usize>,
    /// flat | peaked
    #[arg(long)]
    shape: Option<BlockShape>,
    #[arg(long)]
    max_block: Option<u32>,
    #[arg(long)]
    extra_blocks: Option<u32>,
    /// Spectrum CSV to approximate instead of a generated family member.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (overrides the environment and the config file).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Relative slope tolerance.
    #[arg(long)]
    band: Option<f64>,
    /// Print the budget plans and exit without computing.
    #[arg(long)]
    dry_run: bool,
    /// Also write two-column `M error` data for gnuplot.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: suites::Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    oversample: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestfnArgs {
    #[command(subcommand)]
    kind: TestfnKind,
    /// Spectrum CSV path; a JSON sidecar is written next to it. Default: stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
enum TestfnKind {
    /// Coefficient 1 on the cube max|k_j| ≤ 2^l.
    Dirichlet {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        m: usize,
    },
    /// Cosine products with weights ∏ 1/k_j over blocks 1..=n.
    G1 {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: usize,
    },
    /// Cosine products with weights n^{-1} 2^{-sΣ(1-1/p_j)} ∏ k_j^{-r/m}.
    F3 {
        #[arg(long)]
        n: u32,
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long)]
        r: f64,
    },
    /// Scaled sum of tensor Rudin–Shapiro blocks.
    RudinShapiro {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: f64,
    },
    /// Seeded lacunary member with block norms 2^{-sr}.
    Lacunary {
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        max_block: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "flat")]
        shape: BlockShape,
        #[arg(long, default_value_t = 4)]
        oversample: usize,
    },
}

/// Common envelope of every JSON artifact.
#[derive(Serialize)]
struct Artifact<'a, C: Serialize, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    result: T,
}

fn artifact<'a, C: Serialize, T: Serialize>(command: &'static str, config: &'a C, result: T) -> Artifact<'a, C, T> {
    Artifact { tool: "mterm", version: VERSION, command, config, result }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl ExperimentArgs {
    fn overlay(&self) -> RawConfig {
        RawConfig {
            seed: self.seed,
            oversample: self.oversample,
            band: None,
            compensated_band: None,
            out_dir: None,
            class: RawClass { p: self.p.clone(), theta: self.theta.clone(), r: self.r, tau: self.tau },
            target: RawTarget { q: self.q.clone(), theta: self.target_theta.clone() },
            scheme: RawScheme {
                kind: self.scheme,
                selection: self.selection.clone(),
                terms: self.terms,
                ms: self.ms.clone(),
            },
            family: RawFamily { shape: self.shape, extra_blocks: self.extra_blocks, max_block: self.max_block },
        }
    }

    /// Resolved configuration and output directory.
    fn resolve(&self, band: Option<f64>) -> Result<(ExperimentConfig, PathBuf)> {
        let file = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let dir = output_dir(self.out.clone(), file.out_dir.clone());
        let mut flags = self.overlay();
        flags.band = band;
        Ok((file.overlay(flags).resolve()?, dir))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn load_norm_input(args: &NormArgs) -> Result<GridFunction> {
    let format = match args.format {
        Some(f) => f,
        None if args.input.extension().is_some_and(|e| e == "bin") => InputFormat::Binary,
        None => {
            let text = fs::read_to_string(&args.input).map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
            if text.starts_with('k') {
                InputFormat::SpectrumCsv
            } else {
                InputFormat::GridCsv
            }
        }
    };
    let file = open(&args.input)?;
    match format {
        InputFormat::Binary => read_grid_binary(io::BufReader::new(file)),
        InputFormat::GridCsv => read_grid_csv(file),
        InputFormat::SpectrumCsv => {
            let s = read_spectrum_csv(file)?;
            synthesize(&s, &grid_sizes_for(&s.max_freq(), args.oversample))
        }
    }
}

#[derive(Serialize)]
struct NormReport<'a> {
    input: &'a Path,
    p: &'a [f64],
    theta: &'a [f64],
    lebesgue: bool,
    grid: &'a [usize],
    value: f64,
}

fn cmd_norm(args: NormArgs) -> Result<ExitCode> {
    let grid = load_norm_input(&args)?;
    let theta = args.theta.clone().unwrap_or_else(|| args.p.clone());
    let value = if args.lebesgue {
        mixed_lebesgue(&grid, &args.p)?
    } else {
        mixed_lorentz(&grid, &LorentzExponents::new(args.p.clone(), theta.clone())?)?
    };
    if args.json {
        let report = NormReport { input: &args.input, p: &args.p, theta: &theta, lebesgue: args.lebesgue, grid: grid.sizes(), value };
        let out = serde_json::to_string_pretty(&artifact("norm", &report, value)).map_err(|e| Error::Io(e.to_string()))?;
        println!("{out}");
    } else {
        println!("{value:.15e}");
    }
    Ok(ExitCode::SUCCESS)
}

fn profile_for(f: &Spectrum, source: &BesovParams, oversample: usize) -> Result<BlockNormProfile> {
    block_norm_profile(f, &source.base, oversample)
}

#[derive(Serialize)]
struct ApproxResult {
    kind: SchemeKind,
    regime: Regime,
    terms: usize,
    input: Option<PathBuf>,
    source_modes: usize,
    support: usize,
    error: f64,
    certificate: f64,
    grid: Vec<usize>,
    truncation_level: Option<i64>,
    plan: Option<mterm_core::BudgetPlan>,
}

fn cmd_approx(args: ExperimentArgs) -> Result<ExitCode> {
    let (cfg, dir) = args.resolve(None)?;
    let terms = cfg
        .scheme
        .terms
        .ok_or_else(|| Error::InvalidParameter("missing required setting `scheme.terms`".into()))?;
    let spec = cfg.scheme_spec(terms)?;
    let f = match &args.input {
        Some(path) => read_spectrum_csv(open(path)?)?,
        None => cfg.family().member(&spec, terms)?,
    };
    let profile = profile_for(&f, &spec.source, cfg.oversample)?;
    let a = build_approximant(&f, &spec, &profile)?;
    let error = approximation_error(&f, &a, &spec.target, cfg.oversample)?;
    let certificate = dual_certificate(&f, &a.support, &spec.target.dual(), cfg.oversample)?;
    ensure_dir(&dir)?;
    let mut w = create(&dir.join("approximant.csv"))?;
    write_spectrum_csv(&a.coefficients, &mut w)?;
    w.flush()?;
    let result = ApproxResult {
        kind: spec.kind,
        regime: cfg.regime()?,
        terms,
        input: args.input.clone(),
        source_modes: f.len(),
        support: a.len(),
        error,
        certificate,
        grid: grid_sizes_for(&f.max_freq(), cfg.oversample),
        truncation_level: a.truncation_level,
        plan: a.plan.clone(),
    };
    write_json(&dir.join("plan.json"), &artifact("approx", &cfg, result))?;
    println!("{error:.15e}");
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RatesResult {
    regime: Regime,
    passed: bool,
    gate: String,
    fit: mterm_core::RateFitResult,
}

fn dry_run(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let source = cfg.source()?;
    let family = cfg.family();
    for &terms in &cfg.scheme.ms {
        let spec = cfg.scheme_spec(terms)?;
        let band = family.band(&spec, terms)?;
        match cfg.scheme.kind {
            SchemeKind::BlockBudget => {
                // Budgets of the critical regime read the profile; the
                // nominal Nikol'skii profile 2^{-sr} stands in for it here.
                let nominal = BlockNormProfile((0..=band).map(|s| (-(s as f64) * source.r).exp2()).collect());
                match budget_plan(terms, &source, &spec.target, &nominal) {
                    Ok(plan) => {
                        let budgets: Vec<String> = plan.budgets.iter().map(|b| format!("{}:{}", b.block, b.budget)).collect();
                        println!(
                            "M={terms} n={} alpha={} N_s=[{}] total={} band={band}",
                            plan.n,
                            plan.alpha,
                            budgets.join(" "),
                            plan.total_count
                        );
                    }
                    Err(Error::EmptyRange { n, alpha }) => {
                        println!("M={terms} n={n} alpha={alpha} empty window: truncation at block {n} band={band}")
                    }
                    Err(e) => return Err(e),
                }
            }
            SchemeKind::Truncation => {
                println!("M={terms} truncation level={} band={band}", truncation_level(terms, cfg.dims()))
            }
            SchemeKind::Greedy => println!("M={terms} greedy band={band}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_rates(args: RatesArgs) -> Result<ExitCode> {
    let (cfg, dir) = args.experiment.resolve(args.band)?;
    if cfg.scheme.ms.len() < 4 {
        return Err(Error::InvalidParameter("`scheme.ms` needs at least 4 values".into()));
    }
    if args.dry_run {
        return dry_run(&cfg);
    }
    let regime = cfg.regime()?;
    let predicted = theorem_exponent(&cfg.class.p, &cfg.target.q, cfg.class.r, cfg.class.tau)?;
    let template = cfg.scheme_spec(0)?;
    let family = cfg.family();
    let fit = rate_experiment(|m| family.member(&template.clone().with_terms(m), m), &template, &cfg.scheme.ms, predicted)?;
    let (passed, gate) = if regime == Regime::Critical {
        (
            fit.compensated_slope.abs() <= cfg.compensated_band,
            format!("|compensated slope| <= {}", cfg.compensated_band),
        )
    } else {
        (fit.within(cfg.band), format!("|slope - predicted| <= {} |predicted|", cfg.band))
    };

    ensure_dir(&dir)?;
    let mut csv = create(&dir.join("rates.csv"))?;
    writeln!(csv, "M,error,support,source_modes,certificate")?;
    for p in &fit.points {
        writeln!(csv, "{},{},{},{},{}", p.terms, p.error, p.support, p.source_modes, p.certificate)?;
    }
    csv.flush()?;
    if args.plot_data {
        let mut dat = create(&dir.join("rates.dat"))?;
        writeln!(dat, "# M error")?;
        for p in &fit.points {
            writeln!(dat, "{} {}", p.terms, p.error)?;
        }
        dat.flush()?;
    }
    println!(
        "regime {regime}: slope {:.4} predicted {:.4} compensated {:.4} R^2 {:.4} -> {}",
        fit.slope,
        fit.predicted_slope,
        fit.compensated_slope,
        fit.r_squared,
        if passed { "PASS" } else { "FAIL" }
    );
    write_json(&dir.join("rates.json"), &artifact("rates", &cfg, RatesResult { regime, passed, gate, fit }))?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct CheckConfig {
    suite: suites::Suite,
    seed: u64,
    trials: usize,
    oversample: usize,
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode> {
    let cfg = CheckConfig { suite: args.suite, seed: args.seed, trials: args.trials, oversample: args.oversample };
    let report = suites::run(args.suite, args.seed, args.trials, args.oversample)?;
    let text = serde_json::to_string_pretty(&artifact("check", &cfg, report)).map_err(|e| Error::Io(e.to_string()))?;
    if let Some(dir) = args.out.or_else(|| std::env::var_os(config::OUT_DIR_ENV).map(PathBuf::from)) {
        ensure_dir(&dir)?;
        let name = serde_json::to_value(args.suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        fs::write(dir.join(format!("check-{name}.json")), format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_testfn(args: TestfnArgs) -> Result<ExitCode> {
    let spectrum = match &args.kind {
        TestfnKind::Dirichlet { l, m } => dirichlet_cubic(*l, *m),
        TestfnKind::G1 { n, m } => g1(*n, *m)?,
        TestfnKind::F3 { n, p, r } => f3(*n, p.len(), p, *r)?,
        TestfnKind::RudinShapiro { n, m, r } => rudin_shapiro_product(*n, *m, *r)?,
        TestfnKind::Lacunary { p, theta, r, max_block, seed, shape, oversample } => {
            let base = LorentzExponents::new(p.clone(), theta.clone().unwrap_or_else(|| p.clone()))?;
            let params = BesovParams::new(base, *r, Tau::Infinite)?;
            lacunary_random(&params, *max_block, &SeededSampler::new(*seed), *shape, *oversample)?
        }
    };
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_spectrum_csv(&spectrum, &mut w)?;
            w.flush()?;
            #[derive(Serialize)]
            struct Summary {
                modes: usize,
                max_freq: Vec<u64>,
            }
            let summary = Summary { modes: spectrum.len(), max_freq: spectrum.max_freq() };
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".json");
            write_json(Path::new(&sidecar), &artifact("testfn", &args.kind, summary))?;
        }
        None => write_spectrum_csv(&spectrum, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Norm(a) => cmd_norm(a),
        Command::Approx(a) => cmd_approx(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Check(a) => cmd_check(a),
        Command::Testfn(a) => cmd_testfn(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
