//! Command-line front end: one subcommand per operation, JSON configuration in,
//! JSON or CSV out.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use specedge::edge::{
    edge_constants, find_critical_point, level_set_grid, tau, tau_optimized, tau_q, EdgeModel, EdgeModelSpec,
    LevelClass, ModelKind, Region,
};
use specedge::observables::{
    airy_laplace, airy_recursion_check, moment_additive, moment_tensor, MomentModel, MomentRequest,
};
use specedge::simulate::{edge_experiment, ExperimentConfig};
use specedge::subordination::{
    free_convolve_n, free_convolve_power, markov_krein_forward_detailed, markov_krein_inverse_detailed,
    quantized_convolve,
};
use specedge::symfn::{
    ssym_lift_contour_k1, ssym_lift_det_normalized, ssym_lift_matrix_form, ssym_lift_schur, ssym_lift_zero, LiftArgs,
};
use specedge::{Measure, MeasureSpec, Signature, SpecError, Spectrum, C64};

pub mod format;
pub mod verify;

use format::{complex_pair, round_json, sig9};

pub const SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{0} check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(e) if !e.is_validation() => 3,
            CliError::Write { .. } | CliError::VerifyFailed(_) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "specedge",
    version,
    about = "Edge asymptotics laboratory for random matrices and tensor products"
)]
pub struct Cli {
    /// Directory for output files and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to SPECEDGE_THREADS or the number of cores.
    #[arg(long, global = true, env = "SPECEDGE_THREADS")]
    pub threads: Option<usize>,
    /// Random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cauchy transform, its derivative and its inverse.
    Transform(TransformArgs),
    /// Free additive convolution of measures or a convolution power.
    Convolve(ConvolveArgs),
    /// Quantized free convolution of two measures with density at most one.
    QuantizedConvolve(PairArgs),
    /// Markov–Krein transform or its inverse.
    Mk(MkArgs),
    /// Critical point and edge constants of a model.
    Edge(EdgeArgs),
    /// Summand threshold for a square-root edge of convolution powers.
    Tau(TauArgs),
    /// Summand threshold for quantized convolution powers.
    Tauq(MeasureArg),
    /// Level-set classification of the steepest-descent action on a grid.
    Levelset(LevelsetArgs),
    /// Supersymmetric lift of a Bessel or Schur function.
    Lift(LiftCmdArgs),
    /// Contour-integral moment of a random spectrum.
    Moment(MomentArgs),
    /// Laplace transform of the Airy point process correlation functions.
    Airy(AiryArgs),
    /// Monte Carlo edge experiment with a GUE baseline.
    Simulate(SimulateArgs),
    /// Run the identity and oracle suite.
    Verify,
}

#[derive(Debug, Args)]
pub struct MeasureArg {
    /// Measure JSON file.
    #[arg(long)]
    pub measure: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub measure: PathBuf,
    /// Point in the upper half-plane, e.g. `3+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Real argument in `(0, G(E+))` to invert.
    #[arg(long)]
    pub inverse: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConvolveArgs {
    /// Measure JSON files, convolved left to right.
    #[arg(long, required = true)]
    pub measure: Vec<PathBuf>,
    /// Convolution power of a single measure.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long, num_args = 2, required = true)]
    pub measure: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MkArgs {
    #[arg(long)]
    pub measure: PathBuf,
    /// Apply the inverse transform.
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Args)]
pub struct EdgeArgs {
    /// Model JSON, or a single measure JSON combined with `--n`.
    #[arg(long)]
    pub model: PathBuf,
    /// Number of summands when the model file holds one measure.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "N")]
    pub size: Option<usize>,
    /// Treat a single measure as a quantized (tensor-product) model.
    #[arg(long)]
    pub quantized: bool,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[arg(long)]
    pub measure: PathBuf,
    /// Use the optimized threshold.
    #[arg(long)]
    pub optimized: bool,
}

#[derive(Debug, Args)]
pub struct LevelsetArgs {
    #[arg(long)]
    pub measure: PathBuf,
    /// Value `u` of the Cauchy transform, e.g. `0.3` or `0.3+0.1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    /// `re_min,re_max,im_min,im_max`.
    #[arg(long, allow_hyphen_values = true)]
    pub region: String,
    /// `nx,ny`.
    #[arg(long, default_value = "161,121")]
    pub resolution: String,
}

#[derive(Debug, Args)]
pub struct LiftCmdArgs {
    /// Particles `ℓ` (Bessel lift).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "signature")]
    pub spectrum: Option<String>,
    /// Signature `λ` (Schur lift).
    #[arg(long, allow_hyphen_values = true)]
    pub signature: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub p: String,
    /// Comma-separated complex `u` arguments.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    /// Comma-separated complex `v` arguments.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    pub v: String,
    /// Base point `ξ` for the matrix method; zero by default.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// det, zero, matrix or contour.
    #[arg(long, default_value = "zero")]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    /// Moment request JSON.
    #[arg(long, conflicts_with = "spectrum")]
    pub model: Option<PathBuf>,
    /// Deterministic particles.
    #[arg(long, allow_hyphen_values = true)]
    pub spectrum: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
}

#[derive(Debug, Args)]
pub struct AiryArgs {
    #[arg(long)]
    pub c: String,
    /// Report the two-point recursion check instead.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment JSON, or a model JSON.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long = "N")]
    pub size: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_s: f64,
}

/// What a subcommand produced: the printed text and files for `--out`.
struct Output {
    stdout: String,
    files: Vec<(String, String)>,
    config: Option<PathBuf>,
    failures: usize,
}

impl Output {
    fn json(value: Value) -> Self {
        let mut v = value;
        if let Value::Object(map) = &mut v {
            map.insert("schema".into(), json!(SCHEMA));
        }
        let text = serde_json::to_string(&round_json(v)).expect("JSON values serialize");
        Output {
            stdout: text,
            files: Vec::new(),
            config: None,
            failures: 0,
        }
    }

    fn text(text: String) -> Self {
        Output {
            stdout: text,
            files: Vec::new(),
            config: None,
            failures: 0,
        }
    }

    fn with_file(mut self, name: &str, content: String) -> Self {
        self.files.push((name.to_string(), content));
        self
    }

    fn with_config(mut self, path: &Path) -> Self {
        self.config = Some(path.to_path_buf());
        self
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })
}

fn read_measure(path: &Path) -> CliResult<Measure> {
    let spec: MeasureSpec = read_json(path)?;
    Ok(Measure::from_spec(&spec)?)
}

fn parse_complex(s: &str) -> CliResult<C64> {
    let t = s.trim();
    t.parse::<C64>()
        .map_err(|_| CliError::Usage(format!("cannot parse complex number '{t}'")))
}

fn parse_complex_list(s: &str) -> CliResult<Vec<C64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_complex).collect()
}

fn parse_reals(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("cannot parse number '{t}'")))
        })
        .collect()
}

fn parse_ints(s: &str) -> CliResult<Vec<i64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Usage(format!("cannot parse integer '{t}'")))
        })
        .collect()
}

fn transform(a: &TransformArgs) -> CliResult<Output> {
    let m = read_measure(&a.measure)?;
    let mut out = serde_json::Map::new();
    if let Some(z) = &a.z {
        let z = parse_complex(z)?;
        let (g, dg) = m.cauchy_pair(z)?;
        out.insert("z".into(), complex_pair(z));
        out.insert("G".into(), complex_pair(g));
        out.insert("dG".into(), complex_pair(dg));
    }
    if let Some(u) = a.inverse {
        let z = m.inverse_cauchy(C64::new(u, 0.0))?;
        out.insert("u".into(), json!(u));
        out.insert("inverse".into(), complex_pair(z));
    }
    if out.is_empty() {
        return Err(CliError::Usage("give --z and/or --inverse".into()));
    }
    Ok(Output::json(Value::Object(out)).with_config(&a.measure))
}

fn convolve(a: &ConvolveArgs) -> CliResult<Output> {
    let measures = a
        .measure
        .iter()
        .map(|p| read_measure(p))
        .collect::<CliResult<Vec<_>>>()?;
    let result = match (a.n, measures.len()) {
        (Some(n), 1) => free_convolve_power(&measures[0], n)?,
        (Some(_), _) => return Err(CliError::Usage("--n needs exactly one --measure".into())),
        (None, _) => free_convolve_n(&measures)?,
    };
    Ok(Output::json(result.to_json())
        .with_file("density.csv", result.to_csv())
        .with_config(&a.measure[0]))
}

fn quantized(a: &PairArgs) -> CliResult<Output> {
    let m1 = read_measure(&a.measure[0])?;
    let m2 = read_measure(&a.measure[1])?;
    let result = quantized_convolve(&m1, &m2)?;
    Ok(Output::json(result.to_json())
        .with_file("density.csv", result.to_csv())
        .with_config(&a.measure[0]))
}

fn mk(a: &MkArgs) -> CliResult<Output> {
    let m = read_measure(&a.measure)?;
    let result = if a.inverse {
        markov_krein_inverse_detailed(&m)?
    } else {
        markov_krein_forward_detailed(&m)?
    };
    Ok(Output::json(result.to_json())
        .with_file("density.csv", result.to_csv())
        .with_config(&a.measure))
}

fn read_model(path: &Path, n: Option<usize>, size: Option<usize>, quantized: bool) -> CliResult<EdgeModel> {
    let value: Value = read_json(path)?;
    let mut spec: EdgeModelSpec = if value.get("measures").is_some() {
        serde_json::from_value(value).map_err(|source| CliError::Json {
            path: path.into(),
            source,
        })?
    } else {
        let measure: MeasureSpec = serde_json::from_value(value).map_err(|source| CliError::Json {
            path: path.into(),
            source,
        })?;
        let kind = if quantized {
            ModelKind::Quantized
        } else {
            ModelKind::Additive
        };
        EdgeModelSpec {
            measures: vec![measure],
            multiplicities: vec![n.unwrap_or(1)],
            kind,
            size: 100,
        }
    };
    if let Some(n) = n {
        if spec.multiplicities.len() != 1 {
            return Err(CliError::Usage("--n applies to single-measure models".into()));
        }
        spec.multiplicities[0] = n;
    }
    if let Some(size) = size {
        spec.size = size;
    }
    Ok(EdgeModel::from_spec(&spec)?)
}

fn edge(a: &EdgeArgs) -> CliResult<Output> {
    let model = read_model(&a.model, a.n, a.size, a.quantized)?;
    let report = find_critical_point(&model);
    let mut value = serde_json::to_value(&report).expect("report serializes");
    if let Ok((_, v)) = edge_constants(&report) {
        value["V"] = json!(v);
    }
    Ok(Output::json(value).with_config(&a.model))
}

fn tau_cmd(a: &TauArgs) -> CliResult<Output> {
    let m = read_measure(&a.measure)?;
    let t = if a.optimized { tau_optimized(&m)? } else { tau(&m)? };
    Ok(Output::text(sig9(t)).with_config(&a.measure))
}

fn tauq_cmd(a: &MeasureArg) -> CliResult<Output> {
    let m = read_measure(&a.measure)?;
    Ok(Output::text(sig9(tau_q(&m)?)).with_config(&a.measure))
}

fn levelset(a: &LevelsetArgs) -> CliResult<Output> {
    let m = read_measure(&a.measure)?;
    let u = parse_complex(&a.u)?;
    let r = parse_reals(&a.region)?;
    let res = parse_ints(&a.resolution)?;
    if r.len() != 4 || res.len() != 2 || res.iter().any(|x| *x < 2) {
        return Err(CliError::Usage(
            "--region needs four numbers and --resolution two integers ≥ 2".into(),
        ));
    }
    let region = Region {
        re_min: r[0],
        re_max: r[1],
        im_min: r[2],
        im_max: r[3],
    };
    let grid = level_set_grid(&m, u, region, (res[0] as usize, res[1] as usize))?;
    let summary = json!({
        "saddle": complex_pair(grid.saddle),
        "components": {
            "minus": grid.components(LevelClass::Minus),
            "plus": grid.components(LevelClass::Plus),
        },
    });
    Ok(Output::json(summary)
        .with_file("levelset.csv", grid.to_csv())
        .with_config(&a.measure))
}

fn lift(a: &LiftCmdArgs) -> CliResult<Output> {
    let p = parse_complex(&a.p)?;
    let u = parse_complex_list(&a.u)?;
    let v = parse_complex_list(&a.v)?;
    let value = if let Some(sig) = &a.signature {
        let lambda = Signature::new(parse_ints(sig)?)?;
        ssym_lift_schur(&lambda, p, &u, &v)?
    } else {
        let l = parse_reals(
            a.spectrum
                .as_deref()
                .ok_or_else(|| CliError::Usage("give --spectrum or --signature".into()))?,
        )?;
        match a.method.as_str() {
            "det" => {
                let mut full = u.clone();
                full.extend(std::iter::repeat_n(C64::new(0.0, 0.0), l.len()));
                ssym_lift_det_normalized(&l, &LiftArgs::new(p, full, v))?
            }
            "zero" => ssym_lift_zero(&l, p, &u, &v)?,
            "matrix" => {
                let xi = match &a.xi {
                    Some(x) => parse_complex_list(x)?,
                    None => vec![C64::new(0.0, 0.0); l.len()],
                };
                ssym_lift_matrix_form(&l, p, &u, &v, &xi)?
            }
            "contour" => {
                if u.len() != 1 || v.len() != 1 {
                    return Err(CliError::Usage("the contour method takes one u and one v".into()));
                }
                ssym_lift_contour_k1(&l, p, u[0], v[0])?
            }
            other => return Err(CliError::Usage(format!("unknown method '{other}'"))),
        }
    };
    Ok(Output::json(json!({ "value": complex_pair(value) })))
}

fn moment(a: &MomentArgs) -> CliResult<Output> {
    let (req, config) = match (&a.model, &a.spectrum) {
        (Some(path), _) => {
            let mut req: MomentRequest = read_json(path)?;
            if let Some(c) = &a.c {
                req.c = parse_reals(c)?;
            }
            (req, Some(path.clone()))
        }
        (None, Some(s)) => {
            let c =
                a.c.as_deref()
                    .ok_or_else(|| CliError::Usage("--c is required".into()))?;
            let spectrum = Spectrum::new(parse_reals(s)?)?;
            (
                MomentRequest::new(MomentModel::Deterministic { spectrum }, parse_reals(c)?),
                None,
            )
        }
        (None, None) => return Err(CliError::Usage("give --model or --spectrum".into())),
    };
    let result = match req.model {
        MomentModel::Tensor { .. } => moment_tensor(&req)?,
        _ => moment_additive(&req)?,
    };
    let out = Output::json(json!({ "moment": complex_pair(result.moment), "nodes_used": result.nodes_used }));
    Ok(match config {
        Some(p) => out.with_config(&p),
        None => out,
    })
}

fn airy(a: &AiryArgs) -> CliResult<Output> {
    let c = parse_reals(&a.c)?;
    if a.check {
        if c.len() != 2 {
            return Err(CliError::Usage("--check takes two values of c".into()));
        }
        let r = airy_recursion_check(c[0], c[1])?;
        return Ok(Output::json(serde_json::to_value(r).expect("serializes")));
    }
    Ok(Output::text(sig9(airy_laplace(&c)?)))
}

fn simulate(a: &SimulateArgs, seed: Option<u64>) -> CliResult<Output> {
    let value: Value = read_json(&a.model)?;
    let mut cfg: ExperimentConfig = if value.get("trials").is_some() {
        serde_json::from_value(value).map_err(|source| CliError::Json {
            path: a.model.clone(),
            source,
        })?
    } else {
        let model = read_model(&a.model, a.n, a.size, false)?;
        ExperimentConfig {
            model: model.to_spec(),
            trials: 100,
            seed: 0,
            top_k: 10,
            c_probes: vec![1.0],
        }
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(size) = a.size {
        cfg.model.size = size;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(c) = &a.c {
        cfg.c_probes = parse_reals(c)?;
    }
    let result = edge_experiment(&cfg)?;
    let top: String = std::iter::once("trial,rank,value\n".to_string())
        .chain(result.rescaled.iter().enumerate().flat_map(|(t, row)| {
            row.iter()
                .enumerate()
                .map(move |(k, x)| format!("{t},{k},{}\n", sig9(*x)))
        }))
        .collect();
    Ok(Output::json(serde_json::to_value(&result.summary).expect("serializes"))
        .with_file("histogram.csv", result.histogram_csv(40))
        .with_file("rescaled.csv", top)
        .with_config(&a.model))
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Transform(a) => transform(a),
        Command::Convolve(a) => convolve(a),
        Command::QuantizedConvolve(a) => quantized(a),
        Command::Mk(a) => mk(a),
        Command::Edge(a) => edge(a),
        Command::Tau(a) => tau_cmd(a),
        Command::Tauq(a) => tauq_cmd(a),
        Command::Levelset(a) => levelset(a),
        Command::Lift(a) => lift(a),
        Command::Moment(a) => moment(a),
        Command::Airy(a) => airy(a),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Verify => {
            let (table, failures) = verify::run_suite();
            Ok(Output {
                failures,
                ..Output::text(table)
            })
        }
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Transform(_) => "transform",
        Command::Convolve(_) => "convolve",
        Command::QuantizedConvolve(_) => "quantized-convolve",
        Command::Mk(_) => "mk",
        Command::Edge(_) => "edge",
        Command::Tau(_) => "tau",
        Command::Tauq(_) => "tauq",
        Command::Levelset(_) => "levelset",
        Command::Lift(_) => "lift",
        Command::Moment(_) => "moment",
        Command::Airy(_) => "airy",
        Command::Simulate(_) => "simulate",
        Command::Verify => "verify",
    }
}

fn write_outputs(cli: &Cli, output: &Output, elapsed: f64) -> CliResult<()> {
    let Some(dir) = &cli.out else { return Ok(()) };
    let io = |path: PathBuf| {
        move |source| CliError::Write {
            path: path.clone(),
            source,
        }
    };
    std::fs::create_dir_all(dir).map_err(io(dir.clone()))?;
    for (name, content) in &output.files {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(io(path.clone()))?;
    }
    let stdout_name = if output.stdout.starts_with('{') {
        "result.json"
    } else {
        "result.txt"
    };
    let path = dir.join(stdout_name);
    std::fs::write(&path, format!("{}\n", output.stdout)).map_err(io(path.clone()))?;
    let manifest = RunManifest {
        schema: SCHEMA,
        subcommand: subcommand_name(&cli.command).into(),
        config: output.config.clone(),
        out: Some(dir.clone()),
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: elapsed,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(io(path.clone()))
}

fn timed(cli: &Cli) -> (CliResult<Output>, f64) {
    let start = Instant::now();
    let result = dispatch(cli);
    (result, start.elapsed().as_secs_f64())
}

fn report(cli: &Cli, result: CliResult<Output>, elapsed: f64, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match result {
        Ok(output) => {
            let _ = writeln!(stdout, "{}", output.stdout);
            let status = write_outputs(cli, &output, elapsed).and(match output.failures {
                0 => Ok(()),
                n => Err(CliError::VerifyFailed(n)),
            });
            match status {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let (result, elapsed) = match cli.threads {
        Some(0) => {
            let _ = writeln!(stderr, "error: --threads must be positive");
            return 2;
        }
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| timed(&cli)),
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot start thread pool: {e}");
                return 3;
            }
        },
        None => timed(&cli),
    };
    report(&cli, result, elapsed, stdout, stderr)
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
