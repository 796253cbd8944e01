//! Command-line front end: configuration, dispatch and CSV/JSON emission.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::angles::{alpha_from_theta_d1, ThetaTable};
use crate::circuit::{build_alpha_circuit, build_theta_circuit, export_circuit_text, export_native, fidelity, simulate};
use crate::digitization::{build_statevector, exact_theta_angles, DigitizationSpec, Statevector, DEFAULT_MAX_QUBITS};
use crate::digitization_error::digitization_deviation_report;
use crate::error::Error;
use crate::fixed_point::{
    convergence_sweep, fixed_point_angle_table_guarded, sweep_file_name, KMode, SweepMode,
};
use crate::lattice::{Boundary, LatticeSpec};
use crate::scalar::fmt17;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lattice correlation matrix K.
    KMatrix,
    /// Exact θ angles of the digitized ground state.
    AnglesExact,
    /// Fixed-point θ angles, stored per site.
    AnglesFixedPoint,
    /// State-preparation circuit as text.
    CircuitExport,
    /// Fidelity of the prepared state against the exact digitized state.
    FidelityCheck,
    /// Lattice-centre angle against lattice size.
    Convergence,
    /// Leading digitization deviation against register size.
    DigitizationError,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KModeArg {
    Finite,
    Infinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrepMode {
    Exact,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CircuitFormat {
    Qasm,
    Native,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(Debug, Parser)]
#[command(name = "fpqft", version, about = "Ground-state preparation circuits for a digitized free scalar field")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Field mass.
    #[arg(long, global = true)]
    m: Option<f64>,
    /// Qubits per site.
    #[arg(long, global = true)]
    nq: Option<usize>,
    /// Field bound φ_max.
    #[arg(long, global = true)]
    pmax: Option<f64>,
    /// Lattice sizes: `8`, `4,6,8` or the inclusive range `4..10`.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Band distance of K, or `none` for the dense matrix.
    #[arg(long, global = true)]
    d: Option<String>,
    #[arg(long, global = true, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long = "k-mode", global = true, value_enum)]
    k_mode: Option<KModeArg>,
    #[arg(long, global = true, value_enum)]
    mode: Option<PrepMode>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long = "circuit-format", global = true, value_enum)]
    circuit_format: Option<CircuitFormat>,
    /// Output file, or directory for `convergence`.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[arg(long = "max-qubits", global = true)]
    max_qubits: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Random states checked in addition to the ground state.
    #[arg(long = "random-trials", global = true)]
    random_trials: Option<usize>,
    /// Register sizes for `digitization-error`.
    #[arg(long = "nq-list", global = true)]
    nq_list: Option<String>,
    /// Flat `key=value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

/// Fully resolved run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub mass: f64,
    pub digit: DigitizationSpec<f64>,
    pub n_list: Vec<usize>,
    pub band: Option<usize>,
    pub boundary: Boundary,
    pub k_mode: KMode,
    pub mode: PrepMode,
    pub format: Format,
    pub circuit_format: CircuitFormat,
    pub output: Option<PathBuf>,
    pub max_qubits: usize,
    pub seed: u64,
    pub random_trials: usize,
    pub nq_list: Vec<usize>,
}

impl RunConfig {
    pub fn lattice(&self, n_sites: usize) -> crate::Result<LatticeSpec<f64>> {
        LatticeSpec::new(n_sites, self.mass, self.boundary, self.band)
    }

    fn single_n(&self) -> Result<usize, CliError> {
        match self.n_list.as_slice() {
            [n] => Ok(*n),
            _ => Err(CliError::Usage(format!("{} takes a single --n value", command_name(self.command)))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help or version text requested.
    #[error("{0}")]
    Info(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => EXIT_OK,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(Error::Resource(_)) => EXIT_RESOURCE,
            CliError::Run(_) => EXIT_DOMAIN,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::KMatrix => "k-matrix",
        Command::AnglesExact => "angles-exact",
        Command::AnglesFixedPoint => "angles-fixed-point",
        Command::CircuitExport => "circuit-export",
        Command::FidelityCheck => "fidelity-check",
        Command::Convergence => "convergence",
        Command::DigitizationError => "digitization-error",
    }
}

/// `8`, `4,6,8` or inclusive `4..10`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, CliError> {
    let text = text.trim();
    let int = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("`{s}` is not a non-negative integer")))
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = match hi.strip_prefix('=') {
            Some(h) => (int(lo)?, int(h)?),
            None => (int(lo)?, int(hi)?),
        };
        if lo > hi {
            return Err(usage(format!("empty range {text}")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(int).collect()
}

fn parse_band(text: &str) -> Result<Option<usize>, CliError> {
    match text.trim() {
        "none" | "full" => Ok(None),
        s => s
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("--d expects an integer or `none`, got `{s}`"))),
    }
}

fn parse_enum<E: ValueEnum>(key: &str, value: &str) -> Result<E, CliError> {
    E::from_str(value.trim(), true).map_err(|_| usage(format!("invalid value `{value}` for {key}")))
}

fn parse_num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value `{value}` for {key}")))
}

/// Flat `key=value` lines; `#` starts a comment. Keys match the long flag names.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", i + 1)))?;
        out.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn apply_config(args: &mut Args, entries: Vec<(String, String)>) -> Result<(), CliError> {
    for (key, value) in entries {
        let v = value.as_str();
        match key.as_str() {
            "m" => {
                args.m.get_or_insert(parse_num(&key, v)?);
            }
            "nq" => {
                args.nq.get_or_insert(parse_num(&key, v)?);
            }
            "pmax" => {
                args.pmax.get_or_insert(parse_num(&key, v)?);
            }
            "n" => {
                args.n.get_or_insert(value.clone());
            }
            "d" => {
                args.d.get_or_insert(value.clone());
            }
            "boundary" => {
                args.boundary.get_or_insert(parse_enum(&key, v)?);
            }
            "k-mode" => {
                args.k_mode.get_or_insert(parse_enum(&key, v)?);
            }
            "mode" => {
                args.mode.get_or_insert(parse_enum(&key, v)?);
            }
            "format" => {
                args.format.get_or_insert(parse_enum(&key, v)?);
            }
            "circuit-format" => {
                args.circuit_format.get_or_insert(parse_enum(&key, v)?);
            }
            "output" | "o" => {
                args.output.get_or_insert(PathBuf::from(v));
            }
            "max-qubits" => {
                args.max_qubits.get_or_insert(parse_num(&key, v)?);
            }
            "seed" => {
                args.seed.get_or_insert(parse_num(&key, v)?);
            }
            "random-trials" => {
                args.random_trials.get_or_insert(parse_num(&key, v)?);
            }
            "nq-list" => {
                args.nq_list.get_or_insert(value.clone());
            }
            _ => return Err(usage(format!("unknown config key `{key}`"))),
        }
    }
    Ok(())
}

/// Parse `argv` (program name first) and any `--config` file into a validated [`RunConfig`].
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let mut args = Args::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Info(e.to_string())
        }
        _ => CliError::Usage(e.to_string().lines().next().unwrap_or("invalid arguments").to_string()),
    })?;
    if let Some(path) = args.config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        apply_config(&mut args, parse_config_text(&text)?)?;
    }

    let mass = args.m.unwrap_or(0.3);
    let n_q = args.nq.unwrap_or(2);
    let phi_max = args.pmax.unwrap_or(3.5);
    let digit = DigitizationSpec::new(n_q, phi_max).map_err(|e| usage(e.to_string()))?;
    let default_n = if args.command == Command::Convergence { "4..10" } else { "4" };
    let n_list = parse_usize_list(args.n.as_deref().unwrap_or(default_n))?;
    let band = parse_band(args.d.as_deref().unwrap_or("1"))?;
    let config = RunConfig {
        command: args.command,
        mass,
        digit,
        n_list,
        band,
        boundary: match args.boundary.unwrap_or(BoundaryArg::Periodic) {
            BoundaryArg::Periodic => Boundary::Periodic,
            BoundaryArg::Open => Boundary::Open,
        },
        k_mode: match args.k_mode.unwrap_or(KModeArg::Finite) {
            KModeArg::Finite => KMode::FiniteN,
            KModeArg::Infinite => KMode::InfiniteVolume,
        },
        mode: args.mode.unwrap_or(PrepMode::Exact),
        format: args.format.unwrap_or(Format::Csv),
        circuit_format: args.circuit_format.unwrap_or(CircuitFormat::Qasm),
        output: args.output,
        max_qubits: args.max_qubits.unwrap_or(DEFAULT_MAX_QUBITS),
        seed: args.seed.unwrap_or(0),
        random_trials: args.random_trials.unwrap_or(0),
        nq_list: parse_usize_list(args.nq_list.as_deref().unwrap_or("2,3,4"))?,
    };
    if !(config.mass > 0.0 && config.mass.is_finite()) {
        return Err(usage(format!("--m must be positive, got {}", config.mass)));
    }
    for &n in &config.n_list {
        config.lattice(n).map_err(|e| usage(e.to_string()))?;
    }
    for &q in &config.nq_list {
        DigitizationSpec::new(q, phi_max).map_err(|e| usage(format!("--nq-list: {e}")))?;
    }
    Ok(config)
}

#[derive(Clone, Debug, PartialEq)]
enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Flag(bool),
}

/// Column-named records, rendered as CSV or a JSON array of objects.
#[derive(Clone, Debug, Default)]
struct Records {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Records {
    fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Int(v) => v.to_string(),
                            Cell::Real(v) => fmt17(*v),
                            Cell::Text(s) => s.clone(),
                            Cell::Flag(b) => b.to_string(),
                        })
                        .collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let array: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let record = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(k, c)| {
                                let v = match c {
                                    Cell::Int(v) => serde_json::Value::from(*v),
                                    Cell::Real(v) => serde_json::Value::from(*v),
                                    Cell::Text(s) => serde_json::Value::from(s.as_str()),
                                    Cell::Flag(b) => serde_json::Value::from(*b),
                                };
                                (k.clone(), v)
                            })
                            .collect::<serde_json::Map<_, _>>();
                        serde_json::Value::Object(record)
                    })
                    .collect();
                let mut out = serde_json::to_string_pretty(&array).expect("records serialize");
                out.push('\n');
                out
            }
        }
    }
}

fn k_matrix_records(config: &RunConfig) -> Result<Records, CliError> {
    let n = config.single_n()?;
    let k = config.lattice(n)?.correlation_matrix()?;
    let mut rec = Records::new((0..n).map(|j| format!("k{j}")));
    for i in 0..n {
        rec.push((0..n).map(|j| Cell::Real(k.get(i, j))).collect());
    }
    Ok(rec)
}

fn theta_records(table: &ThetaTable<f64>) -> Records {
    let mut rec = Records::new(["ell", "k", "angle_radians"]);
    for ell in 0..table_n_qubits(table) {
        for (k, a) in table.level(ell).iter().enumerate() {
            rec.push(vec![Cell::Int(ell as u64), Cell::Int(k as u64), Cell::Real(*a)]);
        }
    }
    rec
}

fn table_n_qubits(table: &ThetaTable<f64>) -> usize {
    use crate::angles::ThetaAngles;
    table.n_qubits()
}

fn exact_state(config: &RunConfig, n: usize) -> Result<Statevector<f64>, CliError> {
    let k = config.lattice(n)?.preparation_matrix()?;
    Ok(build_statevector(&k, &config.digit, config.max_qubits)?)
}

fn fixed_point_records(config: &RunConfig) -> Result<Records, CliError> {
    let n = config.single_n()?;
    let table = fixed_point_angle_table_guarded(&config.lattice(n)?, &config.digit, config.k_mode, config.max_qubits)?;
    let mut rec = Records::new(["site", "ell", "local_k", "angle_radians"]);
    let n_q = table.n_q();
    for x in 0..table.n_sites() {
        let site = table.site(x);
        for p in 0..n_q {
            for (local, a) in site.level(p).iter().enumerate() {
                rec.push(vec![
                    Cell::Int(x as u64),
                    Cell::Int((x * n_q + p) as u64),
                    Cell::Int(local as u64),
                    Cell::Real(*a),
                ]);
            }
        }
    }
    Ok(rec)
}

fn prepared_circuit(config: &RunConfig, n: usize) -> Result<crate::circuit::Circuit<f64>, CliError> {
    let n_qubits = n * config.digit.n_q();
    match config.mode {
        PrepMode::Exact => {
            let table = exact_theta_angles(&exact_state(config, n)?);
            Ok(build_theta_circuit(&table, n_qubits)?)
        }
        PrepMode::FixedPoint => {
            let spec = config.lattice(n)?;
            let table = fixed_point_angle_table_guarded(&spec, &config.digit, config.k_mode, config.max_qubits)?;
            if table.reach() == 1 {
                let alpha = alpha_from_theta_d1(&table)?;
                Ok(build_alpha_circuit(&alpha, n_qubits, config.digit.n_q(), 1)?)
            } else {
                Ok(build_theta_circuit(&table, n_qubits)?.without_identity_gates())
            }
        }
    }
}

fn random_nonnegative_state(n_qubits: usize, rng: &mut ChaCha8Rng, max_qubits: usize) -> crate::Result<Statevector<f64>> {
    crate::digitization::check_guard(n_qubits, max_qubits)?;
    let amps = (0..1usize << n_qubits).map(|_| rng.gen::<f64>()).collect();
    Statevector::from_amplitudes(amps)?.normalized()
}

fn fidelity_records(config: &RunConfig) -> Result<Records, CliError> {
    let n = config.single_n()?;
    let target = exact_state(config, n)?;
    let prepared = simulate(&prepared_circuit(config, n)?, config.max_qubits)?;
    let mut rec = Records::new(["case", "n_qubits", "fidelity"]);
    rec.push(vec![
        Cell::Text("ground_state".into()),
        Cell::Int(target.n_qubits() as u64),
        Cell::Real(fidelity(&target, &prepared)?),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for trial in 0..config.random_trials {
        let state = random_nonnegative_state(target.n_qubits(), &mut rng, config.max_qubits)?;
        let circuit = build_theta_circuit(&exact_theta_angles(&state), state.n_qubits())?;
        let f = fidelity(&state, &simulate(&circuit, config.max_qubits)?)?;
        rec.push(vec![
            Cell::Text(format!("random_{trial}")),
            Cell::Int(state.n_qubits() as u64),
            Cell::Real(f),
        ]);
    }
    Ok(rec)
}

fn convergence_records(config: &RunConfig) -> Result<Records, CliError> {
    let rows = convergence_sweep(config.mass, &config.digit, &config.n_list, &SweepMode::ALL, config.max_qubits)?;
    let mut rec = Records::new(["N", "mode", "angle_radians"]);
    for r in rows {
        rec.push(vec![Cell::Int(r.n_sites as u64), Cell::Text(r.mode.name().into()), Cell::Real(r.angle)]);
    }
    Ok(rec)
}

fn digitization_records(config: &RunConfig) -> Result<Records, CliError> {
    let rows = digitization_deviation_report(config.mass, config.digit.phi_max(), &config.nq_list)?;
    let mut rec = Records::new([
        "nQ",
        "delta_phi",
        "exponent",
        "deviation",
        "truncation_tail",
        "spacing_dominated",
    ]);
    for r in rows {
        rec.push(vec![
            Cell::Int(r.n_q as u64),
            Cell::Real(r.delta_phi),
            Cell::Real(r.exponent),
            Cell::Real(r.deviation),
            Cell::Real(r.truncation_tail),
            Cell::Flag(r.spacing_dominated),
        ]);
    }
    Ok(rec)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Run(Error::Io(e)))
}

/// Execute a run. Results go to `-o` when given, otherwise to `stdout`;
/// `convergence` always writes a file and reports its path.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let emit = |text: String, stdout: &mut dyn Write| -> Result<(), CliError> {
        match &config.output {
            Some(path) => write_file(path, &text),
            None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Run(Error::Io(e))),
        }
    };
    match config.command {
        Command::KMatrix => emit(k_matrix_records(config)?.render(config.format), stdout),
        Command::AnglesExact => {
            let n = config.single_n()?;
            let table = exact_theta_angles(&exact_state(config, n)?);
            emit(theta_records(&table).render(config.format), stdout)
        }
        Command::AnglesFixedPoint => emit(fixed_point_records(config)?.render(config.format), stdout),
        Command::CircuitExport => {
            let n = config.single_n()?;
            let circuit = prepared_circuit(config, n)?;
            let text = match config.circuit_format {
                CircuitFormat::Qasm => export_circuit_text(&circuit),
                CircuitFormat::Native => export_native(&circuit),
            };
            emit(text, stdout)
        }
        Command::FidelityCheck => emit(fidelity_records(config)?.render(config.format), stdout),
        Command::DigitizationError => emit(digitization_records(config)?.render(config.format), stdout),
        Command::Convergence => {
            let text = convergence_records(config)?.render(config.format);
            let mut name = sweep_file_name(config.mass, config.digit.n_q(), config.digit.phi_max());
            if config.format == Format::Json {
                name = name.replace(".csv", ".json");
            }
            let path = match &config.output {
                Some(p) if p.is_dir() => p.join(name),
                Some(p) => p.clone(),
                None => PathBuf::from(name),
            };
            write_file(&path, &text)?;
            writeln!(stdout, "{}", path.display()).map_err(|e| CliError::Run(Error::Io(e)))
        }
    }
}

/// Parse, run and map the outcome to an exit code, printing a one-line diagnostic on failure.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let outcome = parse_config(argv).and_then(|config| run(&config, &mut stdout.lock()));
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Info(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("fpqft: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
