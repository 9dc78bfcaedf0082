//! `demguard` command-line front end.
//!
//! [`run`] maps a subcommand onto one library call and returns a stable
//! exit code (see the `EXIT_*` constants). Results go to stdout as
//! `key=value` lines; diagnostics go to stderr.

pub mod formats;
pub mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use demguard_core::attacks::{self, AttackKind};
use demguard_core::channels::{self, CurveMode};
use demguard_core::keyrates::{self, ErrorBound, ProofModel, RateInputs};
use demguard_core::{mathcore, oracle};

pub use formats::RegionRow;
pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 5;

pub const DEFAULT_GRID: &str = "0.005:0.25:0.005";
/// Measurement-angle grid of the discrimination check.
const DISCRIMINATION_GRID_POINTS: usize = 1000;
const VACUUM_TOL: f64 = 1e-10;
const VIOLATION_MIN: f64 = 1e-3;
const DISCRIMINATION_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Core(#[from] demguard_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Parse { .. } => EXIT_USAGE,
            Self::Core(demguard_core::Error::Shape(_)) => EXIT_USAGE,
            Self::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            Self::Core(_) => EXIT_DOMAIN,
            Self::Verification(_) => EXIT_NUMERICAL,
            Self::Io { .. } => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "demguard", version, about = "Key-rate bounds and attacks for BB84 with detector efficiency mismatch")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Secure key rate lower bound.
    Rate(RateArgs),
    /// Rate and Eve's information under an explicit attack.
    Attack(AttackArgs),
    /// Boundary between secure and insecure mismatch for an attack or a proof.
    Boundary(BoundaryArgs),
    /// Emit every boundary curve on a QBER grid as CSV.
    Region(RegionArgs),
    /// Mismatch parameter eta from an efficiency CSV or a block-model JSON.
    Eta(EtaArgs),
    /// Monte Carlo simulation of an attack.
    Simulate(SimulateArgs),
    /// Numerical self-checks of the security argument.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RateModel {
    Simplified,
    SinglePhoton,
    Decoy,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value = "simplified")]
    pub model: RateModel,
    #[arg(long, required_unless_present = "e_z")]
    pub qber: Option<f64>,
    #[arg(long, required_unless_present = "eta_z")]
    pub eta: Option<f64>,
    /// Use the tight error bound instead of e/eta.
    #[arg(long)]
    pub tight: bool,
    #[arg(long)]
    pub e_z: Option<f64>,
    #[arg(long)]
    pub e_x: Option<f64>,
    #[arg(long)]
    pub q_z: Option<f64>,
    #[arg(long)]
    pub q_x: Option<f64>,
    #[arg(long)]
    pub q1_z: Option<f64>,
    #[arg(long)]
    pub q1_x: Option<f64>,
    #[arg(long)]
    pub e1_z: Option<f64>,
    #[arg(long)]
    pub e1_x: Option<f64>,
    #[arg(long)]
    pub eta_z: Option<f64>,
    #[arg(long)]
    pub eta_x: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AttackName {
    Combined,
    Improved,
    PureFakedStates,
}

impl From<AttackName> for AttackKind {
    fn from(a: AttackName) -> Self {
        match a {
            AttackName::Combined => AttackKind::Combined,
            AttackName::Improved => AttackKind::Improved,
            AttackName::PureFakedStates => AttackKind::PureFakedStates,
        }
    }
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, alias = "attack", value_enum)]
    pub kind: AttackName,
    #[arg(long)]
    pub qber: f64,
    #[arg(long)]
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryAttack {
    Combined,
    Improved,
    PureFakedStates,
    /// Mismatch where the combined and improved curves cross.
    Crossover,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryModel {
    General,
    SinglePhoton,
}

impl From<BoundaryModel> for ProofModel {
    fn from(m: BoundaryModel) -> Self {
        match m {
            BoundaryModel::General => ProofModel::General,
            BoundaryModel::SinglePhoton => ProofModel::SinglePhotonEve,
        }
    }
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long, value_enum, conflicts_with = "model", required_unless_present = "model")]
    pub attack: Option<BoundaryAttack>,
    #[arg(long, value_enum)]
    pub model: Option<BoundaryModel>,
    /// Solve for eta at this QBER.
    #[arg(long, conflicts_with = "eta")]
    pub qber: Option<f64>,
    /// Solve for the QBER at this eta.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// QBER grid as `lo:hi:step`.
    #[arg(long, default_value = DEFAULT_GRID)]
    pub grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EtaMode {
    BasisIndependent,
    General,
    /// Certified bound from measured efficiencies and a coupling bound `--delta`.
    Measured,
}

#[derive(Debug, Args)]
pub struct EtaArgs {
    /// Efficiency CSV, or block-model JSON when the extension is `.json`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "general")]
    pub mode: EtaMode,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Cross-check a block model by random search with this many samples.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimAttack {
    FakedStates,
    TimeShift,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub attack: SimAttack,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VerifyModel {
    VacuumUnitary,
    VacuumLoss,
    VacuumViolating,
    Discrimination,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub model: VerifyModel,
    /// Number of random states.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub cutoff: usize,
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let words: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    match execute(&cli.command, &words) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("demguard: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command and returns its report.
pub fn execute(command: &Command, argv: &[String]) -> Result<String, CliError> {
    match command {
        Command::Rate(a) => rate(a),
        Command::Attack(a) => attack(a),
        Command::Boundary(a) => boundary(a),
        Command::Region(a) => region(a, argv),
        Command::Eta(a) => eta(a),
        Command::Simulate(a) => simulate(a, argv),
        Command::Verify(a) => verify(a),
    }
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn rate(a: &RateArgs) -> Result<String, CliError> {
    let mut out = String::new();
    match a.model {
        RateModel::Simplified => {
            let r = keyrates::simplified_rate(need(a.qber, "qber")?, need(a.eta, "eta")?)?;
            writeln!(out, "R={r}").unwrap();
        }
        RateModel::SinglePhoton => {
            let r = keyrates::single_photon_eve_rate(need(a.qber, "qber")?, need(a.eta, "eta")?)?;
            writeln!(out, "R={r}").unwrap();
        }
        RateModel::Decoy => {
            let e_z = a.e_z.or(a.qber);
            let e_z = need(e_z, "e-z")?;
            let e_x = a.e_x.unwrap_or(e_z);
            let eta_z = need(a.eta_z.or(a.eta), "eta-z")?;
            let eta_x = a.eta_x.unwrap_or(eta_z);
            let inputs = RateInputs {
                e_z,
                e_x,
                q_z: a.q_z.unwrap_or(1.0),
                q_x: a.q_x.unwrap_or(1.0),
                q1_z: a.q1_z.unwrap_or(1.0),
                q1_x: a.q1_x.unwrap_or(1.0),
                e1_z: a.e1_z.unwrap_or(e_z),
                e1_x: a.e1_x.unwrap_or(e_x),
                eta_z,
                eta_x,
            };
            let bound = if a.tight { ErrorBound::Tight } else { ErrorBound::Loose };
            let report = keyrates::secure_rate_with(&inputs, bound)?;
            for w in &report.warnings {
                eprintln!("demguard: warning: {w}");
            }
            writeln!(out, "R_z={}", report.rate_z).unwrap();
            writeln!(out, "R_x={}", report.rate_x).unwrap();
            writeln!(out, "e_star_x={}", report.e_star_x).unwrap();
            writeln!(out, "e_star_z={}", report.e_star_z).unwrap();
        }
    }
    Ok(out)
}

fn attack(a: &AttackArgs) -> Result<String, CliError> {
    let report = match a.kind {
        AttackName::Combined => attacks::combined_attack(a.eta, a.qber)?,
        AttackName::Improved => attacks::improved_attack_rate(a.eta, a.qber)?,
        AttackName::PureFakedStates => {
            let e_fs = attacks::faked_states_qber(a.eta)?;
            if (a.qber - e_fs).abs() > 1e-9 {
                return Err(demguard_core::Error::Infeasible(format!(
                    "pure faked states at eta = {} give QBER {e_fs}, not {}",
                    a.eta, a.qber
                ))
                .into());
            }
            attacks::combined_attack(a.eta, e_fs)?
        }
    };
    let mut out = String::new();
    writeln!(out, "attack={}", AttackKind::from(a.kind).name()).unwrap();
    writeln!(out, "R={}", report.rate).unwrap();
    writeln!(out, "I_AB={}", report.mutual_ab).unwrap();
    writeln!(out, "I_AE={}", report.mutual_ae).unwrap();
    writeln!(out, "attacked_fraction={}", report.attacked_fraction).unwrap();
    if let Some(p) = report.success_prob {
        writeln!(out, "success_prob={p}").unwrap();
    }
    Ok(out)
}

fn boundary(a: &BoundaryArgs) -> Result<String, CliError> {
    let mut out = String::new();
    if let Some(BoundaryAttack::Crossover) = a.attack {
        let eta = attacks::attack_crossover()?;
        let qber = attacks::attack_boundary_qber(AttackKind::Combined, eta)?;
        writeln!(out, "eta*={eta}").unwrap();
        writeln!(out, "qber*={qber}").unwrap();
        return Ok(out);
    }
    let solve = |qber: Option<f64>, eta: Option<f64>| -> Result<String, CliError> {
        match (qber, eta) {
            (Some(q), None) => {
                let eta = match (a.attack, a.model) {
                    (Some(k), _) => attacks::attack_boundary(attack_kind(k), q)?,
                    (None, Some(m)) => keyrates::proof_boundary(m.into(), q)?,
                    _ => unreachable!("clap requires --attack or --model"),
                };
                Ok(format!("eta*={eta}\n"))
            }
            (None, Some(e)) => {
                let qber = match (a.attack, a.model) {
                    (Some(k), _) => attacks::attack_boundary_qber(attack_kind(k), e)?,
                    (None, Some(m)) => keyrates::proof_boundary_qber(m.into(), e)?,
                    _ => unreachable!("clap requires --attack or --model"),
                };
                Ok(format!("qber*={qber}\n"))
            }
            _ => Err(CliError::Usage("give exactly one of --qber and --eta".into())),
        }
    };
    out.push_str(&solve(a.qber, a.eta)?);
    Ok(out)
}

fn attack_kind(a: BoundaryAttack) -> AttackKind {
    match a {
        BoundaryAttack::Combined => AttackKind::Combined,
        BoundaryAttack::Improved => AttackKind::Improved,
        BoundaryAttack::PureFakedStates => AttackKind::PureFakedStates,
        BoundaryAttack::Crossover => unreachable!("handled separately"),
    }
}

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(CliError::Usage(format!("grid `{spec}` is not lo:hi:step")));
    };
    let num = |s: &str| -> Result<f64, CliError> {
        s.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("grid `{spec}`: bad number `{s}`")))
    };
    Ok(mathcore::grid(num(lo)?, num(hi)?, num(step)?)?)
}

/// Every boundary curve on the QBER grid, one row per grid point.
pub fn region_rows(grid: &[f64]) -> Vec<RegionRow> {
    let combined = attacks::attack_region(AttackKind::Combined, grid);
    let improved = attacks::attack_region(AttackKind::Improved, grid);
    let general = keyrates::proof_region(ProofModel::General, grid);
    let single = keyrates::proof_region(ProofModel::SinglePhotonEve, grid);
    grid.iter()
        .enumerate()
        .map(|(i, &qber)| RegionRow {
            qber,
            eta_combined: combined[i].1,
            eta_improved: improved[i].1,
            eta_bound_general: general[i].1,
            eta_bound_single_photon: single[i].1,
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn region(a: &RegionArgs, argv: &[String]) -> Result<String, CliError> {
    let grid = parse_grid(&a.grid)?;
    let csv = formats::render_region_csv(&region_rows(&grid));
    let Some(path) = &a.out else {
        return Ok(csv);
    };
    write_file(path, &csv)?;
    let mut m = RunManifest::new("region", argv);
    m.push("grid", &a.grid);
    m.push("grid_points", grid.len());
    m.push("boundary_tol", attacks::BOUNDARY_TOL);
    m.push("eta_floor", attacks::ETA_FLOOR);
    m.push("entropy_inverse_tol", mathcore::DEFAULT_TOL);
    m.push("seed", "none");
    let mpath = m.write_beside(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("wrote={}\nmanifest={}\nrows={}\n", path.display(), mpath.display(), grid.len()))
}

fn eta(a: &EtaArgs) -> Result<String, CliError> {
    let mut out = String::new();
    let is_json = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let model = formats::load_block_model(&a.input)?;
        let exact = channels::eta_from_blocks(&model)?;
        writeln!(out, "eta={}", exact.eta).unwrap();
        writeln!(out, "no_key={}", exact.no_key).unwrap();
        if let Some(n) = a.trials {
            let brute = channels::eta_brute_force(&model, n, a.seed)?;
            writeln!(out, "eta_brute_force={}", brute.eta).unwrap();
        }
        return Ok(out);
    }
    let curve = formats::load_efficiency_csv(&a.input)?;
    match a.mode {
        EtaMode::BasisIndependent | EtaMode::General => {
            let mode = match a.mode {
                EtaMode::BasisIndependent => CurveMode::BasisIndependent,
                _ => CurveMode::General,
            };
            let pair = channels::eta_from_curves(&curve, mode)?;
            writeln!(out, "eta={}", pair.min()).unwrap();
            writeln!(out, "eta_z={}", pair.eta_z).unwrap();
            writeln!(out, "eta_x={}", pair.eta_x).unwrap();
        }
        EtaMode::Measured => {
            let eta = channels::eta_lower_bound_measured(&curve.all_values(), a.delta)?;
            writeln!(out, "eta={eta}").unwrap();
        }
    }
    Ok(out)
}

fn render_stats(s: &oracle::SimStats, expected_qber: f64) -> String {
    let mut out = String::new();
    writeln!(out, "trials={}", s.trials).unwrap();
    writeln!(out, "sifted={}", s.sifted).unwrap();
    writeln!(out, "detected={}", s.detected).unwrap();
    writeln!(out, "errors={}", s.errors).unwrap();
    writeln!(out, "qber={}", s.qber_estimate).unwrap();
    writeln!(out, "qber_stderr={}", s.stderr).unwrap();
    writeln!(out, "qber_expected={expected_qber}").unwrap();
    if let Some(p) = s.posterior_estimate {
        writeln!(out, "posterior={p}").unwrap();
    }
    if let Some(i) = s.mutual_info_estimate {
        writeln!(out, "mutual_info_ae={i}").unwrap();
    }
    writeln!(out, "seed={}", s.seed).unwrap();
    out
}

fn simulate(a: &SimulateArgs, argv: &[String]) -> Result<String, CliError> {
    let (stats, expected) = match a.attack {
        SimAttack::FakedStates => (
            oracle::simulate_faked_states(a.eta, a.trials, a.seed)?,
            attacks::faked_states_qber(a.eta)?,
        ),
        SimAttack::TimeShift => (oracle::simulate_time_shift(a.eta, a.trials, a.seed)?, 0.0),
    };
    let text = render_stats(&stats, expected);
    let Some(path) = &a.out else {
        return Ok(text);
    };
    write_file(path, &text)?;
    let mut m = RunManifest::new("simulate", argv);
    m.push("attack", format!("{:?}", a.attack));
    m.push("eta", a.eta);
    m.push("trials", a.trials);
    m.push("seed", a.seed);
    let mpath = m.write_beside(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("{text}wrote={}\nmanifest={}\n", path.display(), mpath.display()))
}

/// Worst disagreement between the closed-form success probability, the
/// measurement sweep and the Helstrom bound over a grid of (eta, E).
pub fn discrimination_deviation() -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for j in 1..=10 {
        let eta = j as f64 / 10.0;
        for i in 0..=30 {
            let e = i as f64 / 100.0;
            let problem = attacks::DiscriminationProblem::time_shifted_probe(eta, e)?;
            let closed = attacks::optimal_success_probability(eta, e)?;
            let (sweep, _) = oracle::discriminate_brute_force(
                problem.prior0,
                problem.overlap_angle,
                DISCRIMINATION_GRID_POINTS,
            )?;
            let helstrom = oracle::helstrom_bound(problem.prior0, problem.overlap_angle)?;
            worst = worst.max((sweep - closed).abs()).max((helstrom - closed).abs());
        }
    }
    Ok(worst)
}

fn verify(a: &VerifyArgs) -> Result<String, CliError> {
    use oracle::FockOpSpec;
    let check = |spec: FockOpSpec| oracle::verify_vacuum_commutation(&spec, a.trials, a.seed);
    let (deviation, ok, expectation) = match a.model {
        VerifyModel::VacuumUnitary => {
            let d = check(FockOpSpec::beamsplitter(0.7, 0.3, a.cutoff))?;
            (d, d <= VACUUM_TOL, format!("<= {VACUUM_TOL:e}"))
        }
        VerifyModel::VacuumLoss => {
            let d = check(FockOpSpec::uniform_loss(2, 0.6, a.cutoff))?;
            (d, d <= VACUUM_TOL, format!("<= {VACUUM_TOL:e}"))
        }
        VerifyModel::VacuumViolating => {
            let d = check(FockOpSpec::displacement(2, 0.5, a.cutoff))?;
            (d, d > VIOLATION_MIN, format!("> {VIOLATION_MIN:e}"))
        }
        VerifyModel::Discrimination => {
            let d = discrimination_deviation()?;
            (d, d <= DISCRIMINATION_TOL, format!("<= {DISCRIMINATION_TOL:e}"))
        }
    };
    if !ok {
        return Err(CliError::Verification(format!(
            "deviation {deviation:e} is not {expectation}"
        )));
    }
    Ok(format!("deviation={deviation:e}\nexpected={expectation}\nstatus=pass\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_disjoint() {
        let codes = [EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_IO];
        for (i, a) in codes.iter().enumerate() {
            for b in &codes[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn grid_spec() {
        let g = parse_grid(DEFAULT_GRID).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g[21], 0.11);
        assert!(matches!(parse_grid("0.1:0.2"), Err(CliError::Usage(_))));
        assert!(matches!(parse_grid("a:0.2:0.1"), Err(CliError::Usage(_))));
    }

    #[test]
    fn error_mapping() {
        use demguard_core::Error;
        assert_eq!(CliError::from(Error::NoRoot("x".into())).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(Error::Infeasible("x".into())).exit_code(), EXIT_DOMAIN);
        assert_eq!(CliError::from(Error::Shape("x".into())).exit_code(), EXIT_USAGE);
    }
}
