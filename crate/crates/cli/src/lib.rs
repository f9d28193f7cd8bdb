//! Command implementations for the `learnrate` binary.
//!
//! Each command returns the text it would print, so tests can call them
//! without spawning a process.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use learnrate::gaussian::{
    build_teacher_matrix, eps_block_variance, joint_optimum_bound, optimal_student, GaussianModel, TeacherKind,
};
use learnrate::rates::{
    rate_cumulative_eps, rate_cumulative_threshold, rate_eps_teaching, rate_forwarding_eps, rate_forwarding_majority,
    Pairing,
};
use learnrate::simulate::{estimate_error, SimConfig};
use learnrate::walk::exact_error;
use learnrate::{ChannelPair, RateResult, StrategyCombo, Student, Teacher};
use rayon::prelude::*;
use serde_json::json;

/// Rates closer than this are reported as a tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Heatmap colours for A wins, B wins and ties.
pub const COLOR_A: [u8; 3] = [230, 159, 0];
pub const COLOR_B: [u8; 3] = [0, 114, 178];
pub const COLOR_TIE: [u8; 3] = [200, 200, 200];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] learnrate::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.code(),
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
        }
    }

    /// One-line JSON rendering for stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "learnrate", version, about = "Learning rates for teacher/student learning over noisy channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic learning rate of one strategy pairing, as JSON.
    Rate(RateArgs),
    /// Exact error probabilities for n = step, 2 step, ..., n_max, as CSV.
    Exact(ExactArgs),
    /// Monte Carlo estimate of the error probability, as JSON.
    Simulate(SimulateArgs),
    /// Compare two pairings on a (p, q) grid; writes CSV and optionally a PPM heatmap.
    Phase(PhaseArgs),
    /// Optimal student and variance bound for a linear Gaussian teacher, as JSON.
    Gaussian(GaussianArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TeacherArg {
    Forwarding,
    Cumulative,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudentArg {
    Majority,
    Eps,
}

#[derive(Debug, Clone, Args)]
pub struct ComboArgs {
    #[arg(long, value_enum)]
    pub teacher: TeacherArg,
    #[arg(long, value_enum)]
    pub student: StudentArg,
    /// Teacher observation flip probability.
    #[arg(long)]
    pub p: f64,
    /// Teacher-to-student flip probability.
    #[arg(long)]
    pub q: f64,
    /// Window fraction for eps strategies; defaults to the rate-optimal value.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub combo: ComboArgs,
    /// Error threshold of the cumulative teacher's student (1/2 is majority).
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub combo: ComboArgs,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub combo: ComboArgs,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    /// First pairing, e.g. forwarding-majority.
    #[arg(long, value_parser = parse_pairing)]
    pub a: Pairing,
    /// Second pairing, e.g. cumulative-majority.
    #[arg(long, value_parser = parse_pairing)]
    pub b: Pairing,
    /// Cells per axis (at least 10).
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaussianKindArg {
    Forwarding,
    EpsTeaching,
    Cumulative,
    Clairvoyant,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    #[arg(long, value_enum)]
    pub kind: GaussianKindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub sigma1: f64,
    #[arg(long)]
    pub sigma2: f64,
    /// Required for eps-teaching.
    #[arg(long)]
    pub eps: Option<f64>,
}

fn parse_pairing(s: &str) -> Result<Pairing, String> {
    s.parse::<Pairing>().map_err(|e| e.to_string())
}

/// Runs a parsed command and returns its stdout text.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Gaussian(a) => cmd_gaussian(a),
    }
}

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn channels(c: &ComboArgs) -> CliResult<ChannelPair> {
    Ok(ChannelPair::new(c.p, c.q)?)
}

fn unsupported() -> CliError {
    learnrate::Error::UnsupportedCombo("the eps teacher requires the eps student".into()).into()
}

fn rate_of(c: &ComboArgs, delta: Option<f64>) -> CliResult<RateResult> {
    let ch = channels(c)?;
    if delta.is_some() && (c.teacher, c.student) != (TeacherArg::Cumulative, StudentArg::Majority) {
        return Err(CliError::Usage("--delta applies only to --teacher cumulative --student majority".into()));
    }
    if c.eps.is_some() && (c.teacher, c.student) != (TeacherArg::Forwarding, StudentArg::Eps) {
        return Err(CliError::Usage(
            "--eps is optimized for this pairing; it can be fixed only for --teacher forwarding --student eps".into(),
        ));
    }
    Ok(match (c.teacher, c.student) {
        (TeacherArg::Forwarding, StudentArg::Majority) => rate_forwarding_majority(ch)?,
        (TeacherArg::Cumulative, StudentArg::Majority) => rate_cumulative_threshold(ch, delta.unwrap_or(0.5))?,
        (TeacherArg::Eps, StudentArg::Eps) => rate_eps_teaching(ch)?,
        (TeacherArg::Cumulative, StudentArg::Eps) => rate_cumulative_eps(ch)?,
        (TeacherArg::Forwarding, StudentArg::Eps) => rate_forwarding_eps(ch, c.eps)?,
        (TeacherArg::Eps, StudentArg::Majority) => return Err(unsupported()),
    })
}

/// Resolves the concrete strategy pair, filling in the rate-optimal eps.
fn combo_of(c: &ComboArgs) -> CliResult<StrategyCombo> {
    let ch = channels(c)?;
    let eps = |optimal: &dyn Fn() -> CliResult<RateResult>| -> CliResult<f64> {
        match c.eps {
            Some(e) => Ok(e),
            None => {
                let r = optimal()?;
                let e = r.eps_star.expect("eps pairings report eps*");
                if e <= 0.0 {
                    return Err(CliError::Usage(
                        "the optimal eps is a limit (eps* = 0) at these parameters; pass --eps".into(),
                    ));
                }
                Ok(e)
            }
        }
    };
    let combo = match (c.teacher, c.student) {
        (TeacherArg::Forwarding, StudentArg::Majority) => StrategyCombo::forwarding_majority(),
        (TeacherArg::Cumulative, StudentArg::Majority) => StrategyCombo::cumulative_majority(),
        (TeacherArg::Eps, StudentArg::Eps) => StrategyCombo::eps_teaching(eps(&|| Ok(rate_eps_teaching(ch)?))?)?,
        (TeacherArg::Cumulative, StudentArg::Eps) => {
            StrategyCombo::cumulative_eps(eps(&|| Ok(rate_cumulative_eps(ch)?))?)?
        }
        (TeacherArg::Forwarding, StudentArg::Eps) => StrategyCombo::forwarding_eps(c.eps.unwrap_or(1.0))?,
        (TeacherArg::Eps, StudentArg::Majority) => return Err(unsupported()),
    };
    Ok(combo)
}

fn combo_eps(combo: &StrategyCombo) -> Option<f64> {
    match (combo.teacher, combo.student) {
        (Teacher::EpsTeaching(e), _) | (_, Student::EpsMajority(e)) => Some(e),
        _ => None,
    }
}

pub fn cmd_rate(a: &RateArgs) -> CliResult<String> {
    let r = rate_of(&a.combo, a.delta)?;
    Ok(serde_json::to_string(&r).expect("rate result serializes"))
}

pub fn cmd_exact(a: &ExactArgs) -> CliResult<String> {
    if a.step == 0 {
        return Err(CliError::Usage("--step must be at least 1".into()));
    }
    if a.n_max == 0 {
        return Err(CliError::Usage("--n-max must be at least 1".into()));
    }
    let combo = combo_of(&a.combo)?;
    let ch = channels(&a.combo)?;
    // Horizons whose eps windows are empty are skipped.
    let ns: Vec<usize> = (a.step..=a.n_max).step_by(a.step).filter(|&n| combo.check_horizon(n).is_ok()).collect();
    if ns.is_empty() {
        return Err(CliError::Usage(format!("no horizon up to {} leaves a non-empty eps window", a.n_max)));
    }
    let rows: Vec<learnrate::Result<(usize, f64)>> =
        ns.par_iter().map(|&n| exact_error(combo, ch, n).map(|e| (n, e))).collect();
    let mut out = String::from("n,p_err,minus_log_perr_over_n\n");
    for row in rows {
        let (n, e) = row?;
        writeln!(out, "{n},{},{}", fmt_sig(e), fmt_sig(-e.ln() / n as f64)).unwrap();
    }
    Ok(out)
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<String> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let combo = combo_of(&a.combo)?;
    let config = SimConfig { n: a.n, trials: a.trials, seed: a.seed, combo, channels: channels(&a.combo)? };
    let est = estimate_error(&config)?;
    let mut record = json!({
        "p_hat": est.p_hat,
        "stderr": est.stderr,
        "trials": est.trials,
        "n": a.n,
        "seed": a.seed,
        "combo": combo.to_string(),
        "rare_event_warning": est.rare_event_warning,
    });
    if let Some(e) = combo_eps(&combo) {
        record["eps"] = json!(e);
    }
    Ok(record.to_string())
}

/// Cell coordinate `i` of a phase grid: `(i + 1) / (2 grid + 2)`, strictly
/// inside `(0, 1/2)`.
pub fn phase_coordinate(i: usize, grid: usize) -> f64 {
    (i + 1) as f64 / (2 * grid + 2) as f64
}

/// Winner label under [`TIE_TOLERANCE`].
pub fn winner(rate_a: f64, rate_b: f64) -> &'static str {
    if (rate_a - rate_b).abs() <= TIE_TOLERANCE {
        "tie"
    } else if rate_a > rate_b {
        "A"
    } else {
        "B"
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02X}{:02X}{:02X}", c[0], c[1], c[2])
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn cmd_phase(a: &PhaseArgs) -> CliResult<String> {
    if a.grid < 10 {
        return Err(CliError::Usage(format!("--grid {} must be at least 10", a.grid)));
    }
    let g = a.grid;
    // Row-major over (q, p): row j holds q_j, column i holds p_i.
    let cells: Vec<(usize, usize)> = (0..g).flat_map(|j| (0..g).map(move |i| (j, i))).collect();
    let rates: Vec<learnrate::Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(j, i)| {
            let ch = ChannelPair::new(phase_coordinate(i, g), phase_coordinate(j, g))?;
            Ok((a.a.rate(ch)?.rate, a.b.rate(ch)?.rate))
        })
        .collect();

    let mut csv = format!(
        "# a={} b={}; heatmap colors A={} B={} tie={}; heatmap rows run from the largest q (top) to the smallest, columns by increasing p\n",
        a.a,
        a.b,
        hex(COLOR_A),
        hex(COLOR_B),
        hex(COLOR_TIE)
    );
    csv.push_str("p,q,rate_a,rate_b,winner\n");
    let mut winners = vec!["tie"; g * g];
    let (mut wins_a, mut wins_b, mut ties) = (0usize, 0usize, 0usize);
    for (&(j, i), r) in cells.iter().zip(rates) {
        let (ra, rb) = r?;
        let w = winner(ra, rb);
        match w {
            "A" => wins_a += 1,
            "B" => wins_b += 1,
            _ => ties += 1,
        }
        winners[j * g + i] = w;
        writeln!(
            csv,
            "{},{},{},{},{w}",
            fmt_sig(phase_coordinate(i, g)),
            fmt_sig(phase_coordinate(j, g)),
            fmt_sig(ra),
            fmt_sig(rb)
        )
        .unwrap();
    }
    write_file(&a.out, csv.as_bytes())?;

    if let Some(path) = &a.heatmap {
        let mut ppm = format!("P6\n{g} {g}\n255\n").into_bytes();
        for j in (0..g).rev() {
            for i in 0..g {
                ppm.extend_from_slice(&match winners[j * g + i] {
                    "A" => COLOR_A,
                    "B" => COLOR_B,
                    _ => COLOR_TIE,
                });
            }
        }
        write_file(path, &ppm)?;
    }

    Ok(json!({
        "a": a.a.name(),
        "b": a.b.name(),
        "grid": g,
        "a_wins": wins_a,
        "b_wins": wins_b,
        "ties": ties,
        "out": a.out.display().to_string(),
        "heatmap": a.heatmap.as_ref().map(|p| p.display().to_string()),
    })
    .to_string())
}

pub fn cmd_gaussian(a: &GaussianArgs) -> CliResult<String> {
    let model = GaussianModel::new(a.n, a.sigma1, a.sigma2)?;
    let kind = match (a.kind, a.eps) {
        (GaussianKindArg::EpsTeaching, Some(e)) => TeacherKind::EpsTeaching(e),
        (GaussianKindArg::EpsTeaching, None) => {
            return Err(CliError::Usage("--kind eps-teaching requires --eps".into()))
        }
        (_, Some(_)) => return Err(CliError::Usage("--eps applies only to --kind eps-teaching".into())),
        (GaussianKindArg::Forwarding, None) => TeacherKind::Forwarding,
        (GaussianKindArg::Cumulative, None) => TeacherKind::Cumulative,
        (GaussianKindArg::Clairvoyant, None) => TeacherKind::Clairvoyant,
    };
    let matrix = build_teacher_matrix(kind, a.n)?;
    let opt = optimal_student(&matrix, &model)?;
    let w = opt.weights.weights();
    let mut record = json!({
        "kind": a.kind.to_possible_value().expect("no skipped variants").get_name(),
        "n": a.n,
        "causal": matrix.is_causal(),
        "variance_optimal_student": opt.variance,
        "joint_bound": joint_optimum_bound(&model),
        "b_star_summary": {
            "min": w.min(),
            "max": w.max(),
            "first": w[0],
            "last": w[a.n - 1],
        },
    });
    if let TeacherKind::EpsTeaching(e) = kind {
        record["last_window_variance"] = json!(eps_block_variance(&model, e)?);
    }
    Ok(record.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.34), "0.34");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(1.8329e-5), "1.8329e-05");
        assert_eq!(fmt_sig(2.0f64.powi(60)), "1.15292150461e+18");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        assert_eq!(fmt_sig(0.0001), "0.0001");
    }

    #[test]
    fn winners() {
        assert_eq!(winner(1.0, 0.5), "A");
        assert_eq!(winner(0.5, 1.0), "B");
        assert_eq!(winner(0.5, 0.5 + 1e-10), "tie");
    }

    #[test]
    fn phase_cells_are_interior() {
        assert_eq!(phase_coordinate(0, 10), 1.0 / 22.0);
        assert!(phase_coordinate(9, 10) < 0.5);
    }
}
