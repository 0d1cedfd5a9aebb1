//! The `bubblereduce` command line: JSON configs in, CSV/JSON reports out.
//!
//! Exit codes: 0 on success, 1 when an asserted certificate fails, 2 on
//! usage, configuration or domain errors.

mod config;

pub use config::{ModelConfig, MaxPointConfig, PerturbativeConfig};

use crate::constants::{cross_check_table, default_dims_grid, default_gammas, CrossCheckOptions};
use crate::error::{Error, Result};
use crate::geometry::{cr_to_heisenberg, grushin_to_hs, norm_identity_constant, norm_identity_ratio, BuiltinProfile};
use crate::interaction::{ladder_check, LadderKind, LadderSetup};
use crate::model::{Bubble, CurvatureModel, SpaceDims};
use crate::quadrature::{dist, QuadratureSpec};
use crate::reduction::{l_separation, reduced_system_for, solve_perturbative, solve_separated};
use crate::residual::{energy_map, epsilon_sweep, log_grid, separation_sweep, SweepOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "bubblereduce", version, about = "Two-bubble reduction toolkit", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form vs quadrature table of the expansion constants, with sign checks.
    Constants(ConstantsArgs),
    /// Order and leading-term check of one interaction integral on a λ-ladder.
    CheckLemma(CheckArgs),
    /// Solve the reduced system and write the concentration ansatz as JSON.
    SolveReduced(SolveArgs),
    /// Energy, proxy and strong residual of the solved ansatz over ε or s.
    ResidualSweep(SweepArgs),
    /// Push sample points and a built-in profile through the coordinate chain.
    TransformDemo(TransformArgs),
    /// Tabulate the reduced energy on a log grid in (λ₁, λ₂).
    EnergyMap(MapArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// N,k,h; the default grid when absent.
    #[arg(long)]
    dims: Option<SpaceDims>,
    /// γ values; a default set per dims when absent.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// NAME=FACTOR multiplies one closed form (exercises the failure path).
    #[arg(long, hide = true)]
    corrupt: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CheckId {
    Interaction,
    MixedPower,
    Dlambda,
    CurvatureDlambda,
    Deta,
    CurvatureDeta,
}

impl From<CheckId> for LadderKind {
    fn from(c: CheckId) -> Self {
        match c {
            CheckId::Interaction => LadderKind::Interaction,
            CheckId::MixedPower => LadderKind::MixedPower,
            CheckId::Dlambda => LadderKind::DLambda,
            CheckId::CurvatureDlambda => LadderKind::CurvatureDLambda,
            CheckId::Deta => LadderKind::DEta,
            CheckId::CurvatureDeta => LadderKind::CurvatureDEta,
        }
    }
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, value_enum)]
    id: CheckId,
    #[arg(long)]
    dims: SpaceDims,
    /// Flatness exponent; required by the curvature checks.
    #[arg(long)]
    gamma: Option<f64>,
    /// λ-ladder; the per-check default when absent.
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Perturbation size for flatness-point configs.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Center separation for max-point configs.
    #[arg(long)]
    separation: Option<f64>,
    /// Multistart seed for max-point configs.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    separations: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Residual grid nodes per axis.
    #[arg(long)]
    nodes: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// bubble or power.
    #[arg(long, default_value = "bubble")]
    profile: BuiltinProfile,
    /// Heisenberg index n.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Number of sample points on the sphere.
    #[arg(long, default_value_t = 8)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also report the energy ratio against its exact constant.
    #[arg(long)]
    norms: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// lo,hi of λ₁; centered on the reduced scales when absent.
    #[arg(long, value_delimiter = ',')]
    lambda1: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda2: Vec<f64>,
    /// Grid size per axis.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[command(flatten)]
    common: Common,
}

/// Outcome of a subcommand: the report and whether its certificates held.
struct Report {
    body: String,
    certified: bool,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (out, res) = match cli.command {
        Command::Constants(a) => (a.common.out.clone(), constants(&a)),
        Command::CheckLemma(a) => (a.common.out.clone(), check(&a)),
        Command::SolveReduced(a) => (a.common.out.clone(), solve(&a)),
        Command::ResidualSweep(a) => (a.common.out.clone(), sweep(&a)),
        Command::TransformDemo(a) => (a.common.out.clone(), transform(&a)),
        Command::EnergyMap(a) => (a.common.out.clone(), map(&a)),
    };
    match res {
        Ok(r) => {
            if let Err(e) = emit(out.as_ref(), &r.body) {
                eprintln!("error: {e}");
                return 2;
            }
            if r.certified {
                0
            } else {
                eprintln!("certificate failure; see the report header");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_certificate() {
                1
            } else {
                2
            }
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ! {
    std::process::exit(run(std::env::args_os()))
}

fn emit(out: Option<&PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn spec_from(tol: Option<f64>, default: QuadratureSpec) -> Result<QuadratureSpec> {
    let s = match tol {
        Some(t) => QuadratureSpec { rel_tol: t, ..default },
        None => default,
    };
    s.validate()?;
    Ok(s)
}

fn constants(a: &ConstantsArgs) -> Result<Report> {
    let dims_grid = match a.dims {
        Some(d) => vec![d],
        None => default_dims_grid(),
    };
    let mut opts = CrossCheckOptions::new(spec_from(a.common.tol, QuadratureSpec::with_rel_tol(1e-9))?);
    if let Some(c) = &a.corrupt {
        let (name, f) = c
            .split_once('=')
            .and_then(|(n, f)| f.parse::<f64>().ok().map(|f| (n.to_string(), f)))
            .ok_or_else(|| Error::Config(format!("--corrupt expects NAME=FACTOR, got `{c}`")))?;
        opts.corrupt = Some((name, f));
    }
    for &g in &a.gamma {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::param("gamma", format!("must be positive, got {g}")));
        }
    }
    let mut rows = Vec::new();
    for d in &dims_grid {
        let gammas = if a.gamma.is_empty() { default_gammas(*d) } else { a.gamma.clone() };
        rows.extend(cross_check_table(&[*d], &gammas, &opts).rows);
    }
    let report = crate::constants::CrossCheckReport { rows };
    Ok(Report { certified: report.passed(), body: report.to_csv() })
}

fn check(a: &CheckArgs) -> Result<Report> {
    let kind: LadderKind = a.id.into();
    let mut setup = LadderSetup::for_kind(kind);
    if !a.lambdas.is_empty() {
        setup.lambdas = a.lambdas.clone();
    }
    setup.spec = spec_from(a.common.tol, setup.spec)?;
    let r = ladder_check(kind, a.dims, a.gamma, &setup)?;
    Ok(Report { certified: r.passed(), body: r.to_csv() })
}

fn solve(a: &SolveArgs) -> Result<Report> {
    let cfg = ModelConfig::load(&a.config)?;
    let body = match &cfg {
        ModelConfig::FlatPoints(c) => {
            let eps = a.epsilon.or(c.epsilon).ok_or_else(|| Error::param("epsilon", "give --epsilon or set it in the config"))?;
            let land = c.landscape(eps)?;
            let mut opts = c.options();
            opts.spec = spec_from(a.common.tol, opts.spec)?;
            let sol = solve_perturbative(&land, eps, &opts)?;
            json!({
                "path": "epsilon",
                "epsilon": eps,
                "bubbles": bubbles_json(&sol.ansatz.bubbles),
                "amplitudes": sol.ansatz.amplitudes,
                "certificates": {
                    "degree": sol.degree,
                    "residual_sup": sol.residual_sup,
                    "t": [sol.t.0, sol.t.1],
                    "g": [sol.g.0, sol.g.1],
                    "l_epsilon": sol.l_epsilon,
                }
            })
        }
        ModelConfig::MaxPoints(c) => {
            let mut m = c.model()?;
            if let Some(s) = a.separation {
                m = m.with_separation(s)?;
            }
            let mut opts = c.options();
            opts.spec = spec_from(a.common.tol, opts.spec)?;
            if let Some(seed) = a.seed {
                opts.seed = seed;
            }
            let sol = solve_separated(&m, (0, 1), &opts)?;
            let interior = interiority(&sol.ansatz.bubbles, &m.centers);
            json!({
                "path": "separation",
                "separation": m.separation(),
                "bubbles": bubbles_json(&sol.ansatz.bubbles),
                "amplitudes": sol.ansatz.amplitudes,
                "certificates": {
                    "interiority": interior,
                    "energy": sol.energy,
                    "scales": [sol.scales.0, sol.scales.1],
                    "beta": [sol.beta.0, sol.beta.1],
                    "evaluations": sol.evaluations,
                }
            })
        }
    };
    let mut s = serde_json::to_string_pretty(&body).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(Report { body: s, certified: true })
}

fn bubbles_json(bs: &[Bubble]) -> serde_json::Value {
    bs.iter().map(|b| json!({ "eta": b.eta, "lambda": b.lambda })).collect()
}

/// max_j λ_j|η_j − η̄_j|.
fn interiority(bs: &[Bubble], centers: &[Vec<f64>]) -> f64 {
    bs.iter().zip(centers).map(|(b, c)| b.lambda * dist(&b.eta, c)).fold(0.0, f64::max)
}

fn sweep(a: &SweepArgs) -> Result<Report> {
    let cfg = ModelConfig::load(&a.config)?;
    let mut opts = SweepOptions::default();
    opts.spec = spec_from(a.common.tol, opts.spec)?;
    if let Some(n) = a.nodes {
        opts.grid.nodes = n;
    }
    let report = match &cfg {
        ModelConfig::FlatPoints(c) => {
            if a.epsilons.is_empty() {
                return Err(Error::param("epsilons", "a flatness-point sweep needs --epsilons"));
            }
            if a.epsilons.iter().any(|&e| !(e > 0.0)) {
                return Err(Error::param("epsilons", "must be positive"));
            }
            let land = c.landscape(a.epsilons[0])?;
            let po = c.options();
            reduced_system_for(&land, &po)?;
            epsilon_sweep(&land, &a.epsilons, &po, &opts)
        }
        ModelConfig::MaxPoints(c) => {
            if a.separations.is_empty() {
                return Err(Error::param("separations", "a max-point sweep needs --separations"));
            }
            let m = c.model()?;
            for &s in &a.separations {
                m.with_separation(s)?;
            }
            let mut so = c.options();
            if let Some(seed) = a.seed {
                so.seed = seed;
            }
            separation_sweep(&m, &a.separations, &so, &opts)
        }
    };
    let ok = report.residual_decreasing();
    let mut body = format!("# residual_decreasing = {ok}\n");
    body.push_str(&report.to_csv());
    Ok(Report { body, certified: ok })
}

fn transform(a: &TransformArgs) -> Result<Report> {
    let n = a.n;
    let u = a.profile.on_heisenberg(n)?;
    let v = grushin_to_hs(&u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut body = String::new();
    let _ = writeln!(body, "# profile = {}; n = {n}", a.profile.name());
    let mut certified = true;
    if a.norms {
        let spec = spec_from(a.common.tol, QuadratureSpec::with_rel_tol(1e-9))?;
        let r = norm_identity_ratio(&u, n, &spec)?;
        let c = norm_identity_constant(n);
        let rel = (r - c).abs() / c;
        certified = rel < 1e-6;
        let _ = writeln!(body, "# energy ratio = {r:.12}; constant = {c:.12}; rel_diff = {rel:.3e}");
    }
    let mut cols: Vec<String> = (0..=n).flat_map(|j| [format!("theta{j}_re"), format!("theta{j}_im")]).collect();
    cols.extend(["r".into(), "t".into(), "u_heisenberg".into(), "y_abs".into(), "v_euclid".into()]);
    if a.profile == BuiltinProfile::Bubble {
        cols.push("scaled_bubble".into());
    }
    let _ = writeln!(body, "{}", cols.join(","));
    let dims = SpaceDims::cr(n)?;
    let flat = Bubble::new(dims, vec![0.0], 1.0)?;
    let scale = 2f64.powi(n as i32);
    for _ in 0..a.points {
        let theta = sphere_point(&mut rng, n + 1);
        let (z, t) = cr_to_heisenberg(&theta)?;
        let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let mut row: Vec<String> = theta.iter().flat_map(|c| [format!("{:.15e}", c.re), format!("{:.15e}", c.im)]).collect();
        let y = r * r;
        row.extend([r, t, u.eval(r, &[t]), y, v.eval(y, &[t])].iter().map(|x| format!("{x:.15e}")));
        if a.profile == BuiltinProfile::Bubble {
            row.push(format!("{:.15e}", scale * flat.eval(y, &[t])));
        }
        let _ = writeln!(body, "{}", row.join(","));
    }
    Ok(Report { body, certified })
}

/// A point on the unit sphere of ℂᵐ away from the pole.
fn sphere_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-3 || n > 1.0 {
            continue;
        }
        let p: Vec<Complex64> = v.iter().map(|c| c / n).collect();
        if (p[m - 1] + 1.0).norm() > 1e-2 {
            return p;
        }
    }
}

fn map(a: &MapArgs) -> Result<Report> {
    if a.grid == 0 {
        return Err(Error::param("grid", "must be at least 1"));
    }
    let cfg = ModelConfig::load(&a.config)?;
    let range = |given: &[f64], mid: f64| -> Result<(f64, f64)> {
        match given {
            [lo, hi] if *lo > 0.0 && *hi >= *lo => Ok((*lo, *hi)),
            [] => Ok((mid / 2.0, mid * 2.0)),
            _ => Err(Error::param("lambda", "expects lo,hi with 0 < lo <= hi")),
        }
    };
    let spec_default = QuadratureSpec::with_rel_tol(1e-8);
    let spec = spec_from(a.common.tol, spec_default)?;
    let (model, centers, amps, mids): (Box<dyn CurvatureModel>, Vec<Vec<f64>>, [f64; 2], (f64, f64)) = match &cfg {
        ModelConfig::FlatPoints(c) => {
            let eps = a.epsilon.or(c.epsilon).ok_or_else(|| Error::param("epsilon", "give --epsilon or set it in the config"))?;
            let land = c.landscape(eps)?;
            let mids = if a.lambda1.is_empty() || a.lambda2.is_empty() {
                let sol = solve_perturbative(&land, eps, &c.options())?;
                let l = sol.ansatz.lambdas();
                (l[0], l[1])
            } else {
                (1.0, 1.0)
            };
            let centers = land.patches.iter().map(|p| p.center.clone()).collect();
            (Box::new(land), centers, [1.0, 1.0], mids)
        }
        ModelConfig::MaxPoints(c) => {
            let mut m = c.model()?;
            if let Some(s) = a.separation {
                m = m.with_separation(s)?;
            }
            let m = m.pair(0, 1)?;
            let mids = l_separation(m.gammas[0], m.gammas[1], m.dims.n, m.separation())?;
            let p = m.dims.p();
            let amps = [m.k_values[0].powf(-p), m.k_values[1].powf(-p)];
            let centers = m.centers.clone();
            (Box::new(m), centers, amps, mids)
        }
    };
    let (lo1, hi1) = range(&a.lambda1, mids.0)?;
    let (lo2, hi2) = range(&a.lambda2, mids.1)?;
    let l1 = log_grid(lo1, hi1, a.grid);
    let l2 = log_grid(lo2, hi2, a.grid);
    let em = energy_map(model.as_ref(), [&centers[0], &centers[1]], amps, &l1, &l2, &spec)?;
    Ok(Report { body: em.to_csv(), certified: true })
}
