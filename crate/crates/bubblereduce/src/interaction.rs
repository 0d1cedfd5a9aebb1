//! Two-bubble and curvature-weighted interaction integrals, their leading
//! asymptotic terms, and ladder checks of the asymptotic orders.

use crate::asymptotics::{doubling_ladder, loglog_fit, LogLogFit};
use crate::constants::{axis_moment, b1_closed, b2_closed, b3_closed, theta_closed, z_moment_closed};
use crate::error::{Error, Result};
use crate::model::{c_nk, Bubble, ConstantModel, CurvatureModel, PerturbativeModel, SpaceDims, TwoBubbleConfig};
use crate::quadrature::{dist, integrate_ball, integrate_frame, Frame, QuadratureSpec, ZCenter};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

struct Setup {
    dims: SpaceDims,
    frame: Frame,
    marks: Vec<ZCenter>,
    outer: f64,
}

fn setup(bubbles: &[&Bubble], model: Option<&dyn CurvatureModel>) -> Result<Setup> {
    let Some(first) = bubbles.first() else {
        return Err(Error::param("bubbles", "at least one bubble is required"));
    };
    let dims = first.dims;
    if bubbles.iter().any(|b| b.dims != dims) {
        return Err(Error::param("bubbles", "must share dimensions"));
    }
    let mut marks: Vec<ZCenter> = bubbles.iter().map(|b| ZCenter::new(b.eta.clone(), 1.0 / b.lambda)).collect();
    if let Some(m) = model {
        if m.dims() != dims {
            return Err(Error::param("model", "dimensions differ from the bubbles'"));
        }
        marks.extend(m.anchors());
    }
    let origin = &first.eta;
    let other = marks.iter().map(|m| &m.z).find(|z| dist(z, origin) > 0.0);
    let frame = match other {
        Some(z) => Frame::through(origin, z),
        None if dims.h == 2 => Frame::through(origin, origin),
        None => Frame::Single { center: origin.clone() },
    };
    if let Some(m) = model {
        m.check_frame(&frame)?;
    }
    let mut outer: f64 = 0.0;
    for a in &marks {
        for b in &marks {
            outer = outer.max(dist(&a.z, &b.z));
        }
    }
    Ok(Setup { dims, frame, marks, outer })
}

/// Picks an integration frame exact for integrands built from `bubbles` and
/// `model`, and integrates `f(s, z)` over ℝᴺ.
pub fn integrate_bubbles<F>(
    f: &F,
    bubbles: &[&Bubble],
    model: Option<&dyn CurvatureModel>,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let st = setup(bubbles, model)?;
    Ok(integrate_frame(f, st.dims.into(), &st.frame, &st.marks, st.outer, spec)?.value)
}

/// Integrates `f(φ, s, z)` over ℝᴺ. When φ jumps across balls, the integral
/// is split into the whole-space integral with φ frozen at its outside
/// value plus, per ball, the integral of the difference in polar
/// coordinates about the ball center. Tolerances are taken on ∫|f|.
pub fn integrate_with_model<F>(
    f: &F,
    bubbles: &[&Bubble],
    model: &dyn CurvatureModel,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(&dyn CurvatureModel, f64, &[f64]) -> f64 + Sync,
{
    let st = setup(bubbles, Some(model))?;
    let spec = spec.on_magnitude();
    let whole = |m: &dyn CurvatureModel, marks: &[ZCenter]| {
        integrate_frame(&|s: f64, z: &[f64]| f(m, s, z), st.dims.into(), &st.frame, marks, st.outer, &spec)
    };
    let Some((balls, phi_out)) = model.jump_balls() else {
        return Ok(whole(model, &st.marks)?.value);
    };
    let outside = ConstantModel::new(st.dims, phi_out);
    let bubble_marks = &st.marks[..bubbles.len()];
    let parts: Vec<Result<f64>> = balls
        .par_iter()
        .map(|ball| {
            let g = |s: f64, z: &[f64]| f(model, s, z) - f(&outside, s, z);
            Ok(integrate_ball(&g, st.dims.into(), &st.frame, ball, bubble_marks, &spec)?.value)
        })
        .collect();
    let mut total = whole(&outside, bubble_marks)?.value;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

fn check_distinct(cfg: &TwoBubbleConfig) -> Result<()> {
    if !(cfg.separation() > 0.0) {
        return Err(Error::Degenerate("the two bubble centers coincide".into()));
    }
    Ok(())
}

fn other(j: usize) -> Result<usize> {
    match j {
        0 => Ok(1),
        1 => Ok(0),
        _ => Err(Error::param("j", "bubble index must be 0 or 1")),
    }
}

/// ∫ U₁^{N/(N−2)} U₂ /|y|.
pub fn interaction_integral(cfg: &TwoBubbleConfig, spec: &QuadratureSpec) -> Result<f64> {
    check_distinct(cfg)?;
    let (u1, u2) = (&cfg.b1, &cfg.b2);
    integrate_bubbles(&|s, z| u1.eval_pstar(s, z) * u2.eval(s, z) / s, &[u1, u2], None, spec)
}

/// ⟨U₁, U₂⟩ = ½∫(U₁^{N/(N−2)}U₂ + U₂^{N/(N−2)}U₁)/|y|, the symmetric form of the Dirichlet pairing.
pub fn dirichlet_pairing(cfg: &TwoBubbleConfig, spec: &QuadratureSpec) -> Result<f64> {
    let (u1, u2) = (&cfg.b1, &cfg.b2);
    integrate_bubbles(
        &|s, z| 0.5 * (u1.eval_pstar(s, z) * u2.eval(s, z) + u2.eval_pstar(s, z) * u1.eval(s, z)) / s,
        &[u1, u2],
        None,
        spec,
    )
}

/// C_{N,k}Θε₁₂.
pub fn interaction_leading(cfg: &TwoBubbleConfig) -> Result<f64> {
    let d = cfg.dims();
    Ok(c_nk(d) * theta_closed(d)? * cfg.eps12()?)
}

/// ∫ U₁^α U₂^β /|y| with α ≥ β > 1 and α + β = 2(N−1)/(N−2).
pub fn mixed_power_integral(cfg: &TwoBubbleConfig, alpha: f64, beta: f64, spec: &QuadratureSpec) -> Result<f64> {
    let q = cfg.dims().crit();
    if !(alpha >= beta && beta > 1.0) {
        return Err(Error::Domain(format!("need alpha >= beta > 1, got ({alpha}, {beta})")));
    }
    if (alpha + beta - q).abs() > 1e-12 * q {
        return Err(Error::Domain(format!("alpha + beta must equal {q}, got {}", alpha + beta)));
    }
    let (u1, u2) = (&cfg.b1, &cfg.b2);
    integrate_bubbles(&|s, z| u1.eval(s, z).powf(alpha) * u2.eval(s, z).powf(beta) / s, &[u1, u2], None, spec)
}

/// N/(N−2) ∫ U_j^{2/(N−2)} (∂U_j/∂λ_j) U_i /|y|.
pub fn dlambda_interaction(cfg: &TwoBubbleConfig, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    check_distinct(cfg)?;
    let i = other(j)?;
    let (uj, ui) = (cfg.bubble(j), cfg.bubble(i));
    let ps = cfg.dims().pstar();
    integrate_bubbles(
        &|s, z| ps * uj.eval(s, z).powf(ps - 1.0) * uj.d_lambda(s, z) * ui.eval(s, z) / s,
        &[uj, ui],
        None,
        spec,
    )
}

/// b₁C_{N,k}ε₁₂/λ_j.
pub fn dlambda_leading(cfg: &TwoBubbleConfig, j: usize) -> Result<f64> {
    other(j)?;
    let d = cfg.dims();
    Ok(b1_closed(d)? * c_nk(d) * cfg.eps12()? / cfg.bubble(j).lambda)
}

/// N/(N−2) ∫ U_j^{2/(N−2)} (∂U_j/∂η_{j,l}) U_i /|y|.
pub fn deta_interaction(cfg: &TwoBubbleConfig, j: usize, l: usize, spec: &QuadratureSpec) -> Result<f64> {
    check_distinct(cfg)?;
    let i = other(j)?;
    if l >= cfg.dims().h {
        return Err(Error::param("l", "component index out of range"));
    }
    let (uj, ui) = (cfg.bubble(j), cfg.bubble(i));
    let ps = cfg.dims().pstar();
    integrate_bubbles(
        &|s, z| ps * uj.eval(s, z).powf(ps - 1.0) * uj.d_eta(s, z, l) * ui.eval(s, z) / s,
        &[uj, ui],
        None,
        spec,
    )
}

/// −(N−2)C_{N,k}Θ ε₁₂ (η^j_l − η^i_l)/|η^j − η^i|².
///
/// The constant comes from U_i ≈ A₀(λ_i|z − η^i|²)^{−(N−2)/2} near η^j and
/// is not fixed independently.
pub fn deta_leading(cfg: &TwoBubbleConfig, j: usize, l: usize) -> Result<f64> {
    let i = other(j)?;
    let d = cfg.dims();
    let sep = cfg.separation();
    let diff = cfg.bubble(j).eta[l] - cfg.bubble(i).eta[l];
    Ok(-(d.n as f64 - 2.0) * c_nk(d) * theta_closed(d)? * cfg.eps12()? * diff / (sep * sep))
}

/// ∫ K U^{N/(N−2)} (∂U/∂λ) /|y|, with K the flatness expression of `model`.
pub fn curvature_dlambda(model: &PerturbativeModel, b: &Bubble, spec: &QuadratureSpec) -> Result<f64> {
    model.validate()?;
    let flat = model.with_epsilon(1.0);
    let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| (m.phi(s, z) - 1.0) * b.eval_pstar(s, z) * b.d_lambda(s, z) / s;
    integrate_with_model(&f, &[b], &flat, spec)
}

/// Leading term of [`curvature_dlambda`] at η = η̄:
/// (N−2)C_{N,k}/(2λ^{γ+1}) [b₂Σξ + b₃ m_h(γ) Σa], with m_h(γ) the mean of
/// |θ₁|^γ over S^{h−1}.
pub fn curvature_dlambda_leading(model: &PerturbativeModel, lambda: f64) -> Result<f64> {
    let d = model.dims;
    let g = model.gamma;
    let bracket = b2_closed(d, g)? * model.xi_sum() + b3_closed(d, g)? * axis_moment(d.h, g) * model.a_sum();
    Ok((d.n as f64 - 2.0) * c_nk(d) / (2.0 * lambda.powf(g + 1.0)) * bracket)
}

/// The same leading term with the averaged coefficients b₂Σξ/k + b₃Σa/h.
pub fn curvature_dlambda_leading_averaged(model: &PerturbativeModel, lambda: f64) -> Result<f64> {
    let d = model.dims;
    let g = model.gamma;
    let bracket = b2_closed(d, g)? * model.xi_sum() / d.k as f64 + b3_closed(d, g)? * model.a_sum() / d.h as f64;
    Ok((d.n as f64 - 2.0) * c_nk(d) / (2.0 * lambda.powf(g + 1.0)) * bracket)
}

/// ∫ K U^{N/(N−2)} (∂U/∂η_i) /|y|.
pub fn curvature_deta(model: &PerturbativeModel, b: &Bubble, i: usize, spec: &QuadratureSpec) -> Result<f64> {
    model.validate()?;
    if i >= model.dims.h {
        return Err(Error::param("i", "component index out of range"));
    }
    let flat = model.with_epsilon(1.0);
    let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| (m.phi(s, z) - 1.0) * b.eval_pstar(s, z) * b.d_eta(s, z, i) / s;
    integrate_with_model(&f, &[b], &flat, spec)
}

/// Leading term of [`curvature_deta`] for small η − η̄:
/// (N−2)C_{N,k}γ m_h(γ) I_γ a_i(η_i − η̄_i) λ^{2−γ}, with I_γ = ∫|z|^γ/(|y|Dᴺ).
pub fn curvature_deta_leading(model: &PerturbativeModel, b: &Bubble, i: usize) -> Result<f64> {
    let d = model.dims;
    let g = model.gamma;
    let shift = b.eta[i] - model.center[i];
    Ok((d.n as f64 - 2.0)
        * c_nk(d)
        * g
        * axis_moment(d.h, g)
        * z_moment_closed(d, g)?
        * model.a[i]
        * shift
        * b.lambda.powf(2.0 - g))
}

/// ∫ ⟨x, ∇φ⟩ u^{2(N−1)/(N−2)} /|y| for u = Σ c_j U_j; vanishes for exact solutions.
pub fn pohozaev_diagnostic(
    model: &dyn CurvatureModel,
    coeffs: &[f64],
    bubbles: &[Bubble],
    spec: &QuadratureSpec,
) -> Result<f64> {
    if coeffs.len() != bubbles.len() {
        return Err(Error::param("amplitudes", "one amplitude per bubble"));
    }
    let q = model.dims().crit();
    let refs: Vec<&Bubble> = bubbles.iter().collect();
    let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| {
        let x = m.dilation_derivative(s, z);
        if x == 0.0 {
            return 0.0;
        }
        let u: f64 = coeffs.iter().zip(bubbles).map(|(c, b)| c * b.eval(s, z)).sum();
        x * u.abs().powf(q) / s
    };
    let v = integrate_with_model(&f, &refs, model, spec)?;
    if !v.is_finite() {
        return Err(Error::Domain("the dilation integral diverges".into()));
    }
    Ok(v)
}

/// ∂J/∂λ_i of J = ½∫|∇u|² − (N−2)/(2(N−1))∫φ|u|^{2(N−1)/(N−2)}/|y| at u = Σc_jU_j:
/// c_i[Σ_j c_j ∫U_j^{N/(N−2)}∂λU_i/|y| − ∫φ u^{N/(N−2)}∂λU_i/|y|].
pub fn energy_dlambda(
    model: &dyn CurvatureModel,
    coeffs: &[f64],
    bubbles: &[Bubble],
    i: usize,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if coeffs.len() != bubbles.len() || i >= bubbles.len() {
        return Err(Error::param("amplitudes", "one amplitude per bubble and i in range"));
    }
    let ps = model.dims().pstar();
    let bi = &bubbles[i];
    let refs: Vec<&Bubble> = bubbles.iter().collect();
    let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| {
        let mut lin = 0.0;
        let mut u = 0.0;
        for (c, b) in coeffs.iter().zip(bubbles) {
            lin += c * b.eval_pstar(s, z);
            u += c * b.eval(s, z);
        }
        (lin - m.phi(s, z) * u.abs().powf(ps - 1.0) * u) * bi.d_lambda(s, z) / s
    };
    Ok(coeffs[i] * integrate_with_model(&f, &refs, model, spec)?)
}

/// Leading-order ∂J/∂λ_i for two bubbles with unit amplitudes in a
/// perturbative model with flat point at η̄ = η^i:
/// −ε·(curvature λ-term) − (interaction λ-term).
pub fn energy_dlambda_leading(model: &PerturbativeModel, cfg: &TwoBubbleConfig, i: usize) -> Result<f64> {
    let b = cfg.bubble(i);
    Ok(-model.epsilon * curvature_dlambda_leading(model, b.lambda)? - dlambda_leading(cfg, i)?)
}

// ---------------------------------------------------------------- ladder checks

/// One of the checked interaction integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// ∫U₁^{N/(N−2)}U₂/|y| against ε₁₂.
    Interaction,
    /// ∫U₁^αU₂^β/|y| against ε₁₂ (symmetric exponents).
    MixedPower,
    /// The λ-derivative interaction against ε₁₂.
    DLambda,
    /// The curvature λ-integral against λ.
    CurvatureDLambda,
    /// The η-derivative interaction against ε₁₂.
    DEta,
    /// The curvature η-integral against the offset |η − η̄| at fixed λ.
    CurvatureDEta,
}

impl LadderKind {
    pub fn name(&self) -> &'static str {
        match self {
            LadderKind::Interaction => "interaction",
            LadderKind::MixedPower => "mixed_power",
            LadderKind::DLambda => "dlambda_interaction",
            LadderKind::CurvatureDLambda => "curvature_dlambda",
            LadderKind::DEta => "deta_interaction",
            LadderKind::CurvatureDEta => "curvature_deta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub lambda: f64,
    /// The abscissa of the fit: ε₁₂, λ or the offset.
    pub x: f64,
    pub value: f64,
    pub leading: Option<f64>,
}

impl LadderRow {
    pub fn ratio(&self) -> Option<f64> {
        self.leading.map(|l| self.value / l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub kind: LadderKind,
    pub dims: SpaceDims,
    pub gamma: Option<f64>,
    pub rows: Vec<LadderRow>,
    pub fit: LogLogFit,
    /// Expected slope and tolerance, or a strict lower bound when `tol` is `None`.
    pub expected_slope: f64,
    pub slope_tol: Option<f64>,
    pub ratio_tol: Option<f64>,
}

impl LadderReport {
    pub fn slope_ok(&self) -> bool {
        match self.slope_tol {
            Some(t) => (self.fit.slope - self.expected_slope).abs() <= t,
            None => self.fit.slope > self.expected_slope,
        }
    }

    /// Leading-term ratio at the last (most asymptotic) rung.
    pub fn last_ratio(&self) -> Option<f64> {
        self.rows.last().and_then(LadderRow::ratio)
    }

    pub fn ratio_ok(&self) -> bool {
        match (self.ratio_tol, self.last_ratio()) {
            (Some(t), Some(r)) => (r - 1.0).abs() <= t,
            (None, _) => true,
            (Some(_), None) => false,
        }
    }

    pub fn passed(&self) -> bool {
        self.slope_ok() && self.ratio_ok()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# check = {}; dims = {}", self.kind.name(), self.dims);
        if let Some(g) = self.gamma {
            let _ = writeln!(out, "# gamma = {g}");
        }
        let cmp = match self.slope_tol {
            Some(t) => format!("{} +- {t}", self.expected_slope),
            None => format!("> {}", self.expected_slope),
        };
        let _ = writeln!(
            out,
            "# slope = {:.6}; expected {cmp}; slope_ok = {}",
            self.fit.slope,
            self.slope_ok()
        );
        if let Some(t) = self.ratio_tol {
            let _ = writeln!(
                out,
                "# last ratio = {}; tolerance {t}; ratio_ok = {}",
                self.last_ratio().map_or("n/a".into(), |r| format!("{r:.6}")),
                self.ratio_ok()
            );
        }
        out.push_str("lambda,x,value,leading,ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{},{}",
                r.lambda,
                r.x,
                r.value,
                r.leading.map_or(String::new(), |v| format!("{v:.12e}")),
                r.ratio().map_or(String::new(), |v| format!("{v:.8}"))
            );
        }
        out
    }
}

/// Two bubbles of scale λ at 0 and e₁.
pub fn unit_pair(dims: SpaceDims, lambda: f64) -> Result<TwoBubbleConfig> {
    let mut e = vec![0.0; dims.h];
    e[0] = 1.0;
    TwoBubbleConfig::new(Bubble::new(dims, vec![0.0; dims.h], lambda)?, Bubble::new(dims, e, lambda)?)
}

/// The default flat-point model used for the curvature ladders.
pub fn default_flat_model(dims: SpaceDims, gamma: f64) -> Result<PerturbativeModel> {
    PerturbativeModel::new(
        dims,
        vec![0.0; dims.h],
        0.0,
        gamma,
        vec![-1.0; dims.k],
        vec![-1.0; dims.h],
        0.5,
        2.0,
        1.0,
    )
}

pub struct LadderSetup {
    pub lambdas: Vec<f64>,
    pub spec: QuadratureSpec,
}

impl LadderSetup {
    pub fn interaction_default() -> Self {
        Self { lambdas: doubling_ladder(10.0, 4), spec: QuadratureSpec::with_rel_tol(1e-9) }
    }

    pub fn curvature_default() -> Self {
        Self { lambdas: doubling_ladder(20.0, 4), spec: QuadratureSpec::with_rel_tol(1e-8) }
    }

    /// λ ∈ {10, …, 80} for the interaction and mixed-power integrals,
    /// {20, …, 160} for the derivative integrals.
    pub fn for_kind(kind: LadderKind) -> Self {
        match kind {
            LadderKind::Interaction | LadderKind::MixedPower => Self::interaction_default(),
            LadderKind::DLambda | LadderKind::DEta => {
                Self { lambdas: doubling_ladder(20.0, 4), ..Self::interaction_default() }
            }
            LadderKind::CurvatureDLambda | LadderKind::CurvatureDEta => Self::curvature_default(),
        }
    }
}

fn fit_rows(rows: &[LadderRow]) -> Result<LogLogFit> {
    let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    loglog_fit(&xs, &ys)
}

/// Evaluates one interaction integral on the λ-ladder with |Δη| = 1 (or at
/// the flat point for the curvature integrals) and fits its order.
pub fn ladder_check(kind: LadderKind, dims: SpaceDims, gamma: Option<f64>, setup: &LadderSetup) -> Result<LadderReport> {
    let spec = &setup.spec;
    let need_gamma = || gamma.ok_or_else(|| Error::param("gamma", "required for the curvature checks"));
    let rows: Vec<LadderRow> = match kind {
        LadderKind::CurvatureDEta => {
            let g = need_gamma()?;
            let model = default_flat_model(dims, g)?;
            let lambda = setup.lambdas[0];
            let offsets = [1e-3, 2e-3, 4e-3];
            offsets
                .par_iter()
                .map(|&t| {
                    let mut eta = model.center.clone();
                    eta[0] += t;
                    let b = Bubble::new(dims, eta, lambda)?;
                    Ok(LadderRow {
                        lambda,
                        x: t,
                        value: curvature_deta(&model, &b, 0, spec)?,
                        leading: Some(curvature_deta_leading(&model, &b, 0)?),
                    })
                })
                .collect::<Result<_>>()?
        }
        LadderKind::CurvatureDLambda => {
            let g = need_gamma()?;
            let model = default_flat_model(dims, g)?;
            setup
                .lambdas
                .par_iter()
                .map(|&l| {
                    let b = Bubble::new(dims, model.center.clone(), l)?;
                    Ok(LadderRow {
                        lambda: l,
                        x: l,
                        value: curvature_dlambda(&model, &b, spec)?,
                        leading: Some(curvature_dlambda_leading(&model, l)?),
                    })
                })
                .collect::<Result<_>>()?
        }
        _ => setup
            .lambdas
            .par_iter()
            .map(|&l| {
                let cfg = unit_pair(dims, l)?;
                let x = cfg.eps12()?;
                let (value, leading) = match kind {
                    LadderKind::Interaction => (interaction_integral(&cfg, spec)?, Some(interaction_leading(&cfg)?)),
                    LadderKind::MixedPower => {
                        let a = dims.crit() / 2.0;
                        (mixed_power_integral(&cfg, a, a, spec)?, None)
                    }
                    LadderKind::DLambda => (dlambda_interaction(&cfg, 0, spec)?, Some(dlambda_leading(&cfg, 0)?)),
                    LadderKind::DEta => (deta_interaction(&cfg, 0, 0, spec)?, Some(deta_leading(&cfg, 0, 0)?)),
                    _ => unreachable!(),
                };
                Ok(LadderRow { lambda: l, x, value, leading })
            })
            .collect::<Result<_>>()?,
    };
    let fit = fit_rows(&rows)?;
    let (expected_slope, slope_tol, ratio_tol) = match kind {
        LadderKind::Interaction => (1.0, Some(0.05), Some(0.05)),
        LadderKind::MixedPower => (1.05, None, None),
        LadderKind::DLambda => (1.0 + 1.0 / (dims.n as f64 - 2.0), Some(0.05), Some(0.10)),
        LadderKind::DEta => (1.0, Some(0.05), Some(0.10)),
        LadderKind::CurvatureDLambda => (-(gamma.unwrap_or(0.0) + 1.0), Some(0.05), Some(0.10)),
        LadderKind::CurvatureDEta => (1.0, Some(0.05), Some(0.05)),
    };
    Ok(LadderReport { kind, dims, gamma, rows, fit, expected_slope, slope_tol, ratio_tol })
}

/// Least-squares D in I(U₁ + U₂) − 2I(U) ≈ −D ε₁₂ (φ ≡ 1) on the ladder,
/// with the largest relative residual of the one-parameter fit.
pub fn fit_interaction_coefficient(dims: SpaceDims, lambdas: &[f64], spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let cfg = unit_pair(dims, l)?;
            // I(U₁+U₂) − I(U₁) − I(U₂) = ⟨U₁,U₂⟩ − κ∫[(U₁+U₂)^q − U₁^q − U₂^q]/|y|.
            let kappa = (dims.n as f64 - 2.0) / (2.0 * (dims.n as f64 - 1.0));
            let q = dims.crit();
            let (u1, u2) = (&cfg.b1, &cfg.b2);
            let pair = dirichlet_pairing(&cfg, spec)?;
            let cross = integrate_bubbles(
                &|s, z| crate::residual::power_excess(u1.eval(s, z), u2.eval(s, z), q) / s,
                &[u1, u2],
                None,
                spec,
            )?;
            Ok((cfg.eps12()?, -(pair - kappa * cross)))
        })
        .collect::<Result<_>>()?;
    let num: f64 = pts.iter().map(|(e, v)| e * v).sum();
    let den: f64 = pts.iter().map(|(e, _)| e * e).sum();
    if !(den > 0.0) {
        return Err(Error::Degenerate("empty ladder".into()));
    }
    let d = num / den;
    let resid = pts.iter().map(|(e, v)| ((v - d * e) / v).abs()).fold(0.0, f64::max);
    Ok((d, resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConstantModel;

    fn d(n: usize, k: usize, h: usize) -> SpaceDims {
        SpaceDims::new(n, k, h).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_rel_tol(1e-10)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn interaction_dilation_invariance() {
        let dims = d(4, 3, 1);
        let cfg = TwoBubbleConfig::new(
            Bubble::new(dims, vec![0.0], 3.0).unwrap(),
            Bubble::new(dims, vec![0.7], 5.0).unwrap(),
        )
        .unwrap();
        let scaled = TwoBubbleConfig::new(cfg.b1.dilate(2.0), cfg.b2.dilate(2.0)).unwrap();
        let a = interaction_integral(&cfg, &spec()).unwrap();
        let b = interaction_integral(&scaled, &spec()).unwrap();
        assert!(rel(a, b) < 1e-8, "{a} {b}");
        let a = cfg.b1.lambda * dlambda_interaction(&cfg, 0, &spec()).unwrap();
        let b = scaled.b1.lambda * dlambda_interaction(&scaled, 0, &spec()).unwrap();
        assert!(rel(a, b) < 1e-8, "{a} {b}");
    }

    #[test]
    fn interaction_translation_invariance() {
        let dims = d(4, 2, 2);
        let mk = |o: f64| {
            TwoBubbleConfig::new(
                Bubble::new(dims, vec![o, 0.3], 4.0).unwrap(),
                Bubble::new(dims, vec![o + 0.6, -0.5], 6.0).unwrap(),
            )
            .unwrap()
        };
        let s = QuadratureSpec::with_rel_tol(1e-9);
        let a = interaction_integral(&mk(0.0), &s).unwrap();
        let b = interaction_integral(&mk(2.5), &s).unwrap();
        assert!(rel(a, b) < 1e-8, "{a} {b}");
    }

    #[test]
    fn swapping_bubbles_is_nearly_symmetric_far_apart() {
        let dims = d(5, 4, 1);
        let cfg = TwoBubbleConfig::new(
            Bubble::new(dims, vec![0.0], 20.0).unwrap(),
            Bubble::new(dims, vec![1.0], 40.0).unwrap(),
        )
        .unwrap();
        assert!(cfg.eps12().unwrap() < 1e-4);
        let a = interaction_integral(&cfg, &spec()).unwrap();
        let b = interaction_integral(&cfg.swapped(), &spec()).unwrap();
        assert!(rel(a, b) < 5e-3, "{a} {b}");
    }

    #[test]
    fn leading_constant_of_interaction() {
        let dims = d(5, 4, 1);
        let cfg = unit_pair(dims, 50.0).unwrap();
        assert!(cfg.eps12().unwrap() < 1e-4);
        let r = interaction_integral(&cfg, &spec()).unwrap() / interaction_leading(&cfg).unwrap();
        assert!((r - 1.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn mixed_power_domain_and_coincident_centers() {
        let dims = d(3, 2, 1);
        let cfg = unit_pair(dims, 5.0).unwrap();
        assert!(matches!(mixed_power_integral(&cfg, 1.0, 3.0, &spec()), Err(Error::Domain(_))));
        assert!(matches!(mixed_power_integral(&cfg, 2.5, 1.0, &spec()), Err(Error::Domain(_))));
        let a = dims.crit() / 2.0;
        assert!(mixed_power_integral(&cfg, a, a, &spec()).unwrap() > 0.0);
        let same = TwoBubbleConfig::new(
            Bubble::new(dims, vec![0.0], 2.0).unwrap(),
            Bubble::new(dims, vec![0.0], 5.0).unwrap(),
        )
        .unwrap();
        let v = mixed_power_integral(&same, 2.5, 1.5, &spec()).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn dlambda_is_negative_and_near_leading() {
        let dims = d(5, 4, 1);
        let cfg = unit_pair(dims, 50.0).unwrap();
        let v = dlambda_interaction(&cfg, 0, &spec()).unwrap();
        assert!(v < 0.0);
        let r = v / dlambda_leading(&cfg, 0).unwrap();
        assert!((r - 1.0).abs() < 0.10, "{r}");
    }

    #[test]
    fn deta_antisymmetry() {
        let dims = d(4, 3, 1);
        let cfg = unit_pair(dims, 8.0).unwrap();
        let a = deta_interaction(&cfg, 0, 0, &spec()).unwrap();
        let b = deta_interaction(&cfg, 1, 0, &spec()).unwrap();
        assert!(rel(a, -b) < 1e-8, "{a} {b}");
        let l = deta_leading(&cfg, 0, 0).unwrap();
        assert!(a.signum() == l.signum());
    }

    #[test]
    fn constant_curvature_gives_no_lambda_force() {
        let dims = d(4, 3, 1);
        let b = Bubble::new(dims, vec![0.2], 3.0).unwrap();
        let s = spec().on_magnitude();
        let v = integrate_bubbles(&|s, z| b.eval_pstar(s, z) * b.d_lambda(s, z) / s, &[&b], None, &s).unwrap();
        let norm = integrate_bubbles(&|s, z| b.eval(s, z).powf(dims.crit()) / s, &[&b], None, &s).unwrap();
        assert!(v.abs() < 1e-6 * norm / b.lambda, "{v}");
        let c = ConstantModel::new(dims, 2.0);
        let w = energy_dlambda(&c, &[0.5f64.powf(dims.p())], &[b.clone()], 0, &s).unwrap();
        assert!(w.abs() < 1e-6 * norm);
    }

    #[test]
    fn curvature_deta_vanishes_at_flat_point() {
        let dims = d(4, 3, 1);
        let m = default_flat_model(dims, 1.5).unwrap();
        let b = Bubble::new(dims, vec![0.0], 20.0).unwrap();
        let v = curvature_deta(&m, &b, 0, &QuadratureSpec::with_rel_tol(1e-8)).unwrap();
        let scale = curvature_dlambda(&m, &b, &QuadratureSpec::with_rel_tol(1e-8)).unwrap().abs() * b.lambda;
        assert!(v.abs() < 1e-8 * scale, "{v} vs {scale}");
    }

    #[test]
    fn curvature_dlambda_matches_leading_term() {
        let dims = d(4, 3, 1);
        let m = default_flat_model(dims, 1.5).unwrap();
        let b = Bubble::new(dims, vec![0.0], 160.0).unwrap();
        let v = curvature_dlambda(&m, &b, &QuadratureSpec::with_rel_tol(1e-8)).unwrap();
        let r = v / curvature_dlambda_leading(&m, 160.0).unwrap();
        assert!((r - 1.0).abs() < 0.10, "{r}");
    }

    #[test]
    fn curvature_frames_are_checked() {
        let dims = d(5, 2, 3);
        let m = PerturbativeModel::new(dims, vec![0.0; 3], 0.0, 2.0, vec![-1.0; 2], vec![-1.0; 3], 0.5, 0.5, 1.0)
            .unwrap();
        let b = Bubble::new(dims, vec![0.0; 3], 5.0).unwrap();
        assert!(matches!(curvature_dlambda(&m, &b, &spec()), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn pohozaev_zero_cases() {
        let dims = d(4, 3, 1);
        let b = Bubble::new(dims, vec![0.1], 4.0).unwrap();
        let c = ConstantModel::new(dims, 1.0);
        assert_eq!(pohozaev_diagnostic(&c, &[1.0], &[b.clone()], &spec()).unwrap(), 0.0);
        let m = default_flat_model(dims, 1.5).unwrap().with_epsilon(0.0);
        assert_eq!(pohozaev_diagnostic(&m, &[1.0], &[b], &spec()).unwrap(), 0.0);
    }

    #[test]
    fn exact_lambda_derivative_matches_finite_difference_of_energy() {
        let dims = d(4, 3, 1);
        let m = default_flat_model(dims, 1.5).unwrap().with_epsilon(0.05);
        let s = QuadratureSpec::with_rel_tol(1e-11);
        let mk = |l: f64| {
            vec![Bubble::new(dims, vec![0.0], l).unwrap(), Bubble::new(dims, vec![1.2], 6.0).unwrap()]
        };
        let c = [1.0, 1.0];
        let l = 5.0;
        let exact = energy_dlambda(&m, &c, &mk(l), 0, &s).unwrap();
        let h = 1e-3 * l;
        let e = |l: f64| crate::residual::energy_of(&m, &c, &mk(l), &s).unwrap();
        let fd = (e(l + h) - e(l - h)) / (2.0 * h);
        assert!(rel(exact, fd) < 1e-4, "{exact} {fd}");
    }
}
