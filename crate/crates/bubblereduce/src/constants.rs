//! The interaction constants: closed forms, quadratures and a cross-check table.
//!
//! Notation: with `D = (1+|y|)² + |z|²`,
//! `Θ = ∫ 1/(|y| D^{N/2})`, `A = ∫ U_{0,1}^{2(N−1)/(N−2)}/|y|`,
//! `b₁ = (N/2)∫(1−|x|²)/(|y| D^{(N+2)/2})`,
//! `b₂ = π₁ = ∫|y|^γ(1−|x|²)/(|y| Dᴺ)`, `b₃ = π₂ = ∫|z|^γ(1−|x|²)/(|y| Dᴺ)`,
//! `b₄ = C_{N,k}(N−2)γ/h ∫|z|^γ/(|y| Dᴺ)`.
//! Every two-variable integral factors after `t = (1+s)τ` into
//! `∫ s^m (1+s)^{−n} ds · ∫ τ^{a−1}(1+τ²)^{−n'} dτ`.

use crate::error::{Error, Result};
use crate::model::{c_nk, SpaceDims};
use crate::quadrature::{beta, beta_integral_s, beta_integral_t, integrate_cyl, sphere_measure, Compactification, QuadratureSpec};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

/// Where a stored value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entry {
    pub value: f64,
    pub closed: Option<f64>,
    pub quadrature: Option<f64>,
    pub provenance: Provenance,
}

impl Entry {
    fn both(closed: f64, quadrature: f64) -> Self {
        Self { value: closed, closed: Some(closed), quadrature: Some(quadrature), provenance: Provenance::Both }
    }

    /// Relative gap between the two routes, when both exist.
    pub fn discrepancy(&self) -> Option<f64> {
        match (self.closed, self.quadrature) {
            (Some(a), Some(b)) => Some(rel_diff(a, b)),
            _ => None,
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

fn omega(dims: SpaceDims) -> f64 {
    sphere_measure(dims.k) * sphere_measure(dims.h)
}

fn check_gamma(gamma: f64, upper: f64, what: &str) -> Result<()> {
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::Domain(format!("{what} needs 0 < gamma < {upper}, got {gamma}")));
    }
    Ok(())
}

/// Mean of |θ₁|^γ over the unit sphere S^{h−1}.
pub fn axis_moment(h: usize, gamma: f64) -> f64 {
    if h == 1 {
        return 1.0;
    }
    let h = h as f64;
    beta((gamma + 1.0) / 2.0, (h - 1.0) / 2.0) / beta(0.5, (h - 1.0) / 2.0)
}

// ---------------------------------------------------------------- closed forms

pub fn theta_closed(dims: SpaceDims) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    Ok(omega(dims) * beta_integral_s(k - 2.0, n - h)? * beta_integral_t(h, n / 2.0)?)
}

pub fn a_closed(dims: SpaceDims) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    Ok(c_nk(dims) * omega(dims) * beta_integral_s(k - 2.0, 2.0 * n - 2.0 - h)? * beta_integral_t(h, n - 1.0)?)
}

/// The closed form of b₁ without the factor ω_kω_h.
pub fn b1_closed_reduced(dims: SpaceDims) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    let pre = -(k * k - 2.0 + k * (h - 1.0) + h) * n / (2.0 * k * (k + 1.0));
    Ok(pre * beta_integral_s(k - 2.0, n - h)? * beta_integral_t(h, (n + 2.0) / 2.0)?)
}

pub fn b1_closed(dims: SpaceDims) -> Result<f64> {
    Ok(omega(dims) * b1_closed_reduced(dims)?)
}

/// b₂ in closed form: −2γ(h + 2k − 1)ω_kω_h/((2N−h−1)(2N−h−2)) · ∫s^{γ+k−2}/(1+s)^{2N−h−2} · ∫t^{h−1}/(1+t²)ᴺ.
pub fn b2_closed(dims: SpaceDims, gamma: f64) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    check_gamma(gamma, n - 1.0, "b2")?;
    let pre = -2.0 * gamma * (h + 2.0 * k - 1.0) / ((2.0 * n - h - 1.0) * (2.0 * n - h - 2.0));
    Ok(pre * omega(dims) * beta_integral_s(gamma + k - 2.0, 2.0 * n - h - 2.0)? * beta_integral_t(h, n)?)
}

pub fn b3_closed(dims: SpaceDims, gamma: f64) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    check_gamma(gamma, n - 1.0, "b3")?;
    let pre = -2.0 * gamma / (n - gamma + k - 2.0);
    Ok(pre * omega(dims) * beta_integral_s(k - 2.0, n - gamma + k - 2.0)? * beta_integral_t(gamma + h, n)?)
}

/// ∫|z|^γ/(|y| Dᴺ) in closed form.
pub fn z_moment_closed(dims: SpaceDims, gamma: f64) -> Result<f64> {
    let (n, k, h) = (dims.n as f64, dims.k as f64, dims.h as f64);
    Ok(omega(dims) * beta_integral_s(k - 2.0, 2.0 * n - gamma - h)? * beta_integral_t(gamma + h, n)?)
}

fn b4_prefactor(dims: SpaceDims, gamma: f64) -> f64 {
    c_nk(dims) * (dims.n as f64 - 2.0) * gamma / dims.h as f64
}

pub fn b4_closed(dims: SpaceDims, gamma: f64) -> Result<f64> {
    check_gamma(gamma, dims.n as f64 + 1.0, "b4")?;
    Ok(b4_prefactor(dims, gamma) * z_moment_closed(dims, gamma)?)
}

// ---------------------------------------------------------------- quadratures

fn radial_integral(dims: SpaceDims, spec: &QuadratureSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<f64> {
    let g = |s: f64, z: &[f64]| f(s, z.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(integrate_cyl(&g, dims, &[], spec)?.value)
}

fn den(s: f64, t: f64) -> f64 {
    (1.0 + s) * (1.0 + s) + t * t
}

pub fn theta_quad(dims: SpaceDims, spec: &QuadratureSpec) -> Result<f64> {
    let e = -(dims.n as f64) / 2.0;
    radial_integral(dims, spec, |s, t| den(s, t).powf(e) / s)
}

pub fn a_quad(dims: SpaceDims, spec: &QuadratureSpec) -> Result<f64> {
    let u = crate::model::Bubble::new(dims, vec![0.0; dims.h], 1.0)?;
    let q = dims.crit();
    radial_integral(dims, spec, |s, t| {
        let mut z = vec![0.0; dims.h];
        z[0] = t;
        u.eval(s, &z).powf(q) / s
    })
}

pub fn b1_quad(dims: SpaceDims, spec: &QuadratureSpec) -> Result<f64> {
    let n = dims.n as f64;
    let e = -(n + 2.0) / 2.0;
    Ok(n / 2.0 * radial_integral(dims, spec, |s, t| (1.0 - s * s - t * t) * den(s, t).powf(e) / s)?)
}

/// The integrands of b₂, b₃ decay like |x|^{−N−κ} with κ = N − 1 − γ.
fn slow_tail(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> QuadratureSpec {
    let kappa = dims.n as f64 - 1.0 - gamma;
    if kappa < 1.0 {
        QuadratureSpec { compactification: Compactification::Power { kappa }, ..*spec }
    } else {
        *spec
    }
}

pub fn b2_quad(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_gamma(gamma, dims.n as f64 - 1.0, "b2")?;
    let e = -(dims.n as f64);
    radial_integral(dims, &slow_tail(dims, gamma, spec), |s, t| s.powf(gamma - 1.0) * (1.0 - s * s - t * t) * den(s, t).powf(e))
}

pub fn b3_quad(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_gamma(gamma, dims.n as f64 - 1.0, "b3")?;
    let e = -(dims.n as f64);
    radial_integral(dims, &slow_tail(dims, gamma, spec), |s, t| t.powf(gamma) * (1.0 - s * s - t * t) * den(s, t).powf(e) / s)
}

pub fn b4_quad(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_gamma(gamma, dims.n as f64 + 1.0, "b4")?;
    let e = -(dims.n as f64);
    Ok(b4_prefactor(dims, gamma) * radial_integral(dims, spec, |s, t| t.powf(gamma) * den(s, t).powf(e) / s)?)
}

/// (π₁, π₂) by quadrature of their defining integrals.
pub fn pi_quad(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    Ok((b2_quad(dims, gamma, spec)?, b3_quad(dims, gamma, spec)?))
}

/// g(π₁, π₂, γ, ξ, a) = (π₁/k)Σξ + (π₂/h)Σa.
pub fn g_value(dims: SpaceDims, pi1: f64, pi2: f64, xi: &[f64], a: &[f64]) -> f64 {
    pi1 / dims.k as f64 * xi.iter().sum::<f64>() + pi2 / dims.h as f64 * a.iter().sum::<f64>()
}

/// (π₁, π₂, g) with π by quadrature.
pub fn pi_and_g(dims: SpaceDims, gamma: f64, xi: &[f64], a: &[f64], spec: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    let n = dims.n as f64;
    if !(gamma > 1.0 && gamma < n - 2.0) {
        return Err(Error::Domain(format!("pi1, pi2 are used for 1 < gamma < N - 2 = {}, got {gamma}", n - 2.0)));
    }
    let (p1, p2) = pi_quad(dims, gamma, spec)?;
    Ok((p1, p2, g_value(dims, p1, p2, xi, a)))
}

// ---------------------------------------------------------------- A1, A2

/// Pieces of ∂U/∂λ for the bubble centered at z = 0:
/// returns (w, ∂ₛw, ∂ₜw) with t = |z|.
fn dlambda_parts(dims: SpaceDims, lambda: f64, s: f64, t: f64) -> (f64, f64, f64) {
    let p = dims.p();
    let l = lambda;
    let d = (1.0 + l * s).powi(2) + l * l * t * t;
    let g = 1.0 - l * l * (s * s + t * t);
    let c = p * dims.amplitude() * l.powf(p - 1.0);
    let dp1 = d.powf(-p - 1.0);
    let w = c * g * dp1;
    let ws = c * (-2.0 * l * l * s * dp1 - (p + 1.0) * g * dp1 / d * 2.0 * l * (1.0 + l * s));
    let wt = c * (-2.0 * l * l * t * dp1 - (p + 1.0) * g * dp1 / d * 2.0 * l * l * t);
    (w, ws, wt)
}

/// Which identity is used to evaluate the norms of the kernel elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRoute {
    /// ∫|∇w|².
    Gradient,
    /// N/(N−2) ∫ U^{2/(N−2)} w²/|y|, from −Δw = N/(N−2) U^{2/(N−2)} w/|y|.
    Linearized,
}

/// λ²‖∂U/∂λ‖² and λ^{−2}‖∂U/∂η_l‖² for one bubble of scale λ.
pub fn inner_product_constants_at(
    dims: SpaceDims,
    lambda: f64,
    route: NormRoute,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", "must be positive"));
    }
    let p = dims.p();
    let ps = dims.pstar();
    let h = dims.h as f64;
    let l = lambda;
    let amp = dims.amplitude();
    let c = crate::quadrature::ZCenter::new(vec![0.0; dims.h], 1.0 / lambda);
    let run = |f: &(dyn Fn(f64, f64) -> f64 + Sync)| -> Result<f64> {
        let g = |s: f64, z: &[f64]| f(s, z.iter().map(|x| x * x).sum::<f64>().sqrt());
        Ok(integrate_cyl(&g, dims, std::slice::from_ref(&c), spec)?.value)
    };
    let u = |s: f64, t: f64| amp * (l / ((1.0 + l * s).powi(2) + l * l * t * t)).powf(p);
    let a1 = match route {
        NormRoute::Gradient => run(&|s, t| {
            let (_, ws, wt) = dlambda_parts(dims, l, s, t);
            ws * ws + wt * wt
        })?,
        NormRoute::Linearized => run(&|s, t| {
            let (w, _, _) = dlambda_parts(dims, l, s, t);
            ps * u(s, t).powf(ps - 1.0) * w * w / s
        })?,
    };
    // m = ∂U/∂η_l = 2pλ² z_l F with F = U/D; z_l² averages to t²/h over the z-sphere.
    let a2 = match route {
        NormRoute::Gradient => run(&|s, t| {
            let d = (1.0 + l * s).powi(2) + l * l * t * t;
            let f = u(s, t) / d;
            let fs = -2.0 * (p + 1.0) * l * (1.0 + l * s) * f / d;
            let cz = -2.0 * (p + 1.0) * l * l * f / d;
            let k = 2.0 * p * l * l;
            k * k * ((t * t / h) * (fs * fs + cz * cz * t * t + 2.0 * cz * f) + f * f)
        })?,
        NormRoute::Linearized => run(&|s, t| {
            let d = (1.0 + l * s).powi(2) + l * l * t * t;
            let uu = u(s, t);
            let m2 = (2.0 * p * l * l * uu / d).powi(2) * t * t / h;
            ps * uu.powf(ps - 1.0) * m2 / s
        })?,
    };
    Ok((l * l * a1, a2 / (l * l)))
}

/// (A₁, A₂) at λ = 1 via the gradient route.
pub fn inner_product_constants(dims: SpaceDims, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    inner_product_constants_at(dims, 1.0, NormRoute::Gradient, spec)
}

// ---------------------------------------------------------------- the table of constants

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionConstants {
    pub dims: SpaceDims,
    pub gamma: f64,
    pub a: Entry,
    pub theta: Entry,
    pub pi1: Entry,
    pub pi2: Entry,
    pub b1: Entry,
    pub b2: Entry,
    pub b3: Entry,
    pub b4: Entry,
    pub a1: Entry,
    pub a2: Entry,
    /// Coefficient of −ε₁₂ in the two-bubble energy, C_{N,k}Θ.
    pub d: Entry,
}

impl ExpansionConstants {
    pub fn compute(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<Self> {
        let theta = Entry::both(theta_closed(dims)?, theta_quad(dims, spec)?);
        let b2c = b2_closed(dims, gamma)?;
        let b3c = b3_closed(dims, gamma)?;
        let (p1, p2) = pi_quad(dims, gamma, spec)?;
        let (a1g, a2g) = inner_product_constants_at(dims, 1.0, NormRoute::Gradient, spec)?;
        let (a1l, a2l) = inner_product_constants_at(dims, 1.0, NormRoute::Linearized, spec)?;
        let c = c_nk(dims);
        Ok(Self {
            dims,
            gamma,
            a: Entry::both(a_closed(dims)?, a_quad(dims, spec)?),
            theta,
            pi1: Entry { value: p1, closed: Some(b2c), quadrature: Some(p1), provenance: Provenance::Both },
            pi2: Entry { value: p2, closed: Some(b3c), quadrature: Some(p2), provenance: Provenance::Both },
            b1: Entry::both(b1_closed(dims)?, b1_quad(dims, spec)?),
            b2: Entry::both(b2c, p1),
            b3: Entry::both(b3c, p2),
            b4: Entry::both(b4_closed(dims, gamma)?, b4_quad(dims, gamma, spec)?),
            a1: Entry { value: a1g, closed: Some(a1l), quadrature: Some(a1g), provenance: Provenance::Quadrature },
            a2: Entry { value: a2g, closed: Some(a2l), quadrature: Some(a2g), provenance: Provenance::Quadrature },
            d: Entry::both(c * theta.closed.unwrap_or(theta.value), c * theta.quadrature.unwrap_or(theta.value)),
        })
    }

    /// Records a fitted D next to the closed form.
    pub fn with_fitted_d(mut self, fitted: f64) -> Self {
        self.d = Entry { value: self.d.value, closed: self.d.closed, quadrature: Some(fitted), provenance: Provenance::Both };
        self
    }

    /// (name, value, expected sign, sign holds).
    pub fn sign_ledger(&self) -> Vec<(&'static str, f64, i8, bool)> {
        let neg = [("b1", self.b1.value), ("b2", self.b2.value), ("b3", self.b3.value), ("pi1", self.pi1.value), ("pi2", self.pi2.value)];
        let pos = [
            ("b4", self.b4.value),
            ("A", self.a.value),
            ("Theta", self.theta.value),
            ("A1", self.a1.value),
            ("A2", self.a2.value),
            ("D", self.d.value),
        ];
        neg.iter()
            .map(|&(n, v)| (n, v, -1, v < 0.0))
            .chain(pos.iter().map(|&(n, v)| (n, v, 1, v > 0.0)))
            .collect()
    }
}

type CacheKey = (SpaceDims, u64, u64, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, ExpansionConstants>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, ExpansionConstants>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// [`ExpansionConstants::compute`] memoized on the exact (dims, γ, tolerances).
pub fn expansion_constants(dims: SpaceDims, gamma: f64, spec: &QuadratureSpec) -> Result<ExpansionConstants> {
    let key = (dims, gamma.to_bits(), spec.rel_tol.to_bits(), spec.abs_tol.to_bits());
    if let Some(c) = cache().lock().expect("constants cache poisoned").get(&key) {
        return Ok(c.clone());
    }
    let c = ExpansionConstants::compute(dims, gamma, spec)?;
    cache().lock().expect("constants cache poisoned").insert(key, c.clone());
    Ok(c)
}

// ---------------------------------------------------------------- cross-check table

pub const CROSS_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckRow {
    pub dims: SpaceDims,
    pub gamma: f64,
    pub name: String,
    pub closed_form: Option<f64>,
    pub quadrature: Option<f64>,
    pub rel_diff: Option<f64>,
    pub sign_ok: bool,
    pub error: Option<String>,
}

impl CrossCheckRow {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.sign_ok && self.rel_diff.map_or(true, |d| d <= CROSS_CHECK_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    pub rows: Vec<CrossCheckRow>,
}

impl CrossCheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CrossCheckRow::passed)
    }

    pub fn max_rel_diff(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.rel_diff).fold(0.0, f64::max)
    }

    pub fn signs_ok(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_some() || r.sign_ok)
    }

    pub fn failures(&self) -> Vec<&CrossCheckRow> {
        self.rows.iter().filter(|r| !r.passed()).collect()
    }

    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.15e}"));
        let mut out = String::new();
        let _ = writeln!(out, "# C_N in the lambda-derivative interaction is taken to be C_N,k = [(N-2)(k-1)]^(N-1)");
        let _ = writeln!(out, "# pi1, pi2: closed_form column holds the b2, b3 closed forms of the same integrals");
        let _ = writeln!(out, "# A1, A2: closed_form column holds the linearized-identity route, quadrature the gradient route");
        let _ = writeln!(out, "# D = C_N,k * Theta");
        let _ = writeln!(out, "# max_rel_diff = {:.3e}; tolerance = {CROSS_CHECK_TOL:e}", self.max_rel_diff());
        let _ = writeln!(out, "# signs_ok = {}; passed = {}", self.signs_ok(), self.passed());
        out.push_str("name,closed_form,quadrature,rel_diff,sign_ok,dims,gamma,error\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},\"{}\",{},{}",
                r.name,
                fmt(r.closed_form),
                fmt(r.quadrature),
                r.rel_diff.map_or(String::new(), |x| format!("{x:.3e}")),
                r.sign_ok,
                r.dims,
                r.gamma,
                r.error.as_deref().unwrap_or("").replace(',', ";")
            );
        }
        out
    }
}

/// Options for [`cross_check_table`].
#[derive(Debug, Clone, Default)]
pub struct CrossCheckOptions {
    pub spec: QuadratureSpec,
    /// Multiplies the closed form of the named constant; for exercising the failure path.
    pub corrupt: Option<(String, f64)>,
}

impl CrossCheckOptions {
    pub fn new(spec: QuadratureSpec) -> Self {
        Self { spec, corrupt: None }
    }
}

/// Default γ values for the table: three inside (0, N−2) and three in (N−2, N−1).
pub fn default_gammas(dims: SpaceDims) -> Vec<f64> {
    let m = dims.n as f64 - 2.0;
    vec![0.25 * m, 0.5 * m, 0.75 * m, m + 0.25, m + 0.5, m + 0.75]
}

pub fn default_dims_grid() -> Vec<SpaceDims> {
    [(3, 2, 1), (4, 2, 2), (4, 3, 1), (5, 3, 2)]
        .iter()
        .map(|&(n, k, h)| SpaceDims::new(n, k, h).expect("valid default dimensions"))
        .collect()
}

fn cell_rows(dims: SpaceDims, gamma: f64, opts: &CrossCheckOptions) -> Vec<CrossCheckRow> {
    let err_row = |name: &str, e: &Error| CrossCheckRow {
        dims,
        gamma,
        name: name.to_string(),
        closed_form: None,
        quadrature: None,
        rel_diff: None,
        sign_ok: false,
        error: Some(e.to_string()),
    };
    let c = match ExpansionConstants::compute(dims, gamma, &opts.spec) {
        Ok(c) => c,
        Err(e) => return vec![err_row("all", &e)],
    };
    let signs: HashMap<&str, bool> = c.sign_ledger().into_iter().map(|(n, _, _, ok)| (n, ok)).collect();
    let entries = [
        ("A", c.a),
        ("Theta", c.theta),
        ("b1", c.b1),
        ("b2", c.b2),
        ("b3", c.b3),
        ("b4", c.b4),
        ("pi1", c.pi1),
        ("pi2", c.pi2),
        ("A1", c.a1),
        ("A2", c.a2),
        ("D", c.d),
    ];
    entries
        .iter()
        .map(|(name, e)| {
            let mut closed = e.closed;
            if let Some((target, factor)) = &opts.corrupt {
                if target == name {
                    closed = closed.map(|v| v * factor);
                }
            }
            let rel = match (closed, e.quadrature) {
                (Some(a), Some(b)) => Some(rel_diff(a, b)),
                _ => None,
            };
            CrossCheckRow {
                dims,
                gamma,
                name: name.to_string(),
                closed_form: closed,
                quadrature: e.quadrature,
                rel_diff: rel,
                sign_ok: signs.get(name).copied().unwrap_or(true),
                error: None,
            }
        })
        .collect()
}

/// Every constant both ways on the grid; cells are computed in parallel and
/// errors are recorded per cell.
pub fn cross_check_table(dims_grid: &[SpaceDims], gamma_grid: &[f64], opts: &CrossCheckOptions) -> CrossCheckReport {
    let cells: Vec<(SpaceDims, f64)> =
        dims_grid.iter().flat_map(|&d| gamma_grid.iter().map(move |&g| (d, g))).collect();
    let rows = cells.par_iter().map(|&(d, g)| cell_rows(d, g, opts)).collect::<Vec<_>>().concat();
    CrossCheckReport { rows }
}

/// The table over each dims' own default γ grid.
pub fn default_cross_check(opts: &CrossCheckOptions) -> CrossCheckReport {
    let cells: Vec<(SpaceDims, f64)> = default_dims_grid()
        .into_iter()
        .flat_map(|d| default_gammas(d).into_iter().map(move |g| (d, g)))
        .collect();
    let rows = cells.par_iter().map(|&(d, g)| cell_rows(d, g, opts)).collect::<Vec<_>>().concat();
    CrossCheckReport { rows }
}
