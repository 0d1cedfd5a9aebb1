//! The finite-dimensional reduced problem for two concentration points.
//!
//! At the leading order the λ-equations of two bubbles in a flat
//! perturbative landscape become, after λ_j = t_j L_ε^{1/γ_j},
//! `f_j(t) = t_j^{−γ_j} − c_j (t₁t₂)^{−(N−2)/2} = 0`.

mod minimize;

pub use minimize::{nelder_mead, NelderMeadOptions, NelderMeadResult};

use crate::constants::{axis_moment, b1_closed, pi_and_g};
use crate::error::{Error, Result};
use crate::model::{Bubble, MaxPointModel, PerturbativeLandscape, PerturbativeModel, SpaceDims};
use crate::quadrature::{dist, QuadratureSpec};
use crate::residual::{energy_of, ConcentrationAnsatz};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// L_ε = ε^{−γ₁γ₂/((N−2)(γ₁+γ₂)/2 − γ₁γ₂)}.
pub fn l_epsilon(gamma1: f64, gamma2: f64, n: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    Ok(epsilon.powf(-l_epsilon_exponent(gamma1, gamma2, n)?))
}

/// The exponent e in L_ε = ε^{−e}.
pub fn l_epsilon_exponent(gamma1: f64, gamma2: f64, n: usize) -> Result<f64> {
    let p = (n as f64 - 2.0) / 2.0;
    let den = p * (gamma1 + gamma2) - gamma1 * gamma2;
    if !(den > 0.0) {
        return Err(Error::Domain(format!(
            "(N-2)(gamma1+gamma2)/2 - gamma1 gamma2 = {den} must be positive"
        )));
    }
    Ok(gamma1 * gamma2 / den)
}

/// The scale L₁ = s^{(N−2)γ₂/(γ₁γ₂ − (γ₁+γ₂)(N−2)/2)} of the first bubble
/// for maxima at separation s; L₂ swaps γ₁ and γ₂.
pub fn l_separation(gamma1: f64, gamma2: f64, n: usize, s: f64) -> Result<(f64, f64)> {
    let (e1, e2) = l_separation_exponents(gamma1, gamma2, n)?;
    if !(s > 0.0) {
        return Err(Error::param("separation", "must be positive"));
    }
    Ok((s.powf(e1), s.powf(e2)))
}

pub fn l_separation_exponents(gamma1: f64, gamma2: f64, n: usize) -> Result<(f64, f64)> {
    let m = n as f64 - 2.0;
    let den = gamma1 * gamma2 - (gamma1 + gamma2) * m / 2.0;
    if !(den > 0.0) {
        return Err(Error::Domain(format!(
            "gamma1 gamma2 - (gamma1+gamma2)(N-2)/2 = {den} must be positive"
        )));
    }
    Ok((m * gamma2 / den, m * gamma1 / den))
}

/// t_j^{−γ_j} − c_j(t₁t₂)^{−(N−2)/2} = 0 on the box [m₁, m₂]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedSystem {
    pub gamma1: f64,
    pub gamma2: f64,
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl ReducedSystem {
    /// A system with the box [t_min/100, 100 t_max] around the root.
    pub fn new(gamma1: f64, gamma2: f64, n: usize, c1: f64, c2: f64) -> Result<Self> {
        let mut s = Self { gamma1, gamma2, n, c1, c2, m1: 1.0, m2: 1.0 };
        s.validate_coefficients()?;
        let (t1, t2) = s.log_linear_root()?;
        s.m1 = t1.min(t2) / 100.0;
        s.m2 = t1.max(t2) * 100.0;
        Ok(s)
    }

    pub fn with_box(self, m1: f64, m2: f64) -> Result<Self> {
        if !(m1 > 0.0 && m2 > m1) {
            return Err(Error::param("box", "need 0 < m1 < m2"));
        }
        Ok(Self { m1, m2, ..self })
    }

    fn validate_coefficients(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(Error::Admissibility(format!(
                "c1, c2 must be positive (g > 0 at each point); got ({}, {})",
                self.c1, self.c2
            )));
        }
        l_epsilon_exponent(self.gamma1, self.gamma2, self.n)?;
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) {
            return Err(Error::param("gamma", "must be positive"));
        }
        Ok(())
    }

    pub fn p(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// In log variables the system is linear: (p−γ₁)u₁ + pu₂ = ln c₁, pu₁ + (p−γ₂)u₂ = ln c₂.
    fn log_linear_root(&self) -> Result<(f64, f64)> {
        let p = self.p();
        let (a, b, c, d) = (p - self.gamma1, p, p, p - self.gamma2);
        let det = a * d - b * c;
        if det == 0.0 {
            return Err(Error::Degenerate("singular reduced system".into()));
        }
        let (r1, r2) = (self.c1.ln(), self.c2.ln());
        Ok((((d * r1 - b * r2) / det).exp(), ((a * r2 - c * r1) / det).exp()))
    }

    /// Both roots of the symmetric closed form t = c^{1/(N−2−γ)}, when γ₁ = γ₂ and c₁ = c₂.
    pub fn symmetric_root(&self) -> Option<f64> {
        if self.gamma1 == self.gamma2 && self.c1 == self.c2 {
            Some(self.c1.powf(1.0 / (self.n as f64 - 2.0 - self.gamma1)))
        } else {
            None
        }
    }
}

pub fn reduced_residual(sys: &ReducedSystem, t1: f64, t2: f64) -> Result<(f64, f64)> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got ({t1}, {t2})")));
    }
    Ok(residual_unchecked(sys, t1, t2))
}

fn residual_unchecked(sys: &ReducedSystem, t1: f64, t2: f64) -> (f64, f64) {
    let m = (t1 * t2).powf(-sys.p());
    (t1.powf(-sys.gamma1) - sys.c1 * m, t2.powf(-sys.gamma2) - sys.c2 * m)
}

/// Sup-norm of the residual relative to max(1, t₁^{−γ₁}, t₂^{−γ₂}).
fn scaled_sup(sys: &ReducedSystem, t1: f64, t2: f64, r: (f64, f64)) -> f64 {
    let scale = 1f64.max(t1.powf(-sys.gamma1)).max(t2.powf(-sys.gamma2));
    r.0.abs().max(r.1.abs()) / scale
}

/// rⱼ = fⱼ tⱼ^{γⱼ} = 1 − cⱼ tⱼ^{γⱼ}(t₁t₂)^{−p}, invariant under the decay of
/// both fⱼ as t → ∞.
fn relative_residual(sys: &ReducedSystem, u1: f64, u2: f64) -> (f64, f64) {
    let p = sys.p();
    let e1 = (sys.c1.ln() + sys.gamma1 * u1 - p * (u1 + u2)).exp();
    let e2 = (sys.c2.ln() + sys.gamma2 * u2 - p * (u1 + u2)).exp();
    (1.0 - e1, 1.0 - e2)
}

/// Damped Newton on the relative residual in u = ln t, from the symmetric
/// closed form with γ̄ = (γ₁+γ₂)/2 and c̄ = √(c₁c₂); the step is halved until
/// the residual drops. Converged when the sup of f relative to
/// max(1, t₁^{−γ₁}, t₂^{−γ₂}) is below 1e−12.
pub fn newton_solve(sys: &ReducedSystem) -> Result<(f64, f64)> {
    sys.validate_coefficients()?;
    let p = sys.p();
    let gbar = 0.5 * (sys.gamma1 + sys.gamma2);
    let cbar = (sys.c1 * sys.c2).sqrt();
    let u0 = cbar.ln() / (sys.n as f64 - 2.0 - gbar);
    let (mut u1, mut u2) = (u0, u0);
    let sup = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut r = relative_residual(sys, u1, u2);
    let mut trace = vec![sup(r)];
    for _ in 0..50 {
        if sup(r) < 1e-14 {
            break;
        }
        // ∂rⱼ/∂u_k = (rⱼ − 1)(γⱼδⱼₖ − p).
        let (e1, e2) = (r.0 - 1.0, r.1 - 1.0);
        let (a, b, c, d) = (e1 * (sys.gamma1 - p), -e1 * p, -e2 * p, e2 * (sys.gamma2 - p));
        let det = a * d - b * c;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoConvergence { steps: trace.len(), trace });
        }
        let du1 = (d * r.0 - b * r.1) / det;
        let du2 = (a * r.1 - c * r.0) / det;
        let cur = sup(r);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let (n1, n2) = (u1 - step * du1, u2 - step * du2);
            let nr = relative_residual(sys, n1, n2);
            if sup(nr) < cur {
                u1 = n1;
                u2 = n2;
                r = nr;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(sup(r));
        if !accepted {
            break;
        }
    }
    let (t1, t2) = (u1.exp(), u2.exp());
    if !(scaled_sup(sys, t1, t2, residual_unchecked(sys, t1, t2)) < 1e-12) {
        return Err(Error::NoConvergence { steps: trace.len(), trace });
    }
    let inside = |t: f64| t > sys.m1 && t < sys.m2;
    if !(inside(t1) && inside(t2)) {
        return Err(Error::BoundaryRoot(t1, t2));
    }
    Ok((t1, t2))
}

/// Brouwer degree of (f₁, f₂) on [m₁, m₂]² as the winding number of the
/// boundary image about 0. Edges are subdivided until consecutive image
/// points subtend less than π/2.
pub fn winding_degree(sys: &ReducedSystem) -> Result<i32> {
    let (a, b) = (sys.m1, sys.m2);
    if !(a > 0.0 && b > a) {
        return Err(Error::param("box", "need 0 < m1 < m2"));
    }
    // Counter-clockwise in (t₁, t₂); edges parametrized geometrically.
    let corners = [(a, a), (b, a), (b, b), (a, b), (a, a)];
    let edges: Vec<((f64, f64), (f64, f64))> = corners.windows(2).map(|w| (w[0], w[1])).collect();
    let totals: Vec<Result<f64>> = edges.par_iter().map(|&(p, q)| edge_winding(sys, p, q)).collect();
    let mut total = 0.0;
    for t in totals {
        total += t?;
    }
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 1e-6 {
        return Err(Error::InconclusiveDegree(format!("winding sum {w} is not an integer")));
    }
    Ok(r as i32)
}

fn edge_point(p: (f64, f64), q: (f64, f64), u: f64) -> (f64, f64) {
    // Geometric interpolation keeps sampling uniform across decades.
    (p.0 * (q.0 / p.0).powf(u), p.1 * (q.1 / p.1).powf(u))
}

fn edge_winding(sys: &ReducedSystem, p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    let image = |u: f64| -> Result<(f64, f64)> {
        let (t1, t2) = edge_point(p, q, u);
        let (f1, f2) = residual_unchecked(sys, t1, t2);
        let scale = t1.powf(-sys.gamma1).abs() + t2.powf(-sys.gamma2).abs();
        if (f1 * f1 + f2 * f2).sqrt() <= 1e-12 * scale {
            return Err(Error::InconclusiveDegree(format!(
                "the map vanishes on the box boundary near ({t1}, {t2}); adjust m1, m2"
            )));
        }
        // Normalize so the angle is insensitive to the magnitude range.
        let n = (f1 * f1 + f2 * f2).sqrt();
        Ok((f1 / n, f2 / n))
    };
    let mut stack = vec![(0.0, 1.0, image(0.0)?, image(1.0)?, 0u32)];
    let mut total = 0.0;
    while let Some((u0, u1, a, b, depth)) = stack.pop() {
        let ang = (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1);
        if ang.abs() < PI / 2.0 && depth >= 4 {
            total += ang;
            continue;
        }
        if depth > 60 {
            return Err(Error::InconclusiveDegree("boundary image could not be resolved".into()));
        }
        let um = 0.5 * (u0 + u1);
        let m = image(um)?;
        stack.push((um, u1, m, b, depth + 1));
        stack.push((u0, um, a, m, depth + 1));
    }
    Ok(total)
}

// ---------------------------------------------------------------- ε-path

/// Which bracket is used for c_j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketForm {
    /// π₁Σξ/k + π₂Σa/h.
    #[default]
    Averaged,
    /// π₁Σξ + π₂ m_h(γ)Σa, the exact coefficient for the |y|^γ model.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbativeOptions {
    pub bracket: BracketForm,
    /// Bubbles must satisfy λ_j > 1/μ.
    pub mu: f64,
    /// Overrides the (m₁, m₂) box of the reduced map.
    pub bounds: Option<(f64, f64)>,
    pub spec: QuadratureSpec,
}

impl Default for PerturbativeOptions {
    fn default() -> Self {
        Self { bracket: BracketForm::Averaged, mu: 0.5, bounds: None, spec: QuadratureSpec::with_rel_tol(1e-10) }
    }
}

/// g at one flatness point and the coefficient c = −b₁((N−2)/2·g)^{−1}.
pub fn point_coefficient(point: &PerturbativeModel, bracket: BracketForm, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let d = point.dims;
    let (p1, p2, g_avg) = pi_and_g(d, point.gamma, &point.xi, &point.a, spec)?;
    let g = match bracket {
        BracketForm::Averaged => g_avg,
        BracketForm::Exact => p1 * point.xi_sum() + p2 * axis_moment(d.h, point.gamma) * point.a_sum(),
    };
    if !(g > 0.0) {
        return Err(Error::Admissibility(format!(
            "g = pi1 sum(xi)/k + pi2 sum(a)/h must be positive at every point, got {g:.6e}"
        )));
    }
    let c = -b1_closed(d)? / ((d.n as f64 - 2.0) / 2.0 * g);
    Ok((g, c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbativeSolution {
    pub ansatz: ConcentrationAnsatz,
    pub system: ReducedSystem,
    pub t: (f64, f64),
    pub g: (f64, f64),
    pub l_epsilon: f64,
    pub degree: i32,
    pub residual_sup: f64,
}

/// The reduced system of a two-point landscape; the separation factor
/// |η̄¹ − η̄²|^{−(N−2)} of ε₁₂ is folded into c_j.
pub fn reduced_system_for(landscape: &PerturbativeLandscape, opts: &PerturbativeOptions) -> Result<(ReducedSystem, (f64, f64))> {
    let [p1, p2] = landscape.patches.as_slice() else {
        return Err(Error::param("points", "exactly two flatness points are required"));
    };
    let dims = p1.dims;
    let (g1, c1) = point_coefficient(p1, opts.bracket, &opts.spec)?;
    let (g2, c2) = point_coefficient(p2, opts.bracket, &opts.spec)?;
    let sep = dist(&p1.center, &p2.center);
    let f = sep.powf(-(dims.n as f64 - 2.0));
    let mut sys = ReducedSystem::new(p1.gamma, p2.gamma, dims.n, c1 * f, c2 * f)?;
    if let Some((m1, m2)) = opts.bounds {
        sys = sys.with_box(m1, m2)?;
    }
    Ok((sys, (g1, g2)))
}

/// Concentration ansatz for the two-point perturbative problem at ε.
pub fn solve_perturbative(landscape: &PerturbativeLandscape, epsilon: f64, opts: &PerturbativeOptions) -> Result<PerturbativeSolution> {
    let (sys, g) = reduced_system_for(landscape, opts)?;
    let degree = winding_degree(&sys)?;
    if degree != -1 {
        return Err(Error::Certificate(format!("degree of the reduced map is {degree}, expected -1")));
    }
    let (t1, t2) = newton_solve(&sys)?;
    let (r1, r2) = reduced_residual(&sys, t1, t2)?;
    let l = l_epsilon(sys.gamma1, sys.gamma2, sys.n, epsilon)?;
    let dims = landscape.patches[0].dims;
    let lam = [t1 * l.powf(1.0 / sys.gamma1), t2 * l.powf(1.0 / sys.gamma2)];
    for &x in &lam {
        if !(x * opts.mu > 1.0) {
            return Err(Error::param("epsilon", format!("too large: lambda = {x} is below 1/mu")));
        }
    }
    let bubbles = vec![
        Bubble::new(dims, landscape.patches[0].center.clone(), lam[0])?,
        Bubble::new(dims, landscape.patches[1].center.clone(), lam[1])?,
    ];
    Ok(PerturbativeSolution {
        ansatz: ConcentrationAnsatz::new(bubbles, vec![1.0, 1.0], Some(epsilon))?,
        system: sys,
        t: (t1, t2),
        g,
        l_epsilon: l,
        degree,
        residual_sup: r1.abs().max(r2.abs()),
    })
}

/// Whether the single-bubble leading λ-equation −ε(N−2)C_{N,k}G/(2λ^{γ+1}) = 0
/// has a positive root; it does not for any nonzero bracket G.
pub fn single_peak_root_exists(point: &PerturbativeModel, spec: &QuadratureSpec) -> Result<bool> {
    let (_, _, g) = pi_and_g(point.dims, point.gamma, &point.xi, &point.a, spec)?;
    let ladder = [1.0, 10.0, 100.0, 1000.0];
    let vals: Vec<f64> = ladder.iter().map(|l: &f64| -g / l.powf(point.gamma + 1.0)).collect();
    Ok(vals.iter().any(|&v| v == 0.0) || vals.windows(2).any(|w| w[0].signum() != w[1].signum()))
}

// ---------------------------------------------------------------- separation path

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedOptions {
    pub beta1: f64,
    pub beta2: f64,
    pub mu: f64,
    pub starts: usize,
    pub seed: u64,
    pub spec: QuadratureSpec,
}

impl Default for SeparatedOptions {
    fn default() -> Self {
        Self { beta1: 0.1, beta2: 10.0, mu: 0.5, starts: 4, seed: 7, spec: QuadratureSpec::with_rel_tol(1e-8) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatedSolution {
    pub ansatz: ConcentrationAnsatz,
    pub scales: (f64, f64),
    pub beta: (f64, f64),
    pub energy: f64,
    pub evaluations: usize,
}

struct SeparatedBox {
    dims: SpaceDims,
    centers: [Vec<f64>; 2],
    amps: [f64; 2],
    ln_lo: [f64; 2],
    ln_hi: [f64; 2],
    mu: f64,
}

impl SeparatedBox {
    /// Parameters: (ln λ₁, ln λ₂, λ₁(η¹ − η̄¹), λ₂(η² − η̄²)) in box-normalized units.
    fn decode(&self, x: &[f64]) -> Option<Vec<Bubble>> {
        let h = self.dims.h;
        let mut out = Vec::with_capacity(2);
        for j in 0..2 {
            let ll = x[j];
            if ll < self.ln_lo[j] || ll > self.ln_hi[j] {
                return None;
            }
            let lam = ll.exp();
            let off: Vec<f64> = (0..h).map(|i| x[2 + j * h + i] / lam).collect();
            if off.iter().map(|v| v * v).sum::<f64>().sqrt() > self.mu {
                return None;
            }
            let eta = self.centers[j].iter().zip(&off).map(|(c, o)| c + o).collect();
            out.push(Bubble::new(self.dims, eta, lam).ok()?);
        }
        Some(out)
    }
}

/// Multistart minimization of the reduced energy for the maxima `pair`.
pub fn solve_separated(model: &MaxPointModel, pair: (usize, usize), opts: &SeparatedOptions) -> Result<SeparatedSolution> {
    let m = model.pair(pair.0, pair.1)?;
    let dims = m.dims;
    let (g1, g2) = (m.gammas[0], m.gammas[1]);
    let s = m.separation();
    let (l1, l2) = l_separation(g1, g2, dims.n, s)?;
    let p = dims.p();
    let amps = [m.k_values[0].powf(-p), m.k_values[1].powf(-p)];
    let mut beta = (opts.beta1, opts.beta2);
    for attempt in 0..2 {
        let bx = SeparatedBox {
            dims,
            centers: [m.centers[0].clone(), m.centers[1].clone()],
            amps,
            ln_lo: [(beta.0 * l1).ln(), (beta.0 * l2).ln()],
            ln_hi: [(beta.1 * l1).ln(), (beta.1 * l2).ln()],
            mu: opts.mu,
        };
        let (best_x, best_e, evals) = minimize_box(&m, &bx, opts)?;
        let on_edge = (0..2).any(|j| {
            let w = bx.ln_hi[j] - bx.ln_lo[j];
            best_x[j] - bx.ln_lo[j] < 1e-3 * w || bx.ln_hi[j] - best_x[j] < 1e-3 * w
        });
        if on_edge {
            if attempt == 0 {
                beta = (beta.0, beta.1 * 10.0);
                continue;
            }
            return Err(Error::NotSeparatedEnough(format!(
                "the energy minimizer sits on the lambda-boundary at separation {s}"
            )));
        }
        let bubbles = bx.decode(&best_x).expect("minimizer is feasible");
        return Ok(SeparatedSolution {
            ansatz: ConcentrationAnsatz::new(bubbles, amps.to_vec(), None)?,
            scales: (l1, l2),
            beta,
            energy: best_e,
            evaluations: evals,
        });
    }
    unreachable!("the loop returns on its second pass")
}

fn minimize_box(m: &MaxPointModel, bx: &SeparatedBox, opts: &SeparatedOptions) -> Result<(Vec<f64>, f64, usize)> {
    let h = bx.dims.h;
    let dim = 2 + 2 * h;
    let spec = opts.spec;
    let objective = |x: &[f64]| -> f64 {
        match bx.decode(x) {
            Some(bs) => energy_of(m, &bx.amps, &bs, &spec).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|i| {
            let mut x = vec![0.0; dim];
            for j in 0..2 {
                let u: f64 = if i == 0 { 0.5 } else { rng.gen_range(0.2..0.8) };
                x[j] = bx.ln_lo[j] + u * (bx.ln_hi[j] - bx.ln_lo[j]);
            }
            x
        })
        .collect();
    let nm = NelderMeadOptions { initial_step: vec![0.5; dim], max_evals: 800, f_tol: 1e-12, x_tol: 1e-5 };
    let runs: Vec<NelderMeadResult> = starts.par_iter().map(|x0| nelder_mead(&objective, x0, &nm)).collect();
    let evals: usize = runs.iter().map(|r| r.evaluations).sum();
    let best = runs
        .into_iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::NoConvergence { steps: 0, trace: vec![] })?;
    // Polish from the best point with a smaller simplex.
    let polish = NelderMeadOptions { initial_step: vec![0.05; dim], ..nm };
    let r = nelder_mead(&objective, &best.x, &polish);
    Ok((r.x, r.value, evals + r.evaluations))
}
