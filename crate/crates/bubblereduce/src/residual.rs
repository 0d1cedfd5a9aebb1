//! The concentration ansatz, its energy, the linear-form proxy and the
//! strong-form residual, plus parameter sweeps.

use crate::constants::{a_closed, expansion_constants};
use crate::error::{Error, Result};
use crate::interaction::{integrate_with_model, pohozaev_diagnostic};
use crate::model::{Bubble, CurvatureModel, MaxPointModel, PerturbativeLandscape, SpaceDims, TwoBubbleConfig};
use crate::quadrature::{norm, QuadratureSpec};
use crate::reduction::{solve_perturbative, solve_separated, PerturbativeOptions, SeparatedOptions};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

/// u = Σ amplitude_j U_j with one or two bubbles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationAnsatz {
    pub bubbles: Vec<Bubble>,
    pub amplitudes: Vec<f64>,
    pub epsilon: Option<f64>,
}

impl ConcentrationAnsatz {
    pub fn new(bubbles: Vec<Bubble>, amplitudes: Vec<f64>, epsilon: Option<f64>) -> Result<Self> {
        if bubbles.is_empty() || bubbles.len() > 2 {
            return Err(Error::param("bubbles", "one or two bubbles are supported"));
        }
        if amplitudes.len() != bubbles.len() {
            return Err(Error::param("amplitudes", "one amplitude per bubble"));
        }
        if amplitudes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::param("amplitudes", "must be positive"));
        }
        if bubbles.iter().any(|b| b.dims != bubbles[0].dims) {
            return Err(Error::param("bubbles", "must share dimensions"));
        }
        Ok(Self { bubbles, amplitudes, epsilon })
    }

    pub fn single(b: Bubble) -> Self {
        Self { bubbles: vec![b], amplitudes: vec![1.0], epsilon: None }
    }

    pub fn dims(&self) -> SpaceDims {
        self.bubbles[0].dims
    }

    pub fn eval(&self, s: f64, z: &[f64]) -> f64 {
        self.amplitudes.iter().zip(&self.bubbles).map(|(c, b)| c * b.eval(s, z)).sum()
    }

    pub fn laplacian(&self, s: f64, z: &[f64]) -> f64 {
        self.amplitudes.iter().zip(&self.bubbles).map(|(c, b)| c * b.laplacian(s, z)).sum()
    }

    /// ε₁₂ of the two bubbles, or 0 for a single bubble.
    pub fn eps12(&self) -> Result<f64> {
        match self.bubbles.as_slice() {
            [a, b] => TwoBubbleConfig::new(a.clone(), b.clone())?.eps12(),
            _ => Ok(0.0),
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.bubbles.iter().map(|b| b.lambda).collect()
    }
}

/// (a + b)^q − a^q − b^q for a, b ≥ 0, accurate when one term dominates.
pub fn power_excess(a: f64, b: f64, q: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi <= 0.0 {
        return 0.0;
    }
    let r = lo / hi;
    hi.powf(q) * (q * r.ln_1p()).exp_m1() - lo.powf(q)
}

/// I(u) = ½∫|∇u|² − (N−2)/(2(N−1))∫φ|u|^{2(N−1)/(N−2)}/|y| for u = Σc_jU_j,
/// assembled from the exact single-bubble norm plus small remainders:
/// Σ_j(½c_j² − κc_j^q φ_j)A + κΣc_j^q∫(φ_j − φ)U_j^q/|y| + c₁c₂⟨U₁,U₂⟩
/// − κ∫φ[(Σc_jU_j)^q − Σ(c_jU_j)^q]/|y|, with φ_j = φ(0, η_j).
pub fn energy_of(model: &dyn CurvatureModel, coeffs: &[f64], bubbles: &[Bubble], spec: &QuadratureSpec) -> Result<f64> {
    if coeffs.len() != bubbles.len() || bubbles.is_empty() || bubbles.len() > 2 {
        return Err(Error::param("bubbles", "one or two bubbles with one amplitude each"));
    }
    let dims = model.dims();
    let n = dims.n as f64;
    let kappa = (n - 2.0) / (2.0 * (n - 1.0));
    let q = dims.crit();
    let a = a_closed(dims)?;
    let refs: Vec<f64> = bubbles.iter().map(|b| model.phi(0.0, &b.eta)).collect();
    let base: f64 = coeffs
        .iter()
        .zip(&refs)
        .map(|(c, r)| (0.5 * c * c - kappa * c.powf(q) * r) * a)
        .sum();
    let brefs: Vec<&Bubble> = bubbles.iter().collect();
    let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| {
        let phi = m.phi(s, z);
        let mut v = 0.0;
        let mut parts = [0.0; 2];
        for (j, (c, b)) in coeffs.iter().zip(bubbles).enumerate() {
            let u = b.eval(s, z);
            parts[j] = c * u;
            let d = refs[j] - phi;
            if d != 0.0 {
                v += kappa * c.powf(q) * d * u.powf(q);
            }
        }
        if bubbles.len() == 2 {
            let (u1, u2) = (&bubbles[0], &bubbles[1]);
            let pair = 0.5 * (u1.eval_pstar(s, z) * u2.eval(s, z) + u2.eval_pstar(s, z) * u1.eval(s, z));
            v += coeffs[0] * coeffs[1] * pair - kappa * phi * power_excess(parts[0], parts[1], q);
        }
        v / s
    };
    Ok(base + integrate_with_model(&f, &brefs, model, spec)?)
}

/// The energy of the ansatz; equals the reduced energy J(η, λ, 0).
pub fn energy(ansatz: &ConcentrationAnsatz, model: &dyn CurvatureModel, spec: &QuadratureSpec) -> Result<f64> {
    check_dims(ansatz, model)?;
    energy_of(model, &ansatz.amplitudes, &ansatz.bubbles, spec)
}

fn check_dims(ansatz: &ConcentrationAnsatz, model: &dyn CurvatureModel) -> Result<()> {
    if ansatz.dims() != model.dims() {
        return Err(Error::param("model", "dimensions differ from the ansatz"));
    }
    Ok(())
}

/// max over the normalized kernel directions w ∈ {∂U_j/∂λ_j, ∂U_j/∂η_{j,i}}
/// of |⟨f, w⟩|/‖w‖, where ⟨f, w⟩ = ∫[Σc_jU_j^{N/(N−2)} − φ|u|^{2/(N−2)}u]w/|y|
/// is the first variation of the energy at u.
pub fn f_epsilon_norm_proxy(
    ansatz: &ConcentrationAnsatz,
    model: &dyn CurvatureModel,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_dims(ansatz, model)?;
    let dims = ansatz.dims();
    let consts = expansion_constants(dims, 0.5 * (dims.n as f64 - 2.0), &QuadratureSpec::with_rel_tol(1e-9))?;
    let (a1, a2) = (consts.a1.value, consts.a2.value);
    let ps = dims.pstar();
    let refs: Vec<&Bubble> = ansatz.bubbles.iter().collect();
    let mut tests: Vec<(usize, Option<usize>)> = Vec::new();
    for j in 0..ansatz.bubbles.len() {
        tests.push((j, None));
        for i in 0..dims.h {
            tests.push((j, Some(i)));
        }
    }
    let vals: Vec<f64> = tests
        .par_iter()
        .map(|&(j, dir)| {
            let b = &ansatz.bubbles[j];
            let f = |m: &dyn CurvatureModel, s: f64, z: &[f64]| {
                let mut lin = 0.0;
                for (c, bb) in ansatz.amplitudes.iter().zip(&ansatz.bubbles) {
                    lin += c * bb.eval_pstar(s, z);
                }
                let u = ansatz.eval(s, z);
                let w = match dir {
                    None => b.d_lambda(s, z),
                    Some(i) => b.d_eta(s, z, i),
                };
                (lin - m.phi(s, z) * u.abs().powf(ps - 1.0) * u) * w / s
            };
            let v = integrate_with_model(&f, &refs, model, spec)?;
            let wnorm = match dir {
                None => a1.sqrt() / b.lambda,
                Some(_) => a2.sqrt() * b.lambda,
            };
            Ok(v.abs() / wnorm)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Tensor grid for the strong residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nodes: usize,
    /// Smallest |y| sampled; replaced by half the first spacing if 0.
    pub s_min: Option<f64>,
    /// Half-width of the sampled region; defaults to 4(1 + separation).
    pub extent: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nodes: 96, s_min: None, extent: None }
    }
}

fn log_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongResidual {
    pub sup_w: f64,
    pub l2_w: f64,
}

/// R = Δu + φu^{N/(N−2)}/|y| on a log-spaced grid in (|y|, z∥, z⊥), weighted
/// by |y|(1 + r)² with r the distance from x to the nearest bubble center
/// (0, η_j): the weighted sup and the weighted L² norm (trapezoid in the
/// cylindrical measure over the grid box).
pub fn strong_residual(
    ansatz: &ConcentrationAnsatz,
    model: &dyn CurvatureModel,
    grid: &GridSpec,
) -> Result<StrongResidual> {
    check_dims(ansatz, model)?;
    if grid.nodes < 4 {
        return Err(Error::param("nodes", "need at least 4 grid nodes per axis"));
    }
    let dims = ansatz.dims();
    let h = dims.h;
    let lmax = ansatz.lambdas().into_iter().fold(0.0, f64::max);
    let centers: Vec<&Vec<f64>> = ansatz.bubbles.iter().map(|b| &b.eta).collect();
    let origin = centers[0].clone();
    let (axis, sep) = if centers.len() == 2 {
        let d: Vec<f64> = centers[1].iter().zip(&origin).map(|(a, b)| a - b).collect();
        let n = norm(&d);
        if n > 0.0 {
            (d.iter().map(|x| x / n).collect::<Vec<f64>>(), n)
        } else {
            (unit(h, 0), 0.0)
        }
    } else {
        (unit(h, 0), 0.0)
    };
    let extent = grid.extent.unwrap_or(4.0 * (1.0 + sep));
    let fine = 1e-2 / lmax;
    let s_nodes = {
        let mut s = log_nodes(fine, extent, grid.nodes);
        match grid.s_min {
            Some(m) if m > 0.0 => s[0] = m,
            Some(_) => s[0] = 0.5 * (s[1] - s[0]).abs().min(s[1]),
            None => {}
        }
        s
    };
    let half = log_nodes(fine, extent, grid.nodes / 2);
    let mut par: Vec<f64> = Vec::new();
    for c in [0.0, sep] {
        par.push(c);
        for &x in &half {
            par.push(c + x);
            par.push(c - x);
        }
    }
    par.sort_by(|a, b| a.total_cmp(b));
    par.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * (1.0 + b.abs()));
    let perp: Vec<f64> = if h == 1 {
        vec![0.0]
    } else {
        std::iter::once(0.0).chain(log_nodes(fine, extent, grid.nodes / 2)).collect()
    };
    let e_perp = if h == 1 { vec![] } else { orthogonal(&axis) };
    let ps = dims.pstar();
    let k = dims.k as i32;
    let rows: Vec<(f64, f64)> = s_nodes
        .par_iter()
        .enumerate()
        .map(|(si, &s)| {
            let ds = cell(&s_nodes, si);
            let mut sup: f64 = 0.0;
            let mut acc = 0.0;
            let mut z = vec![0.0; h];
            for (pi, &pz) in par.iter().enumerate() {
                let dp = cell(&par, pi);
                for (qi, &qz) in perp.iter().enumerate() {
                    for sign in if qz == 0.0 { &[1.0][..] } else { &[1.0, -1.0][..] } {
                        for i in 0..h {
                            z[i] = origin[i] + pz * axis[i] + if h > 1 { sign * qz * e_perp[i] } else { 0.0 };
                        }
                        let u = ansatz.eval(s, &z);
                        let r = ansatz.laplacian(s, &z) + model.phi(s, &z) * u.abs().powf(ps - 1.0) * u / s;
                        let d2 = centers
                            .iter()
                            .map(|c| z.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                            .fold(f64::INFINITY, f64::min);
                        let rw = r * s * (1.0 + (s * s + d2).sqrt()).powi(2);
                        sup = sup.max(rw.abs());
                        let vol = if h == 1 {
                            ds * s.powi(k - 1) * dp
                        } else {
                            let dq = cell(&perp, qi);
                            0.5 * ds * s.powi(k - 1) * dp * dq * qz.powi(h as i32 - 2)
                        };
                        acc += rw * rw * vol;
                    }
                }
            }
            (sup, acc)
        })
        .collect();
    let sup_w = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let l2 = rows.iter().map(|r| r.1).sum::<f64>();
    let wk = crate::quadrature::sphere_measure(dims.k);
    let wp = if h == 1 { 1.0 } else { crate::quadrature::sphere_measure(h - 1) };
    Ok(StrongResidual { sup_w, l2_w: (wk * wp * l2).sqrt() })
}

fn unit(h: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; h];
    e[i] = 1.0;
    e
}

fn orthogonal(e: &[f64]) -> Vec<f64> {
    let j = (0..e.len()).min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs())).unwrap_or(0);
    let mut v: Vec<f64> = e.iter().map(|x| -x * e[j]).collect();
    v[j] += 1.0;
    let n = norm(&v);
    v.iter().map(|x| x / n).collect()
}

/// Trapezoid cell width at node i.
fn cell(xs: &[f64], i: usize) -> f64 {
    let lo = if i == 0 { xs[0] } else { xs[i - 1] };
    let hi = if i + 1 == xs.len() { xs[i] } else { xs[i + 1] };
    0.5 * (hi - lo)
}

// ---------------------------------------------------------------- sweeps

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub lambdas: Vec<f64>,
    pub eta: Vec<Vec<f64>>,
    pub eps12: f64,
    pub energy: f64,
    pub fnorm_proxy: f64,
    pub residual: StrongResidual,
    pub pohozaev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub param_name: String,
    pub rows: Vec<std::result::Result<SweepRow, String>>,
    pub params: Vec<f64>,
    pub certificates: Vec<String>,
}

impl SweepReport {
    pub fn ok_rows(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter_map(|r| r.as_ref().ok()).collect()
    }

    /// True if every row succeeded and both residual norms strictly decrease.
    pub fn residual_decreasing(&self) -> bool {
        let ok = self.ok_rows();
        ok.len() == self.rows.len()
            && ok.windows(2).all(|w| w[1].residual.sup_w < w[0].residual.sup_w && w[1].residual.l2_w < w[0].residual.l2_w)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sweep over {}", self.param_name);
        let _ = writeln!(
            out,
            "# residual norms measure the ansatz in the strong form; their decay is a heuristic stand-in for the vanishing of the correction"
        );
        for c in &self.certificates {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("param,lambda1,lambda2,eps12,energy,fnorm_proxy,res_sup,res_l2,pohozaev,error\n");
        for (p, r) in self.params.iter().zip(&self.rows) {
            match r {
                Ok(r) => {
                    let l2 = r.lambdas.get(1).copied().unwrap_or(f64::NAN);
                    let _ = writeln!(
                        out,
                        "{p},{:.12e},{:.12e},{:.6e},{:.12e},{:.6e},{:.6e},{:.6e},{:.6e},",
                        r.lambdas[0], l2, r.eps12, r.energy, r.fnorm_proxy, r.residual.sup_w, r.residual.l2_w, r.pohozaev
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{p},,,,,,,,,{}", e.replace(',', ";"));
                }
            }
        }
        out
    }
}

pub struct SweepOptions {
    pub spec: QuadratureSpec,
    pub grid: GridSpec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { spec: QuadratureSpec::with_rel_tol(1e-8), grid: GridSpec::default() }
    }
}

/// All diagnostics of one ansatz.
pub fn diagnostics(
    param: f64,
    ansatz: &ConcentrationAnsatz,
    model: &dyn CurvatureModel,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    Ok(SweepRow {
        param,
        lambdas: ansatz.lambdas(),
        eta: ansatz.bubbles.iter().map(|b| b.eta.clone()).collect(),
        eps12: ansatz.eps12()?,
        energy: energy(ansatz, model, &opts.spec)?,
        fnorm_proxy: f_epsilon_norm_proxy(ansatz, model, &opts.spec)?,
        residual: strong_residual(ansatz, model, &opts.grid)?,
        pohozaev: pohozaev_diagnostic(model, &ansatz.amplitudes, &ansatz.bubbles, &opts.spec)?,
    })
}

/// Solves the two-point perturbative problem at each ε and reports diagnostics.
pub fn epsilon_sweep(
    landscape: &PerturbativeLandscape,
    epsilons: &[f64],
    pert: &PerturbativeOptions,
    opts: &SweepOptions,
) -> SweepReport {
    let rows: Vec<std::result::Result<SweepRow, String>> = epsilons
        .iter()
        .map(|&e| {
            let run = || -> Result<SweepRow> {
                let sol = solve_perturbative(landscape, e, pert)?;
                let m = landscape.with_epsilon(e);
                diagnostics(e, &sol.ansatz, &m, opts)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    SweepReport { param_name: "epsilon".into(), rows, params: epsilons.to_vec(), certificates: vec![] }
}

/// Minimizes the reduced energy at each separation and reports diagnostics.
pub fn separation_sweep(
    model: &MaxPointModel,
    separations: &[f64],
    sep: &SeparatedOptions,
    opts: &SweepOptions,
) -> SweepReport {
    let mut certs = Vec::new();
    let rows: Vec<std::result::Result<SweepRow, String>> = separations
        .iter()
        .map(|&s| {
            let run = || -> Result<SweepRow> {
                let m = model.with_separation(s)?;
                let sol = solve_separated(&m, (0, 1), sep)?;
                diagnostics(s, &sol.ansatz, &m, opts)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    for (s, r) in separations.iter().zip(&rows) {
        if let Ok(r) = r {
            let m = model.with_separation(*s).expect("validated above");
            let worst = r
                .eta
                .iter()
                .zip(&m.centers)
                .zip(&r.lambdas)
                .map(|((e, c), l)| crate::quadrature::dist(e, c) * l)
                .fold(0.0, f64::max);
            certs.push(format!("s = {s}: max lambda_j |eta_j - eta_bar_j| = {worst:.3e}"));
        }
    }
    SweepReport { param_name: "separation".into(), rows, params: separations.to_vec(), certificates: certs }
}

/// J(η̄, λ, 0) on a log grid of (λ₁, λ₂).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyMap {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Row-major: values[i][j] at (lambda1[i], lambda2[j]).
    pub values: Vec<Vec<f64>>,
}

impl EnergyMap {
    pub fn min_cell(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let (i, j, v) = self.min_cell();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# minimum cell: lambda1 = {:.10e}, lambda2 = {:.10e}, energy = {v:.15e}",
            self.lambda1[i], self.lambda2[j]
        );
        out.push_str("lambda1,lambda2,energy\n");
        for (i, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{:.10e},{:.10e},{v:.15e}", self.lambda1[i], self.lambda2[j]);
            }
        }
        out
    }
}

/// Tabulates the energy of Σc_jU_{η̄_j,λ_j} over the given λ values.
pub fn energy_map(
    model: &dyn CurvatureModel,
    centers: [&[f64]; 2],
    amplitudes: [f64; 2],
    lambda1: &[f64],
    lambda2: &[f64],
    spec: &QuadratureSpec,
) -> Result<EnergyMap> {
    let dims = model.dims();
    let cells: Vec<(usize, usize)> =
        (0..lambda1.len()).flat_map(|i| (0..lambda2.len()).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let bs = vec![
                Bubble::new(dims, centers[0].to_vec(), lambda1[i])?,
                Bubble::new(dims, centers[1].to_vec(), lambda2[j])?,
            ];
            energy_of(model, &amplitudes, &bs, spec)
        })
        .collect::<Result<_>>()?;
    let values = vals.chunks(lambda2.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(EnergyMap { lambda1: lambda1.to_vec(), lambda2: lambda2.to_vec(), values })
}

/// `n` log-spaced values in [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    log_nodes(lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::integrate_bubbles;
    use crate::model::{ConstantModel, PerturbativeModel};

    fn d(n: usize, k: usize, h: usize) -> SpaceDims {
        SpaceDims::new(n, k, h).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::with_rel_tol(1e-10)
    }

    #[test]
    fn power_excess_matches_direct_form() {
        for (a, b, q) in [(1.0f64, 0.5f64, 4.0f64), (2.0, 3.0, 3.0), (0.7, 1e-3, 2.5)] {
            let direct: f64 = (a + b).powf(q) - a.powf(q) - b.powf(q);
            assert!((power_excess(a, b, q) - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
        // Small partner: leading term q a^{q−1} b.
        let v = power_excess(1.0, 1e-12, 4.0);
        assert!((v - 4e-12).abs() < 1e-20);
        assert_eq!(power_excess(0.0, 0.0, 3.0), 0.0);
    }

    #[test]
    fn single_bubble_energy_identity() {
        for dims in [d(3, 2, 1), d(4, 2, 2), d(5, 3, 2)] {
            let b = Bubble::new(dims, vec![0.3; dims.h], 2.0).unwrap();
            let m = ConstantModel::new(dims, 1.0);
            let a = a_closed(dims).unwrap();
            let e = energy(&ConcentrationAnsatz::single(b), &m, &spec()).unwrap();
            let expect = a / (2.0 * (dims.n as f64 - 1.0));
            assert!((e - expect).abs() < 1e-12 * expect, "{dims}: {e} {expect}");
        }
    }

    #[test]
    fn energy_direct_quadrature_agrees() {
        // Independent route: the Dirichlet energy from the analytic gradient.
        let dims = d(3, 2, 1);
        let bs = vec![Bubble::new(dims, vec![0.0], 2.0).unwrap(), Bubble::new(dims, vec![0.8], 3.0).unwrap()];
        let c = [1.0, 0.8];
        let m = ConstantModel::new(dims, 1.3);
        let q = dims.crit();
        let kappa = 0.25;
        let refs: Vec<&Bubble> = bs.iter().collect();
        let direct = integrate_bubbles(
            &|s: f64, z: &[f64]| {
                let mut gs = 0.0;
                let mut gz = 0.0;
                let mut u = 0.0;
                for (cj, b) in c.iter().zip(&bs) {
                    let (a, v) = b.spatial_grad(s, z);
                    gs += cj * a;
                    gz += cj * v[0];
                    u += cj * b.eval(s, z);
                }
                0.5 * (gs * gs + gz * gz) - kappa * 1.3 * u.powf(q) / s
            },
            &refs,
            None,
            &spec(),
        )
        .unwrap();
        let e = energy_of(&m, &c, &bs, &spec()).unwrap();
        assert!((e - direct).abs() < 1e-8 * direct.abs(), "{e} {direct}");
    }

    #[test]
    fn amplitude_stationary_at_curvature_power() {
        let dims = d(4, 3, 1);
        let kval = 2.5;
        let m = ConstantModel::new(dims, kval);
        let b = vec![Bubble::new(dims, vec![0.0], 1.0).unwrap()];
        let c0 = kval.powf(-(dims.n as f64 - 2.0) / 2.0);
        let h = 1e-4;
        let e = |c: f64| energy_of(&m, &[c], &b, &spec()).unwrap();
        let deriv = (e(c0 + h) - e(c0 - h)) / (2.0 * h);
        let a = a_closed(dims).unwrap();
        // The central difference carries h²/6·E''' = −h²KA/3.
        assert!((deriv + h * h * kval * a / 3.0).abs() < 1e-9 * a, "{deriv}");
    }

    #[test]
    fn proxy_vanishes_for_exact_bubble() {
        let dims = d(4, 3, 1);
        let b = Bubble::new(dims, vec![0.0], 3.0).unwrap();
        let m = PerturbativeModel::new(dims, vec![0.0], 0.0, 1.5, vec![-1.0; 3], vec![-1.0], 0.5, 0.5, 0.0).unwrap();
        let v = f_epsilon_norm_proxy(&ConcentrationAnsatz::single(b), &m, &spec()).unwrap();
        assert!(v < 1e-8, "{v}");
    }

    #[test]
    fn single_bubble_strong_residual_is_zero() {
        for dims in [d(3, 2, 1), d(4, 2, 2), d(5, 4, 1)] {
            let b = Bubble::new(dims, vec![0.2; dims.h], 3.0).unwrap();
            let r = strong_residual(&ConcentrationAnsatz::single(b), &ConstantModel::new(dims, 1.0), &GridSpec::default())
                .unwrap();
            assert!(r.sup_w < 1e-10 && r.l2_w < 1e-10, "{dims}: {r:?}");
        }
    }

    #[test]
    fn strong_residual_grid_at_zero_is_shifted() {
        let dims = d(3, 2, 1);
        let b = Bubble::new(dims, vec![0.0], 1.0).unwrap();
        let g = GridSpec { nodes: 16, s_min: Some(0.0), extent: None };
        let r = strong_residual(&ConcentrationAnsatz::single(b), &ConstantModel::new(dims, 1.0), &g).unwrap();
        assert!(r.sup_w.is_finite());
    }

    #[test]
    fn energy_map_single_cell_and_symmetry() {
        let dims = d(3, 2, 1);
        let m = ConstantModel::new(dims, 1.0);
        let map = energy_map(&m, [&[0.0], &[1.0]], [1.0, 1.0], &[4.0], &[4.0], &spec()).unwrap();
        let bs = vec![Bubble::new(dims, vec![0.0], 4.0).unwrap(), Bubble::new(dims, vec![1.0], 4.0).unwrap()];
        assert_eq!(map.values[0][0], energy_of(&m, &[1.0, 1.0], &bs, &spec()).unwrap());
        let ls = log_grid(2.0, 8.0, 3);
        let map = energy_map(&m, [&[0.0], &[1.0]], [1.0, 1.0], &ls, &ls, &spec()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = (map.values[i][j], map.values[j][i]);
                assert!((a - b).abs() < 1e-8 * a.abs());
            }
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let r = SweepReport { param_name: "epsilon".into(), rows: vec![], params: vec![], certificates: vec![] };
        let csv = r.to_csv();
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1);
    }
}
