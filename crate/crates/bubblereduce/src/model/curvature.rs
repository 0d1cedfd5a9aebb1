use super::SpaceDims;
use crate::error::{Error, Result};
use crate::quadrature::{beta, dist, Frame, ZCenter};
use serde::{Deserialize, Serialize};

/// A prescribed curvature φ(y, z), cylindrical in y.
pub trait CurvatureModel: Sync + Send {
    fn dims(&self) -> SpaceDims;

    /// φ at (|y| = s, z).
    fn phi(&self, s: f64, z: &[f64]) -> f64;

    /// ⟨x, ∇φ(x)⟩ for x = (y, z), the derivative along the dilation field.
    fn dilation_derivative(&self, s: f64, z: &[f64]) -> f64;

    /// z-points where φ has structure, with the radius of that structure.
    fn anchors(&self) -> Vec<ZCenter>;

    /// Ok if integrals of φ times functions symmetric about `frame` are
    /// reduced exactly by that frame.
    fn check_frame(&self, frame: &Frame) -> Result<()>;

    /// Balls `(z-center, radius)` across whose boundary φ jumps, and the
    /// constant value of φ outside all of them.
    fn jump_balls(&self) -> Option<(Vec<ZCenter>, f64)> {
        None
    }
}

/// φ ≡ value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel {
    pub dims: SpaceDims,
    pub value: f64,
}

impl ConstantModel {
    pub fn new(dims: SpaceDims, value: f64) -> Self {
        Self { dims, value }
    }
}

impl CurvatureModel for ConstantModel {
    fn dims(&self) -> SpaceDims {
        self.dims
    }
    fn phi(&self, _: f64, _: &[f64]) -> f64 {
        self.value
    }
    fn dilation_derivative(&self, _: f64, _: &[f64]) -> f64 {
        0.0
    }
    fn anchors(&self) -> Vec<ZCenter> {
        Vec::new()
    }
    fn check_frame(&self, _: &Frame) -> Result<()> {
        Ok(())
    }
}

/// Mean of |y|^γ over the unit sphere S^{N−1} ⊂ ℝᵏ × ℝʰ.
fn sphere_mean_y(dims: SpaceDims, gamma: f64) -> f64 {
    let (k, h) = (dims.k as f64, dims.h as f64);
    beta((k + gamma) / 2.0, h / 2.0) / beta(k / 2.0, h / 2.0)
}

/// Mean of |x₁|^γ over the unit sphere S^{N−1}.
fn sphere_mean_coord(dims: SpaceDims, gamma: f64) -> f64 {
    let n = dims.n as f64;
    beta((1.0 + gamma) / 2.0, (n - 1.0) / 2.0) / beta(0.5, (n - 1.0) / 2.0)
}

/// K near a flat point η̄:
/// K(x) = base + Σξᵢ|y|^γ + Σaⱼ|zⱼ − η̄ⱼ|^γ for |x − (0, η̄)| < δ,
/// and the spherical average of that expression over |x − (0, η̄)| = δ outside.
/// The curvature is φ = 1 + εK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeModel {
    pub dims: SpaceDims,
    pub center: Vec<f64>,
    pub base: f64,
    pub gamma: f64,
    pub xi: Vec<f64>,
    pub a: Vec<f64>,
    pub sigma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl PerturbativeModel {
    /// Validates the flatness model in the regime 1 < γ < N − 2.
    pub fn new(
        dims: SpaceDims,
        center: Vec<f64>,
        base: f64,
        gamma: f64,
        xi: Vec<f64>,
        a: Vec<f64>,
        sigma: f64,
        delta: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let m = Self { dims, center, base, gamma, xi, a, sigma, delta, epsilon };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.n as f64;
        if !(self.gamma > 1.0 && self.gamma < n - 2.0) {
            return Err(Error::param("gamma", format!("need 1 < gamma < N - 2 = {}, got {}", n - 2.0, self.gamma)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::param("sigma", "need 0 < sigma < 1"));
        }
        if self.center.len() != self.dims.h {
            return Err(Error::param("eta", format!("expected {} components", self.dims.h)));
        }
        if self.xi.len() != self.dims.k {
            return Err(Error::param("xi", format!("expected {} components", self.dims.k)));
        }
        if self.a.len() != self.dims.h {
            return Err(Error::param("a", format!("expected {} components", self.dims.h)));
        }
        if self.xi.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::param("xi", "all components must be finite and nonzero"));
        }
        if self.a.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::param("a", "all components must be finite and nonzero"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::param("delta", "must be positive"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::param("epsilon", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn xi_sum(&self) -> f64 {
        self.xi.iter().sum()
    }

    pub fn a_sum(&self) -> f64 {
        self.a.iter().sum()
    }

    fn r2(&self, s: f64, z: &[f64]) -> f64 {
        s * s + z.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    /// The flatness expression without the locality cutoff.
    pub fn k_local(&self, s: f64, z: &[f64]) -> f64 {
        let g = self.gamma;
        let zpart: f64 = self
            .a
            .iter()
            .zip(z.iter().zip(&self.center))
            .map(|(a, (zi, ci))| a * (zi - ci).abs().powf(g))
            .sum();
        self.base + self.xi_sum() * s.powf(g) + zpart
    }

    /// The constant value of K outside the locality ball.
    pub fn k_outside(&self) -> f64 {
        let dg = self.delta.powf(self.gamma);
        self.base
            + dg * (self.xi_sum() * sphere_mean_y(self.dims, self.gamma)
                + self.a_sum() * sphere_mean_coord(self.dims, self.gamma))
    }

    pub fn inside(&self, s: f64, z: &[f64]) -> bool {
        self.r2(s, z) < self.delta * self.delta
    }

    /// K(x) with the global extension.
    pub fn k_value(&self, s: f64, z: &[f64]) -> f64 {
        if self.inside(s, z) {
            self.k_local(s, z)
        } else {
            self.k_outside()
        }
    }

    /// ⟨x, ∇K⟩ inside the locality ball (zero outside).
    pub fn k_dilation(&self, s: f64, z: &[f64]) -> f64 {
        if !self.inside(s, z) {
            return 0.0;
        }
        let g = self.gamma;
        let ypart = g * self.xi_sum() * s.powf(g);
        let zpart: f64 = self
            .a
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let d = z[j] - self.center[j];
                if d == 0.0 {
                    0.0
                } else {
                    a * g * d.abs().powf(g - 2.0) * d * z[j]
                }
            })
            .sum();
        ypart + zpart
    }
}

fn perturbative_frame_check(dims: SpaceDims, frame: &Frame) -> Result<()> {
    match frame {
        _ if dims.h <= 2 && matches!(frame, Frame::Axial { .. }) => Ok(()),
        Frame::Single { .. } if dims.h == 1 => Ok(()),
        _ => Err(Error::UnsupportedDimension(format!(
            "the anisotropic flatness model reduces exactly only for h <= 2 in an axial frame or h = 1 (h = {})",
            dims.h
        ))),
    }
}

impl CurvatureModel for PerturbativeModel {
    fn dims(&self) -> SpaceDims {
        self.dims
    }
    fn phi(&self, s: f64, z: &[f64]) -> f64 {
        1.0 + self.epsilon * self.k_value(s, z)
    }
    fn dilation_derivative(&self, s: f64, z: &[f64]) -> f64 {
        self.epsilon * self.k_dilation(s, z)
    }
    fn anchors(&self) -> Vec<ZCenter> {
        vec![ZCenter::new(self.center.clone(), self.delta)]
    }
    fn check_frame(&self, frame: &Frame) -> Result<()> {
        perturbative_frame_check(self.dims, frame)
    }
    fn jump_balls(&self) -> Option<(Vec<ZCenter>, f64)> {
        Some((self.anchors(), 1.0 + self.epsilon * self.k_outside()))
    }
}

/// φ = 1 + εK with K built from several flatness patches with disjoint
/// locality balls; outside every ball K is the mean of the patches'
/// outside constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeLandscape {
    pub patches: Vec<PerturbativeModel>,
    pub epsilon: f64,
}

impl PerturbativeLandscape {
    pub fn new(patches: Vec<PerturbativeModel>, epsilon: f64) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::param("points", "at least one flatness point is required"));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::param("epsilon", "must be non-negative"));
        }
        let dims = patches[0].dims;
        for p in &patches {
            p.validate()?;
            if p.dims != dims {
                return Err(Error::param("points", "all points must share dimensions"));
            }
        }
        for i in 0..patches.len() {
            for j in i + 1..patches.len() {
                let d = dist(&patches[i].center, &patches[j].center);
                if d < patches[i].delta + patches[j].delta {
                    return Err(Error::param("delta", "locality balls of distinct points must be disjoint"));
                }
            }
        }
        Ok(Self { patches, epsilon })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { patches: self.patches.clone(), epsilon }
    }

    pub fn k_value(&self, s: f64, z: &[f64]) -> f64 {
        for p in &self.patches {
            if p.inside(s, z) {
                return p.k_local(s, z);
            }
        }
        self.patches.iter().map(|p| p.k_outside()).sum::<f64>() / self.patches.len() as f64
    }
}

impl CurvatureModel for PerturbativeLandscape {
    fn dims(&self) -> SpaceDims {
        self.patches[0].dims
    }
    fn phi(&self, s: f64, z: &[f64]) -> f64 {
        1.0 + self.epsilon * self.k_value(s, z)
    }
    fn dilation_derivative(&self, s: f64, z: &[f64]) -> f64 {
        self.patches
            .iter()
            .find(|p| p.inside(s, z))
            .map_or(0.0, |p| self.epsilon * p.k_dilation(s, z))
    }
    fn anchors(&self) -> Vec<ZCenter> {
        self.patches.iter().map(|p| ZCenter::new(p.center.clone(), p.delta)).collect()
    }
    fn check_frame(&self, frame: &Frame) -> Result<()> {
        perturbative_frame_check(self.dims(), frame)
    }
    fn jump_balls(&self) -> Option<(Vec<ZCenter>, f64)> {
        let out = self.patches.iter().map(|p| p.k_outside()).sum::<f64>() / self.patches.len() as f64;
        Some((self.anchors(), 1.0 + self.epsilon * out))
    }
}

/// Isolated strict maxima: near (0, η̄ʲ), φ = K_j − q_j|x − (0, η̄ʲ)|^{γ_j};
/// globally φ = max(floor, maxⱼ(K_j − q_j rⱼ^{γ_j})) with
/// floor = minⱼ(K_j − q_j ν^{γ_j}), so φ is continuous and equals the local
/// profile inside each ν-ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPointModel {
    pub dims: SpaceDims,
    pub centers: Vec<Vec<f64>>,
    pub k_values: Vec<f64>,
    pub gammas: Vec<f64>,
    pub a0: f64,
    pub a1: f64,
    pub q: Vec<f64>,
    pub sigma: f64,
    pub nu: f64,
}

impl MaxPointModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: SpaceDims,
        centers: Vec<Vec<f64>>,
        k_values: Vec<f64>,
        gammas: Vec<f64>,
        a0: f64,
        a1: f64,
        q: Vec<f64>,
        sigma: f64,
        nu: f64,
    ) -> Result<Self> {
        let m = Self { dims, centers, k_values, gammas, a0, a1, q, sigma, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.n as f64;
        let m = self.centers.len();
        if m < 2 {
            return Err(Error::param("eta", "at least two maximum points are required"));
        }
        if self.k_values.len() != m || self.gammas.len() != m || self.q.len() != m {
            return Err(Error::param("K", "K, gamma and q need one entry per center"));
        }
        for c in &self.centers {
            if c.len() != self.dims.h {
                return Err(Error::param("eta", format!("centers need {} components", self.dims.h)));
            }
        }
        for &g in &self.gammas {
            if !(g > n - 2.0 && g < n) {
                return Err(Error::param("gamma", format!("need N - 2 < gamma < N, got {g}")));
            }
        }
        if self.k_values.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::param("K", "all K_j must be positive"));
        }
        if !(self.a0 > 0.0 && self.a0 <= self.a1) {
            return Err(Error::param("a0", "need 0 < a0 <= a1"));
        }
        if self.q.iter().any(|&q| q < self.a0 || q > self.a1) {
            return Err(Error::param("q", "need a0 <= q_j <= a1"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param("sigma", "must be positive"));
        }
        if !(self.nu > 0.0) {
            return Err(Error::param("nu", "must be positive"));
        }
        for i in 0..m {
            for j in i + 1..m {
                if dist(&self.centers[i], &self.centers[j]) <= 2.0 * self.nu {
                    return Err(Error::param("nu", "locality balls must be disjoint"));
                }
            }
        }
        if !(self.floor() > 0.0) {
            return Err(Error::param("nu", "K_j - q_j nu^gamma_j must stay positive"));
        }
        Ok(())
    }

    pub fn floor(&self) -> f64 {
        (0..self.centers.len())
            .map(|j| self.k_values[j] - self.q[j] * self.nu.powf(self.gammas[j]))
            .fold(f64::INFINITY, f64::min)
    }

    fn r2(&self, j: usize, s: f64, z: &[f64]) -> f64 {
        s * s + z.iter().zip(&self.centers[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn branch(&self, s: f64, z: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.centers.len() {
            let v = self.k_values[j] - self.q[j] * self.r2(j, s, z).powf(self.gammas[j] / 2.0);
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        best.filter(|&(_, v)| v > self.floor())
    }

    /// The model restricted to two of its maxima.
    pub fn pair(&self, j1: usize, j2: usize) -> Result<MaxPointModel> {
        let m = self.centers.len();
        if j1 >= m || j2 >= m || j1 == j2 {
            return Err(Error::param("pair", format!("need two distinct indices below {m}")));
        }
        let pick = |v: &Vec<f64>| vec![v[j1], v[j2]];
        MaxPointModel::new(
            self.dims,
            vec![self.centers[j1].clone(), self.centers[j2].clone()],
            pick(&self.k_values),
            pick(&self.gammas),
            self.a0,
            self.a1,
            pick(&self.q),
            self.sigma,
            self.nu,
        )
    }

    /// Separation of the first two centers.
    pub fn separation(&self) -> f64 {
        dist(&self.centers[0], &self.centers[1])
    }

    /// The model with the first two centers moved symmetrically about their
    /// midpoint to separation `s`.
    pub fn with_separation(&self, s: f64) -> Result<MaxPointModel> {
        let c0 = &self.centers[0];
        let c1 = &self.centers[1];
        let d = dist(c0, c1);
        if !(d > 0.0) {
            return Err(Error::Degenerate("coincident maximum points".into()));
        }
        let mid: Vec<f64> = c0.iter().zip(c1).map(|(a, b)| 0.5 * (a + b)).collect();
        let e: Vec<f64> = c1.iter().zip(c0).map(|(a, b)| (a - b) / d).collect();
        let mut out = self.clone();
        out.centers[0] = mid.iter().zip(&e).map(|(m, e)| m - 0.5 * s * e).collect();
        out.centers[1] = mid.iter().zip(&e).map(|(m, e)| m + 0.5 * s * e).collect();
        out.validate()?;
        Ok(out)
    }
}

impl CurvatureModel for MaxPointModel {
    fn dims(&self) -> SpaceDims {
        self.dims
    }
    fn phi(&self, s: f64, z: &[f64]) -> f64 {
        self.branch(s, z).map_or(self.floor(), |(_, v)| v)
    }
    fn dilation_derivative(&self, s: f64, z: &[f64]) -> f64 {
        match self.branch(s, z) {
            None => 0.0,
            Some((j, _)) => {
                let r2 = self.r2(j, s, z);
                let g = self.gammas[j];
                let xdot: f64 = s * s + z.iter().zip(&self.centers[j]).map(|(a, b)| a * (a - b)).sum::<f64>();
                if r2 == 0.0 {
                    0.0
                } else {
                    -self.q[j] * g * r2.powf(g / 2.0 - 1.0) * xdot
                }
            }
        }
    }
    fn anchors(&self) -> Vec<ZCenter> {
        self.centers.iter().map(|c| ZCenter::new(c.clone(), self.nu)).collect()
    }
    fn jump_balls(&self) -> Option<(Vec<ZCenter>, f64)> {
        let floor = self.floor();
        let balls: Vec<ZCenter> = (0..self.centers.len())
            .map(|j| {
                let r = ((self.k_values[j] - floor) / self.q[j]).powf(1.0 / self.gammas[j]);
                ZCenter::new(self.centers[j].clone(), r)
            })
            .collect();
        for i in 0..balls.len() {
            for j in i + 1..balls.len() {
                if dist(&balls[i].z, &balls[j].z) <= balls[i].width + balls[j].width {
                    return None;
                }
            }
        }
        Some((balls, floor))
    }
    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if self.dims.h <= 2 && matches!(frame, Frame::Axial { .. }) || self.dims.h == 1 {
            return Ok(());
        }
        let scale = self.separation().max(1.0);
        let ok = match frame {
            Frame::Axial { .. } => self.centers.iter().all(|c| frame.offset(c) <= 1e-12 * scale),
            Frame::Single { .. } => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedDimension(
                "maximum points must lie on the integration axis for h >= 3".into(),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: usize, k: usize, h: usize) -> SpaceDims {
        SpaceDims::new(n, k, h).unwrap()
    }

    fn pm(dims: SpaceDims, gamma: f64) -> PerturbativeModel {
        PerturbativeModel::new(
            dims,
            vec![0.0; dims.h],
            0.0,
            gamma,
            vec![-1.0; dims.k],
            vec![-1.0; dims.h],
            0.5,
            0.5,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn perturbative_validation() {
        let dims = d(5, 3, 2);
        assert!(PerturbativeModel::new(dims, vec![0.0; 2], 0.0, 3.5, vec![-1.0; 3], vec![-1.0; 2], 0.5, 0.5, 0.1).is_err());
        assert!(PerturbativeModel::new(dims, vec![0.0; 2], 0.0, 2.0, vec![0.0; 3], vec![-1.0; 2], 0.5, 0.5, 0.1).is_err());
        assert!(PerturbativeModel::new(dims, vec![0.0; 2], 0.0, 2.0, vec![-1.0; 3], vec![-1.0; 2], 1.5, 0.5, 0.1).is_err());
        assert!(PerturbativeModel::new(dims, vec![0.0; 2], 0.0, 2.0, vec![-1.0; 3], vec![-1.0; 2], 0.5, 0.5, 0.1).is_ok());
    }

    #[test]
    fn outside_constant_is_sphere_average() {
        // Brute force the average over S^{N−1} by Monte Carlo-free quadrature in
        // the (s, t) angle for h = 1: x = δ(cos θ ω_y, sin θ).
        let dims = d(4, 3, 1);
        let m = pm(dims, 1.5);
        let n = 20000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            let w = th.cos().powi(2);
            let (s, t) = (m.delta * th.cos(), m.delta * th.sin());
            num += w * m.k_local(s, &[t]);
            den += w;
        }
        assert!((num / den - m.k_outside()).abs() < 1e-6);
    }

    #[test]
    fn dilation_derivative_matches_fd() {
        let m = pm(d(5, 3, 2), 1.7);
        let (s, z) = (0.1, [0.12, -0.07]);
        let h = 1e-6;
        let f = |c: f64| m.phi(c * s, &[c * z[0], c * z[1]]);
        let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
        assert!((m.dilation_derivative(s, &z) - fd).abs() < 1e-7);
    }

    fn mp() -> MaxPointModel {
        MaxPointModel::new(d(3, 2, 1), vec![vec![-5.0], vec![5.0]], vec![1.0, 1.2], vec![2.0, 2.0], 0.5, 1.0, vec![0.5, 0.8], 1.0, 1.0)
            .unwrap()
    }

    #[test]
    fn max_point_profile() {
        let m = mp();
        assert_eq!(m.phi(0.0, &[-5.0]), 1.0);
        assert_eq!(m.phi(0.0, &[5.0]), 1.2);
        assert!((m.phi(0.3, &[5.0]) - (1.2 - 0.8 * 0.09)).abs() < 1e-15);
        assert!((m.phi(0.0, &[0.0]) - m.floor()).abs() < 1e-15);
        let h = 1e-6;
        let (s, z) = (0.2, 5.3);
        let fd = (m.phi(s * (1.0 + h), &[z * (1.0 + h)]) - m.phi(s * (1.0 - h), &[z * (1.0 - h)])) / (2.0 * h);
        assert!((m.dilation_derivative(s, &[z]) - fd).abs() < 1e-7);
    }

    #[test]
    fn max_point_validation() {
        let base = mp();
        let mut bad = base.clone();
        bad.gammas[0] = 0.5;
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.q[1] = 2.0;
        assert!(bad.validate().is_err());
        let mut bad = base.clone();
        bad.nu = 6.0;
        assert!(bad.validate().is_err());
        let wide = base.with_separation(40.0).unwrap();
        assert!((wide.separation() - 40.0).abs() < 1e-12);
        assert!(base.pair(0, 0).is_err());
    }

    #[test]
    fn landscape_rejects_overlap() {
        let dims = d(4, 3, 1);
        let a = pm(dims, 1.5);
        let mut b = a.clone();
        b.center = vec![0.6];
        assert!(PerturbativeLandscape::new(vec![a.clone(), b.clone()], 0.1).is_err());
        b.center = vec![1.0];
        let l = PerturbativeLandscape::new(vec![a, b], 0.1).unwrap();
        assert_eq!(l.phi(0.0, &[1.0]), 1.0);
        assert!(l.phi(0.1, &[0.0]) < 1.0);
    }
}
