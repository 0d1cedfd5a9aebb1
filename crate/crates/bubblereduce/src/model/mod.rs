//! Dimensions, bubbles on the Euclidean and Heisenberg sides, and
//! prescribed-curvature models.

mod curvature;

pub use curvature::{ConstantModel, CurvatureModel, MaxPointModel, PerturbativeLandscape, PerturbativeModel};

use crate::error::{Error, Result};
use crate::quadrature::dist;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// The triple (N, k, h) with N = k + h, optionally tagged with the
/// Heisenberg index n (then k = n + 1, h = 1, Q = 2n + 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDims {
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub cr_n: Option<usize>,
}

impl SpaceDims {
    pub fn new(n: usize, k: usize, h: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidDims(format!("k = {k} must be at least 2")));
        }
        if h < 1 {
            return Err(Error::InvalidDims(format!("h = {h} must be at least 1")));
        }
        if n != k + h {
            return Err(Error::InvalidDims(format!("N = {n} must equal k + h = {}", k + h)));
        }
        Ok(Self { n, k, h, cr_n: None })
    }

    /// The instance coming from the CR sphere S^{2n+1}.
    pub fn cr(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidDims("Heisenberg index must be at least 1".into()));
        }
        Ok(Self { n: n + 2, k: n + 1, h: 1, cr_n: Some(n) })
    }

    /// Homogeneous dimension Q = 2n + 2 of the CR instance.
    pub fn q(&self) -> Option<usize> {
        self.cr_n.map(|n| 2 * n + 2)
    }

    /// (N − 2)/2, the decay exponent of a bubble divided by two.
    pub fn p(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// N/(N − 2), the nonlinearity exponent.
    pub fn pstar(&self) -> f64 {
        self.n as f64 / (self.n as f64 - 2.0)
    }

    /// 2(N − 1)/(N − 2), the critical exponent of the energy.
    pub fn crit(&self) -> f64 {
        2.0 * (self.n as f64 - 1.0) / (self.n as f64 - 2.0)
    }

    /// [(N − 2)(k − 1)]^{(N−2)/2}.
    pub fn amplitude(&self) -> f64 {
        (((self.n - 2) * (self.k - 1)) as f64).powf(self.p())
    }
}

impl std::fmt::Display for SpaceDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{}", self.n, self.k, self.h)
    }
}

impl std::str::FromStr for SpaceDims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidDims(format!("expected N,k,h, got `{s}`")));
        }
        let mut v = [0usize; 3];
        for (i, p) in parts.iter().enumerate() {
            v[i] = p
                .parse()
                .map_err(|_| Error::InvalidDims(format!("`{p}` is not a non-negative integer")))?;
        }
        SpaceDims::new(v[0], v[1], v[2])
    }
}

/// C_{N,k} = [(N − 2)(k − 1)]^{N−1}.
pub fn c_nk(dims: SpaceDims) -> f64 {
    (((dims.n - 2) * (dims.k - 1)) as f64).powi(dims.n as i32 - 1)
}

/// The standard solution U_{η,λ} of −ΔU = U^{N/(N−2)}/|y|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub dims: SpaceDims,
    pub eta: Vec<f64>,
    pub lambda: f64,
}

/// Value and first derivatives of a bubble at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleGrad {
    pub d_lambda: f64,
    pub d_eta: Vec<f64>,
}

impl Bubble {
    pub fn new(dims: SpaceDims, eta: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be positive and finite, got {lambda}")));
        }
        if eta.len() != dims.h {
            return Err(Error::param("eta", format!("expected {} components, got {}", dims.h, eta.len())));
        }
        if eta.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("eta", "components must be finite"));
        }
        Ok(Self { dims, eta, lambda })
    }

    /// D = (1 + λs)² + λ²|z − η|².
    #[inline]
    pub fn denom(&self, s: f64, z: &[f64]) -> f64 {
        let l = self.lambda;
        let t2: f64 = z.iter().zip(&self.eta).map(|(a, b)| (a - b) * (a - b)).sum();
        (1.0 + l * s).powi(2) + l * l * t2
    }

    /// U(y, z) with s = |y|.
    #[inline]
    pub fn eval(&self, s: f64, z: &[f64]) -> f64 {
        let p = self.dims.p();
        self.dims.amplitude() * (self.lambda / self.denom(s, z)).powf(p)
    }

    /// U^{N/(N−2)} without the extra power evaluation.
    #[inline]
    pub fn eval_pstar(&self, s: f64, z: &[f64]) -> f64 {
        let nn = self.dims.n as f64;
        let a = self.dims.amplitude().powf(self.dims.pstar());
        a * (self.lambda / self.denom(s, z)).powf(nn / 2.0)
    }

    /// ∂U/∂λ.
    #[inline]
    pub fn d_lambda(&self, s: f64, z: &[f64]) -> f64 {
        let l = self.lambda;
        let p = self.dims.p();
        let d = self.denom(s, z);
        let t2: f64 = z.iter().zip(&self.eta).map(|(a, b)| (a - b) * (a - b)).sum();
        // ∂D/∂λ = 2s(1 + λs) + 2λt²; λ∂D/∂λ − D = λ²(s² + t²) − 1.
        let u = self.dims.amplitude() * (l / d).powf(p);
        p * u / l * (1.0 - l * l * (s * s + t2)) / d
    }

    /// ∂U/∂η_i.
    #[inline]
    pub fn d_eta(&self, s: f64, z: &[f64], i: usize) -> f64 {
        let l = self.lambda;
        let p = self.dims.p();
        let d = self.denom(s, z);
        let u = self.dims.amplitude() * (l / d).powf(p);
        2.0 * p * u * l * l * (z[i] - self.eta[i]) / d
    }

    pub fn grad(&self, s: f64, z: &[f64]) -> BubbleGrad {
        BubbleGrad {
            d_lambda: self.d_lambda(s, z),
            d_eta: (0..self.dims.h).map(|i| self.d_eta(s, z, i)).collect(),
        }
    }

    /// Cylindrical Laplacian ∂ₛₛU + (k−1)/s ∂ₛU + Δ_zU in closed form.
    ///
    /// With D as above, Δ(D^{−p}) = D^{−p−1}[4λ²p(p+1) − pΔD] since
    /// |∇D|² = 4λ²D, and ΔD = 2λ²(1 + h) + 2(k−1)λ(1 + λs)/s.
    #[inline]
    pub fn laplacian(&self, s: f64, z: &[f64]) -> f64 {
        let l = self.lambda;
        let p = self.dims.p();
        let k = self.dims.k as f64;
        let h = self.dims.h as f64;
        let d = self.denom(s, z);
        let lap_d = 2.0 * l * l * (1.0 + h) + 2.0 * (k - 1.0) * l * (1.0 + l * s) / s;
        let u = self.dims.amplitude() * (l / d).powf(p);
        u / d * (4.0 * l * l * p * (p + 1.0) - p * lap_d)
    }

    /// Cylindrical gradient (∂ₛU, ∇_zU).
    pub fn spatial_grad(&self, s: f64, z: &[f64]) -> (f64, Vec<f64>) {
        let l = self.lambda;
        let p = self.dims.p();
        let d = self.denom(s, z);
        let u = self.dims.amplitude() * (l / d).powf(p);
        let ds = -p * u / d * 2.0 * l * (1.0 + l * s);
        let dz = z
            .iter()
            .zip(&self.eta)
            .map(|(a, b)| -p * u / d * 2.0 * l * l * (a - b))
            .collect();
        (ds, dz)
    }

    /// The bubble with (cη, λ/c).
    pub fn dilate(&self, c: f64) -> Bubble {
        Bubble { dims: self.dims, eta: self.eta.iter().map(|x| c * x).collect(), lambda: self.lambda / c }
    }
}

/// V_{s,λ}(Z, t) on the Heisenberg group ℍⁿ with c₀ = (2n)ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergBubble {
    pub n: usize,
    pub s: f64,
    pub lambda: f64,
}

impl HeisenbergBubble {
    pub fn new(n: usize, s: f64, lambda: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be positive and finite, got {lambda}")));
        }
        Ok(Self { n, s, lambda })
    }

    pub fn c0(&self) -> f64 {
        ((2 * self.n) as f64).powi(self.n as i32)
    }

    /// Value as a function of r = |Z|.
    pub fn eval_radial(&self, r: f64, t: f64) -> f64 {
        let q = (2 * self.n + 2) as f64;
        let l = self.lambda;
        let a = 1.0 + l * l * r * r;
        let b = l * l * (t - self.s);
        self.c0() * l.powf((q - 2.0) / 2.0) * (a * a + b * b).powf(-(q - 2.0) / 4.0)
    }

    pub fn eval(&self, z: &[Complex64], t: f64) -> f64 {
        let r = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        self.eval_radial(r, t)
    }

    /// (∂ᵣV, ∂ₜV) with r = |Z|.
    pub fn grad_radial(&self, r: f64, t: f64) -> (f64, f64) {
        let q = (2 * self.n + 2) as f64;
        let l = self.lambda;
        let a = 1.0 + l * l * r * r;
        let b = l * l * (t - self.s);
        let e = a * a + b * b;
        let v = self.eval_radial(r, t);
        let f = -(q - 2.0) / 4.0 * v / e;
        (f * 2.0 * a * 2.0 * l * l * r, f * 2.0 * b * l * l)
    }
}

/// Two bubbles of the same dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBubbleConfig {
    pub b1: Bubble,
    pub b2: Bubble,
}

impl TwoBubbleConfig {
    pub fn new(b1: Bubble, b2: Bubble) -> Result<Self> {
        if b1.dims != b2.dims {
            return Err(Error::param("bubbles", "must share dimensions"));
        }
        Ok(Self { b1, b2 })
    }

    pub fn dims(&self) -> SpaceDims {
        self.b1.dims
    }

    pub fn separation(&self) -> f64 {
        dist(&self.b1.eta, &self.b2.eta)
    }

    /// ε₁₂ = (λ₁λ₂|η¹ − η²|²)^{(2−N)/2}.
    pub fn eps12(&self) -> Result<f64> {
        epsilon_ij(self)
    }

    pub fn swapped(&self) -> Self {
        Self { b1: self.b2.clone(), b2: self.b1.clone() }
    }

    pub fn bubble(&self, j: usize) -> &Bubble {
        if j == 0 {
            &self.b1
        } else {
            &self.b2
        }
    }
}

pub fn epsilon_ij(cfg: &TwoBubbleConfig) -> Result<f64> {
    let d = cfg.separation();
    if !(d > 0.0) {
        return Err(Error::Degenerate("coincident bubble centers".into()));
    }
    let x = cfg.b1.lambda * cfg.b2.lambda * d * d;
    Ok(x.powf(-cfg.dims().p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(n: usize, k: usize, h: usize) -> SpaceDims {
        SpaceDims::new(n, k, h).unwrap()
    }

    #[test]
    fn dims_validation() {
        assert!(SpaceDims::new(3, 2, 1).is_ok());
        assert!(SpaceDims::new(3, 1, 2).is_err());
        assert!(SpaceDims::new(2, 2, 0).is_err());
        assert!(SpaceDims::new(5, 2, 2).is_err());
        let cr = SpaceDims::cr(2).unwrap();
        assert_eq!((cr.n, cr.k, cr.h, cr.q()), (4, 3, 1, Some(6)));
        assert_eq!("4, 2,2".parse::<SpaceDims>().unwrap(), d(4, 2, 2));
        assert!("4,2".parse::<SpaceDims>().is_err());
    }

    #[test]
    fn c_nk_examples() {
        assert_eq!(c_nk(d(4, 3, 1)), 64.0);
        assert_eq!(c_nk(d(3, 2, 1)), 1.0);
        assert_eq!(c_nk(d(5, 2, 3)), 81.0);
    }

    #[test]
    fn bubble_examples() {
        let b = Bubble::new(d(4, 2, 2), vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(b.eval(0.0, &[0.0, 0.0]), 2.0);
        assert_eq!(b.eval(1.0, &[0.0, 0.0]), 0.5);
        let b = Bubble::new(d(3, 2, 1), vec![0.0], 2.0).unwrap();
        assert!((b.eval(0.0, &[0.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!(Bubble::new(d(3, 2, 1), vec![0.0], 0.0).is_err());
        assert!(Bubble::new(d(3, 2, 1), vec![0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn grad_vanishes_at_center_in_eta() {
        let b = Bubble::new(d(4, 2, 2), vec![0.3, -0.2], 1.7).unwrap();
        let g = b.grad(0.4, &[0.3, -0.2]);
        assert!(g.d_eta.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn laplacian_solves_limiting_equation() {
        for dims in [d(3, 2, 1), d(4, 2, 2), d(4, 3, 1), d(5, 3, 2), d(6, 2, 4)] {
            let b = Bubble::new(dims, vec![0.1; dims.h], 2.5).unwrap();
            for &(s, t) in &[(0.01, 0.0), (0.3, 0.7), (2.0, -1.0), (10.0, 3.0)] {
                let mut z = vec![0.1; dims.h];
                z[0] += t;
                let lhs = -b.laplacian(s, &z);
                let rhs = b.eval_pstar(s, &z) / s;
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs(), "{dims:?} s={s}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn heisenberg_examples() {
        let hb = HeisenbergBubble::new(1, 0.0, 1.0).unwrap();
        assert_eq!(hb.eval_radial(0.0, 0.0), 2.0);
        assert!((hb.eval_radial(1.0, 0.0) - 1.0).abs() < 1e-15);
        let hb = HeisenbergBubble::new(2, 3.0, 1.0).unwrap();
        assert_eq!(hb.eval(&[Complex64::new(0.0, 0.0); 2], 3.0), 16.0);
    }

    #[test]
    fn heisenberg_grad_matches_fd() {
        let hb = HeisenbergBubble::new(2, 0.4, 1.3).unwrap();
        let (r, t, h) = (0.7, -0.2, 1e-6);
        let (gr, gt) = hb.grad_radial(r, t);
        let fr = (hb.eval_radial(r + h, t) - hb.eval_radial(r - h, t)) / (2.0 * h);
        let ft = (hb.eval_radial(r, t + h) - hb.eval_radial(r, t - h)) / (2.0 * h);
        assert!((gr - fr).abs() < 1e-7 * gr.abs());
        assert!((gt - ft).abs() < 1e-7 * gt.abs());
    }

    #[test]
    fn eps12_examples() {
        let dd = d(4, 3, 1);
        let b = |e: f64, l: f64| Bubble::new(dd, vec![e], l).unwrap();
        let c = TwoBubbleConfig::new(b(0.0, 1.0), b(1.0, 1.0)).unwrap();
        assert_eq!(c.eps12().unwrap(), 1.0);
        let c = TwoBubbleConfig::new(b(0.0, 4.0), b(1.0, 1.0)).unwrap();
        assert_eq!(c.eps12().unwrap(), 0.25);
        let c = TwoBubbleConfig::new(b(0.5, 3.0), b(0.5, 1.0)).unwrap();
        assert!(matches!(c.eps12(), Err(Error::Degenerate(_))));
        let c = TwoBubbleConfig::new(b(0.2, 3.0), b(1.4, 9.0)).unwrap();
        let s = TwoBubbleConfig::new(c.b1.dilate(7.3), c.b2.dilate(7.3)).unwrap();
        assert!((c.eps12().unwrap() - s.eps12().unwrap()).abs() < 1e-14 * c.eps12().unwrap());
    }

    #[test]
    fn decay_along_ray() {
        for dims in [d(3, 2, 1), d(4, 2, 2), d(5, 3, 2)] {
            let b = Bubble::new(dims, vec![0.0; dims.h], 1.0).unwrap();
            let at = |r: f64| {
                let mut z = vec![0.0; dims.h];
                z[0] = r / 2f64.sqrt();
                b.eval(r / 2f64.sqrt(), &z) * r.powf(dims.n as f64 - 2.0)
            };
            let (a, c) = (at(1e3), at(1e4));
            assert!((a - c).abs() < 0.01 * c);
        }
    }

    fn dims_strategy() -> impl Strategy<Value = SpaceDims> {
        prop_oneof![Just(d(3, 2, 1)), Just(d(4, 2, 2)), Just(d(4, 3, 1)), Just(d(5, 3, 2)), Just(d(6, 4, 2))]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn bubble_positive(dims in dims_strategy(), s in 0.0..50.0f64, t in -50.0..50.0f64, l in 0.01..100.0f64) {
            let b = Bubble::new(dims, vec![0.0; dims.h], l).unwrap();
            let mut z = vec![0.0; dims.h];
            z[0] = t;
            prop_assert!(b.eval(s, &z) > 0.0);
        }

        #[test]
        fn dilation_covariance(dims in dims_strategy(), s in 0.0..5.0f64, t in -5.0..5.0f64,
                               e in -2.0..2.0f64, l in 0.1..10.0f64, c in 0.2..7.0f64) {
            let b = Bubble::new(dims, vec![e; dims.h], l).unwrap();
            let mut z = vec![0.0; dims.h];
            z[0] = t;
            let zc: Vec<f64> = z.iter().map(|x| c * x).collect();
            let lhs = b.eval(s, &z);
            let rhs = c.powf(dims.p()) * b.dilate(c).eval(c * s, &zc);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs);
        }

        #[test]
        fn translation_covariance(dims in dims_strategy(), s in 0.0..5.0f64, t in -5.0..5.0f64,
                                  shift in -3.0..3.0f64, l in 0.1..10.0f64) {
            let b = Bubble::new(dims, vec![0.25; dims.h], l).unwrap();
            let bs = Bubble::new(dims, vec![0.25 + shift; dims.h], l).unwrap();
            let mut z = vec![0.1; dims.h];
            z[0] = t;
            let zs: Vec<f64> = z.iter().map(|x| x + shift).collect();
            let (a, c) = (b.eval(s, &z), bs.eval(s, &zs));
            prop_assert!((a - c).abs() <= 1e-14 * a);
        }

        #[test]
        fn grad_matches_central_differences(dims in dims_strategy(), s in 0.01..3.0f64, t in -3.0..3.0f64,
                                            l in 0.3..5.0f64, e in -1.0..1.0f64) {
            let step = 1e-5;
            let b = Bubble::new(dims, vec![e; dims.h], l).unwrap();
            let mut z = vec![e; dims.h];
            z[0] = t;
            let g = b.grad(s, &z);
            let bp = Bubble::new(dims, b.eta.clone(), l * (1.0 + step)).unwrap();
            let bm = Bubble::new(dims, b.eta.clone(), l * (1.0 - step)).unwrap();
            let fd = (bp.eval(s, &z) - bm.eval(s, &z)) / (2.0 * l * step);
            let scale = b.eval(s, &z) / l;
            prop_assert!((g.d_lambda - fd).abs() < 1e-6 * g.d_lambda.abs().max(1e-3 * scale));
            for i in 0..dims.h {
                let mut ep = b.eta.clone();
                let mut em = b.eta.clone();
                ep[i] += step;
                em[i] -= step;
                let fd = (Bubble::new(dims, ep, l).unwrap().eval(s, &z)
                    - Bubble::new(dims, em, l).unwrap().eval(s, &z)) / (2.0 * step);
                let scale = b.eval(s, &z) * l;
                prop_assert!((g.d_eta[i] - fd).abs() < 1e-6 * g.d_eta[i].abs().max(1e-3 * scale));
            }
        }
    }
}
