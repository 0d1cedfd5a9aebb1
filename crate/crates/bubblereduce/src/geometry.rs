//! CR sphere ↔ Heisenberg group ↔ Grushin ↔ Hardy–Sobolev coordinates.
//!
//! A cylindrical profile on ℝ^{m} × ℝʰ is stored as a function of
//! `(r, z)` with `r = |y| ≥ 0`. On the Grushin side `r = |y|` with
//! `y ∈ ℝ^{m₁}` and the substitution `v(r, z) = ψ(√r, z)` produces a
//! profile on ℝᵏ × ℝʰ with `k = (m₁ + 2)/2`.

use crate::error::{Error, Result};
use crate::model::HeisenbergBubble;
use crate::quadrature::{integrate_frame, sphere_measure, Frame, Layout, QuadratureSpec, ZCenter};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

type Profile = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(f64, &[f64]) -> (f64, Vec<f64>) + Send + Sync>;

/// A function `f(r, z)` on ℝ^{radial} × ℝ^{axial}, depending on the first
/// block only through its norm.
#[derive(Clone)]
pub struct CylFunction {
    pub layout: Layout,
    /// Dimension that governs the critical decay: N on the Euclidean side,
    /// the homogeneous dimension Q on the Grushin side.
    pub hom_dim: f64,
    /// Declared decay `f = O(ρ^{−decay})` in the homogeneous norm; `None` for
    /// bounded profiles such as curvatures.
    pub decay: Option<f64>,
    /// z-point and length scales where the profile has structure.
    pub center: Vec<f64>,
    pub width: f64,
    pub outer: f64,
    value: Profile,
    grad: Option<Gradient>,
}

impl fmt::Debug for CylFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylFunction")
            .field("layout", &self.layout)
            .field("hom_dim", &self.hom_dim)
            .field("decay", &self.decay)
            .field("center", &self.center)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl CylFunction {
    pub fn new(
        layout: Layout,
        hom_dim: f64,
        decay: Option<f64>,
        f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if layout.radial < 1 || layout.axial < 1 {
            return Err(Error::InvalidDims("both blocks need dimension at least 1".into()));
        }
        if let Some(d) = decay {
            if !(d >= hom_dim - 2.0) {
                return Err(Error::param(
                    "decay",
                    format!("declared decay {d} is below {} needed for a finite Dirichlet energy", hom_dim - 2.0),
                ));
            }
        }
        Ok(Self {
            layout,
            hom_dim,
            decay,
            center: vec![0.0; layout.axial],
            width: 1.0,
            outer: 1.0,
            value: Arc::new(f),
            grad: None,
        })
    }

    /// Attaches `(∂ᵣf, ∇_z f)`.
    pub fn with_gradient(mut self, g: impl Fn(f64, &[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hint(mut self, center: Vec<f64>, width: f64, outer: f64) -> Result<Self> {
        if center.len() != self.layout.axial {
            return Err(Error::param("center", "length must match the axial dimension"));
        }
        if !(width > 0.0 && outer >= width) {
            return Err(Error::param("width", "need 0 < width <= outer"));
        }
        self.center = center;
        self.width = width;
        self.outer = outer;
        Ok(self)
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn eval(&self, r: f64, z: &[f64]) -> f64 {
        (self.value)(r, z)
    }

    /// `(∂ᵣf, ∇_z f)`, analytic when attached, otherwise by central differences.
    pub fn gradient(&self, r: f64, z: &[f64]) -> (f64, Vec<f64>) {
        if let Some(g) = &self.grad {
            return g(r, z);
        }
        let h = 1e-5 * (1.0 + r.abs());
        let fr = if r > h {
            ((self.value)(r + h, z) - (self.value)(r - h, z)) / (2.0 * h)
        } else {
            (-3.0 * (self.value)(r, z) + 4.0 * (self.value)(r + h, z) - (self.value)(r + 2.0 * h, z)) / (2.0 * h)
        };
        let mut zz = z.to_vec();
        let fz = (0..z.len())
            .map(|i| {
                let hz = 1e-5 * (1.0 + z[i].abs());
                zz[i] = z[i] + hz;
                let a = (self.value)(r, &zz);
                zz[i] = z[i] - hz;
                let b = (self.value)(r, &zz);
                zz[i] = z[i];
                (a - b) / (2.0 * hz)
            })
            .collect();
        (fr, fz)
    }
}

/// The CR equivalence S^{2n+1} \ {(0, …, −1)} → ℍⁿ.
pub fn cr_to_heisenberg(theta: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    if theta.len() < 2 {
        return Err(Error::param("theta", "need at least two complex coordinates"));
    }
    let norm2: f64 = theta.iter().map(|c| c.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("point is not on the unit sphere (|theta|^2 = {norm2})")));
    }
    let w = theta[theta.len() - 1];
    let one = Complex64::new(1.0, 0.0);
    if (one + w).norm() < 1e-14 {
        return Err(Error::Domain("the pole theta_{n+1} = -1 has no image".into()));
    }
    let z = theta[..theta.len() - 1].iter().map(|c| c / (one + w)).collect();
    let t = (Complex64::i() * (one - w) / (one + w)).re;
    Ok((z, t))
}

/// Inverse of [`cr_to_heisenberg`]: with ζ = t + i|Z|², the last coordinate
/// is w = (i − ζ)/(i + ζ) and ϑⱼ = Zⱼ(1 + w).
pub fn heisenberg_to_cr(z: &[Complex64], t: f64) -> Vec<Complex64> {
    let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let zeta = Complex64::new(t, r2);
    let i = Complex64::i();
    let w = (i - zeta) / (i + zeta);
    let mut out: Vec<Complex64> = z.iter().map(|c| c * (1.0 + w)).collect();
    out.push(w);
    out
}

/// `v(r, z) = ψ(√r, z)`; ψ lives on ℝ^{m₁} × ℝ^{m₂} with m₁ even.
pub fn grushin_to_hs(psi: &CylFunction) -> Result<CylFunction> {
    let m1 = psi.layout.radial;
    if m1 % 2 != 0 {
        return Err(Error::UnsupportedDimension(format!("m1 = {m1} must be even")));
    }
    let layout = Layout { radial: (m1 + 2) / 2, axial: psi.layout.axial };
    let inner = psi.value.clone();
    let mut out = CylFunction::new(layout, (psi.hom_dim + 2.0) / 2.0, psi.decay.map(|d| d / 2.0), move |r, z| {
        inner(r.sqrt(), z)
    })?;
    if let Some(g) = psi.grad.clone() {
        out = out.with_gradient(move |r, z| {
            let q = r.sqrt();
            let (gr, gz) = g(q, z);
            (gr / (2.0 * q), gz)
        });
    }
    out.center = psi.center.clone();
    out.width = psi.width.min(psi.width * psi.width);
    out.outer = psi.outer.max(psi.outer * psi.outer);
    Ok(out)
}

/// `ψ(r, z) = v(r², z)`, the inverse of [`grushin_to_hs`].
pub fn hs_to_grushin(v: &CylFunction) -> Result<CylFunction> {
    if v.layout.radial < 1 {
        return Err(Error::InvalidDims("radial dimension must be at least 1".into()));
    }
    let layout = Layout { radial: 2 * v.layout.radial - 2, axial: v.layout.axial };
    if layout.radial == 0 {
        return Err(Error::UnsupportedDimension("k = 1 has no Grushin preimage".into()));
    }
    let inner = v.value.clone();
    let mut out = CylFunction::new(layout, 2.0 * v.hom_dim - 2.0, v.decay.map(|d| 2.0 * d), move |r, z| {
        inner(r * r, z)
    })?;
    if let Some(g) = v.grad.clone() {
        out = out.with_gradient(move |r, z| {
            let (gr, gz) = g(r * r, z);
            (2.0 * r * gr, gz)
        });
    }
    out.center = v.center.clone();
    out.width = v.width.sqrt().min(v.width);
    out.outer = v.outer.sqrt().max(v.outer);
    Ok(out)
}

/// φ(r, z) = Φ(√r, z)/4.
pub fn curvature_transfer(phi: &CylFunction) -> Result<CylFunction> {
    let inner = phi.value.clone();
    let layout = Layout { radial: (phi.layout.radial + 2) / 2, axial: phi.layout.axial };
    let mut out = CylFunction::new(layout, (phi.hom_dim + 2.0) / 2.0, None, move |r, z| inner(r.sqrt(), z) / 4.0)?;
    out.center = phi.center.clone();
    Ok(out)
}

fn integrate_profile(
    u: &CylFunction,
    spec: &QuadratureSpec,
    density: impl Fn(f64, &[f64]) -> f64 + Sync,
) -> Result<f64> {
    if u.decay.is_none() {
        return Err(Error::Domain("Dirichlet energy needs a declared decay rate".into()));
    }
    let frame = Frame::Single { center: u.center.clone() };
    let marks = [ZCenter::new(u.center.clone(), u.width)];
    Ok(integrate_frame(&density, u.layout, &frame, &marks, u.outer, spec)?.value)
}

/// ∫ (ψᵣ² + 4r²|∇_z ψ|²) over ℝ^{m₁} × ℝ^{m₂}: the Grushin Dirichlet energy.
pub fn dirichlet_norm_grushin(psi: &CylFunction, spec: &QuadratureSpec) -> Result<f64> {
    integrate_profile(psi, spec, |r, z| {
        let (gr, gz) = psi.gradient(r, z);
        gr * gr + 4.0 * r * r * gz.iter().map(|g| g * g).sum::<f64>()
    })
}

/// ∫_{ℍⁿ} |∇_{ℍⁿ} u|² dZ dt for a profile `u(|Z|, t)`.
pub fn dirichlet_norm_heisenberg(u: &CylFunction, n: usize, spec: &QuadratureSpec) -> Result<f64> {
    if u.layout != (Layout { radial: 2 * n, axial: 1 }) {
        return Err(Error::InvalidDims(format!("a profile on H^{n} needs layout (2n, 1), got {:?}", u.layout)));
    }
    dirichlet_norm_grushin(u, spec)
}

/// ∫ |∇v|² over ℝᵏ × ℝʰ.
pub fn dirichlet_norm_hs(v: &CylFunction, spec: &QuadratureSpec) -> Result<f64> {
    integrate_profile(v, spec, |r, z| {
        let (gr, gz) = v.gradient(r, z);
        gr * gr + gz.iter().map(|g| g * g).sum::<f64>()
    })
}

/// The constant 2ω_{2n}/ω_{n+1} relating the two Dirichlet energies.
pub fn norm_identity_constant(n: usize) -> f64 {
    2.0 * sphere_measure(2 * n) / sphere_measure(n + 1)
}

/// Heisenberg energy of `u` over the Euclidean energy of its image.
pub fn norm_identity_ratio(u: &CylFunction, n: usize, spec: &QuadratureSpec) -> Result<f64> {
    let top = dirichlet_norm_heisenberg(u, n, spec)?;
    let v = grushin_to_hs(u)?;
    let bottom = dirichlet_norm_hs(&v, spec)?;
    if bottom == 0.0 {
        return Err(Error::Degenerate("the Euclidean energy vanishes".into()));
    }
    Ok(top / bottom)
}

/// Named profiles on ℍⁿ used by the demos and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinProfile {
    /// V_{0,1}.
    Bubble,
    /// (1 + |Z|⁴ + t²)^{−1.1(Q−2)/4}.
    Power,
}

impl std::str::FromStr for BuiltinProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bubble" => Ok(Self::Bubble),
            "power" => Ok(Self::Power),
            other => Err(Error::param("profile", format!("unknown profile `{other}` (expected bubble or power)"))),
        }
    }
}

impl BuiltinProfile {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bubble => "bubble",
            Self::Power => "power",
        }
    }

    pub fn on_heisenberg(&self, n: usize) -> Result<CylFunction> {
        match self {
            Self::Bubble => heisenberg_bubble_profile(&HeisenbergBubble::new(n, 0.0, 1.0)?),
            Self::Power => {
                let q = (2 * n + 2) as f64;
                let a = -1.1 * (q - 2.0) / 4.0;
                let layout = Layout { radial: 2 * n, axial: 1 };
                let f = CylFunction::new(layout, q, Some(1.1 * (q - 2.0)), move |r, z| {
                    (1.0 + r.powi(4) + z[0] * z[0]).powf(a)
                })?;
                Ok(f.with_gradient(move |r, z| {
                    let e = 1.0 + r.powi(4) + z[0] * z[0];
                    let d = a * e.powf(a - 1.0);
                    (d * 4.0 * r.powi(3), vec![d * 2.0 * z[0]])
                }))
            }
        }
    }
}

/// V_{s,λ} as a profile on ℍⁿ with its analytic gradient.
pub fn heisenberg_bubble_profile(b: &HeisenbergBubble) -> Result<CylFunction> {
    let q = (2 * b.n + 2) as f64;
    let layout = Layout { radial: 2 * b.n, axial: 1 };
    let (b1, b2) = (*b, *b);
    let w = (1.0 / b.lambda).min(1.0 / (b.lambda * b.lambda));
    let o = (1.0 / b.lambda).max(1.0 / (b.lambda * b.lambda));
    CylFunction::new(layout, q, Some(q - 2.0), move |r, z| b1.eval_radial(r, z[0]))?
        .with_gradient(move |r, z| {
            let (gr, gt) = b2.grad_radial(r, z[0]);
            (gr, vec![gt])
        })
        .with_hint(vec![b.s], w, o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bubble, SpaceDims};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cr_examples() {
        let (z, t) = cr_to_heisenberg(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(z, vec![c(0.0, 0.0)]);
        assert_eq!(t, 0.0);
        let (z, t) = cr_to_heisenberg(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(z, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(t, 0.0);
        let (z, t) = cr_to_heisenberg(&[c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(z, vec![c(0.0, 0.0)]);
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pole_and_off_sphere_rejected() {
        assert!(matches!(cr_to_heisenberg(&[c(0.0, 0.0), c(-1.0, 0.0)]), Err(Error::Domain(_))));
        assert!(matches!(cr_to_heisenberg(&[c(0.5, 0.0), c(0.0, 0.0)]), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn cr_round_trip(a in -2.0f64..2.0, b in -2.0f64..2.0, c2 in -2.0f64..2.0, t in -3.0f64..3.0) {
            let z = vec![c(a, b), c(c2, 0.3)];
            let theta = heisenberg_to_cr(&z, t);
            let n2: f64 = theta.iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((n2 - 1.0).abs() < 1e-12);
            let (z2, t2) = cr_to_heisenberg(&theta).unwrap();
            for (x, y) in z.iter().zip(&z2) {
                prop_assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
            }
            prop_assert!((t - t2).abs() < 1e-12 * (1.0 + t.abs()));
        }
    }

    fn grushin(f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> CylFunction {
        CylFunction::new(Layout { radial: 2, axial: 1 }, 4.0, None, f).unwrap()
    }

    #[test]
    fn grushin_examples() {
        let v = grushin_to_hs(&grushin(|_, _| 1.0)).unwrap();
        assert_eq!(v.layout, Layout { radial: 2, axial: 1 });
        assert_eq!(v.eval(0.3, &[1.0]), 1.0);
        let v = grushin_to_hs(&grushin(|r, _| r * r)).unwrap();
        for r in [0.0, 0.25, 1.0, 7.0] {
            assert!((v.eval(r, &[0.0]) - r).abs() <= 1e-15 * r);
        }
        let odd = CylFunction::new(Layout { radial: 3, axial: 1 }, 5.0, None, |_, _| 1.0).unwrap();
        assert!(matches!(grushin_to_hs(&odd), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn grushin_round_trip_is_exact() {
        let psi = grushin(|r, z| (1.0 + r).ln() * (z[0] - 0.3).cos());
        let back = hs_to_grushin(&grushin_to_hs(&psi).unwrap()).unwrap();
        assert_eq!(back.layout, psi.layout);
        for i in 0..20 {
            let r = 0.37 * i as f64 + 0.01;
            let z = [0.5 - 0.11 * i as f64];
            assert_eq!(back.eval(r, &z), psi.eval(r, &z));
        }
    }

    #[test]
    fn suprema_preserved() {
        let psi = grushin(|r, z| (-(r - 1.3).powi(2) - z[0] * z[0]).exp());
        let v = grushin_to_hs(&psi).unwrap();
        // v at r² reproduces ψ at r, so sampling v on the squared grid hits the same maximum.
        let rs: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
        let sup_psi = rs.iter().map(|&r| psi.eval(r, &[0.0])).fold(f64::MIN, f64::max);
        let sup_v = rs.iter().map(|&r| v.eval(r * r, &[0.0])).fold(f64::MIN, f64::max);
        assert_eq!(sup_psi, sup_v);
    }

    #[test]
    fn curvature_examples() {
        let phi = curvature_transfer(&grushin(|_, _| 4.0)).unwrap();
        assert_eq!(phi.eval(2.0, &[1.0]), 1.0);
        let phi = curvature_transfer(&grushin(|r, _| 4.0 * r.powi(4))).unwrap();
        for r in [0.5, 2.0, 3.0] {
            assert!((phi.eval(r, &[0.0]) - r * r).abs() < 1e-13 * r * r);
        }
        // Φ = 4(1 + εK(r², t)) becomes φ = 1 + εK(r, t).
        let eps = 0.01;
        let k = |r: f64, t: f64| -r.powf(1.5) - t.abs().powf(1.5);
        let big = grushin(move |r, z| 4.0 * (1.0 + eps * k(r * r, z[0])));
        let phi = curvature_transfer(&big).unwrap();
        for (r, t) in [(0.3, 0.1), (1.0, -0.4)] {
            assert!((phi.eval(r, &[t]) - (1.0 + eps * k(r, t))).abs() < 1e-14);
        }
    }

    #[test]
    fn bubble_correspondence_pointwise() {
        for n in [1usize, 2] {
            let hb = HeisenbergBubble::new(n, 0.0, 1.0).unwrap();
            assert_eq!(hb.c0(), ((2 * n) as f64).powi(n as i32));
            let v = grushin_to_hs(&heisenberg_bubble_profile(&hb).unwrap()).unwrap();
            let u = Bubble::new(SpaceDims::cr(n).unwrap(), vec![0.0], 1.0).unwrap();
            let scale = 2f64.powi(n as i32);
            for i in 0..50 {
                let r = 0.05 + 0.3 * i as f64;
                let t = -4.0 + 0.17 * i as f64;
                let (a, b) = (v.eval(r, &[t]), scale * u.eval(r, &[t]));
                assert!((a - b).abs() <= 1e-12 * b, "n={n} r={r} t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_profile_has_zero_energy() {
        let z = CylFunction::new(Layout { radial: 2, axial: 1 }, 4.0, Some(2.0), |_, _| 0.0).unwrap();
        assert_eq!(dirichlet_norm_heisenberg(&z, 1, &QuadratureSpec::default()).unwrap(), 0.0);
        assert!(matches!(norm_identity_ratio(&z, 1, &QuadratureSpec::default()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn decay_must_be_declared_and_sufficient() {
        assert!(CylFunction::new(Layout { radial: 2, axial: 1 }, 4.0, Some(1.0), |_, _| 0.0).is_err());
        let bounded = grushin(|_, _| 1.0);
        assert!(matches!(dirichlet_norm_grushin(&bounded, &QuadratureSpec::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn bubble_energy_regression() {
        // V_{0,1} solves −Δ_H V = V^{(Q+2)/(Q−2)}, so its energy equals ∫V^{2Q/(Q−2)},
        // which the chain turns into 8∫U^{4}/|y| = 4π² for n = 1.
        let spec = QuadratureSpec::with_rel_tol(1e-10);
        let u = BuiltinProfile::Bubble.on_heisenberg(1).unwrap();
        let e = dirichlet_norm_heisenberg(&u, 1, &spec).unwrap();
        assert!((e - 4.0 * PI * PI).abs() < 1e-8 * e, "{e}");
    }

    #[test]
    fn energy_is_dilation_invariant() {
        let spec = QuadratureSpec::with_rel_tol(1e-10);
        let vals: Vec<f64> = [1.0, 2.0, 5.0]
            .iter()
            .map(|&l| {
                let u = heisenberg_bubble_profile(&HeisenbergBubble::new(1, 0.0, l).unwrap()).unwrap();
                dirichlet_norm_heisenberg(&u, 1, &spec).unwrap()
            })
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((hi - lo) / lo < 1e-6, "{vals:?}");
    }

    #[test]
    fn norm_identity_for_two_profiles() {
        let spec = QuadratureSpec::with_rel_tol(1e-9);
        for (n, expected) in [(1usize, 2.0), (2, PI)] {
            assert!((norm_identity_constant(n) - expected).abs() < 1e-14);
            for p in [BuiltinProfile::Bubble, BuiltinProfile::Power] {
                let u = p.on_heisenberg(n).unwrap();
                let r = norm_identity_ratio(&u, n, &spec).unwrap();
                assert!((r - expected).abs() < 1e-6 * expected, "n={n} {p:?}: {r}");
            }
        }
    }

    #[test]
    fn numeric_gradient_matches_analytic() {
        let u = BuiltinProfile::Power.on_heisenberg(1).unwrap();
        let bare = CylFunction::new(u.layout, u.hom_dim, u.decay, {
            let u = u.clone();
            move |r, z| u.eval(r, z)
        })
        .unwrap();
        for (r, t) in [(0.0, 0.5), (0.7, -0.3), (2.0, 1.0)] {
            let (a, az) = u.gradient(r, &[t]);
            let (b, bz) = bare.gradient(r, &[t]);
            assert!((a - b).abs() < 1e-8 && (az[0] - bz[0]).abs() < 1e-8);
        }
    }
}
