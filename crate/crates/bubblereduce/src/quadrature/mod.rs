//! Integration of cylindrically symmetric integrands over ℝᵏ × ℝʰ.
//!
//! An integrand `f(s, z)` depends on `y` only through `s = |y|`. Around a
//! single z-center it is assumed radial in `z − center` and the integral
//! reduces to `ω_k ω_h ∫∫ s^{k−1} t^{h−1} f ds dt`. Along an axis through two
//! z-centers, `z = origin + par·e + perp·θ` with θ on the unit sphere
//! orthogonal to `e`; the integral becomes
//! `ω_k ω_{h−1} ∫∫∫ s^{k−1} perp^{h−2} f ds dpar dperp`, or
//! `ω_k ∫∫ s^{k−1} f ds dpar` when `h = 1`. The perpendicular direction is
//! sampled at `±θ₀` and averaged, which is exact whenever `f` is invariant
//! under rotations about the axis up to terms odd in θ (and always exact
//! for `h = 2`).

pub mod beta;
pub mod cubature;

pub use beta::{beta, beta_integral_s, beta_integral_t, check_recurrences, ln_beta, sphere_measure, RecurrenceReport};
pub use cubature::{Estimate, Limits, Patch, PatchMap, Segment, ToleranceBase};

use crate::error::{Error, Result};
use crate::model::SpaceDims;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest z-block dimension supported by the stack buffers below.
pub const MAX_H: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Compactification {
    /// `x = a + c·u/(1−u)` on every semi-infinite segment.
    #[default]
    Rational,
    /// `x = a(1−u)^{−1/κ}` on the radial tail, for integrands decaying
    /// like |x|^{−N−κ} with small κ > 0.
    Power { kappa: f64 },
}

impl Compactification {
    fn tail(self, a: f64) -> Segment {
        match self {
            Compactification::Rational => Segment::Upper { a, scale: a },
            Compactification::Power { kappa } => Segment::Tail { a, kappa },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub compactification: Compactification,
    #[serde(default)]
    pub base: ToleranceBase,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-14, max_depth: 30, compactification: Compactification::Rational, base: ToleranceBase::Value }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    /// The same tolerances measured against ∫|f|.
    pub fn on_magnitude(self) -> Self {
        Self { base: ToleranceBase::Magnitude, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::param("rel_tol", "must be positive"));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::param("abs_tol", "must be non-negative"));
        }
        if self.max_depth < 1 {
            return Err(Error::param("max_depth", "must be at least 1"));
        }
        if let Compactification::Power { kappa } = self.compactification {
            if !(kappa > 0.0) || !kappa.is_finite() {
                return Err(Error::param("kappa", "must be positive"));
            }
        }
        Ok(())
    }

    fn limits(&self) -> Limits {
        Limits {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_depth: self.max_depth,
            max_boxes: 400_000,
            base: self.base,
        }
    }
}

/// Dimensions of the radial block and the axial block. Unlike
/// [`SpaceDims`] this allows `radial = 1` and any `axial ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub radial: usize,
    pub axial: usize,
}

impl From<SpaceDims> for Layout {
    fn from(d: SpaceDims) -> Self {
        Layout { radial: d.k, axial: d.h }
    }
}

/// A z-center with the length scale of the structure around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ZCenter {
    pub z: Vec<f64>,
    pub width: f64,
}

impl ZCenter {
    pub fn new(z: Vec<f64>, width: f64) -> Self {
        Self { z, width }
    }
}

/// How the z-block is reduced.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    /// Radial about `center`.
    Single { center: Vec<f64> },
    /// Axial about the line `origin + ℝ·axis` (axis of unit length).
    Axial { origin: Vec<f64>, axis: Vec<f64> },
}

impl Frame {
    /// The axial frame through two points, or along `e₁` when they coincide.
    pub fn through(a: &[f64], b: &[f64]) -> Frame {
        let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let n = norm(&d);
        let axis = if n > 0.0 {
            d.iter().map(|x| x / n).collect()
        } else {
            let mut e = vec![0.0; a.len()];
            e[0] = 1.0;
            e
        };
        Frame::Axial { origin: a.to_vec(), axis }
    }

    /// Distance from `p` to the frame's center point or axis line.
    pub fn offset(&self, p: &[f64]) -> f64 {
        match self {
            Frame::Single { center } => dist(p, center),
            Frame::Axial { origin, axis } => {
                let d: Vec<f64> = p.iter().zip(origin).map(|(x, y)| x - y).collect();
                let par = dot(&d, axis);
                d.iter().zip(axis).map(|(x, e)| (x - par * e).powi(2)).sum::<f64>().sqrt()
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A unit vector orthogonal to `e` (|e| = 1, len ≥ 2).
fn orthogonal_unit(e: &[f64]) -> Vec<f64> {
    let j = (0..e.len())
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap_or(0);
    let mut v: Vec<f64> = e.iter().map(|x| -x * e[j]).collect();
    v[j] += 1.0;
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

const GROWTH: f64 = 8.0;

/// Breakpoints of `[0, outer]` refined geometrically from `w_min`.
pub fn semi_points(w_min: f64, outer: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut x = w_min;
    while x < outer * (1.0 - 1e-12) {
        pts.push(x);
        x *= GROWTH;
    }
    pts.push(outer);
    pts
}

/// Breakpoints of `[lo, hi]` refined geometrically around each mark `(position, width)`.
pub fn line_points(marks: &[(f64, f64)], lo: f64, hi: f64) -> Vec<f64> {
    let mut ms: Vec<(f64, f64)> = marks.to_vec();
    ms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pts: Vec<f64> = vec![lo, hi];
    for (i, &(p, w)) in ms.iter().enumerate() {
        pts.push(p);
        let left = if i == 0 { p - lo } else { 0.5 * (p - ms[i - 1].0) };
        let right = if i + 1 == ms.len() { hi - p } else { 0.5 * (ms[i + 1].0 - p) };
        let mut x = w;
        while x < left {
            pts.push(p - x);
            x *= GROWTH;
        }
        let mut x = w;
        while x < right {
            pts.push(p + x);
            x *= GROWTH;
        }
        if i + 1 < ms.len() {
            pts.push(p + right);
        }
    }
    pts.retain(|x| (lo..=hi).contains(x));
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    pts
}

fn finite(pts: &[f64]) -> Vec<Segment> {
    pts.windows(2).map(|w| Segment::Finite { a: w[0], b: w[1] }).collect()
}

/// `[0, ∞)` or ℝ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Half,
    Line,
}

/// Splits a product of half-lines and lines into the box `|x − center|_∞ ≤ radius`
/// (with the given breakpoints on each axis) and the faces of its exterior.
/// Half-line axes must have `center = 0`.
pub fn box_and_faces<const D: usize>(
    kinds: [AxisKind; D],
    inner: [Vec<f64>; D],
    center: [f64; D],
    radius: f64,
    tail: Compactification,
) -> Vec<Patch<D>> {
    let mut patches = vec![Patch { axes: inner.map(|p| finite(&p)), map: PatchMap::Identity }];
    for dim in 0..D {
        let signs: &[f64] = match kinds[dim] {
            AxisKind::Half => &[1.0],
            AxisKind::Line => &[-1.0, 1.0],
        };
        for &sign in signs {
            let axes: [Vec<Segment>; D] = std::array::from_fn(|e| {
                if e == dim {
                    vec![Segment::Finite { a: 1.0, b: 2.0 }, tail.tail(2.0)]
                } else {
                    match kinds[e] {
                        AxisKind::Half => vec![Segment::Finite { a: 0.0, b: 1.0 }],
                        AxisKind::Line => finite(&[-1.0, 0.0, 1.0]),
                    }
                }
            });
            patches.push(Patch { axes, map: PatchMap::Face { dim, sign, radius, center } });
        }
    }
    patches
}

/// Integrates `f(s, z)` in the given frame. `marks` give the z-points and
/// widths where the integrand concentrates; `outer` is the largest length
/// scale of interest (separation of the marks, model radii, …).
pub fn integrate_frame<F>(
    f: &F,
    layout: Layout,
    frame: &Frame,
    marks: &[ZCenter],
    outer: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let h = layout.axial;
    if h > MAX_H {
        return Err(Error::UnsupportedDimension(format!("h = {h} exceeds {MAX_H}")));
    }
    if marks.is_empty() {
        return Err(Error::param("marks", "at least one mark is required"));
    }
    let w_min = marks.iter().map(|m| m.width).fold(f64::INFINITY, f64::min);
    if !(w_min > 0.0) || !w_min.is_finite() {
        return Err(Error::param("width", "mark widths must be positive"));
    }
    let outer = outer.max(marks.iter().map(|m| m.width).fold(0.0, f64::max));
    let wk = sphere_measure(layout.radial);
    let kpow = (layout.radial - 1) as i32;
    let limits = spec.limits();
    match frame {
        Frame::Single { center } => {
            if center.len() != h {
                return Err(Error::param("center", "length must equal h"));
            }
            let wh = sphere_measure(h);
            let r = 2.0 * outer;
            let pts = semi_points(w_min, r);
            let patches = box_and_faces([AxisKind::Half; 2], [pts.clone(), pts], [0.0; 2], r, spec.compactification);
            let hpow = (h - 1) as i32;
            let g = |p: &[f64; 2]| {
                let (s, t) = (p[0], p[1]);
                let mut z = [0.0; MAX_H];
                z[..h].copy_from_slice(center);
                let v = if h == 1 {
                    z[0] = center[0] + t;
                    let a = f(s, &z[..1]);
                    z[0] = center[0] - t;
                    0.5 * (a + f(s, &z[..1]))
                } else {
                    z[0] += t;
                    f(s, &z[..h])
                };
                wk * wh * s.powi(kpow) * t.powi(hpow) * v
            };
            cubature::cubature_patches(&g, &patches, &limits)
        }
        Frame::Axial { origin, axis } => {
            if origin.len() != h || axis.len() != h {
                return Err(Error::param("axis", "origin and axis must have length h"));
            }
            let par_marks: Vec<(f64, f64)> = marks
                .iter()
                .map(|m| {
                    let d: Vec<f64> = m.z.iter().zip(origin).map(|(x, y)| x - y).collect();
                    (dot(&d, axis), m.width)
                })
                .collect();
            let pmin = par_marks.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
            let pmax = par_marks.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
            let mid = 0.5 * (pmin + pmax);
            let w_max = marks.iter().map(|m| m.width).fold(0.0, f64::max);
            let r = 2.0 * outer.max(0.5 * (pmax - pmin) + w_max);
            let s_pts = semi_points(w_min, r);
            let p_pts = line_points(&par_marks, mid - r, mid + r);
            if h == 1 {
                let sign = axis[0].signum();
                let patches = box_and_faces([AxisKind::Half, AxisKind::Line], [s_pts, p_pts], [0.0, mid], r, spec.compactification);
                let g = |p: &[f64; 2]| {
                    let z = [origin[0] + sign * p[1]];
                    wk * p[0].powi(kpow) * f(p[0], &z)
                };
                cubature::cubature_patches(&g, &patches, &limits)
            } else {
                let e_perp = orthogonal_unit(axis);
                let wperp = sphere_measure(h - 1);
                let ppow = (h - 2) as i32;
                let patches = box_and_faces(
                    [AxisKind::Half, AxisKind::Line, AxisKind::Half],
                    [s_pts.clone(), p_pts, s_pts],
                    [0.0, mid, 0.0],
                    r,
                    spec.compactification,
                );
                let g = |p: &[f64; 3]| {
                    let (s, par, perp) = (p[0], p[1], p[2]);
                    let mut zp = [0.0; MAX_H];
                    let mut zm = [0.0; MAX_H];
                    for i in 0..h {
                        let base = origin[i] + par * axis[i];
                        zp[i] = base + perp * e_perp[i];
                        zm[i] = base - perp * e_perp[i];
                    }
                    let v = 0.5 * (f(s, &zp[..h]) + f(s, &zm[..h]));
                    wk * wperp * s.powi(kpow) * perp.powi(ppow) * v
                };
                cubature::cubature_patches(&g, &patches, &limits)
            }
        }
    }
}

/// Integrates `f(s, z)` over the ball `s² + |z − ball.z|² < ball.width²`,
/// reduced in `frame` as in [`integrate_frame`]. The ball is parametrized in
/// polar (h = 1 or a radial frame) or spherical (axial frame) coordinates
/// about its center, which must lie on the frame's center or axis.
pub fn integrate_ball<F>(
    f: &F,
    layout: Layout,
    frame: &Frame,
    ball: &ZCenter,
    marks: &[ZCenter],
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let h = layout.axial;
    if h > MAX_H || ball.z.len() != h {
        return Err(Error::param("ball", "center must have h <= 16 components"));
    }
    let rad = ball.width;
    if !(rad > 0.0) || !rad.is_finite() {
        return Err(Error::param("ball", "radius must be positive"));
    }
    if frame.offset(&ball.z) > 1e-12 * (1.0 + norm(&ball.z)) && h > 1 {
        return Err(Error::UnsupportedDimension("the ball center is off the integration frame".into()));
    }
    let wk = sphere_measure(layout.radial);
    let kpow = (layout.radial - 1) as i32;
    let limits = spec.limits();
    let c = &ball.z;
    let axis: Vec<f64> = match frame {
        Frame::Axial { axis, .. } => axis.clone(),
        Frame::Single { .. } => {
            let mut e = vec![0.0; h];
            e[0] = 1.0;
            e
        }
    };
    // Signed positions of the marks along the axis through the ball center.
    let along: Vec<(f64, f64)> = marks
        .iter()
        .filter(|m| m.z.len() == h)
        .map(|m| {
            let d: Vec<f64> = m.z.iter().zip(c).map(|(x, y)| x - y).collect();
            (dot(&d, &axis), m.width)
        })
        .collect();
    let mut rho_marks: Vec<(f64, f64)> = along.iter().map(|&(d, w)| (d.abs(), w)).collect();
    if rho_marks.is_empty() {
        rho_marks.push((0.0, rad));
    }
    let rho = line_points(&rho_marks, 0.0, rad);
    let mut theta_marks = vec![(0.5 * PI, 0.25)];
    for &(d, w) in &along {
        if d != 0.0 {
            let tw = (w / d.abs()).min(0.25);
            theta_marks.push((if d > 0.0 { 0.0 } else { PI }, tw));
        }
    }
    let theta = line_points(&theta_marks, 0.0, PI);
    let single = matches!(frame, Frame::Single { .. }) && h > 1;
    if h == 1 {
        let axes = [finite(&rho), finite(&theta)];
        let g = |p: &[f64; 2]| {
            let (r, th) = (p[0], p[1]);
            let s = r * th.sin();
            let z = [c[0] + r * th.cos() * axis[0]];
            wk * s.powi(kpow) * r * f(s, &z)
        };
        return cubature::cubature(&g, &axes, &limits);
    }
    if single {
        let wh = sphere_measure(h);
        let hpow = (h - 1) as i32;
        let psi = line_points(&[(0.0, 0.05), (0.5 * PI, 0.05)], 0.0, 0.5 * PI);
        let axes = [finite(&rho), finite(&psi)];
        let g = |p: &[f64; 2]| {
            let (r, ps) = (p[0], p[1]);
            let (s, t) = (r * ps.cos(), r * ps.sin());
            let mut z = [0.0; MAX_H];
            z[..h].copy_from_slice(c);
            z[0] += t;
            wk * wh * s.powi(kpow) * t.powi(hpow) * r * f(s, &z[..h])
        };
        return cubature::cubature(&g, &axes, &limits);
    }
    let e_perp = orthogonal_unit(&axis);
    let wperp = sphere_measure(h - 1);
    let ppow = (h - 2) as i32;
    let psi = line_points(&[(0.0, 0.05), (0.5 * PI, 0.05)], 0.0, 0.5 * PI);
    let axes = [finite(&rho), finite(&theta), finite(&psi)];
    let g = |p: &[f64; 3]| {
        let (r, th, ps) = (p[0], p[1], p[2]);
        let par = r * th.cos();
        let (s, perp) = (r * th.sin() * ps.cos(), r * th.sin() * ps.sin());
        let mut zp = [0.0; MAX_H];
        let mut zm = [0.0; MAX_H];
        for i in 0..h {
            let base = c[i] + par * axis[i];
            zp[i] = base + perp * e_perp[i];
            zm[i] = base - perp * e_perp[i];
        }
        let v = 0.5 * (f(s, &zp[..h]) + f(s, &zm[..h]));
        wk * wperp * s.powi(kpow) * perp.powi(ppow) * r * r * th.sin() * v
    };
    cubature::cubature(&g, &axes, &limits)
}

/// Integrates a cylindrical `f(s, z)` over ℝᴺ against 0, 1 or 2 z-centers.
///
/// With no center the integrand is taken radial about `z = 0` with unit
/// width; with one center radial about it; with two centers the axial
/// reduction along the line through them is used (along `e₁` if they
/// coincide).
pub fn integrate_cyl<F>(f: &F, dims: SpaceDims, centers: &[ZCenter], spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64, &[f64]) -> f64 + Sync,
{
    let h = dims.h;
    for c in centers {
        if c.z.len() != h {
            return Err(Error::param("centers", "each center must have h components"));
        }
    }
    match centers {
        [] => {
            let c = ZCenter::new(vec![0.0; h], 1.0);
            integrate_frame(f, dims.into(), &Frame::Single { center: c.z.clone() }, &[c], 1.0, spec)
        }
        [c] => integrate_frame(f, dims.into(), &Frame::Single { center: c.z.clone() }, centers, c.width, spec),
        [a, b] => {
            let frame = Frame::through(&a.z, &b.z);
            let sep = dist(&a.z, &b.z);
            integrate_frame(f, dims.into(), &frame, centers, sep, spec)
        }
        _ => Err(Error::param("centers", "at most two z-centers are supported")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dims(n: usize, k: usize, h: usize) -> SpaceDims {
        SpaceDims::new(n, k, h).unwrap()
    }

    #[test]
    fn ball_volume_in_every_frame() {
        for (d, frame, c) in [
            (dims(3, 2, 1), Frame::Single { center: vec![0.3] }, vec![0.3]),
            (dims(4, 3, 1), Frame::through(&[0.0], &[1.0]), vec![0.5]),
            (dims(5, 3, 2), Frame::Single { center: vec![0.1, 0.2] }, vec![0.1, 0.2]),
            (dims(5, 3, 2), Frame::through(&[0.0, 0.0], &[1.0, 1.0]), vec![0.4, 0.4]),
        ] {
            let ball = ZCenter::new(c.clone(), 0.7);
            let marks = [ZCenter::new(vec![0.0; d.h], 0.01)];
            let spec = QuadratureSpec::with_rel_tol(1e-11);
            let v = integrate_ball(&|_, _| 1.0, d.into(), &frame, &ball, &marks, &spec).unwrap().value;
            let exact = sphere_measure(d.n) * 0.7f64.powi(d.n as i32) / d.n as f64;
            assert!((v - exact).abs() < 1e-10 * exact, "{d} {v} {exact}");
        }
        let off = Frame::through(&[0.0, 0.0], &[1.0, 0.0]);
        let ball = ZCenter::new(vec![0.0, 0.5], 0.2);
        let r = integrate_ball(&|_, _| 1.0, dims(5, 3, 2).into(), &off, &ball, &[], &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn ball_split_matches_whole_space_for_a_gaussian() {
        let d = dims(4, 3, 1);
        let f = |s: f64, z: &[f64]| (-(s * s) - (z[0] - 0.2).powi(2)).exp();
        let spec = QuadratureSpec::with_rel_tol(1e-11);
        let ball = ZCenter::new(vec![0.2], 0.5);
        let inside = integrate_ball(&f, d.into(), &Frame::Single { center: vec![0.2] }, &ball, &[], &spec).unwrap();
        let r2: f64 = 0.25;
        // ∫_{|x|<r} e^{−|x|²} over ℝ⁴ = π²(1 − (1 + r²)e^{−r²}).
        let exact = PI * PI * (1.0 - (1.0 + r2) * (-r2).exp());
        assert!((inside.value - exact).abs() < 1e-10 * exact, "{} {exact}", inside.value);
    }

    #[test]
    fn magnitude_tolerance_accepts_cancelling_integrals() {
        let d = dims(3, 2, 1);
        let f = |s: f64, z: &[f64]| z[0] * (-(s * s) - z[0] * z[0]).exp();
        let by_value = integrate_cyl(&f, d, &[ZCenter::new(vec![0.5], 1.0)], &QuadratureSpec::with_rel_tol(1e-10));
        let spec = QuadratureSpec::with_rel_tol(1e-10).on_magnitude();
        let e = integrate_cyl(&f, d, &[ZCenter::new(vec![0.5], 1.0)], &spec).unwrap();
        assert!(e.value.abs() < 1e-12, "{}", e.value);
        assert!(by_value.is_err() || by_value.unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn separable_exponential() {
        let f = |s: f64, z: &[f64]| (-s - z[0] * z[0]).exp();
        let e = integrate_cyl(&f, dims(3, 2, 1), &[], &QuadratureSpec::with_rel_tol(1e-10)).unwrap();
        let exact = 2.0 * PI * PI.sqrt();
        assert!((e.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", e.value);
        assert!(e.err_est <= 1e-10 * e.value.abs());
    }

    #[test]
    fn coincident_centers_match_single() {
        for d in [dims(3, 2, 1), dims(4, 2, 2), dims(5, 2, 3)] {
            let f = |s: f64, z: &[f64]| {
                let t2: f64 = z.iter().map(|x| (x - 0.5) * (x - 0.5)).sum();
                1.0 / (s * ((1.0 + s).powi(2) + t2).powf(d.n as f64 / 2.0))
            };
            let c = ZCenter::new(vec![0.5; d.h], 1.0);
            let spec = QuadratureSpec::with_rel_tol(1e-10);
            let one = integrate_cyl(&f, d, &[c.clone()], &spec).unwrap().value;
            let two = integrate_cyl(&f, d, &[c.clone(), c], &spec).unwrap().value;
            assert!((one - two).abs() < 1e-8 * one, "{d:?}: {one} vs {two}");
        }
    }

    #[test]
    fn too_many_centers() {
        let c = ZCenter::new(vec![0.0], 1.0);
        let r = integrate_cyl(&|_, _| 1.0, dims(3, 2, 1), &[c.clone(), c.clone(), c], &QuadratureSpec::default());
        assert!(r.is_err());
    }

    #[test]
    fn orthogonal_vector() {
        let e = [0.6, 0.8, 0.0];
        let v = orthogonal_unit(&e);
        assert!(dot(&e, &v).abs() < 1e-15);
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn points_cover_marks() {
        let pts = line_points(&[(0.0, 0.01), (1.0, 0.1)], -2.0, 3.0);
        assert_eq!(pts[0], -2.0);
        assert_eq!(*pts.last().unwrap(), 3.0);
        assert!(pts.windows(2).all(|w| w[1] > w[0]));
        assert!(pts.contains(&0.0) && pts.contains(&1.0) && pts.contains(&0.01));
        let semi = semi_points(0.01, 1.0);
        assert_eq!(semi[0], 0.0);
        assert_eq!(*semi.last().unwrap(), 1.0);
    }

    #[test]
    fn convergence_cost() {
        let d = dims(5, 2, 3);
        let f = |s: f64, z: &[f64]| {
            let t2: f64 = z.iter().map(|x| x * x).sum();
            1.0 / (s * ((1.0 + s).powi(2) + t2).powf(2.5))
        };
        let c = ZCenter::new(vec![0.0; 3], 1.0);
        let spec = QuadratureSpec::with_rel_tol(1e-10);
        let e = integrate_cyl(&f, d, &[c.clone(), c], &spec).unwrap();
        assert!(e.evals < 2_000_000, "{e:?}");
    }
}
