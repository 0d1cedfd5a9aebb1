//! Globally adaptive tensor Gauss–Kronrod cubature on products of segments.
//!
//! Each axis is split into an initial list of segments (finite or
//! semi-infinite). Semi-infinite segments are mapped to `[0, 1)` by the
//! rational map `x = a + c·u/(1−u)`. Boxes with the largest error estimate
//! are bisected along the axis whose Gauss/Kronrod disagreement dominates.
//! Children are evaluated in parallel; totals are always re-summed over the
//! leaves in creation order, so results do not depend on thread scheduling.

use crate::error::{Error, Result};
use rayon::prelude::*;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15 nodes on [-1, 1] in increasing order with Kronrod and Gauss weights
/// (Gauss weight zero on the pure Kronrod nodes).
struct Rule {
    x: [f64; 15],
    wk: [f64; 15],
    wg: [f64; 15],
}

const fn rule() -> Rule {
    let mut x = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    let mut i = 0;
    while i < 7 {
        x[i] = -XGK[i];
        x[14 - i] = XGK[i];
        wk[i] = WGK[i];
        wk[14 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[14 - i] = WG[i / 2];
        }
        i += 1;
    }
    x[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];
    Rule { x, wk, wg }
}

static RULE: Rule = rule();

/// One piece of an integration axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Finite { a: f64, b: f64 },
    /// `[a, ∞)` with `x = a + scale·u/(1−u)`.
    Upper { a: f64, scale: f64 },
    /// `(−∞, b]` with `x = b − scale·u/(1−u)`.
    Lower { b: f64, scale: f64 },
    /// `[a, ∞)` with `x = a(1−u)^{−1/κ}`, flat for integrands ~ x^{−1−κ}.
    Tail { a: f64, kappa: f64 },
}

impl Segment {
    /// Maps `u ∈ [0, 1]` to `(x, dx/du)`.
    #[inline]
    fn map(&self, u: f64) -> (f64, f64) {
        match *self {
            Segment::Finite { a, b } => (a + (b - a) * u, b - a),
            Segment::Upper { a, scale } => {
                let w = 1.0 - u;
                (a + scale * u / w, scale / (w * w))
            }
            Segment::Lower { b, scale } => {
                let w = 1.0 - u;
                (b - scale * u / w, scale / (w * w))
            }
            Segment::Tail { a, kappa } => {
                let w = 1.0 - u;
                let x = a * w.powf(-1.0 / kappa);
                (x, x / (kappa * w))
            }
        }
    }
}

/// Map from a patch's parameters to the integration variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchMap<const D: usize> {
    Identity,
    /// One face of the exterior of the box `|x − center|_∞ < radius`:
    /// parameter `dim` is ρ ≥ 1 and
    /// `x_dim = center_dim + sign·ρ·radius`, `x_e = center_e + ρ·radius·v_e`
    /// for the other axes with `v_e ∈ [−1, 1]`; Jacobian `radius^D ρ^{D−1}`.
    Face { dim: usize, sign: f64, radius: f64, center: [f64; D] },
}

impl<const D: usize> PatchMap<D> {
    #[inline]
    fn apply(&self, p: &[f64; D]) -> ([f64; D], f64) {
        match *self {
            PatchMap::Identity => (*p, 1.0),
            PatchMap::Face { dim, sign, radius, center } => {
                let rho = p[dim];
                let mut x = [0.0; D];
                for e in 0..D {
                    x[e] = if e == dim {
                        center[e] + sign * rho * radius
                    } else {
                        center[e] + rho * radius * p[e]
                    };
                }
                (x, radius.powi(D as i32) * rho.powi(D as i32 - 1))
            }
        }
    }
}

/// A product of per-axis segment lists with a parameter map.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch<const D: usize> {
    pub axes: [Vec<Segment>; D],
    pub map: PatchMap<D>,
}

/// What the relative tolerance is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum ToleranceBase {
    /// |∫f|.
    #[default]
    Value,
    /// ∫|f|, for integrals that cancel.
    Magnitude,
}

/// Stopping rule for [`cubature`].
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections of any one axis of a box.
    pub max_depth: u32,
    /// Upper bound on the number of leaf boxes.
    pub max_boxes: usize,
    pub base: ToleranceBase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err_est: f64,
    pub boxes: usize,
    pub evals: usize,
}

#[derive(Clone, Copy)]
struct Cell<const D: usize> {
    patch: usize,
    seg: [usize; D],
    lo: [f64; D],
    hi: [f64; D],
    depth: [u32; D],
}

#[derive(Clone, Copy)]
struct Scored<const D: usize> {
    cell: Cell<D>,
    value: f64,
    magnitude: f64,
    err: f64,
    axis_err: [f64; D],
}

struct HeapItem {
    err: f64,
    id: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn eval_cell<const D: usize, F>(f: &F, patches: &[Patch<D>], cell: &Cell<D>) -> Scored<D>
where
    F: Fn(&[f64; D]) -> f64,
{
    let patch = &patches[cell.patch];
    let axes = &patch.axes;
    // Per-axis nodes, Jacobians folded into the weights.
    let mut xs = [[0.0f64; 15]; D];
    let mut wk = [[0.0f64; 15]; D];
    let mut wg = [[0.0f64; 15]; D];
    for d in 0..D {
        let seg = &axes[d][cell.seg[d]];
        let half = 0.5 * (cell.hi[d] - cell.lo[d]);
        let mid = 0.5 * (cell.hi[d] + cell.lo[d]);
        for i in 0..15 {
            let (x, jac) = seg.map(mid + half * RULE.x[i]);
            xs[d][i] = x;
            wk[d][i] = RULE.wk[i] * half * jac;
            wg[d][i] = RULE.wg[i] * half * jac;
        }
    }

    // Accumulate K⊗…⊗K, G⊗…⊗G and, per axis, G on that axis with K elsewhere.
    let total = 15usize.pow(D as u32);
    let mut vals = Vec::with_capacity(total);
    let mut wts = Vec::with_capacity(total);
    let mut kk = 0.0;
    let mut gg = 0.0;
    let mut mixed = [0.0f64; D];
    let mut idx = [0usize; D];
    let mut p = [0.0f64; D];
    for _ in 0..total {
        for d in 0..D {
            p[d] = xs[d][idx[d]];
        }
        let (x, jac) = patch.map.apply(&p);
        let v = f(&x) * jac;
        let mut wkk = 1.0;
        let mut wgg = 1.0;
        for d in 0..D {
            wkk *= wk[d][idx[d]];
            wgg *= wg[d][idx[d]];
        }
        kk += wkk * v;
        gg += wgg * v;
        for d in 0..D {
            let k = wk[d][idx[d]];
            if k != 0.0 {
                mixed[d] += wkk / k * wg[d][idx[d]] * v;
            }
        }
        vals.push(v);
        wts.push(wkk);
        for d in (0..D).rev() {
            idx[d] += 1;
            if idx[d] < 15 {
                break;
            }
            idx[d] = 0;
        }
    }
    let vol: f64 = wts.iter().sum();
    let mean = kk / vol;
    let mut resasc = 0.0;
    let mut resabs = 0.0;
    for (v, w) in vals.iter().zip(&wts) {
        resasc += w * (v - mean).abs();
        resabs += w * v.abs();
    }
    let mut axis_err = [0.0; D];
    for d in 0..D {
        axis_err[d] = scaled_error((kk - mixed[d]).abs(), resasc, resabs);
    }
    Scored {
        cell: *cell,
        value: kk,
        magnitude: resabs,
        err: scaled_error((kk - gg).abs(), resasc, resabs),
        axis_err,
    }
}

/// QUADPACK's error heuristic: the raw Kronrod/Gauss difference overstates
/// the Kronrod error for smooth integrands, so it is damped relative to the
/// spread of the integrand, and floored at the rounding level.
fn scaled_error(raw: f64, resasc: f64, resabs: f64) -> f64 {
    let mut err = raw;
    if resasc > 0.0 && err > 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn split<const D: usize>(s: &Scored<D>, max_depth: u32) -> Option<[Cell<D>; 2]> {
    let mut best: Option<usize> = None;
    for d in 0..D {
        if s.cell.depth[d] >= max_depth {
            continue;
        }
        match best {
            None => best = Some(d),
            Some(b) if s.axis_err[d] > s.axis_err[b] => best = Some(d),
            _ => {}
        }
    }
    let d = best?;
    let mid = 0.5 * (s.cell.lo[d] + s.cell.hi[d]);
    let mut a = s.cell;
    let mut b = s.cell;
    a.hi[d] = mid;
    b.lo[d] = mid;
    a.depth[d] += 1;
    b.depth[d] += 1;
    Some([a, b])
}

fn check_finite<const D: usize>(boxes: &[Scored<D>]) -> Result<()> {
    if boxes.iter().all(|s| s.value.is_finite() && s.err.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("integrand is not finite at a quadrature node".into()))
    }
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Integrates `f` over the product of the given per-axis segment lists.
pub fn cubature<const D: usize, F>(f: &F, axes: &[Vec<Segment>; D], limits: &Limits) -> Result<Estimate>
where
    F: Fn(&[f64; D]) -> f64 + Sync,
{
    cubature_patches(f, &[Patch { axes: axes.clone(), map: PatchMap::Identity }], limits)
}

/// Integrates `f` over the union of patches (assumed disjoint).
pub fn cubature_patches<const D: usize, F>(f: &F, patches: &[Patch<D>], limits: &Limits) -> Result<Estimate>
where
    F: Fn(&[f64; D]) -> f64 + Sync,
{
    let nodes_per_box = 15usize.pow(D as u32);
    let mut initial: Vec<Cell<D>> = Vec::new();
    for (pi, patch) in patches.iter().enumerate() {
        let mut cells: Vec<Cell<D>> = vec![Cell {
            patch: pi,
            seg: [0; D],
            lo: [0.0; D],
            hi: [1.0; D],
            depth: [0; D],
        }];
        for d in 0..D {
            let mut next = Vec::with_capacity(cells.len() * patch.axes[d].len());
            for c in &cells {
                for s in 0..patch.axes[d].len() {
                    let mut c2 = *c;
                    c2.seg[d] = s;
                    next.push(c2);
                }
            }
            cells = next;
        }
        initial.extend(cells);
    }

    let mut leaves: Vec<Option<Scored<D>>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let first: Vec<Scored<D>> = initial.par_iter().map(|c| eval_cell(f, patches, c)).collect();
    let mut evals = first.len() * nodes_per_box;
    check_finite(&first)?;
    for s in first {
        heap.push(HeapItem { err: s.err, id: leaves.len() });
        leaves.push(Some(s));
    }

    let mut frozen_err = 0.0;
    loop {
        let live = || leaves.iter().flatten();
        let value = neumaier(live().map(|s| s.value));
        let err = neumaier(live().map(|s| s.err));
        let scale = match limits.base {
            ToleranceBase::Value => value.abs(),
            ToleranceBase::Magnitude => neumaier(live().map(|s| s.magnitude)),
        };
        let target = limits.abs_tol.max(limits.rel_tol * scale);
        let boxes = live().count();
        if err <= target {
            return Ok(Estimate { value, err_est: err, boxes, evals });
        }
        if heap.is_empty() || boxes >= limits.max_boxes || frozen_err > target {
            return Err(Error::ToleranceFailure { estimate: value, err_est: err, boxes });
        }

        let batch = (heap.len() / 8).clamp(1, 256);
        let mut children = Vec::with_capacity(2 * batch);
        let mut chosen = 0;
        while chosen < batch {
            let Some(item) = heap.pop() else { break };
            let s = leaves[item.id].expect("heap entries point at live leaves");
            if let Some(pair) = split(&s, limits.max_depth) {
                leaves[item.id] = None;
                children.extend_from_slice(&pair);
                chosen += 1;
            } else {
                // Full depth on every axis: the box stays a leaf but leaves the heap.
                frozen_err += s.err;
            }
        }
        if children.is_empty() {
            continue;
        }
        let scored: Vec<Scored<D>> = children.par_iter().map(|c| eval_cell(f, patches, c)).collect();
        evals += scored.len() * nodes_per_box;
        check_finite(&scored)?;
        for s in scored {
            heap.push(HeapItem { err: s.err, id: leaves.len() });
            leaves.push(Some(s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(rel: f64) -> Limits {
        Limits { rel_tol: rel, abs_tol: 1e-300, max_depth: 30, max_boxes: 200_000, base: ToleranceBase::Value }
    }

    #[test]
    fn rule_integrates_polynomials() {
        let k: f64 = (0..15).map(|i| RULE.wk[i] * RULE.x[i].powi(20)).sum();
        assert!((k - 2.0 / 21.0).abs() < 1e-14);
        let g: f64 = (0..15).map(|i| RULE.wg[i] * RULE.x[i].powi(12)).sum();
        assert!((g - 2.0 / 13.0).abs() < 1e-14);
        let wsum: f64 = RULE.wg.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn one_dimensional_tail() {
        let axes = [vec![Segment::Finite { a: 0.0, b: 1.0 }, Segment::Upper { a: 1.0, scale: 1.0 }]];
        let e = cubature(&|x: &[f64; 1]| 1.0 / (1.0 + x[0] * x[0]), &axes, &limits(1e-12)).unwrap();
        assert!((e.value - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn power_tail_handles_slow_decay() {
        // ∫_1^∞ x^{−1.2} = 5; the rational map leaves a (1−u)^{−0.8} singularity.
        let f = |x: &[f64; 1]| x[0].powf(-1.2) * (1.0 + 1.0 / x[0]);
        let axes = [vec![Segment::Tail { a: 1.0, kappa: 0.2 }]];
        let e = cubature(&f, &axes, &limits(1e-12)).unwrap();
        let exact = 5.0 + 1.0 / 1.2;
        assert!((e.value - exact).abs() < 1e-11 * exact, "{e:?}");
        assert!(e.evals < 5_000);
    }

    #[test]
    fn lower_and_upper_segments() {
        let axes = [vec![
            Segment::Lower { b: 0.0, scale: 1.0 },
            Segment::Upper { a: 0.0, scale: 1.0 },
        ]];
        let e = cubature(&|x: &[f64; 1]| (-x[0] * x[0]).exp(), &axes, &limits(1e-12)).unwrap();
        assert!((e.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let axes = [vec![Segment::Finite { a: 0.0, b: 1.0 }]];
        let e = cubature(&|x: &[f64; 1]| x[0].sqrt(), &axes, &limits(1e-11)).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-11);
        let e = cubature(&|x: &[f64; 1]| x[0].powf(-0.5), &axes, &limits(1e-4)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-4);
    }

    #[test]
    fn three_dimensional_product() {
        let seg = vec![Segment::Finite { a: 0.0, b: 2.0 }];
        let axes = [seg.clone(), seg.clone(), seg];
        let e = cubature(&|x: &[f64; 3]| x[0] * x[1].exp() * (x[2] * x[2]), &axes, &limits(1e-12)).unwrap();
        let exact = 2.0 * (2f64.exp() - 1.0) * 8.0 / 3.0;
        assert!((e.value - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let axes = [vec![Segment::Finite { a: 0.0, b: 1.0 }]];
        let lim = Limits { rel_tol: 1e-15, abs_tol: 0.0, max_depth: 2, max_boxes: 100, base: ToleranceBase::Value };
        match cubature(&|x: &[f64; 1]| x[0].powf(-0.9), &axes, &lim) {
            Err(Error::ToleranceFailure { estimate, err_est, .. }) => {
                assert!(estimate > 0.0 && err_est > 0.0);
            }
            other => panic!("expected tolerance failure, got {other:?}"),
        }
    }

    #[test]
    fn exterior_faces_cover_plane() {
        // ∫_{ℝ²} (1 + |x|²)^{-2} = π, split into the box |x|_∞ < 1 and its four faces.
        let r = 1.0;
        let mut patches = vec![Patch {
            axes: [vec![Segment::Finite { a: -r, b: r }], vec![Segment::Finite { a: -r, b: r }]],
            map: PatchMap::Identity,
        }];
        for dim in 0..2 {
            for sign in [-1.0, 1.0] {
                let mut axes = [vec![Segment::Finite { a: -1.0, b: 1.0 }], vec![Segment::Finite { a: -1.0, b: 1.0 }]];
                axes[dim] = vec![Segment::Upper { a: 1.0, scale: 1.0 }];
                patches.push(Patch { axes, map: PatchMap::Face { dim, sign, radius: r, center: [0.0, 0.0] } });
            }
        }
        let f = |x: &[f64; 2]| (1.0 + x[0] * x[0] + x[1] * x[1]).powi(-2);
        let e = cubature_patches(&f, &patches, &limits(1e-12)).unwrap();
        assert!((e.value - std::f64::consts::PI).abs() < 1e-11, "{e:?}");
        assert!(e.evals < 200_000);
    }

    #[test]
    fn deterministic() {
        let axes = [
            vec![Segment::Finite { a: 0.0, b: 1.0 }, Segment::Upper { a: 1.0, scale: 1.0 }],
            vec![Segment::Finite { a: 0.0, b: 3.0 }],
        ];
        let f = |x: &[f64; 2]| (x[1] * 3.0).sin().abs() / (1.0 + x[0].powi(3));
        let a = cubature(&f, &axes, &limits(1e-9)).unwrap();
        let b = cubature(&f, &axes, &limits(1e-9)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
