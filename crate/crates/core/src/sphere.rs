//! Positive functions on S² sampled on a latitude–longitude grid with single
//! pole nodes: separability under origin-through reflections, restriction to
//! circular slices, extremal caps, axis, and meridian profile.
//!
//! Grid conventions: colatitude levels `θ_i = iπ/(n_lat − 1)`, `i = 0` is the
//! north pole, `i = n_lat − 1` the south pole; longitudes `φ_j = 2πj/n_lon`.
//! Meridian planes at normal angle `πk/n_lon` and the equatorial plane map the
//! node set onto itself and are tested exactly; other half-spaces use the
//! function's evaluator (an attached closed form, or bilinear interpolation).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circle::CircleFn;
use crate::error::{Error, Result};
use crate::geometry::{
    angle_between, dot, norm, normalized, orthonormal_frame, random_unit, to3, Cap, HalfSpace,
};
use crate::report::{
    relative_spread, AxisReport, Branch, Profile, SeparabilityReport, SignScan, Symmetry, Witness,
    WitnessPicker, WitnessPoint,
};

/// Default number of pseudo-random half-spaces per separability test.
pub const DEFAULT_HALFSPACES: usize = 256;

/// Points strictly closer than this to `∂H` are treated as on the boundary.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatLonGrid {
    pub n_lat: usize,
    pub n_lon: usize,
}

impl LatLonGrid {
    pub fn new(n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat < 3 {
            return Err(Error::Grid(format!("n_lat must be >= 3, got {n_lat}")));
        }
        if n_lon < 4 || n_lon % 2 != 0 {
            return Err(Error::Grid(format!(
                "n_lon must be even and >= 4, got {n_lon}"
            )));
        }
        Ok(LatLonGrid { n_lat, n_lon })
    }

    pub fn len(&self) -> usize {
        2 + (self.n_lat - 2) * self.n_lon
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dlat(&self) -> f64 {
        PI / (self.n_lat - 1) as f64
    }

    pub fn dlon(&self) -> f64 {
        TAU / self.n_lon as f64
    }

    /// Coarsest angular spacing of the grid.
    pub fn resolution(&self) -> f64 {
        self.dlat().max(self.dlon())
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else if i == self.n_lat - 1 {
            self.len() - 1
        } else {
            1 + (i - 1) * self.n_lon + j % self.n_lon
        }
    }

    /// `(lat_index, lon_index)` of a node; poles report longitude 0.
    pub fn lat_lon(&self, node: usize) -> (usize, usize) {
        if node == 0 {
            (0, 0)
        } else if node == self.len() - 1 {
            (self.n_lat - 1, 0)
        } else {
            let k = node - 1;
            (1 + k / self.n_lon, k % self.n_lon)
        }
    }

    pub fn point(&self, node: usize) -> [f64; 3] {
        let (i, j) = self.lat_lon(node);
        let th = self.dlat() * i as f64;
        let ph = self.dlon() * j as f64;
        if i == 0 {
            [0.0, 0.0, 1.0]
        } else if i == self.n_lat - 1 {
            [0.0, 0.0, -1.0]
        } else {
            [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
        }
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|n| self.point(n)).collect()
    }

    /// Solid angle of each node's cell; sums to 4π.
    pub fn weights(&self) -> Vec<f64> {
        let d = self.dlat();
        (0..self.len())
            .map(|node| {
                let (i, _) = self.lat_lon(node);
                let lo = (d * (i as f64 - 0.5)).max(0.0);
                let hi = (d * (i as f64 + 0.5)).min(PI);
                let band = TAU * (lo.cos() - hi.cos());
                if i == 0 || i == self.n_lat - 1 {
                    band
                } else {
                    band / self.n_lon as f64
                }
            })
            .collect()
    }

    /// Node image under an exact grid reflection.
    fn mirror(&self, node: usize, r: &GridReflection) -> usize {
        let (i, j) = self.lat_lon(node);
        match *r {
            GridReflection::Meridian(k) => {
                let jj = (k + self.n_lon / 2 + self.n_lon * 2 - j) % self.n_lon;
                self.index(i, jj)
            }
            GridReflection::Equator { .. } => self.index(self.n_lat - 1 - i, j),
        }
    }
}

/// A reflection that maps the grid onto itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridReflection {
    /// Plane through the poles; half-space normal at angle `πk/n_lon` in the equatorial plane.
    Meridian(usize),
    /// Equatorial plane; half-space `{x₃ > 0}` when `north`.
    Equator { north: bool },
}

impl GridReflection {
    pub fn halfspace(&self, grid: &LatLonGrid) -> HalfSpace {
        match *self {
            GridReflection::Meridian(k) => {
                let b = PI * k as f64 / grid.n_lon as f64;
                HalfSpace::new(vec![b.cos(), b.sin(), 0.0], 0.0).expect("unit normal")
            }
            GridReflection::Equator { north } => {
                let s = if north { 1.0 } else { -1.0 };
                HalfSpace::new(vec![0.0, 0.0, s], 0.0).expect("unit normal")
            }
        }
    }

    pub fn all(grid: &LatLonGrid) -> Vec<GridReflection> {
        (0..2 * grid.n_lon)
            .map(GridReflection::Meridian)
            .chain([
                GridReflection::Equator { north: true },
                GridReflection::Equator { north: false },
            ])
            .collect()
    }
}

/// Closed-form evaluator attached to sampled data.
pub type Evaluator = Arc<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct SphereFn {
    grid: LatLonGrid,
    values: Vec<f64>,
    source: Option<Evaluator>,
}

impl fmt::Debug for SphereFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereFn")
            .field("grid", &self.grid)
            .field("exact_source", &self.source.is_some())
            .finish_non_exhaustive()
    }
}

impl SphereFn {
    pub fn new(grid: LatLonGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Positivity { index, value });
        }
        Ok(SphereFn {
            grid,
            values,
            source: None,
        })
    }

    /// Samples `f` at the nodes and keeps `f` for off-grid queries.
    pub fn from_fn(grid: LatLonGrid, f: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let f: Evaluator = Arc::new(f);
        let values = (0..grid.len()).map(|n| f(&grid.point(n))).collect();
        let mut s = SphereFn::new(grid, values)?;
        s.source = Some(f);
        Ok(s)
    }

    /// Samples `f` at the nodes only; off-grid queries interpolate.
    pub fn sampled(grid: LatLonGrid, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|n| f(&grid.point(n))).collect();
        SphereFn::new(grid, values)
    }

    pub fn grid(&self) -> &LatLonGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    /// Drops any attached evaluator so off-grid queries use interpolation.
    pub fn without_source(mut self) -> Self {
        self.source = None;
        self
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        (0..self.values.len())
            .max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(b.cmp(&a)))
            .unwrap()
    }

    pub fn scaled(&self, lambda: f64) -> Result<SphereFn> {
        let mut out = SphereFn::new(self.grid, self.values.iter().map(|v| v * lambda).collect())?;
        out.source = self.source.clone().map(|f| {
            let g: Evaluator = Arc::new(move |x: &[f64; 3]| lambda * f(x));
            g
        });
        Ok(out)
    }

    /// The function `x ↦ u(M⁻¹x)` for `M` the rotation by `k` longitude steps.
    pub fn shift_longitude(&self, k: usize) -> SphereFn {
        let g = self.grid;
        let values = (0..g.len())
            .map(|node| {
                let (i, j) = g.lat_lon(node);
                if i == 0 || i == g.n_lat - 1 {
                    self.values[node]
                } else {
                    self.values[g.index(i, (j + g.n_lon * 4 - k % g.n_lon) % g.n_lon)]
                }
            })
            .collect();
        let angle = g.dlon() * k as f64;
        let source = self.source.clone().map(|f| {
            let h: Evaluator = Arc::new(move |x: &[f64; 3]| {
                let (c, s) = (angle.cos(), angle.sin());
                f(&[c * x[0] + s * x[1], -s * x[0] + c * x[1], x[2]])
            });
            h
        });
        SphereFn {
            grid: g,
            values,
            source,
        }
    }

    /// Bilinear interpolation in `(colatitude, longitude)`; rows next to a
    /// pole interpolate against the single pole value.
    pub fn interp(&self, x: &[f64; 3]) -> f64 {
        let g = &self.grid;
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let th = rho.atan2(x[2]);
        let ph = x[1].atan2(x[0]).rem_euclid(TAU);
        let t = (th / g.dlat()).clamp(0.0, (g.n_lat - 1) as f64);
        let i0 = (t.floor() as usize).min(g.n_lat - 2);
        let ft = t - i0 as f64;
        let s = ph / g.dlon();
        let j0 = (s.floor() as usize) % g.n_lon;
        let fs = s - s.floor();
        let j1 = (j0 + 1) % g.n_lon;
        let row = |i: usize| {
            let a = self.values[g.index(i, j0)];
            let b = self.values[g.index(i, j1)];
            (1.0 - fs) * a + fs * b
        };
        (1.0 - ft) * row(i0) + ft * row(i0 + 1)
    }

    /// Value at an arbitrary unit vector: the attached closed form when
    /// present, otherwise bilinear interpolation.
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match &self.source {
            Some(f) => f(x),
            None => self.interp(x),
        }
    }
}

/// Per-half-space sign scan shared with the ball module.
/// `pts` are the grid's node coordinates, computed once by the caller.
pub(crate) fn scan_exact(u: &SphereFn, r: &GridReflection, pts: &[[f64; 3]], scan: &mut SignScan, offset: usize) {
    let g = u.grid();
    let h = r.halfspace(g);
    for (node, x) in pts.iter().enumerate() {
        if h.signed_distance(x) > BOUNDARY_TOL {
            let m = g.mirror(node, r);
            scan.push(offset + node, u.values[m] - u.values[node]);
        }
    }
}

pub(crate) fn scan_sampled(u: &SphereFn, h: &HalfSpace, pts: &[[f64; 3]], scan: &mut SignScan, offset: usize) {
    for (node, x) in pts.iter().enumerate() {
        if h.signed_distance(x) > BOUNDARY_TOL {
            let y = h.reflect3(x);
            scan.push(offset + node, u.eval(&y) - u.values[node]);
        }
    }
}

/// Deterministic pseudo-random origin-through half-spaces in R³.
pub fn random_halfspaces(n: usize, seed: u64) -> Vec<HalfSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| HalfSpace::through_origin(random_unit(&mut rng, 3)).expect("unit normal"))
        .collect()
}

fn sphere_witness(u: &SphereFn, h: HalfSpace, scan: &SignScan) -> Witness {
    let g = u.grid();
    let point = |(node, d): (usize, f64)| {
        let (i, j) = g.lat_lon(node);
        WitnessPoint {
            location: g.point(node).to_vec(),
            index: Some(vec![i, j]),
            difference: d,
        }
    };
    Witness {
        halfspace: h,
        angle: None,
        above: point(scan.pos.unwrap()),
        below: point(scan.neg.unwrap()),
        strength: scan.strength(),
    }
}

/// Separability over all exact grid reflections plus `n_halfspaces`
/// pseudo-random origin-through half-spaces. Differences within `eps·max u`
/// count as equal.
pub fn is_separable_sphere(u: &SphereFn, n_halfspaces: usize, eps: f64, seed: u64) -> SeparabilityReport {
    let tol = eps * u.max();
    let g = u.grid();
    let pts = g.points();
    let mut picker = WitnessPicker::default();
    let mut equal = 0;
    let exact = GridReflection::all(g);
    for r in &exact {
        let mut scan = SignScan::new(tol);
        scan_exact(u, r, &pts, &mut scan, 0);
        match scan.branch() {
            Branch::Mixed => picker.offer(sphere_witness(u, r.halfspace(g), &scan)),
            Branch::Equal => equal += 1,
            _ => {}
        }
    }
    for h in random_halfspaces(n_halfspaces, seed) {
        let mut scan = SignScan::new(tol);
        scan_sampled(u, &h, &pts, &mut scan, 0);
        match scan.branch() {
            Branch::Mixed => picker.offer(sphere_witness(u, h, &scan)),
            Branch::Equal => equal += 1,
            _ => {}
        }
    }
    SeparabilityReport {
        separable: picker.best.is_none(),
        tolerance: tol,
        halfspaces_tested: exact.len() + n_halfspaces,
        equal_branches: equal,
        witness: picker.best,
    }
}

/// Restricts `u` to the circle `∂plane ∩ S²`, where `plane` is read as the
/// affine plane `{x : n·x = c}`. The circle's angle 0 points along the
/// projection of u's maximizing node onto the plane when that is nonzero.
pub fn restrict_to_circle(u: &SphereFn, plane: &HalfSpace, n_circle: usize) -> Result<CircleFn> {
    if plane.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: plane.dim(),
        });
    }
    let m = to3(plane.normal());
    let d = plane.offset();
    if d.abs() >= 1.0 - 1e-12 {
        return Err(Error::TangentOrEmpty { distance: d.abs() });
    }
    let center = [d * m[0], d * m[1], d * m[2]];
    let radius = (1.0 - d * d).sqrt();
    let top = u.grid().point(u.argmax());
    let proj = {
        let s = dot(&top, &m);
        [top[0] - s * m[0], top[1] - s * m[1], top[2] - s * m[2]]
    };
    let (f1, f2) = match normalized(&proj) {
        Some(p) if norm(&proj) > 1e-9 => {
            let f1 = to3(&p);
            (f1, crate::geometry::cross3(&m, &f1))
        }
        _ => orthonormal_frame(&m),
    };
    CircleFn::from_fn(n_circle, |t| {
        let (c, s) = (t.cos(), t.sin());
        let x = [
            center[0] + radius * (c * f1[0] + s * f2[0]),
            center[1] + radius * (c * f1[1] + s * f2[1]),
            center[2] + radius * (c * f1[2] + s * f2[2]),
        ];
        u.eval(&x)
    })
}

fn weighted_centroid(u: &SphereFn, weights: &[f64], select: impl Fn(f64) -> bool) -> Option<[f64; 3]> {
    let g = u.grid();
    let mut c = [0.0; 3];
    let mut total = 0.0;
    for node in 0..g.len() {
        if select(u.values[node]) {
            let x = g.point(node);
            for k in 0..3 {
                c[k] += weights[node] * x[k];
            }
            total += weights[node];
        }
    }
    if total == 0.0 || norm(&c) <= 1e-9 * total {
        return None;
    }
    normalized(&c).map(|v| to3(&v))
}

fn ring_point(a: &[f64; 3], e1: &[f64; 3], e2: &[f64; 3], psi: f64, phi: f64) -> [f64; 3] {
    let (h, s) = (psi.cos(), psi.sin());
    let (c, sn) = (phi.cos(), phi.sin());
    [
        h * a[0] + s * (c * e1[0] + sn * e2[0]),
        h * a[1] + s * (c * e1[1] + sn * e2[1]),
        h * a[2] + s * (c * e1[2] + sn * e2[2]),
    ]
}

/// Largest per-ring relative spread of `u` on circles `x·a = cos ψ`.
pub fn ring_spread(u: &SphereFn, a: &[f64; 3], n_rings: usize, per_ring: usize) -> f64 {
    let (e1, e2) = orthonormal_frame(a);
    let scale = u.max();
    (1..=n_rings)
        .map(|m| {
            let psi = PI * m as f64 / (n_rings + 1) as f64;
            let vals: Vec<f64> = (0..per_ring)
                .map(|q| u.eval(&ring_point(a, &e1, &e2, psi, TAU * q as f64 / per_ring as f64)))
                .collect();
            relative_spread(&vals, scale)
        })
        .fold(0.0, f64::max)
}

/// Newton refinement of an axis estimate from the first angular harmonic of
/// ring samples: a tilt `t ⟂ a` of the true axis shows up on the ring at
/// height `h` as `f'(h)·sin ψ·(t·ê(φ))`.
fn refine_axis_harmonic(u: &SphereFn, a0: [f64; 3]) -> [f64; 3] {
    const RINGS: usize = 9;
    const PER_RING: usize = 64;
    const DPSI: f64 = 1e-3;
    let ring_mean = |a: &[f64; 3], e1: &[f64; 3], e2: &[f64; 3], psi: f64| -> (f64, f64, f64) {
        let mut m = 0.0;
        let mut c1 = 0.0;
        let mut s1 = 0.0;
        for q in 0..PER_RING {
            let phi = TAU * q as f64 / PER_RING as f64;
            let v = u.eval(&ring_point(a, e1, e2, psi, phi));
            m += v;
            c1 += v * phi.cos();
            s1 += v * phi.sin();
        }
        let k = PER_RING as f64;
        (m / k, 2.0 * c1 / k, 2.0 * s1 / k)
    };
    let mut a = a0;
    for _ in 0..12 {
        let (e1, e2) = orthonormal_frame(&a);
        let (mut num1, mut num2, mut den) = (0.0, 0.0, 0.0);
        for m in 1..=RINGS {
            let psi = PI * m as f64 / (RINGS + 1) as f64;
            let (_, c1, s1) = ring_mean(&a, &e1, &e2, psi);
            let (mp, _, _) = ring_mean(&a, &e1, &e2, psi + DPSI);
            let (mm, _, _) = ring_mean(&a, &e1, &e2, psi - DPSI);
            // d/dh with h = cos ψ.
            let fprime = -(mp - mm) / (2.0 * DPSI) / psi.sin();
            let g = fprime * psi.sin();
            num1 += c1 * g;
            num2 += s1 * g;
            den += g * g;
        }
        if den <= 1e-300 {
            break;
        }
        let (t1, t2) = (num1 / den, num2 / den);
        let next = [
            a[0] + t1 * e1[0] + t2 * e2[0],
            a[1] + t1 * e1[1] + t2 * e2[1],
            a[2] + t1 * e1[2] + t2 * e2[2],
        ];
        a = to3(&normalized(&next).unwrap_or(a.to_vec()));
        if (t1 * t1 + t2 * t2).sqrt() < 1e-15 {
            break;
        }
    }
    a
}

/// Axis estimate of the near-extremal set: centroid of `{u ≥ max − tol}`,
/// then the centroid of a wider superlevel set, then harmonic refinement
/// (kept only when it reduces ring spread without drifting off the cap).
fn estimate_axis(u: &SphereFn, weights: &[f64], tol: f64, upper: bool) -> Result<([f64; 3], [f64; 3])> {
    let (max, min) = (u.max(), u.min());
    let (coarse, wide) = if upper {
        let wide_tol = (10.0 * tol).max(0.1 * (max - min));
        (
            weighted_centroid(u, weights, |v| v >= max - tol),
            weighted_centroid(u, weights, |v| v >= max - wide_tol),
        )
    } else {
        let wide_tol = (10.0 * tol).max(0.1 * (max - min));
        (
            weighted_centroid(u, weights, |v| v <= min + tol),
            weighted_centroid(u, weights, |v| v <= min + wide_tol),
        )
    };
    let which = if upper { "near-max" } else { "near-min" };
    let coarse = coarse.ok_or_else(|| Error::CapFit(format!("{which} set has no center")))?;
    let mut best = wide.unwrap_or(coarse);
    if angle_between(&best, &coarse) > 3.0 * u.grid().resolution() {
        best = coarse;
    }
    Ok((coarse, best))
}

/// Number of rings and samples per ring used for constancy checks.
fn ring_layout(g: &LatLonGrid) -> (usize, usize) {
    (g.n_lat - 2, g.n_lon)
}

/// Cap structure, axis, ring constancy, and meridian profile of a separable function.
pub fn sphere_caps_and_axis(u: &SphereFn, eps: f64) -> Result<AxisReport> {
    let (max, min) = (u.max(), u.min());
    let tol = eps * max;
    if max - min <= tol {
        return Ok(AxisReport::constant());
    }
    let g = *u.grid();
    let w = g.weights();
    let res = g.resolution();
    let (rings, per_ring) = ring_layout(&g);

    let (coarse, mut a) = estimate_axis(u, &w, tol, true)?;
    let mut spread = ring_spread(u, &a, rings, per_ring);
    let refined = refine_axis_harmonic(u, a);
    if angle_between(&refined, &coarse) <= 3.0 * res {
        let s = ring_spread(u, &refined, rings, per_ring);
        if s < spread {
            a = refined;
            spread = s;
        }
    }

    // Max cap: {x·a ≥ h1}; every node well inside must be near-max.
    let pts = g.points();
    let near_max: Vec<bool> = u.values.iter().map(|&v| v >= max - tol).collect();
    let near_min: Vec<bool> = u.values.iter().map(|&v| v <= min + tol).collect();
    let h1 = (0..g.len())
        .filter(|&n| near_max[n])
        .map(|n| dot(&pts[n], &a))
        .fold(f64::INFINITY, f64::min);
    let h2 = (0..g.len())
        .filter(|&n| near_min[n])
        .map(|n| dot(&pts[n], &a))
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = 1.5 * res;
    let cap_angle = h1.clamp(-1.0, 1.0).acos();
    if let Some(n) = (0..g.len())
        .find(|&n| !near_max[n] && dot(&pts[n], &a).clamp(-1.0, 1.0).acos() < cap_angle - margin)
    {
        return Err(Error::CapFit(format!(
            "node {:?} lies inside the max cap (height {h1:.4}) but u is {:.6e} below max",
            g.lat_lon(n),
            max - u.values[n]
        )));
    }
    let min_angle = (-h2).clamp(-1.0, 1.0).acos();
    if let Some(n) = (0..g.len()).find(|&n| {
        !near_min[n] && (-dot(&pts[n], &a)).clamp(-1.0, 1.0).acos() < min_angle - margin
    }) {
        return Err(Error::CapFit(format!(
            "node {:?} lies inside the min cap (height {h2:.4}) but u is {:.6e} above min",
            g.lat_lon(n),
            u.values[n] - min
        )));
    }
    if h1 <= h2 {
        return Err(Error::CapFit(format!(
            "max cap height {h1:.4} does not exceed min cap height {h2:.4}"
        )));
    }

    if spread > eps {
        return Err(Error::Structure {
            what: "ring constancy about the axis",
            residual: spread,
            tolerance: eps,
        });
    }

    // Meridian profiles from a to −a along four meridians.
    let (e1, e2) = orthonormal_frame(&a);
    let samples = 2 * (g.n_lat - 1) + 1;
    let mut profile = Profile::default();
    let mut increase: f64 = 0.0;
    for q in 0..4 {
        let phi = 0.5 * PI * q as f64;
        let p = Profile {
            abscissa: (0..samples).map(|s| PI * s as f64 / (samples - 1) as f64).collect(),
            values: (0..samples)
                .map(|s| {
                    let psi = PI * s as f64 / (samples - 1) as f64;
                    u.eval(&ring_point(&a, &e1, &e2, psi, phi))
                })
                .collect(),
        };
        increase = increase.max(p.max_increase());
        if q == 0 {
            profile = p;
        }
    }
    if increase > tol {
        return Err(Error::Structure {
            what: "nonincreasing meridian profile",
            residual: increase / max,
            tolerance: eps,
        });
    }

    let (_, b) = estimate_axis(u, &w, tol, false)?;
    let antipodal = PI - angle_between(&a, &b);
    let antipodal_tol = 2.0 * res + 1e-9;
    if antipodal > antipodal_tol {
        return Err(Error::Structure {
            what: "antipodal max/min cap axes (rad)",
            residual: antipodal,
            tolerance: antipodal_tol,
        });
    }

    let mut rep = AxisReport {
        symmetry: Symmetry::Axial {
            direction: a.to_vec(),
        },
        max_cap: Some(Cap {
            axis: a.to_vec(),
            height: h1.clamp(-1.0, 1.0),
        }),
        min_cap: Some(Cap {
            axis: vec![-a[0], -a[1], -a[2]],
            height: (-h2).clamp(-1.0, 1.0),
        }),
        profile: Some(profile),
        shells: vec![],
        residuals: Default::default(),
    };
    rep.residuals.insert("h1".into(), h1);
    rep.residuals.insert("h2".into(), h2);
    rep.residuals.insert("ring_spread".into(), spread);
    rep.residuals.insert("monotonicity".into(), increase / max);
    rep.residuals.insert("antipodal_error_rad".into(), antipodal);
    rep.residuals
        .insert("coarse_axis_deviation_rad".into(), angle_between(&coarse, &a));
    Ok(rep)
}

/// Direction check for a separable nonconstant `u` whose max cap is centered
/// at `axis_max`: `u` dominates its reflection on `H` when the axis is in `H`,
/// is dominated when the axis is outside `cl(H)`, and is reflection-invariant
/// when the axis lies on `∂H`.
pub fn corollary_direction_check(u: &SphereFn, axis_max: &[f64; 3], h: &HalfSpace, eps: f64) -> bool {
    let tol = eps * u.max();
    let g = u.grid();
    let s = h.signed_distance(axis_max);
    (0..g.len())
        .filter(|&n| h.signed_distance(&g.point(n)) > BOUNDARY_TOL)
        .all(|n| {
            let x = g.point(n);
            let d = u.values[n] - u.eval(&h.reflect3(&x));
            if s > BOUNDARY_TOL {
                d >= -tol
            } else if s < -BOUNDARY_TOL {
                d <= tol
            } else {
                d.abs() <= tol
            }
        })
}
