//! Positive functions on R³ analysed on a truncation ball `B_{R_max}`:
//! separability under general half-spaces, the axis through a point, even
//! 1-D monotonicity, and radial-center recovery for decaying fields.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, orthonormal_frame, random_unit, to3, AxisLine, HalfSpace, Point};
use crate::report::{
    relative_spread, Branch, Profile, SeparabilityReport, SignScan, Symmetry, Witness,
    WitnessPicker, WitnessPoint,
};
use crate::sphere::{sphere_caps_and_axis, Evaluator, LatLonGrid, SphereFn};

pub const DEFAULT_R_MAX: f64 = 8.0;

/// Probe radii tried in order when a probe sphere is constant.
pub const PROBE_LADDER: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Samples on a uniform Cartesian grid, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub values: Vec<f64>,
}

impl CartesianGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3], values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Grid(format!("every grid dimension must be >= 2, got {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Grid(format!("spacing must be positive, got {spacing:?}")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::Dimension {
                expected: n,
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
        Ok(CartesianGrid {
            dims,
            spacing,
            origin,
            values,
        })
    }

    /// Samples `f` on a cube `[−half, half]³` with `n` points per axis.
    pub fn sample_cube(n: usize, half: f64, f: impl Fn(&[f64; 3]) -> f64 + Sync) -> Result<Self> {
        let h = 2.0 * half / (n - 1) as f64;
        let values: Vec<f64> = (0..n * n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
                f(&[-half + h * i as f64, -half + h * j as f64, -half + h * k as f64])
            })
            .collect();
        CartesianGrid::new([n; 3], [h; 3], [-half; 3], values)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn node(&self, idx: usize) -> [f64; 3] {
        let (d1, d2) = (self.dims[1], self.dims[2]);
        let (i, j, k) = (idx / (d1 * d2), (idx / d2) % d1, idx % d2);
        [
            self.origin[0] + self.spacing[0] * i as f64,
            self.origin[1] + self.spacing[1] * j as f64,
            self.origin[2] + self.spacing[2] * k as f64,
        ]
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        (0..3).all(|a| {
            let t = (x[a] - self.origin[a]) / self.spacing[a];
            t >= -1e-9 && t <= (self.dims[a] - 1) as f64 + 1e-9
        })
    }

    /// Trilinear interpolation; coordinates are clamped to the grid box.
    pub fn trilinear(&self, x: &[f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let t = ((x[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut acc = 0.0;
        for c in 0..8 {
            let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            let w = (if di == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dj == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dk == 1 { frac[2] } else { 1.0 - frac[2] });
            if w != 0.0 {
                acc += w * self.values[self.index(base[0] + di, base[1] + dj, base[2] + dk)];
            }
        }
        acc
    }
}

#[derive(Clone)]
pub enum FieldSource {
    Closure(Evaluator),
    Grid(Arc<CartesianGrid>),
}

#[derive(Clone)]
pub struct FieldFn {
    source: FieldSource,
    r_max: f64,
    decay_hint: bool,
}

impl fmt::Debug for FieldFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            FieldSource::Closure(_) => "closure".to_string(),
            FieldSource::Grid(g) => format!("grid {:?}", g.dims),
        };
        f.debug_struct("FieldFn")
            .field("source", &kind)
            .field("r_max", &self.r_max)
            .field("decay_hint", &self.decay_hint)
            .finish()
    }
}

impl FieldFn {
    pub fn from_fn(f: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static, r_max: f64, decay_hint: bool) -> Self {
        FieldFn {
            source: FieldSource::Closure(Arc::new(f)),
            r_max,
            decay_hint,
        }
    }

    pub fn from_grid(grid: CartesianGrid, r_max: f64, decay_hint: bool) -> Self {
        FieldFn {
            source: FieldSource::Grid(Arc::new(grid)),
            r_max,
            decay_hint,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn decay_hint(&self) -> bool {
        self.decay_hint
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match &self.source {
            FieldSource::Closure(f) => f(x),
            FieldSource::Grid(g) => g.trilinear(x),
        }
    }

    /// Whether `x` can be evaluated from data (always true for closures).
    pub fn covers(&self, x: &[f64; 3]) -> bool {
        match &self.source {
            FieldSource::Closure(_) => true,
            FieldSource::Grid(g) => g.contains(x),
        }
    }

    /// Natural sampling step: grid spacing, or `R_max/32` for closures.
    pub fn resolution(&self) -> f64 {
        match &self.source {
            FieldSource::Closure(_) => self.r_max / 32.0,
            FieldSource::Grid(g) => g.spacing.iter().cloned().fold(0.0, f64::max),
        }
    }
}

/// Uniform sample of `H ∩ B_r` for `H = {n·x > c}` with `|c| < r`.
fn sample_in_cap(rng: &mut ChaCha8Rng, n: &[f64; 3], c: f64, r: f64) -> [f64; 3] {
    // The slice area at height t is ∝ r² − t²; sample t by rejection.
    let bound = r * r - c.max(0.0).powi(2);
    let t = loop {
        let t = rng.gen_range(c..r);
        if rng.gen::<f64>() * bound <= r * r - t * t {
            break t;
        }
    };
    let rho = (r * r - t * t).max(0.0).sqrt() * rng.gen::<f64>().sqrt();
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let (e1, e2) = orthonormal_frame(n);
    let (a, b) = (rho * phi.cos(), rho * phi.sin());
    [
        t * n[0] + a * e1[0] + b * e2[0],
        t * n[1] + a * e1[1] + b * e2[1],
        t * n[2] + a * e1[2] + b * e2[2],
    ]
}

/// Separability under `n_halfspaces` random half-spaces `{n·x > c}` with
/// `|c| ≤ R_max`, each checked at `n_samples` points of `H ∩ B_{R_max}`.
/// Differences within `eps` times the largest value seen count as equal.
pub fn is_separable_field(u: &FieldFn, n_halfspaces: usize, n_samples: usize, eps: f64, seed: u64) -> SeparabilityReport {
    let r = u.r_max;
    let per_h: Vec<(HalfSpace, Vec<([f64; 3], f64)>, f64)> = (0..n_halfspaces)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let n = to3(&random_unit(&mut rng, 3));
            let c = rng.gen_range(-r..=r) * (1.0 - 1e-9);
            let h = HalfSpace::new(n.to_vec(), c).expect("unit normal");
            let mut top: f64 = 0.0;
            let diffs = (0..n_samples)
                .filter_map(|_| {
                    let x = sample_in_cap(&mut rng, &n, c, r);
                    let y = h.reflect3(&x);
                    if !(u.covers(&x) && u.covers(&y)) {
                        return None;
                    }
                    let (ux, uy) = (u.eval(&x), u.eval(&y));
                    top = top.max(ux).max(uy);
                    Some((x, uy - ux))
                })
                .collect();
            (h, diffs, top)
        })
        .collect();
    let top = per_h.iter().map(|p| p.2).fold(0.0, f64::max);
    let tol = eps * top;
    let mut picker = WitnessPicker::default();
    let mut equal = 0;
    for (h, diffs, _) in per_h {
        let mut scan = SignScan::new(tol);
        for (i, (_, d)) in diffs.iter().enumerate() {
            scan.push(i, *d);
        }
        match scan.branch() {
            Branch::Equal => equal += 1,
            Branch::Mixed => {
                let point = |(i, d): (usize, f64)| WitnessPoint {
                    location: diffs[i].0.to_vec(),
                    index: None,
                    difference: d,
                };
                picker.offer(Witness {
                    halfspace: h,
                    angle: None,
                    above: point(scan.pos.unwrap()),
                    below: point(scan.neg.unwrap()),
                    strength: scan.strength(),
                });
            }
            _ => {}
        }
    }
    SeparabilityReport {
        separable: picker.best.is_none(),
        tolerance: tol,
        halfspaces_tested: n_halfspaces,
        equal_branches: equal,
        witness: picker.best,
    }
}

fn probe_grid() -> LatLonGrid {
    LatLonGrid::new(33, 64).expect("valid grid")
}

/// The symmetry line through `x`, read off the restriction of `u` to the
/// sphere of radius `probe_radius` about `x`. The returned direction points
/// at the probe sphere's max cap.
pub fn axis_through_point(u: &FieldFn, x: &[f64; 3], probe_radius: f64, eps: f64) -> Result<AxisLine> {
    let f = u.clone();
    let c = *x;
    let s = SphereFn::from_fn(probe_grid(), move |y| {
        f.eval(&[
            c[0] + probe_radius * y[0],
            c[1] + probe_radius * y[1],
            c[2] + probe_radius * y[2],
        ])
    })?;
    if s.max() - s.min() <= eps * s.max() {
        return Err(Error::RadialProbe {
            radius: probe_radius,
        });
    }
    let rep = sphere_caps_and_axis(&s, eps)?;
    let d = rep
        .axis()
        .ok_or(Error::RadialProbe {
            radius: probe_radius,
        })?
        .to_vec();
    AxisLine::new(Point(x.to_vec()), &d)
}

/// [`axis_through_point`] over the probe ladder, returning the first radius
/// whose sphere is not constant.
pub fn axis_with_ladder(u: &FieldFn, x: &[f64; 3], eps: f64) -> Result<(AxisLine, f64)> {
    let mut last = Error::RadialProbe { radius: 0.0 };
    for &r in &PROBE_LADDER {
        match axis_through_point(u, x, r, eps) {
            Ok(line) => return Ok((line, r)),
            Err(e @ Error::RadialProbe { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Classification of a reflection point of an even 1-D sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionClass {
    /// Some `y ≥ α` has `f(y) > f(2α − y)`, none has `<`.
    I,
    /// Some `y ≥ α` has `f(y) < f(2α − y)`, none has `>`.
    J,
    /// All compared pairs equal within tolerance.
    K,
    /// Strict differences in both directions.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvenVerdict {
    /// Nonincreasing on `[0, X]` within tolerance.
    Nonincreasing,
    /// Not monotone, with equality reflections away from 0 (periodic-type).
    PeriodicType,
    /// Some reflection point shows strict differences in both directions.
    HypothesisFails,
    /// Reflection dichotomy holds with decay asserted, yet not monotone.
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenMonotoneReport {
    pub alphas: Vec<f64>,
    pub classes: Vec<ReflectionClass>,
    /// The one-sided reflection dichotomy holds at every tested point.
    pub dichotomy_holds: bool,
    /// Reflection points `α ≠ 0` in class K.
    pub k_nonzero: Vec<f64>,
    pub first_violation: Option<f64>,
    pub nonincreasing: bool,
    pub max_increase: f64,
    pub decay_hint: bool,
    pub verdict: EvenVerdict,
    pub note: String,
}

impl EvenMonotoneReport {
    pub fn passed(&self) -> bool {
        self.verdict == EvenVerdict::Nonincreasing
    }
}

/// Reflection classification and monotonicity of an even function sampled
/// uniformly on `[−X, X]` (odd sample count so that 0 is a node).
/// Reflection points are all nodes and midpoints, so `y ↦ 2α − y` permutes
/// the sample.
pub fn even_monotone_check(f: &[f64], x_max: f64, eps: f64, decay_hint: bool) -> Result<EvenMonotoneReport> {
    let n = f.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::Grid(format!("need an odd sample count >= 3, got {n}")));
    }
    let scale = f.iter().cloned().fold(0.0, |a: f64, b| a.max(b.abs()));
    let tol = eps * scale;
    if let Some(index) = (0..n / 2).find(|&i| (f[i] - f[n - 1 - i]).abs() > tol) {
        return Err(Error::NotEven {
            index,
            residual: (f[index] - f[n - 1 - index]).abs(),
        });
    }
    let h = 2.0 * x_max / (n - 1) as f64;
    let mid = (n - 1) / 2;
    let mut alphas = Vec::with_capacity(2 * n - 1);
    let mut classes = Vec::with_capacity(2 * n - 1);
    for k2 in 0..=2 * (n - 1) {
        let mut gt = false;
        let mut lt = false;
        // y index i with 2i ≥ k2 and mirror k2 − i ≥ 0.
        for i in k2.div_ceil(2)..n.min(k2 + 1) {
            let d = f[i] - f[k2 - i];
            gt |= d > tol;
            lt |= d < -tol;
        }
        alphas.push(-x_max + 0.5 * h * k2 as f64);
        classes.push(match (gt, lt) {
            (true, true) => ReflectionClass::Both,
            (true, false) => ReflectionClass::I,
            (false, true) => ReflectionClass::J,
            (false, false) => ReflectionClass::K,
        });
    }
    let first_violation = classes
        .iter()
        .position(|c| *c == ReflectionClass::Both)
        .map(|k| alphas[k]);
    let k_nonzero: Vec<f64> = alphas
        .iter()
        .zip(&classes)
        .enumerate()
        .filter(|(k2, (_, c))| **c == ReflectionClass::K && *k2 != 2 * mid)
        .map(|(_, (a, _))| *a)
        .collect();
    let half = Profile {
        abscissa: (mid..n).map(|i| h * (i - mid) as f64).collect(),
        values: f[mid..].to_vec(),
    };
    let max_increase = half.max_increase();
    let nonincreasing = max_increase <= tol;
    let dichotomy_holds = first_violation.is_none();
    let (verdict, note) = if nonincreasing {
        (EvenVerdict::Nonincreasing, "nonincreasing on [0, X]".to_string())
    } else if !k_nonzero.is_empty() {
        (
            EvenVerdict::PeriodicType,
            format!(
                "periodic-type: equality reflections at {} points away from 0; decay hypothesis {}",
                k_nonzero.len(),
                if decay_hint { "asserted but contradicted" } else { "not met" }
            ),
        )
    } else if !dichotomy_holds {
        (
            EvenVerdict::HypothesisFails,
            "reflection dichotomy fails; no monotonicity conclusion".to_string(),
        )
    } else if decay_hint {
        (
            EvenVerdict::Inconsistent,
            "dichotomy holds and decay asserted, but the sample increases".to_string(),
        )
    } else {
        (
            EvenVerdict::HypothesisFails,
            "not monotone and decay not asserted".to_string(),
        )
    };
    Ok(EvenMonotoneReport {
        alphas,
        classes,
        dichotomy_holds,
        k_nonzero,
        first_violation,
        nonincreasing,
        max_increase,
        decay_hint,
        verdict,
        note,
    })
}

/// Discrete maximizer of `u` over its grid (or a lattice of step
/// [`FieldFn::resolution`] on `[−R_max, R_max]³` for closures).
fn coarse_argmax(u: &FieldFn) -> ([f64; 3], f64) {
    match &u.source {
        FieldSource::Grid(g) => {
            let idx = (0..g.values.len())
                .max_by(|&a, &b| g.values[a].total_cmp(&g.values[b]).then(b.cmp(&a)))
                .unwrap();
            (g.node(idx), g.spacing[0].max(g.spacing[1]).max(g.spacing[2]))
        }
        FieldSource::Closure(_) => {
            let h = u.resolution();
            let m = (u.r_max / h).round() as i64;
            let side = (2 * m + 1) as usize;
            let best = (0..side * side * side)
                .into_par_iter()
                .map(|idx| {
                    let p = [
                        h * ((idx / (side * side)) as i64 - m) as f64,
                        h * (((idx / side) % side) as i64 - m) as f64,
                        h * ((idx % side) as i64 - m) as f64,
                    ];
                    (u.eval(&p), std::cmp::Reverse(idx), p)
                })
                .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap();
            (best.2, h)
        }
    }
}

/// Vertex of the parabola through `(−h, a), (0, b), (h, c)`, clamped to `±h`.
fn parabola_vertex(a: f64, b: f64, c: f64, h: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * h * (a - c) / den).clamp(-h, h)
}

/// Maximizer refined by per-coordinate 3-point quadratic fits. Closures are
/// refined repeatedly with shrinking steps; grids once at the grid spacing.
pub fn refine_maximizer(u: &FieldFn) -> [f64; 3] {
    let (mut x, mut h) = coarse_argmax(u);
    let rounds = match u.source {
        FieldSource::Grid(_) => 1,
        FieldSource::Closure(_) => 40,
    };
    for _ in 0..rounds {
        let mut moved: f64 = 0.0;
        for a in 0..3 {
            let mut lo = x;
            let mut hi = x;
            lo[a] -= h;
            hi[a] += h;
            let dx = parabola_vertex(u.eval(&lo), u.eval(&x), u.eval(&hi), h);
            x[a] += dx;
            moved = moved.max(dx.abs());
        }
        if moved < 0.5 * h {
            h *= 0.25;
        }
        if h < 1e-7 {
            break;
        }
    }
    x
}

fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialFit {
    pub center: Vec<f64>,
    /// Mean value on spheres about the center, starting at radius 0.
    pub profile: Profile,
    /// Largest per-sphere spread relative to the value at the center.
    pub max_spread: f64,
}

/// Center and radial profile of a decaying separable field.
pub fn radial_center_and_profile(u: &FieldFn, eps: f64) -> Result<RadialFit> {
    if !u.decay_hint {
        return Err(Error::Precondition(
            "radial recovery needs the decay hint (liminf u = 0 at infinity)".into(),
        ));
    }
    let c = refine_maximizer(u);
    let top = u.eval(&c);
    let reach = (u.r_max - norm(&c)).max(0.25 * u.r_max);
    let n_radii = 16;
    let dirs = fibonacci_sphere(256);
    let mut profile = Profile {
        abscissa: vec![0.0],
        values: vec![top],
    };
    let mut max_spread: f64 = 0.0;
    for k in 1..=n_radii {
        let r = reach * k as f64 / n_radii as f64;
        let vals: Vec<f64> = dirs
            .iter()
            .map(|d| [c[0] + r * d[0], c[1] + r * d[1], c[2] + r * d[2]])
            .filter(|p| u.covers(p))
            .map(|p| u.eval(&p))
            .collect();
        if vals.is_empty() {
            break;
        }
        let spread = relative_spread(&vals, top);
        if spread > eps {
            return Err(Error::NotRadial { radius: r, spread });
        }
        max_spread = max_spread.max(spread);
        profile.abscissa.push(r);
        profile.values.push(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    if let Some(index) = profile
        .values
        .windows(2)
        .position(|w| w[1] - w[0] > eps * top)
    {
        return Err(Error::Monotonicity {
            index: index + 1,
            increase: profile.values[index + 1] - profile.values[index],
        });
    }
    Ok(RadialFit {
        center: c.to_vec(),
        profile,
        max_spread,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub separability: SeparabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Symmetry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialFit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axis_lines: Vec<AxisLine>,
    pub note: String,
}

#[derive(Clone, Copy, Debug)]
pub struct FieldOptions {
    pub n_halfspaces: usize,
    pub n_samples: usize,
    pub eps: f64,
    pub seed: u64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            n_halfspaces: 256,
            n_samples: 2000,
            eps: 1e-6,
            seed: 0,
        }
    }
}

/// Separability followed by structure detection. With the decay hint a
/// separable field must be radial; otherwise the axis field is probed at a
/// few base points and reported when the lines are parallel.
pub fn analyze_field(u: &FieldFn, opts: FieldOptions) -> Result<FieldReport> {
    let sep = is_separable_field(u, opts.n_halfspaces, opts.n_samples, opts.eps, opts.seed);
    if !sep.separable {
        return Ok(FieldReport {
            separability: sep,
            symmetry: None,
            radial: None,
            axis_lines: vec![],
            note: "not separable".into(),
        });
    }
    if u.decay_hint {
        return match radial_center_and_profile(u, opts.eps) {
            Ok(fit) => Ok(FieldReport {
                separability: sep,
                symmetry: Some(Symmetry::Radial {
                    center: fit.center.clone(),
                }),
                radial: Some(fit),
                axis_lines: vec![],
                note: "radially symmetric and nonincreasing about the center".into(),
            }),
            Err(e @ (Error::NotRadial { .. } | Error::Monotonicity { .. })) => Err(Error::Precondition(format!(
                "separable field with the decay hint must be radial, but {e}"
            ))),
            Err(e) => Err(e),
        };
    }
    let q = 0.25 * u.r_max;
    let bases = [[0.0, 0.0, 0.0], [q, 0.0, 0.0], [0.0, q, 0.0], [0.0, 0.0, q]];
    let mut lines = vec![];
    for b in &bases {
        match axis_with_ladder(u, b, opts.eps) {
            Ok((line, _)) => lines.push(line),
            Err(Error::RadialProbe { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if lines.is_empty() {
        return Ok(FieldReport {
            separability: sep,
            symmetry: Some(Symmetry::Constant),
            radial: None,
            axis_lines: vec![],
            note: "every probe sphere is constant".into(),
        });
    }
    let d0 = lines[0].direction.clone();
    let worst = lines
        .iter()
        .map(|l| crate::geometry::line_angle(&l.direction, &d0))
        .fold(0.0, f64::max);
    let note = if worst <= 2f64.to_radians() {
        format!("parallel axis field (max deviation {:.3} deg)", worst.to_degrees())
    } else {
        format!("axis lines not parallel (max deviation {:.3} deg)", worst.to_degrees())
    };
    Ok(FieldReport {
        separability: sep,
        symmetry: Some(Symmetry::Axial { direction: d0 }),
        radial: None,
        axis_lines: lines,
        note,
    })
}

/// Named closed-form fields used by examples, tests, and the CLI.
pub fn fixture(name: &str) -> Option<FieldFn> {
    let r = DEFAULT_R_MAX;
    Some(match name {
        "gauss" => FieldFn::from_fn(
            |x| (-dot(x, x)).exp() + 0.01 * (-dot(x, x) / 100.0).exp(),
            r,
            true,
        ),
        "tanh-x3" => FieldFn::from_fn(|x| 2.0 - x[2].tanh(), r, false),
        "two-bumps" => FieldFn::from_fn(
            |x| {
                let d = [x[0] - 4.0, x[1], x[2]];
                1.0 / (1.0 + dot(x, x)) + 0.5 / (1.0 + dot(&d, &d))
            },
            r,
            true,
        ),
        "shifted-bump" => FieldFn::from_fn(
            |x| {
                let d = [x[0] - 1.0, x[1] - 2.0, x[2]];
                1.0 / (1.0 + dot(&d, &d))
            },
            r,
            true,
        ),
        "exp-radial" => FieldFn::from_fn(|x| (-norm(x)).exp(), r, true),
        _ => return None,
    })
}

pub const FIXTURE_NAMES: [&str; 5] = ["gauss", "tanh-x3", "two-bumps", "shifted-bump", "exp-radial"];
