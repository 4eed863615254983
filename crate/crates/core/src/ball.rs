//! Positive functions on a centered ball stored as concentric spherical
//! shells at radii `jR/m` sharing one latitude–longitude grid, plus the value
//! at the origin.
//!
//! Every reflection tested here fixes the origin, so it maps each shell onto
//! itself and comparisons never mix radii.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{line_angle, normalized, to3, HalfSpace};
use crate::report::{
    AxisReport, Branch, SeparabilityReport, ShellAxis, SignScan, Symmetry, Witness, WitnessPicker,
    WitnessPoint,
};
use crate::sphere::{
    is_separable_sphere, random_halfspaces, scan_exact, scan_sampled, sphere_caps_and_axis,
    Evaluator, GridReflection, LatLonGrid, SphereFn, DEFAULT_HALFSPACES,
};

#[derive(Clone)]
pub struct BallFn {
    radius: f64,
    grid: LatLonGrid,
    shells: Vec<SphereFn>,
    center_value: f64,
    source: Option<Evaluator>,
}

impl fmt::Debug for BallFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallFn")
            .field("radius", &self.radius)
            .field("grid", &self.grid)
            .field("shells", &self.shells.len())
            .field("center_value", &self.center_value)
            .field("exact_source", &self.source.is_some())
            .finish()
    }
}

impl BallFn {
    /// `shell_values[j]` holds the samples on the sphere of radius `(j+1)R/m`.
    pub fn new(radius: f64, grid: LatLonGrid, shell_values: Vec<Vec<f64>>, center_value: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
        }
        if shell_values.is_empty() {
            return Err(Error::Grid("at least one shell is required".into()));
        }
        if !(center_value > 0.0 && center_value.is_finite()) {
            return Err(Error::Positivity {
                index: 0,
                value: center_value,
            });
        }
        let per = grid.len();
        let shells = shell_values
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                SphereFn::new(grid, v).map_err(|e| match e {
                    Error::Positivity { index, value } => Error::Positivity {
                        index: 1 + j * per + index,
                        value,
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BallFn {
            radius,
            grid,
            shells,
            center_value,
            source: None,
        })
    }

    /// Samples `f` on `m` shells and keeps `f` for off-grid queries.
    pub fn from_fn(
        radius: f64,
        m: usize,
        grid: LatLonGrid,
        f: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let f: Evaluator = Arc::new(f);
        let mut b = Self::sample_with(radius, m, grid, &*f)?;
        b.source = Some(f.clone());
        for (j, shell) in b.shells.iter_mut().enumerate() {
            let r = radius * (j + 1) as f64 / m as f64;
            let g = f.clone();
            *shell = SphereFn::from_fn(grid, move |x| g(&[r * x[0], r * x[1], r * x[2]]))?;
        }
        Ok(b)
    }

    /// Samples `f` on `m` shells; off-grid queries interpolate.
    pub fn sampled(radius: f64, m: usize, grid: LatLonGrid, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self> {
        Self::sample_with(radius, m, grid, &f)
    }

    fn sample_with(radius: f64, m: usize, grid: LatLonGrid, f: &dyn Fn(&[f64; 3]) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Grid("at least one shell is required".into()));
        }
        let shells = (1..=m)
            .map(|j| {
                let r = radius * j as f64 / m as f64;
                (0..grid.len())
                    .map(|n| {
                        let x = grid.point(n);
                        f(&[r * x[0], r * x[1], r * x[2]])
                    })
                    .collect()
            })
            .collect();
        BallFn::new(radius, grid, shells, f(&[0.0; 3]))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &LatLonGrid {
        &self.grid
    }

    pub fn shells(&self) -> &[SphereFn] {
        &self.shells
    }

    pub fn n_shells(&self) -> usize {
        self.shells.len()
    }

    pub fn shell_radius(&self, j: usize) -> f64 {
        self.radius * (j + 1) as f64 / self.shells.len() as f64
    }

    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    pub fn max(&self) -> f64 {
        self.shells
            .iter()
            .map(SphereFn::max)
            .fold(self.center_value, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.shells
            .iter()
            .map(SphereFn::min)
            .fold(self.center_value, f64::min)
    }

    pub fn scaled(&self, lambda: f64) -> Result<BallFn> {
        let shells = self
            .shells
            .iter()
            .map(|s| s.scaled(lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(BallFn {
            radius: self.radius,
            grid: self.grid,
            shells,
            center_value: lambda * self.center_value,
            source: self.source.clone().map(|f| {
                let g: Evaluator = Arc::new(move |x: &[f64; 3]| lambda * f(x));
                g
            }),
        })
    }

    /// Value at any point of the closed ball: the attached closed form when
    /// present, otherwise angular interpolation on the two bracketing shells
    /// (or the origin) and linear interpolation in radius.
    pub fn eval(&self, x: &[f64; 3]) -> Result<f64> {
        let r = crate::geometry::norm(x);
        if r > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideBall {
                radius: self.radius,
                norm: r,
            });
        }
        if let Some(f) = &self.source {
            return Ok(f(x));
        }
        if r == 0.0 {
            return Ok(self.center_value);
        }
        let dir = [x[0] / r, x[1] / r, x[2] / r];
        let m = self.shells.len();
        let t = (r / self.radius * m as f64).min(m as f64);
        let j = (t.floor() as usize).min(m - 1);
        let ft = t - j as f64;
        let lower = if j == 0 {
            self.center_value
        } else {
            self.shells[j - 1].interp(&dir)
        };
        let upper = self.shells[j].interp(&dir);
        Ok((1.0 - ft) * lower + ft * upper)
    }
}

fn ball_witness(u: &BallFn, h: HalfSpace, scan: &SignScan) -> Witness {
    let per = u.grid.len();
    let point = |(k, d): (usize, f64)| {
        let (s, node) = (k / per, k % per);
        let (i, j) = u.grid.lat_lon(node);
        let r = u.shell_radius(s);
        let x = u.grid.point(node);
        WitnessPoint {
            location: vec![r * x[0], r * x[1], r * x[2]],
            index: Some(vec![s + 1, i, j]),
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

enum Tested {
    Exact(GridReflection),
    Sampled(HalfSpace),
}

fn tested_halfspaces(u: &BallFn, n_halfspaces: usize, seed: u64) -> Vec<Tested> {
    GridReflection::all(&u.grid)
        .into_iter()
        .map(Tested::Exact)
        .chain(random_halfspaces(n_halfspaces, seed).into_iter().map(Tested::Sampled))
        .collect()
}

fn scan_shell(shell: &SphereFn, t: &Tested, pts: &[[f64; 3]], tol: f64, offset: usize) -> SignScan {
    let mut scan = SignScan::new(tol);
    match t {
        Tested::Exact(r) => scan_exact(shell, r, pts, &mut scan, offset),
        Tested::Sampled(h) => scan_sampled(shell, h, pts, &mut scan, offset),
    }
    scan
}

fn merge(a: SignScan, b: SignScan) -> SignScan {
    let mut out = a;
    if let Some((i, d)) = b.pos {
        if out.pos.map_or(true, |(_, e)| d > e) {
            out.pos = Some((i, d));
        }
    }
    if let Some((i, d)) = b.neg {
        if out.neg.map_or(true, |(_, e)| d < e) {
            out.neg = Some((i, d));
        }
    }
    out
}

/// Separability in the ball: for every tested origin-through half-space the
/// sign of `u∘σ_H − u` must agree across all shells at once. Differences
/// within `eps·max u` count as equal.
pub fn is_separable_ball(u: &BallFn, n_halfspaces: usize, eps: f64, seed: u64) -> SeparabilityReport {
    let pts = u.grid.points();
    let tol = eps * u.max();
    let per = u.grid.len();
    let tested = tested_halfspaces(u, n_halfspaces, seed);
    let outcomes: Vec<(Branch, Option<Witness>)> = tested
        .par_iter()
        .map(|t| {
            let scan = u
                .shells
                .iter()
                .enumerate()
                .map(|(s, shell)| scan_shell(shell, t, &pts, tol, s * per))
                .fold(SignScan::new(tol), merge);
            let b = scan.branch();
            let w = (b == Branch::Mixed).then(|| {
                let h = match t {
                    Tested::Exact(r) => r.halfspace(&u.grid),
                    Tested::Sampled(h) => h.clone(),
                };
                ball_witness(u, h, &scan)
            });
            (b, w)
        })
        .collect();
    let mut picker = WitnessPicker::default();
    let mut equal = 0;
    for (b, w) in outcomes {
        if b == Branch::Equal {
            equal += 1;
        }
        if let Some(w) = w {
            picker.offer(w);
        }
    }
    SeparabilityReport {
        separable: picker.best.is_none(),
        tolerance: tol,
        halfspaces_tested: tested.len(),
        equal_branches: equal,
        witness: picker.best,
    }
}

/// Per-half-space, per-shell branch table for the tested set used by
/// [`is_separable_ball`]: `table[h][shell]`.
pub fn shell_branch_table(u: &BallFn, n_halfspaces: usize, eps: f64, seed: u64) -> Vec<Vec<Branch>> {
    let pts = u.grid.points();
    let tol = eps * u.max();
    tested_halfspaces(u, n_halfspaces, seed)
        .par_iter()
        .map(|t| {
            u.shells
                .iter()
                .map(|shell| scan_shell(shell, t, &pts, tol, 0).branch())
                .collect()
        })
        .collect()
}

/// Largest pairwise line angle accepted between shell axes.
pub fn collinearity_tolerance(grid: &LatLonGrid) -> f64 {
    2f64.to_radians().max(3.0 * grid.resolution())
}

/// Axis of a separable ball function from its shells. Shells that are
/// constant within `eps·shell max` carry no direction; the remaining shell
/// axes must agree up to the collinearity tolerance.
pub fn ball_axis(u: &BallFn, eps: f64) -> Result<AxisReport> {
    let sep = is_separable_ball(u, DEFAULT_HALFSPACES, eps, 0);
    if let Some(w) = sep.witness {
        return Err(Error::NotSeparable(Box::new(w)));
    }
    let per_shell: Vec<AxisReport> = u
        .shells
        .par_iter()
        .map(|s| sphere_caps_and_axis(s, eps))
        .collect::<Result<Vec<_>>>()?;

    let mut shells = Vec::with_capacity(per_shell.len());
    let mut axes: Vec<(usize, [f64; 3])> = vec![];
    for (j, rep) in per_shell.iter().enumerate() {
        let axis = rep.axis().map(to3);
        if let Some(a) = axis {
            axes.push((j, a));
        }
        shells.push(ShellAxis {
            shell: j + 1,
            radius: u.shell_radius(j),
            constant: axis.is_none(),
            axis: axis.map(|a| a.to_vec()),
            profile: rep.profile.clone(),
        });
    }
    if axes.is_empty() {
        let mut rep = AxisReport::constant();
        rep.symmetry = Symmetry::Radial {
            center: vec![0.0; 3],
        };
        rep.shells = shells;
        return Ok(rep);
    }

    let tol = collinearity_tolerance(&u.grid);
    let mut worst: f64 = 0.0;
    for (p, &(ja, a)) in axes.iter().enumerate() {
        for &(jb, b) in &axes[p + 1..] {
            let ang = line_angle(&a, &b);
            if ang > tol {
                return Err(Error::AxisMismatch {
                    shell_a: ja + 1,
                    shell_b: jb + 1,
                    angle_deg: ang.to_degrees(),
                });
            }
            worst = worst.max(ang);
        }
    }

    // Shared direction: sum of shell axes oriented like the outermost one.
    let reference = axes.last().unwrap().1;
    let mut sum = [0.0; 3];
    for &(_, a) in &axes {
        let s = if crate::geometry::dot(&a, &reference) >= 0.0 { 1.0 } else { -1.0 };
        for k in 0..3 {
            sum[k] += s * a[k];
        }
    }
    let d = to3(&normalized(&sum).unwrap_or(reference.to_vec()));
    let outer = &per_shell[axes.last().unwrap().0];
    let mut rep = AxisReport {
        symmetry: Symmetry::Axial { direction: d.to_vec() },
        max_cap: outer.max_cap.clone(),
        min_cap: outer.min_cap.clone(),
        profile: outer.profile.clone(),
        shells,
        residuals: Default::default(),
    };
    rep.residuals.insert("max_pairwise_axis_angle_rad".into(), worst);
    rep.residuals.insert(
        "axis_spread_from_shared_rad".into(),
        axes.iter()
            .map(|(_, a)| line_angle(a, &d))
            .fold(0.0, f64::max),
    );
    rep.residuals.insert("constant_shells".into(), (u.shells.len() - axes.len()) as f64);
    Ok(rep)
}

/// Per-shell sphere separability, each at its own relative tolerance.
pub fn shell_reports(u: &BallFn, n_halfspaces: usize, eps: f64, seed: u64) -> Vec<SeparabilityReport> {
    u.shells
        .par_iter()
        .map(|s| is_separable_sphere(s, n_halfspaces, eps, seed))
        .collect()
}

/// Piecewise-linear profile `t ↦ y` through sample points with increasing `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProfile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl LinearProfile {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::Grid("profile needs at least two samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Grid("profile abscissae must increase strictly".into()));
        }
        Ok(LinearProfile { x, y })
    }

    /// Uniform samples of `f` on `[a, b]`.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = n.max(2);
        let x: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
        let y = x.iter().map(|&t| f(t)).collect();
        LinearProfile::new(x, y)
    }

    /// Linear interpolation, clamped to the end values outside the range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let s = (t - x0) / (x1 - x0);
        (1.0 - s) * self.y[k - 1] + s * self.y[k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGridParams {
    pub radius: f64,
    pub shells: usize,
    pub n_lat: usize,
    pub n_lon: usize,
}

/// The product `g(x₃)·h(|x|)` on the shell grid, with the interpolated
/// product attached as the exact evaluator. `g` must be nonincreasing.
pub fn make_separable_ball(g: &LinearProfile, h: &LinearProfile, params: BallGridParams) -> Result<BallFn> {
    if let Some((index, w)) = g
        .y
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[1] - w[0] > 1e-12)
    {
        return Err(Error::Monotonicity {
            index: index + 1,
            increase: w[1] - w[0],
        });
    }
    let grid = LatLonGrid::new(params.n_lat, params.n_lon)?;
    let (g, h) = (g.clone(), h.clone());
    BallFn::from_fn(params.radius, params.shells, grid, move |x| {
        let r = crate::geometry::norm(x);
        g.eval(x[2]) * h.eval(r)
    })
}

/// The worked product example: `g(t) = 2 − tanh t`, `h(r) = 1 − (r/R)² + 0.1`.
pub fn example21(params: BallGridParams) -> Result<BallFn> {
    let r = params.radius;
    let g = LinearProfile::sample(-r, r, 2001, |t| 2.0 - t.tanh())?;
    let h = LinearProfile::sample(0.0, r, 2001, |s| 1.0 - (s / r).powi(2) + 0.1)?;
    make_separable_ball(&g, &h, params)
}
