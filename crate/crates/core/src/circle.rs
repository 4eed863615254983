//! Positive functions sampled on the unit circle: separability under line
//! reflections, extremal arcs, symmetry axis, and monotone half-profile.
//!
//! Nodes sit at `θ_j = 2πj/n` with `n` even. The reflection across the line
//! at angle `α_k = πk/n` maps node `j` to node `(k − j) mod n`, so those `2n`
//! oriented lines are tested exactly; arbitrary angles go through periodic
//! linear interpolation.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cap, HalfSpace};
use crate::report::{
    AxisReport, Profile, SeparabilityReport, SignScan, Symmetry, Witness, WitnessPicker,
    WitnessPoint,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFn {
    values: Vec<f64>,
}

impl CircleFn {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!(
                "circle needs an even node count >= 8, got {n}"
            )));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Positivity { index, value });
        }
        Ok(CircleFn { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        CircleFn::new((0..n).map(|j| f(TAU * j as f64 / n as f64)).collect())
    }

    /// `v(θ) = profile(dist(θ, α₀))` with `dist` the angular distance in
    /// `[0, π]`. A nonincreasing `profile` yields a separable function with
    /// axis `α₀`.
    pub fn from_profile(n: usize, alpha0: f64, profile: impl Fn(f64) -> f64) -> Result<Self> {
        CircleFn::from_fn(n, |t| profile(angular_distance(t, alpha0)))
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        TAU / self.n_nodes() as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.step() * j as f64
    }

    pub fn value(&self, j: isize) -> f64 {
        self.values[j.rem_euclid(self.n_nodes() as isize) as usize]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Periodic linear interpolation at an arbitrary angle.
    pub fn interp(&self, theta: f64) -> f64 {
        let n = self.n_nodes();
        let s = theta.rem_euclid(TAU) / self.step();
        let j0 = s.floor();
        let f = s - j0;
        let j0 = (j0 as usize) % n;
        (1.0 - f) * self.values[j0] + f * self.values[(j0 + 1) % n]
    }

    /// Bound on the linear-interpolation error from second differences.
    pub fn interpolation_bound(&self) -> f64 {
        let n = self.n_nodes() as isize;
        (0..n)
            .map(|j| (self.value(j + 1) - 2.0 * self.value(j) + self.value(j - 1)).abs())
            .fold(0.0, f64::max)
            / 8.0
    }
}

/// Angular distance between two angles, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Angle of the `k`-th grid-preserving line, `πk/n`.
pub fn reflection_angle(k: usize, n_nodes: usize) -> f64 {
    PI * k as f64 / n_nodes as f64
}

/// Half-space `S_α` side of the line at angle `α`: points at angles in `(α, α + π)`.
pub fn line_halfspace(alpha: f64) -> HalfSpace {
    HalfSpace::new(vec![-alpha.sin(), alpha.cos()], 0.0).expect("unit normal")
}

/// The `2n` oriented lines through the origin whose reflections map the node
/// set onto itself.
pub fn circle_reflections(n_nodes: usize) -> Result<Vec<HalfSpace>> {
    if n_nodes == 0 || n_nodes % 2 != 0 {
        return Err(Error::Grid(format!(
            "grid-preserving reflections need an even node count, got {n_nodes}"
        )));
    }
    Ok((0..2 * n_nodes)
        .map(|k| line_halfspace(reflection_angle(k, n_nodes)))
        .collect())
}

/// Nodes strictly inside the open half-circle `(α_k, α_k + π)`.
fn in_open_half(j: usize, k: usize, n: usize) -> bool {
    let t = (2 * j + 2 * n - k % (2 * n)) % (2 * n);
    t > 0 && t < n
}

fn mirror_index(j: usize, k: usize, n: usize) -> usize {
    (k + n * 2 - j % n) % n
}

fn scan_line(v: &CircleFn, k: usize, tol: f64) -> SignScan {
    let n = v.n_nodes();
    let mut scan = SignScan::new(tol);
    for j in 0..n {
        if in_open_half(j, k, n) {
            scan.push(j, v.values[mirror_index(j, k, n)] - v.values[j]);
        }
    }
    scan
}

fn witness_from_scan(v: &CircleFn, k: usize, scan: &SignScan) -> Witness {
    let n = v.n_nodes();
    let alpha = reflection_angle(k, n);
    let point = |(j, d): (usize, f64)| WitnessPoint {
        location: vec![v.angle(j).cos(), v.angle(j).sin()],
        index: Some(vec![j]),
        difference: d,
    };
    Witness {
        halfspace: line_halfspace(alpha),
        angle: Some(alpha),
        above: point(scan.pos.unwrap()),
        below: point(scan.neg.unwrap()),
        strength: scan.strength(),
    }
}

/// Exact separability over all grid-preserving line reflections. Differences
/// within `eps·max v` count as equal.
pub fn is_separable_circle(v: &CircleFn, eps: f64) -> SeparabilityReport {
    let n = v.n_nodes();
    let tol = eps * v.max();
    let lines = 2 * n;
    let mut equal = 0;
    let mut violated = false;
    for k in 0..lines {
        let scan = scan_line(v, k, tol);
        match scan.branch() {
            crate::report::Branch::Mixed => {
                violated = true;
                break;
            }
            crate::report::Branch::Equal => equal += 1,
            _ => {}
        }
    }
    if !violated {
        return SeparabilityReport {
            separable: true,
            tolerance: tol,
            halfspaces_tested: lines,
            equal_branches: equal,
            witness: None,
        };
    }
    // Full pass so the reported witness is the strongest violation.
    let mut picker = WitnessPicker::default();
    let mut equal = 0;
    for k in 0..lines {
        let scan = scan_line(v, k, tol);
        match scan.branch() {
            crate::report::Branch::Mixed => picker.offer(witness_from_scan(v, k, &scan)),
            crate::report::Branch::Equal => equal += 1,
            _ => {}
        }
    }
    SeparabilityReport {
        separable: false,
        tolerance: tol,
        halfspaces_tested: lines,
        equal_branches: equal,
        witness: picker.best,
    }
}

/// Separability over `n_angles` equally spaced oriented lines at arbitrary
/// angles, comparing node values with interpolated mirror values. `eps`
/// should dominate [`CircleFn::interpolation_bound`] relative to `max v`.
pub fn is_separable_circle_interp(v: &CircleFn, n_angles: usize, eps: f64) -> SeparabilityReport {
    let n = v.n_nodes();
    let tol = eps * v.max();
    let mut picker = WitnessPicker::default();
    let mut equal = 0;
    for k in 0..n_angles {
        let alpha = TAU * (k as f64 + 0.5) / n_angles as f64;
        let mut scan = SignScan::new(tol);
        for j in 0..n {
            let t = (v.angle(j) - alpha).rem_euclid(TAU);
            if t > 1e-12 && t < PI - 1e-12 {
                scan.push(j, v.interp(2.0 * alpha - v.angle(j)) - v.values[j]);
            }
        }
        match scan.branch() {
            crate::report::Branch::Mixed => {
                let point = |(j, d): (usize, f64)| WitnessPoint {
                    location: vec![v.angle(j).cos(), v.angle(j).sin()],
                    index: Some(vec![j]),
                    difference: d,
                };
                picker.offer(Witness {
                    halfspace: line_halfspace(alpha),
                    angle: Some(alpha),
                    above: point(scan.pos.unwrap()),
                    below: point(scan.neg.unwrap()),
                    strength: scan.strength(),
                });
            }
            crate::report::Branch::Equal => equal += 1,
            _ => {}
        }
    }
    SeparabilityReport {
        separable: picker.best.is_none(),
        tolerance: tol,
        halfspaces_tested: n_angles,
        equal_branches: equal,
        witness: picker.best,
    }
}

/// Extremal arcs: the max set is `{α₀ + θ : |θ| ≤ θ₁}` and the min set is
/// centered at `min_center` with half-angle `θ₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalArcs {
    pub alpha0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub min_center: f64,
}

impl ExtremalArcs {
    /// Deviation of the max/min arc centers from exact antipodality.
    pub fn antipodal_error(&self) -> f64 {
        (angular_distance(self.alpha0, self.min_center) - PI).abs()
    }
}

/// Single cyclic run of `true` entries as `(start, len)`.
fn cyclic_run(mask: &[bool]) -> Option<(usize, usize)> {
    let n = mask.len();
    let len = mask.iter().filter(|&&b| b).count();
    if len == 0 {
        return None;
    }
    if len == n {
        return Some((0, n));
    }
    let starts: Vec<usize> = (0..n)
        .filter(|&j| mask[j] && !mask[(j + n - 1) % n])
        .collect();
    (starts.len() == 1).then(|| (starts[0], len))
}

/// Twice the center index of a run (integer even when the run has odd length).
fn run_center2(start: usize, len: usize) -> usize {
    2 * start + len - 1
}

pub fn extremal_arcs(v: &CircleFn, eps: f64) -> Result<ExtremalArcs> {
    let (max, min) = (v.max(), v.min());
    let tol = eps * max;
    if max - min <= tol {
        return Err(Error::ConstantFunction);
    }
    let step = v.step();
    let hi: Vec<bool> = v.values.iter().map(|&x| x >= max - tol).collect();
    let lo: Vec<bool> = v.values.iter().map(|&x| x <= min + tol).collect();
    let not_contig = |which: &str| {
        let rep = is_separable_circle(v, eps);
        match rep.witness {
            Some(w) => Error::NotSeparable(Box::new(w)),
            None => Error::CapFit(format!("{which} set is not a single arc")),
        }
    };
    let (hs, hl) = cyclic_run(&hi).ok_or_else(|| not_contig("max"))?;
    let (ls, ll) = cyclic_run(&lo).ok_or_else(|| not_contig("min"))?;
    Ok(ExtremalArcs {
        alpha0: (0.5 * step * run_center2(hs, hl) as f64).rem_euclid(TAU),
        theta1: 0.5 * step * (hl - 1) as f64,
        theta2: 0.5 * step * (ll - 1) as f64,
        min_center: (0.5 * step * run_center2(ls, ll) as f64).rem_euclid(TAU),
    })
}

/// Axis and monotone half-profile of a separable circle function.
pub fn circle_axis_and_profile(v: &CircleFn, eps: f64) -> Result<AxisReport> {
    let sep = is_separable_circle(v, eps);
    if let Some(w) = sep.witness {
        return Err(Error::NotSeparable(Box::new(w)));
    }
    let n = v.n_nodes();
    let max = v.max();
    let tol = eps * max;
    if max - v.min() <= tol {
        return Ok(AxisReport::constant());
    }
    // A separable function invariant under the antipodal map is constant.
    let antipodal = (0..n)
        .map(|j| (v.values[j] - v.values[(j + n / 2) % n]).abs())
        .fold(0.0, f64::max);
    if antipodal <= tol {
        let mut rep = AxisReport::constant();
        rep.residuals
            .insert("antipodal_difference".into(), antipodal / max);
        return Ok(rep);
    }

    let arcs = extremal_arcs(v, eps)?;
    let hi: Vec<bool> = v.values.iter().map(|&x| x >= max - tol).collect();
    let (hs, hl) = cyclic_run(&hi).expect("checked by extremal_arcs");
    let c2 = run_center2(hs, hl);

    let mirror = (0..n)
        .map(|j| (v.values[(c2 + 2 * n - j) % n] - v.values[j]).abs())
        .fold(0.0, f64::max);
    if mirror > tol {
        return Err(Error::Structure {
            what: "mirror symmetry about the axis",
            residual: mirror / max,
            tolerance: eps,
        });
    }

    // Half-profile from the axis (angle 0) to the opposite point (angle π).
    let step = v.step();
    let first = c2.div_ceil(2);
    let mut profile = Profile::default();
    let mut j2 = 2 * first;
    while j2 <= c2 + n {
        let j = (j2 / 2) % n;
        profile.abscissa.push(0.5 * step * (j2 - c2) as f64);
        profile.values.push(v.values[j]);
        j2 += 2;
    }
    let increase = profile.max_increase();
    if increase > tol {
        return Err(Error::Structure {
            what: "nonincreasing half-profile",
            residual: increase / max,
            tolerance: eps,
        });
    }

    let axis = vec![arcs.alpha0.cos(), arcs.alpha0.sin()];
    let min_axis = vec![arcs.min_center.cos(), arcs.min_center.sin()];
    let mut rep = AxisReport {
        symmetry: Symmetry::Axial {
            direction: axis.clone(),
        },
        max_cap: Some(Cap {
            axis,
            height: arcs.theta1.cos(),
        }),
        min_cap: Some(Cap {
            axis: min_axis,
            height: arcs.theta2.cos(),
        }),
        profile: Some(profile),
        shells: vec![],
        residuals: Default::default(),
    };
    rep.residuals.insert("mirror".into(), mirror / max);
    rep.residuals.insert("monotonicity".into(), increase / max);
    rep.residuals
        .insert("antipodal_error_rad".into(), arcs.antipodal_error());
    rep.residuals.insert("alpha0".into(), arcs.alpha0);
    rep.residuals.insert("theta1".into(), arcs.theta1);
    rep.residuals.insert("theta2".into(), arcs.theta2);
    Ok(rep)
}

/// For a separable nonconstant `v` whose max arc is centered at `alpha0`:
/// when the center lies strictly inside the half-circle of line `k`, `v`
/// dominates its reflection there. Lines whose boundary passes through the
/// center are vacuous.
pub fn corollary_direction_check(v: &CircleFn, alpha0: f64, k: usize, eps: f64) -> bool {
    let n = v.n_nodes();
    let alpha = reflection_angle(k, n);
    let t = (alpha0 - alpha).rem_euclid(TAU);
    let margin = 1e-9;
    if !(t > margin && t < PI - margin) {
        return true;
    }
    let tol = eps * v.max();
    (0..n)
        .filter(|&j| in_open_half(j, k, n))
        .all(|j| v.values[j] >= v.values[mirror_index(j, k, n)] - tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plateau(t: f64) -> f64 {
        let d = angular_distance(t, 0.0);
        if d <= PI / 6.0 {
            3.0
        } else if d >= 5.0 * PI / 6.0 {
            1.0
        } else {
            3.0 - 2.0 * (d - PI / 6.0) / (2.0 * PI / 3.0)
        }
    }

    #[test]
    fn reflections_enumerate_grid_lines() {
        let r = circle_reflections(4).unwrap();
        assert_eq!(r.len(), 8);
        for (k, h) in r.iter().enumerate() {
            let a = PI * k as f64 / 4.0;
            assert!((h.normal()[0] + a.sin()).abs() < 1e-15);
            assert!((h.normal()[1] - a.cos()).abs() < 1e-15);
        }
        assert!(matches!(circle_reflections(5), Err(Error::Grid(_))));
    }

    #[test]
    fn reflections_preserve_nodes() {
        let n = 8;
        for h in circle_reflections(n).unwrap() {
            for j in 0..n {
                let t = TAU * j as f64 / n as f64;
                let r = h.reflect(&[t.cos(), t.sin()]);
                let back = r[1].atan2(r[0]).rem_euclid(TAU) / (TAU / n as f64);
                assert!((back - back.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_grid_angle_is_absent() {
        let n = 6;
        let target = PI / 5.0;
        let r = circle_reflections(n).unwrap();
        assert!(r.iter().all(|h| {
            let a = (-h.normal()[0]).atan2(h.normal()[1]).rem_euclid(TAU);
            (a - target).abs() > 1e-6
        }));
    }

    #[test]
    fn mirror_index_matches_geometry() {
        let n = 16;
        for k in 0..2 * n {
            let h = line_halfspace(reflection_angle(k, n));
            for j in 0..n {
                let t = TAU * j as f64 / n as f64;
                let x = [t.cos(), t.sin()];
                let r = h.reflect(&x);
                let m = mirror_index(j, k, n);
                let tm = TAU * m as f64 / n as f64;
                assert!((r[0] - tm.cos()).abs() < 1e-12 && (r[1] - tm.sin()).abs() < 1e-12);
                if in_open_half(j, k, n) {
                    assert!(h.signed_distance(&x) > 1e-12);
                } else {
                    assert!(h.signed_distance(&x) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_is_separable() {
        let v = CircleFn::from_fn(16, |_| 3.0).unwrap();
        assert!(is_separable_circle(&v, 1e-9).separable);
        assert_eq!(
            circle_axis_and_profile(&v, 1e-9).unwrap().symmetry,
            Symmetry::Constant
        );
        assert!(matches!(
            extremal_arcs(&v, 1e-9),
            Err(Error::ConstantFunction)
        ));
    }

    #[test]
    fn cosine_is_separable_with_axis_zero() {
        let v = CircleFn::from_fn(64, |t| 2.0 + t.cos()).unwrap();
        let r = is_separable_circle(&v, 1e-9);
        assert!(r.separable && r.witness.is_none());
        let arcs = extremal_arcs(&v, 1e-9).unwrap();
        assert!(arcs.alpha0.abs() < 1e-12);
        assert!(arcs.theta1 < v.step() && arcs.theta2 < v.step());
        let rep = circle_axis_and_profile(&v, 1e-9).unwrap();
        let d = rep.axis().unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12);
        let p = rep.profile.unwrap();
        assert_eq!(p.values.len(), 33);
        for (t, val) in p.abscissa.iter().zip(&p.values) {
            assert!((val - (2.0 + t.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn cos2_fails_with_quarter_pi_witness() {
        let v = CircleFn::from_fn(64, |t| 2.0 + (2.0 * t).cos()).unwrap();
        let r = is_separable_circle(&v, 1e-9);
        assert!(!r.separable);
        let w = r.witness.unwrap();
        assert!((w.angle.unwrap() - PI / 4.0).abs() < 1e-12);
        assert!(w.above.difference > 0.0 && w.below.difference < 0.0);
        assert!(matches!(
            circle_axis_and_profile(&v, 1e-9),
            Err(Error::NotSeparable(_))
        ));
    }

    #[test]
    fn phase_shifted_axis() {
        let v = CircleFn::from_fn(64, |t| 2.0 + (t - PI / 3.0).cos()).unwrap();
        let arcs = extremal_arcs(&v, 1e-9).unwrap();
        assert!(angular_distance(arcs.alpha0, PI / 3.0) <= v.step());
    }

    #[test]
    fn plateau_arcs() {
        let v = CircleFn::from_fn(96, plateau).unwrap();
        assert!(is_separable_circle(&v, 1e-9).separable);
        let arcs = extremal_arcs(&v, 1e-9).unwrap();
        assert!(arcs.alpha0.abs() < 1e-12);
        assert!((arcs.theta1 - PI / 6.0).abs() <= v.step());
        assert!((arcs.theta2 - PI / 6.0).abs() <= v.step());
        assert!(arcs.theta1 + arcs.theta2 < PI);
        assert!(arcs.antipodal_error() < 1e-12);
    }

    #[test]
    fn antipodal_invariant_separable_is_constant_branch() {
        // Separable and v(α) = v(α + π) within tolerance: reported constant.
        let v = CircleFn::from_fn(32, |t| 2.0 + 1e-12 * (2.0 * t).cos()).unwrap();
        let rep = circle_axis_and_profile(&v, 1e-9).unwrap();
        assert_eq!(rep.symmetry, Symmetry::Constant);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(CircleFn::new(vec![1.0; 7]), Err(Error::Grid(_))));
        assert!(matches!(CircleFn::new(vec![1.0; 6]), Err(Error::Grid(_))));
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        assert!(matches!(
            CircleFn::new(v),
            Err(Error::Positivity { index: 3, .. })
        ));
    }

    #[test]
    fn interpolation_mode_agrees_on_smooth_fixture() {
        let v = CircleFn::from_fn(256, |t| 2.0 + t.cos()).unwrap();
        let bound = v.interpolation_bound() / v.max();
        assert!(is_separable_circle_interp(&v, 97, 2.0 * bound).separable);
        let w = CircleFn::from_fn(256, |t| 2.0 + (2.0 * t).cos()).unwrap();
        assert!(!is_separable_circle_interp(&w, 97, 2.0 * bound).separable);
    }

    #[test]
    fn corollary_direction_on_cosine() {
        let v = CircleFn::from_fn(32, |t| 2.0 + t.cos()).unwrap();
        for k in 0..64 {
            assert!(corollary_direction_check(&v, 0.0, k, 1e-9));
        }
    }
}
