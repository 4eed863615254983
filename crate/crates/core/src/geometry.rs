//! Shared geometric substrate: half-spaces and their reflections, dual points
//! with respect to a sphere, spherical caps, axis lines, and affine/convex hull
//! membership with Carathéodory-sized certificates.
//!
//! Everything here is dimension-generic and works on `&[f64]` slices; the
//! rest of the crate uses `N = 2` (circles) and `N = 3` (spheres, balls).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted deviation of a supplied normal from unit length.
pub const UNIT_NORMAL_TOL: f64 = 1e-9;

/// Feasibility tolerance for convex-hull membership.
pub const HULL_TOL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Returns `a / |a|`, or `None` for a (numerically) zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 1e-300 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

/// Angle between two nonzero vectors in radians, in `[0, π]`.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b) / (norm(a) * norm(b));
    // atan2 form is accurate near 0 and π where acos loses digits.
    let cross = (norm(a) * norm(b)).powi(2) - dot(a, b).powi(2);
    let s = cross.max(0.0).sqrt() / (norm(a) * norm(b));
    s.atan2(c)
}

/// Angle between two lines through the origin with the given directions, in `[0, π/2]`.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let t = angle_between(a, b);
    t.min(std::f64::consts::PI - t)
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Two unit vectors completing `axis` (unit, R³) to a right-handed orthonormal frame.
pub fn orthonormal_frame(axis: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if axis[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else if axis[1].abs() < 0.6 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = cross3(axis, &helper);
    let n1 = norm(&e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    let e2 = cross3(axis, &e1);
    (e1, e2)
}

pub fn to3(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

/// Uniformly distributed unit vector in R^dim.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return scale(&v, 1.0 / n);
        }
    }
}

/// Uniformly distributed point in the ball of radius `r` in R^dim.
pub fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, r: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if dot(&v, &v) < 1.0 {
            return scale(&v, r);
        }
    }
}

/// A point of R^N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const D: usize> From<[f64; D]> for Point {
    fn from(v: [f64; D]) -> Self {
        Point(v.to_vec())
    }
}

/// Open half-space `{x : n·x > c}` with unit normal `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    /// Rejects normals whose length is off by more than [`UNIT_NORMAL_TOL`];
    /// smaller deviations are renormalized away.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_NORMAL_TOL || !offset.is_finite() {
            return Err(Error::NotUnitNormal { norm: n });
        }
        Ok(HalfSpace {
            normal: scale(&normal, 1.0 / n),
            offset,
        })
    }

    /// Normalizes an arbitrary nonzero direction first.
    pub fn from_direction(direction: &[f64], offset: f64) -> Result<Self> {
        let n = normalized(direction).ok_or(Error::NotUnitNormal { norm: 0.0 })?;
        HalfSpace::new(n, offset)
    }

    pub fn through_origin(normal: Vec<f64>) -> Result<Self> {
        HalfSpace::new(normal, 0.0)
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn through_origin_p(&self) -> bool {
        self.offset == 0.0
    }

    /// `n·x − c`; positive inside the half-space.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// The complementary open half-space `{x : n·x < c}`.
    pub fn flipped(&self) -> HalfSpace {
        HalfSpace {
            normal: scale(&self.normal, -1.0),
            offset: -self.offset,
        }
    }

    /// Mirror image of `x` across the boundary hyperplane.
    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.reflect_in_place(&mut out);
        out
    }

    pub fn reflect_in_place(&self, x: &mut [f64]) {
        let s = 2.0 * self.signed_distance(x);
        for (xi, ni) in x.iter_mut().zip(&self.normal) {
            *xi -= s * ni;
        }
    }

    pub fn reflect3(&self, x: &[f64; 3]) -> [f64; 3] {
        let s = 2.0 * self.signed_distance(x);
        [
            x[0] - s * self.normal[0],
            x[1] - s * self.normal[1],
            x[2] - s * self.normal[2],
        ]
    }
}

/// Reflection of `x` across `∂h`, checking dimensions.
pub fn reflect(h: &HalfSpace, x: &Point) -> Result<Point> {
    if h.dim() != x.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            got: x.dim(),
        });
    }
    Ok(Point(h.reflect(&x.0)))
}

/// Inversion `R²x/|x|²` across the sphere of radius `radius`.
pub fn dual_point(x: &Point, radius: f64) -> Result<Point> {
    let n2 = dot(&x.0, &x.0);
    if n2 == 0.0 {
        return Err(Error::DualOfCenter);
    }
    Ok(Point(scale(&x.0, radius * radius / n2)))
}

/// Spherical cap `{x ∈ S^{N−1} : x·axis ≥ height}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub axis: Vec<f64>,
    pub height: f64,
}

impl Cap {
    pub fn new(axis: Vec<f64>, height: f64) -> Result<Self> {
        let n = norm(&axis);
        if (n - 1.0).abs() > UNIT_NORMAL_TOL {
            return Err(Error::NotUnitNormal { norm: n });
        }
        if !(-1.0..=1.0).contains(&height) {
            return Err(Error::Precondition(format!(
                "cap height {height} outside [-1, 1]"
            )));
        }
        Ok(Cap { axis, height })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.axis, x) >= self.height
    }

    /// Angular radius of the cap, `acos(height)`.
    pub fn half_angle(&self) -> f64 {
        self.height.clamp(-1.0, 1.0).acos()
    }

    pub fn is_point(&self) -> bool {
        self.height >= 1.0
    }

    pub fn is_whole_sphere(&self) -> bool {
        self.height <= -1.0
    }
}

/// A line `{base + t·direction}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisLine {
    pub base: Point,
    pub direction: Vec<f64>,
}

impl AxisLine {
    pub fn new(base: Point, direction: &[f64]) -> Result<Self> {
        let d = normalized(direction).ok_or(Error::NotUnitNormal { norm: 0.0 })?;
        if d.len() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                got: d.len(),
            });
        }
        Ok(AxisLine { base, direction: d })
    }

    /// Euclidean distance from `x` to the line.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        let r = sub(x, &self.base.0);
        let t = dot(&r, &self.direction);
        let perp: Vec<f64> = r
            .iter()
            .zip(&self.direction)
            .map(|(ri, di)| ri - t * di)
            .collect();
        norm(&perp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullKind {
    Affine,
    Convex,
}

/// Result of a hull-membership query: the verdict plus a combination of at
/// most `N + 1` input points reproducing `q` (when a member).
#[derive(Clone, Debug, PartialEq)]
pub struct HullCertificate {
    pub member: bool,
    pub indices: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

pub fn hull_membership(points: &[Point], q: &Point, kind: HullKind) -> Result<bool> {
    Ok(hull_certificate(points, q, kind)?.member)
}

pub fn hull_certificate(points: &[Point], q: &Point, kind: HullKind) -> Result<HullCertificate> {
    if points.is_empty() {
        return Err(Error::Precondition("empty point set".into()));
    }
    let dim = q.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: p.dim(),
        });
    }
    let scale_ref = points
        .iter()
        .chain(std::iter::once(q))
        .map(Point::norm)
        .fold(1.0_f64, f64::max);

    // Columns (p_i; 1) so that Σλ_i = 1 is part of the system.
    let m = points.len();
    let a = DMatrix::from_fn(dim + 1, m, |r, c| {
        if r < dim {
            points[c].0[r] / scale_ref
        } else {
            1.0
        }
    });
    let b = DVector::from_fn(dim + 1, |r, _| if r < dim { q.0[r] / scale_ref } else { 1.0 });

    let lambda = match kind {
        HullKind::Affine => {
            let svd = a.clone().svd(true, true);
            svd.solve(&b, 1e-12).map_err(|e| Error::Precondition(e.to_string()))?
        }
        HullKind::Convex => nnls(&a, &b),
    };
    let residual = (&a * &lambda - &b).norm();
    let tol = match kind {
        HullKind::Affine => 1e-9,
        HullKind::Convex => HULL_TOL,
    };
    if residual > tol {
        return Ok(HullCertificate {
            member: false,
            indices: vec![],
            coefficients: vec![],
            residual,
        });
    }
    let mut support: Vec<usize> = (0..m).filter(|&i| lambda[i].abs() > 1e-15).collect();
    let mut coeffs: Vec<f64> = support.iter().map(|&i| lambda[i]).collect();
    caratheodory_reduce(points, &mut support, &mut coeffs, kind);
    Ok(HullCertificate {
        member: true,
        indices: support,
        coefficients: coeffs,
        residual,
    })
}

/// Lawson–Hanson nonnegative least squares: `min |Ax − b|` subject to `x ≥ 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-13;
    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _inner in 0..(3 * n + 10) {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let z_p = sub
                .clone()
                .svd(true, true)
                .solve(b, 1e-14)
                .unwrap_or_else(|_| DVector::zeros(idx.len()));
            if z_p.iter().all(|&v| v > 0.0) {
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = z_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let step = x[col] / (x[col] - z_p[k]);
                    alpha = alpha.min(step);
                }
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (z_p[k] - x[col]);
                if x[col].abs() < 1e-15 {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
        }
    }
    x
}

/// Shrinks a representing combination to at most `N + 1` points by repeatedly
/// eliminating an affine dependence among the support.
fn caratheodory_reduce(points: &[Point], idx: &mut Vec<usize>, coef: &mut Vec<f64>, kind: HullKind) {
    let dim = points[0].dim();
    while idx.len() > dim + 1 {
        let k = idx.len();
        let m = DMatrix::from_fn(dim + 1, k, |r, c| {
            if r < dim {
                points[idx[c]].0[r]
            } else {
                1.0
            }
        });
        // Null vector of m: right singular vector of the smallest singular value.
        let mt_m = m.transpose() * &m;
        let eig = mt_m.symmetric_eigen();
        let (min_i, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let mu = eig.eigenvectors.column(min_i).into_owned();
        let t = match kind {
            HullKind::Convex => {
                // Largest step keeping all coefficients nonnegative.
                let mu = if mu.iter().any(|&v| v > 1e-14) { mu } else { -mu };
                let mut best = f64::INFINITY;
                for c in 0..k {
                    if mu[c] > 1e-14 {
                        best = best.min(coef[c] / mu[c]);
                    }
                }
                (best, mu)
            }
            HullKind::Affine => {
                let (c, _) = mu
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .unwrap();
                (coef[c] / mu[c], mu)
            }
        };
        let (step, mu) = t;
        let mut drop = None;
        for c in 0..k {
            coef[c] -= step * mu[c];
            if drop.is_none() && coef[c].abs() < 1e-12 {
                drop = Some(c);
            }
        }
        let c = drop.unwrap_or_else(|| {
            (0..k)
                .min_by(|&a, &b| coef[a].abs().total_cmp(&coef[b].abs()))
                .unwrap()
        });
        idx.remove(c);
        coef.remove(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn reflect_examples() {
        let h = HalfSpace::new(vec![1.0, 0.0], 0.0).unwrap();
        let r = reflect(&h, &Point::from([3.0, 4.0])).unwrap();
        assert!(close(&r.0, &[-3.0, 4.0], 1e-15));

        let h = HalfSpace::new(vec![0.0, 1.0], 1.0).unwrap();
        assert!(close(&h.reflect(&[0.0, 0.0]), &[0.0, 2.0], 1e-15));

        let h = HalfSpace::new(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], 0.0).unwrap();
        assert!(close(&h.reflect(&[1.0, 0.0]), &[0.0, -1.0], 1e-15));
    }

    #[test]
    fn rejects_non_unit_normal() {
        assert!(matches!(
            HalfSpace::new(vec![1.0, 1.0], 0.0),
            Err(Error::NotUnitNormal { .. })
        ));
        assert!(HalfSpace::new(vec![1.0 + 1e-10, 0.0], 0.0).is_ok());
        let h = HalfSpace::new(vec![0.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            reflect(&h, &Point::from([1.0, 2.0, 3.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn dual_point_examples() {
        let d = dual_point(&Point::from([0.5, 0.0, 0.0]), 1.0).unwrap();
        assert!(close(&d.0, &[2.0, 0.0, 0.0], 1e-15));
        let d = dual_point(&Point::from([2.0, 0.0, 0.0]), 2.0).unwrap();
        assert!(close(&d.0, &[2.0, 0.0, 0.0], 1e-15));
        let d = dual_point(&Point::from([0.0, 0.25, 0.0]), 1.0).unwrap();
        assert!(close(&d.0, &[0.0, 4.0, 0.0], 1e-15));
        assert!(matches!(
            dual_point(&Point::from([0.0, 0.0, 0.0]), 1.0),
            Err(Error::DualOfCenter)
        ));
    }

    #[test]
    fn hull_examples() {
        let tri: Vec<Point> = vec![[0.0, 0.0].into(), [1.0, 0.0].into(), [0.0, 1.0].into()];
        assert!(hull_membership(&tri, &[0.2, 0.2].into(), HullKind::Convex).unwrap());
        assert!(!hull_membership(&tri, &[0.8, 0.8].into(), HullKind::Convex).unwrap());

        let seg: Vec<Point> = vec![[0.0, 0.0].into(), [1.0, 0.0].into()];
        assert!(hull_membership(&seg, &[5.0, 0.0].into(), HullKind::Affine).unwrap());
        assert!(!hull_membership(&seg, &[5.0, 0.0].into(), HullKind::Convex).unwrap());
        assert!(!hull_membership(&seg, &[0.5, 0.1].into(), HullKind::Affine).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point> = (0..6)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..2.0 * PI);
                Point::from([t.cos(), t.sin()])
            })
            .collect();
        let mean = Point::from([
            pts.iter().map(|p| p.0[0]).sum::<f64>() / 6.0,
            pts.iter().map(|p| p.0[1]).sum::<f64>() / 6.0,
        ]);
        let cert = hull_certificate(&pts, &mean, HullKind::Convex).unwrap();
        assert!(cert.member);
        assert!(cert.indices.len() <= 3);
        assert!(cert.coefficients.iter().all(|&c| c >= -1e-12));
        let rebuilt: Vec<f64> = (0..2)
            .map(|d| {
                cert.indices
                    .iter()
                    .zip(&cert.coefficients)
                    .map(|(&i, &c)| c * pts[i].0[d])
                    .sum()
            })
            .collect();
        assert!(close(&rebuilt, &mean.0, 1e-9));
    }

    #[test]
    fn hull_dimension_error() {
        let pts: Vec<Point> = vec![[0.0, 0.0].into(), [1.0, 0.0, 0.0].into()];
        assert!(matches!(
            hull_membership(&pts, &[0.0, 0.0].into(), HullKind::Convex),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn cap_degenerate_cases() {
        let c = Cap::new(vec![0.0, 0.0, 1.0], 1.0).unwrap();
        assert!(c.is_point());
        assert!(c.contains(&[0.0, 0.0, 1.0]));
        let c = Cap::new(vec![0.0, 0.0, 1.0], -1.0).unwrap();
        assert!(c.is_whole_sphere());
        assert!(Cap::new(vec![0.0, 0.0, 1.0], 1.5).is_err());
    }

    #[test]
    fn axis_line_distance() {
        let l = AxisLine::new(Point::from([1.0, 2.0, 0.0]), &[0.0, 0.0, 2.0]).unwrap();
        assert!((l.distance_to(&[1.0, 5.0, 7.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = to3(&random_unit(&mut rng, 3));
            let (e1, e2) = orthonormal_frame(&a);
            assert!(dot(&a, &e1).abs() < 1e-14);
            assert!(dot(&a, &e2).abs() < 1e-14);
            assert!(dot(&e1, &e2).abs() < 1e-14);
            assert!((norm(&e1) - 1.0).abs() < 1e-14);
            assert!((norm(&e2) - 1.0).abs() < 1e-14);
        }
    }
}
