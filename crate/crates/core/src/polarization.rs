//! Polarization of sampled functions with respect to an origin-through
//! half-space, on node sets that are closed under the reflection.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, random_in_ball, HalfSpace};
use crate::green::{GreenKernel, KernelMatrix};

/// Distance from `∂H` below which a node counts as a fixed point.
const PLANE_TOL: f64 = 1e-12;

/// A node set in `B_R` with an exact index involution `i ↦ mirror[i]`
/// realizing `σ_H`. Paired nodes carry equal weights; nodes on `∂H` are
/// their own mirrors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedGrid {
    halfspace: HalfSpace,
    radius: f64,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    mirror: Vec<usize>,
    /// Indices of nodes strictly inside H, in construction order.
    h_side: Vec<usize>,
    fixed: Vec<usize>,
}

fn require_origin(h: &HalfSpace) -> Result<()> {
    if h.offset().abs() > PLANE_TOL {
        return Err(Error::Precondition(
            "polarization in a ball needs a half-space through the origin".into(),
        ));
    }
    Ok(())
}

impl PairedGrid {
    /// Builds the grid from H-side nodes (each gets its mirror image appended
    /// right after it) and optional nodes on `∂H`.
    pub fn mirrored(
        h: HalfSpace,
        radius: f64,
        h_nodes: &[Vec<f64>],
        h_weights: &[f64],
        plane_nodes: &[Vec<f64>],
        plane_weights: &[f64],
    ) -> Result<Self> {
        require_origin(&h)?;
        if h_nodes.len() != h_weights.len() || plane_nodes.len() != plane_weights.len() {
            return Err(Error::Dimension {
                expected: h_nodes.len() + plane_nodes.len(),
                got: h_weights.len() + plane_weights.len(),
            });
        }
        let mut g = PairedGrid {
            halfspace: h.clone(),
            radius,
            nodes: vec![],
            weights: vec![],
            mirror: vec![],
            h_side: vec![],
            fixed: vec![],
        };
        for (x, &w) in h_nodes.iter().zip(h_weights) {
            g.check_inside(x)?;
            if h.signed_distance(x) <= PLANE_TOL {
                return Err(Error::PointsNotInH);
            }
            let i = g.nodes.len();
            g.nodes.push(x.clone());
            g.nodes.push(h.reflect(x));
            g.weights.extend([w, w]);
            g.mirror.extend([i + 1, i]);
            g.h_side.push(i);
        }
        for (z, &w) in plane_nodes.iter().zip(plane_weights) {
            g.check_inside(z)?;
            if h.signed_distance(z).abs() > PLANE_TOL {
                return Err(Error::UnpairedGrid(format!(
                    "fixed node {z:?} is not on the boundary plane"
                )));
            }
            let i = g.nodes.len();
            g.nodes.push(z.clone());
            g.weights.push(w);
            g.mirror.push(i);
            g.fixed.push(i);
        }
        Ok(g)
    }

    /// `n_pairs` uniform random pairs in `B_R` plus `n_plane` random nodes on
    /// `∂H ∩ B_R`, all with weight `|B_R| / (2·n_pairs + n_plane)`.
    pub fn random_in_ball(h: HalfSpace, radius: f64, n_pairs: usize, n_plane: usize, seed: u64) -> Result<Self> {
        let dim = h.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(n_pairs);
        while pts.len() < n_pairs {
            let mut x = random_in_ball(&mut rng, dim, radius * (1.0 - 1e-9));
            let s = h.signed_distance(&x);
            if s.abs() <= PLANE_TOL {
                continue;
            }
            if s < 0.0 {
                h.reflect_in_place(&mut x);
            }
            pts.push(x);
        }
        let mut plane = Vec::with_capacity(n_plane);
        for _ in 0..n_plane {
            let mut z = random_in_ball(&mut rng, dim, radius * (1.0 - 1e-9));
            let s = h.signed_distance(&z);
            for (zi, ni) in z.iter_mut().zip(h.normal()) {
                *zi -= s * ni;
            }
            plane.push(z);
        }
        let vol = crate::green::unit_ball_volume(dim) * radius.powi(dim as i32);
        let w = vol / (2 * n_pairs + n_plane).max(1) as f64;
        PairedGrid::mirrored(h, radius, &pts, &vec![w; n_pairs], &plane, &vec![w; n_plane])
    }

    /// Pairs an existing node cloud by locating each reflected node within
    /// `tol`. Fails with `UnpairedGrid` when some reflection has no partner
    /// or partners carry different weights.
    pub fn from_nodes(h: HalfSpace, radius: f64, nodes: Vec<Vec<f64>>, weights: Vec<f64>, tol: f64) -> Result<Self> {
        require_origin(&h)?;
        if nodes.len() != weights.len() {
            return Err(Error::Dimension {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v / tol).round() as i64).collect() };
        let mut index: HashMap<Vec<i64>, usize> = HashMap::with_capacity(nodes.len());
        for (i, x) in nodes.iter().enumerate() {
            index.insert(key(x), i);
        }
        let dim = h.dim();
        let mut mirror = vec![usize::MAX; nodes.len()];
        let mut h_side = vec![];
        let mut fixed = vec![];
        for (i, x) in nodes.iter().enumerate() {
            if norm(x) > radius * (1.0 + 1e-12) {
                return Err(Error::OutsideBall {
                    radius,
                    norm: norm(x),
                });
            }
            let s = h.signed_distance(x);
            if s.abs() <= tol {
                mirror[i] = i;
                fixed.push(i);
                continue;
            }
            let y = h.reflect(x);
            let base = key(&y);
            // Search the 3^dim neighbouring cells of the rounded key.
            let mut found = None;
            for code in 0..3usize.pow(dim as u32) {
                let mut k = base.clone();
                let mut c = code;
                for kk in k.iter_mut() {
                    *kk += (c % 3) as i64 - 1;
                    c /= 3;
                }
                if let Some(&j) = index.get(&k) {
                    if crate::geometry::dist(&nodes[j], &y) <= tol {
                        found = Some(j);
                        break;
                    }
                }
            }
            let j = found.ok_or_else(|| Error::UnpairedGrid(format!("no mirror node for {x:?}")))?;
            if (weights[i] - weights[j]).abs() > 1e-12 * weights[i].abs().max(weights[j].abs()) {
                return Err(Error::UnpairedGrid(format!(
                    "paired nodes {i} and {j} have different weights"
                )));
            }
            mirror[i] = j;
            if s > 0.0 {
                h_side.push(i);
            }
        }
        for (i, &j) in mirror.iter().enumerate() {
            if mirror[j] != i {
                return Err(Error::UnpairedGrid(format!("pairing is not an involution at {i}")));
            }
        }
        Ok(PairedGrid {
            halfspace: h,
            radius,
            nodes,
            weights,
            mirror,
            h_side,
            fixed,
        })
    }

    fn check_inside(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.halfspace.dim() {
            return Err(Error::Dimension {
                expected: self.halfspace.dim(),
                got: x.len(),
            });
        }
        if norm(x) > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideBall {
                radius: self.radius,
                norm: norm(x),
            });
        }
        Ok(())
    }

    pub fn halfspace(&self) -> &HalfSpace {
        &self.halfspace
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mirror(&self, i: usize) -> usize {
        self.mirror[i]
    }

    pub fn h_side(&self) -> &[usize] {
        &self.h_side
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    /// Values of `x ↦ f(x)` at the nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|x| f(x)).collect()
    }

    /// `u∘σ_H` on this grid.
    pub fn reflected(&self, u: &[f64]) -> Vec<f64> {
        self.mirror.iter().map(|&j| u[j]).collect()
    }

    pub fn kernel_matrix(&self, k: &GreenKernel) -> Result<KernelMatrix> {
        k.node_matrix(&self.nodes, &self.weights)
    }

    fn check_values(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.nodes.len() {
            return Err(Error::Dimension {
                expected: self.nodes.len(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

fn same_halfspace(a: &HalfSpace, b: &HalfSpace) -> bool {
    a.dim() == b.dim()
        && (a.offset() - b.offset()).abs() <= PLANE_TOL
        && a.normal().iter().zip(b.normal()).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// `u^H`: on each pair the larger value goes to the H-side node and the
/// smaller to its mirror; nodes on `∂H` are unchanged.
pub fn polarize(grid: &PairedGrid, u: &[f64], h: &HalfSpace) -> Result<Vec<f64>> {
    if !same_halfspace(grid.halfspace(), h) {
        return Err(Error::UnpairedGrid(
            "grid was paired for a different half-space".into(),
        ));
    }
    grid.check_values(u)?;
    let mut out = u.to_vec();
    for &i in &grid.h_side {
        let j = grid.mirror[i];
        out[i] = u[i].max(u[j]);
        out[j] = u[i].min(u[j]);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// H-side nodes with `u(x) ≥ u(σx) − eps`.
    pub a: Vec<usize>,
    /// H-side nodes with `u(x) < u(σx) − eps`.
    pub b: Vec<usize>,
}

/// Splits the H-side nodes by comparing `u` with its reflection; ties within
/// `eps` (absolute) go to `a`.
pub fn partition(grid: &PairedGrid, u: &[f64], eps: f64) -> Result<Partition> {
    grid.check_values(u)?;
    let (a, b) = grid
        .h_side
        .iter()
        .partition(|&&i| u[i] >= u[grid.mirror[i]] - eps);
    Ok(Partition { a, b })
}

/// Default tie tolerance for [`partition`].
pub const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// Interaction of `∂H` nodes with the pairs; vanishes by the reflection
    /// identities.
    pub plane_terms: f64,
    pub d_u: f64,
    pub d_polarized: f64,
}

impl Decomposition {
    pub fn sum(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4 + self.plane_terms
    }

    pub fn difference(&self) -> f64 {
        self.d_polarized - self.d_u
    }
}

/// `D(u^H) − D(u)` split into the four double sums over `A × A`, `A × B`,
/// `B × A`, `B × B` (first factor `x`, second `y`) with
/// `a = u(x)^p, b = u(σx)^p, c = u(y)^p, d = u(σy)^p`. The sets use exact
/// comparison so that they agree with [`polarize`]. `D(u)` and `D(u^H)` are
/// evaluated separately from the kernel matrix.
pub fn decompose_d_difference(grid: &PairedGrid, u: &[f64], p: f64, kernel: &KernelMatrix) -> Result<Decomposition> {
    grid.check_values(u)?;
    if kernel.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: kernel.len(),
        });
    }
    let part = partition(grid, u, 0.0)?;
    let up: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    let w = &grid.weights;
    let m = &grid.mirror;

    let block = |xs: &[usize], ys: &[usize], term: &dyn Fn(f64, f64, f64, f64, [f64; 4]) -> f64| -> f64 {
        let mut total = 0.0;
        for &x in xs {
            let sx = m[x];
            let (a, b) = (up[x], up[sx]);
            let mut row = 0.0;
            for &y in ys {
                let sy = m[y];
                let (c, d) = (up[y], up[sy]);
                let g = [kernel.get(x, y), kernel.get(sx, y), kernel.get(x, sy), kernel.get(sx, sy)];
                row += w[y] * term(a, b, c, d, g);
            }
            total += w[x] * row;
        }
        total
    };

    let i1 = block(&part.a, &part.a, &|a, b, c, d, g| {
        g[0] * (a * c - a * c) + g[1] * (b * c - b * c) + g[2] * (a * d - a * d) + g[3] * (b * d - b * d)
    });
    let i2 = block(&part.a, &part.b, &|a, b, c, d, g| {
        g[0] * (a * d - a * c) + g[1] * (b * d - b * c) + g[2] * (a * c - a * d) + g[3] * (b * c - b * d)
    });
    let i3 = block(&part.b, &part.a, &|a, b, c, d, g| {
        g[0] * (b * c - a * c) + g[1] * (a * c - b * c) + g[2] * (b * d - a * d) + g[3] * (a * d - b * d)
    });
    let i4 = block(&part.b, &part.b, &|a, b, c, d, g| {
        g[0] * (b * d - a * c) + g[1] * (a * d - b * c) + g[2] * (b * c - a * d) + g[3] * (a * c - b * d)
    });

    // Plane nodes z keep their value; swapped pairs change by (b − a) at x and
    // (a − b) at σx. Both orderings of (z, x) contribute.
    let mut plane_terms = 0.0;
    for &z in &grid.fixed {
        let mut row = 0.0;
        for &x in &part.b {
            let sx = m[x];
            let (a, b) = (up[x], up[sx]);
            row += w[x] * (kernel.get(z, x) * (b - a) + kernel.get(z, sx) * (a - b));
        }
        plane_terms += 2.0 * w[z] * up[z] * row;
    }

    let uh = polarize(grid, u, grid.halfspace())?;
    Ok(Decomposition {
        i1,
        i2,
        i3,
        i4,
        plane_terms,
        d_u: kernel.nonlocal(u, p),
        d_polarized: kernel.nonlocal(&uh, p),
    })
}

/// `Σ w_i u_i²`.
pub fn weighted_l2(grid: &PairedGrid, u: &[f64]) -> f64 {
    u.iter().zip(&grid.weights).map(|(v, w)| w * v * v).sum()
}
