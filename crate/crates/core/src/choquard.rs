//! Discrete Choquard problem on a ball: `−Δu + u = (∫ G(x,y) u(y)^p dy) u^{p−1}`
//! with zero Dirichlet data, discretized on the Cartesian nodes `h·k` inside
//! `B_R` (7-point Laplacian, zero extension outside). Ground states are found
//! by minimizing `Q(u) = ‖u‖² / D(u)^{1/p}` over nonnegative mesh functions.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{ball_axis, is_separable_ball, BallFn};
use crate::error::{Error, Result};
use crate::geometry::HalfSpace;
use crate::green::{GreenKernel, KernelMatrix};
use crate::polarization::{polarize, PairedGrid};
use crate::report::{AxisReport, SeparabilityReport};
use crate::sphere::LatLonGrid;

const DIM: usize = 3;

/// Interior lattice nodes `h·(i, j, k)` with `|x| < R`, `h = 2R/n`.
#[derive(Clone, Debug)]
pub struct Mesh {
    radius: f64,
    n: usize,
    h: f64,
    coords: Vec<[i32; 3]>,
    nodes: Vec<[f64; 3]>,
    /// Dense lookup over the lattice cube; `u32::MAX` marks exterior points.
    lookup: Vec<u32>,
    half: i32,
}

impl Mesh {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::Grid(format!("mesh size n must be even and >= 2, got {n}")));
        }
        let half = (n / 2) as i32;
        let h = 2.0 * radius / n as f64;
        let side = (2 * half + 1) as usize;
        let mut lookup = vec![u32::MAX; side * side * side];
        let mut coords = vec![];
        let mut nodes = vec![];
        for i in -half..=half {
            for j in -half..=half {
                for k in -half..=half {
                    let r2 = ((i * i + j * j + k * k) as f64) * h * h;
                    if r2 < radius * radius * (1.0 - 1e-12) {
                        let id = coords.len() as u32;
                        let li = Self::linear(half, [i, j, k]).unwrap();
                        lookup[li] = id;
                        coords.push([i, j, k]);
                        nodes.push([h * i as f64, h * j as f64, h * k as f64]);
                    }
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::Grid("mesh has no interior nodes".into()));
        }
        Ok(Mesh {
            radius,
            n,
            h,
            coords,
            nodes,
            lookup,
            half,
        })
    }

    fn linear(half: i32, c: [i32; 3]) -> Option<usize> {
        if c.iter().any(|v| v.abs() > half) {
            return None;
        }
        let side = 2 * half + 1;
        Some((((c[0] + half) * side + (c[1] + half)) * side + (c[2] + half)) as usize)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn coords(&self) -> &[[i32; 3]] {
        &self.coords
    }

    /// Node index at lattice coordinates, if interior.
    pub fn node_at(&self, c: [i32; 3]) -> Option<usize> {
        Self::linear(self.half, c)
            .map(|li| self.lookup[li])
            .filter(|&id| id != u32::MAX)
            .map(|id| id as usize)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(DIM as i32)
    }

    pub fn sample(&self, f: impl Fn(&[f64; 3]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    fn neighbours(&self, i: usize) -> [Option<usize>; 6] {
        let c = self.coords[i];
        let mut out = [None; 6];
        for a in 0..3 {
            for (s, slot) in [(-1, 2 * a), (1, 2 * a + 1)] {
                let mut d = c;
                d[a] += s;
                out[slot] = self.node_at(d);
            }
        }
        out
    }

    /// `A u = −Δ_h u + u` with zero values outside the ball.
    pub fn apply_operator(&self, u: &[f64]) -> Vec<f64> {
        let inv_h2 = 1.0 / (self.h * self.h);
        (0..self.len())
            .map(|i| {
                let s: f64 = self.neighbours(i).iter().flatten().map(|&j| u[j]).sum();
                (6.0 * u[i] - s) * inv_h2 + u[i]
            })
            .collect()
    }

    /// Solves `A z = b` by conjugate gradients to relative residual `tol`.
    pub fn solve_operator(&self, b: &[f64], guess: Option<&[f64]>, tol: f64) -> Vec<f64> {
        let n = self.len();
        let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
        let ax = self.apply_operator(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let bb: f64 = b.iter().map(|v| v * v).sum();
        let stop = tol * tol * bb;
        for _ in 0..10 * n {
            if rr <= stop {
                break;
            }
            let ap = self.apply_operator(&p);
            let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
            rr = rr_new;
        }
        x
    }
}

/// `‖u‖² = h³[Σ_edges (Δu/h)² + Σ u²]`, summing every lattice edge that
/// touches an interior node (exterior values are 0).
pub fn dirichlet_norm_sq(mesh: &Mesh, u: &[f64]) -> f64 {
    let inv_h2 = 1.0 / (mesh.h * mesh.h);
    let mut grad = 0.0;
    let mut mass = 0.0;
    for i in 0..mesh.len() {
        mass += u[i] * u[i];
        for nb in mesh.neighbours(i) {
            match nb {
                // Interior edges are seen from both ends.
                Some(j) => grad += 0.5 * (u[j] - u[i]) * (u[j] - u[i]),
                None => grad += u[i] * u[i],
            }
        }
    }
    mesh.cell_volume() * (grad * inv_h2 + mass)
}

/// Lower and upper ends of the admissible exponent range in dimension `n`.
pub fn admissible_p(n: usize) -> (f64, f64) {
    let n = n as f64;
    ((n + 2.0) / n, (n + 2.0) / (n - 2.0))
}

/// Mesh, exponent, and the dense regularized kernel.
pub struct ChoquardProblem {
    pub p: f64,
    mesh: Mesh,
    green: GreenKernel,
    kernel: KernelMatrix,
}

impl ChoquardProblem {
    pub fn new(radius: f64, p: f64, n: usize) -> Result<Self> {
        let (lo, hi) = admissible_p(DIM);
        if !(p > lo && p < hi) {
            return Err(Error::Precondition(format!(
                "exponent p = {p} outside the admissible interval ({lo:.4}, {hi:.4})"
            )));
        }
        let mesh = Mesh::new(radius, n)?;
        let w = mesh.cell_volume();
        let green = GreenKernel::new(radius, DIM, 1.0)?;
        let green = GreenKernel::new(radius, DIM, green.cell_radius(w))?;
        let nodes: Vec<Vec<f64>> = mesh.nodes.iter().map(|x| x.to_vec()).collect();
        let kernel = green.node_matrix(&nodes, &vec![w; nodes.len()])?;
        Ok(ChoquardProblem {
            p,
            mesh,
            green,
            kernel,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn green(&self) -> &GreenKernel {
        &self.green
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        dirichlet_norm_sq(&self.mesh, u)
    }

    /// `h⁶ Σ_ij G_ij u_i^p u_j^p`.
    pub fn nonlocal_d(&self, u: &[f64]) -> f64 {
        self.kernel.nonlocal(u, self.p)
    }

    /// `(K u^p)_i = h³ Σ_j G_ij u_j^p`.
    fn potential(&self, u: &[f64]) -> Vec<f64> {
        let up: Vec<f64> = u.iter().map(|v| v.abs().powf(self.p)).collect();
        self.kernel.apply_weighted(&up)
    }

    fn d_from_potential(&self, u: &[f64], pot: &[f64]) -> f64 {
        let w = self.mesh.cell_volume();
        u.iter()
            .zip(pot)
            .map(|(v, k)| w * v.abs().powf(self.p) * k)
            .sum()
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.norm_sq(u) - self.nonlocal_d(u) / (2.0 * self.p)
    }

    pub fn quotient(&self, u: &[f64]) -> f64 {
        self.norm_sq(u) / self.nonlocal_d(u).powf(1.0 / self.p)
    }

    /// `t_u = (‖u‖² / D(u))^{1/(2p−2)}`.
    pub fn nehari_scale(&self, u: &[f64]) -> Result<f64> {
        nehari_scale(self.norm_sq(u), self.nonlocal_d(u), self.p)
    }

    /// Closed-form gradient of `Q` with respect to the node values.
    pub fn quotient_gradient(&self, u: &[f64]) -> Vec<f64> {
        let w = self.mesh.cell_volume();
        let nrm = self.norm_sq(u);
        let pot = self.potential(u);
        let d = self.d_from_potential(u, &pot);
        let au = self.mesh.apply_operator(u);
        let inv = d.powf(-1.0 / self.p);
        let p = self.p;
        (0..u.len())
            .map(|i| {
                let grad_n = 2.0 * w * au[i];
                let grad_d = 2.0 * p * w * u[i].abs().powf(p - 1.0) * u[i].signum() * pot[i];
                grad_n * inv - nrm / p * d.powf(-1.0 / p - 1.0) * grad_d
            })
            .collect()
    }

    /// Relative Euler–Lagrange residual `‖A u − u^{p−1}·K u^p‖ / ‖A u‖`.
    pub fn el_residual(&self, u: &[f64]) -> f64 {
        let au = self.mesh.apply_operator(u);
        let pot = self.potential(u);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..u.len() {
            let r = au[i] - u[i].abs().powf(self.p - 1.0) * pot[i];
            num += r * r;
            den += au[i] * au[i];
        }
        (num / den).sqrt()
    }
}

/// `t = (‖u‖² / D)^{1/(2p−2)}` from precomputed norms.
pub fn nehari_scale(norm_sq: f64, d: f64, p: f64) -> Result<f64> {
    if norm_sq <= 0.0 {
        return Err(Error::ZeroFunction);
    }
    if !(d > 0.0) {
        return Err(Error::DegenerateD);
    }
    Ok((norm_sq / d).powf(1.0 / (2.0 * p - 2.0)))
}

/// `(½ − 1/(2p))(‖u‖² / D^{1/p})^{p/(p−1)}`: the energy at the Nehari point of the ray through `u`.
pub fn nehari_energy(norm_sq: f64, d: f64, p: f64) -> f64 {
    (0.5 - 0.5 / p) * (norm_sq / d.powf(1.0 / p)).powf(p / (p - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    /// `(1 − |x|²/R²)₊`.
    Bump,
    /// The bump times `1 + amplitude·ξ` with seeded uniform `ξ ∈ [−1, 1]`.
    Perturbed { seed: u64, amplitude: f64 },
    Values { values: Vec<f64> },
}

impl Init {
    pub fn values(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let r2 = mesh.radius * mesh.radius;
        let bump = |x: &[f64; 3]| (1.0 - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / r2).max(0.0);
        match self {
            Init::Bump => Ok(mesh.sample(bump)),
            Init::Perturbed { seed, amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(mesh
                    .nodes
                    .iter()
                    .map(|x| bump(x) * (1.0 + amplitude * rng.gen_range(-1.0..=1.0)))
                    .collect())
            }
            Init::Values { values } => {
                if values.len() != mesh.len() {
                    return Err(Error::Dimension {
                        expected: mesh.len(),
                        got: values.len(),
                    });
                }
                Ok(values.clone())
            }
        }
    }
}

/// The mesh function `x ↦ u(M⁻¹x)` for the quarter turn `M` about `e₃`.
pub fn rotate_quarter_turn(mesh: &Mesh, u: &[f64]) -> Vec<f64> {
    mesh.coords
        .iter()
        .map(|&[i, j, k]| u[mesh.node_at([j, -i, k]).expect("lattice ball is rotation invariant")])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub init: Init,
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            init: Init::Bump,
            step: 1.0,
            max_iters: 5000,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub radius: f64,
    pub p: f64,
    pub n: usize,
    pub h: f64,
    /// Values at the interior nodes in mesh order (x-major, then y, then z).
    pub values: Vec<f64>,
    /// `c = I(u*)`.
    pub energy: f64,
    pub quotient: f64,
    /// `|‖u‖² − D(u)| / ‖u‖²`.
    pub nehari_residual: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub last_change: f64,
    /// `Q` after each accepted step, starting with the initial value.
    pub q_history: Vec<f64>,
}

/// Minimizes `Q` by preconditioned projected gradient descent.
///
/// The search direction is `d = (‖u‖²/D)·A⁻¹(u^{p−1}·K u^p) − u`, which equals
/// `−c·A⁻¹∇Q` for some `c > 0` with `A = −Δ_h + I`, so it is a descent
/// direction in the `H¹` metric. Each trial point is clipped at 0, accepted
/// under an Armijo test with halving, and rescaled onto the Nehari set.
pub fn solve_ground_state(prob: &ChoquardProblem, opts: &SolveOptions) -> Result<GroundState> {
    solve_ground_state_observed(prob, opts, &mut |_, _| {})
}

/// [`solve_ground_state`] with a callback on every Nehari-projected iterate.
pub fn solve_ground_state_observed(
    prob: &ChoquardProblem,
    opts: &SolveOptions,
    observe: &mut dyn FnMut(usize, &[f64]),
) -> Result<GroundState> {
    const ARMIJO: f64 = 1e-4;
    let p = prob.p;
    let w = prob.mesh.cell_volume();
    let mut u: Vec<f64> = opts.init.values(&prob.mesh)?.iter().map(|v| v.max(0.0)).collect();

    let project = |u: &mut Vec<f64>, pot: &mut Vec<f64>| -> Result<(f64, f64)> {
        let nrm = prob.norm_sq(u);
        if nrm.sqrt() < 1e-14 {
            return Err(Error::CollapseToZero { norm: nrm.sqrt() });
        }
        let d = prob.d_from_potential(u, pot);
        let t = nehari_scale(nrm, d, p)?;
        u.iter_mut().for_each(|v| *v *= t);
        let tp = t.powf(p);
        pot.iter_mut().for_each(|v| *v *= tp);
        Ok((nrm * t * t, d * tp * tp))
    };

    let mut pot = prob.potential(&u);
    let (mut nrm, mut d) = project(&mut u, &mut pot)?;
    observe(0, &u);
    let mut q = nrm / d.powf(1.0 / p);
    let mut history = vec![q];
    let mut z_guess: Option<Vec<f64>> = None;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let rhs: Vec<f64> = u.iter().zip(&pot).map(|(v, k)| v.powf(p - 1.0) * k).collect();
        let z = prob.mesh.solve_operator(&rhs, z_guess.as_deref(), 1e-13);
        let scale = nrm / d;
        let dir: Vec<f64> = z.iter().zip(&u).map(|(zi, ui)| scale * zi - ui).collect();
        z_guess = Some(z);
        let ad = prob.mesh.apply_operator(&dir);
        let dad: f64 = dir.iter().zip(&ad).map(|(a, b)| a * b).sum();
        let slope = -2.0 * w * d.powf(-1.0 / p) * dad;
        if !(slope < 0.0) {
            converged = true;
            last_change = 0.0;
            break;
        }

        let mut s = opts.step;
        let accepted = loop {
            let mut v: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| (a + s * b).max(0.0)).collect();
            let vn = prob.norm_sq(&v);
            if vn > 0.0 {
                let mut vpot = prob.potential(&v);
                let vd = prob.d_from_potential(&v, &vpot);
                let vq = vn / vd.powf(1.0 / p);
                if vq <= q + ARMIJO * s * slope {
                    let (n2, d2) = project(&mut v, &mut vpot)?;
                    break Some((v, vpot, n2, d2, vq));
                }
            }
            s *= 0.5;
            if s < 1e-12 {
                break None;
            }
        };
        let Some((v, vpot, n2, d2, vq)) = accepted else {
            // No decrease available at machine precision.
            converged = last_change < opts.tol * 1e2;
            break;
        };
        last_change = (q - vq) / q;
        u = v;
        pot = vpot;
        nrm = n2;
        d = d2;
        q = vq;
        history.push(q);
        observe(it, &u);
        if last_change < opts.tol {
            converged = true;
            break;
        }
    }

    let state = GroundState {
        radius: prob.mesh.radius,
        p,
        n: prob.mesh.n,
        h: prob.mesh.h,
        energy: 0.5 * nrm - d / (2.0 * p),
        quotient: q,
        nehari_residual: (nrm - d).abs() / nrm,
        el_residual: prob.el_residual(&u),
        values: u,
        iterations,
        converged,
        last_change,
        q_history: history,
    };
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            last_change,
            best: Box::new(state),
        });
    }
    Ok(state)
}

/// Catmull–Rom style cubic Lagrange weights for offset `t ∈ [0, 1)` on nodes −1, 0, 1, 2.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Tricubic Lagrange interpolation of mesh values (zero outside the ball).
#[derive(Clone, Debug)]
pub struct TricubicField {
    mesh: Arc<Mesh>,
    values: Arc<Vec<f64>>,
}

impl TricubicField {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Dimension {
                expected: mesh.len(),
                got: values.len(),
            });
        }
        Ok(TricubicField {
            mesh: Arc::new(mesh),
            values: Arc::new(values),
        })
    }

    fn at(&self, c: [i32; 3]) -> f64 {
        self.mesh.node_at(c).map_or(0.0, |i| self.values[i])
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        let h = self.mesh.h;
        let mut base = [0i32; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let s = x[a] / h;
            let f = s.floor();
            base[a] = f as i32;
            w[a] = cubic_weights(s - f);
        }
        let mut acc = 0.0;
        for (di, wi) in w[0].iter().enumerate() {
            for (dj, wj) in w[1].iter().enumerate() {
                let wij = wi * wj;
                for (dk, wk) in w[2].iter().enumerate() {
                    let c = [
                        base[0] + di as i32 - 1,
                        base[1] + dj as i32 - 1,
                        base[2] + dk as i32 - 1,
                    ];
                    acc += wij * wk * self.at(c);
                }
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Relative tolerance for separability and the polarization fixed point.
    pub eps: f64,
    pub seed: u64,
    /// Radius of the analysed sub-ball as a fraction of `R`.
    pub ball_fraction: f64,
    pub shells: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    pub n_halfspaces: usize,
    /// Number of lattice-preserving half-spaces for the fixed-point test.
    pub polarization_halfspaces: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            eps: 1e-3,
            seed: 0,
            ball_fraction: 0.4,
            shells: 8,
            n_lat: 33,
            n_lon: 64,
            n_halfspaces: 256,
            polarization_halfspaces: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub halfspace: HalfSpace,
    /// `‖u^H − u‖ / ‖u‖`.
    pub distance_to_u: f64,
    /// `‖u^H − u∘σ_H‖ / ‖u‖`.
    pub distance_to_reflection: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub eps: f64,
    pub ball_radius: f64,
    pub separability: SeparabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<AxisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis_error: Option<String>,
    pub polarization: Vec<FixedPointCheck>,
    pub passed: bool,
}

/// The 18 half-spaces through the origin whose reflections map the cubic
/// lattice onto itself: normals `±eᵢ` and `(±eᵢ ± eⱼ)/√2`.
pub fn lattice_halfspaces() -> Vec<HalfSpace> {
    let mut out = vec![];
    for a in 0..3 {
        for s in [1.0, -1.0] {
            let mut n = vec![0.0; 3];
            n[a] = s;
            out.push(HalfSpace::through_origin(n).expect("unit"));
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..3 {
        for b in a + 1..3 {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut n = vec![0.0; 3];
                n[a] = sa * r;
                n[b] = sb * r;
                out.push(HalfSpace::through_origin(n).expect("unit"));
            }
        }
    }
    out
}

fn rel_l2(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() / scale
}

/// Polarization fixed-point test on the mesh itself: for each selected
/// lattice half-space, `u^H` must be within `eps‖u‖` of `u` or of `u∘σ_H`.
pub fn polarization_fixed_points(mesh: &Mesh, u: &[f64], count: usize, eps: f64, seed: u64) -> Result<Vec<FixedPointCheck>> {
    let mut hs = lattice_halfspaces();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hs.shuffle(&mut rng);
    hs.truncate(count);
    let nodes: Vec<Vec<f64>> = mesh.nodes.iter().map(|x| x.to_vec()).collect();
    let weights = vec![mesh.cell_volume(); nodes.len()];
    let scale = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    hs.into_iter()
        .map(|h| {
            let grid = PairedGrid::from_nodes(h.clone(), mesh.radius, nodes.clone(), weights.clone(), 1e-9 * mesh.h)?;
            let uh = polarize(&grid, u, &h)?;
            let refl = grid.reflected(u);
            let d0 = rel_l2(&uh, u, scale);
            let d1 = rel_l2(&uh, &refl, scale);
            Ok(FixedPointCheck {
                halfspace: h,
                distance_to_u: d0,
                distance_to_reflection: d1,
                passed: d0.min(d1) <= eps,
            })
        })
        .collect()
}

/// Symmetry certification of a computed ground state: separability and axis
/// analysis of its tricubic interpolant on a centered sub-ball, plus the
/// polarization fixed-point test on the mesh.
pub fn certify_theorem41(state: &GroundState, opts: &CertifyOptions) -> Result<Certification> {
    let mesh = Mesh::new(state.radius, state.n)?;
    let field = TricubicField::new(mesh.clone(), state.values.clone())?;
    let ball_radius = opts.ball_fraction * state.radius;
    let grid = LatLonGrid::new(opts.n_lat, opts.n_lon)?;
    let f = field.clone();
    let ball = BallFn::from_fn(ball_radius, opts.shells, grid, move |x| f.eval(x))?;
    let separability = is_separable_ball(&ball, opts.n_halfspaces, opts.eps, opts.seed);
    let (axis, axis_error) = if separability.separable {
        match ball_axis(&ball, opts.eps) {
            Ok(rep) => (Some(rep), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("not separable".into()))
    };
    let polarization =
        polarization_fixed_points(&mesh, &state.values, opts.polarization_halfspaces, opts.eps, opts.seed)?;
    let passed = separability.separable && axis.is_some() && polarization.iter().all(|c| c.passed);
    Ok(Certification {
        eps: opts.eps,
        ball_radius,
        separability,
        axis,
        axis_error,
        polarization,
        passed,
    })
}
