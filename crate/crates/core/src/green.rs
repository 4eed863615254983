//! Dirichlet Green's function of the ball `B_R ⊂ R^N` (N ≥ 3),
//!
//! `G(x, y) = |x − y|^{2−N} − b^{2−N}`,  `b² = (|x|²|y|² − 2R²(x·y) + R⁴)/R²`,
//!
//! where `b = (|x|/R)|y − x̃|` and `x̃ = R²x/|x|²` is the dual point. Writing
//! `b` through this symmetric expression covers `x = 0` (where `b = R`)
//! without a special case. Also here: the reflection inequalities with
//! their algebraic diagnostics, and the regularized kernel matrix used by
//! quadrature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, random_in_ball, random_unit, HalfSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenKernel {
    pub radius: f64,
    pub dim: usize,
    /// Radius of the ball over which `1/|x−y|^{N−2}` is averaged at `x = y`.
    pub diag_radius: f64,
}

/// Volume of the unit ball in R^N.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_N = π^{N/2} / Γ(N/2 + 1), by the recursion V_N = 2π/N · V_{N−2}.
    let (mut v, mut k) = if n % 2 == 0 { (1.0, 0) } else { (2.0, 1) };
    while k < n {
        k += 2;
        v *= 2.0 * std::f64::consts::PI / k as f64;
    }
    v
}

impl GreenKernel {
    pub fn new(radius: f64, dim: usize, diag_radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
        }
        if dim < 3 {
            return Err(Error::Precondition(format!("dimension must be >= 3, got {dim}")));
        }
        if !(diag_radius > 0.0 && diag_radius.is_finite()) {
            return Err(Error::Precondition(format!(
                "diag_radius must be positive, got {diag_radius}"
            )));
        }
        Ok(GreenKernel {
            radius,
            dim,
            diag_radius,
        })
    }

    /// Radius of the ball whose volume equals the cell weight `w`.
    pub fn cell_radius(&self, w: f64) -> f64 {
        (w / unit_ball_volume(self.dim)).powf(1.0 / self.dim as f64)
    }

    fn pow(&self, r: f64) -> f64 {
        r.powi(self.dim as i32 - 2)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let n = norm(x);
        if n > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideBall {
                radius: self.radius,
                norm: n,
            });
        }
        Ok(())
    }

    /// `b = (|x|/R)|y − x̃|`, symmetric in `x` and `y`.
    pub fn image_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2 = self.radius * self.radius;
        let b2 = (dot(x, x) * dot(y, y) - 2.0 * r2 * dot(x, y) + r2 * r2) / r2;
        b2.max(0.0).sqrt()
    }

    /// `1/b^{N−2}`: the regular (image) part of `G`.
    pub fn image_term(&self, x: &[f64], y: &[f64]) -> f64 {
        1.0 / self.pow(self.image_distance(x, y))
    }

    /// Mean of `1/|z|^{N−2}` over the ball of radius `a`: `N / (2a^{N−2})`.
    pub fn singular_average(&self, a: f64) -> f64 {
        self.dim as f64 / (2.0 * self.pow(a))
    }

    /// Cell average of `G(x, ·)` over a ball of radius `a` about `x`, exact
    /// while that ball stays clear of the dual point (the image term is
    /// harmonic there). Clamped at 0.
    pub fn diagonal_value(&self, x: &[f64], a: f64) -> f64 {
        (self.singular_average(a) - self.image_term(x, x)).max(0.0)
    }

    /// Pointwise value without input checks; coincident points use
    /// [`GreenKernel::diag_radius`].
    pub fn value_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 == 0.0 {
            return self.singular_average(self.diag_radius) - self.image_term(x, x);
        }
        1.0 / self.pow(d2.sqrt()) - self.image_term(x, y)
    }

    /// Regularized node kernel: `min(G(x,y), min(C_x, C_y))` off the diagonal
    /// and `C_x` on it, with `C_x` the cell average for cell radius `a_x`.
    /// Both caps are invariant under origin-fixing reflections of equal-weight
    /// pairs, so the reflection identities and inequalities carry over.
    pub fn node_value(&self, x: &[f64], ax: f64, y: &[f64], ay: f64, same: bool) -> f64 {
        let cx = self.diagonal_value(x, ax);
        if same {
            return cx;
        }
        let cap = cx.min(self.diagonal_value(y, ay));
        self.value_unchecked(x, y).min(cap)
    }

    /// Dense regularized kernel over a node set with quadrature weights.
    pub fn node_matrix(&self, nodes: &[Vec<f64>], weights: &[f64]) -> Result<KernelMatrix> {
        if nodes.len() != weights.len() {
            return Err(Error::Dimension {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        for x in nodes {
            self.check(x)?;
        }
        let n = nodes.len();
        let cells: Vec<f64> = weights.iter().map(|&w| self.cell_radius(w)).collect();
        let caps: Vec<f64> = nodes
            .iter()
            .zip(&cells)
            .map(|(x, &a)| self.diagonal_value(x, a))
            .collect();
        let mut g = vec![0.0; n * n];
        g.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x = &nodes[i];
            for (j, out) in row.iter_mut().enumerate() {
                *out = if i == j {
                    caps[i]
                } else {
                    self.value_unchecked(x, &nodes[j]).min(caps[i].min(caps[j]))
                };
            }
        });
        Ok(KernelMatrix {
            n,
            values: g,
            weights: weights.to_vec(),
        })
    }
}

/// Pointwise Green's function with range checks.
pub fn green_eval(k: &GreenKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    k.check(x)?;
    k.check(y)?;
    Ok(k.value_unchecked(x, y))
}

/// Row-major symmetric kernel matrix with node weights.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(Kv)_i = Σ_j G_ij w_j v_j`.
    pub fn apply_weighted(&self, v: &[f64]) -> Vec<f64> {
        let wv: Vec<f64> = v.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        self.values
            .par_chunks(self.n)
            .map(|row| row.iter().zip(&wv).map(|(g, x)| g * x).sum())
            .collect()
    }

    /// `D(u) = Σ_i Σ_j w_i w_j G_ij u_i^p u_j^p`.
    pub fn nonlocal(&self, u: &[f64], p: f64) -> f64 {
        let up: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
        let k = self.apply_weighted(&up);
        up.iter()
            .zip(&self.weights)
            .zip(&k)
            .map(|((a, w), b)| a * w * b)
            .sum()
    }
}

/// The two reflection identities: returns
/// `(|G(x,y) − G(σx,σy)|, |G(x,σy) − G(σx,y)|)`.
pub fn lemma42_equalities(k: &GreenKernel, x: &[f64], y: &[f64], h: &HalfSpace) -> Result<(f64, f64)> {
    require_origin(h)?;
    let (sx, sy) = (h.reflect(x), h.reflect(y));
    let g = green_eval(k, x, y)?;
    let e1 = (g - green_eval(k, &sx, &sy)?).abs();
    let e2 = (green_eval(k, x, &sy)? - green_eval(k, &sx, y)?).abs();
    Ok((e1, e2))
}

fn require_origin(h: &HalfSpace) -> Result<()> {
    if h.offset().abs() > 1e-12 {
        return Err(Error::Precondition(
            "half-space must pass through the origin".into(),
        ));
    }
    Ok(())
}

/// `G(x, y) − G(σ_H x, y)` for `x, y ∈ H ∩ B_R`.
pub fn lemma42_monotonicity(k: &GreenKernel, x: &[f64], y: &[f64], h: &HalfSpace) -> Result<f64> {
    require_origin(h)?;
    if !(h.contains(x) && h.contains(y)) {
        return Err(Error::PointsNotInH);
    }
    Ok(green_eval(k, x, y)? - green_eval(k, &h.reflect(x), y)?)
}

/// The four distances of the inequality proof:
/// `a = |x−y|`, `ã = |y − σx|`, `b`, `b̃` the image distances of `x`, `σx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionDistances {
    pub a: f64,
    pub a_t: f64,
    pub b: f64,
    pub b_t: f64,
}

pub fn reflection_distances(k: &GreenKernel, x: &[f64], y: &[f64], h: &HalfSpace) -> ReflectionDistances {
    let sx = h.reflect(x);
    ReflectionDistances {
        a: crate::geometry::dist(x, y),
        a_t: crate::geometry::dist(y, &sx),
        b: k.image_distance(x, y),
        b_t: k.image_distance(&sx, y),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1Audit {
    /// `ã²b² − a²b̃²` computed from the distances.
    pub direct: f64,
    /// `(2|x|²/R²)(R²/|x|² − 1)(R² − |y|²)[(y,x) − (y,σx)]`.
    pub closed_form: f64,
    /// `|direct − closed| / max(|closed|, ã²b²)`.
    pub relative_error: f64,
}

pub fn step1_audit(k: &GreenKernel, x: &[f64], y: &[f64], h: &HalfSpace) -> Step1Audit {
    let d = reflection_distances(k, x, y, h);
    let r2 = k.radius * k.radius;
    let sx = h.reflect(x);
    let direct = d.a_t * d.a_t * d.b * d.b - d.a * d.a * d.b_t * d.b_t;
    let x2 = dot(x, x);
    let lead = if x2 > 0.0 {
        (2.0 * x2 / r2) * (r2 / x2 - 1.0)
    } else {
        2.0
    };
    let closed_form = lead * (r2 - dot(y, y)) * (dot(y, x) - dot(y, &sx));
    let scale = closed_form.abs().max(d.a_t * d.a_t * d.b * d.b);
    let relative_error = if scale > 0.0 {
        (direct - closed_form).abs() / scale
    } else {
        0.0
    };
    Step1Audit {
        direct,
        closed_form,
        relative_error,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Audit {
    /// `ã^{N−2}/a^{N−2} − (b̃^{N−2} − ã^{N−2})/(b^{N−2} − a^{N−2})`; `None` when `b = a`.
    pub ratio_margin: Option<f64>,
    /// `b̃^{N−2} − b^{N−2}`.
    pub image_margin: f64,
    /// `G(x,y) − G(σx,y)` minus the final lower bound
    /// `a^{2−N}(b^{N−2} − a^{N−2})(b^{2−N} − b̃^{2−N})`.
    pub chain_margin: f64,
    /// The final lower bound itself.
    pub lower_bound: f64,
}

pub fn step2_audit(k: &GreenKernel, x: &[f64], y: &[f64], h: &HalfSpace) -> Step2Audit {
    let d = reflection_distances(k, x, y, h);
    let p = |r: f64| r.powi(k.dim as i32 - 2);
    let (a, at, b, bt) = (p(d.a), p(d.a_t), p(d.b), p(d.b_t));
    let ratio_margin = if (b - a).abs() > 1e-14 * b.max(1.0) {
        Some(at / a - (bt - at) / (b - a))
    } else {
        None
    };
    let lower_bound = (b - a) * (1.0 / b - 1.0 / bt) / a;
    let diff = (1.0 / a - 1.0 / b) - (1.0 / at - 1.0 / bt);
    Step2Audit {
        ratio_margin,
        image_margin: bt - b,
        chain_margin: diff - lower_bound,
        lower_bound,
    }
}

/// Sampling audit of the kernel identities and inequalities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenAudit {
    pub radius: f64,
    pub dim: usize,
    pub draws: usize,
    pub seed: u64,
    /// Max `|G(x,y) − G(y,x)| / (1 + |G|)`.
    pub max_symmetry_residual: f64,
    /// Max relative residual of `G(x,y) = G(σx,σy)`.
    pub max_reflection_residual: f64,
    /// Max relative residual of `G(x,σy) = G(σx,y)`.
    pub max_cross_residual: f64,
    /// Min `(G(x,y) − G(σx,y)) / (1 + |G(x,y)|)` over `x, y ∈ H`.
    pub min_monotonicity_margin: f64,
    /// Min of `ã²b² − a²b̃²`.
    pub min_step1_value: f64,
    pub max_step1_identity_error: f64,
    pub min_step2_ratio_margin: f64,
    pub min_step2_image_margin: f64,
    pub min_step2_chain_margin: f64,
    /// Min `G(x,y)` over distinct interior pairs.
    pub min_value: f64,
    pub pass: bool,
}

/// Thresholds used for [`GreenAudit::pass`].
pub const AUDIT_TOL: f64 = 1e-12;
pub const STEP1_IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy)]
struct AuditAcc {
    symmetry: f64,
    reflection: f64,
    cross: f64,
    monotonicity: f64,
    step1: f64,
    step1_error: f64,
    ratio: f64,
    image: f64,
    chain: f64,
    min_value: f64,
}

impl AuditAcc {
    fn new() -> Self {
        AuditAcc {
            symmetry: 0.0,
            reflection: 0.0,
            cross: 0.0,
            monotonicity: f64::INFINITY,
            step1: f64::INFINITY,
            step1_error: 0.0,
            ratio: f64::INFINITY,
            image: f64::INFINITY,
            chain: f64::INFINITY,
            min_value: f64::INFINITY,
        }
    }

    fn merge(self, o: Self) -> Self {
        AuditAcc {
            symmetry: self.symmetry.max(o.symmetry),
            reflection: self.reflection.max(o.reflection),
            cross: self.cross.max(o.cross),
            monotonicity: self.monotonicity.min(o.monotonicity),
            step1: self.step1.min(o.step1),
            step1_error: self.step1_error.max(o.step1_error),
            ratio: self.ratio.min(o.ratio),
            image: self.image.min(o.image),
            chain: self.chain.min(o.chain),
            min_value: self.min_value.min(o.min_value),
        }
    }

    fn draw(&mut self, k: &GreenKernel, rng: &mut ChaCha8Rng) {
        let h = HalfSpace::through_origin(random_unit(rng, k.dim)).expect("unit normal");
        // Stay off the sphere so that b and a remain distinct.
        let r = k.radius * (1.0 - 1e-9);
        let mut x = random_in_ball(rng, k.dim, r);
        let mut y = random_in_ball(rng, k.dim, r);
        if rng.gen::<f64>() < 0.05 {
            // Put y on the boundary hyperplane now and then.
            let s = dot(h.normal(), &y);
            for (yi, ni) in y.iter_mut().zip(h.normal()) {
                *yi -= s * ni;
            }
        }
        let g = k.value_unchecked(&x, &y);
        let scale = 1.0 + g.abs();
        self.min_value = self.min_value.min(g);
        self.symmetry = self.symmetry.max((g - k.value_unchecked(&y, &x)).abs() / scale);
        let (sx, sy) = (h.reflect(&x), h.reflect(&y));
        self.reflection = self.reflection.max((g - k.value_unchecked(&sx, &sy)).abs() / scale);
        self.cross = self
            .cross
            .max((k.value_unchecked(&x, &sy) - k.value_unchecked(&sx, &y)).abs() / scale);

        if h.signed_distance(&x) < 0.0 {
            h.reflect_in_place(&mut x);
        }
        if h.signed_distance(&y) < 0.0 {
            h.reflect_in_place(&mut y);
        }
        if h.signed_distance(&x) <= 0.0 {
            return;
        }
        let gx = k.value_unchecked(&x, &y);
        let m = gx - k.value_unchecked(&h.reflect(&x), &y);
        self.monotonicity = self.monotonicity.min(m / (1.0 + gx.abs()));
        let s1 = step1_audit(k, &x, &y, &h);
        self.step1 = self.step1.min(s1.direct);
        self.step1_error = self.step1_error.max(s1.relative_error);
        let s2 = step2_audit(k, &x, &y, &h);
        if let Some(rm) = s2.ratio_margin {
            // Scale by the ratio's conditioning: its denominator cancels as b → a.
            let d = reflection_distances(k, &x, &y, &h);
            let p = |r: f64| r.powi(k.dim as i32 - 2);
            let cond = 1.0 + p(d.a_t) / p(d.a) + (p(d.b_t) + p(d.a_t)) / (p(d.b) - p(d.a)).abs();
            self.ratio = self.ratio.min(rm / cond);
        }
        self.image = self.image.min(s2.image_margin);
        self.chain = self.chain.min(s2.chain_margin / (1.0 + gx.abs()));
    }
}

pub fn audit(k: &GreenKernel, draws: usize, seed: u64) -> GreenAudit {
    const CHUNK: usize = 1024;
    let t = (0..draws.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + 1);
            let mut acc = AuditAcc::new();
            for _ in 0..CHUNK.min(draws - c * CHUNK) {
                acc.draw(k, &mut rng);
            }
            acc
        })
        .reduce(AuditAcc::new, AuditAcc::merge);
    let pass = t.symmetry <= AUDIT_TOL
        && t.reflection <= AUDIT_TOL
        && t.cross <= AUDIT_TOL
        && t.monotonicity >= -AUDIT_TOL
        && t.step1 >= -AUDIT_TOL
        && t.step1_error <= STEP1_IDENTITY_TOL
        && t.ratio >= -AUDIT_TOL
        && t.image >= -AUDIT_TOL
        && t.chain >= -AUDIT_TOL
        && t.min_value > 0.0;
    GreenAudit {
        radius: k.radius,
        dim: k.dim,
        draws,
        seed,
        max_symmetry_residual: t.symmetry,
        max_reflection_residual: t.reflection,
        max_cross_residual: t.cross,
        min_monotonicity_margin: t.monotonicity,
        min_step1_value: t.step1,
        max_step1_identity_error: t.step1_error,
        min_step2_ratio_margin: t.ratio,
        min_step2_image_margin: t.image,
        min_step2_chain_margin: t.chain,
        min_value: t.min_value,
        pass,
    }
}
