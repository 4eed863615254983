//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line with its measurements and wall time, then asserts.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarsym::ball::{ball_axis, example21, is_separable_ball, BallFn, BallGridParams};
use polarsym::choquard::{
    certify_theorem41, nehari_energy, rotate_quarter_turn, solve_ground_state, CertifyOptions, ChoquardProblem, Init,
    SolveOptions,
};
use polarsym::circle::{angular_distance, circle_axis_and_profile, extremal_arcs, is_separable_circle, CircleFn};
use polarsym::field::{
    axis_through_point, even_monotone_check, radial_center_and_profile, CartesianGrid, EvenVerdict, FieldFn,
};
use polarsym::geometry::{angle_between, dist, line_angle, random_in_ball, random_unit, HalfSpace};
use polarsym::green::{audit, GreenKernel};
use polarsym::polarization::{decompose_d_difference, PairedGrid};
use polarsym::report::Symmetry;
use polarsym::sphere::{corollary_direction_check, random_halfspaces, sphere_caps_and_axis, LatLonGrid, SphereFn};

fn report(n: usize, ok: bool, elapsed: Duration, budget: Duration, detail: String) -> bool {
    let within = elapsed <= budget;
    let verdict = if ok && within { "PASS" } else { "FAIL" };
    println!(
        "criterion {n}: {verdict} ({detail}; {:.2}s of {:.0}s budget)",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    ok && within
}

fn criterion_1_discrete_polarization_inequality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_diff = f64::INFINITY;
    let mut worst_i14 = f64::NEG_INFINITY;
    let mut worst_i23 = f64::INFINITY;
    let mut ok = true;
    for hk in 0..8 {
        let h = HalfSpace::through_origin(random_unit(&mut rng, 3)).unwrap();
        let grid = PairedGrid::random_in_ball(h, 1.0, 200, 20, 100 + hk).unwrap();
        let w = grid.weights()[0];
        let k = GreenKernel::new(1.0, 3, 1.0).unwrap();
        let k = GreenKernel::new(1.0, 3, k.cell_radius(w)).unwrap();
        let km = grid.kernel_matrix(&k).unwrap();
        for _ in 0..100 {
            let u: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(0.05..2.0)).collect();
            let dec = decompose_d_difference(&grid, &u, 2.0, &km).unwrap();
            let d = dec.d_u;
            worst_diff = worst_diff.min(dec.difference() / d);
            worst_i14 = worst_i14.max(dec.i1.max(dec.i4) / d);
            worst_i23 = worst_i23.min(dec.i2.min(dec.i3) / d);
            ok &= dec.difference() >= -1e-12 * d
                && dec.i1 <= 1e-12 * d
                && dec.i4 <= 1e-12 * d
                && dec.i2 >= -1e-12 * d
                && dec.i3 >= -1e-12 * d;
        }
    }
    let pass = report(
        1,
        ok,
        start.elapsed(),
        Duration::from_secs(10),
        format!(
            "min (D(u^H)-D(u))/D = {worst_diff:.3e}, max I1,I4/D = {worst_i14:.3e}, min I2,I3/D = {worst_i23:.3e}"
        ),
    );
    assert!(pass);
}

fn criterion_2_green_audit() {
    let start = Instant::now();
    let k = GreenKernel::new(1.0, 3, 1e-3).unwrap();
    let a = audit(&k, 100_000, 2);
    let ok = a.max_reflection_residual <= 1e-12
        && a.max_cross_residual <= 1e-12
        && a.min_monotonicity_margin >= -1e-12
        && a.max_step1_identity_error <= 1e-10
        && a.pass;
    let pass = report(
        2,
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        format!(
            "equalities {:.2e}/{:.2e}, monotonicity margin {:.2e}, step 1 identity {:.2e}",
            a.max_reflection_residual, a.max_cross_residual, a.min_monotonicity_margin, a.max_step1_identity_error
        ),
    );
    assert!(pass);
}

/// The definition itself: for every line through the origin and a node (or
/// a midpoint), compare each node with its mirror image.
fn naive_separable(v: &[f64], eps: f64) -> bool {
    let n = v.len();
    let tol = eps * v.iter().cloned().fold(f64::MIN, f64::max);
    (0..n).all(|k| {
        // Node j lies in the open half-circle (πk/n, πk/n + π) iff
        // (2j − k) mod 2n is in (0, n); its mirror is node k − j.
        let diffs: Vec<f64> = (0..n)
            .filter(|&j| {
                let r = (2 * j + 2 * n - k) % (2 * n);
                r > 0 && r < n
            })
            .map(|j| v[(k + n - j) % n] - v[j])
            .collect();
        diffs.iter().all(|&d| d >= -tol) || diffs.iter().all(|&d| d <= tol)
    })
}

fn criterion_3_circle_oracle_and_constructor() {
    let start = Instant::now();
    let n = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0;
    let mut positives = 0;
    // Axes through a node or a midpoint are the ones a grid reflection preserves.
    let grid_axis = |rng: &mut ChaCha8Rng| PI * rng.gen_range(0..2 * n) as f64 / n as f64;
    for t in 0..200 {
        let a0 = grid_axis(&mut rng);
        let q = rng.gen_range(0.5..3.0);
        let v: Vec<f64> = match t % 4 {
            0 => (0..n).map(|_| rng.gen_range(0.5..2.0)).collect(),
            1 => CircleFn::from_profile(n, a0, |d| 1.0 + (1.0 + d.cos()).powf(q)).unwrap().values().to_vec(),
            2 => {
                let base = CircleFn::from_profile(n, a0, |d| 1.0 + (1.0 + d.cos()).powf(q)).unwrap();
                let j = rng.gen_range(0..n);
                let mut v = base.values().to_vec();
                v[j] += rng.gen_range(-0.2..0.2);
                v
            }
            _ => {
                let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                (0..n)
                    .map(|j| {
                        let th = TAU * j as f64 / n as f64;
                        3.0 + c[0] * th.cos() + c[1] * (2.0 * th).cos()
                    })
                    .collect()
            }
        };
        let fast = is_separable_circle(&CircleFn::new(v.clone()).unwrap(), 1e-9).separable;
        let slow = naive_separable(&v, 1e-9);
        agree += (fast == slow) as usize;
        positives += slow as usize;
    }

    let step = TAU / n as f64;
    let mut recovered = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a0 = grid_axis(&mut rng);
        let q = rng.gen_range(0.5..3.0);
        let v = CircleFn::from_profile(n, a0, |d| 1.0 + (1.0 + d.cos()).powf(q)).unwrap();
        let sep = is_separable_circle(&v, 1e-9).separable;
        let arcs = extremal_arcs(&v, 1e-9);
        let rep = circle_axis_and_profile(&v, 1e-9);
        if let (true, Ok(arcs), Ok(rep)) = (sep, arcs, rep) {
            let d = rep.axis().unwrap();
            let err = angular_distance(d[1].atan2(d[0]), a0);
            worst = worst.max(err.abs());
            let profile = rep.profile.as_ref().unwrap();
            if err <= step && arcs.antipodal_error() <= step && profile.is_nonincreasing(1e-9 * v.max()) {
                recovered += 1;
            }
        }
    }
    let ok = agree == 200 && recovered == 50;
    let pass = report(
        3,
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        format!(
            "oracle agreement {agree}/200 ({positives} separable), round trips {recovered}/50, worst axis error {worst:.2e} rad"
        ),
    );
    assert!(pass);
}

fn criterion_4_sphere_caps() {
    let start = Instant::now();
    let grid = LatLonGrid::new(64, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_angle = 0.0f64;
    let mut worst_spread = 0.0f64;
    let mut good = 0;
    for f in 0..50 {
        let a = random_unit(&mut rng, 3);
        let a3 = [a[0], a[1], a[2]];
        let k = rng.gen_range(0.5..3.0);
        let t0 = rng.gen_range(-0.5..0.5);
        let u = SphereFn::from_fn(grid, move |x| {
            let t = x[0] * a3[0] + x[1] * a3[1] + x[2] * a3[2];
            2.0 + (k * (t - t0)).tanh()
        })
        .unwrap();
        let Ok(rep) = sphere_caps_and_axis(&u, 1e-9) else {
            continue;
        };
        let axis = rep.axis().unwrap();
        let ang = angle_between(axis, &a);
        let spread = rep.residuals["ring_spread"];
        worst_angle = worst_angle.max(ang);
        worst_spread = worst_spread.max(spread);
        let axis3 = [axis[0], axis[1], axis[2]];
        let corollary = random_halfspaces(64, 1000 + f)
            .iter()
            .all(|h| corollary_direction_check(&u, &axis3, h, 1e-9));
        if ang <= 2f64.to_radians() && spread <= 1e-9 && corollary {
            good += 1;
        }
    }
    let pass = report(
        4,
        good == 50,
        start.elapsed(),
        Duration::from_secs(30),
        format!("{good}/50 fixtures; worst axis error {worst_angle:.2e} rad, worst ring spread {worst_spread:.2e}"),
    );
    assert!(pass);
}

fn criterion_5_ball_equivalence() {
    let start = Instant::now();
    let params = BallGridParams {
        radius: 1.0,
        shells: 8,
        n_lat: 33,
        n_lon: 64,
    };
    let u = example21(params).unwrap();
    let sep = is_separable_ball(&u, 256, 1e-9, 5).separable;
    let angle = ball_axis(&u, 1e-9)
        .ok()
        .and_then(|r| r.axis().map(|d| angle_between(d, &[0.0, 0.0, -1.0])))
        .unwrap_or(f64::INFINITY);

    let grid = LatLonGrid::new(33, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rejected = 0;
    for s in 0..50 {
        let (c, k, lift) = (rng.gen_range(1.5..3.0), rng.gen_range(0.3..3.0), rng.gen_range(0.05..0.5));
        let base = move |x: &[f64; 3]| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            (c - (k * x[2]).tanh()) * (1.0 - r2 + lift)
        };
        let b = BallFn::sampled(1.0, 8, grid, base).unwrap();
        let delta = 0.05 * b.min();
        let p = BallFn::sampled(1.0, 8, grid, move |x| base(x) + delta * x[0] * x[1]).unwrap();
        let r = is_separable_ball(&p, 256, 1e-9, s);
        if !r.separable && r.witness.is_some() {
            rejected += 1;
        }
    }
    let ok = sep && angle <= 2f64.to_radians() && rejected == 50;
    let pass = report(
        5,
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        format!("example separable {sep}, axis error {angle:.2e} rad, perturbed rejected {rejected}/50"),
    );
    assert!(pass);
}

fn sample_even(n: usize, x_max: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..n)
        .map(|k| f(-x_max + 2.0 * x_max * k as f64 / (n - 1) as f64))
        .collect()
}

fn criterion_6_whole_space() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut centers_ok = 0;
    let mut worst_center = 0.0f64;
    let mut spacing = 0.0;
    for _ in 0..20 {
        let c = random_in_ball(&mut rng, 3, 5.0);
        let (a, k) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let cc = [c[0], c[1], c[2]];
        let g = CartesianGrid::sample_cube(65, 8.0, move |x| {
            let d2 = (x[0] - cc[0]).powi(2) + (x[1] - cc[1]).powi(2) + (x[2] - cc[2]).powi(2);
            a / (1.0 + d2).powf(k)
        })
        .unwrap();
        spacing = g.spacing[0];
        let u = FieldFn::from_grid(g, 8.0, true);
        if let Ok(fit) = radial_center_and_profile(&u, 0.1) {
            let e = dist(&fit.center, &c);
            worst_center = worst_center.max(e);
            if e < spacing && fit.profile.is_nonincreasing(0.0) {
                centers_ok += 1;
            }
        }
    }

    let t = FieldFn::from_fn(|x| 2.0 + (-x[2]).tanh(), 8.0, false);
    let dirs: Vec<Vec<f64>> = (0..20)
        .filter_map(|_| {
            let x = random_in_ball(&mut rng, 3, 4.0);
            axis_through_point(&t, &[x[0], x[1], x[2]], 1.0, 1e-9).ok().map(|l| l.direction)
        })
        .collect();
    let mut worst_pair = 0.0f64;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            worst_pair = worst_pair.max(line_angle(&dirs[i], &dirs[j]));
        }
    }
    let parallel = dirs.len() == 20 && worst_pair <= 2f64.to_radians();

    let gauss = even_monotone_check(&sample_even(401, 4.0, |x| (-x * x).exp()), 4.0, 1e-12, true).unwrap();
    let lorentz = even_monotone_check(&sample_even(401, 10.0, |x| 1.0 / (1.0 + x * x)), 10.0, 1e-12, true).unwrap();
    let cosine = even_monotone_check(&sample_even(801, 4.0 * PI, |x| 2.0 + x.cos()), 4.0 * PI, 1e-9, false).unwrap();
    let lemma = gauss.passed()
        && gauss.dichotomy_holds
        && lorentz.passed()
        && cosine.verdict == EvenVerdict::PeriodicType
        && !cosine.nonincreasing
        && !cosine.k_nonzero.is_empty();

    let ok = centers_ok == 20 && parallel && lemma;
    let pass = report(
        6,
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        format!(
            "centers {centers_ok}/20 (worst {worst_center:.3} vs spacing {spacing}), axis field spread {worst_pair:.2e} rad over {} points, even-monotone verdicts {lemma}",
            dirs.len()
        ),
    );
    assert!(pass);
}

fn criterion_7_choquard_pipeline() {
    let start = Instant::now();
    let prob = ChoquardProblem::new(1.0, 2.0, 24).unwrap();
    let p = prob.p;
    let state = solve_ground_state(&prob, &SolveOptions::default()).unwrap();
    let u = &state.values;
    let converged = state.converged && state.last_change < 1e-8 && state.iterations <= 5000;

    // Energy along the ray through v. Homogeneity gives
    // I(tv) = t²‖v‖²/2 − t^{2p}D(v)/(2p); it is checked against direct
    // evaluation at a few points before the fine scan relies on it.
    let mut homogeneity: f64 = 0.0;
    let mut scan = |v: &[f64]| -> (f64, f64) {
        let t_u = prob.nehari_scale(v).unwrap();
        let (nv, dv) = (prob.norm_sq(v), prob.nonlocal_d(v));
        let ray = |t: f64| 0.5 * t * t * nv - t.powf(2.0 * p) * dv / (2.0 * p);
        for t in [0.3, 1.0, 1.7] {
            let tv: Vec<f64> = v.iter().map(|x| t * t_u * x).collect();
            let direct = prob.energy(&tv);
            homogeneity = homogeneity.max(((direct - ray(t * t_u)) / direct).abs());
        }
        let dt = 1e-4;
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut k = 0;
        loop {
            let t = (0.1 + dt * k as f64) * t_u;
            if t > 3.0 * t_u {
                break;
            }
            let e = ray(t);
            if e > best.0 {
                best = (e, t);
            }
            k += 1;
        }
        ((best.1 - t_u).abs() / t_u, dt)
    };
    let (scan_a, res) = scan(u);
    let half: Vec<f64> = u.iter().map(|x| 0.5 * x).collect();
    let (scan_b, _) = scan(&half);
    let t_scan = scan_a <= res && scan_b <= res && homogeneity <= 1e-12;

    let bump = Init::Bump.values(prob.mesh()).unwrap();
    let t_b = prob.nehari_scale(&bump).unwrap();
    let scaled: Vec<f64> = bump.iter().map(|x| t_b * x).collect();
    let direct = prob.energy(&scaled);
    let closed = nehari_energy(prob.norm_sq(&bump), prob.nonlocal_d(&bump), p);
    let identity = ((direct - closed) / closed).abs().max(((state.energy - nehari_energy(prob.norm_sq(u), prob.nonlocal_d(u), p)) / state.energy).abs());

    let cert = certify_theorem41(&state, &CertifyOptions::default()).unwrap();
    let class = cert.axis.as_ref().map(|a| a.symmetry.name()).unwrap_or("none");
    let classified = matches!(
        cert.axis.as_ref().map(|a| &a.symmetry),
        Some(Symmetry::Radial { .. }) | Some(Symmetry::Axial { .. })
    );
    let fixed_points = cert.polarization.len() == 16 && cert.polarization.iter().all(|c| c.passed);
    let worst_fixed = cert
        .polarization
        .iter()
        .map(|c| c.distance_to_u.min(c.distance_to_reflection))
        .fold(0.0, f64::max);

    let init = Init::Perturbed { seed: 77, amplitude: 0.1 }.values(prob.mesh()).unwrap();
    let rotated = rotate_quarter_turn(prob.mesh(), &init);
    let run = |values: Vec<f64>| {
        solve_ground_state(
            &prob,
            &SolveOptions {
                init: Init::Values { values },
                ..SolveOptions::default()
            },
        )
        .unwrap()
        .energy
    };
    let (c1, c2) = (run(init), run(rotated));
    let rot = ((c1 - c2) / c1).abs();

    let ok = converged
        && state.energy > 0.0
        && state.nehari_residual <= 1e-10
        && identity <= 1e-10
        && t_scan
        && cert.separability.separable
        && classified
        && fixed_points
        && rot <= 1e-6;
    let pass = report(
        7,
        ok,
        start.elapsed(),
        Duration::from_secs(300),
        format!(
            "{} nodes, {} iterations, last dQ/Q {:.1e}, c = {:.6}, Nehari {:.1e}, identity {:.1e}, t-scan offsets {:.1e}/{:.1e} (homogeneity {:.1e}), EL residual {:.1e}, separable {}, class {}, fixed point {}/16 (worst {:.1e}), rotated-init c diff {:.1e}",
            prob.mesh().len(),
            state.iterations,
            state.last_change,
            state.energy,
            state.nehari_residual,
            identity,
            scan_a,
            scan_b,
            homogeneity,
            state.el_residual,
            cert.separability.separable,
            class,
            cert.polarization.iter().filter(|c| c.passed).count(),
            worst_fixed,
            rot
        ),
    );
    assert!(pass);
}

fn criterion_8_gradient_check() {
    let start = Instant::now();
    let prob = ChoquardProblem::new(1.0, 2.0, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u: Vec<f64> = Init::Bump
        .values(prob.mesh())
        .unwrap()
        .iter()
        .map(|v| v + rng.gen_range(0.05..0.3))
        .collect();
    let g = prob.quotient_gradient(&u);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dir: Vec<f64> = (0..u.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = 1e-5 * un / dn;
        let plus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
        let minus: Vec<f64> = u.iter().zip(&dir).map(|(a, b)| a - s * b).collect();
        let fd = (prob.quotient(&plus) - prob.quotient(&minus)) / (2.0 * s);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()));
    }
    let pass = report(
        8,
        worst <= 1e-6,
        start.elapsed(),
        Duration::from_secs(10),
        format!("worst relative directional-derivative error {worst:.2e} over 20 directions"),
    );
    assert!(pass);
}

// Runs without the libtest harness so the criterion lines are always printed.
fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("criterion_1_discrete_polarization_inequality", criterion_1_discrete_polarization_inequality),
        ("criterion_2_green_audit", criterion_2_green_audit),
        ("criterion_3_circle_oracle_and_constructor", criterion_3_circle_oracle_and_constructor),
        ("criterion_4_sphere_caps", criterion_4_sphere_caps),
        ("criterion_5_ball_equivalence", criterion_5_ball_equivalence),
        ("criterion_6_whole_space", criterion_6_whole_space),
        ("criterion_7_choquard_pipeline", criterion_7_choquard_pipeline),
        ("criterion_8_gradient_check", criterion_8_gradient_check),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        if std::panic::catch_unwind(run).is_err() {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}
