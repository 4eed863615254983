//! Randomized invariants across the modules.

use std::f64::consts::PI;

use proptest::prelude::*;

use polarsym::ball::{ball_axis, is_separable_ball, make_separable_ball, shell_branch_table, BallGridParams, LinearProfile};
use polarsym::choquard::{lattice_halfspaces, solve_ground_state_observed, ChoquardProblem, Init, SolveOptions};
use polarsym::circle::{
    angular_distance, circle_axis_and_profile, circle_reflections, corollary_direction_check, extremal_arcs,
    is_separable_circle, CircleFn,
};
use polarsym::geometry::{angle_between, dist, dual_point, hull_membership, line_angle, norm, reflect, HalfSpace, HullKind, Point};
use polarsym::green::{step2_audit, GreenKernel};
use polarsym::polarization::{decompose_d_difference, partition, polarize, weighted_l2, PairedGrid};
use polarsym::report::Branch;
use polarsym::sphere::{is_separable_sphere, restrict_to_circle, sphere_caps_and_axis, LatLonGrid, SphereFn};

fn unit3() -> impl Strategy<Value = Vec<f64>> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        })
}

fn point3(r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_an_isometric_involution(n in unit3(), c in -2.0..2.0f64, x in point3(3.0), y in point3(3.0)) {
        let h = HalfSpace::new(n, c).unwrap();
        let px = Point::new(x.clone());
        let back = reflect(&h, &reflect(&h, &px).unwrap()).unwrap();
        prop_assert!(dist(back.coords(), &x) < 1e-12);
        let d = dist(&h.reflect(&x), &h.reflect(&y));
        prop_assert!((d - dist(&x, &y)).abs() < 1e-12 * (1.0 + d));
    }

    #[test]
    fn origin_reflections_preserve_norm(n in unit3(), x in point3(3.0)) {
        let h = HalfSpace::through_origin(n).unwrap();
        prop_assert!((norm(&h.reflect(&x)) - norm(&x)).abs() < 1e-12);
    }

    #[test]
    fn dual_point_is_an_involution(x in point3(0.57), r in 0.5..3.0f64) {
        prop_assume!(norm(&x) > 1e-3);
        let p = Point::new(x.clone());
        let back = dual_point(&dual_point(&p, r).unwrap(), r).unwrap();
        prop_assert!(dist(back.coords(), &x) < 1e-10 * (1.0 + norm(&x)));
    }

    #[test]
    fn convex_hull_matches_triangle_brute_force(
        pts in prop::collection::vec(prop::array::uniform2(-1.0..1.0f64), 3..8),
        q in prop::array::uniform2(-1.0..1.0f64),
    ) {
        // By Carathéodory, q is in the hull iff it is in some triangle.
        let mut inside = false;
        let mut marginal = false;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                for k in j + 1..pts.len() {
                    let (a, b, c) = (pts[i], pts[j], pts[k]);
                    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                    if det.abs() < 1e-6 {
                        marginal = true;
                        continue;
                    }
                    let l1 = ((q[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (q[1] - a[1])) / det;
                    let l2 = ((b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1])) / det;
                    let l0 = 1.0 - l1 - l2;
                    let m = l0.min(l1).min(l2);
                    if m.abs() < 1e-7 {
                        marginal = true;
                    }
                    inside |= m >= 0.0;
                }
            }
        }
        prop_assume!(!marginal);
        let points: Vec<Point> = pts.iter().map(|p| Point::new(p.to_vec())).collect();
        prop_assert_eq!(hull_membership(&points, &Point::new(q.to_vec()), HullKind::Convex).unwrap(), inside);
    }

    #[test]
    fn circle_constructor_round_trip(k in 0usize..128, q in 0.3..4.0f64, lift in 0.1..2.0f64) {
        let n = 64;
        let a0 = PI * k as f64 / n as f64;
        let v = CircleFn::from_profile(n, a0, |d| lift + (1.0 + d.cos()).powf(q)).unwrap();
        prop_assert!(is_separable_circle(&v, 1e-9).separable);
        let rep = circle_axis_and_profile(&v, 1e-9).unwrap();
        let d = rep.axis().unwrap();
        let step = 2.0 * PI / n as f64;
        prop_assert!(angular_distance(d[1].atan2(d[0]), a0) <= step);
        let arcs = extremal_arcs(&v, 1e-9).unwrap();
        prop_assert!(arcs.antipodal_error() <= step);
        for line in 0..circle_reflections(n).unwrap().len() {
            prop_assert!(corollary_direction_check(&v, arcs.alpha0, line, 1e-9));
        }
    }

    #[test]
    fn second_peak_breaks_separability(k in 0usize..64, off in 4usize..61, lift in 0.1..1.0f64) {
        let n = 64;
        let a0 = 2.0 * PI * k as f64 / n as f64;
        let mut vals = CircleFn::from_profile(n, a0, |d| 1.5 + d.cos()).unwrap().values().to_vec();
        vals[(k + off) % n] = 2.5 + lift;
        let v = CircleFn::new(vals).unwrap();
        let rep = is_separable_circle(&v, 1e-9);
        prop_assert!(!rep.separable);
        prop_assert!(rep.witness.is_some());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sphere_cap_structure(a in unit3(), k in 0.5..3.0f64, t0 in -0.4..0.4f64) {
        let grid = LatLonGrid::new(33, 64).unwrap();
        let a3 = [a[0], a[1], a[2]];
        let u = SphereFn::from_fn(grid, move |x| 2.0 + (k * (x[0] * a3[0] + x[1] * a3[1] + x[2] * a3[2] - t0)).tanh()).unwrap();
        prop_assert!(is_separable_sphere(&u, 64, 1e-9, 0).separable);
        let rep = sphere_caps_and_axis(&u, 1e-9).unwrap();
        let axis = rep.axis().unwrap();
        prop_assert!(angle_between(axis, &a) < 2f64.to_radians());
        prop_assert!(rep.residuals["ring_spread"] <= 1e-9);
        prop_assert!(rep.residuals["antipodal_error_rad"] <= 2.0 * grid.resolution() + 1e-9);

        // Any plane containing the axis cuts a separable circle.
        let side = if a3[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
        let normal = polarsym::geometry::cross3(&a3, &side);
        let plane = HalfSpace::from_direction(&normal, 0.0).unwrap();
        let c = restrict_to_circle(&u, &plane, 64).unwrap();
        let tol = 1e-9 + c.interpolation_bound() / c.max();
        prop_assert!(is_separable_circle(&c, tol).separable);
    }

    #[test]
    fn sphere_longitude_shift_equivariance(theta in 0.2..2.9f64, phi in 0.0..6.28f64, k in 1usize..64) {
        let grid = LatLonGrid::new(33, 64).unwrap();
        let a = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let u = SphereFn::from_fn(grid, move |x| 3.0 - (x[0] * a[0] + x[1] * a[1] + x[2] * a[2])).unwrap();
        let d = sphere_caps_and_axis(&u, 1e-9).unwrap().axis().unwrap().to_vec();
        let d2 = sphere_caps_and_axis(&u.shift_longitude(k), 1e-9).unwrap().axis().unwrap().to_vec();
        let ang = grid.dlon() * k as f64;
        let rotated = [ang.cos() * d[0] - ang.sin() * d[1], ang.sin() * d[0] + ang.cos() * d[1], d[2]];
        prop_assert!(angle_between(&rotated, &d2) <= grid.resolution());
    }

    #[test]
    fn ball_constructor_and_scaling(c in 1.5..3.0f64, k in 0.2..3.0f64, lift in 0.05..0.5f64, lambda in 0.1..10.0f64) {
        let xs: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let g = LinearProfile::new(xs.clone(), xs.iter().map(|t| c - (k * t).tanh()).collect()).unwrap();
        let rs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let h = LinearProfile::new(rs.clone(), rs.iter().map(|r| 1.0 - r * r + lift).collect()).unwrap();
        let params = BallGridParams { radius: 1.0, shells: 6, n_lat: 17, n_lon: 32 };
        let u = make_separable_ball(&g, &h, params).unwrap();
        let sep = is_separable_ball(&u, 64, 1e-9, 3);
        prop_assert!(sep.separable);
        let d = ball_axis(&u, 1e-9).unwrap().axis().unwrap().to_vec();
        prop_assert!(line_angle(&d, &[0.0, 0.0, 1.0]) < 2f64.to_radians());

        let v = u.scaled(lambda).unwrap();
        prop_assert_eq!(is_separable_ball(&v, 64, 1e-9, 3).separable, sep.separable);
        let d2 = ball_axis(&v, 1e-9).unwrap().axis().unwrap().to_vec();
        prop_assert!(angle_between(&d, &d2) < 1e-9);

        // One global branch per half-space across shells.
        for row in shell_branch_table(&u, 64, 1e-9, 3) {
            let strict: Vec<Branch> = row.into_iter().filter(|b| *b != Branch::Equal).collect();
            prop_assert!(strict.windows(2).all(|w| w[0] == w[1]));
            prop_assert!(!strict.contains(&Branch::Mixed));
        }
    }

    #[test]
    fn polarization_inequality_and_norms(n in unit3(), seed in 0u64..1000, p in 1.7..4.9f64) {
        let h = HalfSpace::through_origin(n).unwrap();
        let grid = PairedGrid::random_in_ball(h.clone(), 1.0, 60, 8, seed).unwrap();
        let k = GreenKernel::new(1.0, 3, 0.05).unwrap();
        let km = grid.kernel_matrix(&k).unwrap();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u: Vec<f64> = (0..grid.len())
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.1 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let dec = decompose_d_difference(&grid, &u, p, &km).unwrap();
        prop_assert!(dec.d_polarized >= dec.d_u * (1.0 - 1e-12));
        prop_assert!((dec.difference() - dec.sum()).abs() <= 1e-10 * dec.d_u);
        let uh = polarize(&grid, &u, &h).unwrap();
        prop_assert!((weighted_l2(&grid, &uh) - weighted_l2(&grid, &u)).abs() <= 1e-12 * weighted_l2(&grid, &u));

        // Polarizing u^H again changes nothing; equality terms vanish there.
        let again = decompose_d_difference(&grid, &uh, p, &km).unwrap();
        prop_assert!(again.i2.abs() <= 1e-12 * again.d_u && again.i3.abs() <= 1e-12 * again.d_u);
        let part = partition(&grid, &uh, 0.0).unwrap();
        prop_assert!(part.a.is_empty() || part.b.is_empty());
    }

    #[test]
    fn green_symmetry_positivity_and_step2(x in point3(0.57), y in point3(0.57), n in unit3()) {
        let k = GreenKernel::new(1.0, 3, 1e-3).unwrap();
        prop_assume!(dist(&x, &y) > 1e-3);
        let gxy = polarsym::green::green_eval(&k, &x, &y).unwrap();
        let gyx = polarsym::green::green_eval(&k, &y, &x).unwrap();
        prop_assert!((gxy - gyx).abs() <= 1e-12 * gxy.abs());
        prop_assert!(gxy > 0.0);
        let h = HalfSpace::through_origin(n).unwrap();
        prop_assume!(h.contains(&x) && h.contains(&y));
        let s2 = step2_audit(&k, &x, &y, &h);
        prop_assert!(s2.image_margin >= -1e-12);
        prop_assert!(s2.ratio_margin.map_or(true, |m| m >= -1e-12));
        prop_assert!(s2.chain_margin >= -1e-10 * s2.lower_bound.abs().max(1.0));
    }
}

#[test]
fn solver_iterates_stay_on_nehari_and_polarization_increases_d() {
    let prob = ChoquardProblem::new(1.0, 2.0, 8).unwrap();
    let nodes: Vec<Vec<f64>> = prob.mesh().nodes().iter().map(|x| x.to_vec()).collect();
    let weights = vec![prob.mesh().cell_volume(); nodes.len()];
    let grids: Vec<(HalfSpace, PairedGrid)> = lattice_halfspaces()
        .into_iter()
        .map(|h| {
            let g = PairedGrid::from_nodes(h.clone(), 1.0, nodes.clone(), weights.clone(), 1e-9).unwrap();
            (h, g)
        })
        .collect();
    let mut checked = 0;
    let mut observe = |_: usize, u: &[f64]| {
        let (n, d) = (prob.norm_sq(u), prob.nonlocal_d(u));
        assert!((n - d).abs() / n <= 1e-10, "Nehari residual {}", (n - d).abs() / n);
        for (h, g) in &grids {
            let uh = polarize(g, u, h).unwrap();
            assert!(prob.nonlocal_d(&uh) >= d * (1.0 - 1e-12));
        }
        checked += 1;
    };
    let opts = SolveOptions {
        init: Init::Perturbed { seed: 5, amplitude: 0.3 },
        ..SolveOptions::default()
    };
    let state = solve_ground_state_observed(&prob, &opts, &mut observe).unwrap();
    assert!(checked >= 2);
    // Q decreases along accepted steps.
    assert!(state.q_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn energy_is_the_expected_polynomial_in_t() {
    let prob = ChoquardProblem::new(1.0, 2.5, 8).unwrap();
    let u = Init::Perturbed { seed: 1, amplitude: 0.2 }.values(prob.mesh()).unwrap();
    let (n, d, p) = (prob.norm_sq(&u), prob.nonlocal_d(&u), prob.p);
    // Recover the two coefficients from two samples, then test the rest.
    let e = |t: f64| prob.energy(&u.iter().map(|x| t * x).collect::<Vec<_>>());
    let (t1, t2) = (0.5, 1.5);
    let (e1, e2) = (e(t1), e(t2));
    // e = A t² + B t^{2p}
    let det = t1 * t1 * t2.powf(2.0 * p) - t2 * t2 * t1.powf(2.0 * p);
    let a = (e1 * t2.powf(2.0 * p) - e2 * t1.powf(2.0 * p)) / det;
    let b = (t1 * t1 * e2 - t2 * t2 * e1) / det;
    assert!((a - 0.5 * n).abs() <= 1e-10 * n);
    assert!((b + d / (2.0 * p)).abs() <= 1e-10 * d);
    for t in [0.2, 0.9, 2.0, 3.0] {
        let want = a * t * t + b * t.powf(2.0 * p);
        assert!((e(t) - want).abs() <= 1e-10 * want.abs().max(n));
    }
}
