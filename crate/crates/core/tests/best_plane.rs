//! Best-plane LP against brute-force slope searches.

use std::sync::Arc;

use flatlab::regularity::{best_plane_osc, chebyshev_plane, tilted_osc};
use flatlab::{Grid, Point, ScalarField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-3;

/// min over the slope grid `center + STEP·(i, j)`, `|i|, |j| <= half`.
fn brute_force(points: &[Point], values: &[f64], center: [f64; 2], half: i64) -> f64 {
    let mut best = f64::INFINITY;
    for i in -half..=half {
        for j in -half..=half {
            let p = [center[0] + STEP * i as f64, center[1] + STEP * j as f64, 0.0];
            best = best.min(tilted_osc(points, values, &p));
        }
    }
    best
}

/// Nodes of a small ball around a random node of the n = 33 grid.
fn sample_ball(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> (Point, Vec<Point>) {
    let interior = grid.interior();
    loop {
        let c = grid.coords(interior[rng.random_range(0..interior.len())]);
        let r = rng.random_range(0.25..0.45);
        let nodes = grid.ball(&c, r);
        if nodes.len() >= 30 && nodes.len() <= 200 {
            // Keep the sample symmetric about c: drop nodes whose mirror is missing.
            let pts: Vec<Point> = nodes.iter().map(|&i| grid.coords(i)).collect();
            let mirrored = |z: &Point| {
                pts.iter().any(|w| {
                    (w[0] + z[0] - 2.0 * c[0]).abs() < 1e-12 && (w[1] + z[1] - 2.0 * c[1]).abs() < 1e-12
                })
            };
            let sym: Vec<Point> = pts.iter().filter(|z| mirrored(z)).copied().collect();
            return (c, sym);
        }
    }
}

#[test]
fn lp_matches_brute_force_on_seeded_instances() {
    // u = q·z + w(z - c) with w even: the optimal slope is exactly q, which
    // lies on the search grid, so both methods must report osc(w).
    let grid = Arc::new(Grid::new(2, 33, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);
    for inst in 0..20 {
        let (c, pts) = sample_ball(&mut rng, &grid);
        assert!(pts.len() <= 200);
        let q = [
            rng.random_range(-1000..=1000) as f64 * STEP,
            rng.random_range(-1000..=1000) as f64 * STEP,
        ];
        let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let vals: Vec<f64> = pts
            .iter()
            .map(|z| {
                let (y0, y1) = (z[0] - c[0], z[1] - c[1]);
                let even = a[0] * (y0 * y0 + y1 * y1)
                    + a[1] * y0 * y1
                    + a[2] * (5.0 * y0).cos()
                    + a[3] * (y0 * y0 + y1 * y1).powf(0.75);
                q[0] * z[0] + q[1] * z[1] + even
            })
            .collect();
        let fit = chebyshev_plane(2, &pts, &vals).unwrap();
        let bf = brute_force(&pts, &vals, q, 50);
        assert!(
            (fit.phi - bf).abs() <= 1e-6,
            "instance {inst}: LP {} vs brute force {bf} ({} nodes)",
            fit.phi,
            pts.len()
        );
    }
}

#[test]
fn lp_is_sandwiched_by_brute_force_on_generic_instances() {
    let grid = Arc::new(Grid::new(2, 33, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let (_, pts) = sample_ball(&mut rng, &grid);
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let vals: Vec<f64> = pts
            .iter()
            .map(|z| a[0] * (3.0 * z[0]).sin() + a[1] * z[1].powi(3) + a[2] * (z[0] - z[1]).abs())
            .collect();
        let fit = chebyshev_plane(2, &pts, &vals).unwrap();
        let snap = |v: f64| (v / STEP).round() * STEP;
        let bf = brute_force(&pts, &vals, [snap(fit.p[0]), snap(fit.p[1])], 20);
        let zmax = pts.iter().map(|z| z[0].hypot(z[1])).fold(0.0, f64::max);
        assert!(fit.phi <= bf + 1e-12, "LP {} above grid minimum {bf}", fit.phi);
        // The grid contains a slope within STEP/√2 of the optimum.
        assert!(bf - fit.phi <= 2.0 * zmax * STEP / 2f64.sqrt() + 1e-12);
    }
}

#[test]
fn three_dimensional_fit() {
    let grid = Arc::new(Grid::new(3, 17, 2).unwrap());
    let u = ScalarField::from_fn(&grid, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + 0.5 * x[2]);
    let fit = best_plane_osc(&u, &[0.0; 3], 0.5).unwrap();
    assert!((fit.phi - 0.25).abs() < 1e-12);
    assert!((fit.p[2] - 0.5).abs() < 1e-12);
}

fn field() -> impl Strategy<Value = (Vec<f64>, [f64; 2], f64)> {
    (
        prop::collection::vec(-1.0f64..1.0, 4),
        prop::array::uniform2(-3.0f64..3.0),
        0.1f64..10.0,
    )
        .prop_map(|(c, q, k)| (c, q, k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tilt_and_scale_equivariance((c, q, k) in field()) {
        let grid = Arc::new(Grid::new(2, 17, 2).unwrap());
        let g = |x: &[f64]| c[0] * x[0] * x[0] + c[1] * x[0] * x[1].abs() + c[2] * (2.0 * x[1]).sin() + c[3] * x[0];
        let u = ScalarField::from_fn(&grid, g);
        let center = [0.125, -0.25, 0.0];
        let base = best_plane_osc(&u, &center, 0.6).unwrap();

        let tilted = u.plus_linear(&[q[0], q[1], 0.0]);
        let t = best_plane_osc(&tilted, &center, 0.6).unwrap();
        prop_assert!((t.phi - base.phi).abs() <= 1e-9 * (1.0 + base.phi));
        // The shifted slope is optimal for the tilted field.
        let shifted = [base.p[0] + q[0], base.p[1] + q[1], 0.0];
        let nodes = grid.ball(&center, 0.6);
        let pts: Vec<Point> = nodes.iter().map(|&i| grid.coords(i)).collect();
        let vals: Vec<f64> = nodes.iter().map(|&i| tilted.get(i)).collect();
        prop_assert!((tilted_osc(&pts, &vals, &shifted) - t.phi).abs() <= 1e-9 * (1.0 + t.phi));

        let s = best_plane_osc(&u.scaled(k), &center, 0.6).unwrap();
        prop_assert!((s.phi - k * base.phi).abs() <= 1e-9 * k * (1.0 + base.phi));

        // p = 0 is admissible.
        let plain = flatlab::osc(&u, &nodes).unwrap();
        prop_assert!(base.phi <= plain + 1e-12);
    }
}
