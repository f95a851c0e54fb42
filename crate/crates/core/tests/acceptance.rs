//! Acceptance suite: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use geodesica::convergence::{
    audit_sandwich, bound_context, check_delta_sampling, check_min_length_lemma, covering_frequency, measure_cover,
    sampling_lemma_bound, AuditMode,
};
use geodesica::frechet::{embedded_frechet_mean, sample_frechet_mean};
use geodesica::geograph::{build_graph, shortest_paths, EdgeWeights, NeighborhoodRule};
use geodesica::manifolds::{arc_distance_matrix, Annulus, GeoPoint, ManifoldOracle, Rect, SphereCap};
use geodesica::mds::{cmds, low_rank_psd_truncation, procrustes_distance, smacof, tau, StressParams, StressWeights};
use geodesica::projections::{
    equirectangular, lambert_azimuthal, mds_map, synthetic_hemisphere_grid, transverse_mercator, GeoPointSet,
    WESTERN_CENTRAL_MERIDIAN,
};
use geodesica::{Configuration, DissimilarityMatrix, PointCloud, Seed};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Correlation thresholds for the annulus pipelines, frozen from an
/// independent brute-force run (visibility-graph geodesics, CMDS, 20 Guttman
/// iterations) over five seeds: observed minima 0.9792 and 0.9947.
const THIN_FRAME_MIN_CORRELATION: f64 = 0.975;
const OFF_CENTER_MIN_CORRELATION: f64 = 0.990;

/// Embedded-average objective may exceed the brute-force optimum by this
/// factor on the sphere-cap sample.
const FRECHET_RATIO: f64 = 1.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn example_curve() -> ManifoldOracle {
    ManifoldOracle::rectangle_curve(Rect::new(-0.05, 0.05, 0.05, 0.95).unwrap()).unwrap()
}

fn example_delta() -> DissimilarityMatrix {
    let oracle = example_curve();
    let cloud = oracle.equally_spaced(200).unwrap();
    oracle.distance_matrix(&cloud).unwrap()
}

fn closed_curve_spectrum() -> Outcome {
    let start = Instant::now();
    let delta = example_delta();
    let shape_free = arc_distance_matrix(200, 2.0).unwrap();
    let max_gap = delta.view().iter().zip(shape_free.view().iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let s = tau(delta.squared().view()).unwrap().spectrum();
    let frac = s.top_fraction(2);
    let target = 40.53181 / 50.0;
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (s.n_pos, s.n_zero, s.n_neg) == (100, 1, 99)
        && (s.pos_variation - 50.0).abs() < 1e-6
        && (s.neg_variation - 16.665).abs() < 5e-3
        && ((frac - target) / target).abs() < 1e-4
        && max_gap < 1e-12
        && elapsed < 10.0;
    outcome(
        pass,
        format!(
            "signature ({}, {}, {}), positive variation {:.9}, negative variation {:.6}, top-2 fraction {:.7}, {:.2}s",
            s.n_pos, s.n_zero, s.n_neg, s.pos_variation, s.neg_variation, frac, elapsed
        ),
    )
}

fn cmds_circle_radius() -> Outcome {
    let z = cmds(&example_delta(), 2).unwrap();
    let c = z.centroid();
    let radii: Vec<f64> = z.coords().rows().into_iter().map(|r| (r[0] - c[0]).hypot(r[1] - c[1])).collect();
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let spread = radii.iter().fold(0.0_f64, |m, r| m.max((r - mean).abs()));
    outcome(spread < 1e-6 && (mean - 0.45).abs() <= 0.01, format!("mean radius {mean:.6}, max deviation {spread:.2e}"))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

fn edm_round_trip() -> Outcome {
    let mut rng = Seed(3).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(d + 1..=50);
        let x = Configuration::new(uniform_matrix(&mut rng, n, d, -1.0, 1.0)).unwrap();
        let z = cmds(&x.distance_matrix(), d).unwrap();
        worst = worst.max(procrustes_distance(&z, &x).unwrap());
    }
    outcome(worst < 1e-8, format!("worst Procrustes distance {worst:.2e} over 100 configurations"))
}

fn truncation_optimality() -> Outcome {
    let mut rng = Seed(4).rng();
    let mut violations = 0;
    let mut closest = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=n);
        let g = uniform_matrix(&mut rng, n, n, -1.0, 1.0);
        let b = (&g + &g.t()) / 2.0;
        let best = low_rank_psd_truncation(b.view(), d).unwrap();
        for c_idx in 0..1000 {
            let c = if c_idx % 2 == 0 {
                let r = rng.random_range(1..=d);
                let f = uniform_matrix(&mut rng, n, r, -1.0, 1.0);
                f.dot(&f.t())
            } else {
                // rank-≤d PSD matrices near the optimum
                let noise = uniform_matrix(&mut rng, n, n, -1e-3, 1e-3);
                let p = &b + &((&noise + &noise.t()) / 2.0);
                low_rank_psd_truncation(p.view(), d).unwrap().matrix
            };
            let err = (&c - &b).mapv(|v| v * v).sum().sqrt();
            closest = closest.min(err - best.error);
            if err < best.error {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in 50 000 competitors; smallest margin {closest:.2e}"))
}

fn smacof_majorization() -> Outcome {
    let mut violations = 0;
    let mut steps = 0;
    for seed in 0..100 {
        let mut rng = Seed(500 + seed).rng();
        let n = rng.random_range(3..=40);
        let delta = DissimilarityMatrix::from_fn(n, |_, _| rng.random_range(0.05..3.0));
        let init = Configuration::new(uniform_matrix(&mut rng, n, 2, -1.0, 1.0)).unwrap();
        let params = StressParams { max_iters: 50, rel_tol: 0.0, weights: StressWeights::Unit };
        let res = smacof(&delta, &init, &params).unwrap();
        for w in res.trace.windows(2) {
            steps += 1;
            if w[1] > w[0] * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} increases in {steps} Guttman steps over 100 runs"))
}

fn min_length_lemma() -> Outcome {
    let sphere = ManifoldOracle::SpherePatch(SphereCap::new(PI).unwrap());
    let s = check_min_length_lemma(&sphere, 5000, Seed(6)).unwrap();
    let mut worst = s.min_margin;
    let mut trials = s.trials;
    for (k, radius) in [0.5, 1.0, 2.0, 1.0 / PI].into_iter().enumerate() {
        let r = check_min_length_lemma(&ManifoldOracle::circle(radius).unwrap(), 1250, Seed(60 + k as u64)).unwrap();
        worst = worst.min(r.min_margin);
        trials += r.trials;
    }
    outcome(
        worst >= -1e-9 && s.max_abs_margin <= 1e-9,
        format!("{trials} arcs, smallest margin {worst:.2e}, sphere equality gap {:.2e}", s.max_abs_margin),
    )
}

fn sandwich_run(oracle: &ManifoldOracle, cloud: &PointCloud, epsilon: f64, lambda: f64) -> (bool, String) {
    let delta = lambda * epsilon / 4.0;
    let ctx = bound_context(oracle, epsilon, delta, lambda, 0, Seed(0)).unwrap();
    let covering = check_delta_sampling(oracle, cloud, delta, 5000, Seed(7)).unwrap();
    let graph = build_graph(cloud, NeighborhoodRule::Epsilon(epsilon)).unwrap();
    let dg = shortest_paths(&graph, cloud, EdgeWeights::Euclidean).unwrap();
    let audit = audit_sandwich(oracle, cloud, &dg, &ctx).unwrap();
    let pass = ctx.hypotheses().all()
        && covering.satisfied
        && audit.mode == AuditMode::Certified
        && audit.violations_low == 0
        && audit.violations_high == 0;
    let detail = format!(
        "n={} ε={epsilon} δ={delta:.4} covering gap {:.4}, {} pairs, violations {}/{}, ratios [{:.4}, {:.4}]",
        cloud.len(),
        covering.worst_gap,
        audit.pairs,
        audit.violations_low,
        audit.violations_high,
        audit.worst_ratio_low,
        audit.worst_ratio_high
    );
    (pass, detail)
}

fn sandwich_certification() -> Outcome {
    let start = Instant::now();
    let circle = ManifoldOracle::circle(1.0).unwrap();
    let (ok_circle, circle_detail) = sandwich_run(&circle, &circle.equally_spaced(400).unwrap(), 0.5, 0.1);
    let cap = SphereCap::new(0.2).unwrap();
    let (ok_cap, cap_detail) =
        sandwich_run(&ManifoldOracle::SpherePatch(cap), &cap.fibonacci_lattice(1500).unwrap(), 0.4, 0.1);
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        ok_circle && ok_cap && elapsed < 60.0,
        format!("circle: {circle_detail}; sphere cap: {cap_detail}; {elapsed:.1}s"),
    )
}

fn sampling_lemma() -> Outcome {
    let oracle = ManifoldOracle::circle(1.0).unwrap();
    let delta = 0.2;
    let reference = oracle.sample(20_000, Seed(8)).unwrap();
    let cover = measure_cover(&oracle, &reference, delta / 2.0).unwrap();
    let n = 200;
    let bound = sampling_lemma_bound(cover.k(), cover.min_mass, n).unwrap();
    let freq = covering_frequency(&oracle, &cover, n, 500, Seed(9)).unwrap();
    outcome(
        freq.frequency >= bound - 3.0 * freq.standard_error,
        format!(
            "k={}, b={:.4}, n={n}: bound {bound:.4}, observed {:.4} ± {:.4}",
            cover.k(),
            cover.min_mass,
            freq.frequency,
            freq.standard_error
        ),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn annulus_run(annulus: Annulus, n: usize, seed: u64) -> (f64, f64, f64) {
    let oracle = ManifoldOracle::RectangularAnnulus(annulus);
    let cloud = oracle.sample(n, Seed(seed)).unwrap();
    let delta = oracle.distance_matrix(&cloud).unwrap();
    let init = cmds(&delta, 2).unwrap();
    let params = StressParams { max_iters: 20, rel_tol: 0.0, weights: StressWeights::Unit };
    let res = smacof(&delta, &init, &params).unwrap();
    let r = pearson(&delta.upper_triangle(), &res.config.distance_matrix().upper_triangle());
    (r, res.initial_stress(), res.final_stress())
}

fn projection_invariants() -> (bool, String) {
    let grid = synthetic_hemisphere_grid(19, 37).unwrap();
    let eq = equirectangular(&grid).unwrap();
    let meridian_exact = (0..grid.len()).all(|i| {
        (0..grid.len()).all(|j| {
            grid.points[i].lon != grid.points[j].lon
                || (eq.coords()[[i, 1]] - eq.coords()[[j, 1]]).abs() == (grid.points[i].lat - grid.points[j].lat).abs()
        })
    });
    let tm = transverse_mercator(&grid, WESTERN_CENTRAL_MERIDIAN).unwrap();
    let central_straight = tm
        .kept
        .iter()
        .enumerate()
        .all(|(row, &i)| grid.points[i].lon != WESTERN_CENTRAL_MERIDIAN || tm.config.coords()[[row, 0]] == 0.0);

    let mut rng = Seed(10).rng();
    let h = 1e-5;
    let lambert_at = |lat: f64, lon: f64| {
        let g = GeoPointSet::new(vec![GeoPoint::new(lat, lon).unwrap()]).unwrap();
        let z = lambert_azimuthal(&g, WESTERN_CENTRAL_MERIDIAN).unwrap().config.into_inner();
        [z[[0, 0]], z[[0, 1]]]
    };
    let mut worst_area: f64 = 0.0;
    for _ in 0..100 {
        let lat: f64 = rng.random_range(-1.3..1.3);
        let lon: f64 = rng.random_range(-2.8..-0.3);
        let (a, b) = (lambert_at(lat, lon + h), lambert_at(lat, lon - h));
        let (c, d) = (lambert_at(lat + h, lon), lambert_at(lat - h, lon));
        let det = ((a[0] - b[0]) * (c[1] - d[1]) - (a[1] - b[1]) * (c[0] - d[0])).abs() / (4.0 * h * h);
        worst_area = worst_area.max((det / lat.cos() - 1.0).abs());
    }
    let lambert = lambert_azimuthal(&grid, WESTERN_CENTRAL_MERIDIAN).unwrap();
    let map = mds_map(&grid, &StressParams::default(), 2).unwrap();
    let pass = meridian_exact
        && central_straight
        && worst_area < 1e-6
        && lambert.singular.is_empty()
        && map.final_stress <= map.initial_stress;
    (
        pass,
        format!(
            "grid of {} points: meridians exact {meridian_exact}, central meridian straight {central_straight} ({} singular dropped), equal-area error {worst_area:.1e}, MDS map stress {:.2} -> {:.2}",
            grid.len(),
            tm.singular.len(),
            map.initial_stress,
            map.final_stress
        ),
    )
}

fn annulus_pipeline() -> Outcome {
    let (r1, s1a, s1b) = annulus_run(Annulus::thin_frame(), 400, 36);
    let (r2, s2a, s2b) = annulus_run(Annulus::off_center_hole(), 600, 37);
    let (proj_ok, proj_detail) = projection_invariants();
    outcome(
        r1 >= THIN_FRAME_MIN_CORRELATION
            && r2 >= OFF_CENTER_MIN_CORRELATION
            && s1b <= s1a
            && s2b <= s2a
            && proj_ok,
        format!(
            "n=400 r={r1:.5} (>= {THIN_FRAME_MIN_CORRELATION}) stress {s1a:.1} -> {s1b:.1}; n=600 r={r2:.5} (>= {OFF_CENTER_MIN_CORRELATION}) stress {s2a:.1} -> {s2b:.1}; {proj_detail}"
        ),
    )
}

fn frechet_demo() -> Outcome {
    let mut rng = Seed(11).rng();
    let mut agree = 0;
    for _ in 0..20 {
        let n = rng.random_range(3..=60);
        let d = rng.random_range(1..=3);
        let x = Configuration::new(uniform_matrix(&mut rng, n, d, -1.0, 1.0)).unwrap();
        let delta = x.distance_matrix();
        let z = cmds(&delta, d).unwrap();
        if sample_frechet_mean(&delta).unwrap().index == embedded_frechet_mean(&z, &delta).unwrap().index {
            agree += 1;
        }
    }
    let oracle = ManifoldOracle::SpherePatch(SphereCap::new(0.6).unwrap());
    let cloud = oracle.sample(300, Seed(12)).unwrap();
    let delta = oracle.distance_matrix(&cloud).unwrap();
    let z = cmds(&delta, 2).unwrap();
    let brute = sample_frechet_mean(&delta).unwrap();
    let emb = embedded_frechet_mean(&z, &delta).unwrap();
    let ratio = emb.objective / brute.objective;
    outcome(
        agree == 20 && ratio <= FRECHET_RATIO,
        format!("faithful inputs agree {agree}/20; sphere cap objective ratio {ratio:.5} (<= {FRECHET_RATIO})"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-curve spectrum", closed_curve_spectrum),
        ("CMDS circle radius", cmds_circle_radius),
        ("EDM round trip", edm_round_trip),
        ("low-rank PSD optimality", truncation_optimality),
        ("SMACOF majorization", smacof_majorization),
        ("minimum length lemma", min_length_lemma),
        ("sandwich certification", sandwich_certification),
        ("sampling lemma", sampling_lemma),
        ("annulus pipeline and projections", annulus_pipeline),
        ("Frechet demonstration", frechet_demo),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
