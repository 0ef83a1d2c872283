//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so every line is printed; exits non-zero when any check fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skinsim_core::calibration::{evaluate_grid, extract_intervals, MacroGrid};
use skinsim_core::env_support::{action_to_targets, compute_reward, JointState, LowPassFilter, RewardInputs, RewardWeights};
use skinsim_core::randomization::sample_episodes;
use skinsim_core::skin_response::{solve_max_penetration, taxel_values, PenetrationSolution};
use skinsim_core::synthetic::{synthesize, SynthSpec};
use skinsim_core::{
    cast_rays, estimate_contact_point, local_penetrations, pen, rew, simulate_contact, ContactState, IndenterShape,
    MountingParams, Pose, RandomizationConfig, SceneSpec, SensorLayout, SkinParams, TactileImage, TactilePointSet,
    TriangleMesh, Vec3,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn fingertip_points(resolution: f64) -> TactilePointSet<f64> {
    TactilePointSet::build(
        SensorLayout::default().with_resolution(resolution),
        MountingParams::new(23.5, 0.0, 0.0, 10.0),
    )
    .unwrap()
}

fn sphere_at(points: &TactilePointSet<f64>, flat: [f64; 2], radius: f64, force: f64) -> ContactState<f64> {
    let (p, n) = points.mount().wrap_to_cylinder(flat);
    ContactState::new(n, force, IndenterShape::sphere(radius, p + n * radius).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn discretization() -> Outcome {
    let pts = fingertip_points(0.25);
    let per: Vec<usize> = (0..pts.taxel_count()).map(|j| pts.taxel_members(j).len()).collect();
    let pass = pts.len() == 14884 && per.iter().all(|n| *n == 100);
    outcome(pass, format!("{} points, {:?}..{:?} per taxel", pts.len(), per.iter().min(), per.iter().max()))
}

fn force_equilibrium() -> Outcome {
    let pts = fingertip_points(0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0;
    for k in 0..100 {
        let flat = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        let force = rng.random_range(0.5..=4.0);
        let e = rng.random_range(236.0..=848.0);
        let radius = rng.random_range(4.0..8.0);
        let (p, n) = pts.mount().wrap_to_cylinder(flat);
        let indenter = if k % 2 == 0 {
            IndenterShape::sphere(radius, p + n * radius).unwrap()
        } else {
            let axis = pts.mount().surface_tangent(flat, rng.random_range(0.0..180.0));
            IndenterShape::cylinder(radius, axis, 6.0, p + n * radius).unwrap()
        };
        let c = ContactState::new(n, force, indenter).unwrap();
        let rc = cast_rays(&pts, &c, None).unwrap();
        let sol = solve_max_penetration(&rc, &pts, &c, e).unwrap();
        let bound = e * 1e-3 * sol.active_area * 0.01;
        if !(sol.residual_force >= 0.0 && sol.residual_force <= bound) {
            bad += 1;
        }
        worst = worst.max(sol.residual_force / bound);
    }
    let c = sphere_at(&pts, [0.7, -1.3], 6.0, 1.0);
    let rc = cast_rays(&pts, &c, None).unwrap();
    let ramp: Vec<f64> = (0..20)
        .map(|i| {
            let f = 0.5 + 3.5 * i as f64 / 19.0;
            solve_max_penetration(&rc, &pts, &c.with_force(f), 542.0).unwrap().eps_max
        })
        .collect();
    let monotone = ramp.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        bad == 0 && monotone,
        format!("{bad}/100 residuals out of bounds, worst residual/bound {worst:.3}, ramp monotone {monotone}"),
    )
}

fn flat_punch() -> Outcome {
    // effectively flat skin, 2.5 mm square face flush over taxel 5
    let pts = TactilePointSet::build(SensorLayout::default(), MountingParams::new(0.0, 0.0, 0.0, 1.0e6)).unwrap();
    let [u, v] = pts.layout().taxel_center(5);
    let mesh = Arc::new(TriangleMesh::cuboid(Vec3::new(5.0, 1.25, 1.25)).unwrap());
    let pose = Pose::from_translation(Vec3::new(1.0e6 + 5.0, u, v));
    let c = ContactState::new(Vec3::x_axis(), 1.5625, IndenterShape::mesh(mesh, pose).unwrap()).unwrap();
    let params = SkinParams::uniform(500.0, 70.0, 16).unwrap();
    let (img, sol) = simulate_contact(&pts, &c, &params, None).unwrap();
    let e = 500.0e-3;
    let force = sol.residual_force + 1.5625;
    let closed_force = e * sol.eps_max * 6.25;
    let closed_value = 70.0 * e * sol.eps_max * 6.25;
    let rc = cast_rays(&pts, &c, None).unwrap();
    let half = PenetrationSolution {
        eps_max: 0.5,
        local_eps: local_penetrations(&rc, 0.5),
        residual_force: 0.0,
        active_area: 6.25,
    };
    let at_half = taxel_values(&rc, &pts, &half, &c, &params).unwrap().values()[5];
    let (r1, r2, r3) = (rel(force, closed_force), rel(img.values()[5], closed_value), rel(at_half, 109.375));
    outcome(
        r1 <= 0.01 && r2 <= 0.01 && r3 <= 0.01,
        format!(
            "force err {:.2e}, taxel err {:.2e}, value at 0.5 mm {at_half:.3} (err {r3:.2e})",
            r1, r2
        ),
    )
}

fn refinement() -> Outcome {
    let params = SkinParams::<f64>::default();
    let run = |res: f64| {
        let pts = fingertip_points(res);
        let c = sphere_at(&pts, [1.0, 0.5], 6.0, 1.5);
        let (img, sol) = simulate_contact(&pts, &c, &params, None).unwrap();
        (img, sol.residual_force + 1.5)
    };
    let (coarse, fc) = run(0.25);
    let (fine, ff) = run(0.025);
    let force_err = rel(fc, ff);
    // a taxel counts when it reads at least 1 after 8-bit rounding on the finer grid
    let mut worst = 0.0_f64;
    let mut active = 0;
    let mut grazing = Vec::new();
    for (j, (a, b)) in coarse.values().iter().zip(fine.values()).enumerate() {
        if *b >= 0.5 {
            active += 1;
            worst = worst.max(rel(*a, *b));
        } else if *a > 0.0 || *b > 0.0 {
            grazing.push(format!("t{j} {a:.3}/{b:.3}"));
        }
    }
    outcome(
        force_err <= 0.02 && worst <= 0.02,
        format!(
            "force {fc:.4} vs {ff:.4} N ({:.2}%), worst of {active} active taxels {:.2}%, sub-count taxels {grazing:?}",
            force_err * 100.0,
            worst * 100.0
        ),
    )
}

fn localization() -> Outcome {
    let pts = fingertip_points(0.25);
    let params = SkinParams::<f64>::default();
    let mut worst = (0.0, [0.0, 0.0]);
    let mut over = 0;
    let mut total = 0;
    for i in 0..=24 {
        for k in 0..=24 {
            let flat = [-6.0 + 0.5 * i as f64, -6.0 + 0.5 * k as f64];
            let c = sphere_at(&pts, flat, 6.0, 1.5);
            let (img, _) = simulate_contact(&pts, &c, &params, None).unwrap();
            total += 1;
            let err = match estimate_contact_point(&img, pts.layout()) {
                Some(p) => (p[0] - flat[0]).hypot(p[1] - flat[1]),
                None => f64::INFINITY,
            };
            if err >= 1.0 {
                over += 1;
            }
            if err > worst.0 {
                worst = (err, flat);
            }
        }
    }
    outcome(
        over == 0,
        format!(
            "{over}/{total} positions err >= 1 mm, worst {:.2} mm at {:?}",
            worst.0, worst.1
        ),
    )
}

/// Micro errors against the true contact points and the worst relative scale
/// error of one evaluated cell.
fn cell_recovery(
    cell: &skinsim_core::calibration::CellResult<f64>,
    setup: &skinsim_core::CalibrationSetup<f64>,
    true_coords: &[[f64; 2]],
    s_true: f64,
) -> (Vec<f64>, f64) {
    let micro_err = cell
        .micro
        .iter()
        .zip(true_coords)
        .map(|(m, t)| match m {
            Some(m) => {
                let e = setup.surface_coords(&m.estimated_position);
                (e[0] - t[0]).hypot(e[1] - t[1])
            }
            None => f64::INFINITY,
        })
        .collect();
    let s_worst = cell.scales.iter().map(|s| rel(*s, s_true)).fold(0.0, f64::max);
    (micro_err, s_worst)
}

fn calibration_recovery() -> Outcome {
    let spec = SynthSpec {
        samples: 24,
        seed: 7,
        ..Default::default()
    };
    let synth = synthesize(&spec).unwrap();
    let setup = spec.setup();
    let truth = spec.truth();
    let s_true = spec.scales[0];
    let grid = MacroGrid {
        y: vec![22.5, 23.5, 24.5],
        beta_deg: vec![-2.5, 0.0, 2.5],
        alpha_deg: vec![-5.0, 0.0, 5.0],
        elasticity: vec![400.0, 542.0, 700.0],
    };
    let losses = evaluate_grid(&synth.dataset, &grid, &setup).unwrap();
    let cell = losses
        .cells
        .iter()
        .find(|c| c.params == truth)
        .expect("truth lies on the grid");
    let (micro_err, s_worst) = cell_recovery(cell, &setup, &synth.true_coords, s_true);
    let micro_ok = micro_err.iter().filter(|e| **e <= 0.5).count();
    let micro_max = micro_err.iter().copied().fold(0.0, f64::max);
    let inside = |r: [f64; 2], v: f64| r[0] <= v && v <= r[1];
    let contains = match extract_intervals(&losses, 25.0) {
        Ok(iv) => {
            inside(iv.y_mm, truth.y)
                && inside(iv.beta_deg, truth.beta_deg)
                && inside(iv.alpha_deg, truth.alpha_deg)
                && inside(iv.elasticity, truth.elasticity)
                && inside(iv.scale, s_true)
        }
        Err(_) => false,
    };
    let pass = contains && micro_ok == micro_err.len() && s_worst <= 0.10 && cell.loss <= 25.0;

    // same contacts without taxel noise or rounding, true cell only
    let clean_spec = SynthSpec {
        taxel_offset: [0.0, 0.0],
        taxel_noise_std: [0.0, 0.0],
        quantize: false,
        active_threshold: 0.0,
        ..spec.clone()
    };
    let clean = synthesize(&clean_spec).unwrap();
    let one = MacroGrid {
        y: vec![truth.y],
        beta_deg: vec![truth.beta_deg],
        alpha_deg: vec![truth.alpha_deg],
        elasticity: vec![truth.elasticity],
    };
    let clean_cell = &evaluate_grid(&clean.dataset, &one, &setup).unwrap().cells[0];
    let (clean_err, clean_s) = cell_recovery(clean_cell, &setup, &clean.true_coords, s_true);
    outcome(
        pass,
        format!(
            "true-cell loss {:.2}, intervals contain truth {contains}, micro within 0.5 mm {micro_ok}/{} (max {micro_max:.2} mm), \
             worst S_j error {:.0}%; noise-free: micro {}/{}, worst S_j error {:.0}%",
            cell.loss,
            micro_err.len(),
            s_worst * 100.0,
            clean_err.iter().filter(|e| **e <= 0.5).count(),
            clean_err.len(),
            clean_s * 100.0
        ),
    )
}

fn shaping_anchors() -> Outcome {
    let dx = 0.7;
    let mut pass = pen(dx / 2.0, dx).unwrap() == 0.5
        && pen(0.0, dx).unwrap() == 0.0
        && pen(dx, dx).unwrap() == 1.0
        && rew(0.0, dx).unwrap() == 1.0
        && rew(dx / 2.0, dx).unwrap() == 0.5
        && rew(dx, dx).unwrap() == 0.0
        && rew(dx * (1.0 + 1e-12), dx).unwrap() == 0.0;
    let js = JointState::new(vec![-1.5; 6], vec![1.5; 6], vec![1.0; 6], vec![2.0; 6], vec![1.0; 6]);
    let qdot = [0.0; 6];
    let w = RewardWeights {
        lambda_p: 0.7,
        lambda_f: 1.3,
        lambda_g: 2.0,
        lambda_alpha: 0.4,
        ..Default::default()
    };
    let mut inputs = RewardInputs {
        target_mm: [1.0, -2.0],
        contact_point_mm: Some([1.0, -2.0]),
        normal_force: w.force_target_n,
        correct_contact: true,
        bolt_angles_deg: None,
        joints: &js,
        qdot: &qdot,
    };
    let marble = compute_reward(&inputs, &w).unwrap().total;
    inputs.bolt_angles_deg = Some((30.0, 30.0));
    let bolt = compute_reward(&inputs, &w).unwrap().total;
    pass &= marble == w.lambda_p + w.lambda_f + w.lambda_g && bolt == w.lambda_p + w.lambda_f + w.lambda_g + w.lambda_alpha;
    outcome(pass, format!("peak reward marble {marble}, bolt {bolt}"))
}

fn action_filter() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut js = JointState::new(
        vec![-1.0, -0.5, 0.0, -1.0, -0.5, 0.0],
        vec![1.0, 0.5, 1.5, 1.0, 0.5, 1.5],
        vec![1.0, 2.0, 0.5, 1.0, 2.0, 0.5],
        vec![2.0; 6],
        vec![1.0; 6],
    );
    let f_cont = 10.0;
    let mut violations = 0;
    for _ in 0..10_000 {
        let a: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q = action_to_targets(&a, &js, f_cont).unwrap();
        for i in 0..6 {
            let step = (q[i] - js.q_d[i]).abs();
            if q[i] < js.q_min[i] || q[i] > js.q_max[i] || step > js.qdot_max[i] / f_cont + 1e-12 {
                violations += 1;
            }
        }
        js.q_d = q;
    }
    let tau = 0.05;
    let mut filt = LowPassFilter::new(vec![0.0], 1000.0, tau).unwrap();
    for _ in 0..(1000.0 * tau) as usize {
        filt.step(&[1.0]);
    }
    let at_tau = filt.output()[0];
    let expect = 1.0 - (-1.0_f64).exp();
    let r = rel(at_tau, expect);
    outcome(
        violations == 0 && r <= 0.01,
        format!("{violations} limit/rate violations in 60000 joint steps, step response at tau {at_tau:.4} (err {:.2e})", r),
    )
}

fn sweep_scene() -> SceneSpec {
    SceneSpec::from_json(
        r#"{"indenter": {"shape": "sphere", "radius_mm": 6}, "force_N": [[0, 1.0], [0.5, 2.0]],
            "trajectory": [{"t_s": 0, "frame": "sensor", "at_mm": [-5, 1]},
                           {"t_s": 0.5, "frame": "sensor", "at_mm": [5, -1]}]}"#,
    )
    .unwrap()
}

fn determinism() -> Outcome {
    let pts = fingertip_points(0.25);
    let params = SkinParams::<f64>::default();
    let mut d_same = true;
    for flat in [[0.0, 0.0], [1.3, -2.2], [-4.1, 3.7]] {
        let c = sphere_at(&pts, flat, 6.0, 2.0);
        let (a, _) = simulate_contact(&pts, &c, &params, Some(20.0)).unwrap();
        let (b, _) = simulate_contact(&pts, &c, &params, Some(250.0)).unwrap();
        let (auto, _) = simulate_contact(&pts, &c, &params, None).unwrap();
        let bits = |i: &TactileImage<f64>| i.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        d_same &= bits(&a) == bits(&b) && bits(&a) == bits(&auto);
    }
    let cfg = RandomizationConfig::default();
    let r1 = serde_json::to_string(&sample_episodes(&cfg, 50, 11).unwrap()).unwrap();
    let r2 = serde_json::to_string(&sample_episodes(&cfg, 50, 11).unwrap()).unwrap();
    let draws_same = r1 == r2;

    let strip = |evals: Vec<skinsim_core::scene::Evaluation>| {
        evals
            .into_iter()
            .map(|mut e| {
                e.eval_ms = 0.0;
                serde_json::to_string(&e).unwrap()
            })
            .collect::<Vec<_>>()
    };
    let scene = sweep_scene().load(std::path::Path::new(".")).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = strip(one.install(|| scene.run(20.0)).unwrap());
    let parallel = strip(scene.run(20.0).unwrap());
    let again = strip(sweep_scene().load(std::path::Path::new(".")).unwrap().run(20.0).unwrap());
    let sweep_same = serial == parallel && serial == again;
    outcome(
        d_same && draws_same && sweep_same,
        format!(
            "shift invariance {d_same}, randomization streams {draws_same}, sweep outputs {sweep_same} ({} evaluations)",
            serial.len()
        ),
    )
}

fn performance() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let pts = fingertip_points(0.25);
        let params = SkinParams::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let contacts: Vec<ContactState<f64>> = (0..40)
            .map(|_| {
                let flat = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                sphere_at(&pts, flat, 6.0, rng.random_range(0.5..4.0))
            })
            .collect();
        // warm-up
        simulate_contact(&pts, &contacts[0], &params, None).unwrap();
        let mut full = Vec::new();
        let mut search = Vec::new();
        for c in &contacts {
            let t = Instant::now();
            std::hint::black_box(simulate_contact(&pts, c, &params, None).unwrap());
            full.push(t.elapsed().as_secs_f64() * 1e3);
            let rc = cast_rays(&pts, c, None).unwrap();
            let t = Instant::now();
            std::hint::black_box(solve_max_penetration(&rc, &pts, c, params.elasticity).unwrap());
            search.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let (f, s) = (median(full), median(search));
        outcome(
            f <= 52.0 && s <= 1.0,
            format!("median full evaluation {f:.2} ms (budget 52), equilibrium search {s:.3} ms (budget 1), one thread"),
        )
    })
}

fn main() {
    let checks: [(&str, fn() -> Outcome, Duration); 10] = [
        ("discretization count", discretization, Duration::from_secs(1)),
        ("force equilibrium", force_equilibrium, Duration::from_secs(30)),
        ("flat-punch closed form", flat_punch, Duration::from_secs(1)),
        ("refinement oracle", refinement, Duration::from_secs(60)),
        ("sub-taxel localization", localization, Duration::from_secs(60)),
        ("calibration recovery", calibration_recovery, Duration::from_secs(600)),
        ("shaping-function anchors", shaping_anchors, Duration::from_secs(1)),
        ("action/filter contracts", action_filter, Duration::from_secs(1)),
        ("shift invariance and determinism", determinism, Duration::from_secs(5)),
        ("performance", performance, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check, budget)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {}  {} [{:.2} s of {} s]",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
