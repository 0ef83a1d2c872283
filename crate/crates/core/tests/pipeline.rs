use skinsim_core::env_support::{EnvConfig, PinchEnv};
use skinsim_core::randomization::{instance_rng, perturb_step, sample_episode};
use skinsim_core::*;

fn press<T: Real>(flat: [f64; 2], force: f64) -> TactileImage<T> {
    let points = TactilePointSet::build(
        SensorLayout::<T>::default(),
        MountingParams::new(T::lit(23.5), T::zero(), T::zero(), T::lit(10.0)),
    )
    .unwrap();
    let (p, n) = points.mount().wrap_to_cylinder([T::lit(flat[0]), T::lit(flat[1])]);
    let r = T::lit(6.0);
    let contact = ContactState::new(n, T::lit(force), IndenterShape::sphere(r, p + n * r).unwrap()).unwrap();
    simulate_contact(&points, &contact, &SkinParams::default(), None).unwrap().0
}

#[test]
fn single_and_double_precision_agree() {
    let a: TactileImage64 = press([0.7, -1.1], 2.0);
    let b: TactileImage32 = press([0.7, -1.1], 2.0);
    let peak = a.max();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - *y as f64).abs() <= 0.02 * peak, "{x} vs {y}");
    }
}

#[test]
fn randomized_step_perturbs_a_simulated_image() {
    let cfg = RandomizationConfig {
        quantize: true,
        ..Default::default()
    };
    let draw = sample_episode(&cfg, 4).unwrap();
    let image: TactileImage64 = press([2.0, 2.0], 1.5);
    let mut rng = instance_rng(4, 1);
    let (joints, noisy) = perturb_step(&draw, &[0.0; 6], &image, &mut rng).unwrap();
    assert_eq!(joints.len(), 6);
    assert!(noisy.values().iter().all(|v| v.fract() == 0.0 && (0.0..=255.0).contains(v)));
    assert_ne!(noisy, image);
}

#[test]
fn environment_episode_is_reproducible() {
    let run = || {
        let mut env = PinchEnv::new(EnvConfig::default(), 3).unwrap();
        let mut obs = vec![env.reset().unwrap()];
        for k in 0..20 {
            let a = [0.3, -0.2, 0.1 * (k % 3) as f64, -0.3, 0.2, 0.0];
            let step = env.step(&a).unwrap();
            obs.push(step.observation.clone());
            if step.terminated || step.truncated {
                break;
            }
        }
        obs
    };
    assert_eq!(run(), run());
}
