use idt_core::baselines::amf;
use idt_core::metrics::psnr;
use idt_core::noise::{
    add_mixed, add_rvin, add_spn, corrupt, gen_synthetic_pair, smooth_test_image,
};
use idt_core::{NoiseSpec, Plan};
use ndarray::Array2;

#[test]
fn mask_fraction_concentrates() {
    let x = Array2::from_elem((512, 512), 128.0f64);
    let inst = add_spn(&x, &NoiseSpec::spn(0.5, 17)).unwrap();
    let f = inst.corrupted_fraction();
    assert!((0.494..=0.506).contains(&f), "{f}");
}

#[test]
fn clean_entries_survive_and_fraction_is_near_nominal() {
    for seed in 0..30 {
        let x = smooth_test_image::<f64>(40, 30, seed);
        for spec in [
            NoiseSpec::spn(0.3, seed),
            NoiseSpec::rvin(0.2, seed),
            NoiseSpec::missing(0.4, seed),
        ] {
            let inst = corrupt(&x, &spec).unwrap();
            for ((y, g), m) in inst.y.iter().zip(&inst.ground_truth).zip(&inst.mask) {
                if !m {
                    assert_eq!(y, g);
                }
            }
            let slack = 2.0 / (x.len() as f64).sqrt();
            assert!((inst.corrupted_fraction() - spec.density).abs() <= slack + 0.05);
        }
    }
}

#[test]
fn rvin_values_are_uniform_on_the_range() {
    let x = Array2::from_elem((1000, 1000), 0.0f64);
    let inst = add_rvin(&x, &NoiseSpec::rvin(1.0, 5)).unwrap();
    let mean = inst.y.mean().unwrap();
    assert!((mean - 127.5).abs() < 1.0, "{mean}");
    assert!(inst.y.iter().all(|v| (0.0..=255.0).contains(v)));
}

#[test]
fn mixed_noise_totals_both_densities() {
    let x = Array2::from_elem((512, 512), 100.0f64);
    let inst = add_mixed(&x, &NoiseSpec::mixed(0.25, 0.15, 9)).unwrap();
    assert!((inst.corrupted_fraction() - 0.40).abs() < 0.01);
    let extreme =
        inst.y.iter().filter(|v| **v == 0.0 || **v == 255.0).count() as f64 / x.len() as f64;
    assert!((extreme - 0.25).abs() < 0.01);
}

#[test]
fn synthetic_amplitudes_have_the_requested_variance() {
    let pair = gen_synthetic_pair::<f64>(400, 250, 1.0, 0.0, 128.0, 21).unwrap();
    let n = pair.x0.len() as f64;
    let mean = pair.x0.sum() / n;
    let var = pair.x0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    assert!((var - 128.0).abs() < 3.0, "{var}");
}

#[test]
fn synthetic_observation_is_the_model() {
    let pair = gen_synthetic_pair::<f64>(16, 12, 0.2, 0.1, 128.0, 4).unwrap();
    let plan = Plan::new(16, 12).unwrap();
    let model = &plan.inverse(&pair.x0).unwrap() + &pair.n0;
    assert!((&model - &pair.y).iter().all(|v| v.abs() < 1e-12));
    let zero = gen_synthetic_pair::<f64>(8, 8, 0.0, 0.0, 128.0, 4).unwrap();
    assert!(zero.y.iter().all(|v| *v == 0.0));
}

#[test]
fn amf_is_nearly_idempotent() {
    for seed in 0..3 {
        let x = smooth_test_image::<f64>(64, 64, seed);
        let y = corrupt(&x, &NoiseSpec::spn(0.3, seed)).unwrap().y;
        let once = amf(&y, 19).unwrap();
        let twice = amf(&once, 19).unwrap();
        let (p1, p2) = (
            psnr(&once, &x, 255.0).unwrap(),
            psnr(&twice, &x, 255.0).unwrap(),
        );
        assert!((p1 - p2).abs() < 1.0, "{p1} vs {p2}");
    }
}
