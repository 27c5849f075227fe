//! Received-pilot model against the dense sensing matrices, and noise statistics.

mod common;

use common::{h_eff, links, measurement_cfg, worst_measurement_error};
use irs_ce::config::{PilotVariant, SystemConfig};
use irs_ce::pilot::{assemble_sensing, build_pilot_book, simulate_rx};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn noiseless_observations_equal_sensing_times_effective_channel() {
    let worst = worst_measurement_error();
    assert!(worst < 1e-12, "worst relative error {worst:e}");
}

#[test]
fn nlos_interference_breaks_the_los_only_model() {
    let cfg = SystemConfig {
        nlos_bs_irs: 3,
        ..measurement_cfg()
    };
    let l = links(&cfg, true, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pb = build_pilot_book(&cfg, 20, 1.0, l.aod, PilotVariant::Designed, &mut rng).unwrap();
    let los: Vec<_> = (0..cfg.subcarriers).map(|k| l.g.los_matrix(k)).collect();
    let phi = assemble_sensing(&pb, &los).unwrap();
    let y = simulate_rx(&pb, &l.hd, &l.g, &l.hr, 0.0, &mut rng).unwrap();
    let k = 2;
    let expected = &phi[k] * h_eff(&l, k);
    assert!((&y[k] - expected).norm() > 0.0);
}

#[test]
fn noise_variance_matches_sigma_squared() {
    let cfg = measurement_cfg();
    let sigma2 = 2.5e-3;
    let l = links(&cfg, true, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pb = build_pilot_book(&cfg, 32, 1.0, l.aod, PilotVariant::Designed, &mut rng).unwrap();
    let clean = simulate_rx(&pb, &l.hd, &l.g, &l.hr, 0.0, &mut rng).unwrap();
    let mut acc = 0.0;
    let mut re = 0.0;
    let mut count = 0usize;
    for trial in 0..100u64 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(100 + trial);
        let noisy = simulate_rx(&pb, &l.hd, &l.g, &l.hr, sigma2, &mut noise_rng).unwrap();
        for (a, b) in noisy.iter().zip(&clean) {
            for z in (a - b).iter() {
                acc += z.norm_sqr();
                re += z.re * z.re;
                count += 1;
            }
        }
    }
    let var = acc / count as f64;
    assert!(
        (var / sigma2 - 1.0).abs() < 0.03,
        "variance {var:e} vs {sigma2:e}"
    );
    // circular: half the power in the real part
    assert!((re / acc - 0.5).abs() < 0.01);
}
