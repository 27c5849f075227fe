//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use irs_ce::channel::{assemble_freq_channels, sample_link, FreqChannelSet, LinkChannel, LinkKind};
use irs_ce::config::{PilotVariant, SystemConfig};
use irs_ce::dictionary::{effective_dictionary, redundant_dictionary, EffectiveDictionary};
use irs_ce::geometry::{AnglePair, ArrayDims};
use irs_ce::pilot::{assemble_sensing, build_pilot_book};
use irs_ce::recovery::{DenseSensing, SubcarrierSensing};
use irs_ce::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 2x2 arrays, four subcarriers.
pub fn tiny_cfg() -> SystemConfig {
    SystemConfig {
        bs_dims: [2, 2],
        irs_dims: [2, 2],
        subcarriers: 4,
        cp_len: 4,
        bandwidth_hz: 25e6,
        bs_irs_m: 20.0,
        bs_user_m: 20.0,
        irs_user_m: 10.0,
        ..SystemConfig::paper()
    }
}

/// Mixed 2x3 / 3x2 arrays with NLoS on every link.
pub fn synthesis_cfg() -> SystemConfig {
    SystemConfig {
        bs_dims: [2, 3],
        irs_dims: [3, 2],
        subcarriers: 8,
        cp_len: 8,
        bandwidth_hz: 25e6,
        bs_irs_m: 30.0,
        bs_user_m: 30.0,
        irs_user_m: 10.0,
        nlos_bs_irs: 3,
        nlos_bs_user: 2,
        nlos_irs_user: 2,
        ..SystemConfig::paper()
    }
}

/// 4x4 arrays, eight subcarriers, LoS-only BS-IRS link.
pub fn measurement_cfg() -> SystemConfig {
    SystemConfig {
        bs_dims: [4, 4],
        irs_dims: [4, 4],
        subcarriers: 8,
        cp_len: 8,
        bandwidth_hz: 25e6,
        bs_irs_m: 30.0,
        bs_user_m: 30.0,
        irs_user_m: 10.0,
        nlos_bs_irs: 0,
        ..SystemConfig::paper()
    }
}

pub fn dictionaries(cfg: &SystemConfig, ratio: usize) -> EffectiveDictionary {
    let grid = |d| SystemConfig::dict_grid(d, ratio);
    effective_dictionary(
        redundant_dictionary(cfg.bs(), grid(cfg.bs())).unwrap(),
        redundant_dictionary(cfg.irs(), grid(cfg.irs())).unwrap(),
    )
}

fn cg<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Sensing matrices `Phi_k Psi` built from a random LoS matrix per subcarrier.
pub fn sensing(
    cfg: &SystemConfig,
    eff: &EffectiveDictionary,
    n_p: usize,
    seed: u64,
) -> DenseSensing {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let aod = AnglePair::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).unwrap();
    let pb = build_pilot_book(cfg, n_p, 1.0, aod, PilotVariant::FullyRandom, &mut rng).unwrap();
    let (n, m) = (cfg.irs().len(), cfg.bs().len());
    let los: Vec<_> = (0..cfg.subcarriers)
        .map(|_| DMatrix::from_fn(n, m, |_, _| cg(&mut rng)))
        .collect();
    let psi = eff.psi();
    DenseSensing::new(
        assemble_sensing(&pb, &los)
            .unwrap()
            .into_iter()
            .map(|phi| phi * &psi)
            .collect(),
    )
    .unwrap()
}

/// Joint least-squares residual of `y` on the columns `cols` of every `B_k`.
pub fn ls_residual(b: &DenseSensing, y: &[DVector<C64>], cols: &[usize]) -> f64 {
    b.matrices()
        .iter()
        .zip(y)
        .map(|(bk, yk)| {
            let sub =
                DMatrix::from_columns(&cols.iter().map(|&j| bk.column(j)).collect::<Vec<_>>());
            let x = sub.clone().svd(true, true).solve(yk, 1e-12).unwrap();
            (yk - sub * x).norm_squared()
        })
        .sum()
}

/// Lowest-index subset of size `s` (1 or 2) with the smallest joint LS residual.
pub fn best_subset(b: &DenseSensing, y: &[DVector<C64>], s: usize) -> Vec<usize> {
    let cols = b.cols();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |set: Vec<usize>| {
        let r = ls_residual(b, y, &set);
        let better = match &best {
            None => true,
            Some((rb, _)) => r < rb - 1e-12 * (1.0 + rb.abs()),
        };
        if better {
            best = Some((r, set));
        }
    };
    match s {
        1 => (0..cols).for_each(|i| consider(vec![i])),
        2 => {
            for i in 0..cols {
                for j in i + 1..cols {
                    consider(vec![i, j]);
                }
            }
        }
        _ => unreachable!(),
    }
    best.unwrap().1
}

/// Observations of a random signal on `support`, common to all subcarriers.
pub fn planted(b: &DenseSensing, support: &[usize], rng: &mut ChaCha8Rng) -> Vec<DVector<C64>> {
    b.matrices()
        .iter()
        .map(|bk| {
            let mut x = DVector::zeros(b.cols());
            for &j in support {
                let mag = rng.gen_range(0.5..1.5);
                x[j] = C64::from_polar(mag, rng.gen_range(0.0..std::f64::consts::TAU));
            }
            bk * x
        })
        .collect()
}

/// Outcome of the exhaustive-search comparison.
pub struct OracleTally {
    /// DOMP support identical to the lowest-index best subset.
    pub identical: usize,
    /// DOMP support identical, or reaching the same optimal residual.
    pub optimal: usize,
    pub instances: usize,
}

/// DOMP against exhaustive best-subset search on 2x2 arrays with
/// `G_M = G_N = 8` and `s` alternating between 1 and 2.
pub fn oracle_agreement(instances: u64) -> OracleTally {
    use irs_ce::recovery::{domp, DompOptions};
    let cfg = tiny_cfg();
    let eff = dictionaries(&cfg, 2);
    assert_eq!(eff.shape(), (8, 16));
    let mut tally = OracleTally {
        identical: 0,
        optimal: 0,
        instances: instances as usize,
    };
    for instance in 0..instances {
        let b = sensing(&cfg, &eff, 6, instance);
        let mut rng = ChaCha8Rng::seed_from_u64(500 + instance);
        let s = 1 + (instance % 2) as usize;
        let mut support: Vec<usize> = Vec::new();
        while support.len() < s {
            let j = rng.gen_range(0..b.cols());
            if !support.contains(&j) {
                support.push(j);
            }
        }
        let y = planted(&b, &support, &mut rng);
        let opts = DompOptions {
            max_iterations: Some(s),
            ..DompOptions::new(1e-24).with_normalized_columns(true)
        };
        let mut got = domp(&y, &b, opts).unwrap().support;
        got.sort();
        let best = best_subset(&b, &y, s);
        // three atoms sharing a row of the grid span only two dimensions on a
        // 2-element axis, so several subsets can reach the optimum
        let scale = y.iter().map(|v| v.norm_squared()).sum::<f64>();
        let tie = ls_residual(&b, &y, &got) <= ls_residual(&b, &y, &best) + 1e-20 * scale;
        if got == best {
            tally.identical += 1;
        }
        if got == best || tie {
            tally.optimal += 1;
        }
    }
    tally
}

/// Raised-cosine impulse response, written out independently of the library.
pub fn pulse(t: f64, ts: f64, beta: f64) -> f64 {
    let x = t / ts;
    let sinc = if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    };
    let d = 1.0 - (2.0 * beta * x).powi(2);
    if d.abs() < 1e-9 {
        PI / 4.0 * sinc
    } else {
        sinc * (PI * beta * x).cos() / d
    }
}

/// Steering vector by direct evaluation of the planar phase ramp.
pub fn steering(dims: ArrayDims, a: AnglePair) -> Vec<C64> {
    let n = dims.len() as f64;
    let mut out = vec![C64::default(); dims.len()];
    for mx in 0..dims.nx() {
        for my in 0..dims.ny() {
            let phase =
                PI * (mx as f64 * a.theta().sin() + my as f64 * a.theta().cos() * a.phi().sin());
            out[mx * dims.ny() + my] = C64::from_polar(1.0 / n.sqrt(), phase);
        }
    }
    out
}

/// `sum_d G[d] exp(j 2 pi k d / K)` where `G[d]` is the delay-domain channel
/// matrix sampled at `d T_s`. Vector links are returned as a `1 x M` row.
pub fn delay_then_dft(link: &LinkChannel, cfg: &SystemConfig, k: usize) -> DMatrix<C64> {
    let ts = cfg.sample_period();
    let tx_len = link.tx_dims.len();
    let rx_len = link.rx_dims.map_or(1, |d| d.len());
    let mut out = DMatrix::zeros(rx_len, tx_len);
    for d in 0..cfg.cp_len {
        let mut taps = DMatrix::<C64>::zeros(rx_len, tx_len);
        for p in link.paths() {
            let amp = p.gain / p.large_scale * pulse(d as f64 * ts - p.delay_s, ts, cfg.rolloff);
            let at = steering(link.tx_dims, p.aod);
            let ar = match (link.rx_dims, p.aoa) {
                (Some(dims), Some(aoa)) => steering(dims, aoa),
                _ => vec![C64::new(1.0, 0.0)],
            };
            for r in 0..rx_len {
                for t in 0..tx_len {
                    taps[(r, t)] += amp * ar[r] * at[t].conj();
                }
            }
        }
        let w = C64::from_polar(1.0, 2.0 * PI * (k * d) as f64 / cfg.subcarriers as f64);
        out += taps * w;
    }
    out
}

/// Worst relative deviation between the library's frequency channels and
/// [`delay_then_dft`] over `instances` random links.
pub fn worst_dft_error(instances: u64) -> f64 {
    let cfg = synthesis_cfg();
    let kinds = [LinkKind::BsToIrs, LinkKind::BsToUser, LinkKind::IrsToUser];
    let mut worst: f64 = 0.0;
    for instance in 0..instances {
        let kind = kinds[instance as usize % 3];
        let blocked = instance % 2 == 0;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + instance);
        let link = sample_link(&cfg, kind, blocked, &mut rng).unwrap();
        let freq = assemble_freq_channels(&link, &cfg);
        for k in 0..cfg.subcarriers {
            let oracle = delay_then_dft(&link, &cfg, k);
            let rel = (&freq.matrix(k) - &oracle).norm() / oracle.norm();
            worst = worst.max(rel);
        }
    }
    worst
}

/// The three frequency-domain links of a test scene.
pub struct Links {
    pub hd: FreqChannelSet,
    pub g: FreqChannelSet,
    pub hr: FreqChannelSet,
    pub aod: AnglePair,
}

pub fn links(cfg: &SystemConfig, blocked: bool, seed: u64) -> Links {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sample_link(cfg, LinkKind::BsToIrs, blocked, &mut rng).unwrap();
    let hd = sample_link(cfg, LinkKind::BsToUser, blocked, &mut rng).unwrap();
    let hr = sample_link(cfg, LinkKind::IrsToUser, blocked, &mut rng).unwrap();
    let aod = g.los_path.as_ref().unwrap().aod;
    Links {
        hd: assemble_freq_channels(&hd, cfg),
        g: assemble_freq_channels(&g, cfg),
        hr: assemble_freq_channels(&hr, cfg),
        aod,
    }
}

/// `[h_d,k ; h_r,k]`.
pub fn h_eff(l: &Links, k: usize) -> DVector<C64> {
    let d = l.hd.row(k);
    let r = l.hr.row(k);
    DVector::from_iterator(d.len() + r.len(), d.iter().chain(r.iter()).copied())
}

/// Worst relative deviation of noiseless observations from `Phi_k h_eff,k`
/// with no BS-IRS NLoS, over both pilot variants and both user kinds.
pub fn worst_measurement_error() -> f64 {
    use irs_ce::pilot::{simulate_rx, LosSensing};
    let cfg = measurement_cfg();
    let mut worst: f64 = 0.0;
    for (seed, variant) in [(1, PilotVariant::Designed), (2, PilotVariant::FullyRandom)] {
        for blocked in [true, false] {
            let l = links(&cfg, blocked, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
            let pb = build_pilot_book(&cfg, 20, 3.0, l.aod, variant, &mut rng).unwrap();
            let los: Vec<_> = (0..cfg.subcarriers).map(|k| l.g.los_matrix(k)).collect();
            let phi = assemble_sensing(&pb, &los).unwrap();
            let y = simulate_rx(&pb, &l.hd, &l.g, &l.hr, 0.0, &mut rng).unwrap();
            let factored = LosSensing::new(&pb, &l.g, true).unwrap();
            for k in 0..cfg.subcarriers {
                let expected = &phi[k] * h_eff(&l, k);
                worst = worst.max((&y[k] - &expected).norm() / expected.norm());
                worst = worst.max((factored.phi(k) - &phi[k]).norm() / phi[k].norm());
            }
        }
    }
    worst
}
