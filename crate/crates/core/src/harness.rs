//! Seeded Monte Carlo trials, sweeps and CSV reports.
//!
//! Randomness is keyed by `(master_seed, trial_index)` only. Each trial owns
//! three ChaCha streams (channel, pilots, noise), so a trial sees the same
//! channel, pilot phases and noise shape at every sweep point and under any
//! thread schedule.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    assemble_freq_channels, sample_link_with, AngleDraw, FreqChannelSet, LinkKind,
};
use crate::config::{dbm_to_watts, Method, PilotVariant, SystemConfig, UserKind};
use crate::dictionary::{effective_dictionary, redundant_dictionary, EffectiveDictionary};
use crate::error::{Error, Result};
use crate::geometry::AnglePair;
use crate::pilot::{build_pilot_book, simulate_rx, LosSensing, PilotBook};
use crate::recovery::{domp, linear_to_db, nmse_linear, DompOptions, LsSolver, ScaledSensing};
use crate::C64;

/// Frozen header of the summary report.
pub const REPORT_HEADER: &str =
    "sweep_param,sweep_value,method,user_kind,nmse_db_mean,nmse_db_stderr,trials,seed,config_hash";

/// Header of the per-trial CSV written for each sweep point.
pub const TRIALS_HEADER: &str =
    "trial_index,method,sweep_value,nmse_hd_db,nmse_hr_db,nmse_db,iterations,converged";

#[derive(Debug, Clone, Copy)]
enum Stream {
    Channel = 0,
    Pilots = 1,
    Noise = 2,
}

/// Generator for one purpose within one trial. Streams are disjoint ChaCha
/// streams of the master seed.
fn trial_rng(master_seed: u64, trial_index: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index * 4 + stream as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Ptx,
    PilotRatio,
    DictRatio,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Ptx => "ptx",
            SweepAxis::PilotRatio => "rp",
            SweepAxis::DictRatio => "rdic",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ptx" => Ok(SweepAxis::Ptx),
            "rp" => Ok(SweepAxis::PilotRatio),
            "rdic" => Ok(SweepAxis::DictRatio),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep axis `{other}`"
            ))),
        }
    }
}

/// Operating point of one trial evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub ptx_dbm: f64,
    pub pilot_ratio: f64,
    pub dict_ratio: usize,
    pub method: Method,
}

impl TrialSpec {
    /// Top of the P_Tx list, the configured ratios and pilot variant.
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            ptx_dbm: *cfg.ptx_dbm.last().expect("validated"),
            pilot_ratio: cfg.pilot_ratio,
            dict_ratio: cfg.dict_ratio,
            method: match cfg.pilot_variant {
                PilotVariant::Designed => Method::DompDesigned,
                PilotVariant::FullyRandom => Method::DompFullyRandom,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: u64,
    pub method: Method,
    pub ptx_dbm: f64,
    pub nmse_hd_db: f64,
    pub nmse_hr_db: f64,
    /// NMSE of the channel that matters for the user kind: `h_r` for a
    /// blocked user, `h_d` for an unblocked one.
    pub nmse_db: f64,
    /// Same as `nmse_db`, linear.
    pub nmse_linear: f64,
    /// DOMP passes; zero for LS.
    pub domp_iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub wall_time: Duration,
}

/// The three frequency-domain links of one trial.
#[derive(Debug, Clone)]
pub struct Scene {
    pub hd: FreqChannelSet,
    pub g: FreqChannelSet,
    pub hr: FreqChannelSet,
    /// Known BS-to-IRS LoS departure angle.
    pub los_aod: AnglePair,
}

impl Scene {
    pub fn hd_truth(&self) -> Vec<DVector<C64>> {
        (0..self.hd.subcarriers).map(|k| self.hd.row(k)).collect()
    }

    /// `h_r,k`, or `g_0,k h_r,k` when the receiver does not know the LoS gain.
    pub fn hr_truth(&self, los_gain_known: bool) -> Vec<DVector<C64>> {
        (0..self.hr.subcarriers)
            .map(|k| {
                let h = self.hr.row(k);
                if los_gain_known {
                    h
                } else {
                    h * self.g.los_gain(k).expect("BS-IRS LoS")
                }
            })
            .collect()
    }
}

/// Draw the links of trial `trial_index`. With `on_grid`, user-link departure
/// angles are taken from the dictionary grid.
pub fn sample_scene(
    cfg: &SystemConfig,
    on_grid: Option<&EffectiveDictionary>,
    trial_index: u64,
) -> Result<Scene> {
    let mut rng = trial_rng(cfg.master_seed, trial_index, Stream::Channel);
    let blocked = cfg.user_kind == UserKind::Blocked;
    let sector = AngleDraw::Sector(cfg.angle_sector_rad);
    let (bs_draw, irs_draw) = match on_grid {
        Some(eff) => (
            grid_draw(eff.bs().grid_angles_within(cfg.angle_sector_rad))?,
            grid_draw(eff.irs().grid_angles_within(cfg.angle_sector_rad))?,
        ),
        None => (sector.clone(), sector.clone()),
    };
    let g = sample_link_with(cfg, LinkKind::BsToIrs, blocked, &sector, &mut rng)?;
    let hd = sample_link_with(cfg, LinkKind::BsToUser, blocked, &bs_draw, &mut rng)?;
    let hr = sample_link_with(cfg, LinkKind::IrsToUser, blocked, &irs_draw, &mut rng)?;
    let los_aod = g.los_path.as_ref().expect("BS-IRS LoS").aod;
    Ok(Scene {
        hd: assemble_freq_channels(&hd, cfg),
        g: assemble_freq_channels(&g, cfg),
        hr: assemble_freq_channels(&hr, cfg),
        los_aod,
    })
}

fn grid_draw(points: Vec<AnglePair>) -> Result<AngleDraw> {
    if points.is_empty() {
        return Err(Error::InvalidConfig(
            "no dictionary grid point falls inside the angle sector".into(),
        ));
    }
    Ok(AngleDraw::Grid(points))
}

/// BS and IRS dictionaries at redundancy `r_dic`.
pub fn build_dictionaries(cfg: &SystemConfig, dict_ratio: usize) -> Result<EffectiveDictionary> {
    let bs = redundant_dictionary(cfg.bs(), SystemConfig::dict_grid(cfg.bs(), dict_ratio))?;
    let irs = redundant_dictionary(cfg.irs(), SystemConfig::dict_grid(cfg.irs(), dict_ratio))?;
    Ok(effective_dictionary(bs, irs))
}

enum Solver<'a> {
    Domp {
        /// Sensing operator at unit transmit power.
        sensing: ScaledSensing,
        dict: &'a EffectiveDictionary,
    },
    Ls {
        /// Pseudo-inverse of the subcarrier-independent base at unit power.
        solver: LsSolver,
        sensing: LosSensing,
    },
}

/// Everything about one trial and method that does not depend on P_Tx.
struct TrialContext<'a> {
    cfg: &'a SystemConfig,
    scene: &'a Scene,
    trial_index: u64,
    method: Method,
    book: PilotBook,
    solver: Solver<'a>,
}

impl<'a> TrialContext<'a> {
    fn new(
        cfg: &'a SystemConfig,
        scene: &'a Scene,
        trial_index: u64,
        method: Method,
        pilot_ratio: f64,
        dict: &'a EffectiveDictionary,
    ) -> Result<Self> {
        let (variant, n_slots) = match method {
            Method::DompDesigned => (PilotVariant::Designed, cfg.pilots_for(pilot_ratio)),
            Method::DompFullyRandom => (PilotVariant::FullyRandom, cfg.pilots_for(pilot_ratio)),
            Method::LsNoiseless => (PilotVariant::Designed, cfg.bs().len() + cfg.irs().len()),
        };
        let mut rng = trial_rng(cfg.master_seed, trial_index, Stream::Pilots);
        let book = build_pilot_book(cfg, n_slots, 1.0, scene.los_aod, variant, &mut rng)?;
        let los = LosSensing::new(&book, &scene.g, cfg.los_gain_known)?;
        let solver = match method {
            Method::LsNoiseless => Solver::Ls {
                solver: LsSolver::new(los.base(), cfg.max_condition)?,
                sensing: los,
            },
            _ => {
                let base = dict.sense(los.base())?;
                let gm = dict.bs().atoms();
                let k_count = los.subcarriers();
                let scales = DMatrix::from_fn(base.ncols(), k_count, |j, k| {
                    if j < gm {
                        C64::new(1.0, 0.0)
                    } else {
                        los.gain(k)
                    }
                });
                Solver::Domp {
                    sensing: ScaledSensing::new(base, scales)?,
                    dict,
                }
            }
        };
        Ok(Self {
            cfg,
            scene,
            trial_index,
            method,
            book,
            solver,
        })
    }

    fn evaluate(&self, ptx_dbm: f64) -> Result<TrialResult> {
        let start = Instant::now();
        let cfg = self.cfg;
        let p = dbm_to_watts(ptx_dbm);
        let book = self.book.with_power(p);
        let noisy = cfg.noise && self.method != Method::LsNoiseless;
        let sigma2 = if noisy { cfg.noise_power() } else { 0.0 };
        let mut rng = trial_rng(cfg.master_seed, self.trial_index, Stream::Noise);
        let y = simulate_rx(
            &book,
            &self.scene.hd,
            &self.scene.g,
            &self.scene.hr,
            sigma2,
            &mut rng,
        )?;
        // Work at unit power: y / sqrt(P) sees the unit-power sensing operator.
        let inv = C64::new(p.sqrt().recip(), 0.0);
        let y: Vec<DVector<C64>> = y.into_iter().map(|v| v * inv).collect();

        let (hd_hat, hr_hat, iterations, converged) = match &self.solver {
            Solver::Domp { sensing, dict } => {
                let est = domp(
                    &y,
                    sensing,
                    DompOptions::new(cfg.epsilon() / p)
                        .with_normalized_columns(cfg.domp_normalize_columns),
                )?;
                let mut hd = Vec::with_capacity(y.len());
                let mut hr = Vec::with_capacity(y.len());
                for c in &est.coeffs {
                    let (d, r) = dict.reconstruct(c)?;
                    hd.push(d);
                    hr.push(r);
                }
                (hd, hr, est.iterations, est.converged)
            }
            Solver::Ls { solver, sensing } => {
                let m = sensing.bs_len();
                let mut hd = Vec::with_capacity(y.len());
                let mut hr = Vec::with_capacity(y.len());
                for (k, yk) in y.iter().enumerate() {
                    let h = solver.solve(yk);
                    hd.push(h.rows(0, m).into_owned());
                    hr.push(h.rows(m, h.len() - m) / sensing.gain(k));
                }
                (hd, hr, 0, true)
            }
        };

        let nmse_hd = nmse_linear(&hd_hat, &self.scene.hd_truth())?;
        let nmse_hr = nmse_linear(&hr_hat, &self.scene.hr_truth(cfg.los_gain_known))?;
        let target = match cfg.user_kind {
            UserKind::Blocked => nmse_hr,
            UserKind::Unblocked => nmse_hd,
        };
        let floor = cfg.nmse_floor_db;
        Ok(TrialResult {
            trial_index: self.trial_index,
            method: self.method,
            ptx_dbm,
            nmse_hd_db: linear_to_db(nmse_hd, floor),
            nmse_hr_db: linear_to_db(nmse_hr, floor),
            nmse_db: linear_to_db(target, floor),
            nmse_linear: target,
            domp_iterations: iterations,
            converged,
            seed: cfg.master_seed,
            wall_time: start.elapsed(),
        })
    }
}

/// Run one trial end to end.
pub fn run_trial(cfg: &SystemConfig, spec: &TrialSpec, trial_index: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let dict = build_dictionaries(cfg, spec.dict_ratio)?;
    let scene = sample_scene(cfg, cfg.on_grid_angles.then_some(&dict), trial_index)?;
    TrialContext::new(
        cfg,
        &scene,
        trial_index,
        spec.method,
        spec.pilot_ratio,
        &dict,
    )?
    .evaluate(spec.ptx_dbm)
}

/// One x-axis position of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub ptx_dbm: f64,
    pub pilot_ratio: f64,
    pub dict_ratio: usize,
}

/// Points of `axis`. The non-swept knobs come from the config; P_Tx sweeps use
/// the full list, the other axes use the top P_Tx value.
pub fn sweep_points(cfg: &SystemConfig, axis: SweepAxis) -> Vec<SweepPoint> {
    let top = *cfg.ptx_dbm.last().expect("validated");
    match axis {
        SweepAxis::Ptx => cfg
            .ptx_dbm
            .iter()
            .map(|&p| SweepPoint {
                value: p,
                ptx_dbm: p,
                pilot_ratio: cfg.pilot_ratio,
                dict_ratio: cfg.dict_ratio,
            })
            .collect(),
        SweepAxis::PilotRatio => cfg
            .rp_values
            .iter()
            .map(|&r| SweepPoint {
                value: r,
                ptx_dbm: top,
                pilot_ratio: r,
                dict_ratio: cfg.dict_ratio,
            })
            .collect(),
        SweepAxis::DictRatio => cfg
            .rdic_values
            .iter()
            .map(|&r| SweepPoint {
                value: r as f64,
                ptx_dbm: top,
                pilot_ratio: cfg.pilot_ratio,
                dict_ratio: r,
            })
            .collect(),
    }
}

/// Aggregated statistics of one (sweep point, method).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub sweep_value: f64,
    pub method: Method,
    pub user_kind: UserKind,
    /// `10 log10` of the mean linear NMSE.
    pub nmse_db_mean: f64,
    /// Standard error of the mean, propagated to dB.
    pub nmse_db_stderr: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub rows: Vec<ReportRow>,
    /// `results[point][method]` holds one entry per trial, in trial order.
    pub results: Vec<Vec<Vec<TrialResult>>>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub config_hash: String,
    pub config_toml: String,
}

impl Report {
    /// Mean NMSE (dB) of `method` at point index `point`.
    pub fn mean_db(&self, point: usize, method: Method) -> Option<f64> {
        let mi = self.methods.iter().position(|&m| m == method)?;
        Some(self.rows[point * self.methods.len() + mi].nmse_db_mean)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{},{},{}",
                self.axis.name(),
                r.sweep_value,
                r.method,
                r.user_kind.name(),
                r.nmse_db_mean,
                r.nmse_db_stderr,
                r.trials,
                self.seed,
                self.config_hash
            )
            .expect("write to string");
        }
        out
    }

    pub fn trials_csv(&self, point: usize) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TRIALS_HEADER.split(','))?;
        let value = self.points[point].value;
        for per_method in &self.results[point] {
            for t in per_method {
                w.write_record([
                    t.trial_index.to_string(),
                    t.method.to_string(),
                    value.to_string(),
                    t.nmse_hd_db.to_string(),
                    t.nmse_hr_db.to_string(),
                    t.nmse_db.to_string(),
                    t.domp_iterations.to_string(),
                    t.converged.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("ascii"))
    }

    /// Write `report.csv`, one `trials_<axis>_<i>.csv` per point and the
    /// resolved `config.toml` into `dir`. Returns the summary path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let summary = dir.join("report.csv");
        fs::write(&summary, self.summary_csv())?;
        for i in 0..self.points.len() {
            let name = format!("trials_{}_{:03}.csv", self.axis.name(), i);
            fs::write(dir.join(name), self.trials_csv(i)?)?;
        }
        fs::write(dir.join("config.toml"), &self.config_toml)?;
        Ok(summary)
    }
}

fn summarize(results: &[TrialResult]) -> (f64, f64) {
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.nmse_linear).sum::<f64>() / n;
    let stderr = if results.len() > 1 {
        let var = results
            .iter()
            .map(|r| (r.nmse_linear - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let stderr_db = if mean > 0.0 {
        10.0 / std::f64::consts::LN_10 * stderr / mean
    } else {
        0.0
    };
    (mean, stderr_db)
}

/// All methods at all points for one trial: `out[point][method]`.
fn run_trial_sweep(
    cfg: &SystemConfig,
    points: &[SweepPoint],
    dicts: &[(usize, EffectiveDictionary)],
    trial_index: u64,
) -> Result<Vec<Vec<TrialResult>>> {
    let dict_for = |r: usize| &dicts.iter().find(|(d, _)| *d == r).expect("prebuilt").1;
    let scene_key = |pt: &SweepPoint| if cfg.on_grid_angles { pt.dict_ratio } else { 0 };
    let mut scenes: Vec<(usize, Scene)> = Vec::new();
    for pt in points {
        let key = scene_key(pt);
        if !scenes.iter().any(|(k, _)| *k == key) {
            let grid = cfg.on_grid_angles.then(|| dict_for(pt.dict_ratio));
            scenes.push((key, sample_scene(cfg, grid, trial_index)?));
        }
    }
    let scene_for = |key: usize| &scenes.iter().find(|(k, _)| *k == key).expect("sampled").1;

    let mut out = vec![Vec::with_capacity(cfg.methods.len()); points.len()];
    for &method in &cfg.methods {
        // LS does not depend on r_p or r_dic, so one context serves all points.
        let mut cache: Vec<((u64, usize, usize), TrialContext)> = Vec::new();
        for (pi, pt) in points.iter().enumerate() {
            let sk = scene_key(pt);
            let key = match method {
                Method::LsNoiseless => (0, 0, sk),
                _ => (pt.pilot_ratio.to_bits(), pt.dict_ratio, sk),
            };
            let pos = match cache.iter().position(|(k, _)| *k == key) {
                Some(pos) => pos,
                None => {
                    let ctx = TrialContext::new(
                        cfg,
                        scene_for(sk),
                        trial_index,
                        method,
                        pt.pilot_ratio,
                        dict_for(pt.dict_ratio),
                    )?;
                    cache.push((key, ctx));
                    cache.len() - 1
                }
            };
            out[pi].push(cache[pos].1.evaluate(pt.ptx_dbm)?);
        }
    }
    Ok(out)
}

/// Run `cfg.trials` trials of every configured method along `axis`.
///
/// Trials run in parallel on the current rayon pool; results are collected in
/// trial order, so the report does not depend on the thread count.
pub fn run_sweep(cfg: &SystemConfig, axis: SweepAxis) -> Result<Report> {
    cfg.validate()?;
    let points = sweep_points(cfg, axis);
    let mut ratios: Vec<usize> = points.iter().map(|p| p.dict_ratio).collect();
    ratios.sort_unstable();
    ratios.dedup();
    let dicts = ratios
        .into_iter()
        .map(|r| build_dictionaries(cfg, r).map(|d| (r, d)))
        .collect::<Result<Vec<_>>>()?;

    let per_trial = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial_sweep(cfg, &points, &dicts, t))
        .collect::<Result<Vec<_>>>()?;

    let methods = cfg.methods.clone();
    let mut results = vec![vec![Vec::with_capacity(cfg.trials); methods.len()]; points.len()];
    for trial in per_trial {
        for (pi, per_method) in trial.into_iter().enumerate() {
            for (mi, r) in per_method.into_iter().enumerate() {
                results[pi][mi].push(r);
            }
        }
    }
    let mut rows = Vec::with_capacity(points.len() * methods.len());
    for (pi, pt) in points.iter().enumerate() {
        for (mi, &method) in methods.iter().enumerate() {
            let (mean, stderr_db) = summarize(&results[pi][mi]);
            rows.push(ReportRow {
                sweep_value: pt.value,
                method,
                user_kind: cfg.user_kind,
                nmse_db_mean: linear_to_db(mean, cfg.nmse_floor_db),
                nmse_db_stderr: stderr_db,
                trials: results[pi][mi].len(),
            });
        }
    }
    Ok(Report {
        axis,
        points,
        rows,
        results,
        methods,
        seed: cfg.master_seed,
        config_hash: cfg.config_hash(),
        config_toml: cfg.to_toml_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SystemConfig {
        SystemConfig {
            ptx_dbm: vec![30.0, 46.0],
            trials: 3,
            ..SystemConfig::small()
        }
    }

    #[test]
    fn sweep_axis_names_round_trip() {
        for axis in [SweepAxis::Ptx, SweepAxis::PilotRatio, SweepAxis::DictRatio] {
            assert_eq!(axis.name().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("snr".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn sweep_points_follow_the_axis() {
        let cfg = tiny();
        let p = sweep_points(&cfg, SweepAxis::Ptx);
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|x| x.dict_ratio == cfg.dict_ratio));
        let r = sweep_points(&cfg, SweepAxis::PilotRatio);
        assert_eq!(r.len(), cfg.rp_values.len());
        assert!(r.iter().all(|x| x.ptx_dbm == 46.0));
        let d = sweep_points(&cfg, SweepAxis::DictRatio);
        assert_eq!(
            d.iter().map(|x| x.dict_ratio).collect::<Vec<_>>(),
            cfg.rdic_values
        );
    }

    #[test]
    fn streams_are_disjoint() {
        use rand::RngCore;
        let a = trial_rng(7, 0, Stream::Channel).next_u64();
        let b = trial_rng(7, 0, Stream::Pilots).next_u64();
        let c = trial_rng(7, 1, Stream::Channel).next_u64();
        let d = trial_rng(7, 0, Stream::Channel).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, d);
    }

    fn result(nmse: f64) -> TrialResult {
        TrialResult {
            trial_index: 0,
            method: Method::DompDesigned,
            ptx_dbm: 0.0,
            nmse_hd_db: 0.0,
            nmse_hr_db: 0.0,
            nmse_db: 10.0 * nmse.log10(),
            nmse_linear: nmse,
            domp_iterations: 0,
            converged: true,
            seed: 0,
            wall_time: Duration::ZERO,
        }
    }

    #[test]
    fn summary_averages_linear_values() {
        let (mean, se) = summarize(&[result(0.1), result(0.001)]);
        assert!((mean - 0.0505).abs() < 1e-15);
        // sample std of {0.1, 0.001} is 0.099 / sqrt(2); stderr divides by sqrt(2) again
        let expected = 10.0 / std::f64::consts::LN_10 * (0.099 / 2.0) / 0.0505;
        assert!((se - expected).abs() < 1e-12);
        let (_, one) = summarize(&[result(0.5)]);
        assert_eq!(one, 0.0);
    }

    #[test]
    fn run_trial_is_deterministic() {
        let cfg = tiny();
        let spec = TrialSpec::from_config(&cfg);
        let a = run_trial(&cfg, &spec, 5).unwrap();
        let b = run_trial(&cfg, &spec, 5).unwrap();
        assert_eq!(a.nmse_hd_db.to_bits(), b.nmse_hd_db.to_bits());
        assert_eq!(a.nmse_hr_db.to_bits(), b.nmse_hr_db.to_bits());
        assert_eq!(a.domp_iterations, b.domp_iterations);
        let c = run_trial(&cfg, &spec, 6).unwrap();
        assert_ne!(a.nmse_hr_db, c.nmse_hr_db);
    }

    #[test]
    fn sweep_matches_single_trials() {
        let cfg = tiny();
        let report = run_sweep(&cfg, SweepAxis::Ptx).unwrap();
        let spec = TrialSpec {
            ptx_dbm: 30.0,
            ..TrialSpec::from_config(&cfg)
        };
        let single = run_trial(&cfg, &spec, 2).unwrap();
        let swept = &report.results[0][0][2];
        assert_eq!(swept.trial_index, 2);
        assert_eq!(single.nmse_db.to_bits(), swept.nmse_db.to_bits());
    }

    #[test]
    fn report_layout() {
        let cfg = tiny();
        let report = run_sweep(&cfg, SweepAxis::Ptx).unwrap();
        let csv = report.summary_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(REPORT_HEADER));
        assert_eq!(lines.count(), 2 * cfg.methods.len());
        let trials = report.trials_csv(1).unwrap();
        assert_eq!(trials.lines().next(), Some(TRIALS_HEADER));
        assert_eq!(trials.lines().count(), 1 + cfg.trials * cfg.methods.len());
        assert!(report.mean_db(1, Method::LsNoiseless).is_some());
    }

    #[test]
    fn ls_is_noise_free_and_power_invariant() {
        let cfg = tiny();
        let report = run_sweep(&cfg, SweepAxis::Ptx).unwrap();
        let a = report.mean_db(0, Method::LsNoiseless).unwrap();
        let b = report.mean_db(1, Method::LsNoiseless).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
