//! Geometric multipath channels and their per-subcarrier frequency response.
//!
//! A link is a LoS path (optional) plus `L` NLoS paths. Each path contributes
//! `(alpha / rho) * a_rx * a_tx^H * p(t - tau)` in the delay domain, where `p`
//! is a raised-cosine pulse. Sampling at `d * T_s` for `d < N_CP` and taking
//! the `K`-point transform gives the subcarrier channels.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::geometry::{steering_vector, AnglePair, ArrayDims};
use crate::C64;

/// One propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub gain: C64,
    /// Linear amplitude loss, `> 0`.
    pub large_scale: f64,
    pub delay_s: f64,
    pub aod: AnglePair,
    /// Absent when the receiver is a single-antenna user.
    pub aoa: Option<AnglePair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    /// `N x M` matrix link.
    BsToIrs,
    /// `1 x M` row link.
    BsToUser,
    /// `1 x N` row link.
    IrsToUser,
}

impl LinkKind {
    pub fn tx_dims(&self, cfg: &SystemConfig) -> ArrayDims {
        match self {
            LinkKind::BsToIrs | LinkKind::BsToUser => cfg.bs(),
            LinkKind::IrsToUser => cfg.irs(),
        }
    }

    pub fn rx_dims(&self, cfg: &SystemConfig) -> Option<ArrayDims> {
        match self {
            LinkKind::BsToIrs => Some(cfg.irs()),
            _ => None,
        }
    }

    pub fn distance(&self, cfg: &SystemConfig) -> f64 {
        match self {
            LinkKind::BsToIrs => cfg.bs_irs_m,
            LinkKind::BsToUser => cfg.bs_user_m,
            LinkKind::IrsToUser => cfg.irs_user_m,
        }
    }

    pub fn nlos_paths(&self, cfg: &SystemConfig) -> usize {
        match self {
            LinkKind::BsToIrs => cfg.nlos_bs_irs,
            LinkKind::BsToUser => cfg.nlos_bs_user,
            LinkKind::IrsToUser => cfg.nlos_irs_user,
        }
    }

    /// Whether the link carries a LoS path for a user of the given blockage.
    pub fn has_los(&self, blocked: bool) -> bool {
        match self {
            LinkKind::BsToIrs => true,
            LinkKind::BsToUser => !blocked,
            LinkKind::IrsToUser => blocked,
        }
    }
}

/// Delay-domain description of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub kind: LinkKind,
    pub tx_dims: ArrayDims,
    pub rx_dims: Option<ArrayDims>,
    pub los_path: Option<PathComponent>,
    pub nlos_paths: Vec<PathComponent>,
}

impl LinkChannel {
    pub fn paths(&self) -> impl Iterator<Item = &PathComponent> {
        self.los_path.iter().chain(self.nlos_paths.iter())
    }
}

/// Where departure angles are drawn from.
#[derive(Debug, Clone)]
pub enum AngleDraw {
    /// Both components uniform over `[-half_width, half_width)`.
    Sector(f64),
    /// Uniform over a finite set of directions, e.g. a dictionary grid.
    Grid(Vec<AnglePair>),
}

impl AngleDraw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AnglePair {
        match self {
            AngleDraw::Sector(w) => sector_angle(*w, rng),
            AngleDraw::Grid(points) => points[rng.gen_range(0..points.len())],
        }
    }
}

fn sector_angle<R: Rng + ?Sized>(half_width: f64, rng: &mut R) -> AnglePair {
    let theta = rng.gen_range(-half_width..half_width);
    let phi = rng.gen_range(-half_width..half_width);
    AnglePair::new(theta, phi).expect("sector lies inside [-pi/2, pi/2)")
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Normalized raised-cosine impulse response, `p(0) = 1`.
pub fn raised_cosine(t: f64, ts: f64, rolloff: f64) -> f64 {
    let x = t / ts;
    if rolloff > 0.0 {
        let edge = 1.0 / (2.0 * rolloff);
        if ((x.abs() - edge) / edge).abs() < 1e-12 {
            return PI / 4.0 * sinc(edge);
        }
    }
    let den = 1.0 - (2.0 * rolloff * x).powi(2);
    sinc(x) * (PI * rolloff * x).cos() / den
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// UMi street-canyon LoS path loss in dB (distance in m, carrier in Hz).
pub fn path_loss_los_db(distance_m: f64, carrier_hz: f64) -> f64 {
    32.4 + 21.0 * distance_m.log10() + 20.0 * (carrier_hz / 1e9).log10()
}

/// UMi street-canyon NLoS path loss in dB, floored at the LoS value.
pub fn path_loss_nlos_db(distance_m: f64, carrier_hz: f64, user_height_m: f64) -> f64 {
    let nlos = 22.4 + 35.3 * distance_m.log10() + 21.3 * (carrier_hz / 1e9).log10()
        - 0.3 * (user_height_m - 1.5);
    nlos.max(path_loss_los_db(distance_m, carrier_hz))
}

fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Draw a link with departure angles from the configured sector.
pub fn sample_link<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    kind: LinkKind,
    blocked: bool,
    rng: &mut R,
) -> Result<LinkChannel> {
    sample_link_with(
        cfg,
        kind,
        blocked,
        &AngleDraw::Sector(cfg.angle_sector_rad),
        rng,
    )
}

/// Draw a link, taking departure angles from `tx_angles`.
///
/// NLoS gains are i.i.d. circular Gaussian. The LoS amplitude is then fixed so
/// that `|alpha_0|^2 = K_f * sum |alpha_l|^2` for this realization. All gains
/// carry a `sqrt(n_tx * n_rx)` array factor, so the unit-norm steering vectors
/// keep the per-element channel power at `1 / rho^2`. The large-scale loss is
/// one value per link: LoS path loss when a LoS path exists, NLoS otherwise.
pub fn sample_link_with<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    kind: LinkKind,
    blocked: bool,
    tx_angles: &AngleDraw,
    rng: &mut R,
) -> Result<LinkChannel> {
    let has_los = kind.has_los(blocked);
    let l = kind.nlos_paths(cfg);
    if !has_los && l == 0 {
        return Err(Error::InvalidConfig(format!(
            "{kind:?} carries only NLoS paths but its path count is 0"
        )));
    }
    let tx_dims = kind.tx_dims(cfg);
    let rx_dims = kind.rx_dims(cfg);
    let array_factor = (tx_dims.len() * rx_dims.map_or(1, |d| d.len())) as f64;
    let distance = kind.distance(cfg);
    let pl_db = if has_los {
        path_loss_los_db(distance, cfg.carrier_hz)
    } else {
        path_loss_nlos_db(distance, cfg.carrier_hz, cfg.user_height_m)
    };
    let blockage_db = if has_los || kind == LinkKind::BsToIrs {
        0.0
    } else {
        cfg.blockage_loss_db
    };
    let large_scale = db_to_amplitude(pl_db + blockage_db);
    let kf = cfg.rician_linear();
    let nlos_var = if has_los {
        array_factor / (l as f64 * (kf + 1.0))
    } else {
        array_factor / l as f64
    };
    let sector = AngleDraw::Sector(cfg.angle_sector_rad);
    let max_delay = cfg.max_delay();

    let draw_path = |rng: &mut R, gain: C64, delay_s: f64| PathComponent {
        gain,
        large_scale,
        delay_s,
        aod: tx_angles.sample(rng),
        aoa: rx_dims.map(|_| sector.sample(rng)),
    };

    let los_delay = distance / SPEED_OF_LIGHT;
    let mut los = has_los.then(|| draw_path(rng, C64::new(0.0, 0.0), los_delay));
    let nlos: Vec<PathComponent> = (0..l)
        .map(|_| {
            let gain = complex_gaussian(rng, nlos_var);
            let delay = rng.gen_range(0.0..=max_delay);
            draw_path(rng, gain, delay)
        })
        .collect();

    if let Some(p) = los.as_mut() {
        let nlos_power: f64 = nlos.iter().map(|q| q.gain.norm_sqr()).sum();
        let power = if l == 0 {
            array_factor
        } else {
            kf * nlos_power
        };
        let phase = rng.gen_range(0.0..2.0 * PI);
        p.gain = C64::from_polar(power.sqrt(), phase);
    }

    Ok(LinkChannel {
        kind,
        tx_dims,
        rx_dims,
        los_path: los,
        nlos_paths: nlos,
    })
}

/// Delay-domain tap weights `p(d T_s - tau)` for `d = 0..N_CP`.
pub fn pulse_taps(delay_s: f64, cfg: &SystemConfig) -> Vec<f64> {
    let ts = cfg.sample_period();
    (0..cfg.cp_len)
        .map(|d| raised_cosine(d as f64 * ts - delay_s, ts, cfg.rolloff))
        .collect()
}

/// Frequency-domain gain of `path` on zero-based subcarrier `k`:
/// `(alpha / rho) * sum_d p(d T_s - tau) exp(j 2 pi k d / K)`.
pub fn freq_gain(path: &PathComponent, k: usize, cfg: &SystemConfig) -> C64 {
    let kk = cfg.subcarriers as f64;
    let acc: C64 = pulse_taps(path.delay_s, cfg)
        .into_iter()
        .enumerate()
        .map(|(d, p)| C64::from_polar(p, 2.0 * PI * (k * d) as f64 / kk))
        .sum();
    acc * path.gain / path.large_scale
}

/// All `K` subcarrier gains of `path`.
pub fn freq_gains(path: &PathComponent, cfg: &SystemConfig) -> Vec<C64> {
    let taps = pulse_taps(path.delay_s, cfg);
    let kk = cfg.subcarriers;
    let scale = path.gain / path.large_scale;
    (0..kk)
        .map(|k| {
            let acc: C64 = taps
                .iter()
                .enumerate()
                .map(|(d, &p)| C64::from_polar(p, 2.0 * PI * ((k * d) % kk) as f64 / kk as f64))
                .sum();
            acc * scale
        })
        .collect()
}

/// One path after the subcarrier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqPath {
    /// Gain on each subcarrier.
    pub gains: Vec<C64>,
    /// Transmit-side steering vector.
    pub tx: DVector<C64>,
    /// Receive-side steering vector (matrix links only).
    pub rx: Option<DVector<C64>>,
}

impl FreqPath {
    fn term(&self, k: usize) -> DMatrix<C64> {
        let g = self.gains[k];
        match &self.rx {
            Some(rx) => rx * self.tx.adjoint() * g,
            None => DMatrix::from_row_slice(1, self.tx.len(), (self.tx.adjoint() * g).as_slice()),
        }
    }
}

/// Subcarrier channels of one link, kept in factored per-path form.
///
/// Matrix links materialize `N x M` matrices; vector links materialize
/// `1 x n` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannelSet {
    pub kind: LinkKind,
    pub subcarriers: usize,
    pub los: Option<FreqPath>,
    pub nlos: Vec<FreqPath>,
    tx_len: usize,
    rx_len: usize,
}

impl FreqChannelSet {
    fn zero(&self) -> DMatrix<C64> {
        DMatrix::zeros(self.rx_len, self.tx_len)
    }

    /// LoS part `G_L,k` (zero when the link has no LoS path).
    pub fn los_matrix(&self, k: usize) -> DMatrix<C64> {
        self.los.as_ref().map_or_else(|| self.zero(), |p| p.term(k))
    }

    /// NLoS part `G_N,k`.
    pub fn nlos_matrix(&self, k: usize) -> DMatrix<C64> {
        self.nlos.iter().fold(self.zero(), |acc, p| acc + p.term(k))
    }

    /// Full subcarrier channel, `G_L,k + G_N,k`.
    pub fn matrix(&self, k: usize) -> DMatrix<C64> {
        self.los_matrix(k) + self.nlos_matrix(k)
    }

    /// For vector links: the column `h_k` whose transpose is the channel row.
    pub fn row(&self, k: usize) -> DVector<C64> {
        let mut h = DVector::zeros(self.tx_len);
        for p in self.los.iter().chain(&self.nlos) {
            h.axpy(p.gains[k], &p.tx.conjugate(), C64::new(1.0, 0.0));
        }
        h
    }

    /// LoS gain `g_0,k`, if the link has a LoS path.
    pub fn los_gain(&self, k: usize) -> Option<C64> {
        self.los.as_ref().map(|p| p.gains[k])
    }

    pub fn tx_len(&self) -> usize {
        self.tx_len
    }

    pub fn rx_len(&self) -> usize {
        self.rx_len
    }
}

/// Transform every path of `link` onto the `K` subcarriers.
pub fn assemble_freq_channels(link: &LinkChannel, cfg: &SystemConfig) -> FreqChannelSet {
    let convert = |p: &PathComponent| FreqPath {
        gains: freq_gains(p, cfg),
        tx: steering_vector(link.tx_dims, p.aod).into_vector(),
        rx: link.rx_dims.map(|d| {
            steering_vector(d, p.aoa.expect("matrix link paths carry an AoA")).into_vector()
        }),
    };
    FreqChannelSet {
        kind: link.kind,
        subcarriers: cfg.subcarriers,
        los: link.los_path.as_ref().map(convert),
        nlos: link.nlos_paths.iter().map(convert).collect(),
        tx_len: link.tx_dims.len(),
        rx_len: link.rx_dims.map_or(1, |d| d.len()),
    }
}
