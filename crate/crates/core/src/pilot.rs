//! Downlink sounding: BS hybrid precoders, IRS phase books, the LoS-aware
//! sensing matrix and the received observations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::channel::{complex_gaussian, FreqChannelSet, LinkKind};
use crate::config::{PilotVariant, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::{steering_vector, AnglePair};
use crate::C64;

/// One pilot slot (OFDM symbol). The precoder is the same on every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSlot {
    /// `M x N_RF` analog precoder; user-dedicated columns first.
    pub rf: DMatrix<C64>,
    /// `sqrt(P_Tx / N_RF) * 1`.
    pub baseband: DVector<C64>,
    /// Diagonal of the IRS reflection matrix.
    pub theta: DVector<C64>,
    /// Transmitted vector `rf * baseband`.
    pub s: DVector<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub slots: Vec<PilotSlot>,
    pub tx_power_w: f64,
    pub variant: PilotVariant,
}

impl PilotBook {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Same analog precoders and IRS phases at a different transmit power.
    pub fn with_power(&self, tx_power_w: f64) -> PilotBook {
        let r = C64::new((tx_power_w / self.tx_power_w).sqrt(), 0.0);
        PilotBook {
            slots: self
                .slots
                .iter()
                .map(|s| PilotSlot {
                    rf: s.rf.clone(),
                    baseband: &s.baseband * r,
                    theta: s.theta.clone(),
                    s: &s.s * r,
                })
                .collect(),
            tx_power_w,
            variant: self.variant,
        }
    }
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R, modulus: f64) -> C64 {
    C64::from_polar(modulus, rng.gen_range(0.0..2.0 * PI))
}

/// Build `n_slots` pilot slots.
///
/// With [`PilotVariant::Designed`] the IRS-dedicated RF columns all equal the
/// steering vector toward the known BS-IRS departure angle; user columns and
/// IRS phases are i.i.d. uniform phases. [`PilotVariant::FullyRandom`]
/// replaces the steered columns by random-phase columns as well. Random
/// draws are made slot by slot in the order: IRS phases, user columns, then
/// IRS columns (random variant only), so both variants share IRS phases and
/// user columns for the same generator state.
pub fn build_pilot_book<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    n_slots: usize,
    tx_power_w: f64,
    los_aod: AnglePair,
    variant: PilotVariant,
    rng: &mut R,
) -> Result<PilotBook> {
    if cfg.rf_chains_irs + cfg.rf_chains_user != cfg.rf_chains || cfg.rf_chains == 0 {
        return Err(Error::InvalidConfig(format!(
            "RF split {} + {} does not match {} chains",
            cfg.rf_chains_user, cfg.rf_chains_irs, cfg.rf_chains
        )));
    }
    let bs = cfg.bs();
    let m = bs.len();
    let n = cfg.irs().len();
    let n_rf = cfg.rf_chains;
    let modulus = 1.0 / (m as f64).sqrt();
    let beam = steering_vector(bs, los_aod).into_vector();
    let amp = (tx_power_w / n_rf as f64).sqrt();

    let slots = (0..n_slots)
        .map(|_| {
            let theta = DVector::from_fn(n, |_, _| random_phase(rng, 1.0));
            let mut rf = DMatrix::zeros(m, n_rf);
            for c in 0..cfg.rf_chains_user {
                for r in 0..m {
                    rf[(r, c)] = random_phase(rng, modulus);
                }
            }
            for c in cfg.rf_chains_user..n_rf {
                match variant {
                    PilotVariant::Designed => rf.set_column(c, &beam),
                    PilotVariant::FullyRandom => {
                        for r in 0..m {
                            rf[(r, c)] = random_phase(rng, modulus);
                        }
                    }
                }
            }
            let baseband = DVector::from_element(n_rf, C64::new(amp, 0.0));
            let s = &rf * &baseband;
            PilotSlot {
                rf,
                baseband,
                theta,
                s,
            }
        })
        .collect();
    Ok(PilotBook {
        slots,
        tx_power_w,
        variant,
    })
}

/// Dense `Phi_L,k` for every subcarrier; row `i` is `[s_i^T, (Theta_i G_L,k s_i)^T]`.
pub fn assemble_sensing(pb: &PilotBook, los: &[DMatrix<C64>]) -> Result<Vec<DMatrix<C64>>> {
    let m = pb.slots.first().map_or(0, |s| s.s.len());
    los.iter()
        .map(|g| {
            if g.ncols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "LoS matrix has {} columns, pilots have length {m}",
                    g.ncols()
                )));
            }
            let n = g.nrows();
            let mut phi = DMatrix::zeros(pb.len(), m + n);
            for (i, slot) in pb.slots.iter().enumerate() {
                if slot.theta.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "IRS phase vector of length {} against {n} IRS elements",
                        slot.theta.len()
                    )));
                }
                let reflected = slot.theta.component_mul(&(g * &slot.s));
                phi.view_mut((i, 0), (1, m)).copy_from(&slot.s.transpose());
                phi.view_mut((i, m), (1, n))
                    .copy_from(&reflected.transpose());
            }
            Ok(phi)
        })
        .collect()
}

/// Factored `Phi_L,k`: a subcarrier-independent base whose IRS block is built
/// with unit LoS gain, times the per-subcarrier LoS gain on that block.
#[derive(Debug, Clone)]
pub struct LosSensing {
    base: DMatrix<C64>,
    bs_len: usize,
    gains: Vec<C64>,
}

impl LosSensing {
    /// `los_gain_known = false` sets every gain to one, so the LoS gain is
    /// absorbed into the IRS half of the effective channel.
    pub fn new(pb: &PilotBook, g: &FreqChannelSet, los_gain_known: bool) -> Result<Self> {
        if g.kind != LinkKind::BsToIrs {
            return Err(Error::DimensionMismatch(
                "LoS sensing needs the BS-IRS link".into(),
            ));
        }
        let los = g
            .los
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("BS-IRS link has no LoS path".into()))?;
        let rx = los.rx.as_ref().expect("matrix link");
        let m = los.tx.len();
        let n = rx.len();
        let mut base = DMatrix::zeros(pb.len(), m + n);
        for (i, slot) in pb.slots.iter().enumerate() {
            let c = los.tx.dotc(&slot.s);
            let reflected = slot.theta.component_mul(rx) * c;
            base.view_mut((i, 0), (1, m)).copy_from(&slot.s.transpose());
            base.view_mut((i, m), (1, n))
                .copy_from(&reflected.transpose());
        }
        let gains = if los_gain_known {
            los.gains.clone()
        } else {
            vec![C64::new(1.0, 0.0); g.subcarriers]
        };
        Ok(Self {
            base,
            bs_len: m,
            gains,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.gains.len()
    }

    pub fn base(&self) -> &DMatrix<C64> {
        &self.base
    }

    pub fn bs_len(&self) -> usize {
        self.bs_len
    }

    pub fn gain(&self, k: usize) -> C64 {
        self.gains[k]
    }

    /// Dense `Phi_L,k`.
    pub fn phi(&self, k: usize) -> DMatrix<C64> {
        let mut phi = self.base.clone();
        let n = phi.ncols() - self.bs_len;
        let g = self.gains[k];
        for z in phi.columns_mut(self.bs_len, n).iter_mut() {
            *z *= g;
        }
        phi
    }
}

/// Received pilots on every subcarrier:
/// `y_k[i] = h_d,k^T s_i + h_r,k^T Theta_i (G_L,k + G_N,k) s_i + n_i,k`,
/// `n ~ CN(0, sigma_n2)`.
pub fn simulate_rx<R: Rng + ?Sized>(
    pb: &PilotBook,
    hd: &FreqChannelSet,
    g: &FreqChannelSet,
    hr: &FreqChannelSet,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<Vec<DVector<C64>>> {
    if g.kind != LinkKind::BsToIrs
        || hd.kind != LinkKind::BsToUser
        || hr.kind != LinkKind::IrsToUser
    {
        return Err(Error::DimensionMismatch(
            "links passed in the wrong roles".into(),
        ));
    }
    let k_count = g.subcarriers;
    if hd.subcarriers != k_count || hr.subcarriers != k_count {
        return Err(Error::DimensionMismatch(
            "subcarrier counts differ between links".into(),
        ));
    }
    if hd.tx_len() != g.tx_len() || hr.tx_len() != g.rx_len() {
        return Err(Error::DimensionMismatch(
            "array sizes differ between links".into(),
        ));
    }
    let g_paths: Vec<_> = g.los.iter().chain(&g.nlos).collect();
    let hd_paths: Vec<_> = hd.los.iter().chain(&hd.nlos).collect();
    let hr_paths: Vec<_> = hr.los.iter().chain(&hr.nlos).collect();
    let np = pb.len();

    // Subcarrier-independent inner products; only path gains vary with k.
    // direct[i][q] = a_q^H s_i
    // cascade[i][p][q] = (a_r,q^H (theta_i ∘ a_rx,p)) * (a_tx,p^H s_i)
    let mut direct = vec![vec![C64::default(); hd_paths.len()]; np];
    let mut cascade = vec![vec![vec![C64::default(); hr_paths.len()]; g_paths.len()]; np];
    for (i, slot) in pb.slots.iter().enumerate() {
        for (q, p) in hd_paths.iter().enumerate() {
            direct[i][q] = p.tx.dotc(&slot.s);
        }
        for (pi, p) in g_paths.iter().enumerate() {
            let c = p.tx.dotc(&slot.s);
            let w = slot
                .theta
                .component_mul(p.rx.as_ref().expect("matrix link"));
            for (q, r) in hr_paths.iter().enumerate() {
                cascade[i][pi][q] = r.tx.dotc(&w) * c;
            }
        }
    }

    let mut y: Vec<DVector<C64>> = (0..k_count)
        .map(|k| {
            DVector::from_fn(np, |i, _| {
                let mut acc = C64::default();
                for (q, p) in hd_paths.iter().enumerate() {
                    acc += p.gains[k] * direct[i][q];
                }
                for (pi, p) in g_paths.iter().enumerate() {
                    let mut inner = C64::default();
                    for (q, r) in hr_paths.iter().enumerate() {
                        inner += r.gains[k] * cascade[i][pi][q];
                    }
                    acc += p.gains[k] * inner;
                }
                acc
            })
        })
        .collect();

    if sigma_n2 > 0.0 {
        for z in y.iter_mut().flat_map(|yk| yk.iter_mut()) {
            *z += complex_gaussian(rng, sigma_n2);
        }
    }
    Ok(y)
}
