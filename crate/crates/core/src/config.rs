//! System configuration, presets and the key-value config file format.
//!
//! A config file is TOML. Every key is optional; missing keys fall back to the
//! selected preset (`preset = "paper"` or `"small"`, default `"paper"`).
//! Unknown keys are rejected. See `docs/config.md` for the full key list.

use std::f64::consts::FRAC_PI_3;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::ArrayDims;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserKind {
    /// No BS line of sight; served through the IRS.
    Blocked,
    /// BS line of sight present; IRS reached only through NLoS paths.
    Unblocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotVariant {
    /// IRS-dedicated RF chains steer at the known BS-IRS departure angle.
    Designed,
    /// Every RF chain uses random phases.
    FullyRandom,
}

/// Estimator evaluated at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DompDesigned,
    DompFullyRandom,
    /// Well-determined LS (`N_P = M + N`) without thermal noise.
    LsNoiseless,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DompDesigned => "domp_designed",
            Method::DompFullyRandom => "domp_fully_random",
            Method::LsNoiseless => "ls_noiseless",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl UserKind {
    pub fn name(&self) -> &'static str {
        match self {
            UserKind::Blocked => "blocked",
            UserKind::Unblocked => "unblocked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Small,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "small" => Ok(Preset::Small),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

/// Fully resolved simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// BS array `[nx, ny]`.
    pub bs_dims: [usize; 2],
    /// IRS array `[nx, ny]`.
    pub irs_dims: [usize; 2],
    pub subcarriers: usize,
    pub cp_len: usize,
    pub nlos_bs_irs: usize,
    pub nlos_bs_user: usize,
    pub nlos_irs_user: usize,
    pub rician_db: f64,
    pub rolloff: f64,
    pub rf_chains: usize,
    pub rf_chains_irs: usize,
    pub rf_chains_user: usize,
    pub nsd_dbm_hz: f64,
    /// DOMP stops once the mean residual power drops to `epsilon_scale * sigma_n^2`.
    pub epsilon_scale: f64,
    /// DOMP divides each correlation by the sensing column norm before
    /// picking a column.
    pub domp_normalize_columns: bool,
    /// `r_p = N_P / (M + N)`.
    pub pilot_ratio: f64,
    /// `r_dic = G_M / M = G_N / N`.
    pub dict_ratio: usize,
    pub ptx_dbm: Vec<f64>,
    pub rp_values: Vec<f64>,
    pub rdic_values: Vec<usize>,
    pub user_kind: UserKind,
    pub pilot_variant: PilotVariant,
    pub methods: Vec<Method>,
    pub bs_irs_m: f64,
    pub bs_user_m: f64,
    pub irs_user_m: f64,
    pub user_height_m: f64,
    /// Extra attenuation on the user link that lost its LoS path (BS-user for
    /// a blocked user, IRS-user for an unblocked one).
    pub blockage_loss_db: f64,
    /// Path angles are drawn from `[-sector, sector)` on both components.
    pub angle_sector_rad: f64,
    /// Place user-link departure angles exactly on the dictionary grid.
    pub on_grid_angles: bool,
    /// Add thermal noise to DOMP observations.
    pub noise: bool,
    /// Receiver knows the LoS gain inside `G_L,k`; otherwise it is absorbed
    /// into the IRS-side effective channel.
    pub los_gain_known: bool,
    pub max_condition: f64,
    pub nmse_floor_db: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl SystemConfig {
    /// 16x16 BS and IRS, 64 subcarriers, 30 GHz / 100 MHz.
    pub fn paper() -> Self {
        Self {
            carrier_hz: 30e9,
            bandwidth_hz: 100e6,
            bs_dims: [16, 16],
            irs_dims: [16, 16],
            subcarriers: 64,
            cp_len: 64,
            nlos_bs_irs: 6,
            nlos_bs_user: 6,
            nlos_irs_user: 6,
            rician_db: 20.0,
            rolloff: 0.8,
            rf_chains: 2,
            rf_chains_irs: 1,
            rf_chains_user: 1,
            nsd_dbm_hz: -174.0,
            epsilon_scale: 1.0,
            domp_normalize_columns: true,
            pilot_ratio: 0.25,
            dict_ratio: 4,
            ptx_dbm: (0..14).map(|i| 20.0 + 2.0 * i as f64).collect(),
            rp_values: vec![0.125, 0.25, 0.375, 0.5],
            rdic_values: vec![1, 2, 4],
            user_kind: UserKind::Blocked,
            pilot_variant: PilotVariant::Designed,
            methods: vec![
                Method::DompDesigned,
                Method::DompFullyRandom,
                Method::LsNoiseless,
            ],
            bs_irs_m: 50.0,
            bs_user_m: 50.0,
            irs_user_m: 10.0,
            user_height_m: 1.5,
            blockage_loss_db: 40.0,
            angle_sector_rad: FRAC_PI_3,
            on_grid_angles: false,
            noise: true,
            los_gain_known: true,
            max_condition: 1e12,
            nmse_floor_db: -200.0,
            trials: 200,
            master_seed: 20_200_607,
        }
    }

    /// 8x8 arrays and 16 subcarriers for quick runs. The bandwidth is reduced
    /// to 25 MHz so the per-subcarrier noise power is unchanged from the paper
    /// preset. Both legs of the IRS path are halved, which recovers the 12 dB
    /// of array gain lost to the smaller arrays; the direct link is kept.
    pub fn small() -> Self {
        Self {
            bandwidth_hz: 25e6,
            bs_dims: [8, 8],
            irs_dims: [8, 8],
            subcarriers: 16,
            cp_len: 16,
            dict_ratio: 2,
            bs_irs_m: 25.0,
            irs_user_m: 5.0,
            trials: 50,
            ..Self::paper()
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Paper => Self::paper(),
            Preset::Small => Self::small(),
        }
    }

    /// Parse a config file body. `preset` overrides the file's own `preset` key.
    pub fn from_toml_str(text: &str, preset: Option<Preset>) -> Result<Self> {
        let mut table: toml::Table = text.parse()?;
        let file_preset = match table.remove("preset") {
            Some(toml::Value::String(s)) => Some(s.parse::<Preset>()?),
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "`preset` must be a string, got {other}"
                )))
            }
            None => None,
        };
        let base = Self::preset(preset.or(file_preset).unwrap_or(Preset::Paper));
        let mut merged =
            toml::Table::try_from(&base).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        merged.extend(table);
        let cfg: Self = toml::Value::Table(merged).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, preset: Option<Preset>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, preset)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn bs(&self) -> ArrayDims {
        ArrayDims::new(self.bs_dims[0], self.bs_dims[1]).expect("validated")
    }

    pub fn irs(&self) -> ArrayDims {
        ArrayDims::new(self.irs_dims[0], self.irs_dims[1]).expect("validated")
    }

    /// Sampling period `T_s = 1 / bandwidth`.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Largest admissible path delay, `(N_CP - 1) T_s`.
    pub fn max_delay(&self) -> f64 {
        (self.cp_len as f64 - 1.0) * self.sample_period()
    }

    pub fn rician_linear(&self) -> f64 {
        10f64.powf(self.rician_db / 10.0)
    }

    /// Pilot slots for a given `r_p`, rounded to the nearest integer.
    pub fn pilots_for(&self, pilot_ratio: f64) -> usize {
        let total =
            (self.bs_dims[0] * self.bs_dims[1] + self.irs_dims[0] * self.irs_dims[1]) as f64;
        ((pilot_ratio * total).round() as usize).max(1)
    }

    pub fn pilots(&self) -> usize {
        self.pilots_for(self.pilot_ratio)
    }

    /// Dictionary grid `(G_x, G_y)` for an array at redundancy `r_dic`.
    pub fn dict_grid(dims: ArrayDims, dict_ratio: usize) -> (usize, usize) {
        let (ox, oy) = split_ratio(dict_ratio);
        (dims.nx() * ox, dims.ny() * oy)
    }

    /// Noise power per subcarrier in watts.
    pub fn noise_power(&self) -> f64 {
        noise_power(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_scale * self.noise_power()
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, d) in [("bs_dims", self.bs_dims), ("irs_dims", self.irs_dims)] {
            if d[0] == 0 || d[1] == 0 {
                return bad(format!("{name} must be positive, got {d:?}"));
            }
        }
        if !(self.carrier_hz > 0.0 && self.bandwidth_hz > 0.0) {
            return bad("carrier and bandwidth must be positive".into());
        }
        if self.subcarriers == 0 || self.cp_len == 0 {
            return bad("subcarriers and cp_len must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return bad(format!("rolloff {} outside [0, 1]", self.rolloff));
        }
        if self.rf_chains_irs + self.rf_chains_user != self.rf_chains || self.rf_chains == 0 {
            return bad(format!(
                "rf_chains_irs ({}) + rf_chains_user ({}) must equal rf_chains ({}) > 0",
                self.rf_chains_irs, self.rf_chains_user, self.rf_chains
            ));
        }
        for (name, d) in [
            ("bs_irs_m", self.bs_irs_m),
            ("bs_user_m", self.bs_user_m),
            ("irs_user_m", self.irs_user_m),
        ] {
            if d.is_nan() || d <= 0.0 {
                return bad(format!("{name} must be positive"));
            }
            if d / SPEED_OF_LIGHT > self.max_delay() {
                return bad(format!(
                    "{name} = {d} m gives a LoS delay beyond the CP window ({:.3e} s)",
                    self.max_delay()
                ));
            }
        }
        if !(self.blockage_loss_db >= 0.0 && self.blockage_loss_db.is_finite()) {
            return bad("blockage_loss_db must be finite and >= 0".into());
        }
        match self.user_kind {
            UserKind::Blocked if self.nlos_bs_user == 0 => {
                return bad("blocked user needs nlos_bs_user >= 1".into())
            }
            UserKind::Unblocked if self.nlos_irs_user == 0 => {
                return bad("unblocked user needs nlos_irs_user >= 1".into())
            }
            _ => {}
        }
        if [self.pilot_ratio]
            .iter()
            .chain(&self.rp_values)
            .any(|r| r.is_nan() || *r <= 0.0)
        {
            return bad("pilot ratios must be positive".into());
        }
        if self.dict_ratio == 0 || self.rdic_values.contains(&0) {
            return bad("dictionary ratios must be >= 1".into());
        }
        if self.ptx_dbm.is_empty() {
            return bad("ptx_dbm must be nonempty".into());
        }
        if self.epsilon_scale.is_nan() || self.epsilon_scale <= 0.0 {
            return bad("epsilon_scale must be positive".into());
        }
        if !(self.angle_sector_rad > 0.0 && self.angle_sector_rad <= std::f64::consts::FRAC_PI_2) {
            return bad("angle_sector_rad must be in (0, pi/2]".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        Ok(())
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::paper()
    }
}

/// Per-axis oversampling `(ox, oy)` with `ox * oy = r` and `ox >= oy`, as
/// square as possible.
pub fn split_ratio(r: usize) -> (usize, usize) {
    let mut oy = (r as f64).sqrt().floor() as usize;
    while oy > 1 && !r.is_multiple_of(oy) {
        oy -= 1;
    }
    let oy = oy.max(1);
    (r / oy, oy)
}

/// Per-subcarrier noise power in watts: the noise spectral density integrated
/// over `bandwidth / K`.
pub fn noise_power(cfg: &SystemConfig) -> f64 {
    let dbm = cfg.nsd_dbm_hz + 10.0 * (cfg.bandwidth_hz / cfg.subcarriers as f64).log10();
    dbm_to_watts(dbm)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_power_paper_preset() {
        let cfg = SystemConfig::paper();
        let dbm = watts_to_dbm(cfg.noise_power());
        let want = -174.0 + 10.0 * 1.5625e6f64.log10();
        assert!((dbm - want).abs() < 1e-9);
        assert!((dbm - (-112.06)).abs() < 0.01);
    }

    #[test]
    fn noise_power_single_carrier_and_doubling() {
        let mut cfg = SystemConfig::paper();
        cfg.subcarriers = 1;
        assert!((watts_to_dbm(cfg.noise_power()) - (-94.0)).abs() < 1e-9);
        cfg.subcarriers = 32;
        let a = watts_to_dbm(cfg.noise_power());
        cfg.subcarriers = 64;
        let b = watts_to_dbm(cfg.noise_power());
        assert!((a - b - 10.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn small_preset_keeps_per_subcarrier_noise() {
        let a = SystemConfig::paper().noise_power();
        let b = SystemConfig::small().noise_power();
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derived_knobs() {
        let cfg = SystemConfig::paper();
        assert_eq!(cfg.pilots(), 128);
        assert_eq!(SystemConfig::dict_grid(cfg.bs(), 4), (32, 32));
        assert_eq!(SystemConfig::dict_grid(cfg.bs(), 1), (16, 16));
        assert_eq!(SystemConfig::dict_grid(cfg.bs(), 2), (32, 16));
        assert_eq!(split_ratio(8), (4, 2));
        assert_eq!(split_ratio(9), (3, 3));
        assert_eq!(split_ratio(7), (7, 1));
    }

    #[test]
    fn presets_validate() {
        SystemConfig::paper().validate().unwrap();
        SystemConfig::small().validate().unwrap();
    }

    #[test]
    fn file_overrides_preset() {
        let cfg = SystemConfig::from_toml_str("preset = \"small\"\ntrials = 7\n", None).unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.bs_dims, [8, 8]);
        let cfg = SystemConfig::from_toml_str("preset = \"small\"", Some(Preset::Paper)).unwrap();
        assert_eq!(cfg.bs_dims, [16, 16]);
        let cfg = SystemConfig::from_toml_str("user_kind = \"unblocked\"", None).unwrap();
        assert_eq!(cfg.user_kind, UserKind::Unblocked);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = SystemConfig::from_toml_str("trails = 3\n", None).unwrap_err();
        assert!(err.to_string().contains("trails"), "{err}");
    }

    #[test]
    fn rf_split_must_add_up() {
        let err = SystemConfig::from_toml_str("rf_chains_irs = 2\n", None).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn delay_outside_cp_rejected() {
        let err = SystemConfig::from_toml_str("bs_irs_m = 500.0\n", None).unwrap_err();
        assert!(err.to_string().contains("CP"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = SystemConfig::paper();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.master_seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
