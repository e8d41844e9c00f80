//! Experiment configuration file.
//!
//! The file is TOML with four tables, `[system]`, `[scheme]`, `[channel]`
//! and `[sweep]`. Unknown keys are rejected.
//!
//! ```toml
//! [system]
//! n = 256
//! alpha_max = 4
//! l_max = 2
//!
//! [scheme]
//! kind = "embedded"
//!
//! [channel]
//! preset = "eva"
//!
//! [sweep]
//! snr_p_db = 30.0
//! snr_d_db = [10.0, 14.0, 18.0]
//! zeta = [4.0, 8.0, 15.0]
//! trials = 2000
//! seed = 1
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::channel::PowerDelayProfile;
use crate::error::{AfdmError, Result};
use crate::layout::{build_layout, Scheme};
use crate::params::AfdmParams;

/// Frame organisation of one simulated link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkScheme {
    /// Pilot-only frame for estimation, then a frame of data only.
    Spa,
    /// Single pilot with data in the same frame.
    Embedded,
    /// `pilots` pilots with data in the same frame.
    Mpa { pilots: usize },
    Mimo { tx: usize, rx: usize },
    Uplink { users: usize },
    Downlink { users: usize },
}

impl LinkScheme {
    /// Layout scheme of the pilot-bearing frame.
    pub fn layout_scheme(&self) -> Scheme {
        match *self {
            LinkScheme::Spa | LinkScheme::Embedded => Scheme::Spa,
            LinkScheme::Mpa { pilots } => Scheme::Mpa(pilots),
            LinkScheme::Mimo { tx, .. } => Scheme::Mimo(tx),
            LinkScheme::Uplink { users } => Scheme::Uplink(users),
            LinkScheme::Downlink { users } => Scheme::Downlink(users),
        }
    }

    /// `(transmitters, receivers)`.
    pub fn antennas(&self) -> (usize, usize) {
        match *self {
            LinkScheme::Spa | LinkScheme::Embedded | LinkScheme::Mpa { .. } => (1, 1),
            LinkScheme::Mimo { tx, rx } => (tx, rx),
            LinkScheme::Uplink { users } => (users, 1),
            LinkScheme::Downlink { users } => (1, users),
        }
    }
}

impl fmt::Display for LinkScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkScheme::Spa => write!(f, "spa"),
            LinkScheme::Embedded => write!(f, "embedded"),
            LinkScheme::Mpa { pilots } => write!(f, "mpa{pilots}"),
            LinkScheme::Mimo { tx, rx } => write!(f, "mimo{tx}x{rx}"),
            LinkScheme::Uplink { users } => write!(f, "ul{users}"),
            LinkScheme::Downlink { users } => write!(f, "dl{users}"),
        }
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: AfdmParams,
    pub cpp_len: usize,
    pub scheme: LinkScheme,
    pub pdp: PowerDelayProfile,
    pub snr_p_db: f64,
    /// `f64::INFINITY` runs without noise.
    pub snr_d_db: Vec<f64>,
    pub zeta: Vec<f64>,
    pub ideal_csi: bool,
    /// Frames per point, upper bound.
    pub trials: usize,
    /// Stop a point early once this many bit errors are counted; 0 disables.
    pub min_bit_errors: u64,
    pub seed: u64,
    /// Recorded only; the discrete model does not depend on them.
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
}

impl SimConfig {
    /// Defaults: N = 256, alpha_max = 4, l_max = 2, embedded pilot, EVA taps,
    /// SNRp = 30 dB, zeta = 8.
    pub fn new(scheme: LinkScheme) -> Result<Self> {
        let cfg = SimConfig {
            params: AfdmParams::new(256, 4, 2, None)?,
            cpp_len: 2,
            scheme,
            pdp: PowerDelayProfile::eva(),
            snr_p_db: 30.0,
            snr_d_db: vec![18.0],
            zeta: vec![8.0],
            ideal_csi: false,
            trials: 200,
            min_bit_errors: 100,
            seed: 1,
            carrier_hz: 4e9,
            subcarrier_spacing_hz: 444.0,
        };
        Ok(cfg)
    }

    pub fn with_params(mut self, n: usize, alpha_max: usize, l_max: usize) -> Result<Self> {
        self.params = AfdmParams::new(n, alpha_max, l_max, None)?;
        self.cpp_len = l_max;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AfdmError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| AfdmError::Config(e.to_string()))?;
        file.into_config()
    }

    /// Checks everything a run needs before any frame is simulated.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(AfdmError::Config("trials must be at least 1".into()));
        }
        if self.snr_d_db.is_empty() {
            return Err(AfdmError::Config("snr_d_db is empty".into()));
        }
        if let Some(s) = self.snr_d_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(AfdmError::Config(format!("snr_d_db value {s} is not usable")));
        }
        if !self.snr_p_db.is_finite() {
            return Err(AfdmError::Config(format!("snr_p_db = {} is not finite", self.snr_p_db)));
        }
        if !self.ideal_csi {
            if self.zeta.is_empty() {
                return Err(AfdmError::Config("zeta is empty".into()));
            }
            if let Some(z) = self.zeta.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
                return Err(AfdmError::Config(format!("zeta value {z} must be positive")));
            }
        }
        if self.cpp_len < self.params.l_max() {
            return Err(AfdmError::Config(format!(
                "cpp_len = {} is shorter than l_max = {}",
                self.cpp_len,
                self.params.l_max()
            )));
        }
        if self.pdp.max_delay() > self.params.l_max() {
            return Err(AfdmError::Config(format!(
                "channel tap at delay {} exceeds l_max = {}",
                self.pdp.max_delay(),
                self.params.l_max()
            )));
        }
        match self.scheme {
            LinkScheme::Mpa { pilots: 0 }
            | LinkScheme::Mimo { tx: 0, .. }
            | LinkScheme::Mimo { rx: 0, .. }
            | LinkScheme::Uplink { users: 0 }
            | LinkScheme::Downlink { users: 0 } => {
                return Err(AfdmError::Config(format!("{} has no antennas or pilots", self.scheme)))
            }
            _ => {}
        }
        let with_data = !matches!(self.scheme, LinkScheme::Spa);
        let layouts = build_layout(self.scheme.layout_scheme(), &self.params, with_data)?;
        if with_data && layouts.iter().any(|l| l.data_slots().is_empty()) {
            return Err(AfdmError::InfeasibleLayout(format!(
                "{} leaves no data slots at N = {}",
                self.scheme,
                self.params.n()
            )));
        }
        Ok(())
    }

    /// Short digest identifying the configuration.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemSection,
    scheme: SchemeSection,
    #[serde(default)]
    channel: ChannelSection,
    sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    n: usize,
    alpha_max: usize,
    l_max: usize,
    c2: Option<f64>,
    cpp_len: Option<usize>,
    carrier_hz: Option<f64>,
    subcarrier_spacing_hz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeSection {
    kind: String,
    pilots: Option<usize>,
    tx: Option<usize>,
    rx: Option<usize>,
    users: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    preset: Option<String>,
    taps: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    snr_p_db: f64,
    snr_d_db: OneOrMany,
    zeta: Option<OneOrMany>,
    #[serde(default)]
    ideal_csi: bool,
    trials: usize,
    #[serde(default = "default_min_errors")]
    min_bit_errors: u64,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_min_errors() -> u64 {
    100
}

fn default_seed() -> u64 {
    1
}

impl SchemeSection {
    fn into_scheme(self) -> Result<LinkScheme> {
        let SchemeSection {
            kind,
            pilots,
            tx,
            rx,
            users,
        } = self;
        let unexpected = |name: &str, present: bool| -> Result<()> {
            if present {
                return Err(AfdmError::Config(format!("key `{name}` does not apply to scheme `{kind}`")));
            }
            Ok(())
        };
        let required = |name: &str, v: Option<usize>| -> Result<usize> {
            v.ok_or_else(|| AfdmError::Config(format!("scheme `{kind}` needs `{name}`")))
        };
        let scheme = match kind.as_str() {
            "spa" | "embedded" => {
                unexpected("pilots", pilots.is_some())?;
                unexpected("users", users.is_some())?;
                unexpected("tx", tx.is_some())?;
                unexpected("rx", rx.is_some())?;
                if kind == "spa" {
                    LinkScheme::Spa
                } else {
                    LinkScheme::Embedded
                }
            }
            "mpa" => {
                unexpected("users", users.is_some())?;
                unexpected("tx", tx.is_some())?;
                unexpected("rx", rx.is_some())?;
                LinkScheme::Mpa {
                    pilots: required("pilots", pilots)?,
                }
            }
            "mimo" => {
                unexpected("pilots", pilots.is_some())?;
                unexpected("users", users.is_some())?;
                LinkScheme::Mimo {
                    tx: required("tx", tx)?,
                    rx: required("rx", rx)?,
                }
            }
            "uplink" | "downlink" => {
                unexpected("pilots", pilots.is_some())?;
                unexpected("tx", tx.is_some())?;
                unexpected("rx", rx.is_some())?;
                let users = required("users", users)?;
                if kind == "uplink" {
                    LinkScheme::Uplink { users }
                } else {
                    LinkScheme::Downlink { users }
                }
            }
            other => return Err(AfdmError::Config(format!("unknown scheme kind `{other}`"))),
        };
        Ok(scheme)
    }
}

impl ConfigFile {
    fn into_config(self) -> Result<SimConfig> {
        let sys = self.system;
        let params = AfdmParams::new(sys.n, sys.alpha_max, sys.l_max, sys.c2).map_err(|e| AfdmError::Config(e.to_string()))?;
        let pdp = match (self.channel.preset.as_deref(), self.channel.taps) {
            (Some(_), Some(_)) => return Err(AfdmError::Config("give either `preset` or `taps`, not both".into())),
            (None, Some(taps)) => PowerDelayProfile::new(taps).map_err(|e| AfdmError::Config(e.to_string()))?,
            (Some("eva") | None, None) => PowerDelayProfile::eva(),
            (Some(other), None) => return Err(AfdmError::Config(format!("unknown channel preset `{other}`"))),
        };
        let sweep = self.sweep;
        let cfg = SimConfig {
            cpp_len: sys.cpp_len.unwrap_or(params.l_max()),
            params,
            scheme: self.scheme.into_scheme()?,
            pdp,
            snr_p_db: sweep.snr_p_db,
            snr_d_db: sweep.snr_d_db.into_vec(),
            zeta: sweep.zeta.map(OneOrMany::into_vec).unwrap_or_default(),
            ideal_csi: sweep.ideal_csi,
            trials: sweep.trials,
            min_bit_errors: sweep.min_bit_errors,
            seed: sweep.seed,
            carrier_hz: sys.carrier_hz.unwrap_or(4e9),
            subcarrier_spacing_hz: sys.subcarrier_spacing_hz.unwrap_or(444.0),
        };
        cfg.validate().map_err(|e| match e {
            AfdmError::Config(_) => e,
            other => AfdmError::Config(other.to_string()),
        })?;
        Ok(cfg)
    }
}
