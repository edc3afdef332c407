//! Experiment description.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{DelayTable, PowerDelayProfile};
use crate::dstc::StDesign;
use crate::error::{Error, Result};

/// Which detector chain to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Blind JBD: estimates `|ν|` and `μ` from the frame.
    Jbd,
    /// Blind JBD-DSTC.
    JbdDstc,
    /// JBD with the exact self gain.
    Genie,
    /// Coherent detection with full CSI.
    Coherent,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Jbd => "jbd",
            Scheme::JbdDstc => "jbd_dstc",
            Scheme::Genie => "genie",
            Scheme::Coherent => "coherent",
        }
    }

    pub fn is_dstc(self) -> bool {
        self == Scheme::JbdDstc
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jbd" => Ok(Scheme::Jbd),
            "jbd_dstc" | "dstc" => Ok(Scheme::JbdDstc),
            "genie" => Ok(Scheme::Genie),
            "coherent" => Ok(Scheme::Coherent),
            _ => Err(Error::config(format!("unknown scheme '{s}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How relay gains are chosen when `relay_gains` is not given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// `G_r = 1`.
    Unit,
    /// `G_r = 1/(P_A + P_B + σ_r²)`.
    Normalized,
    /// `G_{r,k} = 1/(P_A|q_Ar,k|² + P_B|q_Br,k|² + σ_r²)`, applied per subcarrier (JBD only).
    PerSubcarrier,
}

/// Meaning of the values in `snr_grid_db`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrAxis {
    /// End-to-end SNR at user B: `ΣG_r·P_A / (ΣG_r·σ_r² + σ_B²)`.
    User,
    /// Per-hop SNR `P_A/σ²`.
    PerHop,
}

/// Codeword pair for the pairwise error experiment, as constellation indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PepPair {
    pub sent: Vec<usize>,
    pub alternative: Vec<usize>,
}

/// Full description of one experiment. Every field has a default, so a
/// JSON config only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: Scheme,
    /// Subcarriers `N`.
    pub subcarriers: usize,
    /// OFDM blocks per frame `M`.
    pub blocks: usize,
    /// Blocks per space-time group `T` (DSTC).
    pub group_len: usize,
    /// PSK order `Q` of both users.
    pub order: usize,
    /// Space-time design; derived from `group_len` and `order` when unset.
    pub design: Option<StDesign>,
    pub p_a: f64,
    pub p_b: f64,
    /// `P_r` per relay; its length sets `N_R`.
    pub relay_powers: Vec<f64>,
    /// Explicit `G_r` per relay; overrides `gain_mode`.
    pub relay_gains: Option<Vec<f64>>,
    pub gain_mode: GainMode,
    pub delays: DelayTable,
    /// Tap standard deviations shared by every link.
    pub profile: PowerDelayProfile<f64>,
    /// Reuse uplink taps on the downlink. JBD forces this on.
    pub reciprocal: bool,
    pub cp1: Option<usize>,
    pub cp2: Option<usize>,
    pub snr_grid_db: Vec<f64>,
    pub snr_axis: SnrAxis,
    pub min_errors: u64,
    /// Frames simulated per point before the error target may stop it.
    pub min_frames: u64,
    pub max_frames: u64,
    pub seed: u64,
    /// Disable every noise source.
    pub noiseless: bool,
    /// Constellation index repeated to form the reference block.
    pub reference_symbol: usize,
    /// Codeword pair for `pep` runs.
    pub pep: Option<PepPair>,
    /// Bandwidth in Hz; carried as metadata only.
    pub bandwidth_hz: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Jbd,
            subcarriers: 64,
            blocks: 200,
            group_len: 2,
            order: 4,
            design: None,
            p_a: 1.0,
            p_b: 1.0,
            relay_powers: vec![1.0, 1.0],
            relay_gains: None,
            gain_mode: GainMode::Unit,
            delays: DelayTable::two_relay_default(),
            profile: PowerDelayProfile::three_tap(),
            reciprocal: true,
            cp1: None,
            cp2: None,
            snr_grid_db: (0..=6).map(|i| 5.0 * i as f64).collect(),
            snr_axis: SnrAxis::User,
            min_errors: 200,
            min_frames: 1,
            max_frames: 100_000,
            seed: 1,
            noiseless: false,
            reference_symbol: 0,
            pep: None,
            bandwidth_hz: 8000.0,
        }
    }
}

/// Frames simulated per point in noiseless mode, where no errors are expected.
pub const NOISELESS_FRAME_CAP: u64 = 100;

impl SimConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    pub fn relays(&self) -> usize {
        self.relay_powers.len()
    }

    /// Space-time groups per frame `M_G = M/T`.
    pub fn groups(&self) -> usize {
        self.blocks / self.group_len.max(1)
    }

    /// Design used by DSTC runs.
    pub fn st_design(&self) -> Result<StDesign> {
        if let Some(d) = self.design {
            return Ok(d);
        }
        match (self.group_len, self.order) {
            (2, 4) => Ok(StDesign::Alamouti),
            (2, 2) => Ok(StDesign::SystemI),
            (4, 2) => Ok(StDesign::SystemII),
            (t, q) => Err(Error::config(format!("no space-time design for T={t} with {q}-PSK"))),
        }
    }

    /// Minimum CP per hop, `max(L + d)`.
    pub fn min_cp_lengths(&self) -> (usize, usize) {
        let l = self.profile.len();
        (l + self.delays.max_uplink(), l + self.delays.max_downlink())
    }

    /// CP lengths actually used: configured values, or the minimum per hop.
    pub fn cp_lengths(&self) -> (usize, usize) {
        let (min1, min2) = self.min_cp_lengths();
        (self.cp1.unwrap_or(min1), self.cp2.unwrap_or(min2))
    }

    /// Effective channel reciprocity (JBD always needs it).
    pub fn uses_reciprocal_channels(&self) -> bool {
        self.reciprocal || !self.scheme.is_dstc()
    }

    /// Checks everything that can be checked before simulating.
    pub fn validate(&self) -> Result<()> {
        if self.subcarriers < 2 {
            return Err(Error::config("need at least 2 subcarriers"));
        }
        if self.relays() == 0 {
            return Err(Error::config("need at least one relay"));
        }
        self.delays.validate()?;
        if self.delays.relays() != self.relays() {
            return Err(Error::config(format!(
                "delay table lists {} relays but {} relay powers are given",
                self.delays.relays(),
                self.relays()
            )));
        }
        if self.delays.uplink.iter().chain(&self.delays.downlink).flatten().any(|&d| d >= self.subcarriers) {
            return Err(Error::config("delays must be shorter than the block"));
        }
        let powers_ok = [self.p_a, self.p_b].iter().chain(&self.relay_powers).all(|p| p.is_finite() && *p >= 0.0);
        if !powers_ok {
            return Err(Error::config("powers must be finite and non-negative"));
        }
        if let Some(g) = &self.relay_gains {
            if g.len() != self.relays() || g.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::config("relay_gains needs one finite non-negative value per relay"));
            }
        }
        if !self.order.is_power_of_two() || self.order < 2 {
            return Err(Error::config("PSK order must be a power of two >= 2"));
        }
        if self.reference_symbol >= self.order {
            return Err(Error::config("reference_symbol is not a constellation index"));
        }
        let (cp1, cp2) = self.cp_lengths();
        let (need1, need2) = self.min_cp_lengths();
        if cp1 < need1 {
            return Err(Error::config(format!("cp1 = {cp1} is shorter than max(L + d) on the uplink, {need1}")));
        }
        if cp2 < need2 {
            return Err(Error::config(format!("cp2 = {cp2} is shorter than max(L + d) on the downlink, {need2}")));
        }
        if cp1 > self.subcarriers || cp2 > self.subcarriers {
            return Err(Error::config("cyclic prefix longer than the block"));
        }
        if !self.scheme.is_dstc() && !self.delays.is_reciprocal() {
            return Err(Error::config("JBD requires d_ri = d_ir on every link"));
        }
        if self.scheme.is_dstc() {
            if self.group_len == 0 || self.blocks % self.group_len != 0 {
                return Err(Error::config(format!("M = {} is not divisible by T = {}", self.blocks, self.group_len)));
            }
            if self.groups() < 2 {
                return Err(Error::config("DSTC needs at least two groups per frame"));
            }
            let design = self.st_design()?;
            if design.block_len() != self.group_len {
                return Err(Error::config(format!("{design} has T = {}", design.block_len())));
            }
            if design.relays() != self.relays() {
                return Err(Error::config(format!("{design} is built for {} relays", design.relays())));
            }
            if design.requires_real_symbols() && self.order != 2 {
                return Err(Error::config(format!("{design} needs BPSK")));
            }
            if self.relay_gains.is_none() && self.gain_mode == GainMode::PerSubcarrier {
                return Err(Error::config("per-subcarrier gains are only defined for JBD"));
            }
            if self.uses_reciprocal_channels() && !self.delays.is_reciprocal() {
                return Err(Error::config("reciprocal channels require d_ri = d_ir"));
            }
        } else if self.blocks < 2 {
            return Err(Error::config("need at least two blocks per frame"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("SNR grid values must be finite"));
        }
        if self.relay_gains.is_none()
            && self.gain_mode == GainMode::PerSubcarrier
            && (self.noiseless || self.snr_axis == SnrAxis::User)
        {
            return Err(Error::config("per-subcarrier gains need noise and the per_hop SNR axis"));
        }
        if self.max_frames == 0 {
            return Err(Error::config("max_frames must be positive"));
        }
        if let Some(pair) = &self.pep {
            let t = self.group_len;
            if pair.sent.len() != t || pair.alternative.len() != t {
                return Err(Error::config(format!("pep codewords need {t} symbols each")));
            }
            if pair.sent.iter().chain(&pair.alternative).any(|&i| i >= self.order) {
                return Err(Error::config("pep symbol index outside the constellation"));
            }
            if pair.sent == pair.alternative {
                return Err(Error::config("pep codewords must differ"));
            }
        }
        Ok(())
    }

    /// Frames per point after applying the noiseless cap.
    pub fn frame_limit(&self) -> u64 {
        if self.noiseless {
            self.max_frames.min(NOISELESS_FRAME_CAP)
        } else {
            self.max_frames
        }
    }
}
