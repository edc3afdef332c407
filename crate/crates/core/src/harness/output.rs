//! CSV/JSON persistence of sweep results.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dstc::{pep_bound, Codebook, PepParams};
use crate::error::{Error, Result};
use crate::jbd::analytic_ber;
use crate::psk::PskConstellation;

use super::config::SimConfig;
use super::sweep::{point_noise, BerRecord, PepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown format '{s}'"))),
        }
    }
}

/// Analytic curves evaluated on the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRecord {
    pub snr_db: f64,
    pub noise_var: f64,
    /// `P_A/σ²`.
    pub gamma1: f64,
    /// `ΣP_r/σ²`.
    pub gamma2: f64,
    /// High-SNR BPSK approximation `1/γ₁ + 1/(2γ₂)`.
    pub ber: f64,
    /// PEP bound for the configured codeword pair, where defined.
    pub pep_bound: Option<f64>,
}

/// A record type that can be written as a CSV row of fixed columns.
pub trait Tabular: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn row(&self) -> Vec<String>;
    /// Copy with floats rounded to the persisted precision.
    fn rounded(&self) -> Self;
}

/// Formats with 10 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

/// Rounds to 10 significant digits, matching [`fmt_float`].
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_float(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

impl Tabular for BerRecord {
    const HEADER: &'static [&'static str] = &["scheme", "user", "snr_db", "bits", "errors", "ber", "frames"];

    fn row(&self) -> Vec<String> {
        vec![
            self.scheme.to_string(),
            self.user.label().to_string(),
            fmt_float(self.snr_db),
            self.bits.to_string(),
            self.errors.to_string(),
            fmt_float(self.ber),
            self.frames.to_string(),
        ]
    }

    fn rounded(&self) -> Self {
        Self { snr_db: round_sig(self.snr_db), ber: round_sig(self.ber), ..self.clone() }
    }
}

impl Tabular for PepRecord {
    const HEADER: &'static [&'static str] = &["scheme", "snr_db", "trials", "pairwise_errors", "pep", "bound"];

    fn row(&self) -> Vec<String> {
        vec![
            self.scheme.to_string(),
            fmt_float(self.snr_db),
            self.trials.to_string(),
            self.pairwise_errors.to_string(),
            fmt_float(self.pep),
            fmt_opt(self.bound),
        ]
    }

    fn rounded(&self) -> Self {
        Self {
            snr_db: round_sig(self.snr_db),
            pep: round_sig(self.pep),
            bound: self.bound.map(round_sig),
            ..self.clone()
        }
    }
}

impl Tabular for AnalyticRecord {
    const HEADER: &'static [&'static str] = &["snr_db", "noise_var", "gamma1", "gamma2", "ber", "pep_bound"];

    fn row(&self) -> Vec<String> {
        vec![
            fmt_float(self.snr_db),
            fmt_float(self.noise_var),
            fmt_float(self.gamma1),
            fmt_float(self.gamma2),
            fmt_float(self.ber),
            fmt_opt(self.pep_bound),
        ]
    }

    fn rounded(&self) -> Self {
        Self {
            snr_db: round_sig(self.snr_db),
            noise_var: round_sig(self.noise_var),
            gamma1: round_sig(self.gamma1),
            gamma2: round_sig(self.gamma2),
            ber: round_sig(self.ber),
            pep_bound: self.pep_bound.map(round_sig),
        }
    }
}

/// Writes `records` to `out` in `format`.
pub fn write_records<R: Tabular, W: Write>(records: &[R], out: W, format: Format) -> Result<()> {
    let path = Path::new("<output>");
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(R::HEADER).map_err(|source| Error::Csv { path: path.into(), source })?;
            for r in records {
                w.write_record(r.row()).map_err(|source| Error::Csv { path: path.into(), source })?;
            }
            w.flush().map_err(|source| Error::Io { path: path.into(), source })
        }
        Format::Json => {
            let rounded: Vec<R> = records.iter().map(Tabular::rounded).collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rounded).map_err(|source| Error::Json { path: path.into(), source })?;
            writeln!(out).map_err(|source| Error::Io { path: path.into(), source })
        }
    }
}

/// Writes `records` to the file at `path`.
pub fn emit_results<R: Tabular>(records: &[R], path: &Path, format: Format) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    write_records(records, BufWriter::new(file), format).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io { path: path.into(), source },
        Error::Json { source, .. } => Error::Json { path: path.into(), source },
        Error::Csv { source, .. } => Error::Csv { path: path.into(), source },
        other => other,
    }
}

/// Reads records written by [`emit_results`].
pub fn parse_results<R: Tabular>(path: &Path, format: Format) -> Result<Vec<R>> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.into(), source })?;
            r.deserialize().collect::<std::result::Result<_, _>>().map_err(|source| Error::Csv { path: path.into(), source })
        }
        Format::Json => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
        }
    }
}

/// Analytic BER approximation (and PEP bound, when a pair is configured)
/// on the sweep grid, using per-hop SNRs at each point's noise variance.
pub fn analytic_overlay(config: &SimConfig) -> Result<Vec<AnalyticRecord>> {
    config.validate()?;
    let pair = match &config.pep {
        Some(p) => {
            let book = Codebook::<f64>::enumerate(config.st_design()?, &PskConstellation::new(config.order)?)?;
            Some((book.word(book.index_of(&p.sent)).matrix.clone(), book.word(book.index_of(&p.alternative)).matrix.clone()))
        }
        None => None,
    };
    let sum_pr: f64 = config.relay_powers.iter().sum();
    config
        .snr_grid_db
        .iter()
        .map(|&snr_db| {
            let noise_var = point_noise(config, snr_db)?;
            if !(noise_var > 0.0) {
                return Err(Error::config("analytic curves need a positive noise variance"));
            }
            let (gamma1, gamma2) = (config.p_a / noise_var, sum_pr / noise_var);
            let pep = pair.as_ref().and_then(|(c, c2)| {
                let p = PepParams {
                    p_a: config.p_a,
                    p_b: config.p_b,
                    relay_powers: config.relay_powers.clone(),
                    noise_var,
                    block_len: config.group_len,
                };
                pep_bound(c, c2, &p).ok()
            });
            Ok(AnalyticRecord { snr_db, noise_var, gamma1, gamma2, ber: analytic_ber(gamma1, gamma2)?, pep_bound: pep })
        })
        .collect()
}
