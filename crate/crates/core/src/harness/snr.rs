//! SNR bookkeeping for plot axes.
//!
//! All nodes share one noise variance `σ²`. The user-side SNR at user `i` is
//! `ΣG_r·P_i' / (ΣG_r·σ² + σ²)`, where `i'` is the partner.

use crate::channel::User;
use crate::error::{Error, Result};

use super::config::{GainMode, SimConfig, SnrAxis};

/// Nominal `ΣG_r` at noise variance `σ²`; per-subcarrier gains use their
/// flat-channel value.
pub fn gain_sum(config: &SimConfig, noise_var: f64) -> f64 {
    match (&config.relay_gains, config.gain_mode) {
        (Some(g), _) => g.iter().sum(),
        (None, GainMode::Unit) => config.relays() as f64,
        (None, GainMode::Normalized | GainMode::PerSubcarrier) => {
            config.relays() as f64 / (config.p_a + config.p_b + noise_var)
        }
    }
}

/// Linear SNR at `user` for noise variance `noise_var`.
pub fn snr_at_user(config: &SimConfig, noise_var: f64, user: User) -> Result<f64> {
    let partner = match user.partner() {
        User::A => config.p_a,
        User::B => config.p_b,
    };
    let g = gain_sum(config, noise_var);
    if !(partner > 0.0) || !(g > 0.0) {
        return Err(Error::arg("SNR is undefined with zero partner power or zero relay gain"));
    }
    if !(noise_var > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(g * partner / (g * noise_var + noise_var))
}

/// Noise variance giving `snr_db` on the configured axis. The user axis is
/// measured at user B.
pub fn noise_for_snr(config: &SimConfig, snr_db: f64) -> Result<f64> {
    let snr = 10f64.powf(snr_db / 10.0);
    match config.snr_axis {
        SnrAxis::PerHop => {
            if !(config.p_a > 0.0) {
                return Err(Error::arg("per-hop SNR needs P_A > 0"));
            }
            Ok(config.p_a / snr)
        }
        SnrAxis::User => {
            let fixed = config.relay_gains.is_some() || config.gain_mode == GainMode::Unit;
            if fixed {
                let g = gain_sum(config, 0.0);
                if !(g > 0.0) || !(config.p_a > 0.0) {
                    return Err(Error::arg("SNR is undefined with zero partner power or zero relay gain"));
                }
                return Ok(g * config.p_a / (snr * (g + 1.0)));
            }
            // gains depend on σ²; the SNR is strictly decreasing in σ²
            let f = |log_s2: f64| snr_at_user(config, log_s2.exp(), User::B).map(|v| v - snr);
            let (mut lo, mut hi) = (-80.0f64, 80.0f64);
            if f(lo)? < 0.0 || f(hi)? > 0.0 {
                return Err(Error::arg(format!("{snr_db} dB is out of reach for this configuration")));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok((0.5 * (lo + hi)).exp())
        }
    }
}
