//! SNR sweeps with deterministic parallel frame execution.
//!
//! Frames are run in parallel chunks, but results are folded in frame order
//! and the stopping rule is checked after every frame, so the records do not
//! depend on the worker count.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::User;
use crate::dstc::{pep_bound, PepParams};
use crate::error::{Error, Result};

use super::config::{Scheme, SimConfig};
use super::sim::{FrameOutcome, PepOutcome, Simulator};
use super::snr::noise_for_snr;

/// BER of one user at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    /// Receiving user.
    pub user: User,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub frames: u64,
}

impl BerRecord {
    /// Whether the point reached `min_errors` before the frame limit.
    pub fn reached(&self, min_errors: u64) -> bool {
        self.errors >= min_errors
    }
}

/// Pairwise error rate at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PepRecord {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub trials: u64,
    pub pairwise_errors: u64,
    pub pep: f64,
    /// Analytic bound; absent where it is undefined (`Ω ≤ 1` or no noise).
    pub bound: Option<f64>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))
}

/// Noise variance used at `snr_db`.
pub fn point_noise(config: &SimConfig, snr_db: f64) -> Result<f64> {
    if config.noiseless {
        Ok(0.0)
    } else {
        noise_for_snr(config, snr_db)
    }
}

/// Runs `frame` for indices `0, 1, …` until `done(state, frames)` holds, or
/// `limit` frames ran. Returns the folded state and the frame count.
fn run_until<S, O: Send>(
    pool: &rayon::ThreadPool,
    workers: usize,
    limit: u64,
    mut state: S,
    frame: impl Fn(u64) -> Result<O> + Sync,
    fold: impl Fn(&mut S, O),
    done: impl Fn(&S, u64) -> bool,
) -> Result<(S, u64)> {
    let chunk = (2 * workers.max(1)) as u64;
    let mut next = 0u64;
    while next < limit {
        let end = (next + chunk).min(limit);
        let results: Vec<Result<O>> = pool.install(|| (next..end).into_par_iter().map(&frame).collect());
        for r in results {
            fold(&mut state, r?);
            next += 1;
            if done(&state, next) {
                return Ok((state, next));
            }
        }
    }
    Ok((state, next))
}

/// BER of both users at every grid point.
pub fn run_ber_sweep(config: &SimConfig, workers: usize) -> Result<Vec<BerRecord>> {
    let sim = Simulator::new(config)?;
    let noise: Vec<f64> = config.snr_grid_db.iter().map(|&s| point_noise(config, s)).collect::<Result<_>>()?;
    let pool = pool(workers)?;
    let mut records = Vec::with_capacity(2 * noise.len());
    for (&snr_db, &noise_var) in config.snr_grid_db.iter().zip(&noise) {
        let key = snr_db.to_bits();
        let (total, frames) = run_until(
            &pool,
            workers,
            config.frame_limit(),
            FrameOutcome::default(),
            |f| sim.ber_frame(noise_var, key, f),
            |acc, o| {
                for u in 0..2 {
                    acc.bits[u] += o.bits[u];
                    acc.errors[u] += o.errors[u];
                }
            },
            |acc, n| n >= config.min_frames && acc.errors.iter().all(|&e| e >= config.min_errors),
        )?;
        for user in [User::A, User::B] {
            let i = user.index();
            let rec = BerRecord {
                scheme: config.scheme,
                user,
                snr_db,
                bits: total.bits[i],
                errors: total.errors[i],
                ber: total.errors[i] as f64 / total.bits[i] as f64,
                frames,
            };
            if !config.noiseless && !rec.reached(config.min_errors) {
                warn!(
                    "{} user {} at {snr_db} dB: stopped at {frames} frames with {} < {} errors",
                    config.scheme,
                    user.label(),
                    rec.errors,
                    config.min_errors
                );
            }
            records.push(rec);
        }
        info!("{} {snr_db} dB: {frames} frames, errors A={} B={}", config.scheme, total.errors[0], total.errors[1]);
    }
    Ok(records)
}

/// Pairwise error experiment for the codeword pair in `config.pep`.
pub fn run_pep_experiment(config: &SimConfig, workers: usize) -> Result<Vec<PepRecord>> {
    if !config.scheme.is_dstc() {
        return Err(Error::config("pep runs need scheme jbd_dstc"));
    }
    let pair = config.pep.clone().ok_or_else(|| Error::config("pep runs need a codeword pair"))?;
    let sim = Simulator::new(config)?;
    let book = crate::dstc::Codebook::enumerate(config.st_design()?, &crate::psk::PskConstellation::new(config.order)?)?;
    let (sent, alt) = (book.index_of(&pair.sent), book.index_of(&pair.alternative));
    let pool = pool(workers)?;
    let mut records = Vec::with_capacity(config.snr_grid_db.len());
    for &snr_db in &config.snr_grid_db {
        let noise_var = point_noise(config, snr_db)?;
        let key = snr_db.to_bits();
        let (total, frames) = run_until(
            &pool,
            workers,
            config.frame_limit(),
            PepOutcome::default(),
            |f| sim.pep_frame(noise_var, key, f, sent, alt),
            |acc, o| {
                acc.trials += o.trials;
                acc.errors += o.errors;
            },
            |acc, n| n >= config.min_frames && acc.errors >= config.min_errors,
        )?;
        if !config.noiseless && total.errors < config.min_errors {
            warn!("pep at {snr_db} dB: stopped at {frames} frames with {} < {} errors", total.errors, config.min_errors);
        }
        let params = PepParams {
            p_a: config.p_a,
            p_b: config.p_b,
            relay_powers: config.relay_powers.clone(),
            noise_var,
            block_len: config.group_len,
        };
        records.push(PepRecord {
            scheme: config.scheme,
            snr_db,
            trials: total.trials,
            pairwise_errors: total.errors,
            pep: total.errors as f64 / total.trials as f64,
            bound: pep_bound(&book.word(sent).matrix, &book.word(alt).matrix, &params).ok(),
        });
        info!("pep {snr_db} dB: {frames} frames, {} / {}", total.errors, total.trials);
    }
    Ok(records)
}
