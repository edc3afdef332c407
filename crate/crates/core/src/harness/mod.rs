//! Experiment orchestration: configuration, SNR bookkeeping, parallel
//! Monte Carlo sweeps and result files.

pub mod config;
pub mod output;
pub mod sim;
pub mod snr;
pub mod sweep;

pub use config::{GainMode, PepPair, Scheme, SimConfig, SnrAxis};
pub use output::{analytic_overlay, emit_results, parse_results, AnalyticRecord, Format};
pub use snr::{noise_for_snr, snr_at_user};
pub use sweep::{run_ber_sweep, run_pep_experiment, BerRecord, PepRecord};
