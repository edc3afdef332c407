//! Monte Carlo simulator for asynchronous multi-relay two-way relaying with
//! blind differential detection.
//!
//! Two schemes are provided: [`jbd`], where relays only conjugate and
//! time-reverse, and [`dstc`], where relays apply distributed space-time
//! dispersion matrices. The building blocks are generic over the scalar type
//! ([`Real`] is implemented for `f32` and `f64`); the aliases below fix it to
//! `f64`, which the harness uses.

pub mod channel;
pub mod dsp;
pub mod dstc;
pub mod error;
pub mod harness;
pub mod jbd;
pub mod matrix;
pub mod psk;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type Complex64 = Cplx<f64>;
pub type Block = dsp::ComplexBlock<f64>;
pub type CpBlock = dsp::CpBlock<f64>;
pub type Ofdm = dsp::Ofdm<f64>;
pub type Matrix = matrix::CMatrix<f64>;
pub type Psk = psk::PskConstellation<f64>;
pub type Channels = channel::ChannelSet<f64>;
pub type Profile = channel::PowerDelayProfile<f64>;
pub type Codeword = dstc::StCodeword<f64>;
pub type Dispersion = dstc::DispersionSet<f64>;
