//! Complex-vector primitives for OFDM blocks: unitary DFT/IDFT, conjugate
//! time reversal, circular delays, cyclic prefixes and circular convolution.
//!
//! Storage is 0-based. Sample `n` of a block corresponds to the 1-based index
//! `n + 1`, and subcarrier `k` carries the phase `e^{-j2π k d / N}` for a
//! delay of `d` samples.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Which side of the DFT a block lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

/// One OFDM block of `N` complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBlock<T> {
    samples: Vec<Cplx<T>>,
    domain: Domain,
}

impl<T: Real> ComplexBlock<T> {
    /// Builds a block, rejecting lengths below 2 and non-finite entries.
    pub fn new(samples: Vec<Cplx<T>>, domain: Domain) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::arg(format!("block length {} < 2", samples.len())));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::arg("block contains non-finite samples"));
        }
        Ok(Self { samples, domain })
    }

    pub fn time(samples: Vec<Cplx<T>>) -> Result<Self> {
        Self::new(samples, Domain::Time)
    }

    pub fn frequency(samples: Vec<Cplx<T>>) -> Result<Self> {
        Self::new(samples, Domain::Frequency)
    }

    pub fn zeros(n: usize, domain: Domain) -> Self {
        Self { samples: vec![Cplx::new(T::zero(), T::zero()); n], domain }
    }

    // Internal constructor for outputs of operations on already-valid blocks.
    pub(crate) fn from_parts(samples: Vec<Cplx<T>>, domain: Domain) -> Self {
        Self { samples, domain }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &[Cplx<T>] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Cplx<T>> {
        self.samples
    }

    /// `‖x‖²`
    pub fn energy(&self) -> T {
        self.samples.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr())
    }

    /// Multiplies every sample by a real factor.
    pub fn scaled(mut self, factor: T) -> Self {
        for s in &mut self.samples {
            *s = *s * factor;
        }
        self
    }

    /// Element-wise sum of two blocks in the same domain.
    pub fn add_assign(&mut self, other: &ComplexBlock<T>) -> Result<()> {
        if self.len() != other.len() || self.domain != other.domain {
            return Err(Error::arg("cannot add blocks of different length or domain"));
        }
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += *b;
        }
        Ok(())
    }
}

/// A block with a cyclic prefix prepended: `cp_len + N` samples.
///
/// Blocks produced by [`add_cp`] satisfy the cyclic-prefix property. Blocks
/// coming out of a dispersive channel keep the same framing, but their
/// prefix region carries inter-block leakage and is only ever discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct CpBlock<T> {
    samples: Vec<Cplx<T>>,
    cp_len: usize,
}

impl<T: Real> CpBlock<T> {
    pub(crate) fn from_parts(samples: Vec<Cplx<T>>, cp_len: usize) -> Self {
        debug_assert!(cp_len <= samples.len());
        Self { samples, cp_len }
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Length of the payload `N`.
    pub fn payload_len(&self) -> usize {
        self.samples.len() - self.cp_len
    }

    pub fn samples(&self) -> &[Cplx<T>] {
        &self.samples
    }

    /// Whether the first `cp_len` samples repeat the last `cp_len` ones.
    pub fn has_cyclic_prefix(&self) -> bool {
        let n = self.payload_len();
        (0..self.cp_len).all(|i| self.samples[i] == self.samples[n + i])
    }
}

/// Planned unitary DFT pair for a fixed block size.
///
/// Use this in hot loops; the free functions [`dft`] and [`idft`] plan a
/// transform on every call.
#[derive(Clone)]
pub struct Ofdm<T: Real> {
    n: usize,
    scale: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Ofdm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm").field("n", &self.n).finish()
    }
}

impl<T: Real> Ofdm<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config(format!("block size {n} < 2")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            scale: T::one() / T::of(n as f64).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `F·x` with `F` the unitary DFT matrix.
    pub fn dft(&self, x: &ComplexBlock<T>) -> Result<ComplexBlock<T>> {
        self.check(x, Domain::Time)?;
        Ok(ComplexBlock::from_parts(self.run(&self.forward, x.samples()), Domain::Frequency))
    }

    /// `Fᴴ·X`
    pub fn idft(&self, x: &ComplexBlock<T>) -> Result<ComplexBlock<T>> {
        self.check(x, Domain::Frequency)?;
        Ok(ComplexBlock::from_parts(self.run(&self.inverse, x.samples()), Domain::Time))
    }

    fn check(&self, x: &ComplexBlock<T>, expect: Domain) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::config(format!(
                "block length {} does not match configured N = {}",
                x.len(),
                self.n
            )));
        }
        if x.domain() != expect {
            return Err(Error::arg(format!("expected a {expect:?}-domain block")));
        }
        Ok(())
    }

    fn run(&self, plan: &Arc<dyn Fft<T>>, input: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut buf = input.to_vec();
        plan.process(&mut buf);
        for s in &mut buf {
            *s = *s * self.scale;
        }
        buf
    }
}

/// Unitary DFT of a time-domain block.
pub fn dft<T: Real>(x: &ComplexBlock<T>) -> Result<ComplexBlock<T>> {
    Ofdm::new(x.len())?.dft(x)
}

/// Unitary inverse DFT of a frequency-domain block.
pub fn idft<T: Real>(x: &ComplexBlock<T>) -> Result<ComplexBlock<T>> {
    Ofdm::new(x.len())?.idft(x)
}

/// `η(x*)`: conjugate and reverse samples `1..N-1`, keeping sample 0 in place.
///
/// In the frequency domain this is plain conjugation: `F·η(x*) = (F·x)*`.
pub fn conj_time_reverse<T: Real>(x: &ComplexBlock<T>) -> ComplexBlock<T> {
    let s = x.samples();
    let n = s.len();
    let out = (0..n).map(|i| s[(n - i) % n].conj()).collect();
    ComplexBlock::from_parts(out, x.domain())
}

/// `Ψ_d·x`: circular shift by `d` samples, `out[n] = x[(n - d) mod N]`.
pub fn apply_cyclic_delay<T: Real>(x: &ComplexBlock<T>, d: usize) -> Result<ComplexBlock<T>> {
    let n = x.len();
    if d >= n {
        return Err(Error::arg(format!("delay {d} outside 0..{n}")));
    }
    let s = x.samples();
    let out = (0..n).map(|i| s[(i + n - d) % n]).collect();
    Ok(ComplexBlock::from_parts(out, x.domain()))
}

/// Prepends the last `n_cp` samples of `x`.
pub fn add_cp<T: Real>(x: &ComplexBlock<T>, n_cp: usize) -> Result<CpBlock<T>> {
    let n = x.len();
    if n_cp > n {
        return Err(Error::arg(format!("cyclic prefix {n_cp} longer than block {n}")));
    }
    let s = x.samples();
    let mut out = Vec::with_capacity(n + n_cp);
    out.extend_from_slice(&s[n - n_cp..]);
    out.extend_from_slice(s);
    Ok(CpBlock::from_parts(out, n_cp))
}

/// Drops the prefix and returns the `N`-sample payload as a time-domain block.
pub fn remove_cp<T: Real>(b: &CpBlock<T>) -> ComplexBlock<T> {
    ComplexBlock::from_parts(b.samples()[b.cp_len()..].to_vec(), Domain::Time)
}

/// `circulant(taps)·x`, i.e. `out[n] = Σ_l taps[l]·x[(n - l) mod N]`.
pub fn circular_convolve<T: Real>(x: &ComplexBlock<T>, taps: &[Cplx<T>]) -> Result<ComplexBlock<T>> {
    let n = x.len();
    if taps.len() > n {
        return Err(Error::arg(format!("{} taps exceed block length {n}", taps.len())));
    }
    let s = x.samples();
    let zero = Cplx::new(T::zero(), T::zero());
    let out = (0..n)
        .map(|i| {
            taps.iter()
                .enumerate()
                .fold(zero, |acc, (l, h)| acc + *h * s[(i + n - l) % n])
        })
        .collect();
    Ok(ComplexBlock::from_parts(out, x.domain()))
}
