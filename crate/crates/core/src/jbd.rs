//! Joint blind-differential (JBD) scheme.
//!
//! Each user differentially encodes PSK symbols independently on every
//! subcarrier. Relays only conjugate and time-reverse what they receive, so
//! that user `B` sees on subcarrier `k`
//!
//! ```text
//! Y_k^(m) = μ_k·S_B,k^(m)* + ν_k·S_A,k^(m)* + V_k^(m)
//! ```
//!
//! with a real self gain `μ_k` and a complex cross gain `ν_k`. Both are
//! estimated blindly from one frame, the self term is subtracted, and the
//! partner's symbols are recovered with a symbol-wise differential detector.

use rand::Rng;

use crate::channel::{ChannelSet, Node, User};
use crate::dsp::{add_cp, conj_time_reverse, ComplexBlock, CpBlock, Ofdm};
use crate::error::{Error, Result};
use crate::psk::PskConstellation;
use crate::scalar::{twiddle, Cplx, Real};

/// Differentially encoded frame of one user: `M` rows of `N` subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffFrame<T> {
    /// Symbol indices of the data rows `m = 2..M` (`M - 1` rows).
    pub data: Vec<Vec<usize>>,
    /// Encoded symbols `S^(m)`, `M` rows; row 0 is the reference.
    pub encoded: Vec<Vec<Cplx<T>>>,
}

impl<T: Real> DiffFrame<T> {
    pub fn blocks(&self) -> usize {
        self.encoded.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.encoded.first().map_or(0, Vec::len)
    }

    pub fn reference(&self) -> &[Cplx<T>] {
        &self.encoded[0]
    }

    /// Encoded symbols of subcarrier `k` across all blocks.
    pub fn subcarrier(&self, k: usize) -> Vec<Cplx<T>> {
        self.encoded.iter().map(|row| row[k]).collect()
    }

    /// Data symbol values of subcarrier `k` for `m = 2..M`.
    pub fn data_symbols(&self, k: usize, constellation: &PskConstellation<T>) -> Vec<Cplx<T>> {
        self.data.iter().map(|row| constellation.point(row[k])).collect()
    }

    /// Uniformly random data over `blocks` blocks with the given reference row.
    pub fn random<R: Rng + ?Sized>(
        blocks: usize,
        reference: &[Cplx<T>],
        constellation: &PskConstellation<T>,
        rng: &mut R,
    ) -> Result<Self> {
        if blocks < 1 {
            return Err(Error::arg("frame needs at least one block"));
        }
        let n = reference.len();
        let data: Vec<Vec<Cplx<T>>> = (1..blocks)
            .map(|_| (0..n).map(|_| constellation.point(constellation.random_index(rng))).collect())
            .collect();
        diff_encode(&data, reference, constellation)
    }
}

/// Runs `S^(m) = X^(m)·S^(m-1)` per subcarrier. `data` holds the rows
/// `m = 2..M`; the output has one more row than `data`.
pub fn diff_encode<T: Real>(
    data: &[Vec<Cplx<T>>],
    reference: &[Cplx<T>],
    constellation: &PskConstellation<T>,
) -> Result<DiffFrame<T>> {
    let n = reference.len();
    if reference.iter().any(|s| !constellation.contains(*s)) {
        return Err(Error::arg("reference symbol is not on the constellation"));
    }
    let mut indices = Vec::with_capacity(data.len());
    let mut encoded = Vec::with_capacity(data.len() + 1);
    encoded.push(reference.to_vec());
    for row in data {
        if row.len() != n {
            return Err(Error::arg("data row length differs from the reference"));
        }
        let idx = row
            .iter()
            .map(|x| constellation.index_of(*x).ok_or_else(|| Error::arg(format!("symbol {x} is off the constellation"))))
            .collect::<Result<Vec<_>>>()?;
        let prev = encoded.last().unwrap();
        // snap to the exact point so long chains do not drift off the circle
        let next = idx
            .iter()
            .zip(prev)
            .map(|(&i, p)| {
                let v = constellation.point(i) * *p;
                constellation.index_of(v).map_or(v, |j| constellation.point(j))
            })
            .collect();
        indices.push(idx);
        encoded.push(next);
    }
    Ok(DiffFrame { data: indices, encoded })
}

/// OFDM-modulates frequency-domain rows: IDFT, scale by `√power`, prepend CP.
pub fn modulate_rows<T: Real>(rows: &[Vec<Cplx<T>>], power: T, n_cp: usize, ofdm: &Ofdm<T>) -> Result<Vec<CpBlock<T>>> {
    if power < T::zero() {
        return Err(Error::arg("transmit power must be non-negative"));
    }
    let amp = power.sqrt();
    rows.iter()
        .map(|row| {
            let s = ofdm.idft(&ComplexBlock::frequency(row.clone())?)?;
            add_cp(&s.scaled(amp), n_cp)
        })
        .collect()
}

/// `√P_i·ζ₁(IDFT(S^(m)))` for every block of the frame.
pub fn user_transmit<T: Real>(frame: &DiffFrame<T>, power: T, n_cp1: usize, ofdm: &Ofdm<T>) -> Result<Vec<CpBlock<T>>> {
    modulate_rows(&frame.encoded, power, n_cp1, ofdm)
}

/// Relay forwarding with a time-domain gain: `√(P_r G_r)·ζ₂(η(y*))`.
pub fn relay_process_jbd<T: Real>(y: &ComplexBlock<T>, relay_power: T, gain: T, n_cp2: usize) -> Result<CpBlock<T>> {
    if relay_power < T::zero() || gain < T::zero() {
        return Err(Error::arg("relay power and gain must be non-negative"));
    }
    add_cp(&conj_time_reverse(y).scaled((relay_power * gain).sqrt()), n_cp2)
}

/// Relay forwarding with a per-subcarrier gain `G_{r,k}`: each subcarrier of
/// the received block is scaled by `√(P_r G_{r,k})` before conjugate time
/// reversal.
pub fn relay_process_jbd_per_subcarrier<T: Real>(
    y: &ComplexBlock<T>,
    relay_power: T,
    gains: &[T],
    n_cp2: usize,
    ofdm: &Ofdm<T>,
) -> Result<CpBlock<T>> {
    if gains.len() != y.len() {
        return Err(Error::arg("one gain per subcarrier required"));
    }
    let mut f = ofdm.dft(y)?;
    for (s, g) in f.samples_mut().iter_mut().zip(gains) {
        *s = *s * (relay_power * *g).sqrt();
    }
    add_cp(&conj_time_reverse(&ofdm.idft(&f)?), n_cp2)
}

/// Per-relay, per-subcarrier amplitude `√(P_r G_{r,k})` applied at the relays.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayAmplitudes<T> {
    amps: Vec<Vec<T>>,
}

impl<T: Real> RelayAmplitudes<T> {
    /// Same `√(P_r G_r)` on every subcarrier.
    pub fn uniform(relay_powers: &[T], gains: &[T], n: usize) -> Result<Self> {
        if relay_powers.len() != gains.len() {
            return Err(Error::arg("one gain per relay required"));
        }
        Ok(Self { amps: relay_powers.iter().zip(gains).map(|(p, g)| vec![(*p * *g).sqrt(); n]).collect() })
    }

    /// From explicit per-subcarrier gains `G_{r,k}`.
    pub fn per_subcarrier(relay_powers: &[T], gains: &[Vec<T>]) -> Result<Self> {
        if relay_powers.len() != gains.len() {
            return Err(Error::arg("one gain row per relay required"));
        }
        Ok(Self {
            amps: relay_powers.iter().zip(gains).map(|(p, row)| row.iter().map(|g| (*p * *g).sqrt()).collect()).collect(),
        })
    }

    pub fn relays(&self) -> usize {
        self.amps.len()
    }

    pub fn get(&self, relay: usize, k: usize) -> T {
        self.amps[relay][k]
    }
}

/// End-to-end gain on subcarrier `k` from `from`'s symbols (conjugated) to
/// `to`'s DFT output, through every relay:
/// `Σ_r √P_from·a_{r,k}·q_{r,to,k}·q*_{from,r,k}·e^{-j2πk(d_{r,to} - d_{from,r})/N}`.
pub fn composite_gain<T: Real>(
    channels: &ChannelSet<T>,
    from_power: T,
    amps: &RelayAmplitudes<T>,
    from: User,
    to: User,
    k: usize,
) -> Cplx<T> {
    let n = channels.block_size();
    let sp = from_power.sqrt();
    (0..channels.relays()).fold(Cplx::new(T::zero(), T::zero()), |acc, r| {
        let up = channels.link(from.node(), Node::Relay(r));
        let down = channels.link(Node::Relay(r), to.node());
        let q_up = channels.response(from.node(), Node::Relay(r))[k];
        let q_down = channels.response(Node::Relay(r), to.node())[k];
        let phase = twiddle::<T>(k, down.delay as i64 - up.delay as i64, n);
        acc + q_down * q_up.conj() * phase * (sp * amps.get(r, k))
    })
}

/// Exact `(μ_k, ν_k)` seen by `receiver` on subcarrier `k`: `μ_k` is the
/// self gain (real under reciprocity), `ν_k` the gain of the partner's signal.
///
/// `user_powers` is `[P_A, P_B]`.
pub fn received_model_oracle<T: Real>(
    channels: &ChannelSet<T>,
    user_powers: [T; 2],
    amps: &RelayAmplitudes<T>,
    receiver: User,
    k: usize,
) -> Result<(T, Cplx<T>)> {
    if !channels.is_reciprocal() {
        return Err(Error::Contract("JBD needs reciprocal channels and delays".into()));
    }
    let partner = receiver.partner();
    let mu = composite_gain(channels, user_powers[receiver.index()], amps, receiver, receiver, k);
    let nu = composite_gain(channels, user_powers[partner.index()], amps, partner, receiver, k);
    Ok((mu.re, nu))
}

/// Blind estimate of `|ν_k|` from one subcarrier's received series and the
/// receiver's own data symbols (`m = 2..M`).
///
/// `cross_moment` is `E|X_own − X_partner|²` over the two alphabets; the
/// encoded symbols have unit energy.
pub fn estimate_nu_abs<T: Real>(y: &[Cplx<T>], own_data: &[Cplx<T>], cross_moment: T) -> Result<T> {
    let m = y.len();
    if m < 2 {
        return Err(Error::arg("at least two blocks are needed to estimate |ν|"));
    }
    if own_data.len() != m - 1 {
        return Err(Error::arg("own data must cover blocks 2..M"));
    }
    let acc = (1..m).fold(T::zero(), |acc, i| acc + (own_data[i - 1].conj() * y[i - 1] - y[i]).norm_sqr());
    Ok((acc / (T::of((m - 1) as f64) * cross_moment)).sqrt())
}

/// `μ̂_k = √max(YᴴY/M − |ν̂_k|², 0)`
pub fn estimate_mu<T: Real>(y: &[Cplx<T>], nu_abs_sq: T) -> T {
    let power = y.iter().fold(T::zero(), |a, v| a + v.norm_sqr()) / T::of(y.len().max(1) as f64);
    (power - nu_abs_sq).max(T::zero()).sqrt()
}

/// Blind estimates for every subcarrier of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JbdEstimates<T> {
    pub nu_abs: Vec<T>,
    pub mu: Vec<T>,
}

impl<T: Real> JbdEstimates<T> {
    /// `series[k]` is subcarrier `k` over the `M` blocks; `own_data[k]` the
    /// receiver's data symbols on `k` for `m = 2..M`.
    pub fn estimate(series: &[Vec<Cplx<T>>], own_data: &[Vec<Cplx<T>>], cross_moment: T) -> Result<Self> {
        let mut nu_abs = Vec::with_capacity(series.len());
        let mut mu = Vec::with_capacity(series.len());
        for (y, x) in series.iter().zip(own_data) {
            let nu = estimate_nu_abs(y, x, cross_moment)?;
            mu.push(estimate_mu(y, nu * nu));
            nu_abs.push(nu);
        }
        Ok(Self { nu_abs, mu })
    }
}

/// `argmax_X Re{Y^(m)·Y^(m-1)*·X}` for `m = 2..M`, lowest index on ties.
pub fn detect_differential<T: Real>(y: &[Cplx<T>], constellation: &PskConstellation<T>) -> Vec<usize> {
    y.windows(2)
        .map(|w| {
            let z = w[1] * w[0].conj();
            let mut best = 0;
            let mut best_metric = T::neg_infinity();
            for (i, x) in constellation.points().iter().enumerate() {
                let metric = (z * *x).re;
                if metric > best_metric {
                    best = i;
                    best_metric = metric;
                }
            }
            best
        })
        .collect()
}

/// Removes `μ̂·S_own*` and runs [`detect_differential`]; returns `M - 1`
/// symbol indices of the partner's data.
pub fn cancel_and_detect<T: Real>(
    y: &[Cplx<T>],
    own_encoded: &[Cplx<T>],
    mu_hat: T,
    constellation: &PskConstellation<T>,
) -> Result<Vec<usize>> {
    if y.len() < 2 || own_encoded.len() != y.len() {
        return Err(Error::arg("need M >= 2 received symbols and as many own symbols"));
    }
    let y_ab: Vec<Cplx<T>> = y.iter().zip(own_encoded).map(|(v, s)| *v - s.conj() * mu_hat).collect();
    Ok(detect_differential(&y_ab, constellation))
}

/// Differential detection with the exact self gain.
pub fn genie_detect<T: Real>(
    y: &[Cplx<T>],
    own_encoded: &[Cplx<T>],
    mu: T,
    constellation: &PskConstellation<T>,
) -> Result<Vec<usize>> {
    cancel_and_detect(y, own_encoded, mu, constellation)
}

/// Coherent reference detector with full CSI and the true previous partner
/// symbol: `argmin_X |Y_AB^(m) − ν·X*·S_p^(m-1)*|²`.
pub fn coherent_detect<T: Real>(
    y: &[Cplx<T>],
    own_encoded: &[Cplx<T>],
    mu: T,
    nu: Cplx<T>,
    partner_encoded: &[Cplx<T>],
    constellation: &PskConstellation<T>,
) -> Result<Vec<usize>> {
    if y.len() < 2 || own_encoded.len() != y.len() || partner_encoded.len() != y.len() {
        return Err(Error::arg("need M >= 2 received symbols and matching symbol series"));
    }
    Ok((1..y.len())
        .map(|m| {
            let y_ab = y[m] - own_encoded[m].conj() * mu;
            let base = nu * partner_encoded[m - 1].conj();
            let mut best = 0;
            let mut best_d = T::infinity();
            for (i, x) in constellation.points().iter().enumerate() {
                let d = (y_ab - base * x.conj()).norm_sqr();
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// High-SNR BPSK bit-error approximation `1/γ₁ + 1/(2γ₂)` with per-hop SNRs
/// `γ₁ = P_A/σ²` and `γ₂ = ΣP_r/σ²`.
pub fn analytic_ber<T: Real>(gamma1: T, gamma2: T) -> Result<T> {
    if !(gamma1 > T::zero()) || !(gamma2 > T::zero()) {
        return Err(Error::arg("per-hop SNRs must be positive"));
    }
    Ok(T::one() / gamma1 + T::one() / (T::of(2.0) * gamma2))
}

/// Per-subcarrier power normalization `G_{r,k} = (P_A|q_Ar,k|² + P_B|q_Br,k|² + σ_r²)⁻¹`.
pub fn per_subcarrier_relay_gain<T: Real>(q_ar: Cplx<T>, q_br: Cplx<T>, p_a: T, p_b: T, relay_noise: T) -> Result<T> {
    if !(relay_noise > T::zero()) {
        return Err(Error::arg("per-subcarrier gain needs a positive relay noise variance"));
    }
    Ok(T::one() / (p_a * q_ar.norm_sqr() + p_b * q_br.norm_sqr() + relay_noise))
}

/// CSI-free estimate `G_{r,k} ≈ M/‖Y_{r,k}‖²` from the relay's own DFT outputs.
pub fn blind_relay_gain<T: Real>(y_rk: &[Cplx<T>]) -> T {
    let e = y_rk.iter().fold(T::zero(), |a, v| a + v.norm_sqr());
    T::of(y_rk.len() as f64) / e
}
