//! DSTC-based joint blind-differential scheme (JBD-DSTC).
//!
//! Blocks are grouped `T` at a time. On every subcarrier each user runs a
//! differential chain of `T`-vectors `S^(m) = C^(m)·S^(m-1)` with unitary
//! codewords `C`. Relays apply fixed dispersion matrices across the `T`
//! blocks of a group, so the receiver sees
//!
//! ```text
//! Y^(m) = D_B^(m)·μ_B + D_A^(m)·μ_A + W^(m)
//! ```
//!
//! with `D_i = [O_1·S̃_i, …, O_NR·S̃_i]`. The self vector `μ_B` is estimated
//! from the receiver's own chain, its contribution is removed, and the
//! partner's codewords are detected from consecutive groups.

mod design;
mod pep;

pub use design::{
    build_codeword, validate_dispersion_set, Codebook, DispersionSet, RelayDispersion, RelayGroup, StCodeword,
    StDesign, ValidationReport,
};
pub use pep::{delta_distance, diversity_estimate, pep_bound, pep_omega, DiversityFit, PepParams};

use rand::Rng;

use crate::channel::{ChannelSet, Node, User};
use crate::dsp::{add_cp, conj_time_reverse, ComplexBlock, CpBlock};
use crate::error::{Error, Result};
use crate::jbd::RelayAmplitudes;
use crate::matrix::CMatrix;
use crate::scalar::{twiddle, Cplx, Real};

/// Per-relay composite gains of one user's chain at one receiver and subcarrier.
pub type MuVector<T> = Vec<Cplx<T>>;

/// Differential group chains of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFrame<T> {
    /// Codeword indices for groups `m = 2..M_G`, one row per group, one entry per subcarrier.
    pub data: Vec<Vec<usize>>,
    /// Chain vectors `S^(m)`, indexed `[m][k][t]`; group 0 is the reference.
    pub chains: Vec<Vec<Vec<Cplx<T>>>>,
}

impl<T: Real> GroupFrame<T> {
    pub fn groups(&self) -> usize {
        self.chains.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.chains.first().map_or(0, Vec::len)
    }

    pub fn block_len(&self) -> usize {
        self.chains.first().and_then(|g| g.first()).map_or(0, Vec::len)
    }

    /// Chains the codewords `data[m][k]` from `reference` on `n` subcarriers.
    pub fn encode(data: Vec<Vec<usize>>, reference: &[Cplx<T>], n: usize, codebook: &Codebook<T>) -> Result<Self> {
        let t = codebook.design().block_len();
        if reference.len() != t {
            return Err(Error::arg(format!("reference must have {t} entries")));
        }
        if reference.iter().any(|s| !codebook.constellation().contains(*s)) {
            return Err(Error::arg("reference entries must lie on the constellation"));
        }
        if data.iter().any(|row| row.len() != n || row.iter().any(|&i| i >= codebook.len())) {
            return Err(Error::arg("codeword index rows must have one valid entry per subcarrier"));
        }
        let mut chains = vec![vec![reference.to_vec(); n]];
        for row in &data {
            let prev = chains.last().expect("reference group");
            let next = row.iter().zip(prev).map(|(&c, s)| codebook.word(c).matrix.mul_vec(s)).collect();
            chains.push(next);
        }
        Ok(Self { data, chains })
    }

    /// `groups` groups with uniformly random codewords.
    pub fn random<R: Rng + ?Sized>(
        groups: usize,
        n: usize,
        reference: &[Cplx<T>],
        codebook: &Codebook<T>,
        rng: &mut R,
    ) -> Result<Self> {
        if groups < 1 {
            return Err(Error::arg("frame needs at least one group"));
        }
        let data = (1..groups).map(|_| (0..n).map(|_| rng.random_range(0..codebook.len())).collect()).collect();
        Self::encode(data, reference, n, codebook)
    }

    /// The frame as `M_G·T` OFDM rows of `N` subcarriers.
    pub fn block_rows(&self) -> Vec<Vec<Cplx<T>>> {
        let t = self.block_len();
        self.chains
            .iter()
            .flat_map(|group| (0..t).map(move |i| group.iter().map(|s| s[i]).collect()))
            .collect()
    }
}

/// Runs the chain for one subcarrier: returns `S^(1) = reference` followed by
/// `C^(m)·S^(m-1)` for each codeword.
pub fn dstc_diff_encode<T: Real>(codewords: &[StCodeword<T>], reference: &[Cplx<T>]) -> Result<Vec<Vec<Cplx<T>>>> {
    let mut out = vec![reference.to_vec()];
    for c in codewords {
        if c.matrix.cols() != reference.len() {
            return Err(Error::arg("codeword size does not match the reference length"));
        }
        let next = c.matrix.mul_vec(out.last().expect("reference"));
        out.push(next);
    }
    Ok(out)
}

/// Relay forwarding for one group: output block `t` is
/// `√(P_r G_r)·Σ_t' (A[t,t']·y^(t') + B[t,t']·η(y^(t')*))`, with CP appended.
pub fn relay_process_dstc<T: Real>(
    y_blocks: &[ComplexBlock<T>],
    relay: &RelayDispersion<T>,
    relay_power: T,
    gain: T,
    n_cp2: usize,
) -> Result<Vec<CpBlock<T>>> {
    let t = relay.block_len();
    if y_blocks.len() != t {
        return Err(Error::arg(format!("relay expects {t} received blocks, got {}", y_blocks.len())));
    }
    if relay_power < T::zero() || gain < T::zero() {
        return Err(Error::arg("relay power and gain must be non-negative"));
    }
    let n = y_blocks[0].len();
    if y_blocks.iter().any(|b| b.len() != n) {
        return Err(Error::arg("received blocks differ in length"));
    }
    let (inputs, o): (Vec<ComplexBlock<T>>, &CMatrix<T>) = match relay.group() {
        RelayGroup::Direct => (y_blocks.to_vec(), relay.a()),
        RelayGroup::Conjugate => (y_blocks.iter().map(conj_time_reverse).collect(), relay.b()),
    };
    let amp = (relay_power * gain).sqrt();
    (0..t)
        .map(|row| {
            let mut out = vec![Cplx::new(T::zero(), T::zero()); n];
            for (col, block) in inputs.iter().enumerate() {
                let w = o[(row, col)];
                if w.norm_sqr() == T::zero() {
                    continue;
                }
                for (acc, x) in out.iter_mut().zip(block.samples()) {
                    *acc = *acc + *x * w;
                }
            }
            add_cp(&ComplexBlock::time(out)?.scaled(amp), n_cp2)
        })
        .collect()
}

/// `D = [O_1·S̃, …, O_NR·S̃]` with `S̃ = S` for direct relays and `S*` for
/// conjugate relays (`T × N_R`).
pub fn build_d_matrix<T: Real>(s: &[Cplx<T>], set: &DispersionSet<T>) -> CMatrix<T> {
    let conj: Vec<Cplx<T>> = s.iter().map(|x| x.conj()).collect();
    let cols: Vec<Vec<Cplx<T>>> = (0..set.len())
        .map(|r| match set.group(r) {
            RelayGroup::Direct => set.o(r).mul_vec(s),
            RelayGroup::Conjugate => set.o(r).mul_vec(&conj),
        })
        .collect();
    CMatrix::from_columns(&cols)
}

/// Exact per-relay gains of `from`'s chain as seen by `to` on subcarrier `k`:
/// `√P_from·a_{r,k}·q_{r,to}·q̃_{from,r}·e^{-j2πk(d_{r,to} + d̃_{from,r})/N}`, where
/// conjugate relays use `q̃ = q*`, `d̃ = -d`.
pub fn mu_vector_oracle<T: Real>(
    channels: &ChannelSet<T>,
    from_power: T,
    amps: &RelayAmplitudes<T>,
    set: &DispersionSet<T>,
    from: User,
    to: User,
    k: usize,
) -> Result<MuVector<T>> {
    if set.len() != channels.relays() || amps.relays() != channels.relays() {
        return Err(Error::arg("relay counts of channels, gains and dispersion set differ"));
    }
    let n = channels.block_size();
    let sp = from_power.sqrt();
    Ok((0..channels.relays())
        .map(|r| {
            let up = channels.link(from.node(), Node::Relay(r));
            let down = channels.link(Node::Relay(r), to.node());
            let q_up = channels.response(from.node(), Node::Relay(r))[k];
            let q_down = channels.response(Node::Relay(r), to.node())[k];
            let (q_t, d_t) = match set.group(r) {
                RelayGroup::Direct => (q_up, up.delay as i64),
                RelayGroup::Conjugate => (q_up.conj(), -(up.delay as i64)),
            };
            q_down * q_t * twiddle::<T>(k, down.delay as i64 + d_t, n) * (sp * amps.get(r, k))
        })
        .collect())
}

/// `μ̂ = Σ_m D^(m)ᴴ·Y^(m) / (M_G·T)` over the groups of one subcarrier.
pub fn estimate_mu_vector<T: Real>(d_own: &[CMatrix<T>], y: &[Vec<Cplx<T>>]) -> Result<MuVector<T>> {
    let first = d_own.first().ok_or_else(|| Error::arg("at least one group required"))?;
    if d_own.len() != y.len() {
        return Err(Error::arg("one D matrix per received group required"));
    }
    let (t, nr) = (first.rows(), first.cols());
    let mut acc = vec![Cplx::new(T::zero(), T::zero()); nr];
    for (d, yg) in d_own.iter().zip(y) {
        if d.rows() != t || d.cols() != nr || yg.len() != t {
            return Err(Error::arg("group dimensions differ"));
        }
        for (a, v) in acc.iter_mut().zip(d.adjoint_mul_vec(yg)) {
            *a = *a + v;
        }
    }
    let scale = T::one() / T::of((y.len() * t) as f64);
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// `Y_AB^(m) = Y^(m) − D^(m)·μ̂` for every group.
pub fn cancel_self<T: Real>(y: &[Vec<Cplx<T>>], d_own: &[CMatrix<T>], mu_hat: &[Cplx<T>]) -> Result<Vec<Vec<Cplx<T>>>> {
    if y.len() != d_own.len() {
        return Err(Error::arg("one D matrix per received group required"));
    }
    y.iter()
        .zip(d_own)
        .map(|(yg, d)| {
            if d.cols() != mu_hat.len() || d.rows() != yg.len() {
                return Err(Error::arg("group dimensions differ"));
            }
            Ok(yg.iter().zip(d.mul_vec(mu_hat)).map(|(a, b)| *a - b).collect())
        })
        .collect()
}

fn dist_sq<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + (*x - *y).norm_sqr())
}

/// `Ĉ^(m) = argmin_C ‖Y^(m) − C·Y^(m-1)‖²` over the whole codebook; ties
/// go to the lowest index. Returns `groups − 1` codeword indices.
pub fn detect_exhaustive<T: Real>(y_ab: &[Vec<Cplx<T>>], codebook: &Codebook<T>) -> Vec<usize> {
    y_ab.windows(2)
        .map(|w| {
            let mut best = (0, T::infinity());
            for (i, c) in codebook.words().iter().enumerate() {
                let d = dist_sq(&w[1], &c.matrix.mul_vec(&w[0]));
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        })
        .collect()
}

/// Symbol-wise equivalent of [`detect_exhaustive`] for PSK codebooks: with
/// `C = Σ_j (x_j P_j + x_j* Q_j)/√T`, each symbol maximizes
/// `Re(x·(a_j + b_j*))` where `a_j = Yᴴ P_j Y'`, `b_j = Yᴴ Q_j Y'`.
pub fn detect_decoupled<T: Real>(y_ab: &[Vec<Cplx<T>>], codebook: &Codebook<T>) -> Vec<usize> {
    let basis = codebook.design().basis::<T>();
    let points = codebook.constellation().points();
    y_ab.windows(2)
        .map(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            let syms: Vec<usize> = basis
                .iter()
                .map(|(p, q)| {
                    let a = inner(cur, &p.mul_vec(prev));
                    let b = inner(cur, &q.mul_vec(prev));
                    let z = a + b.conj();
                    let mut best = (0, T::neg_infinity());
                    for (i, x) in points.iter().enumerate() {
                        let v = (*x * z).re;
                        if v > best.1 {
                            best = (i, v);
                        }
                    }
                    best.0
                })
                .collect();
            codebook.index_of(&syms)
        })
        .collect()
}

/// `aᴴ·b`.
fn inner<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    a.iter().zip(b).fold(Cplx::new(T::zero(), T::zero()), |s, (x, y)| s + x.conj() * *y)
}

/// Self-interference cancellation followed by exhaustive codeword detection.
pub fn cancel_and_detect_dstc<T: Real>(
    y: &[Vec<Cplx<T>>],
    d_own: &[CMatrix<T>],
    mu_hat: &[Cplx<T>],
    codebook: &Codebook<T>,
) -> Result<Vec<usize>> {
    Ok(detect_exhaustive(&cancel_self(y, d_own, mu_hat)?, codebook))
}
