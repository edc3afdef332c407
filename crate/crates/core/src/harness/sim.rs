//! One frame of the physical pipeline: users → relays → users.

use crate::channel::{add_noise, apply_link, ChannelSet, Node, User};
use crate::dsp::{remove_cp, ComplexBlock, CpBlock};
use crate::dstc::{
    build_d_matrix, cancel_self, detect_exhaustive, estimate_mu_vector, relay_process_dstc, Codebook, DispersionSet,
    GroupFrame,
};
use crate::error::{Error, Result};
use crate::jbd::{
    cancel_and_detect, coherent_detect, genie_detect, modulate_rows, received_model_oracle, relay_process_jbd,
    relay_process_jbd_per_subcarrier, per_subcarrier_relay_gain, user_transmit, DiffFrame, JbdEstimates,
    RelayAmplitudes,
};
use crate::matrix::CMatrix;
use crate::psk::PskConstellation;
use crate::rng::{derive_seed, substream, SimRng};
use crate::{Complex64, Ofdm};

use super::config::{GainMode, Scheme, SimConfig};

const CHANNEL: u64 = 0;
const DATA: u64 = 1;
const RELAY_NOISE: u64 = 3;
const USER_NOISE: u64 = 4;

/// Bit counts of one frame, indexed by receiving user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub bits: [u64; 2],
    pub errors: [u64; 2],
}

/// Pairwise decisions of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PepOutcome {
    pub trials: u64,
    pub errors: u64,
}

/// Relay gains in effect for one frame.
enum Gains {
    Scalar(Vec<f64>),
    PerSubcarrier(Vec<Vec<f64>>),
}

/// Everything that stays fixed across frames of one experiment.
pub struct Simulator {
    config: SimConfig,
    ofdm: Ofdm,
    psk: PskConstellation<f64>,
    cp: (usize, usize),
    dstc: Option<(Codebook<f64>, DispersionSet<f64>)>,
}

type Rx = Vec<Vec<Complex64>>;


impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let psk = PskConstellation::new(config.order)?;
        let dstc = if config.scheme.is_dstc() || config.pep.is_some() {
            let design = config.st_design()?;
            Some((Codebook::enumerate(design, &psk)?, design.dispersion_set()))
        } else {
            None
        };
        Ok(Self { config: config.clone(), ofdm: Ofdm::new(config.subcarriers)?, psk, cp: config.cp_lengths(), dstc })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Data bits per user per frame.
    pub fn bits_per_frame(&self) -> u64 {
        let c = &self.config;
        let per_symbol = self.psk.bits_per_symbol() as u64;
        if c.scheme.is_dstc() {
            ((c.groups() - 1) * c.subcarriers * c.group_len) as u64 * per_symbol
        } else {
            ((c.blocks - 1) * c.subcarriers) as u64 * per_symbol
        }
    }

    fn channels(&self, key: u64, frame: u64) -> Result<ChannelSet<f64>> {
        let c = &self.config;
        ChannelSet::sample(
            c.subcarriers,
            &c.profile,
            &c.delays,
            c.uses_reciprocal_channels(),
            derive_seed(c.seed, &[key, frame, CHANNEL]),
        )
    }

    fn rng(&self, key: u64, frame: u64, purpose: u64) -> SimRng {
        substream(self.config.seed, &[key, frame, purpose])
    }

    fn gains(&self, ch: &ChannelSet<f64>, noise_var: f64) -> Result<Gains> {
        let c = &self.config;
        if let Some(g) = &c.relay_gains {
            return Ok(Gains::Scalar(g.clone()));
        }
        Ok(match c.gain_mode {
            GainMode::Unit => Gains::Scalar(vec![1.0; c.relays()]),
            GainMode::Normalized => Gains::Scalar(vec![1.0 / (c.p_a + c.p_b + noise_var); c.relays()]),
            GainMode::PerSubcarrier => Gains::PerSubcarrier(
                (0..c.relays())
                    .map(|r| {
                        let qa = ch.response(Node::A, Node::Relay(r));
                        let qb = ch.response(Node::B, Node::Relay(r));
                        qa.iter().zip(qb).map(|(a, b)| per_subcarrier_relay_gain(*a, *b, c.p_a, c.p_b, noise_var)).collect()
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn amplitudes(&self, gains: &Gains) -> Result<RelayAmplitudes<f64>> {
        match gains {
            Gains::Scalar(g) => RelayAmplitudes::uniform(&self.config.relay_powers, g, self.config.subcarriers),
            Gains::PerSubcarrier(g) => RelayAmplitudes::per_subcarrier(&self.config.relay_powers, g),
        }
    }

    /// Runs both hops. `relay(r, y)` maps the `M` noisy received blocks of
    /// relay `r` to its `M` transmitted blocks. Returns, per receiving user,
    /// the DFT of every received block.
    fn propagate(
        &self,
        ch: &ChannelSet<f64>,
        tx: [&[CpBlock<f64>]; 2],
        noise_var: f64,
        key: u64,
        frame: u64,
        relay: impl Fn(usize, &[ComplexBlock<f64>]) -> Result<Vec<CpBlock<f64>>>,
    ) -> Result<[Rx; 2]> {
        let m = tx[0].len();
        let mut relay_rng = self.rng(key, frame, RELAY_NOISE);
        let mut relay_tx = Vec::with_capacity(ch.relays());
        for r in 0..ch.relays() {
            let mut y = Vec::with_capacity(m);
            for b in 0..m {
                let mut acc = remove_cp(&apply_link(&tx[0][b], ch.link(Node::A, Node::Relay(r)))?);
                acc.add_assign(&remove_cp(&apply_link(&tx[1][b], ch.link(Node::B, Node::Relay(r)))?))?;
                y.push(add_noise(&acc, noise_var, &mut relay_rng)?);
            }
            relay_tx.push(relay(r, &y)?);
        }
        let mut user_rng = self.rng(key, frame, USER_NOISE);
        let mut out: [Rx; 2] = [Vec::with_capacity(m), Vec::with_capacity(m)];
        for user in [User::A, User::B] {
            for b in 0..m {
                let mut acc: Option<ComplexBlock<f64>> = None;
                for (r, blocks) in relay_tx.iter().enumerate() {
                    let rx = remove_cp(&apply_link(&blocks[b], ch.link(Node::Relay(r), user.node()))?);
                    match acc.as_mut() {
                        Some(a) => a.add_assign(&rx)?,
                        None => acc = Some(rx),
                    }
                }
                let noisy = add_noise(&acc.expect("at least one relay"), noise_var, &mut user_rng)?;
                out[user.index()].push(self.ofdm.dft(&noisy)?.into_samples());
            }
        }
        Ok(out)
    }

    fn user_power(&self, user: User) -> f64 {
        match user {
            User::A => self.config.p_a,
            User::B => self.config.p_b,
        }
    }

    /// Simulates one BER frame at noise variance `noise_var`; `key`
    /// identifies the SNR point in the random-stream tree.
    pub fn ber_frame(&self, noise_var: f64, key: u64, frame: u64) -> Result<FrameOutcome> {
        if self.config.scheme.is_dstc() {
            self.dstc_frame(noise_var, key, frame)
        } else {
            self.jbd_frame(noise_var, key, frame)
        }
    }

    fn jbd_frame(&self, noise_var: f64, key: u64, frame: u64) -> Result<FrameOutcome> {
        let c = &self.config;
        let n = c.subcarriers;
        let ch = self.channels(key, frame)?;
        let reference = vec![self.psk.point(c.reference_symbol); n];
        let frames = [User::A, User::B]
            .map(|u| DiffFrame::random(c.blocks, &reference, &self.psk, &mut self.rng(key, frame, DATA + u.index() as u64)));
        let [fa, fb] = frames;
        let frames = [fa?, fb?];
        let tx = [User::A, User::B]
            .map(|u| user_transmit(&frames[u.index()], self.user_power(u), self.cp.0, &self.ofdm));
        let [ta, tb] = tx;
        let (ta, tb) = (ta?, tb?);
        let gains = self.gains(&ch, noise_var)?;
        let rx = self.propagate(&ch, [&ta, &tb], noise_var, key, frame, |r, y| {
            y.iter()
                .map(|b| match &gains {
                    Gains::Scalar(g) => relay_process_jbd(b, c.relay_powers[r], g[r], self.cp.1),
                    Gains::PerSubcarrier(g) => {
                        relay_process_jbd_per_subcarrier(b, c.relay_powers[r], &g[r], self.cp.1, &self.ofdm)
                    }
                })
                .collect()
        })?;
        let amps = self.amplitudes(&gains)?;
        let cross = self.psk.cross_second_moment(&self.psk);
        let mut out = FrameOutcome::default();
        for user in [User::A, User::B] {
            let own = &frames[user.index()];
            let partner = &frames[user.partner().index()];
            let series: Vec<Vec<Complex64>> = (0..n).map(|k| rx[user.index()].iter().map(|b| b[k]).collect()).collect();
            let estimates = if c.scheme == Scheme::Jbd {
                let own_data: Vec<_> = (0..n).map(|k| own.data_symbols(k, &self.psk)).collect();
                Some(JbdEstimates::estimate(&series, &own_data, cross)?)
            } else {
                None
            };
            for (k, y) in series.iter().enumerate() {
                let own_enc = own.subcarrier(k);
                let detected = match c.scheme {
                    Scheme::Jbd => {
                        cancel_and_detect(y, &own_enc, estimates.as_ref().expect("blind estimates").mu[k], &self.psk)?
                    }
                    Scheme::Genie => {
                        let (mu, _) = received_model_oracle(&ch, [c.p_a, c.p_b], &amps, user, k)?;
                        genie_detect(y, &own_enc, mu, &self.psk)?
                    }
                    Scheme::Coherent => {
                        let (mu, nu) = received_model_oracle(&ch, [c.p_a, c.p_b], &amps, user, k)?;
                        coherent_detect(y, &own_enc, mu, nu, &partner.subcarrier(k), &self.psk)?
                    }
                    Scheme::JbdDstc => unreachable!("handled by dstc_frame"),
                };
                for (d, row) in detected.iter().zip(&partner.data) {
                    out.errors[user.index()] += PskConstellation::<f64>::bit_errors(*d, row[k]) as u64;
                }
            }
            out.bits[user.index()] = self.bits_per_frame();
        }
        Ok(out)
    }

    fn dstc_parts(&self) -> Result<&(Codebook<f64>, DispersionSet<f64>)> {
        self.dstc.as_ref().ok_or_else(|| Error::config("configuration has no space-time design"))
    }

    /// Sends `frames` through the DSTC relays; returns the received groups
    /// per user as `[user][k][group]` `T`-vectors.
    fn dstc_propagate(
        &self,
        ch: &ChannelSet<f64>,
        frames: &[GroupFrame<f64>; 2],
        noise_var: f64,
        key: u64,
        frame: u64,
    ) -> Result<[Vec<Vec<Vec<Complex64>>>; 2]> {
        let c = &self.config;
        let (_, set) = self.dstc_parts()?;
        let t = c.group_len;
        let ta = modulate_rows(&frames[0].block_rows(), c.p_a, self.cp.0, &self.ofdm)?;
        let tb = modulate_rows(&frames[1].block_rows(), c.p_b, self.cp.0, &self.ofdm)?;
        let Gains::Scalar(gains) = self.gains(ch, noise_var)? else {
            return Err(Error::config("per-subcarrier gains are only defined for JBD"));
        };
        let rx = self.propagate(ch, [&ta, &tb], noise_var, key, frame, |r, y| {
            let mut out = Vec::with_capacity(y.len());
            for group in y.chunks(t) {
                out.extend(relay_process_dstc(group, &set.relays()[r], c.relay_powers[r], gains[r], self.cp.1)?);
            }
            Ok(out)
        })?;
        Ok(rx.map(|blocks| {
            (0..c.subcarriers)
                .map(|k| blocks.chunks(t).map(|g| g.iter().map(|b| b[k]).collect()).collect())
                .collect()
        }))
    }

    /// Own `D` matrices and self-cancelled groups for one subcarrier.
    fn dstc_cancel(&self, own: &GroupFrame<f64>, y: &[Vec<Complex64>], k: usize) -> Result<Vec<Vec<Complex64>>> {
        let (_, set) = self.dstc_parts()?;
        let d_own: Vec<CMatrix<f64>> = own.chains.iter().map(|g| build_d_matrix(&g[k], set)).collect();
        let mu_hat = estimate_mu_vector(&d_own, y)?;
        cancel_self(y, &d_own, &mu_hat)
    }

    fn random_group_frames(&self, key: u64, frame: u64) -> Result<[GroupFrame<f64>; 2]> {
        let c = &self.config;
        let (book, _) = self.dstc_parts()?;
        let reference = vec![self.psk.point(c.reference_symbol); c.group_len];
        let a = GroupFrame::random(c.groups(), c.subcarriers, &reference, book, &mut self.rng(key, frame, DATA))?;
        let b = GroupFrame::random(c.groups(), c.subcarriers, &reference, book, &mut self.rng(key, frame, DATA + 1))?;
        Ok([a, b])
    }

    fn dstc_frame(&self, noise_var: f64, key: u64, frame: u64) -> Result<FrameOutcome> {
        let (book, _) = self.dstc_parts()?;
        let ch = self.channels(key, frame)?;
        let frames = self.random_group_frames(key, frame)?;
        let rx = self.dstc_propagate(&ch, &frames, noise_var, key, frame)?;
        let mut out = FrameOutcome::default();
        for user in [User::A, User::B] {
            let own = &frames[user.index()];
            let partner = &frames[user.partner().index()];
            for (k, y) in rx[user.index()].iter().enumerate() {
                let y_ab = self.dstc_cancel(own, y, k)?;
                for (d, row) in detect_exhaustive(&y_ab, book).iter().zip(&partner.data) {
                    let got = book.symbol_indices(*d);
                    let want = book.symbol_indices(row[k]);
                    out.errors[user.index()] +=
                        got.iter().zip(&want).map(|(a, b)| PskConstellation::<f64>::bit_errors(*a, *b) as u64).sum::<u64>();
                }
            }
            out.bits[user.index()] = self.bits_per_frame();
        }
        Ok(out)
    }

    /// Pairwise test at user B: A repeats codeword `sent` on every group and
    /// subcarrier; each group counts as an error when `alternative` fits the
    /// self-cancelled signal strictly better than `sent`.
    pub fn pep_frame(&self, noise_var: f64, key: u64, frame: u64, sent: usize, alternative: usize) -> Result<PepOutcome> {
        let c = &self.config;
        let (book, _) = self.dstc_parts()?;
        let ch = self.channels(key, frame)?;
        let reference = vec![self.psk.point(c.reference_symbol); c.group_len];
        let fixed = vec![vec![sent; c.subcarriers]; c.groups() - 1];
        let fa = GroupFrame::encode(fixed, &reference, c.subcarriers, book)?;
        let fb = GroupFrame::random(c.groups(), c.subcarriers, &reference, book, &mut self.rng(key, frame, DATA + 1))?;
        let frames = [fa, fb];
        let rx = self.dstc_propagate(&ch, &frames, noise_var, key, frame)?;
        let (cs, ca) = (&book.word(sent).matrix, &book.word(alternative).matrix);
        let mut out = PepOutcome::default();
        for (k, y) in rx[User::B.index()].iter().enumerate() {
            let y_ab = self.dstc_cancel(&frames[1], y, k)?;
            for w in y_ab.windows(2) {
                let d_sent = dist_sq(&w[1], &cs.mul_vec(&w[0]));
                let d_alt = dist_sq(&w[1], &ca.mul_vec(&w[0]));
                out.trials += 1;
                if d_alt < d_sent {
                    out.errors += 1;
                }
            }
        }
        Ok(out)
    }
}

fn dist_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}
