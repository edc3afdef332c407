//! Quasi-static frequency-selective Rayleigh links with integer propagation
//! delays.
//!
//! A link has `L` taps on consecutive lags `0..L` plus a bulk delay of `d`
//! samples. Taps are drawn once per frame and held for all of its blocks.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp::{ComplexBlock, CpBlock};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, substream};
use crate::scalar::{twiddle, Cplx, Real};

/// Network node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    A,
    B,
    /// Zero-based relay index.
    Relay(usize),
}

/// End user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum User {
    A,
    B,
}

impl User {
    pub fn partner(self) -> User {
        match self {
            User::A => User::B,
            User::B => User::A,
        }
    }

    pub fn node(self) -> Node {
        match self {
            User::A => Node::A,
            User::B => Node::B,
        }
    }

    pub fn index(self) -> usize {
        match self {
            User::A => 0,
            User::B => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            User::A => "A",
            User::B => "B",
        }
    }
}

/// Per-lag amplitude standard deviations `σ_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDelayProfile<T> {
    tap_stddevs: Vec<T>,
}

impl<T: Real> PowerDelayProfile<T> {
    pub fn new(tap_stddevs: Vec<T>) -> Result<Self> {
        if tap_stddevs.is_empty() {
            return Err(Error::arg("power-delay profile has no taps"));
        }
        if tap_stddevs.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::arg("tap standard deviations must be positive and finite"));
        }
        Ok(Self { tap_stddevs })
    }

    /// Same shape, rescaled to `Σ σ_l² = 1`.
    pub fn normalized(tap_stddevs: Vec<T>) -> Result<Self> {
        let p = Self::new(tap_stddevs)?;
        let scale = T::one() / p.total_power().sqrt();
        Ok(Self { tap_stddevs: p.tap_stddevs.into_iter().map(|s| s * scale).collect() })
    }

    /// Three taps with `σ = [1, 0.8, 0.6]/√2`, unit total power.
    pub fn three_tap() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self { tap_stddevs: vec![T::of(r), T::of(0.8 * r), T::of(0.6 * r)] }
    }

    /// A single unit tap (flat fading).
    pub fn flat() -> Self {
        Self { tap_stddevs: vec![T::one()] }
    }

    pub fn tap_stddevs(&self) -> &[T] {
        &self.tap_stddevs
    }

    pub fn len(&self) -> usize {
        self.tap_stddevs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tap_stddevs.is_empty()
    }

    pub fn total_power(&self) -> T {
        self.tap_stddevs.iter().fold(T::zero(), |a, s| a + *s * *s)
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_power() - T::one()).abs() <= T::of(1e-12).max(T::epsilon() * T::of(8.0))
    }
}

/// One directed link: tap gains and bulk delay.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel<T> {
    pub taps: Vec<Cplx<T>>,
    pub delay: usize,
    pub from: Node,
    pub to: Node,
}

impl<T: Real> LinkChannel<T> {
    pub fn new(taps: Vec<Cplx<T>>, delay: usize, from: Node, to: Node) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::arg("link needs at least one tap"));
        }
        Ok(Self { taps, delay, from, to })
    }

    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }

    /// Smallest cyclic prefix that keeps this link circular.
    pub fn required_cp(&self) -> usize {
        self.taps.len() - 1 + self.delay
    }

    /// The same physical channel used in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self { taps: self.taps.clone(), delay: self.delay, from: self.to, to: self.from }
    }
}

/// Draws `h_l = σ_l (g₁ + j g₂)/√2` with independent standard normals.
pub fn sample_link<T: Real, R: Rng + ?Sized>(
    profile: &PowerDelayProfile<T>,
    delay: usize,
    from: Node,
    to: Node,
    rng: &mut R,
) -> Result<LinkChannel<T>> {
    if profile.is_empty() {
        return Err(Error::arg("power-delay profile has no taps"));
    }
    let taps = profile
        .tap_stddevs()
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let a = s.as_f64() * std::f64::consts::FRAC_1_SQRT_2;
            Cplx::new(T::of(a * re), T::of(a * im))
        })
        .collect();
    LinkChannel::new(taps, delay, from, to)
}

/// Passes a CP block through the link: linear convolution with the taps,
/// shifted by the bulk delay and framed to the input length.
///
/// Samples that would come from the previous block only land inside the
/// prefix region, so after CP removal the payload equals `H·Ψ_d·x`.
pub fn apply_link<T: Real>(x: &CpBlock<T>, link: &LinkChannel<T>) -> Result<CpBlock<T>> {
    if x.cp_len() < link.required_cp() {
        return Err(Error::CpUnderrun { cp_len: x.cp_len(), taps: link.tap_count(), delay: link.delay });
    }
    let s = x.samples();
    let len = s.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let mut out = vec![zero; len];
    for (l, h) in link.taps.iter().enumerate() {
        let shift = l + link.delay;
        for i in shift..len {
            out[i] += *h * s[i - shift];
        }
    }
    Ok(CpBlock::from_parts(out, x.cp_len()))
}

/// `q_k = Σ_l h_l e^{-j2π k l/N}`, the diagonal of `F·H·Fᴴ` (delay excluded).
pub fn freq_response<T: Real>(link: &LinkChannel<T>, n: usize) -> Vec<Cplx<T>> {
    (0..n)
        .map(|k| {
            link.taps
                .iter()
                .enumerate()
                .fold(Cplx::new(T::zero(), T::zero()), |acc, (l, h)| acc + *h * twiddle::<T>(k, l as i64, n))
        })
        .collect()
}

/// Adds CSCG noise of total variance `variance` per sample.
pub fn add_noise<T: Real, R: Rng + ?Sized>(x: &ComplexBlock<T>, variance: T, rng: &mut R) -> Result<ComplexBlock<T>> {
    if variance < T::zero() || !variance.is_finite() {
        return Err(Error::arg(format!("noise variance {variance} must be non-negative")));
    }
    let mut out = x.clone();
    if variance == T::zero() {
        return Ok(out);
    }
    let sd = (variance.as_f64() / 2.0).sqrt();
    for s in out.samples_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Cplx::new(T::of(sd * re), T::of(sd * im));
    }
    Ok(out)
}

/// Bulk delays for every user↔relay link, in samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayTable {
    /// `[d_Ar, d_Br]` per relay.
    pub uplink: Vec<[usize; 2]>,
    /// `[d_rA, d_rB]` per relay.
    pub downlink: Vec<[usize; 2]>,
}

impl DelayTable {
    /// Reciprocal table from uplink delays alone.
    pub fn reciprocal(uplink: Vec<[usize; 2]>) -> Self {
        Self { downlink: uplink.clone(), uplink }
    }

    /// The two-relay table used throughout the numerical study:
    /// `d_A1=5, d_B1=14, d_A2=3, d_B2=9` with equal downlink delays.
    pub fn two_relay_default() -> Self {
        Self::reciprocal(vec![[5, 14], [3, 9]])
    }

    pub fn relays(&self) -> usize {
        self.uplink.len()
    }

    pub fn is_reciprocal(&self) -> bool {
        self.uplink == self.downlink
    }

    pub fn up(&self, user: User, relay: usize) -> usize {
        self.uplink[relay][user.index()]
    }

    pub fn down(&self, relay: usize, user: User) -> usize {
        self.downlink[relay][user.index()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.uplink.is_empty() {
            return Err(Error::config("delay table lists no relays"));
        }
        if self.uplink.len() != self.downlink.len() {
            return Err(Error::config("uplink and downlink delay tables differ in relay count"));
        }
        Ok(())
    }

    pub fn max_uplink(&self) -> usize {
        self.uplink.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_downlink(&self) -> usize {
        self.downlink.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Every user↔relay link of one frame, with cached frequency responses.
///
/// Immutable once built; shared freely between detectors.
#[derive(Debug, Clone)]
pub struct ChannelSet<T> {
    n: usize,
    relays: usize,
    reciprocal: bool,
    links: BTreeMap<(Node, Node), LinkChannel<T>>,
    responses: BTreeMap<(Node, Node), Vec<Cplx<T>>>,
}

impl<T: Real> ChannelSet<T> {
    /// Assembles a set from explicit links. Both directions of every
    /// user↔relay pair must be present.
    pub fn from_links(n: usize, relays: usize, links: Vec<LinkChannel<T>>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for l in links {
            map.insert((l.from, l.to), l);
        }
        for r in 0..relays {
            for u in [Node::A, Node::B] {
                for key in [(u, Node::Relay(r)), (Node::Relay(r), u)] {
                    if !map.contains_key(&key) {
                        return Err(Error::arg(format!("missing link {:?} -> {:?}", key.0, key.1)));
                    }
                }
            }
        }
        if map.len() != 4 * relays {
            return Err(Error::arg("link list has entries outside the user/relay pairs"));
        }
        let reciprocal = (0..relays).all(|r| {
            [Node::A, Node::B].iter().all(|&u| {
                let up = &map[&(u, Node::Relay(r))];
                let down = &map[&(Node::Relay(r), u)];
                up.taps == down.taps && up.delay == down.delay
            })
        });
        let responses = map.iter().map(|(k, l)| (*k, freq_response(l, n))).collect();
        Ok(Self { n, relays, reciprocal, links: map, responses })
    }

    /// Draws a fresh frame of channels. Each link uses its own substream of
    /// `seed`. With `reciprocal`, every downlink reuses its uplink taps and
    /// the delay table must itself be reciprocal.
    pub fn sample(
        n: usize,
        profile: &PowerDelayProfile<T>,
        delays: &DelayTable,
        reciprocal: bool,
        seed: u64,
    ) -> Result<Self> {
        delays.validate()?;
        if reciprocal && !delays.is_reciprocal() {
            return Err(Error::config("reciprocal channels require d_ri = d_ir for every link"));
        }
        let mut links = Vec::with_capacity(4 * delays.relays());
        for r in 0..delays.relays() {
            for user in [User::A, User::B] {
                let u = user.node();
                let mut rng = substream(derive_seed(seed, &[r as u64]), &[user.index() as u64, 0]);
                let up = sample_link(profile, delays.up(user, r), u, Node::Relay(r), &mut rng)?;
                let down = if reciprocal {
                    up.reversed()
                } else {
                    let mut rng = substream(derive_seed(seed, &[r as u64]), &[user.index() as u64, 1]);
                    sample_link(profile, delays.down(r, user), Node::Relay(r), u, &mut rng)?
                };
                links.push(up);
                links.push(down);
            }
        }
        Self::from_links(n, delays.relays(), links)
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn relays(&self) -> usize {
        self.relays
    }

    pub fn is_reciprocal(&self) -> bool {
        self.reciprocal
    }

    pub fn link(&self, from: Node, to: Node) -> &LinkChannel<T> {
        &self.links[&(from, to)]
    }

    /// Cached `q_{from,to,k}` for all subcarriers.
    pub fn response(&self, from: Node, to: Node) -> &[Cplx<T>] {
        &self.responses[&(from, to)]
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkChannel<T>> {
        self.links.values()
    }

    /// Longest `L - 1 + d` over the user→relay links.
    pub fn required_uplink_cp(&self) -> usize {
        self.links.values().filter(|l| matches!(l.to, Node::Relay(_))).map(|l| l.required_cp()).max().unwrap_or(0)
    }

    /// Longest `L - 1 + d` over the relay→user links.
    pub fn required_downlink_cp(&self) -> usize {
        self.links.values().filter(|l| matches!(l.from, Node::Relay(_))).map(|l| l.required_cp()).max().unwrap_or(0)
    }
}
