//! Hand-wired two-hop pipelines shared by the integration tests.

#![allow(dead_code)]

use difftwr::channel::{apply_link, ChannelSet, Node, User};
use difftwr::dsp::{remove_cp, ComplexBlock, CpBlock, Ofdm};
use difftwr::dstc::{relay_process_dstc, DispersionSet};
use difftwr::jbd::relay_process_jbd;
use difftwr::{Cplx, Real};

/// Sum over relays of the noiseless uplink superposition at relay `r`.
fn relay_input<T: Real>(ch: &ChannelSet<T>, tx: &[Vec<CpBlock<T>>; 2], r: usize, b: usize) -> ComplexBlock<T> {
    let mut acc = remove_cp(&apply_link(&tx[0][b], ch.link(Node::A, Node::Relay(r))).unwrap());
    acc.add_assign(&remove_cp(&apply_link(&tx[1][b], ch.link(Node::B, Node::Relay(r))).unwrap())).unwrap();
    acc
}

/// DFT outputs at `to` for every block, given per-relay downlink blocks.
fn downlink<T: Real>(ch: &ChannelSet<T>, relay_out: &[Vec<CpBlock<T>>], to: User, ofdm: &Ofdm<T>) -> Vec<Vec<Cplx<T>>> {
    let blocks = relay_out[0].len();
    (0..blocks)
        .map(|b| {
            let mut sum = ComplexBlock::zeros(ofdm.size(), difftwr::dsp::Domain::Time);
            for (r, out) in relay_out.iter().enumerate() {
                sum.add_assign(&remove_cp(&apply_link(&out[b], ch.link(Node::Relay(r), to.node())).unwrap())).unwrap();
            }
            ofdm.dft(&sum).unwrap().into_samples()
        })
        .collect()
}

/// Noiseless JBD frame: returns `[rx_A, rx_B]`, each `[block][subcarrier]`.
pub fn jbd_noiseless<T: Real>(
    ch: &ChannelSet<T>,
    tx: &[Vec<CpBlock<T>>; 2],
    relay_powers: &[T],
    gains: &[T],
    cp2: usize,
    ofdm: &Ofdm<T>,
) -> [Vec<Vec<Cplx<T>>>; 2] {
    let blocks = tx[0].len();
    let relay_out: Vec<Vec<CpBlock<T>>> = (0..ch.relays())
        .map(|r| {
            (0..blocks)
                .map(|b| relay_process_jbd(&relay_input(ch, tx, r, b), relay_powers[r], gains[r], cp2).unwrap())
                .collect()
        })
        .collect();
    [User::A, User::B].map(|u| downlink(ch, &relay_out, u, ofdm))
}

/// Noiseless JBD-DSTC frame: blocks are processed `T` at a time.
pub fn dstc_noiseless<T: Real>(
    ch: &ChannelSet<T>,
    tx: &[Vec<CpBlock<T>>; 2],
    set: &DispersionSet<T>,
    relay_powers: &[T],
    gains: &[T],
    cp2: usize,
    ofdm: &Ofdm<T>,
) -> [Vec<Vec<Cplx<T>>>; 2] {
    let t = set.block_len();
    let groups = tx[0].len() / t;
    let relay_out: Vec<Vec<CpBlock<T>>> = (0..ch.relays())
        .map(|r| {
            (0..groups)
                .flat_map(|g| {
                    let y: Vec<ComplexBlock<T>> = (0..t).map(|i| relay_input(ch, tx, r, g * t + i)).collect();
                    relay_process_dstc(&y, &set.relays()[r], relay_powers[r], gains[r], cp2).unwrap()
                })
                .collect()
        })
        .collect();
    [User::A, User::B].map(|u| downlink(ch, &relay_out, u, ofdm))
}

/// `[block][k]` to the `T`-vectors of subcarrier `k`, one per group.
pub fn groups_of<T: Real>(rx: &[Vec<Cplx<T>>], k: usize, t: usize) -> Vec<Vec<Cplx<T>>> {
    rx.chunks(t).map(|g| g.iter().map(|row| row[k]).collect()).collect()
}
