use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Unit-energy `Q`-PSK alphabet `{e^{j2πi/Q}}`, closed under multiplication.
///
/// Symbol indices are labelled with the binary-reflected Gray code, so
/// neighbouring phases differ in one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PskConstellation<T> {
    points: Vec<Cplx<T>>,
}

impl<T: Real> PskConstellation<T> {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::arg(format!("PSK order {order} must be a power of two >= 2")));
        }
        let points = (0..order)
            .map(|i| {
                // exact values on the axes keep BPSK/QPSK products exact
                match (4 * i) % order {
                    0 => {
                        let q = 4 * i / order;
                        match q {
                            0 => Cplx::new(T::one(), T::zero()),
                            1 => Cplx::new(T::zero(), T::one()),
                            2 => Cplx::new(-T::one(), T::zero()),
                            _ => Cplx::new(T::zero(), -T::one()),
                        }
                    }
                    _ => {
                        let th = 2.0 * std::f64::consts::PI * i as f64 / order as f64;
                        Cplx::new(T::of(th.cos()), T::of(th.sin()))
                    }
                }
            })
            .collect();
        Ok(Self { points })
    }

    pub fn bpsk() -> Self {
        Self::new(2).expect("BPSK")
    }

    pub fn qpsk() -> Self {
        Self::new(4).expect("QPSK")
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.points.len().trailing_zeros()
    }

    pub fn points(&self) -> &[Cplx<T>] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Cplx<T> {
        self.points[index]
    }

    /// Whether every point is real (BPSK).
    pub fn is_real(&self) -> bool {
        self.points.iter().all(|p| p.im == T::zero())
    }

    /// Index of the point equal to `x` within `1e-6`, if any.
    pub fn index_of(&self, x: Cplx<T>) -> Option<usize> {
        let tol = T::of(1e-6);
        self.points.iter().position(|p| (*p - x).norm() <= tol)
    }

    pub fn contains(&self, x: Cplx<T>) -> bool {
        self.index_of(x).is_some()
    }

    pub fn random_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.points.len())
    }

    /// Gray label of a symbol index.
    pub fn gray(index: usize) -> usize {
        index ^ (index >> 1)
    }

    /// Number of differing bits between the labels of two symbols.
    pub fn bit_errors(a: usize, b: usize) -> u32 {
        (Self::gray(a) ^ Self::gray(b)).count_ones()
    }

    /// `E|b - a|²` over independent uniform `a ∈ self`, `b ∈ other`.
    pub fn cross_second_moment(&self, other: &PskConstellation<T>) -> T {
        let mut acc = T::zero();
        for a in &self.points {
            for b in &other.points {
                acc = acc + (*b - *a).norm_sqr();
            }
        }
        acc / T::of((self.order() * other.order()) as f64)
    }
}
