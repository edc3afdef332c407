//! Pairwise error probability bound and diversity fitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::Real;

/// `det((C − C')ᴴ(C − C'))`.
pub fn delta_distance<T: Real>(c: &CMatrix<T>, c_alt: &CMatrix<T>) -> T {
    let d = c - c_alt;
    (&d.adjoint() * &d).det().re
}

/// Power and noise setting for the PEP bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PepParams<T> {
    pub p_a: T,
    pub p_b: T,
    pub relay_powers: Vec<T>,
    pub noise_var: T,
    pub block_len: usize,
}

/// `Ω = √(2/T)·(P_A + P_B + σ²)·ΣP_r / σ²`.
pub fn pep_omega<T: Real>(p: &PepParams<T>) -> Result<T> {
    if !(p.noise_var > T::zero()) {
        return Err(Error::arg("noise variance must be positive"));
    }
    if p.block_len == 0 {
        return Err(Error::arg("block length must be positive"));
    }
    let sum_pr = p.relay_powers.iter().fold(T::zero(), |a, &x| a + x);
    Ok((T::of(2.0) / T::of(p.block_len as f64)).sqrt() * (p.p_a + p.p_b + p.noise_var) * sum_pr / p.noise_var)
}

/// `(16·N_R·ln Ω / (Ω·T))^{N_R} / Δ(C, C')`.
pub fn pep_bound<T: Real>(c: &CMatrix<T>, c_alt: &CMatrix<T>, p: &PepParams<T>) -> Result<T> {
    let delta = delta_distance(c, c_alt);
    if !(delta > T::of(1e-12)) {
        return Err(Error::arg("codewords must differ with full rank (Δ > 0)"));
    }
    let omega = pep_omega(p)?;
    if !(omega > T::one()) {
        return Err(Error::arg(format!("bound needs Ω > 1, got {omega}")));
    }
    let nr = p.relay_powers.len();
    let base = T::of(16.0 * nr as f64) * omega.ln() / (omega * T::of(p.block_len as f64));
    Ok(base.powi(nr as i32) / delta)
}

/// Least-squares fit of `log10(PEP)` against `SNR_dB/10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityFit {
    /// Magnitude of the fitted slope (decades per 10 dB).
    pub slope: f64,
    pub intercept: f64,
    /// False when PEP rises anywhere along the SNR-sorted input.
    pub monotone: bool,
    /// Number of points with positive PEP used in the fit.
    pub points: usize,
}

/// Fits the decay rate of `(snr_db, pep)` points; zero-PEP points are skipped.
pub fn diversity_estimate(points: &[(f64, f64)]) -> Result<DiversityFit> {
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|(s, p)| s.is_finite() && *p > 0.0).collect();
    if pts.len() < 2 {
        return Err(Error::arg("need at least two points with positive PEP"));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1);
    let xs: Vec<f64> = pts.iter().map(|p| p.0 / 10.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("points need distinct SNR values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Ok(DiversityFit { slope: -b, intercept: my - b * mx, monotone, points: pts.len() })
}
