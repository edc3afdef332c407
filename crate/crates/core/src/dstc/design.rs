//! Space-time codewords and relay dispersion matrices.
//!
//! Relays in the direct group apply a unitary `A_r` to the received blocks;
//! relays in the conjugate group apply a unitary `B_r` to their conjugate
//! time reversals. A design is usable when every codeword `C` satisfies
//! `C·O_r = O_r·C̃_r` (`C̃ = C` or `C*` by group) and every cross product
//! `O_iᴴ·O_j`, `i ≠ j`, has a zero diagonal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::psk::PskConstellation;
use crate::scalar::{Cplx, Real};

/// How a relay treats the blocks it forwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelayGroup {
    /// `A_r` unitary, `B_r = 0`.
    Direct,
    /// `A_r = 0`, `B_r` unitary, applied to `η(y*)`.
    Conjugate,
}

/// The `(A_r, B_r)` pair of one relay.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayDispersion<T> {
    a: CMatrix<T>,
    b: CMatrix<T>,
    group: RelayGroup,
}

impl<T: Real> RelayDispersion<T> {
    /// Exactly one of `a`, `b` must be non-zero.
    pub fn new(a: CMatrix<T>, b: CMatrix<T>) -> Result<Self> {
        if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::config("dispersion matrices must be square and of equal size"));
        }
        let group = match (a.is_zero(), b.is_zero()) {
            (false, true) => RelayGroup::Direct,
            (true, false) => RelayGroup::Conjugate,
            _ => return Err(Error::config("a relay uses exactly one of A_r (direct) or B_r (conjugate)")),
        };
        Ok(Self { a, b, group })
    }

    pub fn direct(o: CMatrix<T>) -> Result<Self> {
        let z = CMatrix::zeros(o.rows(), o.cols());
        Self::new(o, z)
    }

    pub fn conjugate(o: CMatrix<T>) -> Result<Self> {
        let z = CMatrix::zeros(o.rows(), o.cols());
        Self::new(z, o)
    }

    pub fn a(&self) -> &CMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &CMatrix<T> {
        &self.b
    }

    pub fn group(&self) -> RelayGroup {
        self.group
    }

    /// `O_r`: whichever of `A_r`, `B_r` is active.
    pub fn matrix(&self) -> &CMatrix<T> {
        match self.group {
            RelayGroup::Direct => &self.a,
            RelayGroup::Conjugate => &self.b,
        }
    }

    pub fn block_len(&self) -> usize {
        self.a.rows()
    }
}

/// Dispersion matrices of all relays.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSet<T> {
    relays: Vec<RelayDispersion<T>>,
}

impl<T: Real> DispersionSet<T> {
    pub fn new(relays: Vec<RelayDispersion<T>>) -> Result<Self> {
        let t = relays.first().ok_or_else(|| Error::config("empty dispersion set"))?.block_len();
        if relays.iter().any(|r| r.block_len() != t) {
            return Err(Error::config("dispersion matrices differ in size"));
        }
        Ok(Self { relays })
    }

    pub fn relays(&self) -> &[RelayDispersion<T>] {
        &self.relays
    }

    pub fn len(&self) -> usize {
        self.relays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relays.is_empty()
    }

    pub fn block_len(&self) -> usize {
        self.relays[0].block_len()
    }

    pub fn o(&self, r: usize) -> &CMatrix<T> {
        self.relays[r].matrix()
    }

    pub fn group(&self, r: usize) -> RelayGroup {
        self.relays[r].group()
    }
}

/// Codeword/dispersion families with a known construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StDesign {
    /// Real 2×2 orthogonal design; two direct relays `I₂` and `[[0,-1],[1,0]]`.
    SystemI,
    /// Real 4×4 orthogonal design; four direct relays.
    SystemII,
    /// Complex 2×2 Alamouti; relay 1 direct with `I₂`, relay 2 conjugate with `[[0,-1],[1,0]]`.
    Alamouti,
}

impl fmt::Display for StDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StDesign::SystemI => "system_i",
            StDesign::SystemII => "system_ii",
            StDesign::Alamouti => "alamouti",
        })
    }
}

impl StDesign {
    pub fn block_len(self) -> usize {
        match self {
            StDesign::SystemI | StDesign::Alamouti => 2,
            StDesign::SystemII => 4,
        }
    }

    /// Number of relays the design is built for.
    pub fn relays(self) -> usize {
        self.block_len()
    }

    pub fn requires_real_symbols(self) -> bool {
        !matches!(self, StDesign::Alamouti)
    }

    /// Linear basis `(P_j, Q_j)` with `C = (Σ_j x_j P_j + x_j* Q_j)/‖x‖`.
    pub fn basis<T: Real>(self) -> Vec<(CMatrix<T>, CMatrix<T>)> {
        let z2 = || CMatrix::zeros(2, 2);
        let z4 = || CMatrix::zeros(4, 4);
        match self {
            StDesign::SystemI => vec![
                (CMatrix::identity(2), z2()),
                (CMatrix::from_real(&[&[0.0, -1.0], &[1.0, 0.0]]), z2()),
            ],
            StDesign::Alamouti => vec![
                (CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]), CMatrix::from_real(&[&[0.0, 0.0], &[0.0, 1.0]])),
                (CMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]]), CMatrix::from_real(&[&[0.0, -1.0], &[0.0, 0.0]])),
            ],
            StDesign::SystemII => vec![
                (CMatrix::identity(4), z4()),
                (
                    CMatrix::from_real(&[
                        &[0.0, -1.0, 0.0, 0.0],
                        &[1.0, 0.0, 0.0, 0.0],
                        &[0.0, 0.0, 0.0, 1.0],
                        &[0.0, 0.0, -1.0, 0.0],
                    ]),
                    z4(),
                ),
                (
                    CMatrix::from_real(&[
                        &[0.0, 0.0, -1.0, 0.0],
                        &[0.0, 0.0, 0.0, -1.0],
                        &[1.0, 0.0, 0.0, 0.0],
                        &[0.0, 1.0, 0.0, 0.0],
                    ]),
                    z4(),
                ),
                (
                    CMatrix::from_real(&[
                        &[0.0, 0.0, 0.0, -1.0],
                        &[0.0, 0.0, 1.0, 0.0],
                        &[0.0, -1.0, 0.0, 0.0],
                        &[1.0, 0.0, 0.0, 0.0],
                    ]),
                    z4(),
                ),
            ],
        }
    }

    pub fn dispersion_set<T: Real>(self) -> DispersionSet<T> {
        let rot = || CMatrix::from_real(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let relays = match self {
            StDesign::SystemI => vec![RelayDispersion::direct(CMatrix::identity(2)), RelayDispersion::direct(rot())],
            StDesign::Alamouti => vec![RelayDispersion::direct(CMatrix::identity(2)), RelayDispersion::conjugate(rot())],
            StDesign::SystemII => vec![
                RelayDispersion::direct(CMatrix::identity(4)),
                RelayDispersion::direct(CMatrix::from_real(&[
                    &[0.0, -1.0, 0.0, 0.0],
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, -1.0],
                    &[0.0, 0.0, 1.0, 0.0],
                ])),
                RelayDispersion::direct(CMatrix::from_real(&[
                    &[0.0, 0.0, -1.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                    &[1.0, 0.0, 0.0, 0.0],
                    &[0.0, -1.0, 0.0, 0.0],
                ])),
                RelayDispersion::direct(CMatrix::from_real(&[
                    &[0.0, 0.0, 0.0, -1.0],
                    &[0.0, 0.0, -1.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0],
                    &[1.0, 0.0, 0.0, 0.0],
                ])),
            ],
        };
        DispersionSet::new(relays.into_iter().map(|r| r.expect("built-in dispersion matrix")).collect())
            .expect("built-in dispersion set")
    }
}

/// Unitary `T×T` data matrix built from `T` constellation symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct StCodeword<T> {
    pub matrix: CMatrix<T>,
    pub symbols: Vec<Cplx<T>>,
}

/// Lays out `symbols` per `design` and normalizes by `1/√Σ|x|²`.
pub fn build_codeword<T: Real>(symbols: &[Cplx<T>], design: StDesign) -> Result<StCodeword<T>> {
    let t = design.block_len();
    if symbols.len() != t {
        return Err(Error::arg(format!("{design} needs {t} symbols, got {}", symbols.len())));
    }
    if design.requires_real_symbols() && symbols.iter().any(|x| x.im != T::zero()) {
        return Err(Error::arg(format!("{design} is a real orthogonal design; complex symbols are not allowed")));
    }
    let energy = symbols.iter().fold(T::zero(), |a, x| a + x.norm_sqr());
    if !(energy > T::zero()) {
        return Err(Error::arg("all-zero symbol vector"));
    }
    let mut m = CMatrix::zeros(t, t);
    for (x, (p, q)) in symbols.iter().zip(design.basis::<T>()) {
        m = m.add(&p.scale(*x)).add(&q.scale(x.conj()));
    }
    Ok(StCodeword { matrix: m.scale_real(T::one() / energy.sqrt()), symbols: symbols.to_vec() })
}

/// Every codeword of a design over a PSK alphabet, indexed by
/// `Σ_j i_j·Q^j` for symbol indices `i_j`.
#[derive(Debug, Clone)]
pub struct Codebook<T> {
    design: StDesign,
    constellation: PskConstellation<T>,
    words: Vec<StCodeword<T>>,
}

impl<T: Real> Codebook<T> {
    pub fn enumerate(design: StDesign, constellation: &PskConstellation<T>) -> Result<Self> {
        let t = design.block_len();
        let q = constellation.order();
        let size = q.pow(t as u32);
        let words = (0..size)
            .map(|idx| {
                let syms: Vec<Cplx<T>> = Self::split_index(idx, q, t).iter().map(|&i| constellation.point(i)).collect();
                build_codeword(&syms, design)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { design, constellation: constellation.clone(), words })
    }

    fn split_index(mut idx: usize, q: usize, t: usize) -> Vec<usize> {
        (0..t)
            .map(|_| {
                let s = idx % q;
                idx /= q;
                s
            })
            .collect()
    }

    pub fn design(&self) -> StDesign {
        self.design
    }

    pub fn constellation(&self) -> &PskConstellation<T> {
        &self.constellation
    }

    pub fn words(&self) -> &[StCodeword<T>] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, idx: usize) -> &StCodeword<T> {
        &self.words[idx]
    }

    pub fn index_of(&self, symbol_indices: &[usize]) -> usize {
        let q = self.constellation.order();
        symbol_indices.iter().rev().fold(0, |acc, &i| acc * q + i)
    }

    pub fn symbol_indices(&self, idx: usize) -> Vec<usize> {
        Self::split_index(idx, self.constellation.order(), self.design.block_len())
    }
}

/// Outcome of checking a dispersion set against its design rules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Per relay: `O_r` unitary.
    pub unitary: Vec<bool>,
    /// Per relay: `C·O_r = O_r·C̃_r` for every tested codeword.
    pub commutative: Vec<bool>,
    /// Per pair `(i, j)`, `i < j`: `diag(O_iᴴ O_j) = 0`.
    pub hollow: Vec<((usize, usize), bool)>,
    /// Human-readable description of every failure.
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Validation(self.failures.join("; ")))
        }
    }
}

/// Checks unitarity, the commutative property over `codewords`, and hollow
/// cross products, to absolute tolerance `tol`.
pub fn validate_dispersion_set<T: Real>(set: &DispersionSet<T>, codewords: &[StCodeword<T>], tol: T) -> ValidationReport {
    let mut failures = Vec::new();
    let unitary: Vec<bool> = (0..set.len())
        .map(|r| {
            let ok = set.o(r).is_unitary(tol);
            if !ok {
                failures.push(format!("O_{} is not unitary", r + 1));
            }
            ok
        })
        .collect();
    let commutative: Vec<bool> = (0..set.len())
        .map(|r| {
            let o = set.o(r);
            let bad = codewords.iter().position(|c| {
                if c.matrix.rows() != o.rows() {
                    return true;
                }
                let ct = match set.group(r) {
                    RelayGroup::Direct => c.matrix.clone(),
                    RelayGroup::Conjugate => c.matrix.conj(),
                };
                (&(&c.matrix * o) - &(o * &ct)).max_abs() > tol
            });
            if let Some(i) = bad {
                failures.push(format!("codeword {i} does not commute with O_{}", r + 1));
            }
            bad.is_none()
        })
        .collect();
    let mut hollow = Vec::new();
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let cross = &set.o(i).adjoint() * set.o(j);
            let ok = cross.diagonal().iter().all(|d| d.norm() <= tol);
            if !ok {
                failures.push(format!("O_{}ᴴ·O_{} is not hollow", i + 1, j + 1));
            }
            hollow.push(((i, j), ok));
        }
    }
    ValidationReport { unitary, commutative, hollow, failures }
}
