//! Dense complex states and operators for small Hilbert spaces.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entrywise tolerance for the hermitian tag.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Entrywise tolerance for the unitary tag.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance accepted on the anti-hermitian input of [`matrix_exponential`].
pub const ANTI_HERMITIAN_TOL: f64 = 1e-10;

/// Index of a level in the three-level basis ordering `(|0>, |1>, |e>)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Ground,
    One,
    Excited,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::One, Level::Excited];

    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::One => 1,
            Level::Excited => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Ground => "0",
            Level::One => "1",
            Level::Excited => "e",
        }
    }
}

/// A pure state as a column of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self(amplitudes)
    }

    pub fn from_slice(amplitudes: &[C64]) -> Self {
        Self(DVector::from_column_slice(amplitudes))
    }

    /// Basis state `|index>` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn level(level: Level) -> Self {
        Self::basis(3, level.index())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<index|self>|^2`
    pub fn population(&self, index: usize) -> f64 {
        self.0[index].norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn scale(&self, factor: C64) -> StateVector {
        StateVector(&self.0 * factor)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// A square complex matrix tagged with the structural property it is known to satisfy.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    entries: DMatrix<C64>,
    kind: OperatorKind,
}

impl Operator {
    /// Wraps `entries` after checking that they satisfy `kind`.
    pub fn new(entries: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let op = Self { entries, kind };
        match kind {
            OperatorKind::Hermitian => {
                let defect = op.hermiticity_defect();
                if defect >= HERMITIAN_TOL {
                    return Err(Error::Contract(format!("hermiticity defect {defect:.3e}")));
                }
            }
            OperatorKind::Unitary => {
                let defect = op.unitarity_defect();
                if defect >= UNITARY_TOL {
                    return Err(Error::Contract(format!("unitarity defect {defect:.3e}")));
                }
            }
            OperatorKind::General => {}
        }
        Ok(op)
    }

    pub fn general(entries: DMatrix<C64>) -> Result<Self> {
        Self::new(entries, OperatorKind::General)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: DMatrix::zeros(dim, dim),
            kind: OperatorKind::Hermitian,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: DMatrix::identity(dim, dim),
            kind: OperatorKind::Unitary,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs_diff(&(self.entries.adjoint() * &self.entries), &DMatrix::identity(n, n))
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "operator is {0}x{0}, state has {1} amplitudes",
                self.dim(),
                psi.dim()
            )));
        }
        Ok(StateVector(&self.entries * psi.amplitudes()))
    }

    /// `<bra|self|ket>`
    pub fn matrix_element(&self, bra: &StateVector, ket: &StateVector) -> C64 {
        bra.amplitudes().dotc(&(&self.entries * ket.amplitudes()))
    }
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Max entrywise difference of `a` and `b` after rotating `b` by the phase of `tr(b† a)`.
pub fn phase_aligned_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    if overlap.norm() == 0.0 {
        return max_abs_diff(a, b);
    }
    max_abs_diff(a, &(b * (overlap / overlap.norm())))
}

/// `exp(a)` for an anti-hermitian `a`, returned as a unitary operator.
///
/// The generator `h = i a` is diagonalized as a hermitian matrix; when the
/// eigenvectors come back with a unitarity defect the Padé route is used.
pub fn matrix_exponential(a: &DMatrix<C64>) -> Result<Operator> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square input, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = max_abs_diff(a, &(-a.adjoint()));
    if defect >= ANTI_HERMITIAN_TOL {
        return Err(Error::Contract(format!(
            "input is not anti-hermitian (defect {defect:.3e})"
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalDomain("non-finite entry in exponent".into()));
    }
    let h = a * C64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let exp = exp_from_eigen(&h).unwrap_or_else(|| expm_pade(a));
    Ok(Operator {
        entries: exp,
        kind: OperatorKind::Unitary,
    })
}

/// `exp(-i h)` through the spectral decomposition; `None` when the eigenbasis is not unitary to working precision.
fn exp_from_eigen(h: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    if max_abs_diff(&(v.adjoint() * v), &DMatrix::identity(n, n)) > 1e-12 {
        return None;
    }
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -lambda);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Some(scaled * v.adjoint())
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// General-purpose `exp(a)` by scaling and squaring with a degree-13 Padé approximant.
pub fn expm_pade(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    const THETA13: f64 = 5.371920351148152;
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::new(2f64.powi(-squarings), 0.0);

    let ident = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| C64::new(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9)) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &ident * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &ident * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
