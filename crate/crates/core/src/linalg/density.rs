use serde::{Deserialize, Serialize};

use super::matrix::{kron, kron_vec, ptrace_matrix, CMatrix, C64};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Negative eigenvalues above this are eigensolver noise and left alone.
const ROUNDOFF: f64 = 1e-14;
pub const KET_NORM_TOL: f64 = 1e-12;
/// Traces below this are treated as a zero-probability branch.
pub const IMPOSSIBLE_TRACE: f64 = 1e-12;

/// Unit vector in a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    amplitudes: Vec<C64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("empty ket".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > KET_NORM_TOL {
            return Err(Error::NotUnitNorm(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::NotUnitNorm(norm));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn projector(&self) -> CMatrix {
        CMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates the three invariants. Eigenvalues in `(-PSD_TOL, -1e-14)`
    /// are clamped to zero and the result renormalized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian(format!(
                "max |ρ - ρ†| = {:e}",
                matrix.max_abs_diff(&matrix.adjoint())
            )));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(tr));
        }
        let (vals, vecs) = matrix.hermitian_eigen();
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        if min < -ROUNDOFF {
            return Ok(Self {
                matrix: rebuild_clamped(&vals, &vecs),
            });
        }
        Ok(Self { matrix })
    }

    /// Maximally mixed state on `dim` levels.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }

    /// Partial trace onto the factors in `keep`.
    pub fn ptrace(&self, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
        normalize(&ptrace_matrix(&self.matrix, dims, keep)?)
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn fidelity_pure(&self, ket: &Ket) -> Result<f64> {
        if ket.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "ket of dimension {} against state of dimension {}",
                ket.dim(),
                self.dim()
            )));
        }
        let rho_psi = self.matrix.apply(ket.amplitudes())?;
        Ok(ket
            .amplitudes()
            .iter()
            .zip(&rho_psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .re)
    }

    pub fn approx_eq(&self, other: &DensityOperator, tol: f64) -> bool {
        self.matrix.approx_eq(&other.matrix, tol)
    }
}

fn rebuild_clamped(vals: &[f64], vecs: &CMatrix) -> CMatrix {
    let n = vals.len();
    let mut out = CMatrix::zeros(n, n);
    let mut total = 0.0;
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        total += lambda;
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj() * lambda;
            }
        }
    }
    out.scale_real(1.0 / total)
}

/// Hermitian operator used as an observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableOp {
    matrix: CMatrix,
}

impl ObservableOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian("observable".into()));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &ObservableOp) -> ObservableOp {
        Self {
            matrix: kron(&self.matrix, &other.matrix),
        }
    }
}

/// Divides by the trace and validates.
pub fn normalize(rho: &CMatrix) -> Result<DensityOperator> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch(
            "normalize on non-square matrix".into(),
        ));
    }
    let tr = rho.trace().re;
    if tr < IMPOSSIBLE_TRACE {
        return Err(Error::ImpossibleOutcome(format!(
            "branch weight {tr:e} is zero"
        )));
    }
    DensityOperator::new(rho.scale_real(1.0 / tr))
}

/// Tr(ρ O); errors when the imaginary part is not negligible.
pub fn expect(rho: &DensityOperator, obs: &ObservableOp) -> Result<f64> {
    expect_matrix(rho.matrix(), obs.matrix())
}

fn expect_matrix(rho: &CMatrix, obs: &CMatrix) -> Result<f64> {
    if !obs.is_square() || rho.dim() != obs.rows() {
        return Err(Error::DimensionMismatch(format!(
            "observable of dimension {} against state of dimension {}",
            obs.rows(),
            rho.dim()
        )));
    }
    let n = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * obs[(k, i)];
        }
    }
    if acc.im.abs() > HERMITIAN_TOL {
        return Err(Error::NotHermitian(format!(
            "expectation has imaginary part {:e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// ½‖a − b‖₁
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let diff = a.matrix().checked_sub(b.matrix())?;
    let sum: f64 = diff.hermitian_eigenvalues().iter().map(|l| l.abs()).sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}
