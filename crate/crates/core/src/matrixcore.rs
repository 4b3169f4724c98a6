//! Complex Hermitian matrices, density matrices, and the entropy functionals
//! `tr(rho ln rho)`, `tr(rho ln sigma)`, `ln det rho` and `D(rho || sigma)`.
//!
//! All logarithms are natural, so entropies come out in nats.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::CompensatedSum;

pub type CMatrix = DMatrix<Complex64>;

/// Hermiticity tolerance, relative to the largest entry modulus.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a density matrix trace from 1.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may carry; such eigenvalues are
/// clamped to zero inside the entropy functionals.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues at or below this make `ln det` and `ln sigma` undefined.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;
/// Singularity threshold for states built with [`DensityMatrix::from_factor`],
/// whose small eigenvalues are resolved to full relative precision.
pub const FACTORED_SINGULAR_THRESHOLD: f64 = f64::MIN_POSITIVE;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    /// Validates Hermiticity within [`HERMITIAN_TOL`] and stores the exactly
    /// symmetrized matrix `(H + H^dagger) / 2`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: "non-empty square matrix".into(),
                found: format!("{}x{}", entries.nrows(), entries.ncols()),
            });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let adjoint = entries.adjoint();
        let deviation = (&entries - &adjoint).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tolerance = HERMITIAN_TOL * scale;
        if deviation > tolerance || !deviation.is_finite() {
            return Err(Error::NotHermitian { deviation, tolerance });
        }
        let entries = (entries + adjoint).scale(0.5);
        Ok(Self { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = nalgebra::DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self {
            entries: CMatrix::from_diagonal(&d),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }
}

/// Eigenvalues in ascending order, with optional orthonormal eigenvectors
/// stored as the columns of a unitary matrix in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<CMatrix>,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Backed by nalgebra's Householder tridiagonalization followed by implicit
/// symmetric QR iterations.
pub fn eigh(h: &HermitianMatrix, want_vectors: bool) -> Spectrum {
    if !want_vectors {
        let mut eigenvalues: Vec<f64> = h.entries.symmetric_eigenvalues().iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        return Spectrum {
            eigenvalues,
            eigenvectors: None,
        };
    }
    let eig = SymmetricEigen::new(h.entries.clone());
    let m = h.dim();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    Spectrum {
        eigenvalues,
        eigenvectors: Some(vectors),
    }
}

/// A unit-trace positive semidefinite Hermitian matrix together with its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    spectrum: Spectrum,
    singular_threshold: f64,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let trace = matrix.trace();
        if !((trace - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::NotDensity(format!(
                "trace {trace} differs from 1 by more than {TRACE_TOL:e}"
            )));
        }
        let spectrum = eigh(&matrix, true);
        let min = spectrum.min();
        if !(min >= -PSD_TOL) {
            return Err(Error::NotDensity(format!(
                "smallest eigenvalue {min:e} below -{PSD_TOL:e}"
            )));
        }
        Ok(Self {
            matrix,
            spectrum,
            singular_threshold: SINGULAR_THRESHOLD,
        })
    }

    /// `A A^dagger / tr(A A^dagger)` for an `m x n` factor with `n >= m`.
    ///
    /// The spectrum comes from the singular values of `A`, so eigenvalues far
    /// below `eps * lambda_max` keep their relative accuracy. Such states use
    /// [`FACTORED_SINGULAR_THRESHOLD`] in place of [`SINGULAR_THRESHOLD`].
    pub fn from_factor(a: &CMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n < m {
            return Err(Error::ShapeMismatch {
                expected: "m x n factor with n >= m >= 1".into(),
                found: format!("{m}x{n}"),
            });
        }
        let svd = a.clone().svd(true, false);
        let w = svd.u.expect("left singular vectors were requested");
        let sq: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
        let total: f64 = sq.iter().copied().collect::<CompensatedSum>().value();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NotDensity(format!("factor has Frobenius norm^2 {total}")));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| sq[i].total_cmp(&sq[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| sq[i] / total).collect();
        let vectors = CMatrix::from_fn(m, m, |r, c| w[(r, order[c])]);
        let gram = (a * a.adjoint()).unscale(total);
        let matrix = HermitianMatrix::new(gram)?;
        let trace = matrix.trace();
        if !((trace - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::NotDensity(format!(
                "trace {trace} differs from 1 by more than {TRACE_TOL:e}"
            )));
        }
        Ok(Self {
            matrix,
            spectrum: Spectrum {
                eigenvalues,
                eigenvectors: Some(vectors),
            },
            singular_threshold: FACTORED_SINGULAR_THRESHOLD,
        })
    }

    pub fn from_matrix(entries: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(entries)?)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(diag))
    }

    /// `I / m`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        Self::from_diagonal(&vec![p; dim]).expect("I/m is a density matrix")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    fn eigenvectors(&self) -> &CMatrix {
        self.spectrum
            .eigenvectors
            .as_ref()
            .expect("density matrices always carry eigenvectors")
    }

    /// `U rho U^dagger`.
    pub fn conjugated_by(&self, u: &CMatrix) -> Result<Self> {
        check_square(u, self.dim())?;
        let rotated = u * self.matrix.as_matrix() * u.adjoint();
        Self::from_matrix(rotated)
    }
}

fn check_square(u: &CMatrix, dim: usize) -> Result<()> {
    if u.nrows() != dim || u.ncols() != dim {
        return Err(Error::ShapeMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    Ok(())
}

fn clamped(lambda: f64) -> f64 {
    lambda.max(0.0)
}

fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `-tr(rho ln rho)` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: CompensatedSum = rho.eigenvalues().iter().map(|&l| xlnx(clamped(l))).collect();
    -s.value()
}

fn positive_log_spectrum(state: &DensityMatrix) -> Result<Vec<f64>> {
    state
        .eigenvalues()
        .iter()
        .map(|&l| {
            if l <= state.singular_threshold {
                Err(Error::Singular {
                    eigenvalue: l,
                    threshold: state.singular_threshold,
                })
            } else {
                Ok(l.ln())
            }
        })
        .collect()
}

/// `ln det rho = tr ln rho`; requires a strictly positive spectrum.
pub fn log_det(rho: &DensityMatrix) -> Result<f64> {
    let logs = positive_log_spectrum(rho)?;
    Ok(logs.into_iter().collect::<CompensatedSum>().value())
}

/// `tr(rho ln sigma) = sum_{i,j} lambda_i |v_i^dagger w_j|^2 ln mu_j`.
pub fn cross_log_trace(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("sigma of dimension {}", rho.dim()),
            found: format!("dimension {}", sigma.dim()),
        });
    }
    let log_mu = positive_log_spectrum(sigma)?;
    let overlap = rho.eigenvectors().adjoint() * sigma.eigenvectors();
    let mut acc = CompensatedSum::new();
    for (i, &lambda) in rho.eigenvalues().iter().enumerate() {
        let lambda = clamped(lambda);
        if lambda == 0.0 {
            continue;
        }
        for (j, &lm) in log_mu.iter().enumerate() {
            acc.add(lambda * overlap[(i, j)].norm_sqr() * lm);
        }
    }
    Ok(acc.value())
}

/// Quantum relative entropy `D(rho || sigma) = tr rho (ln rho - ln sigma)`.
///
/// A singular `sigma` is reported as [`Error::Singular`] rather than `+inf`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let cross = cross_log_trace(rho, sigma)?;
    Ok(-von_neumann_entropy(rho) - cross)
}
