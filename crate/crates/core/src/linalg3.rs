//! Fixed-size 3×3 linear algebra and the distortion functionals.
//!
//! Everything here works on stack-allocated `[[f64; 3]; 3]` values. The
//! symmetric eigensolver is the closed-form trigonometric (Viète) solution of
//! the characteristic cubic; singular values are derived from it with a
//! deflation step that keeps the smallest singular value accurate even when
//! the matrix is badly conditioned.

use std::f64::consts::PI;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub type Vector3 = [f64; 3];

/// Relative gap below which two eigenvalues are flagged as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Separation required between 1, a and b.
pub const SPECTRUM_EPSILON: f64 = 1e-9;

/// Row-major 3×3 real matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix3(pub [[f64; 3]; 3]);

impl Matrix3 {
    pub const ZERO: Self = Self([[0.0; 3]; 3]);
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self(rows)
    }

    pub fn diagonal(d: Vector3) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            m.0[i][i] = d[i];
        }
        m
    }

    /// The rank-one matrix `u vᵀ`.
    pub fn outer(u: &Vector3, v: &Vector3) -> Self {
        let mut m = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = u[i] * v[j];
            }
        }
        m
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vector3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.0[i][j] = self.0[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Sum of the squares of all nine 2×2 minors, i.e. the second elementary
    /// symmetric function of the eigenvalues of `MᵀM` (Cauchy–Binet).
    pub fn minor_square_sum(&self) -> f64 {
        const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
        let m = &self.0;
        let mut acc = 0.0;
        for &(r0, r1) in &PAIRS {
            for &(c0, c1) in &PAIRS {
                let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                acc += minor * minor;
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, x: &Vector3) -> Vector3 {
        let m = &self.0;
        [
            m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2],
            m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2],
            m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2],
        ]
    }

    /// Largest absolute difference between `M` and `Mᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;
    fn add(mut self, rhs: Matrix3) -> Matrix3 {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;
    fn sub(mut self, rhs: Matrix3) -> Matrix3 {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl Neg for Matrix3 {
    type Output = Matrix3;
    fn neg(self) -> Matrix3 {
        self * -1.0
    }
}

impl Mul<f64> for Matrix3 {
    type Output = Matrix3;
    fn mul(mut self, s: f64) -> Matrix3 {
        for row in self.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        self
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut out = Matrix3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

pub fn dot(x: &Vector3, y: &Vector3) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

pub fn norm(x: &Vector3) -> f64 {
    dot(x, x).sqrt()
}

/// The diagonal map `diag(1, a, b)` with `1 < a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMap {
    a: f64,
    b: f64,
}

impl DiagonalMap {
    /// Fails with [`Error::Domain`] unless `1 < a < b`, and with
    /// [`Error::DegenerateSpectrum`] when the three singular values are
    /// closer than [`SPECTRUM_EPSILON`].
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && 1.0 < a && a < b) {
            return Err(domain(format!("requires 1 < a < b (got a = {a}, b = {b})")));
        }
        if a - 1.0 <= SPECTRUM_EPSILON || b - a <= SPECTRUM_EPSILON {
            return Err(Error::DegenerateSpectrum {
                a,
                b,
                epsilon: SPECTRUM_EPSILON,
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn matrix(&self) -> Matrix3 {
        Matrix3::diagonal([1.0, self.a, self.b])
    }
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SortedEigenTriple {
    pub values: [f64; 3],
    /// Set when two adjacent eigenvalues are closer than
    /// `DEGENERACY_GAP · max|λ|`.
    pub degenerate: bool,
}

impl SortedEigenTriple {
    fn from_unsorted(mut values: [f64; 3]) -> Self {
        values.sort_by(|x, y| x.total_cmp(y));
        let scale = values[0].abs().max(values[2].abs());
        let min_gap = (values[1] - values[0]).min(values[2] - values[1]);
        Self {
            values,
            degenerate: min_gap <= DEGENERACY_GAP * scale,
        }
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[2]
    }

    /// Smallest gap between adjacent eigenvalues.
    pub fn min_gap(&self) -> f64 {
        (self.values[1] - self.values[0]).min(self.values[2] - self.values[1])
    }
}

/// `MᵀM`.
pub fn gram(m: &Matrix3) -> Matrix3 {
    m.transpose() * *m
}

/// Default relative factor of [`symmetry_tolerance`].
pub const SYM_TOL: f64 = 1e-12;

/// Default bound on `σ_min/σ_max` below which a matrix counts as singular.
pub const SING_TOL: f64 = 1e-12;

/// Symmetry tolerance `1e-12 · max(1, max|S|)`.
pub fn symmetry_tolerance(s: &Matrix3) -> f64 {
    SYM_TOL * s.max_abs().max(1.0)
}


/// Closed-form eigenvalues of a symmetric matrix, ascending.
pub fn eigenvalues_sym3(s: &Matrix3) -> Result<SortedEigenTriple> {
    eigenvalues_sym3_with(s, SYM_TOL)
}

/// [`eigenvalues_sym3`] with the relative symmetry factor `sym_tol` in place
/// of [`SYM_TOL`].
pub fn eigenvalues_sym3_with(s: &Matrix3, sym_tol: f64) -> Result<SortedEigenTriple> {
    let tolerance = sym_tol * s.max_abs().max(1.0);
    let asymmetry = s.asymmetry();
    if !(asymmetry <= tolerance) {
        return Err(Error::NotSymmetric {
            asymmetry,
            tolerance,
        });
    }
    Ok(SortedEigenTriple::from_unsorted(viete_roots(s)))
}

/// Trigonometric solution of `det(S − λI) = 0` for symmetric `S`, using the
/// upper triangle.
fn viete_roots(s: &Matrix3) -> [f64; 3] {
    let m = &s.0;
    let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    if off == 0.0 {
        return [m[0][0], m[1][1], m[2][2]];
    }
    let q = s.trace() / 3.0;
    let d = [m[0][0] - q, m[1][1] - q, m[2][2] - q];
    let p2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    // det((S − qI)/p) / 2, clamped against rounding.
    let shifted = Matrix3([
        [d[0], m[0][1], m[0][2]],
        [m[0][1], d[1], m[1][2]],
        [m[0][2], m[1][2], d[2]],
    ]);
    let r = (shifted.det() / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let largest = q + 2.0 * p * phi.cos();
    let smallest = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let middle = 3.0 * q - largest - smallest;
    [smallest, middle, largest]
}

/// Singular values of `M`, ascending.
///
/// The largest eigenvalue of `MᵀM` comes from the closed-form solver, which
/// is accurate relative to itself. The remaining two are recovered from the
/// invariants `λ₁λ₂ = det(M)²/λ₃` and `λ₁ + λ₂ = (e₂ − λ₁λ₂)/λ₃`, where `e₂`
/// is the sum of squared 2×2 minors of `M`, so their accuracy does not
/// degrade with the condition number of `M`.
///
/// Through the characteristic polynomial a double eigenvalue is only resolved
/// to about `√ε`, so when two squared singular values lie within
/// [`NEAR_DEGENERATE_GAP`] of each other (relative to the largest) the values
/// are recomputed by one-sided Jacobi rotations, which keep full accuracy
/// through the collision points of the concavity window.
pub fn singular_values(m: &Matrix3) -> [f64; 3] {
    let largest = viete_roots(&gram(m))[2].max(0.0);
    if largest == 0.0 {
        return [0.0; 3];
    }
    let det = m.det();
    let product = det * det / largest;
    let sum = ((m.minor_square_sum() - product) / largest).max(0.0);
    let half = 0.5 * sum;
    let disc = (half * half - product).max(0.0);
    let mid = (half + disc.sqrt()).min(largest);
    let low = if mid > 0.0 { (product / mid).min(mid) } else { 0.0 };
    if (mid - low).min(largest - mid) < NEAR_DEGENERATE_GAP * largest {
        return jacobi_singular_values(m);
    }
    [low.sqrt(), mid.sqrt(), largest.sqrt()]
}

/// Relative gap between squared singular values below which
/// [`singular_values`] switches to Jacobi rotations.
pub const NEAR_DEGENERATE_GAP: f64 = 1e-2;

/// Singular values by one-sided (Hestenes) Jacobi rotations on the columns,
/// ascending. Accurate to a few ulps relative to the largest value regardless
/// of clustering.
fn jacobi_singular_values(m: &Matrix3) -> [f64; 3] {
    let mut cols = [m.col(0), m.col(1), m.col(2)];
    for _ in 0..60 {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = dot(&cols[p], &cols[p]);
            let beta = dot(&cols[q], &cols[q]);
            let gamma = dot(&cols[p], &cols[q]);
            if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
            let c = 1.0 / t.hypot(1.0);
            let s = c * t;
            let (cp, cq) = (cols[p], cols[q]);
            for i in 0..3 {
                cols[p][i] = c * cp[i] - s * cq[i];
                cols[q][i] = s * cp[i] + c * cq[i];
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = cols.map(|v| norm(&v));
    sv.sort_by(f64::total_cmp);
    sv
}

/// Ratio of the extreme singular values, `√(λ₃/λ₁)` for the Gram matrix.
pub fn linear_distortion(m: &Matrix3) -> Result<f64> {
    linear_distortion_with(m, SING_TOL)
}

/// [`linear_distortion`] with the relative singularity factor `sing_tol` in
/// place of [`SING_TOL`].
pub fn linear_distortion_with(m: &Matrix3, sing_tol: f64) -> Result<f64> {
    let sv = check_nonsingular(m, sing_tol)?;
    Ok(sv[2] / sv[0])
}

fn check_nonsingular(m: &Matrix3, sing_tol: f64) -> Result<[f64; 3]> {
    if !m.is_finite() {
        return Err(domain("matrix has non-finite entries"));
    }
    let sv = singular_values(m);
    let ratio = sv[0] / sv[2];
    if !(ratio >= sing_tol) || m.det() == 0.0 {
        return Err(Error::SingularMatrix {
            ratio,
            tolerance: sing_tol,
        });
    }
    Ok(sv)
}

/// The four distortion functionals of an orientation-preserving matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    /// Linear distortion `σ_max/σ_min`.
    #[serde(rename = "H")]
    pub h: f64,
    /// Outer distortion `σ_max³/det`.
    #[serde(rename = "K_O")]
    pub k_outer: f64,
    /// Inner distortion `det/σ_min³`.
    #[serde(rename = "K_I")]
    pub k_inner: f64,
    /// `(‖M‖_F/√3)³/det`.
    #[serde(rename = "K_frob")]
    pub k_frobenius: f64,
}

pub fn distortion_report(m: &Matrix3) -> Result<DistortionReport> {
    let det = m.det();
    if !(det > 0.0) {
        return Err(Error::NonPositiveJacobian { det });
    }
    let sv = check_nonsingular(m, SING_TOL)?;
    let frob = m.frobenius_norm() / 3f64.sqrt();
    Ok(DistortionReport {
        h: sv[2] / sv[0],
        k_outer: sv[2].powi(3) / det,
        k_inner: det / sv[0].powi(3),
        k_frobenius: frob.powi(3) / det,
    })
}
