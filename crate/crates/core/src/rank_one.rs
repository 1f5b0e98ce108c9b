//! Most-concave rank-one perturbation of `diag(1, a, b)`.
//!
//! A unit rank-one direction `B = u ⊗ v` is parametrised by spherical
//! coordinates `u = (√(1−r²), r cos θ₁, r sin θ₁)`,
//! `v = (√(1−s²), s cos θ₂, s sin θ₂)`. Along `A + tB` the linear distortion
//! expands as `b + L t + Q t² + O(t³)`. Directions with `L = 0` are called
//! stationary; among those we look for the most negative `Q`.
//!
//! On the stationary surface `Q` reduces to `(αδ + βη + γ)/(ξμ)` with
//! `δ = r²`, `η = s²`. Minimising that under the constraint by Lagrange
//! multipliers leaves a function of the two angles only, whose minimum has a
//! closed form.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg3::{DiagonalMap, Matrix3, Vector3};

/// Tolerance on the extremal-case constraint `b(r²−1) + r² sin²θ₁ = 0`.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;

/// Default resolution of the brute-force angle grid.
pub const DEFAULT_GRID_N: usize = 512;

/// Unit rank-one direction in spherical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphericalRankOne {
    pub r: f64,
    pub s: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub u: Vector3,
    pub v: Vector3,
}

impl SphericalRankOne {
    pub fn new(r: f64, s: f64, theta1: f64, theta2: f64) -> Result<Self> {
        Self::with_first_components(r, (1.0 - r * r).max(0.0).sqrt(), s, (1.0 - s * s).max(0.0).sqrt(), theta1, theta2)
    }

    /// As [`new`](Self::new), with `u₁ = √(1−r²)` and `v₁ = √(1−s²)` supplied
    /// by the caller. When `r` or `s` is close to 1 the complement cannot be
    /// recovered accurately from the rounded radius, so callers that know it
    /// in closed form pass it here.
    pub fn with_first_components(r: f64, u1: f64, s: f64, v1: f64, theta1: f64, theta2: f64) -> Result<Self> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let angle = |x: f64| (0.0..=PI).contains(&x);
        if !(unit(r) && unit(s) && unit(u1) && unit(v1)) {
            return Err(domain(format!("requires r, s in [0, 1] (got r = {r}, s = {s})")));
        }
        if !(angle(theta1) && angle(theta2)) {
            return Err(domain(format!(
                "requires angles in [0, pi] (got {theta1}, {theta2})"
            )));
        }
        let u = [u1, r * theta1.cos(), r * theta1.sin()];
        let v = [v1, s * theta2.cos(), s * theta2.sin()];
        Ok(Self {
            r,
            s,
            theta1,
            theta2,
            u,
            v,
        })
    }

    /// Recovers the spherical parameters of unit vectors whose first and
    /// third components are non-negative.
    pub fn from_unit_vectors(u: &Vector3, v: &Vector3) -> Result<Self> {
        let params = |w: &Vector3| -> Result<(f64, f64)> {
            if w[0] < 0.0 || w[2] < 0.0 {
                return Err(domain("first and third components must be non-negative"));
            }
            let r = w[1].hypot(w[2]).min(1.0);
            Ok((r, w[2].atan2(w[1])))
        };
        let (r, theta1) = params(u)?;
        let (s, theta2) = params(v)?;
        Self::with_first_components(r, u[0].min(1.0), s, v[0].min(1.0), theta1, theta2)
    }

    /// `B = u vᵀ`.
    pub fn matrix(&self) -> Matrix3 {
        Matrix3::outer(&self.u, &self.v)
    }
}

/// `h0 + L t + Q t²`, the second-order expansion of `H(A + tB)` at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TaylorCoefficients {
    pub h0: f64,
    pub linear: f64,
    pub quadratic: f64,
}

/// Angle-dependent coefficients of the reduced quadratic form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticFormData {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub xi: f64,
}

impl QuadraticFormData {
    /// `(αδ + βη + γ)/(ξμ)`.
    pub fn value(&self, delta: f64, eta: f64) -> f64 {
        (self.alpha * delta + self.beta * eta + self.gamma) / (self.xi * self.mu)
    }
}

/// A stationary point of the Lagrangian
/// `F(δ, η, λ) = (αδ + βη + γ)/(ξμ) − λ(b²(1 − δ − η) + δημ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LagrangePoint {
    pub form: QuadraticFormData,
    pub delta: f64,
    pub eta: f64,
    pub multiplier: f64,
    /// Whether `δ, η ∈ [0, 1]`, i.e. the point corresponds to actual unit vectors.
    pub feasible: bool,
}

impl LagrangePoint {
    /// The three partial derivatives `∂F/∂δ`, `∂F/∂η`, `∂F/∂λ`.
    pub fn gradient(&self, b: f64) -> [f64; 3] {
        let QuadraticFormData {
            alpha,
            beta,
            mu,
            xi,
            ..
        } = self.form;
        let (d, e, l) = (self.delta, self.eta, self.multiplier);
        [
            b * b * l - e * l * mu + alpha / (xi * mu),
            b * b * l - d * l * mu + beta / (xi * mu),
            b * b * (d + e - 1.0) - d * e * mu,
        ]
    }
}

/// The most concave stationary direction and its quadratic coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalDirection {
    pub u: Vector3,
    pub v: Vector3,
    pub b0: Matrix3,
    pub q_min: f64,
}

impl OptimalDirection {
    pub fn params(&self) -> SphericalRankOne {
        SphericalRankOne::from_unit_vectors(&self.u, &self.v)
            .expect("optimal vectors have non-negative first and third components")
    }
}

/// Folds an angle into `[0, π]` using π-periodicity.
pub fn canonical_angle(theta: f64) -> f64 {
    let folded = theta.rem_euclid(PI);
    if folded.is_nan() {
        theta
    } else {
        folded
    }
}

/// `b√(1−r²)√(1−s²) − rs sin θ₁ sin θ₂`; zero exactly on stationary directions.
pub fn stationarity_residual(map: &DiagonalMap, p: &SphericalRankOne) -> f64 {
    map.b() * p.u[0] * p.v[0] - p.r * p.s * p.theta1.sin() * p.theta2.sin()
}

/// For given `r` and angles, the unique `s` that makes the direction
/// stationary: `s² = b²(1−r²) / (b²(1−r²) + r² sin²θ₁ sin²θ₂)`.
pub fn stationary_partner(map: &DiagonalMap, r: f64, theta1: f64, theta2: f64) -> Result<SphericalRankOne> {
    let b2 = map.b() * map.b();
    let p = theta1.sin() * theta2.sin();
    let u1 = (1.0 - r * r).max(0.0).sqrt();
    let num = b2 * u1 * u1;
    let cross = r * p;
    let den = num + cross * cross;
    if !(den > 0.0) {
        return SphericalRankOne::new(r, 1.0, theta1, theta2);
    }
    // s² and 1 − s² from the same closed form, so that neither is lost to
    // cancellation when the other is small.
    let root = den.sqrt();
    let s = (map.b() * u1 / root).min(1.0);
    let v1 = (cross.abs() / root).min(1.0);
    SphericalRankOne::with_first_components(r, u1, s, v1, theta1, theta2)
}

/// Second-order expansion of `H(A + tB)` about `t = 0`, valid for any unit
/// rank-one direction (not only stationary ones).
pub fn taylor_coefficients(map: &DiagonalMap, p: &SphericalRankOne) -> TaylorCoefficients {
    let (a, b) = (map.a(), map.b());
    let (r, s) = (p.r, p.s);
    let (rr, ss) = (p.u[0], p.v[0]);
    let (s1, c1) = p.theta1.sin_cos();
    let (s2, c2) = p.theta2.sin_cos();

    let linear = -b * rr * ss + r * s * s1 * s2;

    let third = (b * r * ss * s1 + s * rr * s2).powi(2) / (b * b - 1.0);
    let second = (a * r * ss * c1 + s * rr * c2).powi(2) / (a * a - 1.0);
    let mixed = s * s * (r * b * c2 * s1 + r * a * c1 * s2).powi(2) / (b * b - a * a);
    let bracket = 0.5 * s * s - 0.5 * s * s * (2.0 * p.theta2).cos()
        - 4.0 * b * r * s * rr * ss * s1 * s2
        + third
        + mixed
        - (b * rr * ss - r * s * s1 * s2).powi(2)
        + b * b * (-1.0 + s * s + 4.0 * (r * r - 1.0) * (s * s - 1.0) + second + third);

    TaylorCoefficients {
        h0: b,
        linear,
        quadratic: bracket / (2.0 * b),
    }
}

fn alpha_coefficient(a: f64, b: f64, theta1: f64, theta2: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    let (a4, b4, b6) = (a2 * a2, b2 * b2, b2 * b2 * b2);
    let c21 = (2.0 * theta1).cos();
    let c22 = (2.0 * theta2).cos();
    let c41 = (4.0 * theta1).cos();
    let sin2 = theta2.sin().powi(2);
    let cross = (2.0 * theta1).sin() * (2.0 * theta2).sin();
    b * (a2 - 2.0 * a4 + (7.0 - 21.0 * a2 + 8.0 * a4) * b2 + (7.0 + 8.0 * a2) * b4 - 8.0 * b6
        - 8.0 * (a2 - 1.0) * b2 * c21 * (-a2 + b2 + (a2 - 1.0) * c22)
        - (a2 - b2)
            * ((1.0 + b2 - 8.0 * b4 + a2 * (-2.0 + 8.0 * b2)) * c22
                + 2.0 * (1.0 - 2.0 * a2 + b2) * c41 * sin2)
        + 8.0 * a * b * (b2 - 1.0).powi(2) * cross)
}

fn gamma_coefficient(a: f64, b: f64, theta1: f64, theta2: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    let c21 = (2.0 * theta1).cos();
    let c22 = (2.0 * theta2).cos();
    let cross = (2.0 * theta1).sin() * (2.0 * theta2).sin();
    -b * (32.0 * b2 * b2 - 16.0 * b2 * b2 * b2
        + 8.0 * a2 * (1.0 - 5.0 * b2)
        + 8.0 * a2 * a2 * (3.0 * b2 - 1.0)
        + 8.0 * (b2 - 1.0) * (a2 - b2) * (1.0 - a2 + b2) * (c21 + c22)
        - 8.0 * (a2 - 1.0) * (a2 + (a2 - 2.0) * b2) * (c21 * c22)
        + 8.0 * a * b * (b2 - 1.0).powi(2) * cross)
}

/// `ξ = 32(a²−1)(b²−1)(b²−a²)`.
pub fn xi(map: &DiagonalMap) -> f64 {
    let (a2, b2) = (map.a() * map.a(), map.b() * map.b());
    32.0 * (a2 - 1.0) * (b2 - 1.0) * (b2 - a2)
}

/// Coefficients of the reduced form at the given angles. `β` is `α` with the
/// angles exchanged, which is what the `δ ↔ η` symmetry of the form requires.
pub fn alpha_beta_gamma_mu(map: &DiagonalMap, theta1: f64, theta2: f64) -> QuadraticFormData {
    let (a, b) = (map.a(), map.b());
    let (t1, t2) = (canonical_angle(theta1), canonical_angle(theta2));
    let p = t1.sin() * t2.sin();
    QuadraticFormData {
        alpha: alpha_coefficient(a, b, t1, t2),
        beta: alpha_coefficient(a, b, t2, t1),
        gamma: gamma_coefficient(a, b, t1, t2),
        mu: b * b - p * p,
        xi: xi(map),
    }
}

/// `√(β/α)`, defined only when `α` and `β` share a strict sign.
fn branch_ratio(form: &QuadraticFormData) -> Result<f64> {
    if !(form.alpha * form.beta > 0.0) {
        return Err(Error::Branch {
            alpha: form.alpha,
            beta: form.beta,
        });
    }
    Ok((form.beta / form.alpha).sqrt())
}

/// Both stationary points of the Lagrangian: the first has `δ, η ≤ 1`, the
/// second `δ, η ≥ 1`.
pub fn lagrange_solutions(map: &DiagonalMap, theta1: f64, theta2: f64) -> Result<[LagrangePoint; 2]> {
    let b = map.b();
    let form = alpha_beta_gamma_mu(map, theta1, theta2);
    let ratio = branch_ratio(&form)?;
    let p = canonical_angle(theta1).sin() * canonical_angle(theta2).sin();
    let sign = form.alpha.signum();
    let lambda = sign * (form.alpha * form.beta).sqrt() / (b * form.xi * form.mu * p);
    let point = |branch: f64| {
        let delta = b * (b + branch * ratio * p) / form.mu;
        let eta = b * (b + branch * p / ratio) / form.mu;
        LagrangePoint {
            form,
            delta,
            eta,
            multiplier: -branch * lambda,
            feasible: (0.0..=1.0).contains(&delta) && (0.0..=1.0).contains(&eta),
        }
    };
    Ok([point(-1.0), point(1.0)])
}

/// The reduced quadratic coefficient at the first Lagrange point.
pub fn q_reduced(map: &DiagonalMap, theta1: f64, theta2: f64) -> Result<f64> {
    let b = map.b();
    let form = alpha_beta_gamma_mu(map, theta1, theta2);
    branch_ratio(&form)?;
    let p = canonical_angle(theta1).sin() * canonical_angle(theta2).sin();
    // α(b² − b p√(β/α)) + β(b² − b p√(α/β)) written so that every operation is
    // commutative in (α, β): the exchange θ₁ ↔ θ₂ is then exact in floating point.
    let root = form.alpha.signum() * (form.alpha * form.beta).sqrt();
    let num = (form.alpha + form.beta) * b * b - 2.0 * b * p * root + form.gamma * form.mu;
    Ok(num / (form.xi * form.mu * form.mu))
}

fn spectrum_guard(map: &DiagonalMap) -> Result<()> {
    // DiagonalMap::new already enforces the separation; kept for maps built
    // through deserialisation.
    DiagonalMap::new(map.a(), map.b()).map(|_| ())
}

fn k_factor(a: f64, b: f64) -> f64 {
    1.0 + a + a * a + b * (a - 1.0) + b * b
}

/// Closed-form most concave stationary direction `B₀ = u ⊗ v` with
/// `v = (u₁, −u₂, u₃)`, and its quadratic coefficient.
pub fn optimal_direction(map: &DiagonalMap) -> Result<OptimalDirection> {
    spectrum_guard(map)?;
    let (a, b) = (map.a(), map.b());
    let k = k_factor(a, b);
    let den = (2.0 * (b + 1.0) * k).sqrt();
    let u1 = (b - 1.0) / den;
    let u2 = ((1.0 + 2.0 * a * a + b * b + 2.0 * a * (1.0 + b)) / (2.0 * k)).sqrt();
    let u3 = (b - 1.0) * b.sqrt() / den;
    let u = [u1, u2, u3];
    let v = [u1, -u2, u3];
    Ok(OptimalDirection {
        u,
        v,
        b0: Matrix3::outer(&u, &v),
        q_min: minimum_q(map),
    })
}

/// `−b(b−1)³ / (4(a+1)(b+1)(a+b)(1+a+a²+ab−b+b²))`.
pub fn minimum_q(map: &DiagonalMap) -> f64 {
    let (a, b) = (map.a(), map.b());
    -b * (b - 1.0).powi(3) / (4.0 * (a + 1.0) * (b + 1.0) * (a + b) * k_factor(a, b))
}

/// Result of the brute-force angle search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridMinimum {
    pub theta1: f64,
    pub theta2: f64,
    pub q_min: f64,
    /// Grid spacing `π/N`.
    pub cell: f64,
    /// Euclidean distance of the minimiser to the line `θ₁ = θ₂`.
    pub dist_diagonal: f64,
    /// Euclidean distance of the minimiser to the line `θ₁ + θ₂ = π`.
    pub dist_antidiagonal: f64,
    /// Number of grid cells where the form is defined (`αβ > 0`).
    pub defined_cells: usize,
}

/// Cell-centre angle `(i + ½)π/N`.
pub fn grid_angle(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) * PI / n as f64
}

/// Minimum of [`q_reduced`] over the cell centres of an `N × N` grid on
/// `[0, π]²`, skipping cells where the branch is undefined.
pub fn brute_force_min_q(map: &DiagonalMap, grid_n: usize) -> Result<GridMinimum> {
    if grid_n < 64 {
        return Err(domain(format!("grid resolution must be at least 64 (got {grid_n})")));
    }
    let (best, defined) = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let t1 = grid_angle(i, grid_n);
            let mut best = (f64::INFINITY, t1, 0.0);
            let mut defined = 0usize;
            for j in 0..grid_n {
                let t2 = grid_angle(j, grid_n);
                if let Ok(q) = q_reduced(map, t1, t2) {
                    defined += 1;
                    if q < best.0 {
                        best = (q, t1, t2);
                    }
                }
            }
            (best, defined)
        })
        .reduce(
            || ((f64::INFINITY, 0.0, 0.0), 0),
            |(x, nx), (y, ny)| (if y.0 < x.0 { y } else { x }, nx + ny),
        );
    let (q_min, theta1, theta2) = best;
    Ok(GridMinimum {
        theta1,
        theta2,
        q_min,
        cell: PI / grid_n as f64,
        dist_diagonal: (theta1 - theta2).abs() / 2f64.sqrt(),
        dist_antidiagonal: (theta1 + theta2 - PI).abs() / 2f64.sqrt(),
        defined_cells: defined,
    })
}

/// The reduced form along the diagonal `θ₁ = θ₂`, where `α = β` and the
/// branch question disappears.
pub fn case1_q(map: &DiagonalMap, theta: f64) -> f64 {
    let b = map.b();
    let form = alpha_beta_gamma_mu(map, theta, theta);
    let s2 = canonical_angle(theta).sin().powi(2);
    let num = 2.0 * form.alpha * (b * b - b * s2) + form.gamma * form.mu;
    num / (form.mu * form.mu * form.xi)
}

/// A critical angle of a one-dimensional section and the value there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub theta: f64,
    pub value: f64,
}

/// The five critical points of the diagonal section on `[0, π]`, with their
/// closed-form values: `0, b/(b²−1), 0, q̂, q̂`. The two interior points off
/// `π/2` are local maxima.
pub fn case1_critical_points(map: &DiagonalMap) -> Result<Vec<CriticalPoint>> {
    spectrum_guard(map)?;
    let (a, b) = (map.a(), map.b());
    let den = (1.0 - 2.0 * a + 2.0 * a * a + 2.0 * b - 4.0 * a * b + 2.0 * a * a * b - b * b
        - 2.0 * a * b * b
        + 2.0 * b * b * b)
        .sqrt();
    let x1 = (b - 1.0) * b.sqrt() / den;
    let y1 = (b + 1.0).sqrt() * (1.0 - 2.0 * a + 2.0 * a * a - 2.0 * a * b + b * b).sqrt() / den;
    // (x₁, y₁) lies on the unit circle; the critical angle has tangent x₁/y₁.
    let interior = x1.atan2(y1);
    let q_hat = b * (b - 1.0).powi(3)
        / (4.0 * (a - 1.0) * (b - a) * (b + 1.0) * (1.0 + a * a + b * (b - 1.0) - a * (b + 1.0)));
    Ok(vec![
        CriticalPoint { theta: 0.0, value: 0.0 },
        CriticalPoint {
            theta: PI / 2.0,
            value: b / (b * b - 1.0),
        },
        CriticalPoint { theta: PI, value: 0.0 },
        CriticalPoint {
            theta: interior,
            value: q_hat,
        },
        CriticalPoint {
            theta: PI - interior,
            value: q_hat,
        },
    ])
}

/// The extremal-case quadratic coefficient for `r = s`, `θ₂ = π − θ₁`,
/// evaluated without checking stationarity.
pub fn case2_profile(map: &DiagonalMap, r: f64, theta1: f64) -> f64 {
    let (a, b) = (map.a(), map.b());
    let k = k_factor(a, b);
    let outer = 4.0 * (a + 1.0) * (a + b);
    let den = 8.0 * (a + 1.0) * (b - 1.0) * (a + b);
    let r2 = r * r;
    r2 * (outer - k * r2 + (-outer * (2.0 * theta1).cos() + k * r2 * (4.0 * theta1).cos())) / den
}

/// [`case2_profile`] on stationary directions only: requires
/// `b(r² − 1) + r² sin²θ₁ = 0`.
pub fn case2_quadratic(map: &DiagonalMap, r: f64, theta1: f64) -> Result<f64> {
    let b = map.b();
    let residual = b * (r * r - 1.0) + r * r * theta1.sin().powi(2);
    if !(residual.abs() <= CONSTRAINT_TOLERANCE) {
        return Err(Error::ConstraintViolated { residual });
    }
    Ok(case2_profile(map, r, theta1))
}

/// The extremal case restricted to its constraint, `r² = b/(b + sin²θ₁)`.
pub fn case2_constrained(map: &DiagonalMap, theta1: f64) -> f64 {
    let b = map.b();
    let r = (b / (b + theta1.sin().powi(2))).sqrt();
    case2_profile(map, r, theta1)
}

/// Interior minimum of the unconstrained `r = 1` section of the extremal
/// case: `cos 2θ = (a+1)(a+b)/(1+a+a²−b+ab+b²)`, value
/// `−(b−1)³/(4(a+1)(a+b)(1+a+a²+b(a−1)+b²))`. This section is not
/// stationary away from `θ ∈ {0, π}`.
pub fn case2_r1_critical(map: &DiagonalMap) -> CriticalPoint {
    let (a, b) = (map.a(), map.b());
    let k = k_factor(a, b);
    let cos2 = (a + 1.0) * (a + b) / k;
    CriticalPoint {
        theta: 0.5 * cos2.clamp(-1.0, 1.0).acos(),
        value: -(b - 1.0).powi(3) / (4.0 * (a + 1.0) * (a + b) * k),
    }
}

/// Closed form of the quadratic coefficient on the face `θ₁ = 0`, `r = 1`.
pub fn q_boundary_r1(map: &DiagonalMap, s: f64, theta: f64) -> f64 {
    let (a2, b2) = (map.a() * map.a(), map.b() * map.b());
    let c2 = theta.cos().powi(2);
    map.b() * (2.0 * s * s * (a2 - 1.0) * (1.0 - c2) + 2.0 * (b2 - a2) * (1.0 - s * s))
        / (4.0 * (a2 - 1.0) * (b2 - a2))
}

/// Whether the quadratic coefficient is non-negative on every stationary
/// boundary sample: `θ₁` or `θ₂ ∈ {0, π}` with `r = 1` or `s = 1`.
pub fn boundary_positivity_check(map: &DiagonalMap, grid_n: usize) -> Result<bool> {
    if grid_n < 64 {
        return Err(domain(format!("grid resolution must be at least 64 (got {grid_n})")));
    }
    let step = |i: usize| i as f64 / (grid_n - 1) as f64;
    for i in 0..grid_n {
        let theta = step(i) * PI;
        for j in 0..grid_n {
            let x = step(j);
            for edge in [0.0, PI] {
                for (t1, t2) in [(edge, theta), (theta, edge)] {
                    for (r, s) in [(1.0, x), (x, 1.0)] {
                        let p = SphericalRankOne::new(r, s, t1, t2)?;
                        if taylor_coefficients(map, &p).quadratic < -1e-12 {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}
