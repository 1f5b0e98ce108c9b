//! The invariant suite behind `distortion-lab verify`.
//!
//! Each group compares a closed form or an algorithm against an independent
//! reference over a deterministic sample and reports the worst discrepancy.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::lamination::{laminate_jacobian, LaminateSequence};
use crate::linalg3::{eigenvalues_sym3_with, gram, linear_distortion_with, DiagonalMap, Matrix3};
use crate::oracle::{
    derivative_richardson, gram_crossings, jacobi_singular_values, random_orthogonal,
    second_derivative_richardson, symmetric_eigenvalues_bisection,
};
use crate::rank_one::{
    alpha_beta_gamma_mu, boundary_positivity_check, brute_force_min_q, grid_angle, minimum_q, optimal_direction, q_reduced,
    stationarity_residual, stationary_partner, taylor_coefficients,
};
use crate::window::{delta, h_along, perturbed, quartic_remainder_positivity, window};

/// The `(a, b)` pairs whose reduced-form landscapes are compared against the
/// closed-form minimum.
pub const FIGURE_CASES: [(f64, f64); 4] = [(2.0, 4.0), (2.0, 10.0), (2.0, 105.0), (99.0, 154.0)];

/// Outcome of one group of checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckGroup {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed discrepancy, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

/// All groups of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub groups: Vec<CheckGroup>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }
}

/// Tally of individual comparisons `error ≤ tolerance`.
struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            checks: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, error: f64, tolerance: f64) {
        self.checks += 1;
        if !(error <= tolerance) {
            self.failures += 1;
        }
        if error.is_nan() || error > self.worst {
            self.worst = error;
        }
    }

    fn pass(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.failures += other.failures;
        if other.worst.is_nan() || other.worst > self.worst {
            self.worst = other.worst;
        }
        self
    }
}

fn group(name: &'static str, tolerance: f64, run: impl FnOnce() -> Result<Tally>) -> Result<CheckGroup> {
    let start = Instant::now();
    let t = run()?;
    Ok(CheckGroup {
        name,
        passed: t.failures == 0 && t.checks > 0,
        checks: t.checks,
        failures: t.failures,
        worst: t.worst,
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn random_matrix(rng: &mut ChaCha8Rng, half_width: f64) -> Matrix3 {
    let mut m = Matrix3::ZERO;
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = rng.gen_range(-half_width..half_width);
        }
    }
    m
}

fn random_map(rng: &mut ChaCha8Rng, max: f64) -> DiagonalMap {
    loop {
        let a = rng.gen_range(1.0..max);
        let b = rng.gen_range(a..=max);
        if let Ok(map) = DiagonalMap::new(a, b) {
            if a - 1.0 > 1e-2 && b - a > 1e-2 {
                return map;
            }
        }
    }
}

/// `H(UMV) = H(M)` for random orthogonal `U`, `V`.
pub fn orthogonal_invariance(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    const TOL: f64 = 1e-10;
    group("orthogonal_invariance", TOL, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x01);
        let mut t = Tally::new();
        while t.checks < samples {
            let m = random_matrix(&mut rng, 10.0);
            let Ok(h) = linear_distortion_with(&m, config.sing_tol) else {
                continue;
            };
            let u = random_orthogonal(&mut rng);
            let v = random_orthogonal(&mut rng);
            let h2 = linear_distortion_with(&(u * m * v), config.sing_tol)?;
            t.record((h2 - h).abs() / h, TOL);
        }
        Ok(t)
    })
}

/// Closed-form eigenvalues against bisection on the characteristic
/// polynomial, relative to the spectral radius.
pub fn eigen_vs_bisection(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    const TOL: f64 = 1e-10;
    group("eigen_vs_bisection", TOL, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x02);
        let mats: Vec<Matrix3> = (0..samples)
            .map(|_| {
                let m = random_matrix(&mut rng, 10.0);
                (m + m.transpose()) * 0.5
            })
            .collect();
        mats.par_iter()
            .map(|s| -> Result<Tally> {
                let mut t = Tally::new();
                let got = eigenvalues_sym3_with(s, config.sym_tol)?.values;
                let want = symmetric_eigenvalues_bisection(s);
                let scale = want[0].abs().max(want[2].abs()).max(1.0);
                let err = (0..3).map(|k| (got[k] - want[k]).abs()).fold(0.0, f64::max);
                t.record(err / scale, TOL);
                Ok(t)
            })
            .try_reduce(Tally::new, |x, y| Ok(x.merge(y)))
    })
}

/// Eigenvalues of `MᵀM` against squared Jacobi singular values, relative to
/// the largest.
pub fn eigen_vs_svd(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    const TOL: f64 = 1e-9;
    group("eigen_vs_svd", TOL, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x03);
        let mut t = Tally::new();
        for _ in 0..samples {
            let m = random_matrix(&mut rng, 10.0);
            let got = eigenvalues_sym3_with(&gram(&m), config.sym_tol)?.values;
            let sv = jacobi_singular_values(&m);
            let err = (0..3).map(|k| (got[k] - sv[k] * sv[k]).abs()).fold(0.0, f64::max);
            t.record(err / (sv[2] * sv[2]), TOL);
        }
        Ok(t)
    })
}

/// Symmetries of the reduced form on a 128 × 128 grid of cell centres.
/// Exchange of the angles is exact; the reflections `θ ↦ π − θ` hold up to
/// the rounding of `π − θ` itself.
pub fn q_symmetry(_config: &RunConfig) -> Result<CheckGroup> {
    const TOL: f64 = 1e-12;
    const N: usize = 128;
    group("q_symmetry", TOL, || {
        let mut t = Tally::new();
        for &(a, b) in &FIGURE_CASES {
            let map = DiagonalMap::new(a, b)?;
            for i in 0..N {
                for j in 0..N {
                    let (t1, t2) = (grid_angle(i, N), grid_angle(j, N));
                    let (r1, r2) = (grid_angle(N - 1 - i, N), grid_angle(N - 1 - j, N));
                    let q = q_reduced(&map, t1, t2);
                    let swapped = q_reduced(&map, t2, t1);
                    t.pass(match (&q, &swapped) {
                        (Ok(x), Ok(y)) => x == y,
                        (Err(_), Err(_)) => true,
                        _ => false,
                    });
                    for other in [q_reduced(&map, r1, r2), q_reduced(&map, r2, r1)] {
                        match (&q, &other) {
                            (Ok(x), Ok(y)) => t.record((x - y).abs() / term_scale(&map, t1, t2), TOL),
                            (Err(_), Err(_)) => t.pass(true),
                            _ => t.pass(false),
                        }
                    }
                }
            }
        }
        Ok(t)
    })
}

/// Sum of the magnitudes of the terms in the reduced form at `(θ₁, θ₂)`:
/// the scale against which its rounding error is measured.
fn term_scale(map: &DiagonalMap, theta1: f64, theta2: f64) -> f64 {
    let b = map.b();
    let f = alpha_beta_gamma_mu(map, theta1, theta2);
    let p = theta1.sin() * theta2.sin();
    let terms = (f.alpha.abs() + f.beta.abs()) * b * b
        + 2.0 * b * (p * (f.alpha * f.beta).abs().sqrt()).abs()
        + (f.gamma * f.mu).abs();
    terms / (f.xi * f.mu * f.mu).abs()
}

/// Non-negativity of the quadratic coefficient on the stationary boundary.
pub fn boundary_positivity(config: &RunConfig) -> Result<CheckGroup> {
    group("boundary_positivity", 0.0, || {
        let mut t = Tally::new();
        let n = (config.grid_n / 4).max(64);
        for &(a, b) in &FIGURE_CASES {
            t.pass(boundary_positivity_check(&DiagonalMap::new(a, b)?, n)?);
        }
        Ok(t)
    })
}

/// `Δ(a, b) > 0` on a grid of `1 < a < b ≤ 50`.
pub fn delta_positive(_config: &RunConfig) -> Result<CheckGroup> {
    group("delta_positive", 0.0, || {
        let mut t = Tally::new();
        for i in 1..=50 {
            for j in 1..=50 {
                let a = 1.0 + 49.0 * i as f64 / 51.0;
                let b = 1.0 + 49.0 * j as f64 / 50.0;
                if let Ok(map) = DiagonalMap::new(a, b) {
                    let w = window(&map)?;
                    t.pass(delta(&map) > 0.0 && w.delta > 0.0);
                }
            }
        }
        Ok(t)
    })
}

/// Sampled positivity of the remainder `Disc/P²`.
pub fn remainder_positive(_config: &RunConfig) -> Result<CheckGroup> {
    group("remainder_positive", 0.0, || {
        let mut t = Tally::new();
        for (a, b) in [(2.0, 4.0), (3.0, 7.0), (2.0, 105.0), (99.0, 154.0), (1.5, 40.0)] {
            t.pass(quartic_remainder_positivity(&DiagonalMap::new(a, b)?, 1000)?);
        }
        Ok(t)
    })
}

/// The closed-form minimum of the reduced form against a brute-force grid.
pub fn qmin_vs_grid(config: &RunConfig) -> Result<CheckGroup> {
    let tol = config.grid_tolerance();
    group("qmin_vs_grid", tol, || {
        let mut t = Tally::new();
        for &(a, b) in &FIGURE_CASES {
            let map = DiagonalMap::new(a, b)?;
            let grid = brute_force_min_q(&map, config.grid_n)?;
            let q = minimum_q(&map);
            t.record((grid.q_min - q).abs(), tol);
            // Global minimality on the grid and position on the symmetry line.
            t.pass(q <= grid.q_min + 1e-9);
            t.pass(grid.dist_antidiagonal <= grid.cell);
        }
        Ok(t)
    })
}

/// Linear and quadratic coefficients on random stationary directions against
/// Richardson-extrapolated finite differences of `H(A + tB)`.
pub fn stationarity_fd(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    group("stationarity_fd", config.fd_tol, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x04);
        let mut t = Tally::new();
        let mut worst_linear: f64 = 0.0;
        for _ in 0..samples {
            let map = random_map(&mut rng, 20.0);
            let p = stationary_partner(
                &map,
                rng.gen_range(0.0f64..1.0).sqrt(),
                rng.gen_range(0.0..PI),
                rng.gen_range(0.0..PI),
            )?;
            let b = p.matrix();
            let h = |s: f64| linear_distortion_with(&(map.matrix() + b * s), config.sing_tol).unwrap_or(f64::NAN);
            let tc = taylor_coefficients(&map, &p);
            let d1 = derivative_richardson(h, 0.0, 1e-3);
            let d2 = second_derivative_richardson(h, 0.0, 1e-3);
            let residual_ok = stationarity_residual(&map, &p).abs() <= 1e-10 && tc.linear.abs() <= 1e-10;
            t.pass(residual_ok && d1.abs() <= 1e-6);
            worst_linear = worst_linear.max(d1.abs());
            t.record((tc.quadratic - 0.5 * d2).abs(), config.fd_tol);
        }
        Ok(t)
    })
}

/// Closed-form `t±` against the numerical collision points of the Gram
/// eigenvalues along `A + tB₀`.
pub fn window_crossings(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    const TOL: f64 = 1e-6;
    group("window_crossings", TOL, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x05);
        let maps: Vec<DiagonalMap> = (0..samples).map(|_| random_map(&mut rng, 50.0)).collect();
        maps.par_iter()
            .map(|map| -> Result<Tally> {
                let mut t = Tally::new();
                let w = window(map)?;
                let b0 = optimal_direction(map)?.b0;
                let (tm, tp) = gram_crossings(&map.matrix(), &b0, 8.0 * map.b(), 4000);
                t.record((tm - w.t_minus).abs() / w.t_minus.abs(), TOL);
                t.record((tp - w.t_plus).abs() / w.t_plus.abs(), TOL);
                Ok(t)
            })
            .try_reduce(Tally::new, |x, y| Ok(x.merge(y)))
    })
}

/// `H(A + tB₀) < b` strictly inside the window, and a double root at its ends.
pub fn window_interior(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    group("window_interior", 1e-5, || {
        let mut t = Tally::new();
        for &(a, b) in &FIGURE_CASES {
            let map = DiagonalMap::new(a, b)?;
            let w = window(&map)?;
            for i in 1..samples {
                let s = w.t_minus + w.width() * i as f64 / samples as f64;
                if s == 0.0 {
                    continue;
                }
                let h = h_along(&map, s)?;
                t.pass(h < b);
            }
            for s in [w.t_minus, w.t_plus] {
                let l = eigenvalues_sym3_with(&gram(&perturbed(&map, s)?), config.sym_tol)?;
                t.record(l.min_gap() / l.max(), 1e-5);
            }
        }
        Ok(t)
    })
}

/// Every sampled laminate derivative is one of the two phase matrices, and
/// both have distortion below `H(A)`.
pub fn laminate_two_valued(config: &RunConfig, samples: usize) -> Result<CheckGroup> {
    group("laminate_two_valued", 0.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x06);
        let mut t = Tally::new();
        let map = DiagonalMap::new(2.0, 4.0)?;
        for nu in [1, 10, 100, 1000] {
            let seq = LaminateSequence::new(map, nu)?;
            for _ in 0..samples / 4 {
                let x = [0; 3].map(|_| rng.gen_range(-1.0..1.0));
                match laminate_jacobian(&seq, &x) {
                    Ok(j) => t.pass(j == seq.jacobian_plus || j == seq.jacobian_minus),
                    Err(_) => continue,
                }
            }
            for m in [seq.jacobian_minus, seq.jacobian_plus] {
                t.pass(linear_distortion_with(&m, config.sing_tol)? < map.b() && m.det() > 0.0);
            }
        }
        Ok(t)
    })
}

/// Runs every group.
pub fn verify(config: &RunConfig) -> Result<VerifyReport> {
    config.validate()?;
    Ok(VerifyReport {
        groups: vec![
            orthogonal_invariance(config, 1000)?,
            eigen_vs_bisection(config, 10_000)?,
            eigen_vs_svd(config, 1000)?,
            q_symmetry(config)?,
            boundary_positivity(config)?,
            delta_positive(config)?,
            remainder_positive(config)?,
            qmin_vs_grid(config)?,
            stationarity_fd(config, 100)?,
            window_crossings(config, 20)?,
            window_interior(config, 1000)?,
            laminate_two_valued(config, 10_000)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_groups_pass() {
        let config = RunConfig {
            grid_n: 64,
            ..RunConfig::default()
        };
        for g in [
            orthogonal_invariance(&config, 200).unwrap(),
            eigen_vs_bisection(&config, 500).unwrap(),
            eigen_vs_svd(&config, 200).unwrap(),
            stationarity_fd(&config, 20).unwrap(),
            window_crossings(&config, 4).unwrap(),
            laminate_two_valued(&config, 400).unwrap(),
        ] {
            assert!(g.passed, "{g:?}");
        }
    }

    #[test]
    fn coarse_grid_uses_looser_tolerance() {
        let config = RunConfig {
            grid_n: 64,
            ..RunConfig::default()
        };
        let g = qmin_vs_grid(&config).unwrap();
        assert!(g.passed, "{g:?}");
        assert!(g.tolerance > 2e-4);
    }
}
