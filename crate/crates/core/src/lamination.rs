//! Sawtooth laminates converging uniformly to `x ↦ Ax`.
//!
//! With `h` a unit-height zigzag of slopes `t₊` and `t₋`, the maps
//! `T_ν(x) = Ax + (1/ν) h(ν⟨u, x⟩) v` converge uniformly to `A` while their
//! derivative `A + h′ · v uᵀ` only takes the two values `A + t±B₀ᵀ`. Because
//! `A` is symmetric these have the same distortion as `A + t±B₀`, strictly
//! below `H(A)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg3::{linear_distortion, norm, DiagonalMap, Matrix3, Vector3};
use crate::rank_one::{optimal_direction, OptimalDirection};
use crate::window::{window, ConcavityWindow};

/// Distance in the phase coordinate below which a point counts as a kink.
pub const BREAKPOINT_TOLERANCE: f64 = 1e-12;

/// Continuous periodic zigzag with `h(0) = 0`, rising with slope `t₊` to 1 at
/// `1/t₊`, then falling with slope `t₋` back to 0 at the period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SawtoothProfile {
    pub t_minus: f64,
    pub t_plus: f64,
    pub period: f64,
    pub amplitude: f64,
}

impl SawtoothProfile {
    pub fn new(t_minus: f64, t_plus: f64) -> Result<Self> {
        if !(t_minus < 0.0 && t_plus > 0.0 && t_minus.is_finite() && t_plus.is_finite()) {
            return Err(domain(format!(
                "requires t_minus < 0 < t_plus (got {t_minus}, {t_plus})"
            )));
        }
        Ok(Self {
            t_minus,
            t_plus,
            period: 1.0 / t_plus - 1.0 / t_minus,
            amplitude: 1.0,
        })
    }

    /// End of the rising segment within a period.
    pub fn peak(&self) -> f64 {
        1.0 / self.t_plus
    }

    fn phase(&self, r: f64) -> f64 {
        r.rem_euclid(self.period)
    }

    /// Distance from `r` to the nearest kink.
    pub fn distance_to_kink(&self, r: f64) -> f64 {
        let p = self.phase(r);
        p.min(self.period - p).min((p - self.peak()).abs())
    }
}

/// `h(r)`.
pub fn sawtooth_eval(profile: &SawtoothProfile, r: f64) -> f64 {
    let p = profile.phase(r);
    if p <= profile.peak() {
        profile.t_plus * p
    } else {
        1.0 + profile.t_minus * (p - profile.peak())
    }
}

/// `h′(r)`, exactly `t₊` or `t₋`.
pub fn sawtooth_slope(profile: &SawtoothProfile, r: f64) -> Result<f64> {
    if profile.distance_to_kink(r) < BREAKPOINT_TOLERANCE {
        return Err(Error::Breakpoint { phase: r });
    }
    Ok(if profile.phase(r) < profile.peak() {
        profile.t_plus
    } else {
        profile.t_minus
    })
}

/// The laminate `T_ν` built on the optimal direction of a diagonal map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaminateSequence {
    pub map: DiagonalMap,
    pub direction: OptimalDirection,
    pub window: ConcavityWindow,
    pub nu: u64,
    pub profile: SawtoothProfile,
    /// `A + t₋B₀ᵀ`, the derivative on falling slabs.
    pub jacobian_minus: Matrix3,
    /// `A + t₊B₀ᵀ`, the derivative on rising slabs.
    pub jacobian_plus: Matrix3,
}

impl LaminateSequence {
    pub fn new(map: DiagonalMap, nu: u64) -> Result<Self> {
        if nu == 0 {
            return Err(domain("requires nu >= 1"));
        }
        let direction = optimal_direction(&map)?;
        let window = window(&map)?;
        let profile = SawtoothProfile::new(window.t_minus, window.t_plus)?;
        Ok(Self {
            map,
            direction,
            window,
            nu,
            profile,
            jacobian_minus: map.matrix() + direction.b0.transpose() * window.t_minus,
            jacobian_plus: map.matrix() + direction.b0.transpose() * window.t_plus,
        })
    }

    /// Same map and direction with a different index.
    pub fn with_nu(&self, nu: u64) -> Result<Self> {
        if nu == 0 {
            return Err(domain("requires nu >= 1"));
        }
        Ok(Self { nu, ..self.clone() })
    }

    /// Phase coordinate `ν⟨u, x⟩`.
    pub fn phase(&self, x: &Vector3) -> f64 {
        self.nu as f64 * crate::linalg3::dot(&self.direction.u, x)
    }

    /// Euclidean distance from `x` to the nearest plane where `T_ν` has a kink.
    pub fn distance_to_breakpoint_plane(&self, x: &Vector3) -> f64 {
        self.profile.distance_to_kink(self.phase(x)) / self.nu as f64
    }

    /// `sup |T_ν − A| = amplitude / ν` (since `|v| = 1`).
    pub fn deviation_bound(&self) -> f64 {
        self.profile.amplitude / self.nu as f64
    }

    /// `H_lam = max(H(A + t₋B₀), H(A + t₊B₀))`.
    pub fn h_lam(&self) -> f64 {
        self.window.h_lam()
    }
}

/// `T_ν(x) = Ax + (1/ν) h(ν⟨u, x⟩) v`.
pub fn laminate_map(seq: &LaminateSequence, x: &Vector3) -> Vector3 {
    let ax = seq.map.matrix().mul_vec(x);
    let lift = sawtooth_eval(&seq.profile, seq.phase(x)) / seq.nu as f64;
    let v = seq.direction.v;
    [ax[0] + lift * v[0], ax[1] + lift * v[1], ax[2] + lift * v[2]]
}

/// `DT_ν(x) = A + h′(ν⟨u, x⟩) v uᵀ`, returned as one of the two stored
/// phase matrices.
pub fn laminate_jacobian(seq: &LaminateSequence, x: &Vector3) -> Result<Matrix3> {
    let slope = sawtooth_slope(&seq.profile, seq.phase(x))?;
    Ok(if slope == seq.profile.t_plus {
        seq.jacobian_plus
    } else {
        seq.jacobian_minus
    })
}

/// One sampled point of a laminate map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaminateSample {
    pub x: Vector3,
    pub t_x: Vector3,
    pub phase: f64,
    /// `|T_ν(x) − Ax|`.
    pub deviation: f64,
    /// `H(DT_ν(x))`; absent on a kink plane.
    pub jacobian_distortion: Option<f64>,
}

/// Seeded samples of `T_ν` on the cube `[−1, 1]³` with deviation statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaminateSampleSet {
    pub a: f64,
    pub b: f64,
    pub nu: u64,
    pub seed: u64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub h_lam: f64,
    pub max_deviation: f64,
    pub deviation_bound: f64,
    /// Largest `|H(DT_ν(x)) − h±|` over the samples, matched to the phase.
    pub max_jacobian_mismatch: f64,
    pub samples: Vec<LaminateSample>,
}

/// Draws `samples` points uniformly from `[−1, 1]³` with a seeded generator
/// and evaluates the map, its deviation from `Ax` and its local distortion.
pub fn sample_laminate(seq: &LaminateSequence, samples: usize, seed: u64) -> Result<LaminateSampleSet> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vector3> = (0..samples)
        .map(|_| [0; 3].map(|_| rng.gen_range(-1.0..=1.0)))
        .collect();
    let h_minus = linear_distortion(&seq.jacobian_minus)?;
    let h_plus = linear_distortion(&seq.jacobian_plus)?;
    let rows = points
        .par_iter()
        .map(|x| -> Result<(LaminateSample, f64)> {
            let t_x = laminate_map(seq, x);
            let ax = seq.map.matrix().mul_vec(x);
            let deviation = norm(&[t_x[0] - ax[0], t_x[1] - ax[1], t_x[2] - ax[2]]);
            let (jacobian_distortion, mismatch) = match laminate_jacobian(seq, x) {
                Ok(j) => {
                    let h = linear_distortion(&j)?;
                    let target = if j == seq.jacobian_plus { h_plus } else { h_minus };
                    (Some(h), (h - target).abs())
                }
                Err(Error::Breakpoint { .. }) => (None, 0.0),
                Err(e) => return Err(e),
            };
            Ok((
                LaminateSample {
                    x: *x,
                    t_x,
                    phase: seq.phase(x),
                    deviation,
                    jacobian_distortion,
                },
                mismatch,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = rows.iter().map(|(r, _)| r.deviation).fold(0.0, f64::max);
    let max_jacobian_mismatch = rows.iter().map(|(_, m)| *m).fold(0.0, f64::max);
    Ok(LaminateSampleSet {
        a: seq.map.a(),
        b: seq.map.b(),
        nu: seq.nu,
        seed,
        h_minus,
        h_plus,
        h_lam: seq.h_lam(),
        max_deviation,
        deviation_bound: seq.deviation_bound(),
        max_jacobian_mismatch,
        samples: rows.into_iter().map(|(r, _)| r).collect(),
    })
}

/// A square matrix of arbitrary size, row-major.
pub type MatrixN = Vec<Vec<f64>>;

/// `Â = diag(1, a, b, a, …, a)` and `B̂` with `B₀` in the leading 3×3 block.
pub fn embed_higher_dim(map: &DiagonalMap, b0: &Matrix3, n: usize) -> Result<(MatrixN, MatrixN)> {
    if n < 3 {
        return Err(domain(format!("requires n >= 3 (got {n})")));
    }
    let mut a_hat = vec![vec![0.0; n]; n];
    let mut b_hat = vec![vec![0.0; n]; n];
    let diag = [1.0, map.a(), map.b()];
    for i in 0..n {
        a_hat[i][i] = if i < 3 { diag[i] } else { map.a() };
    }
    for i in 0..3 {
        for j in 0..3 {
            b_hat[i][j] = b0[(i, j)];
        }
    }
    Ok((a_hat, b_hat))
}

/// `M + tN` for square matrices of equal size.
pub fn add_scaled(m: &MatrixN, n: &MatrixN, t: f64) -> MatrixN {
    m.iter()
        .zip(n)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + t * y).collect())
        .collect()
}

/// Linear distortion of an `n × n` matrix that is block diagonal with a 3×3
/// leading block and a diagonal tail: the singular values are those of the
/// block together with the absolute tail entries.
pub fn embedded_distortion(m: &MatrixN) -> Result<f64> {
    let n = m.len();
    if n < 3 || m.iter().any(|row| row.len() != n) {
        return Err(domain("expected a square matrix of size at least 3"));
    }
    for i in 0..n {
        for j in 0..n {
            let in_block = i < 3 && j < 3;
            if !in_block && i != j && m[i][j] != 0.0 {
                return Err(domain("matrix is not block diagonal with a diagonal tail"));
            }
        }
    }
    let block = Matrix3::from_rows([
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ]);
    let sv = crate::linalg3::singular_values(&block);
    let tail = (3..n).map(|i| m[i][i].abs());
    let lo = tail.clone().fold(sv[0], f64::min);
    let hi = tail.fold(sv[2], f64::max);
    if !(lo > 0.0) {
        // Delegate the singular case to the 3×3 error path.
        linear_distortion(&block)?;
        return Err(domain("tail entry is zero: matrix is singular"));
    }
    Ok(hi / lo)
}

/// `N` nearly uniform unit vectors on the sphere (Fibonacci lattice).
pub fn fibonacci_sphere(samples: usize) -> Vec<Vector3> {
    fibonacci_cap(samples, std::f64::consts::PI, &[0.0, 0.0, 1.0])
}

/// `N` nearly uniform unit vectors on the spherical cap of angular radius
/// `rho` about the unit vector `centre`.
pub fn fibonacci_cap(samples: usize, rho: f64, centre: &Vector3) -> Vec<Vector3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let height = 1.0 - rho.cos();
    let (e1, e2) = orthonormal_complement(centre);
    (0..samples)
        .map(|k| {
            let z = 1.0 - height * (k as f64 + 0.5) / samples as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * k as f64).sin_cos();
            let (p, q) = (rho * c, rho * s);
            [0, 1, 2].map(|i| p * e1[i] + q * e2[i] + z * centre[i])
        })
        .collect()
}

fn orthonormal_complement(n: &Vector3) -> (Vector3, Vector3) {
    let seed = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = crate::linalg3::dot(&seed, n);
    let mut e1 = [0, 1, 2].map(|i| seed[i] - d * n[i]);
    let len = norm(&e1);
    e1 = e1.map(|x| x / len);
    let e2 = [
        n[1] * e1[2] - n[2] * e1[1],
        n[2] * e1[0] - n[0] * e1[2],
        n[0] * e1[1] - n[1] * e1[0],
    ];
    (e1, e2)
}

/// Extreme values of `|f(x + r·d) − f(x)| / |r·d|` over the directions `ds`,
/// with the directions that attain them.
fn extreme_stretches<F>(f: &F, x: &Vector3, fx: &Vector3, radius: f64, ds: &[Vector3]) -> ((f64, Vector3), (f64, Vector3))
where
    F: Fn(&Vector3) -> Vector3 + Sync,
{
    ds.par_iter()
        .map(|d| {
            let y = [0, 1, 2].map(|i| x[i] + radius * d[i]);
            let fy = f(&y);
            let dy = [0, 1, 2].map(|i| y[i] - x[i]);
            let df = [0, 1, 2].map(|i| fy[i] - fx[i]);
            let s = norm(&df) / norm(&dy);
            ((s, *d), (s, *d))
        })
        .reduce(
            || ((f64::INFINITY, [0.0; 3]), (0.0, [0.0; 3])),
            |(l1, h1), (l2, h2)| {
                (
                    if l2.0 < l1.0 { l2 } else { l1 },
                    if h2.0 > h1.0 { h2 } else { h1 },
                )
            },
        )
}

/// `max/min` of `|f(y) − f(x)| / |y − x|` over `samples` points `y` on the
/// sphere of the given radius about `x`.
///
/// Half of the points form a global Fibonacci lattice; the other half are
/// split between Fibonacci caps around the best minimising and maximising
/// lattice directions, three lattice spacings wide, which sharpens the
/// estimate from `O(spacing²)` to `O(spacing⁴)`.
pub fn stretch_ratio<F>(f: F, x: &Vector3, radius: f64, samples: usize) -> Result<f64>
where
    F: Fn(&Vector3) -> Vector3 + Sync,
{
    if !(radius > 0.0) || samples < 4 {
        return Err(domain("requires radius > 0 and at least four samples"));
    }
    let fx = f(x);
    let global = samples - samples / 2;
    let ((lo, dlo), (hi, dhi)) = extreme_stretches(&f, x, &fx, radius, &fibonacci_sphere(global));
    let spacing = (4.0 * std::f64::consts::PI / global as f64).sqrt();
    let cap = 3.0 * spacing;
    let per_cap = (samples - global) / 2;
    let ((lo_ref, _), _) = extreme_stretches(&f, x, &fx, radius, &fibonacci_cap(per_cap, cap, &dlo));
    let (_, (hi_ref, _)) =
        extreme_stretches(&f, x, &fx, radius, &fibonacci_cap(samples - global - per_cap, cap, &dhi));
    Ok(hi.max(hi_ref) / lo.min(lo_ref))
}

/// Finite-radius estimate of the pointwise distortion `H(x, T_ν)`.
pub fn local_distortion_probe(seq: &LaminateSequence, x: &Vector3, radius: f64, samples: usize) -> Result<f64> {
    let distance = seq.distance_to_breakpoint_plane(x);
    if radius >= distance {
        return Err(Error::TooCoarse { radius, distance });
    }
    stretch_ratio(|y| laminate_map(seq, y), x, radius, samples)
}
