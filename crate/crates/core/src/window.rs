//! The concavity window of `H(A + tB₀)`.
//!
//! Along the optimal line the Gram matrix `(A + tB₀)ᵀ(A + tB₀)` has a
//! characteristic cubic whose coefficients are quadratic in `t`. Its
//! discriminant factors as `P(t)² R(t)` with `R > 0`, so the eigenvalues
//! collide exactly at the two roots `t₋ < 0 < t₊` of the quadratic `P`.
//! Between them `H(A + tB₀) = √(λ₃/λ₁)` is smooth and stays below `H(A) = b`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg3::{linear_distortion, DiagonalMap, Matrix3};
use crate::oracle::cubic_discriminant;
use crate::rank_one::optimal_direction;

/// Imaginary residue (relative to the largest root) above which a Cardano
/// evaluation is rejected.
pub const LEAKAGE_TOLERANCE: f64 = 1e-7;

/// Default extension of the window on each side, as a fraction of its width.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Half-width of the neighbourhoods of `t±` skipped when sampling `R(t)`.
pub const REMAINDER_EXCLUSION: f64 = 1e-3;

/// `D₁λ³ + C₁λ² + B₁λ + A₁`, proportional to `det(Gram − λI)` with factor
/// `4(b+1)²(1+a+a²+(a−1)b+b²)²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CharCubic {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
}

impl CharCubic {
    /// Coefficients in descending order of the power of `λ`.
    pub fn descending(&self) -> [f64; 4] {
        [self.d1, self.c1, self.b1, self.a1]
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        ((self.d1 * lambda + self.c1) * lambda + self.b1) * lambda + self.a1
    }
}

/// The quadratic `P(t) = c₂t² + c₁t + c₀` whose square divides the
/// discriminant of the characteristic cubic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PFactor {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl PFactor {
    pub fn eval(&self, t: f64) -> f64 {
        (self.c2 * t + self.c1) * t + self.c0
    }

    /// `|c₂|t² + |c₁||t| + |c₀|`, the rounding scale of [`PFactor::eval`].
    pub fn scale(&self, t: f64) -> f64 {
        self.c2.abs() * t * t + self.c1.abs() * t.abs() + self.c0.abs()
    }
}

/// Endpoints of the concavity window and the data that produce them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcavityWindow {
    pub t_minus: f64,
    pub t_plus: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub p_coeffs: PFactor,
    pub g1: f64,
    pub j1: f64,
    pub delta: f64,
}

impl ConcavityWindow {
    /// Distortion of the laminate: the larger endpoint value.
    pub fn h_lam(&self) -> f64 {
        self.h_minus.max(self.h_plus)
    }

    pub fn width(&self) -> f64 {
        self.t_plus - self.t_minus
    }

    /// `[t₋ − m·w, t₊ + m·w]` for margin fraction `m` and width `w`.
    pub fn extended(&self, margin: f64) -> (f64, f64) {
        let w = margin * self.width();
        (self.t_minus - w, self.t_plus + w)
    }
}

/// Cardano evaluation of the characteristic cubic at one `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenBranches {
    /// Real and imaginary parts of `X`.
    pub x: (f64, f64),
    pub y: f64,
    pub z: f64,
    /// The three roots in Cardano order (not sorted).
    pub lambda: [f64; 3],
    /// Largest discarded imaginary part relative to the largest root.
    pub residue: f64,
}

impl EigenBranches {
    pub fn sorted(&self) -> [f64; 3] {
        let mut v = self.lambda;
        v.sort_by(|x, y| x.total_cmp(y));
        v
    }
}

fn k_factor(a: f64, b: f64) -> f64 {
    1.0 + a + a * a + (a - 1.0) * b + b * b
}

fn guard(map: &DiagonalMap) -> Result<()> {
    DiagonalMap::new(map.a(), map.b()).map(|_| ())
}

/// Coefficients of the characteristic cubic at `t`.
pub fn char_cubic(map: &DiagonalMap, t: f64) -> Result<CharCubic> {
    guard(map)?;
    let (a, b) = (map.a(), map.b());
    let k = k_factor(a, b);
    let bp = b + 1.0;
    let norm = 4.0 * bp * bp * k * k;
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (b2, b3, b4) = (b * b, b * b * b, b * b * b * b);
    let (b5, b6, b7, b8) = (b4 * b, b4 * b2, b4 * b3, b4 * b4);

    let c1_lin = 2.0 * a3 * b + 2.0 * a3 + 2.0 * a2 * b2 + 4.0 * a2 * b + 2.0 * a2 + a * b3
        + a * b2
        + a * b
        + a
        - b4
        + 2.0 * b3
        - 2.0 * b2
        + 2.0 * b
        - 1.0;
    let c1 = norm * t * t - 4.0 * bp * k * c1_lin * t + norm * (a2 + b2 + 1.0);

    let b1_quad = 4.0 * a4 * (b4 + 2.0 * b3 + 2.0 * b2 + 2.0 * b + 1.0)
        + a3 * (4.0 * b5 + 28.0 * b4 + 32.0 * b3 + 32.0 * b2 + 28.0 * b + 4.0)
        + a2 * (5.0 * b6 + 26.0 * b5 + 43.0 * b4 + 44.0 * b3 + 43.0 * b2 + 26.0 * b + 5.0)
        + a * (2.0 * b7 + 18.0 * b6 + 22.0 * b5 + 22.0 * b4 + 22.0 * b3 + 22.0 * b2 + 18.0 * b + 2.0)
        + (b8 + 4.0 * b7 + 8.0 * b6 - 12.0 * b5 + 30.0 * b4 - 12.0 * b3 + 8.0 * b2 + 4.0 * b + 1.0);
    let b1_lin = 2.0 * a3 * (b3 + b2 + b + 1.0)
        + a2 * (b4 + 6.0 * b3 + 2.0 * b2 + 6.0 * b + 1.0)
        + a * (b5 + b4 + 2.0 * b3 + 2.0 * b2 + b + 1.0)
        - 2.0 * b4
        + 4.0 * b3
        - 2.0 * b2;
    let b1 = -b1_quad * t * t + 4.0 * bp * k * b1_lin * t - norm * (a2 * b2 + a2 + b2);

    let w = (2.0 * a2 * b + 2.0 * a2 + 8.0 * a * b + b3 + b2 + b + 1.0) * t - 2.0 * a * bp * k;
    Ok(CharCubic {
        a1: b2 * w * w,
        b1,
        c1,
        d1: -norm,
    })
}

/// Coefficients of `P(t)`.
pub fn p_factor(map: &DiagonalMap) -> Result<PFactor> {
    guard(map)?;
    let (a, b) = (map.a(), map.b());
    let (a2, a4) = (a * a, a * a * a * a);
    let (b2, b3, b4, b5) = (b * b, b * b * b, b * b * b * b, b * b * b * b * b);
    let c2 = -1.0 - a - 2.0 * a2 - 4.0 * b - 7.0 * a * b - 4.0 * a2 * b + 2.0 * b2
        - 7.0 * a * b2
        - 2.0 * a2 * b2
        - 4.0 * b3
        - a * b3
        - b4;
    let c0 = -2.0
        * (-a + a4 + b - a * b - 2.0 * a2 * b + 2.0 * a4 * b + b2 + 2.0 * a * b2 - 4.0 * a2 * b2
            + a4 * b2
            + 2.0 * a * b3
            - 2.0 * a2 * b3
            + b4
            - a * b4
            + b5
            - a * b5);
    Ok(PFactor {
        c2,
        c1: -g1(a, b),
        c0,
    })
}

fn g1(a: f64, b: f64) -> f64 {
    let (a2, a3) = (a * a, a * a * a);
    let (b2, b3, b4, b5) = (b * b, b * b * b, b * b * b * b, b * b * b * b * b);
    1.0 - 2.0 * a - a2 - 4.0 * a3 + 6.0 * b + 4.0 * a * b - 7.0 * a2 * b - 8.0 * a3 * b + b2
        + 12.0 * a * b2
        - 7.0 * a2 * b2
        - 4.0 * a3 * b2
        + b3
        + 4.0 * a * b3
        - a2 * b3
        + 6.0 * b4
        - 2.0 * a * b4
        + b5
}

fn j1(a: f64, b: f64) -> f64 {
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (b2, b3, b4, b5, b6) = (b * b, b * b * b, b * b * b * b, b * b * b * b * b, b * b * b * b * b * b);
    1.0 + 4.0 * a + 10.0 * a2 + 12.0 * a3 + 9.0 * a4 + 4.0 * b + 16.0 * a * b + 22.0 * a2 * b
        + 20.0 * a3 * b
        - 2.0 * a4 * b
        + 12.0 * a * b2
        + 32.0 * a2 * b2
        + 20.0 * a3 * b2
        + 9.0 * a4 * b2
        + 6.0 * b3
        + 12.0 * a * b3
        + 22.0 * a2 * b3
        + 12.0 * a3 * b3
        + 16.0 * a * b4
        + 10.0 * a2 * b4
        + 4.0 * b5
        + 4.0 * a * b5
        + b6
}

/// Discriminant of `P`, in the factored form `(b²−1)² · (…)`.
pub fn delta(map: &DiagonalMap) -> f64 {
    let (a, b) = (map.a(), map.b());
    let (a2, a3, a4) = (a * a, a * a * a, a * a * a * a);
    let (b3, b4, b5, b6) = (b * b * b, b * b * b * b, b * b * b * b * b, b * b * b * b * b * b);
    (b * b - 1.0).powi(2)
        * (1.0 + 4.0 * b + 6.0 * b3 + 4.0 * b5 + b6
            + 4.0 * a * (b + 1.0) * (b4 + 3.0 * b3 + 3.0 * b + 1.0)
            + 4.0 * a3 * (b + 1.0) * (3.0 + b * (2.0 + 3.0 * b))
            + 2.0 * a2 * (1.0 + b + b * b) * (5.0 + b * (6.0 + 5.0 * b))
            + a4 * (9.0 + b * (9.0 * b - 2.0)))
}

/// The window `[t₋, t₊]` and the distortion at its ends.
pub fn window(map: &DiagonalMap) -> Result<ConcavityWindow> {
    let p = p_factor(map)?;
    let (a, b) = (map.a(), map.b());
    let g = g1(a, b);
    let j = j1(a, b);
    let root = (b * b - 1.0) * j.sqrt();
    // Take the root without cancellation first, the other from the product.
    let (t_plus, t_minus) = if g >= 0.0 {
        let t_minus = (g + root) / (2.0 * p.c2);
        (p.c0 / (p.c2 * t_minus), t_minus)
    } else {
        let t_plus = (g - root) / (2.0 * p.c2);
        (t_plus, p.c0 / (p.c2 * t_plus))
    };
    let b0 = optimal_direction(map)?.b0;
    let h = |t: f64| linear_distortion(&(map.matrix() + b0 * t));
    Ok(ConcavityWindow {
        t_minus,
        t_plus,
        h_minus: h(t_minus)?,
        h_plus: h(t_plus)?,
        p_coeffs: p,
        g1: g,
        j1: j,
        delta: delta(map),
    })
}

/// The matrix `A + tB₀`.
pub fn perturbed(map: &DiagonalMap, t: f64) -> Result<Matrix3> {
    Ok(map.matrix() + optimal_direction(map)?.b0 * t)
}

/// Cardano evaluation of the three eigenvalue branches of the Gram matrix
/// along `A + tB₀`, for `t` within the window extended by
/// [`DEFAULT_MARGIN`] on each side.
pub fn eigen_branches(map: &DiagonalMap, t: f64) -> Result<EigenBranches> {
    let w = window(map)?;
    let (lo, hi) = w.extended(DEFAULT_MARGIN);
    if !(lo <= t && t <= hi) {
        return Err(domain(format!("t = {t} lies outside [{lo}, {hi}]")));
    }
    cardano(&char_cubic(map, t)?)
}

/// Roots of a cubic by Cardano's formula with complex intermediates and the
/// principal cube root.
pub fn cardano(cubic: &CharCubic) -> Result<EigenBranches> {
    // Work with the cubic scaled to |D| = 1.
    let s = 1.0 / cubic.d1.abs();
    let (a, b, c, d) = (cubic.a1 * s, cubic.b1 * s, cubic.c1 * s, cubic.d1 * s);
    let delta0 = c * c - 3.0 * b * d;
    let delta1 = 2.0 * c * c * c - 9.0 * b * c * d + 27.0 * a * d * d;
    let radicand = Complex64::new(delta1 * delta1 - 4.0 * delta0 * delta0 * delta0, 0.0);
    let x = (Complex64::new(-delta1, 0.0) + radicand.sqrt()).cbrt();
    if x.norm() == 0.0 {
        return Err(domain("triple root: Cardano's formula is singular"));
    }
    let y = -delta0 / d;
    let z = -c / (3.0 * d);
    let cbrt2 = 2f64.cbrt();
    let w_minus = Complex64::new(0.5, -0.5 * 3f64.sqrt());
    let w_plus = Complex64::new(0.5, 0.5 * 3f64.sqrt());
    let l1 = z - cbrt2 * y / (3.0 * x) + x / (3.0 * cbrt2 * d);
    let l2 = z + w_minus * cbrt2 * y / (3.0 * x) - w_plus * x / (3.0 * cbrt2 * d);
    let l3 = z + w_plus * cbrt2 * y / (3.0 * x) - w_minus * x / (3.0 * cbrt2 * d);
    let roots = [l1, l2, l3];
    let largest = roots.iter().map(|l| l.re.abs()).fold(0.0, f64::max);
    let residue = roots.iter().map(|l| l.im.abs()).fold(0.0, f64::max) / largest;
    if !(residue <= LEAKAGE_TOLERANCE) {
        return Err(Error::ComplexLeakage { residue });
    }
    Ok(EigenBranches {
        x: (x.re, x.im),
        y,
        z,
        lambda: [l1.re, l2.re, l3.re],
        residue,
    })
}

/// `H(A + tB₀) = √(λ₃/λ₁)` from the Cardano branches.
pub fn h_along(map: &DiagonalMap, t: f64) -> Result<f64> {
    let l = eigen_branches(map, t)?.sorted();
    Ok((l[2] / l[0]).sqrt())
}

/// Follows the three branches over increasing `ts` by matching each new
/// triple to a linear prediction from the previous samples, so that crossing
/// branches keep their identity instead of being re-sorted.
pub fn track_branches(map: &DiagonalMap, ts: &[f64]) -> Result<Vec<[f64; 3]>> {
    const PERMUTATIONS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let fresh = cardano(&char_cubic(map, t)?)?.sorted();
        let next = match k {
            0 => fresh,
            _ => {
                let prev = out[k - 1];
                let predicted = if k >= 2 {
                    let before = out[k - 2];
                    let ratio = (t - ts[k - 1]) / (ts[k - 1] - ts[k - 2]);
                    [0, 1, 2].map(|i| prev[i] + ratio * (prev[i] - before[i]))
                } else {
                    prev
                };
                let cost = |p: &[usize; 3]| -> f64 {
                    (0..3).map(|i| (fresh[p[i]] - predicted[i]).abs()).sum()
                };
                let best = PERMUTATIONS
                    .iter()
                    .min_by(|x, y| cost(x).total_cmp(&cost(y)))
                    .expect("non-empty");
                [0, 1, 2].map(|i| fresh[best[i]])
            }
        };
        out.push(next);
    }
    Ok(out)
}

/// Sampled check that the remainder `R(t) = Disc(t)/P(t)²` is positive on
/// `[2t₋, 2t₊]`, skipping small neighbourhoods of `t±` where both vanish.
pub fn quartic_remainder_positivity(map: &DiagonalMap, samples: usize) -> Result<bool> {
    Ok(quartic_remainder_samples(map, samples)?
        .iter()
        .all(|&(_, r)| r > 0.0))
}

/// The `(t, R(t))` samples behind [`quartic_remainder_positivity`].
pub fn quartic_remainder_samples(map: &DiagonalMap, samples: usize) -> Result<Vec<(f64, f64)>> {
    if samples < 100 {
        return Err(domain(format!("requires at least 100 samples (got {samples})")));
    }
    let w = window(map)?;
    let p = w.p_coeffs;
    let (lo, hi) = (2.0 * w.t_minus, 2.0 * w.t_plus);
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        if (t - w.t_minus).abs() < REMAINDER_EXCLUSION || (t - w.t_plus).abs() < REMAINDER_EXCLUSION {
            continue;
        }
        let cubic = char_cubic(map, t)?;
        let (disc, _) = cubic_discriminant(cubic.descending());
        let pt = p.eval(t);
        out.push((t, disc / (pt * pt)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg3::{eigenvalues_sym3, gram};
    use crate::oracle::gram_characteristic_cubic;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map24() -> DiagonalMap {
        DiagonalMap::new(2.0, 4.0).unwrap()
    }

    #[test]
    fn cubic_matches_gram_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = rng.gen_range(1.05..20.0);
            let b = a + rng.gen_range(0.05..30.0);
            let map = DiagonalMap::new(a, b).unwrap();
            let t = rng.gen_range(-3.0..3.0) * b;
            let cubic = char_cubic(&map, t).unwrap();
            let oracle = gram_characteristic_cubic(&perturbed(&map, t).unwrap());
            let factor = -cubic.d1;
            for (got, want) in cubic.descending().iter().zip(oracle) {
                let scale = factor * (1.0 + want.abs());
                assert!((got - factor * want).abs() <= 1e-10 * scale, "{a} {b} {t}: {got} vs {}", factor * want);
            }
        }
    }

    #[test]
    fn cubic_at_zero_has_diagonal_roots() {
        let map = map24();
        let cubic = char_cubic(&map, 0.0).unwrap();
        for l in [1.0, 4.0, 16.0] {
            assert!(cubic.eval(l).abs() <= 1e-12 * cubic.d1.abs() * 16f64.powi(3));
        }
        assert!(cubic.d1 < 0.0);
    }

    #[test]
    fn coefficients_are_quadratic_in_t() {
        let map = DiagonalMap::new(3.0, 7.0).unwrap();
        let ts = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let vals: Vec<CharCubic> = ts.iter().map(|&t| char_cubic(&map, t).unwrap()).collect();
        for pick in [|c: &CharCubic| c.a1, |c: &CharCubic| c.b1, |c: &CharCubic| c.c1] {
            let y: Vec<f64> = vals.iter().map(pick).collect();
            // Third finite difference of a quadratic vanishes.
            let d3 = y[3] - 3.0 * y[2] + 3.0 * y[1] - y[0];
            let d3b = y[4] - 3.0 * y[3] + 3.0 * y[2] - y[1];
            let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(d3.abs() <= 1e-12 * scale && d3b.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn window_for_2_4() {
        let w = window(&map24()).unwrap();
        assert!((w.t_plus - 1.19219).abs() < 1e-4);
        assert!((w.t_minus + 2.04584).abs() < 1e-4);
        assert!((w.h_plus - 3.97539).abs() < 1e-4);
        assert!((w.h_minus - 3.97539).abs() < 1e-4);
        assert!((w.h_plus - w.h_minus).abs() < 1e-6);
        assert!(((4.0 - w.h_plus) - 0.02461).abs() < 1e-4);
        let p = w.p_coeffs;
        for t in [w.t_minus, w.t_plus] {
            assert!(p.eval(t).abs() <= 1e-9 * p.scale(t));
        }
        assert!(p.c2 < 0.0 && p.c0 > 0.0);
        assert!(w.delta > 0.0);
        let disc = p.c1 * p.c1 - 4.0 * p.c2 * p.c0;
        assert!((w.delta - disc).abs() <= 1e-12 * disc);
        assert!((w.delta - (15.0f64).powi(2) * w.j1).abs() <= 1e-12 * w.delta);
    }

    #[test]
    fn discriminant_vanishes_at_window_ends() {
        for (a, b) in [(2.0, 4.0), (3.0, 7.0), (1.5, 20.0)] {
            let map = DiagonalMap::new(a, b).unwrap();
            let w = window(&map).unwrap();
            for t in [w.t_minus, w.t_plus] {
                let (d, scale) = cubic_discriminant(char_cubic(&map, t).unwrap().descending());
                assert!(d.abs() <= 1e-6 * scale, "{a} {b} {t}: {d} vs {scale}");
            }
        }
    }

    #[test]
    fn cardano_matches_trigonometric_solver() {
        let map = map24();
        let w = window(&map).unwrap();
        for i in 0..=50 {
            let t = w.t_minus + w.width() * i as f64 / 50.0;
            let got = eigen_branches(&map, t).unwrap().sorted();
            let want = eigenvalues_sym3(&gram(&perturbed(&map, t).unwrap())).unwrap().values;
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() <= 1e-8 * want[2], "{t}: {got:?} vs {want:?}");
            }
        }
        let at_zero = eigen_branches(&map, 0.0).unwrap().sorted();
        for (g, w) in at_zero.iter().zip([1.0, 4.0, 16.0]) {
            assert!((g - w).abs() < 1e-10);
        }
        let half = eigen_branches(&map, 0.5).unwrap().sorted();
        let want = eigenvalues_sym3(&gram(&perturbed(&map, 0.5).unwrap())).unwrap().values;
        for k in 0..3 {
            assert!((half[k] - want[k]).abs() <= 1e-10 * want[2]);
        }
    }

    #[test]
    fn branches_collide_at_window_ends() {
        let map = map24();
        let w = window(&map).unwrap();
        for t in [w.t_minus, w.t_plus] {
            let l = eigen_branches(&map, t).unwrap().sorted();
            let gap = (l[1] - l[0]).min(l[2] - l[1]);
            assert!(gap <= 1e-5 * l[2], "{t}: {l:?}");
        }
        assert!(eigen_branches(&map, 10.0).is_err());
    }

    #[test]
    fn h_along_small_t_and_ends() {
        let map = map24();
        assert!((h_along(&map, 0.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((h_along(&map, 0.1).unwrap() - (4.0 - 0.01 / 90.0)).abs() <= 1e-5);
        let w = window(&map).unwrap();
        assert!((h_along(&map, w.t_plus).unwrap() - 3.97539).abs() < 1e-4);
        for i in 1..1000 {
            let t = w.t_minus + w.width() * i as f64 / 1000.0;
            let h = h_along(&map, t).unwrap();
            let reference = linear_distortion(&perturbed(&map, t).unwrap()).unwrap();
            assert!((h - reference).abs() <= 1e-8 * reference);
            if t != 0.0 {
                assert!(h < 4.0);
            }
        }
    }

    #[test]
    fn window_for_2_10_agrees_with_dense_sampling() {
        let map = DiagonalMap::new(2.0, 10.0).unwrap();
        let w = window(&map).unwrap();
        assert!(w.h_plus < 10.0 && w.h_minus < 10.0);
        let h = |t: f64| linear_distortion(&perturbed(&map, t).unwrap()).unwrap();
        for (t, want) in [(w.t_plus, w.h_plus), (w.t_minus, w.h_minus)] {
            let near = (-10..=10)
                .map(|k| h(t + k as f64 * 1e-7))
                .fold(f64::INFINITY, f64::min);
            assert!((near - want).abs() <= 1e-6 * want);
        }
    }

    #[test]
    fn tracked_branches_cross() {
        let map = map24();
        let w = window(&map).unwrap();
        let (lo, hi) = w.extended(DEFAULT_MARGIN);
        let ts: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
        let tracks = track_branches(&map, &ts).unwrap();
        // Some pair of tracked branches changes order across each window end.
        let orders: Vec<[bool; 3]> = tracks
            .iter()
            .map(|l| [l[0] < l[1], l[1] < l[2], l[0] < l[2]])
            .collect();
        let flips = orders.windows(2).filter(|p| p[0] != p[1]).count();
        assert!(flips >= 2, "expected crossings, found {flips}");
    }

    #[test]
    fn remainder_is_positive() {
        assert!(quartic_remainder_positivity(&map24(), 1000).unwrap());
        assert!(quartic_remainder_positivity(&DiagonalMap::new(2.0, 105.0).unwrap(), 1000).unwrap());
        assert!(quartic_remainder_positivity(&map24(), 50).is_err());
    }

    #[test]
    fn delta_is_positive_on_a_grid() {
        for i in 1..=20 {
            for j in 1..=20 {
                let a = 1.0 + 2.45 * i as f64;
                let b = a + 2.45 * j as f64;
                if let Ok(map) = DiagonalMap::new(a, b) {
                    assert!(delta(&map) > 0.0);
                }
            }
        }
    }
}
