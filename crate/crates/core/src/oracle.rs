//! Independent numerical references used to cross-check the closed forms.
//!
//! Nothing in here is used by the analysis pipeline itself. The routines are
//! deliberately plain: one-sided Jacobi for singular values, bisection for
//! polynomial roots, central differences with Richardson extrapolation for
//! derivatives.

use rand::Rng;

use crate::linalg3::{dot, Matrix3, Vector3};

/// Singular values by one-sided (Hestenes) Jacobi rotations, ascending.
pub fn jacobi_singular_values(m: &Matrix3) -> [f64; 3] {
    // Columns of M.
    let mut cols: [Vector3; 3] = [[0.0; 3]; 3];
    for j in 0..3 {
        for i in 0..3 {
            cols[j][i] = m[(i, j)];
        }
    }
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..2 {
            for q in (p + 1)..3 {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..3 {
                    let up = cols[p][i];
                    let uq = cols[q][i];
                    cols[p][i] = c * up - s * uq;
                    cols[q][i] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = [0.0; 3];
    for j in 0..3 {
        sv[j] = dot(&cols[j], &cols[j]).sqrt();
    }
    sv.sort_by(|x, y| x.total_cmp(y));
    sv
}

/// Eigenvalues of a symmetric matrix by bisection on `det(S − λI)`,
/// ascending. The determinant is evaluated directly from the shifted matrix;
/// the monotone pieces come from the critical points of the cubic.
pub fn symmetric_eigenvalues_bisection(s: &Matrix3) -> [f64; 3] {
    let char_poly = |lambda: f64| (*s - Matrix3::IDENTITY * lambda).det();
    let trace = s.trace();
    let e2 = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)] + s[(0, 0)] * s[(2, 2)]
        - s[(0, 2)] * s[(2, 0)]
        + s[(1, 1)] * s[(2, 2)]
        - s[(1, 2)] * s[(2, 1)];
    let radius = (0..3)
        .map(|i| (0..3).map(|j| s[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        + 1.0;
    let disc = (trace * trace - 3.0 * e2).max(0.0).sqrt();
    let c1 = (trace - disc) / 3.0;
    let c2 = (trace + disc) / 3.0;
    let knots = [-radius, c1, c2, radius];
    let mut roots = [0.0; 3];
    for k in 0..3 {
        roots[k] = bisect_or_touch(&char_poly, knots[k], knots[k + 1]);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Root of a monotone piece `[lo, hi]`; when the ends share a sign the piece
/// only touches zero, at whichever end is closer to it.
fn bisect_or_touch(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    if flo.signum() == fhi.signum() {
        return if flo.abs() < fhi.abs() { lo } else { hi };
    }
    bisect(f, lo, hi)
}

/// Plain bisection on a sign change, to the last representable midpoint.
pub fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Characteristic cubic of `MᵀM` assembled from matrix invariants:
/// coefficients `[c₃, c₂, c₁, c₀]` of `det(MᵀM − λI)`.
pub fn gram_characteristic_cubic(m: &Matrix3) -> [f64; 4] {
    let frob2: f64 = m.rows().iter().flatten().map(|x| x * x).sum();
    let det = m.det();
    [-1.0, frob2, -m.minor_square_sum(), det * det]
}

/// Discriminant of `c₃x³ + c₂x² + c₁x + c₀` together with the sum of the
/// absolute values of its terms, which serves as a rounding scale.
pub fn cubic_discriminant(c: [f64; 4]) -> (f64, f64) {
    let [a, b, cc, d] = c;
    let terms = [
        18.0 * a * b * cc * d,
        -4.0 * b * b * b * d,
        b * b * cc * cc,
        -4.0 * a * cc * cc * cc,
        -27.0 * a * a * d * d,
    ];
    let value = terms.iter().sum();
    let scale = terms.iter().map(|x| x.abs()).sum();
    (value, scale)
}

/// First derivative by central differences at steps `h` and `h/2`, combined
/// by Richardson extrapolation.
pub fn derivative_richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let coarse = d(h);
    let fine = d(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// Second derivative by central differences at steps `h` and `h/2`, combined
/// by Richardson extrapolation.
pub fn second_derivative_richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    let d = |h: f64| (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    let coarse = d(h);
    let fine = d(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// A random orthogonal matrix from Gram–Schmidt on a random matrix.
pub fn random_orthogonal(rng: &mut impl Rng) -> Matrix3 {
    loop {
        let mut cols: [Vector3; 3] = [[0.0; 3]; 3];
        for col in cols.iter_mut() {
            for x in col.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        let mut ok = true;
        for j in 0..3 {
            for k in 0..j {
                let proj = dot(&cols[j], &cols[k]);
                for i in 0..3 {
                    cols[j][i] -= proj * cols[k][i];
                }
            }
            let n = dot(&cols[j], &cols[j]).sqrt();
            if n < 1e-3 {
                ok = false;
                break;
            }
            for x in cols[j].iter_mut() {
                *x /= n;
            }
        }
        if ok {
            let mut q = Matrix3::ZERO;
            for j in 0..3 {
                for i in 0..3 {
                    q[(i, j)] = cols[j][i];
                }
            }
            return q;
        }
    }
}

/// `(λ₂−λ₁)(λ₃−λ₂)(λ₃−λ₁)` for the eigenvalues of `MᵀM`, taken from the
/// Jacobi singular values. This is the square root of the discriminant of the
/// monic characteristic cubic of the Gram matrix; it vanishes exactly where
/// two eigenvalues collide.
pub fn gram_gap_product(m: &Matrix3) -> f64 {
    let s = jacobi_singular_values(m);
    let l = [s[0] * s[0], s[1] * s[1], s[2] * s[2]];
    (l[1] - l[0]) * (l[2] - l[1]) * (l[2] - l[0])
}

/// Location of the vertex of a V-shaped (or otherwise unimodal) function in
/// `[lo, hi]`, by bisection on the sign of its central-difference slope.
pub fn vertex_by_slope_bisection(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let h = 1e-10 * lo.abs().max(hi.abs()).max(1.0);
    let slope = |t: f64| f(t + h) - f(t - h);
    bisect(&|t| slope(t).signum(), lo, hi)
}

/// Numerical crossing points of the Gram eigenvalues along `t ↦ base + t·dir`
/// on `[−span, span]`: the deepest minimum of [`gram_gap_product`] on each
/// side of zero, found on a uniform scan and refined by
/// [`vertex_by_slope_bisection`]. Returns `(t_negative, t_positive)`.
pub fn gram_crossings(base: &Matrix3, dir: &Matrix3, span: f64, scan: usize) -> (f64, f64) {
    let g = |t: f64| gram_gap_product(&(*base + *dir * t));
    let side = |sign: f64| {
        let step = span / scan as f64;
        let best = (1..=scan)
            .map(|k| (k, g(sign * k as f64 * step)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty scan")
            .0;
        let lo = sign * (best as f64 - 1.0) * step;
        let hi = sign * (best as f64 + 1.0) * step;
        vertex_by_slope_bisection(g, lo.min(hi), lo.max(hi))
    };
    (side(-1.0), side(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_on_diagonal_and_rotated() {
        let sv = jacobi_singular_values(&Matrix3::diagonal([4.0, -1.0, 2.0]));
        assert_eq!(sv, [1.0, 2.0, 4.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_orthogonal(&mut rng);
        let v = random_orthogonal(&mut rng);
        let m = u * Matrix3::diagonal([3.0, 0.5, 7.0]) * v;
        let sv = jacobi_singular_values(&m);
        for (got, want) in sv.iter().zip([0.5, 3.0, 7.0]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn bisection_handles_repeated_eigenvalues() {
        let e = symmetric_eigenvalues_bisection(&Matrix3::diagonal([2.0, 2.0, 5.0]));
        assert!((e[0] - 2.0).abs() < 1e-7 && (e[1] - 2.0).abs() < 1e-7);
        assert!((e[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_derivatives_of_polynomial() {
        let f = |x: f64| x * x * x - 2.0 * x;
        assert!((derivative_richardson(f, 1.5, 1e-3) - (3.0 * 2.25 - 2.0)).abs() < 1e-9);
        assert!((second_derivative_richardson(f, 1.5, 1e-3) - 9.0).abs() < 1e-6);
    }

    #[test]
    fn discriminant_of_cubic_with_double_root() {
        // (x − 1)²(x − 3) = x³ − 5x² + 7x − 3
        let (d, scale) = cubic_discriminant([1.0, -5.0, 7.0, -3.0]);
        assert!(d.abs() <= 1e-14 * scale);
        // (x − 1)(x − 2)(x − 3): Π(diff)² = 4
        let (d, _) = cubic_discriminant([1.0, -6.0, 11.0, -6.0]);
        assert!((d - 4.0).abs() < 1e-12);
    }
}
