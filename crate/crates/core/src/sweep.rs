//! Families `A = diag(1, c, f(c))`: jump ratios, the closed forms for
//! `f(c) = c²`, the `√2` asymptotic and the Gehring–Iwaniec bound.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg3::{linear_distortion, DiagonalMap, Matrix3};
use crate::rank_one::{stationarity_residual, stationary_partner, taylor_coefficients, SphericalRankOne};
use crate::window::window;

/// Residual above which a sampled direction is not considered stationary.
pub const STATIONARITY_FILTER: f64 = 1e-8;

/// How `b` depends on `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Family {
    /// `b = c²`.
    CSquared,
    /// `b = c^p`.
    Power(f64),
    /// `b = c + Δ`.
    Shift(f64),
}

impl Family {
    pub fn b(&self, c: f64) -> f64 {
        match *self {
            Family::CSquared => c * c,
            Family::Power(p) => c.powf(p),
            Family::Shift(d) => c + d,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::CSquared => write!(f, "csq"),
            Family::Power(p) => write!(f, "cpow:{p}"),
            Family::Shift(d) => write!(f, "cshift:{d}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `csq`, `cpow:<p>` or `cshift:<Δ>`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| domain(format!("invalid family parameter '{v}'")))
        };
        match s.split_once(':') {
            None if s == "csq" => Ok(Family::CSquared),
            Some(("cpow", p)) => {
                let p = parse(p)?;
                if p > 1.0 {
                    Ok(Family::Power(p))
                } else {
                    Err(domain(format!("cpow requires p > 1 (got {p})")))
                }
            }
            Some(("cshift", d)) => {
                let d = parse(d)?;
                if d > 0.0 {
                    Ok(Family::Shift(d))
                } else {
                    Err(domain(format!("cshift requires a positive shift (got {d})")))
                }
            }
            _ => Err(domain(format!(
                "unknown family '{s}' (expected csq, cpow:<p> or cshift:<delta>)"
            ))),
        }
    }
}

/// A family together with the values of `c` to visit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub family: Family,
    pub grid: Vec<f64>,
}

/// One row of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub h_lam: f64,
    pub jump_ratio: f64,
    pub gi_bound: f64,
}

/// `points` values from `from` to `to`, evenly spaced on a log scale.
pub fn log_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(from > 0.0 && to >= from && points >= 1) {
        return Err(domain("log grid requires 0 < from <= to and at least one point"));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let (lo, hi) = (from.ln(), to.ln());
    Ok((0..points)
        .map(|i| match i {
            0 => from,
            i if i == points - 1 => to,
            i => (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect())
}

/// `points` values from `from` to `to`, evenly spaced.
pub fn linear_grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    if !(from.is_finite() && to >= from && points >= 1) {
        return Err(domain("linear grid requires from <= to and at least one point"));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    Ok((0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect())
}

/// The window analysis of `diag(1, c, f(c))`.
pub fn sweep_point(family: Family, c: f64) -> Result<SweepRecord> {
    let b = family.b(c);
    let map = DiagonalMap::new(c, b)?;
    let w = window(&map)?;
    let h_lam = w.h_lam();
    Ok(SweepRecord {
        c,
        a: c,
        b,
        t_minus: w.t_minus,
        t_plus: w.t_plus,
        h_minus: w.h_minus,
        h_plus: w.h_plus,
        h_lam,
        jump_ratio: b / h_lam,
        gi_bound: gehring_iwaniec_bound(h_lam, 3)?,
    })
}

/// One outcome per grid value, in grid order.
pub fn sweep(spec: &FamilySpec) -> Vec<Result<SweepRecord>> {
    spec.grid
        .par_iter()
        .map(|&c| sweep_point(spec.family, c))
        .collect()
}

fn guard_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 1.0) {
        return Err(domain(format!("requires c > 1 (got {c})")));
    }
    Ok(())
}

/// Flips the sign of `m` so that its `(3,3)` entry is non-negative.
pub fn canonical_sign(m: &Matrix3) -> Matrix3 {
    if m[(2, 2)] < 0.0 {
        -*m
    } else {
        *m
    }
}

/// Closed form of the optimal direction for `diag(1, c, c²)`.
pub fn optimal_direction_c(c: f64) -> Result<Matrix3> {
    guard_c(c)?;
    let q = (c - 1.0) * c + 1.0;
    let c2 = c * c;
    let w = (c / q + 1.0).sqrt();
    let side = (c2 - 1.0) * w / (2.0 * ((c + 1.0).powi(2) * q * (c2 + 1.0)).sqrt());
    let corner = (c - 1.0).powi(2) * c / (2.0 * q * (c2 + 1.0));
    let inner = c * (c2 - 1.0) * w / (2.0 * ((c2 + 1.0) * (c2 * c2 + c2 * c + c + 1.0)).sqrt());
    Ok(canonical_sign(&Matrix3::from_rows([
        [1.0 / (c2 + 1.0) - 1.0 / (2.0 * (c - 1.0) * c + 2.0), -side, corner],
        [side, -(c2 + 1.0) / (2.0 * (c - 1.0) * c + 2.0), inner],
        [corner, -c * side, (c - 1.0).powi(2) * c2 / (2.0 * q * (c2 + 1.0))],
    ])))
}

/// Closed-form window ends `(t₊, t₋)` for `diag(1, c, c²)`.
pub fn t_pm_c(c: f64) -> Result<(f64, f64)> {
    guard_c(c)?;
    let c2 = c * c;
    let r = ((c2 + 1.0) * ((c * (c * c2 + 7.0 * c - 8.0) + 7.0) * c2 + 1.0)).sqrt();
    let den = 2.0 * ((c2 * c2 * c + 6.0 * c * c2 + c2 + c + 6.0) * c2 + 1.0);
    let m = c2 * c2 * c2 - 2.0 * c2 * c2 * c + 5.0 * c2 * c2 - 5.0 * c2 + 2.0 * c - 1.0;
    let lead = (c - 1.0) * (c2 + 1.0);
    let big = (c + 1.0).powi(2) * r + m;
    // (c+1)⁴r² − m² in closed form, to avoid cancelling the leading c⁶.
    let small = 8.0 * c * (c + 1.0).powi(2) * (c2 - c + 1.0).powi(2) * (c2 * c2 + 6.0 * c2 + 1.0) / big;
    Ok((lead * small / den, -lead * big / den))
}

/// `(c, H_lam/c²)` along `f(c) = c²`.
pub fn asymptotic_ratio(cs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if cs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("c values must be strictly increasing"));
    }
    cs.par_iter()
        .map(|&c| {
            guard_c(c)?;
            let r = sweep_point(Family::CSquared, c)?;
            Ok((c, r.h_lam / (c * c)))
        })
        .collect()
}

/// `½(M + M^{n−1})^{2/n}`.
pub fn gehring_iwaniec_bound(m: f64, n: u32) -> Result<f64> {
    if !(m >= 1.0) || n < 2 {
        return Err(domain(format!("requires M >= 1 and n >= 2 (got M = {m}, n = {n})")));
    }
    Ok(0.5 * (m + m.powi(n as i32 - 1)).powf(2.0 / n as f64))
}

/// Outcome of the random search for directions beating `B₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub trials: usize,
    /// Samples that passed the stationarity filter.
    pub stationary: usize,
    /// Stationary samples with negative quadratic coefficient.
    pub concave: usize,
    /// Lowest laminate level found among concave directions.
    pub best_level: f64,
    pub best_direction: Option<SphericalRankOne>,
    pub h_lam: f64,
    /// Whether some direction reached below `h_lam − 1e-6`.
    pub beats_h_lam: bool,
}

impl ProbeReport {
    /// `H(A) − best_level`, the largest drop observed.
    pub fn worst_drop(&self, h0: f64) -> f64 {
        h0 - self.best_level
    }
}

/// Lowest value of `H(A + tB)` for `t` moving away from 0 in direction `sign`
/// up to the first local minimum (the first eigenvalue crossing), or up to
/// `|t| = 4b` if none is met.
fn side_minimum(base: &Matrix3, dir: &Matrix3, sign: f64, b: f64) -> f64 {
    let h = |t: f64| linear_distortion(&(*base + *dir * t)).unwrap_or(f64::INFINITY);
    let steps = 800;
    let dt = sign * 4.0 * b / steps as f64;
    let mut prev = h(0.0);
    for k in 1..=steps {
        let t = k as f64 * dt;
        let cur = h(t);
        if cur > prev {
            // Minimum bracketed by [t − 2dt, t]; refine by ternary search.
            let (mut lo, mut hi) = (t - 2.0 * dt, t);
            for _ in 0..100 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if h(m1) < h(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            return h(0.5 * (lo + hi)).min(prev);
        }
        prev = cur;
    }
    prev
}

/// Laminate level of a rank-one direction: `max(min_{t<0} H, min_{t>0} H)`,
/// each minimum taken before the first eigenvalue crossing on that side.
pub fn direction_level(map: &DiagonalMap, dir: &Matrix3) -> f64 {
    let base = map.matrix();
    side_minimum(&base, dir, -1.0, map.b()).max(side_minimum(&base, dir, 1.0, map.b()))
}

/// Falsification probe for the conjecture that no stationary concave
/// direction yields a laminate with distortion below `H_lam`.
///
/// Angles are uniform on `[0, π]²`. Even trials use `r = s`,
/// `r² = b/(b + sin θ₁ sin θ₂)`; odd trials draw `r²` uniformly and solve the
/// stationarity constraint for `s`.
pub fn random_direction_sampling(map: &DiagonalMap, trials: usize, seed: u64) -> Result<ProbeReport> {
    if trials < 1000 {
        return Err(domain(format!("requires at least 1000 trials (got {trials})")));
    }
    let b = map.b();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(trials);
    for k in 0..trials {
        let t1 = rng.gen_range(0.0..=std::f64::consts::PI);
        let t2 = rng.gen_range(0.0..=std::f64::consts::PI);
        let r = if k % 2 == 0 {
            (b / (b + t1.sin() * t2.sin())).sqrt()
        } else {
            rng.gen_range(0.0f64..=1.0).sqrt()
        };
        params.push(stationary_partner(map, r, t1, t2)?);
    }
    let evaluated: Vec<(bool, bool, f64, SphericalRankOne)> = params
        .par_iter()
        .map(|p| {
            let stationary = stationarity_residual(map, p).abs() <= STATIONARITY_FILTER;
            let concave = stationary && taylor_coefficients(map, p).quadratic < 0.0;
            let level = if concave {
                direction_level(map, &p.matrix())
            } else {
                f64::INFINITY
            };
            (stationary, concave, level, *p)
        })
        .collect();
    let h_lam = window(map)?.h_lam();
    let stationary = evaluated.iter().filter(|e| e.0).count();
    let concave = evaluated.iter().filter(|e| e.1).count();
    let best = evaluated
        .iter()
        .filter(|e| e.1)
        .min_by(|x, y| x.2.total_cmp(&y.2));
    let best_level = best.map_or(f64::INFINITY, |e| e.2);
    Ok(ProbeReport {
        trials,
        stationary,
        concave,
        best_level,
        best_direction: best.map(|e| e.3),
        h_lam,
        beats_h_lam: best_level < h_lam - 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_one::optimal_direction;

    #[test]
    fn family_parsing() {
        assert_eq!("csq".parse::<Family>().unwrap(), Family::CSquared);
        assert_eq!("cpow:1.5".parse::<Family>().unwrap(), Family::Power(1.5));
        assert_eq!("cshift:1".parse::<Family>().unwrap(), Family::Shift(1.0));
        assert!("cpow:0.5".parse::<Family>().is_err());
        assert!("linear".parse::<Family>().is_err());
        assert_eq!(Family::Power(3.0).b(2.0), 8.0);
        assert_eq!(Family::CSquared.to_string(), "csq");
    }

    #[test]
    fn grids() {
        let g = log_grid(10.0, 1e4, 4).unwrap();
        assert_eq!(g[0], 10.0);
        assert_eq!(g[3], 1e4);
        assert!((g[1] - 100.0).abs() < 1e-9);
        assert_eq!(linear_grid(2.0, 2.0, 1).unwrap(), vec![2.0]);
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn record_at_c_2() {
        let r = sweep_point(Family::CSquared, 2.0).unwrap();
        assert_eq!(r.b, 4.0);
        assert!((r.t_plus - 1.19219).abs() < 1e-4);
        assert!((r.t_minus + 2.04584).abs() < 1e-4);
        assert!((r.h_lam - 3.97539).abs() < 1e-4);
        assert!(r.jump_ratio > 1.0);
    }

    #[test]
    fn sweep_reports_invalid_points() {
        let spec = FamilySpec {
            family: Family::CSquared,
            grid: vec![0.5, 1.0, 2.0],
        };
        let out = sweep(&spec);
        assert!(out[0].is_err() && out[1].is_err());
        assert!(out[2].is_ok());
    }

    #[test]
    fn closed_forms_match_general_ones() {
        for k in 1..=50 {
            let c = 1.0 + 199.0 * k as f64 / 50.0;
            let map = DiagonalMap::new(c, c * c).unwrap();
            let b0 = canonical_sign(&optimal_direction(&map).unwrap().b0);
            let b0c = optimal_direction_c(c).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((b0[(i, j)] - b0c[(i, j)]).abs() <= 1e-10, "{c} ({i},{j})");
                }
            }
            let w = window(&map).unwrap();
            let (tp, tm) = t_pm_c(c).unwrap();
            assert!((tp - w.t_plus).abs() <= 1e-9 * w.t_plus.abs(), "{c}: {tp} vs {}", w.t_plus);
            assert!((tm - w.t_minus).abs() <= 1e-9 * w.t_minus.abs(), "{c}: {tm} vs {}", w.t_minus);
        }
    }

    #[test]
    fn closed_form_anchor_at_c_2() {
        let m = optimal_direction_c(2.0).unwrap();
        assert!((m[(0, 0)] - 1.0 / 30.0).abs() < 1e-15);
        let (tp, tm) = t_pm_c(2.0).unwrap();
        assert!((tp - 1.19219).abs() < 1e-4 && (tm + 2.04584).abs() < 1e-4);
        let (tp, tm) = t_pm_c(1.0 + 1e-6).unwrap();
        assert!(tp.abs() < 1e-4 && tm.abs() < 1e-4);
        assert!(t_pm_c(1.0).is_err());
    }

    #[test]
    fn gi_bound_values() {
        assert!((gehring_iwaniec_bound(1.0, 3).unwrap() - 0.5 * 2f64.powf(2.0 / 3.0)).abs() < 1e-15);
        let v = gehring_iwaniec_bound(100.0, 3).unwrap();
        let approx = 0.5 * 100f64.powf(4.0 / 3.0);
        assert!((v - approx).abs() <= 0.01 * approx);
        assert!(gehring_iwaniec_bound(0.5, 3).is_err());
    }

    #[test]
    fn b0_level_reproduces_h_lam() {
        let map = DiagonalMap::new(2.0, 4.0).unwrap();
        let level = direction_level(&map, &optimal_direction(&map).unwrap().b0);
        assert!((level - window(&map).unwrap().h_lam()).abs() < 1e-6, "{level}");
    }

    #[test]
    fn probe_is_deterministic() {
        let map = DiagonalMap::new(2.0, 4.0).unwrap();
        let a = random_direction_sampling(&map, 1000, 1).unwrap();
        let b = random_direction_sampling(&map, 1000, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stationary, 1000);
        assert!(random_direction_sampling(&map, 10, 1).is_err());
    }
}
