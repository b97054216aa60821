//! Fixed points of coupled 2x2 response maps.
//!
//! Every concept here has the form `p = F_row(q)`, `q = F_col(p)` with both
//! maps continuous from [0, 1] into [0, 1]. Substituting gives a scalar
//! `g(p) = F_row(F_col(p)) - p` with `g(0) >= 0 >= g(1)`, so sign changes on a
//! grid bracket every transversal fixed point.

use crate::error::{Error, Result};

const GRID: usize = 1000;
const MAX_BISECTIONS: usize = 200;
/// Fixed points closer than this are reported once.
const DISTINCT: f64 = 1e-8;
/// Largest accepted residual at a returned profile.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub p: f64,
    pub q: f64,
    pub residual: f64,
}

pub fn residual(row_map: &impl Fn(f64) -> f64, col_map: &impl Fn(f64) -> f64, p: f64, q: f64) -> f64 {
    (p - row_map(q)).abs().max((q - col_map(p)).abs())
}

/// Bisects `f` on `[lo, hi]` given `f(lo)` and `f(hi)` of opposite sign.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> (f64, f64) {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, mid);
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// All distinct fixed points found on the scan, ordered by `p`.
pub fn solve(row_map: impl Fn(f64) -> f64, col_map: impl Fn(f64) -> f64) -> Result<Vec<FixedPoint>> {
    let g = |p: f64| row_map(col_map(p)) - p;
    let grid: Vec<f64> = (0..=GRID).map(|i| i as f64 / GRID as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&p| g(p)).collect();

    let mut brackets = Vec::new();
    for i in 0..=GRID {
        if vals[i] == 0.0 {
            brackets.push((grid[i], grid[i]));
        } else if i < GRID && vals[i + 1] != 0.0 && (vals[i] > 0.0) != (vals[i + 1] > 0.0) {
            brackets.push(bisect(g, grid[i], grid[i + 1], vals[i]));
        }
    }

    let mut out: Vec<FixedPoint> = Vec::new();
    let mut worst = 0.0f64;
    for (lo, hi) in brackets {
        let p = lo;
        // refine q inside the image of the p-bracket so both equations hold
        let (qa, qb) = (col_map(lo), col_map(hi));
        let h = |q: f64| row_map(q) - p;
        let q = if qa != qb && (h(qa) > 0.0) != (h(qb) > 0.0) {
            let (ql, qh) = if qa < qb { (qa, qb) } else { (qb, qa) };
            let (a, b) = bisect(h, ql, qh, h(ql));
            if h(a).abs() <= h(b).abs() {
                a
            } else {
                b
            }
        } else {
            col_map(p)
        };
        let r = residual(&row_map, &col_map, p, q);
        if r > RESIDUAL_TOL {
            worst = worst.max(r);
            continue;
        }
        if out.last().is_some_and(|l| (l.p - p).abs() < DISTINCT) {
            continue;
        }
        out.push(FixedPoint { p, q, residual: r });
    }
    if out.is_empty() {
        return Err(Error::NonConvergence { residual: worst });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_maps() {
        let fp = solve(|_| 0.3, |_| 0.8).unwrap();
        assert_eq!(fp.len(), 1);
        assert!((fp[0].p - 0.3).abs() < 1e-12 && (fp[0].q - 0.8).abs() < 1e-12);
    }

    #[test]
    fn coordination_has_three_points() {
        // steep coordination maps: fixed points near 0, at 0.5, and near 1
        let s = |x: f64| 1.0 / (1.0 + (-20.0 * (x - 0.5)).exp());
        let fp = solve(s, s).unwrap();
        assert_eq!(fp.len(), 3);
        assert!((fp[1].p - 0.5).abs() < 1e-9);
        for f in &fp {
            assert!(f.residual < 1e-12);
        }
    }

    #[test]
    fn very_steep_maps_keep_small_residual() {
        let s = |x: f64| 1.0 / (1.0 + (2e4 * (x - 0.37)).exp());
        let t = |x: f64| 1.0 / (1.0 + (-2e4 * (x - 0.61)).exp());
        let fp = solve(s, t).unwrap();
        assert_eq!(fp.len(), 1);
        assert!((fp[0].p - 0.61).abs() < 1e-3 && (fp[0].q - 0.37).abs() < 1e-3);
        assert!(fp[0].residual < RESIDUAL_TOL);
    }
}
