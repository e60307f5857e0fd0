//! k-uniform posterior grids and the sampling-bound grid resolution.

use crate::error::{Error, Result};
use crate::model::Posterior;

/// Default cap on the number of grid points.
pub const DEFAULT_GRID_CAP: u128 = 5_000_000;

/// `C(m + k - 1, k)`, saturating at `u128::MAX`.
pub fn grid_size(m: usize, k: usize) -> u128 {
    if m == 0 {
        return 0;
    }
    let (n, r) = ((m - 1 + k) as u128, k.min(m - 1) as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All posteriors with coordinates in `{0, 1/k, ..., 1}`, ordered by their
/// count vectors in descending lexicographic order.
pub fn enumerate_grid(m: usize, k: usize) -> Result<Vec<Posterior>> {
    enumerate_grid_capped(m, k, DEFAULT_GRID_CAP)
}

pub fn enumerate_grid_capped(m: usize, k: usize, cap: u128) -> Result<Vec<Posterior>> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!(
            "grid needs m >= 1 and k >= 1, got m={m}, k={k}"
        )));
    }
    let size = grid_size(m, k);
    if size > cap {
        return Err(Error::SizeGuard {
            what: "posterior grid",
            size,
            cap,
        });
    }
    let mut out = Vec::with_capacity(size as usize);
    let mut counts = vec![0usize; m];
    fill(&mut counts, 0, k, k, &mut out);
    Ok(out)
}

fn fill(counts: &mut [usize], pos: usize, left: usize, k: usize, out: &mut Vec<Posterior>) {
    if pos + 1 == counts.len() {
        counts[pos] = left;
        let kf = k as f64;
        out.push(Posterior::from_vec_unchecked(
            counts.iter().map(|&c| c as f64 / kf).collect(),
        ));
        return;
    }
    for c in (0..=left).rev() {
        counts[pos] = c;
        fill(counts, pos + 1, left - c, k, out);
    }
}

/// `ceil((2 B^2 / eps_r^2) ln(2D))`, at least 1.
pub fn choose_k(b_rho: f64, d: usize, eps_r: f64) -> usize {
    let k = (2.0 * b_rho * b_rho / (eps_r * eps_r)) * (2.0 * d as f64).ln();
    if k.is_finite() {
        (k.ceil() as usize).max(1)
    } else {
        usize::MAX
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        let g = enumerate_grid(2, 2).unwrap();
        let v: Vec<Vec<f64>> = g.into_iter().map(Posterior::into_vec).collect();
        assert_eq!(v, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
        assert_eq!(enumerate_grid(3, 1).unwrap().len(), 3);
        assert_eq!(enumerate_grid(3, 2).unwrap().len(), 6);
        assert_eq!(enumerate_grid(1, 4).unwrap().len(), 1);
    }

    #[test]
    fn sizes() {
        assert_eq!(grid_size(3, 2), 6);
        assert_eq!(grid_size(4, 30), 5456);
        assert_eq!(grid_size(2, 1000), 1001);
        assert!(matches!(
            enumerate_grid(10, 100),
            Err(Error::SizeGuard { .. })
        ));
        assert!(enumerate_grid(0, 3).is_err());
        assert!(enumerate_grid(3, 0).is_err());
    }

    #[test]
    fn resolution_formula() {
        assert_eq!(choose_k(1.0, 2, 0.5), 12);
        assert_eq!(choose_k(1.0, 1, 0.1), (200.0 * 2f64.ln()).ceil() as usize);
        let base = choose_k(1.0, 5, 0.2);
        let doubled = choose_k(2.0, 5, 0.2);
        assert!(doubled >= 4 * base - 4 && doubled <= 4 * base);
    }
}
