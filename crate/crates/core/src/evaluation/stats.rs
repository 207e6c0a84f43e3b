//! Friedman ranks and the Nemenyi critical difference.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, ZskError};

/// Significance levels with tabulated Nemenyi quantiles.
pub const ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];

/// `q_α / √2` for k = 2..=10 (studentized range, infinite degrees of freedom).
const Q_001: [f64; 9] = [2.576, 2.913, 3.113, 3.255, 3.364, 3.452, 3.526, 3.590, 3.646];
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(ZskError::Unsupported(format!("Nemenyi table covers 2..=10 methods, got {k}")));
    }
    let row = if (alpha - 0.01).abs() < 1e-9 {
        &Q_001
    } else if (alpha - 0.05).abs() < 1e-9 {
        &Q_005
    } else if (alpha - 0.10).abs() < 1e-9 {
        &Q_010
    } else {
        return Err(ZskError::Unsupported(format!(
            "Nemenyi alpha must be 0.01, 0.05 or 0.10, got {alpha}"
        )));
    };
    Ok(row[k - 2])
}

/// `CD = q_α(k) · sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(ZskError::InvalidArgument("Nemenyi needs at least one dataset".into()));
    }
    let q = nemenyi_q(k, alpha)?;
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// Ranks of one row, 1 = lowest value, ties share the mean of their positions.
pub fn rank_row(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(ZskError::NonFinite("score matrix contains NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    Ok(ranks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    /// Dataset-major ranks.
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Friedman ranks of a dataset × method error matrix (lower error is better).
pub fn friedman_ranks(scores: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = scores.len();
    if n < 2 {
        return Err(ZskError::InvalidArgument(format!("Friedman ranks need at least 2 datasets, got {n}")));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(ZskError::InvalidArgument(format!("Friedman ranks need at least 2 methods, got {k}")));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != k) {
        return Err(ZskError::dims("score row", k, row.len()));
    }
    let ranks = scores.iter().map(|r| rank_row(r)).collect::<Result<Vec<_>>>()?;
    let average_ranks: Vec<f64> = (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let (nf, kf) = (n as f64, k as f64);
    let chi_square = 12.0 * nf / (kf * (kf + 1.0))
        * (average_ranks.iter().map(|r| r * r).sum::<f64>() - kf * (kf + 1.0).powi(2) / 4.0);
    let dist = ChiSquared::new(kf - 1.0).expect("k >= 2");
    let p_value = 1.0 - dist.cdf(chi_square.max(0.0));
    Ok(FriedmanResult {
        ranks,
        average_ranks,
        chi_square,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiResult {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub critical_difference: f64,
    /// `(i, j, |R_i − R_j| ≥ CD)` for every method pair `i < j`.
    pub pairwise: Vec<(usize, usize, bool)>,
}

pub fn nemenyi_test(average_ranks: &[f64], n: usize, alpha: f64) -> Result<NemenyiResult> {
    let k = average_ranks.len();
    let cd = nemenyi_cd(k, n, alpha)?;
    let mut pairwise = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            pairwise.push((i, j, (average_ranks[i] - average_ranks[j]).abs() >= cd));
        }
    }
    Ok(NemenyiResult {
        k,
        n,
        alpha,
        critical_difference: cd,
        pairwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_averaged() {
        assert_eq!(rank_row(&[0.5, 0.5, 2.0]).unwrap(), vec![1.5, 1.5, 3.0]);
        assert_eq!(rank_row(&[3.0, 1.0, 2.0, 1.0]).unwrap(), vec![4.0, 1.5, 3.0, 1.5]);
        assert!(rank_row(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn friedman_preconditions() {
        assert!(friedman_ranks(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_ranks(&[vec![1.0], vec![2.0]]).is_err());
        assert!(friedman_ranks(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn friedman_statistic_matches_hand_value() {
        // Method 0 always best, method 2 always worst over 4 datasets.
        let scores = vec![vec![1.0, 2.0, 3.0]; 4];
        let r = friedman_ranks(&scores).unwrap();
        assert_eq!(r.average_ranks, vec![1.0, 2.0, 3.0]);
        // 12·4/(3·4) · (1 + 4 + 9 − 12) = 8
        assert!((r.chi_square - 8.0).abs() < 1e-12);
        assert!((r.p_value - (-4.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn nemenyi_errors() {
        assert!(matches!(nemenyi_cd(11, 5, 0.05), Err(ZskError::Unsupported(_))));
        assert!(matches!(nemenyi_cd(1, 5, 0.05), Err(ZskError::Unsupported(_))));
        assert!(matches!(nemenyi_cd(3, 5, 0.2), Err(ZskError::Unsupported(_))));
        assert!(nemenyi_cd(3, 0, 0.05).is_err());
    }

    #[test]
    fn nemenyi_pairs() {
        let r = nemenyi_test(&[1.0, 2.0, 3.0], 12, 0.05).unwrap();
        assert_eq!(r.pairwise, vec![(0, 1, true), (0, 2, true), (1, 2, true)]);
        let r = nemenyi_test(&[1.0, 1.5, 3.0], 12, 0.05).unwrap();
        assert_eq!(r.pairwise[0], (0, 1, false));
    }
}
