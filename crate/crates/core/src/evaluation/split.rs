//! Zero-shot cross-validation folds.
//!
//! Targets and, independently, each target's instances are dealt into
//! `folds` groups. Fold `f` trains on the observed targets (target group
//! `!= f`) restricted to their instances outside group `f`, and tests on the
//! unobserved targets (group `f`) restricted to their instances in group `f`.
//! The two remaining quadrants are never used.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ZeroShotDataset;
use crate::error::{Result, ZskError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroShotSplit {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub observed_targets: Vec<String>,
    pub unobserved_targets: Vec<String>,
}

/// Group of every target (in first-appearance order) and of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub folds: usize,
    pub target_ids: Vec<String>,
    pub target_fold: Vec<usize>,
    pub row_fold: Vec<usize>,
    /// Index into `target_ids` of every row.
    pub row_target: Vec<usize>,
}

pub fn assign_folds(ds: &ZeroShotDataset, folds: usize, seed: u64) -> Result<FoldAssignment> {
    if folds < 2 {
        return Err(ZskError::InvalidArgument(format!("folds must be >= 2, got {folds}")));
    }
    let slices = ds.slice_by_target();
    if slices.len() < folds {
        return Err(ZskError::Split(format!(
            "{} targets cannot fill {folds} target folds",
            slices.len()
        )));
    }
    if let Some(s) = slices.iter().find(|s| s.rows.len() < folds) {
        return Err(ZskError::Split(format!(
            "target `{}` has {} instances, fewer than {folds} folds",
            s.target_id,
            s.rows.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..slices.len()).collect();
    order.shuffle(&mut rng);
    let mut target_fold = vec![0; slices.len()];
    for (pos, &t) in order.iter().enumerate() {
        target_fold[t] = pos % folds;
    }
    let mut row_fold = vec![0; ds.n_rows()];
    let mut row_target = vec![0; ds.n_rows()];
    for (t, slice) in slices.iter().enumerate() {
        let mut rows = slice.rows.clone();
        rows.shuffle(&mut rng);
        for (pos, &r) in rows.iter().enumerate() {
            row_fold[r] = pos % folds;
            row_target[r] = t;
        }
    }
    Ok(FoldAssignment {
        folds,
        target_ids: slices.into_iter().map(|s| s.target_id).collect(),
        target_fold,
        row_fold,
        row_target,
    })
}

impl FoldAssignment {
    pub fn split(&self, f: usize) -> ZeroShotSplit {
        let mut out = ZeroShotSplit {
            train_rows: Vec::new(),
            test_rows: Vec::new(),
            observed_targets: Vec::new(),
            unobserved_targets: Vec::new(),
        };
        for (t, id) in self.target_ids.iter().enumerate() {
            if self.target_fold[t] == f {
                out.unobserved_targets.push(id.clone());
            } else {
                out.observed_targets.push(id.clone());
            }
        }
        for (r, (&t, &rf)) in self.row_target.iter().zip(&self.row_fold).enumerate() {
            let unobserved = self.target_fold[t] == f;
            match (unobserved, rf == f) {
                (false, false) => out.train_rows.push(r),
                (true, true) => out.test_rows.push(r),
                _ => {}
            }
        }
        out
    }
}

pub fn make_splits(ds: &ZeroShotDataset, folds: usize, seed: u64) -> Result<Vec<ZeroShotSplit>> {
    let a = assign_folds(ds, folds, seed)?;
    Ok((0..folds).map(|f| a.split(f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SideInfoTable;

    fn grid(m: usize, n: usize) -> ZeroShotDataset {
        let table = SideInfoTable::new((0..m).map(|t| (format!("t{t}"), vec![t as f64])).collect()).unwrap();
        let ids: Vec<String> = (0..m * n).map(|r| format!("t{}", r / n)).collect();
        ZeroShotDataset::new((0..m * n).map(|r| r as f64).collect(), 1, &ids, vec![0.0; m * n], table).unwrap()
    }

    #[test]
    fn three_by_three() {
        let ds = grid(3, 3);
        let splits = make_splits(&ds, 3, 1).unwrap();
        let mut unobserved = Vec::new();
        for s in &splits {
            assert_eq!(s.train_rows.len(), 4);
            assert_eq!(s.test_rows.len(), 1);
            assert_eq!(s.observed_targets.len(), 2);
            unobserved.extend(s.unobserved_targets.clone());
            assert!(s.train_rows.iter().all(|r| !s.test_rows.contains(r)));
        }
        unobserved.sort();
        assert_eq!(unobserved, vec!["t0", "t1", "t2"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(make_splits(&grid(2, 5), 3, 0), Err(ZskError::Split(_))));
        assert!(matches!(make_splits(&grid(5, 2), 3, 0), Err(ZskError::Split(_))));
        assert!(matches!(make_splits(&grid(5, 5), 1, 0), Err(ZskError::InvalidArgument(_))));
    }

    #[test]
    fn deterministic() {
        let ds = grid(7, 6);
        assert_eq!(make_splits(&ds, 3, 4).unwrap(), make_splits(&ds, 3, 4).unwrap());
    }
}
