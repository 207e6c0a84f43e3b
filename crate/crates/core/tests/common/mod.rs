#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zsk::data::{SideInfoTable, ZeroShotDataset};
use zsk::evaluation::assign_folds;
use zsk::kernels::{gram_matrix, DsilFormulation, Gram, KernelSpec, PointSet};
use zsk::methods::{Distance, FittedState, Method, ZeroShotRegressor};
use zsk::svr::{SvrConfig, SvrProblem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Targets `t0..`, `rows_per_target[t]` rows each, features and side
/// information uniform in [-2, 2], labels from `label(x, s)`.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    rows_per_target: &[usize],
    a_x: usize,
    a_s: usize,
    label: impl Fn(&[f64], &[f64]) -> f64,
) -> ZeroShotDataset {
    let side: Vec<Vec<f64>> = rows_per_target.iter().map(|_| uniform_vec(rng, a_s, -2.0, 2.0)).collect();
    let table = SideInfoTable::new(
        side.iter()
            .enumerate()
            .map(|(t, s)| (format!("t{t}"), s.clone()))
            .collect(),
    )
    .unwrap();
    let mut features = Vec::new();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (t, &n) in rows_per_target.iter().enumerate() {
        for _ in 0..n {
            let x = uniform_vec(rng, a_x, -2.0, 2.0);
            labels.push(label(&x, &side[t]));
            features.extend_from_slice(&x);
            ids.push(format!("t{t}"));
        }
    }
    ZeroShotDataset::new(features, a_x, &ids, labels, table).unwrap()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, a_x: usize, a_s: usize) -> PointSet {
    let mut p = PointSet::with_capacity(a_x, a_s, n);
    for _ in 0..n {
        let x = uniform_vec(rng, a_x, -2.0, 2.0);
        let s = uniform_vec(rng, a_s, -2.0, 2.0);
        p.push(&x, &s).unwrap();
    }
    p
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Product form of the DSIL kernel, independent of the library code.
pub fn dsil_oracle(x1: &[f64], s1: &[f64], x2: &[f64], s2: &[f64]) -> f64 {
    (1.0 + dot(x1, x2)) * (1.0 + dot(s1, s2))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Smallest eigenvalue and largest absolute eigenvalue of a Gram matrix.
pub fn eigen_extremes(g: &Gram) -> (f64, f64) {
    let n = g.n();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g.get(i, j));
    let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (min, max)
}

/// `Σ x_i (1 + s_1)`-style label that DSIL represents exactly.
pub fn bilinear_label(x: &[f64], s: &[f64]) -> f64 {
    let s_sum: f64 = s.iter().sum();
    x.iter().enumerate().map(|(i, xi)| xi * (1.0 + (i as f64 + 1.0) * s_sum)).sum::<f64>() + 0.5
}

fn report(what: &str, case: usize, detail: String) {
    eprintln!("{what} violation in case {case}: {detail}");
}

/// Gram matrices of random 30-point sets that are asymmetric or have an
/// eigenvalue below `-1e-10` times the spectral radius.
pub fn psd_violations(sets: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for case in 0..sets {
        let a_x = r.gen_range(1..=6);
        let a_s = r.gen_range(1..=6);
        let points = random_points(&mut r, 30, a_x, a_s);
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Quadratic { c: 1.0 },
            KernelSpec::dsil(DsilFormulation::KQ),
        ] {
            let g = gram_matrix(&points, spec).unwrap();
            let symmetric = (0..30).all(|i| (0..30).all(|j| g.get(i, j) == g.get(j, i)));
            let (min, max) = eigen_extremes(&g);
            if !symmetric || min < -1e-10 * max {
                report("PSD", case, format!("{spec:?}: symmetric={symmetric}, eigenvalue {min} (max {max})"));
                bad += 1;
            }
        }
    }
    bad
}

/// Random split configurations checked against the quadrant rule recomputed
/// from the fold assignment, plus fold balance and the target partition.
pub fn quadrant_violations(configs: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for case in 0..configs {
        let folds = r.gen_range(2..=5);
        let m = r.gen_range(folds..=folds + 8);
        let rows: Vec<usize> = (0..m).map(|_| r.gen_range(folds..=folds + 10)).collect();
        let ds = random_dataset(&mut r, &rows, 1, 1, |_, _| 0.0);
        let a = assign_folds(&ds, folds, r.gen()).unwrap();
        let mut ok = true;

        let mut unobserved_count = vec![0; m];
        for f in 0..folds {
            let sp = a.split(f);
            let unobserved: Vec<bool> = a.target_fold.iter().map(|&tf| tf == f).collect();
            for id in &sp.unobserved_targets {
                unobserved_count[a.target_ids.iter().position(|t| t == id).unwrap()] += 1;
            }
            let mut train = vec![false; ds.n_rows()];
            let mut test = vec![false; ds.n_rows()];
            sp.train_rows.iter().for_each(|&i| train[i] = true);
            sp.test_rows.iter().for_each(|&i| test[i] = true);
            for i in 0..ds.n_rows() {
                let t = a.row_target[i];
                let in_fold = a.row_fold[i] == f;
                ok &= a.target_ids[t] == ds.target_id(i);
                ok &= !(train[i] && test[i]);
                ok &= train[i] == (!unobserved[t] && !in_fold);
                ok &= test[i] == (unobserved[t] && in_fold);
            }
            ok &= !sp.train_rows.is_empty() && !sp.test_rows.is_empty();
        }
        ok &= unobserved_count.iter().all(|&c| c == 1);

        let spread = |counts: &[usize]| counts.iter().max().unwrap() - counts.iter().min().unwrap();
        let mut per_fold = vec![0; folds];
        a.target_fold.iter().for_each(|&tf| per_fold[tf] += 1);
        ok &= spread(&per_fold) <= 1;
        for t in 0..a.target_ids.len() {
            let mut counts = vec![0; folds];
            for i in 0..ds.n_rows() {
                if a.row_target[i] == t {
                    counts[a.row_fold[i]] += 1;
                }
            }
            ok &= spread(&counts) <= 1;
        }
        if !ok {
            report("quadrant", case, format!("folds={folds}, rows={rows:?}"));
            bad += 1;
        }
    }
    bad
}

/// SR predictions outside the range of the per-target model predictions.
pub fn sr_bound_violations(fits: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for case in 0..fits {
        let m = r.gen_range(2..=4);
        let rows: Vec<usize> = (0..m).map(|_| r.gen_range(3..=6)).collect();
        let a_x = r.gen_range(1..=3);
        let a_s = r.gen_range(1..=3);
        let ds = random_dataset(&mut r, &rows, a_x, a_s, bilinear_label);
        let distance = if r.gen() { Distance::Euclidean } else { Distance::Manhattan };
        let cfg = SvrConfig::default().with_c(r.gen_range(0.1..10.0));
        let model = ZeroShotRegressor::fit(&ds, Method::Sr(distance), &cfg).unwrap();
        let FittedState::Sr(state) = model.state() else {
            panic!("SR state expected");
        };
        let x = uniform_vec(&mut r, a_x, -2.0, 2.0);
        let s = uniform_vec(&mut r, a_s, -2.0, 2.0);
        let per_target: Vec<f64> = state.models.iter().map(|m| m.predict_rows(&x).unwrap()[0]).collect();
        let lo = per_target.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = per_target.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y = model.predict(&x, &s).unwrap();
        // Rounding of the weighted sum only.
        let slack = 16.0 * f64::EPSILON * lo.abs().max(hi.abs());
        if y < lo - slack || y > hi + slack {
            report("SR bound", case, format!("{y} outside [{lo}, {hi}]"));
            bad += 1;
        }
    }
    bad
}

/// Fits whose dual coefficients leave `[-C, C]` or break `Σ (α - α*) = 0`.
pub fn svr_box_violations(cases: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for case in 0..cases {
        let n = r.gen_range(2..=40);
        let a_x = r.gen_range(1..=4);
        let a_s = r.gen_range(1..=3);
        let points = random_points(&mut r, n, a_x, a_s);
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let spec = [
            KernelSpec::Linear,
            KernelSpec::Quadratic { c: 1.0 },
            KernelSpec::dsil(DsilFormulation::KQ),
        ][case % 3];
        let c = 10f64.powi(r.gen_range(-2..=3));
        let cfg = SvrConfig::default().with_c(c).with_epsilon(r.gen_range(0.0..0.5));
        let model = SvrProblem::new(&points, &y, spec).unwrap().solve(&cfg).unwrap();
        let coefs = model.dual_coeffs();
        let in_box = coefs.iter().all(|a| a.abs() <= c);
        let sum: f64 = coefs.iter().sum();
        let total: f64 = coefs.iter().map(|a| a.abs()).sum();
        let balanced = sum.abs() <= 1e-9 * total.max(1.0);
        if !in_box || !balanced {
            report("SVR box", case, format!("C={c}, in_box={in_box}, Σ coef={sum}"));
            bad += 1;
        }
    }
    bad
}

/// Methods whose repeated fit differs in any model field or prediction bit.
pub fn determinism_violations(seed: u64) -> usize {
    let mut r = rng(seed);
    let ds = random_dataset(&mut r, &[6, 5, 7, 6], 3, 2, bilinear_label);
    let mut bad = 0;
    for method in [
        Method::BlLinear,
        Method::BlQuadratic,
        Method::Sr(Distance::Euclidean),
        Method::Sr(Distance::Manhattan),
        Method::Mplc,
        Method::Dsil(DsilFormulation::Phi),
        Method::Dsil(DsilFormulation::KPhi),
        Method::Dsil(DsilFormulation::KQ),
    ] {
        let a = ZeroShotRegressor::fit(&ds, method, &SvrConfig::default()).unwrap();
        let b = ZeroShotRegressor::fit(&ds, method, &SvrConfig::default()).unwrap();
        let pa = a.predict_dataset(&ds).unwrap();
        let pb = b.predict_dataset(&ds).unwrap();
        if a != b || pa.iter().zip(&pb).any(|(u, v)| u.to_bits() != v.to_bits()) {
            report("determinism", 0, method.to_string());
            bad += 1;
        }
    }
    bad
}
