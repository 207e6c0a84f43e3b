//! Zero-shot regressors: baseline (BL), similarity relationship (SR), model
//! parameter learning correspondence (MPLC) and direct side information
//! learning (DSIL).
//!
//! Every method is fitted on the instances of observed targets plus their side
//! information and predicts `y` for an instance `x_u` of a target described by
//! `s_u`, which need not have been seen during training.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ZeroShotDataset;
use crate::error::{Result, ZskError};
use crate::kernels::{DsilFormulation, KernelSpec, PointSet};
use crate::svr::{SvrConfig, SvrModel, SvrProblem};

/// Distances below this are treated as an exact side-information match.
pub const EXACT_MATCH_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distance {
    Euclidean,
    Manhattan,
}

impl Distance {
    pub fn between(&self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(u, v)| u - v);
        match self {
            Distance::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Distance::Manhattan => diffs.map(f64::abs).sum(),
        }
    }
}

/// Method and variant selector. Serialized as its display name (`"DSIL_KQ"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Side information concatenated to the features, linear kernel.
    BlLinear,
    /// Side information concatenated to the features, `(<u,v> + 1)^2` kernel.
    BlQuadratic,
    Sr(Distance),
    Mplc,
    Dsil(DsilFormulation),
}

impl Method {
    /// The six methods compared in the benchmark tables.
    pub const COMPARED: [Method; 6] = [
        Method::BlLinear,
        Method::BlQuadratic,
        Method::Sr(Distance::Euclidean),
        Method::Sr(Distance::Manhattan),
        Method::Mplc,
        Method::Dsil(DsilFormulation::KQ),
    ];

    /// Kernel of the single joint SVR, for the one-stage methods.
    pub fn joint_kernel(&self) -> Option<KernelSpec> {
        match *self {
            Method::BlLinear => Some(KernelSpec::Linear),
            Method::BlQuadratic => Some(KernelSpec::Quadratic { c: 1.0 }),
            Method::Dsil(f) => Some(KernelSpec::dsil(f)),
            Method::Sr(_) | Method::Mplc => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::BlLinear => "BL_L",
            Method::BlQuadratic => "BL_Q",
            Method::Sr(Distance::Euclidean) => "SR_E",
            Method::Sr(Distance::Manhattan) => "SR_M",
            Method::Mplc => "MPLC",
            Method::Dsil(DsilFormulation::Phi) => "DSIL_Phi",
            Method::Dsil(DsilFormulation::KPhi) => "DSIL_KPhi",
            Method::Dsil(DsilFormulation::KQ) => "DSIL_KQ",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = ZskError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "BL_L" => Method::BlLinear,
            "BL_Q" => Method::BlQuadratic,
            "SR_E" => Method::Sr(Distance::Euclidean),
            "SR_M" => Method::Sr(Distance::Manhattan),
            "MPLC" => Method::Mplc,
            "DSIL" | "DSIL_KQ" => Method::Dsil(DsilFormulation::KQ),
            "DSIL_PHI" => Method::Dsil(DsilFormulation::Phi),
            "DSIL_KPHI" => Method::Dsil(DsilFormulation::KPhi),
            other => {
                return Err(ZskError::InvalidArgument(format!(
                    "unknown method `{other}` (expected BL_L, BL_Q, SR_E, SR_M, MPLC, DSIL, DSIL_Phi, DSIL_KPhi, DSIL_KQ)"
                )))
            }
        })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inverse-distance similarity between an observed and an unobserved target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    Weight(f64),
    /// The distance is below [`EXACT_MATCH_DISTANCE`].
    ExactMatch,
}

pub fn sr_similarity(s_o: &[f64], s_u: &[f64], distance: Distance) -> Similarity {
    let d = distance.between(s_o, s_u);
    if d < EXACT_MATCH_DISTANCE {
        Similarity::ExactMatch
    } else {
        Similarity::Weight(1.0 / d)
    }
}

/// Normalized SR weights over the observed targets for side information `s_u`.
///
/// If any observed target matches exactly, those targets share the weight equally.
pub fn sr_weights(observed: &[Vec<f64>], s_u: &[f64], distance: Distance) -> Vec<f64> {
    let sims: Vec<Similarity> = observed.iter().map(|s| sr_similarity(s, s_u, distance)).collect();
    let exact = sims.iter().filter(|s| **s == Similarity::ExactMatch).count();
    if exact > 0 {
        return sims
            .iter()
            .map(|s| if *s == Similarity::ExactMatch { 1.0 / exact as f64 } else { 0.0 })
            .collect();
    }
    let raw: Vec<f64> = sims
        .iter()
        .map(|s| match s {
            Similarity::Weight(w) => *w,
            Similarity::ExactMatch => unreachable!(),
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// One linear model per observed target plus that target's side information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrState {
    pub distance: Distance,
    pub models: Vec<SvrModel>,
    pub side_info: Vec<Vec<f64>>,
}

/// Second-stage models mapping side information to each first-stage
/// parameter: `w_1..w_{a_x}` then the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MplcState {
    pub param_models: Vec<SvrModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedState {
    Joint(SvrModel),
    Sr(SrState),
    Mplc(MplcState),
}

/// A fitted zero-shot regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotRegressor {
    method: Method,
    a_x: usize,
    a_s: usize,
    state: FittedState,
}

/// Joint points `(x_j, s(target_j))` for every row.
pub fn joint_points(ds: &ZeroShotDataset) -> PointSet {
    let mut p = PointSet::with_capacity(ds.a_x(), ds.a_s(), ds.n_rows());
    for i in 0..ds.n_rows() {
        p.push(ds.row(i), ds.row_side_info(i)).expect("dataset rows are homogeneous");
    }
    p
}

impl ZeroShotRegressor {
    pub fn fit(ds: &ZeroShotDataset, method: Method, cfg: &SvrConfig) -> Result<Self> {
        Ok(Self::fit_timed(ds, method, cfg)?.0)
    }

    /// Fits and also reports the time spent building Gram matrices, summed over every SVR fitted.
    pub fn fit_timed(ds: &ZeroShotDataset, method: Method, cfg: &SvrConfig) -> Result<(Self, Duration)> {
        let (mut fits, t) = Self::fit_path(ds, method, cfg, &[cfg.c])?;
        Ok((fits.pop().expect("one C value"), t))
    }

    /// One regressor per value of `cs`, all other settings from `cfg`.
    /// Kernel matrices are computed once and shared by the whole path.
    pub fn fit_path(ds: &ZeroShotDataset, method: Method, cfg: &SvrConfig, cs: &[f64]) -> Result<(Vec<Self>, Duration)> {
        cfg.validate()?;
        for &c in cs {
            cfg.with_c(c).validate()?;
        }
        let wrap = |state| Self {
            method,
            a_x: ds.a_x(),
            a_s: ds.a_s(),
            state,
        };
        match method {
            Method::BlLinear | Method::BlQuadratic | Method::Dsil(_) => {
                let kernel = method.joint_kernel().expect("one-stage method");
                let points = joint_points(ds);
                let problem = SvrProblem::new(&points, ds.labels(), kernel)?;
                let fits = cs
                    .iter()
                    .map(|&c| Ok(wrap(FittedState::Joint(problem.solve(&cfg.with_c(c))?))))
                    .collect::<Result<Vec<_>>>()?;
                Ok((fits, problem.kernel_time()))
            }
            Method::Sr(distance) => {
                let first = FirstStage::new(ds)?;
                let problems = first.problems()?;
                let mut fits = Vec::with_capacity(cs.len());
                for &c in cs {
                    let models = solve_all(&problems, &cfg.with_c(c))?;
                    fits.push(wrap(FittedState::Sr(SrState {
                        distance,
                        models,
                        side_info: first.side_info.clone(),
                    })));
                }
                Ok((fits, total_kernel_time(&problems)))
            }
            Method::Mplc => {
                let first = FirstStage::new(ds)?;
                let problems = first.problems()?;
                let mut kernel_time = total_kernel_time(&problems);
                let mut s_points = PointSet::with_capacity(ds.a_s(), 0, first.side_info.len());
                for s in &first.side_info {
                    s_points.push(s, &[])?;
                }
                let mut fits = Vec::with_capacity(cs.len());
                for &c in cs {
                    let c_cfg = cfg.with_c(c);
                    let thetas = solve_all(&problems, &c_cfg)?
                        .iter()
                        .map(SvrModel::linear_weights)
                        .collect::<Result<Vec<_>>>()?;
                    let p = ds.a_x() + 1;
                    let second = (0..p)
                        .into_par_iter()
                        .map(|j| {
                            let target: Vec<f64> = thetas
                                .iter()
                                .map(|th| if j < th.w.len() { th.w[j] } else { th.b })
                                .collect();
                            let problem = SvrProblem::new(&s_points, &target, KernelSpec::Linear)?;
                            Ok((problem.solve(&c_cfg)?, problem.kernel_time()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let mut param_models = Vec::with_capacity(p);
                    for (m, dt) in second {
                        kernel_time += dt;
                        param_models.push(m);
                    }
                    fits.push(wrap(FittedState::Mplc(MplcState { param_models })));
                }
                Ok((fits, kernel_time))
            }
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn a_x(&self) -> usize {
        self.a_x
    }

    pub fn a_s(&self) -> usize {
        self.a_s
    }

    pub fn state(&self) -> &FittedState {
        &self.state
    }

    /// Prediction for one instance `x_u` of a target with side information `s_u`.
    pub fn predict(&self, x_u: &[f64], s_u: &[f64]) -> Result<f64> {
        let mut p = PointSet::new(self.a_x, self.a_s);
        self.push_checked(&mut p, x_u, s_u)?;
        Ok(self.predict_points(&p)?[0])
    }

    fn push_checked(&self, p: &mut PointSet, x: &[f64], s: &[f64]) -> Result<()> {
        if x.len() != self.a_x {
            return Err(ZskError::dims("instance features a_x", self.a_x, x.len()));
        }
        if s.len() != self.a_s {
            return Err(ZskError::dims("side information a_s", self.a_s, s.len()));
        }
        p.push(x, s)
    }

    /// Predictions for every row of `ds`, each paired with its own target's side information.
    pub fn predict_dataset(&self, ds: &ZeroShotDataset) -> Result<Vec<f64>> {
        if ds.a_x() != self.a_x {
            return Err(ZskError::dims("instance features a_x", self.a_x, ds.a_x()));
        }
        if ds.a_s() != self.a_s {
            return Err(ZskError::dims("side information a_s", self.a_s, ds.a_s()));
        }
        self.predict_points(&joint_points(ds))
    }

    /// Predictions for a set of joint points.
    pub fn predict_points(&self, points: &PointSet) -> Result<Vec<f64>> {
        if points.a_x() != self.a_x {
            return Err(ZskError::dims("instance features a_x", self.a_x, points.a_x()));
        }
        if points.a_s() != self.a_s {
            return Err(ZskError::dims("side information a_s", self.a_s, points.a_s()));
        }
        match &self.state {
            FittedState::Joint(m) => m.predict(points),
            FittedState::Sr(sr) => {
                let xs = x_only(points);
                let per_model = sr
                    .models
                    .iter()
                    .map(|m| m.predict(&xs))
                    .collect::<Result<Vec<_>>>()?;
                Ok(points
                    .iter()
                    .enumerate()
                    .map(|(r, p)| {
                        let w = sr_weights(&sr.side_info, p.s, sr.distance);
                        w.iter().zip(&per_model).map(|(wi, f)| wi * f[r]).sum()
                    })
                    .collect())
            }
            FittedState::Mplc(st) => {
                let mut s_points = PointSet::with_capacity(self.a_s, 0, points.len());
                for p in points.iter() {
                    s_points.push(p.s, &[])?;
                }
                let params = st
                    .param_models
                    .iter()
                    .map(|m| m.predict(&s_points))
                    .collect::<Result<Vec<_>>>()?;
                Ok(points
                    .iter()
                    .enumerate()
                    .map(|(r, p)| {
                        let slope: f64 = p.x.iter().enumerate().map(|(i, xi)| params[i][r] * xi).sum();
                        slope + params[self.a_x][r]
                    })
                    .collect())
            }
        }
    }

    /// For MPLC: the predicted first-stage parameters `(w_1..w_{a_x}, b)` at side information `s_u`.
    pub fn mplc_parameters(&self, s_u: &[f64]) -> Result<Vec<f64>> {
        let FittedState::Mplc(st) = &self.state else {
            return Err(ZskError::InvalidArgument(format!("{} has no MPLC parameters", self.method)));
        };
        if s_u.len() != self.a_s {
            return Err(ZskError::dims("side information a_s", self.a_s, s_u.len()));
        }
        let s = PointSet::from_rows(s_u, self.a_s)?;
        st.param_models
            .iter()
            .map(|m| Ok(m.predict(&s)?[0]))
            .collect()
    }
}

fn x_only(points: &PointSet) -> PointSet {
    let mut xs = PointSet::with_capacity(points.a_x(), 0, points.len());
    for p in points.iter() {
        xs.push(p.x, &[]).expect("same a_x");
    }
    xs
}

/// First stage of SR and MPLC: one linear SVR per observed target on `x` only.
struct FirstStage {
    points: Vec<PointSet>,
    labels: Vec<Vec<f64>>,
    side_info: Vec<Vec<f64>>,
}

impl FirstStage {
    fn new(ds: &ZeroShotDataset) -> Result<Self> {
        let slices = ds.slice_by_target();
        if slices.len() < 2 {
            return Err(ZskError::Degenerate(format!(
                "per-target methods need at least 2 observed targets, got {}",
                slices.len()
            )));
        }
        if let Some(s) = slices.iter().find(|s| s.rows.len() < 2) {
            return Err(ZskError::Degenerate(format!(
                "target `{}` has {} instance(s); at least 2 are required",
                s.target_id,
                s.rows.len()
            )));
        }
        let mut points = Vec::with_capacity(slices.len());
        let mut labels = Vec::with_capacity(slices.len());
        for slice in &slices {
            let mut xs = PointSet::with_capacity(ds.a_x(), 0, slice.rows.len());
            for &r in &slice.rows {
                xs.push(ds.row(r), &[])?;
            }
            points.push(xs);
            labels.push(slice.rows.iter().map(|&r| ds.label(r)).collect());
        }
        let side_info = slices
            .iter()
            .map(|s| ds.side_info().get(&s.target_id).expect("validated").to_vec())
            .collect();
        Ok(Self {
            points,
            labels,
            side_info,
        })
    }

    fn problems(&self) -> Result<Vec<SvrProblem<'_>>> {
        self.points
            .par_iter()
            .zip(&self.labels)
            .map(|(xs, y)| SvrProblem::new(xs, y, KernelSpec::Linear))
            .collect()
    }
}

fn solve_all(problems: &[SvrProblem<'_>], cfg: &SvrConfig) -> Result<Vec<SvrModel>> {
    problems.par_iter().map(|p| p.solve(cfg)).collect()
}

fn total_kernel_time(problems: &[SvrProblem<'_>]) -> Duration {
    problems.iter().map(SvrProblem::kernel_time).sum()
}
