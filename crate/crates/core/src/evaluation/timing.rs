//! Wall-clock scaling study of the kernel formulations.
//!
//! Each measurement fits on the whole grid dataset and predicts its rows.
//! Runs are strictly serial, inside a single-thread pool, so that timings are
//! not disturbed by concurrent work.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::TimingCell;
use crate::error::Result;
use crate::kernels::DsilFormulation;
use crate::methods::{Method, ZeroShotRegressor};
use crate::svr::SvrConfig;

pub const TIMING_METHODS: [Method; 4] = [
    Method::BlQuadratic,
    Method::Dsil(DsilFormulation::Phi),
    Method::Dsil(DsilFormulation::KPhi),
    Method::Dsil(DsilFormulation::KQ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingOptions {
    pub repeats: usize,
    /// Run once before measuring and discard the result.
    pub warmup: bool,
    pub svr: SvrConfig,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            repeats: 3,
            warmup: true,
            svr: SvrConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: Method,
    pub a_x: usize,
    pub a_s: usize,
    pub n_o: usize,
    pub m_o: usize,
    /// Fit plus predict.
    pub seconds: Vec<f64>,
    /// Gram-matrix construction only, the kernel-evaluation share of `seconds`.
    pub kernel_seconds: Vec<f64>,
}

impl TimingRow {
    pub fn ax_plus_as(&self) -> usize {
        self.a_x + self.a_s
    }

    pub fn no_times_mo(&self) -> usize {
        self.n_o * self.m_o
    }

    pub fn seconds_median(&self) -> f64 {
        median(&self.seconds)
    }

    pub fn kernel_seconds_median(&self) -> f64 {
        median(&self.kernel_seconds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub repeats: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn row(&self, method: Method, ax_plus_as: usize, no_times_mo: usize) -> Option<&TimingRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.ax_plus_as() == ax_plus_as && r.no_times_mo() == no_times_mo)
    }
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn measure(cell: &TimingCell, method: Method, svr: &SvrConfig) -> Result<(f64, f64)> {
    let start = Instant::now();
    let (model, kernel_time) = ZeroShotRegressor::fit_timed(&cell.dataset, method, svr)?;
    let pred = model.predict_dataset(&cell.dataset)?;
    let total = start.elapsed();
    std::hint::black_box(pred);
    Ok((total.as_secs_f64(), kernel_time.as_secs_f64()))
}

/// Times every (cell, method) pair, cells in order, methods inner.
pub fn run_timing(cells: &[TimingCell], methods: &[Method], opts: &TimingOptions) -> Result<TimingReport> {
    opts.svr.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::error::ZskError::Unsupported(format!("cannot build timing pool: {e}")))?;
    pool.install(|| {
        let mut rows = Vec::with_capacity(cells.len() * methods.len());
        for cell in cells {
            for &method in methods {
                log::info!(
                    "timing {method} at a_x+a_s={} n_o*m_o={}",
                    cell.joint_features(),
                    cell.instances()
                );
                if opts.warmup {
                    measure(cell, method, &opts.svr)?;
                }
                let mut seconds = Vec::with_capacity(opts.repeats);
                let mut kernel_seconds = Vec::with_capacity(opts.repeats);
                for _ in 0..opts.repeats {
                    let (t, k) = measure(cell, method, &opts.svr)?;
                    seconds.push(t);
                    kernel_seconds.push(k);
                }
                rows.push(TimingRow {
                    method,
                    a_x: cell.spec.a_x,
                    a_s: cell.spec.a_s,
                    n_o: cell.spec.n_o,
                    m_o: cell.spec.m_o,
                    seconds,
                    kernel_seconds,
                });
            }
        }
        Ok(TimingReport {
            repeats: opts.repeats,
            rows,
        })
    })
}
