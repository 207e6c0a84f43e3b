//! Zero-shot benchmark: outer cross-validation, inner grid search over `C`,
//! relative-MSE scores, Friedman ranks and Nemenyi critical differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{mean, mse, relative_mse};
use super::split::make_splits;
use super::stats::{friedman_ranks, nemenyi_test, FriedmanResult, NemenyiResult, ALPHAS};
use crate::data::ZeroShotDataset;
use crate::datagen::derive_seed;
use crate::error::{Result, ZskError};
use crate::methods::{Method, ZeroShotRegressor};
use crate::svr::SvrConfig;

/// `{10^-3, ..., 10^3}`.
pub fn default_c_grid() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub folds: usize,
    pub seed: u64,
    /// `epsilon`, `tol` and `max_passes`; `c` is replaced by the grid search.
    pub svr: SvrConfig,
    pub c_grid: Vec<f64>,
    /// Worker threads for dataset × method cells; 0 means all available cores.
    pub max_parallel_cells: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            seed: 0,
            svr: SvrConfig::default(),
            c_grid: default_c_grid(),
            max_parallel_cells: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(ZskError::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.c_grid.is_empty() {
            return Err(ZskError::Config("C grid is empty".into()));
        }
        for &c in &self.c_grid {
            self.svr
                .with_c(c)
                .validate()
                .map_err(|e| ZskError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub c: f64,
    /// Inner-CV mean MSE for each distinct grid value, in ascending `C` order.
    pub mean_mse: Vec<f64>,
}

/// Chooses `C` from `grid` by zero-shot inner cross-validation on `ds_train`.
/// The grid is visited in ascending order and only a strictly lower error
/// replaces the incumbent, so ties go to the smaller `C`.
pub fn grid_search_c(
    ds_train: &ZeroShotDataset,
    method: Method,
    base: &SvrConfig,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.is_empty() {
        return Err(ZskError::InvalidArgument("C grid is empty".into()));
    }
    if sorted.len() == 1 {
        return Ok(GridSearchResult {
            c: sorted[0],
            mean_mse: vec![f64::NAN],
        });
    }
    let splits = make_splits(ds_train, folds, seed)?;
    let mut totals = vec![0.0; sorted.len()];
    for split in &splits {
        let train = ds_train.subset(&split.train_rows)?;
        let test = ds_train.subset(&split.test_rows)?;
        let (fits, _) = ZeroShotRegressor::fit_path(&train, method, base, &sorted)?;
        for (total, model) in totals.iter_mut().zip(&fits) {
            let pred = model.predict_dataset(&test)?;
            let e = mse(test.labels(), &pred)?;
            *total += if e.is_finite() { e } else { f64::INFINITY };
        }
    }
    let mean_mse: Vec<f64> = totals.iter().map(|t| t / splits.len() as f64).collect();
    let mut best = 0;
    for i in 1..sorted.len() {
        if mean_mse[i] < mean_mse[best] {
            best = i;
        }
    }
    Ok(GridSearchResult {
        c: sorted[best],
        mean_mse,
    })
}

#[derive(Debug, Clone)]
pub struct NamedDataset {
    pub name: String,
    pub data: ZeroShotDataset,
}

impl NamedDataset {
    pub fn new(name: impl Into<String>, data: ZeroShotDataset) -> Self {
        Self {
            name: name.into(),
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub method: Method,
    /// Mean relative MSE over the outer folds; `None` when the cell failed.
    pub rel_mse: Option<f64>,
    pub fold_scores: Vec<f64>,
    pub chosen_c: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    /// Datasets on which every method produced a score; only these are ranked.
    pub ranked_datasets: Vec<String>,
    pub friedman: FriedmanResult,
    pub nemenyi: Vec<NemenyiResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub datasets: Vec<String>,
    pub methods: Vec<Method>,
    /// Dataset-major, `datasets.len() * methods.len()` cells.
    pub cells: Vec<CellResult>,
    pub stats: Option<StatsSummary>,
    /// Why `stats` is absent.
    pub stats_note: Option<String>,
}

impl BenchmarkReport {
    pub fn cell(&self, dataset: usize, method: usize) -> &CellResult {
        &self.cells[dataset * self.methods.len() + method]
    }

    /// Rank of a cell within its dataset row, if that row was ranked.
    pub fn rank(&self, dataset: usize, method: usize) -> Option<f64> {
        let st = self.stats.as_ref()?;
        let name = &self.datasets[dataset];
        let row = st.ranked_datasets.iter().position(|d| d == name)?;
        Some(st.friedman.ranks[row][method])
    }

    /// Average rank of `method` over the ranked datasets.
    pub fn average_rank(&self, method: Method) -> Option<f64> {
        let j = self.methods.iter().position(|m| *m == method)?;
        Some(self.stats.as_ref()?.friedman.average_ranks[j])
    }

    pub fn score(&self, dataset: &str, method: Method) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.method == method)?
            .rel_mse
    }
}

fn run_cell(nd: &NamedDataset, ds_index: usize, method: Method, cfg: &BenchmarkConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let outer_seed = derive_seed(cfg.seed, ds_index as u64);
    let splits = make_splits(&nd.data, cfg.folds, outer_seed)?;
    let mut scores = Vec::with_capacity(splits.len());
    let mut cs = Vec::with_capacity(splits.len());
    for (f, split) in splits.iter().enumerate() {
        let train = nd.data.subset(&split.train_rows)?;
        let test = nd.data.subset(&split.test_rows)?;
        let gs = grid_search_c(
            &train,
            method,
            &cfg.svr,
            &cfg.c_grid,
            cfg.folds,
            derive_seed(outer_seed, f as u64 + 1),
        )?;
        let model = ZeroShotRegressor::fit(&train, method, &cfg.svr.with_c(gs.c))?;
        let pred = model.predict_dataset(&test)?;
        scores.push(relative_mse(test.labels(), &pred, mean(train.labels()))?);
        cs.push(gs.c);
    }
    Ok((scores, cs))
}

fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(e) => {
            log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
            job()
        }
    }
}

/// Runs every dataset × method cell. A failing cell is recorded with its
/// error and excluded from ranking; the run continues.
pub fn run_benchmark(datasets: &[NamedDataset], methods: &[Method], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if datasets.is_empty() || methods.is_empty() {
        return Err(ZskError::Config("benchmark needs at least one dataset and one method".into()));
    }
    let jobs: Vec<(usize, Method)> = (0..datasets.len())
        .flat_map(|d| methods.iter().map(move |&m| (d, m)))
        .collect();
    let cells = with_pool(cfg.max_parallel_cells, || {
        jobs.par_iter()
            .map(|&(d, m)| {
                let nd = &datasets[d];
                log::info!("cell {} / {m}", nd.name);
                match run_cell(nd, d, m, cfg) {
                    Ok((scores, cs)) => CellResult {
                        dataset: nd.name.clone(),
                        method: m,
                        rel_mse: Some(mean(&scores)),
                        fold_scores: scores,
                        chosen_c: cs,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("cell {} / {m} failed: {e}", nd.name);
                        CellResult {
                            dataset: nd.name.clone(),
                            method: m,
                            rel_mse: None,
                            fold_scores: Vec::new(),
                            chosen_c: Vec::new(),
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(assemble(datasets.iter().map(|d| d.name.clone()).collect(), methods.to_vec(), cells))
}

/// Diagnostic mode: every method is fitted on the whole dataset with
/// `cfg.svr` as given and scored on the same rows.
pub fn run_in_sample(datasets: &[NamedDataset], methods: &[Method], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.svr.validate()?;
    let mut cells = Vec::new();
    for nd in datasets {
        for &m in methods {
            let res = ZeroShotRegressor::fit(&nd.data, m, &cfg.svr).and_then(|model| {
                let pred = model.predict_dataset(&nd.data)?;
                relative_mse(nd.data.labels(), &pred, mean(nd.data.labels()))
            });
            cells.push(CellResult {
                dataset: nd.name.clone(),
                method: m,
                rel_mse: res.as_ref().ok().copied(),
                fold_scores: res.as_ref().ok().into_iter().copied().collect(),
                chosen_c: vec![cfg.svr.c],
                error: res.err().map(|e| e.to_string()),
            });
        }
    }
    Ok(assemble(datasets.iter().map(|d| d.name.clone()).collect(), methods.to_vec(), cells))
}

/// Ranks and critical differences over the datasets with a complete score row.
pub fn summarize(datasets: &[String], methods: &[Method], cells: &[CellResult]) -> (Option<StatsSummary>, Option<String>) {
    let k = methods.len();
    let mut ranked = Vec::new();
    let mut rows = Vec::new();
    for (d, name) in datasets.iter().enumerate() {
        let row: Option<Vec<f64>> = cells[d * k..(d + 1) * k].iter().map(|c| c.rel_mse).collect();
        if let Some(row) = row {
            ranked.push(name.clone());
            rows.push(row);
        }
    }
    if k < 2 {
        return (None, Some("statistics require >=2 methods".into()));
    }
    if rows.is_empty() {
        return (None, Some("no dataset has a complete score row".into()));
    }
    let friedman = if rows.len() == 1 {
        // A single dataset still gets ranks; the test statistic is undefined.
        match super::stats::rank_row(&rows[0]) {
            Ok(r) => FriedmanResult {
                average_ranks: r.clone(),
                ranks: vec![r],
                chi_square: f64::NAN,
                p_value: f64::NAN,
            },
            Err(e) => return (None, Some(e.to_string())),
        }
    } else {
        match friedman_ranks(&rows) {
            Ok(f) => f,
            Err(e) => return (None, Some(e.to_string())),
        }
    };
    let nemenyi = ALPHAS
        .iter()
        .filter_map(|&a| nemenyi_test(&friedman.average_ranks, rows.len(), a).ok())
        .collect();
    let note = (rows.len() < 2).then(|| "Friedman test requires >=2 ranked datasets".to_string());
    (
        Some(StatsSummary {
            ranked_datasets: ranked,
            friedman,
            nemenyi,
        }),
        note,
    )
}

fn assemble(datasets: Vec<String>, methods: Vec<Method>, cells: Vec<CellResult>) -> BenchmarkReport {
    let (stats, stats_note) = summarize(&datasets, &methods, &cells);
    BenchmarkReport {
        datasets,
        methods,
        cells,
        stats,
        stats_note,
    }
}
