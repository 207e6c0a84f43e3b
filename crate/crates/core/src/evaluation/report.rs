//! Report files: `scores.csv`, `stats.json`, `report.md`, `timing.csv` and
//! the plot-ready timing curves.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::benchmark::{summarize, BenchmarkReport, CellResult, StatsSummary};
use super::stats::rank_row;
use super::timing::TimingReport;
use crate::error::{Result, ZskError};
use crate::kernels::DsilFormulation;
use crate::methods::{Distance, Method};

pub const SCORES_FILE: &str = "scores.csv";
pub const STATS_FILE: &str = "stats.json";
pub const REPORT_FILE: &str = "report.md";
pub const TIMING_FILE: &str = "timing.csv";
pub const TIMING_DETAIL_FILE: &str = "timing_detail.csv";

pub const SCORE_DEFINITION: &str =
    "rel_mse = 100 * sum((y - y_hat)^2) / sum((y - mean(y_train))^2), averaged over outer zero-shot folds; \
     the reference predictor is the training-label mean";

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| ZskError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e: csv::Error| ZskError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| ZskError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| ZskError::io(dir, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `scores.csv`: one row per cell, `rel_mse` and `rank` empty for failed cells.
pub fn write_scores_csv(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let header: Vec<String> = ["dataset", "method", "rel_mse", "rank"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for d in 0..report.datasets.len() {
        for m in 0..report.methods.len() {
            let cell = report.cell(d, m);
            rows.push(vec![
                cell.dataset.clone(),
                cell.method.to_string(),
                fmt_opt(cell.rel_mse),
                fmt_opt(report.rank(d, m)),
            ]);
        }
    }
    write_rows(path, &header, &rows)
}

/// Reads a `scores.csv` back into dataset names, methods and cells.
pub fn read_scores_csv(path: &Path) -> Result<(Vec<String>, Vec<Method>, Vec<CellResult>)> {
    if !path.exists() {
        return Err(ZskError::MissingFile(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| ZskError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let headers = rdr
        .headers()
        .map_err(|e| ZskError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 3 || &headers[0] != "dataset" || &headers[1] != "method" || &headers[2] != "rel_mse" {
        return Err(ZskError::Schema {
            path: path.to_path_buf(),
            message: "expected header `dataset,method,rel_mse[,rank]`".into(),
        });
    }
    let mut datasets: Vec<String> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    let mut entries = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| ZskError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dataset = rec[0].to_string();
        let method: Method = rec[1].parse().map_err(|_| ZskError::Schema {
            path: path.to_path_buf(),
            message: format!("unknown method `{}` on row {}", &rec[1], i + 1),
        })?;
        let score = match rec[2].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| ZskError::NonNumeric {
                row: i + 1,
                column: "rel_mse".into(),
                value: s.into(),
            })?),
        };
        if !datasets.contains(&dataset) {
            datasets.push(dataset.clone());
        }
        if !methods.contains(&method) {
            methods.push(method);
        }
        entries.push((dataset, method, score));
    }
    if entries.is_empty() {
        return Err(ZskError::Empty(format!("{} has no score rows", path.display())));
    }
    let mut cells = Vec::with_capacity(datasets.len() * methods.len());
    for d in &datasets {
        for &m in &methods {
            let score = entries
                .iter()
                .find(|(ed, em, _)| ed == d && *em == m)
                .and_then(|(_, _, s)| *s);
            cells.push(CellResult {
                dataset: d.clone(),
                method: m,
                rel_mse: score,
                fold_scores: Vec::new(),
                chosen_c: Vec::new(),
                error: score.is_none().then(|| "missing score".to_string()),
            });
        }
    }
    Ok((datasets, methods, cells))
}

#[derive(Serialize)]
struct PairFlag {
    a: String,
    b: String,
    significant: bool,
}

#[derive(Serialize)]
struct NemenyiJson {
    alpha: f64,
    critical_difference: f64,
    pairwise: Vec<PairFlag>,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    score_definition: &'a str,
    methods: Vec<String>,
    ranked_datasets: Vec<String>,
    average_ranks: Vec<(String, f64)>,
    friedman_chi_square: Option<f64>,
    friedman_p_value: Option<f64>,
    nemenyi: Vec<NemenyiJson>,
    note: Option<String>,
}

pub fn stats_json(methods: &[Method], stats: Option<&StatsSummary>, note: Option<&str>) -> Result<String> {
    let names: Vec<String> = methods.iter().map(Method::to_string).collect();
    let finite = |v: f64| v.is_finite().then_some(v);
    let json = StatsJson {
        score_definition: SCORE_DEFINITION,
        methods: names.clone(),
        ranked_datasets: stats.map(|s| s.ranked_datasets.clone()).unwrap_or_default(),
        average_ranks: stats
            .map(|s| names.iter().cloned().zip(s.friedman.average_ranks.iter().copied()).collect())
            .unwrap_or_default(),
        friedman_chi_square: stats.and_then(|s| finite(s.friedman.chi_square)),
        friedman_p_value: stats.and_then(|s| finite(s.friedman.p_value)),
        nemenyi: stats
            .map(|s| {
                s.nemenyi
                    .iter()
                    .map(|n| NemenyiJson {
                        alpha: n.alpha,
                        critical_difference: n.critical_difference,
                        pairwise: n
                            .pairwise
                            .iter()
                            .map(|&(i, j, sig)| PairFlag {
                                a: names[i].clone(),
                                b: names[j].clone(),
                                significant: sig,
                            })
                            .collect(),
                    })
                    .collect()
            })
            .unwrap_or_default(),
        note: note.map(String::from),
    };
    Ok(serde_json::to_string_pretty(&json)? + "\n")
}

/// Recomputes ranks and critical differences from a `scores.csv`.
pub fn stats_from_scores(path: &Path) -> Result<(Vec<Method>, Option<StatsSummary>, Option<String>)> {
    let (datasets, methods, cells) = read_scores_csv(path)?;
    let (stats, note) = summarize(&datasets, &methods, &cells);
    Ok((methods, stats, note))
}

fn family_of(name: &str) -> &'static str {
    if name.starts_with("R^") {
        "R"
    } else if name.starts_with("S^") {
        "S"
    } else {
        "other"
    }
}

fn fmt_score(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.2E}")
    } else {
        format!("{v:.2}")
    }
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        let s = format!("{r:.2}");
        s.trim_end_matches('0').to_string()
    }
}

/// One rank table over `methods`: a block per dataset family with its own
/// average ranks, plus the mean over all blocks.
fn rank_table(out: &mut String, title: &str, report: &BenchmarkReport, methods: &[Method]) {
    let idx: Vec<usize> = methods
        .iter()
        .map(|m| report.methods.iter().position(|x| x == m).expect("subset"))
        .collect();
    let _ = writeln!(out, "## {title}\n");
    let mut families: Vec<&str> = Vec::new();
    for d in &report.datasets {
        let f = family_of(d);
        if !families.contains(&f) {
            families.push(f);
        }
    }
    let header = format!(
        "| Dataset | {} |\n|---|{}",
        methods.iter().map(Method::to_string).collect::<Vec<_>>().join(" | "),
        "---:|".repeat(methods.len())
    );
    let mut all_ranks: Vec<Vec<f64>> = Vec::new();
    for fam in &families {
        let _ = writeln!(out, "{header}");
        let mut block_ranks: Vec<Vec<f64>> = Vec::new();
        for (d, name) in report.datasets.iter().enumerate() {
            if family_of(name) != *fam {
                continue;
            }
            let scores: Option<Vec<f64>> = idx.iter().map(|&m| report.cell(d, m).rel_mse).collect();
            let ranks = scores.as_ref().and_then(|s| rank_row(s).ok());
            let cells: Vec<String> = idx
                .iter()
                .enumerate()
                .map(|(j, &m)| match (report.cell(d, m).rel_mse, &ranks) {
                    (Some(v), Some(r)) => {
                        let body = format!("{}({})", fmt_score(v), fmt_rank(r[j]));
                        if r[j] == r.iter().copied().fold(f64::INFINITY, f64::min) {
                            format!("**{body}**")
                        } else {
                            body
                        }
                    }
                    (Some(v), None) => fmt_score(v),
                    (None, _) => "invalid".into(),
                })
                .collect();
            let _ = writeln!(out, "| {name} | {} |", cells.join(" | "));
            if let Some(r) = ranks {
                block_ranks.push(r);
            }
        }
        if !block_ranks.is_empty() {
            let avg = average(&block_ranks, methods.len());
            let _ = writeln!(
                out,
                "| Avg. Rank | {} |",
                avg.iter().map(|a| format!("({a:.2})")).collect::<Vec<_>>().join(" | ")
            );
        }
        let _ = writeln!(out);
        all_ranks.extend(block_ranks);
    }
    if families.len() > 1 && !all_ranks.is_empty() {
        let avg = average(&all_ranks, methods.len());
        let _ = writeln!(
            out,
            "Mean rank over all {} ranked datasets: {}\n",
            all_ranks.len(),
            methods
                .iter()
                .zip(&avg)
                .map(|(m, a)| format!("{m} ({a:.2})"))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
}

fn average(ranks: &[Vec<f64>], k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / ranks.len() as f64)
        .collect()
}

pub fn report_markdown(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Zero-shot regression benchmark\n");
    let _ = writeln!(
        out,
        "Scores are relative MSE in percent (lower is better), Friedman rank in parentheses.\n\n\
         Score definition: {SCORE_DEFINITION}.\n"
    );

    let dsil = Method::Dsil(DsilFormulation::KQ);
    let one_stage = [Method::BlLinear, Method::BlQuadratic, dsil];
    let two_stage = [
        Method::Sr(Distance::Euclidean),
        Method::Sr(Distance::Manhattan),
        Method::Mplc,
        dsil,
    ];
    let has = |set: &[Method]| set.iter().all(|m| report.methods.contains(m));
    let mut tables = 0;
    if has(&one_stage) && report.methods.len() > one_stage.len() {
        rank_table(&mut out, "Baselines and DSIL", report, &one_stage);
        tables += 1;
    }
    if has(&two_stage) && report.methods.len() > two_stage.len() {
        rank_table(&mut out, "Two-stage methods and DSIL", report, &two_stage);
        tables += 1;
    }
    let title = if tables > 0 { "All methods" } else { "Scores" };
    rank_table(&mut out, title, report, &report.methods.clone());

    let _ = writeln!(out, "## Statistics\n");
    match &report.stats {
        Some(st) => {
            let _ = writeln!(
                out,
                "Ranked datasets: {} of {}.",
                st.ranked_datasets.len(),
                report.datasets.len()
            );
            if st.friedman.chi_square.is_finite() {
                let _ = writeln!(
                    out,
                    "Friedman chi-square = {:.4}, p = {:.4e}.",
                    st.friedman.chi_square, st.friedman.p_value
                );
            }
            let _ = writeln!(out, "\n| alpha | critical difference |\n|---:|---:|");
            for n in &st.nemenyi {
                let _ = writeln!(out, "| {:.2} | {:.3} |", n.alpha, n.critical_difference);
            }
            if let Some(n05) = st.nemenyi.iter().find(|n| (n.alpha - 0.05).abs() < 1e-9) {
                let sig: Vec<String> = n05
                    .pairwise
                    .iter()
                    .filter(|p| p.2)
                    .map(|&(i, j, _)| format!("{} vs {}", report.methods[i], report.methods[j]))
                    .collect();
                let _ = writeln!(
                    out,
                    "\nSignificant at alpha = 0.05: {}.",
                    if sig.is_empty() { "none".into() } else { sig.join(", ") }
                );
            }
            if let Some(note) = &report.stats_note {
                let _ = writeln!(out, "\nNote: {note}.");
            }
        }
        None => {
            let _ = writeln!(
                out,
                "{}.",
                report.stats_note.as_deref().unwrap_or("no statistics available")
            );
        }
    }
    let failed: Vec<&CellResult> = report.cells.iter().filter(|c| c.error.is_some()).collect();
    if !failed.is_empty() {
        let _ = writeln!(out, "\n## Invalid cells\n");
        for c in failed {
            let _ = writeln!(out, "- {} / {}: {}", c.dataset, c.method, c.error.as_deref().unwrap_or(""));
        }
    }
    out
}

/// Writes `scores.csv`, `stats.json` and `report.md` into `dir`.
pub fn write_benchmark_report(report: &BenchmarkReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let scores = dir.join(SCORES_FILE);
    write_scores_csv(report, &scores)?;
    let stats = dir.join(STATS_FILE);
    let text = stats_json(&report.methods, report.stats.as_ref(), report.stats_note.as_deref())?;
    fs::write(&stats, text).map_err(|e| ZskError::io(&stats, e))?;
    let md = dir.join(REPORT_FILE);
    fs::write(&md, report_markdown(report)).map_err(|e| ZskError::io(&md, e))?;
    Ok(vec![scores, stats, md])
}

/// Writes `timing.csv`, `timing_detail.csv` and one curve file per fixed
/// feature count and per fixed instance count.
pub fn write_timing_report(report: &TimingReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();

    let main = dir.join(TIMING_FILE);
    let header: Vec<String> = ["method", "ax_plus_as", "no_times_mo", "seconds_median"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.method.to_string(),
                r.ax_plus_as().to_string(),
                r.no_times_mo().to_string(),
                r.seconds_median().to_string(),
            ]
        })
        .collect();
    write_rows(&main, &header, &rows)?;
    written.push(main);

    let detail = dir.join(TIMING_DETAIL_FILE);
    let header: Vec<String> = [
        "method",
        "a_x",
        "a_s",
        "n_o",
        "m_o",
        "repeat",
        "seconds",
        "kernel_seconds",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for r in &report.rows {
        for (i, (s, k)) in r.seconds.iter().zip(&r.kernel_seconds).enumerate() {
            rows.push(vec![
                r.method.to_string(),
                r.a_x.to_string(),
                r.a_s.to_string(),
                r.n_o.to_string(),
                r.m_o.to_string(),
                (i + 1).to_string(),
                s.to_string(),
                k.to_string(),
            ]);
        }
    }
    write_rows(&detail, &header, &rows)?;
    written.push(detail);

    let mut methods: Vec<Method> = Vec::new();
    for r in &report.rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let features: BTreeSet<usize> = report.rows.iter().map(|r| r.ax_plus_as()).collect();
    let instances: BTreeSet<usize> = report.rows.iter().map(|r| r.no_times_mo()).collect();
    let curve = |fixed_name: &str, x_name: &str, fixed: usize, xs: &BTreeSet<usize>, by_features: bool| {
        let mut header = vec![x_name.to_string()];
        header.extend(methods.iter().map(Method::to_string));
        let rows: Vec<Vec<String>> = xs
            .iter()
            .map(|&x| {
                let mut row = vec![x.to_string()];
                for &m in &methods {
                    let cell = if by_features {
                        report.row(m, fixed, x)
                    } else {
                        report.row(m, x, fixed)
                    };
                    row.push(cell.map(|c| c.seconds_median().to_string()).unwrap_or_default());
                }
                row
            })
            .collect();
        (format!("{fixed_name}{fixed}.csv"), header, rows)
    };
    for &f in &features {
        let (name, header, rows) = curve("time_vs_instances_f", "no_times_mo", f, &instances, true);
        let path = dir.join(name);
        write_rows(&path, &header, &rows)?;
        written.push(path);
    }
    for &n in &instances {
        let (name, header, rows) = curve("time_vs_features_n", "ax_plus_as", n, &features, false);
        let path = dir.join(name);
        write_rows(&path, &header, &rows)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::benchmark::{summarize, BenchmarkReport};

    fn fake(datasets: &[&str], methods: &[Method], scores: &[Option<f64>]) -> BenchmarkReport {
        let mut cells = Vec::new();
        for (d, name) in datasets.iter().enumerate() {
            for (m, &method) in methods.iter().enumerate() {
                let s = scores[d * methods.len() + m];
                cells.push(CellResult {
                    dataset: name.to_string(),
                    method,
                    rel_mse: s,
                    fold_scores: vec![],
                    chosen_c: vec![],
                    error: s.is_none().then(|| "boom".into()),
                });
            }
        }
        let ds: Vec<String> = datasets.iter().map(|s| s.to_string()).collect();
        let (stats, stats_note) = summarize(&ds, methods, &cells);
        BenchmarkReport {
            datasets: ds,
            methods: methods.to_vec(),
            cells,
            stats,
            stats_note,
        }
    }

    #[test]
    fn scores_csv_round_trip_and_stats() {
        let methods = [Method::BlLinear, Method::Dsil(DsilFormulation::KQ)];
        let r = fake(
            &["R^{5,5}", "S^{5,5}", "R^{10,5}"],
            &methods,
            &[Some(100.0), Some(1.0), Some(2.0), Some(3.0), None, Some(0.5)],
        );
        let dir = tempfile::tempdir().unwrap();
        write_benchmark_report(&r, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(SCORES_FILE)).unwrap();
        assert!(text.starts_with("dataset,method,rel_mse,rank\n"));
        assert!(text.contains("\"R^{10,5}\",BL_L,,\n"));
        let (m, stats, _) = stats_from_scores(&dir.path().join(SCORES_FILE)).unwrap();
        assert_eq!(m, methods);
        let st = stats.unwrap();
        assert_eq!(st.ranked_datasets, vec!["R^{5,5}", "S^{5,5}"]);
        assert_eq!(st.friedman.average_ranks, vec![1.5, 1.5]);
        let md = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(md.contains("| Avg. Rank |"));
        assert!(md.contains("invalid"));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(STATS_FILE)).unwrap()).unwrap();
        assert_eq!(json["nemenyi"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn single_method_note() {
        let r = fake(&["a", "b"], &[Method::Mplc], &[Some(1.0), Some(2.0)]);
        let md = report_markdown(&r);
        assert!(md.contains("statistics require >=2 methods"));
    }

    #[test]
    fn six_methods_give_two_family_tables() {
        let methods = Method::COMPARED;
        let scores: Vec<Option<f64>> = (0..24).map(|i| Some((i * 7 % 11) as f64)).collect();
        let r = fake(&["R^{5,5}", "R^{10,5}", "S^{5,5}", "S^{10,5}"], &methods, &scores);
        let md = report_markdown(&r);
        assert!(md.contains("## Baselines and DSIL"));
        assert!(md.contains("## Two-stage methods and DSIL"));
        assert_eq!(md.matches("| Avg. Rank |").count(), 6);
    }

    #[test]
    fn rank_formatting() {
        assert_eq!(fmt_rank(1.0), "1");
        assert_eq!(fmt_rank(1.5), "1.5");
        assert_eq!(fmt_rank(2.25), "2.25");
        assert_eq!(fmt_score(8.61e-15), "8.61E-15");
        assert_eq!(fmt_score(112.031), "112.03");
    }
}
