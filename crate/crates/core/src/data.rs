//! Dataset containers, per-target bookkeeping and CSV ingestion.
//!
//! A [`ZeroShotDataset`] holds instance rows `(x, y)` tagged with an opaque
//! target id, plus a [`SideInfoTable`] mapping every target id to its side
//! information vector `s`. Row order is preserved exactly as read; folds and
//! slices depend on it.
//!
//! File formats:
//!
//! * instances: header `target,x1,...,x{a_x},y`, one row per instance;
//! * side information: header `target,s1,...,s{a_s}`, one row per target.
//!
//! Values are written with Rust's shortest round-trip representation, so a
//! save/load cycle reproduces every `f64` bit for bit.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Result, ZskError};

pub const INSTANCES_FILE: &str = "instances.csv";
pub const SIDEINFO_FILE: &str = "sideinfo.csv";

/// Side information vectors indexed by target id.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SideInfoTable {
    /// Builds a table, checking for unique ids, a common length `a_s >= 1` and finite values.
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(ZskError::Empty("side-information table".into()));
        };
        let dim = first.1.len();
        if dim == 0 {
            return Err(ZskError::Empty("side-information vector".into()));
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len() * dim);
        for (id, s) in entries {
            if s.len() != dim {
                return Err(ZskError::dims(format!("side info of target `{id}`"), dim, s.len()));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(ZskError::NonFinite(format!("side info of target `{id}`")));
            }
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(ZskError::DuplicateTarget(id));
            }
            ids.push(id);
            values.extend_from_slice(&s);
        }
        Ok(Self {
            ids,
            index,
            values,
            dim,
        })
    }

    /// Side information size `a_s`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    /// Side information of the `i`-th target in table order.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Row indices of one target's instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSlice {
    pub target_id: String,
    pub rows: Vec<usize>,
}

/// Instances of observed targets together with the targets' side information.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotDataset {
    features: Vec<f64>,
    n_rows: usize,
    a_x: usize,
    /// Per-row position into `side_info`.
    targets: Vec<usize>,
    labels: Vec<f64>,
    side_info: SideInfoTable,
}

impl ZeroShotDataset {
    /// Builds a dataset from row-major features (`n_rows * a_x` values).
    pub fn new(
        features: Vec<f64>,
        a_x: usize,
        target_ids: &[impl AsRef<str>],
        labels: Vec<f64>,
        side_info: SideInfoTable,
    ) -> Result<Self> {
        let n_rows = labels.len();
        if n_rows == 0 {
            return Err(ZskError::Empty("dataset has no rows".into()));
        }
        if a_x == 0 {
            return Err(ZskError::Empty("dataset has no features".into()));
        }
        if features.len() != n_rows * a_x {
            return Err(ZskError::dims("feature matrix size", n_rows * a_x, features.len()));
        }
        if target_ids.len() != n_rows {
            return Err(ZskError::dims("target column length", n_rows, target_ids.len()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(ZskError::NonFinite("instance features".into()));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(ZskError::NonFinite("labels".into()));
        }
        let targets = target_ids
            .iter()
            .map(|id| {
                let id = id.as_ref();
                side_info
                    .position(id)
                    .ok_or_else(|| ZskError::UnknownTarget(id.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            features,
            n_rows,
            a_x,
            targets,
            labels,
            side_info,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Instance feature count `a_x`.
    pub fn a_x(&self) -> usize {
        self.a_x
    }

    /// Side information size `a_s`.
    pub fn a_s(&self) -> usize {
        self.side_info.dim()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.a_x..(i + 1) * self.a_x]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn target_id(&self, i: usize) -> &str {
        &self.side_info.ids()[self.targets[i]]
    }

    /// Side information of the target that row `i` belongs to.
    pub fn row_side_info(&self, i: usize) -> &[f64] {
        self.side_info.row(self.targets[i])
    }

    pub fn side_info(&self) -> &SideInfoTable {
        &self.side_info
    }

    /// Number of distinct targets that actually have rows (`m_o`).
    pub fn target_count(&self) -> usize {
        self.slice_by_target().len()
    }

    /// Partitions rows by target, targets ordered by first appearance.
    pub fn slice_by_target(&self) -> Vec<TargetSlice> {
        let mut order: Vec<usize> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for (i, &t) in self.targets.iter().enumerate() {
            let k = *slot.entry(t).or_insert_with(|| {
                order.push(t);
                rows.push(Vec::new());
                rows.len() - 1
            });
            rows[k].push(i);
        }
        order
            .into_iter()
            .zip(rows)
            .map(|(t, rows)| TargetSlice {
                target_id: self.side_info.ids()[t].clone(),
                rows,
            })
            .collect()
    }

    /// New dataset holding the given rows in the given order; the side-information table is kept whole.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(ZskError::Empty("row subset".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * self.a_x);
        let mut targets = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_rows {
                return Err(ZskError::InvalidArgument(format!(
                    "row index {r} out of range ({} rows)",
                    self.n_rows
                )));
            }
            features.extend_from_slice(self.row(r));
            targets.push(self.targets[r]);
            labels.push(self.labels[r]);
        }
        Ok(Self {
            features,
            n_rows: rows.len(),
            a_x: self.a_x,
            targets,
            labels,
            side_info: self.side_info.clone(),
        })
    }
}

/// Instance rows read for prediction, where the label column is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTable {
    pub target_ids: Vec<String>,
    pub features: Vec<f64>,
    pub a_x: usize,
    pub labels: Option<Vec<f64>>,
}

impl InstanceTable {
    pub fn n_rows(&self) -> usize {
        self.target_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.a_x..(i + 1) * self.a_x]
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.exists() {
        return Err(ZskError::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| ZskError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> ZskError {
    ZskError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn schema_err(path: &Path, message: impl Into<String>) -> ZskError {
    ZskError::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Checks `names[1..1+count]` against `{prefix}1..{prefix}{count}`.
fn check_numbered(path: &Path, names: &[String], prefix: &str, count: usize) -> Result<()> {
    for (k, name) in names.iter().skip(1).take(count).enumerate() {
        let want = format!("{prefix}{}", k + 1);
        if name != &want {
            return Err(schema_err(path, format!("column {} is `{name}`, expected `{want}`", k + 2)));
        }
    }
    Ok(())
}

fn parse_cell(row: usize, column: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| ZskError::NonNumeric {
        row,
        column: column.to_string(),
        value: value.to_string(),
    })?;
    if !v.is_finite() {
        return Err(ZskError::NonFinite(format!("row {row}, column `{column}`")));
    }
    Ok(v)
}

/// Reads a side-information CSV (`target,s1,...,s{a_s}`).
pub fn load_side_info(path: &Path) -> Result<SideInfoTable> {
    let mut rdr = open_csv(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.len() < 2 || names[0] != "target" {
        return Err(schema_err(path, "header must be `target,s1,...`"));
    }
    let a_s = names.len() - 1;
    check_numbered(path, &names, "s", a_s)?;
    let mut entries = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != names.len() {
            return Err(schema_err(path, format!("row {} has {} cells, expected {}", r + 1, rec.len(), names.len())));
        }
        let s = (1..=a_s)
            .map(|c| parse_cell(r + 1, &names[c], &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        entries.push((rec[0].to_string(), s));
    }
    SideInfoTable::new(entries)
}

/// Reads an instance CSV. With `require_label` the last column must be `y`;
/// otherwise a trailing `y` column is optional.
pub fn load_instances(path: &Path, require_label: bool) -> Result<InstanceTable> {
    let mut rdr = open_csv(path)?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.first().map(String::as_str) != Some("target") {
        return Err(schema_err(path, "first column must be `target`"));
    }
    let has_label = names.last().map(String::as_str) == Some("y");
    if require_label && !has_label {
        return Err(schema_err(path, "last column must be `y`"));
    }
    let a_x = names.len() - 1 - usize::from(has_label);
    if a_x == 0 {
        return Err(schema_err(path, "no feature columns"));
    }
    check_numbered(path, &names, "x", a_x)?;
    let mut target_ids = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != names.len() {
            return Err(schema_err(path, format!("row {} has {} cells, expected {}", r + 1, rec.len(), names.len())));
        }
        target_ids.push(rec[0].to_string());
        for c in 1..=a_x {
            features.push(parse_cell(r + 1, &names[c], &rec[c])?);
        }
        if has_label {
            labels.push(parse_cell(r + 1, "y", &rec[a_x + 1])?);
        }
    }
    if target_ids.is_empty() {
        return Err(ZskError::Empty(format!("{} has no rows", path.display())));
    }
    Ok(InstanceTable {
        target_ids,
        features,
        a_x,
        labels: has_label.then_some(labels),
    })
}

/// Loads and validates a dataset from its instance and side-information CSVs.
pub fn load_dataset(instances_path: &Path, sideinfo_path: &Path) -> Result<ZeroShotDataset> {
    let side_info = load_side_info(sideinfo_path)?;
    let inst = load_instances(instances_path, true)?;
    let labels = inst.labels.unwrap_or_default();
    ZeroShotDataset::new(inst.features, inst.a_x, &inst.target_ids, labels, side_info)
}

/// Loads `instances.csv` and `sideinfo.csv` from a dataset directory.
pub fn load_dataset_dir(dir: &Path) -> Result<ZeroShotDataset> {
    load_dataset(&dir.join(INSTANCES_FILE), &dir.join(SIDEINFO_FILE))
}

fn write_csv(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ZskError::io(path, e))
}

/// Writes `instances.csv` and `sideinfo.csv` into `dir`, creating it if needed.
/// Returns the two file paths.
pub fn save_dataset(ds: &ZeroShotDataset, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| ZskError::io(dir, e))?;
    let inst_path = dir.join(INSTANCES_FILE);
    let side_path = dir.join(SIDEINFO_FILE);

    let mut header = vec!["target".to_string()];
    header.extend((1..=ds.a_x()).map(|i| format!("x{i}")));
    header.push("y".into());
    write_csv(
        &inst_path,
        header,
        (0..ds.n_rows()).map(|i| {
            let mut rec = Vec::with_capacity(ds.a_x() + 2);
            rec.push(ds.target_id(i).to_string());
            rec.extend(ds.row(i).iter().map(f64::to_string));
            rec.push(ds.label(i).to_string());
            rec
        }),
    )?;

    let table = ds.side_info();
    let mut header = vec!["target".to_string()];
    header.extend((1..=table.dim()).map(|i| format!("s{i}")));
    write_csv(
        &side_path,
        header,
        (0..table.len()).map(|t| {
            let mut rec = vec![table.ids()[t].clone()];
            rec.extend(table.row(t).iter().map(f64::to_string));
            rec
        }),
    )?;
    Ok((inst_path, side_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(ids: &[&str]) -> SideInfoTable {
        SideInfoTable::new(ids.iter().enumerate().map(|(i, id)| (id.to_string(), vec![i as f64])).collect()).unwrap()
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn minimal_files_load() {
        let dir = tempfile::tempdir().unwrap();
        let inst = write(dir.path(), "i.csv", "target,x1,y\nA,1.0,2.0\nB,3.0,4.0\n");
        let side = write(dir.path(), "s.csv", "target,s1\nA,0.5\nB,-0.5\n");
        let ds = load_dataset(&inst, &side).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.target_count(), 2);
        assert_eq!(ds.row_side_info(1), &[-0.5]);
        assert_eq!(ds.label(0), 2.0);
    }

    #[test]
    fn unknown_target_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let inst = write(dir.path(), "i.csv", "target,x1,y\nA,1,2\nC,3,4\n");
        let side = write(dir.path(), "s.csv", "target,s1\nA,0\nB,1\n");
        let err = load_dataset(&inst, &side).unwrap_err();
        assert!(matches!(err, ZskError::UnknownTarget(ref t) if t == "C"), "{err}");
        assert!(err.to_string().contains("unknown target id"));
    }

    #[test]
    fn schema_and_cell_errors() {
        let dir = tempfile::tempdir().unwrap();
        let side = write(dir.path(), "s.csv", "target,s1\nA,0\n");
        let bad_header = write(dir.path(), "h.csv", "target,x2,y\nA,1,2\n");
        assert!(matches!(load_dataset(&bad_header, &side), Err(ZskError::Schema { .. })));
        let no_label = write(dir.path(), "n.csv", "target,x1\nA,1\n");
        assert!(matches!(load_dataset(&no_label, &side), Err(ZskError::Schema { .. })));
        let text = write(dir.path(), "t.csv", "target,x1,y\nA,abc,2\n");
        assert!(matches!(load_dataset(&text, &side), Err(ZskError::NonNumeric { .. })));
        let nan = write(dir.path(), "nan.csv", "target,x1,y\nA,NaN,2\n");
        assert!(matches!(load_dataset(&nan, &side), Err(ZskError::NonFinite(_))));
        let missing = dir.path().join("nope.csv");
        assert!(matches!(load_dataset(&missing, &side), Err(ZskError::MissingFile(_))));
        let dup = write(dir.path(), "d.csv", "target,s1\nA,0\nA,1\n");
        assert!(matches!(load_side_info(&dup), Err(ZskError::DuplicateTarget(_))));
    }

    #[test]
    fn prediction_input_label_optional() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "target,x1,x2\nA,1,2\n");
        let t = load_instances(&p, false).unwrap();
        assert_eq!(t.a_x, 2);
        assert!(t.labels.is_none());
    }

    #[test]
    fn slices_follow_first_appearance() {
        let ds = ZeroShotDataset::new(vec![0.0, 1.0, 2.0], 1, &["B", "A", "B"], vec![0.0; 3], table(&["A", "B"])).unwrap();
        let slices = ds.slice_by_target();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0], TargetSlice { target_id: "B".into(), rows: vec![0, 2] });
        assert_eq!(slices[1], TargetSlice { target_id: "A".into(), rows: vec![1] });
    }

    #[test]
    fn example_slices() {
        let ds = ZeroShotDataset::new(vec![0.0, 1.0, 2.0], 1, &["A", "A", "B"], vec![0.0; 3], table(&["A", "B"])).unwrap();
        let slices = ds.slice_by_target();
        assert_eq!(slices[0].rows, vec![0, 1]);
        assert_eq!(slices[1].rows, vec![2]);

        let single = ZeroShotDataset::new(vec![0.0, 1.0], 1, &["A", "A"], vec![0.0; 2], table(&["A"])).unwrap();
        assert_eq!(single.slice_by_target()[0].rows, vec![0, 1]);
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let side = SideInfoTable::new(vec![("t0".into(), vec![0.1 + 0.2, -1.0 / 3.0]), ("t1".into(), vec![1e-300, 7.0])]).unwrap();
        let ds = ZeroShotDataset::new(
            vec![std::f64::consts::PI, -1.5, 2.0 / 3.0, 1e17],
            2,
            &["t1", "t0"],
            vec![0.7, -1.234_567_890_123_456_7],
            side,
        )
        .unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset_dir(dir.path()).unwrap(), ds);
    }
}
