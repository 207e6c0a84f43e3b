//! Synthetic dataset generators.
//!
//! Both families produce `y = Σ α_i(s) x_i + β`:
//!
//! * **R**: `α_i(s) = Σ_j γ_{i,j} s_j + β_i`, a linear dependence on side information.
//! * **S**: `α_i(s) = Σ_k τ_{i,k} δ(s, μ^k) / Σ_k δ(s, μ^k)` with `δ = 1/d` and
//!   `d` either the L1 or the L2 distance, chosen once per dataset.
//!
//! Every coefficient, side-information value and feature is drawn from the
//! signed uniform distribution on `(-2, -1] ∪ [1, 2)`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{save_dataset, SideInfoTable, ZeroShotDataset};
use crate::error::{Result, ZskError};
use crate::methods::{Distance, EXACT_MATCH_DISTANCE};

pub const META_FILE: &str = "meta.json";

/// Uniform on `(-2, -1] ∪ [1, 2)`, each half with probability 1/2.
pub fn sample_signed_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let magnitude = 1.0 + rng.gen::<f64>();
    if rng.gen::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    R,
    S,
}

impl std::str::FromStr for Family {
    type Err = ZskError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(Family::R),
            "S" | "s" => Ok(Family::S),
            other => Err(ZskError::InvalidArgument(format!("unknown family `{other}` (expected R or S)"))),
        }
    }
}

fn default_n_o() -> usize {
    500
}

fn default_a_x() -> usize {
    50
}

fn default_prototypes() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub family: Family,
    pub m_o: usize,
    pub a_s: usize,
    #[serde(default = "default_n_o")]
    pub n_o: usize,
    #[serde(default = "default_a_x")]
    pub a_x: usize,
    pub seed: u64,
    /// Prototype count for the S family; ignored for R.
    #[serde(default = "default_prototypes")]
    pub d_prototypes: usize,
}

impl SynthSpec {
    pub fn new(family: Family, m_o: usize, a_s: usize, seed: u64) -> Self {
        Self {
            family,
            m_o,
            a_s,
            n_o: default_n_o(),
            a_x: default_a_x(),
            seed,
            d_prototypes: default_prototypes(),
        }
    }

    pub fn with_n_o(mut self, n_o: usize) -> Self {
        self.n_o = n_o;
        self
    }

    pub fn with_a_x(mut self, a_x: usize) -> Self {
        self.a_x = a_x;
        self
    }

    pub fn with_prototypes(mut self, d: usize) -> Self {
        self.d_prototypes = d;
        self
    }

    /// `R^{m_o,a_s}` / `S^{m_o,a_s}`.
    pub fn name(&self) -> String {
        format!("{:?}^{{{},{}}}", self.family, self.m_o, self.a_s)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("m_o", self.m_o),
            ("a_s", self.a_s),
            ("n_o", self.n_o),
            ("a_x", self.a_x),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ZskError::InvalidArgument(format!("synthetic spec needs {name} >= 1")));
        }
        if self.family == Family::S && self.d_prototypes == 0 {
            return Err(ZskError::InvalidArgument(
                "S family needs d_prototypes >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// The generating coefficients of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SynthCoefficients {
    R {
        beta: f64,
        /// `β_i`, length `a_x`.
        beta_i: Vec<f64>,
        /// `γ_{i,j}`, `a_x` rows of length `a_s`.
        gamma: Vec<Vec<f64>>,
    },
    S {
        beta: f64,
        /// `τ_{i,k}`, `a_x` rows of length `d`.
        tau: Vec<Vec<f64>>,
        /// `μ^k`, `d` rows of length `a_s`.
        prototypes: Vec<Vec<f64>>,
        distance: Distance,
    },
}

impl SynthCoefficients {
    /// `α_i(s)` for every feature `i`.
    pub fn alpha(&self, s: &[f64]) -> Vec<f64> {
        match self {
            SynthCoefficients::R { beta_i, gamma, .. } => beta_i
                .iter()
                .zip(gamma)
                .map(|(b, g)| g.iter().zip(s).map(|(gij, sj)| gij * sj).sum::<f64>() + b)
                .collect(),
            SynthCoefficients::S {
                tau,
                prototypes,
                distance,
                ..
            } => {
                let dists: Vec<f64> = prototypes.iter().map(|mu| distance.between(s, mu)).collect();
                if let Some(k) = dists.iter().position(|d| *d < EXACT_MATCH_DISTANCE) {
                    return tau.iter().map(|row| row[k]).collect();
                }
                let delta: Vec<f64> = dists.iter().map(|d| 1.0 / d).collect();
                let total: f64 = delta.iter().sum();
                tau.iter()
                    .map(|row| row.iter().zip(&delta).map(|(t, w)| t * w).sum::<f64>() / total)
                    .collect()
            }
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            SynthCoefficients::R { beta, .. } | SynthCoefficients::S { beta, .. } => *beta,
        }
    }

    /// The family formula evaluated at `(x, s)`.
    pub fn label(&self, x: &[f64], s: &[f64]) -> f64 {
        let alpha = self.alpha(s);
        alpha.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + self.beta()
    }
}

fn draw_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| sample_signed_uniform(rng)).collect()
}

fn draw_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| draw_vec(rng, cols)).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<ZeroShotDataset> {
    Ok(generate_with(spec, |_| {})?.0)
}

/// Like [`generate`] but also returns the generating coefficients.
pub fn generate_with_truth(spec: &SynthSpec) -> Result<(ZeroShotDataset, SynthCoefficients)> {
    generate_with(spec, |_| {})
}

/// Generation with a hook that may overwrite the drawn coefficients before any
/// label is computed. The random stream is unaffected by the hook.
pub fn generate_with(
    spec: &SynthSpec,
    hook: impl FnOnce(&mut SynthCoefficients),
) -> Result<(ZeroShotDataset, SynthCoefficients)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (a_x, a_s) = (spec.a_x, spec.a_s);

    let mut coefs = match spec.family {
        Family::R => {
            let beta = sample_signed_uniform(&mut rng);
            let beta_i = draw_vec(&mut rng, a_x);
            let gamma = draw_matrix(&mut rng, a_x, a_s);
            SynthCoefficients::R { beta, beta_i, gamma }
        }
        Family::S => {
            let distance = if rng.gen::<bool>() {
                Distance::Manhattan
            } else {
                Distance::Euclidean
            };
            let beta = sample_signed_uniform(&mut rng);
            let prototypes = draw_matrix(&mut rng, spec.d_prototypes, a_s);
            let tau = draw_matrix(&mut rng, a_x, spec.d_prototypes);
            SynthCoefficients::S {
                beta,
                tau,
                prototypes,
                distance,
            }
        }
    };
    hook(&mut coefs);

    let ids: Vec<String> = (0..spec.m_o).map(|t| format!("t{t}")).collect();
    let side: Vec<Vec<f64>> = (0..spec.m_o).map(|_| draw_vec(&mut rng, a_s)).collect();

    let n = spec.m_o * spec.n_o;
    let mut features = Vec::with_capacity(n * a_x);
    let mut labels = Vec::with_capacity(n);
    let mut row_ids = Vec::with_capacity(n);
    for (t, s) in side.iter().enumerate() {
        let alpha = coefs.alpha(s);
        for _ in 0..spec.n_o {
            let x = draw_vec(&mut rng, a_x);
            labels.push(alpha.iter().zip(&x).map(|(a, xi)| a * xi).sum::<f64>() + coefs.beta());
            features.extend_from_slice(&x);
            row_ids.push(ids[t].as_str());
        }
    }
    let table = SideInfoTable::new(ids.iter().cloned().zip(side).collect())?;
    let ds = ZeroShotDataset::new(features, a_x, &row_ids, labels, table)?;
    Ok((ds, coefs))
}

#[derive(Serialize)]
struct Meta<'a> {
    name: String,
    spec: &'a SynthSpec,
    seed: u64,
    rows: usize,
}

/// Writes the two dataset CSVs plus `meta.json` recording the spec.
pub fn save_synth(ds: &ZeroShotDataset, spec: &SynthSpec, dir: &Path) -> Result<()> {
    save_dataset(ds, dir)?;
    let meta = Meta {
        name: spec.name(),
        spec,
        seed: spec.seed,
        rows: ds.n_rows(),
    };
    let path = dir.join(META_FILE);
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&path, text + "\n").map_err(|e| ZskError::io(path, e))
}

/// Reads the spec back from a `meta.json`.
pub fn load_meta_spec(dir: &Path) -> Result<SynthSpec> {
    #[derive(Deserialize)]
    struct OwnedMeta {
        spec: SynthSpec,
    }
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ZskError::io(&path, e))?;
    Ok(serde_json::from_str::<OwnedMeta>(&text)?.spec)
}

/// The scaling grid for the timing study. `(a_x, a_s)` and `(n_o, m_o)` are
/// paired index-wise and the two pair lists are crossed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingGridSpec {
    pub a_x: Vec<usize>,
    pub a_s: Vec<usize>,
    pub n_o: Vec<usize>,
    pub m_o: Vec<usize>,
    pub seed: u64,
}

impl Default for TimingGridSpec {
    fn default() -> Self {
        Self {
            a_x: vec![10, 100, 250, 500],
            a_s: vec![10, 100, 250, 500],
            n_o: vec![10, 20, 30, 40],
            m_o: vec![5, 10, 15, 20],
            seed: 0,
        }
    }
}

impl TimingGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.a_x.is_empty() || self.n_o.is_empty() {
            return Err(ZskError::InvalidArgument("timing grid lists must be non-empty".into()));
        }
        if self.a_x.len() != self.a_s.len() {
            return Err(ZskError::InvalidArgument(format!(
                "timing grid pairs a_x and a_s index-wise; lengths {} and {} differ",
                self.a_x.len(),
                self.a_s.len()
            )));
        }
        if self.n_o.len() != self.m_o.len() {
            return Err(ZskError::InvalidArgument(format!(
                "timing grid pairs n_o and m_o index-wise; lengths {} and {} differ",
                self.n_o.len(),
                self.m_o.len()
            )));
        }
        Ok(())
    }

    /// The R-family specs of every grid point, features-major.
    pub fn specs(&self) -> Result<Vec<SynthSpec>> {
        self.validate()?;
        let mut out = Vec::new();
        for (fi, (&a_x, &a_s)) in self.a_x.iter().zip(&self.a_s).enumerate() {
            for (ii, (&n_o, &m_o)) in self.n_o.iter().zip(&self.m_o).enumerate() {
                let index = (fi * self.n_o.len() + ii) as u64;
                let spec = SynthSpec {
                    family: Family::R,
                    m_o,
                    a_s,
                    n_o,
                    a_x,
                    seed: derive_seed(self.seed, index),
                    d_prototypes: default_prototypes(),
                };
                spec.validate()?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}

/// One dataset of the timing grid.
#[derive(Debug, Clone)]
pub struct TimingCell {
    pub spec: SynthSpec,
    pub dataset: ZeroShotDataset,
}

impl TimingCell {
    pub fn joint_features(&self) -> usize {
        self.spec.a_x + self.spec.a_s
    }

    pub fn instances(&self) -> usize {
        self.spec.n_o * self.spec.m_o
    }
}

pub fn generate_timing_grid(spec: &TimingGridSpec) -> Result<Vec<TimingCell>> {
    spec.specs()?
        .into_iter()
        .map(|s| {
            Ok(TimingCell {
                dataset: generate(&s)?,
                spec: s,
            })
        })
        .collect()
}

/// Deterministic per-item seed derived from a base seed (SplitMix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The four-point example: targets `t0` (s = 0) and `t1` (s = 2), instances
/// `x ∈ {0, 2}` each, labels `y = (s + 1) x + (s + 1)`.
pub fn toy_dataset() -> ZeroShotDataset {
    let table = SideInfoTable::new(vec![("t0".into(), vec![0.0]), ("t1".into(), vec![2.0])])
        .expect("valid table");
    ZeroShotDataset::new(
        vec![0.0, 2.0, 0.0, 2.0],
        1,
        &["t0", "t0", "t1", "t1"],
        vec![1.0, 3.0, 3.0, 9.0],
        table,
    )
    .expect("valid toy dataset")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_uniform_range_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut sum, mut abs_sum) = (0.0, 0.0);
        for _ in 0..n {
            let v = sample_signed_uniform(&mut rng);
            assert!((1.0..2.0).contains(&v.abs()), "{v}");
            sum += v;
            abs_sum += v.abs();
        }
        assert!((sum / n as f64).abs() < 0.01);
        assert!((abs_sum / n as f64 - 1.5).abs() < 0.01);
    }

    #[test]
    fn forced_r_coefficients_match_hand_evaluation() {
        let spec = SynthSpec::new(Family::R, 3, 1, 5).with_a_x(1).with_n_o(4);
        let (ds, coefs) = generate_with(&spec, |c| {
            if let SynthCoefficients::R { beta, beta_i, gamma } = c {
                *beta = 1.0;
                beta_i[0] = 1.0;
                gamma[0][0] = 1.0;
            }
        })
        .unwrap();
        assert_eq!(coefs.label(&[2.0], &[2.0]), 7.0);
        for i in 0..ds.n_rows() {
            let (x, s) = (ds.row(i)[0], ds.row_side_info(i)[0]);
            assert_eq!(ds.label(i), (s + 1.0) * x + 1.0);
        }
    }

    #[test]
    fn shape_of_r_10_5() {
        let ds = generate(&SynthSpec::new(Family::R, 10, 5, 1)).unwrap();
        assert_eq!(ds.n_rows(), 5000);
        assert_eq!(ds.a_x() + 1, 51);
        assert_eq!(ds.side_info().len(), 10);
        assert_eq!(ds.a_s(), 5);
        assert!(ds.slice_by_target().iter().all(|s| s.rows.len() == 500));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = SynthSpec::new(Family::S, 4, 3, 9).with_n_o(5).with_a_x(3);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec { seed: 10, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn s_family_exact_prototype_match() {
        let c = SynthCoefficients::S {
            beta: 0.0,
            tau: vec![vec![1.0, 5.0]],
            prototypes: vec![vec![0.0], vec![1.0]],
            distance: Distance::Euclidean,
        };
        assert_eq!(c.alpha(&[1.0]), vec![5.0]);
        // Equidistant from both prototypes.
        assert!((c.alpha(&[0.5])[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn timing_grid_pairs_index_wise() {
        let specs = TimingGridSpec::default().specs().unwrap();
        assert_eq!(specs.len(), 16);
        let mut feats: Vec<usize> = specs.iter().map(|s| s.a_x + s.a_s).collect();
        feats.dedup();
        assert_eq!(feats, vec![20, 200, 500, 1000]);
        let inst: Vec<usize> = specs[..4].iter().map(|s| s.n_o * s.m_o).collect();
        assert_eq!(inst, vec![50, 200, 450, 800]);
        assert!(TimingGridSpec {
            a_s: vec![1],
            ..TimingGridSpec::default()
        }
        .specs()
        .is_err());
    }

    #[test]
    fn toy_dataset_labels() {
        let ds = toy_dataset();
        for i in 0..4 {
            let (x, s) = (ds.row(i)[0], ds.row_side_info(i)[0]);
            assert_eq!(ds.label(i), (s + 1.0) * x + (s + 1.0));
        }
    }
}
