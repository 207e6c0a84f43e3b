//! Kernels over joint `(x, s)` points.
//!
//! The DSIL feature map is the Kronecker product of `(1, x)` and `(1, s)`:
//! every monomial `x_i * s_j` (with `x_0 = s_0 = 1`) appears exactly once and
//! no `x_i * x_k`, `s_j * s_l` or squared term does. Its kernel can be computed
//! three ways, all of which agree numerically:
//!
//! * [`DsilFormulation::Phi`]: expand every point once up front, then take dot
//!   products of the stored feature maps;
//! * [`DsilFormulation::KPhi`]: expand both points inside every kernel call,
//!   cost `O(a_x * a_s)` per call;
//! * [`DsilFormulation::KQ`]: `(K_{Q,1}(p, q) - K_{Q,0}(x, x') - K_{Q,0}(s, s') + 1) / 2`
//!   from three quadratic kernels, cost `O(a_x + a_s)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZskError};

/// A borrowed joint point: instance features `x` and target side information `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPoint<'a> {
    pub x: &'a [f64],
    pub s: &'a [f64],
}

impl<'a> JointPoint<'a> {
    pub fn new(x: &'a [f64], s: &'a [f64]) -> Self {
        Self { x, s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DsilFormulation {
    Phi,
    KPhi,
    KQ,
}

impl DsilFormulation {
    pub const ALL: [DsilFormulation; 3] = [DsilFormulation::Phi, DsilFormulation::KPhi, DsilFormulation::KQ];
}

/// The closed set of kernels the solver knows how to evaluate.
///
/// `Linear` and `Quadratic` act on the concatenation `x ‖ s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum KernelSpec {
    Linear,
    Quadratic { c: f64 },
    Dsil { formulation: DsilFormulation },
}

impl KernelSpec {
    pub fn quadratic(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(ZskError::InvalidArgument(format!("quadratic kernel offset must be >= 0, got {c}")));
        }
        Ok(KernelSpec::Quadratic { c })
    }

    pub fn dsil(formulation: DsilFormulation) -> Self {
        KernelSpec::Dsil { formulation }
    }

    pub fn name(&self) -> String {
        match self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Quadratic { c } => format!("quadratic(c={c})"),
            KernelSpec::Dsil { formulation } => format!("dsil-{formulation:?}"),
        }
    }

    /// Evaluates the kernel without dimension checks.
    #[inline]
    pub fn eval(&self, p: JointPoint<'_>, q: JointPoint<'_>) -> f64 {
        match *self {
            KernelSpec::Linear => dot(p.x, q.x) + dot(p.s, q.s),
            KernelSpec::Quadratic { c } => {
                let t = dot(p.x, q.x) + dot(p.s, q.s) + c;
                t * t
            }
            KernelSpec::Dsil { formulation } => match formulation {
                DsilFormulation::Phi => dot(&phi_expand(p), &phi_expand(q)),
                DsilFormulation::KPhi => dsil_kphi(p, q),
                DsilFormulation::KQ => dsil_kq(p, q),
            },
        }
    }

    /// Evaluates the kernel after checking that both points have matching dimensions.
    pub fn evaluate(&self, p: JointPoint<'_>, q: JointPoint<'_>) -> Result<f64> {
        check_pair(p, q)?;
        Ok(self.eval(p, q))
    }
}

fn check_pair(p: JointPoint<'_>, q: JointPoint<'_>) -> Result<()> {
    if p.x.len() != q.x.len() {
        return Err(ZskError::dims("instance features a_x", p.x.len(), q.x.len()));
    }
    if p.s.len() != q.s.len() {
        return Err(ZskError::dims("side information a_s", p.s.len(), q.s.len()));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Length of the expanded vector, `(a_x + 1) * (a_s + 1)`.
pub fn phi_len(a_x: usize, a_s: usize) -> usize {
    (a_x + 1) * (a_s + 1)
}

/// Writes the DSIL expansion of `p` into `out`.
///
/// Block `j` (with `s_0 = 1`) holds `(s_j, x_1 s_j, ..., x_{a_x} s_j)`.
pub fn phi_expand_into(p: JointPoint<'_>, out: &mut [f64]) {
    let stride = p.x.len() + 1;
    debug_assert_eq!(out.len(), phi_len(p.x.len(), p.s.len()));
    for (j, block) in out.chunks_exact_mut(stride).enumerate() {
        let sj = if j == 0 { 1.0 } else { p.s[j - 1] };
        block[0] = sj;
        for (b, xi) in block[1..].iter_mut().zip(p.x) {
            *b = xi * sj;
        }
    }
}

/// Explicit DSIL feature map.
pub fn phi_expand(p: JointPoint<'_>) -> Vec<f64> {
    let mut out = vec![0.0; phi_len(p.x.len(), p.s.len())];
    phi_expand_into(p, &mut out);
    out
}

/// `(<u, v> + c)^2`.
pub fn quadratic_kernel(u: &[f64], v: &[f64], c: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(ZskError::dims("quadratic kernel operands", u.len(), v.len()));
    }
    Ok(quad(u, v, c))
}

/// Expands both points inside the call and takes the dot product of the
/// feature maps.
fn dsil_kphi(p: JointPoint<'_>, q: JointPoint<'_>) -> f64 {
    dot(&phi_expand(p), &phi_expand(q))
}

/// Three quadratic kernels: one over the concatenation with offset 1, and
/// one each over `x` and `s` with offset 0.
fn dsil_kq(p: JointPoint<'_>, q: JointPoint<'_>) -> f64 {
    let joint = KernelSpec::Quadratic { c: 1.0 }.eval(p, q);
    let kx = quad(p.x, q.x, 0.0);
    let ks = quad(p.s, q.s, 0.0);
    0.5 * (joint - kx - ks + 1.0)
}

#[inline]
fn quad(u: &[f64], v: &[f64], c: f64) -> f64 {
    let t = dot(u, v) + c;
    t * t
}

/// DSIL kernel between two joint points using the requested formulation.
pub fn dsil_kernel(p: JointPoint<'_>, q: JointPoint<'_>, formulation: DsilFormulation) -> Result<f64> {
    KernelSpec::dsil(formulation).evaluate(p, q)
}

/// Owned, homogeneous collection of joint points stored row-major.
///
/// Plain feature vectors are represented with `a_s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    a_x: usize,
    a_s: usize,
    x: Vec<f64>,
    s: Vec<f64>,
}

impl PointSet {
    pub fn new(a_x: usize, a_s: usize) -> Self {
        Self {
            a_x,
            a_s,
            x: Vec::new(),
            s: Vec::new(),
        }
    }

    pub fn with_capacity(a_x: usize, a_s: usize, n: usize) -> Self {
        Self {
            a_x,
            a_s,
            x: Vec::with_capacity(n * a_x),
            s: Vec::with_capacity(n * a_s),
        }
    }

    /// Builds plain points from a row-major matrix with `cols` columns.
    pub fn from_rows(data: &[f64], cols: usize) -> Result<Self> {
        if cols == 0 || data.len() % cols != 0 {
            return Err(ZskError::InvalidArgument(format!(
                "{} values cannot form rows of width {cols}",
                data.len()
            )));
        }
        Ok(Self {
            a_x: cols,
            a_s: 0,
            x: data.to_vec(),
            s: Vec::new(),
        })
    }

    pub fn push(&mut self, x: &[f64], s: &[f64]) -> Result<()> {
        if x.len() != self.a_x {
            return Err(ZskError::dims("instance features a_x", self.a_x, x.len()));
        }
        if s.len() != self.a_s {
            return Err(ZskError::dims("side information a_s", self.a_s, s.len()));
        }
        self.x.extend_from_slice(x);
        self.s.extend_from_slice(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        if self.a_x > 0 {
            self.x.len() / self.a_x
        } else if self.a_s > 0 {
            self.s.len() / self.a_s
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn a_x(&self) -> usize {
        self.a_x
    }

    pub fn a_s(&self) -> usize {
        self.a_s
    }

    pub fn point(&self, i: usize) -> JointPoint<'_> {
        JointPoint {
            x: &self.x[i * self.a_x..(i + 1) * self.a_x],
            s: &self.s[i * self.a_s..(i + 1) * self.a_s],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = JointPoint<'_>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Keeps only the listed points, in order.
    pub fn select(&self, idx: &[usize]) -> PointSet {
        let mut out = PointSet::with_capacity(self.a_x, self.a_s, idx.len());
        for &i in idx {
            let p = self.point(i);
            out.x.extend_from_slice(p.x);
            out.s.extend_from_slice(p.s);
        }
        out
    }

    /// Row-major DSIL expansions of every point.
    pub fn phi_matrix(&self) -> Vec<f64> {
        let d = phi_len(self.a_x, self.a_s);
        let mut out = vec![0.0; self.len() * d];
        out.par_chunks_mut(d.max(1))
            .enumerate()
            .for_each(|(i, row)| phi_expand_into(self.point(i), row));
        out
    }
}

/// Dense symmetric Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Largest point count for which a dense Gram matrix is materialized (about 2 GiB).
pub const MAX_GRAM_POINTS: usize = 16_384;

/// `G[i][j] = K(points[i], points[j])`, computed on the upper triangle and mirrored.
///
/// Each entry is one sequential kernel evaluation, so the result does not
/// depend on how many threads rayon uses. The `Phi` formulation expands every
/// point once up front and then takes dot products.
pub fn gram_matrix(points: &PointSet, spec: KernelSpec) -> Result<Gram> {
    let n = points.len();
    if n == 0 {
        return Err(ZskError::Empty("Gram matrix of no points".into()));
    }
    if n > MAX_GRAM_POINTS {
        return Err(ZskError::InvalidArgument(format!(
            "{n} points exceed the dense Gram limit of {MAX_GRAM_POINTS}"
        )));
    }
    let mut data = vec![0.0; n * n];
    match spec {
        KernelSpec::Dsil {
            formulation: DsilFormulation::Phi,
        } => {
            let d = phi_len(points.a_x(), points.a_s());
            let phi = points.phi_matrix();
            data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let pi = &phi[i * d..(i + 1) * d];
                for (j, g) in row.iter_mut().enumerate().skip(i) {
                    *g = dot(pi, &phi[j * d..(j + 1) * d]);
                }
            });
        }
        _ => {
            data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let pi = points.point(i);
                for (j, g) in row.iter_mut().enumerate().skip(i) {
                    *g = spec.eval(pi, points.point(j));
                }
            });
        }
    }
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(Gram { n, data })
}

/// Kernel values between every query and every reference point, row-major
/// `queries.len() x refs.len()`.
pub fn cross_kernel(queries: &PointSet, refs: &PointSet, spec: KernelSpec) -> Result<Vec<f64>> {
    if queries.a_x() != refs.a_x() {
        return Err(ZskError::dims("instance features a_x", refs.a_x(), queries.a_x()));
    }
    if queries.a_s() != refs.a_s() {
        return Err(ZskError::dims("side information a_s", refs.a_s(), queries.a_s()));
    }
    let m = refs.len();
    let mut out = vec![0.0; queries.len() * m];
    if m == 0 {
        return Ok(out);
    }
    match spec {
        KernelSpec::Dsil {
            formulation: DsilFormulation::Phi,
        } => {
            let d = phi_len(refs.a_x(), refs.a_s());
            let phi_r = refs.phi_matrix();
            out.par_chunks_mut(m).enumerate().for_each(|(q, row)| {
                let pq = phi_expand(queries.point(q));
                for (j, v) in row.iter_mut().enumerate() {
                    *v = dot(&pq, &phi_r[j * d..(j + 1) * d]);
                }
            });
        }
        _ => {
            out.par_chunks_mut(m).enumerate().for_each(|(q, row)| {
                let pq = queries.point(q);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = spec.eval(pq, refs.point(j));
                }
            });
        }
    }
    Ok(out)
}
