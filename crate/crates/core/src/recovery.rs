//! Sparse recovery across subcarriers and the LS baseline.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

/// A family of `K` sensing matrices `B_k`, all `rows x cols`.
pub trait SubcarrierSensing: Sync {
    fn subcarriers(&self) -> usize;
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `B_k^H r_k` for every `k`, where `r_k` is column `k` of `residuals`.
    /// Returns a `cols x K` matrix.
    fn correlate(&self, residuals: &DMatrix<C64>) -> DMatrix<C64>;

    /// Column `j` of `B_k`.
    fn column(&self, k: usize, j: usize) -> DVector<C64>;

    /// `||[B_k]_j||` as a `cols x K` table.
    fn column_norms(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.cols(), self.subcarriers(), |j, k| {
            self.column(k, j).norm()
        })
    }
}

/// Explicit per-subcarrier matrices.
#[derive(Debug, Clone)]
pub struct DenseSensing {
    mats: Vec<DMatrix<C64>>,
}

impl DenseSensing {
    pub fn new(mats: Vec<DMatrix<C64>>) -> Result<Self> {
        let first = mats
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no sensing matrices".into()))?;
        let shape = first.shape();
        if mats.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch(
                "sensing matrices differ in shape".into(),
            ));
        }
        Ok(Self { mats })
    }

    pub fn matrices(&self) -> &[DMatrix<C64>] {
        &self.mats
    }
}

impl SubcarrierSensing for DenseSensing {
    fn subcarriers(&self) -> usize {
        self.mats.len()
    }

    fn rows(&self) -> usize {
        self.mats[0].nrows()
    }

    fn cols(&self) -> usize {
        self.mats[0].ncols()
    }

    fn correlate(&self, residuals: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.cols(), self.mats.len());
        for (k, b) in self.mats.iter().enumerate() {
            out.set_column(k, &b.ad_mul(&residuals.column(k)));
        }
        out
    }

    fn column(&self, k: usize, j: usize) -> DVector<C64> {
        self.mats[k].column(j).into_owned()
    }
}

/// `B_k = base * diag(scales_k)`: one shared matrix with per-subcarrier
/// column weights.
#[derive(Debug, Clone)]
pub struct ScaledSensing {
    base: DMatrix<C64>,
    scales: DMatrix<C64>,
}

impl ScaledSensing {
    /// `scales` is `cols x K`; column `k` weights the columns of `base` for
    /// subcarrier `k`.
    pub fn new(base: DMatrix<C64>, scales: DMatrix<C64>) -> Result<Self> {
        if scales.nrows() != base.ncols() || scales.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "scale table {:?} does not fit a base with {} columns",
                scales.shape(),
                base.ncols()
            )));
        }
        Ok(Self { base, scales })
    }

    pub fn base(&self) -> &DMatrix<C64> {
        &self.base
    }

    /// Dense `B_k`.
    pub fn matrix(&self, k: usize) -> DMatrix<C64> {
        let mut b = self.base.clone();
        for (j, mut col) in b.column_iter_mut().enumerate() {
            col *= self.scales[(j, k)];
        }
        b
    }
}

impl SubcarrierSensing for ScaledSensing {
    fn subcarriers(&self) -> usize {
        self.scales.ncols()
    }

    fn rows(&self) -> usize {
        self.base.nrows()
    }

    fn cols(&self) -> usize {
        self.base.ncols()
    }

    fn correlate(&self, residuals: &DMatrix<C64>) -> DMatrix<C64> {
        let mut c = self.base.ad_mul(residuals);
        c.zip_apply(&self.scales, |z, s| *z *= s.conj());
        c
    }

    fn column(&self, k: usize, j: usize) -> DVector<C64> {
        self.base.column(j) * self.scales[(j, k)]
    }

    fn column_norms(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.cols(), self.subcarriers(), |j, k| {
            self.base.column(j).norm() * self.scales[(j, k)].norm()
        })
    }
}

/// Output of [`domp`].
#[derive(Debug, Clone)]
pub struct SparseEstimate {
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    /// Per-subcarrier coefficient vectors of length `cols`, zero off the support.
    pub coeffs: Vec<DVector<C64>>,
    pub iterations: usize,
    /// `(1 / (K N_P)) sum_k ||r_k||^2` at exit.
    pub final_residual: f64,
    /// Mean residual power before the first and after every iteration.
    pub residual_history: Vec<f64>,
    /// Final residual vectors `r_k`.
    pub residuals: Vec<DVector<C64>>,
    /// False when the iteration cap stopped the loop above `epsilon`.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct DompOptions {
    pub epsilon: f64,
    /// Overrides the default cap `min(N_P, cols)` when smaller.
    pub max_iterations: Option<usize>,
    /// Score columns by `sum_k |[B_k^H r_k]_j| / ||[B_k]_j||` instead of the
    /// raw correlation sum.
    pub normalize_columns: bool,
}

impl DompOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            max_iterations: None,
            normalize_columns: false,
        }
    }

    pub fn with_normalized_columns(mut self, on: bool) -> Self {
        self.normalize_columns = on;
        self
    }
}

/// Relative singular-value cutoff for the per-subcarrier least squares.
const RANK_TOL: f64 = 1e-10;

/// Incremental QR of the selected columns for one subcarrier.
#[derive(Debug, Default)]
struct Subproblem {
    q: Vec<DVector<C64>>,
    /// Upper-triangular factor, column by column.
    r: Vec<Vec<C64>>,
    /// Support positions that entered the basis.
    basis: Vec<usize>,
}

impl Subproblem {
    /// Modified Gram-Schmidt with one re-orthogonalization pass.
    fn push(&mut self, col: DVector<C64>, position: usize) {
        let norm0 = col.norm();
        let mut v = col;
        let mut coeffs = vec![C64::default(); self.q.len()];
        for _ in 0..2 {
            for (t, q) in self.q.iter().enumerate() {
                let c = q.dotc(&v);
                v.axpy(-c, q, C64::new(1.0, 0.0));
                coeffs[t] += c;
            }
        }
        let nv = v.norm();
        if norm0 == 0.0 || nv <= RANK_TOL * norm0 {
            return;
        }
        coeffs.push(C64::new(nv, 0.0));
        self.q.push(v / C64::new(nv, 0.0));
        self.r.push(coeffs);
        self.basis.push(position);
    }

    fn residual(&self, y: &DVector<C64>) -> DVector<C64> {
        let mut r = y.clone();
        for q in &self.q {
            let c = q.dotc(y);
            r.axpy(-c, q, C64::new(1.0, 0.0));
        }
        // second pass keeps r orthogonal to the basis at working precision
        for q in &self.q {
            let c = q.dotc(&r);
            r.axpy(-c, q, C64::new(1.0, 0.0));
        }
        r
    }

    /// Least-squares coefficients over the basis, by back substitution.
    fn solve(&self, y: &DVector<C64>) -> Vec<(usize, C64)> {
        let s = self.q.len();
        let b: Vec<C64> = self.q.iter().map(|q| q.dotc(y)).collect();
        let mut x = vec![C64::default(); s];
        for i in (0..s).rev() {
            let mut acc = b[i];
            for (rj, xj) in self.r.iter().zip(&x).skip(i + 1) {
                acc -= rj[i] * xj;
            }
            x[i] = acc / self.r[i][i];
        }
        self.basis.iter().copied().zip(x).collect()
    }
}

/// Distributed OMP.
///
/// Each pass picks the column maximizing `sum_k |[B_k^H r_k]_j|` over columns
/// not yet selected (lowest index on ties), solves the per-subcarrier least
/// squares on the common support, and updates the residuals. With
/// [`DompOptions::normalize_columns`] each term of the score is divided by the
/// column norm, and zero columns are never picked. The loop runs
/// while the mean residual power exceeds `epsilon`, up to
/// `min(N_P, cols)` passes.
pub fn domp<S: SubcarrierSensing + ?Sized>(
    y: &[DVector<C64>],
    sensing: &S,
    opts: DompOptions,
) -> Result<SparseEstimate> {
    let k_count = sensing.subcarriers();
    let rows = sensing.rows();
    let cols = sensing.cols();
    if opts.epsilon.is_nan() || opts.epsilon <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {}",
            opts.epsilon
        )));
    }
    if y.len() != k_count || y.iter().any(|v| v.len() != rows) {
        return Err(Error::DimensionMismatch(format!(
            "expected {k_count} observation vectors of length {rows}"
        )));
    }
    let mut cap = rows.min(cols);
    if let Some(m) = opts.max_iterations {
        cap = cap.min(m);
    }
    let scale = 1.0 / (k_count * rows) as f64;

    let mut residuals = DMatrix::from_columns(y);
    let mut energy = residuals.norm_squared() * scale;
    let mut history = vec![energy];
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; cols];
    let mut subs: Vec<Subproblem> = (0..k_count).map(|_| Subproblem::default()).collect();
    let inv_norms = opts.normalize_columns.then(|| {
        sensing
            .column_norms()
            .map(|n| if n > 0.0 { n.recip() } else { 0.0 })
    });

    while energy > opts.epsilon && support.len() < cap {
        let corr = sensing.correlate(&residuals);
        let mut best: Option<(usize, f64)> = None;
        for (j, _) in selected.iter().enumerate().filter(|(_, taken)| !**taken) {
            let score: f64 = match &inv_norms {
                Some(w) => corr
                    .row(j)
                    .iter()
                    .zip(w.row(j).iter())
                    .map(|(z, w)| z.norm() * w)
                    .sum(),
                None => corr.row(j).iter().map(|z| z.norm()).sum(),
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        selected[j] = true;
        let position = support.len();
        support.push(j);

        let new_res: Vec<DVector<C64>> = subs
            .par_iter_mut()
            .enumerate()
            .map(|(k, sub)| {
                sub.push(sensing.column(k, j), position);
                sub.residual(&y[k])
            })
            .collect();
        for (k, r) in new_res.iter().enumerate() {
            residuals.set_column(k, r);
        }
        energy = residuals.norm_squared() * scale;
        history.push(energy);
    }

    let coeffs = subs
        .par_iter()
        .enumerate()
        .map(|(k, sub)| {
            let mut c = DVector::zeros(cols);
            for (pos, v) in sub.solve(&y[k]) {
                c[support[pos]] = v;
            }
            c
        })
        .collect();

    Ok(SparseEstimate {
        iterations: support.len(),
        converged: energy <= opts.epsilon,
        support,
        coeffs,
        final_residual: energy,
        residual_history: history,
        residuals: residuals.column_iter().map(|c| c.into_owned()).collect(),
    })
}

/// Pseudo-inverse solver for a square or tall matrix with a conditioning guard.
#[derive(Debug, Clone)]
pub struct LsSolver {
    svd: nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn>,
    condition: f64,
}

impl LsSolver {
    pub fn new(phi: &DMatrix<C64>, max_condition: f64) -> Result<Self> {
        if phi.nrows() < phi.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "LS needs at least as many rows as unknowns, got {}x{}",
                phi.nrows(),
                phi.ncols()
            )));
        }
        let svd = phi.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if condition.is_nan() || condition > max_condition {
            return Err(Error::Singular { condition });
        }
        Ok(Self { svd, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, y: &DVector<C64>) -> DVector<C64> {
        let u = self.svd.u.as_ref().expect("computed");
        let vt = self.svd.v_t.as_ref().expect("computed");
        let mut t = u.ad_mul(y);
        for (z, s) in t.iter_mut().zip(self.svd.singular_values.iter()) {
            *z /= C64::new(*s, 0.0);
        }
        vt.ad_mul(&t)
    }
}

/// `Phi^+ y`, rejecting matrices with condition number above `max_condition`.
pub fn ls_baseline(
    y: &DVector<C64>,
    phi: &DMatrix<C64>,
    max_condition: f64,
) -> Result<DVector<C64>> {
    if y.len() != phi.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} observations for a {}-row matrix",
            y.len(),
            phi.nrows()
        )));
    }
    Ok(LsSolver::new(phi, max_condition)?.solve(y))
}

/// `sum_k ||est_k - truth_k||^2 / sum_k ||truth_k||^2` (linear).
pub fn nmse_linear(est: &[DVector<C64>], truth: &[DVector<C64>]) -> Result<f64> {
    if est.len() != truth.len() || est.iter().zip(truth).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::DimensionMismatch(
            "estimate and reference shapes differ".into(),
        ));
    }
    let den: f64 = truth.iter().map(|t| t.norm_squared()).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    let num: f64 = est
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_squared())
        .sum();
    Ok(num / den)
}

/// NMSE in dB, clamped below at `floor_db`.
pub fn nmse(est: &[DVector<C64>], truth: &[DVector<C64>], floor_db: f64) -> Result<f64> {
    Ok(linear_to_db(nmse_linear(est, truth)?, floor_db))
}

pub fn linear_to_db(x: f64, floor_db: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(floor_db)
    } else {
        floor_db
    }
}
