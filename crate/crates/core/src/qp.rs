//! Convex QP relaxation solver: operator splitting with safe dual bounds.
//!
//! Solves `min 0.5 x'Px + q'x + c0  s.t.  l <= Ax <= u` where `P` is
//! block-diagonal: one positive-definite block `2 w_j C` per prediction point
//! over its coefficient vector, and zero on the selection variables. The
//! splitting alternates a linear solve against the reduced matrix
//! `P + sigma I + A' R A` (factored once, reused across iterations and across
//! warm-started re-solves, since node fixings only move the bounds `l`, `u`)
//! with a projection of the constraint image onto the bound box and a dual
//! ascent step.
//!
//! Ruiz equilibration is applied up front; convergence is judged on
//! *unscaled* residuals so the stopping tolerances keep their meaning.
//!
//! Pruning in the search tree needs bounds that hold even when the iteration
//! stops early, so the engine never trusts the primal value: for any
//! multiplier vector `y` (clipped to the sign pattern its one-sided rows
//! require), minimizing the Lagrangian in closed form over free coefficient
//! blocks and box-constrained selection variables lower-bounds every point
//! satisfying the row constraints. The engine reports the best such bound
//! seen, which is what makes early termination sound.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// One objective block: `weight * (alpha' C alpha - 2 b' alpha)`.
#[derive(Debug, Clone)]
pub struct QpBlock {
    pub weight: f64,
    pub b: DVector<f64>,
}

/// One constraint row `lower <= terms . x <= upper`. `eq` rows get a stiffer
/// penalty parameter.
#[derive(Debug, Clone)]
pub struct SparseRow {
    pub terms: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub eq: bool,
}

/// Static problem data. Variable layout: coefficient blocks first
/// (`blocks.len() * block_dim` entries, block-major), then `n_binary`
/// selection variables.
pub struct QpData {
    pub block_dim: usize,
    pub blocks: Vec<QpBlock>,
    /// Shared covariance of every block; ignored when `blocks` is empty.
    pub c_matrix: DMatrix<f64>,
    pub n_binary: usize,
    pub rows: Vec<SparseRow>,
    /// Objective constant `sum_j w_j phi(x_j, x_j)`.
    pub constant: f64,
}

/// Residual tolerances in the usual absolute-plus-relative form.
#[derive(Debug, Clone)]
pub struct QpSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub check_interval: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-8, rel_tol: 1e-6, check_interval: 25 }
    }
}

/// Primal/dual iterates in original (unscaled) coordinates, used to
/// warm-start child relaxations from their parent's solution.
#[derive(Debug, Clone)]
pub struct QpWarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Result of one relaxation solve.
#[derive(Debug, Clone)]
pub struct QpOutcome {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Objective value at the returned (approximately feasible) point.
    pub primal_value: f64,
    /// Best safe lower bound observed; valid regardless of convergence.
    pub dual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Solve stopped early because the dual bound crossed the caller's cutoff.
    pub cutoff_hit: bool,
}

const SIGMA: f64 = 1e-6;
const RHO: f64 = 0.1;
const RHO_EQ_SCALE: f64 = 1e3;
const RELAX: f64 = 1.6;
const RUIZ_ITERS: usize = 10;

pub struct QpEngine {
    n_cont: usize,
    n: usize,
    m: usize,
    block_dim: usize,
    blocks: Vec<QpBlock>,
    c_matrix: DMatrix<f64>,
    chol_c: Option<Cholesky<f64, Dyn>>,
    // original-space data
    q: DVector<f64>,
    rows: Vec<SparseRow>,
    cols: Vec<Vec<(usize, f64)>>,
    constant: f64,
    // scaled-space data
    d_scale: DVector<f64>,
    e_scale: DVector<f64>,
    cost_scale: f64,
    rows_s: Vec<Vec<(usize, f64)>>,
    cols_s: Vec<Vec<(usize, f64)>>,
    rho: DVector<f64>,
    kkt: Cholesky<f64, Dyn>,
    q_s: DVector<f64>,
}

impl QpEngine {
    pub fn new(data: QpData) -> Result<Self> {
        let QpData { block_dim, blocks, c_matrix, n_binary, rows, constant } = data;
        let n_cont = blocks.len() * block_dim;
        let n = n_cont + n_binary;
        let m = rows.len();
        if n == 0 {
            return Err(Error::Internal("QP with no variables".into()));
        }
        for row in &rows {
            if row.terms.iter().any(|&(v, _)| v >= n) {
                return Err(Error::Internal("constraint touches unknown variable".into()));
            }
        }

        let chol_c = if blocks.is_empty() {
            None
        } else {
            Some(c_matrix.clone().cholesky().ok_or(Error::FactorizationFailure)?)
        };

        // q = -2 w_j b_j on each block, zero on binaries.
        let mut q = DVector::zeros(n);
        for (j, block) in blocks.iter().enumerate() {
            for e in 0..block_dim {
                q[j * block_dim + e] = -2.0 * block.weight * block.b[e];
            }
        }

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (k, row) in rows.iter().enumerate() {
            for &(v, coef) in &row.terms {
                cols[v].push((k, coef));
            }
        }

        // Ruiz equilibration of the stacked matrix [P A'; A 0].
        let mut d = DVector::from_element(n, 1.0);
        let mut e = DVector::from_element(m, 1.0);
        let clip = |v: f64| v.clamp(1e-8, 1e8);
        let p_col_norm = |blocks: &[QpBlock], d: &DVector<f64>, v: usize| -> f64 {
            if v >= n_cont {
                return 0.0;
            }
            let j = v / block_dim;
            let eidx = v % block_dim;
            let w2 = 2.0 * blocks[j].weight;
            let mut nrm = 0.0f64;
            for u in 0..block_dim {
                nrm = nrm.max((w2 * c_matrix[(u, eidx)] * d[j * block_dim + u] * d[v]).abs());
            }
            nrm
        };
        for _ in 0..RUIZ_ITERS {
            let mut col_norm = vec![0.0f64; n];
            for (v, norm) in col_norm.iter_mut().enumerate() {
                *norm = p_col_norm(&blocks, &d, v);
                for &(k, coef) in &cols[v] {
                    *norm = norm.max((coef * e[k] * d[v]).abs());
                }
            }
            for v in 0..n {
                d[v] /= clip(col_norm[v]).sqrt();
            }
            for (k, row) in rows.iter().enumerate() {
                let mut nrm = 0.0f64;
                for &(v, coef) in &row.terms {
                    nrm = nrm.max((coef * e[k] * d[v]).abs());
                }
                e[k] /= clip(nrm).sqrt();
            }
        }

        // Cost normalization.
        let mut mean_p_col = 0.0;
        if n_cont > 0 {
            for v in 0..n_cont {
                mean_p_col += p_col_norm(&blocks, &d, v);
            }
            mean_p_col /= n_cont as f64;
        }
        let qd_norm = (0..n).map(|v| (q[v] * d[v]).abs()).fold(0.0f64, f64::max);
        let cost_scale = (1.0 / clip(mean_p_col.max(qd_norm))).clamp(1e-8, 1e8);

        let rows_s: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .enumerate()
            .map(|(k, row)| row.terms.iter().map(|&(v, coef)| (v, coef * e[k] * d[v])).collect())
            .collect();
        let mut cols_s: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (k, terms) in rows_s.iter().enumerate() {
            for &(v, coef) in terms {
                cols_s[v].push((k, coef));
            }
        }
        let q_s = DVector::from_fn(n, |v, _| cost_scale * q[v] * d[v]);

        let rho = DVector::from_fn(m, |k, _| if rows[k].eq { RHO * RHO_EQ_SCALE } else { RHO });

        // Reduced matrix P_s + sigma I + A_s' R A_s, factored once.
        let mut kkt = DMatrix::zeros(n, n);
        for (j, block) in blocks.iter().enumerate() {
            let w2 = 2.0 * block.weight * cost_scale;
            let off = j * block_dim;
            for a in 0..block_dim {
                for bb in 0..block_dim {
                    kkt[(off + a, off + bb)] = w2 * c_matrix[(a, bb)] * d[off + a] * d[off + bb];
                }
            }
        }
        for v in 0..n {
            kkt[(v, v)] += SIGMA;
        }
        for (k, terms) in rows_s.iter().enumerate() {
            let rk = rho[k];
            for &(va, ca) in terms {
                for &(vb, cb) in terms {
                    kkt[(va, vb)] += rk * ca * cb;
                }
            }
        }
        let kkt = kkt.cholesky().ok_or(Error::FactorizationFailure)?;

        Ok(Self {
            n_cont,
            n,
            m,
            block_dim,
            blocks,
            c_matrix,
            chol_c,
            q,
            rows,
            cols,
            constant,
            d_scale: d,
            e_scale: e,
            cost_scale,
            rows_s,
            cols_s,
            rho,
            kkt,
            q_s,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn n_cont(&self) -> usize {
        self.n_cont
    }

    pub fn n_rows(&self) -> usize {
        self.m
    }

    /// Row bounds as declared in the static data.
    pub fn default_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.rows.iter().map(|r| r.lower).collect(),
            self.rows.iter().map(|r| r.upper).collect(),
        )
    }

    fn scaled_a_times(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for (k, terms) in self.rows_s.iter().enumerate() {
            let mut acc = 0.0;
            for &(v, coef) in terms {
                acc += coef * x[v];
            }
            out[k] = acc;
        }
    }

    fn orig_a_times(&self, x: &[f64], out: &mut DVector<f64>) {
        for (k, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(v, coef) in &row.terms {
                acc += coef * x[v];
            }
            out[k] = acc;
        }
    }

    fn cols_times(cols: &[Vec<(usize, f64)>], y: &DVector<f64>, out: &mut DVector<f64>) {
        for (v, terms) in cols.iter().enumerate() {
            let mut acc = 0.0;
            for &(k, coef) in terms {
                acc += coef * y[k];
            }
            out[v] = acc;
        }
    }

    /// `P x` in original coordinates.
    fn p_times(&self, x: &[f64], out: &mut DVector<f64>) {
        out.fill(0.0);
        for (j, block) in self.blocks.iter().enumerate() {
            let w2 = 2.0 * block.weight;
            let off = j * self.block_dim;
            for a in 0..self.block_dim {
                let mut acc = 0.0;
                for bb in 0..self.block_dim {
                    acc += self.c_matrix[(a, bb)] * x[off + bb];
                }
                out[off + a] = w2 * acc;
            }
        }
    }

    /// Safe lower bound from an arbitrary multiplier vector. The multiplier is
    /// clipped to the sign its one-sided rows require; the inner minimization
    /// runs in closed form over free coefficient blocks and the box on each
    /// selection variable read off its bound row `z_box_rows[i]`.
    pub fn dual_bound(&self, y: &[f64], lower: &[f64], upper: &[f64], z_box_rows: &[usize]) -> f64 {
        debug_assert_eq!(z_box_rows.len(), self.n - self.n_cont);
        let mut yc = DVector::zeros(self.m);
        let mut support = 0.0;
        for k in 0..self.m {
            let mut v = y[k];
            if lower[k] == f64::NEG_INFINITY && v < 0.0 {
                v = 0.0;
            }
            if upper[k] == f64::INFINITY && v > 0.0 {
                v = 0.0;
            }
            yc[k] = v;
            if v > 0.0 {
                support += upper[k] * v;
            } else if v < 0.0 {
                support += lower[k] * v;
            }
        }

        let mut r = DVector::zeros(self.n);
        Self::cols_times(&self.cols, &yc, &mut r);
        r += &self.q;

        let mut bound = self.constant - support;
        if let Some(chol) = &self.chol_c {
            for (j, block) in self.blocks.iter().enumerate() {
                let off = j * self.block_dim;
                let rj = DVector::from_fn(self.block_dim, |e, _| r[off + e]);
                let u = chol.solve(&rj);
                bound -= rj.dot(&u) / (4.0 * block.weight);
            }
        }
        for (i, &row) in z_box_rows.iter().enumerate() {
            let v = self.n_cont + i;
            let (lo, hi) = (lower[row], upper[row]);
            bound += (r[v] * lo).min(r[v] * hi);
        }
        bound
    }

    /// Objective `0.5 x'Px + q'x + c0` at a point, original coordinates.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let mut px = DVector::zeros(self.n);
        self.p_times(x, &mut px);
        0.5 * px.dot(&xv) + self.q.dot(&xv) + self.constant
    }

    /// Runs the splitting iteration under node bounds `lower`/`upper`
    /// (original space). Stops on converged residuals, on the iteration
    /// budget, past the deadline, or as soon as the running dual bound
    /// reaches `cutoff`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &self,
        lower: &[f64],
        upper: &[f64],
        z_box_rows: &[usize],
        warm: Option<&QpWarmStart>,
        settings: &QpSettings,
        max_iterations: usize,
        cutoff: f64,
    ) -> QpOutcome {
        self.solve_until(lower, upper, z_box_rows, warm, settings, max_iterations, cutoff, None)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn solve_until(
        &self,
        lower: &[f64],
        upper: &[f64],
        z_box_rows: &[usize],
        warm: Option<&QpWarmStart>,
        settings: &QpSettings,
        max_iterations: usize,
        cutoff: f64,
        deadline: Option<std::time::Instant>,
    ) -> QpOutcome {
        let (n, m) = (self.n, self.m);
        let l_s = DVector::from_fn(m, |k, _| {
            if lower[k] == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                lower[k] * self.e_scale[k]
            }
        });
        let u_s = DVector::from_fn(m, |k, _| {
            if upper[k] == f64::INFINITY { f64::INFINITY } else { upper[k] * self.e_scale[k] }
        });

        let mut x = DVector::zeros(n);
        let mut y = DVector::zeros(m);
        if let Some(w) = warm {
            for v in 0..n {
                x[v] = w.x[v] / self.d_scale[v];
            }
            for k in 0..m.min(w.y.len()) {
                y[k] = w.y[k] * self.cost_scale / self.e_scale[k];
            }
        }
        let mut z = DVector::zeros(m);
        self.scaled_a_times(&x, &mut z);
        for k in 0..m {
            z[k] = z[k].clamp(l_s[k], u_s[k]);
        }

        let mut rhs = DVector::zeros(n);
        let mut tmp_m = DVector::zeros(m);
        let mut ax = DVector::zeros(m);
        let mut x_orig = vec![0.0; n];
        let mut y_orig = vec![0.0; m];
        let mut px = DVector::zeros(n);
        let mut aty = DVector::zeros(n);
        let mut ax_o = DVector::zeros(m);

        let mut best_bound = f64::NEG_INFINITY;
        let mut converged = false;
        let mut cutoff_hit = false;
        let mut iterations = 0;

        while iterations < max_iterations {
            let steps = settings.check_interval.min(max_iterations - iterations);
            for _ in 0..steps {
                for k in 0..m {
                    tmp_m[k] = self.rho[k] * z[k] - y[k];
                }
                Self::cols_times(&self.cols_s, &tmp_m, &mut rhs);
                for v in 0..n {
                    rhs[v] += SIGMA * x[v] - self.q_s[v];
                }
                let x_tilde = self.kkt.solve(&rhs);
                self.scaled_a_times(&x_tilde, &mut ax);

                for v in 0..n {
                    x[v] = RELAX * x_tilde[v] + (1.0 - RELAX) * x[v];
                }
                for k in 0..m {
                    let zt = RELAX * ax[k] + (1.0 - RELAX) * z[k];
                    let proj = (zt + y[k] / self.rho[k]).clamp(l_s[k], u_s[k]);
                    y[k] += self.rho[k] * (zt - proj);
                    z[k] = proj;
                }
            }
            iterations += steps;

            for v in 0..n {
                x_orig[v] = x[v] * self.d_scale[v];
            }
            for k in 0..m {
                y_orig[k] = y[k] * self.e_scale[k] / self.cost_scale;
            }
            let bound = self.dual_bound(&y_orig, lower, upper, z_box_rows);
            if bound > best_bound {
                best_bound = bound;
            }
            if best_bound >= cutoff {
                cutoff_hit = true;
                break;
            }

            // unscaled residuals
            self.orig_a_times(&x_orig, &mut ax_o);
            let mut r_prim = 0.0f64;
            let mut ax_norm = 0.0f64;
            let mut z_norm = 0.0f64;
            for k in 0..m {
                let zk = z[k] / self.e_scale[k];
                r_prim = r_prim.max((ax_o[k] - zk).abs());
                ax_norm = ax_norm.max(ax_o[k].abs());
                z_norm = z_norm.max(zk.abs());
            }
            self.p_times(&x_orig, &mut px);
            let yo = DVector::from_column_slice(&y_orig);
            Self::cols_times(&self.cols, &yo, &mut aty);
            let mut r_dual = 0.0f64;
            let mut px_norm = 0.0f64;
            let mut aty_norm = 0.0f64;
            let mut q_norm = 0.0f64;
            for v in 0..n {
                r_dual = r_dual.max((px[v] + self.q[v] + aty[v]).abs());
                px_norm = px_norm.max(px[v].abs());
                aty_norm = aty_norm.max(aty[v].abs());
                q_norm = q_norm.max(self.q[v].abs());
            }
            let eps_prim = settings.abs_tol + settings.rel_tol * ax_norm.max(z_norm);
            let eps_dual = settings.abs_tol + settings.rel_tol * px_norm.max(aty_norm).max(q_norm);
            if r_prim <= eps_prim && r_dual <= eps_dual {
                converged = true;
                break;
            }
            if deadline.is_some_and(|d| std::time::Instant::now() >= d) {
                break;
            }
        }

        for v in 0..n {
            x_orig[v] = x[v] * self.d_scale[v];
        }
        for k in 0..m {
            y_orig[k] = y[k] * self.e_scale[k] / self.cost_scale;
        }
        let primal_value = self.objective_at(&x_orig);
        QpOutcome {
            x: x_orig,
            y: y_orig,
            primal_value,
            dual_bound: best_bound,
            iterations,
            converged,
            cutoff_hit,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // One block, two coefficients, one binary; the binary gates both
    // coefficients through big-M rows.
    fn gated_problem(big_m: f64) -> QpData {
        let c = DMatrix::from_row_slice(2, 2, &[1.25, 0.5, 0.5, 1.25]);
        let b = DVector::from_vec(vec![0.9, 0.4]);
        let mut rows = Vec::new();
        // link rows: alpha_e - M z <= 0 and alpha_e + M z >= 0
        for e in 0..2usize {
            rows.push(SparseRow {
                terms: vec![(e, 1.0), (2, -big_m)],
                lower: f64::NEG_INFINITY,
                upper: 0.0,
                eq: false,
            });
            rows.push(SparseRow {
                terms: vec![(e, 1.0), (2, big_m)],
                lower: 0.0,
                upper: f64::INFINITY,
                eq: false,
            });
            rows.push(SparseRow { terms: vec![(e, 1.0)], lower: -big_m, upper: big_m, eq: false });
        }
        // z box row (index 6)
        rows.push(SparseRow { terms: vec![(2, 1.0)], lower: 0.0, upper: 1.0, eq: false });
        QpData {
            block_dim: 2,
            blocks: vec![QpBlock { weight: 0.8, b }],
            c_matrix: c,
            n_binary: 1,
            rows,
            constant: 0.8, // w * phi with phi = 1
        }
    }

    fn z_box_rows() -> Vec<usize> {
        vec![6]
    }

    #[test]
    fn unconstrained_block_minimum() {
        // z fixed at 1 frees the coefficients: minimum is w*(phi - b'C^-1 b).
        let data = gated_problem(10.0);
        let c = data.c_matrix.clone();
        let b = data.blocks[0].b.clone();
        let engine = QpEngine::new(data).unwrap();
        let (mut lo, mut hi) = engine.default_bounds();
        lo[6] = 1.0;
        hi[6] = 1.0;
        let out = engine.solve(&lo, &hi, &z_box_rows(), None, &QpSettings::default(), 20_000, f64::INFINITY);
        assert!(out.converged, "iterations {}", out.iterations);

        let alpha = c.clone().cholesky().unwrap().solve(&b);
        let expected = 0.8 * (1.0 - b.dot(&alpha));
        assert_relative_eq!(out.primal_value, expected, epsilon = 1e-6);
        assert!(out.dual_bound <= expected + 1e-7);
        assert!(out.dual_bound >= expected - 1e-5);
        assert_relative_eq!(out.x[2], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn zero_fixing_forces_prior_value() {
        // z fixed at 0 forces both coefficients to zero: value is w*phi.
        let data = gated_problem(10.0);
        let engine = QpEngine::new(data).unwrap();
        let (mut lo, mut hi) = engine.default_bounds();
        lo[6] = 0.0;
        hi[6] = 0.0;
        // exact fixing of the gated coefficients (their identity rows)
        for row in [2usize, 5] {
            lo[row] = 0.0;
            hi[row] = 0.0;
        }
        let out = engine.solve(&lo, &hi, &z_box_rows(), None, &QpSettings::default(), 20_000, f64::INFINITY);
        assert!(out.converged);
        assert_relative_eq!(out.primal_value, 0.8, epsilon = 1e-6);
        assert!(out.dual_bound <= 0.8 + 1e-7);
        assert!(out.dual_bound >= 0.8 - 1e-5);
    }

    #[test]
    fn relaxation_lower_bounds_both_completions() {
        // Free z in [0,1]: the relaxation value must sit at or below both
        // integer completions.
        let data = gated_problem(10.0);
        let engine = QpEngine::new(data).unwrap();
        let (lo, hi) = engine.default_bounds();
        let out = engine.solve(&lo, &hi, &z_box_rows(), None, &QpSettings::default(), 20_000, f64::INFINITY);
        assert!(out.converged);
        // completions computed in the two tests above
        assert!(out.dual_bound <= 0.8 + 1e-7);
        let c = DMatrix::from_row_slice(2, 2, &[1.25, 0.5, 0.5, 1.25]);
        let b = DVector::from_vec(vec![0.9, 0.4]);
        let alpha = c.cholesky().unwrap().solve(&b);
        let z1 = 0.8 * (1.0 - b.dot(&alpha));
        assert!(out.dual_bound <= z1 + 1e-7);
    }

    #[test]
    fn warm_start_converges_faster() {
        let data = gated_problem(10.0);
        let engine = QpEngine::new(data).unwrap();
        let (mut lo, mut hi) = engine.default_bounds();
        lo[6] = 1.0;
        hi[6] = 1.0;
        let cold = engine.solve(&lo, &hi, &z_box_rows(), None, &QpSettings::default(), 20_000, f64::INFINITY);
        let warm = QpWarmStart { x: cold.x.clone(), y: cold.y.clone() };
        let hot =
            engine.solve(&lo, &hi, &z_box_rows(), Some(&warm), &QpSettings::default(), 20_000, f64::INFINITY);
        assert!(hot.converged);
        assert!(hot.iterations <= cold.iterations);
    }

    #[test]
    fn cutoff_short_circuits() {
        let data = gated_problem(10.0);
        let engine = QpEngine::new(data).unwrap();
        let (mut lo, mut hi) = engine.default_bounds();
        // force z = 0 so the value is 0.8, then pass a cutoff below it
        lo[6] = 0.0;
        hi[6] = 0.0;
        for row in [2usize, 5] {
            lo[row] = 0.0;
            hi[row] = 0.0;
        }
        let out = engine.solve(&lo, &hi, &z_box_rows(), None, &QpSettings::default(), 20_000, 0.5);
        assert!(out.cutoff_hit);
        assert!(out.dual_bound >= 0.5);
    }

    #[test]
    fn binary_only_problem_is_handled() {
        // no objective blocks at all: any feasible point is optimal at c0
        let rows = vec![
            SparseRow { terms: vec![(0, 1.0)], lower: 0.0, upper: 1.0, eq: false },
            SparseRow { terms: vec![(1, 1.0)], lower: 0.0, upper: 1.0, eq: false },
            SparseRow { terms: vec![(0, 1.0), (1, 1.0)], lower: 1.0, upper: 1.0, eq: true },
        ];
        let data = QpData {
            block_dim: 0,
            blocks: vec![],
            c_matrix: DMatrix::zeros(0, 0),
            n_binary: 2,
            rows,
            constant: 3.5,
        };
        let engine = QpEngine::new(data).unwrap();
        let (lo, hi) = engine.default_bounds();
        let out = engine.solve(&lo, &hi, &[0, 1], None, &QpSettings::default(), 20_000, f64::INFINITY);
        assert!(out.converged);
        assert_relative_eq!(out.primal_value, 3.5);
        assert!((out.x[0] + out.x[1] - 1.0).abs() < 1e-6);
        assert!(out.dual_bound <= 3.5 + 1e-9);
    }
}
