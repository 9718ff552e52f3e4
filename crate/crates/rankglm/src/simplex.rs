//! Self-contained dense two-phase primal simplex for small linear programs.
//!
//! Solves `min c'z  subject to  A z <= b, z >= 0` on a dense tableau.
//! Rows with a negative right-hand side get an artificial variable and a
//! phase-1 feasibility solve. Pivoting uses Dantzig's rule (most negative
//! reduced cost) and falls back to Bland's rule after an iteration threshold
//! so cycling cannot run away. Scale: hundreds of variables/constraints,
//! which is all the nuisance-direction program ever needs.

use ndarray::{Array2, ArrayView1};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub status: LpStatus,
    /// Primal point (best found; meaningful for Optimal and MaxIter).
    pub z: Vec<f64>,
    /// c'z at `z`. Production callers recompute what they need from `z`;
    /// the unit tests check this directly.
    #[allow(dead_code)]
    pub objective: f64,
}

const EPS: f64 = 1e-10;

struct Tableau {
    /// (m constraint rows + 1 objective row) x (cols + 1 rhs column).
    t: Array2<f64>,
    m: usize,
    /// Pivotable columns (z variables + slacks; artificials are excluded
    /// once phase 1 ends).
    pivotable: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn obj_row(&self) -> ArrayView1<'_, f64> {
        self.t.row(self.m)
    }

    /// Entering column, or None when no reduced cost is negative.
    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = self.obj_row();
        if bland {
            (0..self.pivotable).find(|&j| obj[j] < -EPS)
        } else {
            let mut best = None;
            let mut best_val = -EPS;
            for j in 0..self.pivotable {
                if obj[j] < best_val {
                    best_val = obj[j];
                    best = Some(j);
                }
            }
            best
        }
    }

    /// Ratio test: leaving row, or None when the column is unbounded below.
    /// Ties break toward the smallest basic-variable index (Bland-safe).
    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs = self.rhs_col();
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.t[[i, col]];
            if a > EPS {
                let ratio = self.t[[i, rhs]] / a;
                let better = match pick {
                    None => true,
                    Some((pi, pr)) => {
                        ratio < pr - EPS || (ratio < pr + EPS && self.basis[i] < self.basis[pi])
                    }
                };
                if better {
                    pick = Some((i, ratio));
                }
            }
        }
        pick.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.t.ncols();
        let pv = self.t[[row, col]];
        for j in 0..ncols {
            self.t[[row, j]] /= pv;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let factor = self.t[[i, col]];
            if factor == 0.0 {
                continue;
            }
            let (mut target, source) = self.t.multi_slice_mut((
                ndarray::s![i, ..],
                ndarray::s![row, ..],
            ));
            target.scaled_add(-factor, &source);
        }
        self.basis[row] = col;
    }

    /// Run pivots until optimal/unbounded/budget-exhausted.
    fn optimize(&mut self, max_iter: usize) -> LpStatus {
        let bland_after = 200 + 5 * (self.t.ncols() + self.m);
        for iter in 0..max_iter {
            let Some(col) = self.entering(iter > bland_after) else {
                return LpStatus::Optimal;
            };
            let Some(row) = self.leaving(col) else {
                return LpStatus::Unbounded;
            };
            self.pivot(row, col);
        }
        LpStatus::MaxIter
    }
}

/// Solve `min c'z : A z <= b, z >= 0` (A is m x n, z length n).
pub(crate) fn solve_lp(c: &[f64], a: &Array2<f64>, b: &[f64], max_iter: usize) -> LpSolution {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(c.len(), n, "objective length mismatch");
    assert_eq!(b.len(), m, "rhs length mismatch");

    let art_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = art_rows.len();
    let ncols = n + m + k + 1;
    let mut t = Array2::<f64>::zeros((m + 1, ncols));
    let mut basis = vec![0usize; m];

    // Constraint rows: A z + s = b, with negative-rhs rows negated and given
    // an artificial so the starting basis is feasible.
    let mut art_of_row = vec![usize::MAX; m];
    for (ai, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = n + m + ai;
    }
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[[i, j]] = flip * a[[i, j]];
        }
        t[[i, n + i]] = flip;
        t[[i, ncols - 1]] = flip * b[i];
        if b[i] < 0.0 {
            t[[i, art_of_row[i]]] = 1.0;
            basis[i] = art_of_row[i];
        } else {
            basis[i] = n + i;
        }
    }

    let mut tab = Tableau {
        t,
        m,
        pivotable: n + m,
        basis,
    };

    // Phase 1: minimize the artificial sum (objective row = -sum of
    // artificial rows, so basic artificials have reduced cost 0).
    if k > 0 {
        for &i in &art_rows {
            let (mut obj, row) = tab
                .t
                .multi_slice_mut((ndarray::s![m, ..], ndarray::s![i, ..]));
            obj.scaled_add(-1.0, &row);
        }
        // Artificials themselves carry cost 1.
        for ai in 0..k {
            tab.t[[m, n + m + ai]] += 1.0;
        }
        let status = tab.optimize(max_iter);
        if status == LpStatus::MaxIter {
            return LpSolution {
                status,
                z: extract(&tab, n),
                objective: dot(c, &extract(&tab, n)),
            };
        }
        let resid = -tab.t[[m, ncols - 1]];
        let scale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if resid > 1e-8 * scale {
            return LpSolution {
                status: LpStatus::Infeasible,
                z: vec![0.0; n],
                objective: 0.0,
            };
        }
        // Pivot any leftover basic artificial out at zero level when the row
        // has a usable column; an all-zero row is a redundant constraint and
        // can keep its artificial (it stays at zero: every pivot scales this
        // row by its zero pivot-column entry).
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| tab.t[[i, j]].abs() > EPS) {
                    tab.pivot(i, col);
                }
            }
        }
    }

    // Phase 2: rebuild the objective row for c, zeroing basic reduced costs.
    for j in 0..ncols {
        tab.t[[m, j]] = 0.0;
    }
    for j in 0..n {
        tab.t[[m, j]] = c[j];
    }
    for i in 0..m {
        let bj = tab.basis[i];
        if bj >= n + m {
            continue; // leftover artificial, basic at zero with cost 0
        }
        let factor = tab.t[[m, bj]];
        if factor != 0.0 {
            let (mut obj, row) = tab
                .t
                .multi_slice_mut((ndarray::s![m, ..], ndarray::s![i, ..]));
            obj.scaled_add(-factor, &row);
        }
    }
    let status = tab.optimize(max_iter);
    let z = extract(&tab, n);
    let objective = dot(c, &z);
    LpSolution {
        status,
        z,
        objective,
    }
}

fn extract(tab: &Tableau, n: usize) -> Vec<f64> {
    let rhs = tab.rhs_col();
    let mut z = vec![0.0; n];
    for i in 0..tab.m {
        if tab.basis[i] < n {
            z[tab.basis[i]] = tab.t[[i, rhs]];
        }
    }
    z
}

fn dot(c: &[f64], z: &[f64]) -> f64 {
    c.iter().zip(z.iter()).map(|(a, b)| a * b).sum()
}
