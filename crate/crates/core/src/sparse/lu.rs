//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Columns are visited in a fill-reducing order; within a column the diagonal entry is
//! preferred as pivot when it is within `pivot_tol` of the largest candidate, which keeps
//! the predicted fill for symmetric-pattern matrices while still pivoting on saddle-point
//! blocks with zero diagonals.

use super::{minimum_degree, reverse_cuthill_mckee, CsrMatrix};
use crate::error::{Error, Result};

/// What to do with a numerically zero pivot column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NullPivotPolicy {
    /// Report [`Error::SingularMatrix`].
    Error,
    /// Drop the offending equation and fix the corresponding unknown to zero. For a
    /// consistent singular system this yields one particular solution.
    FixToZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillOrdering {
    MinimumDegree,
    ReverseCuthillMcKee,
    Natural,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LuOptions {
    pub ordering: FillOrdering,
    /// Diagonal preference threshold in (0, 1]; 1 is plain partial pivoting.
    pub pivot_tol: f64,
    /// A column whose best remaining pivot is below `null_tol` times its original largest
    /// entry is treated as singular.
    pub null_tol: f64,
    pub null_pivot: NullPivotPolicy,
}

impl Default for LuOptions {
    fn default() -> Self {
        Self {
            ordering: FillOrdering::MinimumDegree,
            pivot_tol: 0.1,
            null_tol: 1e-12,
            null_pivot: NullPivotPolicy::Error,
        }
    }
}

/// Ordering and pattern of an analyzed matrix; reused by [`SparseLu::refactor`].
#[derive(Clone, Debug)]
pub struct Symbolic {
    n: usize,
    q: Vec<usize>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Symbolic {
    pub fn analyze(a: &CsrMatrix, ordering: FillOrdering) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let q = match ordering {
            FillOrdering::MinimumDegree => minimum_degree(a),
            FillOrdering::ReverseCuthillMcKee => reverse_cuthill_mckee(a),
            FillOrdering::Natural => (0..a.nrows()).collect(),
        };
        Ok(Self {
            n: a.nrows(),
            q,
            row_ptr: a.row_ptr().to_vec(),
            col_idx: a.col_idx().to_vec(),
        })
    }

    pub fn matches(&self, a: &CsrMatrix) -> bool {
        a.nrows() == self.n && a.row_ptr() == self.row_ptr.as_slice() && a.col_idx() == self.col_idx.as_slice()
    }

    pub fn column_order(&self) -> &[usize] {
        &self.q
    }
}

/// Numeric factorization P A Q = L U.
#[derive(Clone, Debug)]
pub struct SparseLu {
    symbolic: Symbolic,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    null: Vec<bool>,
    opts: LuOptions,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_with(a, LuOptions::default())
    }

    pub fn factor_with(a: &CsrMatrix, opts: LuOptions) -> Result<Self> {
        let symbolic = Symbolic::analyze(a, opts.ordering)?;
        Self::numeric(symbolic, a, opts)
    }

    /// Refactors a matrix with the same pattern, reusing the ordering.
    pub fn refactor_with(symbolic: &Symbolic, a: &CsrMatrix, opts: LuOptions) -> Result<Self> {
        if !symbolic.matches(a) {
            return Err(Error::PatternMismatch);
        }
        Self::numeric(symbolic.clone(), a, opts)
    }

    /// Refactors `a` reusing this factorization's ordering and options.
    pub fn refactor(&self, a: &CsrMatrix) -> Result<Self> {
        Self::refactor_with(&self.symbolic, a, self.opts)
    }

    pub fn symbolic(&self) -> &Symbolic {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    /// Number of pivots handled by [`NullPivotPolicy::FixToZero`].
    pub fn null_pivots(&self) -> usize {
        self.null.iter().filter(|&&b| b).count()
    }

    pub fn nnz_factors(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    fn numeric(symbolic: Symbolic, a: &CsrMatrix, opts: LuOptions) -> Result<Self> {
        let n = symbolic.n;
        // CSR of A^T is CSC of A.
        let at = a.transpose();
        let q = &symbolic.q;
        let unset = usize::MAX;
        let mut pinv = vec![unset; n];
        let mut lp = Vec::with_capacity(n + 1);
        let mut up = Vec::with_capacity(n + 1);
        let mut li = Vec::with_capacity(4 * a.nnz());
        let mut lx = Vec::with_capacity(4 * a.nnz());
        let mut ui = Vec::with_capacity(4 * a.nnz());
        let mut ux = Vec::with_capacity(4 * a.nnz());
        let mut null = vec![false; n];
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut next_free_row = 0usize;
        lp.push(0);
        up.push(0);
        for k in 0..n {
            let col = q[k];
            let (brows, bvals) = at.row(col);
            let colmax = bvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // Reach of the column's pattern in the graph of L.
            let mut top = n;
            for &b in brows {
                if mark[b] == k {
                    continue;
                }
                let mut head: isize = 0;
                stack[0] = b;
                while head >= 0 {
                    let j = stack[head as usize];
                    let jn = pinv[j];
                    if mark[j] != k {
                        mark[j] = k;
                        pstack[head as usize] = if jn == unset { 0 } else { lp[jn] + 1 };
                    }
                    let mut done = true;
                    let p2 = if jn == unset { 0 } else { lp[jn + 1] };
                    let mut p = pstack[head as usize];
                    while p < p2 {
                        let i = li[p];
                        if mark[i] == k {
                            p += 1;
                            continue;
                        }
                        pstack[head as usize] = p + 1;
                        head += 1;
                        stack[head as usize] = i;
                        done = false;
                        break;
                    }
                    if done {
                        head -= 1;
                        top -= 1;
                        xi[top] = j;
                    }
                }
            }
            for &i in &xi[top..n] {
                x[i] = 0.0;
            }
            for (&r, &v) in brows.iter().zip(bvals) {
                x[r] = v;
            }
            for px in top..n {
                let j = xi[px];
                let jn = pinv[j];
                if jn == unset {
                    continue;
                }
                let xj = x[j];
                for p in lp[jn] + 1..lp[jn + 1] {
                    x[li[p]] -= lx[p] * xj;
                }
            }
            // Pivot search.
            let mut ipiv = unset;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == unset {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    ui.push(pinv[i]);
                    ux.push(x[i]);
                }
            }
            let is_null = ipiv == unset || amax <= opts.null_tol * colmax || colmax == 0.0;
            if is_null {
                if opts.null_pivot == NullPivotPolicy::Error {
                    return Err(Error::SingularMatrix { step: k, column: col });
                }
                // Pick an unpivoted row, preferring the diagonal.
                let r = if pinv[col] == unset {
                    col
                } else {
                    while pinv[next_free_row] != unset {
                        next_free_row += 1;
                    }
                    next_free_row
                };
                null[k] = true;
                ui.push(k);
                ux.push(1.0);
                pinv[r] = k;
                li.push(r);
                lx.push(1.0);
                for &i in &xi[top..n] {
                    x[i] = 0.0;
                }
            } else {
                if pinv[col] == unset && x[col].abs() >= opts.pivot_tol * amax {
                    ipiv = col;
                }
                let pivot = x[ipiv];
                ui.push(k);
                ux.push(pivot);
                pinv[ipiv] = k;
                li.push(ipiv);
                lx.push(1.0);
                for &i in &xi[top..n] {
                    if pinv[i] == unset {
                        li.push(i);
                        lx.push(x[i] / pivot);
                    }
                    x[i] = 0.0;
                }
            }
            lp.push(li.len());
            up.push(ui.len());
        }
        for r in li.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { symbolic, pinv, lp, li, lx, up, ui, ux, null, opts })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n, "LU solve: right-hand side has wrong length");
        assert_eq!(out.len(), n, "LU solve: output has wrong length");
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let dpos = self.up[j + 1] - 1;
            if self.null[j] {
                y[j] = 0.0;
                continue;
            }
            y[j] /= self.ux[dpos];
            let yj = y[j];
            if yj != 0.0 {
                for p in self.up[j]..dpos {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        for k in 0..n {
            out[self.symbolic.q[k]] = y[k];
        }
    }
}
