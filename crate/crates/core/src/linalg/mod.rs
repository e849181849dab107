//! Sparse linear solvers for the structured stencil systems.
//!
//! Matrices are assembled in CSR form. Two solvers are provided: a banded
//! LU factorization with partial pivoting (the default, exploiting the
//! natural bandwidth of row-major stencil orderings) and ILU(0)-preconditioned
//! BiCGStab. Both are deterministic for fixed inputs.

mod banded;
mod krylov;

pub use banded::BandedLu;
pub use krylov::{bicgstab, Ilu0};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearMethod {
    #[default]
    BandedLu,
    Bicgstab,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub method: LinearMethod,
    /// Target relative residual `‖b − Ax‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LinearStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, Default)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Append the next row. Entries are sorted and duplicate columns summed;
    /// exact zeros are kept so the sparsity pattern is stable.
    pub fn push_row(&mut self, entries: &mut [(usize, f64)]) {
        entries.sort_unstable_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in entries.iter() {
            debug_assert!(c < self.n);
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += v;
            } else {
                self.cols.push(c);
                self.vals.push(v);
                last = Some(c);
            }
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[s..e].iter().copied().zip(self.vals[s..e].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.1)
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = self.matvec(x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` to the requested relative residual.
///
/// `x0` is used as the Krylov starting guess and ignored by the direct path.
pub fn solve(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: &LinearOptions) -> Result<(Vec<f64>, LinearStats)> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} entries for a {}-row system",
            b.len(),
            a.n()
        )));
    }
    if norm2(b) == 0.0 {
        return Ok((vec![0.0; a.n()], LinearStats::default()));
    }
    match opts.method {
        LinearMethod::BandedLu => {
            let lu = BandedLu::factor(a)?;
            lu.solve_refined(a, b, opts.tol, 3)
        }
        LinearMethod::Bicgstab => {
            let pre = Ilu0::new(a)?;
            bicgstab(a, b, x0, &pre, opts.tol, opts.max_iters)
        }
    }
}
