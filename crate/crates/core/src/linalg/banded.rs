use super::{norm2, CsrMatrix, LinearStats};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting in LAPACK-style column-major band
/// storage. Row interchanges widen the upper band to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        // element (r, c) of the band with kv = kl + ku super-diagonals
        (self.kl + self.ku + r - c) + c * self.ldab
    }

    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
            ipiv: vec![0; n],
        };
        for r in 0..n {
            for (c, v) in a.row(r) {
                let k = lu.at(r, c);
                lu.ab[k] = v;
            }
        }
        let scale = lu.ab.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let kv = kl + ku;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = lu.ab[col].abs();
            for i in 1..=km {
                let v = lu.ab[col + i].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            lu.ipiv[j] = j + jp;
            if best <= f64::EPSILON * scale * 1e-6 || best == 0.0 {
                return Err(Error::Singular(format!(
                    "zero pivot in column {j} of a {n}x{n} banded system"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let p = lu.at(j, c);
                    let q = lu.at(j + jp, c);
                    lu.ab.swap(p, q);
                }
            }
            let piv = lu.ab[col];
            for i in 1..=km {
                lu.ab[col + i] /= piv;
            }
            for c in j + 1..=ju {
                let ajc = lu.ab[lu.at(j, c)];
                if ajc == 0.0 {
                    continue;
                }
                let base = lu.at(j, c);
                for i in 1..=km {
                    let l = lu.ab[col + i];
                    lu.ab[base + i] -= l * ajc;
                }
            }
        }
        Ok(lu)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let col = j * self.ldab + kv;
            let bj = b[j];
            if bj != 0.0 {
                for i in 1..=km {
                    b[j + i] -= self.ab[col + i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * self.ldab + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.ab[col - (j - i)] * bj;
                }
            }
        }
    }

    /// Solve followed by up to `max_refine` rounds of iterative refinement.
    pub fn solve_refined(
        &self,
        a: &CsrMatrix,
        b: &[f64],
        tol: f64,
        max_refine: usize,
    ) -> Result<(Vec<f64>, LinearStats)> {
        let bn = norm2(b);
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        let mut rel = norm2(&a.residual(&x, b)) / bn;
        let mut rounds = 0;
        while rel > tol && rounds < max_refine {
            let mut d = a.residual(&x, b);
            self.solve_in_place(&mut d);
            x.iter_mut().zip(&d).for_each(|(xi, di)| *xi += di);
            rel = norm2(&a.residual(&x, b)) / bn;
            rounds += 1;
        }
        if !rel.is_finite() || rel > tol {
            return Err(Error::LinearStagnation {
                iters: rounds,
                residual: rel,
            });
        }
        Ok((
            x,
            LinearStats {
                iterations: rounds,
                relative_residual: rel,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::laplacian_like;
    use super::*;

    #[test]
    fn needs_pivoting() {
        // [[0, 1], [1, 1]] has a zero leading entry
        let mut a = CsrMatrix::with_capacity(2, 4);
        a.push_row(&mut [(1, 1.0)]);
        a.push_row(&mut [(0, 1.0), (1, 1.0)]);
        let lu = BandedLu::factor(&a).unwrap();
        let mut b = vec![2.0, 5.0];
        lu.solve_in_place(&mut b);
        assert_eq!(b, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let mut a = CsrMatrix::with_capacity(2, 4);
        a.push_row(&mut [(0, 1.0), (1, 1.0)]);
        a.push_row(&mut [(0, 2.0), (1, 2.0)]);
        assert!(matches!(BandedLu::factor(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn matches_matvec() {
        let a = laplacian_like(9, -0.4);
        let x: Vec<f64> = (0..a.n()).map(|k| (k as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let lu = BandedLu::factor(&a).unwrap();
        let (y, stats) = lu.solve_refined(&a, &b, 1e-13, 2).unwrap();
        assert!(stats.relative_residual <= 1e-13);
        let err = x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-12, "{err}");
    }
}
