//! Shared numerical linear algebra: Hermitian eigensolves, propagators, a
//! Lanczos stepper for large sectors, and a minimal CSR container for the
//! extended-space matrices.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::NumericsError;
use crate::{C64, Real};

/// Dense Hermitian eigendecomposition (ascending eigenvalues).
pub fn eigh(h: &Array2<C64>) -> Result<(Array1<Real>, Array2<C64>), NumericsError> {
    h.eigh(UPLO::Lower)
        .map_err(|e| NumericsError::Eigen(e.to_string()))
}

/// Largest dimension for which dense eigensolvers are used by default.
pub const DENSE_EIG_LIMIT: usize = 4096;

/// Spectral data of a Hermitian operator, cached for repeated propagation.
pub struct Spectrum {
    pub energies: Array1<Real>,
    pub states: Array2<C64>,
}

impl Spectrum {
    pub fn of(h: &Array2<C64>) -> Result<Self, NumericsError> {
        let (energies, states) = eigh(h)?;
        Ok(Self { energies, states })
    }

    /// exp(−i H t) ψ through the eigenbasis.
    pub fn propagate(&self, psi: &Array1<C64>, t: Real) -> Array1<C64> {
        let coeff = self.states.t().mapv(|z| z.conj()).dot(psi);
        let rotated = &coeff * &self.energies.mapv(|e| (-C64::i() * e * t).exp());
        self.states.dot(&rotated)
    }
}

/// One Lanczos (Krylov) step of exp(−i H dt) ψ using `m` basis vectors.
///
/// `apply` computes H·v. Hermitian three-term recurrence with full
/// orthogonality assumed over the short Krylov span used here.
pub fn lanczos_expm_apply<F>(
    apply: F,
    psi: &Array1<C64>,
    dt: Real,
    m: usize,
) -> Result<Array1<C64>, NumericsError>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let n = psi.len();
    let m = m.min(n);
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return Ok(psi.clone());
    }
    let mut vs: Vec<Array1<C64>> = Vec::with_capacity(m);
    vs.push(psi / C64::new(beta0, 0.0));
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m.saturating_sub(1));

    for k in 0..m {
        let mut w = apply(&vs[k]);
        let alpha = dot(&vs[k], &w).re;
        alphas.push(alpha);
        w = w - &vs[k] * C64::new(alpha, 0.0);
        if k > 0 {
            let b = betas[k - 1];
            w = w - &vs[k - 1] * C64::new(b, 0.0);
        }
        // one reorthogonalization pass keeps the small Krylov space clean
        for v in &vs {
            let c = dot(v, &w);
            w = w - v * c;
        }
        if k + 1 < m {
            let beta = norm(&w);
            if beta < 1e-14 {
                break;
            }
            betas.push(beta);
            vs.push(w / C64::new(beta, 0.0));
        }
    }

    let kdim = vs.len();
    let mut tmat = Array2::<C64>::zeros((kdim, kdim));
    for i in 0..kdim {
        tmat[[i, i]] = C64::new(alphas[i], 0.0);
        if i + 1 < kdim {
            tmat[[i, i + 1]] = C64::new(betas[i], 0.0);
            tmat[[i + 1, i]] = C64::new(betas[i], 0.0);
        }
    }
    let spec = Spectrum::of(&tmat)?;
    let mut e1 = Array1::<C64>::zeros(kdim);
    e1[0] = C64::new(beta0, 0.0);
    let small = spec.propagate(&e1, dt);

    let mut out = Array1::<C64>::zeros(n);
    for (v, c) in vs.iter().zip(small.iter()) {
        out = out + v * *c;
    }
    Ok(out)
}

#[inline]
pub fn norm(v: &Array1<C64>) -> Real {
    v.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt()
}

#[inline]
pub fn dot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Compressed sparse row matrix over complex entries.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
}

impl Csr {
    /// Build from unsorted triplets; duplicate entries are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let Some(last) = merged.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            merged.push((r, c, v));
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = merged.iter().map(|t| t.1).collect();
        let values = merged.iter().map(|t| t.2).collect();
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &Array1<C64>) -> Array1<C64> {
        let mut y = Array1::<C64>::zeros(self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// Densify (small matrices only).
    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::<C64>::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[[r, self.col_idx[k]]] += self.values[k];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn test_h() -> Array2<C64> {
        array![
            [C64::new(1.0, 0.0), C64::new(0.2, -0.4), C64::new(0.0, 0.0)],
            [C64::new(0.2, 0.4), C64::new(-0.5, 0.0), C64::new(0.1, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.1, 0.0), C64::new(0.3, 0.0)],
        ]
    }

    #[test]
    fn spectral_propagation_is_unitary() {
        let h = test_h();
        let spec = Spectrum::of(&h).unwrap();
        let psi = Array1::from(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ]);
        let out = spec.propagate(&psi, 7.3);
        assert!((norm(&out) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lanczos_matches_dense_propagation() {
        let h = test_h();
        let psi = Array1::from(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ]);
        let dense = Spectrum::of(&h).unwrap().propagate(&psi, 0.9);
        let kry = lanczos_expm_apply(|v| h.dot(v), &psi, 0.9, 3).unwrap();
        let diff: f64 = dense.iter().zip(kry.iter()).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-12, "diff = {diff:e}");
    }

    #[test]
    fn csr_matvec_matches_dense() {
        let triplets = vec![
            (0, 1, C64::new(1.0, 2.0)),
            (2, 0, C64::new(-0.5, 0.0)),
            (0, 1, C64::new(0.5, 0.0)), // duplicate, summed
            (1, 2, C64::new(0.0, 1.0)),
        ];
        let m = Csr::from_triplets(3, 3, triplets);
        let x = Array1::from(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 1.0)]);
        let y = m.matvec(&x);
        let yd = m.to_dense().dot(&x);
        for (a, b) in y.iter().zip(yd.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(m.nnz(), 3);
    }
}
