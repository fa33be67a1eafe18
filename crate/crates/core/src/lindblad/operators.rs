//! Truncated Fock-space ladder operators on the photon ⊗ phonon product.
//!
//! Product index of `|n_a, n_b⟩` is `n_a · n_phon + n_b`.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use super::HilbertConfig;

/// Single-mode annihilation operator, `√n` on the first superdiagonal.
pub fn destroy(dim: usize) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(dim, dim);
    for n in 1..dim {
        coo.push(n - 1, n, (n as f64).sqrt());
    }
    CsrMatrix::from(&coo)
}

pub fn identity(dim: usize) -> CsrMatrix<f64> {
    CsrMatrix::identity(dim)
}

pub fn kron(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let (br, bc) = (b.nrows(), b.ncols());
    let mut coo = CooMatrix::new(a.nrows() * br, a.ncols() * bc);
    for (i, j, &va) in a.triplet_iter() {
        for (k, l, &vb) in b.triplet_iter() {
            coo.push(i * br + k, j * bc + l, va * vb);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn transpose(m: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    m.transpose()
}

/// Drops explicit zeros left behind by cancelling sums.
pub(crate) fn prune(m: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for (i, j, &v) in m.triplet_iter() {
        if v != 0.0 {
            coo.push(i, j, v);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn to_dense(m: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, &v) in m.triplet_iter() {
        d[(i, j)] += v;
    }
    d
}

/// Annihilation operators of the composite space: `a ⊗ 1` and `1 ⊗ b`.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: CsrMatrix<f64>,
    pub b: CsrMatrix<f64>,
}

pub fn build_operators(h: &HilbertConfig) -> Operators {
    Operators {
        a: kron(&destroy(h.n_phot), &identity(h.n_phon)),
        b: kron(&identity(h.n_phot), &destroy(h.n_phon)),
    }
}
