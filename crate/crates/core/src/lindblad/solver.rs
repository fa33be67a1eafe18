//! Steady-state solvers.
//!
//! Small problems use dense LU on the explicit superoperator with one
//! redundant row replaced by the trace functional.
//!
//! Larger ones never form the superoperator. Photon parity is conserved
//! (every term of K and A changes the photon number by an even amount, and
//! the jump `a` maps the even sector onto the odd one), so ρ is block
//! diagonal in parity and the unknowns are the two blocks. The system
//!
//! ```text
//! L̃(ρ) = L(ρ) + tr(ρ)·E_rr = E_rr
//! ```
//!
//! is nonsingular and its solution has unit trace. It is solved by GMRES,
//! right-preconditioned with the inverse of the jump-free part
//! `ρ ↦ Aρ + ρAᵀ`. Each application of that inverse is a Lyapunov solve,
//! done by Bartels–Stewart on a complex Schur form of the parity block of A.

use nalgebra::{Complex, DMatrix, Schur, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::liouvillian::{build_liouvillian, dense, Liouvillian};
use super::shanks::{shanks, ShanksResult};
use super::state::{DensityMatrix, Diagnostics, Observables};
use super::{HilbertConfig, PhononFrame};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Total dimension up to which `Method::Auto` picks the direct solver.
pub const DIRECT_MAX_DIM: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Required `‖L(ρ)‖_F / ‖ρ‖_F`.
    pub residual_tol: f64,
    pub gmres_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Clip negative eigenvalues after symmetrization.
    pub clip_negative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            residual_tol: 1e-9,
            gmres_tol: 1e-12,
            restart: 200,
            max_iter: 3000,
            clip_negative: true,
        }
    }
}

pub fn steady_state(l: &Liouvillian, opts: &SolverOptions) -> Result<DensityMatrix> {
    let d = l.dim();
    let direct = match opts.method {
        Method::Direct => true,
        Method::Iterative => false,
        Method::Auto => d <= DIRECT_MAX_DIM,
    };
    let (raw, iterations) = if direct {
        (solve_direct(l)?, 1)
    } else {
        solve_iterative(l, opts)?
    };
    finish(l, raw, iterations, opts)
}

/// Row of the trace constraint: the diagonal position where `L` has the
/// largest diagonal magnitude, `|2A_rr + Σ_j (J_j)_rr²|`.
fn trace_row(l: &Liouvillian) -> usize {
    let d = l.dim();
    let mut diag = vec![0.0f64; d];
    for (i, j, &v) in l.a_eff.triplet_iter() {
        if i == j {
            diag[i] += 2.0 * v;
        }
    }
    for jump in &l.jumps {
        for (i, j, &v) in jump.triplet_iter() {
            if i == j {
                diag[i] += v * v;
            }
        }
    }
    (0..d)
        .max_by(|&x, &y| diag[x].abs().total_cmp(&diag[y].abs()))
        .unwrap_or(0)
}

fn solve_direct(l: &Liouvillian) -> Result<DMatrix<f64>> {
    let d = l.dim();
    let mut m = dense(&l.to_superoperator());
    let r = trace_row(l);
    let row = r + r * d;
    m.row_mut(row).fill(0.0);
    for i in 0..d {
        m[(row, i + i * d)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(d * d);
    rhs[row] = 1.0;
    let v = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver(format!("superoperator singular beyond its kernel (d = {d})")))?;
    Ok(DMatrix::from_column_slice(d, d, v.as_slice()))
}

fn finish(l: &Liouvillian, raw: DMatrix<f64>, iterations: usize, opts: &SolverOptions) -> Result<DensityMatrix> {
    let hermiticity_defect = (&raw - raw.transpose()).amax();
    let mut rho = (&raw + raw.transpose()) * 0.5;
    let tr = rho.trace();
    if !(tr.abs() > 0.0) || !tr.is_finite() {
        return Err(Error::Solver(format!("steady state has trace {tr}")));
    }
    rho /= tr;

    let (min_eigenvalue, clipped) = clip_blocks(&rho, &l.hilbert, opts.clip_negative);
    if min_eigenvalue < 0.0 {
        log::debug!("steady state min eigenvalue {min_eigenvalue:e} (clipped: {})", opts.clip_negative);
    }
    if hermiticity_defect > 1e-10 {
        log::warn!("raw steady state asymmetric by {hermiticity_defect:e}");
    }
    if let Some(c) = clipped {
        rho = c;
    }
    let residual = l.apply(&rho).norm() / rho.norm();
    if residual > opts.residual_tol {
        return Err(Error::Solver(format!(
            "residual {residual:e} above {:e} after {iterations} iterations (d = {})",
            opts.residual_tol,
            l.dim()
        )));
    }
    Ok(DensityMatrix {
        hilbert: l.hilbert,
        shift: l.shift,
        rho,
        hermiticity_defect,
        min_eigenvalue,
        residual,
        iterations,
    })
}

/// Minimum eigenvalue over the parity blocks, and the clipped,
/// renormalized matrix if anything was negative and clipping is on.
fn clip_blocks(rho: &DMatrix<f64>, h: &HilbertConfig, clip: bool) -> (f64, Option<DMatrix<f64>>) {
    let parity = Parity::new(h);
    let mut min = f64::INFINITY;
    let mut out = if clip { Some(DMatrix::zeros(rho.nrows(), rho.ncols())) } else { None };
    let mut any_negative = false;
    for p in 0..2 {
        let idx = &parity.index[p];
        let blk = DMatrix::from_fn(idx.len(), idx.len(), |i, j| rho[(idx[i], idx[j])]);
        let eig = SymmetricEigen::new(blk);
        let bmin = eig.eigenvalues.min();
        min = min.min(bmin);
        any_negative |= bmin < 0.0;
        if let Some(o) = out.as_mut() {
            let lam = eig.eigenvalues.map(|v| v.max(0.0));
            let fixed = &eig.eigenvectors * DMatrix::from_diagonal(&lam) * eig.eigenvectors.transpose();
            for i in 0..idx.len() {
                for j in 0..idx.len() {
                    o[(idx[i], idx[j])] = fixed[(i, j)];
                }
            }
        }
    }
    let out = out.filter(|_| any_negative).map(|o| {
        let t = o.trace();
        o / t
    });
    (min, out)
}

/// Product-basis indices split by photon parity.
struct Parity {
    index: [Vec<usize>; 2],
    /// position of each product index inside its block
    pos: Vec<usize>,
    block: Vec<usize>,
}

impl Parity {
    fn new(h: &HilbertConfig) -> Self {
        let d = h.total();
        let mut index = [Vec::new(), Vec::new()];
        let mut pos = vec![0; d];
        let mut block = vec![0; d];
        for i in 0..d {
            let p = (i / h.n_phon) % 2;
            pos[i] = index[p].len();
            block[i] = p;
            index[p].push(i);
        }
        Self { index, pos, block }
    }

    /// Sparse `(to, from)` blocks of an operator; empty blocks are dropped.
    fn split(&self, m: &CsrMatrix<f64>) -> Vec<(usize, usize, CsrMatrix<f64>)> {
        let mut coo: Vec<Vec<CooMatrix<f64>>> = (0..2)
            .map(|t| (0..2).map(|f| CooMatrix::new(self.index[t].len(), self.index[f].len())).collect())
            .collect();
        let mut used = [[false; 2]; 2];
        for (i, j, &v) in m.triplet_iter() {
            let (t, f) = (self.block[i], self.block[j]);
            coo[t][f].push(self.pos[i], self.pos[j], v);
            used[t][f] = true;
        }
        let mut out = Vec::new();
        for (t, row) in coo.iter().enumerate() {
            for (f, c) in row.iter().enumerate() {
                if used[t][f] {
                    out.push((t, f, CsrMatrix::from(c)));
                }
            }
        }
        out
    }
}

/// Inverse of `Y ↦ AY + YAᵀ` for one real block `A = Z T Z^H`.
///
/// `Z = Zr + iZi` is kept as two real matrices so every dense product runs
/// through the real GEMM kernel.
struct Lyapunov {
    zr: DMatrix<f64>,
    zi: DMatrix<f64>,
    /// Tᵀ, so rows of T are contiguous columns.
    tt: Vec<Complex64>,
    n: usize,
}

impl Lyapunov {
    fn new(a: &DMatrix<f64>, shift: f64) -> Result<Self> {
        let n = a.nrows();
        let ac = a.map(|v| Complex::new(v, 0.0)) - DMatrix::<Complex64>::identity(n, n) * Complex::new(shift, 0.0);
        let schur = Schur::try_new(ac, 1e-14, 100_000)
            .ok_or_else(|| Error::Solver(format!("Schur decomposition did not converge (block size {n})")))?;
        let (z, t) = schur.unpack();
        let tt = t.transpose().as_slice().to_vec();
        Ok(Self {
            zr: z.map(|c| c.re),
            zi: z.map(|c| c.im),
            tt,
            n,
        })
    }

    fn solve(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        // Z^H Q Z with Q real
        let (qzr, qzi) = (q * &self.zr, q * &self.zi);
        let re = self.zr.tr_mul(&qzr) + self.zi.tr_mul(&qzi);
        let im = self.zr.tr_mul(&qzi) - self.zi.tr_mul(&qzr);
        let qt: Vec<Complex64> = re.iter().zip(im.iter()).map(|(&r, &i)| Complex::new(r, i)).collect();
        let qs = &qt[..];
        let tt = &self.tt;
        // column-major Y, solved from the bottom-right corner
        let mut y = vec![Complex64::new(0.0, 0.0); n * n];
        for j in (0..n).rev() {
            let tj = &tt[j * n..(j + 1) * n]; // row j of T
            for i in (0..n).rev() {
                let ti = &tt[i * n..(i + 1) * n]; // row i of T
                let mut s = qs[i + j * n];
                let yj = &y[j * n..(j + 1) * n];
                for k in i + 1..n {
                    s -= ti[k] * yj[k];
                }
                for k in j + 1..n {
                    s -= y[i + k * n] * tj[k].conj();
                }
                y[i + j * n] = s / (ti[i] + tj[j].conj());
            }
        }
        // Re(Z Y Z^H) = P Zrᵀ + R Ziᵀ with Z Y = P + iR
        let yr = DMatrix::from_iterator(n, n, y.iter().map(|c| c.re));
        let yi = DMatrix::from_iterator(n, n, y.iter().map(|c| c.im));
        let p = &self.zr * &yr - &self.zi * &yi;
        let r = &self.zr * &yi + &self.zi * &yr;
        p * self.zr.transpose() + r * self.zi.transpose()
    }
}

struct BlockSystem {
    dims: [usize; 2],
    a: [CsrMatrix<f64>; 2],
    jumps: Vec<(usize, usize, CsrMatrix<f64>)>,
    lyap: [Lyapunov; 2],
    /// (block, position) of the trace-constraint diagonal entry
    r: (usize, usize),
}

impl BlockSystem {
    fn new(l: &Liouvillian) -> Result<Self> {
        let parity = Parity::new(&l.hilbert);
        let mut a_blocks = [None, None];
        for (t, f, m) in parity.split(&l.a_eff) {
            if t != f {
                return Err(Error::Solver("generator mixes photon parities".into()));
            }
            a_blocks[t] = Some(m);
        }
        let dims = [parity.index[0].len(), parity.index[1].len()];
        let a = [0, 1].map(|p| a_blocks[p].take().unwrap_or_else(|| CsrMatrix::zeros(dims[p], dims[p])));
        let jumps = l.jumps.iter().flat_map(|j| parity.split(j)).collect();
        let p = &l.params;
        let shift = 1e-3 * p.kappa.min(p.gamma_m);
        let lyap = [
            Lyapunov::new(&super::operators::to_dense(&a[0]), shift)?,
            Lyapunov::new(&super::operators::to_dense(&a[1]), shift)?,
        ];
        let r = trace_row(l);
        Ok(Self {
            dims,
            a,
            jumps,
            lyap,
            r: (parity.block[r], parity.pos[r]),
        })
    }

    fn len(&self) -> usize {
        self.dims[0] * self.dims[0] + self.dims[1] * self.dims[1]
    }

    fn unpack(&self, v: &[f64]) -> [DMatrix<f64>; 2] {
        let n0 = self.dims[0] * self.dims[0];
        [
            DMatrix::from_column_slice(self.dims[0], self.dims[0], &v[..n0]),
            DMatrix::from_column_slice(self.dims[1], self.dims[1], &v[n0..]),
        ]
    }

    fn pack(&self, m: &[DMatrix<f64>; 2], out: &mut [f64]) {
        let n0 = self.dims[0] * self.dims[0];
        out[..n0].copy_from_slice(m[0].as_slice());
        out[n0..].copy_from_slice(m[1].as_slice());
    }

    /// `L̃` on parity blocks.
    fn apply(&self, rho: &[DMatrix<f64>; 2]) -> [DMatrix<f64>; 2] {
        let mut out = [0, 1].map(|p| {
            let ar = &self.a[p] * &rho[p];
            &ar + (&self.a[p] * rho[p].transpose()).transpose()
        });
        for (t, f, j) in &self.jumps {
            let jr = j * &rho[*f];
            out[*t] += (j * jr.transpose()).transpose();
        }
        let tr = rho[0].trace() + rho[1].trace();
        out[self.r.0][(self.r.1, self.r.1)] += tr;
        out
    }

    fn precondition(&self, q: &[DMatrix<f64>; 2]) -> [DMatrix<f64>; 2] {
        [self.lyap[0].solve(&q[0]), self.lyap[1].solve(&q[1])]
    }
}

fn solve_iterative(l: &Liouvillian, opts: &SolverOptions) -> Result<(DMatrix<f64>, usize)> {
    let sys = BlockSystem::new(l)?;
    let n = sys.len();
    let mut rhs = vec![0.0; n];
    let r_flat = if sys.r.0 == 0 {
        sys.r.1 + sys.r.1 * sys.dims[0]
    } else {
        sys.dims[0] * sys.dims[0] + sys.r.1 + sys.r.1 * sys.dims[1]
    };
    rhs[r_flat] = 1.0;

    let op = |v: &[f64], out: &mut [f64]| {
        let m = sys.unpack(v);
        let pre = sys.precondition(&m);
        sys.pack(&sys.apply(&pre), out);
    };
    let (y, iters, rel) = gmres(&op, &rhs, opts.gmres_tol, opts.restart, opts.max_iter);
    if !(rel <= opts.gmres_tol * 100.0) {
        return Err(Error::Solver(format!(
            "GMRES stalled at relative residual {rel:e} after {iters} iterations (d = {})",
            l.dim()
        )));
    }
    let blocks = sys.precondition(&sys.unpack(&y));

    let parity = Parity::new(&l.hilbert);
    let d = l.dim();
    let mut rho = DMatrix::zeros(d, d);
    for p in 0..2 {
        let idx = &parity.index[p];
        for j in 0..idx.len() {
            for i in 0..idx.len() {
                rho[(idx[i], idx[j])] = blocks[p][(i, j)];
            }
        }
    }
    Ok((rho, iters))
}

/// Restarted GMRES from a zero initial guess. Returns the solution, the
/// number of operator applications and the final relative residual.
fn gmres<F>(op: F, b: &[f64], tol: f64, restart: usize, max_iter: usize) -> (Vec<f64>, usize, f64)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let norm = |x: &[f64]| dot(x, x).sqrt();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0, 0.0);
    }
    let mut r = b.to_vec();
    let mut iters = 0;
    let mut w = vec![0.0; n];
    loop {
        let beta = norm(&r);
        if beta / bnorm <= tol || iters >= max_iter {
            return (x, iters, beta / bnorm);
        }
        let m = restart.min(max_iter - iters).max(1);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1]; // h[i][j]
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            op(&v[k], &mut w);
            iters += 1;
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hik * b);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            if g[k].abs() / bnorm <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|e| e / hn).collect());
        }
        let mut yk = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * yk[j]).sum();
            yk[i] = (g[i] - s) / h[i][i];
        }
        for (vi, c) in v.iter().zip(&yk) {
            x.iter_mut().zip(vi).for_each(|(a, b)| *a += c * b);
        }
        // true residual for the restart
        op(&x, &mut w);
        iters += 1;
        r.iter_mut().zip(b.iter().zip(&w)).for_each(|(ri, (bi, wi))| *ri = bi - wi);
    }
}

/// Observables of the `2N × N` truncations for each `N`, with a Shanks
/// estimate of the photon number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationStudy {
    pub n_values: Vec<usize>,
    pub observables: Vec<Observables>,
    pub diagnostics: Vec<Diagnostics>,
    pub shanks_n_phot: Option<ShanksResult>,
}

pub fn truncation_study(
    p: &PhysicalParams,
    n_values: &[usize],
    frame: PhononFrame,
    opts: &SolverOptions,
) -> Result<TruncationStudy> {
    let mut observables = Vec::new();
    let mut diagnostics = Vec::new();
    for &n in n_values {
        let h = HilbertConfig::paired(n)?.with_frame(frame);
        let l = build_liouvillian(p, &h)?;
        let rho = steady_state(&l, opts)?;
        observables.push(rho.observables());
        diagnostics.push(rho.diagnostics());
    }
    let seq: Vec<f64> = observables.iter().map(|o| o.n_phot).collect();
    let shanks_n_phot = if seq.len() >= 3 { Some(shanks(&seq)?) } else { None };
    Ok(TruncationStudy {
        n_values: n_values.to_vec(),
        observables,
        diagnostics,
        shanks_n_phot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(drive: f64, nbar: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 0.1, drive, nbar).unwrap()
    }

    fn solve(p: &PhysicalParams, h: HilbertConfig, method: Method) -> DensityMatrix {
        let l = build_liouvillian(p, &h).unwrap();
        steady_state(
            &l,
            &SolverOptions {
                method,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn direct_and_iterative_agree() {
        for (drive, nbar) in [(0.6, 0.0), (2.0, 0.0), (1.0, 0.4)] {
            let p = params(drive, nbar);
            let h = HilbertConfig::new(8, 4).unwrap();
            let a = solve(&p, h, Method::Direct);
            let b = solve(&p, h, Method::Iterative);
            assert!((&a.rho - &b.rho).amax() < 1e-10, "drive {drive}");
        }
    }

    #[test]
    fn direct_solution_respects_parity() {
        // the direct solver sees the full space, so block structure is an
        // outcome there, not an assumption
        let h = HilbertConfig::new(6, 5).unwrap();
        let r = solve(&params(1.5, 0.0), h, Method::Direct);
        for i in 0..30 {
            for j in 0..30 {
                if (i / 5 + j / 5) % 2 == 1 {
                    assert!(r.rho[(i, j)].abs() < 1e-12);
                }
            }
        }
        assert!(r.observables().a_mean.abs() < 1e-12);
    }

    #[test]
    fn lyapunov_inverse() {
        let a = DMatrix::from_fn(7, 7, |i, j| {
            let v = ((i * 5 + j * 3) % 7) as f64 * 0.1 - 0.3;
            if i == j {
                v - 2.0
            } else {
                v
            }
        });
        let lyap = Lyapunov::new(&a, 0.0).unwrap();
        let q = DMatrix::from_fn(7, 7, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let y = lyap.solve(&q);
        assert!((&a * &y + &y * a.transpose() - q).amax() < 1e-12);
    }

    #[test]
    fn gmres_small_system() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = [1.0, 2.0, 3.0];
        let op = |v: &[f64], out: &mut [f64]| {
            let r = &m * nalgebra::DVector::from_column_slice(v);
            out.copy_from_slice(r.as_slice());
        };
        let (x, _, rel) = gmres(op, &b, 1e-14, 2, 50);
        assert!(rel < 1e-13);
        let r = &m * nalgebra::DVector::from_column_slice(&x);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[2] - 3.0).abs() < 1e-12);
    }
}
