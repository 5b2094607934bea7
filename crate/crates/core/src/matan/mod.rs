//! Weight-matrix diagnostics for low-rank updates.
//!
//! Given a base weight `W` and an update `dW`, [`subspace_report`] measures
//! how much of `W` lives in the top-`r` singular subspace of `dW`, compared
//! against `W`'s own top-`r` subspace and a random one, and reports the
//! amplification factor `||dW||_F / ||U^T W V||_F`.

mod pca;
mod svd;

pub use pca::{pca, PcaResult, DEFAULT_COMPONENTS};
pub use svd::{svd, Svd};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embed_io::DenseMatrix;
use crate::error::{Error, Result};

/// Tolerance for accepting caller-supplied factors as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

pub fn frobenius(m: &DenseMatrix) -> f64 {
    m.values().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest entry of `|F^T F - I|`.
pub fn orthonormality_error(f: &DenseMatrix) -> f64 {
    let g = f.transpose().matmul(f).expect("conformable");
    let k = g.rows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// `||U^T W V||_F` for factors with orthonormal columns.
pub fn project_norm(w: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    if u.rows() != w.rows() || v.rows() != w.cols() || u.cols() != v.cols() {
        return Err(Error::ShapeMismatch(format!(
            "W is {}x{}, U is {}x{}, V is {}x{}",
            w.rows(),
            w.cols(),
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    for (name, f) in [("U", u), ("V", v)] {
        let deviation = orthonormality_error(f);
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(Error::NonOrthonormalFactor { name, deviation });
        }
    }
    let wv = w.matmul(v)?;
    let core = u.transpose().matmul(&wv)?;
    Ok(frobenius(&core))
}

/// `||dW||_F / ||U^T W V||_F`, undefined when the projection vanishes.
pub fn amplification_factor(norm_dw: f64, proj_dw: f64) -> Option<f64> {
    (proj_dw > 0.0).then(|| norm_dw / proj_dw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub norm_w: f64,
    pub norm_dw: f64,
    /// `W` projected onto the top-`r` singular subspace of `dW`.
    pub proj_dw: f64,
    /// `W` projected onto its own top-`r` singular subspace.
    pub proj_w: f64,
    /// `W` projected onto the top-`r` subspace of a seeded Gaussian matrix.
    pub proj_random: f64,
    pub rank_r: usize,
    pub amplification: Option<f64>,
    pub seed: u64,
}

/// Standard-normal matrix drawn row-major from ChaCha8 seeded with `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    DenseMatrix::new(rows, cols, values).expect("gaussian samples are finite")
}

pub fn subspace_report(
    w: &DenseMatrix,
    dw: &DenseMatrix,
    r: usize,
    seed: u64,
) -> Result<SubspaceReport> {
    if w.shape() != dw.shape() {
        return Err(Error::ShapeMismatch(format!(
            "W is {}x{} but dW is {}x{}",
            w.rows(),
            w.cols(),
            dw.rows(),
            dw.cols()
        )));
    }
    let max = w.rows().min(w.cols());
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }

    let project_onto = |m: &DenseMatrix| -> Result<f64> {
        let s = svd(m, r)?;
        project_norm(w, &s.u, &s.v)
    };

    let norm_dw = frobenius(dw);
    let proj_dw = project_onto(dw)?;
    Ok(SubspaceReport {
        norm_w: frobenius(w),
        norm_dw,
        proj_dw,
        proj_w: project_onto(w)?,
        proj_random: project_onto(&gaussian_matrix(w.rows(), w.cols(), seed))?,
        rank_r: r,
        amplification: amplification_factor(norm_dw, proj_dw),
        seed,
    })
}
