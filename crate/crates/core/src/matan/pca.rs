use serde::{Deserialize, Serialize};

use super::svd::svd;
use crate::embed_io::DenseMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub n_components: usize,
    /// One orthonormal component per row (`k x d`), first entry with
    /// magnitude above 1e-12 positive.
    pub components: Vec<Vec<f64>>,
    /// `sigma_i^2 / (n - 1)`, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Sum of the column variances of the input.
    pub total_variance: f64,
    pub mean: Vec<f64>,
    /// Centered data times the components, `n x k`.
    pub projections: Vec<Vec<f64>>,
}

impl PcaResult {
    pub fn projections_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_rows(&self.projections).expect("projections are rectangular and finite")
    }
}

/// SVD-based PCA of the rows of `x` (`n x d`).
pub fn pca(x: &DenseMatrix, k: usize) -> Result<PcaResult> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::DegenerateData(format!(
            "PCA needs at least 2 rows, got {n}"
        )));
    }
    let max = (n - 1).min(d);
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { rank: k, max });
    }

    let mean: Vec<f64> = (0..d)
        .map(|c| (0..n).map(|r| x[(r, c)]).sum::<f64>() / n as f64)
        .collect();
    let centered = DenseMatrix::from_fn(n, d, |r, c| x[(r, c)] - mean[c]);
    if centered.values().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateData("all rows are identical".into()));
    }
    let total_variance = centered.values().iter().map(|v| v * v).sum::<f64>() / (n - 1) as f64;

    let s = svd(&centered, k)?;
    let mut components: Vec<Vec<f64>> = (0..k).map(|j| s.v.column(j)).collect();
    for comp in &mut components {
        if let Some(&pivot) = comp.iter().find(|v| v.abs() > 1e-12) {
            if pivot < 0.0 {
                comp.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    let projections = (0..n)
        .map(|r| {
            let row = centered.row(r);
            components
                .iter()
                .map(|comp| row.iter().zip(comp).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let explained_variance = s
        .singular_values
        .iter()
        .map(|sigma| sigma * sigma / (n - 1) as f64)
        .collect();

    Ok(PcaResult {
        n_components: k,
        components,
        explained_variance,
        total_variance,
        mean,
        projections,
    })
}
