//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of the working copy are rotated pairwise until mutually
//! orthogonal; their norms are then the singular values and the
//! accumulated rotations form `V`. Pairs are visited in round-robin order so
//! each round touches disjoint columns, which lets large matrices rotate a
//! round in parallel without changing the result.

use rayon::prelude::*;

use crate::embed_io::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
/// Below this many entries a round runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 128 * 128;
/// Entries smaller than this are skipped when picking the sign pivot.
const SIGN_EPS: f64 = 1e-12;

/// Thin SVD truncated to `k` triplets: `u` is `rows x k`, `v` is
/// `cols x k`, singular values descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U * diag(S) * V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (rows, k) = self.u.shape();
        let cols = self.v.rows();
        DenseMatrix::from_fn(rows, cols, |i, j| {
            (0..k)
                .map(|t| self.u[(i, t)] * self.singular_values[t] * self.v[(j, t)])
                .sum()
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonalizes columns `a` and `b` in place, mirroring the rotation on
/// the matching columns of `V`. Returns whether a rotation was applied.
/// Columns with squared norm at or below `floor` are numerically zero and
/// left alone.
fn rotate(
    a: &mut [f64],
    b: &mut [f64],
    va: &mut [f64],
    vb: &mut [f64],
    tol: f64,
    floor: f64,
) -> bool {
    let alpha = dot(a, a);
    let beta = dot(b, b);
    if alpha <= floor || beta <= floor {
        return false;
    }
    let gamma = dot(a, b);
    if gamma.abs() <= tol * (alpha * beta).sqrt() {
        return false;
    }
    let zeta = (beta - alpha) / (2.0 * gamma);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
    for (x, y) in va.iter_mut().zip(vb.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
    true
}

/// Circle-method pairing: `n - 1` rounds (n rounded up to even) in which
/// every column meets every other exactly once.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let slots = n + n % 2;
    let mut ring: Vec<usize> = (0..slots).collect();
    let mut rounds = Vec::with_capacity(slots.saturating_sub(1));
    for _ in 0..slots.saturating_sub(1) {
        let round = (0..slots / 2)
            .map(|i| (ring[i], ring[slots - 1 - i]))
            .filter(|&(a, b)| a < n && b < n)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        rounds.push(round);
        ring[1..].rotate_right(1);
    }
    rounds
}

type Pair = (usize, usize, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);
type Columns = Vec<Vec<f64>>;

/// Full Jacobi pass on a tall matrix given as columns. Returns the rotated
/// columns and `V` as columns.
fn jacobi(mut cols: Columns) -> Result<(Columns, Columns)> {
    let n = cols.len();
    let m = cols.first().map_or(0, Vec::len);
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (m.max(n) as f64);
    let frob_sq: f64 = cols.iter().map(|c| dot(c, c)).sum();
    let floor = frob_sq * tol * tol;
    let parallel = m * n >= PARALLEL_THRESHOLD;
    let rounds = round_robin(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for round in &rounds {
            let mut work: Vec<_> = round
                .iter()
                .map(|&(p, q)| {
                    (
                        p,
                        q,
                        std::mem::take(&mut cols[p]),
                        std::mem::take(&mut cols[q]),
                        std::mem::take(&mut vcols[p]),
                        std::mem::take(&mut vcols[q]),
                    )
                })
                .collect();
            let apply = |w: &mut Pair| rotate(&mut w.2, &mut w.3, &mut w.4, &mut w.5, tol, floor);
            let any = if parallel {
                work.par_iter_mut()
                    .map(apply)
                    .reduce(|| false, |a, b| a | b)
            } else {
                work.iter_mut().map(apply).fold(false, |a, b| a | b)
            };
            rotated |= any;
            for (p, q, a, b, va, vb) in work {
                cols[p] = a;
                cols[q] = b;
                vcols[p] = va;
                vcols[q] = vb;
            }
        }
        if !rotated {
            return Ok((cols, vcols));
        }
    }
    Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS })
}

/// Extends `basis` (orthonormal vectors of length `dim`) with one more unit
/// vector orthogonal to all of them, drawn from the standard basis.
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..dim {
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for b in basis {
                let proj = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 0.5 {
            return v.into_iter().map(|x| x / norm).collect();
        }
        if best.as_ref().is_none_or(|(n, _)| norm > *n) {
            best = Some((norm, v));
        }
    }
    let (norm, v) = best.expect("dim > 0");
    v.into_iter().map(|x| x / norm).collect()
}

/// Thin SVD of `m`, keeping the top `k` singular triplets.
///
/// Singular vectors are normalized so the first entry of each `u` column
/// with magnitude above 1e-12 is positive. Left vectors for zero singular
/// values are completed to an orthonormal set.
pub fn svd(m: &DenseMatrix, k: usize) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let max = rows.min(cols);
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { rank: k, max });
    }
    let transposed = rows < cols;
    let a = if transposed { m.transpose() } else { m.clone() };
    let (tall, wide) = a.shape();

    let columns: Vec<Vec<f64>> = (0..wide).map(|c| a.column(c)).collect();
    let (rotated, vcols) = jacobi(columns)?;

    let mut order: Vec<(usize, f64)> = rotated
        .iter()
        .enumerate()
        .map(|(i, c)| (i, dot(c, c).sqrt()))
        .collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));

    let sigma_max = order.first().map_or(0.0, |o| o.1);
    let cutoff = sigma_max * f64::EPSILON * (tall.max(wide) as f64);

    let mut left: Vec<Vec<f64>> = Vec::with_capacity(wide);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(wide);
    let mut sigmas = Vec::with_capacity(wide);
    for &(i, sigma) in &order {
        let u = if sigma > cutoff && sigma > 0.0 {
            rotated[i].iter().map(|x| x / sigma).collect()
        } else {
            complete_basis(&left, tall)
        };
        left.push(u);
        right.push(vcols[i].clone());
        sigmas.push(if sigma > cutoff { sigma } else { 0.0 });
    }

    let (mut us, mut vs) = if transposed {
        (right, left)
    } else {
        (left, right)
    };
    for (u, v) in us.iter_mut().zip(vs.iter_mut()) {
        if let Some(&pivot) = u.iter().find(|x| x.abs() > SIGN_EPS) {
            if pivot < 0.0 {
                u.iter_mut().for_each(|x| *x = -*x);
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    let u = DenseMatrix::from_fn(rows, k, |i, j| us[j][i]);
    let v = DenseMatrix::from_fn(cols, k, |i, j| vs[j][i]);
    sigmas.truncate(k);
    Ok(Svd {
        u,
        singular_values: sigmas,
        v,
    })
}
