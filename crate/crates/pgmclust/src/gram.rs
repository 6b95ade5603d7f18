//! Per-view kernel matrices Δᵐ and their sum Δ.
//!
//! Δᵐ_ij = tr((Xⱼᵐᵀ Xᵢᵐ)(Xᵢᵐᵀ Xⱼᵐ)) is the Frobenius inner product of the
//! projectors Π(Xᵢᵐ) and Π(Xⱼᵐ). The N×N sum Δ = Σ_m Δᵐ is the only dataset
//! statistic the solvers consume. Entries are computed through the p×p
//! cross-Gram, never the d×d embeddings; only the upper triangle is computed
//! and mirrored so symmetry is bit-exact.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::{GrassmannPoint, ProductGrassmannPoint};

/// The per-view kernels Δᵐ and their sum Δ, all N×N symmetric PSD.
#[derive(Debug, Clone)]
pub struct GramStack {
    pub per_view: Vec<DMatrix<f64>>,
    pub total: DMatrix<f64>,
    pub n_samples: usize,
    pub view_dims: Vec<(usize, usize)>,
}

/// Eigen-decomposition of Δ with eigenvalues sorted descending and negative
/// round-off clamped to zero.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigvecs: DMatrix<f64>,
    pub eigvals: Vec<f64>,
}

/// Kernel entry tr((Xⱼᵀ Xᵢ)(Xᵢᵀ Xⱼ)) = ⟨Π(Xᵢ), Π(Xⱼ)⟩_F.
pub fn gram_entry(xi: &GrassmannPoint, xj: &GrassmannPoint) -> Result<f64> {
    if xi.ambient_dim() != xj.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dims differ: {} vs {}",
            xi.ambient_dim(),
            xj.ambient_dim()
        )));
    }
    let cross = xi.basis().transpose() * xj.basis();
    Ok(cross.iter().map(|v| v * v).sum())
}

/// Builds the per-view kernels and their sum over a dataset of N samples.
pub fn build_gram_stack(dataset: &[ProductGrassmannPoint]) -> Result<GramStack> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::EmptyDataset(n));
    }
    let view_dims = dataset[0].view_dims();
    for (i, sample) in dataset.iter().enumerate() {
        if sample.view_dims() != view_dims {
            return Err(Error::Dimension(format!(
                "sample {i} has view structure {:?}, expected {:?}",
                sample.view_dims(),
                view_dims
            )));
        }
    }

    let m = view_dims.len();
    let mut per_view = Vec::with_capacity(m);
    for view in 0..m {
        let mut delta = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let e = gram_entry(&dataset[i].views()[view], &dataset[j].views()[view])?;
                delta[(i, j)] = e;
                delta[(j, i)] = e;
            }
        }
        per_view.push(delta);
    }

    let mut total = DMatrix::zeros(n, n);
    for delta in &per_view {
        total += delta;
    }

    Ok(GramStack {
        per_view,
        total,
        n_samples: n,
        view_dims,
    })
}

/// Symmetric eigen-decomposition of Δ, eigenvalues descending, clamped ≥ 0.
pub fn spectral_decompose(gram: &GramStack) -> Result<SpectralDecomposition> {
    decompose_symmetric(&gram.total)
}

pub(crate) fn decompose_symmetric(delta: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = delta.nrows();
    let eig = delta
        .clone()
        .try_symmetric_eigen(1e-13, 0)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigen-solver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut eigvecs = DMatrix::zeros(n, n);
    let mut eigvals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        eigvecs.set_column(dst, &eig.eigenvectors.column(src));
        eigvals.push(eig.eigenvalues[src].max(0.0));
    }
    Ok(SpectralDecomposition { eigvecs, eigvals })
}
