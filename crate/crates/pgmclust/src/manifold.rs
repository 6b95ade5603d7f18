//! Grassmann points, the projection embedding and (product) Grassmann distances.
//!
//! A point on the Grassmann manifold G(p, d) is a p-dimensional subspace of
//! ℝᵈ, stored as a d×p orthonormal basis. The basis is only a representative:
//! every quantity computed here depends on the basis solely through the
//! projector Π(X) = X·Xᵀ, so right-multiplying the basis by any orthogonal
//! p×p matrix leaves all outputs unchanged.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Orthonormality tolerance enforced on construction.
const ORTHO_TOL: f64 = 1e-10;

/// A p-dimensional subspace of ℝᵈ, represented by a d×p orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: DMatrix<f64>,
}

impl GrassmannPoint {
    /// Wraps a d×p matrix with orthonormal columns.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (d, p) = basis.shape();
        if p < 1 || d < p {
            return Err(Error::Dimension(format!(
                "basis must be d×p with 1 <= p <= d, got {d}×{p}"
            )));
        }
        let gram = basis.transpose() * &basis;
        let eye = DMatrix::<f64>::identity(p, p);
        let err = (&gram - &eye).abs().max();
        if err > ORTHO_TOL {
            return Err(Error::DegenerateInput(format!(
                "basis columns not orthonormal (max deviation {err:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// One sample across M views: an ordered list of Grassmann points.
#[derive(Debug, Clone)]
pub struct ProductGrassmannPoint {
    views: Vec<GrassmannPoint>,
}

impl ProductGrassmannPoint {
    pub fn new(views: Vec<GrassmannPoint>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Dimension("a sample needs at least one view".into()));
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[GrassmannPoint] {
        &self.views
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// (ambient_dim, subspace_dim) per view.
    pub fn view_dims(&self) -> Vec<(usize, usize)> {
        self.views
            .iter()
            .map(|v| (v.ambient_dim(), v.subspace_dim()))
            .collect()
    }
}

/// The projector Π(X) = X·Xᵀ, a symmetric idempotent d×d matrix with trace p.
#[derive(Debug, Clone)]
pub struct EmbeddedPoint {
    pub matrix: DMatrix<f64>,
}

/// Builds a Grassmann point from a raw d×n data matrix by taking the first
/// `p` left singular vectors (descending singular values).
///
/// The columns of `data` are the vectorized frames of one view of one sample;
/// the span of the result is the column space of the best rank-p
/// approximation of `data`.
pub fn grassmann_from_matrix(data: &DMatrix<f64>, p: usize) -> Result<GrassmannPoint> {
    let (d, n) = data.shape();
    if p < 1 || n < p || d < p {
        return Err(Error::Dimension(format!(
            "need 1 <= p <= min(d, n); got p={p} for a {d}×{n} matrix"
        )));
    }
    let (u, sv) = left_singular_basis(data);
    if sv[p - 1] <= 1e-12 * sv[0] {
        return Err(Error::DegenerateInput(format!(
            "matrix has numerical rank < {p} (σ_{p}/σ_1 = {:.3e})",
            sv[p - 1] / sv[0].max(f64::MIN_POSITIVE)
        )));
    }
    GrassmannPoint::new(u.columns(0, p).into_owned())
}

/// Left singular vectors (descending) and singular values of `data`, computed
/// through the symmetric eigendecomposition of data·dataᵀ. The bidiagonal SVD
/// can return left vectors that miss the dominant column space by far more
/// than round-off on exactly rank-deficient inputs; the symmetric route does
/// not, and dominant-subspace accuracy is what Grassmann points need.
fn left_singular_basis(data: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let outer = data * data.transpose();
    let eig = outer.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let d = data.nrows();
    let mut u = DMatrix::zeros(d, d);
    let mut sv = Vec::with_capacity(d);
    for (c, &i) in idx.iter().enumerate() {
        u.set_column(c, &eig.eigenvectors.column(i));
        sv.push(eig.eigenvalues[i].max(0.0).sqrt());
    }
    (u, sv)
}

/// Smallest `p` whose leading singular values carry at least `energy`
/// (a fraction in (0, 1]) of the total singular-value mass of `data`.
pub fn suggest_subspace_dim(data: &DMatrix<f64>, energy: f64) -> Result<usize> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::Dimension(format!(
            "energy must lie in (0, 1], got {energy}"
        )));
    }
    let svd = data.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = sv.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput("zero matrix".into()));
    }
    let mut acc = 0.0;
    for (i, s) in sv.iter().enumerate() {
        acc += s;
        if acc >= energy * total {
            return Ok(i + 1);
        }
    }
    Ok(sv.len())
}

/// The projection embedding Π(X) = X·Xᵀ.
pub fn embed(x: &GrassmannPoint) -> EmbeddedPoint {
    EmbeddedPoint {
        matrix: x.basis() * x.basis().transpose(),
    }
}

/// Squared projection distance ½‖Π(X) − Π(Y)‖²_F.
///
/// Computed through the p×p cross-Gram XᵀY rather than the d×d embeddings:
/// ½‖XXᵀ − YYᵀ‖²_F = ½(p_X + p_Y) − ‖XᵀY‖²_F.
pub fn grassmann_dist_sq(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    if x.ambient_dim() != y.ambient_dim() {
        return Err(Error::Dimension(format!(
            "ambient dims differ: {} vs {}",
            x.ambient_dim(),
            y.ambient_dim()
        )));
    }
    let cross = x.basis().transpose() * y.basis();
    let inner = transpose_invariant_sum_sq(&cross);
    let val = 0.5 * (x.subspace_dim() + y.subspace_dim()) as f64 - inner;
    Ok(val.max(0.0))
}

/// Sum of squared entries accumulated over unordered index pairs, so the
/// result is bit-identical for a matrix and its transpose (distance symmetry
/// holds exactly, not just to round-off).
pub(crate) fn transpose_invariant_sum_sq(m: &DMatrix<f64>) -> f64 {
    let (r, c) = m.shape();
    let side = r.max(c);
    let mut total = 0.0;
    for a in 0..side {
        for b in a..side {
            if a == b {
                if a < r && b < c {
                    total += m[(a, b)] * m[(a, b)];
                }
            } else {
                let mut pair = 0.0;
                if a < r && b < c {
                    pair += m[(a, b)] * m[(a, b)];
                }
                if b < r && a < c {
                    pair += m[(b, a)] * m[(b, a)];
                }
                total += pair;
            }
        }
    }
    total
}

/// Squared product-manifold distance: the unweighted sum of per-view
/// squared Grassmann distances.
pub fn pgm_dist_sq(a: &ProductGrassmannPoint, b: &ProductGrassmannPoint) -> Result<f64> {
    if a.view_dims() != b.view_dims() {
        return Err(Error::Dimension(format!(
            "view structures differ: {:?} vs {:?}",
            a.view_dims(),
            b.view_dims()
        )));
    }
    let mut total = 0.0;
    for (x, y) in a.views().iter().zip(b.views()) {
        total += grassmann_dist_sq(x, y)?;
    }
    Ok(total)
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;
    use rand::Rng;

    /// Random Grassmann point via QR of a Gaussian matrix.
    pub fn random_point(rng: &mut impl Rng, d: usize, p: usize) -> GrassmannPoint {
        loop {
            let g = DMatrix::from_fn(d, p, |_, _| rng.gen_range(-1.0..1.0));
            if let Ok(pt) = grassmann_from_matrix(&g, p) {
                return pt;
            }
        }
    }

    /// Random orthogonal p×p matrix.
    pub fn random_orthogonal(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0));
        let qr = g.qr();
        qr.q()
    }

    pub fn random_product_point(
        rng: &mut impl Rng,
        dims: &[(usize, usize)],
    ) -> ProductGrassmannPoint {
        ProductGrassmannPoint::new(
            dims.iter()
                .map(|&(d, p)| random_point(rng, d, p))
                .collect(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_basis(d: usize, cols: &[usize]) -> GrassmannPoint {
        let mut m = DMatrix::zeros(d, cols.len());
        for (j, &i) in cols.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        GrassmannPoint::new(m).unwrap()
    }

    #[test]
    fn from_diag_matrix_spans_leading_axes() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let x = grassmann_from_matrix(&s, 2).unwrap();
        let expected = embed(&unit_basis(3, &[0, 1])).matrix;
        assert_abs_diff_eq!(embed(&x).matrix, expected, epsilon = 1e-12);
    }

    #[test]
    fn from_rank_one_matrix() {
        let u = nalgebra::DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 3.0]);
        let v = nalgebra::DVector::from_vec(vec![1.0, -1.0, 2.0, 0.0]);
        let s = &u * v.transpose();
        let x = grassmann_from_matrix(&s, 1).unwrap();
        let un = &u / u.norm();
        // defined up to sign only
        let dot = (x.basis().column(0).transpose() * &un)[(0, 0)];
        assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn from_matrix_matches_full_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = DMatrix::from_fn(20, 8, |_, _| rng.gen_range(-1.0..1.0_f64));
        let x = grassmann_from_matrix(&s, 3).unwrap();

        // oracle: projector onto the top-3 left singular subspace from a
        // separate full SVD
        let mut svd = s.clone().svd(true, true);
        svd.sort_by_singular_values();
        let u = svd.u.unwrap();
        let u3 = u.columns(0, 3).into_owned();
        let oracle = &u3 * u3.transpose();
        assert!((embed(&x).matrix - oracle).norm() < 1e-9);
    }

    #[test]
    fn from_matrix_rejects_bad_dims_and_rank() {
        let s = DMatrix::<f64>::zeros(4, 2);
        assert!(matches!(
            grassmann_from_matrix(&s, 3),
            Err(Error::Dimension(_))
        ));
        let rank1 = nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0])
            * nalgebra::DVector::from_vec(vec![1.0, 2.0]).transpose();
        assert!(matches!(
            grassmann_from_matrix(&rank1, 2),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn suggest_dim_trivial_cases() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![9.0, 1.0]));
        assert_eq!(suggest_subspace_dim(&s, 0.9).unwrap(), 1);
        let s = DMatrix::<f64>::identity(4, 4);
        assert_eq!(suggest_subspace_dim(&s, 1.0).unwrap(), 4);
        let z = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(
            suggest_subspace_dim(&z, 0.9),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn suggest_dim_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = DMatrix::from_fn(30, 10, |_, _| rng.gen_range(-1.0..1.0_f64));
        let got = suggest_subspace_dim(&s, 0.9).unwrap();

        let svd = s.clone().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = sv.iter().sum();
        let mut acc = 0.0;
        let mut expected = sv.len();
        for (i, v) in sv.iter().enumerate() {
            acc += v;
            if acc >= 0.9 * total {
                expected = i + 1;
                break;
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn embed_invariants() {
        let e1 = embed(&unit_basis(3, &[0]));
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        assert_abs_diff_eq!(e1.matrix, expected, epsilon = 1e-15);

        // full subspace embeds to the identity
        let full = unit_basis(4, &[0, 1, 2, 3]);
        assert_abs_diff_eq!(
            embed(&full).matrix,
            DMatrix::identity(4, 4),
            epsilon = 1e-12
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_point(&mut rng, 10, 4);
        let pi = embed(&x).matrix;
        assert_abs_diff_eq!(pi.trace(), 4.0, epsilon = 1e-12);
        assert!((&pi - pi.transpose()).abs().max() < 1e-12);
        assert!((&pi * &pi - &pi).abs().max() < 1e-10);
    }

    #[test]
    fn dist_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_point(&mut rng, 6, 2);
        assert_abs_diff_eq!(grassmann_dist_sq(&x, &x).unwrap(), 0.0, epsilon = 1e-12);

        let e1 = unit_basis(3, &[0]);
        let e2 = unit_basis(3, &[1]);
        assert_abs_diff_eq!(grassmann_dist_sq(&e1, &e2).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dist_matches_embedding_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let x = random_point(&mut rng, 12, 3);
            let y = random_point(&mut rng, 12, 3);
            let got = grassmann_dist_sq(&x, &y).unwrap();

            let diff = embed(&x).matrix - embed(&y).matrix;
            let oracle = 0.5 * diff.iter().map(|v| v * v).sum::<f64>();
            assert_abs_diff_eq!(got, oracle, epsilon = 1e-10);

            // p - tr((XᵀY)(YᵀX)) form
            let cross = x.basis().transpose() * y.basis();
            let alt = 3.0 - (&cross * cross.transpose()).trace();
            assert_abs_diff_eq!(got, alt, epsilon = 1e-10);
        }
    }

    #[test]
    fn dist_rejects_ambient_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_point(&mut rng, 5, 2);
        let y = random_point(&mut rng, 6, 2);
        assert!(matches!(
            grassmann_dist_sq(&x, &y),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pgm_dist_sums_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dims = [(8, 2), (10, 3), (6, 2)];
        let a = random_product_point(&mut rng, &dims);
        let b = random_product_point(&mut rng, &dims);
        assert_abs_diff_eq!(pgm_dist_sq(&a, &a).unwrap(), 0.0, epsilon = 1e-12);

        let got = pgm_dist_sq(&a, &b).unwrap();
        let mut oracle = 0.0;
        for (x, y) in a.views().iter().zip(b.views()) {
            let diff = embed(x).matrix - embed(y).matrix;
            oracle += 0.5 * diff.iter().map(|v| v * v).sum::<f64>();
        }
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-9);

        let c = random_product_point(&mut rng, &[(8, 2), (10, 3)]);
        assert!(matches!(pgm_dist_sq(&a, &c), Err(Error::Dimension(_))));
    }

    #[test]
    fn rotation_invariance_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let x = random_point(&mut rng, 9, 3);
            let y = random_point(&mut rng, 9, 3);
            let r = random_orthogonal(&mut rng, 3);
            let xr = GrassmannPoint::new(x.basis() * &r).unwrap();

            assert!((embed(&xr).matrix - embed(&x).matrix).abs().max() < 1e-10);
            let d1 = grassmann_dist_sq(&xr, &y).unwrap();
            let d2 = grassmann_dist_sq(&x, &y).unwrap();
            assert!((d1 - d2).abs() < 1e-9);
            assert!((0.0..=3.0 + 1e-12).contains(&d2));
            // symmetry: identical code path both ways
            assert_eq!(d2, grassmann_dist_sq(&y, &x).unwrap());
        }
    }
}
