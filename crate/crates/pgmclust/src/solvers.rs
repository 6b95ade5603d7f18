//! Low-rank representation solvers over the product-manifold kernel Δ.
//!
//! Two routes to the coefficient matrix Z:
//!
//! * [`pglrr_closed_form`] — the spectral closed form for the plain model:
//!   given Δ = U·diag(σ)·Uᵀ, the minimizer of ‖ZΔ^{1/2} − Δ^{1/2}‖²_F + λ‖Z‖_*
//!   is Z* = U·D_λ·Uᵀ with D_λ(i,i) = 1 − λ/(2σ_i) where σ_i > λ/2, else 0.
//! * [`lappglrr_solve`] — ALM for the Laplacian-regularized model
//!   −2λ·tr(ZΔ) + λ·tr(ZΔZᵀ) + 2β·tr(ZLZᵀ) + ‖Z‖_*, alternating a
//!   singular-value-thresholding J-step with a linear-solve Z-step.
//!
//! λ convention: [`SolverConfig::lambda`] always weights the fidelity term
//! ‖E‖²_F. The closed form's threshold parameter weights the nuclear norm
//! instead, so the two routes agree under λ_thresh = 1/lambda; the pipeline
//! applies that conversion, callers of [`pglrr_closed_form`] pass the
//! threshold value directly.
//!
//! The Z-step solves the stationarity system Z(2λΔ + 4βL + μI) = 2λΔ + μJ − A
//! of the quadratic subproblem; the coefficient matrix is SPD for μ > 0 and
//! is Cholesky-factorized, re-factorizing only when μ changes.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::gram::{GramStack, SpectralDecomposition};
use crate::manifold::{pgm_dist_sq, ProductGrassmannPoint};

/// Solver parameters. Defaults follow the ALM initialization
/// μ₀ = 1e-6, μ_max = 1e10, ε = 1e-8; the growth factor ρ and the iteration
/// cap are ours (ρ = 1.1, 500 iterations).
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Weight of the fidelity term ‖E‖²_F.
    pub lambda: f64,
    /// Weight of the Laplacian regularizer; 0 disables it.
    pub beta: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl SolverConfig {
    pub fn new(lambda: f64, beta: f64) -> Self {
        Self {
            lambda,
            beta,
            mu0: 1e-6,
            mu_max: 1e10,
            rho: 1.1,
            epsilon: 1e-8,
            max_iters: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda > 0.0
            && self.beta >= 0.0
            && self.mu0 > 0.0
            && self.mu_max >= self.mu0
            && self.rho > 1.0
            && self.epsilon > 0.0
            && self.max_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!("invalid solver config: {self:?}")))
        }
    }
}

/// The N×N representation Z plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    pub z: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// ‖Z − J‖_∞ at exit (0 for the closed form).
    pub final_gap: f64,
    /// Objective value at exit: the spectral problem's objective for the
    /// closed form, the ALM model objective for the iterative solver.
    pub objective: f64,
    /// Largest normalized stationarity residual of any Z-step taken
    /// (0 for the closed form).
    pub max_stationarity_residual: f64,
}

/// Geodesic-distance weights W and the graph Laplacian L = D − W.
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    pub w: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

/// Builds W_ij = d_PG([Xᵢ],[Xⱼ]) (the square root of the summed per-view
/// squared distances) and L = D − W.
pub fn build_laplacian(dataset: &[ProductGrassmannPoint]) -> Result<LaplacianPair> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::EmptyDataset(n));
    }
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pgm_dist_sq(&dataset[i], &dataset[j])?.max(0.0).sqrt();
            w[(i, j)] = d;
            w[(j, i)] = d;
        }
    }
    Ok(laplacian_from_weights(w))
}

pub(crate) fn laplacian_from_weights(w: DMatrix<f64>) -> LaplacianPair {
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        l[(i, i)] = w.row(i).sum();
    }
    LaplacianPair { w, l }
}

/// Closed-form minimizer of ‖ZΔ^{1/2} − Δ^{1/2}‖²_F + λ‖Z‖_*.
///
/// `lambda` here is the nuclear-norm weight, not [`SolverConfig::lambda`];
/// convert with λ_nuc = 1/lambda when starting from the fidelity-weight
/// convention. With Δ = U·diag(σ)·Uᵀ the minimizer is U·D_λ·Uᵀ where
/// D_λ(i,i) = 1 − λ/(2σ_i) for σ_i > λ/2 and 0 otherwise: per spectral
/// coordinate the objective is σ(t − 1)² + λt, so the active stationary point
/// sits at t = 1 − λ/(2σ). Under the conversion this coincides with the
/// β = 0 minimizer of the ALM model, t = 1 − 1/(2λσ).
pub fn pglrr_closed_form(decomp: &SpectralDecomposition, lambda: f64) -> CoefficientMatrix {
    let n = decomp.eigvals.len();
    let half = 0.5 * lambda;
    let shrunk: Vec<f64> = decomp
        .eigvals
        .iter()
        .map(|&s| if s > half { 1.0 - half / s } else { 0.0 })
        .collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(shrunk.clone()));
    let z = &decomp.eigvecs * d * decomp.eigvecs.transpose();

    // objective in the same spectral coordinates:
    // Σ_i σ_i (t_i − 1)² + λ Σ_i t_i
    let objective: f64 = decomp
        .eigvals
        .iter()
        .zip(&shrunk)
        .map(|(&s, &t)| s * (t - 1.0) * (t - 1.0) + lambda * t)
        .sum();

    let _ = n;
    CoefficientMatrix {
        z,
        iterations: 0,
        converged: true,
        final_gap: 0.0,
        objective,
        max_stationarity_residual: 0.0,
    }
}

/// Singular value thresholding: soft-threshold the singular values of `m`
/// by `tau`. The unique minimizer of τ‖J‖_* + ½‖J − M‖²_F.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    let (sv, u, vt) = thin_svd(m)?;
    let shrunk: Vec<f64> = sv.iter().map(|&s| (s - tau).max(0.0)).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(shrunk));
    Ok(u * d * vt)
}

fn thin_svd(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let svd = m
        .clone()
        .try_svd(true, true, 1e-13, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let sv = svd.singular_values.iter().copied().collect();
    Ok((sv, svd.u.unwrap(), svd.v_t.unwrap()))
}

/// J-step: J = Θ_{1/μ}(Z + A/μ).
pub fn update_j(z: &DMatrix<f64>, a: &DMatrix<f64>, mu: f64) -> Result<DMatrix<f64>> {
    let target = z + a / mu;
    svt(&target, 1.0 / mu)
}

/// Z-step: solves Z(2λΔ + 4βL + μI) = 2λΔ + μJ − A.
pub fn update_z(
    delta: &DMatrix<f64>,
    l: &DMatrix<f64>,
    j: &DMatrix<f64>,
    a: &DMatrix<f64>,
    cfg: &SolverConfig,
    mu: f64,
) -> Result<DMatrix<f64>> {
    let chol = z_step_factorization(delta, l, cfg, mu)?;
    Ok(z_step_solve(&chol, delta, j, a, cfg, mu))
}

fn z_step_factorization(
    delta: &DMatrix<f64>,
    l: &DMatrix<f64>,
    cfg: &SolverConfig,
    mu: f64,
) -> Result<Cholesky<f64, Dyn>> {
    let n = delta.nrows();
    let system = 2.0 * cfg.lambda * delta + 4.0 * cfg.beta * l + mu * DMatrix::identity(n, n);
    Cholesky::new(system)
        .ok_or_else(|| Error::NumericalFailure("Z-step system not positive definite".into()))
}

fn z_step_solve(
    chol: &Cholesky<f64, Dyn>,
    delta: &DMatrix<f64>,
    j: &DMatrix<f64>,
    a: &DMatrix<f64>,
    cfg: &SolverConfig,
    mu: f64,
) -> DMatrix<f64> {
    // Z·S = B with S SPD; solve S·Zᵀ = Bᵀ.
    let rhs = 2.0 * cfg.lambda * delta + mu * j - a;
    chol.solve(&rhs.transpose()).transpose()
}

/// Frobenius norm of the Z-subproblem stationarity residual
/// −2λΔ + 2λZΔ + 4βZL + A + μ(Z − J), normalized by max(1, ‖Z‖_F).
pub fn z_step_residual(
    z: &DMatrix<f64>,
    delta: &DMatrix<f64>,
    l: &DMatrix<f64>,
    j: &DMatrix<f64>,
    a: &DMatrix<f64>,
    cfg: &SolverConfig,
    mu: f64,
) -> f64 {
    let r = -2.0 * cfg.lambda * delta
        + 2.0 * cfg.lambda * z * delta
        + 4.0 * cfg.beta * z * l
        + a
        + mu * (z - j);
    r.norm() / z.norm().max(1.0)
}

/// The model objective −2λ·tr(ZΔ) + λ·tr(ZΔZᵀ) + 2β·tr(ZLZᵀ) + ‖Z‖_*.
pub fn lappglrr_objective(
    z: &DMatrix<f64>,
    delta: &DMatrix<f64>,
    l: &DMatrix<f64>,
    lambda: f64,
    beta: f64,
) -> f64 {
    let zd = z * delta;
    let smooth = -2.0 * lambda * zd.trace()
        + lambda * (&zd * z.transpose()).trace()
        + 2.0 * beta * (z * l * z.transpose()).trace();
    smooth + nuclear_norm(z)
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Per-iteration record from the ALM loop, for diagnostics and tests.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    /// Model objective evaluated at each J-iterate.
    pub j_objectives: Vec<f64>,
    /// Normalized Z-step stationarity residual per iteration.
    pub stationarity_residuals: Vec<f64>,
}

/// ALM solver for the Laplacian-regularized model. Alternates the SVT J-step
/// and the linear Z-step, then takes the multiplier step A ← A + μ(Z − J)
/// and grows μ ← min(ρμ, μ_max), until ‖Z − J‖_∞ < ε or the iteration cap.
///
/// Hitting the cap is not an error: the result comes back with
/// `converged = false`.
pub fn lappglrr_solve(
    gram: &GramStack,
    lap: &LaplacianPair,
    cfg: &SolverConfig,
) -> Result<CoefficientMatrix> {
    lappglrr_solve_traced(gram, lap, cfg, false).map(|(c, _)| c)
}

/// As [`lappglrr_solve`], also returning the per-iteration trace. Objective
/// evaluation per iterate costs an extra SVD, so it is gated on `trace_objective`.
pub fn lappglrr_solve_traced(
    gram: &GramStack,
    lap: &LaplacianPair,
    cfg: &SolverConfig,
    trace_objective: bool,
) -> Result<(CoefficientMatrix, SolveTrace)> {
    cfg.validate()?;
    let n = gram.n_samples;
    let delta = &gram.total;
    if delta.shape() != (n, n) || lap.l.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "gram/laplacian shape mismatch: {:?} vs {:?}",
            delta.shape(),
            lap.l.shape()
        )));
    }

    let mut z = DMatrix::<f64>::zeros(n, n);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut mu = cfg.mu0;
    let mut chol = z_step_factorization(delta, &lap.l, cfg, mu)?;

    let mut trace = SolveTrace::default();
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut max_residual = 0.0_f64;
    let mut j = DMatrix::<f64>::zeros(n, n);

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        j = update_j(&z, &a, mu)?;
        z = z_step_solve(&chol, delta, &j, &a, cfg, mu);

        let res = z_step_residual(&z, delta, &lap.l, &j, &a, cfg, mu);
        max_residual = max_residual.max(res);
        trace.stationarity_residuals.push(res);
        if trace_objective {
            trace
                .j_objectives
                .push(lappglrr_objective(&j, delta, &lap.l, cfg.lambda, cfg.beta));
        }

        let diff = &z - &j;
        a += mu * &diff;
        let new_mu = (cfg.rho * mu).min(cfg.mu_max);
        if new_mu != mu {
            mu = new_mu;
            chol = z_step_factorization(delta, &lap.l, cfg, mu)?;
        }

        gap = diff.abs().max();
        if gap < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let objective = lappglrr_objective(&z, delta, &lap.l, cfg.lambda, cfg.beta);
    let _ = j;
    Ok((
        CoefficientMatrix {
            z,
            iterations,
            converged,
            final_gap: gap,
            objective,
            max_stationarity_residual: max_residual,
        },
        trace,
    ))
}


#[cfg(test)]
mod tests {
    use super::oracle;
    use super::*;
    use crate::gram::decompose_symmetric;
    use crate::manifold::test_util::random_product_point;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &g * g.transpose()
    }

    fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn stack_from_delta(delta: DMatrix<f64>) -> GramStack {
        let n = delta.nrows();
        GramStack {
            per_view: vec![delta.clone()],
            total: delta,
            n_samples: n,
            view_dims: vec![(0, 0)],
        }
    }

    #[test]
    fn laplacian_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = [(8, 2), (6, 2)];
        let s = random_product_point(&mut rng, &dims);
        let lap = build_laplacian(&[s.clone(), s]).unwrap();
        assert!(lap.w.abs().max() < 1e-7);
        assert!(lap.l.abs().max() < 1e-7);

        // two samples at distance² 1.25
        let mut w = DMatrix::zeros(2, 2);
        let d = 1.25_f64.sqrt();
        w[(0, 1)] = d;
        w[(1, 0)] = d;
        let lap = laplacian_from_weights(w);
        assert_abs_diff_eq!(lap.l[(0, 0)], d, epsilon = 1e-12);
        assert_abs_diff_eq!(lap.l[(0, 1)], -d, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_identity_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dims = [(10, 3), (7, 2)];
        let dataset: Vec<_> = (0..5).map(|_| random_product_point(&mut rng, &dims)).collect();
        let lap = build_laplacian(&dataset).unwrap();

        // rows of L sum to zero
        for i in 0..5 {
            assert_abs_diff_eq!(lap.l.row(i).sum(), 0.0, epsilon = 1e-10);
        }
        // PSD
        let dec = decompose_symmetric(&lap.l).unwrap();
        let max = dec.eigvals.first().copied().unwrap_or(0.0);
        let raw_min = lap
            .l
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        assert!(raw_min >= -1e-9 * max.max(1.0));

        // double-sum identity over 20 random Z
        for _ in 0..20 {
            let z = random_matrix(&mut rng, 5, 5);
            let direct = oracle::laplacian_double_sum(&z, &lap.w);
            let traced = 2.0 * (&z * &lap.l * z.transpose()).trace();
            assert!((direct - traced).abs() <= 1e-8 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_trivial_cases() {
        let delta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        let dec = decompose_symmetric(&delta).unwrap();
        let sol = pglrr_closed_form(&dec, 2.0);
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.75, 0.0]));
        assert_abs_diff_eq!(sol.z, expected, epsilon = 1e-12);

        // λ/2 above every eigenvalue zeroes the solution
        let sol0 = pglrr_closed_form(&dec, 10.0);
        assert!(sol0.z.abs().max() == 0.0);
    }

    #[test]
    fn closed_form_beats_perturbations_and_matches_prox_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let delta = random_psd(&mut rng, 8);
        let dec = decompose_symmetric(&delta).unwrap();
        let lambda = 0.5 * dec.eigvals[0];
        let sol = pglrr_closed_form(&dec, lambda);

        let obj = oracle::spectral_objective(&sol.z, &delta, lambda);
        assert!((obj - sol.objective).abs() <= 1e-9 * obj.abs().max(1.0));

        for _ in 0..200 {
            let g = random_matrix(&mut rng, 8, 8);
            let perturbed = &sol.z + 0.01 * g;
            assert!(oracle::spectral_objective(&perturbed, &delta, lambda) >= obj - 1e-12);
        }

        let prox = oracle::proximal_gradient_solve(&delta, lambda, 4000);
        let prox_obj = oracle::spectral_objective(&prox, &delta, lambda);
        assert!((obj - prox_obj).abs() <= 1e-6 * prox_obj.abs().max(1.0));
    }

    #[test]
    fn closed_form_symmetric_psd_with_expected_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let delta = random_psd(&mut rng, 8);
        let dec = decompose_symmetric(&delta).unwrap();
        let lambda = dec.eigvals[3]; // strictly between eigenvalues in general
        let sol = pglrr_closed_form(&dec, lambda);

        assert!((&sol.z - sol.z.transpose()).abs().max() < 1e-9);
        let eigs = sol.z.clone().symmetric_eigen().eigenvalues;
        assert!(eigs.iter().all(|&v| v > -1e-10));
        let expected_rank = dec.eigvals.iter().filter(|&&s| s > 0.5 * lambda).count();
        let rank = eigs.iter().filter(|&&v| v > 1e-10).count();
        assert_eq!(rank, expected_rank);

        // support of D_λ is invariant under joint scaling of Δ and λ
        let dec_scaled = decompose_symmetric(&(3.0 * &delta)).unwrap();
        let sol_scaled = pglrr_closed_form(&dec_scaled, 3.0 * lambda);
        let rank_scaled = sol_scaled
            .z
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .filter(|&&v| v > 1e-10)
            .count();
        assert_eq!(rank, rank_scaled);
    }

    #[test]
    fn svt_trivial_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 6, 6);
        assert!((svt(&m, 0.0).unwrap() - &m).abs().max() < 1e-12);

        // rank-1 soft threshold
        let u = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let v = nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let r1 = 3.0 * &u * v.transpose();
        let expected: DMatrix<f64> = 2.0 * &u * v.transpose();
        assert!((svt(&r1, 1.0).unwrap() - expected).abs().max() < 1e-12);

        // full-SVD soft-threshold oracle at the median singular value
        let svd = m.clone().svd(true, true);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tau = sv[2];
        let shrunk = nalgebra::DVector::from_iterator(
            6,
            svd.singular_values.iter().map(|&s| (s - tau).max(0.0)),
        );
        let oracle_m = svd.u.unwrap() * DMatrix::from_diagonal(&shrunk) * svd.v_t.unwrap();
        assert!((svt(&m, tau).unwrap() - oracle_m).abs().max() < 1e-10);
    }

    #[test]
    fn svt_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let a = random_matrix(&mut rng, 5, 5);
            let b = random_matrix(&mut rng, 5, 5);
            let tau = rng.gen_range(0.0..2.0);
            let lhs = (svt(&a, tau).unwrap() - svt(&b, tau).unwrap()).norm();
            assert!(lhs <= (&a - &b).norm() + 1e-12);
        }
    }

    #[test]
    fn update_j_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = random_matrix(&mut rng, 5, 5);
        let zero = DMatrix::zeros(5, 5);

        // huge μ: threshold vanishes
        let j = update_j(&z, &zero, 1e12).unwrap();
        assert!((&j - &z).abs().max() < 1e-10);

        // Z + A/μ = 0 maps to 0
        let a = -2.0 * &z;
        let j = update_j(&z, &a, 2.0).unwrap();
        assert!(j.abs().max() < 1e-12);

        // J minimizes the augmented J-subproblem among random candidates
        let a = random_matrix(&mut rng, 5, 5);
        let mu = 3.0;
        let j = update_j(&z, &a, mu).unwrap();
        let sub = |j: &DMatrix<f64>| {
            nuclear_norm(j)
                + (a.transpose() * (&z - j)).trace()
                + 0.5 * mu * (&z - j).norm_squared()
        };
        let jobj = sub(&j);
        for _ in 0..100 {
            let cand = &j + 0.05 * random_matrix(&mut rng, 5, 5);
            assert!(sub(&cand) >= jobj - 1e-10);
        }
    }

    #[test]
    fn update_z_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 5;
        let sigmas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..4.0)).collect();
        let delta = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigmas.clone()));
        let zero = DMatrix::zeros(n, n);
        let mu = 0.7;

        // β = 0, A = 0, J = 0: diagonal with entries 2λσ/(2λσ + μ)
        let cfg = SolverConfig::new(1.3, 0.0);
        let z = update_z(&delta, &zero, &zero, &zero, &cfg, mu).unwrap();
        for (i, &s) in sigmas.iter().enumerate() {
            let expect = 2.0 * cfg.lambda * s / (2.0 * cfg.lambda * s + mu);
            assert_abs_diff_eq!(z[(i, i)], expect, epsilon = 1e-10);
        }

        // λ → 0, β = 0, A = 0: Z = J
        let cfg = SolverConfig {
            lambda: 1e-300,
            ..SolverConfig::new(1.0, 0.0)
        };
        let j = random_matrix(&mut rng, n, n);
        let z = update_z(&zero, &zero, &j, &zero, &cfg, mu).unwrap();
        assert!((&z - &j).abs().max() < 1e-10);
    }

    #[test]
    fn update_z_stationarity_over_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = 6;
            let delta = random_psd(&mut rng, n);
            let w = {
                let mut w = random_matrix(&mut rng, n, n).abs();
                for i in 0..n {
                    w[(i, i)] = 0.0;
                }
                let w = 0.5 * (&w + w.transpose());
                w
            };
            let lap = laplacian_from_weights(w);
            let j = random_matrix(&mut rng, n, n);
            let a = random_matrix(&mut rng, n, n);
            let cfg = SolverConfig::new(rng.gen_range(0.1..5.0), rng.gen_range(0.0..0.5));
            let mu = rng.gen_range(0.05..10.0);

            let z = update_z(&delta, &lap.l, &j, &a, &cfg, mu).unwrap();
            let res = z_step_residual(&z, &delta, &lap.l, &j, &a, &cfg, mu);
            assert!(res <= 1e-8, "stationarity residual {res}");

            // objective at Z beats nearby perturbations
            let sub = |m: &DMatrix<f64>| {
                -2.0 * cfg.lambda * (m * &delta).trace()
                    + cfg.lambda * (m * &delta * m.transpose()).trace()
                    + 2.0 * cfg.beta * (m * &lap.l * m.transpose()).trace()
                    + (a.transpose() * (m - &j)).trace()
                    + 0.5 * mu * (m - &j).norm_squared()
            };
            let zobj = sub(&z);
            for _ in 0..10 {
                let cand = &z + 0.01 * random_matrix(&mut rng, n, n);
                assert!(sub(&cand) >= zobj - 1e-10);
            }
        }
    }

    #[test]
    fn objective_trivial_and_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 5;
        let delta = random_psd(&mut rng, n);
        let lap = laplacian_from_weights(DMatrix::zeros(n, n));
        let zero = DMatrix::zeros(n, n);
        assert_eq!(lappglrr_objective(&zero, &delta, &lap.l, 1.0, 0.5), 0.0);

        // Z = I, β = 0: −λΣσ + N
        let sigmas = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let eye = DMatrix::identity(3, 3);
        let l3 = DMatrix::zeros(3, 3);
        let lambda = 0.7;
        let got = lappglrr_objective(&eye, &sigmas, &l3, lambda, 0.0);
        assert_abs_diff_eq!(got, -lambda * 6.0 + 3.0, epsilon = 1e-10);

        // finite-difference gradient of the smooth part
        let w = {
            let mut w = random_matrix(&mut rng, n, n).abs();
            for i in 0..n {
                w[(i, i)] = 0.0;
            }
            0.5 * (&w + w.transpose())
        };
        let lap = laplacian_from_weights(w);
        let z = random_matrix(&mut rng, n, n);
        let (lambda, beta) = (1.2, 0.3);
        let smooth = |m: &DMatrix<f64>| {
            -2.0 * lambda * (m * &delta).trace()
                + lambda * (m * &delta * m.transpose()).trace()
                + 2.0 * beta * (m * &lap.l * m.transpose()).trace()
        };
        let analytic =
            -2.0 * lambda * &delta + 2.0 * lambda * &z * &delta + 4.0 * beta * &z * &lap.l;
        let h = 1e-6;
        for r in 0..n {
            for c in 0..n {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[(r, c)] += h;
                zm[(r, c)] -= h;
                let fd = (smooth(&zp) - smooth(&zm)) / (2.0 * h);
                let denom = analytic[(r, c)].abs().max(1.0);
                assert!((fd - analytic[(r, c)]).abs() / denom < 1e-5);
            }
        }
    }

    #[test]
    fn alm_terminates_on_tiny_identical_dataset() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = [(8, 3)];
        let s = random_product_point(&mut rng, &dims);
        let dataset = vec![s.clone(), s];
        let gram = crate::gram::build_gram_stack(&dataset).unwrap();
        let lap = build_laplacian(&dataset).unwrap();
        let cfg = SolverConfig::new(1.0, 0.0);
        let sol = lappglrr_solve(&gram, &lap, &cfg).unwrap();
        assert!(sol.converged);
        assert!(sol.final_gap < 1e-8);
        assert!((&sol.z - sol.z.transpose()).abs().max() < 1e-6);
    }

    #[test]
    fn alm_matches_closed_form_at_beta_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let delta = random_psd(&mut rng, 8);
        let gram = stack_from_delta(delta.clone());
        let lap = laplacian_from_weights(DMatrix::zeros(8, 8));
        let lambda_fid = 2.0;
        let cfg = SolverConfig::new(lambda_fid, 0.0);

        let sol = lappglrr_solve(&gram, &lap, &cfg).unwrap();
        assert!(sol.converged, "gap {}", sol.final_gap);

        let dec = decompose_symmetric(&delta).unwrap();
        let closed = pglrr_closed_form(&dec, 1.0 / lambda_fid);
        let rel = (&sol.z - &closed.z).norm() / closed.z.norm().max(1.0);
        assert!(rel < 1e-3, "relative gap {rel}");
    }

    #[test]
    fn alm_objective_trace_nonincreasing_with_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dims = [(12, 3), (10, 2)];
        let dataset: Vec<_> = (0..8).map(|_| random_product_point(&mut rng, &dims)).collect();
        let gram = crate::gram::build_gram_stack(&dataset).unwrap();
        let lap = build_laplacian(&dataset).unwrap();
        let cfg = SolverConfig::new(1.0, 1e-3);

        let (sol, trace) = lappglrr_solve_traced(&gram, &lap, &cfg, true).unwrap();
        assert!(sol.converged);
        for pair in trace.j_objectives.windows(2).skip(5) {
            assert!(pair[1] <= pair[0] + 1e-10, "objective rose: {pair:?}");
        }
        assert!(sol.max_stationarity_residual <= 1e-8);
    }
}
