//! Maximum pseudo-likelihood estimation of the within- and between-block
//! coefficients, sandwich covariance and AIC.

mod aic;
mod design;
mod godambe;

pub use aic::{aic, AicConfig, AicMethod, AicResult};
pub use design::{between_design, within_design, MultinomialDesign};
pub(crate) use design::design_for_blocks;
pub use godambe::{godambe_covariance, GodambeConfig};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{BlockAssignment, SignedNetwork};
use crate::scalar::Scalar;
use crate::statistics::ModelSpec;

/// Within coefficients `β_w` (vectorized `v ⊗ s`, covariate-major) and
/// between coefficients `β_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Coefficients<S> {
    #[serde(rename = "within")]
    pub beta_w: Vec<S>,
    #[serde(rename = "between", default)]
    pub beta_b: Vec<S>,
}

impl<S: Scalar> Coefficients<S> {
    pub fn check_dims(&self, spec: &ModelSpec, k_blocks: usize) -> Result<()> {
        if self.beta_w.len() != spec.within_dim(k_blocks) {
            return Err(Error::DimensionMismatch {
                expected: spec.within_dim(k_blocks),
                found: self.beta_w.len(),
            });
        }
        if k_blocks > 1 && self.beta_b.len() != spec.between_dim(k_blocks) {
            return Err(Error::DimensionMismatch {
                expected: spec.between_dim(k_blocks),
                found: self.beta_b.len(),
            });
        }
        Ok(())
    }

    /// `θ_kk = (v_kᵀ β_w)ᵀ` for block `k`, given all block sizes.
    pub fn theta_within(&self, spec: &ModelSpec, k: usize, sizes: &[usize]) -> Result<Vec<S>> {
        let v = spec.covariates.vector(k, sizes[k], sizes.len());
        contract(&self.beta_w, &v, spec.n_within())
    }

    /// `θ_kl = (u_klᵀ β_b)ᵀ` for the pair `(k, l)`.
    pub fn theta_between(&self, spec: &ModelSpec, k: usize, l: usize, k_blocks: usize) -> Result<Vec<S>> {
        let u = spec.between_covariates.vector(k, l, k_blocks);
        contract(&self.beta_b, &u, spec.n_between())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Coefficients<T> {
        Coefficients {
            beta_w: self.beta_w.iter().map(|&x| f(x)).collect(),
            beta_b: self.beta_b.iter().map(|&x| f(x)).collect(),
        }
    }
}

fn contract<S: Scalar>(beta: &[S], v: &[f64], p: usize) -> Result<Vec<S>> {
    if beta.len() != v.len() * p {
        return Err(Error::DimensionMismatch {
            expected: v.len() * p,
            found: beta.len(),
        });
    }
    Ok((0..p)
        .map(|a| v.iter().enumerate().map(|(b, &vb)| S::of(vb) * beta[b * p + a]).sum())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceKind {
    /// Inverse negative Hessian `J⁻¹`.
    Fisher,
    /// Sandwich `J⁻¹ V J⁻¹` with `V` from simulated scores.
    Godambe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Convergence threshold on the sup-norm of the score.
    pub tol: f64,
    pub max_halvings: usize,
    pub ridge: f64,
    /// Coefficient magnitude taken as a sign of separation.
    pub separation_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 100,
            tol: 1e-8,
            max_halvings: 20,
            ridge: 1e-8,
            separation_threshold: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FitResult<S> {
    pub names: Vec<String>,
    pub beta: Vec<S>,
    pub covariance: Matrix<S>,
    pub covariance_kind: CovarianceKind,
    /// Pseudo-log-likelihood at `beta` (the exact log-likelihood for
    /// dyad-independent models).
    pub loglik: f64,
    pub aic: Option<f64>,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub separation: bool,
    pub n_dyads: usize,
    /// Simulations behind a Godambe covariance.
    pub godambe_r: Option<usize>,
    pub godambe_seed: Option<u64>,
}

impl<S: Scalar> FitResult<S> {
    pub fn standard_errors(&self) -> Vec<S> {
        self.covariance.diagonal().into_iter().map(|v| v.max(S::zero()).sqrt()).collect()
    }
}

/// Solves `(J + ridge I) d = u`, raising the ridge until the factorization succeeds.
pub(crate) fn regularized_solve<S: Scalar>(info: &Matrix<S>, rhs: &[S], ridge: f64) -> Option<Vec<S>> {
    let n = info.rows();
    let scale = info.diagonal().iter().fold(S::one(), |m, &d| m.max(d.abs()));
    let mut lambda = S::zero();
    for attempt in 0..12 {
        let mut m = info.clone();
        for i in 0..n {
            m[(i, i)] = m[(i, i)] + lambda;
        }
        if let Some(l) = m.cholesky() {
            if attempt > 0 {
                warn!("information matrix is near-singular; added ridge {:e}", lambda.as_f64());
            }
            return Some(Matrix::cholesky_solve(&l, rhs));
        }
        lambda = if attempt == 0 {
            S::of(ridge) * scale.max(S::one())
        } else {
            lambda * S::of(10.0)
        };
    }
    None
}

/// Inverse of `J`, or its pseudo-inverse with a warning when `J` is singular.
pub(crate) fn invert_information<S: Scalar>(info: &Matrix<S>) -> Matrix<S> {
    if let Some(inv) = info.spd_inverse() {
        return inv;
    }
    warn!("information matrix is singular; using its pseudo-inverse");
    info.symmetric_pinv().0
}

pub(crate) struct NewtonOutcome<S> {
    pub beta: Vec<S>,
    pub loglik: S,
    pub info: Matrix<S>,
    pub gradient_norm: S,
    pub iterations: usize,
    pub converged: bool,
    pub separation: bool,
}

/// Newton-Raphson with step halving on a multinomial-logit design.
pub(crate) fn newton<S: Scalar>(design: &MultinomialDesign<S>, start: Vec<S>, config: &FitConfig) -> NewtonOutcome<S> {
    let tol = S::of(config.tol).max(S::of(64.0) * S::epsilon() * design.scale());
    let mut beta = start;
    let (mut ll, mut score, mut info) = design.evaluate(&beta);
    let mut iterations = 0;
    let sup = |u: &[S]| u.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
    let mut converged = sup(&score) < tol;
    while !converged && iterations < config.max_iter {
        iterations += 1;
        let Some(direction) = regularized_solve(&info, &score, config.ridge) else {
            warn!("Newton direction could not be computed");
            break;
        };
        let mut step = S::one();
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let candidate: Vec<S> = beta.iter().zip(&direction).map(|(&b, &d)| b + step * d).collect();
            let cand_ll = design.loglik(&candidate);
            if cand_ll.is_finite() && cand_ll >= ll - S::epsilon() * ll.abs() {
                accepted = Some(candidate);
                break;
            }
            step = step * S::of(0.5);
        }
        let Some(next) = accepted else {
            // Predicted gain below the rounding level of the log-likelihood.
            let decrement: S = score.iter().zip(&direction).map(|(&g, &d)| g * d).sum();
            converged = decrement.abs() <= S::of(64.0) * S::epsilon() * ll.abs().max(S::one());
            if !converged {
                warn!("step halving failed to improve the pseudo-likelihood");
            }
            break;
        };
        beta = next;
        (ll, score, info) = design.evaluate(&beta);
        converged = sup(&score) < tol;
    }
    let separation = beta.iter().any(|b| b.abs().as_f64() > config.separation_threshold);
    if separation {
        warn!(
            "coefficient magnitude exceeds {}; the statistics may separate the observed signs",
            config.separation_threshold
        );
    }
    NewtonOutcome {
        gradient_norm: sup(&score),
        beta,
        loglik: ll,
        info,
        iterations,
        converged: converged && !separation,
        separation,
    }
}

pub(crate) fn fit_design<S: Scalar>(design: &MultinomialDesign<S>, names: Vec<String>, config: &FitConfig) -> FitResult<S> {
    let outcome = newton(design, vec![S::zero(); design.dim()], config);
    if !outcome.converged {
        warn!("Newton-Raphson did not converge after {} iterations", outcome.iterations);
    }
    FitResult {
        names,
        covariance: invert_information(&outcome.info),
        beta: outcome.beta,
        covariance_kind: CovarianceKind::Fisher,
        loglik: outcome.loglik.as_f64(),
        aic: None,
        converged: outcome.converged,
        gradient_norm: outcome.gradient_norm.as_f64(),
        iterations: outcome.iterations,
        separation: outcome.separation,
        n_dyads: design.n_dyads(),
        godambe_r: None,
        godambe_seed: None,
    }
}

/// MPLE of `β_w` from all within-block dyads. The covariance is `J⁻¹`; see
/// [`godambe_covariance`] for the sandwich correction.
pub fn fit_within<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<FitResult<S>> {
    let design = within_design(net, z, spec)?;
    if design.n_dyads() == 0 {
        return Err(Error::NoDyads("within-block"));
    }
    Ok(fit_design(&design, spec.within_names(z.n_blocks()), config))
}

/// MLE of `β_b` from the between-block dyad counts.
pub fn fit_between<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &FitConfig,
) -> Result<FitResult<S>> {
    let design = between_design(net, z, spec)?;
    if design.n_dyads() == 0 {
        return Err(Error::NoDyads("between-block"));
    }
    Ok(fit_design(&design, spec.between_names(z.n_blocks()), config))
}

/// Within-block log pseudo-likelihood at `beta_w`.
pub fn pseudo_loglik<S: Scalar>(beta_w: &[S], net: &SignedNetwork, z: &BlockAssignment, spec: &ModelSpec) -> Result<S> {
    let design = within_design(net, z, spec)?;
    if beta_w.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            found: beta_w.len(),
        });
    }
    Ok(design.loglik(beta_w))
}

/// Score `u(β)` and negative Hessian `J(β)` of the within pseudo-likelihood.
pub fn pseudo_score<S: Scalar>(
    beta_w: &[S],
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
) -> Result<(Vec<S>, Matrix<S>)> {
    let design = within_design(net, z, spec)?;
    if beta_w.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            found: beta_w.len(),
        });
    }
    let (_, u, j) = design.evaluate(beta_w);
    Ok((u, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Sign;
    use crate::statistics::{WithinCovariates, WithinTerm};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(n: usize, pp: f64, pn: f64, seed: u64) -> SignedNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let u: f64 = rng.random();
                if u < pp {
                    edges.push((i, j, Sign::Pos));
                } else if u < pp + pn {
                    edges.push((i, j, Sign::Neg));
                }
            }
        }
        SignedNetwork::from_edges(n, edges).unwrap()
    }

    #[test]
    fn zero_beta_gives_log_three_per_dyad() {
        let y = random_net(12, 0.2, 0.1, 1);
        let z = BlockAssignment::new((0..12).map(|i| i % 3).collect(), 3).unwrap();
        let spec = ModelSpec::structural(0.3);
        let ll = pseudo_loglik(&[0.0; 5], &y, &z, &spec).unwrap();
        assert_relative_eq!(ll, -18.0 * 3f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn single_dyad_example() {
        let y = SignedNetwork::from_edges(2, [(0, 1, Sign::Pos)]).unwrap();
        let z = BlockAssignment::new(vec![0, 0], 1).unwrap();
        let ll = pseudo_loglik(&[2f64.ln(), 0.0], &y, &z, &ModelSpec::edges()).unwrap();
        assert_relative_eq!(ll, 0.5f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn edges_only_pseudo_likelihood_is_exact() {
        let y = random_net(15, 0.2, 0.3, 2);
        let z = BlockAssignment::new((0..15).map(|i| i % 2).collect(), 2).unwrap();
        let beta = [0.4, -0.3];
        let (pp, pn, p0) = crate::sampler::between_probabilities(beta[0], beta[1]);
        let mut exact = 0.0;
        for i in 0..15 {
            for j in i + 1..15 {
                if z.block_of(i) == z.block_of(j) {
                    exact += match y.sign(i, j) {
                        Some(Sign::Pos) => pp.ln(),
                        Some(Sign::Neg) => pn.ln(),
                        None => p0.ln(),
                    };
                }
            }
        }
        assert_relative_eq!(pseudo_loglik(&beta, &y, &z, &ModelSpec::edges()).unwrap(), exact, epsilon = 1e-10);
    }

    #[test]
    fn intercept_between_closed_form() {
        // two blocks of 10: 100 cross dyads with 10 positive and 20 negative
        let mut edges = Vec::new();
        let mut count = 0;
        for a in 0..10 {
            for b in 10..20 {
                if count < 10 {
                    edges.push((a, b, Sign::Pos));
                } else if count < 30 {
                    edges.push((a, b, Sign::Neg));
                }
                count += 1;
            }
        }
        let y = SignedNetwork::from_edges(20, edges).unwrap();
        let z = BlockAssignment::new((0..20).map(|i| i / 10).collect(), 2).unwrap();
        let fit = fit_between::<f64>(&y, &z, &ModelSpec::edges(), &FitConfig::default()).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.beta[0], (10.0f64 / 70.0).ln(), epsilon = 1e-9);
        assert_relative_eq!(fit.beta[1], (20.0f64 / 70.0).ln(), epsilon = 1e-9);
    }

    #[test]
    fn dyad_independent_mple_equals_frequencies() {
        let y = random_net(40, 0.15, 0.25, 3);
        let z = BlockAssignment::new((0..40).map(|i| i % 4).collect(), 4).unwrap();
        let fit = fit_within::<f64>(&y, &z, &ModelSpec::edges(), &FitConfig::default()).unwrap();
        let (mut pos, mut neg, mut total) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..40 {
            for j in i + 1..40 {
                if z.block_of(i) == z.block_of(j) {
                    total += 1.0;
                    match y.sign(i, j) {
                        Some(Sign::Pos) => pos += 1.0,
                        Some(Sign::Neg) => neg += 1.0,
                        None => {}
                    }
                }
            }
        }
        let zero = total - pos - neg;
        assert_relative_eq!(fit.beta[0], (pos / zero).ln(), epsilon = 1e-9);
        assert_relative_eq!(fit.beta[1], (neg / zero).ln(), epsilon = 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let y = random_net(18, 0.2, 0.15, 4);
        let z = BlockAssignment::new((0..18).map(|i| i % 2).collect(), 2).unwrap();
        let spec = ModelSpec::full_triad(0.2, 0.4).with_covariates(WithinCovariates::LogSize);
        let dim = spec.within_dim(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let beta: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            let (u, j) = pseudo_score(&beta, &y, &z, &spec).unwrap();
            for a in 0..dim {
                let h = 1e-5;
                let mut up = beta.clone();
                up[a] += h;
                let mut down = beta.clone();
                down[a] -= h;
                let fd = (pseudo_loglik(&up, &y, &z, &spec).unwrap() - pseudo_loglik(&down, &y, &z, &spec).unwrap()) / (2.0 * h);
                assert!((fd - u[a]).abs() <= 1e-5 * u[a].abs().max(1.0), "{fd} vs {}", u[a]);
                let (u_up, _) = pseudo_score(&up, &y, &z, &spec).unwrap();
                let (u_down, _) = pseudo_score(&down, &y, &z, &spec).unwrap();
                for b in 0..dim {
                    let fd = -(u_up[b] - u_down[b]) / (2.0 * h);
                    assert!((fd - j[(b, a)]).abs() <= 1e-4 * j[(b, a)].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn information_is_positive_semidefinite() {
        let y = random_net(16, 0.3, 0.2, 6);
        let z = BlockAssignment::new(vec![0; 16], 1).unwrap();
        let spec = ModelSpec::triads();
        let (_, j) = pseudo_score(&[0.1, -0.2, 0.3, 0.05], &y, &z, &spec).unwrap();
        let (vals, _) = j.symmetric_eigen();
        assert!(vals.iter().all(|&v| v > -1e-8));
    }

    #[test]
    fn covariate_scaling_rescales_coefficients() {
        let y = random_net(24, 0.25, 0.2, 7);
        let z = BlockAssignment::new((0..24).map(|i| i % 2).collect(), 2).unwrap();
        let base = vec![vec![1.0, 0.5], vec![1.0, 1.5]];
        let scaled = vec![vec![1.0, 1.0], vec![1.0, 3.0]];
        let spec_a = ModelSpec::structural(0.2).with_covariates(WithinCovariates::Custom { values: base });
        let spec_b = ModelSpec::structural(0.2).with_covariates(WithinCovariates::Custom { values: scaled });
        let fa = fit_within::<f64>(&y, &z, &spec_a, &FitConfig::default()).unwrap();
        let fb = fit_within::<f64>(&y, &z, &spec_b, &FitConfig::default()).unwrap();
        let p = spec_a.n_within();
        for a in 0..p {
            assert_relative_eq!(fa.beta[a], fb.beta[a], epsilon = 1e-6);
            assert_relative_eq!(fa.beta[p + a], 2.0 * fb.beta[p + a], epsilon = 1e-6);
        }
        let sizes = z.sizes();
        let ca = Coefficients { beta_w: fa.beta.clone(), beta_b: vec![] };
        let cb = Coefficients { beta_w: fb.beta.clone(), beta_b: vec![] };
        for k in 0..2 {
            let ta = ca.theta_within(&spec_a, k, &sizes).unwrap();
            let tb = cb.theta_within(&spec_b, k, &sizes).unwrap();
            for (x, w) in ta.iter().zip(&tb) {
                assert_relative_eq!(x, w, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn separation_is_flagged() {
        // no negative ties anywhere: the negative edge coefficient diverges
        let edges = (0..6).flat_map(|i| (i + 1..6).filter(move |j| (i + j) % 2 == 0).map(move |j| (i, j, Sign::Pos)));
        let y = SignedNetwork::from_edges(6, edges).unwrap();
        let z = BlockAssignment::new(vec![0; 6], 1).unwrap();
        let fit = fit_within::<f64>(&y, &z, &ModelSpec::edges(), &FitConfig::default()).unwrap();
        assert!(fit.separation);
        assert!(!fit.converged);
    }

    #[test]
    fn theta_from_coefficients() {
        let spec = ModelSpec::edges().with_covariates(WithinCovariates::LogSize);
        let c = Coefficients { beta_w: vec![1.0, 2.0, 0.5, -0.5], beta_b: vec![-1.0, -2.0] };
        let sizes = [10, 20];
        let t = c.theta_within(&spec, 1, &sizes).unwrap();
        assert_relative_eq!(t[0], 1.0 + 0.5 * 20f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(t[1], 2.0 - 0.5 * 20f64.ln(), epsilon = 1e-15);
        assert_eq!(c.theta_between(&spec, 0, 1, 2).unwrap(), vec![-1.0, -2.0]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"within":[1.0,2.0,0.5,-0.5],"between":[-1.0,-2.0]}"#);
    }

    #[test]
    fn empty_dyad_sets_rejected() {
        let y = SignedNetwork::empty(3);
        let z = BlockAssignment::new(vec![0, 1, 2], 3).unwrap();
        assert!(matches!(
            fit_within::<f64>(&y, &z, &ModelSpec::edges(), &FitConfig::default()),
            Err(Error::NoDyads(_))
        ));
        let z1 = BlockAssignment::new(vec![0, 0, 0], 1).unwrap();
        assert!(matches!(
            fit_between::<f64>(&y, &z1, &ModelSpec::edges(), &FitConfig::default()),
            Err(Error::NoDyads(_))
        ));
    }

    #[test]
    fn single_precision_fit() {
        let y = random_net(30, 0.2, 0.2, 8);
        let z = BlockAssignment::new((0..30).map(|i| i % 3).collect(), 3).unwrap();
        let spec = ModelSpec::new(vec![WithinTerm::EdgesPos, WithinTerm::EdgesNeg, WithinTerm::GwdPos { omega: 0.2 }]);
        let a = fit_within::<f32>(&y, &z, &spec, &FitConfig::default()).unwrap();
        let b = fit_within::<f64>(&y, &z, &spec, &FitConfig::default()).unwrap();
        assert!(a.converged);
        for (x, w) in a.beta.iter().zip(&b.beta) {
            assert!((*x as f64 - w).abs() < 1e-3);
        }
    }
}
