//! Two-step estimation (variational block recovery, then MPLE given the
//! blocks) and uncertainty quantification by resampling block memberships.

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    aic, fit_between, fit_within, godambe_covariance, AicConfig, AicResult, Coefficients, CovarianceKind, FitConfig,
    FitResult, GodambeConfig,
};
use crate::linalg::Matrix;
use crate::network::{BlockAssignment, SignedNetwork};
use crate::sampler::derive_seed;
use crate::scalar::Scalar;
use crate::ssbm::{fit, hard_assignment, MembershipProbabilities, VariationalConfig, VariationalFit};
use crate::statistics::ModelSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub variational: VariationalConfig,
    pub fit: FitConfig,
    /// Sandwich covariance for the within fit; `None` keeps `J⁻¹`.
    pub godambe: Option<GodambeConfig>,
    pub aic: Option<AicConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variational: VariationalConfig::default(),
            fit: FitConfig::default(),
            godambe: Some(GodambeConfig::default()),
            aic: None,
        }
    }
}

/// Step-2 fits for a fixed block assignment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BlockFits<S> {
    pub within: FitResult<S>,
    /// Absent when `K = 1`.
    pub between: Option<FitResult<S>>,
    pub aic: Option<AicResult>,
}

impl<S: Scalar> BlockFits<S> {
    pub fn coefficients(&self) -> Coefficients<S> {
        Coefficients {
            beta_w: self.within.beta.clone(),
            beta_b: self.between.as_ref().map_or_else(Vec::new, |b| b.beta.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Estimate<S> {
    /// Step-1 fit; absent when the blocks were supplied.
    pub variational: Option<VariationalFit<S>>,
    pub z: BlockAssignment,
    /// Nodes whose block was chosen among tied membership probabilities.
    pub ties: Vec<usize>,
    pub fits: BlockFits<S>,
}

/// MPLE of the within coefficients (with Godambe covariance if configured),
/// MLE of the between coefficients and optionally the AIC.
pub fn fit_blocks<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &PipelineConfig,
) -> Result<BlockFits<S>> {
    if let Some(k) = z.sizes().iter().position(|&s| s == 0) {
        return Err(Error::EmptyBlock(k + 1));
    }
    z.check_block_sizes();
    let mut within = fit_within::<S>(net, z, spec, &config.fit)?;
    if let Some(g) = &config.godambe {
        within.covariance = godambe_covariance(&within.beta, net, z, spec, g)?;
        within.covariance_kind = CovarianceKind::Godambe;
        within.godambe_r = Some(g.r);
        within.godambe_seed = Some(g.seed);
    }
    let between = if z.n_blocks() > 1 {
        Some(fit_between::<S>(net, z, spec, &config.fit)?)
    } else {
        None
    };
    let mut fits = BlockFits { within, between, aic: None };
    if let Some(a) = &config.aic {
        let result = aic(&fits.coefficients(), net, z, spec, a)?;
        fits.within.aic = Some(result.aic);
        fits.aic = Some(result);
    }
    Ok(fits)
}

/// Both steps: variational SSBM fit with `k` blocks, hard assignment, then
/// [`fit_blocks`].
pub fn estimate<S: Scalar>(net: &SignedNetwork, k: usize, spec: &ModelSpec, config: &PipelineConfig) -> Result<Estimate<S>> {
    spec.validate_for(k)?;
    let variational: VariationalFit<S> = fit(net, k, &config.variational)?;
    info!(
        "variational fit: {} iterations, lower bound {:.6}",
        variational.iterations,
        variational.lb_trace.last().map_or(f64::NAN, |lb| lb.as_f64())
    );
    let hard = hard_assignment(&variational.alpha);
    let fits = fit_blocks(net, &hard.z, spec, config)?;
    Ok(Estimate {
        variational: Some(variational),
        z: hard.z,
        ties: hard.ties,
        fits,
    })
}

/// Step 2 only, with observed blocks.
pub fn estimate_with_blocks<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &PipelineConfig,
) -> Result<Estimate<S>> {
    if z.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: z.n_nodes(),
        });
    }
    Ok(Estimate {
        variational: None,
        z: z.clone(),
        ties: Vec::new(),
        fits: fit_blocks(net, z, spec, config)?,
    })
}

/// Pooled point estimate and variance of one coefficient vector over `T`
/// sampled partitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PooledEstimate<S> {
    pub names: Vec<String>,
    pub mean: Vec<S>,
    /// `(1/T) Σ_t Σ̂⁽ᵗ⁾`.
    pub mean_covariance: Matrix<S>,
    /// `(1/(T-1)) Σ_t (β̂⁽ᵗ⁾ - β̄)(β̂⁽ᵗ⁾ - β̄)ᵀ`.
    pub between_sample_covariance: Matrix<S>,
    pub total_variance: Matrix<S>,
}

impl<S: Scalar> PooledEstimate<S> {
    pub fn standard_errors(&self) -> Vec<S> {
        self.total_variance.diagonal().into_iter().map(|v| v.max(S::zero()).sqrt()).collect()
    }
}

/// Pools per-sample estimates and covariances.
pub fn pool<S: Scalar>(names: Vec<String>, samples: &[(&[S], &Matrix<S>)]) -> Result<PooledEstimate<S>> {
    let t = samples.len();
    if t == 0 {
        return Err(Error::invalid("nothing to pool"));
    }
    let d = samples[0].0.len();
    if samples.iter().any(|(b, c)| b.len() != d || c.rows() != d || c.cols() != d) {
        return Err(Error::invalid("pooled estimates differ in dimension"));
    }
    let tt = S::of_usize(t);
    let mut mean = vec![S::zero(); d];
    let mut mean_covariance = Matrix::zeros(d, d);
    for (n, (b, c)) in samples.iter().enumerate() {
        let w = S::one() / S::of_usize(n + 1);
        for (m, &x) in mean.iter_mut().zip(b.iter()) {
            *m = *m + (x - *m) * w;
        }
        for i in 0..d {
            for j in 0..d {
                let m = mean_covariance[(i, j)];
                mean_covariance[(i, j)] = m + (c[(i, j)] - m) * w;
            }
        }
    }
    let mut between = Matrix::zeros(d, d);
    if t > 1 {
        let w = S::one() / (tt - S::one());
        for (b, _) in samples {
            let centered: Vec<S> = b.iter().zip(&mean).map(|(&x, &m)| x - m).collect();
            between.add_outer(w, &centered);
        }
    } else {
        warn!("a single partition gives no between-sample variance");
    }
    between.symmetrize();
    mean_covariance.symmetrize();
    Ok(PooledEstimate {
        names,
        mean,
        total_variance: mean_covariance.add(&between),
        mean_covariance,
        between_sample_covariance: between,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SampleFit<S> {
    /// Index of the draw among the `T` requested.
    pub sample: usize,
    pub z: BlockAssignment,
    pub fits: BlockFits<S>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PooledResult<S> {
    pub within: PooledEstimate<S>,
    pub between: Option<PooledEstimate<S>>,
    pub mean_aic: Option<f64>,
    /// Partitions that entered the pooling.
    pub t: usize,
    pub requested: usize,
    /// Draws skipped after a failed redraw or a failed fit.
    pub skipped: usize,
    pub per_sample_fits: Vec<SampleFit<S>>,
}

fn draw_partition<S: Scalar, R: Rng>(alpha: &MembershipProbabilities<S>, rng: &mut R) -> BlockAssignment {
    let k = alpha.n_blocks();
    let labels = (0..alpha.n_nodes())
        .map(|i| {
            let row = alpha.row(i);
            let mut u = S::of(rng.random::<f64>());
            for (b, &p) in row.iter().enumerate() {
                if u < p {
                    return b;
                }
                u = u - p;
            }
            // rounding left u above the total mass: take the last positive entry
            row.iter().rposition(|&p| p > S::zero()).unwrap_or(k - 1)
        })
        .collect();
    BlockAssignment::new(labels, k).expect("labels below K")
}

fn degenerate(z: &BlockAssignment) -> bool {
    z.sizes().iter().any(|&s| s < 2)
}

/// Draws `T` partitions with `z_i ~ Multinomial(1, α_i)`, refits step 2 on
/// each and pools the within and between coefficients. A partition with an
/// empty or singleton block is redrawn once, then skipped.
pub fn uq_sample_and_pool<S: Scalar>(
    alpha: &MembershipProbabilities<S>,
    net: &SignedNetwork,
    spec: &ModelSpec,
    t: usize,
    seed: u64,
    config: &PipelineConfig,
) -> Result<PooledResult<S>> {
    if t < 2 {
        return Err(Error::invalid("uncertainty quantification needs T >= 2"));
    }
    if alpha.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: alpha.n_nodes(),
        });
    }
    let kb = alpha.n_blocks();
    spec.validate_for(kb)?;
    let outcomes: Vec<Option<SampleFit<S>>> = (0..t)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4, s as u64]));
            let mut z = draw_partition(alpha, &mut rng);
            if degenerate(&z) {
                z = draw_partition(alpha, &mut rng);
                if degenerate(&z) {
                    warn!("partition {} has a block with fewer than two nodes after a redraw; skipped", s + 1);
                    return Ok(None);
                }
            }
            match fit_blocks(net, &z, spec, config) {
                Ok(fits) => Ok(Some(SampleFit { sample: s, z, fits })),
                Err(e) if e.is_validation() => Err(e),
                Err(e) => {
                    warn!("fit of partition {} failed: {e}; skipped", s + 1);
                    Ok(None)
                }
            }
        })
        .collect::<Result<_>>()?;
    let per_sample_fits: Vec<SampleFit<S>> = outcomes.into_iter().flatten().collect();
    let used = per_sample_fits.len();
    if used == 0 {
        return Err(Error::Numerical("every sampled partition was skipped".into()));
    }
    if used < t {
        warn!("{} of {t} sampled partitions skipped", t - used);
    }
    let within_samples: Vec<(&[S], &Matrix<S>)> = per_sample_fits
        .iter()
        .map(|f| (f.fits.within.beta.as_slice(), &f.fits.within.covariance))
        .collect();
    let within = pool(spec.within_names(kb), &within_samples)?;
    let between = if kb > 1 {
        let samples: Vec<(&[S], &Matrix<S>)> = per_sample_fits
            .iter()
            .filter_map(|f| f.fits.between.as_ref().map(|b| (b.beta.as_slice(), &b.covariance)))
            .collect();
        Some(pool(spec.between_names(kb), &samples)?)
    } else {
        None
    };
    let aics: Vec<f64> = per_sample_fits.iter().filter_map(|f| f.fits.aic.as_ref().map(|a| a.aic)).collect();
    let mean_aic = (!aics.is_empty()).then(|| aics.iter().sum::<f64>() / aics.len() as f64);
    Ok(PooledResult {
        within,
        between,
        mean_aic,
        t: used,
        requested: t,
        skipped: t - used,
        per_sample_fits,
    })
}
