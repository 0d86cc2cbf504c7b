use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::network::{BlockAssignment, SignedNetwork};
use crate::sampler::{derive_seed, WithinChain};
use crate::scalar::Scalar;
use crate::statistics::{within_stats, ModelSpec, WithinTerm};

use super::{between_design, Coefficients};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AicConfig {
    /// Points of the path `u θ`, `u ∈ [0, 1]`, including both ends.
    pub grid_points: usize,
    /// Draws per grid point.
    pub draws: usize,
    /// Proposals before the first draw at each grid point; `None` means `2 * C(n, 2)`.
    pub burn_in: Option<usize>,
    /// Proposals between draws; `None` means `C(n, 2) / 5`.
    pub thin: Option<usize>,
    pub seed: u64,
    /// Use the closed-form normalizer when every within term is an edge count.
    pub exact_when_independent: bool,
}

impl Default for AicConfig {
    fn default() -> Self {
        AicConfig {
            grid_points: 21,
            draws: 500,
            burn_in: None,
            thin: None,
            seed: 0,
            exact_when_independent: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AicMethod {
    Exact,
    PathSampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AicResult {
    pub aic: f64,
    pub loglik: f64,
    pub loglik_within: f64,
    pub loglik_between: f64,
    /// `log κ_k(θ_kk)` per block.
    pub log_normalizers: Vec<f64>,
    pub dim: usize,
    pub method: AicMethod,
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// `log κ(θ)` of the within model on `n` nodes.
pub fn log_normalizer<S: Scalar>(
    theta: &[S],
    n: usize,
    spec: &ModelSpec,
    config: &AicConfig,
    seed: u64,
) -> Result<(f64, AicMethod)> {
    let dyads = pairs(n);
    if config.exact_when_independent && spec.is_dyad_independent() {
        let (mut tp, mut tn) = (0.0, 0.0);
        for (term, t) in spec.within.iter().zip(theta) {
            match term {
                WithinTerm::EdgesPos => tp += t.as_f64(),
                WithinTerm::EdgesNeg => tn += t.as_f64(),
                _ => unreachable!("dyad-independent terms are edge counts"),
            }
        }
        let m = tp.max(tn).max(0.0);
        let lse = m + ((tp - m).exp() + (tn - m).exp() + (-m).exp()).ln();
        return Ok((dyads as f64 * lse, AicMethod::Exact));
    }
    if config.grid_points < 2 || config.draws == 0 {
        return Err(Error::invalid("path sampling needs at least 2 grid points and 1 draw"));
    }
    let log_kappa0 = dyads as f64 * 3f64.ln();
    if dyads == 0 {
        return Ok((0.0, AicMethod::PathSampling));
    }
    let burn = config.burn_in.unwrap_or(2 * dyads);
    let thin = config.thin.unwrap_or((dyads / 5).max(1));
    let zero = vec![S::zero(); theta.len()];
    let mut chain = WithinChain::new(n, spec, &zero, seed)?;
    let g = config.grid_points;
    let mut means = Vec::with_capacity(g);
    for step in 0..g {
        let u = S::of(step as f64 / (g - 1) as f64);
        let scaled: Vec<S> = theta.iter().map(|&t| u * t).collect();
        chain.set_theta(&scaled);
        chain.run(burn);
        let mut total = 0.0;
        for d in 0..config.draws {
            if d > 0 {
                chain.run(thin);
            }
            total += dot(theta, chain.stats()).as_f64();
        }
        means.push(total / config.draws as f64);
    }
    let h = 1.0 / (g - 1) as f64;
    let integral: f64 = means.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    Ok((log_kappa0 + integral, AicMethod::PathSampling))
}

/// `AIC = -2 ℓ(β̂) + 2 dim(β)` with the within normalizers from path sampling
/// (or in closed form for dyad-independent specs) and the exact
/// between-block likelihood.
pub fn aic<S: Scalar>(
    coefficients: &Coefficients<S>,
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &AicConfig,
) -> Result<AicResult> {
    let kb = z.n_blocks();
    spec.validate_for(kb)?;
    coefficients.check_dims(spec, kb)?;
    let members = z.members();
    let sizes = z.sizes();
    let blocks: Vec<(f64, f64, AicMethod)> = (0..kb)
        .into_par_iter()
        .map(|k| {
            let theta = coefficients.theta_within(spec, k, &sizes)?;
            let observed = within_stats::<S>(&net.induced(&members[k]), spec);
            let (log_kappa, method) = log_normalizer(&theta, sizes[k], spec, config, derive_seed(config.seed, &[3, k as u64]))?;
            Ok((dot(&theta, &observed).as_f64(), log_kappa, method))
        })
        .collect::<Result<_>>()?;
    let loglik_within: f64 = blocks.iter().map(|(s, lk, _)| s - lk).sum();
    let loglik_between = if kb > 1 {
        between_design::<S>(net, z, spec)?.loglik(&coefficients.beta_b).as_f64()
    } else {
        0.0
    };
    let dim = spec.within_dim(kb) + if kb > 1 { spec.between_dim(kb) } else { 0 };
    let loglik = loglik_within + loglik_between;
    let method = if blocks.iter().all(|b| b.2 == AicMethod::Exact) {
        AicMethod::Exact
    } else {
        AicMethod::PathSampling
    };
    Ok(AicResult {
        aic: -2.0 * loglik + 2.0 * dim as f64,
        loglik,
        loglik_within,
        loglik_between,
        log_normalizers: blocks.iter().map(|b| b.1).collect(),
        dim,
        method,
    })
}
