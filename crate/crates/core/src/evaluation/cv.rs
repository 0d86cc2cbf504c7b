use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{design_for_blocks, fit_design, FitConfig};
use crate::network::{BlockAssignment, SignedNetwork};
use crate::sampler::{derive_seed, sample_within, SamplerConfig};
use crate::statistics::ModelSpec;

use super::gof::GofReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LooConfig {
    /// Simulations of each held-out block.
    pub n_sims: usize,
    pub seed: u64,
    pub fit: FitConfig,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
}

impl Default for LooConfig {
    fn default() -> Self {
        LooConfig {
            n_sims: 100,
            seed: 0,
            fit: FitConfig::default(),
            burn_in: None,
            thin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LooFold {
    /// Held-out block, 1-based.
    pub block: usize,
    /// Within coefficients refitted without the block.
    pub beta: Vec<f64>,
    pub converged: bool,
    pub report: Option<GofReport>,
    pub error: Option<String>,
}

/// Leave-one-block-out validation: for each block, refit the within model on
/// the other blocks, simulate the held-out block at its own covariates and
/// compare with its observed histograms.
pub fn loo_block_cv(net: &SignedNetwork, z: &BlockAssignment, spec: &ModelSpec, config: &LooConfig) -> Result<Vec<LooFold>> {
    let kb = z.n_blocks();
    if kb < 2 {
        return Err(Error::invalid("leave-one-block-out needs K >= 2"));
    }
    if z.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: z.n_nodes(),
        });
    }
    spec.validate_for(kb)?;
    let members = z.members();
    let sizes = z.sizes();
    let covariates: Vec<Vec<f64>> = (0..kb).map(|k| spec.covariates.vector(k, sizes[k], kb)).collect();
    let p = spec.n_within();
    Ok((0..kb)
        .into_par_iter()
        .map(|k| {
            let (train, train_v): (Vec<Vec<usize>>, Vec<Vec<f64>>) = (0..kb)
                .filter(|&l| l != k)
                .map(|l| (members[l].clone(), covariates[l].clone()))
                .unzip();
            let design = design_for_blocks::<f64>(net, &train, &train_v, spec);
            let mut fold = LooFold {
                block: k + 1,
                beta: Vec::new(),
                converged: false,
                report: None,
                error: None,
            };
            if design.n_dyads() == 0 {
                fold.error = Some("no within-block dyads outside the held-out block".into());
                return fold;
            }
            let fit = fit_design(&design, spec.within_names(kb), &config.fit);
            fold.beta = fit.beta.clone();
            fold.converged = fit.converged;
            if !fit.beta.iter().all(|b| b.is_finite()) {
                fold.error = Some("refit produced non-finite coefficients".into());
                return fold;
            }
            let theta: Vec<f64> = (0..p)
                .map(|a| covariates[k].iter().enumerate().map(|(b, vb)| vb * fit.beta[b * p + a]).sum())
                .collect();
            let sampler = SamplerConfig {
                burn_in: config.burn_in,
                thin: config.thin,
                n_samples: config.n_sims,
                seed: derive_seed(config.seed, &[6, k as u64]),
                ..SamplerConfig::default()
            };
            match sample_within(&theta, sizes[k], spec, &sampler) {
                Ok(draws) => {
                    let observed = net.induced(&members[k]);
                    fold.report = Some(GofReport::from_networks(&observed, &draws, sampler.seed));
                }
                Err(e) => {
                    warn!("fold {}: {e}", k + 1);
                    fold.error = Some(e.to_string());
                }
            }
            fold
        })
        .collect())
}
