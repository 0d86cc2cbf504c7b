use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::network::{BlockAssignment, DyadValue, SignedNetwork};
use crate::sampler::{derive_seed, sample_within, SamplerConfig};
use crate::scalar::Scalar;
use crate::statistics::{raw_changes, Kernel, ModelSpec};

use super::{invert_information, within_design, Coefficients};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GodambeConfig {
    /// Number of simulated networks.
    pub r: usize,
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
}

impl Default for GodambeConfig {
    fn default() -> Self {
        GodambeConfig {
            r: 100,
            seed: 0,
            burn_in: None,
            thin: None,
        }
    }
}

/// Raw pseudo-score `Σ_ij (1{y=+} - π⁺) δ⁺ + (1{y=-} - π⁻) δ⁻` of a block network.
pub(crate) fn block_raw_score<S: Scalar>(net: &SignedNetwork, kernels: &[Kernel<S>], theta: &[S]) -> Vec<S> {
    let p = kernels.len();
    let mut out = vec![S::zero(); p];
    let (mut plus, mut minus) = (vec![S::zero(); p], vec![S::zero(); p]);
    let n = net.n_nodes();
    for i in 0..n {
        for j in i + 1..n {
            raw_changes(net, kernels, i, j, &mut plus, &mut minus);
            let (ep, en) = (dot(theta, &plus), dot(theta, &minus));
            let m = ep.max(en).max(S::zero());
            let (a, b, c) = ((ep - m).exp(), (en - m).exp(), (-m).exp());
            let total = a + b + c;
            let (pp, pn) = (a / total, b / total);
            let value = net.value(i, j);
            let ip = if value == DyadValue::Pos { S::one() } else { S::zero() };
            let in_ = if value == DyadValue::Neg { S::one() } else { S::zero() };
            for a in 0..p {
                out[a] = out[a] + (ip - pp) * plus[a] + (in_ - pn) * minus[a];
            }
        }
    }
    out
}

/// Sandwich covariance `J⁻¹ V J⁻¹` of the within MPLE, where `V` is the
/// sample covariance of pseudo-scores of `config.r` networks simulated at
/// `beta_w`.
pub fn godambe_covariance<S: Scalar>(
    beta_w: &[S],
    net: &SignedNetwork,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &GodambeConfig,
) -> Result<Matrix<S>> {
    if config.r < 2 {
        return Err(Error::invalid("Godambe covariance needs at least 2 simulations"));
    }
    let design = within_design::<S>(net, z, spec)?;
    if beta_w.len() != design.dim() {
        return Err(Error::DimensionMismatch {
            expected: design.dim(),
            found: beta_w.len(),
        });
    }
    let (_, _, info) = design.evaluate(beta_w);
    let j_inv = invert_information(&info);
    let kb = z.n_blocks();
    let dim = design.dim();
    let p = spec.n_within();
    let sizes = z.sizes();
    let coefficients = Coefficients {
        beta_w: beta_w.to_vec(),
        beta_b: Vec::new(),
    };
    let kernels: Vec<Kernel<S>> = Kernel::all(&spec.within);
    let per_block: Vec<Vec<Vec<S>>> = (0..kb)
        .into_par_iter()
        .map(|k| {
            let theta = coefficients.theta_within(spec, k, &sizes)?;
            let v = spec.covariates.vector(k, sizes[k], kb);
            let sampler = SamplerConfig {
                burn_in: config.burn_in,
                thin: config.thin,
                n_samples: config.r,
                seed: derive_seed(config.seed, &[2, k as u64]),
                ..SamplerConfig::default()
            };
            let draws = sample_within(&theta, sizes[k], spec, &sampler)?;
            Ok(draws
                .iter()
                .map(|y| {
                    let raw = block_raw_score(y, &kernels, &theta);
                    let mut u = vec![S::zero(); dim];
                    for (b, &vb) in v.iter().enumerate() {
                        for a in 0..p {
                            u[b * p + a] = S::of(vb) * raw[a];
                        }
                    }
                    u
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![vec![S::zero(); dim]; config.r];
    for block in per_block {
        for (total, u) in scores.iter_mut().zip(block) {
            for (t, x) in total.iter_mut().zip(u) {
                *t = *t + x;
            }
        }
    }
    let r = S::of_usize(config.r);
    let mean: Vec<S> = (0..dim).map(|a| scores.iter().map(|u| u[a]).sum::<S>() / r).collect();
    let mut v = Matrix::zeros(dim, dim);
    let weight = S::one() / (r - S::one());
    for u in &scores {
        let centered: Vec<S> = u.iter().zip(&mean).map(|(&x, &m)| x - m).collect();
        v.add_outer(weight, &centered);
    }
    let mut g = j_inv.matmul(&v).matmul(&j_inv);
    g.symmetrize();
    if !g.is_finite() {
        warn!("Godambe covariance is not finite");
    }
    Ok(g)
}
