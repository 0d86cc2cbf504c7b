//! Simulation from the local-dependence model: exact multinomial draws
//! between blocks and Metropolis-Hastings chains within blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Coefficients;
use crate::linalg::dot;
use crate::network::{BlockAssignment, DyadValue, Sign, SignedNetwork};
use crate::scalar::Scalar;
use crate::statistics::{raw_change_between, within_stats, BetweenTerm, Kernel, ModelSpec};

/// Largest node count accepted by [`brute_force_distribution`].
pub const BRUTE_FORCE_MAX_NODES: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    /// Uniform dyad, then uniform over its two other values.
    #[default]
    UniformDyadUniformValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Proposals discarded before the first draw; `None` means `20 * C(n, 2)`.
    pub burn_in: Option<usize>,
    /// Proposals between retained draws; `None` means `2 * C(n, 2)`.
    pub thin: Option<usize>,
    pub n_samples: usize,
    pub seed: u64,
    pub proposal: Proposal,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: None,
            thin: None,
            n_samples: 1,
            seed: 0,
            proposal: Proposal::UniformDyadUniformValue,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thin == Some(0) {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("at least one sample is required"));
        }
        Ok(())
    }

    pub fn burn_in_for(&self, n: usize) -> usize {
        self.burn_in.unwrap_or(20 * n_pairs(n))
    }

    pub fn thin_for(&self, n: usize) -> usize {
        self.thin.unwrap_or(2 * n_pairs(n)).max(1)
    }
}

fn n_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Seed of an independent stream identified by `tags` under `master`.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    fn mix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    }
    tags.iter().fold(mix(master), |h, &t| mix(h ^ mix(t)))
}

/// Metropolis-Hastings chain on the networks of one block. The raw
/// statistics of the current state are tracked incrementally.
pub struct WithinChain<S> {
    net: SignedNetwork,
    kernels: Vec<Kernel<S>>,
    theta: Vec<S>,
    stats: Vec<S>,
    delta: Vec<S>,
    rng: ChaCha8Rng,
    proposed: u64,
    accepted: u64,
}

impl<S: Scalar> WithinChain<S> {
    /// Chain started at the empty network on `n` nodes.
    pub fn new(n: usize, spec: &ModelSpec, theta: &[S], seed: u64) -> Result<Self> {
        if theta.len() != spec.n_within() {
            return Err(Error::DimensionMismatch {
                expected: spec.n_within(),
                found: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("within-block parameters must be finite"));
        }
        let p = spec.n_within();
        Ok(WithinChain {
            net: SignedNetwork::empty(n),
            kernels: Kernel::all(&spec.within),
            theta: theta.to_vec(),
            stats: vec![S::zero(); p],
            delta: vec![S::zero(); p],
            rng: ChaCha8Rng::seed_from_u64(seed),
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn set_theta(&mut self, theta: &[S]) {
        self.theta.copy_from_slice(theta);
    }

    pub fn network(&self) -> &SignedNetwork {
        &self.net
    }

    /// Raw statistics of the current state.
    pub fn stats(&self) -> &[S] {
        &self.stats
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    #[inline]
    pub fn step(&mut self) {
        let n = self.net.n_nodes();
        if n < 2 {
            return;
        }
        let i = self.rng.random_range(0..n);
        let mut j = self.rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let current = self.net.value(i, j);
        let pick = self.rng.random_range(0..2);
        let to = DyadValue::ALL
            .into_iter()
            .filter(|&v| v != current)
            .nth(pick)
            .expect("two alternatives");
        raw_change_between(&self.net, &self.kernels, i, j, to, &mut self.delta);
        let log_ratio = dot(&self.theta, &self.delta).as_f64();
        self.proposed += 1;
        if log_ratio >= 0.0 || self.rng.random::<f64>() < log_ratio.exp() {
            self.net.set(i, j, to);
            for (s, d) in self.stats.iter_mut().zip(&self.delta) {
                *s = *s + *d;
            }
            self.accepted += 1;
        }
    }

    pub fn run(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }
}

/// `(θ⁺, θ⁻)` of a between-block pair from its coefficients in spec order.
pub(crate) fn between_logits<S: Scalar>(spec: &ModelSpec, theta_kl: &[S]) -> (S, S) {
    let mut logits = (S::zero(), S::zero());
    for (term, &t) in spec.between.iter().zip(theta_kl) {
        match term {
            BetweenTerm::EdgesPos => logits.0 = t,
            BetweenTerm::EdgesNeg => logits.1 = t,
        }
    }
    logits
}

/// Sign probabilities `(π⁺, π⁻, π⁰)` of the multinomial with `θ⁰ = 0`.
pub fn between_probabilities(theta_pos: f64, theta_neg: f64) -> (f64, f64, f64) {
    let m = theta_pos.max(theta_neg).max(0.0);
    let (ep, en, e0) = ((theta_pos - m).exp(), (theta_neg - m).exp(), (-m).exp());
    let z = ep + en + e0;
    (ep / z, en / z, e0 / z)
}

fn draw_between<R: Rng>(theta_pos: f64, theta_neg: f64, n_k: usize, n_l: usize, rng: &mut R) -> Vec<(usize, usize, Sign)> {
    let (pp, pn, _) = between_probabilities(theta_pos, theta_neg);
    let mut edges = Vec::new();
    for a in 0..n_k {
        for b in 0..n_l {
            let u: f64 = rng.random();
            if u < pp {
                edges.push((a, n_k + b, Sign::Pos));
            } else if u < pp + pn {
                edges.push((a, n_k + b, Sign::Neg));
            }
        }
    }
    edges
}

/// Bipartite network between blocks of sizes `n_k` (local nodes `0..n_k`)
/// and `n_l` (local nodes `n_k..n_k + n_l`); `theta_kl = (θ⁺, θ⁻)`.
pub fn sample_between<S: Scalar>(theta_kl: &[S], n_k: usize, n_l: usize, seed: u64) -> Result<SignedNetwork> {
    if theta_kl.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: theta_kl.len(),
        });
    }
    let (tp, tn) = (theta_kl[0].as_f64(), theta_kl[1].as_f64());
    if !tp.is_finite() || !tn.is_finite() {
        return Err(Error::invalid("between-block parameters must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SignedNetwork::from_edges(n_k + n_l, draw_between(tp, tn, n_k, n_l, &mut rng))
}

/// `config.n_samples` thinned draws from the within-block model of a block
/// with `n_k` nodes, starting from the empty network.
pub fn sample_within<S: Scalar>(
    theta_kk: &[S],
    n_k: usize,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<Vec<SignedNetwork>> {
    config.validate()?;
    let mut chain = WithinChain::new(n_k, spec, theta_kk, config.seed)?;
    chain.run(config.burn_in_for(n_k));
    let thin = config.thin_for(n_k);
    let mut draws = Vec::with_capacity(config.n_samples);
    for s in 0..config.n_samples {
        if s > 0 {
            chain.run(thin);
        }
        draws.push(chain.network().clone());
    }
    Ok(draws)
}

/// Block-local within draws for every block, `config.n_samples` each,
/// with per-block seeds derived from `config.seed`.
pub(crate) fn sample_all_blocks<S: Scalar>(
    coefficients: &Coefficients<S>,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<Vec<Vec<SignedNetwork>>> {
    let sizes = z.sizes();
    (0..z.n_blocks())
        .into_par_iter()
        .map(|k| {
            let theta = coefficients.theta_within(spec, k, &sizes)?;
            let block_config = SamplerConfig {
                seed: derive_seed(config.seed, &[0, k as u64]),
                ..config.clone()
            };
            sample_within(&theta, sizes[k], spec, &block_config)
        })
        .collect()
}

/// One network drawn from the full model given the block assignment.
pub fn simulate_network<S: Scalar>(
    coefficients: &Coefficients<S>,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<SignedNetwork> {
    let single = SamplerConfig {
        n_samples: 1,
        ..config.clone()
    };
    Ok(simulate_networks(coefficients, z, spec, &single)?.pop().expect("one draw"))
}

/// `config.n_samples` networks: thinned within-block chains combined with
/// fresh between-block draws.
pub fn simulate_networks<S: Scalar>(
    coefficients: &Coefficients<S>,
    z: &BlockAssignment,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<Vec<SignedNetwork>> {
    config.validate()?;
    spec.validate_for(z.n_blocks())?;
    coefficients.check_dims(spec, z.n_blocks())?;
    let members = z.members();
    let within = sample_all_blocks(coefficients, z, spec, config)?;
    let kb = z.n_blocks();
    let pairs: Vec<(usize, usize)> = (0..kb).flat_map(|k| (k + 1..kb).map(move |l| (k, l))).collect();
    let between: Vec<Vec<Vec<(usize, usize, Sign)>>> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let theta = coefficients.theta_between(spec, k, l, kb)?;
            let (tp, tn) = between_logits(spec, &theta);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[1, k as u64, l as u64]));
            let (nk, nl) = (members[k].len(), members[l].len());
            Ok((0..config.n_samples)
                .map(|_| {
                    draw_between(tp.as_f64(), tn.as_f64(), nk, nl, &mut rng)
                        .into_iter()
                        .map(|(a, b, s)| (members[k][a], members[l][b - nk], s))
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    (0..config.n_samples)
        .map(|s| {
            let mut edges = Vec::new();
            for (k, draws) in within.iter().enumerate() {
                edges.extend(draws[s].edges().map(|(a, b, sign)| (members[k][a], members[k][b], sign)));
            }
            for pair in &between {
                edges.extend_from_slice(&pair[s]);
            }
            SignedNetwork::from_edges(z.n_nodes(), edges)
        })
        .collect()
}

/// Dyads of an `n`-node network in the order `(0,1), (0,2), …, (1,2), …`.
pub fn dyad_order(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Index of a network in the table of [`brute_force_distribution`]: base-3
/// digits over [`dyad_order`], first dyad least significant, with
/// `0 = absent`, `1 = +`, `2 = -`.
pub fn network_code(net: &SignedNetwork) -> usize {
    let mut code = 0;
    for (i, j) in dyad_order(net.n_nodes()).into_iter().rev() {
        let digit = match net.value(i, j) {
            DyadValue::Zero => 0,
            DyadValue::Pos => 1,
            DyadValue::Neg => 2,
        };
        code = code * 3 + digit;
    }
    code
}

pub fn network_from_code(n: usize, mut code: usize) -> SignedNetwork {
    let mut edges = Vec::new();
    for (i, j) in dyad_order(n) {
        match code % 3 {
            1 => edges.push((i, j, Sign::Pos)),
            2 => edges.push((i, j, Sign::Neg)),
            _ => {}
        }
        code /= 3;
    }
    SignedNetwork::from_edges(n, edges).expect("valid dyads")
}

/// Exact within-block pmf `exp(θᵀs(y)) / κ(θ)` over all `3^{C(n,2)}` networks.
pub fn brute_force_distribution<S: Scalar>(theta: &[S], n: usize, spec: &ModelSpec) -> Result<Vec<f64>> {
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooLarge {
            what: "node count for enumeration",
            size: n,
            limit: BRUTE_FORCE_MAX_NODES,
        });
    }
    if theta.len() != spec.n_within() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_within(),
            found: theta.len(),
        });
    }
    let theta: Vec<f64> = theta.iter().map(|t| t.as_f64()).collect();
    let states = 3usize.pow(n_pairs(n) as u32);
    let log_weights: Vec<f64> = (0..states)
        .into_par_iter()
        .map(|code| {
            let s = within_stats::<f64>(&network_from_code(n, code), spec);
            dot(&theta, &s)
        })
        .collect();
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Parameters of the block-recovery simulation design: `K` blocks of equal
/// size, edges, geometrically weighted degrees and positive shared enemies
/// within blocks, and sparse between-block ties scaled by `λ log N`.
#[derive(Clone, Debug)]
pub struct SimulationDesign {
    pub spec: ModelSpec,
    pub coefficients: Coefficients<f64>,
    pub z: BlockAssignment,
}

/// Within-block coefficients of the design, in the order Edges⁺, Edges⁻,
/// GWD⁺, GWD⁻, GWESE⁺.
pub const DESIGN_THETA_WITHIN: [f64; 5] = [-2.0, -3.0, 0.5, -0.5, 0.7];
/// Decay used for every geometrically weighted term of the design.
pub const DESIGN_OMEGA: f64 = 0.2;

pub fn simulation_design(k_blocks: usize, block_size: usize, lambda: f64) -> SimulationDesign {
    let n = k_blocks * block_size;
    let scale = lambda * (n as f64).ln();
    let labels = (0..n).map(|i| i / block_size).collect();
    SimulationDesign {
        spec: ModelSpec::structural(DESIGN_OMEGA),
        coefficients: Coefficients {
            beta_w: DESIGN_THETA_WITHIN.to_vec(),
            beta_b: vec![-1.5 * scale, -0.5 * scale],
        },
        z: BlockAssignment::new(labels, k_blocks).expect("labels below K"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::WithinTerm;

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    #[test]
    fn between_probabilities_softmax() {
        let (pp, pn, p0) = between_probabilities(2f64.ln(), 0.0);
        assert!((pp - 0.5).abs() < 1e-15 && (pn - 0.25).abs() < 1e-15 && (p0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn between_frequencies_uniform() {
        let y = sample_between(&[0.0, 0.0], 100, 100, 5).unwrap();
        let sd = (10_000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for sign in Sign::BOTH {
            assert!((y.n_edges_of(sign) as f64 - 10_000.0 / 3.0).abs() < 3.0 * sd);
        }
        // only cross edges
        assert!(y.edges().all(|(i, j, _)| i < 100 && j >= 100));
        assert_eq!(sample_between(&[-50.0, -50.0], 30, 40, 1).unwrap().n_edges(), 0);
    }

    #[test]
    fn edges_only_frequencies_converge() {
        let spec = ModelSpec::edges();
        let theta = [0.3, -0.8];
        let config = SamplerConfig {
            burn_in: Some(1000),
            thin: Some(10),
            n_samples: 10_000,
            seed: 3,
            ..SamplerConfig::default()
        };
        let draws = sample_within(&theta, 12, &spec, &config).unwrap();
        let dyads = (draws.len() * 66) as f64;
        let (pp, pn, _) = between_probabilities(theta[0], theta[1]);
        let fp = draws.iter().map(|d| d.n_edges_of(Sign::Pos)).sum::<usize>() as f64 / dyads;
        let fneg = draws.iter().map(|d| d.n_edges_of(Sign::Neg)).sum::<usize>() as f64 / dyads;
        assert!((fp - pp).abs() < 0.01, "{fp} vs {pp}");
        assert!((fneg - pn).abs() < 0.01, "{fneg} vs {pn}");
    }

    #[test]
    fn zero_theta_is_uniform() {
        let spec = ModelSpec::triads();
        let config = SamplerConfig {
            burn_in: Some(100),
            thin: Some(6),
            n_samples: 20_000,
            seed: 8,
            ..SamplerConfig::default()
        };
        let draws = sample_within(&[0.0; 4], 5, &spec, &config).unwrap();
        let total = (draws.len() * 10) as f64;
        let pos = draws.iter().map(|d| d.n_edges_of(Sign::Pos)).sum::<usize>() as f64 / total;
        assert!((pos - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn tracked_statistics_match_recomputation() {
        let spec = ModelSpec::full_triad(0.2, 0.5);
        let theta = [-1.0, -1.5, 0.3, -0.2, 0.4, 0.1, 0.2, -0.1];
        let mut chain = WithinChain::new(9, &spec, &theta, 4).unwrap();
        for _ in 0..50 {
            chain.run(37);
            let fresh = within_stats::<f64>(chain.network(), &spec);
            for (a, b) in chain.stats().iter().zip(&fresh) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn brute_force_examples() {
        let spec = ModelSpec::triads();
        let p = brute_force_distribution(&[0.0; 4], 3, &spec).unwrap();
        assert_eq!(p.len(), 27);
        assert!(p.iter().all(|&x| (x - 1.0 / 27.0).abs() < 1e-15));
        let theta = [0.4, -0.7];
        let p = brute_force_distribution(&theta, 4, &ModelSpec::edges()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (pp, pn, p0) = between_probabilities(theta[0], theta[1]);
        for (code, &prob) in p.iter().enumerate() {
            let y = network_from_code(4, code);
            let e = (y.n_edges_of(Sign::Pos), y.n_edges_of(Sign::Neg));
            let closed = pp.powi(e.0 as i32) * pn.powi(e.1 as i32) * p0.powi((6 - e.0 - e.1) as i32);
            assert!((prob - closed).abs() < 1e-14);
        }
        assert!(matches!(
            brute_force_distribution(&[0.0; 4], 6, &spec),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn code_round_trip() {
        for code in 0..729 {
            assert_eq!(network_code(&network_from_code(4, code)), code);
        }
        let y = SignedNetwork::from_edges(3, [(0, 1, Sign::Pos), (1, 2, Sign::Neg)]).unwrap();
        // dyads (0,1) (0,2) (1,2) -> digits 1, 0, 2
        assert_eq!(network_code(&y), 1 + 2 * 9);
    }

    #[test]
    fn small_chain_matches_enumeration() {
        let spec = ModelSpec::triads();
        let theta = [-0.5, -1.0, 0.6, 0.4];
        let p = brute_force_distribution(&theta, 4, &spec).unwrap();
        let config = SamplerConfig {
            burn_in: Some(500),
            thin: Some(12),
            n_samples: 100_000,
            seed: 1,
            ..SamplerConfig::default()
        };
        let mut counts = vec![0.0; p.len()];
        for y in sample_within(&theta, 4, &spec, &config).unwrap() {
            counts[network_code(&y)] += 1.0 / 100_000.0;
        }
        assert!(tv(&counts, &p) < 0.03);
    }

    #[test]
    fn detailed_balance_on_three_nodes() {
        let spec = ModelSpec::new(vec![WithinTerm::EdgesPos, WithinTerm::EdgesNeg, WithinTerm::TriadPpp]);
        let theta = [0.2, -0.4, 0.9];
        let pi = brute_force_distribution(&theta, 3, &spec).unwrap();
        let mut chain = WithinChain::new(3, &spec, &theta, 12).unwrap();
        let mut flows = vec![vec![0.0; 27]; 27];
        let steps = 400_000;
        let mut from = network_code(chain.network());
        for _ in 0..steps {
            chain.step();
            let to = network_code(chain.network());
            flows[from][to] += 1.0 / steps as f64;
            from = to;
        }
        for a in 0..27 {
            for b in a + 1..27 {
                assert!((flows[a][b] - flows[b][a]).abs() < 0.02 * pi[a].max(pi[b]) + 1e-3);
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let d = simulation_design(3, 10, 1.0);
        let config = SamplerConfig::with_seed(7);
        let a = simulate_network(&d.coefficients, &d.z, &d.spec, &config).unwrap();
        let b = simulate_network(&d.coefficients, &d.z, &d.spec, &config).unwrap();
        assert_eq!(a, b);
        assert_ne!(derive_seed(7, &[0, 1]), derive_seed(7, &[1, 0]));
    }

    #[test]
    fn design_is_denser_within_blocks() {
        let d = simulation_design(10, 50, 1.0);
        for seed in 0..3 {
            let y = simulate_network(&d.coefficients, &d.z, &d.spec, &SamplerConfig::with_seed(seed)).unwrap();
            let (mut within, mut between) = (0usize, 0usize);
            for (i, j, _) in y.edges() {
                if d.z.block_of(i) == d.z.block_of(j) {
                    within += 1;
                } else {
                    between += 1;
                }
            }
            let within_density = within as f64 / (10.0 * 1225.0);
            let between_density = between as f64 / (500.0 * 499.0 / 2.0 - 12250.0);
            assert!(within_density > between_density, "{within_density} vs {between_density}");
        }
    }

    #[test]
    fn suppressed_between_ties_vanish() {
        let mut d = simulation_design(3, 8, 1.0);
        d.coefficients.beta_b = vec![-50.0, -50.0];
        let y = simulate_network(&d.coefficients, &d.z, &d.spec, &SamplerConfig::with_seed(2)).unwrap();
        assert!(y.edges().all(|(i, j, _)| d.z.block_of(i) == d.z.block_of(j)));
    }

    #[test]
    fn single_block_matches_sample_within() {
        let spec = ModelSpec::triads();
        let coefficients = Coefficients {
            beta_w: vec![-1.0, -1.0, 0.3, 0.2],
            beta_b: vec![0.0, 0.0],
        };
        let z = BlockAssignment::new(vec![0; 7], 1).unwrap();
        let config = SamplerConfig::with_seed(5);
        let full = simulate_network(&coefficients, &z, &spec, &config).unwrap();
        let block_config = SamplerConfig {
            seed: derive_seed(5, &[0, 0]),
            ..config
        };
        let direct = sample_within(&coefficients.beta_w, 7, &spec, &block_config).unwrap();
        assert_eq!(full, direct[0]);
    }
}
