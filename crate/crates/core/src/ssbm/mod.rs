//! Block recovery under the signed stochastic block model approximation.
//!
//! The evidence lower bound is maximized by alternating a minorize-maximize
//! step on the membership probabilities with closed-form updates of the
//! block prior and the block-pair sign distributions.

mod spectral;

pub use spectral::{leading_eigenvectors, spectral_baseline};

use std::io::{BufRead, Write};
use std::time::Instant;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{BlockAssignment, DyadValue, Sign, SignedNetwork};
use crate::scalar::Scalar;

/// Lower floor applied to every sign probability.
pub const PROB_FLOOR: f64 = 1e-10;

/// Row-stochastic `N × K` matrix of block membership probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MembershipProbabilities<S> {
    alpha: Matrix<S>,
}

impl<S: Scalar> MembershipProbabilities<S> {
    /// Validates that every row lies on the simplex (tolerance 1e-9).
    pub fn new(alpha: Matrix<S>) -> Result<Self> {
        let tol = S::of(1e-9).max(S::epsilon() * S::of(64.0));
        for i in 0..alpha.rows() {
            let row = alpha.row(i);
            if row.iter().any(|&a| !(a >= S::zero()) || !a.is_finite()) {
                return Err(Error::invalid(format!("membership row {} has a negative entry", i + 1)));
            }
            let sum: S = row.iter().copied().sum();
            if (sum - S::one()).abs() > tol {
                return Err(Error::invalid(format!(
                    "membership row {} sums to {sum}, not 1",
                    i + 1
                )));
            }
        }
        Ok(MembershipProbabilities { alpha })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::invalid("membership rows differ in length"));
        }
        Self::new(Matrix::from_rows(rows))
    }

    /// Indicator rows of a hard assignment.
    pub fn one_hot(z: &BlockAssignment) -> Self {
        let alpha = Matrix::from_fn(z.n_nodes(), z.n_blocks(), |i, k| {
            if z.block_of(i) == k {
                S::one()
            } else {
                S::zero()
            }
        });
        MembershipProbabilities { alpha }
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        let w = S::one() / S::of_usize(k);
        MembershipProbabilities {
            alpha: Matrix::from_fn(n, k, |_, _| w),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.alpha.rows()
    }

    pub fn n_blocks(&self) -> usize {
        self.alpha.cols()
    }

    pub fn row(&self, i: usize) -> &[S] {
        self.alpha.row(i)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.alpha
    }

    /// Column sums `τ_k = Σ_i α_ik`.
    pub fn column_totals(&self) -> Vec<S> {
        let mut tau = vec![S::zero(); self.n_blocks()];
        for i in 0..self.n_nodes() {
            for (t, &a) in tau.iter_mut().zip(self.row(i)) {
                *t = *t + a;
            }
        }
        tau
    }

    /// Reorders the blocks: column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_blocks(&self, perm: &[usize]) -> Self {
        MembershipProbabilities {
            alpha: Matrix::from_fn(self.n_nodes(), self.n_blocks(), |i, k| self.alpha[(i, perm[k])]),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n_nodes() {
            let row: Vec<String> = self.row(i).iter().map(|a| a.as_f64().to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map(S::of)
                        .map_err(|_| Error::parse(idx + 1, format!("invalid probability `{}`", f.trim())))
                })
                .collect::<Result<Vec<S>>>()?;
            if let Some(first) = rows.first().map(Vec::len) {
                if first != row.len() {
                    return Err(Error::parse(idx + 1, format!("expected {first} columns, found {}", row.len())));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::parse(1, "empty membership file"));
        }
        Self::from_rows(&rows)
    }
}

/// Relative block sizes `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BlockPrior<S> {
    pub gamma: Vec<S>,
}

/// Sign distribution `p_kl(y)` of every block pair, symmetric in `(k, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EdgeProbabilityTable<S> {
    k_blocks: usize,
    /// Row-major `K × K` cells, each ordered `(-, 0, +)`.
    cells: Vec<[S; 3]>,
}

impl<S: Scalar> EdgeProbabilityTable<S> {
    /// Builds a table from cells indexed `[k][l][value]` with values ordered `(-, 0, +)`.
    pub fn new(cells: Vec<Vec<[S; 3]>>) -> Result<Self> {
        let k = cells.len();
        let tol = S::of(1e-9).max(S::epsilon() * S::of(64.0));
        let mut flat = Vec::with_capacity(k * k);
        for (a, row) in cells.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: row.len(),
                });
            }
            for (b, cell) in row.iter().enumerate() {
                let sum: S = cell.iter().copied().sum();
                if cell.iter().any(|&x| !(x > S::zero())) || (sum - S::one()).abs() > tol {
                    return Err(Error::invalid(format!(
                        "p[{}][{}] is not a positive probability vector",
                        a + 1,
                        b + 1
                    )));
                }
                if cells[b][a] != *cell {
                    return Err(Error::invalid(format!("p is not symmetric at ({}, {})", a + 1, b + 1)));
                }
                flat.push(*cell);
            }
        }
        Ok(EdgeProbabilityTable { k_blocks: k, cells: flat })
    }

    pub fn n_blocks(&self) -> usize {
        self.k_blocks
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize, value: DyadValue) -> S {
        self.cells[k * self.k_blocks + l][value.index()]
    }

    #[inline]
    pub fn cell(&self, k: usize, l: usize) -> [S; 3] {
        self.cells[k * self.k_blocks + l]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Spectral,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationalConfig {
    pub max_iter: usize,
    /// Relative lower-bound change below which the fit stops.
    pub tol: f64,
    pub init: InitMethod,
    pub seed: u64,
    /// Mass moved off the spectral label when softening it.
    pub softening: f64,
}

impl Default for VariationalConfig {
    fn default() -> Self {
        VariationalConfig {
            max_iter: 500,
            tol: 1e-6,
            init: InitMethod::Spectral,
            seed: 0,
            softening: 0.1,
        }
    }
}

/// One line of the optional iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub lb: f64,
    pub delta: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct VariationalFit<S> {
    pub alpha: MembershipProbabilities<S>,
    pub gamma: BlockPrior<S>,
    pub p: EdgeProbabilityTable<S>,
    /// Lower bound after initialization followed by one value per sweep.
    pub lb_trace: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterationRecord>,
}

impl<S: Scalar> VariationalFit<S> {
    pub fn write_log_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,lb,delta,seconds")?;
        for r in &self.log {
            writeln!(out, "{},{},{},{}", r.iter, r.lb, r.delta, r.seconds)?;
        }
        Ok(())
    }
}

/// Hard assignment together with the nodes whose maximum was tied.
#[derive(Clone, Debug, PartialEq)]
pub struct HardAssignment {
    pub z: BlockAssignment,
    pub ties: Vec<usize>,
}

/// Initial membership probabilities. `K = 1` gives the trivial all-ones column.
pub fn init_alpha<S: Scalar>(
    net: &SignedNetwork,
    k: usize,
    method: InitMethod,
    seed: u64,
    softening: f64,
) -> Result<MembershipProbabilities<S>> {
    let n = net.n_nodes();
    if k == 0 {
        return Err(Error::invalid("number of blocks must be positive"));
    }
    if k > n {
        return Err(Error::invalid(format!("K = {k} exceeds the number of nodes {n}")));
    }
    if k == 1 {
        return Ok(MembershipProbabilities::uniform(n, 1));
    }
    match method {
        InitMethod::Spectral => {
            if !(0.0..1.0).contains(&softening) {
                return Err(Error::invalid("softening must lie in [0, 1)"));
            }
            let z = spectral_baseline(net, k, seed)?;
            Ok(soften(&z, softening))
        }
        InitMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut alpha = Matrix::zeros(n, k);
            for i in 0..n {
                let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                for (c, d) in draws.iter().enumerate() {
                    alpha[(i, c)] = S::of(d / total);
                }
            }
            MembershipProbabilities::new(alpha)
        }
    }
}

/// Puts `1 - δ` on each node's block and spreads `δ` over the others.
pub fn soften<S: Scalar>(z: &BlockAssignment, delta: f64) -> MembershipProbabilities<S> {
    let k = z.n_blocks();
    let off = if k > 1 { delta / (k - 1) as f64 } else { 0.0 };
    let on = if k > 1 { 1.0 - delta } else { 1.0 };
    let alpha = Matrix::from_fn(z.n_nodes(), k, |i, c| S::of(if z.block_of(i) == c { on } else { off }));
    MembershipProbabilities { alpha }
}

/// `γ_k = (1/N) Σ_i α_ik`.
pub fn update_gamma<S: Scalar>(alpha: &MembershipProbabilities<S>) -> BlockPrior<S> {
    let n = S::of_usize(alpha.n_nodes().max(1));
    BlockPrior {
        gamma: alpha.column_totals().into_iter().map(|t| t / n).collect(),
    }
}

/// Weighted sign frequencies between blocks over ordered node pairs.
pub fn update_p<S: Scalar>(alpha: &MembershipProbabilities<S>, net: &SignedNetwork) -> EdgeProbabilityTable<S> {
    let k = alpha.n_blocks();
    let tau = alpha.column_totals();
    // Σ_i α_ik α_il, removed from τ_k τ_l to exclude self pairs
    let mut diag = vec![S::zero(); k * k];
    // Σ over edges (i, j) with i < j of α_ik α_jl, per sign
    let mut edge_sums = [vec![S::zero(); k * k], vec![S::zero(); k * k]];
    for i in 0..alpha.n_nodes() {
        let ai = alpha.row(i);
        for a in 0..k {
            if ai[a] == S::zero() {
                continue;
            }
            for b in 0..k {
                diag[a * k + b] = diag[a * k + b] + ai[a] * ai[b];
            }
        }
    }
    for (i, j, s) in net.edges() {
        let (ai, aj) = (alpha.row(i), alpha.row(j));
        let sums = &mut edge_sums[s.slot()];
        for a in 0..k {
            if ai[a] == S::zero() {
                continue;
            }
            for b in 0..k {
                sums[a * k + b] = sums[a * k + b] + ai[a] * aj[b];
            }
        }
    }
    let mut cells = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let denom = tau[a] * tau[b] - diag[a * k + b];
            let pos = edge_sums[Sign::Pos.slot()][a * k + b] + edge_sums[Sign::Pos.slot()][b * k + a];
            let neg = edge_sums[Sign::Neg.slot()][a * k + b] + edge_sums[Sign::Neg.slot()][b * k + a];
            let tiny = S::epsilon() * (tau[a] * tau[b]).max(S::one());
            let cell = if denom <= tiny {
                if a <= b {
                    warn!(
                        "no pair weight between blocks {} and {}; using a uniform sign distribution",
                        a + 1,
                        b + 1
                    );
                }
                let third = S::one() / S::of(3.0);
                [third; 3]
            } else {
                let zero = (denom - pos - neg).max(S::zero());
                floored_simplex([neg, zero, pos])
            };
            cells.push(cell);
        }
    }
    EdgeProbabilityTable { k_blocks: k, cells }
}

/// Maximizer of `Σ_y w_y log p_y` over the simplex restricted to `p_y ≥ ε`.
fn floored_simplex<S: Scalar>(weights: [S; 3]) -> [S; 3] {
    let eps = S::of(PROB_FLOOR);
    let mut floored = [false; 3];
    loop {
        let free_weight: S = (0..3).filter(|&y| !floored[y]).map(|y| weights[y]).sum();
        let n_floored = floored.iter().filter(|&&f| f).count();
        let budget = S::one() - S::of_usize(n_floored) * eps;
        let mut changed = false;
        let mut p = [eps; 3];
        for y in 0..3 {
            if floored[y] {
                continue;
            }
            let value = weights[y] / free_weight * budget;
            if !(value >= eps) {
                floored[y] = true;
                changed = true;
            }
            p[y] = value;
        }
        if !changed {
            return p;
        }
    }
}

/// `log p`, split as `log p(0)` and the log-ratios against `p(0)`.
struct LogTables<S> {
    k: usize,
    zero: Vec<S>,
    pos: Vec<S>,
    neg: Vec<S>,
}

impl<S: Scalar> LogTables<S> {
    fn new(p: &EdgeProbabilityTable<S>) -> Self {
        let k = p.n_blocks();
        let mut t = LogTables {
            k,
            zero: vec![S::zero(); k * k],
            pos: vec![S::zero(); k * k],
            neg: vec![S::zero(); k * k],
        };
        for a in 0..k {
            for b in 0..k {
                let [m, z, pl] = p.cell(a, b);
                let lz = z.ln();
                t.zero[a * k + b] = lz;
                t.pos[a * k + b] = pl.ln() - lz;
                t.neg[a * k + b] = m.ln() - lz;
            }
        }
        t
    }
}

/// `Ω_ik = Σ_{j≠i} Σ_l α_jl log p_kl(y_ij)`, assembled from the empty-network
/// term and sparse corrections for the edges of `i`.
pub fn omega_matrix<S: Scalar>(
    net: &SignedNetwork,
    alpha: &MembershipProbabilities<S>,
    p: &EdgeProbabilityTable<S>,
) -> Matrix<S> {
    let logs = LogTables::new(p);
    omega_with(net, alpha, &logs)
}

fn omega_with<S: Scalar>(net: &SignedNetwork, alpha: &MembershipProbabilities<S>, logs: &LogTables<S>) -> Matrix<S> {
    let k = logs.k;
    let tau = alpha.column_totals();
    let rows: Vec<Vec<S>> = (0..alpha.n_nodes())
        .into_par_iter()
        .map(|i| {
            let ai = alpha.row(i);
            let base: Vec<S> = tau.iter().zip(ai).map(|(&t, &a)| t - a).collect();
            let mut plus = vec![S::zero(); k];
            let mut minus = vec![S::zero(); k];
            for &(j, s) in net.neighbors(i) {
                let acc = if s == Sign::Pos { &mut plus } else { &mut minus };
                for (x, &a) in acc.iter_mut().zip(alpha.row(j)) {
                    *x = *x + a;
                }
            }
            (0..k)
                .map(|c| {
                    let mut v = S::zero();
                    for l in 0..k {
                        let idx = l * k + c;
                        v = v + base[l] * logs.zero[idx] + plus[l] * logs.pos[idx] + minus[l] * logs.neg[idx];
                    }
                    v
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

fn lower_bound_from_omega<S: Scalar>(alpha: &MembershipProbabilities<S>, gamma: &BlockPrior<S>, omega: &Matrix<S>) -> S {
    let half = S::of(0.5);
    let mut total = S::zero();
    for i in 0..alpha.n_nodes() {
        for (c, &a) in alpha.row(i).iter().enumerate() {
            if a > S::zero() {
                total = total + half * a * omega[(i, c)] + a * gamma.gamma[c].ln() - a * a.ln();
            }
        }
    }
    total
}

/// Evidence lower bound `LB(α, γ, p)`.
pub fn compute_lower_bound<S: Scalar>(
    alpha: &MembershipProbabilities<S>,
    gamma: &BlockPrior<S>,
    p: &EdgeProbabilityTable<S>,
    net: &SignedNetwork,
) -> S {
    let omega = omega_matrix(net, alpha, p);
    lower_bound_from_omega(alpha, gamma, &omega)
}

/// Coefficients of the separable quadratic minorizer at `α_t`; `None` for
/// coordinates with `α_t = 0`, which the update keeps at zero.
fn surrogate_coefficients<S: Scalar>(
    alpha_t: &[S],
    omega_t: &[S],
    gamma: &BlockPrior<S>,
) -> Vec<Option<(S, S)>> {
    let half = S::of(0.5);
    alpha_t
        .iter()
        .zip(omega_t)
        .zip(&gamma.gamma)
        .map(|((&a, &w), &g)| {
            if a > S::zero() {
                Some(((half * w - S::one()) / a, g.ln() - a.ln() + S::one()))
            } else {
                None
            }
        })
        .collect()
}

/// Value of the minorizer `Q(α; α_t)` built at `α_t` with `γ`, `p` fixed.
pub fn surrogate_value<S: Scalar>(
    alpha: &MembershipProbabilities<S>,
    alpha_t: &MembershipProbabilities<S>,
    gamma: &BlockPrior<S>,
    p: &EdgeProbabilityTable<S>,
    net: &SignedNetwork,
) -> S {
    let omega = omega_matrix(net, alpha_t, p);
    let mut total = S::zero();
    for i in 0..alpha.n_nodes() {
        let coef = surrogate_coefficients(alpha_t.row(i), omega.row(i), gamma);
        for (c, &a) in alpha.row(i).iter().enumerate() {
            match coef[c] {
                Some((qa, qb)) => total = total + qa * a * a + qb * a,
                None if a > S::zero() => return S::neg_infinity(),
                None => {}
            }
        }
    }
    total
}

/// Maximizes `Σ_k A_k x_k² + B_k x_k` over the simplex on the free coordinates.
fn solve_simplex_qp<S: Scalar>(coef: &[Option<(S, S)>]) -> Vec<S> {
    let free: Vec<usize> = (0..coef.len()).filter(|&c| coef[c].is_some()).collect();
    let mut x = vec![S::zero(); coef.len()];
    if free.len() == 1 {
        x[free[0]] = S::one();
        return x;
    }
    let ab: Vec<(S, S)> = free.iter().map(|&c| coef[c].unwrap()).collect();
    for &(a, _) in &ab {
        assert!(a < S::zero(), "surrogate is not concave");
    }
    let at = |lambda: S, (a, b): (S, S)| ((lambda - b) / (S::of(2.0) * a)).max(S::zero());
    let total = |lambda: S| -> S { ab.iter().map(|&c| at(lambda, c)).sum() };
    let mut lo = ab.iter().map(|&(a, b)| b + S::of(2.0) * a).fold(S::infinity(), S::min);
    let mut hi = ab.iter().map(|&(_, b)| b).fold(S::neg_infinity(), S::max);
    let tol = S::of(1e-12).max(S::epsilon());
    for _ in 0..200 {
        if hi - lo <= tol * (S::one() + hi.abs().max(lo.abs())) {
            break;
        }
        let mid = (lo + hi) * S::of(0.5);
        if total(mid) > S::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda0 = (lo + hi) * S::of(0.5);
    // exact multiplier for the active set found by bisection
    let active: Vec<(S, S)> = ab.iter().copied().filter(|&c| at(lambda0, c) > S::zero()).collect();
    let lambda = if active.is_empty() {
        lambda0
    } else {
        let inv: S = active.iter().map(|&(a, _)| S::one() / (S::of(2.0) * a)).sum();
        let shift: S = active.iter().map(|&(a, b)| b / (S::of(2.0) * a)).sum();
        (S::one() + shift) / inv
    };
    let mut sum = S::zero();
    for (&c, &cab) in free.iter().zip(&ab) {
        let v = at(lambda, cab).min(S::one());
        x[c] = v;
        sum = sum + v;
    }
    if sum > S::zero() {
        for v in &mut x {
            *v = *v / sum;
        }
    } else {
        let best = free
            .iter()
            .zip(&ab)
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .map(|(&c, _)| c)
            .unwrap();
        x[best] = S::one();
    }
    x
}

/// One minorize-maximize step on every node's membership probabilities.
pub fn mm_update_alpha<S: Scalar>(
    alpha_t: &MembershipProbabilities<S>,
    gamma_t: &BlockPrior<S>,
    p_t: &EdgeProbabilityTable<S>,
    net: &SignedNetwork,
) -> MembershipProbabilities<S> {
    let omega = omega_matrix(net, alpha_t, p_t);
    mm_step(alpha_t, gamma_t, &omega)
}

fn mm_step<S: Scalar>(alpha_t: &MembershipProbabilities<S>, gamma: &BlockPrior<S>, omega: &Matrix<S>) -> MembershipProbabilities<S> {
    if alpha_t.n_blocks() == 1 {
        return alpha_t.clone();
    }
    let rows: Vec<Vec<S>> = (0..alpha_t.n_nodes())
        .into_par_iter()
        .map(|i| solve_simplex_qp(&surrogate_coefficients(alpha_t.row(i), omega.row(i), gamma)))
        .collect();
    MembershipProbabilities {
        alpha: Matrix::from_rows(&rows),
    }
}

/// Variational fit from an initialization method.
pub fn fit<S: Scalar>(net: &SignedNetwork, k: usize, config: &VariationalConfig) -> Result<VariationalFit<S>> {
    let alpha = init_alpha(net, k, config.init, config.seed, config.softening)?;
    fit_from(net, alpha, config)
}

/// Variational fit from given initial membership probabilities; `γ` and `p`
/// are derived from them before the first sweep.
pub fn fit_from<S: Scalar>(
    net: &SignedNetwork,
    alpha: MembershipProbabilities<S>,
    config: &VariationalConfig,
) -> Result<VariationalFit<S>> {
    if alpha.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: alpha.n_nodes(),
        });
    }
    let start = Instant::now();
    let mut alpha = alpha;
    let mut gamma = update_gamma(&alpha);
    let mut p = update_p(&alpha, net);
    let mut logs = LogTables::new(&p);
    let mut omega = omega_with(net, &alpha, &logs);
    let mut lb = lower_bound_from_omega(&alpha, &gamma, &omega);
    let mut lb_trace = vec![lb];
    let mut log = vec![IterationRecord {
        iter: 0,
        lb: lb.as_f64(),
        delta: f64::NAN,
        seconds: start.elapsed().as_secs_f64(),
    }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        alpha = mm_step(&alpha, &gamma, &omega);
        gamma = update_gamma(&alpha);
        p = update_p(&alpha, net);
        logs = LogTables::new(&p);
        omega = omega_with(net, &alpha, &logs);
        let next = lower_bound_from_omega(&alpha, &gamma, &omega);
        let delta = next - lb;
        let rel = (delta / lb.abs().max(S::min_positive_value())).abs();
        debug!("iteration {iterations}: lower bound {next:e} (change {delta:e})");
        lb_trace.push(next);
        log.push(IterationRecord {
            iter: iterations,
            lb: next.as_f64(),
            delta: delta.as_f64(),
            seconds: start.elapsed().as_secs_f64(),
        });
        lb = next;
        if rel.as_f64() < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("variational fit stopped after {iterations} iterations without converging");
    }
    Ok(VariationalFit {
        alpha,
        gamma,
        p,
        lb_trace,
        iterations,
        converged,
        log,
    })
}

/// Row-wise argmax with ties broken toward the lowest block.
pub fn hard_assignment<S: Scalar>(alpha: &MembershipProbabilities<S>) -> HardAssignment {
    let mut z = Vec::with_capacity(alpha.n_nodes());
    let mut ties = Vec::new();
    for i in 0..alpha.n_nodes() {
        let row = alpha.row(i);
        let mut best = 0;
        for (c, &a) in row.iter().enumerate().skip(1) {
            if a > row[best] {
                best = c;
            }
        }
        if row.iter().enumerate().any(|(c, &a)| c != best && a == row[best]) {
            ties.push(i);
        }
        z.push(best);
    }
    let z = BlockAssignment::new(z, alpha.n_blocks()).expect("argmax is a valid block");
    HardAssignment { z, ties }
}
