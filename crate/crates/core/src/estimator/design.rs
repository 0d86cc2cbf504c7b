use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::{dot, Matrix};
use crate::network::{BlockAssignment, DyadValue, Sign, SignedNetwork};
use crate::scalar::Scalar;
use crate::statistics::{raw_changes, BetweenTerm, Kernel, ModelSpec};

#[derive(Clone, Debug)]
struct Row<S> {
    plus: Vec<S>,
    minus: Vec<S>,
    /// Observed dyads by value, indexed like [`DyadValue::index`].
    counts: [S; 3],
}

/// Rows of a three-category logit `P(+) ∝ exp(βᵀΔ⁺)`, `P(-) ∝ exp(βᵀΔ⁻)`,
/// `P(0) ∝ 1`. Dyads sharing the same change statistics are merged.
#[derive(Clone, Debug)]
pub struct MultinomialDesign<S> {
    dim: usize,
    rows: Vec<Row<S>>,
    index: HashMap<Vec<u64>, usize>,
    n_dyads: usize,
}

impl<S: Scalar> MultinomialDesign<S> {
    pub fn new(dim: usize) -> Self {
        MultinomialDesign {
            dim,
            rows: Vec::new(),
            index: HashMap::new(),
            n_dyads: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_dyads(&self) -> usize {
        self.n_dyads
    }

    /// Distinct change-statistic rows.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, plus: &[S], minus: &[S], value: DyadValue, weight: usize) {
        let mut counts = [S::zero(); 3];
        counts[value.index()] = S::of_usize(weight);
        self.add_counts(plus, minus, counts, weight);
    }

    fn add_counts(&mut self, plus: &[S], minus: &[S], counts: [S; 3], weight: usize) {
        let key: Vec<u64> = plus.iter().chain(minus).map(|x| x.as_f64().to_bits()).collect();
        match self.index.get(&key) {
            Some(&r) => {
                for (c, d) in self.rows[r].counts.iter_mut().zip(counts) {
                    *c = *c + d;
                }
            }
            None => {
                self.index.insert(key, self.rows.len());
                self.rows.push(Row {
                    plus: plus.to_vec(),
                    minus: minus.to_vec(),
                    counts,
                });
            }
        }
        self.n_dyads += weight;
    }

    pub fn merge(&mut self, other: MultinomialDesign<S>) {
        let n = other.n_dyads;
        for row in other.rows {
            self.add_counts(&row.plus, &row.minus, row.counts, 0);
        }
        self.n_dyads += n;
    }

    /// Magnitude of the score at `β = 0`, used to scale tolerances.
    pub(crate) fn scale(&self) -> S {
        self.rows
            .iter()
            .map(|r| {
                let w: S = r.counts.iter().copied().sum();
                let m = r.plus.iter().chain(&r.minus).fold(S::one(), |m, &x| m.max(x.abs()));
                w * m
            })
            .sum()
    }

    fn probabilities(&self, row: &Row<S>, beta: &[S]) -> (S, S, S, S) {
        let ep = dot(beta, &row.plus);
        let en = dot(beta, &row.minus);
        let m = ep.max(en).max(S::zero());
        let (a, b, c) = ((ep - m).exp(), (en - m).exp(), (-m).exp());
        let total = a + b + c;
        let lse = m + total.ln();
        (ep - lse, en - lse, a / total, b / total)
    }

    pub fn loglik(&self, beta: &[S]) -> S {
        self.rows
            .iter()
            .map(|row| {
                let (lp, ln, _, _) = self.probabilities(row, beta);
                let l0 = lp - dot(beta, &row.plus);
                row.counts[DyadValue::Pos.index()] * lp
                    + row.counts[DyadValue::Neg.index()] * ln
                    + row.counts[DyadValue::Zero.index()] * l0
            })
            .sum()
    }

    /// Log-likelihood, score and negative Hessian at `beta`.
    pub fn evaluate(&self, beta: &[S]) -> (S, Vec<S>, Matrix<S>) {
        let d = self.dim;
        let mut ll = S::zero();
        let mut score = vec![S::zero(); d];
        let mut info = Matrix::zeros(d, d);
        let mut mean = vec![S::zero(); d];
        for row in &self.rows {
            let (lp, ln, pp, pn) = self.probabilities(row, beta);
            let l0 = lp - dot(beta, &row.plus);
            let wp = row.counts[DyadValue::Pos.index()];
            let wn = row.counts[DyadValue::Neg.index()];
            let w = wp + wn + row.counts[DyadValue::Zero.index()];
            ll = ll + wp * lp + wn * ln + row.counts[DyadValue::Zero.index()] * l0;
            for a in 0..d {
                mean[a] = pp * row.plus[a] + pn * row.minus[a];
                score[a] = score[a] + wp * row.plus[a] + wn * row.minus[a] - w * mean[a];
            }
            info.add_outer(w * pp, &row.plus);
            info.add_outer(w * pn, &row.minus);
            info.add_outer(-w, &mean);
        }
        info.symmetrize();
        (ll, score, info)
    }
}

fn to_scalar<S: Scalar>(v: Vec<f64>) -> Vec<S> {
    v.into_iter().map(S::of).collect()
}

/// Design of the within-block pseudo-likelihood: one row per within-block
/// dyad with change statistics `v_k ⊗ δ`.
pub fn within_design<S: Scalar>(net: &SignedNetwork, z: &BlockAssignment, spec: &ModelSpec) -> Result<MultinomialDesign<S>> {
    let kb = z.n_blocks();
    spec.validate_for(kb)?;
    if z.n_nodes() != net.n_nodes() {
        return Err(crate::error::Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: z.n_nodes(),
        });
    }
    let members = z.members();
    let covariates: Vec<Vec<f64>> = members
        .iter()
        .enumerate()
        .map(|(k, nodes)| spec.covariates.vector(k, nodes.len(), kb))
        .collect();
    Ok(design_for_blocks(net, &members, &covariates, spec))
}

/// Within design over the given node sets with explicit block covariates.
pub(crate) fn design_for_blocks<S: Scalar>(
    net: &SignedNetwork,
    members: &[Vec<usize>],
    covariates: &[Vec<f64>],
    spec: &ModelSpec,
) -> MultinomialDesign<S> {
    let kernels: Vec<Kernel<S>> = Kernel::all(&spec.within);
    let p = kernels.len();
    let dim = covariates.first().map_or(0, Vec::len) * p;
    let parts: Vec<MultinomialDesign<S>> = members
        .par_iter()
        .zip(covariates)
        .map(|(nodes, v)| {
            let local = net.induced(nodes);
            let v: Vec<S> = to_scalar(v.clone());
            let mut design = MultinomialDesign::new(dim);
            let (mut rp, mut rm) = (vec![S::zero(); p], vec![S::zero(); p]);
            let (mut plus, mut minus) = (vec![S::zero(); dim], vec![S::zero(); dim]);
            for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    raw_changes(&local, &kernels, i, j, &mut rp, &mut rm);
                    for (b, &vb) in v.iter().enumerate() {
                        for a in 0..p {
                            plus[b * p + a] = vb * rp[a];
                            minus[b * p + a] = vb * rm[a];
                        }
                    }
                    design.add(&plus, &minus, local.value(i, j), 1);
                }
            }
            design
        })
        .collect();
    let mut design = MultinomialDesign::new(dim);
    for part in parts {
        design.merge(part);
    }
    design
}

/// Design of the between-block likelihood: one row per block pair, weighted
/// by the dyad counts of each value.
pub fn between_design<S: Scalar>(net: &SignedNetwork, z: &BlockAssignment, spec: &ModelSpec) -> Result<MultinomialDesign<S>> {
    let kb = z.n_blocks();
    spec.validate_for(kb)?;
    let dim = spec.between_dim(kb);
    let mut design = MultinomialDesign::new(dim);
    if kb < 2 {
        return Ok(design);
    }
    let sizes = z.sizes();
    let mut counts = vec![[0usize; 2]; kb * kb];
    for (i, j, s) in net.edges() {
        let (a, b) = (z.block_of(i), z.block_of(j));
        if a != b {
            let cell = a.min(b) * kb + a.max(b);
            counts[cell][if s == Sign::Pos { 0 } else { 1 }] += 1;
        }
    }
    let q = spec.n_between();
    for k in 0..kb {
        for l in k + 1..kb {
            let u: Vec<S> = to_scalar(spec.between_covariates.vector(k, l, kb));
            let mut plus = vec![S::zero(); dim];
            let mut minus = vec![S::zero(); dim];
            for (b, &ub) in u.iter().enumerate() {
                for (a, term) in spec.between.iter().enumerate() {
                    match term {
                        BetweenTerm::EdgesPos => plus[b * q + a] = ub,
                        BetweenTerm::EdgesNeg => minus[b * q + a] = ub,
                    }
                }
            }
            let total = sizes[k] * sizes[l];
            let [pos, neg] = counts[k * kb + l];
            design.add(&plus, &minus, DyadValue::Pos, pos);
            design.add(&plus, &minus, DyadValue::Neg, neg);
            design.add(&plus, &minus, DyadValue::Zero, total - pos - neg);
        }
    }
    Ok(design)
}
