//! Sufficient statistics, block-level reparametrization and change statistics.
//!
//! Every statistic comes as a pair: a global evaluation over a (block)
//! network and an incremental change for moving one dyad from 0 to `+` or
//! `-`. The incremental path only touches the neighborhoods of the two
//! endpoints; the property tests pin it to the global difference.

mod spec;

pub use spec::{BetweenCovariates, BetweenTerm, ModelSpec, WithinCovariates, WithinTerm};

use log::warn;

use crate::error::{Error, Result};
use crate::network::{BlockAssignment, DyadValue, Sign, SignedNetwork};
use crate::scalar::Scalar;

/// Which partners an edgewise shared-partner statistic counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Partner {
    /// `h` with `y_ih = y_jh = +`.
    Friend,
    /// `h` with `y_ih = y_jh = -`.
    Enemy,
}

impl Partner {
    pub fn sign(self) -> Sign {
        match self {
            Partner::Friend => Sign::Pos,
            Partner::Enemy => Sign::Neg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriadVariant {
    /// `+` edge closed by a mutual friend.
    Ppp,
    /// `+` edge closed by a mutual enemy.
    Pmm,
}

/// Statistics vector of one block or block pair, ordered as in the [`ModelSpec`].
pub type StatisticsVector<S> = Vec<S>;

/// Change of the reparametrized statistics `v_k ⊗ s` when a dyad moves from 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeStatistics<S> {
    pub delta_plus: Vec<S>,
    pub delta_minus: Vec<S>,
}

/// Read access to a network, possibly restricted to the nodes of one block.
pub(crate) trait GraphView {
    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, Sign)> + '_;
    fn degree(&self, i: usize, sign: Sign) -> usize;
    fn sign(&self, i: usize, j: usize) -> Option<Sign>;
}

impl GraphView for SignedNetwork {
    #[inline]
    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, Sign)> + '_ {
        SignedNetwork::neighbors(self, i).iter().copied()
    }

    #[inline]
    fn degree(&self, i: usize, sign: Sign) -> usize {
        self.signed_degree(i, sign)
    }

    #[inline]
    fn sign(&self, i: usize, j: usize) -> Option<Sign> {
        SignedNetwork::sign(self, i, j)
    }
}

/// A full network seen through the nodes of a single block.
pub(crate) struct BlockView<'a> {
    net: &'a SignedNetwork,
    z: &'a BlockAssignment,
    block: usize,
}

impl GraphView for BlockView<'_> {
    fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, Sign)> + '_ {
        self.net
            .neighbors(i)
            .iter()
            .copied()
            .filter(|&(h, _)| self.z.block_of(h) == self.block)
    }

    fn degree(&self, i: usize, sign: Sign) -> usize {
        self.neighbors(i).filter(|&(_, s)| s == sign).count()
    }

    fn sign(&self, i: usize, j: usize) -> Option<Sign> {
        if self.z.block_of(j) == self.block {
            self.net.sign(i, j)
        } else {
            None
        }
    }
}

/// Number of `h` with `y_ah = y_bh = sign`, by merging the sorted neighbor lists.
pub(crate) fn shared_partners<V: GraphView>(g: &V, a: usize, b: usize, sign: Sign) -> usize {
    let mut left = g.neighbors(a).filter(|&(_, s)| s == sign).map(|(h, _)| h);
    let mut right = g.neighbors(b).filter(|&(_, s)| s == sign).map(|(h, _)| h);
    let (mut x, mut y) = (left.next(), right.next());
    let mut count = 0;
    while let (Some(u), Some(v)) = (x, y) {
        match u.cmp(&v) {
            std::cmp::Ordering::Less => x = left.next(),
            std::cmp::Ordering::Greater => y = right.next(),
            std::cmp::Ordering::Equal => {
                count += 1;
                x = left.next();
                y = right.next();
            }
        }
    }
    count
}

/// Geometric weights `e^ω (1 - (1 - e^{-ω})^d)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Decay<S> {
    exp_omega: S,
    ratio: S,
}

impl<S: Scalar> Decay<S> {
    pub(crate) fn new(omega: f64) -> Self {
        let omega = S::of(omega);
        Decay {
            exp_omega: omega.exp(),
            ratio: S::one() - (-omega).exp(),
        }
    }

    #[inline]
    pub(crate) fn weight(&self, d: usize) -> S {
        if d == 0 {
            S::zero()
        } else {
            self.exp_omega * (S::one() - self.ratio.powi(d as i32))
        }
    }

    /// `weight(d + 1) - weight(d)`, which simplifies to `ratio^d`.
    #[inline]
    pub(crate) fn increment(&self, d: usize) -> S {
        self.ratio.powi(d as i32)
    }
}

/// Evaluation rule behind a [`WithinTerm`].
#[derive(Clone, Copy, Debug)]
pub(crate) enum Kernel<S> {
    Edges(Sign),
    Degree(Sign, Decay<S>),
    SharedPartners {
        focal: Sign,
        partner: Sign,
        decay: Decay<S>,
    },
}

impl<S: Scalar> Kernel<S> {
    pub(crate) fn of(term: &WithinTerm) -> Self {
        let esp = |focal, partner, omega| Kernel::SharedPartners {
            focal,
            partner,
            decay: Decay::new(omega),
        };
        match *term {
            WithinTerm::EdgesPos => Kernel::Edges(Sign::Pos),
            WithinTerm::EdgesNeg => Kernel::Edges(Sign::Neg),
            WithinTerm::TriadPpp => esp(Sign::Pos, Sign::Pos, 0.0),
            WithinTerm::TriadPmm => esp(Sign::Pos, Sign::Neg, 0.0),
            WithinTerm::GwdPos { omega } => Kernel::Degree(Sign::Pos, Decay::new(omega)),
            WithinTerm::GwdNeg { omega } => Kernel::Degree(Sign::Neg, Decay::new(omega)),
            WithinTerm::GwesePos { omega } => esp(Sign::Pos, Sign::Neg, omega),
            WithinTerm::GweseNeg { omega } => esp(Sign::Neg, Sign::Neg, omega),
            WithinTerm::GwesfPos { omega } => esp(Sign::Pos, Sign::Pos, omega),
            WithinTerm::GwesfNeg { omega } => esp(Sign::Neg, Sign::Pos, omega),
        }
    }

    pub(crate) fn all(terms: &[WithinTerm]) -> Vec<Self> {
        terms.iter().map(Kernel::of).collect()
    }

    fn value(&self, net: &SignedNetwork) -> S {
        match *self {
            Kernel::Edges(sign) => S::of_usize(net.n_edges_of(sign)),
            Kernel::Degree(sign, decay) => (0..net.n_nodes())
                .map(|i| decay.weight(net.signed_degree(i, sign)))
                .sum(),
            Kernel::SharedPartners {
                focal,
                partner,
                decay,
            } => net
                .edges()
                .filter(|&(_, _, s)| s == focal)
                .map(|(i, j, _)| decay.weight(shared_partners(net, i, j, partner)))
                .sum(),
        }
    }

    /// Change when dyad `(i, j)`, currently `current`, is first zeroed and
    /// then set to `to`.
    #[inline]
    fn change<V: GraphView>(&self, g: &V, i: usize, j: usize, current: Option<Sign>, to: Sign) -> S {
        match *self {
            Kernel::Edges(sign) => {
                if to == sign {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Kernel::Degree(sign, decay) => {
                if to != sign {
                    return S::zero();
                }
                let own = usize::from(current == Some(sign));
                decay.increment(g.degree(i, sign) - own) + decay.increment(g.degree(j, sign) - own)
            }
            Kernel::SharedPartners {
                focal,
                partner,
                decay,
            } => {
                let mut total = S::zero();
                if to == focal {
                    total = total + decay.weight(shared_partners(g, i, j, partner));
                }
                if to == partner {
                    // (i, j) becomes a partner tie, adding a shared partner to
                    // every focal edge (i, h) with h a partner of j, and vice versa.
                    let own = usize::from(current == Some(partner));
                    for (a, b) in [(i, j), (j, i)] {
                        for (h, s) in g.neighbors(b) {
                            if s != partner || h == a || g.sign(a, h) != Some(focal) {
                                continue;
                            }
                            total = total + decay.increment(shared_partners(g, a, h, partner) - own);
                        }
                    }
                }
                total
            }
        }
    }
}

/// Raw changes `s(y^{ij -> +}) - s(y^{ij -> 0})` and the `-` analogue, one
/// entry per kernel.
pub(crate) fn raw_changes<S: Scalar, V: GraphView>(
    g: &V,
    kernels: &[Kernel<S>],
    i: usize,
    j: usize,
    plus: &mut [S],
    minus: &mut [S],
) {
    let current = g.sign(i, j);
    for (idx, kernel) in kernels.iter().enumerate() {
        plus[idx] = kernel.change(g, i, j, current, Sign::Pos);
        minus[idx] = kernel.change(g, i, j, current, Sign::Neg);
    }
}

/// Change of the raw statistics for moving dyad `(i, j)` from its current
/// value to `to`. Used by the samplers.
pub(crate) fn raw_change_between<S: Scalar>(
    net: &SignedNetwork,
    kernels: &[Kernel<S>],
    i: usize,
    j: usize,
    to: DyadValue,
    out: &mut [S],
) {
    let current = net.sign(i, j);
    for (idx, kernel) in kernels.iter().enumerate() {
        let to_new = to.sign().map_or(S::zero(), |s| kernel.change(net, i, j, current, s));
        let from_old = current.map_or(S::zero(), |s| kernel.change(net, i, j, current, s));
        out[idx] = to_new - from_old;
    }
}

pub fn edges_stat(net: &SignedNetwork, sign: Sign) -> usize {
    net.n_edges_of(sign)
}

/// Number of `+` edges with at least one mutual friend (`Ppp`) or enemy (`Pmm`).
pub fn triad_stat(net: &SignedNetwork, variant: TriadVariant) -> usize {
    let partner = match variant {
        TriadVariant::Ppp => Sign::Pos,
        TriadVariant::Pmm => Sign::Neg,
    };
    net.edges()
        .filter(|&(i, j, s)| s == Sign::Pos && shared_partners(net, i, j, partner) > 0)
        .count()
}

/// Geometrically weighted degree of one sign.
pub fn gwd_stat<S: Scalar>(net: &SignedNetwork, sign: Sign, omega: f64) -> S {
    Kernel::Degree(sign, Decay::new(omega)).value(net)
}

/// Geometrically weighted edgewise shared partners of `edge_sign` edges.
pub fn gwesp_stat<S: Scalar>(net: &SignedNetwork, edge_sign: Sign, partner: Partner, omega: f64) -> S {
    Kernel::SharedPartners {
        focal: edge_sign,
        partner: partner.sign(),
        decay: Decay::new(omega),
    }
    .value(net)
}

/// Number of nodes with each `sign`-degree `d`, indexed by `d`.
pub fn degree_histogram(net: &SignedNetwork, sign: Sign) -> Vec<usize> {
    let mut hist = vec![0usize; 1];
    for i in 0..net.n_nodes() {
        let d = net.signed_degree(i, sign);
        if d >= hist.len() {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    }
    hist
}

/// Number of `edge_sign` edges with exactly `d` shared partners, indexed by `d`.
pub fn esp_histogram(net: &SignedNetwork, edge_sign: Sign, partner: Partner) -> Vec<usize> {
    let mut hist = vec![0usize; 1];
    for (i, j, s) in net.edges() {
        if s != edge_sign {
            continue;
        }
        let d = shared_partners(net, i, j, partner.sign());
        if d >= hist.len() {
            hist.resize(d + 1, 0);
        }
        hist[d] += 1;
    }
    hist
}

/// All within statistics of a single block network, in spec order.
pub fn within_stats<S: Scalar>(net_kk: &SignedNetwork, spec: &ModelSpec) -> StatisticsVector<S> {
    if net_kk.n_nodes() <= 2 && spec.within.iter().any(|t| matches!(Kernel::<S>::of(t), Kernel::SharedPartners { .. })) {
        warn!(
            "block of {} nodes cannot have shared partners; those statistics are 0",
            net_kk.n_nodes()
        );
    }
    Kernel::all(&spec.within).iter().map(|k| k.value(net_kk)).collect()
}

/// `u_kl ⊗ h(y_kl)` for a between-block network (only cross edges present).
pub fn between_stats<S: Scalar>(net_kl: &SignedNetwork, spec: &ModelSpec, u_kl: &[S]) -> StatisticsVector<S> {
    let raw: Vec<S> = spec
        .between
        .iter()
        .map(|t| {
            S::of_usize(match t {
                BetweenTerm::EdgesPos => net_kl.n_edges_of(Sign::Pos),
                BetweenTerm::EdgesNeg => net_kl.n_edges_of(Sign::Neg),
            })
        })
        .collect();
    reparam(&raw, u_kl)
}

/// Kronecker product `v ⊗ s`.
pub fn reparam<S: Scalar>(stats: &[S], v: &[S]) -> StatisticsVector<S> {
    v.iter()
        .flat_map(|&vb| stats.iter().map(move |&s| vb * s))
        .collect()
}

/// Change statistics of dyad `(i, j)` inside its block, computed from the
/// endpoints' neighborhoods in the full network. `v_k` is the block covariate.
pub fn change_stats<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    dyad: (usize, usize),
    spec: &ModelSpec,
    v_k: &[S],
) -> Result<ChangeStatistics<S>> {
    let (i, j) = dyad;
    if i == j || i >= net.n_nodes() || j >= net.n_nodes() {
        return Err(Error::invalid(format!("invalid dyad ({}, {})", i + 1, j + 1)));
    }
    if z.block_of(i) != z.block_of(j) {
        return Err(Error::DifferentBlocks(i + 1, j + 1));
    }
    let view = BlockView {
        net,
        z,
        block: z.block_of(i),
    };
    Ok(view_change_stats(&view, &Kernel::all(&spec.within), i, j, v_k))
}

/// Change statistics of dyad `(i, j)` of a block network.
pub fn block_change_stats<S: Scalar>(
    net_kk: &SignedNetwork,
    dyad: (usize, usize),
    spec: &ModelSpec,
    v_k: &[S],
) -> ChangeStatistics<S> {
    view_change_stats(net_kk, &Kernel::all(&spec.within), dyad.0, dyad.1, v_k)
}

fn view_change_stats<S: Scalar, V: GraphView>(
    g: &V,
    kernels: &[Kernel<S>],
    i: usize,
    j: usize,
    v_k: &[S],
) -> ChangeStatistics<S> {
    let p = kernels.len();
    let mut plus = vec![S::zero(); p];
    let mut minus = vec![S::zero(); p];
    raw_changes(g, kernels, i, j, &mut plus, &mut minus);
    ChangeStatistics {
        delta_plus: reparam(&plus, v_k),
        delta_minus: reparam(&minus, v_k),
    }
}
