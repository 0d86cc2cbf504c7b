use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Coefficients;
use crate::network::{BlockAssignment, Sign, SignedNetwork};
use crate::sampler::{simulate_networks, SamplerConfig};
use crate::scalar::Scalar;
use crate::statistics::{degree_histogram, esp_histogram, ModelSpec, Partner};

/// Distributions compared between observed and simulated networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DegreePos,
    DegreeNeg,
    /// Positive edges by number of shared enemies.
    EsePos,
    EseNeg,
    /// Positive edges by number of shared friends.
    EsfPos,
    EsfNeg,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::DegreePos,
        Family::DegreeNeg,
        Family::EsePos,
        Family::EseNeg,
        Family::EsfPos,
        Family::EsfNeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::DegreePos => "degree_pos",
            Family::DegreeNeg => "degree_neg",
            Family::EsePos => "ese_pos",
            Family::EseNeg => "ese_neg",
            Family::EsfPos => "esf_pos",
            Family::EsfNeg => "esf_neg",
        }
    }

    pub fn histogram(self, net: &SignedNetwork) -> Vec<usize> {
        match self {
            Family::DegreePos => degree_histogram(net, Sign::Pos),
            Family::DegreeNeg => degree_histogram(net, Sign::Neg),
            Family::EsePos => esp_histogram(net, Sign::Pos, Partner::Enemy),
            Family::EseNeg => esp_histogram(net, Sign::Neg, Partner::Enemy),
            Family::EsfPos => esp_histogram(net, Sign::Pos, Partner::Friend),
            Family::EsfNeg => esp_histogram(net, Sign::Neg, Partner::Friend),
        }
    }
}

/// Observed and simulated histograms of one family, padded to a common length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub observed: Vec<usize>,
    /// One histogram per simulated network.
    pub simulated: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub value: usize,
    pub observed: usize,
    pub lower: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub family: Family,
    pub bins: Vec<BinSummary>,
    /// Share of bins whose observed count lies in the central 95% band.
    pub coverage: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FamilyReport {
    pub fn new(family: Family, observed: Vec<usize>, simulated: Vec<Vec<usize>>) -> Self {
        let len = simulated.iter().map(Vec::len).chain([observed.len()]).max().unwrap_or(0);
        let pad = |mut h: Vec<usize>| {
            h.resize(len, 0);
            h
        };
        FamilyReport {
            family,
            observed: pad(observed),
            simulated: simulated.into_iter().map(pad).collect(),
        }
    }

    pub fn summary(&self) -> FamilySummary {
        let mut inside = 0;
        let bins: Vec<BinSummary> = (0..self.observed.len())
            .map(|d| {
                let mut column: Vec<f64> = self.simulated.iter().map(|h| h[d] as f64).collect();
                column.sort_by(f64::total_cmp);
                let bin = BinSummary {
                    value: d,
                    observed: self.observed[d],
                    lower: quantile(&column, 0.025),
                    q25: quantile(&column, 0.25),
                    median: quantile(&column, 0.5),
                    q75: quantile(&column, 0.75),
                    upper: quantile(&column, 0.975),
                };
                let o = bin.observed as f64;
                if bin.lower <= o && o <= bin.upper {
                    inside += 1;
                }
                bin
            })
            .collect();
        FamilySummary {
            family: self.family,
            coverage: if bins.is_empty() { 1.0 } else { inside as f64 / bins.len() as f64 },
            bins,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub families: Vec<FamilyReport>,
    pub n_sims: usize,
    pub seed: u64,
}

/// Share of bins that must fall in the 95% band for a family to count as covered.
pub const COVERED_SHARE: f64 = 0.9;

impl GofReport {
    pub fn from_networks(observed: &SignedNetwork, simulated: &[SignedNetwork], seed: u64) -> Self {
        let families = Family::ALL
            .iter()
            .map(|&f| {
                FamilyReport::new(
                    f,
                    f.histogram(observed),
                    simulated.par_iter().map(|y| f.histogram(y)).collect(),
                )
            })
            .collect();
        GofReport {
            families,
            n_sims: simulated.len(),
            seed,
        }
    }

    pub fn family(&self, family: Family) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn summaries(&self) -> Vec<FamilySummary> {
        self.families.iter().map(FamilyReport::summary).collect()
    }

    /// Families with at least [`COVERED_SHARE`] of their bins inside the band.
    pub fn covered_families(&self) -> usize {
        self.summaries().iter().filter(|s| s.coverage >= COVERED_SHARE).count()
    }

    /// Long format `family,value,count,replication` with replication 0 the
    /// observed network.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "family,value,count,replication")?;
        for f in &self.families {
            for (d, c) in f.observed.iter().enumerate() {
                writeln!(w, "{},{d},{c},0", f.family.name())?;
            }
            for (r, h) in f.simulated.iter().enumerate() {
                for (d, c) in h.iter().enumerate() {
                    writeln!(w, "{},{d},{c},{}", f.family.name(), r + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Simulates `n_sims` networks at `coefficients` given `z` and compares the
/// six histogram families with the observed network.
pub fn gof<S: Scalar>(
    net: &SignedNetwork,
    z: &BlockAssignment,
    coefficients: &Coefficients<S>,
    spec: &ModelSpec,
    n_sims: usize,
    sampler: &SamplerConfig,
) -> Result<GofReport> {
    if n_sims == 0 {
        return Err(Error::invalid("goodness of fit needs at least one simulation"));
    }
    if z.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: z.n_nodes(),
        });
    }
    let config = SamplerConfig {
        n_samples: n_sims,
        ..sampler.clone()
    };
    let simulated = simulate_networks(coefficients, z, spec, &config)?;
    Ok(GofReport::from_networks(net, &simulated, sampler.seed))
}
