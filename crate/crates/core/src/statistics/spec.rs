use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sufficient statistic of the within-block model.
///
/// Serialized as `{"term": "GWDPos", "omega": 0.2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term")]
pub enum WithinTerm {
    EdgesPos,
    EdgesNeg,
    /// Positive edges with at least one mutual friend.
    #[serde(rename = "TriadPPP")]
    TriadPpp,
    /// Positive edges with at least one mutual enemy.
    #[serde(rename = "TriadPMM")]
    TriadPmm,
    #[serde(rename = "GWDPos")]
    GwdPos { omega: f64 },
    #[serde(rename = "GWDNeg")]
    GwdNeg { omega: f64 },
    /// Positive edges weighted by their number of shared enemies.
    #[serde(rename = "GWESEPos")]
    GwesePos { omega: f64 },
    #[serde(rename = "GWESENeg")]
    GweseNeg { omega: f64 },
    /// Positive edges weighted by their number of shared friends.
    #[serde(rename = "GWESFPos")]
    GwesfPos { omega: f64 },
    #[serde(rename = "GWESFNeg")]
    GwesfNeg { omega: f64 },
}

impl WithinTerm {
    pub fn name(&self) -> &'static str {
        match self {
            WithinTerm::EdgesPos => "EdgesPos",
            WithinTerm::EdgesNeg => "EdgesNeg",
            WithinTerm::TriadPpp => "TriadPPP",
            WithinTerm::TriadPmm => "TriadPMM",
            WithinTerm::GwdPos { .. } => "GWDPos",
            WithinTerm::GwdNeg { .. } => "GWDNeg",
            WithinTerm::GwesePos { .. } => "GWESEPos",
            WithinTerm::GweseNeg { .. } => "GWESENeg",
            WithinTerm::GwesfPos { .. } => "GWESFPos",
            WithinTerm::GwesfNeg { .. } => "GWESFNeg",
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match *self {
            WithinTerm::GwdPos { omega }
            | WithinTerm::GwdNeg { omega }
            | WithinTerm::GwesePos { omega }
            | WithinTerm::GweseNeg { omega }
            | WithinTerm::GwesfPos { omega }
            | WithinTerm::GwesfNeg { omega } => Some(omega),
            _ => None,
        }
    }

    pub fn is_dyad_independent(&self) -> bool {
        matches!(self, WithinTerm::EdgesPos | WithinTerm::EdgesNeg)
    }
}

/// Dyad-independent statistic of the between-block model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "term")]
pub enum BetweenTerm {
    EdgesPos,
    EdgesNeg,
}

impl BetweenTerm {
    pub fn name(&self) -> &'static str {
        match self {
            BetweenTerm::EdgesPos => "EdgesPos",
            BetweenTerm::EdgesNeg => "EdgesNeg",
        }
    }
}

/// Block-level covariates `v_k` multiplying the within-block statistics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WithinCovariates {
    /// `v_k = (1)`: one coefficient per statistic shared by all blocks.
    #[default]
    Intercept,
    /// `v_k = (1, log N_k)`.
    LogSize,
    /// `v_k = (1, N_k)`.
    Size,
    /// `v_k = e_k`: block-specific coefficients.
    OneHot,
    /// Explicit `v_k` per block.
    Custom { values: Vec<Vec<f64>> },
}

impl WithinCovariates {
    pub fn dim(&self, k_blocks: usize) -> usize {
        match self {
            WithinCovariates::Intercept => 1,
            WithinCovariates::LogSize | WithinCovariates::Size => 2,
            WithinCovariates::OneHot => k_blocks,
            WithinCovariates::Custom { values } => values.first().map_or(0, Vec::len),
        }
    }

    /// `v_k` for block `k` of size `size` among `k_blocks` blocks.
    pub fn vector(&self, k: usize, size: usize, k_blocks: usize) -> Vec<f64> {
        match self {
            WithinCovariates::Intercept => vec![1.0],
            WithinCovariates::LogSize => vec![1.0, (size as f64).ln()],
            WithinCovariates::Size => vec![1.0, size as f64],
            WithinCovariates::OneHot => {
                let mut v = vec![0.0; k_blocks];
                v[k] = 1.0;
                v
            }
            WithinCovariates::Custom { values } => values[k].clone(),
        }
    }

    fn labels(&self, k_blocks: usize) -> Vec<String> {
        match self {
            WithinCovariates::Intercept => vec![String::new()],
            WithinCovariates::LogSize => vec![String::new(), ":log_size".into()],
            WithinCovariates::Size => vec![String::new(), ":size".into()],
            WithinCovariates::OneHot => (1..=k_blocks).map(|k| format!(":block{k}")).collect(),
            WithinCovariates::Custom { values } => {
                let s = values.first().map_or(0, Vec::len);
                (1..=s).map(|b| format!(":v{b}")).collect()
            }
        }
    }
}

/// Pair-level covariates `u_kl` multiplying the between-block statistics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BetweenCovariates {
    /// `u_kl = 1`: homogeneous between-block coefficients.
    #[default]
    Intercept,
    /// `u_kl` has ones in positions `k` and `l`.
    PairIndicator,
    /// Explicit `u_kl`, indexed `values[k][l]`.
    Custom { values: Vec<Vec<Vec<f64>>> },
}

impl BetweenCovariates {
    pub fn dim(&self, k_blocks: usize) -> usize {
        match self {
            BetweenCovariates::Intercept => 1,
            BetweenCovariates::PairIndicator => k_blocks,
            BetweenCovariates::Custom { values } => values
                .first()
                .and_then(|row| row.get(1).or(row.first()))
                .map_or(0, Vec::len),
        }
    }

    pub fn vector(&self, k: usize, l: usize, k_blocks: usize) -> Vec<f64> {
        match self {
            BetweenCovariates::Intercept => vec![1.0],
            BetweenCovariates::PairIndicator => {
                let mut u = vec![0.0; k_blocks];
                u[k] = 1.0;
                u[l] = 1.0;
                u
            }
            BetweenCovariates::Custom { values } => values[k][l].clone(),
        }
    }

    fn labels(&self, k_blocks: usize) -> Vec<String> {
        match self {
            BetweenCovariates::Intercept => vec![String::new()],
            BetweenCovariates::PairIndicator => {
                (1..=k_blocks).map(|k| format!(":block{k}")).collect()
            }
            BetweenCovariates::Custom { .. } => {
                (1..=self.dim(k_blocks)).map(|b| format!(":u{b}")).collect()
            }
        }
    }
}

fn default_between() -> Vec<BetweenTerm> {
    vec![BetweenTerm::EdgesPos, BetweenTerm::EdgesNeg]
}

/// Declarative model: within-block statistics, between-block statistics and
/// the block-level covariates of the linear coefficient parametrization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub within: Vec<WithinTerm>,
    #[serde(default = "default_between")]
    pub between: Vec<BetweenTerm>,
    #[serde(default)]
    pub covariates: WithinCovariates,
    #[serde(default)]
    pub between_covariates: BetweenCovariates,
}

impl ModelSpec {
    pub fn new(within: Vec<WithinTerm>) -> Self {
        ModelSpec {
            within,
            between: default_between(),
            covariates: WithinCovariates::Intercept,
            between_covariates: BetweenCovariates::Intercept,
        }
    }

    pub fn with_covariates(mut self, covariates: WithinCovariates) -> Self {
        self.covariates = covariates;
        self
    }

    pub fn with_between_covariates(mut self, covariates: BetweenCovariates) -> Self {
        self.between_covariates = covariates;
        self
    }

    /// Positive and negative edge counts only (signed SBM).
    pub fn edges() -> Self {
        Self::new(vec![WithinTerm::EdgesPos, WithinTerm::EdgesNeg])
    }

    /// Edge counts plus the two structural-balance indicator triads.
    pub fn triads() -> Self {
        Self::new(vec![
            WithinTerm::EdgesPos,
            WithinTerm::EdgesNeg,
            WithinTerm::TriadPpp,
            WithinTerm::TriadPmm,
        ])
    }

    /// Edges, geometrically weighted degrees and positive edgewise shared enemies.
    pub fn structural(omega: f64) -> Self {
        Self::new(vec![
            WithinTerm::EdgesPos,
            WithinTerm::EdgesNeg,
            WithinTerm::GwdPos { omega },
            WithinTerm::GwdNeg { omega },
            WithinTerm::GwesePos { omega },
        ])
    }

    /// Edges and geometrically weighted degrees.
    pub fn degree(degree_omega: f64) -> Self {
        Self::new(vec![
            WithinTerm::EdgesPos,
            WithinTerm::EdgesNeg,
            WithinTerm::GwdPos { omega: degree_omega },
            WithinTerm::GwdNeg { omega: degree_omega },
        ])
    }

    /// Degree model plus positive edgewise shared enemies.
    pub fn partial_triad(degree_omega: f64, esp_omega: f64) -> Self {
        let mut spec = Self::degree(degree_omega);
        spec.within.push(WithinTerm::GwesePos { omega: esp_omega });
        spec
    }

    /// Degree model plus all four shared-partner terms.
    pub fn full_triad(degree_omega: f64, esp_omega: f64) -> Self {
        let mut spec = Self::degree(degree_omega);
        spec.within.extend([
            WithinTerm::GwesePos { omega: esp_omega },
            WithinTerm::GwesfPos { omega: esp_omega },
            WithinTerm::GweseNeg { omega: esp_omega },
            WithinTerm::GwesfNeg { omega: esp_omega },
        ]);
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.within.is_empty() {
            return Err(Error::invalid("at least one within-block term is required"));
        }
        for term in &self.within {
            if let Some(omega) = term.omega() {
                if !(omega >= 0.0 && omega.is_finite()) {
                    return Err(Error::invalid(format!(
                        "decay of {} must be a finite non-negative number, found {omega}",
                        term.name()
                    )));
                }
            }
        }
        let mut seen = Vec::new();
        for term in &self.between {
            if seen.contains(term) {
                return Err(Error::invalid(format!("duplicate between term {}", term.name())));
            }
            seen.push(*term);
        }
        if let WithinCovariates::Custom { values } = &self.covariates {
            let s = values.first().map_or(0, Vec::len);
            if s == 0 || values.iter().any(|v| v.len() != s) {
                return Err(Error::invalid("custom within covariates must share one positive length"));
            }
        }
        Ok(())
    }

    /// Checks the covariates against a concrete number of blocks.
    pub fn validate_for(&self, k_blocks: usize) -> Result<()> {
        self.validate()?;
        if let WithinCovariates::Custom { values } = &self.covariates {
            if values.len() != k_blocks {
                return Err(Error::DimensionMismatch {
                    expected: k_blocks,
                    found: values.len(),
                });
            }
        }
        if let BetweenCovariates::Custom { values } = &self.between_covariates {
            if values.len() != k_blocks || values.iter().any(|row| row.len() != k_blocks) {
                return Err(Error::invalid("custom between covariates must be K x K"));
            }
        }
        Ok(())
    }

    /// Number of within statistics `p`.
    pub fn n_within(&self) -> usize {
        self.within.len()
    }

    pub fn n_between(&self) -> usize {
        self.between.len()
    }

    /// Length of the within coefficient vector, `s * p`.
    pub fn within_dim(&self, k_blocks: usize) -> usize {
        self.covariates.dim(k_blocks) * self.n_within()
    }

    pub fn between_dim(&self, k_blocks: usize) -> usize {
        self.between_covariates.dim(k_blocks) * self.n_between()
    }

    /// True when every within statistic is dyad-independent.
    pub fn is_dyad_independent(&self) -> bool {
        self.within.iter().all(WithinTerm::is_dyad_independent)
    }

    /// Coefficient names in the order of `v_k ⊗ s`.
    pub fn within_names(&self, k_blocks: usize) -> Vec<String> {
        self.covariates
            .labels(k_blocks)
            .iter()
            .flat_map(|cov| self.within.iter().map(move |t| format!("{}{}", t.name(), cov)))
            .collect()
    }

    pub fn between_names(&self, k_blocks: usize) -> Vec<String> {
        self.between_covariates
            .labels(k_blocks)
            .iter()
            .flat_map(|cov| self.between.iter().map(move |t| format!("{}{}", t.name(), cov)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_shape() {
        let json = r#"{"within":[{"term":"EdgesPos"},{"term":"GWDPos","omega":0.2}],
                       "between":[{"term":"EdgesNeg"}],
                       "covariates":{"type":"log_size"}}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.within[1], WithinTerm::GwdPos { omega: 0.2 });
        assert_eq!(spec.covariates, WithinCovariates::LogSize);
        assert_eq!(spec.between_covariates, BetweenCovariates::Intercept);
        let again: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
        assert_eq!(
            spec.within_names(3),
            vec!["EdgesPos", "GWDPos", "EdgesPos:log_size", "GWDPos:log_size"]
        );
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::new(vec![]).validate().is_err());
        assert!(ModelSpec::new(vec![WithinTerm::GwdPos { omega: -1.0 }]).validate().is_err());
        assert!(ModelSpec::structural(0.2).validate().is_ok());
        let bad: std::result::Result<ModelSpec, _> =
            serde_json::from_str(r#"{"within":[{"term":"Bogus"}]}"#);
        assert!(bad.is_err());
        // dyad-dependent descriptors are not representable between blocks
        let bad: std::result::Result<ModelSpec, _> =
            serde_json::from_str(r#"{"within":[{"term":"EdgesPos"}],"between":[{"term":"TriadPPP"}]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn covariate_vectors() {
        assert_eq!(WithinCovariates::OneHot.vector(1, 10, 3), vec![0.0, 1.0, 0.0]);
        assert_eq!(WithinCovariates::LogSize.vector(0, 50, 3)[1], 50f64.ln());
        assert_eq!(BetweenCovariates::PairIndicator.vector(0, 2, 3), vec![1.0, 0.0, 1.0]);
        assert_eq!(ModelSpec::full_triad(0.2, 0.0).within_dim(5), 8);
    }
}
