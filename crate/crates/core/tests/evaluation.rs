use sergm::estimator::{fit_within, Coefficients, FitConfig, FitResult};
use sergm::evaluation::{gof, loo_block_cv, Family, LooConfig, COVERED_SHARE};
use sergm::sampler::{simulate_network, SamplerConfig};
use sergm::statistics::{ModelSpec, WithinTerm};
use sergm::{BlockAssignment, Sign, SignedNetwork};

fn spec() -> ModelSpec {
    ModelSpec::new(vec![WithinTerm::EdgesPos, WithinTerm::EdgesNeg, WithinTerm::GwesePos { omega: 0.5 }])
}

fn truth() -> Coefficients<f64> {
    Coefficients {
        beta_w: vec![-1.6, -2.0, 0.4],
        beta_b: vec![-4.0, -4.0],
    }
}

fn blocks(k: usize, size: usize) -> BlockAssignment {
    BlockAssignment::new((0..k * size).map(|i| i / size).collect(), k).unwrap()
}

/// Number of nodes adjacent to both `i` and `j` through edges of `partner`.
fn shared(y: &SignedNetwork, i: usize, j: usize, partner: Sign) -> usize {
    (0..y.n_nodes())
        .filter(|&h| h != i && h != j && y.sign(i, h) == Some(partner) && y.sign(j, h) == Some(partner))
        .count()
}

#[test]
fn histograms_match_direct_counts() {
    let y = simulate_network(&truth(), &blocks(2, 15), &spec(), &SamplerConfig::with_seed(4)).unwrap();
    for family in Family::ALL {
        let hist = family.histogram(&y);
        let weighted: usize = hist.iter().enumerate().map(|(d, c)| d * c).sum();
        let total: usize = hist.iter().sum();
        let (edge, partner) = match family {
            Family::DegreePos => (Sign::Pos, None),
            Family::DegreeNeg => (Sign::Neg, None),
            Family::EsePos => (Sign::Pos, Some(Sign::Neg)),
            Family::EseNeg => (Sign::Neg, Some(Sign::Neg)),
            Family::EsfPos => (Sign::Pos, Some(Sign::Pos)),
            Family::EsfNeg => (Sign::Neg, Some(Sign::Pos)),
        };
        let edges: Vec<(usize, usize)> = y.edges().filter(|e| e.2 == edge).map(|(i, j, _)| (i, j)).collect();
        match partner {
            None => {
                assert_eq!(total, y.n_nodes(), "{family:?}");
                assert_eq!(weighted, 2 * edges.len(), "{family:?}");
            }
            Some(p) => {
                assert_eq!(total, edges.len(), "{family:?}");
                let direct: usize = edges.iter().map(|&(i, j)| shared(&y, i, j, p)).sum();
                assert_eq!(weighted, direct, "{family:?}");
            }
        }
    }
}

#[test]
fn gof_covers_data_from_the_model() {
    let z = blocks(3, 25);
    let y = simulate_network(&truth(), &z, &spec(), &SamplerConfig::with_seed(9)).unwrap();
    let report = gof(&y, &z, &truth(), &spec(), 100, &SamplerConfig::with_seed(10)).unwrap();
    assert_eq!(report.n_sims, 100);
    let summaries = report.summaries();
    let covered = report.covered_families();
    assert!(
        covered >= 5,
        "{covered} families covered at share {COVERED_SHARE}: {:?}",
        summaries.iter().map(|s| s.coverage).collect::<Vec<_>>()
    );
    for s in &summaries {
        for bin in &s.bins {
            assert!(bin.lower <= bin.q25 && bin.q25 <= bin.median && bin.median <= bin.q75 && bin.q75 <= bin.upper);
        }
    }
}

#[test]
fn gof_flags_a_misspecified_density() {
    let z = blocks(3, 25);
    let y = simulate_network(&truth(), &z, &spec(), &SamplerConfig::with_seed(9)).unwrap();
    let mut wrong = truth();
    wrong.beta_w[0] = 0.0;
    let report = gof(&y, &z, &wrong, &spec(), 50, &SamplerConfig::with_seed(10)).unwrap();
    let degree = report.family(Family::DegreePos).unwrap().summary();
    assert!(degree.coverage < COVERED_SHARE, "coverage {}", degree.coverage);
}

#[test]
fn loo_folds_refit_close_to_full_fit() {
    let z = blocks(4, 25);
    let y = simulate_network(&truth(), &z, &spec(), &SamplerConfig::with_seed(12)).unwrap();
    let full: FitResult<f64> = fit_within(&y, &z, &spec(), &FitConfig::default()).unwrap();
    let config = LooConfig {
        n_sims: 30,
        seed: 2,
        ..Default::default()
    };
    let folds = loo_block_cv(&y, &z, &spec(), &config).unwrap();
    assert_eq!(folds.iter().map(|f| f.block).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    for fold in &folds {
        assert!(fold.error.is_none(), "{:?}", fold.error);
        assert!(fold.converged);
        for (a, b) in fold.beta.iter().zip(&full.beta) {
            assert!((a - b).abs() < 1.0, "fold {} coefficient {a} vs {b}", fold.block);
        }
        let report = fold.report.as_ref().unwrap();
        assert_eq!(report.n_sims, 30);
        let degree = report.family(Family::DegreePos).unwrap();
        assert_eq!(degree.observed.iter().sum::<usize>(), 25);
    }
    let again = loo_block_cv(&y, &z, &spec(), &config).unwrap();
    assert_eq!(folds, again);
}
