use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use sergm::estimator::{AicConfig, AicResult, FitConfig, GodambeConfig};
use sergm::evaluation::{gof as run_gof, loo_block_cv, yules_phi, FamilySummary, LooConfig, COVERED_SHARE};
use sergm::network::io::{load_blocks, load_edge_list, save_blocks, save_edge_list};
use sergm::pipeline::{estimate, estimate_with_blocks, uq_sample_and_pool, PipelineConfig};
use sergm::sampler::{simulate_network, SamplerConfig};
use sergm::ssbm::{fit as variational_fit, InitMethod, VariationalConfig};
use sergm::{BlockAssignment, Coefficients, FitResult, MembershipProbabilities, ModelSpec, SignedNetwork, VariationalFit};

use crate::config::{
    create_dir, open, read_json, require, write_file, write_json, CliError, CliResult, FitRun, GofRun, PhiRun, Record,
    SimulateRun, UqRun,
};

fn load_network(path: &Path) -> CliResult<SignedNetwork> {
    load_edge_list(open(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_assignment(path: &Path) -> CliResult<BlockAssignment> {
    load_blocks(open(path)?, None).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> CliResult<ModelSpec> {
    let spec: ModelSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn write_record<R: Serialize>(
    command: &'static str,
    run: &R,
    outputs: Vec<PathBuf>,
    default: Option<PathBuf>,
    record: Option<&Path>,
) -> CliResult<()> {
    let Some(path) = record.map(Path::to_path_buf).or(default) else {
        return Ok(());
    };
    let rec = Record {
        command,
        version: env!("CARGO_PKG_VERSION"),
        format_version: sergm::FORMAT_VERSION,
        config: run,
        outputs,
    };
    write_json(&path, &rec)?;
    info!("resolved configuration written to {}", path.display());
    Ok(())
}

pub fn simulate(run: SimulateRun, record: Option<&Path>) -> CliResult<()> {
    let spec = load_spec(require(&run.spec, "simulate", "--spec")?)?;
    let coefficients: Coefficients = read_json(require(&run.coeffs, "simulate", "--coeffs")?)?;
    let z = load_assignment(require(&run.blocks, "simulate", "--blocks")?)?;
    let out = require(&run.out, "simulate", "--out")?;
    let config = SamplerConfig {
        burn_in: run.burn_in,
        thin: run.thin,
        ..SamplerConfig::with_seed(run.seed)
    };
    let net = simulate_network(&coefficients, &z, &spec, &config)?;
    info!("simulated {} nodes, {} edges", net.n_nodes(), net.n_edges());
    write_file(out, |w| save_edge_list(&net, w))?;
    write_record("simulate", &run, vec![out.clone()], Some(with_suffix(out, ".config.json")), record)
}

fn pipeline_config(
    seed: u64,
    godambe_r: usize,
    aic: bool,
    aic_draws: usize,
    fit: FitConfig,
    variational: VariationalConfig,
) -> PipelineConfig {
    PipelineConfig {
        variational,
        fit,
        godambe: (godambe_r > 0).then(|| GodambeConfig {
            r: godambe_r,
            seed,
            ..Default::default()
        }),
        aic: aic.then(|| AicConfig {
            draws: aic_draws,
            seed,
            ..Default::default()
        }),
    }
}

fn variational_config(seed: u64, max_iter: usize, tol: f64, init: InitMethod) -> VariationalConfig {
    VariationalConfig {
        max_iter,
        tol,
        init,
        seed,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct VariationalSummary {
    iterations: usize,
    converged: bool,
    lower_bound: Option<f64>,
}

impl VariationalSummary {
    fn new(fit: &VariationalFit) -> Self {
        VariationalSummary {
            iterations: fit.iterations,
            converged: fit.converged,
            lower_bound: fit.lb_trace.last().copied(),
        }
    }
}

#[derive(Serialize)]
struct FitOutput<'a> {
    k: usize,
    within: &'a FitResult,
    between: Option<&'a FitResult>,
    aic: Option<&'a AicResult>,
    /// 1-based nodes whose block was chosen among ties.
    ties: Vec<usize>,
    variational: Option<VariationalSummary>,
}

pub fn fit(run: FitRun, record: Option<&Path>) -> CliResult<()> {
    let net = load_network(require(&run.network, "fit", "--network")?)?;
    let spec = load_spec(require(&run.spec, "fit", "--spec")?)?;
    let out = require(&run.out, "fit", "--out")?;
    let config = pipeline_config(
        run.seed,
        run.godambe_r,
        run.aic,
        run.aic_draws,
        FitConfig {
            max_iter: run.max_iter,
            tol: run.tol,
            ..Default::default()
        },
        variational_config(run.seed, run.mm_max_iter, run.mm_tol, run.init),
    );
    let est = match (&run.blocks, run.k) {
        (Some(path), k) => {
            let z = load_assignment(path)?;
            if let Some(k) = k.filter(|&k| k != z.n_blocks()) {
                return Err(CliError::Validation(format!(
                    "--k {k} disagrees with the {} blocks in {}",
                    z.n_blocks(),
                    path.display()
                )));
            }
            estimate_with_blocks(&net, &z, &spec, &config)?
        }
        (None, Some(k)) => estimate(&net, k, &spec, &config)?,
        (None, None) => return Err(CliError::Missing { command: "fit", option: "--k or --blocks" }),
    };
    create_dir(out)?;
    let mut outputs = Vec::new();
    let path = out.join("fit.json");
    write_json(
        &path,
        &FitOutput {
            k: est.z.n_blocks(),
            within: &est.fits.within,
            between: est.fits.between.as_ref(),
            aic: est.fits.aic.as_ref(),
            ties: est.ties.iter().map(|i| i + 1).collect(),
            variational: est.variational.as_ref().map(VariationalSummary::new),
        },
    )?;
    outputs.push(path);
    let path = out.join("coefficients.json");
    write_json(&path, &est.fits.coefficients())?;
    outputs.push(path);
    let path = out.join("blocks.tsv");
    write_file(&path, |w| save_blocks(&est.z, w))?;
    outputs.push(path);
    if let Some(v) = &est.variational {
        let path = out.join("alpha.csv");
        write_file(&path, |w| v.alpha.write_csv(w))?;
        outputs.push(path);
        let path = out.join("mm_log.csv");
        write_file(&path, |w| v.write_log_csv(w))?;
        outputs.push(path);
    }
    write_record("fit", &run, outputs, Some(out.join("config.json")), record)
}

pub fn uq(run: UqRun, record: Option<&Path>) -> CliResult<()> {
    let net = load_network(require(&run.network, "uq", "--network")?)?;
    let spec = load_spec(require(&run.spec, "uq", "--spec")?)?;
    let out = require(&run.out, "uq", "--out")?;
    let variational = variational_config(run.seed, run.mm_max_iter, run.mm_tol, run.init);
    let mut computed = None;
    let alpha: MembershipProbabilities = match (&run.alpha, run.k) {
        (Some(path), _) => MembershipProbabilities::read_csv(open(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        (None, Some(k)) => {
            let v: VariationalFit = variational_fit(&net, k, &variational)?;
            computed = Some(v.alpha.clone());
            v.alpha
        }
        (None, None) => return Err(CliError::Missing { command: "uq", option: "--alpha or --k" }),
    };
    let config = pipeline_config(
        run.seed,
        run.godambe_r,
        run.aic,
        run.aic_draws,
        FitConfig {
            max_iter: run.max_iter,
            tol: run.tol,
            ..Default::default()
        },
        variational,
    );
    let pooled = uq_sample_and_pool(&alpha, &net, &spec, run.t, run.seed, &config)?;
    info!("pooled {} of {} partitions", pooled.t, pooled.requested);
    create_dir(out)?;
    let mut outputs = Vec::new();
    let path = out.join("pooled.json");
    write_json(&path, &pooled)?;
    outputs.push(path);
    if let Some(alpha) = computed {
        let path = out.join("alpha.csv");
        write_file(&path, |w| alpha.write_csv(w))?;
        outputs.push(path);
    }
    write_record("uq", &run, outputs, Some(out.join("config.json")), record)
}

#[derive(Serialize)]
struct GofOutput {
    n_sims: usize,
    seed: u64,
    covered_share: f64,
    covered_families: usize,
    families: Vec<FamilySummary>,
}

#[derive(Serialize)]
struct LooOutput {
    block: usize,
    beta: Vec<f64>,
    converged: bool,
    error: Option<String>,
    covered_families: Option<usize>,
    families: Vec<FamilySummary>,
}

pub fn gof(run: GofRun, record: Option<&Path>) -> CliResult<()> {
    let net = load_network(require(&run.network, "gof", "--network")?)?;
    let spec = load_spec(require(&run.spec, "gof", "--spec")?)?;
    let z = load_assignment(require(&run.blocks, "gof", "--blocks")?)?;
    let coefficients: Coefficients = read_json(require(&run.coeffs, "gof", "--coeffs")?)?;
    let out = require(&run.out, "gof", "--out")?;
    let sampler = SamplerConfig {
        burn_in: run.burn_in,
        thin: run.thin,
        ..SamplerConfig::with_seed(run.seed)
    };
    let report = run_gof(&net, &z, &coefficients, &spec, run.n_sims, &sampler)?;
    create_dir(out)?;
    let mut outputs = Vec::new();
    let path = out.join("gof.csv");
    write_file(&path, |w| report.write_csv(w))?;
    outputs.push(path);
    let path = out.join("gof.json");
    write_json(
        &path,
        &GofOutput {
            n_sims: report.n_sims,
            seed: report.seed,
            covered_share: COVERED_SHARE,
            covered_families: report.covered_families(),
            families: report.summaries(),
        },
    )?;
    outputs.push(path);
    if run.loo {
        let config = LooConfig {
            n_sims: run.loo_sims,
            seed: run.seed,
            burn_in: run.burn_in,
            thin: run.thin,
            ..Default::default()
        };
        let folds = loo_block_cv(&net, &z, &spec, &config)?;
        let path = out.join("loo.csv");
        write_file(&path, |w| {
            writeln!(w, "block,family,value,count,replication")?;
            for fold in &folds {
                let Some(report) = &fold.report else { continue };
                for f in &report.families {
                    let name = f.family.name();
                    for (d, c) in f.observed.iter().enumerate() {
                        writeln!(w, "{},{name},{d},{c},0", fold.block)?;
                    }
                    for (r, h) in f.simulated.iter().enumerate() {
                        for (d, c) in h.iter().enumerate() {
                            writeln!(w, "{},{name},{d},{c},{}", fold.block, r + 1)?;
                        }
                    }
                }
            }
            Ok(())
        })?;
        outputs.push(path);
        let summary: Vec<LooOutput> = folds
            .into_iter()
            .map(|f| LooOutput {
                block: f.block,
                covered_families: f.report.as_ref().map(|r| r.covered_families()),
                families: f.report.as_ref().map(|r| r.summaries()).unwrap_or_default(),
                beta: f.beta,
                converged: f.converged,
                error: f.error,
            })
            .collect();
        let path = out.join("loo.json");
        write_json(&path, &summary)?;
        outputs.push(path);
    }
    write_record("gof", &run, outputs, Some(out.join("config.json")), record)
}

pub fn phi(run: PhiRun, record: Option<&Path>) -> CliResult<()> {
    let truth = load_assignment(require(&run.truth, "phi", "--truth")?)?;
    let est = load_assignment(require(&run.estimate, "phi", "--estimate")?)?;
    let value = yules_phi(&truth, &est)?;
    println!("{value}");
    write_record("phi", &run, Vec::new(), None, record)
}
