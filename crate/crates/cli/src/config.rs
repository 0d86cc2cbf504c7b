use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use sergm::ssbm::InitMethod;

#[derive(Debug)]
pub enum CliError {
    /// A required option is missing from both the flags and the config file.
    Missing { command: &'static str, option: &'static str },
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Missing { .. } | CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<sergm::Error> for CliError {
    fn from(e: sergm::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Merges the flags over the optional config file and deserializes the
/// result. Flags that were not given serialize to `null` and are dropped.
pub fn resolve<F: Serialize, R: DeserializeOwned>(file: Option<&Path>, flags: &F) -> CliResult<R> {
    let mut merged = match file {
        Some(path) => match serde_json::from_reader(open(path)?) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(CliError::Validation(format!("{}: expected a JSON object", path.display()))),
            Err(e) => return Err(CliError::Validation(format!("{}: {e}", path.display()))),
        },
        None => Map::new(),
    };
    let flags = serde_json::to_value(flags).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Value::Object(flags) = flags {
        merged.extend(flags.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(format!("configuration: {e}")))
}

pub fn require<'a, T>(value: &'a Option<T>, command: &'static str, option: &'static str) -> CliResult<&'a T> {
    value.as_ref().ok_or(CliError::Missing { command, option })
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn runtime(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Creates `path` and hands a buffered writer to `fill`.
pub fn write_file(path: &Path, fill: impl FnOnce(&mut BufWriter<File>) -> sergm::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| runtime(path, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w).map_err(|e| runtime(path, e))?;
    w.flush().map_err(|e| runtime(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| runtime(path, e))
}

/// Reproducibility record written next to the outputs of every run.
#[derive(Serialize)]
pub struct Record<'a, R: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub format_version: &'static str,
    pub config: &'a R,
    pub outputs: Vec<PathBuf>,
}

fn default_godambe_r() -> usize {
    100
}

fn default_t() -> usize {
    100
}

fn default_n_sims() -> usize {
    100
}

fn default_aic_draws() -> usize {
    500
}

fn default_max_iter() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-8
}

fn default_mm_max_iter() -> usize {
    500
}

fn default_mm_tol() -> f64 {
    1e-6
}

fn default_init() -> InitMethod {
    InitMethod::Spectral
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRun {
    pub spec: Option<PathBuf>,
    pub coeffs: Option<PathBuf>,
    pub blocks: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRun {
    pub network: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub k: Option<usize>,
    pub blocks: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// `0` skips the sandwich correction.
    #[serde(default = "default_godambe_r")]
    pub godambe_r: usize,
    #[serde(default)]
    pub aic: bool,
    #[serde(default = "default_aic_draws")]
    pub aic_draws: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_mm_max_iter")]
    pub mm_max_iter: usize,
    #[serde(default = "default_mm_tol")]
    pub mm_tol: f64,
    #[serde(default = "default_init")]
    pub init: InitMethod,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqRun {
    pub network: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub alpha: Option<PathBuf>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_godambe_r")]
    pub godambe_r: usize,
    #[serde(default)]
    pub aic: bool,
    #[serde(default = "default_aic_draws")]
    pub aic_draws: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_mm_max_iter")]
    pub mm_max_iter: usize,
    #[serde(default = "default_mm_tol")]
    pub mm_tol: f64,
    #[serde(default = "default_init")]
    pub init: InitMethod,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GofRun {
    pub network: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub blocks: Option<PathBuf>,
    pub coeffs: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(default = "default_n_sims")]
    pub n_sims: usize,
    #[serde(default)]
    pub seed: u64,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    #[serde(default)]
    pub loo: bool,
    #[serde(default = "default_n_sims")]
    pub loo_sims: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiRun {
    pub truth: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Flags {
        seed: Option<u64>,
        out: Option<PathBuf>,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "spec": "a.json", "out": "x.tsv"}"#).unwrap();
        let flags = Flags {
            seed: Some(9),
            out: None,
        };
        let run: SimulateRun = resolve(Some(&path), &flags).unwrap();
        assert_eq!(run.seed, 9);
        assert_eq!(run.spec, Some(PathBuf::from("a.json")));
        assert_eq!(run.out, Some(PathBuf::from("x.tsv")));
    }

    #[test]
    fn defaults_and_unknown_keys() {
        let flags = Flags { seed: None, out: None };
        let run: FitRun = resolve(None, &flags).unwrap();
        assert_eq!(run.godambe_r, 100);
        assert_eq!(run.init, InitMethod::Spectral);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"sede": 5}"#).unwrap();
        let err = resolve::<_, FitRun>(Some(&path), &flags).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
