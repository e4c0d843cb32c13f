//! Command-line front end. Every command validates its flags and loads its
//! data before the run directory is created; errors at that stage exit
//! with status 2, failures during training or verification with 1.

mod output;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::circuit::{
    apply_diagonal, cccx_truth_table, cccz_angle, ideal_cccx_table, mcry_diagonal, ShotsMode,
};
use crate::datasets::{load_digits, Image, LabeledPoint};
use crate::error::{Error, Result};
use crate::metrics::statistical_fidelity;
use crate::qcore::{hermitian_residual, CMatrix, StateVector, C64, HERMITIAN_TOL};
use crate::tasks::classification::{run_classification_on, ClassTask, ClassifyConfig};
use crate::tasks::qgan::{train_qgan_on, QganConfig};
use crate::tasks::qgdm::{matrix_to_pairs, train_qgdm, QgdmConfig};
use crate::tasks::Variant;
use crate::train::thread_count;
use output::{boundary_csv, density_csv, history_csv, image_csv, num, pgm, RunDir};
use verify::{run_checks, VerifyOptions};

#[derive(Parser, Debug)]
#[command(name = "adeqnn", version, about = "Post-selected photonic QNN simulator and trainer")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a classifier on circle, spiral or glass data.
    Classify(ClassifyArgs),
    /// Train the patched quantum GAN on one digit class.
    Qgan(QganArgs),
    /// Train the denoising chain for a two-qubit Gibbs state.
    Qgdm(QgdmArgs),
    /// Print the CCCX truth-table fidelity and the CCCZ success probability.
    GateCheck(GateCheckArgs),
    /// Run the fast invariant suite.
    Verify(VerifyArgs),
    /// Re-run an experiment from a saved config.json.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DatasetArg {
    Circle,
    Spiral,
    Glass,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Ade,
    Baseline,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Ade => Variant::Ade,
            VariantArg::Baseline => Variant::Baseline,
        }
    }
}

impl From<ModeArg> for ShotsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => ShotsMode::Exact,
            ModeArg::Sampled => ShotsMode::Sampled,
        }
    }
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    #[arg(long, value_enum, default_value = "ade")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    shots_s0: Option<u64>,
    #[arg(long)]
    shots_doublings: Option<u32>,
    /// Perturbations averaged per SPSA gradient.
    #[arg(long)]
    avg_draws: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QganArgs {
    #[arg(long)]
    digit: u32,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise drives only the input rotations, not the re-upload layer.
    #[arg(long)]
    no_reupload: bool,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QgdmArgs {
    #[arg(long, value_enum, default_value = "ade")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// 4x4 Hermitian matrix, one row per line: 4 real values or 8 (re, im).
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    iters_per_step: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GateCheckArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Random cases per sweep.
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    corrupt_interference_sign: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Contents of `config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "snake_case")]
pub enum RunConfig {
    Classify(ClassifyConfig),
    Qgan(QganConfig),
    Qgdm(QgdmConfig),
}

enum Prepared {
    Classify(ClassifyConfig, Vec<LabeledPoint>, Vec<LabeledPoint>),
    Qgan(QganConfig, Vec<Image>),
    Qgdm(QgdmConfig),
}

enum Failure {
    Usage(Error),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            2
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn dispatch(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Classify(a) => {
            let out = a.out.clone();
            let p = usage(prepare(RunConfig::Classify(classify_config(a))))?;
            execute(p, &out)
        }
        Command::Qgan(a) => {
            let out = a.out.clone();
            let p = usage(prepare(RunConfig::Qgan(qgan_config(a))))?;
            execute(p, &out)
        }
        Command::Qgdm(a) => {
            let out = a.out.clone();
            let cfg = usage(qgdm_config(a))?;
            let p = usage(prepare(RunConfig::Qgdm(cfg)))?;
            execute(p, &out)
        }
        Command::Replay(a) => {
            let text = usage(fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e)))?;
            let cfg: RunConfig = usage(serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: a.config.clone(),
                line: e.line(),
                msg: e.to_string(),
            }))?;
            let p = usage(prepare(cfg))?;
            execute(p, &a.out)
        }
        Command::GateCheck(a) => gate_check(a.out.as_deref()),
        Command::Verify(a) => {
            let opts = VerifyOptions {
                cases: a.cases,
                seed: a.seed,
                corrupt_interference: a.corrupt_interference_sign,
            };
            let checks = run_checks(&opts);
            let mut failed = 0;
            for c in &checks {
                println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Failure::Run(format!("{failed} of {} checks failed", checks.len())));
            }
            Ok(())
        }
    }
}

fn classify_config(a: ClassifyArgs) -> ClassifyConfig {
    let task = match a.dataset {
        DatasetArg::Circle => ClassTask::Circle,
        DatasetArg::Spiral => ClassTask::Spiral,
        DatasetArg::Glass => ClassTask::Glass,
    };
    let mut cfg = ClassifyConfig::new(task, a.variant.into());
    cfg.shots_mode = a.mode.into();
    cfg.seed = a.seed;
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.batch = a.batch.unwrap_or(cfg.batch);
    cfg.shots_s0 = a.shots_s0.unwrap_or(cfg.shots_s0);
    cfg.shots_doublings = a.shots_doublings.unwrap_or(cfg.shots_doublings);
    cfg.spsa.avg_draws = a.avg_draws.unwrap_or(cfg.spsa.avg_draws);
    cfg.optimizer.lr = a.lr.unwrap_or(cfg.optimizer.lr);
    cfg.threads = thread_count();
    cfg.data_dir = a.data_dir;
    cfg
}

fn qgan_config(a: QganArgs) -> QganConfig {
    let mut cfg = QganConfig::new(a.digit);
    cfg.iters = a.iters;
    cfg.batch = a.batch;
    cfg.shots_mode = a.mode.into();
    cfg.seed = a.seed;
    cfg.reupload = !a.no_reupload;
    cfg.threads = thread_count();
    cfg.data_dir = a.data_dir;
    cfg
}

fn qgdm_config(a: QgdmArgs) -> Result<QgdmConfig> {
    let mut cfg = QgdmConfig::new(a.variant.into(), a.steps);
    cfg.beta = a.beta;
    cfg.shots_mode = a.mode.into();
    cfg.seed = a.seed;
    cfg.iters_per_step = a.iters_per_step.unwrap_or(cfg.iters_per_step);
    cfg.threads = thread_count();
    if let Some(path) = &a.hamiltonian {
        cfg.hamiltonian = matrix_to_pairs(&read_hamiltonian(path)?);
    }
    Ok(cfg)
}

/// Four non-empty lines of 4 real or 8 interleaved `re,im` values. Blank
/// lines, `#` comments and a non-numeric header are skipped.
pub fn read_hamiltonian(path: &Path) -> Result<CMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().map(|c| c.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && k == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: e.to_string(),
                })
            }
        };
        let row = match values.len() {
            4 => values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            8 => values.chunks(2).map(|p| C64::new(p[0], p[1])).collect(),
            n => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: k + 1,
                    msg: format!("expected 4 or 8 values, found {n}"),
                })
            }
        };
        rows.push(row);
    }
    if rows.len() != 4 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: text.lines().count(),
            msg: format!("expected 4 rows, found {}", rows.len()),
        });
    }
    let h = CMatrix::from_fn(4, 4, |r, c| rows[r][c]);
    let residual = hermitian_residual(&h);
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian(residual));
    }
    Ok(h)
}

fn prepare(cfg: RunConfig) -> Result<Prepared> {
    Ok(match cfg {
        RunConfig::Classify(c) => {
            c.validate()?;
            let (train, test) = c.load_data()?;
            Prepared::Classify(c, train, test)
        }
        RunConfig::Qgan(c) => {
            c.validate()?;
            let reals = load_digits(&c.digits_path(), &[c.digit])?;
            Prepared::Qgan(c, reals)
        }
        RunConfig::Qgdm(c) => {
            c.validate()?;
            Prepared::Qgdm(c)
        }
    })
}

fn execute(p: Prepared, out: &Path) -> std::result::Result<(), Failure> {
    let start = Instant::now();
    match p {
        Prepared::Classify(cfg, train, test) => {
            let dir = usage(RunDir::create(out))?;
            let r = run_classification_on(&cfg, &train, &test)?;
            dir.write_json("config.json", &RunConfig::Classify(cfg.clone()))?;
            dir.write_json("params.json", &r.params)?;
            dir.write("history.csv", history_csv(&r.record.history, "train_accuracy").as_bytes())?;
            if let Some(grid) = &r.boundary {
                dir.write("exports/boundary.csv", boundary_csv(grid).as_bytes())?;
            }
            let mut cm = String::new();
            for row in &r.confusion.counts {
                let cells: Vec<String> = row.iter().map(u64::to_string).collect();
                cm.push_str(&cells.join(","));
                cm.push('\n');
            }
            dir.write("exports/confusion.csv", cm.as_bytes())?;
            dir.write_json(
                "metrics.json",
                &json!({
                    "train_accuracy": r.train_accuracy,
                    "test_accuracy": r.test_accuracy,
                    "confusion": r.confusion.counts,
                    "final_cost": r.record.history.last().map(|h| h.cost),
                }),
            )?;
            println!("train_accuracy {:.6}", r.train_accuracy);
            println!("test_accuracy {:.6}", r.test_accuracy);
            write_timing(&dir, start)?;
        }
        Prepared::Qgan(cfg, reals) => {
            let dir = usage(RunDir::create(out))?;
            let r = train_qgan_on(&cfg, &reals)?;
            dir.write_json("config.json", &RunConfig::Qgan(cfg.clone()))?;
            dir.write_json("params.json", &json!({ "generator": r.generator, "critic": r.critic }))?;
            dir.write("history.csv", history_csv(&r.record.history, "wasserstein").as_bytes())?;
            let mut w = String::from("iter,wasserstein\n");
            for h in &r.record.history {
                if let Some(m) = h.metric {
                    w.push_str(&format!("{},{}\n", h.iter, num(m)));
                }
            }
            dir.write("exports/wasserstein.csv", w.as_bytes())?;
            for set in &r.samples {
                for (k, img) in set.images.iter().enumerate() {
                    let stem = format!("exports/samples/iter_{:04}_{:02}", set.iter, k);
                    dir.write(&format!("{stem}.pgm"), &pgm(img))?;
                    dir.write(&format!("{stem}.csv"), image_csv(img).as_bytes())?;
                }
            }
            dir.write("exports/prototype.pgm", &pgm(&r.prototype))?;
            dir.write("exports/prototype.csv", image_csv(&r.prototype).as_bytes())?;
            let w_at = |n: usize| r.record.history.get(n.wrapping_sub(1)).and_then(|h| h.metric);
            dir.write_json(
                "metrics.json",
                &json!({
                    "ssim_vs_prototype": r.ssim_vs_prototype,
                    "ssim_vs_nearest_real": r.ssim_vs_nearest_real,
                    "wasserstein_iter10": w_at(10),
                    "wasserstein_final": r.record.history.last().and_then(|h| h.metric),
                }),
            )?;
            println!("ssim_vs_prototype {:.6}", r.ssim_vs_prototype);
            write_timing(&dir, start)?;
        }
        Prepared::Qgdm(cfg) => {
            let dir = usage(RunDir::create(out))?;
            let r = train_qgdm(&cfg)?;
            dir.write_json("config.json", &RunConfig::Qgdm(cfg.clone()))?;
            let params: Vec<_> = r.steps.iter().map(|s| json!({ "t": s.t, "params": s.params })).collect();
            dir.write_json("params.json", &params)?;
            let mut hist = String::from("step,iter,cost,shots,fidelity\n");
            for s in &r.steps {
                for h in &s.record.history {
                    hist.push_str(&format!("{},{},{},{},{}\n", s.t, h.iter, num(h.cost), h.shots, num(1.0 - h.cost)));
                }
            }
            dir.write("history.csv", hist.as_bytes())?;
            dir.write("exports/target.csv", density_csv(&r.target).as_bytes())?;
            for (k, rho) in r.trajectory.iter().enumerate() {
                dir.write(&format!("exports/trajectory/rho_{}.csv", k + 1), density_csv(rho).as_bytes())?;
            }
            for (s, rho) in r.steps.iter().zip(&r.reconstructions) {
                dir.write(
                    &format!("exports/reconstructed/rho_tilde_{}.csv", s.t - 1),
                    density_csv(rho).as_bytes(),
                )?;
            }
            dir.write("exports/rho_tilde_0.csv", density_csv(r.final_state()).as_bytes())?;
            let per_step: Vec<_> = r
                .steps
                .iter()
                .map(|s| json!({ "t": s.t, "fidelity": s.target_fidelity, "step_fidelity": s.achieved_fidelity }))
                .collect();
            dir.write_json(
                "metrics.json",
                &json!({ "per_step": per_step, "final_fidelity": r.final_fidelity }),
            )?;
            for s in &r.steps {
                println!("step {} fidelity {:.6} step_fidelity {:.6}", s.t, s.target_fidelity, s.achieved_fidelity);
            }
            println!("final_fidelity {:.6}", r.final_fidelity);
            write_timing(&dir, start)?;
        }
    }
    Ok(())
}

/// Wall-clock time lives apart from the history so histories stay
/// byte-identical across repeats.
fn write_timing(dir: &RunDir, start: Instant) -> Result<()> {
    dir.write_json("timing.json", &json!({ "wall_clock_seconds": start.elapsed().as_secs_f64() }))
}

/// Mean statistical fidelity of the exact CCCX table against the ideal
/// permutation, column by column.
pub fn cccx_fidelity() -> Result<f64> {
    let table = cccx_truth_table()?;
    let ideal = ideal_cccx_table();
    let mut total = 0.0;
    for c in 0..16 {
        let got: Vec<f64> = (0..16).map(|r| table[r][c]).collect();
        let s: f64 = got.iter().sum();
        let got: Vec<f64> = got.iter().map(|v| v / s).collect();
        let want: Vec<f64> = (0..16).map(|r| ideal[r][c]).collect();
        total += statistical_fidelity(&got, &want)?;
    }
    Ok(total / 16.0)
}

/// Post-selection success probability of the CCCZ setting on the uniform
/// superposition (it is the same for every input).
pub fn cccz_success_probability() -> Result<f64> {
    let s = StateVector::from_amplitudes(4, vec![C64::new(0.25, 0.0); 16])?;
    Ok(apply_diagonal(&s, &mcry_diagonal(&[cccz_angle(); 7])?)?.1)
}

fn gate_check(out: Option<&Path>) -> std::result::Result<(), Failure> {
    if let Some(dir) = out {
        let dir = usage(RunDir::create(dir))?;
        let table = cccx_truth_table()?;
        let mut csv: String = (0..16).map(|c| format!("in{c:04b}")).collect::<Vec<_>>().join(",");
        csv.push('\n');
        for row in &table {
            let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        dir.write("exports/cccx_truth_table.csv", csv.as_bytes())?;
    }
    println!("cccx_fidelity {:.6}", cccx_fidelity()?);
    println!("cccz_success_probability {:.6}", cccz_success_probability()?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn gate_numbers() {
        assert_eq!(format!("{:.6}", cccx_fidelity().unwrap()), "1.000000");
        assert_eq!(format!("{:.6}", cccz_success_probability().unwrap()), "0.111111");
    }

    #[test]
    fn hamiltonian_files() {
        let real = tmp_file("h0,h1,h2,h3\n1,0,0,0\n0,2,0,0\n0,0,3,0\n0,0,0,4\n");
        let h = read_hamiltonian(real.path()).unwrap();
        assert_eq!(h[(3, 3)], C64::new(4.0, 0.0));
        let complex = tmp_file("1,0,0,1,0,0,0,0\n0,-1,1,0,0,0,0,0\n0,0,0,0,1,0,0,0\n0,0,0,0,0,0,1,0\n");
        let h = read_hamiltonian(complex.path()).unwrap();
        assert_eq!(h[(0, 1)], C64::new(0.0, 1.0));
        let skew = tmp_file("1,5,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
        assert!(matches!(read_hamiltonian(skew.path()), Err(Error::NotHermitian(_))));
        let short = tmp_file("1,0,0,0\n0,1,0,0\n");
        assert!(read_hamiltonian(short.path()).is_err());
    }

    #[test]
    fn usage_errors_exit_two_without_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let o = out.to_str().unwrap();
        assert_eq!(run(["adeqnn", "classify", "--dataset", "moons", "--out", o]), 2);
        assert_eq!(run(["adeqnn", "classify", "--dataset", "circle", "--epochs", "0", "--out", o]), 2);
        assert_eq!(
            run(["adeqnn", "classify", "--dataset", "glass", "--data-dir", "/no/such", "--out", o]),
            2
        );
        assert_eq!(run(["adeqnn", "qgan", "--digit", "7", "--out", o]), 2);
        assert!(!out.exists());
    }

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig::Qgdm(QgdmConfig::new(Variant::Baseline, 3));
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.starts_with("{\"command\":\"qgdm\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
