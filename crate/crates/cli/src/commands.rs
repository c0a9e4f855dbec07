use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use onsager_core::criteria::{self, check_all, classify_region, parse_reciprocal, region_grid, write_regions_csv};
use onsager_core::defaults::defaults;
use onsager_core::dyadic::{BesovSpec, ShellIndex};
use onsager_core::field::io::{atomic_write, write_snapshot, TrajectoryDir, TrajectoryWriter};
use onsager_core::flux::FluxReport;
use onsager_core::heuristics::{cascade_simulate, CascadeParams};
use onsager_core::solver::{simulate_with, InitialCondition, SolverConfig};
use onsager_core::timeseries::membership;
use onsager_core::{Error, Grid, NormSeries, Result, SnapshotSource, TimeSpaceSpec};

use crate::manifest::{beside, Recorder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    TaylorGreen,
    Shear,
    Random,
    Intermittent,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct FieldArgs {
    /// Grid points per dimension (even, >= 8).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Seed for the random and intermittent generators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Amplitude of the shear mode (default sqrt 2) or random field (default 1).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Shell of the intermittent field.
    #[arg(long, default_value_t = 4)]
    pub q: ShellIndex,
    /// Intermittency dimension of the intermittent field.
    #[arg(long, default_value_t = 2.0)]
    pub d: f64,
}

impl FieldArgs {
    fn initial(&self, generator: Generator) -> InitialCondition {
        match generator {
            Generator::TaylorGreen => InitialCondition::TaylorGreen,
            Generator::Shear => InitialCondition::Shear { amplitude: self.amplitude.unwrap_or(2f64.sqrt()) },
            Generator::Random => InitialCondition::Random { seed: self.seed, amplitude: self.amplitude.unwrap_or(1.0) },
            Generator::Intermittent => InitialCondition::Intermittent { q: self.q, d: self.d, seed: self.seed },
        }
    }

    fn seeds(&self, generator: Generator) -> Vec<u64> {
        match generator {
            Generator::Random | Generator::Intermittent => vec![self.seed],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Generator::TaylorGreen)]
    pub init: Generator,
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 0.1)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Steps between stored snapshots.
    #[arg(long, default_value_t = defaults().reference_run.stride)]
    pub stride: usize,
    /// Output trajectory directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let rec = Recorder::start("simulate");
    let config = SolverConfig {
        n: a.field.n,
        nu: a.nu,
        dt: a.dt,
        t_end: a.t_end,
        stride: a.stride,
        init: a.field.initial(a.init),
    };
    config.steps()?;
    let mut writer = TrajectoryWriter::create(&a.out, config.grid()?, config.nu)?;
    simulate_with(&config, |s| writer.push(s.time, &s.field))?;
    let manifest = writer.finish()?;
    log::info!("wrote {} snapshots to {}", manifest.snapshots.len(), a.out.display());
    rec.finish(&a.out.join("run.json"), &(&a, &config), Vec::new(), vec![a.out.clone()], a.field.seeds(a.init))
}

#[derive(Debug, Args, Serialize)]
pub struct FluxArgs {
    /// Trajectory directory.
    #[arg(long)]
    pub traj: PathBuf,
    /// Per-(t, q) CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-q flux time-integral CSV (default: `<out stem>_summary.csv`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, default_value_t = -1, allow_negative_numbers = true)]
    pub q_min: ShellIndex,
    /// Largest shell (default: the grid's top shell).
    #[arg(long)]
    pub q_max: Option<ShellIndex>,
}

#[derive(Serialize)]
struct FluxSummary {
    snapshots: usize,
    shells: Vec<ShellIndex>,
    max_residual: f64,
    max_relative_residual: f64,
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_summary.csv"))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)
        .map_err(std::io::Error::from)
        .and_then(|()| writeln!(stdout))
        .map_err(|e| Error::Io { path: PathBuf::from("<stdout>"), source: e })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

pub fn flux(a: FluxArgs) -> Result<()> {
    let rec = Recorder::start("flux");
    let source = TrajectoryDir::open(&a.traj)?;
    let q_max = a.q_max.unwrap_or_else(|| source.grid().top_shell());
    if q_max < a.q_min {
        return Err(Error::Precondition(format!("q-max {q_max} is below q-min {}", a.q_min)));
    }
    let qs: Vec<ShellIndex> = (a.q_min..=q_max).collect();
    let report = FluxReport::compute(&source, &qs)?;
    let summary = a.summary.clone().unwrap_or_else(|| summary_path(&a.out));
    atomic_write(&a.out, |w| report.write_rows_csv(w))?;
    atomic_write(&summary, |w| report.write_summary_csv(w))?;
    print_json(&FluxSummary {
        snapshots: source.len(),
        shells: qs,
        max_residual: report.rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        max_relative_residual: report.rows.iter().map(|r| r.relative_residual).fold(0.0, f64::max),
    })?;
    rec.finish(&beside(&a.out), &a, vec![a.traj.clone()], vec![a.out.clone(), summary], Vec::new())
}

fn parse_exponent(s: &str) -> std::result::Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct NormsArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Besov regularity s.
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    /// Spatial integrability p (`inf` allowed).
    #[arg(long, value_parser = parse_exponent)]
    pub p: f64,
    /// Shell summability (`inf` allowed).
    #[arg(long, value_parser = parse_exponent, default_value = "inf")]
    pub q: f64,
    /// Time exponent beta (`inf` allowed).
    #[arg(long, value_parser = parse_exponent, default_value = "inf")]
    pub beta: f64,
    /// Use the weak (Lorentz) time quasinorm.
    #[arg(long)]
    pub weak: bool,
    /// Norm series CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct NormsSummary {
    spec: TimeSpaceSpec,
    value: f64,
    finite_at_resolution: bool,
}

pub fn norms(a: NormsArgs) -> Result<()> {
    let rec = Recorder::start("norms");
    let source = TrajectoryDir::open(&a.traj)?;
    let spec = TimeSpaceSpec::new(a.beta, a.weak, BesovSpec::new(a.s, a.p, a.q)?)?;
    let m = membership(&source, &spec)?;
    atomic_write(&a.out, |w| m.series.write_csv(w).map_err(|e| std::io::Error::other(e.to_string())))?;
    print_json(&NormsSummary { spec, value: m.value, finite_at_resolution: m.finite_at_resolution })?;
    rec.finish(&beside(&a.out), &a, vec![a.traj.clone()], vec![a.out.clone()], Vec::new())
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Trajectory directory; without it only the parameter hypotheses are checked.
    #[arg(long)]
    pub traj: Option<PathBuf>,
    /// Time exponent beta (integer, fraction `a/b`, decimal, or `inf`).
    #[arg(long)]
    pub beta: String,
    /// Spatial exponent p (integer, fraction `a/b`, decimal, or `inf`).
    #[arg(long)]
    pub p: String,
    /// Verdict JSON (default: stdout only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Classification {
    region: criteria::RegionPoint,
    verdicts: Vec<criteria::CriterionVerdict>,
}

pub fn classify(a: ClassifyArgs) -> Result<()> {
    let rec = Recorder::start("classify");
    let inv_beta = parse_reciprocal(&a.beta)?;
    let inv_p = parse_reciprocal(&a.p)?;
    let source = a.traj.as_deref().map(TrajectoryDir::open).transpose()?;
    let verdicts = check_all(source.as_ref().map(|s| s as &dyn SnapshotSource), inv_beta, inv_p)?;
    let out = Classification { region: classify_region(inv_beta, inv_p), verdicts };
    print_json(&out)?;
    if let Some(path) = &a.out {
        write_json(path, &out)?;
        rec.finish(&beside(path), &a, a.traj.iter().cloned().collect(), vec![path.clone()], Vec::new())?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct RegionsArgs {
    /// Intervals per axis over [0, 5/4].
    #[arg(long, default_value_t = 200)]
    pub grid: u32,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn regions(a: RegionsArgs) -> Result<()> {
    let rec = Recorder::start("regions");
    let points = region_grid(a.grid)?;
    atomic_write(&a.out, |w| write_regions_csv(&points, w))?;
    rec.finish(&beside(&a.out), &a, Vec::new(), vec![a.out.clone()], Vec::new())
}

#[derive(Debug, Args, Serialize)]
pub struct CascadeArgs {
    /// Intermittency dimension in [0, 3).
    #[arg(long)]
    pub d: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_exponent)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub energy: f64,
    #[arg(long, default_value_t = 0)]
    pub start_shell: i32,
    #[arg(long, default_value_t = 40)]
    pub shells: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cascade(a: CascadeArgs) -> Result<()> {
    let rec = Recorder::start("cascade");
    let run = cascade_simulate(CascadeParams {
        d: a.d,
        energy: a.energy,
        start_shell: a.start_shell,
        shells: a.shells,
        alpha: a.alpha,
        p: a.p,
    })?;
    atomic_write(&a.out, |w| run.write_csv(w))?;
    #[derive(Serialize)]
    struct Summary {
        blowup_time: f64,
        enstrophy_diverges: bool,
    }
    print_json(&Summary { blowup_time: run.blowup_time, enstrophy_diverges: run.enstrophy_diverges })?;
    rec.finish(&beside(&a.out), &a, Vec::new(), vec![a.out.clone()], Vec::new())
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub generator: Generator,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Time stamp stored in the header.
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
    /// Output snapshot file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let rec = Recorder::start("synth");
    let field = a.field.initial(a.generator).build(Grid::new(a.field.n)?)?;
    write_snapshot(&a.out, &field, a.time, None)?;
    rec.finish(&beside(&a.out), &a, Vec::new(), vec![a.out.clone()], a.field.seeds(a.generator))
}

#[derive(Debug, Args, Serialize)]
pub struct CheckType1Args {
    /// Norm series CSV with header `t,value`.
    #[arg(long)]
    pub series: PathBuf,
    /// Spatial exponent p > 4 (integer, fraction, decimal, or `inf`).
    #[arg(long)]
    pub p: String,
    /// Blowup time T, later than every sample.
    #[arg(long = "t-blowup")]
    pub t_blowup: f64,
    #[arg(long, default_value_t = defaults().type1.threshold)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn check_type1(a: CheckType1Args) -> Result<()> {
    let rec = Recorder::start("check-type1");
    let inv_p = parse_reciprocal(&a.p)?;
    let file = fs::File::open(&a.series).map_err(|e| Error::Io { path: a.series.clone(), source: e })?;
    let series = NormSeries::read_csv(file)?;
    #[derive(Serialize)]
    struct Verdict {
        derivation: criteria::Type1Derivation,
        fit: criteria::Type1Fit,
    }
    let out = Verdict {
        derivation: criteria::type1_derive(inv_p)?,
        fit: criteria::check_type1_rate(&series, a.t_blowup, inv_p, a.threshold)?,
    };
    print_json(&out)?;
    if let Some(path) = &a.out {
        write_json(path, &out)?;
        rec.finish(&beside(path), &a, vec![a.series.clone()], vec![path.clone()], Vec::new())?;
    }
    Ok(())
}
