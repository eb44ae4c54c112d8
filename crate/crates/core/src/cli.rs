//! Command-line front end. [`run`] returns the process exit code: 0 on
//! success, 2 on usage errors, 1 on runtime errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::expert::ExpertKind;
use crate::metrics::MetricReport;
use crate::pipeline::{export_dataset, read_dataset, read_stats, run_generation, verify_export, Manifest, Vocabularies, DATASET_FILE, STATS_FILE};
use crate::reactive::RolloutMode;
use crate::scaling::{compare_fits, emit_curve, read_points, write_curve};
use crate::scenario::{bundled_corpus, generate_synthetic_corpus, load_scenario, load_trajectory, write_scenario, CorpusConfig, Scenario, Template, TrajFrame};
use crate::vocab::{build_vocabulary, check_feasibility, default_samples, Provenance, Vocabulary};

#[derive(Debug, Parser)]
#[command(name = "scenesim", version, about = "Scenario simulation and pseudo-expert data generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic scenario corpus, one JSON file per scenario.
    GenCorpus(GenCorpusArgs),
    /// Cluster synthetic maneuvers into a perturbation vocabulary.
    BuildVocab(BuildVocabArgs),
    /// Run the perturb / simulate / expert / filter pipeline and export.
    Generate(GenerateArgs),
    /// Score one trajectory against one scenario.
    Eval(EvalArgs),
    /// Fit log-quadratic scaling curves.
    FitScaling(FitScalingArgs),
    /// Summarise an export directory.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated template names; all templates by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_template)]
    templates: Vec<Template>,
}

#[derive(Debug, Args)]
struct BuildVocabArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Directory of scenario JSON files; the bundled corpus by default.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    expert: Option<ExpertArg>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    per_round: Option<usize>,
    #[arg(long)]
    non_reactive: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Prebuilt clustered vocabulary.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Plan over [T, T+H]; ego-local plans are placed at the logged pose at T.
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Reactive)]
    mode: ModeArg,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitScalingArgs {
    /// `label=path` or `path` (label taken from the file stem); repeatable.
    #[arg(long = "points", required = true)]
    points: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Export directory written by `generate`.
    #[arg(long)]
    dir: PathBuf,
    /// Re-score every exported sample.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExpertArg {
    Planner,
    Recovery,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Reactive,
    NonReactive,
    LogReplay,
}

fn parse_template(s: &str) -> std::result::Result<Template, String> {
    Template::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
        let names: Vec<_> = Template::ALL.iter().map(|t| t.name()).collect();
        format!("unknown template {s:?}; expected one of {}", names.join(", "))
    })
}

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
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::BuildVocab(a) => build_vocab(a),
        Command::Generate(a) => generate(a),
        Command::Eval(a) => eval(a),
        Command::FitScaling(a) => fit_scaling(a),
        Command::Stats(a) => stats(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

/// Every `*.json` file in `dir`, ordered by file name.
pub fn load_corpus_dir(dir: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    paths.iter().map(load_scenario).collect()
}

/// Print a line, tolerating a closed stdout.
fn say(line: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn gen_corpus(a: GenCorpusArgs) -> Result<()> {
    let mut cfg = CorpusConfig { count: a.count, ..Default::default() };
    if !a.templates.is_empty() {
        cfg.templates = a.templates;
    }
    let corpus = generate_synthetic_corpus(&cfg, a.seed)?;
    fs::create_dir_all(&a.out)?;
    for s in &corpus {
        write_scenario(s, a.out.join(format!("{}.json", s.id)))?;
    }
    say(format!("wrote {} scenarios to {}", corpus.len(), a.out.display()));
    Ok(())
}

fn build_vocab(a: BuildVocabArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    cfg.vocab.samples = a.samples.unwrap_or(cfg.vocab.samples);
    cfg.vocab.k = a.k.unwrap_or(cfg.vocab.k);
    cfg.vocab.seed = a.seed.unwrap_or(cfg.vocab.seed);
    cfg.validate()?;
    let raw = default_samples(&cfg.vocab, a.horizon, a.dt, &cfg.sim.vehicle);
    let vocab = build_vocabulary(&raw, cfg.vocab.k, cfg.vocab.seed)?;
    vocab.save(&a.out)?;
    say(format!("wrote {} entries to {}", vocab.size(), a.out.display()));
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(e) = a.expert {
        cfg.expert = match e {
            ExpertArg::Planner => ExpertKind::Planner,
            ExpertArg::Recovery => ExpertKind::Recovery,
        };
    }
    cfg.rounds = a.rounds.unwrap_or(cfg.rounds);
    cfg.per_round = a.per_round.or(cfg.per_round);
    cfg.master_seed = a.seed.unwrap_or(cfg.master_seed);
    if a.non_reactive {
        cfg.mode = RolloutMode::Nonreactive;
    }
    cfg.validate()?;

    let corpus = match &a.corpus {
        Some(dir) => load_corpus_dir(dir)?,
        None => bundled_corpus(),
    };
    let first = corpus.first().ok_or(Error::EmptyCorpus)?;
    let (horizon, dt) = (first.t_horizon, first.dt);
    if let Some(s) = corpus.iter().find(|s| s.t_horizon != horizon || (s.dt - dt).abs() > 1e-12) {
        return Err(Error::Validation(format!("scenario {} differs in horizon or dt from {}", s.id, first.id)));
    }
    let vocabs = match &a.vocab {
        Some(path) => {
            let v = Vocabulary::load(path, Provenance::Clustered)?;
            if v.horizon() != horizon {
                return Err(Error::HorizonMismatch { expected: horizon, actual: v.horizon() });
            }
            Vocabularies::with_clustered(v, &cfg)?
        }
        None => Vocabularies::build(&cfg, horizon, dt)?,
    };

    let (samples, stats) = run_generation(&corpus, &cfg, &vocabs, a.workers)?;
    let manifest = Manifest::new(&cfg, &corpus, samples.len())?;
    let files = export_dataset(&samples, &stats, &manifest, cfg.filter.ep_min, &a.out)?;
    say(format!("exported {} samples to {}", samples.len(), files.dataset.display()));
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let scenario = load_scenario(&a.scenario)?;
    let mut plan = load_trajectory(&a.trajectory)?;
    if plan.frame == TrajFrame::EgoLocal {
        plan = plan.placed_at(&scenario.ego_log.states[scenario.perturb_frame()].pose);
    }
    let mode = match a.mode {
        ModeArg::Reactive => RolloutMode::Reactive,
        ModeArg::NonReactive => RolloutMode::Nonreactive,
        ModeArg::LogReplay => RolloutMode::LogReplayEgo,
    };
    let check = check_feasibility(&scenario, &plan, mode, 0.0, &cfg.sim, &cfg.metrics)?;
    let report = MetricReport::new(&scenario.id, &check.reward);
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(out) = &a.out {
        write_json(&report, out)?;
    }
    say(text);
    Ok(())
}

fn fit_scaling(a: FitScalingArgs) -> Result<()> {
    let mut runs = BTreeMap::new();
    for spec in &a.points {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, p)
            }
        };
        if label.is_empty() || runs.contains_key(&label) {
            return Err(Error::Validation(format!("empty or duplicate run label {label:?}")));
        }
        let pts = read_points(&path).map_err(|e| match e {
            Error::NonPositiveN { row, n } => Error::Validation(format!("{}: non-positive n={n} at row {row}", path.display())),
            e => e,
        })?;
        runs.insert(label, pts);
    }
    let report = compare_fits(&runs)?;
    fs::create_dir_all(&a.out)?;
    for r in &report.runs {
        let curve = emit_curve(&r.fit, r.n_min, r.n_max, a.samples)?;
        write_curve(&curve, a.out.join(format!("curve_{}.csv", r.label)))?;
    }
    write_json(&report, &a.out.join("report.json"))?;
    for r in &report.runs {
        say(format!(
            "{}: a={:.6} b={:.6} c={:.6} residual_std={:.6} trend={:?}",
            r.label, r.fit.a, r.fit.b, r.fit.c, r.fit.residual_std, r.trend
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsSummary {
    rounds: usize,
    attempted: usize,
    accepted: usize,
    yield_rate: f64,
    rejects: BTreeMap<&'static str, usize>,
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<Vec<String>>,
}

fn stats(a: StatsArgs) -> Result<()> {
    let rows = read_stats(a.dir.join(STATS_FILE))?;
    let records = read_dataset(a.dir.join(DATASET_FILE))?;
    let attempted: usize = rows.iter().map(|r| r.attempted).sum();
    let accepted: usize = rows.iter().map(|r| r.accepted).sum();
    let rejects = BTreeMap::from([
        ("collision", rows.iter().map(|r| r.reject_collision).sum()),
        ("offroad", rows.iter().map(|r| r.reject_offroad).sum()),
        ("reward", rows.iter().map(|r| r.reject_reward).sum()),
        ("kinematics", rows.iter().map(|r| r.reject_kinematics).sum()),
    ]);
    let violations = if a.verify {
        let cfg = load_config(a.config.as_deref())?;
        let corpus = match &a.corpus {
            Some(dir) => load_corpus_dir(dir)?,
            None => bundled_corpus(),
        };
        Some(verify_export(&records, &corpus, &cfg)?.violations)
    } else {
        None
    };
    let summary = StatsSummary {
        rounds: rows.len(),
        attempted,
        accepted,
        yield_rate: if attempted == 0 { 0.0 } else { accepted as f64 / attempted as f64 },
        rejects,
        samples: records.len(),
        violations,
    };
    say(serde_json::to_string_pretty(&summary)?);
    match &summary.violations {
        Some(v) if !v.is_empty() => Err(Error::Validation(format!("{} exported samples failed verification", v.len()))),
        _ => Ok(()),
    }
}
