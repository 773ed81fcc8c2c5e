use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use damage_ident::objectives::{ReferenceData, Stage};
use damage_ident::optimizer::write_trace_csv;
use damage_ident::pipeline::{
    calibrate, default_plan, fixed_params, generate_reference, overlay, overlay_csv, precision_trend,
    reliability_study, report_text, run_stage, Calibration, RunConfig, StageResult, Stamped, StudyRow,
};
use damage_ident::simulators::{run_bending, run_tensile, BarGeometry};
use damage_ident::{Error, Result};

#[derive(Parser)]
#[command(name = "damage-ident", version, about = "Staged identification of damage model parameters")]
struct Cli {
    /// Flat TOML run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference curve and features.
    Reference {
        #[command(subcommand)]
        action: ReferenceAction,
    },
    /// Forward simulation with the configured parameters.
    Simulate {
        #[arg(value_enum)]
        model: Model,
        /// Final prescribed displacement in mm.
        #[arg(long, default_value_t = 0.2)]
        u_max: f64,
    },
    /// Objective weights.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// Runs one identification stage, or all three in order.
    Identify {
        #[arg(long, default_value = "all")]
        stage: String,
    },
    /// Repeated seeded stage runs and their statistics.
    Reliability {
        #[arg(long)]
        runs: Option<usize>,
        /// Single stopping precision; defaults to the standard plan.
        #[arg(long)]
        precision: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Restricts the study to one stage (1, 2 or 3).
        #[arg(long)]
        stage: Option<usize>,
        /// Adds the elastic stage at the accuracy precision.
        #[arg(long)]
        accuracy: bool,
    },
}

#[derive(Subcommand)]
enum ReferenceAction {
    Generate,
}

#[derive(Subcommand)]
enum WeightsAction {
    Calibrate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Tensile,
    Bending,
}

fn reference_path(out: &Path) -> PathBuf {
    out.join("reference.json")
}

fn weights_path(out: &Path) -> PathBuf {
    out.join("weights.json")
}

fn stage_path(out: &Path, stage: Stage) -> PathBuf {
    out.join(format!("stage{}.json", stage.number()))
}

fn missing(path: &Path, hint: &str) -> Error {
    Error::Stage(format!("{} not found; run `{hint}` first", path.display()))
}

fn load_reference(cfg: &RunConfig) -> Result<Arc<ReferenceData>> {
    let path = reference_path(&cfg.out_dir);
    if !path.exists() {
        return Err(missing(&path, "reference generate"));
    }
    Ok(Arc::new(Stamped::<ReferenceData>::load_for(&path, cfg)?.data))
}

fn load_weights(cfg: &RunConfig) -> Result<Calibration> {
    let path = weights_path(&cfg.out_dir);
    if !path.exists() {
        return Err(missing(&path, "weights calibrate"));
    }
    Ok(Stamped::<Calibration>::load_for(&path, cfg)?.data)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn identify(cfg: &RunConfig, which: &str) -> Result<()> {
    let reference = load_reference(cfg)?;
    let weights = load_weights(cfg)?.weights;
    let stages: Vec<Stage> = match which {
        "all" => Stage::ALL.to_vec(),
        n => vec![Stage::from_number(n.parse().map_err(|_| Error::Config(format!("bad stage {n:?}")))?)?],
    };
    let out = &cfg.out_dir;
    let mut earlier: Vec<StageResult> = Vec::new();
    for stage in stages {
        for prior in Stage::ALL.iter().filter(|s| s.number() < stage.number()) {
            if earlier.iter().all(|r| r.stage != *prior) {
                let path = stage_path(out, *prior);
                if !path.exists() {
                    return Err(missing(&path, &format!("identify --stage {}", prior.number())));
                }
                earlier.push(Stamped::<StageResult>::load_for(&path, cfg)?.data);
            }
        }
        let fixed = fixed_params(stage, cfg, &earlier)?;
        let (result, trace) = run_stage(stage, cfg, reference.clone(), &weights, &fixed, cfg.seed, cfg.precision(stage))?;
        println!(
            "stage {} ({}): {} = [{:.6e}, {:.6e}]  F = {:.3e}  evaluations {}{}",
            stage.number(),
            stage.name(),
            stage.params().map(|p| p.name()).join(", "),
            result.pair[0],
            result.pair[1],
            result.value,
            result.evaluations,
            if result.success { "" } else { "  (precision not reached)" }
        );
        Stamped::new(cfg, cfg.seed, result.clone()).save(&stage_path(out, stage))?;
        let mut csv = Vec::new();
        write_trace_csv(&mut csv, &trace)?;
        write(&out.join(format!("trace_stage{}.csv", stage.number())), &String::from_utf8_lossy(&csv))?;
        earlier.retain(|r| r.stage != stage);
        earlier.push(result.clone());
        if stage == Stage::Softening {
            let rows = overlay(&reference, &result.params)?;
            write(&out.join("overlay.csv"), &overlay_csv(&rows))?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn reliability(
    cfg: &RunConfig,
    runs: Option<usize>,
    precision: Option<f64>,
    workers: Option<usize>,
    stage: Option<usize>,
    accuracy: bool,
) -> Result<()> {
    let reference = load_reference(cfg)?;
    let weights = load_weights(cfg)?.weights;
    let only = stage.map(Stage::from_number).transpose()?;
    let mut plan: Vec<StudyRow> = match precision {
        Some(p) => only.map_or(Stage::ALL.to_vec(), |s| vec![s]).into_iter().map(|s| (s, p)).collect(),
        None => default_plan()
            .into_iter()
            .filter(|(s, _)| only.map_or(true, |o| o == *s))
            .collect(),
    };
    if accuracy {
        plan.push((Stage::Elastic, cfg.accuracy_precision_elastic));
    }
    let report = reliability_study(
        cfg,
        reference,
        &weights,
        &plan,
        runs.unwrap_or(cfg.runs),
        workers.unwrap_or(cfg.workers),
    )?;
    let mut text = report_text(&report);
    let trend = precision_trend(&report);
    if !trend.is_empty() {
        text.push_str("\nprecision trend\n");
        for t in &trend {
            text.push_str(&format!(
                "{:<10} {:.0e} -> {:.0e}  {}\n",
                t.parameter,
                t.coarse,
                t.fine,
                if t.holds { "error not increased" } else { "error increased or undefined" }
            ));
        }
    }
    print!("{text}");
    write(&cfg.out_dir.join("reliability.txt"), &text)?;
    Stamped::new(cfg, cfg.seed, report).save(&cfg.out_dir.join("reliability.json"))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    match cli.command {
        Command::Reference { action: ReferenceAction::Generate } => {
            let reference = generate_reference(&cfg)?;
            write(&out.join("reference_curve.csv"), &reference.curve.to_csv())?;
            Stamped::new(&cfg, cfg.seed, reference).save(&reference_path(&out))?;
        }
        Command::Simulate { model, u_max } => {
            let control = cfg.control().with_u_max(u_max);
            control.validate()?;
            let params = cfg.reference_params();
            let (name, curve) = match model {
                Model::Tensile => ("tensile", run_tensile(&params, &BarGeometry::default(), &control)?),
                Model::Bending => ("bending", run_bending(&params, &cfg.geometry(), &control)?),
            };
            write(&out.join(format!("{name}.csv")), &curve.to_csv())?;
        }
        Command::Weights { action: WeightsAction::Calibrate } => {
            let reference = load_reference(&cfg)?;
            let cal = calibrate(&cfg, reference)?;
            for stage in Stage::ALL {
                let w = cal.weights.pair(stage);
                println!("stage {}: weights [{:.6e}, {:.6e}]", stage.number(), w[0], w[1]);
            }
            Stamped::new(&cfg, cfg.seed, cal).save(&weights_path(&out))?;
        }
        Command::Identify { stage } => identify(&cfg, &stage)?,
        Command::Reliability {
            runs,
            precision,
            workers,
            stage,
            accuracy,
        } => reliability(&cfg, runs, precision, workers, stage, accuracy)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
