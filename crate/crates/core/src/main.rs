use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pisn::harness::export::{parse_sweep, sweep};
use pisn::harness::train::{eval, extract};
use pisn::harness::{
    demo_extrapolation, train, write_outputs, Checkpoint, DemoConfig, DemoFunction, HarnessError, Model, TrainConfig,
};
use pisn::symnet::render_named;

#[derive(Parser)]
#[command(name = "pisn", version, about = "Physics-informed symbolic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the experiment described by a TOML config.
    Train {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        task_param: Option<f64>,
    },
    /// Error report of a checkpoint on a problem.
    Eval {
        checkpoint: PathBuf,
        problem: String,
        #[arg(long)]
        task_param: Option<f64>,
    },
    /// Print the closed-form expressions stored in a checkpoint.
    ExtractExpr {
        checkpoint: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        task_param: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Fit an MLP to linear, exp, log or sin and measure extrapolation.
    DemoExtrapolation {
        function: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value = "extrapolation.csv")]
        output: PathBuf,
    },
    /// Train once per value of a config key (`key=lo:hi:n`, `key=a,b,c`;
    /// a bare range sweeps task_param).
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
    },
}

fn load_config(path: &PathBuf) -> Result<TrainConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    TrainConfig::from_toml(&text)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train { config, output_dir, epochs, seed, task_param } => {
            let mut c = load_config(&config)?;
            if let Some(d) = output_dir {
                c.output_dir = d;
            }
            if let Some(e) = epochs {
                c.schedule = c.schedule.rescaled(c.epochs, e);
                c.epochs = e;
            }
            if let Some(s) = seed {
                c.seed = s;
            }
            if task_param.is_some() {
                c.task_param = task_param;
            }
            c.validate()?;
            let outcome = match train(&c) {
                Ok(o) => o,
                Err(HarnessError::Diverged { stage, epoch, detail, last_finite }) => {
                    if !last_finite.is_empty() {
                        let (_, layout) = Model::build(&c)?;
                        std::fs::create_dir_all(&c.output_dir).map_err(|e| HarnessError::io(&c.output_dir, e))?;
                        let path = c.output_dir.join("checkpoint.bin");
                        Checkpoint::new(c.clone(), layout, last_finite.clone()).write(&path)?;
                        eprintln!("last finite weights written to {}", path.display());
                    }
                    return Err(HarnessError::Diverged { stage, epoch, detail, last_finite });
                }
                Err(e) => return Err(e),
            };
            for path in write_outputs(&outcome, &c.output_dir)? {
                println!("wrote {}", path.display());
            }
            for r in &outcome.reports {
                for row in r.csv_rows() {
                    println!("{row}");
                }
            }
        }
        Command::Eval { checkpoint, problem, task_param } => {
            let ck = Checkpoint::read(&checkpoint)?;
            print!("{}", eval(&ck, &problem, task_param)?.to_csv());
        }
        Command::ExtractExpr { checkpoint, threshold, task_param, json } => {
            let ck = Checkpoint::read(&checkpoint)?;
            let exprs = extract(&ck, task_param, threshold.unwrap_or(ck.config.threshold))?;
            if json {
                let v: Vec<_> = exprs.iter().map(|(o, e)| serde_json::json!({ "output": o, "expr": e })).collect();
                println!("{}", serde_json::to_string_pretty(&v).expect("expressions serialize"));
            } else {
                for (o, e) in &exprs {
                    println!("{}\n", render_named(e, o, ck.config.precision));
                }
            }
        }
        Command::DemoExtrapolation { function, epochs, output } => {
            let f = DemoFunction::parse(&function)
                .ok_or_else(|| HarnessError::Config(format!("unknown function {function:?} (linear, exp, log, sin)")))?;
            let mut dc = DemoConfig::default();
            if let Some(e) = epochs {
                dc.schedule = dc.schedule.rescaled(dc.epochs, e);
                dc.epochs = e;
            }
            let r = demo_extrapolation(f, &dc)?;
            std::fs::write(&output, r.to_csv()).map_err(|e| HarnessError::io(&output, e))?;
            println!("function,rmse_inside,rmse_outside");
            println!("{},{:e},{:e}", f.name(), r.rmse_inside, r.rmse_outside);
        }
        Command::Sweep { config, param } => {
            let c = load_config(&config)?;
            let (key, values) = parse_sweep(&param)?;
            for run in sweep(&c, key, &values)? {
                let r = run.outcome.final_report();
                println!("{}={}: mean {:e}, max {:e} ({})", key.name(), run.value, r.mean(), r.max(), run.dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
