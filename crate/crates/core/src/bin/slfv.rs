use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slfv::checks::acceptance_suite;
use slfv::config::{parse_config, SimConfig};
use slfv::events::{Event, EventStream};
use slfv::forward::Schedule;
use slfv::io::write_file;
use slfv::recipes::{recipe_config, run_recipe, RECIPES};

#[derive(Parser)]
#[command(name = "slfv", about = "Two-type SLFV simulations, lineage duals and their checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named recipe (fig1, fig2, fig3, duality, bernoulli, coal-scaling, sigma2).
    Run {
        recipe: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the full acceptance suite.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Write the event sequence of a config file as CSV, one file per replica.
    EventLog {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn apply(&self, cfg: &SimConfig) -> slfv::Result<SimConfig> {
        let mut over = self.overrides.clone();
        if let Some(s) = self.seed {
            over.push(format!("seed={s}"));
        }
        if let Some(r) = self.replicas {
            over.push(format!("replicas={r}"));
        }
        let mut cfg = cfg.with_overrides(&over)?;
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        Ok(cfg)
    }
}

fn event_log(cfg: &SimConfig) -> slfv::Result<()> {
    let stream_cfg = cfg.stream()?.with_seed(cfg.seed);
    for rep in 0..cfg.replicas {
        let mut stream = EventStream::for_replica(&stream_cfg, rep)?;
        let mut csv = format!("{}\n", Event::csv_header(cfg.dim));
        let mut push = |ev: &Event| {
            let _ = writeln!(csv, "{}", ev.csv_record());
        };
        match &cfg.snapshots {
            Schedule::Events(ks) => {
                let total = ks.iter().copied().max().unwrap_or(0);
                for _ in 0..total {
                    push(&stream.next_event());
                }
            }
            Schedule::Times(ts) => {
                let end = ts.iter().copied().fold(0.0, f64::max);
                loop {
                    let ev = stream.next_event();
                    if ev.time > end {
                        break;
                    }
                    push(&ev);
                }
            }
        }
        let e = write_file(&cfg.out, &format!("events_{rep}.csv"), csv.as_bytes())?;
        println!("{} sha256={}", e.path.display(), e.sha256);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { recipe, common } => recipe_config(&recipe)
            .and_then(|cfg| common.apply(&cfg))
            .and_then(|cfg| run_recipe(&recipe, &cfg))
            .map(|res| {
                for c in &res.checks {
                    println!("{c}");
                }
                println!(
                    "{} files in {:.1}s, manifest {}",
                    res.files.len(),
                    res.duration.as_secs_f64(),
                    res.files.last().map_or(String::new(), |f| f.path.display().to_string())
                );
                res.passed()
            }),
        Command::Check { common } => {
            let scratch = common.out.clone().unwrap_or_else(|| PathBuf::from("out/check"));
            acceptance_suite(common.seed.unwrap_or(1), &scratch, |c| println!("{c}"))
                .map(|all| all.iter().all(|c| c.passed))
        }
        Command::EventLog { config, common } => fs::read_to_string(&config)
            .map_err(slfv::Error::from)
            .and_then(|text| parse_config(&text))
            .and_then(|cfg| common.apply(&cfg))
            .and_then(|cfg| event_log(&cfg))
            .map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, slfv::Error::InvalidArgument(_)) {
                eprintln!("recipes: {}", RECIPES.join(", "));
            }
            ExitCode::from(2)
        }
    }
}
