//! `anchorpath` command-line harness.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anchorpath::scenario::{
    generate, metrics_row, run, ExplicitGraph, GenParams, Meta, Outcome, Scenario, METRICS_HEADER,
};
use anchorpath::suites::{anchoriser_rows, preset_rows, reserver_rows, Row};
use anchorpath::{Anchoriser, Preset};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anchorpath", version, about = "Anchored AGV timetabling: generate scenarios, run them, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded grid scenario.
    Generate {
        #[command(flatten)]
        params: GridArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// Directory for scenario.json; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Anchor, plan and audit a scenario.
    Run {
        /// Scenario JSON; a grid scenario is generated from the flags when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        params: GridArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// Directory for timetable.json, metrics.csv, reservations.csv, gaps.txt and graph.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and print metrics CSV.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Grid size; defaults to 20 for anchorisers and 40 for reservers.
        #[arg(long)]
        grid: Option<usize>,
        /// AGV counts for the anchorisers suite.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30,40,50")]
        counts: Vec<usize>,
        /// Grid sizes for the presets suite.
        #[arg(long, value_delimiter = ',', default_value = "8,12,16,20,30")]
        sizes: Vec<usize>,
        /// Subdivision levels for the reservers suite.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
        subdivisions: Vec<u64>,
        #[arg(long, default_value_t = 4)]
        agvs: usize,
        #[arg(long, default_value_t = 40)]
        demands: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Runs per cell; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Directory for <suite>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Anchorisers,
    Presets,
    Reservers,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 10)]
    grid: usize,
    #[arg(long, default_value_t = 5000)]
    weight: u64,
    #[arg(long, default_value_t = 4)]
    agvs: usize,
    #[arg(long, default_value_t = 10)]
    demands: usize,
    #[arg(long = "subdivide", default_value_t = 1)]
    subdivisions: u64,
    #[arg(long, default_value_t = 1)]
    link_radius: u32,
}

/// Planning settings; for a scenario file they override the stored values.
#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    anchoriser: Option<Anchoriser>,
    #[arg(long)]
    stop_pickup: Option<u64>,
    #[arg(long)]
    stop_dropoff: Option<u64>,
}

impl PlanArgs {
    fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(p) = self.preset {
            s.preset = p;
        }
        if let Some(a) = self.anchoriser {
            s.anchoriser = a;
        }
        if let Some(t) = self.stop_pickup {
            s.stop_pickup = t;
        }
        if let Some(t) = self.stop_dropoff {
            s.stop_dropoff = t;
        }
    }
}

fn generated(grid: &GridArgs, plan: &PlanArgs) -> Result<Scenario> {
    let p = GenParams {
        grid: grid.grid,
        weight: grid.weight,
        agvs: grid.agvs,
        demands: grid.demands,
        seed: plan.seed.unwrap_or(0),
        subdivisions: grid.subdivisions,
        link_radius: grid.link_radius,
        ..GenParams::default()
    };
    let mut s = generate(&p).context("generating scenario")?;
    plan.apply(&mut s);
    Ok(s)
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn gap_dump(out: &Outcome) -> String {
    let mut text = String::new();
    for (r, tree) in out.timetable.time_graph.trees().filter(|(_, t)| !t.is_empty()) {
        let _ = writeln!(text, "# resource {r}");
        text.push_str(&tree.dump());
    }
    text
}

fn run_command(scenario: Option<&Path>, grid: &GridArgs, plan: &PlanArgs, out: Option<&Path>) -> Result<()> {
    let s = match scenario {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut s = Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            plan.apply(&mut s);
            s
        }
        None => generated(grid, plan)?,
    };
    let outcome = run(&s).context("running scenario")?;
    let row = metrics_row("run", s.seed, s.preset.name(), outcome.runtime_ms, &outcome.metrics);
    emit(&format!("{METRICS_HEADER}\n{row}\n"))?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(dir, "timetable.json", &outcome.timetable_json())?;
        write(dir, "metrics.csv", &format!("{METRICS_HEADER}\n{row}\n"))?;
        write(dir, "reservations.csv", &outcome.timetable.time_graph.to_csv())?;
        write(dir, "gaps.txt", &gap_dump(&outcome))?;
        // Already subdivided, so it reloads as the graph the timetable refers to.
        let meta = Meta { subdivisions: 1, ..s.graph.meta() };
        let graph = ExplicitGraph::from_graph(&outcome.graph, meta);
        write(dir, "graph.json", &serde_json::to_string_pretty(&graph)?)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { params, plan, out } => {
            let json = generated(&params, &plan)?.to_json();
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    write(&dir, "scenario.json", &json)?;
                }
                None => emit(&format!("{json}\n"))?,
            }
            Ok(())
        }
        Command::Run { scenario, params, plan, out } => {
            run_command(scenario.as_deref(), &params, &plan, out.as_deref())
        }
        Command::Bench { suite, grid, counts, sizes, subdivisions, agvs, demands, seed, repeats, out } => {
            let (name, rows): (&str, Vec<Row>) = match suite {
                Suite::Anchorisers => ("anchorisers", anchoriser_rows(grid.unwrap_or(20), &counts, seed, repeats)?),
                Suite::Presets => ("presets", preset_rows(&sizes, agvs, demands, seed, repeats)?),
                Suite::Reservers => {
                    if subdivisions.contains(&0) {
                        bail!("subdivision levels must be positive");
                    }
                    ("reservers", reserver_rows(grid.unwrap_or(40), &subdivisions, repeats.max(20))?)
                }
            };
            let mut csv = format!("{METRICS_HEADER}\n");
            for r in &rows {
                let _ = writeln!(csv, "{r}");
            }
            emit(&csv)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write(&dir, &format!("{name}.csv"), &csv)?;
            }
            Ok(())
        }
    }
}
