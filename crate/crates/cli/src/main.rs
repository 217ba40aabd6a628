use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gcgsa::experiment::{
    available_plots, emit_plot_data, figure_ids, load_preset, oracle_check, preset_for_figure, preset_names,
    run_scenario, OracleConfig, ResultSet, Scenario,
};
use gcgsa::gsa::GsaParams;
use gcgsa::net::{Deployment, NodeParams};

/// Two-level gradient + GSA clustering simulator.
#[derive(Debug, Parser)]
#[command(name = "gcgsa", version)]
struct Cli {
    /// Run only this seed instead of the scenario's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for summaries, per-round CSVs and plot data.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Pinned deployment JSON used for every run.
        #[arg(long)]
        deployment: Option<PathBuf>,
    },
    /// Run a named preset.
    Preset {
        /// Preset name; omit with --list.
        name: Option<String>,
        /// Directory whose `<name>.json` files replace the built-in presets.
        #[arg(long)]
        preset_dir: Option<PathBuf>,
        /// Print the preset names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Produce the CSV behind one figure.
    PlotData {
        /// Figure id; omit with --list.
        figure: Option<String>,
        /// Scenario file to run instead of the figure's preset.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        preset_dir: Option<PathBuf>,
        /// Print the figure ids and exit.
        #[arg(long)]
        list: bool,
    },
    /// Compare GSA against brute force on small random instances.
    Oracle {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 6)]
        max_heads: usize,
        #[arg(long, default_value_t = 4)]
        max_gateways: usize,
        /// Relative gap counted as a match.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn jobs(cli: &Cli) -> usize {
    cli.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn with_seed(mut s: Scenario, seed: Option<u64>) -> Scenario {
    if let Some(seed) = seed {
        s.seeds = vec![seed];
    }
    s
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { scenario, deployment } => {
            let mut s = with_seed(read_scenario(scenario)?, cli.seed);
            if let Some(path) = deployment {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                s.deployment = Some(Deployment::from_json(&text, &NodeParams::default()).with_context(|| format!("parsing {}", path.display()))?);
            }
            run_and_write(cli, &s)
        }
        Command::Preset { name, preset_dir, list } => {
            if *list {
                preset_names().iter().for_each(|n| println!("{n}"));
                return Ok(());
            }
            let Some(name) = name else { bail!("a preset name is required (see --list)") };
            let s = with_seed(load_preset(name, preset_dir.as_deref())?, cli.seed);
            run_and_write(cli, &s)
        }
        Command::PlotData {
            figure,
            scenario,
            preset_dir,
            list,
        } => {
            if *list {
                figure_ids().iter().for_each(|f| println!("{f}"));
                return Ok(());
            }
            let Some(figure) = figure else { bail!("a figure id is required (see --list)") };
            let s = match scenario {
                Some(path) => read_scenario(path)?,
                None => {
                    let preset = preset_for_figure(figure).with_context(|| format!("unknown figure `{figure}`"))?;
                    load_preset(preset, preset_dir.as_deref())?
                }
            };
            let rs = run_scenario(&with_seed(s, cli.seed), jobs(cli))?;
            report_infeasible(&rs);
            let csv = emit_plot_data(&rs, figure)?;
            fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join(format!("{figure}.csv"));
            fs::write(&path, &csv)?;
            print!("{csv}");
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Oracle {
            instances,
            max_heads,
            max_gateways,
            tolerance,
        } => {
            if *max_heads == 0 || *max_gateways == 0 {
                bail!("--max-heads and --max-gateways must be at least 1");
            }
            let cfg = OracleConfig {
                instances: *instances,
                max_heads: *max_heads,
                max_gateways: *max_gateways,
                seed: cli.seed.unwrap_or(1),
                ..Default::default()
            };
            let rows = oracle_check(&cfg, &GsaParams::default())?;
            fs::create_dir_all(&cli.out_dir)?;
            let path = cli.out_dir.join("oracle.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            let hits = rows.iter().filter(|r| r.relative_gap <= *tolerance).count();
            println!(
                "{hits}/{} comparisons within {:.1}% of the optimum ({})",
                rows.len(),
                tolerance * 100.0,
                path.display()
            );
            Ok(())
        }
    }
}

fn report_infeasible(rs: &ResultSet) {
    for i in &rs.infeasible {
        eprintln!("skipped n={} seed {}: {}", i.n_sensors, i.seed, i.reason);
    }
}

fn run_and_write(cli: &Cli, s: &Scenario) -> Result<()> {
    eprintln!("{}: {} runs on {} threads", s.name, s.run_count(), jobs(cli));
    let rs = run_scenario(s, jobs(cli))?;
    report_infeasible(&rs);
    rs.write(&cli.out_dir)?;
    let plots = available_plots(&rs);
    if !plots.is_empty() {
        let dir = cli.out_dir.join("plots");
        fs::create_dir_all(&dir)?;
        for (id, csv) in plots {
            fs::write(dir.join(format!("{id}.csv")), csv)?;
        }
    }
    print!("{}", rs.aggregate_csv()?);
    if rs.runs.is_empty() {
        bail!("every seed was infeasible");
    }
    Ok(())
}
