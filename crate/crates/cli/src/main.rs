use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lgts::graph::to_edge_list;
use lgts::harness::{llm_dag, plot_curves, report_ged, run_experiment, Experiment, Method};

#[derive(Parser)]
#[command(name = "lgts", version, about = "Curriculum experiments over LLM-proposed sub-goal graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every seed of an experiment and write metrics files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Added to every seed in the config.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Output directory; defaults to the config's `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
    },
    /// Render learning curves from metrics CSVs as SVG.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Edit distance of graph dumps to the config's oracle graph.
    Ged {
        #[arg(long)]
        config: PathBuf,
        #[arg(required = true)]
        dumps: Vec<PathBuf>,
        /// Oracle edge list; defaults to the config's `oracle`.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// Load and check a config without running anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<Method>,
    },
    /// Print the sub-goal graph a method would train on.
    DumpDag {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        /// Write the edge list here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Path, method: Option<Method>) -> Result<Experiment> {
    let exp = Experiment::load(config).with_context(|| format!("loading {}", config.display()))?;
    Ok(match method {
        Some(m) => exp.with_method(m)?,
        None => exp,
    })
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run {
            config,
            seed_offset,
            out,
            method,
        } => {
            let exp = load(&config, method)?;
            let out = out.unwrap_or_else(|| exp.config.out_dir.clone());
            let (agg, files) = run_experiment(&exp, seed_offset, &out)?;
            for r in &agg.runs {
                match (&r.error, r.total_interactions, r.success_rate) {
                    (Some(e), _, _) => println!("{}: error: {e}", r.run_id),
                    (None, Some(n), Some(s)) => {
                        println!("{}: interactions {n}, success {s:.2}", r.run_id)
                    }
                    _ => {}
                }
            }
            if let (Some(i), Some(s)) = (agg.interactions, agg.success) {
                println!(
                    "{} on {}: interactions {:.0} ± {:.0}, success {:.2} ± {:.2}",
                    agg.method, agg.domain, i.mean, i.sd, s.mean, s.sd
                );
            }
            if let Some(g) = &agg.ged {
                println!("graph edit distance {:.2} ± {:.2}", g.mean, g.sd);
            }
            println!("summary: {}", files.summary.display());
        }
        Cmd::Plot { files, out } => {
            let s = plot_curves(&files, &out)?;
            println!(
                "{}: {} curves, {} convergence markers",
                out.display(),
                s.series,
                s.convergences
            );
        }
        Cmd::Ged {
            config,
            dumps,
            oracle,
        } => {
            let exp = load(&config, None)?;
            let Some(oracle) = oracle.or(exp.config.oracle.clone()) else {
                bail!("no oracle graph: pass --oracle or set `oracle` in the config");
            };
            let r = report_ged(&dumps, &oracle, &exp.info)?;
            for (d, v) in dumps.iter().zip(&r.values) {
                println!("{}: {v}", d.display());
            }
            println!("mean {:.2} ± {:.2}", r.mean, r.sd);
        }
        Cmd::ValidateConfig { config, method } => {
            let exp = load(&config, method)?;
            println!(
                "ok: {} on {}, {} seeds, budget {}",
                exp.method,
                exp.config.domain,
                exp.config.seeds.len(),
                exp.config.teacher.budget
            );
        }
        Cmd::DumpDag {
            config,
            method,
            out,
        } => {
            let exp = load(&config, method)?;
            let dag = if exp.method.uses_llm() {
                llm_dag(&exp)?.0
            } else if exp.method.uses_oracle() {
                exp.oracle.clone().context("config has no `oracle` graph")?
            } else {
                bail!("method {} trains without a sub-goal graph", exp.method);
            };
            let text = to_edge_list(&dag);
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
