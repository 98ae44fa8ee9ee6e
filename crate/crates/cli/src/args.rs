use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mecpred::io::{parse_config, ConfigFile};
use mecpred::learn::Algorithm;
use mecpred::mec::MecConfig;
use mecpred::{Error, Result};

use crate::invocation::{execute, Invocation};
use crate::manifest::{digest_file, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "mecpred",
    version,
    about = "Mobile service prediction and edge-cloud pre-placement experiments"
)]
pub struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with optional [sim], [mec] and [pipeline] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed` from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for outputs; created if missing.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate topology, trace and sessions.
    Generate,
    /// Find dense zones with DBSCAN and relabel the trace.
    Cluster {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        eps_km: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        /// Snapshot time in seconds; half the trace span by default.
        #[arg(long)]
        snapshot: Option<u64>,
        #[arg(long)]
        window: Option<u64>,
    },
    /// Train a classifier, or with --bundle the full predictor.
    Train {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        include_ue_id: bool,
        #[arg(long)]
        k: Option<usize>,
        /// Cluster, label and train in one go; writes a predictor bundle.
        #[arg(long)]
        bundle: bool,
    },
    /// Score a trained model on a trace.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Repeated stratified cross-validation of several algorithms.
    Bench {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, value_delimiter = ',', default_value = "zeror,nb,knn,tree")]
        algos: Vec<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        include_ue_id: bool,
    },
    /// Replay a trace through the edge-cloud model.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        topology: PathBuf,
        /// Config file whose [mec] table replaces the one from --config.
        #[arg(long)]
        mec_config: Option<PathBuf>,
        /// Predictor bundle, or a bare model when --zones is also given.
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long)]
        zones: Option<PathBuf>,
        /// Last simulated second; the last trace timestamp by default.
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Paired runs with and without the predictor over one mobility pattern.
    Compare {
        #[arg(long)]
        mec_config: Option<PathBuf>,
        /// Predictor bundle; trained on a dedicated run when omitted.
        #[arg(long)]
        predictor: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-emit the figure tables of a bench or comparison report.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

/// Makes input paths absolute so a manifest replays from any directory.
struct Resolver {
    cwd: PathBuf,
}

impl Resolver {
    fn path(&self, p: &Path) -> PathBuf {
        self.cwd.join(p)
    }

    fn config(&self, p: Option<&PathBuf>) -> Result<ConfigFile> {
        p.map_or_else(|| Ok(ConfigFile::default()), |p| parse_config(&self.path(p)))
    }

    fn mec(&self, base: MecConfig, p: Option<&PathBuf>) -> Result<MecConfig> {
        p.map_or(Ok(base), |p| Ok(parse_config(&self.path(p))?.mec))
    }
}

fn algorithm(name: &str) -> Result<Algorithm> {
    name.parse()
}

fn resolve(common: &Common, command: Command) -> Result<(PathBuf, Invocation)> {
    let out_dir = absolute(common.out_dir.as_deref().unwrap_or(Path::new(".")))?;
    let r = Resolver {
        cwd: std::env::current_dir().map_err(|e| Error::io(".", e))?,
    };
    let mut cfg = r.config(common.config.as_ref())?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    let seed = cfg.sim.seed;
    let inv = match command {
        Command::Generate => Invocation::Generate { sim: cfg.sim },
        Command::Cluster {
            trace,
            eps_km,
            min_pts,
            snapshot,
            window,
        } => {
            let mut dbscan = cfg.pipeline.dbscan;
            dbscan.eps_km = eps_km.unwrap_or(dbscan.eps_km);
            dbscan.min_pts = min_pts.unwrap_or(dbscan.min_pts);
            Invocation::Cluster {
                trace: r.path(&trace),
                dbscan,
                snapshot_s: snapshot.or(cfg.pipeline.snapshot_s),
                window_s: window.or(cfg.pipeline.window_s),
            }
        }
        Command::Train {
            trace,
            algo,
            out,
            include_ue_id,
            k,
            bundle,
        } => {
            let mut pipeline = cfg.pipeline;
            if let Some(a) = algo {
                pipeline.algorithm = algorithm(&a)?;
            }
            if let Some(k) = k {
                pipeline.hyperparams.k = k;
            }
            pipeline.include_ue_id |= include_ue_id;
            let default_out = if bundle { "predictor.json" } else { "model.json" };
            Invocation::Train {
                trace: r.path(&trace),
                out: out.unwrap_or_else(|| default_out.to_owned()),
                bundle,
                pipeline,
            }
        }
        Command::Evaluate { model, trace } => Invocation::Evaluate {
            model: r.path(&model),
            trace: r.path(&trace),
        },
        Command::Bench {
            trace,
            reps,
            folds,
            algos,
            out,
            include_ue_id,
        } => Invocation::Bench {
            trace: r.path(&trace),
            algorithms: algos.iter().map(|a| algorithm(a)).collect::<Result<_>>()?,
            repetitions: reps,
            folds,
            hyperparams: cfg.pipeline.hyperparams,
            include_ue_id: include_ue_id || cfg.pipeline.include_ue_id,
            seed,
            out: out.unwrap_or_else(|| "bench.csv".to_owned()),
        },
        Command::Simulate {
            trace,
            sessions,
            topology,
            mec_config,
            predictor,
            zones,
            horizon,
        } => {
            if zones.is_some() && predictor.is_none() {
                return Err(Error::validation("zones", "--zones needs --predictor"));
            }
            Invocation::Simulate {
                trace: r.path(&trace),
                sessions: r.path(&sessions),
                topology: r.path(&topology),
                mec: r.mec(cfg.mec, mec_config.as_ref())?,
                predictor: predictor.map(|p| r.path(&p)),
                zones: zones.map(|p| r.path(&p)),
                share_cap: cfg.pipeline.share_cap,
                prewarm_ttl_s: cfg.pipeline.prewarm_ttl_s,
                horizon_s: horizon,
                seed,
            }
        }
        Command::Compare {
            mec_config,
            predictor,
            runs,
            out,
        } => Invocation::Compare {
            mec: r.mec(cfg.mec, mec_config.as_ref())?,
            sim: cfg.sim,
            pipeline: cfg.pipeline,
            predictor: predictor.map(|p| r.path(&p)),
            runs,
            out: out.unwrap_or_else(|| "comparison_report.json".to_owned()),
        },
        Command::Report { input } => Invocation::Report { input: r.path(&input) },
        Command::Replay { .. } => unreachable!("handled by dispatch"),
    };
    Ok((out_dir, inv))
}

fn display_name(p: &Path, base: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}

/// Runs one command; returns the process exit code.
pub fn dispatch(cli: Cli) -> Result<u8> {
    if let Command::Replay { manifest } = &cli.command {
        let out_dir = cli.common.out_dir.as_deref().map(absolute).transpose()?;
        return replay(&absolute(manifest)?, out_dir);
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (out_dir, inv) = resolve(&cli.common, cli.command)?;
    let manifest = execute_with_manifest(&inv, &out_dir, args)?;
    for o in &manifest.outputs {
        println!("wrote {}", o.path.display());
    }
    Ok(0)
}

fn execute_with_manifest(inv: &Invocation, out_dir: &Path, args: Vec<String>) -> Result<RunManifest> {
    let started = std::time::Instant::now();
    let outcome = execute(inv, out_dir)?;
    let manifest = RunManifest::new(inv, args, out_dir, &outcome, started.elapsed().as_secs_f64())?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

fn replay(manifest_path: &Path, out_dir: Option<PathBuf>) -> Result<u8> {
    let recorded = RunManifest::read(manifest_path)?;
    let out_dir = out_dir.unwrap_or_else(|| recorded.out_dir.clone());
    for input in &recorded.inputs {
        let now = digest_file(&input.path)?;
        if now != input.sha256 {
            eprintln!("input changed since the recorded run: {}", input.path.display());
            return Ok(4);
        }
    }
    let fresh = execute_with_manifest(&recorded.invocation, &out_dir, recorded.args.clone())?;
    let mut mismatches = 0;
    for (old, new) in recorded.outputs.iter().zip(&fresh.outputs) {
        let name = display_name(&new.path, &out_dir);
        let same = old.sha256 == new.sha256;
        if !old.reproducible {
            println!("skip  {name} (timing output)");
        } else if same {
            println!("match {name}");
        } else {
            println!("DIFF  {name}");
            mismatches += 1;
        }
    }
    if recorded.outputs.len() != fresh.outputs.len() {
        println!(
            "DIFF  output count {} vs {}",
            recorded.outputs.len(),
            fresh.outputs.len()
        );
        mismatches += 1;
    }
    Ok(if mismatches == 0 { 0 } else { 4 })
}
