use std::path::{Path, PathBuf};

use mecpred::dense::{label_trace, zones_from_snapshot, DbscanParams, ZoneMap};
use mecpred::io::{
    emit_report, events_to_jsonl, read_json, read_sessions, read_trace, write_atomic, write_json, write_sessions,
    write_trace, Report,
};
use mecpred::learn::{benchmark, encode, evaluate, train, Algorithm, Hyperparams, Model};
use mecpred::mec::MecConfig;
use mecpred::predict::{
    compare_experiment, simulate_trace, train_pipeline, training_service_seed, DeployedPredictor, PipelineParams,
};
use mecpred::tracegen::{generate_trace, GeneratedTrace, SimConfig, Topology};
use mecpred::{Error, Result};
use serde::{Deserialize, Serialize};

/// A command with every default and config value resolved, so that running
/// it again needs nothing but this record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Invocation {
    Generate {
        sim: SimConfig,
    },
    Cluster {
        trace: PathBuf,
        dbscan: DbscanParams,
        snapshot_s: Option<u64>,
        window_s: Option<u64>,
    },
    Train {
        trace: PathBuf,
        out: String,
        bundle: bool,
        pipeline: PipelineParams,
    },
    Evaluate {
        model: PathBuf,
        trace: PathBuf,
    },
    Bench {
        trace: PathBuf,
        algorithms: Vec<Algorithm>,
        repetitions: usize,
        folds: usize,
        hyperparams: Hyperparams,
        include_ue_id: bool,
        seed: u64,
        out: String,
    },
    Simulate {
        trace: PathBuf,
        sessions: PathBuf,
        topology: PathBuf,
        mec: MecConfig,
        predictor: Option<PathBuf>,
        zones: Option<PathBuf>,
        share_cap: usize,
        prewarm_ttl_s: f64,
        horizon_s: Option<u64>,
        seed: u64,
    },
    Compare {
        mec: MecConfig,
        sim: SimConfig,
        pipeline: PipelineParams,
        predictor: Option<PathBuf>,
        runs: usize,
        out: String,
    },
    Report {
        input: PathBuf,
    },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Generate { .. } => "generate",
            Invocation::Cluster { .. } => "cluster",
            Invocation::Train { .. } => "train",
            Invocation::Evaluate { .. } => "evaluate",
            Invocation::Bench { .. } => "bench",
            Invocation::Simulate { .. } => "simulate",
            Invocation::Compare { .. } => "compare",
            Invocation::Report { .. } => "report",
        }
    }

    /// Seeds that drive randomness in this command.
    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        match self {
            Invocation::Generate { sim } => vec![("mobility", sim.seed), ("service", sim.service_seed())],
            Invocation::Bench { seed, .. } => vec![("folds", *seed)],
            Invocation::Simulate { seed, .. } => vec![("placement", *seed)],
            Invocation::Compare { sim, .. } => vec![
                ("mobility", sim.seed),
                ("training_service", training_service_seed(sim.service_seed())),
            ],
            _ => vec![],
        }
    }
}

pub struct Output {
    pub path: PathBuf,
    /// False for files holding wall-clock measurements.
    pub reproducible: bool,
}

#[derive(Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<Output>,
}

impl Outcome {
    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn wrote(&mut self, p: PathBuf) {
        self.outputs.push(Output {
            path: p,
            reproducible: true,
        });
    }

    fn wrote_timing(&mut self, p: PathBuf) {
        self.outputs.push(Output {
            path: p,
            reproducible: false,
        });
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn last_time(trace: &[mecpred::tracegen::TraceRecord]) -> u64 {
    trace.iter().map(|r| r.time_s).max().unwrap_or(0)
}

fn load_predictor(
    predictor: &Path,
    zones: Option<&Path>,
    share_cap: usize,
    prewarm_ttl_s: f64,
    o: &mut Outcome,
) -> Result<DeployedPredictor> {
    o.input(predictor);
    match zones {
        None => read_json(predictor),
        Some(z) => {
            o.input(z);
            let model: Model = read_json(predictor)?;
            let zones: ZoneMap = read_json(z)?;
            Ok(DeployedPredictor {
                zones,
                model,
                share_cap,
                prewarm_ttl_s,
            })
        }
    }
}

pub fn execute(inv: &Invocation, out_dir: &Path) -> Result<Outcome> {
    ensure_dir(out_dir)?;
    let mut o = Outcome::default();
    match inv {
        Invocation::Generate { sim } => {
            let trace = generate_trace(sim)?;
            let topo = out_dir.join("topology.json");
            write_json(&topo, &trace.topology)?;
            o.wrote(topo);
            let path = out_dir.join("trace.csv");
            write_trace(&path, &trace.records)?;
            o.wrote(path);
            let path = out_dir.join("sessions.csv");
            write_sessions(&path, &trace.sessions)?;
            o.wrote(path);
        }
        Invocation::Cluster {
            trace,
            dbscan,
            snapshot_s,
            window_s,
        } => {
            o.input(trace);
            let records = read_trace(trace)?;
            let snapshot = snapshot_s.unwrap_or(last_time(&records) / 2);
            let (zones, result) = zones_from_snapshot(&records, snapshot, *window_s, *dbscan)?;
            eprintln!(
                "snapshot {snapshot} s: {} zones, {} noise points",
                result.cluster_count(),
                result.noise_count()
            );
            let path = out_dir.join("zones.json");
            write_json(&path, &zones)?;
            o.wrote(path);
            let path = out_dir.join("trace_labeled.csv");
            write_trace(&path, &label_trace(&records, &zones))?;
            o.wrote(path);
        }
        Invocation::Train {
            trace,
            out,
            bundle,
            pipeline,
        } => {
            o.input(trace);
            let records = read_trace(trace)?;
            let path = out_dir.join(out);
            if *bundle {
                write_json(&path, &train_pipeline(&records, pipeline)?)?;
            } else {
                let dataset = encode(&records, pipeline.include_ue_id)?;
                write_json(&path, &train(pipeline.algorithm, &dataset, &pipeline.hyperparams)?)?;
            }
            o.wrote(path);
        }
        Invocation::Evaluate { model, trace } => {
            o.input(model);
            o.input(trace);
            let model: Model = read_json(model)?;
            let include_ue_id = model.schema.trace.is_some_and(|c| c.include_ue_id);
            let dataset = encode(&read_trace(trace)?, include_ue_id)?;
            let report = evaluate(&model, &dataset);
            eprintln!("accuracy {:.4} on {} instances", report.accuracy, dataset.len());
            let path = out_dir.join("evaluation.json");
            write_json(&path, &report)?;
            o.wrote(path);
        }
        Invocation::Bench {
            trace,
            algorithms,
            repetitions,
            folds,
            hyperparams,
            include_ue_id,
            seed,
            out,
        } => {
            o.input(trace);
            let dataset = encode(&read_trace(trace)?, *include_ue_id)?;
            let report = benchmark(algorithms, &dataset, *repetitions, *folds, hyperparams, *seed)?;
            for path in emit_report(out_dir, &Report::Bench(report))? {
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                if name == "fig2a_accuracy.csv" {
                    o.wrote(path);
                } else if name == "bench.csv" && out != "bench.csv" {
                    let dest = out_dir.join(out);
                    std::fs::rename(&path, &dest).map_err(|e| Error::io(&dest, e))?;
                    o.wrote_timing(dest);
                } else {
                    o.wrote_timing(path);
                }
            }
        }
        Invocation::Simulate {
            trace,
            sessions,
            topology,
            mec,
            predictor,
            zones,
            share_cap,
            prewarm_ttl_s,
            horizon_s,
            seed,
        } => {
            o.input(trace);
            o.input(sessions);
            o.input(topology);
            let generated = GeneratedTrace {
                records: read_trace(trace)?,
                sessions: read_sessions(sessions)?,
                topology: read_json::<Topology>(topology)?,
            };
            let predictor = match predictor {
                Some(p) => Some(load_predictor(p, zones.as_deref(), *share_cap, *prewarm_ttl_s, &mut o)?),
                None => None,
            };
            let horizon = horizon_s.unwrap_or(last_time(&generated.records));
            let run = simulate_trace(&generated, horizon, mec, *seed, predictor.as_ref())?;
            let path = out_dir.join("events.jsonl");
            write_atomic(&path, &events_to_jsonl(&run.events)?)?;
            o.wrote(path);
            let path = out_dir.join("summary.json");
            write_json(&path, &run.summary)?;
            o.wrote(path);
        }
        Invocation::Compare {
            mec,
            sim,
            pipeline,
            predictor,
            runs,
            out,
        } => {
            let predictor = match predictor {
                Some(p) => {
                    o.input(p);
                    read_json(p)?
                }
                None => {
                    let training = SimConfig {
                        service_seed: Some(training_service_seed(sim.service_seed())),
                        ..sim.clone()
                    };
                    let trained = train_pipeline(&generate_trace(&training)?.records, pipeline)?;
                    let path = out_dir.join("predictor.json");
                    write_json(&path, &trained)?;
                    o.wrote(path);
                    trained
                }
            };
            let report = compare_experiment(sim, mec, &predictor, *runs, sim.service_seed())?;
            for path in emit_report(out_dir, &Report::Comparison(report))? {
                let is_report = path.file_name().is_some_and(|n| n == "comparison_report.json");
                if is_report && out != "comparison_report.json" {
                    let dest = out_dir.join(out);
                    std::fs::rename(&path, &dest).map_err(|e| Error::io(&dest, e))?;
                    o.wrote(dest);
                } else {
                    o.wrote(path);
                }
            }
        }
        Invocation::Report { input } => {
            o.input(input);
            let report: Report = read_json(input)?;
            for t in report.tables() {
                let path = out_dir.join(&t.file_name);
                write_atomic(&path, &t.to_csv())?;
                o.wrote(path);
            }
        }
    }
    Ok(o)
}
