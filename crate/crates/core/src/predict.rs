//! Trains the service predictor on one run, deploys it as a pre-warm hook
//! inside the edge-cloud simulation, and runs the paired with/without
//! comparison over a fixed mobility pattern.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{label_trace, zones_from_snapshot, DbscanParams, ZoneMap};
use crate::error::{Error, Result};
use crate::learn::{encode, train, Algorithm, FeatureInput, Hyperparams, Model};
use crate::mec::{build_stream, run, EventCounts, MecConfig, MoveObservation, Prewarm, PrewarmHook, RunOutput};
use crate::service::ServiceKind;
use crate::stats::mean_ci95;
use crate::tracegen::{generate_trace, GeneratedTrace, SimConfig, TraceRecord, ZoneLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub dbscan: DbscanParams,
    /// Snapshot time for clustering; half the trace span when unset.
    pub snapshot_s: Option<u64>,
    /// Only positions newer than `snapshot_s - window_s` are clustered.
    pub window_s: Option<u64>,
    pub algorithm: Algorithm,
    pub hyperparams: Hyperparams,
    pub include_ue_id: bool,
    pub share_cap: usize,
    pub prewarm_ttl_s: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            dbscan: DbscanParams::default(),
            snapshot_s: None,
            window_s: None,
            algorithm: Algorithm::Knn,
            hyperparams: Hyperparams::default(),
            include_ue_id: false,
            share_cap: 10,
            prewarm_ttl_s: 300.0,
        }
    }
}

/// Everything the simulator needs to pre-warm edge clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedPredictor {
    pub zones: ZoneMap,
    pub model: Model,
    pub share_cap: usize,
    pub prewarm_ttl_s: f64,
}

/// Clusters a snapshot into zones, labels the trace with them, and trains
/// the classifier on the in-session rows.
pub fn train_pipeline(records: &[TraceRecord], params: &PipelineParams) -> Result<DeployedPredictor> {
    let last = records.iter().map(|r| r.time_s).max().unwrap_or(0);
    let snapshot = params.snapshot_s.unwrap_or(last / 2);
    let (zones, _) = zones_from_snapshot(records, snapshot, params.window_s, params.dbscan)?;
    if zones.is_empty() {
        return Err(Error::NoDenseAreas {
            eps_km: params.dbscan.eps_km,
            min_pts: params.dbscan.min_pts,
        });
    }
    let labeled = label_trace(records, &zones);
    let dataset = encode(&labeled, params.include_ue_id)?;
    let model = train(params.algorithm, &dataset, &params.hyperparams)?;
    Ok(DeployedPredictor {
        zones,
        model,
        share_cap: params.share_cap,
        prewarm_ttl_s: params.prewarm_ttl_s,
    })
}

/// Per-run state of a deployed predictor: fires once each time a UE moves
/// from outside every zone into one.
pub struct ZoneEntryHook<'a> {
    predictor: &'a DeployedPredictor,
    in_zone: BTreeMap<usize, bool>,
    last_rates: BTreeMap<usize, (u32, u32)>,
    pub fired: u64,
}

impl<'a> ZoneEntryHook<'a> {
    pub fn new(predictor: &'a DeployedPredictor) -> Self {
        Self {
            predictor,
            in_zone: BTreeMap::new(),
            last_rates: BTreeMap::new(),
            fired: 0,
        }
    }
}

impl PrewarmHook for ZoneEntryHook<'_> {
    fn observe(&mut self, obs: &MoveObservation) -> Option<ServiceKind> {
        if obs.uplink_kbps > 0 || obs.downlink_kbps > 0 {
            self.last_rates.insert(obs.ue, (obs.uplink_kbps, obs.downlink_kbps));
        }
        let zone = self.predictor.zones.assign(obs.position);
        let was_inside = self.in_zone.insert(obs.ue, zone.is_some()).unwrap_or(false);
        let zone = zone.filter(|_| !was_inside)?;
        self.fired += 1;

        let (up, down) = self.last_rates.get(&obs.ue).copied().unwrap_or((0, 0));
        let input = FeatureInput {
            time_s: obs.time_s,
            ue_id: obs.ue,
            lat: obs.position.lat,
            lon: obs.position.lon,
            enodeb_id: obs.enb,
            uplink_kbps: up as f64,
            downlink_kbps: down as f64,
            zone: ZoneLabel::Zone(zone),
        };
        let raw = self.predictor.model.schema.encode_input(&input)?;
        self.predictor.model.predict_class(&raw).parse().ok()
    }
}

/// Replays a generated trace through the edge-cloud model, optionally with
/// the predictor pre-warming shared instances.
pub fn simulate_trace(
    trace: &GeneratedTrace,
    horizon_s: u64,
    mec: &MecConfig,
    seed: u64,
    predictor: Option<&DeployedPredictor>,
) -> Result<RunOutput> {
    let enb_ec: Vec<usize> = trace.topology.enbs.iter().map(|e| e.ec_id).collect();
    let num_ecs = trace.topology.ecs.len();
    let stream = build_stream(&trace.records, &trace.sessions, horizon_s);
    match predictor {
        None => run(mec, enb_ec, num_ecs, &stream, horizon_s as f64, seed, None),
        Some(p) => {
            let mut hook = ZoneEntryHook::new(p);
            let prewarm = Prewarm {
                hook: &mut hook,
                share_cap: p.share_cap,
                ttl_s: p.prewarm_ttl_s,
            };
            run(mec, enb_ec, num_ecs, &stream, horizon_s as f64, seed, Some(prewarm))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub ci95: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let (mean, ci95) = mean_ci95(&v);
        Self { mean, ci95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadingStats {
    pub request: Stat,
    pub success: Stat,
    pub failure: Stat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigrationStats {
    pub triggered: Stat,
    pub success: Stat,
    pub failure: Stat,
    pub aborted: Stat,
    pub ongoing: Stat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub offloading: OffloadingStats,
    pub migration: MigrationStats,
    pub release: Stat,
    pub success_rate: Stat,
}

impl ScenarioStats {
    fn from_runs(runs: &[EventCounts]) -> Self {
        let s = |f: fn(&EventCounts) -> u64| Stat::of(runs.iter().map(|c| f(c) as f64));
        Self {
            offloading: OffloadingStats {
                request: s(|c| c.request),
                success: s(|c| c.success),
                failure: s(|c| c.failure),
            },
            migration: MigrationStats {
                triggered: s(|c| c.migration),
                success: s(|c| c.migration_success),
                failure: s(|c| c.migration_failure),
                aborted: s(|c| c.migration_aborted),
                ongoing: s(|c| c.migration_ongoing),
            },
            release: s(|c| c.release),
            success_rate: Stat::of(runs.iter().map(EventCounts::success_rate)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPair {
    pub service_seed: u64,
    pub baseline: EventCounts,
    pub predicted: EventCounts,
    pub prewarm_placements: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    /// Mean success rate, predicted minus baseline, in percentage points.
    pub success_rate_pp: f64,
    /// Mean predicted over mean baseline migration successes.
    pub migration_success_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub runs: usize,
    pub mobility_seed: u64,
    pub baseline: ScenarioStats,
    pub predicted: ScenarioStats,
    pub deltas: Deltas,
    pub pairs: Vec<RunPair>,
}

/// Service seed of run `i`; distinct from any seed a training run uses
/// when that one is derived with [`training_service_seed`].
pub fn run_service_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(1 + i as u64)
}

pub fn training_service_seed(base_seed: u64) -> u64 {
    base_seed
}

/// Runs `n_runs` paired simulations. Every run keeps the mobility seed of
/// `cfg` and draws sessions from its own service seed; each pair replays
/// the identical stream with the predictor off and on.
pub fn compare_experiment(
    cfg: &SimConfig,
    mec: &MecConfig,
    predictor: &DeployedPredictor,
    n_runs: usize,
    base_seed: u64,
) -> Result<ComparisonReport> {
    if n_runs < 2 {
        return Err(Error::validation("runs", "need at least 2 paired runs"));
    }
    cfg.validate()?;
    mec.validate()?;
    let pairs: Result<Vec<RunPair>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let service_seed = run_service_seed(base_seed, i);
            let run_cfg = SimConfig {
                service_seed: Some(service_seed),
                ..cfg.clone()
            };
            let trace = generate_trace(&run_cfg)?;
            let base = simulate_trace(&trace, cfg.sim_duration_s, mec, service_seed, None)?;
            let pred = simulate_trace(&trace, cfg.sim_duration_s, mec, service_seed, Some(predictor))?;
            Ok(RunPair {
                service_seed,
                baseline: base.summary.counts,
                predicted: pred.summary.counts,
                prewarm_placements: pred.summary.prewarm_placements,
            })
        })
        .collect();
    let pairs = pairs?;
    let base: Vec<EventCounts> = pairs.iter().map(|p| p.baseline).collect();
    let pred: Vec<EventCounts> = pairs.iter().map(|p| p.predicted).collect();
    let baseline = ScenarioStats::from_runs(&base);
    let predicted = ScenarioStats::from_runs(&pred);
    let deltas = Deltas {
        success_rate_pp: 100.0 * (predicted.success_rate.mean - baseline.success_rate.mean),
        migration_success_ratio: (baseline.migration.success.mean > 0.0)
            .then(|| predicted.migration.success.mean / baseline.migration.success.mean),
    };
    Ok(ComparisonReport {
        runs: n_runs,
        mobility_seed: cfg.seed,
        baseline,
        predicted,
        deltas,
        pairs,
    })
}
