use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::service::ServiceKind;
use crate::tracegen::{TraceRecord, ZoneLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn categorical(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            kind: FeatureKind::Categorical,
        }
    }
}

/// Raw per-row inputs from which a trace feature vector is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureInput {
    pub time_s: u64,
    pub ue_id: usize,
    pub lat: f64,
    pub lon: f64,
    pub enodeb_id: usize,
    pub uplink_kbps: f64,
    pub downlink_kbps: f64,
    pub zone: ZoneLabel,
}

impl From<&TraceRecord> for FeatureInput {
    fn from(r: &TraceRecord) -> Self {
        Self {
            time_s: r.time_s,
            ue_id: r.ue_id,
            lat: r.lat,
            lon: r.lon,
            enodeb_id: r.enodeb_id,
            uplink_kbps: r.uplink_kbps as f64,
            downlink_kbps: r.downlink_kbps as f64,
            zone: r.zone,
        }
    }
}

/// Categorical code of the zone column; unclustered rows count as noise.
pub fn zone_code(z: ZoneLabel) -> f64 {
    match z {
        ZoneLabel::Zone(k) => k as f64,
        ZoneLabel::Noise | ZoneLabel::Unlabeled => -1.0,
    }
}

/// Ordered feature list. Categorical values are stored as exact integer codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub features: Vec<FeatureSpec>,
    /// Whether this schema was built from trace rows, and with which columns.
    #[serde(default)]
    pub trace: Option<TraceColumns>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceColumns {
    pub include_ue_id: bool,
}

impl Schema {
    pub fn new(features: Vec<FeatureSpec>) -> Self {
        Self { features, trace: None }
    }

    /// Trace feature order: time_of_day_s, [ue_id], latitude, longitude,
    /// enodeb_id, datarate_uplink, datarate_downlink, zone.
    pub fn for_trace(include_ue_id: bool) -> Self {
        let mut features = vec![FeatureSpec::numeric("time_of_day_s")];
        if include_ue_id {
            features.push(FeatureSpec::categorical("ue_id"));
        }
        features.extend([
            FeatureSpec::numeric("latitude"),
            FeatureSpec::numeric("longitude"),
            FeatureSpec::categorical("enodeb_id"),
            FeatureSpec::numeric("datarate_uplink"),
            FeatureSpec::numeric("datarate_downlink"),
            FeatureSpec::categorical("zone"),
        ]);
        Self {
            features,
            trace: Some(TraceColumns { include_ue_id }),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.features.iter().map(|f| f.kind).collect()
    }

    /// Feature vector for a trace row; `None` if this is not a trace schema.
    pub fn encode_input(&self, x: &FeatureInput) -> Option<Vec<f64>> {
        let cols = self.trace?;
        let mut v = vec![(x.time_s % 86_400) as f64];
        if cols.include_ue_id {
            v.push(x.ue_id as f64);
        }
        v.extend([
            x.lat,
            x.lon,
            x.enodeb_id as f64,
            x.uplink_kbps,
            x.downlink_kbps,
            zone_code(x.zone),
        ]);
        Some(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<f64>,
    pub label: usize,
}

/// Per-feature min-max statistics; categorical entries are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub kinds: Vec<FeatureKind>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit(schema: &Schema, instances: &[Instance]) -> Self {
        let d = schema.len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for inst in instances {
            for (j, v) in inst.values.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        for j in 0..d {
            if !min[j].is_finite() {
                (min[j], max[j]) = (0.0, 0.0);
            }
        }
        Self {
            kinds: schema.kinds(),
            min,
            max,
        }
    }

    /// Numeric features map to `(v - min) / (max - min)`; a zero range maps to 0.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .enumerate()
            .map(|(j, &v)| match self.kinds[j] {
                FeatureKind::Categorical => v,
                FeatureKind::Numeric => {
                    let range = self.max[j] - self.min[j];
                    if range > 0.0 {
                        (v - self.min[j]) / range
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    /// Class names; a label is an index into this list.
    pub classes: Vec<String>,
    pub instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(schema: Schema, classes: Vec<String>, instances: Vec<Instance>) -> Result<Self> {
        for (i, inst) in instances.iter().enumerate() {
            if inst.values.len() != schema.len() {
                return Err(Error::Parse(format!(
                    "instance {i} has {} features, schema has {}",
                    inst.values.len(),
                    schema.len()
                )));
            }
            if inst.label >= classes.len() {
                return Err(Error::Parse(format!("instance {i} has unknown label {}", inst.label)));
            }
            if inst.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("instance {i} has a non-finite feature")));
            }
        }
        Ok(Self {
            schema,
            classes,
            instances,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn normalizer(&self) -> Normalizer {
        Normalizer::fit(&self.schema, &self.instances)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for inst in &self.instances {
            counts[inst.label] += 1;
        }
        counts
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            classes: self.classes.clone(),
            instances: rows.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }
}

/// Builds a dataset from the rows that carry a service. Classes are the
/// services present, in canonical order.
pub fn encode(records: &[TraceRecord], include_ue_id: bool) -> Result<Dataset> {
    let labeled: Vec<(&TraceRecord, ServiceKind)> = records.iter().filter_map(|r| r.service.map(|s| (r, s))).collect();
    if labeled.is_empty() {
        return Err(Error::EmptyDataset("no rows with an active service".into()));
    }
    let mut present: Vec<ServiceKind> = labeled.iter().map(|(_, s)| *s).collect();
    present.sort();
    present.dedup();

    let schema = Schema::for_trace(include_ue_id);
    let instances = labeled
        .iter()
        .map(|(r, s)| Instance {
            values: schema.encode_input(&FeatureInput::from(*r)).expect("trace schema"),
            label: present.binary_search(s).expect("present"),
        })
        .collect();
    Dataset::new(
        schema,
        present.iter().map(|s| s.as_str().to_owned()).collect(),
        instances,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, service: Option<ServiceKind>, up: u32) -> TraceRecord {
        TraceRecord {
            time_s: t,
            ue_id: 4,
            service,
            lat: 60.1,
            lon: 24.9,
            enodeb_id: 2,
            uplink_kbps: up,
            downlink_kbps: 10,
            zone: ZoneLabel::Zone(1),
        }
    }

    #[test]
    fn idle_trace_is_an_error() {
        let recs = vec![rec(0, None, 0), rec(5, None, 0)];
        assert!(matches!(encode(&recs, false), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn labeled_rows_become_instances() {
        let recs = vec![
            rec(0, None, 0),
            rec(90_000, Some(ServiceKind::SocialNetwork), 200),
            rec(7, Some(ServiceKind::Mime), 50),
            rec(8, Some(ServiceKind::Mime), 60),
        ];
        let ds = encode(&recs, false).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.classes, vec!["MIME", "SocialNetwork"]);
        assert_eq!(ds.instances[0].label, 1);
        // time of day wraps at 86400
        assert_eq!(ds.instances[0].values, vec![3600.0, 60.1, 24.9, 2.0, 200.0, 10.0, 1.0]);
        assert_eq!(encode(&recs, true).unwrap().schema.len(), 8);
    }

    #[test]
    fn constant_numeric_normalizes_to_zero() {
        let recs = vec![rec(1, Some(ServiceKind::Mime), 50), rec(2, Some(ServiceKind::Mime), 70)];
        let ds = encode(&recs, false).unwrap();
        let norm = ds.normalizer();
        let a = norm.apply(&ds.instances[0].values);
        let b = norm.apply(&ds.instances[1].values);
        // latitude is constant
        assert_eq!((a[1], b[1]), (0.0, 0.0));
        assert_eq!((a[4], b[4]), (0.0, 1.0));
        // categorical codes pass through
        assert_eq!(a[3], 2.0);
    }
}
