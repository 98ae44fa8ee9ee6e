//! Mobile service-usage prediction for edge-cloud pre-placement.
//!
//! The pipeline: [`tracegen`] synthesizes a city-scale trace, [`dense`] finds
//! highly-populated areas with DBSCAN, [`learn`] trains service classifiers on
//! the labeled trace, and [`mec`] replays the trace through an event-driven
//! edge-cloud model. [`predict`] ties these together and runs the paired
//! with/without-predictor experiment; [`io`] holds the file codecs.

pub mod dense;
pub mod error;
pub mod geo;
pub mod io;
pub mod learn;
pub mod mec;
pub mod predict;
pub mod service;
pub mod stats;
pub mod tracegen;

pub use error::{Error, Result};
pub use geo::{haversine_km, GpsPoint};
pub use service::ServiceKind;
