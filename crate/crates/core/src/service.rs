use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Services a UE can consume. The declaration order is the canonical order
/// used for categorical sampling and for label indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ServiceKind {
    #[serde(rename = "MIME")]
    Mime,
    VideoStreaming,
    SocialNetwork,
    DroneDelivery,
    DroneTransportation,
    IotWeather,
    IotAirPollution,
    IotParking,
}

impl ServiceKind {
    pub const ALL: [ServiceKind; 8] = [
        ServiceKind::Mime,
        ServiceKind::VideoStreaming,
        ServiceKind::SocialNetwork,
        ServiceKind::DroneDelivery,
        ServiceKind::DroneTransportation,
        ServiceKind::IotWeather,
        ServiceKind::IotAirPollution,
        ServiceKind::IotParking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ServiceKind::Mime => "MIME",
            ServiceKind::VideoStreaming => "VideoStreaming",
            ServiceKind::SocialNetwork => "SocialNetwork",
            ServiceKind::DroneDelivery => "DroneDelivery",
            ServiceKind::DroneTransportation => "DroneTransportation",
            ServiceKind::IotWeather => "IotWeather",
            ServiceKind::IotAirPollution => "IotAirPollution",
            ServiceKind::IotParking => "IotParking",
        }
    }

    pub fn is_drone(self) -> bool {
        matches!(self, ServiceKind::DroneDelivery | ServiceKind::DroneTransportation)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ServiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ServiceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ServiceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown service name `{s}`")))
    }
}

/// Label written in the trace when a UE has no active session.
pub const NO_SERVICE: &str = "NONE";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ServiceKind::ALL {
            assert_eq!(k.as_str().parse::<ServiceKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
        assert!("NONE".parse::<ServiceKind>().is_err());
    }
}
