use std::collections::BTreeMap;
use std::time::Duration;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{rows_to_matrix, ModelError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Request body of the forecasting plugin protocol (`POST <url>`, JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginRequest {
    /// `L x C` rows, oldest first, target channels only.
    pub history: Vec<Vec<f64>>,
    pub channel_names: Vec<String>,
    pub horizon: usize,
    /// Sampling interval such as `"1h"` or `"15min"`.
    pub frequency: String,
}

/// Response body of the forecasting plugin protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginResponse {
    /// `H x C` rows.
    pub forecast: Vec<Vec<f64>>,
    pub model_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEndpoint {
    pub url: String,
    #[serde(with = "secs", default = "default_timeout")]
    pub timeout: Duration,
}

fn default_timeout() -> Duration {
    DEFAULT_TIMEOUT
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl ExternalEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

/// Named endpoints reachable through `ForecastModelId::External`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalRegistry {
    endpoints: BTreeMap<String, ExternalEndpoint>,
}

impl ExternalRegistry {
    pub fn register(&mut self, name: impl Into<String>, endpoint: ExternalEndpoint) -> Option<ExternalEndpoint> {
        self.endpoints.insert(name.into(), endpoint)
    }

    pub fn get(&self, name: &str) -> Option<&ExternalEndpoint> {
        self.endpoints.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.endpoints.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }
}

/// Sends one forecast request and validates the response shape. Returns the
/// `H x C` forecast and the model name reported by the endpoint.
pub fn call_external(
    name: &str,
    endpoint: &ExternalEndpoint,
    request: &PluginRequest,
) -> Result<(Array2<f64>, String), ModelError> {
    let agent = ureq::AgentBuilder::new().timeout(endpoint.timeout).build();
    let response = agent.post(&endpoint.url).send_json(request);
    let response = match response {
        Ok(r) => r,
        Err(ureq::Error::Status(status, r)) => {
            let body = r.into_string().unwrap_or_default();
            return Err(if (400..500).contains(&status) {
                ModelError::Contract {
                    endpoint: name.to_string(),
                    status,
                    body,
                }
            } else {
                ModelError::Upstream {
                    endpoint: name.to_string(),
                    status,
                }
            });
        }
        Err(ureq::Error::Transport(t)) => {
            let message = t.to_string();
            return Err(if message.contains("timed out") || message.contains("Timeout") {
                ModelError::Timeout {
                    endpoint: name.to_string(),
                    seconds: endpoint.timeout.as_secs_f64(),
                }
            } else {
                ModelError::Transport {
                    endpoint: name.to_string(),
                    message,
                }
            });
        }
    };
    let body: PluginResponse = response.into_json().map_err(|e| ModelError::Malformed {
        endpoint: name.to_string(),
        message: e.to_string(),
    })?;
    let values = rows_to_matrix(&body.forecast).map_err(|message| ModelError::Malformed {
        endpoint: name.to_string(),
        message,
    })?;
    let expected = (request.horizon, request.channel_names.len());
    if values.dim() != expected {
        return Err(ModelError::ShapeMismatch {
            expected,
            found: values.dim(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok((values, body.model_name))
}
