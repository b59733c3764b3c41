use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),

    #[error("value {value} is outside the state space of a {states}-state chain")]
    StateOutOfRange { value: f64, states: usize },

    #[error("partition times must be strictly increasing ({previous} then {next})")]
    UnorderedPartition { previous: f64, next: f64 },

    #[error("evaluation time {t} precedes the last partition time {last}")]
    TimeBeforePartition { t: f64, last: f64 },

    #[error("endpoint {value} is at or beyond the barrier {level}")]
    EndpointOnBarrier { value: f64, level: f64 },

    #[error("survival conditioning failed after {attempts} rejection attempts")]
    DegenerateSurvival { attempts: u64 },

    #[error("rendezvous grid is empty")]
    EmptyGrid,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("policy continued to t = {requested} past the simulation horizon {horizon}")]
    HorizonExceeded { requested: f64, horizon: f64 },

    #[error("episode {index} (master seed {master_seed}) failed: {source}")]
    Episode {
        index: u64,
        master_seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::InvalidParameter { .. }
                | Error::NonPositiveDuration(_)
                | Error::StateOutOfRange { .. }
                | Error::UnorderedPartition { .. }
                | Error::TimeBeforePartition { .. }
                | Error::EndpointOnBarrier { .. }
                | Error::EmptyGrid
                | Error::Config(_)
        )
    }
}
