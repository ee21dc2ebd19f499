use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("action {action} out of range for {k} actions")]
    ActionOutOfRange { action: usize, k: usize },

    #[error("occupation measure is undefined before the first action")]
    UndefinedState,

    #[error("loss is undefined at coordinate {coordinate} (value {value})")]
    Domain { coordinate: usize, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("coefficient {coefficient} has no observations yet")]
    Unobserved { coefficient: usize },

    #[error("stream value {value} at index {index} is outside [0, 1]")]
    StreamDomain { index: usize, value: f64 },

    #[error("rate fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),

    #[error("trial failed at round {round}: {source}")]
    Trial {
        round: u64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}
