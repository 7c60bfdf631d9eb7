//! Error-to-exit-code mapping. The contract is small and worth keeping in
//! one place: 1 invalid data, 2 I/O, 3 gateway or pricing configuration.

use steerbench_core::costing::CostError;
use steerbench_core::dataset::DatasetError;
use steerbench_core::embedding::EmbeddingError;
use steerbench_core::evaluation::EvalError;
use steerbench_core::gateway::GatewayError;
use steerbench_core::steering::SteeringError;

pub const EXIT_INVALID_DATA: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_GATEWAY_CONFIG: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

pub fn invalid_data(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_INVALID_DATA, error: anyhow::anyhow!(msg.into()) }
}

pub fn io_error(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_IO, error: anyhow::anyhow!(msg.into()) }
}

pub fn gateway_config(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_GATEWAY_CONFIG, error: anyhow::anyhow!(msg.into()) }
}

impl CliError {
    fn coded(code: i32, error: impl Into<anyhow::Error>) -> Self {
        CliError { code, error: error.into() }
    }

    pub fn from_dataset(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => Self::coded(EXIT_IO, e),
            _ => Self::coded(EXIT_INVALID_DATA, e),
        }
    }

    pub fn from_embedding(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::Io(_) => Self::coded(EXIT_IO, e),
            _ => Self::coded(EXIT_INVALID_DATA, e),
        }
    }

    pub fn from_steering(e: SteeringError) -> Self {
        match e {
            SteeringError::Io(_) | SteeringError::Embedding(EmbeddingError::Io(_)) => {
                Self::coded(EXIT_IO, e)
            }
            _ => Self::coded(EXIT_INVALID_DATA, e),
        }
    }

    pub fn from_gateway(e: GatewayError) -> Self {
        match e {
            GatewayError::Io(_) => Self::coded(EXIT_IO, e),
            _ => Self::coded(EXIT_GATEWAY_CONFIG, e),
        }
    }

    pub fn from_cost(e: CostError) -> Self {
        match e {
            CostError::Io(_) => Self::coded(EXIT_IO, e),
            _ => Self::coded(EXIT_GATEWAY_CONFIG, e),
        }
    }

    pub fn from_eval(e: EvalError) -> Self {
        match e {
            EvalError::Dataset(inner) => Self::from_dataset(inner),
            EvalError::Steering(inner) => Self::from_steering(inner),
            EvalError::Embedding(inner) => Self::from_embedding(inner),
            EvalError::Gateway(inner) => Self::from_gateway(inner),
            EvalError::Cost(inner) => Self::from_cost(inner),
            EvalError::Io(_) | EvalError::Csv(_) => Self::coded(EXIT_IO, e),
            _ => Self::coded(EXIT_INVALID_DATA, e),
        }
    }
}
