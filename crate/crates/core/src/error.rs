use thiserror::Error;

/// Errors surfaced by instance handling, the solvers and the oracle.
#[derive(Debug, Error)]
pub enum OssError {
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),

    /// A structurally well-formed document that violates a model invariant.
    #[error("{}", render_validation(.node, .field, .message))]
    Validation {
        node: Option<u32>,
        field: String,
        message: String,
    },

    /// An exhaustive computation would exceed its enumeration limit.
    #[error("enumeration guard exceeded: {0}")]
    Guard(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded: plan needs {time} time units, budget is {budget}")]
    BudgetExceeded { time: u64, budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn render_validation(node: &Option<u32>, field: &str, message: &str) -> String {
    match node {
        Some(id) => format!("node {id}, field `{field}`: {message}"),
        None => format!("field `{field}`: {message}"),
    }
}

impl OssError {
    pub(crate) fn node(node: u32, field: &str, message: impl Into<String>) -> Self {
        OssError::Validation {
            node: Some(node),
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn field(field: &str, message: impl Into<String>) -> Self {
        OssError::Validation {
            node: None,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, OssError>;
