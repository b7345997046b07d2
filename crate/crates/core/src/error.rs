use thiserror::Error;

/// Errors raised by the model library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument {u} outside the exponent domain{} (bound {bound})", component_label(*component))]
    Domain {
        component: Option<usize>,
        u: f64,
        bound: f64,
    },

    #[error("log-gamma pole at z = {0}")]
    GammaPole(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("calibration infeasible at index {index}: target {target} exceeds attained bound {attained}")]
    Infeasible {
        index: usize,
        target: f64,
        attained: f64,
    },

    #[error("index {index} out of range {lo}..={hi}")]
    Index { index: usize, lo: usize, hi: usize },

    #[error("assembly failed at index {index}: {reason}")]
    Assembly { index: usize, reason: String },

    #[error("damping infeasible: {reason}; suggested damping {suggested:?}")]
    Damping { reason: String, suggested: Vec<f64> },
}

fn component_label(component: Option<usize>) -> String {
    match component {
        Some(i) => format!(" of component {i}"),
        None => String::new(),
    }
}

impl ModelError {
    /// Attach a component index to a domain error.
    pub fn with_component(self, index: usize) -> Self {
        match self {
            ModelError::Domain { u, bound, .. } => ModelError::Domain {
                component: Some(index),
                u,
                bound,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn check_index(index: usize, lo: usize, hi: usize) -> Result<()> {
    if index < lo || index > hi {
        Err(ModelError::Index { index, lo, hi })
    } else {
        Ok(())
    }
}
