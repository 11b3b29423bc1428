use thiserror::Error;

/// Errors raised by the economic building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("undefined equity share: region {region} has no issued assets but positive holdings")]
    UndefinedShare { region: usize },
    #[error("division error: zero wage for skill {skill} with positive adjustment cost")]
    ZeroWage { skill: usize },
    #[error("singular wage markup: eta={eta} is not positive")]
    SingularMarkup { eta: f64 },
    #[error("degenerate region {region}: no durable-goods firms or no human capital")]
    DegenerateRegion { region: usize },
    #[error("non-viable final-goods cell (sector {sector}, region {region}): effective fixed cost is not positive")]
    NonViable { sector: usize, region: usize },
    #[error("non-viable durable-goods sector in region {region}: effective fixed cost is not positive")]
    NonViableDurable { region: usize },
}

pub(crate) fn domain(msg: impl Into<String>) -> ModelError {
    ModelError::Domain(msg.into())
}

pub(crate) fn ensure_positive(name: &str, v: f64) -> Result<f64, ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{name}={v} must be strictly positive")))
    }
}
