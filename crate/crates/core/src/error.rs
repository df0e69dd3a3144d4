use thiserror::Error;

use crate::exprlang::{BindError, DomainError, ParseError};
use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid scenario data; `path` names the offending field.
    #[error("{path}: {message}")]
    Scenario { path: String, message: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },
    #[error("coordinate `{coordinate}` = {value} is outside the chart")]
    OutOfChart { coordinate: String, value: f64 },
    #[error("degenerate plane: g(u,u)g(v,v) - g(u,v)^2 = {0:e}")]
    DegeneratePlane(f64),
    #[error("vector is not null: g(u,u) = {0:e}")]
    NotNull(f64),
    #[error("vector must not be null")]
    NullVector,
    #[error("precondition `{name}` violated: {detail}")]
    Precondition { name: &'static str, detail: String },
    #[error("rigging is not transverse: zeta(F) = {0:e}")]
    NotTransverse(f64),
    #[error("vector is not tangent to the hypersurface: dF(u) = {0:e}")]
    NotTangent(f64),
    #[error("vector is not in the screen: residual {0:e}")]
    NotScreen(f64),
    #[error("screen construction broke down: found {found} of {needed} directions")]
    ScreenBreakdown { found: usize, needed: usize },
    #[error("graph coordinate root solve failed: {0}")]
    RootSolve(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("trajectory left the chart at t = {t} through coordinate `{coordinate}`")]
    ChartExit { t: f64, coordinate: String },
    #[error("trajectory left the hypersurface: |F| = {0:e}")]
    LeftHypersurface(f64),
}

impl Error {
    pub(crate) fn scenario(path: impl Into<String>, message: impl ToString) -> Self {
        Error::Scenario {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn from_parse(path: impl Into<String>, source: &str, e: &ParseError) -> Self {
        Error::scenario(path, format!("{e} in `{source}`"))
    }

    pub(crate) fn from_bind(path: impl Into<String>, e: &BindError) -> Self {
        Error::scenario(path, e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
