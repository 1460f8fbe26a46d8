use serde::Serialize;

use crate::dsl::Diagnostic;
use crate::engine::EngineError;
use crate::simulation::SimulationError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("missing or invalid fields: {}", .0.join(", "))]
    Validation(Vec<String>),
    #[error("type mismatch: {}", .0.join(", "))]
    TypeMismatch(Vec<String>),
    #[error("a motivation is required for `{0}`")]
    MotivationRequired(String),
    #[error("invalid {field}: {value}")]
    InvalidQuery { field: &'static str, value: String },
    #[error("rule text is invalid")]
    InvalidRule(Vec<Diagnostic>),
    #[error("depth {depth} is out of range 1..={max}")]
    DepthOutOfRange { depth: usize, max: usize },
    #[error("authentication required")]
    Unauthorized,
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("not permitted")]
    Forbidden,
    #[error("{0} not found")]
    NotFound(String),
    #[error("unknown act `{0}`")]
    UnknownAct(String),
    #[error("name `{0}` is already taken")]
    DuplicateName(String),
    #[error("act `{0}` has already been executed")]
    AlreadyExecuted(String),
    #[error("case `{0}` has already been decided")]
    AlreadyDecided(String),
    #[error("storage failure: {0}")]
    Storage(String),
}

/// JSON body of every error response.
#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Validation(_) => "validation",
            ServiceError::TypeMismatch(_) => "type_mismatch",
            ServiceError::MotivationRequired(_) => "motivation_required",
            ServiceError::InvalidQuery { .. } => "invalid_query",
            ServiceError::InvalidRule(_) => "invalid_rule",
            ServiceError::DepthOutOfRange { .. } => "depth_out_of_range",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::InvalidCredentials => "invalid_credentials",
            ServiceError::Forbidden => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::UnknownAct(_) => "unknown_act",
            ServiceError::DuplicateName(_) => "duplicate_name",
            ServiceError::AlreadyExecuted(_) => "already_executed",
            ServiceError::AlreadyDecided(_) => "already_decided",
            ServiceError::Storage(_) => "storage",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            ServiceError::Validation(_)
            | ServiceError::TypeMismatch(_)
            | ServiceError::MotivationRequired(_)
            | ServiceError::InvalidQuery { .. }
            | ServiceError::InvalidRule(_)
            | ServiceError::DepthOutOfRange { .. } => 400,
            // one authorization level: a refused permission is reported like
            // a missing login
            ServiceError::Unauthorized
            | ServiceError::InvalidCredentials
            | ServiceError::Forbidden => 401,
            ServiceError::NotFound(_) | ServiceError::UnknownAct(_) => 404,
            ServiceError::DuplicateName(_)
            | ServiceError::AlreadyExecuted(_)
            | ServiceError::AlreadyDecided(_) => 409,
            ServiceError::Storage(_) => 500,
        }
    }

    pub fn fields(&self) -> Option<Vec<String>> {
        match self {
            ServiceError::Validation(f) | ServiceError::TypeMismatch(f) => Some(f.clone()),
            ServiceError::MotivationRequired(_) => Some(vec!["motivation".into()]),
            ServiceError::InvalidQuery { field, .. } => Some(vec![field.to_string()]),
            ServiceError::DepthOutOfRange { .. } => Some(vec!["depth".into()]),
            _ => None,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.code(),
            message: self.to_string(),
            fields: self.fields(),
            diagnostics: match self {
                ServiceError::InvalidRule(d) => Some(d.clone()),
                _ => None,
            },
        }
    }
}

impl From<EngineError> for ServiceError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::UnknownAct(a) => ServiceError::UnknownAct(a),
            EngineError::UnknownFact(f) => ServiceError::Validation(vec![f]),
            EngineError::TypeMismatch { fact, .. } => ServiceError::TypeMismatch(vec![fact]),
            EngineError::MotivationRequired(a) => ServiceError::MotivationRequired(a),
            EngineError::AlreadyExecuted(a) => ServiceError::AlreadyExecuted(a),
        }
    }
}

impl From<SimulationError> for ServiceError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::UnknownRule(r) => ServiceError::NotFound(format!("rule `{r}`")),
            SimulationError::UnknownVersion { rule, version } => {
                ServiceError::NotFound(format!("version `{version}` of rule `{rule}`"))
            }
            SimulationError::InvalidRule(d) => ServiceError::InvalidRule(d),
            SimulationError::RuleMismatch { .. } => ServiceError::Validation(vec!["text".into()]),
            SimulationError::DepthOutOfRange { depth, max } => {
                ServiceError::DepthOutOfRange { depth, max }
            }
            SimulationError::UnknownNode(n) => ServiceError::NotFound(format!("node {n}")),
            SimulationError::Engine(m) => ServiceError::Storage(m),
        }
    }
}
