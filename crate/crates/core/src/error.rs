use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position x = {x} lies outside the domain [0, {length}]")]
    Domain { x: f64, length: f64 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("positivity violation: {component}[{node}] = {value:e} at t = {time}")]
    Positivity {
        component: &'static str,
        node: usize,
        time: f64,
        value: f64,
    },

    #[error("boundedness violation: {component} reached {value} above bound {bound} at t = {time}")]
    Boundedness {
        component: &'static str,
        value: f64,
        bound: f64,
        time: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("root not bracketed in [{lo:e}, {hi:e}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("division-domain error: {0}")]
    DivisionDomain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag, also used as the sweep row status.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Validation(_) => "validation",
            Error::Assembly(_) => "assembly",
            Error::Singular { .. } => "singular",
            Error::Positivity { .. } => "positivity-violation",
            Error::Boundedness { .. } => "boundedness-violation",
            Error::NonConvergence { what, .. } => match *what {
                "power iteration" => "eig-nonconverged",
                "periodic orbit" => "orbit-nonconverged",
                _ => "nonconverged",
            },
            Error::RootNotBracketed { .. } => "root-not-bracketed",
            Error::DivisionDomain(_) => "division-domain",
            Error::Unsupported(_) => "unsupported",
            Error::Config(_) => "config",
            Error::Expression(_) => "expression",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
