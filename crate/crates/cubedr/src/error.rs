use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("model error: {0}")]
    Model(String),
    #[error("form error: {0}")]
    Form(String),
    #[error("geometric degeneracy: {0}")]
    Degenerate(String),
    #[error("unsupported cover: {0}")]
    UnsupportedCover(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("no termination after {iters} iterations (epsilon {}, diameter {diameter})", show_eps(.epsilon))]
    NonTermination {
        iters: usize,
        epsilon: Option<f64>,
        diameter: f64,
    },
}

fn show_eps(e: &Option<f64>) -> String {
    e.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
