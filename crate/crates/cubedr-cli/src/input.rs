//! Reading input files. A name of the form `@torus` refers to the data
//! shipped with the library instead of a path.

use std::fmt;
use std::fs;

use cubedr::shipped;

#[derive(Debug)]
pub enum Failure {
    Lib(cubedr::Error),
    Io { path: String, err: std::io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        use cubedr::Error::*;
        match self {
            Failure::Io { .. } => 2,
            Failure::Lib(e) => match e {
                Argument(_) | Parse { .. } => 2,
                Model(_) | Form(_) | Degenerate(_) => 3,
                UnsupportedCover(_) | Coverage(_) => 4,
                NonTermination { .. } => 5,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io { path, err } => write!(f, "cannot read {path}: {err}"),
        }
    }
}

impl From<cubedr::Error> for Failure {
    fn from(e: cubedr::Error) -> Self {
        Failure::Lib(e)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Model,
    Cover,
    Forms,
    Loops,
    Plots,
    PairModel,
    PairCover,
    PairPlot,
}

fn missing(kind: Kind, name: &str) -> Failure {
    Failure::Lib(cubedr::Error::Argument(format!("shipped model '{name}' has no {kind:?} file").to_lowercase()))
}

pub fn read(source: &str, kind: Kind) -> Result<String, Failure> {
    let Some(name) = source.strip_prefix('@') else {
        return fs::read_to_string(source).map_err(|err| Failure::Io { path: source.to_string(), err });
    };
    let text = match kind {
        Kind::PairModel | Kind::PairCover | Kind::PairPlot => {
            let (m, c, p) = shipped::pair_files(name)?;
            match kind {
                Kind::PairModel => m,
                Kind::PairCover => c,
                _ => p,
            }
        }
        _ => {
            let f = shipped::files(name)?;
            match kind {
                Kind::Model => f.model,
                Kind::Cover => f.cover.ok_or_else(|| missing(kind, name))?,
                Kind::Forms => f.forms,
                Kind::Loops => f.loops,
                _ => f.plots.ok_or_else(|| missing(kind, name))?,
            }
        }
    };
    Ok(text.to_string())
}
