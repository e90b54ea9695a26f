//! Models, covers, forms and subdivision pairs shipped with the library.

use crate::cubicalset::{CubicalComplex, SubdivPair};
use crate::hurewicz::PathPlot;
use crate::model::{parse_forms, parse_plots, CellForm, Cover, Model};
use crate::polyform::PolyMap;
use crate::{Error, Result};

/// Text of one shipped model and its companion files.
#[derive(Clone, Copy, Debug)]
pub struct ModelFiles {
    pub name: &'static str,
    pub model: &'static str,
    pub cover: Option<&'static str>,
    pub forms: &'static str,
    pub loops: &'static str,
    pub plots: Option<&'static str>,
}

macro_rules! data {
    ($dir:literal, $name:literal, $ext:literal) => {
        include_str!(concat!("../data/", $dir, "/", $name, ".", $ext))
    };
}

pub const MODELS: &[ModelFiles] = &[
    ModelFiles {
        name: "point",
        model: data!("models", "point", "model"),
        cover: None,
        forms: data!("models", "point", "forms"),
        loops: data!("models", "point", "loops"),
        plots: None,
    },
    ModelFiles {
        name: "interval",
        model: data!("models", "interval", "model"),
        cover: Some(data!("models", "interval", "cover")),
        forms: data!("models", "interval", "forms"),
        loops: data!("models", "interval", "loops"),
        plots: Some(data!("models", "interval", "plots")),
    },
    ModelFiles {
        name: "circle",
        model: data!("models", "circle", "model"),
        cover: Some(data!("models", "circle", "cover")),
        forms: data!("models", "circle", "forms"),
        loops: data!("models", "circle", "loops"),
        plots: Some(data!("models", "circle", "plots")),
    },
    ModelFiles {
        name: "sphere",
        model: data!("models", "sphere", "model"),
        cover: Some(data!("models", "sphere", "cover")),
        forms: data!("models", "sphere", "forms"),
        loops: data!("models", "sphere", "loops"),
        plots: None,
    },
    ModelFiles {
        name: "torus",
        model: data!("models", "torus", "model"),
        cover: Some(data!("models", "torus", "cover")),
        forms: data!("models", "torus", "forms"),
        loops: data!("models", "torus", "loops"),
        plots: Some(data!("models", "torus", "plots")),
    },
    ModelFiles {
        name: "rp2",
        model: data!("models", "rp2", "model"),
        cover: None,
        forms: data!("models", "rp2", "forms"),
        loops: data!("models", "rp2", "loops"),
        plots: None,
    },
    ModelFiles {
        name: "wedge",
        model: data!("models", "wedge", "model"),
        cover: Some(data!("models", "wedge", "cover")),
        forms: data!("models", "wedge", "forms"),
        loops: data!("models", "wedge", "loops"),
        plots: None,
    },
];

pub fn files(name: &str) -> Result<&'static ModelFiles> {
    MODELS
        .iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::arg(format!("no shipped model named '{name}'")))
}

/// A parsed shipped model with everything that comes with it.
#[derive(Clone, Debug)]
pub struct Shipped {
    pub name: &'static str,
    pub model: Model,
    pub cover: Option<Cover>,
    pub forms: Vec<CellForm>,
    pub loops: Vec<PathPlot>,
    pub plots: Vec<PolyMap>,
}

impl Shipped {
    pub fn form(&self, name: &str) -> Option<&CellForm> {
        self.forms.iter().find(|f| f.name == name)
    }

    /// Forms other than the one named `exact`.
    pub fn generators(&self) -> Vec<CellForm> {
        self.forms.iter().filter(|f| f.name != "exact").cloned().collect()
    }
}

pub fn load(name: &str) -> Result<Shipped> {
    let f = files(name)?;
    let model = Model::parse(f.model)?;
    let cover = f.cover.map(|c| Cover::parse(c, &model)).transpose()?;
    let forms = parse_forms(f.forms, &model)?;
    let loops = PathPlot::parse_all(f.loops, &model)?;
    let plots = match f.plots {
        Some(p) => parse_plots(p, model.ambient())?,
        None => Vec::new(),
    };
    Ok(Shipped { name: f.name, model, cover, forms, loops, plots })
}

pub fn all() -> Result<Vec<Shipped>> {
    MODELS.iter().map(|m| load(m.name)).collect()
}

/// Model, cover and plot for one subdivision example; the complex is the
/// undivided cube of the plot's source dimension.
#[derive(Clone, Debug)]
pub struct ShippedPair {
    pub name: &'static str,
    pub model: Model,
    pub cover: Cover,
    pub pair: SubdivPair,
}

const PAIRS: &[(&str, &str, &str, &str)] = &[
    ("interval", data!("pairs", "interval", "model"), data!("pairs", "interval", "cover"), data!("pairs", "interval", "plot")),
    ("circle", data!("pairs", "circle", "model"), data!("pairs", "circle", "cover"), data!("pairs", "circle", "plot")),
    ("square", data!("pairs", "square", "model"), data!("pairs", "square", "cover"), data!("pairs", "square", "plot")),
    ("cube", data!("pairs", "cube", "model"), data!("pairs", "cube", "cover"), data!("pairs", "cube", "plot")),
    ("interval-offset", data!("pairs", "interval-offset", "model"), data!("pairs", "interval-offset", "cover"), data!("pairs", "interval-offset", "plot")),
    ("square-offset", data!("pairs", "square-offset", "model"), data!("pairs", "square-offset", "cover"), data!("pairs", "square-offset", "plot")),
    ("square-corners", data!("pairs", "square-corners", "model"), data!("pairs", "square-corners", "cover"), data!("pairs", "square-corners", "plot")),
    ("cube-offset", data!("pairs", "cube-offset", "model"), data!("pairs", "cube-offset", "cover"), data!("pairs", "cube-offset", "plot")),
];

pub fn pair_names() -> Vec<&'static str> {
    PAIRS.iter().map(|p| p.0).collect()
}

/// Model, cover and plot text of a shipped pair.
pub fn pair_files(name: &str) -> Result<(&'static str, &'static str, &'static str)> {
    PAIRS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| (p.1, p.2, p.3))
        .ok_or_else(|| Error::arg(format!("no shipped subdivision pair named '{name}'")))
}

pub fn load_pair(name: &str) -> Result<ShippedPair> {
    let &(name, m, c, p) = PAIRS
        .iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| Error::arg(format!("no shipped subdivision pair named '{name}'")))?;
    let model = Model::parse(m)?;
    let cover = Cover::parse(c, &model)?;
    let plot = parse_plots(p, model.ambient())?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Model(format!("pair {name} has no plot")))?;
    let pair = SubdivPair::new(CubicalComplex::unit(plot.source_dim()), plot)?;
    Ok(ShippedPair { name, model, cover, pair })
}

pub fn pairs() -> Result<Vec<ShippedPair>> {
    PAIRS.iter().map(|p| load_pair(p.0)).collect()
}
