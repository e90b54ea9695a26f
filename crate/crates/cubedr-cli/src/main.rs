mod commands;
mod input;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Cubical de Rham calculus on finite cubical models.
#[derive(Parser, Debug)]
#[command(name = "cubedr", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized suite.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Randomized cases per property (suite defaults otherwise).
    #[arg(long, global = true)]
    cases: Option<usize>,
    /// Denominator of the sample grids.
    #[arg(long, global = true)]
    grid_denominator: Option<u32>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Replace every numeric tolerance with this value.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Betti numbers of a model.
    Cohomology { model: String },
    /// Mayer-Vietoris sequence of a two-set cover.
    Mv { model: String, cover: String },
    /// Run a property suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Subdivide the cube (or a given complex) until it is subordinate to a cover.
    Subdivide {
        model: String,
        plot: String,
        cover: String,
        #[arg(long, default_value_t = 6)]
        iters: usize,
        /// Start from this complex instead of the undivided cube.
        #[arg(long)]
        complex: Option<String>,
        /// Write the subdivided complex here instead of standard output.
        #[arg(long, short)]
        output: Option<String>,
    },
    /// Integrate 1-forms along paths.
    Integrate {
        forms: String,
        paths: String,
        #[arg(long)]
        model: String,
        /// Only this form.
        #[arg(long)]
        form: Option<String>,
        /// Only this path.
        #[arg(long)]
        path: Option<String>,
        /// Traverse the paths backwards.
        #[arg(long)]
        reverse: bool,
    },
    /// Build and check a partition of unity on a family of plots.
    Pou {
        model: String,
        cover: String,
        plots: String,
        #[arg(long, value_enum, default_value_t = Base::Urysohn)]
        base: Base,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Forms,
    Cubes,
    Relations,
    Pou,
    Hurewicz,
    Excision,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Base {
    Urysohn,
    ThreeValued,
}

/// What a command produced: text, the same content as JSON, and whether
/// every check in it passed.
pub struct Report {
    pub text: String,
    pub json: serde_json::Value,
    pub ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = commands::Config {
        seed: cli.seed,
        cases: cli.cases,
        grid: cli.grid_denominator,
        tolerance: cli.tolerance,
    };
    let result = match cli.command {
        Command::Cohomology { model } => commands::cohomology(&model),
        Command::Mv { model, cover } => commands::mv(&model, &cover),
        Command::Verify { suite } => Ok(verify::run(suite, &cfg)),
        Command::Subdivide { model, plot, cover, iters, complex, output } => {
            commands::subdivide(&cfg, &model, &plot, &cover, iters, complex.as_deref(), output.as_deref())
        }
        Command::Integrate { forms, paths, model, form, path, reverse } => {
            commands::integrate(&model, &forms, &paths, form.as_deref(), path.as_deref(), reverse)
        }
        Command::Pou { model, cover, plots, base } => commands::pou(&cfg, &model, &cover, &plots, base),
    };
    match result {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("json"));
            } else {
                print!("{}", report.text);
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("cubedr: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
