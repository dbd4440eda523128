use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use compat_fem::diagnostics::{dispersion_spectrum_1d, dof_ratio_audit, format_ratio, infsup_constant, SpacePair};
use compat_fem::mesh::parse_mesh_shape;
use compat_fem::scenario::{
    convergence_study, run_scenario, run_scenario_in, ConvergenceStudy, ModelKind, ScenarioConfig, StudyModel,
};
use compat_fem::space::{make_space, parse_space_name};
use compat_fem::{Error, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "compat-fem",
    version,
    about = "Compatible finite element wave and shallow water runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the 1D compatible wave system.
    Wave1d(RunArgs),
    /// Run the linear rotating shallow water equations.
    SweLinear(RunArgs),
    /// Run the nonlinear rotating shallow water equations.
    SweNonlinear(RunArgs),
    /// Inf-sup constants of a space pair on a sequence of meshes.
    Infsup {
        #[arg(long)]
        pair: SpacePair,
        /// Element counts (cells per direction for quad pairs).
        #[arg(long, value_delimiter = ',', required = true)]
        ne: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Frequencies of the 1D wave system for a space pair.
    Dispersion {
        #[arg(long)]
        pair: SpacePair,
        #[arg(long)]
        ne: usize,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exact ratio dim(V1)/dim(V2) for two spaces on one mesh.
    Audit {
        /// Space such as `rt0`, `cg2` or `dg1`.
        #[arg(long)]
        v1: String,
        #[arg(long)]
        v2: String,
        /// `NXxNY` for a periodic quad mesh or `NE` for an interval.
        #[arg(long)]
        mesh: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Refinement study against an analytic solution.
    Converge {
        #[arg(long, value_enum)]
        model: StudyKind,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        levels: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        cfl: f64,
        #[arg(long, default_value_t = 0.25)]
        final_time: f64,
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set dt=0.005`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; takes precedence over COMPAT_FEM_OUTPUT_DIR and the file.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    show_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Wave1d,
    SweLinear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        e if e.is_config_error() => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Wave1d(args) => scenario(ModelKind::Wave1D, args),
        Command::SweLinear(args) => scenario(ModelKind::SweLinear, args),
        Command::SweNonlinear(args) => scenario(ModelKind::SweNonlinear, args),
        Command::Infsup { pair, ne, csv } => infsup(pair, &ne, csv.as_deref()),
        Command::Dispersion { pair, ne, length, csv } => dispersion(pair, ne, length, csv.as_deref()),
        Command::Audit { v1, v2, mesh, csv } => audit(&v1, &v2, &mesh, csv.as_deref()),
        Command::Converge {
            model,
            degree,
            levels,
            cfl,
            final_time,
            amplitude,
            csv,
        } => {
            let model = match model {
                StudyKind::Wave1d => StudyModel::Wave1D { degree },
                StudyKind::SweLinear => StudyModel::SweGravityWave { degree },
            };
            let study = ConvergenceStudy {
                model,
                levels,
                cfl,
                final_time,
                amplitude,
            };
            converge(&study, csv.as_deref())
        }
    }
}

fn load_config(model: ModelKind, args: &RunArgs) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::for_model(model);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        cfg.apply_text(&text)?;
    }
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if cfg.model != model {
        return Err(Error::Config {
            line: None,
            key: Some("model".into()),
            message: format!("`{}` does not match the `{model}` subcommand", cfg.model),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario(model: ModelKind, args: RunArgs) -> Result<()> {
    let cfg = load_config(model, &args)?;
    if args.show_config {
        print!("{}", cfg.to_config_string());
        return Ok(());
    }
    let out = match &args.output_dir {
        Some(dir) => run_scenario_in(&cfg, dir)?,
        None => run_scenario(&cfg)?,
    };
    println!("wrote {} ({} rows)", out.diagnostics_path.display(), out.records.len());
    for p in &out.field_paths {
        println!("wrote {}", p.display());
    }
    if let (Some(first), Some(last)) = (out.records.first(), out.records.last()) {
        println!(
            "t = {:.6}: mass change {:.3e}, energy change {:.3e}, enstrophy change {:.3e}, balance residual {:.3e}",
            last.time,
            last.mass - first.mass,
            last.energy - first.energy,
            last.enstrophy - first.enstrophy,
            last.balance_residual
        );
    }
    Ok(())
}

fn infsup(pair: SpacePair, ne: &[usize], csv_path: Option<&Path>) -> Result<()> {
    let mut rows = Vec::new();
    for &n in ne {
        let beta = infsup_constant(pair, n)?;
        println!("{pair} ne={n} infsup={beta:.12}");
        rows.push(vec![pair.to_string(), n.to_string(), format!("{beta:?}")]);
    }
    write_csv(csv_path, &["pair", "ne", "infsup"], &rows)
}

fn dispersion(pair: SpacePair, ne: usize, length: f64, csv_path: Option<&Path>) -> Result<()> {
    let r = dispersion_spectrum_1d(pair, ne, length)?;
    println!("{pair} ne={ne} modes={} zero_modes={}", r.frequencies.len(), r.n_zero);
    match r.lowest_nonzero() {
        Some(w) => println!("lowest nonzero frequency {w:.12}"),
        None => println!("no nonzero frequencies"),
    }
    let rows: Vec<Vec<String>> = r
        .frequencies
        .iter()
        .enumerate()
        .map(|(i, w)| vec![i.to_string(), format!("{w:?}")])
        .collect();
    write_csv(csv_path, &["mode", "frequency"], &rows)
}

fn audit(v1: &str, v2: &str, mesh: &str, csv_path: Option<&Path>) -> Result<()> {
    let mesh = Arc::new(parse_mesh_shape(mesh)?);
    let (f1, d1) = parse_space_name(v1)?;
    let (f2, d2) = parse_space_name(v2)?;
    let s1 = make_space(&mesh, f1, d1)?;
    let s2 = make_space(&mesh, f2, d2)?;
    let r = dof_ratio_audit(&s1, &s2)?;
    println!("dim({}) = {}, dim({}) = {}", s1.label(), s1.dim(), s2.label(), s2.dim());
    println!("{}", format_ratio(&r));
    write_csv(
        csv_path,
        &["v1", "v2", "dim_v1", "dim_v2", "ratio"],
        &[vec![
            s1.label(),
            s2.label(),
            s1.dim().to_string(),
            s2.dim().to_string(),
            r.to_string(),
        ]],
    )
}

fn converge(study: &ConvergenceStudy, csv_path: Option<&Path>) -> Result<()> {
    let table = convergence_study(study)?;
    print!("{table}");
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.cells.to_string(),
                format!("{:?}", r.mesh_size),
                format!("{:?}", r.dt),
                format!("{:?}", r.error),
                r.order.map(|o| format!("{o:?}")).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(csv_path, &["cells", "mesh_size", "dt", "error", "order"], &rows)
}

fn write_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}
