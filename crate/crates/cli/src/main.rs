use std::path::PathBuf;
use std::process::ExitCode;

use boostdyn::analysis::{self, CompareConfig, Model, Reference, SweepSpec};
use boostdyn::oracle::{self, AveragedConfig};
use clap::{Parser, Subcommand, ValueEnum};

mod config;
mod emit;
mod error;

use config::{Format, RunConfig};
use emit::{num, opt, Table};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "boostdyn",
    version,
    about = "Transient models of a non-ideal boost converter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form steady level and first extremum for the configured event.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "tfm")]
        model: ModelArg,
    },
    /// Numerical waveform from the averaged or switched oracle.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "switched")]
        engine: Engine,
        #[arg(long, value_enum, default_value = "on")]
        parasitics: Toggle,
    },
    /// Every model and oracle side by side, with errors against a reference.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Metric grid over two component parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "tfm")]
        model: ModelArg,
    },
    /// Steepest-descent path that lowers the peak output.
    Descend {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "tfm")]
        model: ModelArg,
    },
    /// Energy balance of a switched run over a time window.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "on")]
        parasitics: Toggle,
    },
}

#[derive(clap::Args)]
struct Common {
    /// JSON run description.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ebm,
    Tfm,
    Fr,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ebm => Model::Ebm,
            ModelArg::Tfm => Model::Tfm,
            ModelArg::Fr => Model::Fr,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Averaged,
    Switched,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

struct Ctx {
    config: RunConfig,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, CliError> {
        let config = RunConfig::load(&common.config)?;
        Ok(Self {
            out: common.out.clone().or_else(|| config.output.path.clone()),
            format: common.format.or(config.output.format),
            config,
        })
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, bytes: &[u8]) -> Result<(), CliError> {
        emit::write(self.out.as_deref(), bytes)
    }
}

fn predict(ctx: &Ctx, model: Model) -> Result<(), CliError> {
    let c = &ctx.config;
    let pred = analysis::predict(&c.params, &c.event, model)?;
    if let Some(path) = &c.output.waveform {
        let dt = c.solver.dt.unwrap_or(c.params.period() / c.steps_per_cycle() as f64);
        let w = analysis::predict_waveform(&c.params, &c.event, model, dt, c.t_end()?)?;
        emit::write(Some(path), &emit::waveform_csv(&w))?;
    }
    let bytes = match ctx.format(Format::Json) {
        Format::Json => emit::json(&pred),
        Format::Csv => {
            let m = &pred.metrics;
            let mut t = Table::new(&["model", "v_steady", "v_max", "t_p", "overshoot_pct", "flags"]);
            t.row(&[
                model.name().to_string(),
                num(m.v_steady),
                num(m.v_max),
                opt(m.t_p),
                num(m.overshoot_pct),
                flags(&pred.flags),
            ]);
            t.into_bytes()
        }
    };
    ctx.emit(&bytes)
}

fn flags(f: &[boostdyn::Flag]) -> String {
    f.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn report_flags(f: &[boostdyn::Flag]) {
    if !f.is_empty() {
        eprintln!("{}", serde_json::json!({ "flags": f }));
    }
}

fn simulate(ctx: &Ctx, engine: Engine, parasitics: Toggle) -> Result<(), CliError> {
    let c = &ctx.config;
    let t_end = c.t_end()?;
    let include = parasitics == Toggle::On;
    let events = [c.event];
    let w = match engine {
        Engine::Averaged => {
            let default = AveragedConfig::for_params(&c.params, t_end, include);
            let config = AveragedConfig {
                dt: c.solver.dt.unwrap_or(default.dt),
                ..default
            };
            oracle::simulate_averaged(&c.params, &events, &config)?
        }
        Engine::Switched => {
            let p = if include {
                c.params
            } else {
                c.params.without_parasitics()
            };
            let run = oracle::simulate_switched(&p, &events, c.steps_per_cycle(), t_end)?;
            report_flags(&run.flags);
            run.waveform
        }
    };
    ctx.emit(&match ctx.format(Format::Csv) {
        Format::Csv => emit::waveform_csv(&w),
        Format::Json => emit::waveform_json(&w),
    })
}

fn compare(ctx: &Ctx) -> Result<(), CliError> {
    let c = &ctx.config;
    let config = CompareConfig {
        t_end: c.t_end()?,
        steps_per_cycle: c.steps_per_cycle(),
        reference: c.reference.clone().unwrap_or(Reference::Row {
            name: "switched".into(),
        }),
    };
    let table = analysis::compare_models(&c.params, &c.event, &config)?;
    ctx.emit(&match ctx.format(Format::Csv) {
        Format::Json => emit::json(&table),
        Format::Csv => {
            let mut t = Table::new(&[
                "model",
                "v_steady",
                "v_max",
                "t_p",
                "steady_error_pct",
                "dynamic_error_pct",
                "rmse",
                "flags",
            ]);
            for r in &table.rows {
                t.row(&[
                    r.model.clone(),
                    num(r.v_steady),
                    num(r.v_max),
                    opt(r.t_p),
                    num(r.steady_error_pct),
                    num(r.dynamic_error_pct),
                    opt(r.rmse),
                    flags(&r.flags),
                ]);
            }
            t.into_bytes()
        }
    })
}

fn sweep(ctx: &Ctx, model: Model) -> Result<(), CliError> {
    let c = &ctx.config;
    let block = c.sweep()?;
    let spec = SweepSpec {
        axis1: block.axis1,
        axis2: block.axis2,
        metric: block.metric,
        model,
        event: c.event,
    };
    let grid = analysis::sweep(&c.params, &spec)?;
    ctx.emit(&match ctx.format(Format::Csv) {
        Format::Json => emit::json(&grid),
        Format::Csv => {
            // corner cell names both axes; the first column holds axis1 values
            let mut header = vec![format!("{}\\{}", spec.axis1.param, spec.axis2.param)];
            header.extend(spec.axis2.values().into_iter().map(num));
            let mut t = Table::new(&header);
            for (x, row) in spec.axis1.values().into_iter().zip(&grid.values) {
                let mut fields = vec![num(x)];
                fields.extend(row.iter().map(|v| opt(*v)));
                t.row(&fields);
            }
            t.into_bytes()
        }
    })
}

fn descend(ctx: &Ctx, model: Model) -> Result<(), CliError> {
    let c = &ctx.config;
    let block = c.descent()?;
    let path = analysis::steepest_descent(
        &c.params,
        &c.event,
        model,
        &block.free,
        block.constraint,
        block.max_steps,
    )?;
    ctx.emit(&match ctx.format(Format::Csv) {
        Format::Json => emit::json(&path),
        Format::Csv => {
            let mut header = vec!["step".to_string()];
            header.extend(path.free.iter().map(|p| p.name().to_string()));
            header.extend(["v_max".to_string(), "steady_output".to_string()]);
            let mut t = Table::new(&header);
            for (k, pt) in path.points.iter().enumerate() {
                let mut fields = vec![k.to_string()];
                fields.extend(path.free.iter().map(|&p| num(pt.params.get(p))));
                fields.extend([num(pt.v_max), num(pt.steady_output)]);
                t.row(&fields);
            }
            t.into_bytes()
        }
    })
}

fn audit(ctx: &Ctx, parasitics: Toggle) -> Result<(), CliError> {
    let c = &ctx.config;
    let window = c.audit()?;
    let p = if parasitics == Toggle::On {
        c.params
    } else {
        c.params.without_parasitics()
    };
    let run = oracle::simulate_switched(&p, &[c.event], c.steps_per_cycle(), c.t_end()?)?;
    report_flags(&run.flags);
    let e = oracle::energy_audit(&run, window.t0, window.t1)?;
    ctx.emit(&match ctx.format(Format::Json) {
        Format::Json => emit::json(&e),
        Format::Csv => {
            let mut t = Table::new(&["e_in", "e_l", "e_c", "e_r", "e_vd", "e_rm", "e_rl", "e_rc", "residual"]);
            t.row(&[e.e_in, e.e_l, e.e_c, e.e_r, e.e_vd, e.e_rm, e.e_rl, e.e_rc, e.residual].map(num));
            t.into_bytes()
        }
    })
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BOOSTDYN_THREADS") else {
        return Ok(());
    };
    let bad = || CliError::Config {
        field: Some("BOOSTDYN_THREADS".into()),
        message: format!("BOOSTDYN_THREADS must be a positive integer, got `{raw}`"),
    };
    let n: usize = raw.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    // only fails if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let ctx = |c: &Common| Ctx::new(c);
    match &cli.command {
        Command::Predict { common, model } => predict(&ctx(common)?, (*model).into()),
        Command::Simulate {
            common,
            engine,
            parasitics,
        } => simulate(&ctx(common)?, *engine, *parasitics),
        Command::Compare { common } => compare(&ctx(common)?),
        Command::Sweep { common, model } => sweep(&ctx(common)?, (*model).into()),
        Command::Descend { common, model } => descend(&ctx(common)?, (*model).into()),
        Command::Audit { common, parasitics } => audit(&ctx(common)?, *parasitics),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
