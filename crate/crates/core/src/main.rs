use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lowmach::cases::CaseRegistry;
use lowmach::config::{describe, CaseConfig};
use lowmach::integrators::{euler_tableau, heun2_tableau, heun3_tableau, rk4_tableau};
use lowmach::run::{run, RunOutcome};
use lowmach::stability::{
    ab_polys, ab_root_locus, advection_spectrum, max_cfl, rk_region_boundary, StabilityMethod,
};
use lowmach::Error;

const EXIT_CONFIG: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "lowmach",
    version,
    about = "Finite-volume Euler solver for low-Mach flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow case.
    Run(Box<RunArgs>),
    /// List the built-in cases.
    ListCases,
    /// Print stability region boundaries and root loci as `kind,method,re,im`.
    Stability {
        /// euler, heun2, heun3, rk4, ab1..ab5 or all
        #[arg(long, default_value = "all")]
        method: String,
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Print the semidiscrete advection spectrum as `kind,method,re,im`.
    Spectrum {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Print the largest stable step on the hull of the advection spectrum.
    Maxcfl {
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// INI config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ni: Option<usize>,
    #[arg(long)]
    nj: Option<usize>,
    #[arg(long)]
    mach: Option<f64>,
    #[arg(long)]
    order: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `section.key=value` overrides, applied last
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved configuration and exit
    #[arg(long)]
    dry_run: bool,
}

fn resolve_config(args: &RunArgs, registry: &CaseRegistry) -> lowmach::Result<CaseConfig> {
    let mut cfg = match (&args.config, &args.case) {
        (Some(path), case) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg = match case {
                Some(name) => registry.default_config(name)?,
                None => {
                    let name = CaseConfig::case_name_in(&text)?
                        .ok_or_else(|| Error::Config("config has no [case] name; pass --case".into()))?;
                    registry.default_config(&name)?
                }
            };
            cfg.apply_ini_str(&text)?;
            if let Some(name) = case {
                cfg.case = name.clone();
            }
            cfg
        }
        (None, Some(name)) => registry.default_config(name)?,
        (None, None) => return Err(Error::Config("pass --config FILE or --case NAME".into())),
    };
    if let Some(v) = &args.solver {
        cfg.solver.name = v.clone();
    }
    if let Some(v) = &args.integrator {
        cfg.time.integrator = v.clone();
    }
    if let Some(v) = args.cfl {
        cfg.time.cfl = v;
    }
    if let Some(v) = args.tend {
        cfg.time.t_end = v;
        cfg.output.cadence = cfg.output.cadence.min(v);
    }
    if let Some(v) = &args.out {
        cfg.output.dir = v.clone();
    }
    if let Some(v) = args.ni {
        cfg.grid.ni = v;
    }
    if let Some(v) = args.nj {
        cfg.grid.nj = v;
    }
    if let Some(v) = args.mach {
        cfg.mach = v;
    }
    if let Some(v) = args.order {
        cfg.scheme.order = v;
    }
    if let Some(v) = args.seed {
        cfg.noise_seed = v;
    }
    for s in &args.set {
        cfg.set_assignment(s)?;
    }
    Ok(cfg)
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        e if e.is_breakdown() => 2,
        _ => EXIT_CONFIG,
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let registry = CaseRegistry::builtin();
    let cfg = match resolve_config(&args, &registry) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.dry_run {
        print!("{}", cfg.to_ini_string());
        return match registry.build(&cfg) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(error_code(&e))
            }
        };
    }
    eprintln!("running {}", describe(&cfg));
    match run(&cfg, &registry) {
        Ok(RunOutcome::Completed { steps, t, steady }) => {
            eprintln!(
                "completed: {steps} steps, t = {t}{}",
                if steady { " (steady)" } else { "" }
            );
            ExitCode::SUCCESS
        }
        Ok(RunOutcome::Breakdown(b)) => {
            let cell = b
                .cell
                .map_or("unknown cell".to_string(), |(i, j)| format!("cell ({i}, {j})"));
            eprintln!("breakdown at step {} t = {} in {cell}: {}", b.step, b.t, b.reason);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn rk_methods() -> Vec<lowmach::integrators::ButcherTableau> {
    vec![euler_tableau(), heun2_tableau(), heun3_tableau(), rk4_tableau()]
}

fn cmd_stability(method: &str, samples: usize) -> lowmach::Result<()> {
    let mut out = io::BufWriter::new(io::stdout().lock());
    writeln!(out, "kind,method,re,im")?;
    let mut found = false;
    for tab in rk_methods() {
        if method == "all" || method == tab.name {
            rk_region_boundary(&tab, samples).write_rows(&mut out)?;
            found = true;
        }
    }
    for k in 1..=5 {
        let polys = ab_polys(k)?;
        if method == "all" || method == polys.label {
            ab_root_locus(&polys, samples).write_rows(&mut out)?;
            found = true;
        }
    }
    if !found {
        return Err(Error::Config(format!("unknown method '{method}'")));
    }
    out.flush()?;
    Ok(())
}

fn cmd_maxcfl(method: &str, eps: f64, n: usize) -> lowmach::Result<f64> {
    let spectrum = advection_spectrum(n, eps);
    if let Some(tab) = rk_methods().into_iter().find(|t| t.name == method) {
        return Ok(max_cfl(StabilityMethod::RungeKutta(&tab), &spectrum));
    }
    for k in 1..=5 {
        let polys = ab_polys(k)?;
        if polys.label == method {
            return Ok(max_cfl(StabilityMethod::Multistep(&polys), &spectrum));
        }
    }
    Err(Error::Config(format!("unknown method '{method}'")))
}

fn report(res: lowmach::Result<()>) -> ExitCode {
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(*args),
        Command::ListCases => {
            let registry = CaseRegistry::builtin();
            for name in registry.names() {
                let case = registry.get(name).expect("listed case exists");
                println!("{name}\t{}", case.description());
            }
            ExitCode::SUCCESS
        }
        Command::Stability { method, samples } => report(cmd_stability(&method, samples)),
        Command::Spectrum { eps, n } => report((|| {
            if n < 3 {
                return Err(Error::Config("spectrum needs n >= 3".into()));
            }
            let mut out = io::stdout().lock();
            writeln!(out, "kind,method,re,im")?;
            advection_spectrum(n, eps).write_rows(&mut out)?;
            Ok(())
        })()),
        Command::Maxcfl { method, eps, n } => report(cmd_maxcfl(&method, eps, n).map(|v| println!("{v:.6}"))),
    }
}
