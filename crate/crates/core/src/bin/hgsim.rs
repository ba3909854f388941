use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hgsim::analysis::predict_harmonic_g2_exact;
use hgsim::scenario::{preset, presets, run_to_dir, Format, ScenarioConfig};
use hgsim::{Error, LightKind, LightModel};

#[derive(Parser)]
#[command(name = "hgsim", version, about = "Harmonic generation with fluctuating light: simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in preset.
    Reproduce {
        /// fig1c, fig2, fig3, fig4, fig5-mech or table1.
        preset: String,
        /// Print the expanded scenario file instead of running it.
        #[arg(long)]
        emit_config: bool,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Print exact g(n) of the source model and the predicted harmonic g(2).
    GnTable {
        #[arg(long, default_value_t = 8)]
        max_order: u32,
        /// Quadrature ratio; 0 is BSV, 1 is thermal. Repeat for several columns.
        #[arg(long = "quad-ratio", default_values_t = vec![0.0, 1.0])]
        quad_ratios: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        modes: u32,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pulses: Option<u64>,
    /// Output directory.
    #[arg(long, env = "HGSIM_OUT", default_value = "hgsim-out")]
    out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Write per-pulse records.
    #[arg(long, conflicts_with = "no_records")]
    records: bool,
    /// Skip per-pulse records.
    #[arg(long)]
    no_records: bool,
}

impl RunOpts {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(pulses) = self.pulses {
            config.pulses = pulses;
        }
        if self.records {
            config.output.pulse_records = true;
        }
        if self.no_records {
            config.output.pulse_records = false;
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, opts } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Config {
                scenario: config.display().to_string(),
                message: format!("cannot read scenario file: {e}"),
            })?;
            let mut cfg = ScenarioConfig::from_toml(&text)?;
            opts.apply(&mut cfg);
            execute(&cfg, &opts)
        }
        Command::Reproduce { preset: name, emit_config, opts } => {
            let mut cfg = preset(&name)?;
            opts.apply(&mut cfg);
            if emit_config {
                print!("{}", cfg.to_toml()?);
                return Ok(());
            }
            execute(&cfg, &opts)
        }
        Command::GnTable { max_order, quad_ratios, modes } => gn_table(max_order, &quad_ratios, modes),
        Command::Presets => {
            for name in presets::PRESETS {
                println!("{name:<10} {}", presets::describe(name).unwrap_or(""));
            }
            Ok(())
        }
    }
}

fn execute(config: &ScenarioConfig, opts: &RunOpts) -> Result<(), Error> {
    config.validate()?;
    let run = || run_to_dir(config, &opts.out, opts.format);
    let artifacts = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config { scenario: config.scenario_id.clone(), message: format!("--threads: {e}") })?
            .install(run)?,
        None => run()?,
    };
    report(&artifacts.summary, &artifacts.pulse_files);
    Ok(())
}

fn report(summary: &Path, pulses: &[PathBuf]) {
    println!("summary: {}", summary.display());
    for p in pulses {
        println!("pulses:  {}", p.display());
    }
}

fn gn_table(max_order: u32, quad_ratios: &[f64], modes: u32) -> Result<(), Error> {
    let models = quad_ratios
        .iter()
        .map(|&r| LightModel::new(LightKind::GaussianQuadrature, 1.0, r, modes))
        .collect::<Result<Vec<_>, _>>()?;
    let header: Vec<String> = quad_ratios.iter().map(|r| format!("r={r}")).collect();
    println!("g(n), {modes} temporal mode(s)");
    println!("{:>4}  {}", "n", header.iter().map(|h| format!("{h:>24}")).collect::<String>());
    for n in 1..=max_order {
        let cells = models
            .iter()
            .map(|m| Ok(format!("{:>24}", fmt_exact(&m.analytic_gn(n)?))))
            .collect::<Result<String, Error>>()?;
        println!("{n:>4}  {cells}");
    }
    println!();
    println!("harmonic g(2) = g(2n) / g(n)^2");
    println!("{:>4}  {}", "n", header.iter().map(|h| format!("{h:>24}")).collect::<String>());
    for n in 1..=max_order / 2 {
        let cells = models
            .iter()
            .map(|m| Ok(format!("{:>24}", fmt_exact(&predict_harmonic_g2_exact(m, n)?))))
            .collect::<Result<String, Error>>()?;
        println!("{n:>4}  {cells}");
    }
    Ok(())
}

fn fmt_exact(q: &num_rational::BigRational) -> String {
    use num_traits::ToPrimitive;
    let approx = q.to_f64().unwrap_or(f64::NAN);
    if q.is_integer() {
        q.to_integer().to_string()
    } else {
        format!("{q} ≈ {approx:.6}")
    }
}
