use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oddpoly_core::config::{Format, RunConfig, SupportConfig, VariantConfig};
use oddpoly_core::pipeline::{cmd_distances, cmd_variant, cmd_verify, exit_code};
use oddpoly_core::report::{ReportBundle, Status};
use oddpoly_core::scalar::Mode;
use oddpoly_core::Error;

#[derive(Parser)]
#[command(name = "oddpoly", version, about = "Verify that odd polynomials need not be dense in the odd functions of a Hilbert function space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Basis identities, norm bound, witness identities and the headline contrast.
    Verify(Common),
    /// Distance tables for polynomial spans and summability methods.
    Distances(Common),
    /// Support-set or Fourier variant of the construction.
    Variant {
        #[command(flatten)]
        common: Common,
        /// Variant to run; overrides the config file.
        #[arg(long, value_enum)]
        kind: Option<VariantKind>,
        /// Support set for `--kind support`.
        #[arg(long, value_enum, default_value_t = SupportSet::Evens)]
        set: SupportSet,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    level_m: Option<usize>,
    #[arg(long)]
    level_n: Option<usize>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated output formats: json, csv.
    #[arg(long, value_delimiter = ',', value_enum)]
    format: Option<Vec<FormatArg>>,
    /// Seed for the random triangular rows.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the plot-data files.
    #[arg(long)]
    no_plot_data: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantKind {
    Identity,
    Support,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum SupportSet {
    Evens,
    Odds,
    Squares,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Approx => Mode::Approx,
            };
        }
        if let Some(m) = self.level_m {
            cfg.levels.m = m;
        }
        if let Some(n) = self.level_n {
            cfg.levels.n = n;
        }
        if let Some(out) = &self.out {
            cfg.outputs.dir = out.clone();
        }
        if let Some(formats) = &self.format {
            cfg.outputs.formats = formats
                .iter()
                .map(|f| match f {
                    FormatArg::Json => Format::Json,
                    FormatArg::Csv => Format::Csv,
                })
                .collect();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.no_plot_data {
            cfg.outputs.plot_data = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(bundle: &ReportBundle, cfg: &RunConfig) -> Result<(), Error> {
    let json = cfg.outputs.formats.contains(&Format::Json);
    let csv = cfg.outputs.formats.contains(&Format::Csv);
    let written = bundle.write(&cfg.outputs.dir, json, csv, cfg.outputs.plot_data)?;
    for (section, r) in bundle.records() {
        let status = serde_json::to_value(r.status)?;
        println!("{:<5} {section}/{}", status.as_str().unwrap_or_default(), r.name);
    }
    for t in &bundle.tables {
        let failed = t.rows.iter().filter(|r| r.status == Status::Fail).count();
        println!("table {}: {} rows, {failed} failed", t.name, t.rows.len());
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    println!("{}", if bundle.passed { "PASS" } else { "FAIL" });
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    let (cfg, bundle) = match cli.command {
        Command::Verify(c) => {
            let cfg = c.load()?;
            let b = cmd_verify(&cfg)?;
            (cfg, b)
        }
        Command::Distances(c) => {
            let cfg = c.load()?;
            let b = cmd_distances(&cfg)?;
            (cfg, b)
        }
        Command::Variant { common, kind, set } => {
            let mut cfg = common.load()?;
            if let Some(kind) = kind {
                cfg.variant = match kind {
                    VariantKind::Identity => VariantConfig::Identity,
                    VariantKind::Fourier => VariantConfig::Fourier,
                    VariantKind::Support => VariantConfig::Support {
                        set: match set {
                            SupportSet::Evens => SupportConfig::Evens,
                            SupportSet::Odds => SupportConfig::Odds,
                            SupportSet::Squares => SupportConfig::Squares,
                        },
                    },
                };
            }
            let b = cmd_variant(&cfg)?;
            (cfg, b)
        }
    };
    emit(&bundle, &cfg)?;
    Ok(exit_code(&bundle))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
