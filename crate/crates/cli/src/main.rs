use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use difftwr::dstc::{validate_dispersion_set, Codebook};
use difftwr::harness::output::{write_records, Tabular};
use difftwr::harness::{analytic_overlay, run_ber_sweep, run_pep_experiment, Format, Scheme, SimConfig};
use difftwr::psk::PskConstellation;
use difftwr::Error;

#[derive(Parser)]
#[command(name = "difftwr", version, about = "Blind differential two-way relaying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep for both users
    Ber(Common),
    /// Pairwise error probability of a codeword pair against its bound
    Pep(Common),
    /// Check the configuration and its dispersion matrices
    Validate(Common),
    /// Analytic BER approximation and PEP bound on the SNR grid
    Analytic(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment description; unspecified fields take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// jbd | jbd_dstc | genie | coherent
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated SNR grid in dB
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, env = "SIM_WORKERS")]
    workers: Option<usize>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Disable all noise sources
    #[arg(long)]
    noiseless: bool,
}

impl Common {
    fn load(&self) -> Result<SimConfig, Error> {
        let mut c = match &self.config {
            Some(p) => SimConfig::from_json_file(p)?,
            None => SimConfig::default(),
        };
        if let Some(s) = &self.scheme {
            c.scheme = s.parse::<Scheme>()?;
        }
        if let Some(grid) = &self.snr_db {
            c.snr_grid_db = grid.clone();
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        c.noiseless |= self.noiseless;
        c.validate()?;
        Ok(c)
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn emit<R: Tabular>(&self, records: &[R]) -> Result<(), Error> {
        let format: Format = self.format.parse()?;
        match &self.out {
            Some(path) => difftwr::harness::emit_results(records, path, format),
            None => write_records(records, std::io::stdout().lock(), format),
        }
    }
}

fn validate(common: &Common) -> Result<(), Error> {
    let c = common.load()?;
    let mut out = std::io::stdout().lock();
    let (cp1, cp2) = c.cp_lengths();
    let io = |e| Error::Io { path: "<stdout>".into(), source: e };
    writeln!(out, "config ok: scheme {}, N={}, M={}, N_R={}, cp1={cp1}, cp2={cp2}", c.scheme, c.subcarriers, c.blocks, c.relays())
        .map_err(io)?;
    if c.scheme.is_dstc() || c.pep.is_some() {
        let design = c.st_design()?;
        let book = Codebook::<f64>::enumerate(design, &PskConstellation::new(c.order)?)?;
        let report = validate_dispersion_set(&design.dispersion_set(), book.words(), 1e-10);
        writeln!(
            out,
            "{design}: unitary {:?}, commutative {:?}, hollow {:?}",
            report.unitary,
            report.commutative,
            report.hollow.iter().map(|(_, ok)| *ok).collect::<Vec<_>>()
        )
        .map_err(io)?;
        report.into_result()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Ber(c) => {
            let config = c.load()?;
            c.emit(&run_ber_sweep(&config, c.workers())?)
        }
        Command::Pep(c) => {
            let config = c.load()?;
            c.emit(&run_pep_experiment(&config, c.workers())?)
        }
        Command::Analytic(c) => c.emit(&analytic_overlay(&c.load()?)?),
        Command::Validate(c) => validate(c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
