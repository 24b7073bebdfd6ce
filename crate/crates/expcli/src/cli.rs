//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use entloc::localize::SearchKind;
use entloc::{StateFamily, C64};

use crate::config::{parse_int_range, ExperimentConfig, ExperimentKind, Format, Grid};
use crate::error::{Error, Result};
use crate::experiments;
use crate::table::Table;

pub const THREADS_ENV: &str = "ENTLOC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "entloc", version, about = "Localizable entanglement under sequential unsharp measurements")]
pub struct Cli {
    /// Seed recorded in every row; required by sampling experiments.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (ENTLOC_THREADS takes precedence).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Also write SVG line plots (needs --out).
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct StateArgs {
    /// ghz, gghz, w, gw, dicke, ghz-class or w-class
    #[arg(long, default_value = "ghz")]
    pub family: String,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Real coefficients, comma separated.
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Family as a JSON object, overriding the other state flags.
    #[arg(long)]
    pub family_json: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// full, pauli, ops or pattern
    #[arg(long, default_value = "full")]
    pub space: String,
    /// Direction labels per assisting qubit, comma separated (e.g. xyxy,yxyx).
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-round localizable entanglement.
    Le {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Sequentially optimized rounds.
    Sle {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        #[arg(long, default_value_t = 6)]
        rounds: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        no_dedup: bool,
        /// Amplitude budget per ensemble.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Jointly optimized rounds compared with the sequential value.
    Gle {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
    },
    /// Bell fidelities of the post-measurement branches.
    Fidelity {
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        #[arg(long)]
        eta_grid: Option<String>,
        #[arg(long)]
        weighted: bool,
    },
    /// Sequential LE of N-qubit GHZ states after one and R rounds.
    Table1 {
        #[arg(long, default_value_t = 0.8)]
        eta: f64,
        #[arg(long, default_value = "3..5")]
        n: String,
        #[arg(long, default_value_t = 6)]
        rounds: usize,
        #[arg(long)]
        factorized: bool,
        #[arg(long)]
        no_dedup: bool,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Data behind one figure (3 to 9).
    Fig {
        #[arg(value_parser = clap::value_parser!(u8).range(3..=9))]
        number: u8,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        eta_grid: Option<String>,
        /// Round range, e.g. 2..6.
        #[arg(long)]
        rounds: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        weighted: bool,
    },
    /// Run an experiment described by a JSON config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

impl StateArgs {
    pub fn family(&self) -> Result<StateFamily> {
        if let Some(j) = &self.family_json {
            return Ok(serde_json::from_str(j)?);
        }
        let reals = |s: &str| -> Result<Vec<C64>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map(|x| C64::new(x, 0.0))
                        .map_err(|_| Error::config(format!("not a number: `{t}`")))
                })
                .collect()
        };
        let need = |c: Option<usize>, what: &str| c.ok_or_else(|| Error::config(format!("--{what} is required")));
        Ok(match self.family.to_ascii_lowercase().as_str() {
            "ghz" => StateFamily::ghz(self.n),
            "gghz" => {
                let c0 = self.c0.ok_or_else(|| Error::config("--c0 is required for gghz"))?;
                if !(0.0..=1.0).contains(&c0) {
                    return Err(Error::config("--c0 must lie in [0, 1]"));
                }
                StateFamily::gghz_real(self.n, c0)
            }
            "w" => StateFamily::w(),
            "gw" => match (&self.coeffs, self.beta1, self.beta2) {
                (Some(c), _, _) => {
                    let c = reals(c)?;
                    if c.len() != 3 {
                        return Err(Error::config("gw takes three coefficients"));
                    }
                    StateFamily::Gw { c: [c[0], c[1], c[2]] }
                }
                (None, Some(b1), Some(b2)) => StateFamily::gw_angles(b1, b2),
                _ => return Err(Error::config("gw needs --coeffs or --beta1 and --beta2")),
            },
            "dicke" => StateFamily::Dicke {
                n: self.n,
                n1: need(self.n1, "n1")?,
            },
            "ghz-class" => StateFamily::GhzClass {
                c: reals(self.coeffs.as_deref().ok_or_else(|| Error::config("--coeffs is required"))?)?,
            },
            "w-class" => StateFamily::WClass {
                c: reals(self.coeffs.as_deref().ok_or_else(|| Error::config("--coeffs is required"))?)?,
            },
            other => return Err(Error::config(format!("unknown family `{other}`"))),
        })
    }
}

impl SearchArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        cfg.space = Some(match self.space.to_ascii_lowercase().as_str() {
            "full" | "full_sphere" => SearchKind::FullSphere,
            "pauli" => SearchKind::Pauli,
            "ops" => SearchKind::Ops,
            "pattern" | "fixed_pattern" => SearchKind::FixedPattern,
            other => return Err(Error::config(format!("unknown search space `{other}`"))),
        });
        cfg.pattern = self
            .pattern
            .as_ref()
            .map(|p| p.split(',').map(|s| s.trim().to_string()).collect());
        if cfg.pattern.is_some() && cfg.space != Some(SearchKind::FixedPattern) {
            cfg.space = Some(SearchKind::FixedPattern);
        }
        Ok(())
    }
}

fn eta_grid(s: &Option<String>) -> Result<Option<Grid>> {
    s.as_deref().map(str::parse).transpose()
}

/// Builds the config behind `fig <number>`.
pub fn figure_config(
    number: u8,
    eta: Option<f64>,
    eta_grid_arg: &Option<String>,
    rounds: &Option<String>,
    samples: Option<usize>,
    epsilon: Option<f64>,
    n: &Option<String>,
    weighted: bool,
) -> Result<ExperimentConfig> {
    let kind = match number {
        3 => ExperimentKind::FrCurve,
        4 => ExperimentKind::DeltaSweep,
        5 => ExperimentKind::RoundsVsGgm,
        6 => ExperimentKind::ClassFraction,
        7 => ExperimentKind::FidelitySweep,
        8 | 9 => ExperimentKind::SleCurve,
        other => return Err(Error::config(format!("no figure {other}"))),
    };
    let mut cfg = ExperimentConfig::new(kind);
    let grid = eta_grid(eta_grid_arg)?;
    match kind {
        ExperimentKind::FrCurve => cfg.eta = grid.or(eta.map(Grid::Value)),
        ExperimentKind::FidelitySweep => {
            cfg.eta = eta.map(Grid::Value);
            cfg.sweep_eta = grid;
        }
        _ => {
            if grid.is_some() {
                return Err(Error::config(format!("fig {number} takes --eta, not --eta-grid")));
            }
            cfg.eta = eta.map(Grid::Value);
        }
    }
    if let Some(r) = rounds {
        let r = parse_int_range(r)?;
        cfg.r_min = r.first().copied();
        cfg.r_max = r.last().copied();
    }
    if let Some(s) = samples {
        cfg.sample_size = s;
    }
    if let Some(e) = epsilon {
        cfg.epsilon = e;
    }
    if let Some(n) = n {
        cfg.n = Some(parse_int_range(n)?);
    }
    cfg.weighted = weighted;
    if number == 9 {
        cfg.families = Some(match &cfg.n {
            Some(ns) => ns
                .iter()
                .flat_map(|&n| (1..=n / 2).map(move |n1| StateFamily::Dicke { n, n1 }))
                .collect(),
            None => experiments::dicke_families(),
        });
    }
    Ok(cfg)
}

/// Runs a parsed command and writes its output. Returns the text destined
/// for stdout.
pub fn run_cli(cli: &Cli) -> Result<String> {
    let seed = cli.seed;
    let mut cfg = match &cli.command {
        Command::Le { state, eta, search } => {
            let mut c = ExperimentConfig::new(ExperimentKind::Custom);
            c.seed = seed;
            search.apply(&mut c)?;
            let fam = state.family()?;
            let space = c.search_space(SearchKind::FullSphere)?;
            let t = experiments::le_table(&fam, *eta, &space, c.seed_or_zero())?;
            return emit(&[t], &Output::from_cli(cli));
        }
        Command::Sle {
            state,
            eta,
            rounds,
            search,
            no_dedup,
            budget,
        } => {
            let mut c = ExperimentConfig::new(ExperimentKind::Custom);
            c.family = Some(state.family()?);
            c.eta = Some(Grid::Value(*eta));
            c.r_max = Some(*rounds);
            c.dedup = !no_dedup;
            c.budget = *budget;
            search.apply(&mut c)?;
            c
        }
        Command::Gle { state, eta, rounds } => {
            let t = experiments::gle_table(&state.family()?, *eta, *rounds, seed.unwrap_or(0))?;
            return emit(&[t], &Output::from_cli(cli));
        }
        Command::Fidelity {
            eta,
            eta_grid: g,
            weighted,
        } => {
            let mut c = ExperimentConfig::new(ExperimentKind::FidelitySweep);
            c.eta = Some(Grid::Value(*eta));
            c.sweep_eta = eta_grid(g)?;
            c.weighted = *weighted;
            c
        }
        Command::Table1 {
            eta,
            n,
            rounds,
            factorized,
            no_dedup,
            budget,
        } => {
            let mut c = ExperimentConfig::new(ExperimentKind::Table1);
            c.eta = Some(Grid::Value(*eta));
            c.n = Some(parse_int_range(n)?);
            c.r_max = Some(*rounds);
            c.factorized = *factorized;
            c.dedup = !no_dedup;
            c.budget = *budget;
            c
        }
        Command::Fig {
            number,
            eta,
            eta_grid: g,
            rounds,
            samples,
            epsilon,
            n,
            weighted,
        } => figure_config(*number, *eta, g, rounds, *samples, *epsilon, n, *weighted)?,
        Command::Sweep { config } => {
            let text = fs::read_to_string(config)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", config.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    let tables = experiments::run(&cfg)?;
    let out = Output {
        dir: cli.out.clone().or_else(|| cfg.output.dir.clone()),
        format: cli.format.or(cfg.output.format).unwrap_or_default(),
        svg: cli.svg || cfg.output.svg,
    };
    emit(&tables, &out)
}

/// Where and how tables are written.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub format: Format,
    pub svg: bool,
}

impl Output {
    fn from_cli(cli: &Cli) -> Self {
        Self {
            dir: cli.out.clone(),
            format: cli.format.unwrap_or_default(),
            svg: cli.svg,
        }
    }
}

/// Writes tables into the output directory (one file per table) or renders
/// them for stdout.
pub fn emit(tables: &[Table], out: &Output) -> Result<String> {
    let format = out.format;
    match &out.dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut listing = String::new();
            for t in tables {
                let path = write_table(t, dir, format)?;
                listing.push_str(&format!("{}\n", path.display()));
                if out.svg {
                    if let Some(svg) = t.to_svg() {
                        let p = dir.join(format!("{}.svg", t.name));
                        fs::write(&p, svg)?;
                        listing.push_str(&format!("{}\n", p.display()));
                    }
                }
            }
            Ok(listing)
        }
        None if out.svg => Err(Error::config("--svg needs --out")),
        None => render(tables, format),
    }
}

fn write_table(t: &Table, dir: &Path, format: Format) -> Result<PathBuf> {
    let (ext, body) = match format {
        Format::Csv => ("csv", t.to_csv()?),
        Format::Json => ("json", format!("{:#}\n", t.to_json())),
    };
    let path = dir.join(format!("{}.{ext}", t.name));
    fs::write(&path, body)?;
    Ok(path)
}

pub fn render(tables: &[Table], format: Format) -> Result<String> {
    match format {
        Format::Csv if tables.len() == 1 => tables[0].to_csv(),
        Format::Csv => {
            let mut s = String::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    s.push('\n');
                }
                s.push_str(&format!("# {}\n", t.name));
                s.push_str(&t.to_csv()?);
            }
            Ok(s)
        }
        Format::Json if tables.len() == 1 => Ok(format!("{:#}\n", tables[0].to_json())),
        Format::Json => {
            let all: Vec<_> = tables.iter().map(Table::to_json).collect();
            Ok(format!("{:#}\n", serde_json::Value::Array(all)))
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let env = std::env::var(THREADS_ENV).ok();
    let threads = match env.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
        Some(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::config(format!("{THREADS_ENV}=`{v}` is not a thread count")))?,
        ),
        None => flag,
    };
    if let Some(n) = threads {
        // The global pool can only be built once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| run_cli(&cli));
    match result {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
