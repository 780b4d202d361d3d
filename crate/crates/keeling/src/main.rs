use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use keeling::data::{self, AnnualSeries, NOAA_ANNUAL_URL};
use keeling::emit::{self, Cell, Dataset, Format, Metadata};
use keeling::error::{Stage, Error};
use keeling::pipeline::{self, PipelineConfig};
use keeling::RateMethod;
use log::{info, warn};
use savgol_ci::{
    monte_carlo_validate_with, normal_plot_data, polynomial_noise_oracle, variance_ratio_test, Execution, FilterSpec,
    MonteCarloConfig, PlateauConfig,
};

#[derive(Parser)]
#[command(name = "keeling", version, about = "Savitzky-Golay analysis of annual CO2 records with confidence bands")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth and differentiate the series with a fixed filter.
    Filter {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Residual SDs over a range of half-windows.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter counts (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        max_m: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Noise floor and selected half-window per parameter count.
    Select {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 25)]
        max_m: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Confidence bands on the smoothed series and its derivative.
    Ci {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterChoice,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo check of the propagated SDs.
    Montecarlo {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterChoice,
        /// Noise SD; defaults to the unbiased residual SD.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Residual diagnostics: F test, normal plot, global polynomial fits.
    Diagnose {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterChoice,
        #[command(flatten)]
        output: Output,
    },
    /// Full analysis; writes every table.
    Keeling {
        #[command(flatten)]
        source: Source,
        /// Parameter count of the reported filter.
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Parameter counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        candidates: Vec<usize>,
        /// Half-window of the reported filter; selected from the data if absent.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 25)]
        max_m: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Pre-industrial baseline, ppm.
        #[arg(long, default_value_t = 280.0)]
        baseline: f64,
        #[arg(long, value_enum, default_value_t = RateArg::Log)]
        rate_method: RateArg,
        /// Run the Monte Carlo and sweeps on one thread.
        #[arg(long)]
        sequential: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Output directory, or a file-name prefix.
        #[arg(long, default_value = "keeling-out/")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Source {
    /// NOAA-format annual-mean file; defaults to the bundled snapshot.
    #[arg(long, conflicts_with = "fetch")]
    input: Option<PathBuf>,
    /// Download the current file (optionally from another URL).
    #[arg(long, num_args = 0..=1, default_missing_value = NOAA_ANNUAL_URL)]
    fetch: Option<String>,
}

impl Source {
    fn load(&self) -> Result<AnnualSeries> {
        let series = if let Some(url) = &self.fetch {
            data::fetch(url)?
        } else if let Some(path) = &self.input {
            let bytes = std::fs::read(path).with_context(|| format!("[parse] reading {}", path.display()))?;
            data::parse_noaa_csv(&bytes)?
        } else {
            data::snapshot()
        };
        info!("{} values, {}-{}", series.len(), series.years()[0], series.years()[series.len() - 1]);
        Ok(series)
    }
}

#[derive(Args)]
struct FilterChoice {
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Half-window; selected from the data if absent.
    #[arg(long)]
    m: Option<usize>,
    /// Sweep limit used when selecting m.
    #[arg(long, default_value_t = 25)]
    max_m: usize,
}

impl FilterChoice {
    fn resolve(&self, series: &AnnualSeries) -> Result<FilterSpec> {
        let m = match self.m {
            Some(m) => m,
            None => {
                let max_m = pipeline::feasible_max_m(self.max_m, series.len(), &mut Vec::new());
                let s = pipeline::select(self.n, max_m, series.values(), &PlateauConfig::default(), Execution::default())?;
                info!("selected m = {} (noise floor {:.4})", s.m, s.floor.sd);
                s.m
            }
        };
        let spec = FilterSpec::new(self.n, m).map_err(|source| Error::Stage { stage: Stage::Filter, source })?;
        if let Some(msg) = spec.advisory() {
            warn!("{msg}");
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output directory or file-name prefix; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RateArg {
    /// Filter ln(y - baseline).
    Log,
    /// Filter y and divide the derivative by the excess.
    Delta,
}

fn emit(output: &Output, datasets: &[Dataset], meta: &Metadata) -> Result<()> {
    let format = output.format.into();
    match &output.out {
        Some(out) => {
            for path in emit::write_all(datasets, meta, format, out)? {
                info!("wrote {}", path.display());
            }
        }
        None => {
            for d in datasets {
                print!("{}", emit::render(d, meta, format)?);
            }
        }
    }
    Ok(())
}

fn spec_meta(source: &AnnualSeries, spec: &FilterSpec) -> Metadata {
    Metadata { spec: Some(spec.into()), ..Metadata::new(source.source_metadata()) }
}

fn stage<T>(stage: Stage, r: savgol_ci::Result<T>) -> Result<T> {
    r.map_err(|source| Error::Stage { stage, source }.into())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Filter { source, n, m, output } => {
            let series = source.load()?;
            let spec = FilterChoice { n, m: Some(m), max_m: 0 }.resolve(&series)?;
            let y = series.values();
            let out = stage(Stage::Filter, savgol_ci::apply_filter(&spec, y))?;
            let rows = (0..series.len())
                .map(|t| {
                    vec![series.years()[t].into(), y[t].into(), out.yf[t].into(), out.dyf[t].into(), (y[t] - out.yf[t]).into()]
                })
                .collect();
            let d = Dataset {
                name: "filtered",
                columns: vec![
                    column("year", "yr", "calendar year"),
                    column("y", "ppm", "input"),
                    column("yf", "ppm", "smoothed value"),
                    column("dyf", "ppm/yr", "filtered derivative"),
                    column("residual", "ppm", "y - yf"),
                ],
                rows,
            };
            emit(&output, &[d], &spec_meta(&series, &spec))
        }
        Command::Sweep { source, n, max_m, output } => {
            let series = source.load()?;
            let max_m = pipeline::feasible_max_m(max_m, series.len(), &mut Vec::new());
            let mut rows = Vec::new();
            for n in n {
                let table = stage(Stage::Sweep, savgol_ci::sweep_residual_sd(n, max_m, series.values()))?;
                rows.extend(table.rows.iter().map(|r| vec![n.into(), r.m.into(), r.sd_a.into(), r.sd_b.into()]));
            }
            let d = Dataset {
                name: "sweep",
                columns: vec![
                    column("n", "", "polynomial parameter count"),
                    column("m", "", "half-window"),
                    column("sd_a", "ppm", "biased SD of the residuals"),
                    column("sd_b", "ppm", "biased SD of the differenced residuals"),
                ],
                rows,
            };
            emit(&output, &[d], &Metadata::new(series.source_metadata()))
        }
        Command::Select { source, n, max_m, output } => {
            let series = source.load()?;
            let max_m = pipeline::feasible_max_m(max_m, series.len(), &mut Vec::new());
            let mut rows = Vec::new();
            for n in n {
                let s = pipeline::select(n, max_m, series.values(), &PlateauConfig::default(), Execution::default())?;
                rows.push(vec![
                    n.into(),
                    s.floor.sd.into(),
                    s.table.rows[s.plateau.start].m.into(),
                    s.table.rows[s.plateau.end - 1].m.into(),
                    s.m.into(),
                ]);
            }
            let d = Dataset {
                name: "selection",
                columns: vec![
                    column("n", "", "polynomial parameter count"),
                    column("floor", "ppm", "plateau level of sd_b"),
                    column("plateau_m_start", "", "first half-window of the plateau"),
                    column("plateau_m_end", "", "last half-window of the plateau"),
                    column("m", "", "selected half-window"),
                ],
                rows,
            };
            emit(&output, &[d], &Metadata::new(series.source_metadata()))
        }
        Command::Ci { source, filter, level, output } => {
            let series = source.load()?;
            let spec = filter.resolve(&series)?;
            let y = series.values();
            let filtered = stage(Stage::Filter, savgol_ci::apply_filter(&spec, y))?;
            let (biased, _, unbiased) = pipeline::noise_estimates(&spec, y, &filtered)?;
            info!("noise SD {:.4} biased, {:.4} unbiased", biased.sd, unbiased.sd);
            let b = pipeline::confidence_bands(&spec, &filtered, &unbiased, level)?;
            let rows = (0..series.len())
                .map(|t| {
                    vec![
                        series.years()[t].into(),
                        y[t].into(),
                        filtered.yf[t].into(),
                        b.yf_lo[t].into(),
                        b.yf_hi[t].into(),
                        filtered.dyf[t].into(),
                        b.dyf_lo[t].into(),
                        b.dyf_hi[t].into(),
                    ]
                })
                .collect();
            let d = Dataset {
                name: "ci",
                columns: vec![
                    column("year", "yr", "calendar year"),
                    column("y", "ppm", "input"),
                    column("yf", "ppm", "smoothed value"),
                    column("yf_lo", "ppm", "lower bound on yf"),
                    column("yf_hi", "ppm", "upper bound on yf"),
                    column("dyf", "ppm/yr", "filtered derivative"),
                    column("dyf_lo", "ppm/yr", "lower bound on dyf"),
                    column("dyf_hi", "ppm/yr", "upper bound on dyf"),
                ],
                rows,
            };
            let meta = Metadata { level: Some(level), ..spec_meta(&series, &spec) };
            emit(&output, &[d], &meta)
        }
        Command::Montecarlo { source, filter, sigma, trials, seed, level, output } => {
            let series = source.load()?;
            let spec = filter.resolve(&series)?;
            let y = series.values();
            let sigma = match sigma {
                Some(s) => s,
                None => {
                    let filtered = stage(Stage::Filter, savgol_ci::apply_filter(&spec, y))?;
                    pipeline::noise_estimates(&spec, y, &filtered)?.2.sd
                }
            };
            let config = MonteCarloConfig { trials, seed, level, execution: Execution::default() };
            let report = stage(Stage::MonteCarlo, monte_carlo_validate_with(&spec, y, sigma, &config))?;
            info!(
                "sigma {sigma:.4}: max relative deviation {:.3} (dyf), {:.3} (yf)",
                report.max_relative_deviation_dyf(),
                report.max_relative_deviation_yf()
            );
            let meta = Metadata { seed: Some(seed), level: Some(level), ..spec_meta(&series, &spec) };
            emit(&output, &[emit::monte_carlo_table(&series, &report)], &meta)
        }
        Command::Diagnose { source, filter, output } => {
            let series = source.load()?;
            let spec = filter.resolve(&series)?;
            let y = series.values();
            let filtered = stage(Stage::Filter, savgol_ci::apply_filter(&spec, y))?;
            let residuals = filtered.residuals(y);
            let (_, _, unbiased) = pipeline::noise_estimates(&spec, y, &filtered)?;
            let f = stage(Stage::VarianceTest, variance_ratio_test(&residuals))?;
            let qq = stage(Stage::NormalPlot, normal_plot_data(&residuals, &unbiased))?;
            let degrees = pipeline::feasible_degrees(&(2..=20), y.len(), &mut Vec::new());
            let poly = stage(Stage::PolynomialOracle, polynomial_noise_oracle(y, degrees))?;
            let min = poly.minimum();
            let summary: Vec<(&str, Cell)> = vec![
                ("sd_unbiased", unbiased.sd.into()),
                ("f_ratio", f.ratio.into()),
                ("f_n1", f.n1.into()),
                ("f_n2", f.n2.into()),
                ("f_p_value", f.p_value.into()),
                ("f_pass_95", usize::from(f.pass_95).into()),
                ("qq_max_abs_deviation", qq.max_abs_deviation().into()),
                ("poly_min_degree", min.map_or(Cell::Null, |p| p.0.into())),
                ("poly_min_sd", min.map(|p| p.1).into()),
            ];
            let d = Dataset {
                name: "diagnostics",
                columns: vec![column("quantity", "", "name of the reported quantity"), column("value", "", "value")],
                rows: summary.into_iter().map(|(k, v)| vec![Cell::Text(k.into()), v]).collect(),
            };
            let meta = spec_meta(&series, &spec);
            match output.out {
                Some(_) => emit(&output, &[d, emit::normal_plot_table(&qq), emit::polynomial_table(&poly)], &meta),
                None => emit(&output, &[d], &meta),
            }
        }
        Command::Keeling {
            source,
            n,
            candidates,
            m,
            max_m,
            level,
            seed,
            trials,
            baseline,
            rate_method,
            sequential,
            format,
            out,
        } => {
            let series = source.load()?;
            let config = PipelineConfig {
                candidates,
                max_m,
                level,
                seed,
                trials,
                baseline,
                report_n: n,
                m_override: m,
                rate_method: match rate_method {
                    RateArg::Log => RateMethod::LogTransform,
                    RateArg::Delta => RateMethod::DeltaMethod,
                },
                execution: if sequential { Execution::Sequential } else { Execution::Parallel },
                ..PipelineConfig::default()
            };
            let bundle = pipeline::run_pipeline(&series, &config)?;
            let meta = Metadata::for_bundle(&bundle);
            let sets = emit::datasets(&bundle);
            let paths = emit::write_all(&sets, &meta, format.into(), &out)?;
            for p in &paths {
                info!("wrote {}", p.display());
            }
            let summary = sets.last().expect("summary table");
            print!("{}", emit::render(summary, &meta, Format::Csv)?);
            eprintln!("wrote {} files to {}", paths.len(), out.display());
            Ok(())
        }
    }
}

fn column(name: &'static str, unit: &'static str, description: &'static str) -> emit::Column {
    emit::Column { name, unit, description }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("keeling: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
