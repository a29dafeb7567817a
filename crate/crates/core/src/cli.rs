//! Command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::additive::{component_band, AdditiveOptions, Component};
use crate::data::{parse_games, split, to_csv, Dataset, SplitMode, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{benchmark, pure_error, render_table, BenchmarkRun};
use crate::kernel::{
    default_sigma_grid, default_sigma_x_grid, default_sigma_y_grid, select_aniso_cv, select_sigma_loo, AnisoSurface,
    BandwidthCurve,
};
use crate::loess::{default_span_grid, select_span_cv, LoessOptions, SpanCurve};
use crate::model::{model_from_json, model_to_json, FittedModel, ModelFamily, ModelSpec, Tuning};
use crate::quadratic::{fit_quadratic, residual_diagnostics, QuadraticOptions};
use crate::synth::{generate_synthetic, SynthConfig, REFERENCE_COEFFICIENTS, REFERENCE_NOISE};

const SIGN_NOTE: &str = "positive = road team favored";

#[derive(Debug, Parser)]
#[command(name = "movrank", version, about = "Predict margin of victory from team rankings")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a games CSV and print a summary.
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Write train.csv and valid.csv.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Fit one model on the whole input and save it as JSON.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: ModelChoice,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Predict the MOV of one game from a saved model.
    Predict {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        road_rank: f64,
        #[arg(long, allow_negative_numbers = true)]
        home_rank: f64,
    },
    /// Cross-validate LOESS spans or kernel bandwidths and export the curves.
    Tune {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        model: ModelChoice,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Train/validation benchmark over several partitions.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// Number of train/validation partitions.
        #[arg(long, default_value_t = 3)]
        partitions: usize,
        #[arg(long, value_enum, default_value = "all")]
        model: ModelChoice,
        #[command(flatten)]
        hyper: HyperArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate a synthetic games CSV from a quadratic truth.
    Synth {
        #[arg(long, default_value_t = 6024)]
        n: usize,
        /// β₀,β_r,β_h,β_rr,β_hh
        #[arg(long, value_delimiter = ',', num_args = 5, allow_negative_numbers = true)]
        coefficients: Option<Vec<f64>>,
        #[arg(long, default_value_t = REFERENCE_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 351)]
        rank_max: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitChoice {
    Chrono,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Quadratic,
    Gam,
    Loess,
    KernelIso,
    KernelAniso,
    All,
}

impl ModelChoice {
    fn families(self) -> Vec<ModelFamily> {
        match self {
            ModelChoice::Quadratic => vec![ModelFamily::Quadratic],
            ModelChoice::Gam => vec![ModelFamily::Gam],
            ModelChoice::Loess => vec![ModelFamily::Loess],
            ModelChoice::KernelIso => vec![ModelFamily::Isotropic],
            ModelChoice::KernelAniso => vec![ModelFamily::Anisotropic],
            ModelChoice::All => ModelFamily::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
struct SplitArgs {
    #[arg(long, value_enum, default_value = "chrono")]
    split: SplitChoice,
    /// Training games per partition; 75% of the input when absent.
    #[arg(long)]
    train_count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
struct HyperArgs {
    /// Effective degrees of freedom per additive term.
    #[arg(long, default_value_t = 4.0)]
    df: f64,
    /// LOESS span; chosen by cross-validation when absent.
    #[arg(long)]
    span: Option<f64>,
    /// Isotropic kernel bandwidth; chosen by leave-one-out when absent.
    #[arg(long)]
    sigma: Option<f64>,
    /// Anisotropic bandwidth along the rank-sum axis.
    #[arg(long)]
    sigma_x: Option<f64>,
    /// Anisotropic bandwidth along the rank-difference axis.
    #[arg(long)]
    sigma_y: Option<f64>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Measure LOESS distances in raw ranks instead of standardized ranks.
    #[arg(long)]
    raw_ranks: bool,
}

/// Validated settings shared by fit, tune and report.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub split_mode: SplitMode,
    pub train_count: Option<usize>,
    pub partitions: usize,
    pub models: Vec<ModelFamily>,
    pub df_per_term: f64,
    pub span: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_xy: Option<(f64, f64)>,
    pub folds: usize,
    pub normalize: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    fn new(input: PathBuf, models: Vec<ModelFamily>, hyper: &HyperArgs, seed: u64, out_dir: PathBuf) -> Result<Self> {
        let positive = |name: &str, v: Option<f64>, module: &'static str| -> Result<()> {
            match v {
                Some(s) if !(s > 0.0 && s.is_finite()) => {
                    Err(Error::param(module, format!("{name} must be positive and finite, got {s}")))
                }
                _ => Ok(()),
            }
        };
        if !(hyper.df >= 2.0 && hyper.df.is_finite()) {
            return Err(Error::param("additive", format!("df must be at least 2, got {}", hyper.df)));
        }
        if let Some(s) = hyper.span {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::param(
                    "loess",
                    format!("span must lie in (0, 1] with ceil(span * n) >= 3; got span {s}"),
                ));
            }
        }
        positive("sigma", hyper.sigma, "kernel")?;
        positive("sigma_x", hyper.sigma_x, "kernel")?;
        positive("sigma_y", hyper.sigma_y, "kernel")?;
        let sigma_xy = match (hyper.sigma_x, hyper.sigma_y) {
            (Some(x), Some(y)) => Some((x, y)),
            (None, None) => None,
            _ => return Err(Error::param("kernel", "give both --sigma-x and --sigma-y, or neither")),
        };
        if hyper.folds < 2 {
            return Err(Error::param("eval", format!("need at least 2 folds, got {}", hyper.folds)));
        }
        Ok(Self {
            input,
            split_mode: SplitMode::Chronological,
            train_count: None,
            partitions: 1,
            models,
            df_per_term: hyper.df,
            span: hyper.span,
            sigma: hyper.sigma,
            sigma_xy,
            folds: hyper.folds,
            normalize: !hyper.raw_ranks,
            seed,
            out_dir,
        })
    }

    pub fn spec(&self, family: ModelFamily) -> ModelSpec<f64> {
        match family {
            ModelFamily::Quadratic => ModelSpec::Quadratic(QuadraticOptions::default()),
            ModelFamily::Gam => ModelSpec::Additive(AdditiveOptions {
                df_per_term: self.df_per_term,
                ..AdditiveOptions::default()
            }),
            ModelFamily::Loess => match self.span {
                Some(span) => ModelSpec::Loess(LoessOptions {
                    span,
                    normalize: self.normalize,
                }),
                None => ModelSpec::LoessCv {
                    grid: default_span_grid(),
                    folds: self.folds,
                    seed: self.seed,
                    normalize: self.normalize,
                },
            },
            ModelFamily::Isotropic => match self.sigma {
                Some(sigma) => ModelSpec::KernelIsotropic { sigma },
                None => ModelSpec::KernelIsotropicLoo {
                    grid: default_sigma_grid(),
                },
            },
            ModelFamily::Anisotropic => match self.sigma_xy {
                Some((sigma_x, sigma_y)) => ModelSpec::KernelAnisotropic { sigma_x, sigma_y },
                None => ModelSpec::KernelAnisotropicCv {
                    x_grid: default_sigma_x_grid(),
                    y_grid: default_sigma_y_grid(),
                    folds: self.folds,
                    seed: self.seed,
                },
            },
        }
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_games(&text)
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

fn default_train_count(n: usize) -> usize {
    ((n as f64) * 0.75).round() as usize
}

fn span_csv(curve: &SpanCurve<f64>) -> Result<String> {
    csv_text(
        &["span", "rmse"],
        curve.curve.iter().map(|(s, r)| vec![format!("{s:.2}"), r.to_string()]),
    )
}

fn kernel_csv(iso: Option<&BandwidthCurve<f64>>, aniso: Option<&AnisoSurface<f64>>) -> Result<String> {
    let mut rows = Vec::new();
    if let Some(c) = iso {
        rows.extend(
            c.curve
                .iter()
                .map(|(s, r)| vec!["isotropic".into(), s.to_string(), String::new(), String::new(), r.to_string()]),
        );
    }
    if let Some(a) = aniso {
        rows.extend(a.surface.iter().map(|(x, y, r)| {
            vec!["anisotropic".into(), String::new(), x.to_string(), y.to_string(), r.to_string()]
        }));
    }
    csv_text(&["mode", "sigma", "sigma_x", "sigma_y", "rmse"], rows)
}

fn print_line(text: impl AsRef<str>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", text.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_ingest(input: &Path) -> Result<()> {
    let data = read_dataset(input)?;
    let games = data.games();
    let first = games.iter().map(|g| g.date).min().expect("nonempty");
    let last = games.iter().map(|g| g.date).max().expect("nonempty");
    let max_rank = games.iter().map(|g| g.road_rank.max(g.home_rank)).max().unwrap_or(0);
    let replicated = data.replicate_index().values().filter(|v| v.len() > 1).count();
    let mean_mov = games.iter().map(|g| g.mov() as f64).sum::<f64>() / games.len() as f64;
    print_line(format!("games: {}", data.len()))?;
    print_line(format!("dates: {first} to {last}"))?;
    print_line(format!("largest rank: {max_rank}"))?;
    print_line(format!("distinct rank pairs: {} ({replicated} replicated)", data.distinct_pairs()))?;
    print_line(format!("mean MOV: {mean_mov:.3} ({SIGN_NOTE})"))?;
    match pure_error::<f64>(&data) {
        Ok(pe) => print_line(format!("pure error: {:.4} on {} df", pe.rmse_pe, pe.df_pe)),
        Err(Error::NoReplication) => print_line("pure error: undefined (no replicated rank pairs)"),
        Err(e) => Err(e),
    }
}

fn split_spec(choice: SplitChoice, train_count: usize, seed: u64) -> SplitSpec {
    SplitSpec {
        train_count,
        mode: match choice {
            SplitChoice::Chrono => SplitMode::Chronological,
            SplitChoice::Random => SplitMode::Random { seed },
        },
    }
}

fn cmd_split(input: &Path, args: &SplitArgs, seed: u64, out_dir: &Path) -> Result<()> {
    let data = read_dataset(input)?;
    let count = args.train_count.unwrap_or_else(|| default_train_count(data.len()));
    let (train, valid) = split(&data, &split_spec(args.split, count, seed))?;
    write_atomic(&out_dir.join("train.csv"), &to_csv(&train)?)?;
    write_atomic(&out_dir.join("valid.csv"), &to_csv(&valid)?)?;
    print_line(format!("train.csv: {} games, valid.csv: {} games", train.len(), valid.len()))
}

fn cmd_fit(config: &RunConfig) -> Result<()> {
    let [family] = config.models[..] else {
        return Err(Error::param("cli", "fit takes a single model, not `all`"));
    };
    let data = read_dataset(&config.input)?;
    let fitted = config.spec(family).fit(&data)?;
    let path = config.out_dir.join(format!("model_{}.json", family.name()));
    write_atomic(&path, &model_to_json(&fitted.model)?)?;
    print_line(format!("{} on {} games", fitted.model.describe(), data.len()))?;
    print_line(format!("wrote {}", path.display()))
}

pub fn cmd_predict(model_file: &Path, road_rank: f64, home_rank: f64) -> Result<f64> {
    let text = fs::read_to_string(model_file).map_err(|e| Error::io(model_file, e))?;
    let model: FittedModel<f64> = model_from_json(&text)?;
    if !(road_rank.is_finite() && home_rank.is_finite()) {
        return Err(Error::param("cli", "ranks must be finite"));
    }
    let value = model.predict(road_rank, home_rank);
    print_line(format!(
        "predicted MOV {value:.2} for road rank {road_rank} at home rank {home_rank} [{}; {SIGN_NOTE}]",
        model.family().name()
    ))?;
    Ok(value)
}

fn cmd_tune(config: &RunConfig) -> Result<()> {
    let data = read_dataset(&config.input)?;
    let mut iso = None;
    let mut aniso = None;
    for &family in &config.models {
        match family {
            ModelFamily::Loess => {
                let curve = select_span_cv(&data, &default_span_grid(), config.folds, config.seed, config.normalize)?;
                write_atomic(&config.out_dir.join("loess_cv.csv"), &span_csv(&curve)?)?;
                print_line(format!("loess: best span {:.2}", curve.best_span))?;
            }
            ModelFamily::Isotropic => {
                let curve = select_sigma_loo(&data, &default_sigma_grid())?;
                print_line(format!("kernel-iso: best sigma {:.3}", curve.best_sigma))?;
                iso = Some(curve);
            }
            ModelFamily::Anisotropic => {
                let s = select_aniso_cv(&data, &default_sigma_x_grid(), &default_sigma_y_grid(), config.folds, config.seed)?;
                print_line(format!("kernel-aniso: best sigma_x {}, sigma_y {}", s.best_sigma_x, s.best_sigma_y))?;
                aniso = Some(s);
            }
            _ => {
                return Err(Error::param(
                    "cli",
                    format!("tune covers loess and kernel models, not {}", family.name()),
                ))
            }
        }
    }
    if iso.is_some() || aniso.is_some() {
        write_atomic(&config.out_dir.join("kernel_cv.csv"), &kernel_csv(iso.as_ref(), aniso.as_ref())?)?;
    }
    Ok(())
}

fn partitions(data: &Dataset, config: &RunConfig) -> Result<Vec<(Dataset, Dataset, String)>> {
    if config.partitions == 0 {
        return Err(Error::param("cli", "need at least one partition"));
    }
    let count = config.train_count.unwrap_or_else(|| default_train_count(data.len()));
    let mut out = Vec::with_capacity(config.partitions);
    let mut next_seed = config.seed;
    for j in 0..config.partitions {
        let mode = if j == 0 && config.split_mode == SplitMode::Chronological {
            SplitMode::Chronological
        } else {
            let seed = next_seed;
            next_seed = next_seed.wrapping_add(1);
            SplitMode::Random { seed }
        };
        let label = match mode {
            SplitMode::Chronological => format!("set {} (chronological)", j + 1),
            SplitMode::Random { seed } => format!("set {} (random, seed {seed})", j + 1),
        };
        let (train, valid) = split(data, &SplitSpec { train_count: count, mode })?;
        out.push((train, valid, label));
    }
    Ok(out)
}

fn cmd_report(config: &RunConfig) -> Result<()> {
    let data = read_dataset(&config.input)?;
    let pairs = partitions(&data, config)?;
    let specs: Vec<ModelSpec<f64>> = config.models.iter().map(|&f| config.spec(f)).collect();
    let run = benchmark(&pairs, &specs)?;
    let out = &config.out_dir;
    write_atomic(&out.join("report.json"), &serde_json::to_string_pretty(&run.report)?)?;
    let table = render_table(&run.report);
    write_atomic(&out.join("report.txt"), &table)?;
    write_diagnostics(&pairs[0].0, &run, config)?;
    print!("{table}");
    Ok(())
}

/// Residual, component-band and tuning-curve exports for the first training set.
fn write_diagnostics(train: &Dataset, run: &BenchmarkRun<f64>, config: &RunConfig) -> Result<()> {
    let out = &config.out_dir;
    let fits = &run.fits[0];
    let find = |family| fits.iter().find(|f| f.model.family() == family);

    if let Some(FittedModel::Quadratic(q)) = find(ModelFamily::Quadratic).map(|f| &f.model) {
        let rows = residual_diagnostics(q, train)?;
        let text = csv_text(
            &["road_rank", "home_rank", "fitted", "residual", "studentized"],
            rows.iter().map(|r| {
                vec![
                    r.road_rank.to_string(),
                    r.home_rank.to_string(),
                    r.fitted.to_string(),
                    r.residual.to_string(),
                    r.studentized.to_string(),
                ]
            }),
        )?;
        write_atomic(&out.join("residuals_quadratic.csv"), &text)?;
    }

    if let Some(FittedModel::Additive(gam)) = find(ModelFamily::Gam).map(|f| &f.model) {
        let quad = fit_quadratic::<f64>(train)?;
        let mut rows = Vec::new();
        for (which, name) in [(Component::Road, "road"), (Component::Home, "home")] {
            let ranks: Vec<f64> = train
                .games()
                .iter()
                .map(|g| (if which == Component::Road { g.road_rank } else { g.home_rank }) as f64)
                .collect();
            let effect = |x: f64| if which == Component::Road { quad.road_effect(x) } else { quad.home_effect(x) };
            let centre = ranks.iter().map(|&x| effect(x)).sum::<f64>() / ranks.len() as f64;
            let top = ranks.iter().copied().fold(1.0, f64::max) as usize;
            let grid: Vec<f64> = (1..=top).map(|r| r as f64).collect();
            let band = match component_band(gam, which, &grid) {
                Ok(b) => Some(b),
                Err(Error::NotConverged) => {
                    log::warn!("additive fit did not converge; bands omitted");
                    None
                }
                Err(e) => return Err(e),
            };
            for (k, &x) in grid.iter().enumerate() {
                let (lo, hi) = band
                    .as_ref()
                    .map_or((String::new(), String::new()), |b| (b[k].lower.to_string(), b[k].upper.to_string()));
                rows.push(vec![
                    name.to_string(),
                    x.to_string(),
                    gam.component(which).evaluate(x).to_string(),
                    lo,
                    hi,
                    (effect(x) - centre).to_string(),
                ]);
            }
        }
        let text = csv_text(&["component", "rank", "estimate", "lower", "upper", "quadratic"], rows)?;
        write_atomic(&out.join("gam_components.csv"), &text)?;
    }

    if find(ModelFamily::Loess).is_some() {
        let curve = match find(ModelFamily::Loess).and_then(|f| f.tuning.as_ref()) {
            Some(Tuning::Span(c)) => c.clone(),
            _ => select_span_cv(train, &default_span_grid(), config.folds, config.seed, config.normalize)?,
        };
        write_atomic(&out.join("loess_cv.csv"), &span_csv(&curve)?)?;
    }

    let iso = find(ModelFamily::Isotropic).map(|f| match &f.tuning {
        Some(Tuning::Sigma(c)) => Ok(c.clone()),
        _ => select_sigma_loo(train, &default_sigma_grid()),
    });
    let aniso = find(ModelFamily::Anisotropic).map(|f| match &f.tuning {
        Some(Tuning::Aniso(s)) => Ok(s.clone()),
        _ => select_aniso_cv(train, &default_sigma_x_grid(), &default_sigma_y_grid(), config.folds, config.seed),
    });
    if iso.is_some() || aniso.is_some() {
        let iso = iso.transpose()?;
        let aniso = aniso.transpose()?;
        write_atomic(&out.join("kernel_cv.csv"), &kernel_csv(iso.as_ref(), aniso.as_ref())?)?;
    }
    Ok(())
}

fn cmd_synth(config: &SynthConfig, output: Option<&Path>) -> Result<()> {
    let data = generate_synthetic(config)?;
    let text = to_csv(&data)?;
    match output {
        Some(path) => {
            write_atomic(path, &text)?;
            log::info!("wrote {} games to {}", data.len(), path.display());
            Ok(())
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input } => cmd_ingest(&input),
        Command::Split {
            input,
            split,
            seed,
            out_dir,
        } => cmd_split(&input, &split, seed, &out_dir),
        Command::Fit {
            input,
            model,
            hyper,
            seed,
            out_dir,
        } => cmd_fit(&RunConfig::new(input, model.families(), &hyper, seed, out_dir)?),
        Command::Predict {
            model_file,
            road_rank,
            home_rank,
        } => cmd_predict(&model_file, road_rank, home_rank).map(|_| ()),
        Command::Tune {
            input,
            model,
            hyper,
            seed,
            out_dir,
        } => cmd_tune(&RunConfig::new(input, model.families(), &hyper, seed, out_dir)?),
        Command::Report {
            input,
            split,
            partitions,
            model,
            hyper,
            seed,
            out_dir,
        } => {
            let mut config = RunConfig::new(input, model.families(), &hyper, seed, out_dir)?;
            config.split_mode = match split.split {
                SplitChoice::Chrono => SplitMode::Chronological,
                SplitChoice::Random => SplitMode::Random { seed },
            };
            config.train_count = split.train_count;
            config.partitions = partitions;
            cmd_report(&config)
        }
        Command::Synth {
            n,
            coefficients,
            noise,
            rank_max,
            seed,
            output,
        } => {
            let coefficients = match coefficients {
                Some(c) => <[f64; 5]>::try_from(c)
                    .map_err(|_| Error::param("synth", "--coefficients takes exactly five values"))?,
                None => REFERENCE_COEFFICIENTS,
            };
            let config = SynthConfig {
                n,
                coefficients,
                noise_sigma: noise,
                rank_max,
                seed,
            };
            cmd_synth(&config, output.as_deref())
        }
    }
}

/// Parse arguments, run, and map failures to exit codes: 1 for internal
/// errors, 2 for usage and configuration errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> HyperArgs {
        HyperArgs {
            df: 4.0,
            span: None,
            sigma: None,
            sigma_x: None,
            sigma_y: None,
            folds: 10,
            raw_ranks: false,
        }
    }

    #[test]
    fn config_validation() {
        let mk = |h: HyperArgs| RunConfig::new("x".into(), vec![], &h, 0, ".".into());
        assert!(mk(hyper()).is_ok());
        let err = mk(HyperArgs { span: Some(0.0), ..hyper() }).unwrap_err();
        assert!(err.is_usage() && err.to_string().contains("span must lie in (0, 1]"));
        assert!(mk(HyperArgs { df: 1.5, ..hyper() }).is_err());
        assert!(mk(HyperArgs { sigma: Some(-1.0), ..hyper() }).is_err());
        assert!(mk(HyperArgs { sigma_x: Some(10.0), ..hyper() }).is_err());
        assert!(mk(HyperArgs { folds: 1, ..hyper() }).is_err());
    }

    #[test]
    fn default_train_count_is_three_quarters() {
        assert_eq!(default_train_count(6024), 4518);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
