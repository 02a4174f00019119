//! `fss` — productivity scores, rankings and dispersion from the command line.
//!
//! Exit codes: 0 ok, 1 validation or domain error, 2 I/O error, 3 configuration error.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fss_core::config::{config_to_string, load_config};
use fss_core::dispersion::{overall_profiles, ClassProfile, ConcordanceMode};
use fss_core::export::{
    dispersion_summary_json, rankings_json, read_class_matrix, read_rankings_csv, read_staff_csv,
    scores_json, write_dispersion_csv, write_rankings_csv, write_scores_csv,
};
use fss_core::pipeline::{run, NO_ELIGIBLE_SCOPE};
use fss_core::synth::{generate_rows, SynthConfig};
use fss_core::{
    dispersion_report, fixtures, load_dataset, AnalysisConfig, Dataset, Error, InputPaths, Level,
    PipelineOutputF64, WeightRules,
};
use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "fss",
    version,
    about = "Research productivity (FSS) scores, rankings and dispersion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Concordance {
    /// Mean over universities of their own class shares
    Mean,
    /// Class shares of all sub-scopes in the group pooled
    Pooled,
}

#[derive(Args)]
struct Common {
    /// Flat key = value analysis configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Byline weight table (TOML)
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// Directory holding taxonomy.csv, researchers.csv, salaries.csv, publications.csv, authorships.csv
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the five input files and print the report
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compute SDS, UDA and university scores and all rankings
    Compute {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        outdir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print ranking lists, optionally filtered by level and scope
    Rank {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        level: Option<Level>,
        #[arg(long)]
        scope: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Within-university dispersion of classes (Δ, R, concordance)
    Dispersion {
        /// Class matrix CSV (university_id,scope_code,class; scope ALL = overall class)
        #[arg(long, conflicts_with_all = ["rankings", "input"])]
        classes: Option<PathBuf>,
        /// Staff sizes CSV (university_id,staff) for a class matrix
        #[arg(long, requires = "classes")]
        staff: Option<PathBuf>,
        /// rankings.csv written by `compute`: overall class vs UDA classes
        #[arg(long, conflicts_with = "input")]
        rankings: Option<PathBuf>,
        /// Compute rankings from input files first
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// With --input: analyze this UDA against its SDSs instead of overall vs UDAs
        #[arg(long, requires = "input")]
        uda: Option<String>,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "mean")]
        concordance: Concordance,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Write a seeded synthetic dataset
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        universities: Option<usize>,
        #[arg(long)]
        sds: Option<usize>,
        #[arg(long)]
        udas: Option<usize>,
        #[arg(long)]
        share_position_weighted: Option<f64>,
        /// Analysis configuration stored with the dataset's period
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Write the shipped class-matrix fixtures
    Fixtures {
        #[arg(long)]
        outdir: PathBuf,
    },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => 2,
            Error::Config(_) => 3,
            _ => 1,
        };
        let message = match &e {
            Error::Invalid(report) => format!(
                "{e}\n{}",
                serde_json::to_string_pretty(report).expect("report serializes")
            ),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("I/O error on {}: {e}", path.display()),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn analysis_config(path: Option<&Path>) -> CliResult<AnalysisConfig> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => AnalysisConfig::default(),
    })
}

fn weight_rules(path: Option<&Path>) -> CliResult<WeightRules> {
    Ok(match path {
        Some(p) => WeightRules::load(p)?,
        None => WeightRules::default(),
    })
}

fn snapshot(manifest: &mut RunManifest, config: &AnalysisConfig, rules: Option<&WeightRules>) {
    for line in config_to_string(config).lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            manifest.config.insert(k.to_string(), v.to_string());
        }
    }
    if let Some(rules) = rules {
        manifest
            .config
            .insert("weights".into(), rules.to_toml_string());
    }
}

/// Writes to stdout; a closed pipe (`fss rank ... | head`) is not an error.
fn emit(text: &str) -> CliResult {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure {
            code: 2,
            message: format!("I/O error on stdout: {e}"),
        }),
        _ => Ok(()),
    }
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_failure(path, e))
}

fn load(
    args: &InputArgs,
    manifest: Option<&mut RunManifest>,
) -> CliResult<(Dataset, AnalysisConfig, WeightRules)> {
    let config = analysis_config(args.common.config.as_deref())?;
    let rules = weight_rules(args.common.weights.as_deref())?;
    let paths = InputPaths::in_dir(&args.input);
    if let Some(m) = manifest {
        snapshot(m, &config, Some(&rules));
        for p in paths.all() {
            m.input(p, &read_bytes(p)?);
        }
    }
    let (ds, report) = load_dataset(&paths, config.clone())?;
    for w in &report.warnings {
        log::warn!("{}: {}", w.location, w.message);
    }
    Ok((ds, config, rules))
}

struct Outdir<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl<'a> Outdir<'a> {
    fn new(dir: &'a Path, manifest: RunManifest) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        Ok(Self { dir, manifest })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_failure(&path, e))?;
        self.manifest.output(name, bytes);
        Ok(())
    }

    fn finish(self) -> CliResult {
        let dir = self.dir;
        self.manifest.finish(dir).map_err(|e| io_failure(dir, e))?;
        Ok(())
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> fss_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn pipeline(ds: &Dataset, rules: &WeightRules) -> CliResult<PipelineOutputF64> {
    let out = run::<f64>(ds, rules)?;
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

fn cmd_validate(input: &InputArgs, format: Format) -> CliResult {
    let config = analysis_config(input.common.config.as_deref())?;
    let (report, failed) = match load_dataset(&InputPaths::in_dir(&input.input), config) {
        Ok((_, report)) => (report, false),
        Err(Error::Invalid(report)) => (*report, true),
        Err(e) => return Err(e.into()),
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => {
            let mut text = String::from("severity,code,location,message\n");
            let rows = report
                .errors
                .iter()
                .map(|i| ("error", i))
                .chain(report.warnings.iter().map(|i| ("warning", i)));
            for (severity, i) in rows {
                let message = i.message.replace('"', "\"\"");
                text += &format!("{severity},{},{},\"{message}\"\n", i.code, i.location);
            }
            text
        }
    };
    emit(&text)?;
    if failed {
        return Err(Failure {
            code: 1,
            message: format!("validation failed with {} error(s)", report.errors.len()),
        });
    }
    Ok(())
}

fn cmd_compute(input: &InputArgs, outdir: &Path, format: Format) -> CliResult {
    let mut manifest = RunManifest::start("compute");
    let (ds, _, rules) = load(input, Some(&mut manifest))?;
    let out = pipeline(&ds, &rules)?;
    manifest.warnings = out.warnings.clone();
    if out.is_empty() {
        return Err(Failure {
            code: 1,
            message: format!("warning: {NO_ELIGIBLE_SCOPE}; no score files written"),
        });
    }
    let mut dir = Outdir::new(outdir, manifest)?;
    let sets = [
        ("sds", &out.sds),
        ("uda", &out.uda),
        ("univ", &out.university),
    ];
    for (name, set) in sets {
        match format {
            Format::Csv => dir.write(
                &format!("scores_{name}.csv"),
                &csv_bytes(|b| write_scores_csv(set, b))?,
            )?,
            Format::Json => {
                dir.write(&format!("scores_{name}.json"), scores_json(set)?.as_bytes())?
            }
        }
    }
    match format {
        Format::Csv => dir.write(
            "rankings.csv",
            &csv_bytes(|b| write_rankings_csv(&out.rankings, b))?,
        )?,
        Format::Json => dir.write("rankings.json", rankings_json(&out.rankings)?.as_bytes())?,
    }
    dir.finish()
}

fn cmd_rank(
    input: &InputArgs,
    level: Option<Level>,
    scope: Option<&str>,
    format: Format,
) -> CliResult {
    let (ds, _, rules) = load(input, None)?;
    let out = pipeline(&ds, &rules)?;
    let lists: Vec<_> = out
        .rankings
        .into_iter()
        .filter(|l| level.is_none_or(|v| l.level == v) && scope.is_none_or(|s| l.scope_code == s))
        .collect();
    if lists.is_empty() {
        return Err(Failure {
            code: 1,
            message: "no ranking list matches the requested level/scope".into(),
        });
    }
    let text = match format {
        Format::Csv => {
            String::from_utf8(csv_bytes(|b| write_rankings_csv(&lists, b))?).expect("utf-8")
        }
        Format::Json => rankings_json(&lists)? + "\n",
    };
    emit(&text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_dispersion(
    classes: Option<&Path>,
    staff: Option<&Path>,
    rankings: Option<&Path>,
    input: Option<&Path>,
    uda: Option<&str>,
    common: &Common,
    concordance: Concordance,
    outdir: &Path,
) -> CliResult {
    let mut manifest = RunManifest::start("dispersion");
    let profiles: Vec<ClassProfile> = if let Some(path) = classes {
        let staff_map = match staff {
            Some(p) => {
                let bytes = read_bytes(p)?;
                manifest.input(p, &bytes);
                Some(read_staff_csv(bytes.as_slice())?)
            }
            None => None,
        };
        let bytes = read_bytes(path)?;
        manifest.input(path, &bytes);
        read_class_matrix(bytes.as_slice(), staff_map.as_ref())?
    } else if let Some(path) = rankings {
        let bytes = read_bytes(path)?;
        manifest.input(path, &bytes);
        overall_profiles(&read_rankings_csv(bytes.as_slice())?)
    } else if let Some(dir) = input {
        let args = InputArgs {
            input: dir.to_path_buf(),
            common: Common {
                config: common.config.clone(),
                weights: common.weights.clone(),
            },
        };
        let (ds, _, rules) = load(&args, Some(&mut manifest))?;
        let out = pipeline(&ds, &rules)?;
        match uda {
            Some(code) => out.uda_profiles(code),
            None => out.overall_profiles(),
        }
    } else {
        return Err(Failure {
            code: 3,
            message: "dispersion needs one of --classes, --rankings or --input".into(),
        });
    };
    let mode = match concordance {
        Concordance::Mean => ConcordanceMode::MeanOfShares,
        Concordance::Pooled => ConcordanceMode::Pooled,
    };
    manifest
        .config
        .insert("concordance".into(), format!("{mode:?}"));
    let report = dispersion_report::<f64>(&profiles, mode);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    manifest.warnings = report.warnings.clone();
    let mut dir = Outdir::new(outdir, manifest)?;
    dir.write(
        "dispersion_report.csv",
        &csv_bytes(|b| write_dispersion_csv(&report, b))?,
    )?;
    dir.write(
        "dispersion_report.json",
        (dispersion_summary_json(&report)? + "\n").as_bytes(),
    )?;
    dir.finish()
}

fn cmd_generate(cfg: SynthConfig, config: Option<&Path>, outdir: &Path) -> CliResult {
    let cfg = SynthConfig {
        analysis: match config {
            Some(p) => load_config(p)?,
            None => cfg.analysis,
        },
        ..cfg
    };
    let mut manifest = RunManifest::start("generate");
    snapshot(&mut manifest, &cfg.analysis, None);
    manifest.config.insert("seed".into(), cfg.seed.to_string());
    manifest.config.insert(
        "synth".into(),
        serde_json::to_string(&cfg).expect("config serializes"),
    );
    let rows = generate_rows(&cfg)?;
    let texts = rows.to_csv_strings()?;
    let mut dir = Outdir::new(outdir, manifest)?;
    let names = InputPaths::in_dir("");
    for (path, text) in names.all().into_iter().zip(&texts) {
        dir.write(&path.display().to_string(), text.as_bytes())?;
    }
    let cfg_text = config_to_string(&cfg.analysis);
    dir.write("analysis.conf", cfg_text.as_bytes())?;
    dir.finish()
}

fn cmd_fixtures(outdir: &Path) -> CliResult {
    let mut dir = Outdir::new(outdir, RunManifest::start("fixtures"))?;
    for (name, text) in fixtures::ALL {
        dir.write(name, text.as_bytes())?;
    }
    dir.finish()
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Validate { input, format } => cmd_validate(&input, format),
        Command::Compute {
            input,
            outdir,
            format,
        } => cmd_compute(&input, &outdir, format),
        Command::Rank {
            input,
            level,
            scope,
            format,
        } => cmd_rank(&input, level, scope.as_deref(), format),
        Command::Dispersion {
            classes,
            staff,
            rankings,
            input,
            uda,
            common,
            concordance,
            outdir,
        } => cmd_dispersion(
            classes.as_deref(),
            staff.as_deref(),
            rankings.as_deref(),
            input.as_deref(),
            uda.as_deref(),
            &common,
            concordance,
            &outdir,
        ),
        Command::Generate {
            seed,
            universities,
            sds,
            udas,
            share_position_weighted,
            config,
            outdir,
        } => {
            let d = SynthConfig::with_seed(seed);
            let cfg = SynthConfig {
                n_universities: universities.unwrap_or(d.n_universities),
                n_sds: sds.unwrap_or(d.n_sds),
                n_uda: udas.unwrap_or(d.n_uda),
                share_position_weighted: share_position_weighted
                    .unwrap_or(d.share_position_weighted),
                ..d
            };
            cmd_generate(cfg, config.as_deref(), &outdir)
        }
        Command::Fixtures { outdir } => cmd_fixtures(&outdir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 3 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
