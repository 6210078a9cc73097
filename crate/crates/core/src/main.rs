use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use innovcp::error::{Error, Result};
use innovcp::ingest::export_to_path;
use innovcp::nulldist::{self, write_atomic, NullTable};
use innovcp::{
    fit, generate, ingest, run_study, test_process, BandwidthRule, ColumnRef, DgpSpec, FitConfig,
    FitMode, IngestSpec, InnovationSpec, KernelSpec, Model, StudyConfig, Transform, WeightSpec,
};

const CACHE_ENV: &str = "INNOVCP_CACHE_DIR";

#[derive(Parser)]
#[command(name = "innovcp", version, about = "Change-point test for the innovation distribution of nonparametric autoregressions")]
struct Cli {
    /// Worker threads for simulations (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test on a series read from a delimited file
    Test(TestArgs),
    /// Simulate the null distribution table
    Nulltable(NullTableArgs),
    /// Run a Monte Carlo rejection-rate study
    Study(StudyArgs),
    /// Simulate a series and write it as CSV
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct NullParams {
    /// Null table file; built and written there when missing
    #[arg(long)]
    null_table: Option<PathBuf>,
    #[arg(long, default_value_t = nulldist::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = nulldist::DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, default_value_t = nulldist::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column name or zero-based index
    #[arg(long, default_value = "0")]
    column: String,
    /// Column with row labels such as dates
    #[arg(long)]
    label_column: Option<String>,
    /// none, diff or difflog
    #[arg(long, default_value = "none")]
    transform: Transform,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// The file has no header row
    #[arg(long)]
    no_header: bool,
    /// hetero or homo
    #[arg(long, default_value = "hetero")]
    mode: FitMode,
    /// gaussian or triweight
    #[arg(long, default_value = "gaussian")]
    kernel: KernelSpec,
    /// c in the bandwidth c * n^(-1/4)
    #[arg(long, default_value_t = 1.0)]
    bandwidth_c: f64,
    /// trivial or interval:a,b,kappa
    #[arg(long, default_value = "trivial")]
    weight: WeightSpec,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[command(flatten)]
    null: NullParams,
    /// Write the s-profile CSV here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write fitted values and residuals CSV here
    #[arg(long)]
    fit_out: Option<PathBuf>,
}

#[derive(Args)]
struct NullTableArgs {
    #[arg(long, default_value_t = nulldist::DEFAULT_GRID)]
    grid: usize,
    #[arg(long, default_value_t = nulldist::DEFAULT_REPLICATIONS)]
    reps: usize,
    #[arg(long, default_value_t = nulldist::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the 0.90/0.95/0.99 quantiles as CSV here
    #[arg(long)]
    quantiles: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    null: NullParams,
    /// Output directory for rejection.csv and rejection.txt
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Process description (TOML); overrides the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    /// ar1-half, arch1-paper or iid
    #[arg(long, default_value = "ar1-half")]
    model: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            warn!("could not configure thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Nulltable(a) => cmd_nulltable(a),
        Command::Study(a) => cmd_study(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    match std::env::var_os("HOME") {
        Some(home) => Path::new(&home).join(".cache").join("innovcp"),
        None => PathBuf::from(".innovcp-cache"),
    }
}

fn obtain_table(p: &NullParams) -> Result<NullTable> {
    match &p.null_table {
        Some(path) if path.exists() => NullTable::load(path),
        Some(path) => {
            warn!(
                "null table {} not found; building grid={} reps={} seed={}",
                path.display(),
                p.grid,
                p.reps,
                p.seed
            );
            let table = nulldist::build_table(p.grid, p.reps, p.seed)?;
            table.save(path)?;
            Ok(table)
        }
        None => {
            let dir = default_cache_dir();
            let (table, built) = nulldist::load_or_build(&dir, p.grid, p.reps, p.seed)?;
            if built {
                warn!(
                    "built null table grid={} reps={} seed={} and cached it in {}",
                    p.grid,
                    p.reps,
                    p.seed,
                    dir.display()
                );
            }
            Ok(table)
        }
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, |w| w.write_all(bytes))
}

fn cmd_test(a: TestArgs) -> Result<()> {
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {}", a.level)));
    }
    if !a.delimiter.is_ascii() {
        return Err(Error::InvalidParameter("delimiter must be ASCII".into()));
    }
    let spec = IngestSpec {
        path: a.input.clone(),
        column: a.column.parse::<ColumnRef>().unwrap(),
        transform: a.transform,
        delimiter: a.delimiter as u8,
        header: !a.no_header,
        label_column: a.label_column.as_deref().map(|c| c.parse().unwrap()),
    };
    let data = ingest(&spec)?;
    let config = FitConfig::new(a.kernel, BandwidthRule::power_law(a.bandwidth_c), a.mode);
    let fitted = fit(&data.series, &config)?;
    let table = obtain_table(&a.null)?;
    let report = test_process(&fitted, &a.weight)?;
    let p = table.p_value(report.ks_stat);
    let report = report.with_p_value(p);

    let mut json = report.to_json();
    json["bandwidth"] = fitted.bandwidth_used.into();
    json["level"] = a.level.into();
    json["decision"] = if p <= a.level { "reject" } else { "fail-to-reject" }.into();
    json["changepoint_label"] = data.label_at(report.changepoint_index).into();
    json["null_table"] = serde_json::json!({
        "grid_size": table.grid_size(),
        "replications": table.replications(),
        "seed": table.seed(),
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("json"));

    if let Some(out) = &a.out {
        let mut buf = Vec::new();
        report.write_profile_csv(&mut buf)?;
        write_bytes(out, &buf)?;
    }
    if let Some(out) = &a.fit_out {
        let mut buf = Vec::new();
        fitted.write_csv(&mut buf)?;
        write_bytes(out, &buf)?;
    }
    Ok(())
}

fn cmd_nulltable(a: NullTableArgs) -> Result<()> {
    info!("simulating {} tucked sheets on a {}x{} grid", a.reps, a.grid, a.grid);
    let table = nulldist::build_table(a.grid, a.reps, a.seed)?;
    table.save(&a.out)?;
    if let Some(q) = &a.quantiles {
        write_atomic(q, |w| table.write_quantiles_csv(w))?;
    }
    println!(
        "q90={} q95={} q99={}",
        table.quantile(0.90),
        table.quantile(0.95),
        table.quantile(0.99)
    );
    Ok(())
}

fn cmd_study(a: StudyArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let config = StudyConfig::from_toml(&text)?;
    let table = obtain_table(&a.null)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let result = run_study(&config, &table, |row| {
        eprintln!(
            "{} n={} zeta={} c={}: {:.1}% ({} failures)",
            row.family.name(),
            row.n,
            row.zeta,
            row.c,
            100.0 * row.rejection_rate,
            row.failures
        );
    })?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    write_bytes(&a.out.join("rejection.csv"), &csv)?;
    let text = result.to_text();
    write_bytes(&a.out.join("rejection.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let spec = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            DgpSpec::from_toml(&text)?
        }
        None => DgpSpec::null(Model::preset(&a.model)?, InnovationSpec::StdNormal, a.n, a.seed),
    };
    let series = generate(&spec)?;
    export_to_path(&series, None, &a.out)
}
