use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use harperband::actions::edge_weights;
use harperband::classical::{find_critical_points, reeb_graph, separatrix_graph};
use harperband::harness::{
    emit, parse_etas, parse_formats, parse_kgrid, run_compare, run_predict, saddle_energies, spectra, with_threads,
    write_file, Format, RunConfig,
};
use harperband::landau::{average_first_order, level_topology_report, LandauParams, Potential2D};
use harperband::singular_bs::Scenario;
use harperband::symbol::parse_symbol;
use harperband::{Error, Result};

#[derive(Parser)]
#[command(name = "harperband", version, about = "Exact and semiclassical spectra of Harper-like operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critical points, Reeb graph and separatrix data (classical only).
    Analyze(Common),
    /// Exact band structure.
    Spectrum(Common),
    /// Singular Bohr–Sommerfeld predictions near each separatrix.
    Predict(Common),
    /// Exact bands against predictions.
    Compare(Common),
    /// Averaged Landau-level symbols and their level-set topology.
    Landau(LandauArgs),
}

#[derive(Args)]
struct Common {
    /// Symbol JSON file.
    #[arg(long)]
    symbol: PathBuf,
    /// Flux values, comma separated.
    #[arg(long, default_value = "64")]
    eta: String,
    /// Quasimomentum grid, e.g. 16x16.
    #[arg(long, default_value = "16x16")]
    kgrid: String,
    /// Half-width of the spectral window in units of h.
    #[arg(long, default_value_t = 5.0)]
    window: f64,
    /// Force a matching template (Y, X or DEG).
    #[arg(long)]
    scenario: Option<String>,
    /// Separatrix energies, comma separated (default: every saddle value).
    #[arg(long)]
    energy: Option<String>,
    /// Output directory; JSON goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats.
    #[arg(long, default_value = "csv,json,svg")]
    format: String,
    #[arg(long, env = "HARPERBAND_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct LandauArgs {
    /// Potential JSON file (symbol schema plus `periods`).
    #[arg(long)]
    potential: PathBuf,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Highest Landau level index.
    #[arg(long, default_value_t = 2)]
    levels: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "HARPERBAND_THREADS")]
    threads: Option<usize>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn config(c: &Common) -> Result<RunConfig> {
    let symbol = parse_symbol(&read(&c.symbol)?)?;
    let mut cfg = RunConfig::new(symbol, c.symbol.display().to_string());
    cfg.etas = parse_etas(&c.eta)?;
    cfg.kgrid = parse_kgrid(&c.kgrid)?;
    cfg.window = c.window;
    cfg.scenario = c.scenario.as_deref().map(str::parse::<Scenario>).transpose()?;
    cfg.energies = c
        .energy
        .as_deref()
        .map(|s| {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad energy `{t}`"))))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    cfg.out_dir = c.out.clone();
    cfg.formats = parse_formats(&c.format)?;
    cfg.threads = c.threads;
    cfg.validate()?;
    Ok(cfg)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

/// Write `doc` as `name` under `--out`, or print it.
fn deliver(out: Option<&Path>, name: &str, doc: &Value) -> Result<()> {
    match out {
        Some(dir) => write_file(&dir.join(name), &pretty(doc)),
        None => {
            print!("{}", pretty(doc));
            Ok(())
        }
    }
}

fn analyze(cfg: &RunConfig) -> Result<()> {
    let s = &cfg.symbol;
    let crit = find_critical_points(s)?;
    let points: Vec<Value> = crit
        .iter()
        .map(|c| json!({"p": c.location.p, "x": c.location.x, "kind": c.kind, "value": c.value, "w": c.w}))
        .collect();
    let mut seps = Vec::new();
    for e in saddle_energies(s)? {
        let g = separatrix_graph(s, e)?;
        let w = edge_weights(s, &g)?;
        seps.push(json!({"graph": g.to_json_value(8), "edge_weights": w}));
    }
    let doc = json!({
        "schema_version": 1,
        "config": cfg.to_json_value(),
        "critical_points": points,
        "reeb_graph": reeb_graph(s)?.to_json_value(),
        "separatrices": seps,
    });
    deliver(cfg.out_dir.as_deref(), "analyze.json", &doc)
}

fn spectrum(cfg: &RunConfig) -> Result<()> {
    let tables = spectra(cfg)?;
    let doc = json!({
        "schema_version": 1,
        "config": cfg.to_json_value(),
        "spectra": tables.iter().map(|t| t.to_json_value()).collect::<Vec<_>>(),
    });
    if let Some(dir) = &cfg.out_dir {
        if cfg.formats.contains(&Format::Csv) {
            for t in &tables {
                write_file(&dir.join(format!("bands_eta{}.csv", t.eta)), &t.to_csv())?;
            }
        }
        if cfg.formats.contains(&Format::Json) {
            write_file(&dir.join("spectrum.json"), &pretty(&doc))?;
        }
        Ok(())
    } else {
        deliver(None, "", &doc)
    }
}

fn landau(a: &LandauArgs) -> Result<()> {
    let v = Potential2D::parse(&read(&a.potential)?)?;
    LandauParams::new(0, a.h, a.epsilon)?;
    if a.threads == Some(0) {
        return Err(Error::Config("thread count must be positive".into()));
    }
    let doc = with_threads(a.threads, || -> Result<Value> {
        let symbols = (0..=a.levels)
            .map(|n| Ok(average_first_order(&v, LandauParams::new(n, a.h, a.epsilon)?)?.to_json_value()))
            .collect::<Result<Vec<_>>>()?;
        let report = level_topology_report(&v, a.h, a.epsilon, 0..=a.levels)?;
        Ok(json!({
            "schema_version": 1,
            "potential": a.potential.display().to_string(),
            "periods": [v.periods().0, v.periods().1],
            "h": a.h,
            "epsilon": a.epsilon,
            "levels": symbols,
            "topology": report,
        }))
    })??;
    deliver(a.out.as_deref(), "landau.json", &doc)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(c) => analyze(&config(&c)?),
        Command::Spectrum(c) => {
            let cfg = config(&c)?;
            with_threads(cfg.threads, || spectrum(&cfg))?
        }
        Command::Predict(c) => {
            let cfg = config(&c)?;
            deliver(cfg.out_dir.as_deref(), "predict.json", &run_predict(&cfg)?)
        }
        Command::Compare(c) => {
            let cfg = config(&c)?;
            let report = run_compare(&cfg)?;
            match &cfg.out_dir {
                Some(dir) => {
                    for p in emit(&report, &cfg.symbol, &cfg.formats, dir)? {
                        eprintln!("wrote {}", p.display());
                    }
                    Ok(())
                }
                None => deliver(None, "", &serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?),
            }
        }
        Command::Landau(a) => landau(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_config() => {
            eprintln!("error [{}]: {e}", e.module());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure [{}]: {e}", e.module());
            ExitCode::from(3)
        }
    }
}
