use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emtlab_core::energycond::{Status, TableEntry};
use emtlab_core::scene::{
    load_scene_file, run_check, run_classify, run_emt, run_scan, run_verify, Report, RunOptions,
    Scene,
};

#[derive(Parser, Debug)]
#[command(name = "emtlab", version, about = "Energy-momentum tensors and energy conditions of gauge-Higgs-Dirac scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump sector tensors at the region samples.
    Emt(Common),
    /// Run the trace, divergence, field-equation, Weitzenböck and variational suites.
    Verify(Common),
    /// Check the scene's energy conditions at the region samples.
    Check(Common),
    /// Aggregate all four energy conditions per sector.
    Classify(Common),
    /// Sweep one scene parameter and report margins.
    Scan(ScanArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    /// Stencil order.
    #[arg(long, value_parser = ["2", "4"])]
    order: Option<String>,
    /// Absolute residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Samples per region axis.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed in hexadecimal, e.g. 0x5EED.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Worker threads; defaults to EMTLAB_THREADS, then available parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    param: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| format!("invalid hex seed '{s}': {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    let (common, scan) = match &cli.command {
        Command::Emt(c) | Command::Verify(c) | Command::Check(c) | Command::Classify(c) => (c, None),
        Command::Scan(s) => (&s.common, Some(s)),
    };
    setup_threads(common.threads)?;
    let scene = prepare(common)?;
    let opts = RunOptions {
        seed: common.seed.unwrap_or(emtlab_core::numerics::DEFAULT_SEED),
        ..RunOptions::default()
    };
    let err = |e: emtlab_core::Error| e.to_string();
    let (report, summary) = match &cli.command {
        Command::Emt(_) => {
            let r = run_emt(&scene, &opts).map_err(err)?;
            let s = emt_summary(&r);
            (r, s)
        }
        Command::Verify(_) => {
            let r = run_verify(&scene, &opts).map_err(err)?;
            let s = verify_summary(&r);
            (r, s)
        }
        Command::Check(_) => {
            let r = run_check(&scene, &opts).map_err(err)?;
            let s = conditions_summary(&r);
            (r, s)
        }
        Command::Classify(_) => {
            let r = run_classify(&scene, &opts).map_err(err)?;
            let s = conditions_summary(&r);
            (r, s)
        }
        Command::Scan(_) => {
            let s = scan.expect("scan arguments");
            let r = run_scan(&scene, &opts, &s.param, s.from, s.to, s.steps).map_err(err)?;
            let text = scan_summary(&r);
            (r, text)
        }
    };
    print!("{summary}");
    if let Some(path) = &common.out {
        let format = common.format.unwrap_or_else(|| {
            match path.extension().and_then(|e| e.to_str()) {
                Some("csv") => Format::Csv,
                _ => Format::Json,
            }
        });
        let text = match format {
            Format::Json => report.to_json(),
            Format::Csv => report.to_csv().map_err(err)?,
        };
        std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(report.exit_code() as u8)
}

fn setup_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("EMTLAB_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("EMTLAB_THREADS must be a positive integer, got '{v}'"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn prepare(c: &Common) -> Result<Scene, String> {
    if !c.scene.exists() {
        return Err(format!("scene file {} not found", c.scene.display()));
    }
    let mut scene = load_scene_file(&c.scene).map_err(|e| e.to_string())?;
    if let Some(h) = c.h {
        if !(h > 0.0) {
            return Err("--h must be positive".into());
        }
        scene.tolerances.h = h;
    }
    if let Some(o) = &c.order {
        scene.tolerances.order = o.parse().map_err(|_| "--order must be 2 or 4")?;
    }
    if let Some(t) = c.tol {
        if !(t > 0.0) {
            return Err("--tol must be positive".into());
        }
        scene.tolerances.residual = t;
    }
    if let Some(n) = c.samples {
        scene.set_samples(n);
    }
    Ok(scene)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn emt_summary(r: &Report) -> String {
    let mut out = String::new();
    for (i, p) in r.points.iter().enumerate() {
        let _ = write!(out, "point {i} {}", fmt_vec(&p.coordinates));
        for s in &p.sectors {
            let _ = write!(out, "  {} trace {:.6e}", s.sector, s.trace);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{} points", r.points.len());
    out
}

fn witnesses(table: &[TableEntry]) -> String {
    let mut out = String::new();
    for e in table {
        if let Some(w) = &e.witness {
            let _ = writeln!(
                out,
                "witness: {} {} violated at {} with xi = {} margin {:.6e}",
                e.sector,
                e.condition,
                fmt_vec(&w.point),
                fmt_vec(w.verdict.witness.as_slice()),
                w.verdict.margin
            );
        }
    }
    out
}

fn conditions_summary(r: &Report) -> String {
    if r.points.is_empty() {
        return "empty region\n".into();
    }
    let mut out = r.summary_table();
    out.push_str(&witnesses(&r.table));
    out
}

fn verify_summary(r: &Report) -> String {
    let mut rows: Vec<(String, String, f64, f64, bool)> = Vec::new();
    for res in &r.residuals {
        match rows
            .iter_mut()
            .find(|row| row.0 == res.suite && row.1 == res.sector)
        {
            Some(row) => {
                row.2 = row.2.max(res.value);
                row.4 &= res.holds();
            }
            None => rows.push((
                res.suite.clone(),
                res.sector.clone(),
                res.value,
                res.tolerance,
                res.holds(),
            )),
        }
    }
    let mut out = format!("{:<16} {:<8} {:>14} {:>10}  status\n", "suite", "sector", "max residual", "tolerance");
    for (suite, sector, v, t, ok) in rows {
        let _ = writeln!(
            out,
            "{suite:<16} {sector:<8} {v:>14.6e} {t:>10.1e}  {}",
            if ok { "holds" } else { "violated" }
        );
    }
    out
}

fn scan_summary(r: &Report) -> String {
    let mut out = String::new();
    for s in &r.scan {
        let _ = writeln!(out, "{} = {:.6}", s.parameter, s.value);
        for e in &s.table {
            let mark = match e.status {
                Status::Holds => "holds",
                Status::Violated => "violated",
                Status::Inconclusive => "inconclusive",
            };
            let _ = writeln!(
                out,
                "  {:<8} {:<4} {:<12} worst margin {:.6e}",
                e.sector.name(),
                e.condition.name(),
                mark,
                e.worst_margin
            );
        }
    }
    out
}
