use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use stoqham_core::analysis::{self, Sector};
use stoqham_core::bundle::TermKind;
use stoqham_core::circuit::LayeredCircuit;
use stoqham_core::construction::{construction_by_name, history_state, legal_sector, BuildOptions, Construction};
use stoqham_core::line1d::{self, ChainLayout, Classification, CYCLE_N4};
use stoqham_core::spectral::{check_stoquastic, mtx, solver_by_name, DEFAULT_ASSEMBLY_CAP};

#[derive(Parser)]
#[command(name = "stoqham", version, about = "Compile reversible circuits into stoquastic 2-local Hamiltonians and check them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write one Matrix Market file per term plus a JSON summary.
    Compile(Manifest),
    /// Stoquasticity, penalty and history-state checks; exit 1 on failure.
    Verify(VerifyArgs),
    /// Lowest eigenvalue, history energy and the angle bound.
    Spectrum(Manifest),
}

#[derive(Args, Clone)]
struct Manifest {
    #[arg(long, default_value = "grid2d")]
    construction: String,
    #[arg(long)]
    circuit: PathBuf,
    /// Weight of the output check.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Eigensolver: dense, lanczos or auto.
    #[arg(long, default_value = "auto")]
    mode: String,
    /// Basis the spectrum is taken on: full or legal.
    #[arg(long, default_value = "full")]
    sector: Sector,
    /// Largest dimension assembled.
    #[arg(long, default_value_t = DEFAULT_ASSEMBLY_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Print the one-dimensional cycle for four wires and diff it against the reference table.
    #[arg(long)]
    fig5: bool,
    /// Check a Matrix Market file for positive off-diagonal entries.
    #[arg(long)]
    mtx: Option<PathBuf>,
    #[arg(long)]
    construction: Option<String>,
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Loaded {
    con: Box<dyn Construction>,
    circuit: LayeredCircuit,
}

fn load(construction: &str, path: &Path) -> Result<Loaded> {
    let con = construction_by_name(construction)?;
    let (_, circuit) = analysis::load_circuit(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Loaded { con, circuit })
}

fn emit(value: &Value, out: Option<&Path>, name: &str) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    println!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), text + "\n")?;
    }
    Ok(())
}

fn compile(m: &Manifest) -> Result<bool> {
    let Loaded { con, circuit } = load(&m.construction, &m.circuit)?;
    let basis = con.basis(&circuit);
    let dim = basis.dim_u128();
    if dim > m.cap as u128 {
        bail!(stoqham_core::Error::TooLarge { dim, cap: m.cap as u128 });
    }
    let bundle = con.build(&circuit, &BuildOptions { delta: m.delta, ..Default::default() })?;
    let mut files = Vec::new();
    if let Some(dir) = &m.out {
        fs::create_dir_all(dir)?;
        for (kind, op) in bundle.assemble_terms(m.cap)? {
            let path = dir.join(format!("{}_{}.mtx", bundle.construction, kind.name()));
            mtx::write_mtx(&op, BufWriter::new(File::create(&path)?))?;
            files.push(path.display().to_string());
        }
    }
    let terms: Vec<Value> = bundle
        .terms
        .iter()
        .map(|t| json!({"kind": t.kind, "weight": t.weight, "local_terms": t.op.terms.len()}))
        .collect();
    let mut summary = json!({
        "construction": bundle.construction,
        "n_prime": circuit.n_prime,
        "rounds": circuit.rounds(),
        "site_dim": basis.site_dim,
        "sites": basis.sites,
        "dim": dim,
        "steps": bundle.steps,
        "terms": terms,
        "files": files,
    });
    if con.name() == "grid2d" {
        let d = stoqham_core::grid2d::GridDims::for_circuit(&circuit);
        summary["grid"] = json!(format!("{}x{}", d.rows, d.cols));
    }
    emit(&summary, m.out.as_deref(), "summary.json")?;
    Ok(true)
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    detail: Value,
}

fn fig5_check() -> Result<Check> {
    let cycle = line1d::run_cycle(4)?;
    let layout = ChainLayout { n_prime: 4, rounds: 2 };
    let mut diffs = Vec::new();
    for (k, cfg) in cycle.iter().enumerate() {
        let row = cfg.render(layout);
        let expect = CYCLE_N4.get(k).copied().unwrap_or("");
        let mark = if row == expect { ' ' } else { '!' };
        eprintln!("{mark} {k:>2}  {row}");
        if row != expect {
            diffs.push(json!({"row": k, "got": row, "expected": expect}));
        }
    }
    let pass = diffs.is_empty() && cycle.len() == CYCLE_N4.len();
    Ok(Check { name: "cycle".into(), pass, detail: json!({"rows": cycle.len(), "transitions": cycle.len() - 1, "diffs": diffs}) })
}

fn mtx_check(path: &Path) -> Result<Check> {
    let op = mtx::read_mtx(std::io::BufReader::new(File::open(path)?))?;
    let report = check_stoquastic(&[(path.to_str().unwrap_or("matrix"), &op)]);
    Ok(Check { name: "stoquastic".into(), pass: report.pass(), detail: serde_json::to_value(&report)? })
}

fn circuit_checks(construction: &str, path: &Path, delta: f64, seed: u64) -> Result<Vec<Check>> {
    let Loaded { con, circuit } = load(construction, path)?;
    let con = con.as_ref();
    let bundle = con.build(&circuit, &BuildOptions { delta, ..Default::default() })?;
    let mut checks = Vec::new();

    let stoq = bundle.stoquasticity();
    checks.push(Check { name: "stoquastic".into(), pass: stoq.pass(), detail: serde_json::to_value(&stoq)? });

    if let Some(pen) = bundle.term(TermKind::Penalty) {
        let legal = legal_sector(con, &circuit)?;
        let worst = legal.iter().map(|&s| pen.op.energy(&[(s, 1.0)].into_iter().collect())).fold(0.0, f64::max);
        checks.push(Check { name: "penalty_zero_on_legal".into(), pass: worst == 0.0, detail: json!({"legal_states": legal.len(), "max_penalty": worst}) });
    }

    let best = circuit.best_acceptance()?;
    let phi = history_state(con, &circuit, best.witness)?;
    let energies = bundle.energies(&phi);
    let total: f64 = energies.iter().map(|e| e.1).sum();
    let expected = delta * (1.0 - best.p_accept()) / (bundle.steps as f64 + 1.0);
    checks.push(Check {
        name: "history_energy".into(),
        pass: (total - expected).abs() <= 1e-10,
        detail: json!({"energy": total, "expected": expected, "p_accept": best.p_accept(), "terms": energies}),
    });

    if con.name() == "line1d" {
        checks.push(fig5_check()?);
        let layout = ChainLayout::for_circuit(&circuit);
        let legal: Vec<Vec<_>> = line1d::trace(&circuit, 0)?.iter().map(|c| c.tags()).collect();
        let bad = line1d::random_corruptions(layout, &legal, 1000, seed)
            .iter()
            .filter(|t| line1d::classify_illegal(layout, t) == Classification::Legal)
            .count();
        checks.push(Check { name: "corruptions_detected".into(), pass: bad == 0, detail: json!({"samples": 1000, "seed": seed, "classified_legal": bad}) });
    }
    Ok(checks)
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let mut checks = Vec::new();
    if a.fig5 {
        checks.push(fig5_check()?);
    }
    if let Some(p) = &a.mtx {
        checks.push(mtx_check(p)?);
    }
    if let Some(path) = &a.circuit {
        let name = a.construction.as_deref().unwrap_or("grid2d");
        checks.extend(circuit_checks(name, path, a.delta, a.seed)?);
    }
    if checks.is_empty() {
        bail!("nothing to verify: pass --fig5, --mtx or --circuit");
    }
    let pass = checks.iter().all(|c| c.pass);
    emit(&json!({"pass": pass, "checks": checks}), a.out.as_deref(), "verify.json")?;
    Ok(pass)
}

fn spectrum(m: &Manifest) -> Result<bool> {
    let Loaded { con, circuit } = load(&m.construction, &m.circuit)?;
    let con = con.as_ref();
    let solver = solver_by_name(&m.mode)?;
    let bundle = con.build(&circuit, &BuildOptions { delta: m.delta, ..Default::default() })?;
    let report = analysis::spectrum_report(&bundle, con, &circuit, m.sector, solver.as_ref(), m.cap, m.delta)?;
    let mut value = serde_json::to_value(&report)?;
    if m.sector == Sector::Full {
        if let Ok(r) = analysis::lowest(&bundle, con, &circuit, Sector::Legal, solver.as_ref(), m.cap) {
            value["legal_lambda_min"] = json!(r.lambda_min);
            value["full_vs_legal"] = json!((r.lambda_min - report.spectrum.lambda_min).abs());
        }
    }
    emit(&value, m.out.as_deref(), "spectrum.json")?;
    Ok(true)
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("STOQHAM_THREADS") {
        let n: usize = v.parse().with_context(|| format!("STOQHAM_THREADS=`{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = threads().and_then(|_| match &cli.cmd {
        Cmd::Compile(m) => compile(m),
        Cmd::Verify(a) => verify(a),
        Cmd::Spectrum(m) => spectrum(m),
    });
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
