use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pmed_core::bench::{monotonicity_violations, run_grid, to_table, BenchConfig};
use pmed_core::deploy::Deployment;
use pmed_core::model::fixtures::{F8_PATTERN, FIG3_MODEL_JSON, FIG3_QUERY_JSON};
use pmed_core::model::json::{parse_model, parse_query, ModelFile};
use pmed_core::model::{encrypt_model, encrypt_query, TransitionArrays};
use pmed_core::net::tcp::{connect_cp, serve_csp_for, CspServer};
use pmed_core::net::{Channel, InProcess};
use pmed_core::pgene::{accepted, encrypt_sequence, parse_sequence, pgene_match, MatchMode};
use pmed_core::pipeline::{recommend, recover_result, tpt, Codebook, PipelineParams};
use pmed_core::{par, Error};

#[derive(Parser)]
#[command(name = "pmed", version, about = "Private treatment recommendation and DNA matching")]
struct Cli {
    /// κ: prime size in bits; L(N) = 2κ.
    #[arg(long, global = true, default_value_t = 128)]
    key_size: u32,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Transport::Inproc)]
    transport: Transport,
    /// CSP address; with --transport tcp and no address a loopback CSP is started.
    #[arg(long, global = true)]
    csp_addr: Option<String>,
    /// IP the CSP accepts connections from (serve-csp only).
    #[arg(long, global = true)]
    cp_addr: Option<IpAddr>,
    /// Load keys written by `keygen` instead of deriving them from --seed.
    #[arg(long, global = true)]
    key_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    json: bool,
    /// Concurrent sessions; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Transport {
    Inproc,
    Tcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Verbatim,
    Snapshot,
}

#[derive(Subcommand)]
enum Command {
    /// Generate parameters, CP/CSP shares and user keys.
    Keygen {
        #[arg(long, default_value = "keys")]
        out: PathBuf,
    },
    /// Top-k recommendation on the bundled diabetes model.
    DemoFig3 {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        mvisit: usize,
        #[arg(long, default_value_t = 8)]
        mstate: usize,
        #[arg(long, default_value_t = 10000)]
        mweight: u64,
        #[arg(short, default_value_t = 3)]
        k: usize,
    },
    /// Error-tolerant match of a sequence against a pattern.
    Pgene {
        /// Sequence file (plain or FASTA) or a literal like GGCAT.
        sequence: String,
        /// Pattern file or literal; defaults to the bundled 9-base pattern.
        #[arg(long)]
        pattern: Option<String>,
        #[arg(long, default_value_t = 2)]
        mu: usize,
        #[arg(long, value_enum, default_value_t = Mode::Snapshot)]
        mode: Mode,
    },
    /// Timing grid over key sizes, query length and path length.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [256, 512])]
        key_sizes: Vec<u32>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
        query_lens: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 12])]
        path_lens: Vec<usize>,
    },
    /// Run the CSP over TCP until killed.
    ServeCsp,
}

enum Failure {
    Config(String),
    Abort(String),
    Fixture(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Abort(_) => 3,
            Failure::Fixture(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(_) | Error::Precondition(_) | Error::Domain => Failure::Config(e.to_string()),
            Error::Fixture(_) => Failure::Fixture(e.to_string()),
            _ => Failure::Abort(e.to_string()),
        }
    }
}

fn fixture(e: Error) -> Failure {
    Failure::Fixture(e.to_string())
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(m) | Failure::Abort(m) | Failure::Fixture(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        par::set_threads(n)?;
    }
    match &cli.command {
        Command::Keygen { out } => keygen(cli, out),
        Command::DemoFig3 { model, query, mvisit, mstate, mweight, k } => {
            let params = PipelineParams { mvisit: *mvisit, mstate: *mstate, mweight: *mweight, k: *k };
            demo_fig3(cli, model.as_deref(), query.as_deref(), params)
        }
        Command::Pgene { sequence, pattern, mu, mode } => {
            let mode = match mode {
                Mode::Verbatim => MatchMode::Verbatim,
                Mode::Snapshot => MatchMode::Snapshot,
            };
            pgene(cli, sequence, pattern.as_deref(), *mu, mode)
        }
        Command::Bench { key_sizes, trials, query_lens, path_lens } => {
            let cfg = BenchConfig {
                kappas: key_sizes.clone(),
                trials: *trials,
                query_lens: query_lens.clone(),
                path_lens: path_lens.clone(),
                seed: cli.seed,
                ..BenchConfig::default()
            };
            bench(cli, &cfg)
        }
        Command::ServeCsp => serve(cli),
    }
}

fn deployment(cli: &Cli) -> Result<Deployment, Failure> {
    match &cli.key_dir {
        Some(dir) => Deployment::load(dir, cli.seed).map_err(fixture),
        None => {
            if cli.key_size < 16 {
                return Err(Failure::Config("--key-size must be at least 16".into()));
            }
            Ok(Deployment::generate(cli.key_size, cli.seed)?)
        }
    }
}

/// CP channel plus, for loopback TCP, the server it talks to.
fn channel(cli: &Cli, d: &Deployment) -> Result<(Arc<dyn Channel>, Option<CspServer>), Failure> {
    match (cli.transport, &cli.csp_addr) {
        (Transport::Inproc, _) => Ok((Arc::new(InProcess::new(Arc::new(d.responder()))), None)),
        (Transport::Tcp, Some(addr)) => Ok((Arc::new(connect_cp(addr.as_str())?), None)),
        (Transport::Tcp, None) => {
            let server = serve_csp_for("127.0.0.1:0", Arc::new(d.responder()), None)?;
            let link = connect_cp(server.local_addr())?;
            Ok((Arc::new(link), Some(server)))
        }
    }
}

fn emit(cli: &Cli, text: String, value: Value) {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&value).expect("json"));
    } else {
        print!("{text}");
    }
}

fn keygen(cli: &Cli, out: &Path) -> Outcome {
    let d = deployment(cli)?;
    let files = d.save(out)?;
    let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    let text = format!("L(N) = {} bits\n{}\n", d.pp.modulus_bits(), names.join("\n"));
    emit(cli, text, json!({"modulus_bits": d.pp.modulus_bits(), "files": names}));
    Ok(())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Fixture(format!("{}: {e}", path.display())))
}

fn demo_fig3(cli: &Cli, model: Option<&Path>, query: Option<&Path>, params: PipelineParams) -> Outcome {
    let model_text = model.map(read_text).transpose()?.unwrap_or_else(|| FIG3_MODEL_JSON.to_string());
    let query_text = query.map(read_text).transpose()?.unwrap_or_else(|| FIG3_QUERY_JSON.to_string());
    let file: ModelFile = parse_model(&model_text).map_err(fixture)?;
    let states = parse_query(&query_text, &file.model).map_err(fixture)?;

    let d = deployment(cli)?;
    params.validate(&d.pp, &file.model)?;
    let mut rng = pmed_core::deploy::client_rng(cli.seed);
    let enc_model = encrypt_model(&d.pp, d.hospital.public(), &file.model, &mut rng)?;
    let enc_query = encrypt_query(&d.pp, d.patient.public(), &file.model, &states, &mut rng)?;

    let (link, _server) = channel(cli, &d)?;
    let mut ctx = d.context(link, cli.seed);
    let picked = recommend(&mut ctx, &enc_model, &enc_query, &params)?;

    let labels: Vec<u64> = (0..file.model.n_states as u64).collect();
    let all: Vec<Vec<usize>> =
        tpt(&TransitionArrays::plain(&file.model), &labels, &file.model.accept, params.mvisit, params.mstate)
            .into_iter()
            .map(|t| t.states)
            .collect();
    let book = Codebook::new(&d.pp, &file);
    let mut text = format!(
        "top-{} treatment procedures (MVisit={}, MState={}, MWeight={}, L(N)={})\n",
        params.k,
        params.mvisit,
        params.mstate,
        params.mweight,
        d.pp.modulus_bits()
    );
    let mut rows = Vec::new();
    for (rank, etp) in picked.iter().enumerate() {
        let r = recover_result(&d.pp, &d.sigma, etp, &book)?;
        let procedure = all.iter().position(|p| *p == r.states).map(|i| i + 1);
        let ids: Vec<String> = r.states.iter().map(|s| format!("q{s}")).collect();
        text += &format!(
            "#{} procedure {} weight {}: {}\n    states: {}\n    therapies: {}\n",
            rank + 1,
            procedure.map_or("?".into(), |p| p.to_string()),
            r.weight,
            ids.join(" -> "),
            r.path.join(" -> "),
            r.therapies.join(", ")
        );
        rows.push(json!({
            "rank": rank + 1,
            "procedure": procedure,
            "weight": r.weight.to_string(),
            "states": r.states,
            "path": r.path,
            "therapies": r.therapies,
        }));
    }
    emit(cli, text, json!({"params": params, "modulus_bits": d.pp.modulus_bits(), "results": rows}));
    Ok(())
}

fn load_sequence(arg: &str) -> Result<Vec<char>, Failure> {
    let path = Path::new(arg);
    let text = if path.exists() { read_text(path)? } else { arg.to_string() };
    parse_sequence(&text).map_err(|e| Failure::Fixture(format!("{arg}: {e}")))
}

fn pgene(cli: &Cli, sequence: &str, pattern: Option<&str>, mu: usize, mode: MatchMode) -> Outcome {
    let psi = match pattern {
        Some(p) => load_sequence(p)?,
        None => parse_sequence(F8_PATTERN).map_err(fixture)?,
    };
    let phi = load_sequence(sequence)?;
    let d = deployment(cli)?;
    let mut rng = pmed_core::deploy::client_rng(cli.seed);
    let a = encrypt_sequence(&d.pp, d.hospital.public(), &psi, &mut rng)?;
    let b = encrypt_sequence(&d.pp, d.patient.public(), &phi, &mut rng)?;
    let (link, _server) = channel(cli, &d)?;
    let mut ctx = d.context(link, cli.seed);
    let fs = pgene_match(&mut ctx, &a, &b, mu, mode)?;
    let row = accepted(&d.pp, &d.sigma, &fs)?;
    let mode_name = match mode {
        MatchMode::Verbatim => "verbatim",
        MatchMode::Snapshot => "snapshot",
    };
    let verdict = match row {
        Some(e) => format!("accepted, {e} error{}", if e == 1 { "" } else { "s" }),
        None => format!("rejected, error tolerance {mu} exceeded"),
    };
    let pat: String = psi.iter().collect();
    let seq: String = phi.iter().collect();
    let text = format!("pattern {pat} (m={}), sequence {seq} (n={}), mu={mu}, {mode_name}: {verdict}\n", psi.len(), phi.len());
    emit(
        cli,
        text,
        json!({
            "pattern": pat, "sequence": seq, "mu": mu, "mode": mode_name,
            "accepted": row.is_some(), "errors": row,
        }),
    );
    Ok(())
}

fn bench(cli: &Cli, cfg: &BenchConfig) -> Outcome {
    let rows = run_grid(cfg)?;
    let violations = monotonicity_violations(&rows);
    for v in &violations {
        eprintln!("warning: not monotone: {v}");
    }
    emit(cli, to_table(&rows), json!({"config": cfg, "rows": rows, "violations": violations}));
    Ok(())
}

fn serve(cli: &Cli) -> Outcome {
    let d = deployment(cli)?;
    let addr = cli.csp_addr.clone().unwrap_or_else(|| "127.0.0.1:7878".into());
    let server = serve_csp_for(addr.as_str(), Arc::new(d.responder()), cli.cp_addr)?;
    eprintln!("CSP listening on {} (L(N) = {} bits)", server.local_addr(), d.pp.modulus_bits());
    server.join();
    Ok(())
}
