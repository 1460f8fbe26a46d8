//! Command-line entry point. Every command maps its outcome onto three exit
//! codes: 0 success, 1 violations or failed expectations, 2 bad input.

pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::dsl::{self, NormSpec, SpecText};
use crate::engine::NormState;
use crate::policy::{load_sibling_params, PolicyParams};
use crate::service::{self, ServiceConfig};
use crate::simulation::{build_tree, ActionTree, Scenario, DEFAULT_MAX_DEPTH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

const SWEEP_INTERVAL: std::time::Duration = std::time::Duration::from_secs(3600);

#[derive(Parser, Debug)]
#[command(
    name = "normcase",
    version,
    about = "Norm-specification case management"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check a spec file and print its diagnostics.
    Validate { spec: PathBuf },
    /// Replay a scenario file and report compliance.
    Run {
        spec: PathBuf,
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the action tree reachable from a state.
    Tree {
        spec: PathBuf,
        state: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long)]
        json: bool,
    },
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let mut out = String::new();
    let code = match cli.command {
        Command::Serve { config } => return serve(config.as_deref()),
        Command::Validate { spec } => validate(&spec, &mut out),
        Command::Run {
            spec,
            scenario,
            json,
        } => run(&spec, &scenario, json, &mut out),
        Command::Tree {
            spec,
            state,
            depth,
            json,
        } => tree(&spec, &state, depth, json, &mut out),
    };
    print!("{out}");
    code
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn load_spec(path: &Path) -> Result<(NormSpec, String), i32> {
    let text = SpecText::read(path)
        .map_err(|e| fail(format_args!("cannot read {}: {e}", path.display())))?;
    match dsl::parse_spec(&text) {
        Ok(spec) => Ok((spec, text.origin)),
        Err(diags) => {
            eprint!("{}", dsl::diagnostic::render(&text.origin, &diags));
            Err(EXIT_INPUT)
        }
    }
}

fn load_params(path: &Path, spec: &NormSpec) -> Result<PolicyParams, i32> {
    load_sibling_params(path, spec).map_err(fail)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(format_args!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(format_args!("{}: {e}", path.display())))
}

pub fn validate(path: &Path, out: &mut String) -> i32 {
    let text = match SpecText::read(path) {
        Ok(t) => t,
        Err(e) => return fail(format_args!("cannot read {}: {e}", path.display())),
    };
    let report = dsl::check_spec(&text);
    out.push_str(&dsl::diagnostic::render(&text.origin, &report.diagnostics));
    match &report.spec {
        Some(spec) if !report.has_errors() => {
            let _ = writeln!(
                out,
                "{}: ok ({} facts, {} acts, {} duties)",
                text.origin,
                spec.facts.len(),
                spec.acts.len(),
                spec.duties.len()
            );
            EXIT_OK
        }
        _ => EXIT_INPUT,
    }
}

pub fn run(spec_path: &Path, scenario_path: &Path, json: bool, out: &mut String) -> i32 {
    let result = (|| {
        let (spec, origin) = load_spec(spec_path)?;
        let params = load_params(spec_path, &spec)?;
        let file: scenario::ScenarioFile = read_json(scenario_path)?;
        scenario::run(&spec, &origin, &params, &file)
            .map_err(|e| fail(format_args!("{}: {e}", scenario_path.display())))
    })();
    let report = match result {
        Ok(r) => r,
        Err(code) => return code,
    };
    if json {
        out.push_str(&serde_json::to_string_pretty(&report).expect("report serializes"));
        out.push('\n');
    } else {
        out.push_str(&scenario::render(&report));
    }
    if report.compliant {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

/// Reads a state file: either a serialized engine state, or a scenario file
/// whose steps are replayed to reach the state.
fn load_state(path: &Path, spec: &NormSpec, params: &PolicyParams) -> Result<NormState, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(format_args!("cannot read {}: {e}", path.display())))?;
    if let Ok(state) = NormState::from_json(&text) {
        return Ok(state);
    }
    let file: scenario::ScenarioFile = serde_json::from_str(&text).map_err(|e| {
        fail(format_args!(
            "{}: not a state or scenario file: {e}",
            path.display()
        ))
    })?;
    scenario::final_state(spec, params, &file).map_err(fail)
}

pub fn tree(
    spec_path: &Path,
    state_path: &Path,
    depth: usize,
    json: bool,
    out: &mut String,
) -> i32 {
    if depth == 0 || depth > DEFAULT_MAX_DEPTH {
        return fail(format_args!(
            "depth must be between 1 and {DEFAULT_MAX_DEPTH}"
        ));
    }
    let built = (|| {
        let (spec, origin) = load_spec(spec_path)?;
        let params = load_params(spec_path, &spec)?;
        let state = load_state(state_path, &spec, &params)?;
        let at = state.clock().and_hms_opt(0, 0, 0).expect("midnight exists");
        let scenario = Scenario::new("cli", origin, &spec, state, at);
        build_tree(&scenario, depth, DEFAULT_MAX_DEPTH).map_err(fail)
    })();
    let tree = match built {
        Ok(t) => t,
        Err(code) => return code,
    };
    if json {
        out.push_str(&serde_json::to_string_pretty(&tree).expect("tree serializes"));
        out.push('\n');
    } else {
        render_tree(&tree, out);
    }
    EXIT_OK
}

fn render_tree(tree: &ActionTree, out: &mut String) {
    for n in &tree.nodes {
        let indent = "  ".repeat(n.depth);
        match (&n.act, n.status) {
            (Some(act), Some(st)) => {
                let _ = writeln!(out, "{indent}[{}] {act} ({st})", n.id);
            }
            _ => {
                let _ = writeln!(out, "[{}] start", n.id);
            }
        }
    }
    if tree.truncated {
        let _ = writeln!(out, "(truncated)");
    }
    let _ = writeln!(out, "{} nodes, depth {}", tree.nodes.len(), tree.depth);
}

fn serve(config_path: Option<&Path>) -> i32 {
    let mut config = match config_path {
        Some(p) => match ServiceConfig::load(p) {
            Ok(c) => c,
            Err(e) => return fail(e),
        },
        None => ServiceConfig::default(),
    };
    if let Some(dir) = std::env::var_os("NORMCASE_DATA_DIR") {
        config.data_dir = PathBuf::from(dir);
    }
    init_tracing();
    let bundle = match service::load_bundle(&config) {
        Ok(b) => Arc::new(b),
        Err(e) => return fail(e),
    };
    let runtime = match tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
    {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    runtime.block_on(async move {
        let addr = format!("{}:{}", config.bind, config.port);
        let listener = match tokio::net::TcpListener::bind(&addr).await {
            Ok(l) => l,
            Err(e) => return fail(format_args!("cannot listen on {addr}: {e}")),
        };
        let svc =
            match service::Service::open(config, bundle, Arc::new(service::clock::SystemClock)) {
                Ok(s) => Arc::new(s),
                Err(e) => return fail(e),
            };
        let (cases, users, sims) = svc.counts();
        tracing::info!(
            spec = %svc.bundle().text.origin,
            acts = svc.bundle().spec.acts.len(),
            duties = svc.bundle().spec.duties.len(),
            cases,
            users,
            simulations = sims,
            data_dir = %svc.config().data_dir.display(),
            %addr,
            "normcase listening"
        );

        let sweeper = svc.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(SWEEP_INTERVAL);
            loop {
                // the first tick fires at once, so startup also sweeps
                tick.tick().await;
                let s = sweeper.clone();
                match tokio::task::spawn_blocking(move || s.sweep_duties()).await {
                    Ok(Ok(n)) if n > 0 => {
                        tracing::info!(cases = n, "duty sweep recorded violations")
                    }
                    Ok(Ok(_)) => {}
                    Ok(Err(e)) => tracing::error!(error = %e, "duty sweep failed"),
                    Err(e) => tracing::error!(error = %e, "duty sweep panicked"),
                }
            }
        });

        let app = service::http::router(svc.clone());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        if let Err(e) = axum::serve(listener, app)
            .with_graceful_shutdown(shutdown)
            .await
        {
            tracing::error!(error = %e, "server stopped");
            return EXIT_INPUT;
        }
        if let Err(e) = svc.snapshot() {
            tracing::warn!(error = %e, "final snapshot failed");
        }
        EXIT_OK
    })
}

fn init_tracing() {
    let filter =
        tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}
