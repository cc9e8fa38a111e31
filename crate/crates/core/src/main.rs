use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use minsec_core::cli::{run, validate_config, ENV_THREADS};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Minsec,
    Reduced,
    Baseline,
}

/// Directional fields with optimized singularities on triangle meshes.
///
/// Settings come from an optional `key = value` config file; flags override it.
#[derive(Parser, Debug)]
#[command(name = "minsec", version)]
struct Args {
    /// Triangle mesh (OBJ).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Field degree d.
    #[arg(long, short = 'd')]
    degree: Option<u32>,
    /// Singularity cost λ (uniform).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Per-vertex λ file (`vertex value` lines).
    #[arg(long)]
    lambda_field: Option<PathBuf>,
    /// Fiber radius r.
    #[arg(long, short = 'r')]
    radius: Option<f64>,
    /// Fiber samples N (even, at least 8).
    #[arg(long = "fiber-n", short = 'N')]
    fiber_n: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    /// Edges where singularities are free (`v i`, `e a b` or bare vertex lines).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// `tangent` or a file of `vertex angle` lines.
    #[arg(long)]
    boundary: Option<String>,
    /// Output directory.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Also write per-sample current magnitudes.
    #[arg(long)]
    emit_current: bool,
    #[arg(long, env = ENV_THREADS)]
    threads: Option<usize>,
    /// Single thread, no timings in diagnostics.
    #[arg(long)]
    deterministic: bool,
}

impl Args {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.push((k.to_string(), v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        put("mesh", path(&self.mesh));
        put("mode", self.mode.map(|m| format!("{m:?}").to_lowercase()));
        put("degree", self.degree.map(|x| x.to_string()));
        put("lambda", self.lambda.map(|x| x.to_string()));
        put("lambda_field", path(&self.lambda_field));
        put("radius", self.radius.map(|x| x.to_string()));
        put("fiber_n", self.fiber_n.map(|x| x.to_string()));
        put("epsilon", self.epsilon.map(|x| x.to_string()));
        put("max_iters", self.max_iters.map(|x| x.to_string()));
        put("mu", self.mu.map(|x| x.to_string()));
        put("nu", self.nu.map(|x| x.to_string()));
        put("mask", path(&self.mask));
        put("boundary", self.boundary.clone());
        put("out", path(&self.out));
        put("emit_current", self.emit_current.then(|| "true".into()));
        put("threads", self.threads.map(|x| x.to_string()));
        put("deterministic", self.deterministic.then(|| "true".into()));
        kv
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let cfg = match validate_config(args.config.as_deref(), &args.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            if !outcome.converged {
                eprintln!("warning: stopped at the iteration cap after {} iterations", outcome.iterations);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
