//! Run configuration, validation and the file-writing pipeline behind the
//! `minsec` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::bundle::{parse_boundary_angles, BoundarySpec};
use crate::error::{ConfigError, MeshError, RunError};
use crate::extract::{
    baseline_smoothest_field, concentration_cdf, default_theta_grid, extract_field, extract_singularities,
    fiber_profiles, fiber_w2, graph_area, ClusterParams, Exclusion, ExtractedField, SingularitySet,
};
use crate::mesh::{build_transport, load_mesh, TransportAtlas, TriMesh};
use crate::operators::assemble_linear_fem;
use crate::reduced::{effective_lambda, solve_reduced_on_mesh, ReducedConfig};
use crate::solver::{run_admm, Lambda, SolverConfig};

pub const ENV_THREADS: &str = "MINSEC_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Minsec,
    Reduced,
    Baseline,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minsec" => Ok(Mode::Minsec),
            "reduced" => Ok(Mode::Reduced),
            "baseline" => Ok(Mode::Baseline),
            _ => Err(format!("mode must be one of minsec, reduced, baseline (got {s:?})")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundarySource {
    Tangent,
    /// `vertex_index angle_radians` lines.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: PathBuf,
    pub mode: Mode,
    pub degree: u32,
    pub lambda: f64,
    /// Per-vertex `vertex_index value` lines, averaged onto edges.
    pub lambda_field: Option<PathBuf>,
    pub radius: f64,
    pub fiber_n: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub mu: f64,
    pub nu: f64,
    /// Lines `v <vertex>` (every interior edge at the vertex), `e <a> <b>`,
    /// or a bare vertex index.
    pub mask: Option<PathBuf>,
    pub boundary: BoundarySource,
    pub out: PathBuf,
    pub emit_current: bool,
    pub threads: Option<usize>,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: PathBuf::new(),
            mode: Mode::Minsec,
            degree: 1,
            lambda: 1.0,
            lambda_field: None,
            radius: 1.0,
            fiber_n: 64,
            epsilon: 5e-4,
            max_iters: 2000,
            mu: 1.0,
            nu: 1.0,
            mask: None,
            boundary: BoundarySource::Tangent,
            out: PathBuf::from("out"),
            emit_current: false,
            threads: None,
            deterministic: false,
        }
    }
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(invalid(key, format!("{key}: expected true or false, got {value:?}"))),
    }
}

/// `key = value` pairs with their line numbers; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Applies one setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let norm = key.replace('-', "_");
        match norm.as_str() {
            "mesh" => self.mesh = PathBuf::from(value),
            "mode" => self.mode = value.parse().map_err(|m| invalid("mode", m))?,
            "degree" | "d" => self.degree = parse_num("degree", value)?,
            "lambda" => self.lambda = parse_num("lambda", value)?,
            "lambda_field" => self.lambda_field = Some(PathBuf::from(value)),
            "radius" | "r" => self.radius = parse_num("radius", value)?,
            "fiber_n" | "N" | "n" => self.fiber_n = parse_num("N", value)?,
            "epsilon" => self.epsilon = parse_num("epsilon", value)?,
            "max_iters" => self.max_iters = parse_num("max_iters", value)?,
            "mu" => self.mu = parse_num("mu", value)?,
            "nu" => self.nu = parse_num("nu", value)?,
            "mask" => self.mask = Some(PathBuf::from(value)),
            "boundary" => {
                self.boundary = if value == "tangent" {
                    BoundarySource::Tangent
                } else {
                    BoundarySource::File(PathBuf::from(value))
                }
            }
            "out" => self.out = PathBuf::from(value),
            "emit_current" => self.emit_current = parse_bool("emit_current", value)?,
            "threads" => self.threads = Some(parse_num("threads", value)?),
            "deterministic" => self.deterministic = parse_bool("deterministic", value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Range checks; each error names its key.
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.mesh.as_os_str().is_empty() {
            return Err(invalid("mesh", "mesh path is required"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "lambda must be nonnegative"));
        }
        if self.fiber_n < 8 || self.fiber_n % 2 != 0 {
            return Err(invalid("N", "N must be even and ≥ 8"));
        }
        if self.degree == 0 {
            return Err(invalid("degree", "degree must be positive"));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(invalid("radius", "radius must be positive"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon", "epsilon must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "max_iters must be positive"));
        }
        if !(self.mu > 0.0) {
            return Err(invalid("mu", "mu must be positive"));
        }
        if !(self.nu > 0.0) {
            return Err(invalid("nu", "nu must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "threads must be positive"));
        }
        Ok(())
    }

    /// Worker threads for the parallel maps: 1 in deterministic mode,
    /// otherwise the configured count, then `MINSEC_THREADS`, then all cores.
    pub fn thread_count(&self) -> Result<usize, ConfigError> {
        if self.deterministic {
            return Ok(1);
        }
        if let Some(t) = self.threads {
            return Ok(t);
        }
        match std::env::var(ENV_THREADS) {
            Ok(v) => {
                let t: usize = parse_num("threads", v.trim())?;
                if t == 0 {
                    return Err(invalid("threads", "threads must be positive"));
                }
                Ok(t)
            }
            Err(_) => Ok(0),
        }
    }
}

/// Reads the optional config file, then applies `overrides` in order and
/// validates the result.
pub fn validate_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
        for (k, v) in parse_config_text(&text)? {
            cfg.set(&k, &v)?;
        }
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.check()?;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    /// 0 when converged, 2 when stopped at the iteration cap.
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            2
        }
    }
}

fn read_text(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn parse_index_value_lines(key: &str, text: &str) -> Result<Vec<(usize, f64)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let v = it.next().and_then(|s| s.parse().ok());
        let x = it.next().and_then(|s| s.parse().ok());
        match (v, x, it.next()) {
            (Some(v), Some(x), None) => out.push((v, x)),
            _ => return Err(invalid(key, format!("{key} line {}: expected \"vertex_index value\"", i + 1))),
        }
    }
    Ok(out)
}

/// Per-vertex λ values averaged onto interior edges; unlisted vertices take
/// `default`.
pub fn lambda_field_to_edges(mesh: &TriMesh, entries: &[(usize, f64)], default: f64) -> Result<Vec<f64>, ConfigError> {
    let mut per_vertex = vec![default; mesh.n_vertices()];
    for &(v, x) in entries {
        if v >= mesh.n_vertices() {
            return Err(invalid("lambda_field", format!("lambda_field: vertex {v} out of range")));
        }
        if !(x >= 0.0) {
            return Err(invalid("lambda_field", "lambda must be nonnegative"));
        }
        per_vertex[v] = x;
    }
    Ok(mesh
        .interior_edges()
        .iter()
        .map(|&e| {
            let [a, b] = mesh.edges()[e].v;
            0.5 * (per_vertex[a] + per_vertex[b])
        })
        .collect())
}

/// Interior-edge indices selected by a mask file.
pub fn parse_mask(mesh: &TriMesh, text: &str) -> Result<Vec<usize>, ConfigError> {
    let bad = |line: usize, msg: &str| invalid("mask", format!("mask line {line}: {msg}"));
    let mut edges = Vec::new();
    let nv = mesh.n_vertices();
    let vertex_edges = |v: usize, out: &mut Vec<usize>| {
        for (q, &e) in mesh.interior_edges().iter().enumerate() {
            if mesh.edges()[e].v.contains(&v) {
                out.push(q);
            }
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<usize, ConfigError> {
            let v: usize = s.parse().map_err(|_| bad(i + 1, "expected a vertex index"))?;
            if v >= nv {
                return Err(bad(i + 1, "vertex out of range"));
            }
            Ok(v)
        };
        match tok.as_slice() {
            [v] | ["v", v] => vertex_edges(num(v)?, &mut edges),
            ["e", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                let q = mesh
                    .interior_edges()
                    .iter()
                    .position(|&e| {
                        let ev = mesh.edges()[e].v;
                        (ev[0] == a && ev[1] == b) || (ev[0] == b && ev[1] == a)
                    })
                    .ok_or_else(|| bad(i + 1, "not an interior edge"))?;
                edges.push(q);
            }
            _ => return Err(bad(i + 1, "expected \"v <vertex>\" or \"e <a> <b>\"")),
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

fn write_out(dir: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| RunError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

pub fn format_field(field: &ExtractedField) -> String {
    let mut s = String::new();
    for v in 0..field.len() {
        match field.angle(v) {
            Some(a) => writeln!(s, "{v} {a} {}", field.confidence[v]).unwrap(),
            None => writeln!(s, "{v} nan {}", field.confidence[v]).unwrap(),
        }
    }
    s
}

pub fn format_frames(atlas: &TransportAtlas, nv: usize) -> String {
    let mut s = String::new();
    for v in 0..nv {
        let [a, b] = atlas.vertex_frame(v);
        writeln!(s, "{v} {} {} {} {} {} {}", a.x, a.y, a.z, b.x, b.y, b.z).unwrap();
    }
    s
}

pub fn format_singularities(set: &SingularitySet) -> String {
    let mut s = String::new();
    for c in &set.clusters {
        writeln!(s, "{} {} {} {} {}", c.center.x, c.center.y, c.center.z, c.index, c.rounding_residual()).unwrap();
    }
    s
}

pub fn format_gamma(mesh: &TriMesh, gamma: &[f64]) -> String {
    let mut s = String::new();
    for (q, &e) in mesh.interior_edges().iter().enumerate() {
        let [a, b] = mesh.edges()[e].v;
        writeln!(s, "{a} {b} {}", gamma[q]).unwrap();
    }
    s
}

/// `(vertex, degree-d angle or NaN, confidence)` rows of a field file.
pub fn parse_field(text: &str) -> Result<Vec<(usize, f64, f64)>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            let err = || format!("field line {}: malformed", i + 1);
            if t.len() != 3 {
                return Err(err());
            }
            Ok((
                t[0].parse().map_err(|_| err())?,
                t[1].parse().map_err(|_| err())?,
                t[2].parse().map_err(|_| err())?,
            ))
        })
        .collect()
}

/// Frame vectors `(e1, e2)` per vertex from a frames file.
pub fn parse_frames(text: &str) -> Result<Vec<[[f64; 3]; 2]>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let x: Result<Vec<f64>, _> = l.split_whitespace().skip(1).map(str::parse).collect();
            match x {
                Ok(x) if x.len() == 6 => Ok([[x[0], x[1], x[2]], [x[3], x[4], x[5]]]),
                _ => Err(format!("frames line {}: malformed", i + 1)),
            }
        })
        .collect()
}

fn mean_edge_length(mesh: &TriMesh) -> f64 {
    let s: f64 = mesh
        .edges()
        .iter()
        .map(|e| (mesh.position(e.v[0]) - mesh.position(e.v[1])).norm())
        .sum();
    s / mesh.n_edges() as f64
}

/// Executes one run inside a dedicated thread pool and writes the outputs.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let threads = cfg.thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", format!("threads: {e}")))?;
    faer::set_global_parallelism(faer::Par::Seq);
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    if !cfg.mesh.exists() {
        return Err(MeshError::NotFound(cfg.mesh.clone()).into());
    }
    let mesh = load_mesh(&cfg.mesh)?;
    fs::create_dir_all(&cfg.out).map_err(|source| RunError::Io { path: cfg.out.clone(), source })?;
    match cfg.mode {
        Mode::Minsec => run_minsec(cfg, &mesh),
        Mode::Reduced => run_reduced(cfg, &mesh),
        Mode::Baseline => run_baseline(cfg, &mesh),
    }
}

fn boundary_spec(cfg: &RunConfig) -> Result<BoundarySpec, RunError> {
    match &cfg.boundary {
        BoundarySource::Tangent => Ok(BoundarySpec::Tangent),
        BoundarySource::File(p) => {
            let text = read_text(p)?;
            let angles = parse_boundary_angles(&text).map_err(|m| invalid("boundary", format!("boundary: {m}")))?;
            Ok(BoundarySpec::Explicit(angles))
        }
    }
}

fn run_minsec(cfg: &RunConfig, mesh: &TriMesh) -> Result<RunOutcome, RunError> {
    let t0 = Instant::now();
    let lambda = match &cfg.lambda_field {
        None => Lambda::Uniform(cfg.lambda),
        Some(p) => {
            let entries = parse_index_value_lines("lambda_field", &read_text(p)?)?;
            Lambda::PerEdge(lambda_field_to_edges(mesh, &entries, cfg.lambda)?)
        }
    };
    let mask = match &cfg.mask {
        None => Vec::new(),
        Some(p) => parse_mask(mesh, &read_text(p)?)?,
    };
    let scfg = SolverConfig {
        lambda,
        r: cfg.radius,
        d: cfg.degree,
        n: cfg.fiber_n,
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters,
        mu: cfg.mu,
        nu: cfg.nu,
        mask,
        ..SolverConfig::default()
    };
    let run = run_admm(mesh, &scfg, &boundary_spec(cfg)?)?;
    let p = &run.problem;
    let field = extract_field(p, &run.state);
    let sing = extract_singularities(mesh, &p.ops.cr, &run.state.gamma, cfg.degree, &ClusterParams::default());
    let profiles = fiber_profiles(p, &run.state, &field);
    let thetas = default_theta_grid();
    let cdf = concentration_cdf(mesh, &profiles, &thetas).ok();
    let w2 = fiber_w2(&profiles);
    let exclusion = Exclusion {
        centers: sing.clusters.iter().map(|c| (c.center, c.rounded * cfg.degree as f64)).collect(),
        radius: 2.0 * mean_edge_length(mesh),
        add_helicoid: true,
    };
    let area = graph_area(mesh, &p.atlas, &p.ops.fem, &field, cfg.radius, Some(&exclusion)).ok();

    let mut files = Vec::new();
    let out = &cfg.out;
    write_out(out, "field.txt", &format_field(&field), &mut files)?;
    write_out(out, "frames.txt", &format_frames(&p.atlas, mesh.n_vertices()), &mut files)?;
    write_out(out, "singularities.txt", &format_singularities(&sing), &mut files)?;
    write_out(out, "gamma.txt", &format_gamma(mesh, &run.state.gamma), &mut files)?;
    if cfg.emit_current {
        let n = p.fd.n;
        let inv_r2 = 1.0 / (cfg.radius * cfg.radius);
        let mut s = String::new();
        for (i, x) in run.state.sigma.iter().enumerate() {
            let g = (x[0] * x[0] + x[1] * x[1] + inv_r2 * x[2] * x[2]).sqrt();
            writeln!(s, "{} {} {g}", i / n, i % n).unwrap();
        }
        write_out(out, "current.txt", &s, &mut files)?;
    }

    let rep = &run.report;
    let mut d = String::new();
    writeln!(d, "mode minsec").unwrap();
    writeln!(d, "converged {}", rep.converged).unwrap();
    writeln!(d, "iterations {}", rep.iterations).unwrap();
    writeln!(d, "objective {}", p.objective(&run.state)).unwrap();
    writeln!(d, "kkt_residual_max {}", rep.kkt_residual_max).unwrap();
    writeln!(d, "conservation_max {}", rep.conservation_max).unwrap();
    writeln!(d, "index_sum {}", sing.index_sum()).unwrap();
    writeln!(d, "unclustered_gamma {}", sing.residual_mass).unwrap();
    match &area {
        Some(a) => writeln!(d, "graph_area {}", a.area).unwrap(),
        None => writeln!(d, "graph_area undefined").unwrap(),
    }
    writeln!(d, "\n[cdf] theta fraction").unwrap();
    match &cdf {
        Some(c) => {
            for (t, x) in thetas.iter().zip(c) {
                writeln!(d, "{t} {x}").unwrap();
            }
        }
        None => writeln!(d, "undefined").unwrap(),
    }
    writeln!(d, "\n[w2] vertex distance").unwrap();
    for (v, w) in w2.iter().enumerate() {
        match w {
            Some(w) => writeln!(d, "{v} {w}").unwrap(),
            None => writeln!(d, "{v} nan").unwrap(),
        }
    }
    writeln!(d, "\n[residuals] iteration primal_mu dual_mu primal_nu dual_nu").unwrap();
    for (i, r) in rep.history.iter().enumerate() {
        writeln!(d, "{} {} {} {} {}", i + 1, r.primal_mu, r.dual_mu, r.primal_nu, r.dual_nu).unwrap();
    }
    if !cfg.deterministic {
        let t = &rep.timings;
        writeln!(d, "\n[timings] seconds").unwrap();
        writeln!(d, "setup {}", t.setup.as_secs_f64()).unwrap();
        writeln!(d, "global {}", t.global.as_secs_f64()).unwrap();
        writeln!(d, "local {}", t.local.as_secs_f64()).unwrap();
        writeln!(d, "dual {}", t.dual.as_secs_f64()).unwrap();
        writeln!(d, "residuals {}", t.residuals.as_secs_f64()).unwrap();
        writeln!(d, "total {}", t0.elapsed().as_secs_f64()).unwrap();
    }
    write_out(out, "diagnostics.txt", &d, &mut files)?;
    Ok(RunOutcome { converged: rep.converged, iterations: rep.iterations, files })
}

fn run_reduced(cfg: &RunConfig, mesh: &TriMesh) -> Result<RunOutcome, RunError> {
    let t0 = Instant::now();
    let rcfg = ReducedConfig {
        lambda_eff: effective_lambda(cfg.lambda, cfg.radius),
        nu: cfg.nu,
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters,
        ..ReducedConfig::default()
    };
    let (cr, _, sol) = solve_reduced_on_mesh(mesh, cfg.degree, &rcfg)?;
    let sing = extract_singularities(mesh, &cr, &sol.gamma, cfg.degree, &ClusterParams::default());
    let mut files = Vec::new();
    write_out(&cfg.out, "singularities.txt", &format_singularities(&sing), &mut files)?;
    write_out(&cfg.out, "gamma.txt", &format_gamma(mesh, &sol.gamma), &mut files)?;
    let mut d = String::new();
    writeln!(d, "mode reduced").unwrap();
    writeln!(d, "converged {}", sol.converged).unwrap();
    writeln!(d, "iterations {}", sol.iterations).unwrap();
    writeln!(d, "objective {}", sol.objective).unwrap();
    writeln!(d, "feasibility {}", sol.feasibility).unwrap();
    writeln!(d, "boundary_flux {}", sol.boundary_flux).unwrap();
    writeln!(d, "index_sum {}", sing.index_sum()).unwrap();
    writeln!(d, "\n[residuals] iteration primal dual").unwrap();
    for (i, r) in sol.history.iter().enumerate() {
        writeln!(d, "{} {} {}", i + 1, r.primal, r.dual).unwrap();
    }
    if !cfg.deterministic {
        writeln!(d, "\n[timings] seconds\ntotal {}", t0.elapsed().as_secs_f64()).unwrap();
    }
    write_out(&cfg.out, "diagnostics.txt", &d, &mut files)?;
    Ok(RunOutcome { converged: sol.converged, iterations: sol.iterations, files })
}

fn run_baseline(cfg: &RunConfig, mesh: &TriMesh) -> Result<RunOutcome, RunError> {
    let atlas = build_transport(mesh)?;
    let fem = assemble_linear_fem(mesh, &atlas);
    let base = baseline_smoothest_field(mesh, &atlas, &fem, cfg.degree)?;
    let mut files = Vec::new();
    write_out(&cfg.out, "field.txt", &format_field(&base.field), &mut files)?;
    write_out(&cfg.out, "frames.txt", &format_frames(&atlas, mesh.n_vertices()), &mut files)?;
    Ok(RunOutcome { converged: true, iterations: base.iterations, files })
}
