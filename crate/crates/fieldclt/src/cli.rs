//! Experiment orchestration: config parsing (flat key-value text with
//! block sections), seeded execution of the library experiments, and
//! JSON/CSV/SVG report emission with atomic writes.

use crate::asymptotics::{self, AsymptoticsError, CltLadderConfig, Mode};
use crate::cumulants::{self, CumulantError};
use crate::domains::{BodyKind, ConvexBody};
use crate::hybl;
use crate::simulate::{Generator, SimConfig, SimError};
use crate::spectra::{SpectraError, SpectralDensity, WeightFunction};
use crate::spectra::{DensityFamily, WeightFamily};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Exit codes: 0 success, 2 config error, 3 assumption violation,
/// 4 numerical failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Assumption(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Assumption(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Assumption(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::Assumption { .. } => CliError::Assumption(e.to_string()),
            AsymptoticsError::Config(_) | AsymptoticsError::BadPair { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<CumulantError> for CliError {
    fn from(e: CumulantError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        match e {
            SpectraError::NotInLp { .. } => CliError::Assumption(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// One experiment description, the external mirror of the library inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub spacing: f64,
    pub replications: usize,
    pub ladder: Vec<f64>,
    pub generator: Generator,
    pub spectral_nodes: usize,
    pub body: ConvexBody,
    pub density: SpectralDensity,
    pub weight: Option<WeightFunction>,
    /// (u, v) pairs for the tightness subcommand.
    pub pairs: Vec<(f64, f64)>,
    /// Concentration window for kernelcheck.
    pub epsilon: f64,
    /// Kernel order for kernelcheck.
    pub kernel_order: u32,
    /// L_p exponents for the constants subcommand.
    pub p_values: Vec<f64>,
    /// Cumulant orders for the hybl subcommand table.
    pub k_range: (usize, usize),
    /// Relative tolerance for the weighted scaling check.
    pub tolerance: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Base,
            seed: 1,
            spacing: 0.25,
            replications: 200,
            ladder: vec![8.0, 16.0],
            generator: Generator::CirculantEmbedding,
            spectral_nodes: 1024,
            body: ConvexBody::cube(1),
            density: SpectralDensity::gaussian(1, 1.0, 1.0),
            weight: None,
            pairs: Vec::new(),
            epsilon: 0.5,
            kernel_order: 2,
            p_values: vec![2.0],
            k_range: (3, 8),
            tolerance: 1e-4,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("key '{key}': bad number '{value}'"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, String> {
    value
        .parse::<usize>()
        .map_err(|_| format!("key '{key}': bad integer '{value}'"))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split_whitespace()
        .map(|tok| parse_f64(key, tok))
        .collect()
}

/// Parse the flat line-oriented config format. Unknown keys and unknown
/// sections are rejected.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::default();
    let mut weight_family: Option<String> = None;
    let mut weight_nu = 0.0f64;
    let mut weight_gamma = 1.0f64;
    let mut body_kind = String::from("cube");
    let mut body_dim = 1usize;
    let mut body_half_widths: Option<Vec<f64>> = None;
    let mut density_family = String::from("gaussian_type");
    let mut density_alpha = 1.0f64;
    let mut density_scale = 1.0f64;
    let mut density_cutoff = 1.0f64;
    let mut density_amplitude = 1.0f64;
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            match section.as_str() {
                "body" | "density" | "weight" | "tightness" | "kernelcheck" | "constants"
                | "hybl" => {}
                other => return Err(format!("line {}: unknown section [{other}]", lineno + 1)),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
        let err = |msg: String| format!("line {}: {msg}", lineno + 1);
        match (section.as_str(), key) {
            ("", "mode") => {
                cfg.mode = match value {
                    "base" => Mode::Base,
                    "hermite2" => Mode::Hermite2,
                    "weighted" => Mode::Weighted,
                    other => return Err(err(format!("unknown mode '{other}'"))),
                }
            }
            ("", "seed") => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| err(format!("bad seed '{value}'")))?
            }
            ("", "h") => cfg.spacing = parse_f64(key, value).map_err(err)?,
            ("", "n") => cfg.replications = parse_usize(key, value).map_err(err)?,
            ("", "ladder") => cfg.ladder = parse_f64_list(key, value).map_err(err)?,
            ("", "generator") => {
                cfg.generator = match value {
                    "circulant_embedding" => Generator::CirculantEmbedding,
                    "spectral_superposition" => Generator::SpectralSuperposition,
                    other => return Err(err(format!("unknown generator '{other}'"))),
                }
            }
            ("", "spectral_nodes") => cfg.spectral_nodes = parse_usize(key, value).map_err(err)?,
            ("", "tolerance") => cfg.tolerance = parse_f64(key, value).map_err(err)?,
            ("body", "kind") => body_kind = value.to_string(),
            ("body", "dimension") => body_dim = parse_usize(key, value).map_err(err)?,
            ("body", "half_widths") => {
                body_half_widths = Some(parse_f64_list(key, value).map_err(err)?)
            }
            ("density", "family") => density_family = value.to_string(),
            ("density", "alpha") => density_alpha = parse_f64(key, value).map_err(err)?,
            ("density", "scale") => density_scale = parse_f64(key, value).map_err(err)?,
            ("density", "cutoff") => density_cutoff = parse_f64(key, value).map_err(err)?,
            ("density", "amplitude") => {
                density_amplitude = parse_f64(key, value).map_err(err)?
            }
            ("weight", "family") => weight_family = Some(value.to_string()),
            ("weight", "nu") => weight_nu = parse_f64(key, value).map_err(err)?,
            ("weight", "gamma") => weight_gamma = parse_f64(key, value).map_err(err)?,
            ("tightness", "pairs") => {
                let mut pairs = Vec::new();
                for tok in value.split_whitespace() {
                    let (u, v) = tok
                        .split_once(':')
                        .ok_or_else(|| err(format!("bad pair '{tok}', expected u:v")))?;
                    pairs.push((
                        parse_f64("pairs", u).map_err(&err)?,
                        parse_f64("pairs", v).map_err(&err)?,
                    ));
                }
                cfg.pairs = pairs;
            }
            ("kernelcheck", "epsilon") => cfg.epsilon = parse_f64(key, value).map_err(err)?,
            ("kernelcheck", "k") => {
                cfg.kernel_order = parse_usize(key, value).map_err(err)? as u32
            }
            ("constants", "p") => cfg.p_values = parse_f64_list(key, value).map_err(err)?,
            ("hybl", "k_min") => cfg.k_range.0 = parse_usize(key, value).map_err(err)?,
            ("hybl", "k_max") => cfg.k_range.1 = parse_usize(key, value).map_err(err)?,
            (sec, key) => {
                return Err(err(format!(
                    "unknown key '{key}'{}",
                    if sec.is_empty() {
                        String::new()
                    } else {
                        format!(" in section [{sec}]")
                    }
                )))
            }
        }
    }
    cfg.body = match body_kind.as_str() {
        "cube" => ConvexBody::cube(body_dim),
        "ball" => ConvexBody::ball(body_dim),
        "rectangle" => ConvexBody::rectangle(
            body_half_widths.ok_or("rectangle body needs half_widths".to_string())?,
        ),
        "unit_box" => ConvexBody::unit_box_at_origin(body_dim),
        other => return Err(format!("unknown body kind '{other}'")),
    };
    cfg.density = match density_family.as_str() {
        "cauchy_type" => SpectralDensity::cauchy(body_dim, density_alpha, density_amplitude),
        "gaussian_type" => SpectralDensity::gaussian(body_dim, density_scale, density_amplitude),
        "bounded_compact" => {
            SpectralDensity::bounded_compact(body_dim, density_cutoff, density_amplitude)
        }
        other => return Err(format!("unknown density family '{other}'")),
    };
    cfg.weight = match weight_family.as_deref() {
        None => None,
        Some("power_norm") => Some(WeightFunction::power_norm(body_dim, weight_nu)),
        Some("power_sum") => Some(WeightFunction::power_sum(body_dim, weight_nu)),
        Some("power_gamma_sum") => Some(WeightFunction::power_gamma_sum(
            body_dim,
            weight_nu,
            weight_gamma,
        )),
        Some("average_moduli") => Some(WeightFunction::average_moduli(body_dim)),
        Some(other) => return Err(format!("unknown weight family '{other}'")),
    };
    Ok(cfg)
}

/// Canonical serialization; parse -> serialize -> parse is a fixed point.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mode = match cfg.mode {
        Mode::Base => "base",
        Mode::Hermite2 => "hermite2",
        Mode::Weighted => "weighted",
    };
    let generator = match cfg.generator {
        Generator::CirculantEmbedding => "circulant_embedding",
        Generator::SpectralSuperposition => "spectral_superposition",
    };
    let join = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "mode = {mode}");
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "h = {:?}", cfg.spacing);
    let _ = writeln!(out, "n = {}", cfg.replications);
    let _ = writeln!(out, "ladder = {}", join(&cfg.ladder));
    let _ = writeln!(out, "generator = {generator}");
    let _ = writeln!(out, "spectral_nodes = {}", cfg.spectral_nodes);
    let _ = writeln!(out, "tolerance = {:?}", cfg.tolerance);
    let _ = writeln!(out, "\n[body]");
    let kind = match (cfg.body.kind, cfg.body.corner_at_origin) {
        (BodyKind::Cube, _) => "cube",
        (BodyKind::Ball, _) => "ball",
        (BodyKind::Rectangle, true) => "unit_box",
        (BodyKind::Rectangle, false) => "rectangle",
    };
    let _ = writeln!(out, "kind = {kind}");
    let _ = writeln!(out, "dimension = {}", cfg.body.dimension);
    if kind == "rectangle" {
        let _ = writeln!(out, "half_widths = {}", join(&cfg.body.half_widths));
    }
    let _ = writeln!(out, "\n[density]");
    match cfg.density.family {
        DensityFamily::CauchyType { alpha, amplitude } => {
            let _ = writeln!(out, "family = cauchy_type");
            let _ = writeln!(out, "alpha = {alpha:?}");
            let _ = writeln!(out, "amplitude = {amplitude:?}");
        }
        DensityFamily::GaussianType { scale, amplitude } => {
            let _ = writeln!(out, "family = gaussian_type");
            let _ = writeln!(out, "scale = {scale:?}");
            let _ = writeln!(out, "amplitude = {amplitude:?}");
        }
        DensityFamily::BoundedCompact { cutoff, amplitude } => {
            let _ = writeln!(out, "family = bounded_compact");
            let _ = writeln!(out, "cutoff = {cutoff:?}");
            let _ = writeln!(out, "amplitude = {amplitude:?}");
        }
    }
    if let Some(w) = &cfg.weight {
        let _ = writeln!(out, "\n[weight]");
        match w.family {
            WeightFamily::PowerNorm { nu } => {
                let _ = writeln!(out, "family = power_norm");
                let _ = writeln!(out, "nu = {nu:?}");
            }
            WeightFamily::PowerSum { nu } => {
                let _ = writeln!(out, "family = power_sum");
                let _ = writeln!(out, "nu = {nu:?}");
            }
            WeightFamily::PowerGammaSum { nu, gamma } => {
                let _ = writeln!(out, "family = power_gamma_sum");
                let _ = writeln!(out, "nu = {nu:?}");
                let _ = writeln!(out, "gamma = {gamma:?}");
            }
            WeightFamily::AverageModuli => {
                let _ = writeln!(out, "family = average_moduli");
            }
        }
    }
    if !cfg.pairs.is_empty() {
        let _ = writeln!(out, "\n[tightness]");
        let pairs = cfg
            .pairs
            .iter()
            .map(|(u, v)| format!("{u:?}:{v:?}"))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "pairs = {pairs}");
    }
    let _ = writeln!(out, "\n[kernelcheck]");
    let _ = writeln!(out, "epsilon = {:?}", cfg.epsilon);
    let _ = writeln!(out, "k = {}", cfg.kernel_order);
    let _ = writeln!(out, "\n[constants]");
    let _ = writeln!(out, "p = {}", join(&cfg.p_values));
    let _ = writeln!(out, "\n[hybl]");
    let _ = writeln!(out, "k_min = {}", cfg.k_range.0);
    let _ = writeln!(out, "k_max = {}", cfg.k_range.1);
    out
}

/// Static checks of the model assumptions for the configured mode,
/// returned as human-readable violations without running anything.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<String> {
    let mut violations = Vec::new();
    if cfg.ladder.is_empty() {
        violations.push("config: empty T ladder".into());
    }
    if cfg.ladder.windows(2).any(|w| w[1] <= w[0]) {
        violations.push("config: T ladder not strictly increasing".into());
    }
    if !(cfg.spacing > 0.0) {
        violations.push("config: h must be positive".into());
    }
    if cfg.replications < 2 {
        violations.push("config: n must be at least 2".into());
    }
    if cfg.body.p_star() >= 2.0 {
        violations.push(format!(
            "Assumption K: p_* = {} >= 2 for this window",
            cfg.body.p_star()
        ));
    }
    match cfg.mode {
        Mode::Base => {
            if cfg.density.value_at_zero() == 0.0 {
                violations.push("Assumption B: f2(0) = 0, degenerate limit variance".into());
            }
        }
        Mode::Hermite2 => {
            let cert = cfg.density.lp_membership(2.0);
            if !cert.member {
                violations.push(format!("Proposition hypothesis: f not in L_2 ({})", cert.rule));
            }
        }
        Mode::Weighted => match &cfg.weight {
            None => violations.push("config: weighted mode needs a [weight] section".into()),
            Some(w) => match w.base_l2(&cfg.body) {
                Ok(v) if v.is_finite() && v > 0.0 => {
                    // Assumption E has no closed-form limit; the sigma^2
                    // plug-in at the top T is an estimate by design
                }
                Ok(v) => violations.push(format!("Assumption F: W^2(1) = {v} degenerate")),
                Err(e) => violations.push(format!("Assumption F: {e}")),
            },
        },
    }
    violations
}

fn sim_config(cfg: &ExperimentConfig) -> SimConfig {
    SimConfig {
        seed: cfg.seed,
        density: cfg.density,
        body: cfg.body.clone(),
        t_scale: *cfg.ladder.last().unwrap_or(&8.0),
        spacing: cfg.spacing,
        generator: cfg.generator,
        spectral_nodes: cfg.spectral_nodes,
        replications: cfg.replications,
    }
}

fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Numerical(format!("writing {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Numerical(format!("serializing report: {e}")))
}

/// Minimal deterministic SVG log-log polyline plot.
fn svg_loglog(points: &[(f64, f64)], x_label: &str, y_label: &str) -> String {
    let width = 480.0;
    let height = 320.0;
    let margin = 48.0;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let (x0, x1) = xs
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let (y0, y1) = ys
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &y| (a.min(y), b.max(y)));
    let sx = |x: f64| {
        margin + (x - x0) / (x1 - x0).max(1e-12) * (width - 2.0 * margin)
    };
    let sy = |y: f64| {
        height - margin - (y - y0) / (y1 - y0).max(1e-12) * (height - 2.0 * margin)
    };
    let path = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
            "<text x=\"{xm}\" y=\"{yb}\" font-size=\"12\">{xl} (log)</text>\n",
            "<text x=\"8\" y=\"{ym}\" font-size=\"12\" transform=\"rotate(-90 12 {ym})\">{yl} (log)</text>\n",
            "</svg>\n"
        ),
        w = width,
        h = height,
        path = path,
        xm = width / 2.0 - 24.0,
        yb = height - 12.0,
        ym = height / 2.0,
        xl = x_label,
        yl = y_label,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Constants,
    Hybl,
    Clt,
    Rate,
    Tightness,
    Weighted,
    Kernelcheck,
}

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub emit_svg: bool,
}

/// Execute one subcommand, writing report.json and report.csv (and an
/// optional SVG) into the output directory.
pub fn run(
    sub: Subcommand,
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<(), CliError> {
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| CliError::Numerical(format!("creating output dir: {e}")))?;
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        let assumption = violations.iter().any(|v| v.starts_with("Assumption") || v.starts_with("Proposition"));
        let msg = violations.join("; ");
        return Err(if assumption {
            CliError::Assumption(msg)
        } else {
            CliError::Config(msg)
        });
    }
    let (json, csv, svg) = match sub {
        Subcommand::Constants => run_constants(cfg)?,
        Subcommand::Hybl => run_hybl(cfg)?,
        Subcommand::Clt | Subcommand::Rate => run_clt(cfg, sub)?,
        Subcommand::Tightness => run_tightness(cfg)?,
        Subcommand::Weighted => run_weighted(cfg)?,
        Subcommand::Kernelcheck => run_kernelcheck(cfg)?,
    };
    atomic_write(&opts.out_dir.join("report.json"), &json)?;
    atomic_write(&opts.out_dir.join("report.csv"), &csv)?;
    if opts.emit_svg {
        if let Some(svg) = svg {
            atomic_write(&opts.out_dir.join("report.svg"), &svg)?;
        }
    }
    Ok(())
}

type Artifacts = (String, String, Option<String>);

#[derive(serde::Serialize)]
struct ConstantsRow {
    p: f64,
    c_p: f64,
    tail_error_bound: f64,
}

fn run_constants(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let mut rows = Vec::new();
    for &p in &cfg.p_values {
        let (c_p, tail) = cfg
            .body
            .kernel_norm(p, 1e-8)
            .map_err(|e| CliError::Assumption(format!("Assumption K: {e}")))?;
        rows.push(ConstantsRow {
            p,
            c_p,
            tail_error_bound: tail,
        });
    }
    #[derive(serde::Serialize)]
    struct Report {
        config: String,
        p_star: f64,
        rows: Vec<ConstantsRow>,
    }
    let report = Report {
        config: serialize_config(cfg),
        p_star: cfg.body.p_star(),
        rows,
    };
    let mut csv = String::from("p,c_p,tail_error_bound\n");
    for r in &report.rows {
        let _ = writeln!(csv, "{:?},{:?},{:?}", r.p, r.c_p, r.tail_error_bound);
    }
    Ok((to_json(&report)?, csv, None))
}

fn run_hybl(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    #[derive(serde::Serialize)]
    struct Row {
        k: usize,
        p_k: String,
        z_last: String,
        verdict: hybl::FeasibilityVerdict,
    }
    let (k_min, k_max) = cfg.k_range;
    if k_min < 3 || k_max < k_min {
        return Err(CliError::Config(format!(
            "hybl k range {k_min}..{k_max} invalid (need 3 <= k_min <= k_max)"
        )));
    }
    let z1 = hybl::rat(1, 2);
    let mut rows = Vec::new();
    for k in k_min..=k_max {
        let p_k = hybl::admissible_pk(k).map_err(|e| CliError::Config(e.to_string()))?;
        let z_last = hybl::projection_family_z_last(k, &z1);
        let verdict = hybl::check_projection_family(k, cfg.body.dimension, &z1, None)
            .map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(Row {
            k,
            p_k: hybl::format_rat(&p_k),
            z_last: hybl::format_rat(&z_last),
            verdict,
        });
    }
    #[derive(serde::Serialize)]
    struct Report {
        config: String,
        dimension: usize,
        rows: Vec<Row>,
    }
    let report = Report {
        config: serialize_config(cfg),
        dimension: cfg.body.dimension,
        rows,
    };
    let mut csv = String::from("k,p_k,z_last,c1,c2,c3,complete\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{:?},{:?},{}",
            r.k, r.p_k, r.z_last, r.verdict.c1_holds, r.verdict.c2, r.verdict.c3,
            r.verdict.complete
        );
    }
    Ok((to_json(&report)?, csv, None))
}

fn run_clt(cfg: &ExperimentConfig, sub: Subcommand) -> Result<Artifacts, CliError> {
    let ladder_cfg = CltLadderConfig {
        sim: sim_config(cfg),
        ladder: cfg.ladder.clone(),
        mode: cfg.mode,
        weight: cfg.weight.clone(),
    };
    let report = asymptotics::run_clt_experiment(&ladder_cfg)?;
    if sub == Subcommand::Rate && report.ratefits.dkol.is_none() {
        return Err(CliError::Numerical(
            "rate fit unavailable: need >= 3 ladder points with positive d_Kol".into(),
        ));
    }
    let mut csv = String::from("t,statistic,estimate,standard_error\n");
    for p in &report.ladder {
        let _ = writeln!(csv, "{:?},k2,{:?},{:?}", p.t, p.k2.est, p.k2.se);
        let _ = writeln!(csv, "{:?},k3,{:?},{:?}", p.t, p.k3.est, p.k3.se);
        let _ = writeln!(csv, "{:?},k4,{:?},{:?}", p.t, p.k4.est, p.k4.se);
        let _ = writeln!(csv, "{:?},sigma2_theory,{:?},", p.t, p.sigma2_theory);
        let _ = writeln!(csv, "{:?},dkol,{:?},", p.t, p.dkol);
    }
    if let Some(fit) = &report.ratefits.dkol {
        let _ = writeln!(csv, ",dkol_slope,{:?},{:?}", fit.slope, fit.stderr);
    }
    if let Some(fit) = &report.ratefits.cum4 {
        let _ = writeln!(csv, ",cum4_slope,{:?},{:?}", fit.slope, fit.stderr);
    }
    let points: Vec<(f64, f64)> = report.ladder.iter().map(|p| (p.t, p.dkol)).collect();
    let svg = if points.len() >= 2 {
        Some(svg_loglog(&points, "T", "d_Kol"))
    } else {
        None
    };
    Ok((to_json(&report)?, csv, svg))
}

fn run_tightness(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    if cfg.pairs.is_empty() {
        return Err(CliError::Config(
            "tightness needs a [tightness] pairs line".into(),
        ));
    }
    let report = asymptotics::tightness_check(&sim_config(cfg), &cfg.pairs)?;
    #[derive(serde::Serialize)]
    struct Report {
        config: String,
        #[serde(flatten)]
        inner: asymptotics::TightnessReport,
    }
    let mut csv = String::from("u,v,fourth_moment,ratio\n");
    for ((&(u, v), m4), ratio) in report
        .pairs
        .iter()
        .zip(&report.fourth_moments)
        .zip(&report.ratios)
    {
        let _ = writeln!(csv, "{u:?},{v:?},{m4:?},{ratio:?}");
    }
    let _ = writeln!(csv, ",,pass,{}", report.pass);
    let wrapped = Report {
        config: serialize_config(cfg),
        inner: report,
    };
    Ok((to_json(&wrapped)?, csv, None))
}

fn run_weighted(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let weight = cfg
        .weight
        .as_ref()
        .ok_or_else(|| CliError::Config("weighted check needs a [weight] section".into()))?;
    let report =
        asymptotics::weighted_scaling_check(weight, &cfg.body, &cfg.ladder, cfg.tolerance)?;
    #[derive(serde::Serialize)]
    struct Report {
        config: String,
        #[serde(flatten)]
        inner: asymptotics::WeightedScalingReport,
    }
    let mut csv = String::from("t,ratio,expected\n");
    for row in &report.rows {
        let _ = writeln!(csv, "{:?},{:?},{:?}", row.t, row.ratio, row.expected);
    }
    if let Some(gap) = report.plancherel_gap {
        let _ = writeln!(csv, ",plancherel_gap,{gap:?}");
    }
    let _ = writeln!(csv, ",pass,{}", report.pass);
    let wrapped = Report {
        config: serialize_config(cfg),
        inner: report,
    };
    Ok((to_json(&wrapped)?, csv, None))
}

fn run_kernelcheck(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    #[derive(serde::Serialize)]
    struct Row {
        t: f64,
        total_mass: f64,
        tail_mass: f64,
        hertz_bound: f64,
        highorder: Option<cumulants::KernelPropertyReport>,
    }
    let mut rows = Vec::new();
    for &t in &cfg.ladder {
        let fm = cfg.body.fejer_mass(t, cfg.epsilon);
        let highorder = if cfg.kernel_order > 2 {
            Some(
                cumulants::kernel_property_highorder(&cfg.body, t, cfg.kernel_order, cfg.epsilon)
                    .map_err(|e| CliError::Numerical(e.to_string()))?,
            )
        } else {
            None
        };
        rows.push(Row {
            t,
            total_mass: fm.total_mass,
            tail_mass: fm.tail_mass,
            hertz_bound: fm.hertz_bound,
            highorder,
        });
    }
    #[derive(serde::Serialize)]
    struct Report {
        config: String,
        epsilon: f64,
        rows: Vec<Row>,
    }
    let report = Report {
        config: serialize_config(cfg),
        epsilon: cfg.epsilon,
        rows,
    };
    let mut csv = String::from("t,total_mass,tail_mass,hertz_bound\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{:?},{:?},{:?},{:?}",
            r.t, r.total_mass, r.tail_mass, r.hertz_bound
        );
    }
    Ok((to_json(&report)?, csv, None))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# base experiment
mode = base
seed = 42
h = 0.25
n = 64
ladder = 8 16
generator = circulant_embedding
spectral_nodes = 512

[body]
kind = cube
dimension = 1

[density]
family = cauchy_type
alpha = 1
amplitude = 0.3183098861837907
";

    #[test]
    fn config_roundtrip_fixed_point() {
        let cfg = parse_config(SAMPLE).unwrap();
        let text = serialize_config(&cfg);
        let cfg2 = parse_config(&text).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(serialize_config(&cfg2), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = format!("{SAMPLE}\nbogus_key = 1\n");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.contains("unknown key 'bogus_key'"), "{err}");

        let bad = format!("{SAMPLE}\n[mystery]\nx = 1\n");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn validate_flags_assumptions() {
        let mut cfg = parse_config(SAMPLE).unwrap();
        assert!(validate_config(&cfg).is_empty());

        cfg.density = SpectralDensity::gaussian(1, 1.0, 0.0);
        let v = validate_config(&cfg);
        assert!(v.iter().any(|m| m.contains("Assumption B")), "{v:?}");

        let mut cfg = parse_config(SAMPLE).unwrap();
        cfg.mode = Mode::Hermite2;
        cfg.density = SpectralDensity::cauchy(1, 0.2, 1.0);
        let v = validate_config(&cfg);
        assert!(v.iter().any(|m| m.contains("L_2")), "{v:?}");

        let mut cfg = parse_config(SAMPLE).unwrap();
        cfg.ladder.clear();
        let v = validate_config(&cfg);
        assert!(v.iter().any(|m| m.contains("empty T ladder")), "{v:?}");
    }

    #[test]
    fn weighted_config_roundtrip() {
        let text = format!(
            "{SAMPLE}\n[weight]\nfamily = power_gamma_sum\nnu = 1.5\ngamma = 0.5\n"
        );
        let cfg = parse_config(&text).unwrap();
        let w = cfg.weight.as_ref().unwrap();
        assert_eq!(w.degree(), 0.75);
        let cfg2 = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Assumption("x".into()).exit_code(), 3);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 4);
    }
}
