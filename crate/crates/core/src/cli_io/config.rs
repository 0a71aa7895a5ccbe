//! Run configuration: `[section]` headers with `key = value` pairs in TOML
//! syntax, validated in one pass so that every problem is reported.

use crate::dynamics::{CentralForce, ConstantForce, Forcing, NoForcing, Perturbation, Preset};
use crate::entropy::RemainderForm;
use crate::fields::{BoundaryMode, Grid};
use crate::model::{GBound, ModelParams};
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsKind {
    Coupled,
    Heat,
    Profile,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Preset(Preset),
    Mms(MmsKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingKind {
    None,
    Constant([f64; 2]),
    Central { strength: f64, center: [f64; 2] },
}

impl ForcingKind {
    pub fn build(&self) -> Arc<dyn Forcing> {
        match *self {
            ForcingKind::None => Arc::new(NoForcing),
            ForcingKind::Constant(g) => Arc::new(ConstantForce(g)),
            ForcingKind::Central { strength, center } => Arc::new(CentralForce { strength, center }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub dt: Option<f64>,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsConfig {
    /// Abort factor on `sup ϱ / max ϱ₀`; may be infinite.
    pub rho_threshold: f64,
    pub alpha: f64,
    pub remainder: RemainderForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub csv: bool,
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub levels: Vec<usize>,
    pub t_end: f64,
    pub dt_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConfig {
    pub samples: usize,
    pub seed: u64,
    pub g_bound: GBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub prm: ModelParams,
    pub initial: InitialKind,
    pub perturbation: Option<Perturbation>,
    pub forcing: ForcingKind,
    pub time: TimeConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
    pub lemma: LemmaConfig,
}

/// Reads one section, recording type errors and which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn float(&mut self, key: &'static str, default: Option<f64>, errs: &mut Vec<String>) -> f64 {
        let name = self.name;
        match self.get(key) {
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(v) => {
                errs.push(format!("[{name}] {key} must be a number, got {}", v.type_str()));
                f64::NAN
            }
            None => default.unwrap_or_else(|| {
                errs.push(format!("[{name}] missing mandatory key {key}"));
                f64::NAN
            }),
        }
    }

    fn opt_float(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<f64> {
        self.get(key)?;
        Some(self.float(key, None, errs))
    }

    fn uint(&mut self, key: &'static str, default: Option<u64>, errs: &mut Vec<String>) -> u64 {
        let name = self.name;
        match self.get(key) {
            Some(Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(v) => {
                errs.push(format!("[{name}] {key} must be a nonnegative integer, got {v}"));
                0
            }
            None => default.unwrap_or_else(|| {
                errs.push(format!("[{name}] missing mandatory key {key}"));
                0
            }),
        }
    }

    fn string(&mut self, key: &'static str, default: Option<&str>, errs: &mut Vec<String>) -> String {
        let name = self.name;
        match self.get(key) {
            Some(Value::String(s)) => s.clone(),
            Some(v) => {
                errs.push(format!("[{name}] {key} must be a string, got {}", v.type_str()));
                String::new()
            }
            None => default.map(str::to_owned).unwrap_or_else(|| {
                errs.push(format!("[{name}] missing mandatory key {key}"));
                String::new()
            }),
        }
    }

    fn unknown(&self) -> Vec<String> {
        self.table
            .map(|t| {
                t.keys()
                    .filter(|k| !self.used.contains(k.as_str()))
                    .map(|k| format!("[{}] unknown key {k}", self.name))
                    .collect()
            })
            .unwrap_or_default()
    }
}

const SECTIONS: [&str; 9] = [
    "grid",
    "params",
    "initial",
    "forcing",
    "time",
    "diagnostics",
    "output",
    "verify",
    "lemma",
];

/// Parses and validates a configuration. With `strict`, unknown sections
/// and keys are errors; otherwise they are logged and ignored.
pub fn parse_config(text: &str, strict: bool) -> Result<RunConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(vec![e.to_string()]))?;
    let mut errs = Vec::new();
    let mut unknown = Vec::new();
    for (k, v) in &root {
        if !SECTIONS.contains(&k.as_str()) {
            unknown.push(format!("unknown section [{k}]"));
        } else if !v.is_table() {
            errs.push(format!("{k} must be a [section]"));
        }
    }
    let sec = |name: &'static str| Section {
        name,
        table: root.get(name).and_then(Value::as_table),
        used: BTreeSet::new(),
    };
    let (mut g, mut p, mut ic, mut fo, mut tm, mut dg, mut out, mut vf, mut lm) = (
        sec("grid"),
        sec("params"),
        sec("initial"),
        sec("forcing"),
        sec("time"),
        sec("diagnostics"),
        sec("output"),
        sec("verify"),
        sec("lemma"),
    );

    let nx = g.uint("nx", None, &mut errs) as usize;
    let ny = g.uint("ny", None, &mut errs) as usize;
    let lx = g.float("lx", Some(1.0), &mut errs);
    let ly = g.float("ly", Some(1.0), &mut errs);
    let mode = match g.string("boundary", None, &mut errs).as_str() {
        "periodic" => Some(BoundaryMode::Periodic),
        "physical" => Some(BoundaryMode::Physical),
        "" => None,
        other => {
            errs.push(format!("[grid] boundary must be \"periodic\" or \"physical\", got \"{other}\""));
            None
        }
    };
    let grid = mode.and_then(|m| match Grid::new(nx, ny, lx, ly, m) {
        Ok(g) => Some(g),
        Err(e) => {
            if nx > 0 && ny > 0 {
                errs.push(format!("[grid] {e}"));
            }
            None
        }
    });

    let prm = ModelParams {
        a: p.float("a", None, &mut errs),
        gamma: p.float("gamma", None, &mut errs),
        mu_s: p.float("mu_s", None, &mut errs),
        mu_b: p.float("mu_b", Some(0.0), &mut errs),
        eps: p.float("eps", None, &mut errs),
        k: p.float("k", None, &mut errs),
        lambda: p.float("lambda", None, &mut errs),
        zfrak: p.float("zfrak", Some(0.0), &mut errs),
        l: p.float("L", Some(1.0), &mut errs),
    };
    // missing keys are already reported; only validate what was given
    if [prm.a, prm.gamma, prm.mu_s, prm.eps, prm.k, prm.lambda].iter().all(|v| !v.is_nan()) {
        errs.extend(prm.violations().into_iter().map(|m| format!("[params] {m}")));
    }

    let preset_name = ic.string("preset", None, &mut errs);
    let rho0 = ic.float("rho0", Some(1.0), &mut errs);
    let eta0 = ic.float("eta0", Some(1.0), &mut errs);
    let positive = |v: f64, what: &str, errs: &mut Vec<String>| {
        if !(v > 0.0 && v.is_finite()) {
            errs.push(format!("[initial] {what} must be positive, got {v}"));
        }
    };
    positive(rho0, "rho0", &mut errs);
    if !(eta0 >= 0.0 && eta0.is_finite()) {
        errs.push(format!("[initial] eta0 must be nonnegative, got {eta0}"));
    }
    let initial = match preset_name.as_str() {
        "uniform" => {
            let tau = match ic.get("tau") {
                None => None,
                Some(Value::Array(a)) if a.len() == 3 => {
                    let v: Vec<f64> = a
                        .iter()
                        .filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                        .collect();
                    if v.len() == 3 {
                        Some([v[0], v[1], v[2]])
                    } else {
                        errs.push("[initial] tau must hold three numbers [T11, T12, T22]".into());
                        None
                    }
                }
                Some(_) => {
                    errs.push("[initial] tau must hold three numbers [T11, T12, T22]".into());
                    None
                }
            };
            Some(InitialKind::Preset(Preset::Uniform { rho0, eta0, tau }))
        }
        "gaussian-bump" => {
            let amp = ic.float("amp", Some(0.5), &mut errs);
            let width = ic.float("width", Some(0.1), &mut errs);
            positive(width, "width", &mut errs);
            if !(amp > -1.0) {
                errs.push(format!("[initial] amp must exceed -1, got {amp}"));
            }
            Some(InitialKind::Preset(Preset::GaussianBump {
                rho0,
                eta0,
                amp,
                width,
            }))
        }
        "shear-layer" => {
            let u0 = ic.float("u0", Some(0.5), &mut errs);
            Some(InitialKind::Preset(Preset::ShearLayer { rho0, eta0, u0 }))
        }
        "mms:coupled" => Some(InitialKind::Mms(MmsKind::Coupled)),
        "mms:heat" => Some(InitialKind::Mms(MmsKind::Heat)),
        "mms:profile" => {
            if mode == Some(BoundaryMode::Physical) {
                errs.push("[initial] mms:profile needs a periodic grid".into());
            }
            Some(InitialKind::Mms(MmsKind::Profile))
        }
        "" => None,
        other => {
            errs.push(format!(
                "[initial] unknown preset \"{other}\"; expected uniform, gaussian-bump, shear-layer, mms:coupled, mms:heat or mms:profile"
            ));
            None
        }
    };
    let delta0 = ic.float("delta0", Some(0.0), &mut errs);
    let seed = ic.uint("seed", Some(0), &mut errs);
    if !(0.0..1.0).contains(&delta0) {
        errs.push(format!("[initial] delta0 must lie in [0, 1), got {delta0}"));
    }
    let perturbation = (delta0 > 0.0).then_some(Perturbation { delta0, seed });
    if perturbation.is_some() && matches!(initial, Some(InitialKind::Mms(_))) {
        errs.push("[initial] manufactured solutions cannot be perturbed".into());
    }

    let forcing = match fo.string("kind", Some("none"), &mut errs).as_str() {
        "none" => ForcingKind::None,
        "constant" => ForcingKind::Constant([fo.float("gx", Some(0.0), &mut errs), fo.float("gy", Some(0.0), &mut errs)]),
        "central" => ForcingKind::Central {
            strength: fo.float("strength", None, &mut errs),
            center: [fo.float("x0", Some(0.5 * lx), &mut errs), fo.float("y0", Some(0.5 * ly), &mut errs)],
        },
        other => {
            errs.push(format!("[forcing] kind must be none, constant or central, got \"{other}\""));
            ForcingKind::None
        }
    };
    if forcing != ForcingKind::None && matches!(initial, Some(InitialKind::Mms(_))) {
        errs.push("[forcing] manufactured solutions supply their own forcing".into());
    }

    let time = TimeConfig {
        t_end: tm.float("t_end", None, &mut errs),
        cfl: tm.float("cfl", Some(0.4), &mut errs),
        dt: tm.opt_float("dt", &mut errs),
        snapshot_stride: tm.uint("snapshot_stride", Some(1), &mut errs) as usize,
    };
    if !(time.t_end >= 0.0 && time.t_end.is_finite()) && !time.t_end.is_nan() {
        errs.push(format!("[time] t_end must be finite and nonnegative, got {}", time.t_end));
    }
    if !(time.cfl > 0.0 && time.cfl <= 1.0) {
        errs.push(format!("[time] cfl must lie in (0, 1], got {}", time.cfl));
    }
    if let Some(dt) = time.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            errs.push(format!("[time] dt must be positive, got {dt}"));
        }
    }
    if time.snapshot_stride == 0 {
        errs.push("[time] snapshot_stride must be at least 1".into());
    }

    let remainder = match dg.string("remainder", Some("definition"), &mut errs).as_str() {
        "definition" => RemainderForm::Definition,
        "recombined" => RemainderForm::Recombined,
        other => {
            errs.push(format!("[diagnostics] remainder must be definition or recombined, got \"{other}\""));
            RemainderForm::Definition
        }
    };
    let diagnostics = DiagnosticsConfig {
        rho_threshold: dg.float("rho_threshold", Some(1e3), &mut errs),
        alpha: dg.float("alpha", Some(3.0), &mut errs),
        remainder,
    };
    if !(diagnostics.rho_threshold > 0.0) {
        errs.push(format!("[diagnostics] rho_threshold must be positive, got {}", diagnostics.rho_threshold));
    }
    if !(diagnostics.alpha > 2.0 && diagnostics.alpha <= 3.0) {
        errs.push(format!("[diagnostics] alpha must lie in (2, 3], got {}", diagnostics.alpha));
    }

    let directory = out.string("directory", Some("out"), &mut errs);
    let (mut csv, mut snapshots) = (true, true);
    match out.get("formats") {
        None => {}
        Some(Value::Array(a)) => {
            csv = false;
            snapshots = false;
            for f in a {
                match f.as_str() {
                    Some("csv") => csv = true,
                    Some("snapshots") => snapshots = true,
                    _ => errs.push(format!("[output] unknown format {f}; expected \"csv\" or \"snapshots\"")),
                }
            }
        }
        Some(v) => errs.push(format!("[output] formats must be a list, got {}", v.type_str())),
    }

    let levels = match vf.get("levels") {
        None => vec![32, 64, 128],
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|v| match v.as_integer() {
                Some(n) if n > 0 => Some(n as usize),
                _ => {
                    errs.push(format!("[verify] levels must be positive integers, got {v}"));
                    None
                }
            })
            .collect(),
        Some(v) => {
            errs.push(format!("[verify] levels must be a list, got {}", v.type_str()));
            Vec::new()
        }
    };
    let verify = VerifyConfig {
        levels,
        t_end: vf.float("t_end", Some(0.05), &mut errs),
        dt_scale: vf.float("dt_scale", Some(0.8), &mut errs),
    };
    if !(verify.dt_scale > 0.0) {
        errs.push(format!("[verify] dt_scale must be positive, got {}", verify.dt_scale));
    }

    let g_bound = match lm.string("g_bound", Some("corrected"), &mut errs).as_str() {
        "corrected" => GBound::Corrected,
        "published" => GBound::Published,
        other => {
            errs.push(format!("[lemma] g_bound must be corrected or published, got \"{other}\""));
            GBound::Corrected
        }
    };
    let lemma = LemmaConfig {
        samples: lm.uint("samples", Some(1_000_000), &mut errs) as usize,
        seed: lm.uint("seed", Some(0), &mut errs),
        g_bound,
    };
    if lemma.samples == 0 {
        errs.push("[lemma] samples must be positive".into());
    }

    for s in [&g, &p, &ic, &fo, &tm, &dg, &out, &vf, &lm] {
        unknown.extend(s.unknown());
    }
    if strict {
        errs.extend(unknown);
    } else {
        for u in unknown {
            log::warn!("ignoring {u}");
        }
    }
    match (grid, initial, errs.is_empty()) {
        (Some(grid), Some(initial), true) => Ok(RunConfig {
            grid,
            prm,
            initial,
            perturbation,
            forcing,
            time,
            diagnostics,
            output: OutputConfig {
                directory,
                csv,
                snapshots,
            },
            verify,
            lemma,
        }),
        _ => Err(ConfigError(if errs.is_empty() {
            vec!["incomplete configuration".into()]
        } else {
            errs
        })),
    }
}
