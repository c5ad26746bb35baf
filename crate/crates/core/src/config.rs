//! Experiment configuration: TOML files layered over built-in presets and
//! command-line overrides, validated into solver objects.
//!
//! Precedence is override > file > preset. Every value that reaches a solver
//! appears in the [`ResolvedConfig`], which serialises back to a file that
//! resolves to the same configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::micro::{MicroGrid, PeriodicMethod, PeriodicSolverConfig};
use crate::model::{presets, DecayLaw, FastSystem, Forcing, Mode, ScalarLaw, ScaleParams};
use crate::multiscale::MacroGrid;
use crate::study::{Reference, StudyPlan};

pub const DEFAULT_PRESET: &str = presets::SCALAR_DEFAULT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleSpec {
    pub epsilon: f64,
    pub t_end: f64,
    pub u_max: f64,
    pub u0: f64,
}

/// λ(u) = Σ coefficients[j] u^j with its declared floor and slope bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    pub coefficients: Vec<f64>,
    pub floor: f64,
    pub derivative_bound: f64,
}

/// mean + Σ cos[j] cos(2π(j+1)t) + sin[j] sin(2π(j+1)t)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSpec {
    #[serde(default)]
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub weight: f64,
    pub decay: DecaySpec,
    pub forcing: ForcingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub sigma0: f64,
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroSpec {
    /// Number of macro steps N; K = t_end / N.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroSpec {
    /// Steps per period M; k = 1 / M.
    pub steps: usize,
    pub tol_p: f64,
    pub max_cycles: usize,
    pub method: PeriodicMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Storage stride of resolved trajectories.
    pub stride: usize,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub micro_steps: Vec<usize>,
    /// Macro step sizes K; each must divide t_end.
    pub macro_steps: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Keep ε·t_end fixed when ε varies.
    pub scale_horizon: bool,
    /// "resolved", "unforced" or "none".
    pub reference: String,
    /// Coarsest M of the resolved reference chain M, 2M, 4M.
    pub reference_steps: usize,
    /// Tolerances of the tol_P sensitivity study.
    pub tolp_values: Vec<f64>,
}

/// A fully specified configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub preset: String,
    pub scale: ScaleSpec,
    pub system: SystemSpec,
    #[serde(rename = "macro")]
    pub macro_: MacroSpec,
    pub micro: MicroSpec,
    pub run: RunSpec,
    pub study: StudySpec,
}

// Partial layers: every field optional, merged field by field.

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaleLayer {
    epsilon: Option<f64>,
    t_end: Option<f64>,
    u_max: Option<f64>,
    u0: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemLayer {
    sigma0: Option<f64>,
    modes: Option<Vec<ModeSpec>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacroLayer {
    steps: Option<usize>,
    step_size: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MicroLayer {
    steps: Option<usize>,
    tol_p: Option<f64>,
    max_cycles: Option<usize>,
    method: Option<PeriodicMethod>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunLayer {
    stride: Option<usize>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyLayer {
    micro_steps: Option<Vec<usize>>,
    macro_steps: Option<Vec<f64>>,
    tolerances: Option<Vec<f64>>,
    epsilons: Option<Vec<f64>>,
    scale_horizon: Option<bool>,
    reference: Option<String>,
    reference_steps: Option<usize>,
    tolp_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLayer {
    preset: Option<String>,
    #[serde(default)]
    scale: ScaleLayer,
    #[serde(default)]
    system: SystemLayer,
    #[serde(default, rename = "macro")]
    macro_: MacroLayer,
    #[serde(default)]
    micro: MicroLayer,
    #[serde(default)]
    run: RunLayer,
    #[serde(default)]
    study: StudyLayer,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub epsilon: Option<f64>,
    pub t_end: Option<f64>,
    pub macro_steps: Option<usize>,
    pub macro_step_size: Option<f64>,
    pub micro_steps: Option<usize>,
    pub tol_p: Option<f64>,
    pub method: Option<PeriodicMethod>,
    pub stride: Option<usize>,
    pub workers: Option<usize>,
}

/// A config file's name and text.
#[derive(Debug, Clone, Copy)]
pub struct ConfigSource<'a> {
    pub name: &'a str,
    pub text: &'a str,
}

fn mode_spec(mode: &Mode) -> ModeSpec {
    let coefficients = match mode.decay.law() {
        ScalarLaw::Polynomial(c) => c.clone(),
        ScalarLaw::Custom(_) => unreachable!("presets use polynomial decay laws"),
    };
    let forcing = match &mode.forcing {
        Forcing::Fourier { mean, cos, sin } => ForcingSpec {
            mean: *mean,
            cos: cos.clone(),
            sin: sin.clone(),
        },
        Forcing::Custom(_) => unreachable!("presets use Fourier forcing"),
    };
    ModeSpec {
        weight: mode.weight,
        decay: DecaySpec {
            coefficients,
            floor: mode.decay.lambda_floor(),
            derivative_bound: mode.decay.derivative_bound(),
        },
        forcing,
    }
}

/// The built-in preset `name` as a complete configuration.
pub fn preset(name: &str) -> Option<ResolvedConfig> {
    let sys = presets::by_name(name)?;
    let scale = presets::default_scale();
    Some(ResolvedConfig {
        preset: name.to_string(),
        scale: ScaleSpec {
            epsilon: scale.epsilon(),
            t_end: scale.t_end(),
            u_max: scale.u_max(),
            u0: scale.u0(),
        },
        system: SystemSpec {
            sigma0: sys.sigma0(),
            modes: sys.modes().iter().map(mode_spec).collect(),
        },
        macro_: MacroSpec { steps: 100 },
        micro: MicroSpec {
            steps: 100,
            tol_p: 1e-6,
            max_cycles: 1000,
            method: PeriodicMethod::Averaged,
        },
        run: RunSpec { stride: 100, workers: 1 },
        study: StudySpec {
            micro_steps: vec![10, 20, 25, 40, 50, 100, 200, 400, 800],
            macro_steps: [16, 32, 64, 128, 256, 512, 1024]
                .iter()
                .map(|&n| scale.t_end() / n as f64)
                .collect(),
            tolerances: vec![1e-10],
            epsilons: vec![1e-3, 1e-4],
            scale_horizon: true,
            reference: "resolved".into(),
            reference_steps: 200,
            tolp_values: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-8],
        },
    })
}

pub fn preset_names() -> [&'static str; 2] {
    [presets::SCALAR_DEFAULT, presets::MODAL_DEFAULT]
}

fn toml_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside table `[section]`, or of the `index`-th
/// `[[section]]` entry when `key` is empty.
fn locate(text: &str, section: &str, index: Option<usize>, key: &str) -> Option<usize> {
    let mut in_section = false;
    let mut seen = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim();
            in_section = name == section
                && match index {
                    Some(idx) => {
                        seen += 1;
                        seen == idx + 1
                    }
                    None => true,
                };
            if in_section && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        if in_section && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn parse_layer(src: ConfigSource<'_>) -> Result<FileLayer> {
    toml::from_str(src.text).map_err(|e| {
        let line = e.span().map(|s| toml_line(src.text, s.start));
        Error::config(src.name, line, e.message().to_string())
    })
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_layer(cfg: &mut ResolvedConfig, macro_size: &mut Option<f64>, layer: FileLayer) -> Result<()> {
    let s = &mut cfg.scale;
    set(&mut s.epsilon, layer.scale.epsilon);
    set(&mut s.t_end, layer.scale.t_end);
    set(&mut s.u_max, layer.scale.u_max);
    set(&mut s.u0, layer.scale.u0);
    set(&mut cfg.system.sigma0, layer.system.sigma0);
    set(&mut cfg.system.modes, layer.system.modes);
    match (layer.macro_.steps, layer.macro_.step_size) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "macro",
                None,
                "give either `steps` or `step_size`, not both",
            ))
        }
        (Some(n), None) => {
            cfg.macro_.steps = n;
            *macro_size = None;
        }
        (None, Some(k)) => *macro_size = Some(k),
        (None, None) => {}
    }
    let m = &mut cfg.micro;
    set(&mut m.steps, layer.micro.steps);
    set(&mut m.tol_p, layer.micro.tol_p);
    set(&mut m.max_cycles, layer.micro.max_cycles);
    set(&mut m.method, layer.micro.method);
    set(&mut cfg.run.stride, layer.run.stride);
    set(&mut cfg.run.workers, layer.run.workers);
    let st = &mut cfg.study;
    set(&mut st.micro_steps, layer.study.micro_steps);
    set(&mut st.macro_steps, layer.study.macro_steps);
    set(&mut st.tolerances, layer.study.tolerances);
    set(&mut st.epsilons, layer.study.epsilons);
    set(&mut st.scale_horizon, layer.study.scale_horizon);
    set(&mut st.reference, layer.study.reference);
    set(&mut st.reference_steps, layer.study.reference_steps);
    set(&mut st.tolp_values, layer.study.tolp_values);
    Ok(())
}

fn override_layer(o: &Overrides) -> Result<FileLayer> {
    if o.macro_steps.is_some() && o.macro_step_size.is_some() {
        return Err(Error::config("macro", None, "give either --N or --K, not both"));
    }
    Ok(FileLayer {
        preset: None,
        scale: ScaleLayer {
            epsilon: o.epsilon,
            t_end: o.t_end,
            ..Default::default()
        },
        system: SystemLayer::default(),
        macro_: MacroLayer {
            steps: o.macro_steps,
            step_size: o.macro_step_size,
        },
        micro: MicroLayer {
            steps: o.micro_steps,
            tol_p: o.tol_p,
            method: o.method,
            ..Default::default()
        },
        run: RunLayer {
            stride: o.stride,
            workers: o.workers,
        },
        study: StudyLayer::default(),
    })
}

/// Layers preset, file and overrides, then checks every invariant of the
/// single-run objects. Study settings are checked by
/// [`ResolvedConfig::study_plan_located`].
pub fn resolve(file: Option<ConfigSource<'_>>, overrides: &Overrides) -> Result<ResolvedConfig> {
    let layer = file.map(parse_layer).transpose()?;
    let name = overrides
        .preset
        .clone()
        .or_else(|| layer.as_ref().and_then(|l| l.preset.clone()))
        .unwrap_or_else(|| DEFAULT_PRESET.to_string());
    let mut cfg = preset(&name).ok_or_else(|| {
        let line = file.and_then(|f| locate(f.text, "", None, "preset"));
        Error::config(
            "preset",
            line,
            format!("unknown preset `{name}` (available: {})", preset_names().join(", ")),
        )
    })?;
    let mut macro_size = None;
    if let Some(l) = layer {
        apply_layer(&mut cfg, &mut macro_size, l)?;
    }
    apply_layer(&mut cfg, &mut macro_size, override_layer(overrides)?)?;
    if let Some(k) = macro_size {
        let grid = MacroGrid::from_step_size(k, cfg.scale.t_end).map_err(|e| {
            let line = file.and_then(|f| locate(f.text, "macro", None, "step_size"));
            Error::config("macro.step_size", line, e.to_string())
        })?;
        cfg.macro_.steps = grid.steps();
    }
    cfg.validate(file)?;
    Ok(cfg)
}

/// Solver objects for a single run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: FastSystem,
    pub scale: ScaleParams,
    pub macro_grid: MacroGrid,
    pub micro_grid: MicroGrid,
    pub psolver: PeriodicSolverConfig,
    pub stride: usize,
    pub workers: usize,
}

impl ResolvedConfig {
    /// TOML text that resolves back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved config serialises")
    }

    fn validate(&self, file: Option<ConfigSource<'_>>) -> Result<()> {
        self.problem_located(file).map(|_| ())
    }

    pub fn system(&self) -> Result<FastSystem> {
        self.system_located(None)
    }

    fn system_located(&self, file: Option<ConfigSource<'_>>) -> Result<FastSystem> {
        let text = file.map(|f| f.text).unwrap_or("");
        let u_max = self.scale.u_max;
        let mut modes = Vec::with_capacity(self.system.modes.len());
        for (i, m) in self.system.modes.iter().enumerate() {
            let decay = DecayLaw::new(
                ScalarLaw::Polynomial(m.decay.coefficients.clone()),
                m.decay.floor,
                m.decay.derivative_bound,
                u_max,
            )
            .map_err(|e| {
                Error::config(
                    format!("system.modes[{i}].decay"),
                    locate(text, "system.modes", Some(i), ""),
                    e.to_string(),
                )
            })?;
            modes.push(Mode {
                decay,
                forcing: Forcing::Fourier {
                    mean: m.forcing.mean,
                    cos: m.forcing.cos.clone(),
                    sin: m.forcing.sin.clone(),
                },
                weight: m.weight,
            });
        }
        FastSystem::new(modes, self.system.sigma0)
            .map_err(|e| Error::config("system", locate(text, "system", None, ""), e.to_string()))
    }

    pub fn scale_params(&self) -> Result<ScaleParams> {
        let s = &self.scale;
        ScaleParams::new(s.epsilon, s.t_end, s.u_max, s.u0).map_err(|e| Error::config("scale", None, e.to_string()))
    }

    pub fn problem(&self) -> Result<Problem> {
        self.problem_located(None)
    }

    fn problem_located(&self, file: Option<ConfigSource<'_>>) -> Result<Problem> {
        let text = file.map(|f| f.text).unwrap_or("");
        let at = |section: &str, key: &str| locate(text, section, None, key);
        let system = self.system_located(file)?;
        let scale = self
            .scale_params()
            .map_err(|e| relocate(e, at("scale", "")))?;
        system
            .check_scale(&scale)
            .map_err(|e| Error::config("scale.u_max", at("scale", "u_max"), e.to_string()))?;
        let macro_grid = MacroGrid::from_steps(self.macro_.steps, self.scale.t_end)
            .map_err(|e| Error::config("macro.steps", at("macro", "steps"), e.to_string()))?;
        let micro_grid = MicroGrid::new(self.micro.steps)
            .map_err(|e| Error::config("micro.steps", at("micro", "steps"), e.to_string()))?;
        let psolver = PeriodicSolverConfig::new(self.micro.tol_p, self.micro.max_cycles, self.micro.method)
            .map_err(|e| Error::config("micro", at("micro", ""), e.to_string()))?;
        if self.run.stride < 1 {
            return Err(Error::config("run.stride", at("run", "stride"), "must be >= 1"));
        }
        if self.run.workers < 1 {
            return Err(Error::config("run.workers", at("run", "workers"), "must be >= 1"));
        }
        Ok(Problem {
            system,
            scale,
            macro_grid,
            micro_grid,
            psolver,
            stride: self.run.stride,
            workers: self.run.workers,
        })
    }

    pub fn study_plan(&self) -> Result<StudyPlan> {
        self.study_plan_located(None)
    }

    /// Like [`Self::study_plan`], reporting lines of `file` in errors.
    pub fn study_plan_located(&self, file: Option<ConfigSource<'_>>) -> Result<StudyPlan> {
        let text = file.map(|f| f.text).unwrap_or("");
        let st = &self.study;
        let err = |key: &str, msg: String| Error::config(format!("study.{key}"), locate(text, "study", None, key), msg);
        let lists = [
            ("micro_steps", st.micro_steps.is_empty()),
            ("macro_steps", st.macro_steps.is_empty()),
            ("tolerances", st.tolerances.is_empty()),
            ("epsilons", st.epsilons.is_empty()),
            ("tolp_values", st.tolp_values.is_empty()),
        ];
        for (key, empty) in lists {
            if empty {
                return Err(err(key, "list must not be empty".into()));
            }
        }
        if st.micro_steps.iter().any(|&m| m < 2) {
            return Err(err("micro_steps", "every M must be >= 2".into()));
        }
        for (key, vals) in [
            ("macro_steps", &st.macro_steps),
            ("tolerances", &st.tolerances),
            ("epsilons", &st.epsilons),
            ("tolp_values", &st.tolp_values),
        ] {
            if let Some(v) = vals.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(err(key, format!("value {v} must be positive and finite")));
            }
        }
        let reference = match st.reference.as_str() {
            "resolved" => Reference::Resolved {
                coarse_steps: st.reference_steps,
            },
            "unforced" => Reference::Unforced,
            "none" => Reference::None,
            other => {
                return Err(err(
                    "reference",
                    format!("unknown reference `{other}` (expected resolved | unforced | none)"),
                ))
            }
        };
        if st.reference_steps < 2 {
            return Err(err("reference_steps", "must be >= 2".into()));
        }
        let plan = StudyPlan {
            system: self.system_located(file)?,
            scale: self.scale_params()?,
            micro_steps: st.micro_steps.clone(),
            macro_steps: st.macro_steps.clone(),
            tolerances: st.tolerances.clone(),
            epsilons: st.epsilons.clone(),
            scale_horizon: st.scale_horizon,
            method: self.micro.method,
            max_cycles: self.micro.max_cycles,
            reference,
        };
        for &eps in &plan.epsilons {
            let scale = plan.scale_for(eps).map_err(|e| err("epsilons", e.to_string()))?;
            for &kk in &plan.macro_steps {
                MacroGrid::from_step_size(kk, scale.t_end())
                    .map_err(|e| err("macro_steps", format!("at epsilon {eps}: {e}")))?;
            }
        }
        Ok(plan)
    }
}

fn relocate(e: Error, line: Option<usize>) -> Error {
    match e {
        Error::Config { path, message, .. } => Error::Config { path, line, message },
        other => other,
    }
}
