//! Run configuration: TOML sections with fail-closed parsing.

use std::path::{Path, PathBuf};

use kawasaki_core::hierarchy::{ClosureKind, ClosureRule, CorrelationField, FieldMode};
use kawasaki_core::kmc::InitialLaw;
use kawasaki_core::scheduler::{ScaleParams, DEFAULT_MAX_STEPS};
use kawasaki_core::{KernelFamily, KernelSpec, Lattice, LatticeKernels, TorusDomain};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub kernels: KernelsConfig,
    pub initial: InitialConfig,
    pub dynamics: DynamicsConfig,
    pub hierarchy: HierarchyConfig,
    pub scheduler: SchedulerConfig,
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    /// Side of the continuum torus used by `simulate`.
    pub side: f64,
    /// Sites per axis of the lattice used by `hierarchy` and `validate`.
    pub lattice_sites: usize,
    pub spacing: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            side: 200.0,
            lattice_sites: 32,
            spacing: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsConfig {
    pub jump: KernelFamily,
    pub repulsion: KernelFamily,
    pub exclude_self_term: bool,
}

impl Default for KernelsConfig {
    fn default() -> Self {
        Self {
            jump: KernelFamily::TopHat {
                height: 0.5,
                range: 1.0,
            },
            repulsion: KernelFamily::TopHat {
                height: 0.5,
                range: 0.5,
            },
            exclude_self_term: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Poisson,
    JitteredGrid,
    /// Hierarchy only: `k^(1) = intensity`, `k^(2)` read from `k2` by
    /// separation site, `k^(3) = intensity^3`.
    CustomField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub intensity: f64,
    pub jitter: f64,
    pub k2: Vec<f64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::Poisson,
            intensity: 0.3,
            jitter: 1.0,
            k2: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub replicas: usize,
    pub seed: u64,
    pub pair_bins: usize,
    pub pair_r_max: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            t_end: 2.0,
            snapshot_dt: 0.25,
            replicas: 100,
            seed: 1,
            pair_bins: 10,
            pair_r_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4,
    Taylor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyConfig {
    pub n_max: usize,
    pub qy_order: usize,
    pub closure: ClosureKind,
    pub mode: FieldMode,
    pub integrator: Integrator,
    pub dt: f64,
    pub taylor_order: usize,
    /// Single Taylor step of length `step_fraction · T` from the initial scale
    /// instead of a full ladder, compared against RK4.
    pub step_fraction: Option<f64>,
    pub overflow_guard: f64,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            n_max: 2,
            qy_order: 1,
            closure: ClosureKind::PoissonTail,
            mode: FieldMode::Invariant,
            integrator: Integrator::Rk4,
            dt: 0.01,
            taylor_order: 40,
            step_fraction: None,
            overflow_guard: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    /// `alpha`, `mean_phi` and `c` as given in this section.
    Explicit,
    /// `α` and `⟨φ⟩` of the continuum kernels, `C` = initial intensity.
    Kernels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub epsilon: f64,
    pub t_target: f64,
    pub params: ParamSource,
    pub alpha: f64,
    pub mean_phi: f64,
    pub c: f64,
    pub max_steps: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            t_target: 10.0,
            params: ParamSource::Explicit,
            alpha: 0.1,
            mean_phi: 0.5,
            c: 0.3,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Per-replica snapshot CSVs from `simulate`.
    pub snapshots: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
            snapshots: true,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(what: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite (got {v})")))
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn defaults_table() -> toml::Table {
    toml::Table::try_from(RunConfig::default()).expect("defaults serialize")
}

/// Deep merge of `over` into `base`. A table naming a kernel `family` replaces
/// its counterpart wholesale, since families take different parameters.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("family") => {
                merge(b, o)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies `section.key=value` overrides to a parsed document.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> CliResult<()> {
    for item in overrides {
        let (path, value) = item
            .split_once('=')
            .ok_or_else(|| invalid(format!("override `{item}` is not KEY=VALUE")))?;
        let keys: Vec<&str> = path.trim().split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(invalid(format!("bad override key `{path}`")));
        }
        let mut table = &mut *doc;
        for k in &keys[..keys.len() - 1] {
            let entry = table
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| invalid(format!("override `{path}`: `{k}` is not a section")))?;
        }
        table.insert(keys[keys.len() - 1].to_string(), parse_value(value.trim()));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(doc: toml::Table) -> CliResult<Self> {
        let cfg: RunConfig = doc.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| CliError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                text.parse::<toml::Table>().map_err(|e| invalid(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        let mut merged = defaults_table();
        merge(&mut merged, doc);
        apply_overrides(&mut merged, overrides)?;
        Self::from_toml(merged)
    }

    /// Checks every field that no core constructor sees before computation starts.
    pub fn validate(&self) -> CliResult<()> {
        let d = &self.domain;
        if !(1..=3).contains(&d.dim) {
            return Err(invalid(format!("domain.dim must be 1, 2 or 3 (got {})", d.dim)));
        }
        positive("domain.side", d.side)?;
        positive("domain.spacing", d.spacing)?;
        let i = &self.initial;
        if !(i.intensity.is_finite() && i.intensity >= 0.0) {
            return Err(invalid(format!(
                "initial.intensity must be nonnegative (got {})",
                i.intensity
            )));
        }
        if !(0.0..=1.0).contains(&i.jitter) {
            return Err(invalid(format!("initial.jitter must lie in [0, 1] (got {})", i.jitter)));
        }
        if i.k2.iter().any(|v| !v.is_finite()) {
            return Err(invalid("initial.k2 entries must be finite"));
        }
        let dy = &self.dynamics;
        positive("dynamics.t_end", dy.t_end)?;
        positive("dynamics.snapshot_dt", dy.snapshot_dt)?;
        positive("dynamics.pair_r_max", dy.pair_r_max)?;
        if dy.replicas == 0 || dy.pair_bins == 0 {
            return Err(invalid("dynamics.replicas and dynamics.pair_bins must be at least 1"));
        }
        if dy.pair_r_max > 0.5 * d.side {
            return Err(invalid(format!(
                "dynamics.pair_r_max = {} exceeds half the box side",
                dy.pair_r_max
            )));
        }
        let h = &self.hierarchy;
        positive("hierarchy.dt", h.dt)?;
        positive("hierarchy.overflow_guard", h.overflow_guard)?;
        if h.taylor_order == 0 {
            return Err(invalid("hierarchy.taylor_order must be at least 1"));
        }
        if let Some(f) = h.step_fraction {
            positive("hierarchy.step_fraction", f)?;
        }
        let s = &self.scheduler;
        positive("scheduler.t_target", s.t_target)?;
        if s.max_steps == 0 {
            return Err(invalid("scheduler.max_steps must be at least 1"));
        }
        if self.outputs.formats.is_empty() {
            return Err(invalid("outputs.formats must not be empty"));
        }
        self.kernel_spec()?;
        self.scheduler_params()?;
        Ok(())
    }

    pub fn kernel_spec(&self) -> CliResult<KernelSpec> {
        Ok(KernelSpec::new(self.kernels.jump, self.kernels.repulsion, self.domain.dim)?
            .with_exclude_self_term(self.kernels.exclude_self_term))
    }

    pub fn torus(&self) -> CliResult<TorusDomain> {
        Ok(TorusDomain::new(self.domain.dim, self.domain.side)?)
    }

    pub fn initial_law(&self) -> CliResult<InitialLaw> {
        let i = &self.initial;
        match i.kind {
            InitialKind::Poisson => Ok(InitialLaw::Poisson {
                intensity: i.intensity,
            }),
            InitialKind::JitteredGrid => Ok(InitialLaw::JitteredGrid {
                intensity: i.intensity,
                jitter: i.jitter,
            }),
            InitialKind::CustomField => Err(invalid(
                "initial.kind = custom-field only applies to the hierarchy",
            )),
        }
    }

    pub fn lattice_kernels(&self) -> CliResult<LatticeKernels> {
        let d = &self.domain;
        let lattice = Lattice::new(d.dim, d.lattice_sites, d.spacing)?;
        Ok(LatticeKernels::new(lattice, &self.kernel_spec()?)?)
    }

    pub fn closure(&self) -> CliResult<ClosureRule> {
        Ok(ClosureRule::new(self.hierarchy.closure, self.hierarchy.n_max)?)
    }

    /// Initial correlation field on the lattice.
    pub fn initial_field(&self, lattice: Lattice) -> CliResult<CorrelationField> {
        let h = &self.hierarchy;
        let i = &self.initial;
        let rule = self.closure()?;
        match i.kind {
            InitialKind::Poisson => Ok(CorrelationField::poisson(
                lattice, h.mode, rule, h.qy_order, i.intensity,
            )?),
            InitialKind::JitteredGrid => Err(invalid(
                "initial.kind = jittered-grid has no lattice correlation field",
            )),
            InitialKind::CustomField => {
                let m = lattice.n_sites();
                if i.k2.len() != m {
                    return Err(invalid(format!(
                        "initial.k2 needs one value per lattice site ({m}), got {}",
                        i.k2.len()
                    )));
                }
                if (1..m).any(|s| i.k2[s] != i.k2[lattice.neg(s)]) {
                    return Err(invalid("initial.k2 must be symmetric under s -> -s"));
                }
                let c = i.intensity;
                let k2 = &i.k2;
                Ok(CorrelationField::from_fn(lattice, h.mode, rule, h.qy_order, |t| {
                    match t.len() {
                        1 => c,
                        2 => k2[lattice.sub(t[1], t[0])],
                        n => c.powi(n as i32),
                    }
                })?)
            }
        }
    }

    pub fn scheduler_params(&self) -> CliResult<ScaleParams> {
        let s = &self.scheduler;
        let p = match s.params {
            ParamSource::Explicit => ScaleParams::new(s.alpha, s.mean_phi, s.c, s.epsilon)?,
            ParamSource::Kernels => {
                let k = self.kernel_spec()?;
                ScaleParams::new(k.alpha, k.mean_phi, self.initial.intensity, s.epsilon)?
            }
        };
        Ok(p)
    }

    pub fn writes(&self, f: Format) -> bool {
        self.outputs.formats.contains(&f)
    }
}
