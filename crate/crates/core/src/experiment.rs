//! Experiment configuration, orchestration and result emission.
//!
//! A configuration names a model, an experiment kind and the sweep. Sweep
//! points run on a rayon pool and are collected in sweep order, so emitted
//! files do not depend on scheduling. Failures are captured per record.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::build_clifford;
use crate::cocycle::{central_identity_check, local_cocycle, weak_invariant_sigma12};
use crate::dirac::{
    dirac_phase, fedosov_tindex_with_tolerance, kernel_dims, midpoint_grid, random_shifts,
    summability_diagnostic,
};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::linalg::C64;
use crate::model::{
    atomic_insulator, build_hamiltonian, chain, chern_model, layered_chern_stack, sample_disorder,
    HoppingModel,
};
use crate::oracle::momentum_oracle_chern;
use crate::spectral::{fermi_projector_with_threshold, SpectralProjector};

pub const SCHEMA_VERSION: u32 = 1;

/// Grid used for the oracle reference attached to records.
const REFERENCE_GRID: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Chern,
    Index,
    Sigma12,
    IdentityCheck,
    Decay,
    Convergence,
    Oracle,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Chern => "chern",
            ExperimentKind::Index => "index",
            ExperimentKind::Sigma12 => "sigma12",
            ExperimentKind::IdentityCheck => "identity-check",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingSpec {
    pub vector: Vec<i64>,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
    /// Disorder coupling `W_q` for this hopping.
    #[serde(default)]
    pub coupling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "lowercase")]
pub enum ModelSpec {
    Chern {
        mass: f64,
    },
    Atomic {
        d: usize,
        #[serde(default = "unit")]
        mass: f64,
    },
    Stack {
        mass: f64,
        #[serde(default)]
        t3: f64,
    },
    Chain {
        t: f64,
    },
    Custom {
        d: usize,
        q: usize,
        hoppings: Vec<HoppingSpec>,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub spec: ModelSpec,
    /// On-site disorder strength `W_0`.
    #[serde(default)]
    pub disorder: f64,
    #[serde(default)]
    pub fermi_level: f64,
}

impl ModelConfig {
    pub fn build(&self) -> Result<HoppingModel> {
        let base = match &self.spec {
            ModelSpec::Chern { mass } => chern_model(*mass),
            ModelSpec::Atomic { d, mass } => {
                if *d == 0 {
                    return Err(Error::Config("atomic model needs d >= 1".into()));
                }
                atomic_insulator(*d, *mass)
            }
            ModelSpec::Stack { mass, t3 } => layered_chern_stack(*mass, *t3),
            ModelSpec::Chain { t } => chain(*t),
            ModelSpec::Custom { d, q, hoppings } => {
                let mut hops = Vec::new();
                let mut couplings = Vec::new();
                for h in hoppings {
                    hops.push((h.vector.clone(), spec_matrix(h, *q)?));
                    if let Some(w) = h.coupling {
                        couplings.push((h.vector.clone(), w));
                    }
                }
                return HoppingModel::new("custom", *d, *q, hops, couplings)?
                    .with_onsite_disorder(self.disorder);
            }
        };
        if self.disorder != 0.0 {
            base.with_onsite_disorder(self.disorder)
        } else {
            Ok(base)
        }
    }

    /// Oracle integer of the clean two-dimensional layer, if one exists.
    fn reference(&self) -> Option<i64> {
        let layer = match &self.spec {
            ModelSpec::Stack { mass, .. } => chern_model(*mass),
            ModelSpec::Atomic { .. } => return Some(0),
            ModelSpec::Chern { mass } => chern_model(*mass),
            ModelSpec::Custom { .. } => {
                let clean = ModelConfig {
                    disorder: 0.0,
                    ..self.clone()
                };
                let m = clean.build().ok()?;
                if m.d() != 2 || !m.is_clean() {
                    return None;
                }
                m
            }
            ModelSpec::Chain { .. } => return None,
        };
        let band_count = layer.internal_dim();
        // bands below the Fermi level at k = 0 decide which bands are filled
        let w = crate::linalg::eigvalsh(layer.bloch(&[0.0, 0.0]).view()).ok()?;
        let filled = w.iter().filter(|&&e| e < self.fermi_level).count();
        let mut total = 0;
        for band in 0..filled.min(band_count) {
            total += momentum_oracle_chern(&layer, band, REFERENCE_GRID).ok()?.chern;
        }
        Some(total)
    }
}

fn spec_matrix(h: &HoppingSpec, q: usize) -> Result<Array2<C64>> {
    let rows_ok = |m: &Vec<Vec<f64>>| m.len() == q && m.iter().all(|r| r.len() == q);
    if !rows_ok(&h.re) || h.im.as_ref().is_some_and(|m| !rows_ok(m)) {
        return Err(Error::Config(format!("hopping {:?} must be {q}x{q}", h.vector)));
    }
    Ok(Array2::from_shape_fn((q, q), |(i, j)| {
        let im = h.im.as_ref().map(|m| m[i][j]).unwrap_or(0.0);
        C64::new(h.re[i][j], im)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
#[derive(Default)]
pub enum X0Spec {
    /// `x₀ = (1/2, …, 1/2)`.
    #[default]
    Center,
    Midpoint { points: usize },
    Random { count: usize, seed: u64 },
    List { values: Vec<Vec<f64>> },
}


impl X0Spec {
    pub fn samples(&self, d: usize) -> Vec<Vec<f64>> {
        match self {
            X0Spec::Center => vec![vec![0.5; d]],
            X0Spec::Midpoint { points } => midpoint_grid(d, *points),
            X0Spec::Random { count, seed } => random_shifts(d, *count, *seed),
            X0Spec::List { values } => values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Minimal distance of `ε_F` to the spectrum.
    pub gap: f64,
    /// Relative imaginary residual accepted in index traces.
    pub imag: f64,
    /// x₀ spread above which a warning is attached.
    pub spread: f64,
    /// Singular-value threshold for kernel counting.
    pub kernel: f64,
    /// Distance to the reference integer counted as agreement.
    pub accept: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gap: crate::spectral::DEFAULT_GAP_THRESHOLD,
            imag: crate::dirac::DEFAULT_IMAG_TOLERANCE,
            spread: 1e-2,
            kernel: 1e-6,
            accept: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    /// Fedosov exponent; `d/2 + 1` when absent.
    pub n: Option<usize>,
    /// Interior windows `R′`; `R/2` when empty.
    pub windows: Vec<usize>,
    pub x0: X0Spec,
    /// Also count kernels of the compressed Dirac phase.
    pub kernel: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            n: None,
            windows: Vec::new(),
            x0: X0Spec::Center,
            kernel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityConfig {
    pub d: usize,
    /// Point configurations `[x_1, …, x_d]`.
    pub points: Vec<Vec<Vec<i64>>>,
    pub cutoff: f64,
    /// Midpoint nodes per axis for the x₀ average.
    pub grid: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            d: 2,
            points: vec![vec![vec![1, 0], vec![0, 1]]],
            cutoff: 200.0,
            grid: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayConfig {
    pub power: usize,
    pub tables: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            power: 2,
            tables: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// Torus sides, box radii or oracle grid sizes, depending on the kind.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub index: IndexConfig,
    #[serde(default)]
    pub identity: IdentityConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn model_config(&self) -> Result<&ModelConfig> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config(format!("experiment '{}' needs a [model] table", self.kind.as_str())))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if let Some(0) = self.threads {
            return cfg_err("threads must be positive".into());
        }
        if self.kind == ExperimentKind::IdentityCheck {
            let id = &self.identity;
            build_clifford(id.d).map_err(|e| Error::Config(e.to_string()))?;
            if id.points.is_empty() {
                return cfg_err("identity check needs at least one point configuration".into());
            }
            for pts in &id.points {
                if pts.len() != id.d || pts.iter().any(|p| p.len() != id.d) {
                    return cfg_err(format!("each configuration needs {0} points in Z^{0}", id.d));
                }
            }
            if !(id.cutoff > 0.0) || id.grid == 0 {
                return cfg_err("identity cutoff and grid must be positive".into());
            }
            return Ok(());
        }
        let mc = self.model_config()?;
        let model = mc.build().map_err(|e| Error::Config(e.to_string()))?;
        let d = model.d();
        if self.sizes.is_empty() {
            return cfg_err("sizes must not be empty".into());
        }
        if !model.is_clean() && self.seeds.is_empty() {
            return cfg_err("disordered runs need at least one seed".into());
        }
        match self.kind {
            ExperimentKind::Chern | ExperimentKind::Sigma12 => {
                let want = if self.kind == ExperimentKind::Chern { None } else { Some(3) };
                if let Some(w) = want {
                    if d != w {
                        return cfg_err(format!("sigma12 needs a 3D model, got d = {d}"));
                    }
                } else if d % 2 != 0 {
                    return cfg_err(format!("the Chern cocycle needs even d, got d = {d}"));
                }
                for &l in &self.sizes {
                    let g = Geometry::cubic_torus(d, l).map_err(|e| Error::Config(e.to_string()))?;
                    if model.hoppings().keys().any(|q| !g.admits_hopping(q)) {
                        return cfg_err(format!("size {l} violates the minimal-image bound"));
                    }
                }
            }
            ExperimentKind::Index | ExperimentKind::Decay | ExperimentKind::Convergence => {
                build_clifford(d).map_err(|e| Error::Config(e.to_string()))?;
                for &r in &self.sizes {
                    for w in self.windows_for(r) {
                        if w >= r {
                            return cfg_err(format!("window {w} must be below box radius {r}"));
                        }
                    }
                }
                if self.index.n.is_some_and(|n| 2 * n <= d + 1) {
                    return cfg_err("Fedosov exponent needs 2n > d + 1".into());
                }
                for x0 in self.index.x0.samples(d) {
                    if x0.len() != d || x0.iter().any(|t| !(0.0..1.0).contains(t)) {
                        return cfg_err(format!("x0 {x0:?} outside [0,1)^{d}"));
                    }
                }
            }
            ExperimentKind::Oracle => {
                if d != 2 || !model.is_clean() {
                    return cfg_err("the oracle needs a clean 2D model".into());
                }
            }
            ExperimentKind::IdentityCheck => unreachable!(),
        }
        Ok(())
    }

    fn windows_for(&self, radius: usize) -> Vec<usize> {
        if self.index.windows.is_empty() {
            vec![radius / 2]
        } else {
            self.index.windows.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub model: Option<String>,
    pub geometry: Option<String>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub x0: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub value_re: Option<f64>,
    pub value_im: Option<f64>,
    pub reference: Option<i64>,
    pub within_tolerance: Option<bool>,
    pub imag_residual: Option<f64>,
    pub spread: Option<f64>,
    pub gap: Option<f64>,
    /// Kind-specific numbers (kernel counts, fitted slopes, identity sides).
    pub extra: BTreeMap<String, f64>,
    pub status: Status,
    pub error: Option<String>,
    pub warning: Option<String>,
    pub wall_time_s: f64,
}

impl ResultRecord {
    fn new(kind: ExperimentKind, id: String) -> Self {
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            experiment_id: id,
            kind,
            model: None,
            geometry: None,
            size: None,
            seed: None,
            window: None,
            x0: None,
            n: None,
            value_re: None,
            value_im: None,
            reference: None,
            within_tolerance: None,
            imag_residual: None,
            spread: None,
            gap: None,
            extra: BTreeMap::new(),
            status: Status::Ok,
            error: None,
            warning: None,
            wall_time_s: 0.0,
        }
    }

    fn set_value(&mut self, v: C64, reference: Option<i64>, accept: f64) {
        self.value_re = Some(v.re);
        self.value_im = Some(v.im);
        self.reference = reference;
        self.within_tolerance = reference.map(|r| (v.re - r as f64).abs() < accept);
    }

    fn fail(mut self, e: &Error) -> Self {
        self.status = Status::Failed;
        self.error = Some(e.to_string());
        self
    }
}

/// One sweep point before execution.
#[derive(Debug, Clone)]
struct WorkItem {
    size: usize,
    seed: Option<u64>,
    config_index: usize,
}

fn work_items(cfg: &ExperimentConfig, clean: bool) -> Vec<WorkItem> {
    if cfg.kind == ExperimentKind::IdentityCheck {
        return (0..cfg.identity.points.len())
            .map(|i| WorkItem {
                size: 0,
                seed: None,
                config_index: i,
            })
            .collect();
    }
    let seeds: Vec<Option<u64>> = if clean || cfg.kind == ExperimentKind::Oracle {
        vec![None]
    } else {
        cfg.seeds.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for &size in &cfg.sizes {
        for &seed in &seeds {
            out.push(WorkItem {
                size,
                seed,
                config_index: 0,
            });
        }
    }
    out
}

fn projector_for(
    model: &HoppingModel,
    geometry: &Geometry,
    seed: Option<u64>,
    mc: &ModelConfig,
    tol: &Tolerances,
) -> Result<SpectralProjector> {
    let disorder = seed.map(|s| sample_disorder(geometry, s));
    let h = build_hamiltonian(model, geometry, disorder.as_ref())?;
    fermi_projector_with_threshold(&h, mc.fermi_level, tol.gap)
}

fn item_id(kind: ExperimentKind, item: &WorkItem) -> String {
    let mut id = format!("{}-{}", kind.as_str(), item.size);
    if let Some(s) = item.seed {
        id.push_str(&format!("-s{s}"));
    }
    if kind == ExperimentKind::IdentityCheck {
        id = format!("{}-{}", kind.as_str(), item.config_index);
    }
    id
}

fn run_item(cfg: &ExperimentConfig, item: &WorkItem, reference: Option<i64>) -> Vec<ResultRecord> {
    let start = Instant::now();
    let id = item_id(cfg.kind, item);
    let base = {
        let mut r = ResultRecord::new(cfg.kind, id.clone());
        r.size = (cfg.kind != ExperimentKind::IdentityCheck).then_some(item.size);
        r.seed = item.seed;
        r.model = cfg.model.as_ref().and_then(|m| m.build().ok()).map(|m| m.name().to_string());
        r
    };
    let mut records = match execute(cfg, item, reference, &base) {
        Ok(recs) => recs,
        Err(e) => vec![base.clone().fail(&e)],
    };
    let elapsed = start.elapsed().as_secs_f64();
    let share = elapsed / records.len().max(1) as f64;
    for r in records.iter_mut() {
        r.wall_time_s = share;
    }
    records
}

fn execute(
    cfg: &ExperimentConfig,
    item: &WorkItem,
    reference: Option<i64>,
    base: &ResultRecord,
) -> Result<Vec<ResultRecord>> {
    let tol = &cfg.tolerances;
    if cfg.kind == ExperimentKind::IdentityCheck {
        let idc = &cfg.identity;
        let pts = &idc.points[item.config_index];
        let chk = central_identity_check(idc.d, pts, idc.cutoff, &midpoint_grid(idc.d, idc.grid))?;
        let mut r = base.clone();
        r.value_re = Some(chk.lhs.re);
        r.value_im = Some(chk.lhs.im);
        r.extra.insert("rhs_re".into(), chk.rhs.re);
        r.extra.insert("rhs_im".into(), chk.rhs.im);
        r.extra.insert("abs_error".into(), chk.abs_error);
        r.extra.insert("cutoff".into(), chk.cutoff);
        r.extra.insert("x0_samples".into(), chk.x0_samples as f64);
        for (i, p) in pts.iter().enumerate() {
            for (j, v) in p.iter().enumerate() {
                r.extra.insert(format!("x{}_{}", i + 1, j + 1), *v as f64);
            }
        }
        if let Some(rel) = chk.relative_error {
            r.extra.insert("relative_error".into(), rel);
            r.within_tolerance = Some(rel < 0.02);
        }
        return Ok(vec![r]);
    }
    let mc = cfg.model_config()?;
    let model = mc.build()?;
    let d = model.d();
    match cfg.kind {
        ExperimentKind::Oracle => {
            let o = momentum_oracle_chern(&model, 0, item.size)?;
            let mut r = base.clone();
            r.value_re = Some(o.raw);
            r.value_im = Some(0.0);
            r.gap = Some(o.min_gap);
            r.reference = Some(o.chern);
            r.extra.insert("chern".into(), o.chern as f64);
            Ok(vec![r])
        }
        ExperimentKind::Chern | ExperimentKind::Sigma12 => {
            let g = Geometry::cubic_torus(d, item.size)?;
            let sp = projector_for(&model, &g, item.seed, mc, tol)?;
            let p = sp.projector();
            let res = if cfg.kind == ExperimentKind::Chern {
                let args: Vec<_> = (0..=d).map(|_| p).collect();
                local_cocycle(&args)?
            } else {
                weak_invariant_sigma12(p)?
            };
            let mut r = base.clone();
            r.geometry = Some(g.label());
            r.gap = Some(sp.gap());
            r.imag_residual = Some(res.imag_residual);
            r.set_value(res.value, reference, tol.accept);
            Ok(vec![r])
        }
        ExperimentKind::Index | ExperimentKind::Convergence => {
            let g = Geometry::open_box(d, item.size)?;
            let cl = build_clifford(d)?;
            let sp = projector_for(&model, &g, item.seed, mc, tol)?;
            let n = cfg.index.n.unwrap_or(d / 2 + 1);
            let windows = cfg.windows_for(item.size);
            let shifts = cfg.index.x0.samples(d);
            let mut out = Vec::new();
            let mut values = Vec::new();
            for &w in &windows {
                for x0 in &shifts {
                    let mut r = base.clone();
                    r.geometry = Some(g.label());
                    r.gap = Some(sp.gap());
                    r.window = Some(w);
                    r.x0 = Some(x0.clone());
                    r.n = Some(n);
                    let outcome = (|| -> Result<()> {
                        let f = dirac_phase(&g, &cl, x0, model.internal_dim())?;
                        let iv = fedosov_tindex_with_tolerance(sp.projector(), &f, n, w, tol.imag)?;
                        r.imag_residual = Some(iv.imag_residual);
                        r.set_value(C64::new(iv.value, 0.0), reference, tol.accept);
                        values.push(iv.value);
                        if cfg.index.kernel {
                            let kd = kernel_dims(&sp, &f, tol.kernel, w)?;
                            r.extra.insert("ker_f".into(), kd.ker_f as f64);
                            r.extra.insert("ker_f_adj".into(), kd.ker_f_adj as f64);
                            r.extra.insert("below_tol".into(), kd.below_tol as f64);
                            if let Some(s) = kd.smallest.first() {
                                r.extra.insert("min_singular_value".into(), *s);
                            }
                        }
                        Ok(())
                    })();
                    match outcome {
                        Ok(()) => out.push(r),
                        Err(e) => out.push(r.fail(&e)),
                    }
                }
            }
            if values.len() > 1 {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for r in out.iter_mut() {
                    r.spread = Some(hi - lo);
                    if hi - lo > tol.spread {
                        r.warning = Some(format!("index spread {:.3e} above {:.3e}", hi - lo, tol.spread));
                    }
                }
            }
            Ok(out)
        }
        ExperimentKind::Decay => {
            let g = Geometry::open_box(d, item.size)?;
            let cl = build_clifford(d)?;
            let sp = projector_for(&model, &g, item.seed, mc, tol)?;
            let x0 = cfg.index.x0.samples(d).into_iter().next().unwrap_or(vec![0.5; d]);
            let w = cfg.windows_for(item.size)[0];
            let f = dirac_phase(&g, &cl, &x0, model.internal_dim())?;
            let rec = summability_diagnostic(sp.projector(), &f, cfg.decay.power, w)?;
            if cfg.decay.tables {
                if let Some(dir) = &cfg.output {
                    fs::create_dir_all(dir)?;
                    let name = match item.seed {
                        Some(s) => format!("decay_R{}_s{s}.csv", item.size),
                        None => format!("decay_R{}.csv", item.size),
                    };
                    rec.to_csv(fs::File::create(dir.join(name))?)?;
                }
            }
            let mut r = base.clone();
            r.geometry = Some(g.label());
            r.gap = Some(sp.gap());
            r.window = Some(w);
            r.x0 = Some(x0);
            r.n = Some(cfg.decay.power);
            if let Some(s) = rec.slope {
                r.value_re = Some(s);
                r.value_im = Some(0.0);
                r.extra.insert("slope".into(), s);
            }
            if let Some(c) = rec.intercept {
                r.extra.insert("intercept".into(), c);
            }
            r.extra.insert("sites".into(), rec.points.len() as f64);
            Ok(vec![r])
        }
        ExperimentKind::IdentityCheck => unreachable!(),
    }
}

/// Runs the configured sweep, writes outputs when `output` is set, returns the records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let clean = cfg.model.as_ref().map(|m| m.disorder == 0.0).unwrap_or(true)
        && cfg.model.as_ref().and_then(|m| m.build().ok()).map(|m| m.is_clean()).unwrap_or(true);
    let items = work_items(cfg, clean);
    let reference = match (&cfg.model, cfg.kind) {
        (Some(m), ExperimentKind::Chern | ExperimentKind::Index | ExperimentKind::Convergence | ExperimentKind::Sigma12) => {
            m.reference()
        }
        _ => None,
    };
    let run = || -> Vec<ResultRecord> {
        items
            .par_iter()
            .map(|it| run_item(cfg, it, reference))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let records = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run),
        None => run(),
    };
    if let Some(dir) = &cfg.output {
        write_outputs(&records, dir)?;
    }
    Ok(records)
}

const CSV_COLUMNS: [&str; 22] = [
    "schema_version",
    "experiment_id",
    "kind",
    "model",
    "geometry",
    "size",
    "seed",
    "window",
    "x0",
    "n",
    "value_re",
    "value_im",
    "reference",
    "within_tolerance",
    "imag_residual",
    "spread",
    "gap",
    "extra",
    "status",
    "error",
    "warning",
    "wall_time_s",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// `results.csv` with a fixed header; floats use shortest round-trip formatting.
pub fn write_csv<W: std::io::Write>(records: &[ResultRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(CSV_COLUMNS).map_err(to_io)?;
    for r in records {
        let extra = r
            .extra
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        let row = [
            r.schema_version.to_string(),
            r.experiment_id.clone(),
            r.kind.as_str().to_string(),
            opt(&r.model),
            opt(&r.geometry),
            opt(&r.size),
            opt(&r.seed),
            opt(&r.window),
            r.x0.as_deref().map(join_floats).unwrap_or_default(),
            opt(&r.n),
            opt(&r.value_re),
            opt(&r.value_im),
            opt(&r.reference),
            opt(&r.within_tolerance),
            opt(&r.imag_residual),
            opt(&r.spread),
            opt(&r.gap),
            extra,
            match r.status {
                Status::Ok => "ok".into(),
                Status::Failed => "failed".into(),
            },
            opt(&r.error),
            opt(&r.warning),
            r.wall_time_s.to_string(),
        ];
        wr.write_record(&row).map_err(to_io)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema_version: u32,
    pub records: Vec<ResultRecord>,
}

pub fn write_outputs(records: &[ResultRecord], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(records, fs::File::create(dir.join("results.csv"))?)?;
    let file = ResultFile {
        schema_version: SCHEMA_VERSION,
        records: records.to_vec(),
    };
    fs::write(dir.join("results.json"), serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<ResultFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
