//! Run configurations: one JSON document per experiment, unknown keys rejected.

use std::fmt;

use fracshape::{GridSpec, KernelParams, MultiIndicator};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eigs,
    TorsionValidate,
    OptimizeShape,
    RearrangeCheck,
    ToySweep,
    ToyClassify,
    Weiss,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Eigs => "eigs",
            Self::TorsionValidate => "torsion-validate",
            Self::OptimizeShape => "optimize-shape",
            Self::RearrangeCheck => "rearrange-check",
            Self::ToySweep => "toy-sweep",
            Self::ToyClassify => "toy-classify",
            Self::Weiss => "weiss",
        }
    }
}

/// A rejected configuration, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { field: field.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

type Checked<T> = Result<T, ConfigError>;

fn check_s(field: &str, s: f64) -> Checked<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("s = {s} must lie in (0, 1)")))
    }
}

fn check_positive(field: &str, v: f64) -> Checked<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{v} must be positive and finite")))
    }
}

fn check_at_least(field: &str, v: usize, min: usize) -> Checked<()> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("{v} must be at least {min}")))
    }
}

fn check_experiment(declared: Option<Experiment>, expected: Experiment) -> Checked<()> {
    match declared {
        Some(e) if e != expected => Err(ConfigError::new(
            "experiment",
            format!("config is for `{}` but the subcommand is `{}`", e.as_str(), expected.as_str()),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
    #[serde(default = "one")]
    pub copies: usize,
}

fn one() -> usize {
    1
}

impl GridConfig {
    pub fn new(n: usize, h: f64, half_width: f64, copies: usize) -> Self {
        Self { n, h, half_width, copies }
    }

    pub fn build(&self, field: &str) -> Checked<GridSpec> {
        if !(1..=2).contains(&self.n) {
            return Err(ConfigError::new(format!("{field}.n"), format!("n = {} must be 1 or 2", self.n)));
        }
        check_positive(&format!("{field}.h"), self.h)?;
        check_positive(&format!("{field}.half_width"), self.half_width)?;
        check_at_least(&format!("{field}.copies"), self.copies, 1)?;
        GridSpec::new(self.n, self.h, self.half_width, self.copies).map_err(|e| ConfigError::new(field, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    #[serde(default)]
    pub copy: usize,
    #[serde(default)]
    pub center: [f64; 2],
    pub radius: f64,
}

impl BallConfig {
    pub fn centred(radius: f64) -> Self {
        Self { copy: 0, center: [0.0, 0.0], radius }
    }
}

/// Union of the listed lattice balls.
pub fn build_domain(grid: GridSpec, balls: &[BallConfig], field: &str) -> Checked<MultiIndicator> {
    if balls.is_empty() {
        return Err(ConfigError::new(field, "at least one ball is required"));
    }
    let mut a = MultiIndicator::empty(grid);
    for (k, b) in balls.iter().enumerate() {
        let f = format!("{field}[{k}]");
        if b.copy >= grid.copies() {
            return Err(ConfigError::new(format!("{f}.copy"), format!("copy {} out of range", b.copy)));
        }
        if grid.n() == 1 && b.center[1] != 0.0 {
            return Err(ConfigError::new(format!("{f}.center"), "second coordinate must be 0 when n = 1"));
        }
        check_positive(&format!("{f}.radius"), b.radius)?;
        let ball = MultiIndicator::ball(grid, b.copy, b.center, b.radius).map_err(|e| ConfigError::new(&f, e))?;
        a = a.union(&ball);
    }
    if a.is_empty() {
        return Err(ConfigError::new(field, "domain contains no lattice cell"));
    }
    Ok(a)
}

fn kernel(n: usize, s: f64, near_field_radius: Option<usize>) -> Checked<KernelParams> {
    check_s("s", s)?;
    match near_field_radius {
        Some(r) => KernelParams::with_near_field_radius(n, s, r),
        None => KernelParams::new(n, s),
    }
    .map_err(|e| ConfigError::new("near_field_radius", e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub grid: GridConfig,
    pub s: f64,
    pub near_field_radius: Option<usize>,
    pub domain: Vec<BallConfig>,
    /// Number of eigenpairs; the objective uses the last one.
    pub count: usize,
}

impl Default for EigsConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig::new(1, 1.0 / 64.0, 1.5, 1),
            s: 0.5,
            near_field_radius: None,
            domain: vec![BallConfig::centred(1.0)],
            count: 4,
        }
    }
}

pub struct EigsPlan {
    pub kernel: KernelParams,
    pub domain: MultiIndicator,
    pub count: usize,
}

impl EigsConfig {
    pub fn plan(&self) -> Checked<EigsPlan> {
        check_experiment(self.experiment, Experiment::Eigs)?;
        let grid = self.grid.build("grid")?;
        let kernel = kernel(grid.n(), self.s, self.near_field_radius)?;
        let domain = build_domain(grid, &self.domain, "domain")?;
        check_at_least("count", self.count, 1)?;
        if self.count > domain.count() {
            return Err(ConfigError::new("count", format!("{} exceeds the {} domain cells", self.count, domain.count())));
        }
        Ok(EigsPlan { kernel, domain, count: self.count })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorsionConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub grid: GridConfig,
    pub s: f64,
    pub near_field_radius: Option<usize>,
    /// Radius of the centred ball.
    pub radius: f64,
}

impl Default for TorsionConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig::new(1, 2.0 / 512.0, 1.5, 1),
            s: 0.5,
            near_field_radius: None,
            radius: 1.0,
        }
    }
}

impl TorsionConfig {
    pub fn plan(&self) -> Checked<(KernelParams, MultiIndicator)> {
        check_experiment(self.experiment, Experiment::TorsionValidate)?;
        let grid = self.grid.build("grid")?;
        let kp = kernel(grid.n(), self.s, self.near_field_radius)?;
        check_positive("radius", self.radius)?;
        let a = build_domain(grid, &[BallConfig::centred(self.radius)], "radius")?;
        Ok((kp, a))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Explicit starting domain; when empty a random blob is drawn.
    pub balls: Vec<BallConfig>,
    pub blob_cells: usize,
    pub blob_copy: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { balls: Vec::new(), blob_cells: 30, blob_copy: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub t0: Option<f64>,
    pub cooling: f64,
    pub steps: usize,
    pub polish: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let d = fracshape::shape_opt::Schedule::default();
        Self { t0: d.t0, cooling: d.cooling, steps: d.steps, polish: d.polish }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub grid: GridConfig,
    pub s: f64,
    pub near_field_radius: Option<usize>,
    pub k: usize,
    pub init: InitConfig,
    pub schedule: ScheduleConfig,
    pub starts: usize,
    /// Diagnostic radii in cell widths.
    pub diagnostic_radii: Vec<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig::new(1, 1.0 / 8.0, 4.0, 1),
            s: 0.5,
            near_field_radius: None,
            k: 1,
            init: InitConfig::default(),
            schedule: ScheduleConfig::default(),
            starts: 1,
            diagnostic_radii: vec![4.0, 8.0, 16.0],
        }
    }
}

pub struct OptimizePlan {
    pub kernel: KernelParams,
    pub grid: GridSpec,
    /// Fixed starting domain, or `None` for per-start random blobs.
    pub init: Option<MultiIndicator>,
}

impl OptimizeConfig {
    pub fn plan(&self) -> Checked<OptimizePlan> {
        check_experiment(self.experiment, Experiment::OptimizeShape)?;
        let grid = self.grid.build("grid")?;
        let kernel = kernel(grid.n(), self.s, self.near_field_radius)?;
        check_at_least("k", self.k, 1)?;
        check_at_least("starts", self.starts, 1)?;
        let sc = &self.schedule;
        if let Some(t0) = sc.t0 {
            check_positive("schedule.t0", t0)?;
        }
        if !(sc.cooling > 0.0 && sc.cooling < 1.0) {
            return Err(ConfigError::new("schedule.cooling", format!("{} must lie in (0, 1)", sc.cooling)));
        }
        for (i, &r) in self.diagnostic_radii.iter().enumerate() {
            check_positive(&format!("diagnostic_radii[{i}]"), r)?;
        }
        let init = if self.init.balls.is_empty() {
            check_at_least("init.blob_cells", self.init.blob_cells, self.k)?;
            if self.init.blob_copy >= grid.copies() {
                return Err(ConfigError::new("init.blob_copy", format!("copy {} out of range", self.init.blob_copy)));
            }
            let pool = grid.interior_cells_per_copy();
            if self.init.blob_cells > pool {
                return Err(ConfigError::new("init.blob_cells", format!("{} exceeds the {pool} interior cells", self.init.blob_cells)));
            }
            None
        } else {
            let a = build_domain(grid, &self.init.balls, "init.balls")?;
            if a.count() < self.k {
                return Err(ConfigError::new("init.balls", format!("{} cells cannot carry k = {}", a.count(), self.k)));
            }
            Some(a)
        };
        Ok(OptimizePlan { kernel, grid, init })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RearrangeConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    /// Grid for the random fields.
    pub grid: GridConfig,
    pub s: f64,
    pub near_field_radius: Option<usize>,
    pub fields: usize,
    pub field_cells: usize,
    /// Grid for the random masks of the torsion comparison.
    pub mask_grid: GridConfig,
    pub masks: usize,
    pub mask_density: f64,
}

impl Default for RearrangeConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid: GridConfig::new(1, 1.0 / 64.0, 2.0, 2),
            s: 0.5,
            near_field_radius: None,
            fields: 100,
            field_cells: 50,
            mask_grid: GridConfig::new(1, 1.0 / 32.0, 1.5, 1),
            masks: 100,
            mask_density: 0.4,
        }
    }
}

pub struct RearrangePlan {
    pub kernel: KernelParams,
    pub grid: GridSpec,
    pub mask_kernel: KernelParams,
    pub mask_grid: GridSpec,
}

impl RearrangeConfig {
    pub fn plan(&self) -> Checked<RearrangePlan> {
        check_experiment(self.experiment, Experiment::RearrangeCheck)?;
        let grid = self.grid.build("grid")?;
        let mask_grid = self.mask_grid.build("mask_grid")?;
        let kernel = kernel(grid.n(), self.s, self.near_field_radius)?;
        let mask_kernel = self::kernel(mask_grid.n(), self.s, self.near_field_radius)?;
        check_at_least("field_cells", self.field_cells, 1)?;
        let pool = grid.copies() * grid.interior_cells_per_copy();
        if self.field_cells > pool {
            return Err(ConfigError::new("field_cells", format!("{} exceeds the {pool} interior cells", self.field_cells)));
        }
        if !(self.mask_density > 0.0 && self.mask_density <= 1.0) {
            return Err(ConfigError::new("mask_density", format!("{} must lie in (0, 1]", self.mask_density)));
        }
        Ok(RearrangePlan { kernel, grid, mask_kernel, mask_grid })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySweepConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub s: f64,
    pub trials: usize,
    pub max_steps: usize,
}

impl Default for ToySweepConfig {
    fn default() -> Self {
        Self { experiment: None, seed: 0, d: 2, n: 1, s: 0.5, trials: 200, max_steps: 10_000 }
    }
}

impl ToySweepConfig {
    pub fn validate(&self) -> Checked<()> {
        check_experiment(self.experiment, Experiment::ToySweep)?;
        check_at_least("d", self.d, 2)?;
        check_at_least("n", self.n, 1)?;
        check_s("s", self.s)?;
        check_at_least("trials", self.trials, 1)?;
        check_at_least("max_steps", self.max_steps, 1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyClassifyConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub n: usize,
    pub s: f64,
    /// Points in `R^n`; omitted means the collinear three-charge state.
    pub positions: Option<Vec<Vec<f64>>>,
    pub masses: Option<Vec<f64>>,
    /// Rescale the masses to unit Euclidean norm before classifying.
    pub normalize: bool,
}

impl Default for ToyClassifyConfig {
    fn default() -> Self {
        Self { experiment: None, seed: 0, n: 2, s: 0.5, positions: None, masses: None, normalize: false }
    }
}

impl ToyClassifyConfig {
    pub fn build(&self) -> Checked<fracshape_toy::ChargeConfig> {
        use fracshape_toy::ChargeConfig;
        check_experiment(self.experiment, Experiment::ToyClassify)?;
        check_at_least("n", self.n, 1)?;
        check_s("s", self.s)?;
        match (&self.positions, &self.masses) {
            (None, None) => fracshape_toy::collinear_stationary(self.n, self.s).map_err(|e| ConfigError::new("n", e)),
            (Some(pos), Some(masses)) => {
                if pos.is_empty() || pos.iter().any(|p| p.len() != self.n) {
                    return Err(ConfigError::new("positions", format!("each point needs {} coordinates", self.n)));
                }
                if masses.len() != pos.len() {
                    return Err(ConfigError::new("masses", format!("{} masses for {} points", masses.len(), pos.len())));
                }
                let flat: Vec<f64> = pos.iter().flatten().copied().collect();
                let built = if self.normalize {
                    ChargeConfig::normalized(self.n, self.s, flat, masses.clone())
                } else {
                    ChargeConfig::new(self.n, self.s, flat, masses.clone())
                };
                built.map_err(|e| ConfigError::new("masses", e))
            }
            (Some(_), None) => Err(ConfigError::new("masses", "required with positions")),
            (None, Some(_)) => Err(ConfigError::new("positions", "required with masses")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeissSource {
    /// The homogeneous profile `((ρ + x) / 2)^s`.
    Homogeneous,
    /// Extension of the torsion function of `domain`.
    Torsion,
    /// Extension of eigenfunction `eigen_index` of `domain`.
    Eigenfunction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeissConfig {
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub s: f64,
    pub source: WeissSource,
    /// Half-plane box for the homogeneous profile.
    pub h: f64,
    pub half_width: f64,
    pub height: f64,
    /// Lattice and domain for the torsion and eigenfunction sources (`n = 1`).
    pub grid: GridConfig,
    pub near_field_radius: Option<usize>,
    pub domain: Vec<BallConfig>,
    pub eigen_index: usize,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Default for WeissConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            s: 0.5,
            source: WeissSource::Homogeneous,
            h: 1.0 / 256.0,
            half_width: 1.0,
            height: 1.0,
            grid: GridConfig::new(1, 1.0 / 64.0, 2.0, 1),
            near_field_radius: None,
            domain: vec![BallConfig::centred(1.0)],
            eigen_index: 1,
            centers: vec![0.0],
            radii: (0..=6).map(|k| 0.1 + 0.05 * k as f64).collect(),
        }
    }
}

pub enum WeissPlan {
    Homogeneous(fracshape::extension::Grid2d),
    Lattice { kernel: KernelParams, domain: MultiIndicator },
}

impl WeissConfig {
    pub fn plan(&self) -> Checked<WeissPlan> {
        use fracshape::extension::Grid2d;
        check_experiment(self.experiment, Experiment::Weiss)?;
        check_s("s", self.s)?;
        if self.centers.is_empty() {
            return Err(ConfigError::new("centers", "at least one centre is required"));
        }
        if self.radii.is_empty() {
            return Err(ConfigError::new("radii", "at least one radius is required"));
        }
        let (plan, (lo, hi, limit)) = match self.source {
            WeissSource::Homogeneous => {
                check_positive("h", self.h)?;
                check_positive("half_width", self.half_width)?;
                check_positive("height", self.height)?;
                let g = Grid2d::new(self.h, self.half_width, self.height, self.h / 2.0)
                    .map_err(|e| ConfigError::new("h", e))?;
                let span = (g.x(0), g.x(g.columns() - 1), g.half_width().min(g.height()) / 2.0);
                (WeissPlan::Homogeneous(g), span)
            }
            WeissSource::Torsion | WeissSource::Eigenfunction => {
                let grid = self.grid.build("grid")?;
                if grid.n() != 1 {
                    return Err(ConfigError::new("grid.n", "the extension solver needs n = 1"));
                }
                let kernel = kernel(1, self.s, self.near_field_radius)?;
                let domain = build_domain(grid, &self.domain, "domain")?;
                if self.source == WeissSource::Eigenfunction
                    && !(1..=domain.count()).contains(&self.eigen_index)
                {
                    return Err(ConfigError::new("eigen_index", format!("{} out of 1..={}", self.eigen_index, domain.count())));
                }
                let g = Grid2d::over(&grid).map_err(|e| ConfigError::new("grid", e))?;
                let span = (g.x(0), g.x(g.columns() - 1), g.half_width().min(g.height()) / 2.0);
                (WeissPlan::Lattice { kernel, domain }, span)
            }
        };
        for (i, &r) in self.radii.iter().enumerate() {
            if !(r > 0.0 && r < limit) {
                return Err(ConfigError::new(format!("radii[{i}]"), format!("{r} must lie in (0, {limit})")));
            }
        }
        let rmax = self.radii.iter().copied().fold(0.0, f64::max);
        for (i, &c) in self.centers.iter().enumerate() {
            if c - rmax < lo || c + rmax > hi {
                return Err(ConfigError::new(format!("centers[{i}]"), format!("ball of radius {rmax} at {c} leaves the box")));
            }
        }
        Ok(plan)
    }
}

/// Parses `text` as `T`, naming the offending path on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Checked<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { String::new() } else { path };
        ConfigError::new(field, e.into_inner())
    })
}
