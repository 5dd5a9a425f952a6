//! The seven experiments. Each returns its result files; nothing here touches disk.

use std::time::Instant;

use fracshape::extension::{extend, homogeneous_profile, weiss_many, ExtensionField, WeissCurve};
use fracshape::lattice::GeometryRecord;
use fracshape::rearrange::{ball_energy_check_with, rearrange, seminorm_pair, BallEnergyReport, BALL_ENERGY_SLACK};
use fracshape::shape_opt::{diagnostics, multistart, random_blob, stream_seed, DiagnosticsReport, Objective, Schedule};
use fracshape::spectral::{dirichlet_eigs_with, torsion_solve_with, EigenSolver, SpectralRecord};
use fracshape::{connected_components, GridSpec, KernelTable, LatticeField, MultiIndicator};
use fracshape_toy::{classify, conjecture_sweep, ChargeConfig, StationarityReport, SweepParams, SweepSummary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::config::*;
use crate::output::{Artifact, Timing};
use crate::RunError;

/// Named wall-clock timings; they go to the manifest only.
#[derive(Debug, Default)]
pub struct Clock {
    pub timings: Vec<Timing>,
}

impl Clock {
    pub fn time<T>(&mut self, operation: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing { operation: operation.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }
}

fn numerical(e: impl std::fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

#[derive(Debug, Serialize)]
struct GridRecord {
    n: usize,
    h: f64,
    half_width: f64,
    copies: usize,
}

impl From<GridSpec> for GridRecord {
    fn from(g: GridSpec) -> Self {
        Self { n: g.n(), h: g.h(), half_width: g.half_width(), copies: g.copies() }
    }
}

#[derive(Debug, Serialize)]
struct ComponentRecord {
    copy: usize,
    cells: usize,
}

fn components(a: &MultiIndicator) -> Vec<ComponentRecord> {
    connected_components(a)
        .components
        .iter()
        .map(|c| ComponentRecord { copy: c.copy, cells: c.cells.len() })
        .collect()
}

fn field_records(fields: &[&LatticeField], names: &[String]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["copy", "x", "y"].iter().map(|s| s.to_string()).collect();
    header.extend(names.iter().cloned());
    let grid = fields[0].grid();
    let rows = fields[0]
        .support()
        .cells()
        .into_iter()
        .map(|(c, i)| {
            let x = grid.position(i);
            let mut r = vec![c.to_string(), x[0].to_string(), x[1].to_string()];
            r.extend(fields.iter().map(|f| f.get(c, i).to_string()));
            r
        })
        .collect();
    (header, rows)
}

#[derive(Debug, Serialize)]
struct EigsSummary {
    experiment: &'static str,
    grid: GridRecord,
    s: f64,
    cells: usize,
    volume: f64,
    components: Vec<ComponentRecord>,
    spectrum: SpectralRecord,
    /// Eigenvalues of `(-Δ)^s` with its standard constant.
    eigenvalues_normalized: Vec<f64>,
    /// `λ_count + |A|`.
    objective: f64,
    geometry: GeometryRecord,
}

pub fn eigs(cfg: &EigsConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let plan = cfg.plan()?;
    let a = &plan.domain;
    let table = clock.time("kernel-table", || KernelTable::new(a.grid(), plan.kernel)).map_err(numerical)?;
    let spec = clock
        .time("eigensolve", || dirichlet_eigs_with(a, &table, plan.count, EigenSolver::Auto))
        .map_err(numerical)?;
    let c = plan.kernel.fractional_laplacian_constant() / 2.0;
    let summary = EigsSummary {
        experiment: "eigs",
        grid: a.grid().into(),
        s: plan.kernel.s(),
        cells: a.count(),
        volume: a.volume(),
        components: components(a),
        spectrum: spec.record(),
        eigenvalues_normalized: spec.eigenvalues.iter().map(|l| c * l).collect(),
        objective: spec.eigenvalues[plan.count - 1] + a.volume(),
        geometry: a.geometry_record(),
    };
    let names: Vec<String> = (1..=plan.count).map(|j| format!("u{j}")).collect();
    let fields: Vec<&LatticeField> = spec.eigenfields.iter().collect();
    let (header, rows) = field_records(&fields, &names);
    Ok(vec![
        Artifact::json("summary.json", "eigenvalues (bare and normalized), residuals, gaps, objective", &summary),
        Artifact::csv_records("eigenfields.csv", "eigenfield values on the domain cells", &header, &rows),
    ])
}

/// `c_{n,s} (R^2 - |x|^2)_+^s`, the torsion function of the ball of radius `R`.
pub fn ball_torsion_exact(n: usize, s: f64, radius: f64, r: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    let c = 2f64.powf(-2.0 * s) * gamma(half_n) / (gamma(half_n + s) * gamma(1.0 + s));
    c * (radius * radius - r * r).max(0.0).powf(s)
}

/// `-½ ∫ u` for the ball torsion function.
pub fn ball_torsion_energy(n: usize, s: f64, radius: f64) -> f64 {
    let half_n = n as f64 / 2.0;
    let c = 2f64.powf(-2.0 * s) * gamma(half_n) / (gamma(half_n + s) * gamma(1.0 + s));
    let integral = std::f64::consts::PI.powf(half_n) * gamma(s + 1.0) / gamma(half_n + s + 1.0);
    -0.5 * c * integral * radius.powf(n as f64 + 2.0 * s)
}

#[derive(Debug, Serialize)]
struct TorsionSummary {
    experiment: &'static str,
    grid: GridRecord,
    s: f64,
    radius: f64,
    cells: usize,
    iterations: usize,
    /// `max |u_h - u|` over the domain cells.
    max_norm_error: f64,
    max_norm_relative_error: f64,
    energy: f64,
    energy_exact: f64,
    energy_relative_error: f64,
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    copy: usize,
    x: f64,
    y: f64,
    u: f64,
    exact: f64,
}

pub fn torsion_validate(cfg: &TorsionConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let (kp, a) = cfg.plan()?;
    let grid = a.grid();
    let table = clock.time("kernel-table", || KernelTable::new(grid, kp)).map_err(numerical)?;
    let t = clock.time("torsion-solve", || torsion_solve_with(&a, &table)).map_err(numerical)?;
    let scale = kp.normalized_torsion_scale();
    let (n, s) = (grid.n(), kp.s());
    let rows: Vec<ProfileRow> = a
        .cells()
        .into_iter()
        .map(|(c, i)| {
            let x = grid.position(i);
            ProfileRow {
                copy: c,
                x: x[0],
                y: x[1],
                u: scale * t.field.get(c, i),
                exact: ball_torsion_exact(n, s, cfg.radius, x[0].hypot(x[1])),
            }
        })
        .collect();
    let max_norm_error = rows.iter().map(|r| (r.u - r.exact).abs()).fold(0.0, f64::max);
    let peak = ball_torsion_exact(n, s, cfg.radius, 0.0);
    let energy = scale * t.energy;
    let energy_exact = ball_torsion_energy(n, s, cfg.radius);
    let summary = TorsionSummary {
        experiment: "torsion-validate",
        grid: grid.into(),
        s,
        radius: cfg.radius,
        cells: a.count(),
        iterations: t.iterations,
        max_norm_error,
        max_norm_relative_error: max_norm_error / peak,
        energy,
        energy_exact,
        energy_relative_error: ((energy - energy_exact) / energy_exact).abs(),
    };
    Ok(vec![
        Artifact::json("summary.json", "torsion errors against the ball closed form", &summary),
        Artifact::csv("profile.csv", "normalized discrete torsion and closed form per cell", &rows),
    ])
}

#[derive(Debug, Serialize)]
struct AcceptedRecord {
    flip: usize,
    translate: usize,
    relocate: usize,
}

#[derive(Debug, Serialize)]
struct StartRecord {
    start: usize,
    anneal_seed: u64,
    blob_seed: Option<u64>,
    initial_cells: usize,
    initial_objective: f64,
    best_objective: f64,
    best_cells: usize,
    best_volume: f64,
    components: Vec<ComponentRecord>,
    spectrum: SpectralRecord,
    accepted: AcceptedRecord,
    diagnostics: DiagnosticsReport,
    geometry: GeometryRecord,
}

#[derive(Debug, Serialize)]
struct OptimizeSummary {
    experiment: &'static str,
    grid: GridRecord,
    s: f64,
    k: usize,
    schedule: Schedule,
    best_start: usize,
    best_objective: f64,
    starts: Vec<StartRecord>,
}

/// Seed of the annealing stream for start `i`.
pub fn anneal_master(seed: u64) -> u64 {
    stream_seed(seed, 0)
}

/// Seed of the random initial blob for start `i`.
pub fn blob_seed(seed: u64, start: usize) -> u64 {
    stream_seed(stream_seed(seed, 1), start as u64)
}

pub fn optimize_shape(cfg: &OptimizeConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let plan = cfg.plan()?;
    let grid = plan.grid;
    let table = clock.time("kernel-table", || KernelTable::new(grid, plan.kernel)).map_err(numerical)?;
    let blob_seeds: Vec<Option<u64>> =
        (0..cfg.starts).map(|i| plan.init.is_none().then(|| blob_seed(cfg.seed, i))).collect();
    let inits: Vec<MultiIndicator> = blob_seeds
        .iter()
        .map(|bs| match (&plan.init, bs) {
            (Some(a), _) => Ok(a.clone()),
            (None, Some(seed)) => random_blob(&grid, cfg.init.blob_copy, cfg.init.blob_cells, *seed),
            (None, None) => unreachable!(),
        })
        .collect::<fracshape::Result<_>>()
        .map_err(numerical)?;
    let objective = Objective { table: &table, k: cfg.k };
    let initial: Vec<f64> = inits.iter().map(|a| objective.eval(a)).collect::<fracshape::Result<_>>().map_err(numerical)?;
    let sc = &cfg.schedule;
    let schedule = Schedule { t0: sc.t0, cooling: sc.cooling, steps: sc.steps, seed: 0, polish: sc.polish };
    let master = anneal_master(cfg.seed);
    let runs = clock.time("anneal", || multistart(&table, cfg.k, &inits, &schedule, master)).map_err(numerical)?;
    let radii: Vec<f64> = cfg.diagnostic_radii.iter().map(|r| r * grid.h()).collect();
    let mut starts = Vec::with_capacity(runs.len());
    let mut artifacts = Vec::new();
    clock.time("diagnostics", || -> Result<(), RunError> {
        for (i, run) in runs.iter().enumerate() {
            let j = cfg.k - 1;
            let diag = diagnostics(&run.best, &run.spectrum.eigenfields[j], cfg.s, &radii, run.spectrum.numerically_multiple(j))
                .map_err(numerical)?;
            starts.push(StartRecord {
                start: i,
                anneal_seed: stream_seed(master, i as u64),
                blob_seed: blob_seeds[i],
                initial_cells: inits[i].count(),
                initial_objective: initial[i],
                best_objective: run.best_objective,
                best_cells: run.best.count(),
                best_volume: run.best.volume(),
                components: components(&run.best),
                spectrum: run.spectrum.record(),
                accepted: AcceptedRecord { flip: run.accepted[0], translate: run.accepted[1], relocate: run.accepted[2] },
                diagnostics: diag,
                geometry: run.best.geometry_record(),
            });
            artifacts.push(Artifact::csv(
                &format!("trace_{i}.csv"),
                &format!("annealing trace of start {i}"),
                &run.trace,
            ));
            let names = vec![format!("u{}", cfg.k)];
            let (header, rows) = field_records(&[&run.spectrum.eigenfields[j]], &names);
            artifacts.push(Artifact::csv_records(
                &format!("eigenfield_{i}.csv"),
                &format!("eigenfield k of the best domain of start {i}"),
                &header,
                &rows,
            ));
        }
        Ok(())
    })?;
    let best_start = (0..starts.len())
        .min_by(|&a, &b| starts[a].best_objective.total_cmp(&starts[b].best_objective))
        .unwrap_or(0);
    let summary = OptimizeSummary {
        experiment: "optimize-shape",
        grid: grid.into(),
        s: cfg.s,
        k: cfg.k,
        schedule,
        best_start,
        best_objective: starts[best_start].best_objective,
        starts,
    };
    artifacts.insert(0, Artifact::json("summary.json", "best domains, spectra, move counts, diagnostics per start", &summary));
    Ok(artifacts)
}

#[derive(Debug, Serialize)]
struct FieldRow {
    trial: usize,
    cells: usize,
    checksum: u64,
    equimeasurable: bool,
    idempotent: bool,
    seminorm_rearranged: f64,
    seminorm: f64,
    ratio: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct MaskRow {
    trial: usize,
    cells: usize,
    energy_domain: f64,
    energy_ball: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct FieldStats {
    count: usize,
    equimeasurability_failures: usize,
    idempotence_failures: usize,
    polya_szego_failures: usize,
    ratio_bound: f64,
    max_ratio: f64,
}

#[derive(Debug, Serialize)]
struct MaskStats {
    count: usize,
    failures: usize,
    slack: f64,
    /// Largest `(E(B) - E(A)) / |E(A)|`.
    max_relative_excess: f64,
}

#[derive(Debug, Serialize)]
struct RearrangeSummary {
    experiment: &'static str,
    grid: GridRecord,
    mask_grid: GridRecord,
    s: f64,
    fields: FieldStats,
    masks: MaskStats,
}

pub const POLYA_SZEGO_BOUND: f64 = 1.02;

fn sorted_values(u: &LatticeField) -> Vec<f64> {
    let mut v: Vec<f64> = u.values().iter().flatten().copied().filter(|&x| x != 0.0).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// ChaCha8 keyed by `master` on stream `trial`.
pub fn trial_rng(master: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng
}

/// `cells` distinct interior cells over all copies with values uniform in `[0.01, 1)`.
pub fn random_field(grid: GridSpec, cells: usize, rng: &mut ChaCha8Rng) -> fracshape::Result<LatticeField> {
    let pool: Vec<(usize, usize)> = (0..grid.copies())
        .flat_map(|c| (0..grid.cells_per_copy()).filter(move |&i| grid.is_interior(i)).map(move |i| (c, i)))
        .collect();
    let picks = rand::seq::index::sample(rng, pool.len(), cells).into_vec();
    let mut a = MultiIndicator::empty(grid);
    for &p in &picks {
        a.insert(pool[p].0, pool[p].1)?;
    }
    let mut u = LatticeField::zeros(a);
    for &p in &picks {
        u.set(pool[p].0, pool[p].1, rng.gen_range(0.01..1.0))?;
    }
    Ok(u)
}

/// Each interior cell kept with probability `density`; never empty.
pub fn random_mask(grid: GridSpec, density: f64, rng: &mut ChaCha8Rng) -> fracshape::Result<MultiIndicator> {
    let mut a = MultiIndicator::empty(grid);
    for c in 0..grid.copies() {
        for i in 0..grid.cells_per_copy() {
            if grid.is_interior(i) && rng.gen_bool(density) {
                a.insert(c, i)?;
            }
        }
    }
    if a.is_empty() {
        a.insert(0, grid.center_index())?;
    }
    Ok(a)
}

pub fn rearrange_check(cfg: &RearrangeConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let plan = cfg.plan()?;
    let table = clock.time("kernel-table", || KernelTable::new(plan.grid, plan.kernel)).map_err(numerical)?;
    let mask_table =
        clock.time("mask-kernel-table", || KernelTable::new(plan.mask_grid, plan.mask_kernel)).map_err(numerical)?;
    let field_master = stream_seed(cfg.seed, 0);
    let mask_master = stream_seed(cfg.seed, 1);
    let field_rows: Vec<FieldRow> = clock
        .time("fields", || {
            (0..cfg.fields)
                .into_par_iter()
                .map(|trial| {
                    let u = random_field(plan.grid, cfg.field_cells, &mut trial_rng(field_master, trial))?;
                    let star = rearrange(&u)?;
                    let again = rearrange(&star.field)?;
                    let (b_star, b) = seminorm_pair(&u, &table)?;
                    let ratio = b_star / b;
                    Ok(FieldRow {
                        trial,
                        cells: u.support().count(),
                        checksum: star.value_multiset_checksum,
                        equimeasurable: sorted_values(&u) == sorted_values(&star.field)
                            && star.field.support().count() == u.support().count(),
                        idempotent: again.field == star.field,
                        seminorm_rearranged: b_star,
                        seminorm: b,
                        ratio,
                        pass: ratio <= POLYA_SZEGO_BOUND,
                    })
                })
                .collect::<fracshape::Result<_>>()
        })
        .map_err(numerical)?;
    let mask_rows: Vec<MaskRow> = clock
        .time("masks", || {
            (0..cfg.masks)
                .into_par_iter()
                .map(|trial| {
                    let a = random_mask(plan.mask_grid, cfg.mask_density, &mut trial_rng(mask_master, trial))?;
                    let BallEnergyReport { energy_domain, energy_ball, tolerance, pass } =
                        ball_energy_check_with(&a, &mask_table)?;
                    Ok(MaskRow { trial, cells: a.count(), energy_domain, energy_ball, tolerance, pass })
                })
                .collect::<fracshape::Result<_>>()
        })
        .map_err(numerical)?;
    let summary = RearrangeSummary {
        experiment: "rearrange-check",
        grid: plan.grid.into(),
        mask_grid: plan.mask_grid.into(),
        s: cfg.s,
        fields: FieldStats {
            count: field_rows.len(),
            equimeasurability_failures: field_rows.iter().filter(|r| !r.equimeasurable).count(),
            idempotence_failures: field_rows.iter().filter(|r| !r.idempotent).count(),
            polya_szego_failures: field_rows.iter().filter(|r| !r.pass).count(),
            ratio_bound: POLYA_SZEGO_BOUND,
            max_ratio: field_rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max),
        },
        masks: MaskStats {
            count: mask_rows.len(),
            failures: mask_rows.iter().filter(|r| !r.pass).count(),
            slack: BALL_ENERGY_SLACK,
            max_relative_excess: mask_rows
                .iter()
                .map(|r| (r.energy_ball - r.energy_domain) / r.energy_domain.abs())
                .fold(f64::NEG_INFINITY, f64::max),
        },
    };
    Ok(vec![
        Artifact::json("summary.json", "failure counts of the rearrangement and ball-energy checks", &summary),
        Artifact::csv("fields.csv", "per random field: equimeasurability, idempotence, seminorm ratio", &field_rows),
        Artifact::csv("masks.csv", "per random mask: torsion energy of the mask and of the equal-volume ball", &mask_rows),
    ])
}

#[derive(Debug, Serialize)]
struct TrialRow {
    trial: usize,
    termination: fracshape_toy::Termination,
    steps: usize,
    classification: &'static str,
    energy: f64,
    gradient_norm: f64,
    scaled_gradient: f64,
    hessian_min_eig: Option<f64>,
    scaled_min_eig: Option<f64>,
    weakly_stable: bool,
    diameter: f64,
    min_distance: f64,
}

pub fn toy_sweep(cfg: &ToySweepConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    cfg.validate()?;
    let params = SweepParams { d: cfg.d, n: cfg.n, s: cfg.s, trials: cfg.trials, seed: cfg.seed, max_steps: cfg.max_steps };
    let summary: SweepSummary = clock.time("sweep", || conjecture_sweep(params)).map_err(numerical)?;
    let rows: Vec<TrialRow> = summary
        .trials
        .iter()
        .map(|t| TrialRow {
            trial: t.trial,
            termination: t.termination,
            steps: t.steps,
            classification: t.report.classification.as_str(),
            energy: t.report.energy,
            gradient_norm: t.report.gradient_norm,
            scaled_gradient: t.report.scaled_gradient,
            hessian_min_eig: t.report.hessian_min_eig,
            scaled_min_eig: t.report.scaled_min_eig,
            weakly_stable: t.report.weakly_stable,
            diameter: t.report.diameter,
            min_distance: t.report.min_distance,
        })
        .collect();
    Ok(vec![
        Artifact::json("summary.json", "classification counts and every stable find at full precision", &summary),
        Artifact::csv("trials.csv", "terminal state of each descent trial", &rows),
    ])
}

#[derive(Debug, Serialize)]
struct ClassifySummary {
    experiment: &'static str,
    config: ChargeConfig,
    report: StationarityReport,
}

pub fn toy_classify(cfg: &ToyClassifyConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let config = cfg.build()?;
    let report = clock.time("classify", || classify(&config));
    let summary = ClassifySummary { experiment: "toy-classify", config, report };
    Ok(vec![Artifact::json("summary.json", "stationarity report of the given configuration", &summary)])
}

#[derive(Debug, Serialize)]
struct CurveRecord {
    center: f64,
    values: Vec<f64>,
    monotonicity_constant: f64,
}

#[derive(Debug, Serialize)]
struct WeissSummary {
    experiment: &'static str,
    source: WeissSource,
    s: f64,
    h: f64,
    half_width: f64,
    height: f64,
    extension_residual: f64,
    extension_iterations: usize,
    radii: Vec<f64>,
    curves: Vec<CurveRecord>,
}

#[derive(Debug, Serialize)]
struct WeissCsvRow {
    center: f64,
    r: f64,
    #[serde(rename = "W")]
    w: f64,
    bulk: f64,
    thin: f64,
    boundary: f64,
}

pub fn weiss(cfg: &WeissConfig, clock: &mut Clock) -> Result<Vec<Artifact>, RunError> {
    let plan = cfg.plan()?;
    let ext: ExtensionField = match plan {
        WeissPlan::Homogeneous(g) => clock.time("profile", || homogeneous_profile(cfg.s, g)),
        WeissPlan::Lattice { kernel, domain } => {
            let table = clock.time("kernel-table", || KernelTable::new(domain.grid(), kernel)).map_err(numerical)?;
            let trace = match cfg.source {
                WeissSource::Torsion => clock
                    .time("torsion-solve", || torsion_solve_with(&domain, &table))
                    .map(|t| t.field.scaled(kernel.normalized_torsion_scale())),
                _ => clock
                    .time("eigensolve", || dirichlet_eigs_with(&domain, &table, cfg.eigen_index, EigenSolver::Auto))
                    .map(|mut r| r.eigenfields.swap_remove(cfg.eigen_index - 1)),
            }
            .map_err(numerical)?;
            clock.time("extension-solve", || extend(&trace, 0, cfg.s))
        }
    }
    .map_err(numerical)?;
    let curves: Vec<WeissCurve> =
        clock.time("weiss", || weiss_many(&ext, &cfg.centers, &cfg.radii)).map_err(numerical)?;
    let g = ext.grid();
    let rows: Vec<WeissCsvRow> = curves
        .iter()
        .flat_map(|c| {
            c.rows.iter().map(move |r| WeissCsvRow {
                center: c.center,
                r: r.r,
                w: r.w,
                bulk: r.bulk,
                thin: r.thin,
                boundary: r.boundary,
            })
        })
        .collect();
    let summary = WeissSummary {
        experiment: "weiss",
        source: cfg.source,
        s: cfg.s,
        h: g.h(),
        half_width: g.half_width(),
        height: g.height(),
        extension_residual: ext.residual,
        extension_iterations: ext.iterations,
        radii: cfg.radii.clone(),
        curves: curves
            .iter()
            .map(|c| CurveRecord { center: c.center, values: c.values(), monotonicity_constant: c.monotonicity_constant() })
            .collect(),
    };
    Ok(vec![
        Artifact::json("summary.json", "Weiss curves and monotonicity constants per centre", &summary),
        Artifact::csv("weiss.csv", "W and its bulk, thin and boundary parts per centre and radius", &rows),
    ])
}
