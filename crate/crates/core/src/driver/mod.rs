//! Configuration, source iteration over all octants, cross-scheduler
//! verification and report output.

mod csv;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

pub use self::csv::{emit_all_csv, emit_csv, CsvKind};
pub use report::{PhaseTiming, RunReport, TaskSummary, WavefrontRow};

use crate::error::{Result, SweepError};
use crate::kernel::{
    integrated_flux, total_integrated_flux, update_inner_source, update_outer_source, CrossSectionTable, Dims,
    FluxState,
};
use crate::mesh::{build_twisted_grid, precompute_basis_integrals, ElementGeometry, HexMesh, MeshConfig};
use crate::quadrature::{build_quadrature, QuadratureSet, NUM_OCTANTS};
use crate::runtime::{hardware_concurrency, TaskPool};
use crate::schedule::{reset_counters, validate_schedule, ScheduleViolation};
use crate::sweep::{
    serial_sweep, sweep_octant_amt, sweep_octant_bsp, AngleScheme, BspExecutor, GrindSink, OctantPlan, Probe,
    SweepContext,
};

/// Relative tolerance of the integrated-flux comparison.
pub const VERIFY_REL_TOL: f64 = 1e-10;
/// Absolute floor below which integrated-flux differences are ignored.
pub const VERIFY_ABS_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    Serial,
    Bsp,
    #[default]
    Amt,
}

impl FromStr for Scheduler {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "serial" => Ok(Self::Serial),
            "bsp" => Ok(Self::Bsp),
            "amt" => Ok(Self::Amt),
            other => Err(SweepError::Config(format!("unknown scheduler '{other}'"))),
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Serial => "serial",
            Self::Bsp => "bsp",
            Self::Amt => "amt",
        })
    }
}

/// A deliberately corrupted dependency table: the in-degree of one element
/// of one angle is lowered by one in the task scheduler's tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fault {
    pub octant: usize,
    pub angle: usize,
    /// Defaults to the lowest-id element with the largest in-degree.
    pub elem: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    #[serde(skip)]
    pub mesh: MeshConfig,
    pub groups: usize,
    pub angles_per_octant: usize,
    pub moments: usize,
    pub inner: usize,
    pub outer: usize,
    pub scheduler: Scheduler,
    pub angle_scheme: AngleScheme,
    pub workers: usize,
    pub seed: u64,
    pub grind_sampling: bool,
    pub sigs_zero: bool,
    /// Check upwind freshness before every assembly.
    pub check_freshness: bool,
    pub fault: Option<Fault>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mesh: MeshConfig::cube(16),
            groups: 10,
            angles_per_octant: 4,
            moments: 1,
            inner: 5,
            outer: 5,
            scheduler: Scheduler::Amt,
            angle_scheme: AngleScheme::Simultaneous,
            workers: hardware_concurrency(),
            seed: 0,
            grind_sampling: false,
            sigs_zero: false,
            check_freshness: cfg!(debug_assertions),
            fault: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        let counts = [
            ("groups", self.groups),
            ("angles per octant", self.angles_per_octant),
            ("moments", self.moments),
            ("inner iterations", self.inner),
            ("outer iterations", self.outer),
            ("workers", self.workers),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(SweepError::Config(format!("{name} must be at least 1")));
        }
        if self.scheduler == Scheduler::Amt && self.angle_scheme == AngleScheme::Sequential {
            return Err(SweepError::Config(
                "the task scheduler always sweeps the angles of an octant together".into(),
            ));
        }
        if let Some(fault) = self.fault {
            if fault.octant >= NUM_OCTANTS || fault.angle >= self.angles_per_octant {
                return Err(SweepError::Config("fault injection target out of range".into()));
            }
        }
        Ok(())
    }
}

/// Mesh, geometry, angles, cross sections and schedules built once and
/// reusable across runs of different schedulers.
#[derive(Debug)]
pub struct Problem {
    pub config: SolverConfig,
    pub mesh: HexMesh,
    pub geometry: ElementGeometry,
    pub quadrature: QuadratureSet,
    pub xs: CrossSectionTable,
    pub plans: Vec<OctantPlan>,
    mesh_seconds: f64,
    schedule_seconds: f64,
}

impl Problem {
    pub fn build(config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let t0 = Instant::now();
        let mesh = build_twisted_grid(&config.mesh)?;
        let geometry = precompute_basis_integrals(&mesh, config.mesh.fem_order)?;
        let mesh_seconds = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let quadrature = build_quadrature(config.angles_per_octant)?;
        let plans = (0..NUM_OCTANTS)
            .map(|o| OctantPlan::build(&mesh, &quadrature, o))
            .collect::<Result<Vec<_>>>()?;
        let schedule_seconds = t1.elapsed().as_secs_f64();

        let mut xs = CrossSectionTable::synthetic(
            config.groups,
            config.moments,
            mesh.num_elements(),
            geometry.basis_len(),
        )?;
        if config.sigs_zero {
            xs.zero_scattering();
        }
        xs.validate()?;
        Ok(Self {
            config: config.clone(),
            mesh,
            geometry,
            quadrature,
            xs,
            plans,
            mesh_seconds,
            schedule_seconds,
        })
    }

    pub fn context(&self) -> SweepContext<'_> {
        SweepContext {
            mesh: &self.mesh,
            geometry: &self.geometry,
            quadrature: &self.quadrature,
            xs: &self.xs,
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            angles: self.config.angles_per_octant,
            groups: self.config.groups,
            elements: self.mesh.num_elements(),
            basis: self.geometry.basis_len(),
            moments: self.config.moments,
        }
    }

    pub fn new_state(&self) -> Result<FluxState> {
        FluxState::new(self.dims(), &self.quadrature)
    }

    /// Bucket sizes of every `(octant, angle)` schedule.
    pub fn wavefront(&self) -> Vec<WavefrontRow> {
        let mut rows = Vec::new();
        for plan in &self.plans {
            for schedule in &plan.schedules {
                let angle = schedule.directions[0].angle;
                for (t_level, bucket) in schedule.buckets.iter().enumerate() {
                    rows.push(WavefrontRow {
                        octant: plan.octant,
                        angle,
                        t_level,
                        element_count: bucket.len(),
                    });
                }
            }
        }
        rows
    }

    /// Checks every per-angle and merged schedule against the mesh.
    pub fn validate_schedules(&self) -> Vec<(usize, Option<usize>, Result<(), ScheduleViolation>)> {
        let mut out = Vec::new();
        for plan in &self.plans {
            for schedule in &plan.schedules {
                out.push((plan.octant, Some(schedule.directions[0].angle), validate_schedule(schedule, &self.mesh)));
            }
            out.push((plan.octant, None, validate_schedule(&plan.merged, &self.mesh)));
        }
        out
    }

    /// Runs the configured source iteration with `scheduler`.
    pub fn run(&mut self, scheduler: Scheduler, scheme: AngleScheme) -> Result<RunReport> {
        let run_start = Instant::now();
        let cfg = self.config.clone();
        if scheduler == Scheduler::Amt && scheme == AngleScheme::Sequential {
            return Err(SweepError::Config(
                "the task scheduler always sweeps the angles of an octant together".into(),
            ));
        }
        let restore = match (scheduler, cfg.fault) {
            (Scheduler::Amt, Some(fault)) => Some(self.inject(fault)?),
            _ => None,
        };
        let result = self.iterate(scheduler, scheme);
        if let Some((octant, angle, elem, original)) = restore {
            self.plans[octant].deps[angle].override_in_degree(elem, original);
        }
        let mut report = result?;
        let setup = self.mesh_seconds + self.schedule_seconds;
        report.phases.insert(0, PhaseTiming::new("schedule_build", self.schedule_seconds));
        report.phases.insert(0, PhaseTiming::new("mesh_build", self.mesh_seconds));
        report
            .phases
            .push(PhaseTiming::new("total", setup + run_start.elapsed().as_secs_f64()));
        Ok(report)
    }

    fn inject(&mut self, fault: Fault) -> Result<(usize, usize, usize, u32)> {
        let table = &mut self.plans[fault.octant].deps[fault.angle];
        let elem = match fault.elem {
            Some(e) if e < table.num_elements() => e,
            Some(e) => return Err(SweepError::Config(format!("fault element {e} out of range"))),
            None => {
                let max = table.in_degrees().iter().copied().max().unwrap_or(0);
                table.in_degrees().iter().position(|&d| d == max).unwrap_or(0)
            }
        };
        let original = table.in_degree(elem);
        if original == 0 {
            return Err(SweepError::Config(format!("fault element {elem} has no upwind neighbors")));
        }
        table.override_in_degree(elem, original - 1);
        Ok((fault.octant, fault.angle, elem, original))
    }

    fn iterate(&mut self, scheduler: Scheduler, scheme: AngleScheme) -> Result<RunReport> {
        let cfg = self.config.clone();
        let workers = cfg.workers;
        let mut state = self.new_state()?;
        let materials = self.mesh.material.clone();
        let grind = GrindSink::new();
        let mut probe = Probe::default().with_freshness(cfg.check_freshness);
        if cfg.grind_sampling {
            probe = probe.with_grind(&grind);
        }
        let pool = (scheduler == Scheduler::Amt).then(|| TaskPool::new(workers));
        let executor = match scheduler {
            Scheduler::Bsp => Some(BspExecutor::new(workers)?),
            _ => None,
        };

        let mut sweep_seconds = [0.0; NUM_OCTANTS];
        let mut source_seconds = 0.0;
        let mut outer_flux = Vec::with_capacity(cfg.outer);
        let mut buckets = Vec::new();
        let mut barriers = 0;
        let mut tasks = TaskSummary::default();

        for _ in 0..cfg.outer {
            let t = Instant::now();
            update_outer_source(&mut state, &self.xs, &materials);
            source_seconds += t.elapsed().as_secs_f64();
            for _ in 0..cfg.inner {
                let t = Instant::now();
                update_inner_source(&mut state, &self.xs, &materials);
                source_seconds += t.elapsed().as_secs_f64();
                for octant in 0..NUM_OCTANTS {
                    let t = Instant::now();
                    let ctx = SweepContext {
                        mesh: &self.mesh,
                        geometry: &self.geometry,
                        quadrature: &self.quadrature,
                        xs: &self.xs,
                    };
                    let plan = &mut self.plans[octant];
                    match scheduler {
                        Scheduler::Serial => serial_sweep(&ctx, octant, &mut state, &probe)?,
                        Scheduler::Bsp => {
                            let executor = executor.as_ref().expect("bsp executor");
                            let stats = sweep_octant_bsp(&ctx, plan, &mut state, scheme, executor, &probe)?;
                            barriers += stats.barriers;
                            buckets.extend(stats.buckets);
                        }
                        Scheduler::Amt => {
                            reset_counters(&mut plan.deps);
                            let pool = pool.as_ref().expect("task pool");
                            let stats = sweep_octant_amt(&ctx, plan, &mut state, pool, &probe)?;
                            tasks.add(&stats);
                        }
                    }
                    sweep_seconds[octant] += t.elapsed().as_secs_f64();
                }
            }
            outer_flux.push(integrated_flux(&state));
        }

        let mut phases: Vec<PhaseTiming> = sweep_seconds
            .iter()
            .enumerate()
            .map(|(o, &s)| PhaseTiming::new(&format!("sweep_octant_{o}"), s))
            .collect();
        phases.push(PhaseTiming::new("source_update", source_seconds));
        Ok(RunReport {
            scheduler,
            angle_scheme: (scheduler == Scheduler::Bsp).then_some(scheme),
            workers,
            elements: self.mesh.num_elements(),
            groups: cfg.groups,
            angles_per_octant: cfg.angles_per_octant,
            outer_flux,
            total_flux: total_integrated_flux(&state),
            phases,
            grind_sampling: cfg.grind_sampling,
            grind: grind.histogram(),
            barriers,
            buckets,
            tasks: (scheduler == Scheduler::Amt).then_some(tasks),
            wavefront: self.wavefront(),
        })
    }
}

/// Builds the problem and runs the configured scheduler.
pub fn run(config: &SolverConfig) -> Result<RunReport> {
    Problem::build(config)?.run(config.scheduler, config.angle_scheme)
}

/// A compared quantity between two runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub left: String,
    pub right: String,
    /// `outer <o> group <g>` or `total`.
    pub quantity: String,
    pub left_value: f64,
    pub right_value: f64,
    pub relative: f64,
    pub within_tolerance: bool,
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vs {} at {}: {:.17e} vs {:.17e} (relative {:.3e})",
            self.left, self.right, self.quantity, self.left_value, self.right_value, self.relative
        )
    }
}

/// Whether two integrated-flux values agree within the verification
/// tolerance.
pub fn flux_agrees(a: f64, b: f64) -> bool {
    (a - b).abs() <= (VERIFY_REL_TOL * a.abs().max(b.abs())).max(VERIFY_ABS_FLOOR)
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Every per-outer per-group value and the total of two reports.
pub fn compare_reports(left: (&str, &RunReport), right: (&str, &RunReport)) -> Vec<Deviation> {
    let mut out = Vec::new();
    let mut push = |quantity: String, a: f64, b: f64| {
        out.push(Deviation {
            left: left.0.to_string(),
            right: right.0.to_string(),
            quantity,
            left_value: a,
            right_value: b,
            relative: relative(a, b),
            within_tolerance: flux_agrees(a, b),
        })
    };
    let (l, r) = (left.1, right.1);
    if l.outer_flux.len() != r.outer_flux.len() {
        push("outer count".into(), l.outer_flux.len() as f64, r.outer_flux.len() as f64);
    }
    for (o, (lg, rg)) in l.outer_flux.iter().zip(&r.outer_flux).enumerate() {
        if lg.len() != rg.len() {
            push(format!("outer {o} group count"), lg.len() as f64, rg.len() as f64);
        }
        for (g, (a, b)) in lg.iter().zip(rg).enumerate() {
            push(format!("outer {o} group {g}"), *a, *b);
        }
    }
    push("total".into(), l.total_flux, r.total_flux);
    out
}

/// Outcome of [`verify`].
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub runs: Vec<String>,
    /// Largest relative deviation over every compared pair and quantity.
    pub worst: Option<Deviation>,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub reports: Vec<(String, RunReport)>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.pass { "PASS" } else { "FAIL" })?;
        if let Some(w) = &self.worst {
            writeln!(f, "worst deviation: {w}")?;
        }
        for failure in &self.failures {
            writeln!(f, "  {failure}")?;
        }
        Ok(())
    }
}

/// Runs serial, BSP (both angle schemes) and AMT on identical inputs and
/// compares their integrated fluxes pairwise.
pub fn verify(config: &SolverConfig) -> Result<Verdict> {
    let mut problem = Problem::build(config)?;
    let runs = [
        ("serial", Scheduler::Serial, AngleScheme::Sequential),
        ("bsp-sequential", Scheduler::Bsp, AngleScheme::Sequential),
        ("bsp-simultaneous", Scheduler::Bsp, AngleScheme::Simultaneous),
        ("amt", Scheduler::Amt, AngleScheme::Simultaneous),
    ];
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (name, scheduler, scheme) in runs {
        match problem.run(scheduler, scheme) {
            Ok(report) => reports.push((name.to_string(), report)),
            Err(e) => failures.push(format!("{name} failed: {e}")),
        }
    }
    let mut worst: Option<Deviation> = None;
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            let (ln, lr) = &reports[i];
            let (rn, rr) = &reports[j];
            for d in compare_reports((ln, lr), (rn, rr)) {
                if !d.within_tolerance {
                    failures.push(d.to_string());
                }
                if worst.as_ref().map_or(true, |w| d.relative > w.relative) {
                    worst = Some(d);
                }
            }
        }
    }
    Ok(Verdict {
        pass: failures.is_empty(),
        runs: runs.iter().map(|r| r.0.to_string()).collect(),
        worst,
        failures,
        reports,
    })
}
