use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use sn_sweep::driver::{emit_all_csv, verify, Problem, Scheduler, SolverConfig};
use sn_sweep::mesh::{Axis, MeshConfig};
use sn_sweep::runtime::hardware_concurrency;
use sn_sweep::sweep::AngleScheme;
use sn_sweep::SweepError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchedulerArg {
    Serial,
    Bsp,
    Amt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sequential,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

/// Discrete-ordinates sweeps on a twisted hexahedral grid.
#[derive(Debug, Parser)]
#[command(name = "sn-sweep", version, about)]
struct Cli {
    #[arg(long, default_value_t = 16)]
    nx: usize,
    #[arg(long, default_value_t = 16)]
    ny: usize,
    #[arg(long, default_value_t = 16)]
    nz: usize,
    /// Rotation at the far end of the twist axis, radians.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    twist: f64,
    #[arg(long, value_enum, default_value = "z")]
    twist_axis: AxisArg,
    /// Polynomial order of the element basis (1, 2 or 3).
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value_t = 10)]
    groups: usize,
    /// Angles per octant: 1 or a perfect square.
    #[arg(long, default_value_t = 4)]
    angles: usize,
    /// Flux moments, 1 to 9.
    #[arg(long, default_value_t = 1)]
    moments: usize,
    #[arg(long, default_value_t = 5)]
    inner: usize,
    #[arg(long, default_value_t = 5)]
    outer: usize,
    #[arg(long, value_enum, default_value = "amt")]
    scheduler: SchedulerArg,
    /// BSP only; the task scheduler always sweeps angles together.
    #[arg(long, value_enum, default_value = "simultaneous")]
    angle_scheme: SchemeArg,
    /// Worker count [default: hardware concurrency].
    #[arg(long)]
    workers: Option<usize>,
    /// Single deterministic worker.
    #[arg(long)]
    serial: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time every element solve (perturbs the schedule).
    #[arg(long)]
    grind_sampling: bool,
    /// Check every schedule and print one line per direction.
    #[arg(long)]
    validate: bool,
    /// Run serial, BSP and AMT and compare their integrated fluxes.
    #[arg(long)]
    verify: bool,
    /// Write grind_hist, wavefront, timing and flux CSV files here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Disable scattering.
    #[arg(long)]
    sigs_zero: bool,
    /// Write the mesh as JSON to this file.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    /// Check upwind freshness before every element solve.
    #[arg(long)]
    check_freshness: bool,
}

impl Cli {
    fn config(&self) -> SolverConfig {
        let axis = match self.twist_axis {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        };
        let mesh = MeshConfig::new(self.nx, self.ny, self.nz)
            .with_twist(self.twist)
            .with_axis(axis)
            .with_order(self.order);
        let workers = if self.serial {
            1
        } else {
            self.workers.unwrap_or_else(hardware_concurrency)
        };
        SolverConfig {
            mesh,
            groups: self.groups,
            angles_per_octant: self.angles,
            moments: self.moments,
            inner: self.inner,
            outer: self.outer,
            scheduler: match self.scheduler {
                SchedulerArg::Serial => Scheduler::Serial,
                SchedulerArg::Bsp => Scheduler::Bsp,
                SchedulerArg::Amt => Scheduler::Amt,
            },
            angle_scheme: match self.angle_scheme {
                SchemeArg::Sequential => AngleScheme::Sequential,
                SchemeArg::Simultaneous => AngleScheme::Simultaneous,
            },
            workers,
            seed: self.seed,
            grind_sampling: self.grind_sampling,
            sigs_zero: self.sigs_zero,
            check_freshness: self.check_freshness || cfg!(debug_assertions),
            fault: None,
        }
    }
}

enum Outcome {
    Ok,
    Fail,
}

fn execute(cli: &Cli) -> Result<Outcome, SweepError> {
    let config = cli.config();
    if config.scheduler == Scheduler::Amt
        && config.angle_scheme == AngleScheme::Sequential
        && !cli.validate
        && !cli.verify
    {
        config.validate()?;
    }

    if cli.validate || cli.dump_mesh.is_some() {
        let problem = Problem::build(&config)?;
        if let Some(path) = &cli.dump_mesh {
            std::fs::write(path, problem.mesh.to_json()?)?;
        }
        if cli.validate {
            let mut ok = true;
            for (octant, angle, verdict) in problem.validate_schedules() {
                let label = match angle {
                    Some(a) => format!("octant {octant} angle {a}"),
                    None => format!("octant {octant} merged"),
                };
                match verdict {
                    Ok(()) => println!("{label}: OK"),
                    Err(v) => {
                        ok = false;
                        println!("{label}: {v}");
                    }
                }
            }
            return Ok(if ok { Outcome::Ok } else { Outcome::Fail });
        }
    }

    if cli.verify {
        let verdict = verify(&config)?;
        print!("{verdict}");
        if let (Some(dir), Some((_, report))) = (&cli.csv_out, verdict.reports.first()) {
            emit_all_csv(report, dir)?;
        }
        return Ok(if verdict.pass { Outcome::Ok } else { Outcome::Fail });
    }

    let report = Problem::build(&config)?.run(config.scheduler, config.angle_scheme)?;
    println!(
        "scheduler {} | workers {} | elements {} | groups {} | angles/octant {}",
        report.scheduler, report.workers, report.elements, report.groups, report.angles_per_octant
    );
    for (o, groups) in report.outer_flux.iter().enumerate() {
        let total: f64 = groups.iter().sum();
        println!("outer {o}: integrated flux {total:.15e}");
    }
    println!("total integrated flux {:.15e}", report.total_flux);
    for p in &report.phases {
        println!("  {:<16} {:>12.6} s", p.phase, p.seconds);
    }
    if report.grind_sampling {
        println!(
            "grind samples {} | mean {:.3e} s",
            report.grind.samples,
            report.grind.mean_seconds().unwrap_or(0.0)
        );
    }
    if let Some(dir) = &cli.csv_out {
        for path in emit_all_csv(&report, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(SweepError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(e @ (SweepError::Quadrature(_) | SweepError::InvertedElement { .. })) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
