use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use csv::{Terminator, Writer, WriterBuilder};

use super::RunReport;
use crate::error::{Result, SweepError};
use crate::sweep::{GrindHistogram, GRIND_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    GrindHist,
    Wavefront,
    Timing,
    Flux,
}

impl CsvKind {
    pub const ALL: [CsvKind; 4] = [Self::GrindHist, Self::Wavefront, Self::Timing, Self::Flux];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::GrindHist => "grind_hist.csv",
            Self::Wavefront => "wavefront.csv",
            Self::Timing => "timing.csv",
            Self::Flux => "flux.csv",
        }
    }
}

impl fmt::Display for CsvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GrindHist => "grind_hist",
            Self::Wavefront => "wavefront",
            Self::Timing => "timing",
            Self::Flux => "flux",
        })
    }
}

impl FromStr for CsvKind {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| SweepError::Config(format!("unknown CSV kind '{s}'")))
    }
}

fn writer(path: &Path) -> Result<Writer<std::fs::File>> {
    Ok(WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_path(path)?)
}

/// Writes one CSV product of `report` into `dir` and returns its path.
pub fn emit_csv(report: &RunReport, kind: CsvKind, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(kind.file_name());
    let mut w = writer(&path)?;
    match kind {
        CsvKind::GrindHist => {
            w.write_record(["bin_lower_s", "bin_upper_s", "count"])?;
            for k in 0..GRIND_BINS {
                let (lo, hi) = GrindHistogram::bin_edges(k);
                let count = report.grind.counts.get(k).copied().unwrap_or(0);
                w.write_record([format!("{lo:e}"), format!("{hi:e}"), count.to_string()])?;
            }
        }
        CsvKind::Wavefront => {
            w.write_record(["octant", "angle", "t_level", "element_count"])?;
            for row in &report.wavefront {
                w.serialize((row.octant, row.angle, row.t_level, row.element_count))?;
            }
        }
        CsvKind::Timing => {
            w.write_record(["phase", "seconds"])?;
            for p in &report.phases {
                w.serialize((&p.phase, p.seconds))?;
            }
        }
        CsvKind::Flux => {
            w.write_record(["outer_iter", "group", "integrated_flux"])?;
            for (o, groups) in report.outer_flux.iter().enumerate() {
                for (g, value) in groups.iter().enumerate() {
                    w.write_record([o.to_string(), g.to_string(), format!("{value:.17e}")])?;
                }
            }
            w.write_record(["total".to_string(), "all".to_string(), format!("{:.17e}", report.total_flux)])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// Writes every CSV product into `dir`.
pub fn emit_all_csv(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    CsvKind::ALL.into_iter().map(|k| emit_csv(report, k, dir)).collect()
}
