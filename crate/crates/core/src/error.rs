use thiserror::Error;

/// Errors raised while building meshes and schedules or running sweeps.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-positive Jacobian determinant {det_j:e} in element {elem}")]
    InvertedElement { elem: usize, det_j: f64 },

    #[error("unsupported quadrature: {0}")]
    Quadrature(String),

    #[error("sweep graph for octant {octant} angle {angle} has a cycle through {} elements (e.g. element {})", .elements.len(), .elements.first().copied().unwrap_or(0))]
    Cycle {
        octant: usize,
        angle: usize,
        elements: Vec<usize>,
    },

    #[error("singular element system: pivot {pivot:e} at column {column} is below {threshold:e}")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("stale upwind data: element {elem} (angle {angle}, group {group}) read element {upwind} before it was solved")]
    StaleUpwind {
        elem: usize,
        angle: usize,
        group: usize,
        upwind: usize,
    },

    #[error("dependency counter overshoot on element {elem}, angle {angle}: reached {observed} with in-degree {in_degree}")]
    CounterOvershoot {
        elem: usize,
        angle: usize,
        observed: u32,
        in_degree: u32,
    },

    #[error("incomplete sweep of octant {octant}: executed {executed} of {expected} tasks")]
    IncompleteSweep {
        octant: usize,
        executed: usize,
        expected: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = SweepError> = std::result::Result<T, E>;
