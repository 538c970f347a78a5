//! Sweep DAGs: t-level buckets for the bucket-synchronous scheduler and
//! dependency-count tables for the task scheduler.

use std::collections::VecDeque;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use crate::error::{Result, SweepError};
use crate::mesh::{face_orientation, FaceOrientation, HexMesh};
use crate::quadrature::Direction;

/// An interior inflow face: the upwind element across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Upwind {
    pub elem: usize,
    pub face: usize,
    pub area: f64,
}

/// Upwind and downwind adjacency of every element for one direction, in
/// compressed rows. Downwind lists are sorted by element id.
#[derive(Debug, Clone)]
pub struct SweepGraph {
    pub direction: Direction,
    up_offsets: Vec<usize>,
    up: Vec<Upwind>,
    down_offsets: Vec<usize>,
    down: Vec<usize>,
}

impl SweepGraph {
    pub fn build(mesh: &HexMesh, direction: Direction) -> Self {
        let n = mesh.num_elements();
        let mut up_offsets = Vec::with_capacity(n + 1);
        let mut down_offsets = Vec::with_capacity(n + 1);
        let mut up = Vec::new();
        let mut down = Vec::new();
        up_offsets.push(0);
        down_offsets.push(0);
        for elem in 0..n {
            let start = down.len();
            for face in 0..6 {
                let Some(neighbor) = mesh.elem_neighbors[elem][face] else {
                    continue;
                };
                match face_orientation(mesh, elem, face, direction.omega) {
                    FaceOrientation::Inflow => up.push(Upwind {
                        elem: neighbor,
                        face,
                        area: mesh.face_area(elem, face),
                    }),
                    FaceOrientation::Outflow => down.push(neighbor),
                    FaceOrientation::Tangent => {}
                }
            }
            down[start..].sort_unstable();
            up_offsets.push(up.len());
            down_offsets.push(down.len());
        }
        Self {
            direction,
            up_offsets,
            up,
            down_offsets,
            down,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.up_offsets.len() - 1
    }

    pub fn upwind(&self, elem: usize) -> &[Upwind] {
        &self.up[self.up_offsets[elem]..self.up_offsets[elem + 1]]
    }

    pub fn downwind(&self, elem: usize) -> &[usize] {
        &self.down[self.down_offsets[elem]..self.down_offsets[elem + 1]]
    }

    /// Number of directed interior edges.
    pub fn num_edges(&self) -> usize {
        self.up.len()
    }
}

/// One unit of bucket work: an element swept for one angle of the octant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScheduleEntry {
    pub elem: usize,
    pub angle: usize,
}

/// Ordered t-level buckets for one angle, or for all angles of an octant
/// once merged.
#[derive(Debug, Clone)]
pub struct SweepSchedule {
    pub octant: usize,
    /// Directions covered by this schedule, one per angle present.
    pub directions: Vec<Direction>,
    pub buckets: Vec<Vec<ScheduleEntry>>,
}

impl SweepSchedule {
    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket_sizes(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    pub fn num_entries(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn max_bucket(&self) -> usize {
        self.buckets.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn direction_for(&self, angle: usize) -> Option<Direction> {
        self.directions.iter().copied().find(|d| d.angle == angle)
    }
}

/// Kahn-style level assignment: roots at level 0, every other element one
/// past its deepest upwind neighbor. Buckets are sorted by element id.
pub fn compute_buckets(mesh: &HexMesh, direction: Direction) -> Result<SweepSchedule> {
    let graph = SweepGraph::build(mesh, direction);
    let levels = levels_from_graph(&graph)?;
    let depth = levels.iter().copied().max().map_or(0, |m| m + 1);
    let mut buckets = vec![Vec::new(); depth];
    // ascending element order within each bucket falls out of the scan
    for (elem, &level) in levels.iter().enumerate() {
        buckets[level].push(ScheduleEntry {
            elem,
            angle: direction.angle,
        });
    }
    Ok(SweepSchedule {
        octant: direction.octant,
        directions: vec![direction],
        buckets,
    })
}

/// Longest-path level of every element of `graph`.
pub fn levels_from_graph(graph: &SweepGraph) -> Result<Vec<usize>> {
    let n = graph.num_elements();
    let mut remaining: Vec<usize> = (0..n).map(|e| graph.upwind(e).len()).collect();
    let mut level = vec![0usize; n];
    let mut ready: VecDeque<usize> = (0..n).filter(|&e| remaining[e] == 0).collect();
    let mut done = 0;
    while let Some(elem) = ready.pop_front() {
        done += 1;
        for &next in graph.downwind(elem) {
            level[next] = level[next].max(level[elem] + 1);
            remaining[next] -= 1;
            if remaining[next] == 0 {
                ready.push_back(next);
            }
        }
    }
    if done != n {
        return Err(SweepError::Cycle {
            octant: graph.direction.octant,
            angle: graph.direction.angle,
            elements: (0..n).filter(|&e| remaining[e] > 0).collect(),
        });
    }
    Ok(level)
}

/// Merges same-level buckets of all angles of one octant; entries within a
/// bucket are ordered by element id, then angle.
pub fn merge_octant_buckets(per_angle: &[SweepSchedule]) -> SweepSchedule {
    let octant = per_angle.first().map_or(0, |s| s.octant);
    assert!(
        per_angle.iter().all(|s| s.octant == octant),
        "merging schedules from different octants"
    );
    let depth = per_angle.iter().map(SweepSchedule::num_buckets).max().unwrap_or(0);
    let mut buckets: Vec<Vec<ScheduleEntry>> = vec![Vec::new(); depth];
    for schedule in per_angle {
        for (t, bucket) in schedule.buckets.iter().enumerate() {
            buckets[t].extend_from_slice(bucket);
        }
    }
    for bucket in &mut buckets {
        bucket.sort_unstable();
    }
    SweepSchedule {
        octant,
        directions: per_angle.iter().flat_map(|s| s.directions.iter().copied()).collect(),
        buckets,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    Missing {
        elem: usize,
        angle: usize,
    },
    Duplicate {
        elem: usize,
        angle: usize,
        level: usize,
    },
    UnknownAngle {
        angle: usize,
        level: usize,
    },
    /// `elem` sits at `level` but its upwind neighbor is not strictly earlier.
    Order {
        elem: usize,
        angle: usize,
        level: usize,
        upwind: usize,
        upwind_level: usize,
    },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Missing { elem, angle } => write!(f, "element {elem} (angle {angle}) missing"),
            Self::Duplicate { elem, angle, level } => {
                write!(f, "element {elem} (angle {angle}) repeated at level {level}")
            }
            Self::UnknownAngle { angle, level } => write!(f, "angle {angle} at level {level} has no direction"),
            Self::Order {
                elem,
                angle,
                level,
                upwind,
                upwind_level,
            } => write!(
                f,
                "element {elem} level {level} (angle {angle}) precedes upwind element {upwind} at level {upwind_level}"
            ),
        }
    }
}

/// `Ok(())` iff every element appears once per angle and every upwind
/// neighbor sits at a strictly earlier level; otherwise the first violation.
pub fn validate_schedule(schedule: &SweepSchedule, mesh: &HexMesh) -> Result<(), ScheduleViolation> {
    let n = mesh.num_elements();
    let mut levels: Vec<(Direction, Vec<Option<usize>>)> =
        schedule.directions.iter().map(|d| (*d, vec![None; n])).collect();
    let slot = |angle: usize| schedule.directions.iter().position(|d| d.angle == angle);
    for (t, bucket) in schedule.buckets.iter().enumerate() {
        for entry in bucket {
            let Some(s) = slot(entry.angle) else {
                return Err(ScheduleViolation::UnknownAngle {
                    angle: entry.angle,
                    level: t,
                });
            };
            let cell = &mut levels[s].1[entry.elem];
            if cell.is_some() {
                return Err(ScheduleViolation::Duplicate {
                    elem: entry.elem,
                    angle: entry.angle,
                    level: t,
                });
            }
            *cell = Some(t);
        }
    }
    for (direction, level) in &levels {
        if let Some(elem) = level.iter().position(Option::is_none) {
            return Err(ScheduleViolation::Missing {
                elem,
                angle: direction.angle,
            });
        }
    }
    for (t, bucket) in schedule.buckets.iter().enumerate() {
        for entry in bucket {
            let (direction, level) = &levels[slot(entry.angle).expect("checked above")];
            debug_assert_eq!(schedule.direction_for(entry.angle).map(|d| d.angle), Some(direction.angle));
            for face in 0..6 {
                let Some(upwind) = mesh.elem_neighbors[entry.elem][face] else {
                    continue;
                };
                if face_orientation(mesh, entry.elem, face, direction.omega) != FaceOrientation::Inflow {
                    continue;
                }
                let upwind_level = level[upwind].expect("checked above");
                if upwind_level >= t {
                    return Err(ScheduleViolation::Order {
                        elem: entry.elem,
                        angle: entry.angle,
                        level: t,
                        upwind,
                        upwind_level,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Per-element upwind counts and atomic progress counters for one angle.
#[derive(Debug)]
pub struct DependencyTable {
    graph: SweepGraph,
    in_degree: Vec<u32>,
    roots: Vec<usize>,
    counters: Vec<AtomicU32>,
    last_worker: Vec<AtomicU32>,
}

/// Counts interior inflow faces of every element for `direction`.
pub fn compute_dependency_counts(mesh: &HexMesh, direction: Direction) -> DependencyTable {
    let graph = SweepGraph::build(mesh, direction);
    let n = graph.num_elements();
    let in_degree: Vec<u32> = (0..n).map(|e| graph.upwind(e).len() as u32).collect();
    assert!(in_degree.iter().all(|&d| d <= 6));
    let roots = (0..n).filter(|&e| in_degree[e] == 0).collect();
    DependencyTable {
        graph,
        in_degree,
        roots,
        counters: (0..n).map(|_| AtomicU32::new(0)).collect(),
        last_worker: (0..n).map(|_| AtomicU32::new(u32::MAX)).collect(),
    }
}

impl DependencyTable {
    pub fn direction(&self) -> Direction {
        self.graph.direction
    }

    pub fn graph(&self) -> &SweepGraph {
        &self.graph
    }

    pub fn num_elements(&self) -> usize {
        self.in_degree.len()
    }

    pub fn in_degree(&self, elem: usize) -> u32 {
        self.in_degree[elem]
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    pub fn total_in_degree(&self) -> u64 {
        self.in_degree.iter().map(|&d| d as u64).sum()
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn counter(&self, elem: usize) -> &AtomicU32 {
        &self.counters[elem]
    }

    pub fn counter_values(&self) -> Vec<u32> {
        self.counters.iter().map(|c| c.load(Ordering::Acquire)).collect()
    }

    /// Worker that last solved `elem` for this angle, if any.
    pub fn last_worker(&self, elem: usize) -> Option<usize> {
        match self.last_worker[elem].load(Ordering::Acquire) {
            u32::MAX => None,
            w => Some(w as usize),
        }
    }

    pub fn set_last_worker(&self, elem: usize, worker: usize) {
        self.last_worker[elem].store(worker as u32, Ordering::Release);
    }

    /// Zeroes every counter; `&mut` guarantees no sweep is in flight.
    pub fn reset(&mut self) {
        for c in &mut self.counters {
            *c.get_mut() = 0;
        }
    }

    /// Overwrites one in-degree without touching the roots. Used to inject
    /// faults that the schedulers must detect.
    pub fn override_in_degree(&mut self, elem: usize, value: u32) {
        self.in_degree[elem] = value;
    }
}

/// Zeroes the counters of every angle of an octant.
pub fn reset_counters(tables: &mut [DependencyTable]) {
    for table in tables {
        table.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_twisted_grid, MeshConfig};

    fn cube(n: usize, twist: f64) -> HexMesh {
        build_twisted_grid(&MeshConfig::cube(n).with_twist(twist)).unwrap()
    }

    #[test]
    fn two_cube_has_anti_diagonal_buckets() {
        let mesh = cube(2, 0.0);
        let s = compute_buckets(&mesh, Direction::octant_diagonal(0)).unwrap();
        assert_eq!(s.bucket_sizes(), vec![1, 3, 3, 1]);
        assert!(validate_schedule(&s, &mesh).is_ok());
    }

    #[test]
    fn swapped_buckets_fail_validation() {
        let mesh = cube(2, 0.0);
        let mut s = compute_buckets(&mesh, Direction::octant_diagonal(0)).unwrap();
        s.buckets.swap(0, 1);
        assert!(matches!(validate_schedule(&s, &mesh), Err(ScheduleViolation::Order { .. })));
    }

    #[test]
    fn dropped_entry_is_reported_missing() {
        let mesh = cube(2, 0.0);
        let mut s = compute_buckets(&mesh, Direction::octant_diagonal(0)).unwrap();
        s.buckets[3].clear();
        assert_eq!(
            validate_schedule(&s, &mesh),
            Err(ScheduleViolation::Missing { elem: 7, angle: 0 })
        );
    }

    #[test]
    fn merged_identical_schedules_double_up() {
        let mesh = cube(2, 0.0);
        let d = Direction::octant_diagonal(0);
        let a = compute_buckets(&mesh, d).unwrap();
        let b = compute_buckets(&mesh, Direction { angle: 1, ..d }).unwrap();
        let merged = merge_octant_buckets(&[a.clone(), b]);
        assert_eq!(merged.bucket_sizes(), vec![2, 6, 6, 2]);
        assert!(validate_schedule(&merged, &mesh).is_ok());
        let single = merge_octant_buckets(std::slice::from_ref(&a));
        assert_eq!(single.buckets, a.buckets);
    }

    #[test]
    fn dependency_counts_on_untwisted_grid() {
        let mesh = cube(3, 0.0);
        let t = compute_dependency_counts(&mesh, Direction::octant_diagonal(0));
        assert_eq!(t.in_degree(0), 0);
        assert_eq!(t.roots(), &[0]);
        assert_eq!(t.in_degree(mesh.elem_id(1, 1, 1)), 3);
        // 3 axes x (n-1) interior planes x n^2 faces
        assert_eq!(t.total_in_degree(), 3 * 2 * 9);
    }

    #[test]
    fn roots_are_the_first_bucket() {
        let mesh = cube(4, 0.5);
        for o in 0..8 {
            let d = Direction::octant_diagonal(o);
            let s = compute_buckets(&mesh, d).unwrap();
            let t = compute_dependency_counts(&mesh, d);
            let first: Vec<usize> = s.buckets[0].iter().map(|e| e.elem).collect();
            assert_eq!(first, t.roots());
        }
    }

    #[test]
    fn reset_zeroes_counters() {
        let mesh = cube(2, 0.0);
        let mut t = compute_dependency_counts(&mesh, Direction::octant_diagonal(0));
        t.counter(3).fetch_add(2, Ordering::AcqRel);
        t.reset();
        assert!(t.counter_values().iter().all(|&c| c == 0));
        t.reset();
        assert!(t.counter_values().iter().all(|&c| c == 0));
    }
}
