//! Inspection path construction and the mission state machine.
//!
//! The net boundary is a closed counterclockwise polygon at a fixed depth.
//! Shrinking it inward by the stand-off margin gives the inspection path; the
//! vehicle traverses the offset polygon edge by edge, facing outward toward
//! the net, stopping at each corner to slew its heading to the next edge.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{Vector2, Vector4};

use crate::control::ReferencePoint;
use crate::transform::{wrap_angle, PlanarPose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlannerError {
    TooFewVertices,
    NotCounterClockwise,
    SelfIntersecting,
    NotConvex,
    DegenerateEdge,
    InvalidMargin,
    /// The requested margin collapses or inverts the polygon.
    MarginTooLarge,
    InvalidSpeed,
    NonFinite,
}

impl fmt::Display for PlannerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            PlannerError::TooFewVertices => "polygon needs at least 3 vertices",
            PlannerError::NotCounterClockwise => "polygon must be counterclockwise",
            PlannerError::SelfIntersecting => "polygon must be simple",
            PlannerError::NotConvex => "only convex boundaries are supported",
            PlannerError::DegenerateEdge => "polygon has a zero-length or collinear edge",
            PlannerError::InvalidMargin => "margin must be positive",
            PlannerError::MarginTooLarge => "margin collapses the polygon",
            PlannerError::InvalidSpeed => "speed must be positive",
            PlannerError::NonFinite => "geometry contains non-finite values",
        };
        write!(f, "{msg}")
    }
}

/// Closed counterclockwise polygon plus the constant inspection depth.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolygon {
    vertices: Vec<Vector2<f64>>,
    pub depth: f64,
}

impl BoundaryPolygon {
    /// Validates vertex count, finiteness, orientation, and simplicity.
    pub fn new(vertices: Vec<Vector2<f64>>, depth: f64) -> Result<Self, PlannerError> {
        if vertices.len() < 3 {
            return Err(PlannerError::TooFewVertices);
        }
        if !depth.is_finite()
            || vertices
                .iter()
                .any(|v| !v.x.is_finite() || !v.y.is_finite())
        {
            return Err(PlannerError::NonFinite);
        }
        let n = vertices.len();
        for i in 0..n {
            let e = vertices[(i + 1) % n] - vertices[i];
            if e.norm() < 1e-12 {
                return Err(PlannerError::DegenerateEdge);
            }
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(PlannerError::NotCounterClockwise);
        }
        if self_intersects(&vertices) {
            return Err(PlannerError::SelfIntersecting);
        }
        Ok(Self { vertices, depth })
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            cross(&(b - a), &(c - b)) > 0.0
        })
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .sum()
    }

    /// Distance from a point to the closest boundary edge.
    pub fn distance_to_edges(&self, p: &Vector2<f64>) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| point_segment_distance(p, &self.vertices[i], &self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn cross(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn signed_area(vertices: &[Vector2<f64>]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc / 2.0
}

fn segments_properly_intersect(
    a: &Vector2<f64>,
    b: &Vector2<f64>,
    c: &Vector2<f64>,
    d: &Vector2<f64>,
) -> bool {
    let d1 = cross(&(b - a), &(c - a));
    let d2 = cross(&(b - a), &(d - a));
    let d3 = cross(&(d - c), &(a - c));
    let d4 = cross(&(d - c), &(b - c));
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn self_intersects(vertices: &[Vector2<f64>]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        for j in (i + 1)..n {
            // Adjacent edges share a vertex; skip them.
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            if segments_properly_intersect(
                &vertices[i],
                &vertices[(i + 1) % n],
                &vertices[j],
                &vertices[(j + 1) % n],
            ) {
                return true;
            }
        }
    }
    false
}

fn point_segment_distance(p: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Shrinks a convex boundary inward: every edge is translated along its inward
/// normal by `margin` and adjacent edge lines are intersected to form the new
/// vertices. Fails if the margin inverts or collapses the polygon.
pub fn offset_inward(
    boundary: &BoundaryPolygon,
    margin: f64,
) -> Result<BoundaryPolygon, PlannerError> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(PlannerError::InvalidMargin);
    }
    if !boundary.is_convex() {
        return Err(PlannerError::NotConvex);
    }
    let verts = boundary.vertices();
    let n = verts.len();

    // Offset line of each edge: point + direction.
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let dir = (b - a).normalize();
        // Interior lies to the left of a CCW edge.
        let inward = Vector2::new(-dir.y, dir.x);
        lines.push((a + inward * margin, dir));
    }

    let mut offset = Vec::with_capacity(n);
    for i in 0..n {
        let (p_prev, d_prev) = lines[(i + n - 1) % n];
        let (p_cur, d_cur) = lines[i];
        let denom = cross(&d_prev, &d_cur);
        if denom.abs() < 1e-12 {
            return Err(PlannerError::DegenerateEdge);
        }
        let t = cross(&(p_cur - p_prev), &d_cur) / denom;
        offset.push(p_prev + d_prev * t);
    }

    if signed_area(&offset) <= 0.0 {
        return Err(PlannerError::MarginTooLarge);
    }
    // Every new vertex must keep at least the margin of clearance on the
    // interior side of every original edge. Orientation alone cannot catch
    // over-shrinking: on centrally symmetric polygons it mirrors the shape
    // through the center, which is still counterclockwise.
    for v in &offset {
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let dir = (b - a).normalize();
            let inward = Vector2::new(-dir.y, dir.x);
            if (v - a).dot(&inward) < margin - 1e-9 {
                return Err(PlannerError::MarginTooLarge);
            }
        }
    }
    let result = BoundaryPolygon::new(offset, boundary.depth)
        .map_err(|_| PlannerError::MarginTooLarge)?;
    if !result.is_convex() {
        return Err(PlannerError::MarginTooLarge);
    }
    Ok(result)
}

/// Offset polygon, waypoints with net-facing headings, and traversal speed.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionPlan {
    pub offset_polygon: BoundaryPolygon,
    /// One waypoint per offset vertex, in traversal order; the yaw of
    /// waypoint `i` is the outward-normal heading of edge `i`.
    pub waypoints: Vec<PlanarPose>,
    pub speed: f64,
    pub margin: f64,
}

impl InspectionPlan {
    pub fn edge_count(&self) -> usize {
        self.waypoints.len()
    }

    fn vertex(&self, i: usize) -> Vector2<f64> {
        let p = &self.waypoints[i % self.waypoints.len()];
        Vector2::new(p.x, p.y)
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        (self.vertex(i + 1) - self.vertex(i)).norm()
    }

    pub fn edge_direction(&self, i: usize) -> Vector2<f64> {
        (self.vertex(i + 1) - self.vertex(i)).normalize()
    }

    /// Outward-normal heading of edge `i` (the yaw stored on waypoint `i`).
    pub fn edge_yaw(&self, i: usize) -> f64 {
        self.waypoints[i % self.waypoints.len()].psi
    }
}

/// Builds the inspection plan: offsets the boundary, rotates the vertex order
/// so traversal starts nearest `start_hint`, and assigns net-facing yaws.
pub fn build_plan(
    boundary: &BoundaryPolygon,
    margin: f64,
    speed: f64,
    start_hint: Option<Vector2<f64>>,
) -> Result<InspectionPlan, PlannerError> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(PlannerError::InvalidSpeed);
    }
    let offset = offset_inward(boundary, margin)?;

    let start_index = match start_hint {
        Some(p) => {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, v) in offset.vertices().iter().enumerate() {
                let d = (v - p).norm();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        }
        None => 0,
    };

    let n = offset.vertices().len();
    let ordered: Vec<Vector2<f64>> = (0..n)
        .map(|i| offset.vertices()[(start_index + i) % n])
        .collect();

    let mut waypoints = Vec::with_capacity(n);
    for i in 0..n {
        let a = ordered[i];
        let b = ordered[(i + 1) % n];
        let dir = (b - a).normalize();
        let outward = Vector2::new(dir.y, -dir.x);
        waypoints.push(PlanarPose::new(
            a.x,
            a.y,
            boundary.depth,
            libm::atan2(outward.y, outward.x),
        ));
    }

    Ok(InspectionPlan {
        offset_polygon: BoundaryPolygon::new(ordered, boundary.depth)
            .expect("offset polygon already validated"),
        waypoints,
        speed,
        margin,
    })
}

/// Mission phases in traversal order; transitions are strictly forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissionMode {
    /// Hold the first waypoint as the reference until the vehicle arrives.
    TransitToStart,
    /// Track a point moving along edge `i` at the plan speed.
    FollowEdge(usize),
    /// Hold position at the end vertex of edge `i` while the reference yaw
    /// slews to the next edge heading.
    CornerTurn(usize),
    /// Mission complete; reference frozen.
    Done,
}

impl MissionMode {
    pub fn is_done(&self) -> bool {
        matches!(self, MissionMode::Done)
    }
}

impl fmt::Display for MissionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissionMode::TransitToStart => write!(f, "transit_to_start"),
            MissionMode::FollowEdge(i) => write!(f, "follow_edge_{i}"),
            MissionMode::CornerTurn(i) => write!(f, "corner_turn_{i}"),
            MissionMode::Done => write!(f, "done"),
        }
    }
}

/// FSM state: the mode plus scalar progress along it (meters along the current
/// edge, or radians slewed through the current corner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionState {
    pub mode: MissionMode,
    pub progress: f64,
    /// Current reference speed along the edge (differs from the plan speed
    /// only while trapezoidal ramps are enabled).
    edge_speed: f64,
}

impl MissionState {
    pub fn start() -> Self {
        Self {
            mode: MissionMode::TransitToStart,
            progress: 0.0,
            edge_speed: 0.0,
        }
    }
}

/// FSM tuning; defaults: 0.2 rad/s corner slew, 5 cm / 0.05 rad acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmConfig {
    pub yaw_rate: f64,
    pub accept_position: f64,
    pub accept_yaw: f64,
    /// Apply trapezoidal speed ramps at segment ends instead of the
    /// piecewise-constant profile (exercises the feedforward acceleration).
    pub smooth_ramps: bool,
    pub ramp_time: f64,
}

impl Default for FsmConfig {
    fn default() -> Self {
        Self {
            yaw_rate: 0.2,
            accept_position: 0.05,
            accept_yaw: 0.05,
            smooth_ramps: false,
            ramp_time: 0.5,
        }
    }
}

/// Advances the mission one control period and emits the tracking reference.
///
/// Pure function of its inputs, so replays are deterministic. Only
/// `TransitToStart` consults the vehicle pose; all later phases are clocked
/// open-loop along the plan.
pub fn advance(
    mission: &MissionState,
    plan: &InspectionPlan,
    cfg: &FsmConfig,
    current: &PlanarPose,
    dt: f64,
) -> (MissionState, ReferencePoint) {
    let n = plan.edge_count();
    match mission.mode {
        MissionMode::TransitToStart => {
            let wp = plan.waypoints[0];
            let pos_err = libm::sqrt(
                (current.x - wp.x) * (current.x - wp.x)
                    + (current.y - wp.y) * (current.y - wp.y)
                    + (current.z - wp.z) * (current.z - wp.z),
            );
            let yaw_err = wrap_angle(current.psi - wp.psi).abs();
            let mode = if pos_err < cfg.accept_position && yaw_err < cfg.accept_yaw {
                MissionMode::FollowEdge(0)
            } else {
                MissionMode::TransitToStart
            };
            (
                MissionState {
                    mode,
                    progress: 0.0,
                    edge_speed: 0.0,
                },
                ReferencePoint::hold(wp),
            )
        }
        MissionMode::FollowEdge(i) => {
            let length = plan.edge_length(i);
            let accel = plan.speed / cfg.ramp_time;

            let (speed, accel_now) = if cfg.smooth_ramps {
                let remaining = length - mission.progress;
                let stopping = mission.edge_speed * mission.edge_speed / (2.0 * accel);
                if remaining <= stopping + 1e-12 {
                    ((mission.edge_speed - accel * dt).max(accel * dt), -accel)
                } else if mission.edge_speed < plan.speed {
                    ((mission.edge_speed + accel * dt).min(plan.speed), accel)
                } else {
                    (plan.speed, 0.0)
                }
            } else {
                (plan.speed, 0.0)
            };

            let progress = (mission.progress + speed * dt).min(length);
            let dir = plan.edge_direction(i);
            let pos = plan.vertex(i) + dir * progress;
            let yaw = plan.edge_yaw(i);
            let reference = ReferencePoint {
                eta_d: PlanarPose::new(pos.x, pos.y, plan.offset_polygon.depth, yaw),
                eta_d_dot: Vector4::new(dir.x * speed, dir.y * speed, 0.0, 0.0),
                eta_d_ddot: Vector4::new(dir.x * accel_now, dir.y * accel_now, 0.0, 0.0),
            };
            let mode = if progress >= length - 1e-12 {
                if i + 1 == n {
                    MissionMode::Done
                } else {
                    MissionMode::CornerTurn(i)
                }
            } else {
                MissionMode::FollowEdge(i)
            };
            let next_progress = if mode == MissionMode::FollowEdge(i) {
                progress
            } else {
                0.0
            };
            (
                MissionState {
                    mode,
                    progress: next_progress,
                    edge_speed: if mode == MissionMode::FollowEdge(i) {
                        speed
                    } else {
                        0.0
                    },
                },
                reference,
            )
        }
        MissionMode::CornerTurn(i) => {
            let start_yaw = plan.edge_yaw(i);
            let total = wrap_angle(plan.edge_yaw(i + 1) - start_yaw);
            let span = total.abs();
            let progress = (mission.progress + cfg.yaw_rate * dt).min(span);
            let yaw = wrap_angle(start_yaw + total.signum() * progress);
            let vertex = plan.vertex(i + 1);
            let remaining = span - progress;
            let reference = ReferencePoint {
                eta_d: PlanarPose::new(vertex.x, vertex.y, plan.offset_polygon.depth, yaw),
                eta_d_dot: Vector4::new(
                    0.0,
                    0.0,
                    0.0,
                    if remaining > 0.0 {
                        total.signum() * cfg.yaw_rate
                    } else {
                        0.0
                    },
                ),
                eta_d_ddot: Vector4::zeros(),
            };
            // The slew lands exactly on the next heading, well inside the
            // 0.02 rad hand-over gate, so the reference stays continuous.
            let mode = if remaining <= 0.0 {
                MissionMode::FollowEdge(i + 1)
            } else {
                MissionMode::CornerTurn(i)
            };
            (
                MissionState {
                    mode,
                    progress: if mode == MissionMode::CornerTurn(i) {
                        progress
                    } else {
                        0.0
                    },
                    edge_speed: 0.0,
                },
                reference,
            )
        }
        MissionMode::Done => {
            // Frozen at the final waypoint with the last edge's heading.
            let pose = PlanarPose::new(
                plan.vertex(0).x,
                plan.vertex(0).y,
                plan.offset_polygon.depth,
                plan.edge_yaw(n - 1),
            );
            (*mission, ReferencePoint::hold(pose))
        }
    }
}
