//! Planar geometry kernels: vehicle footprints, projection rays,
//! segment/oriented-box entry distance and vertex-based polyline distance.

use thiserror::Error;

use crate::model::{Vec2, VehicleState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vehicle '{0}' has non-positive length or width")]
    DegenerateVehicle(String),
    #[error("polyline has no points")]
    EmptyPolyline,
    #[error("direction of a zero-length vector is undefined")]
    ZeroVector,
}

/// A rectangle of extent `2·half_length × 2·half_width` centered at
/// `center`, its length axis pointing along `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    /// Unit vectors of the length and width axes.
    #[inline]
    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = Vec2::from_angle(self.heading);
        (u, u.perp())
    }

    /// Express a world point in box coordinates (length axis, width axis).
    #[inline]
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        let (u, w) = self.axes();
        let d = p - self.center;
        Vec2::new(d.dot(u), d.dot(w))
    }

    /// Corners in counter-clockwise order starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (u, w) = self.axes();
        let l = u * self.half_length;
        let s = w * self.half_width;
        [
            self.center + l + s,
            self.center - l + s,
            self.center - l - s,
            self.center + l - s,
        ]
    }

    /// Closed containment test with an absolute tolerance in meters.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let q = self.to_local(p);
        q.x.abs() <= self.half_length + tol && q.y.abs() <= self.half_width + tol
    }
}

/// A directed segment from `origin` to `tip`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub origin: Vec2,
    pub tip: Vec2,
}

impl Segment {
    #[inline]
    pub fn direction(&self) -> Vec2 {
        self.tip - self.origin
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    /// Point at parameter `t ∈ [0, 1]`.
    #[inline]
    pub fn at(&self, t: f64) -> Vec2 {
        self.origin + self.direction() * t
    }
}

/// Front-edge reference points of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontPoints {
    pub center: Vec2,
    pub left: Vec2,
    pub right: Vec2,
}

fn check_extents(v: &VehicleState) -> Result<(), GeometryError> {
    if v.length > 0.0 && v.width > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::DegenerateVehicle(v.vehicle_id.clone()))
    }
}

pub fn footprint(v: &VehicleState) -> Result<OrientedBox, GeometryError> {
    check_extents(v)?;
    Ok(OrientedBox {
        center: v.center,
        heading: v.heading,
        half_length: v.length / 2.0,
        half_width: v.width / 2.0,
    })
}

/// Center of the front face and the two front corners (left is on the
/// counter-clockwise side of the heading).
pub fn front_points(v: &VehicleState) -> Result<FrontPoints, GeometryError> {
    check_extents(v)?;
    let forward = Vec2::from_angle(v.heading);
    let center = v.center + forward * (v.length / 2.0);
    let side = forward.perp() * (v.width / 2.0);
    Ok(FrontPoints {
        center,
        left: center + side,
        right: center - side,
    })
}

/// The segment covered in `horizon_s` seconds at constant `velocity`.
#[inline]
pub fn projection_segment(origin: Vec2, velocity: Vec2, horizon_s: f64) -> Segment {
    Segment {
        origin,
        tip: origin + velocity * horizon_s,
    }
}

/// Distance from `seg.origin` to the first point of `seg` inside `obb`
/// (boundary inclusive), or `None` when they do not meet. Zero when the origin
/// itself is inside.
///
/// Slab method in the box frame: clip the parameter interval `[0, 1]`
/// against both pairs of parallel faces.
pub fn segment_box_entry_distance(seg: &Segment, obb: &OrientedBox) -> Option<f64> {
    let (u, w) = obb.axes();
    let rel = seg.origin - obb.center;
    let dir = seg.direction();
    let slabs = [
        (rel.dot(u), dir.dot(u), obb.half_length),
        (rel.dot(w), dir.dot(w), obb.half_width),
    ];

    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for (start, delta, half) in slabs {
        if delta == 0.0 {
            if start.abs() > half {
                return None;
            }
            continue;
        }
        let t_a = (-half - start) / delta;
        let t_b = (half - start) / delta;
        let (near, far) = if t_a <= t_b { (t_a, t_b) } else { (t_b, t_a) };
        t_enter = t_enter.max(near);
        t_exit = t_exit.min(far);
        if t_enter > t_exit {
            return None;
        }
    }
    Some(t_enter * dir.norm())
}

/// Nearest polyline vertex to `p`: `(distance, index)`. Only vertices are
/// considered, not the segments between them. Ties go to the lowest index.
pub fn point_polyline_distance(p: Vec2, poly: &[Vec2]) -> Result<(f64, usize), GeometryError> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &q) in poly.iter().enumerate() {
        let d2 = (q - p).norm_squared();
        if best.is_none_or(|(b, _)| d2 < b) {
            best = Some((d2, i));
        }
    }
    best.map(|(d2, i)| (d2.sqrt(), i))
        .ok_or(GeometryError::EmptyPolyline)
}

/// Unsigned angle between two vectors, in `[0, π]`.
pub fn heading_angle_between(a: Vec2, b: Vec2) -> Result<f64, GeometryError> {
    if a.norm_squared() == 0.0 || b.norm_squared() == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    Ok(a.cross(b).abs().atan2(a.dot(b)))
}
