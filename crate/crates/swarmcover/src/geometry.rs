//! Circular and axis-aligned rectangular keep-out regions.
//!
//! The boundary of an obstacle is parameterized by the ray from the obstacle
//! center through a query position: [`Obstacle::boundary_radius`] is the
//! distance from the center to the boundary along that ray,
//! [`Obstacle::unit_normal`] the outward normal of the boundary at the ray's
//! exit point, and [`Obstacle::boundary_point`] the exit point itself. For a
//! rectangle the normal is constant on each face sector and the sector
//! boundaries are assigned half-open so every angle maps to exactly one face.

use nalgebra::Vector2;
use thiserror::Error;

use crate::real::{real, Real};

/// Positions closer than this to an obstacle center have no defined
/// boundary ray (meters).
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    /// Query position coincides with the obstacle center.
    #[error("position within {DEGENERATE_EPS} m of obstacle center")]
    DegeneratePosition,
    /// Obstacle constructed with a non-positive dimension.
    #[error("obstacle {0} must be strictly positive")]
    InvalidDimension(&'static str),
}

/// Shape of a keep-out region. Rectangles are axis-aligned; `length` is the
/// extent along x and `width` the extent along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleShape<T> {
    Circle { radius: T },
    Rect { length: T, width: T },
}

/// A keep-out region with its center and an index used in diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle<T: Real> {
    pub center: Vector2<T>,
    pub shape: ObstacleShape<T>,
    pub id: usize,
}

/// Boundary data of one obstacle as seen from one position.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGeometry<T: Real> {
    /// Distance from the obstacle center to the boundary along the query ray.
    pub radius: T,
    /// Outward unit normal at the boundary point.
    pub normal: Vector2<T>,
    /// Ray angle in (-pi, pi].
    pub angle: T,
    /// Intersection of the query ray with the boundary.
    pub point: Vector2<T>,
}

impl<T: Real> Obstacle<T> {
    pub fn circle(center: Vector2<T>, radius: T, id: usize) -> Result<Self, GeometryError> {
        if radius <= T::zero() {
            return Err(GeometryError::InvalidDimension("radius"));
        }
        Ok(Self { center, shape: ObstacleShape::Circle { radius }, id })
    }

    pub fn rect(center: Vector2<T>, length: T, width: T, id: usize) -> Result<Self, GeometryError> {
        if length <= T::zero() {
            return Err(GeometryError::InvalidDimension("length"));
        }
        if width <= T::zero() {
            return Err(GeometryError::InvalidDimension("width"));
        }
        Ok(Self { center, shape: ObstacleShape::Rect { length, width }, id })
    }

    /// Angle of the ray from the obstacle center to `pos`, in (-pi, pi].
    pub fn boundary_angle(&self, pos: &Vector2<T>) -> Result<T, GeometryError> {
        let d = pos - self.center;
        if d.norm() < real(DEGENERATE_EPS) {
            return Err(GeometryError::DegeneratePosition);
        }
        let theta = d.y.atan2(d.x);
        // atan2 may return -pi for negative-zero components; fold onto +pi.
        if theta == -T::pi() {
            return Ok(T::pi());
        }
        Ok(theta)
    }

    /// Half-open corner angle of a rectangle: atan2(width, length).
    fn corner_angle(length: T, width: T) -> T {
        width.atan2(length)
    }

    /// Distance from the center to the boundary along the ray through `pos`.
    ///
    /// Circle: the radius. Rectangle: the polar form of the side the ray
    /// exits through, with corner angles assigned to the length-side branch
    /// so both branches agree (half-diagonal) there.
    pub fn boundary_radius(&self, pos: &Vector2<T>) -> Result<T, GeometryError> {
        match self.shape {
            ObstacleShape::Circle { radius } => {
                self.boundary_angle(pos)?;
                Ok(radius)
            }
            ObstacleShape::Rect { length, width } => {
                let theta = self.boundary_angle(pos)?;
                let corner = Self::corner_angle(length, width);
                let two = real::<T>(2.0);
                let a = theta.abs();
                if corner < a && a < T::pi() - corner {
                    // Ray exits through the top or bottom side.
                    Ok(width / (two * (T::frac_pi_2() - theta).cos().abs()))
                } else {
                    // Ray exits through the left or right side (corners included).
                    Ok(length / (two * theta.cos().abs()))
                }
            }
        }
    }

    /// Outward unit normal of the boundary at the ray's exit point.
    ///
    /// Circle: radial direction. Rectangle: the face normal of the sector
    /// containing the ray angle; sectors are half-open so corner angles map
    /// to exactly one face.
    pub fn unit_normal(&self, pos: &Vector2<T>) -> Result<Vector2<T>, GeometryError> {
        match self.shape {
            ObstacleShape::Circle { .. } => {
                let d = pos - self.center;
                let n = d.norm();
                if n < real(DEGENERATE_EPS) {
                    return Err(GeometryError::DegeneratePosition);
                }
                Ok(d / n)
            }
            ObstacleShape::Rect { length, width } => {
                let theta = self.boundary_angle(pos)?;
                let corner = Self::corner_angle(length, width);
                let one = T::one();
                let zero = T::zero();
                if -corner <= theta && theta < corner {
                    Ok(Vector2::new(one, zero))
                } else if corner <= theta && theta < T::pi() - corner {
                    Ok(Vector2::new(zero, one))
                } else if corner - T::pi() <= theta && theta < -corner {
                    Ok(Vector2::new(zero, -one))
                } else {
                    Ok(Vector2::new(-one, zero))
                }
            }
        }
    }

    /// Intersection of the ray from the center through `pos` with the boundary.
    pub fn boundary_point(&self, pos: &Vector2<T>) -> Result<Vector2<T>, GeometryError> {
        let theta = self.boundary_angle(pos)?;
        let r = self.boundary_radius(pos)?;
        Ok(self.center + Vector2::new(theta.cos(), theta.sin()) * r)
    }

    /// All boundary data for one query position in a single call.
    pub fn boundary_geometry(&self, pos: &Vector2<T>) -> Result<BoundaryGeometry<T>, GeometryError> {
        Ok(BoundaryGeometry {
            radius: self.boundary_radius(pos)?,
            normal: self.unit_normal(pos)?,
            angle: self.boundary_angle(pos)?,
            point: self.boundary_point(pos)?,
        })
    }

    /// True when `pos` lies inside the obstacle or on its boundary.
    pub fn contains(&self, pos: &Vector2<T>) -> bool {
        let d = pos - self.center;
        match self.shape {
            ObstacleShape::Circle { radius } => d.norm() <= radius,
            ObstacleShape::Rect { length, width } => {
                let two = real::<T>(2.0);
                d.x.abs() <= length / two && d.y.abs() <= width / two
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circle(cx: f64, cy: f64, r: f64) -> Obstacle<f64> {
        Obstacle::circle(Vector2::new(cx, cy), r, 0).unwrap()
    }

    fn rect(cx: f64, cy: f64, l: f64, w: f64) -> Obstacle<f64> {
        Obstacle::rect(Vector2::new(cx, cy), l, w, 0).unwrap()
    }

    #[test]
    fn circle_radius_is_constant() {
        let o = circle(0.0, 0.0, 2.0);
        assert_eq!(o.boundary_radius(&Vector2::new(5.0, 0.0)).unwrap(), 2.0);
        assert_eq!(o.boundary_radius(&Vector2::new(0.0, -9.0)).unwrap(), 2.0);
    }

    #[test]
    fn rect_radius_square_diagonal() {
        // 4x2 rectangle queried along the diagonal direction (1,1):
        // the ray exits through the top side at distance sqrt(2).
        let o = rect(0.0, 0.0, 4.0, 2.0);
        let r = o.boundary_radius(&Vector2::new(3.0, 3.0)).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-12);
        let bp = o.boundary_point(&Vector2::new(3.0, 3.0)).unwrap();
        assert_relative_eq!(bp.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(bp.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rect_radius_axis_directions() {
        let o = rect(0.0, 0.0, 4.0, 2.0);
        assert_relative_eq!(o.boundary_radius(&Vector2::new(7.0, 0.0)).unwrap(), 2.0);
        assert_relative_eq!(o.boundary_radius(&Vector2::new(-7.0, 0.0)).unwrap(), 2.0);
        assert_relative_eq!(o.boundary_radius(&Vector2::new(0.0, 5.0)).unwrap(), 1.0);
        assert_relative_eq!(o.boundary_radius(&Vector2::new(0.0, -5.0)).unwrap(), 1.0);
    }

    #[test]
    fn rect_normals_pick_faces() {
        let o = rect(0.0, 0.0, 4.0, 2.0);
        assert_eq!(o.unit_normal(&Vector2::new(5.0, 0.1)).unwrap(), Vector2::new(1.0, 0.0));
        assert_eq!(o.unit_normal(&Vector2::new(0.0, 5.0)).unwrap(), Vector2::new(0.0, 1.0));
        assert_eq!(o.unit_normal(&Vector2::new(-5.0, 0.0)).unwrap(), Vector2::new(-1.0, 0.0));
        assert_eq!(o.unit_normal(&Vector2::new(0.0, -5.0)).unwrap(), Vector2::new(0.0, -1.0));
    }

    #[test]
    fn rect_corner_angles_are_half_open() {
        let o = rect(0.0, 0.0, 4.0, 2.0);
        // Exactly at the corner angle the +x face wins; just above it the +y face.
        let corner = (2.0f64).atan2(4.0);
        let on = Vector2::new(corner.cos(), corner.sin()) * 10.0;
        assert_eq!(o.unit_normal(&on).unwrap(), Vector2::new(0.0, 1.0));
        let below = Vector2::new((corner - 1e-9).cos(), (corner - 1e-9).sin()) * 10.0;
        assert_eq!(o.unit_normal(&below).unwrap(), Vector2::new(1.0, 0.0));
    }

    #[test]
    fn boundary_angle_covers_half_open_pi() {
        let o = rect(0.0, 0.0, 4.0, 2.0);
        assert_relative_eq!(
            o.boundary_angle(&Vector2::new(-3.0, 0.0)).unwrap(),
            std::f64::consts::PI
        );
        // Negative-zero y still maps to +pi, not -pi.
        assert_eq!(
            o.boundary_angle(&Vector2::new(-3.0, -0.0)).unwrap(),
            std::f64::consts::PI
        );
    }

    #[test]
    fn contains_examples() {
        let o = rect(0.0, 0.0, 4.0, 2.0);
        assert!(o.contains(&Vector2::new(2.0, 1.0))); // boundary is inside
        assert!(!o.contains(&Vector2::new(2.0, 1.01)));
        let c = circle(0.0, 0.0, 2.0);
        assert!(c.contains(&Vector2::new(2.0, 0.0)));
        assert!(!c.contains(&Vector2::new(2.0001, 0.0)));
    }

    #[test]
    fn degenerate_position_rejected() {
        let o = circle(1.0, 1.0, 2.0);
        let at_center = Vector2::new(1.0, 1.0);
        assert_eq!(o.boundary_angle(&at_center), Err(GeometryError::DegeneratePosition));
        assert_eq!(o.unit_normal(&at_center), Err(GeometryError::DegeneratePosition));
        let near = Vector2::new(1.0 + 1e-13, 1.0);
        assert_eq!(o.boundary_radius(&near), Err(GeometryError::DegeneratePosition));
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert_eq!(
            Obstacle::circle(Vector2::new(0.0, 0.0), 0.0, 0).unwrap_err(),
            GeometryError::InvalidDimension("radius")
        );
        assert_eq!(
            Obstacle::rect(Vector2::new(0.0, 0.0), -1.0, 2.0, 0).unwrap_err(),
            GeometryError::InvalidDimension("length")
        );
        assert_eq!(
            Obstacle::rect(Vector2::new(0.0, 0.0), 1.0, 0.0, 0).unwrap_err(),
            GeometryError::InvalidDimension("width")
        );
    }

    #[test]
    fn branch_agreement_at_corners() {
        // At all four corner angles of a random-ish rectangle both polar
        // branches must give the half-diagonal.
        let (l, w) = (3.7, 1.9);
        let o = rect(0.4, -0.7, l, w);
        let half_diag = 0.5 * (l * l + w * w).sqrt();
        let corner = w.atan2(l);
        for theta in [corner, std::f64::consts::PI - corner, -corner, corner - std::f64::consts::PI]
        {
            let pos = o.center + Vector2::new(theta.cos(), theta.sin()) * 10.0;
            let r = o.boundary_radius(&pos).unwrap();
            assert_relative_eq!(r, half_diag, epsilon = 1e-9);
        }
    }

    fn obstacle_strategy() -> impl Strategy<Value = Obstacle<f64>> {
        let center = (-50.0..50.0f64, -50.0..50.0f64);
        prop_oneof![
            (center.clone(), 0.1..10.0f64).prop_map(|((cx, cy), r)| circle(cx, cy, r)),
            (center, 0.1..10.0f64, 0.1..10.0f64).prop_map(|((cx, cy), l, w)| rect(cx, cy, l, w)),
        ]
    }

    proptest! {
        #[test]
        fn normal_is_unit(obs in obstacle_strategy(), dx in -30.0..30.0f64, dy in -30.0..30.0f64) {
            let pos = obs.center + Vector2::new(dx, dy);
            if (pos - obs.center).norm() > 1e-6 {
                let n = obs.unit_normal(&pos).unwrap();
                prop_assert!((n.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn boundary_point_is_on_boundary(
            obs in obstacle_strategy(),
            dx in -30.0..30.0f64,
            dy in -30.0..30.0f64,
        ) {
            let pos = obs.center + Vector2::new(dx, dy);
            if (pos - obs.center).norm() > 1e-6 {
                let bp = obs.boundary_point(&pos).unwrap();
                // The boundary point sits on the boundary up to roundoff:
                // nudging it along the ray flips containment.
                let dir = (bp - obs.center).normalize();
                prop_assert!(obs.contains(&(bp - dir * 1e-9)));
                prop_assert!(!obs.contains(&(bp + dir * 1e-9)));
            }
        }

        #[test]
        fn outside_iff_beyond_boundary_radius(
            obs in obstacle_strategy(),
            dx in -30.0..30.0f64,
            dy in -30.0..30.0f64,
        ) {
            let pos = obs.center + Vector2::new(dx, dy);
            let dist = (pos - obs.center).norm();
            if dist > 1e-6 {
                let r = obs.boundary_radius(&pos).unwrap();
                if dist > r + 1e-9 {
                    prop_assert!(!obs.contains(&pos));
                } else if dist < r - 1e-9 {
                    prop_assert!(obs.contains(&pos));
                }
            }
        }

        #[test]
        fn circle_normal_is_radial(
            r in 0.1..10.0f64,
            dx in -30.0..30.0f64,
            dy in -30.0..30.0f64,
        ) {
            let obs = circle(0.0, 0.0, r);
            let pos = Vector2::new(dx, dy);
            if pos.norm() > 1e-6 {
                let n = obs.unit_normal(&pos).unwrap();
                prop_assert!(n.dot(&pos) > 0.0);
                prop_assert!((n.dot(&pos) - pos.norm()).abs() < 1e-9);
            }
        }
    }
}
