//! Small vector helpers shared by every module.

use std::f64::consts::PI;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Planar vector embedded with zero third component.
pub fn planar(x: f64, y: f64) -> Vec3 {
    Vec3::new(x, y, 0.0)
}

/// Unit vector at angle `phi` in the plane.
pub fn unit_at(phi: f64) -> Vec3 {
    Vec3::new(phi.cos(), phi.sin(), 0.0)
}

/// Counter-clockwise rotation by a right angle in the plane.
pub fn rot90(v: &Vec3) -> Vec3 {
    Vec3::new(-v.y, v.x, 0.0)
}

pub fn angle_of(v: &Vec3) -> f64 {
    v.y.atan2(v.x)
}

/// Wrap an angle into (-pi, pi].
pub fn wrap(mut a: f64) -> f64 {
    a %= 2.0 * PI;
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Signed planar angle from `a` to `b`.
pub fn signed_angle(a: &Vec3, b: &Vec3) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    cross.atan2(a.dot(b))
}

/// Unsigned angle between two vectors, accurate for tiny and near-pi angles.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Some unit vector orthogonal to `v`.
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let trial = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let w = trial - v * v.dot(&trial) / v.norm_squared();
    w.normalize()
}

/// Roughly uniform directions: evenly spaced on the circle (`dim == 2`) or a
/// Fibonacci lattice on the sphere (`dim == 3`).
pub fn directions(dim: usize, count: usize) -> Vec<Vec3> {
    if dim == 2 {
        return (0..count).map(|i| unit_at(2.0 * PI * i as f64 / count as f64)).collect();
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}
