//! Degree of the compactified final-direction map in space, as the total signed
//! spherical area of the image of a triangulated parameter sphere.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Rotation3;
use rayon::prelude::*;

use super::{DegreeEstimate, DegreeMethod};
use crate::geometry::angle_between;
use crate::potential::PotentialModel;
use crate::scattering::{perp, ScatterOptions, ScatterStatus, Scatterer};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct SphereOptions {
    /// Image triangles wider than this are split.
    pub max_diameter: f64,
    pub max_vertices: usize,
    /// Impact parameter assigned to the equator of the parameter sphere;
    /// defaults to the virial radius.
    pub scale: Option<f64>,
    pub scatter: ScatterOptions,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self { max_diameter: PI / 8.0, max_vertices: 200_000, scale: None, scatter: ScatterOptions::default() }
    }
}

struct Mesh {
    points: Vec<Vec3>,
    images: Vec<Option<Vec3>>,
    midpoints: HashMap<(usize, usize), usize>,
    leaves: Vec<[usize; 3]>,
}

impl Mesh {
    /// Icosahedron with vertex 0 at `pole`, faces oriented outward.
    fn icosahedron(pole: &Vec3) -> Self {
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        let raw = [
            (-1.0, g, 0.0),
            (1.0, g, 0.0),
            (-1.0, -g, 0.0),
            (1.0, -g, 0.0),
            (0.0, -1.0, g),
            (0.0, 1.0, g),
            (0.0, -1.0, -g),
            (0.0, 1.0, -g),
            (g, 0.0, -1.0),
            (g, 0.0, 1.0),
            (-g, 0.0, -1.0),
            (-g, 0.0, 1.0),
        ];
        let mut points: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z).normalize()).collect();
        let rot = Rotation3::rotation_between(&points[0], pole)
            .unwrap_or_else(|| Rotation3::from_axis_angle(&Vec3::x_axis(), PI));
        for p in &mut points {
            *p = rot * *p;
        }
        points[0] = *pole;
        let faces = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let n = points.len();
        Self { points, images: vec![None; n], midpoints: HashMap::new(), leaves: faces.to_vec() }
    }

    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let p = (self.points[a] + self.points[b]).normalize();
        self.points.push(p);
        self.images.push(None);
        let m = self.points.len() - 1;
        self.midpoints.insert(key, m);
        m
    }

    fn split(&mut self, t: [usize; 3]) -> [[usize; 3]; 4] {
        let [a, b, c] = t;
        let (ab, bc, ca) = (self.midpoint(a, b), self.midpoint(b, c), self.midpoint(c, a));
        [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    }

    /// Vertices along edge `a -> b`, including hanging midpoints, without `b`.
    fn chain(&self, a: usize, b: usize, out: &mut Vec<usize>) {
        match self.midpoints.get(&(a.min(b), a.max(b))) {
            Some(&m) => {
                self.chain(a, m, out);
                self.chain(m, b, out);
            }
            None => out.push(a),
        }
    }

    fn polygon(&self, t: &[usize; 3]) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..3 {
            self.chain(t[k], t[(k + 1) % 3], &mut out);
        }
        out
    }
}

/// Signed solid angle of the geodesic triangle `(a, b, c)`.
pub(crate) fn signed_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

fn diameter(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    angle_between(a, b).max(angle_between(b, c)).max(angle_between(c, a))
}

pub fn degree_sphere(model: &PotentialModel, energy: f64, theta: &Vec3, mesh_level: usize) -> Result<DegreeEstimate> {
    degree_sphere_with(model, energy, theta, mesh_level, &SphereOptions::default())
}

pub fn degree_sphere_with(
    model: &PotentialModel,
    energy: f64,
    theta: &Vec3,
    mesh_level: usize,
    opts: &SphereOptions,
) -> Result<DegreeEstimate> {
    if model.dimension() != 3 {
        return Err(Error::InvalidConfig("sphere degree needs a spatial model".into()));
    }
    let theta = theta.normalize();
    let scatterer = Scatterer::new(model, energy, &opts.scatter)?;
    let scale = opts.scale.unwrap_or(scatterer.r_vir());
    // Stereographic projection from `theta`: the pole is the point at infinity.
    let impact = |w: &Vec3| -> Option<Vec3> {
        let c = w.dot(&theta);
        (c < 1.0 - 1e-15).then(|| perp(w, &theta) * (scale / (1.0 - c)))
    };

    let mut mesh = Mesh::icosahedron(&theta);
    for _ in 0..mesh_level {
        let leaves = std::mem::take(&mut mesh.leaves);
        for t in leaves {
            let kids = mesh.split(t);
            mesh.leaves.extend(kids);
        }
    }

    let mut level = mesh_level;
    loop {
        let pending: Vec<usize> = (0..mesh.points.len()).filter(|&i| mesh.images[i].is_none()).collect();
        let fresh: Vec<(usize, Vec3)> = pending
            .par_iter()
            .map(|&i| -> Result<(usize, Vec3)> {
                match impact(&mesh.points[i]) {
                    None => Ok((i, theta)),
                    Some(b) => {
                        let r = scatterer.scatter(&theta, &b)?;
                        if r.status == ScatterStatus::TrappedTimeout {
                            return Err(Error::TrappingDetected { energy });
                        }
                        Ok((i, r.theta_out))
                    }
                }
            })
            .collect::<Result<_>>()?;
        for (i, img) in fresh {
            mesh.images[i] = Some(img);
        }
        let img = |i: usize| mesh.images[i].expect("image computed");
        let wide: Vec<usize> = mesh
            .leaves
            .iter()
            .enumerate()
            .filter(|(_, t)| diameter(&img(t[0]), &img(t[1]), &img(t[2])) > opts.max_diameter)
            .map(|(k, _)| k)
            .collect();
        if wide.is_empty() {
            break;
        }
        if mesh.points.len() + 3 * wide.len() > opts.max_vertices {
            let worst = mesh.leaves.iter().map(|t| diameter(&img(t[0]), &img(t[1]), &img(t[2]))).fold(0.0, f64::max);
            if worst > PI / 2.0 {
                return Err(Error::MeshTooCoarse { angle: worst });
            }
            break;
        }
        level += 1;
        let mut keep = Vec::with_capacity(mesh.leaves.len() + 3 * wide.len());
        let mut wide_iter = wide.into_iter().peekable();
        let leaves = std::mem::take(&mut mesh.leaves);
        for (k, t) in leaves.into_iter().enumerate() {
            if wide_iter.peek() == Some(&k) {
                wide_iter.next();
                let kids = mesh.split(t);
                keep.extend(kids);
            } else {
                keep.push(t);
            }
        }
        mesh.leaves = keep;
    }

    let img = |i: usize| mesh.images[i].expect("image computed");
    let total: f64 = mesh
        .leaves
        .iter()
        .map(|t| {
            let poly = mesh.polygon(t);
            let a = img(poly[0]);
            poly[1..].windows(2).map(|w| signed_area(&a, &img(w[0]), &img(w[1]))).sum::<f64>()
        })
        .sum();
    let raw = total / (4.0 * PI);
    Ok(DegreeEstimate::from_raw(energy, DegreeMethod::Sphere3d, raw, &theta, 3, level, mesh.points.len()))
}
