//! Planar Hill's-region diagnostics via marching squares on V - E.

use std::collections::HashMap;

use serde::Serialize;

use super::{virial_radius, PotentialModel};
use crate::geometry::planar;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HillClass {
    Empty,
    SingleLoop,
    MultiComponent,
    NonSpherical,
}

#[derive(Debug, Clone, Serialize)]
pub struct HillLoop {
    pub points: Vec<[f64; 2]>,
    /// Shoelace area, positive when counter-clockwise.
    pub signed_area: f64,
    /// The loop separates the forbidden region from the unbounded allowed component.
    pub bounds_unbounded: bool,
}

/// A connected component of the allowed region {V <= E}.
#[derive(Debug, Clone, Serialize)]
pub struct HillComponent {
    pub nodes: usize,
    pub bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HillAnalysis {
    pub energy: f64,
    pub resolution: usize,
    pub half_width: f64,
    pub classification: HillClass,
    pub loops: Vec<HillLoop>,
    pub components: Vec<HillComponent>,
    /// A saddle of V - E sits on the boundary within grid precision.
    pub degenerate_saddle: bool,
}

struct Grid {
    n: usize,
    lo: f64,
    h: f64,
    f: Vec<f64>,
}

impl Grid {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.f[j * (self.n + 1) + i]
    }
    fn x(&self, i: usize) -> f64 {
        self.lo + self.h * i as f64
    }
    fn h_edge(&self, i: usize, j: usize) -> usize {
        2 * (j * (self.n + 1) + i)
    }
    fn v_edge(&self, i: usize, j: usize) -> usize {
        2 * (j * (self.n + 1) + i) + 1
    }
    /// Crossing point on an edge and the node on its allowed side.
    fn crossing(&self, edge: usize) -> ([f64; 2], usize) {
        let node = edge / 2;
        let (i, j) = (node % (self.n + 1), node / (self.n + 1));
        let (i2, j2) = if edge.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (f0, f1) = (self.at(i, j), self.at(i2, j2));
        let t = f0 / (f0 - f1);
        let p = [self.x(i) + t * (self.x(i2) - self.x(i)), self.x(j) + t * (self.x(j2) - self.x(j))];
        let allowed = if f0 <= 0.0 { node } else { j2 * (self.n + 1) + i2 };
        (p, allowed)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn hill_analysis(model: &PotentialModel, energy: f64, resolution: usize) -> Result<HillAnalysis> {
    if model.dimension() != 2 {
        return Err(Error::InvalidConfig("Hill analysis is planar only".into()));
    }
    if resolution < 8 {
        return Err(Error::ResolutionTooCoarse { resolution });
    }
    let rv = virial_radius(model, energy)?.radius;
    let half = 1.05 * rv.max(model.extent());
    let n = resolution;
    let h = 2.0 * half / n as f64;
    let nodes = (n + 1) * (n + 1);
    let field = |x: f64, y: f64| match model.value(&planar(x, y)) {
        Ok(v) => v - energy,
        Err(_) => -1e30,
    };
    let f: Vec<f64> =
        (0..nodes).map(|k| field(-half + h * (k % (n + 1)) as f64, -half + h * (k / (n + 1)) as f64)).collect();
    let grid = Grid { n, lo: -half, h, f };

    let mut uf = UnionFind((0..nodes).collect());
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();
    let mut degenerate_cells: Vec<[usize; 4]> = Vec::new();
    let node = |i: usize, j: usize| j * (n + 1) + i;

    for j in 0..=n {
        for i in 0..=n {
            if grid.at(i, j) > 0.0 {
                continue;
            }
            if i < n && grid.at(i + 1, j) <= 0.0 {
                uf.union(node(i, j), node(i + 1, j));
            }
            if j < n && grid.at(i, j + 1) <= 0.0 {
                uf.union(node(i, j), node(i, j + 1));
            }
        }
    }

    for j in 0..n {
        for i in 0..n {
            let fa = grid.at(i, j);
            let fb = grid.at(i + 1, j);
            let fc = grid.at(i + 1, j + 1);
            let fd = grid.at(i, j + 1);
            let inside = [fa > 0.0, fb > 0.0, fc > 0.0, fd > 0.0];
            let bottom = grid.h_edge(i, j);
            let right = grid.v_edge(i + 1, j);
            let top = grid.h_edge(i, j + 1);
            let left = grid.v_edge(i, j);
            let mut cut = Vec::with_capacity(4);
            if inside[0] != inside[1] {
                cut.push(bottom);
            }
            if inside[1] != inside[2] {
                cut.push(right);
            }
            if inside[3] != inside[2] {
                cut.push(top);
            }
            if inside[0] != inside[3] {
                cut.push(left);
            }
            let pairs: Vec<[usize; 2]> = match cut.len() {
                0 => vec![],
                2 => vec![[cut[0], cut[1]]],
                _ => {
                    let center = field(grid.x(i) + 0.5 * h, grid.x(j) + 0.5 * h);
                    let scale = fa.abs().max(fb.abs()).max(fc.abs()).max(fd.abs());
                    let corners = [node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)];
                    if center.abs() < 1e-3 * scale {
                        degenerate_cells.push(corners);
                    }
                    let a_side = (center > 0.0) == inside[0];
                    if !inside[0] && a_side {
                        uf.union(corners[0], corners[2]);
                    }
                    if !inside[1] && !a_side {
                        uf.union(corners[1], corners[3]);
                    }
                    if a_side {
                        vec![[bottom, right], [top, left]]
                    } else {
                        vec![[bottom, left], [right, top]]
                    }
                }
            };
            for [e0, e1] in pairs {
                let s = segments.len();
                segments.push([e0, e1]);
                links.entry(e0).or_default().push(s);
                links.entry(e1).or_default().push(s);
            }
        }
    }

    // Label allowed components; those touching the frame are unbounded.
    let frame_root = {
        let mut root = None;
        for k in 0..=n {
            for (i, j) in [(k, 0), (k, n), (0, k), (n, k)] {
                if grid.at(i, j) <= 0.0 {
                    let r = uf.find(node(i, j));
                    match root {
                        None => root = Some(r),
                        Some(r0) => uf.union(r0, r),
                    }
                }
            }
        }
        root.map(|r| uf.find(r))
    };
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for k in 0..nodes {
        if grid.f[k] <= 0.0 {
            *sizes.entry(uf.find(k)).or_default() += 1;
        }
    }
    let mut roots: Vec<_> = sizes.into_iter().collect();
    roots.sort();
    let components: Vec<HillComponent> =
        roots.iter().map(|&(r, count)| HillComponent { nodes: count, bounded: Some(r) != frame_root }).collect();

    // Chain segments into closed loops.
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first_edge = segments[start][0];
        let mut edges = vec![first_edge];
        let mut edge = segments[start][1];
        let mut seg = start;
        while edge != first_edge {
            edges.push(edge);
            let next = links[&edge].iter().copied().find(|&s| s != seg && !used[s]);
            let Some(next) = next else {
                return Err(Error::ResolutionTooCoarse { resolution });
            };
            used[next] = true;
            seg = next;
            let [a, b] = segments[next];
            edge = if a == edge { b } else { a };
        }
        let points: Vec<[f64; 2]> = edges.iter().map(|&e| grid.crossing(e).0).collect();
        let signed_area =
            0.5 * points.iter().zip(points.iter().cycle().skip(1)).map(|(p, q)| p[0] * q[1] - q[0] * p[1]).sum::<f64>();
        let bounds_unbounded = edges.iter().any(|&e| Some(uf.find(grid.crossing(e).1)) == frame_root);
        loops.push(HillLoop { points, signed_area, bounds_unbounded });
    }

    let outer = loops.iter().filter(|l| l.bounds_unbounded).count();
    let degenerate_saddle = degenerate_cells
        .iter()
        .any(|corners| corners.iter().any(|&c| grid.f[c] <= 0.0 && Some(uf.find(c)) == frame_root));
    let any_bounded = components.iter().any(|c| c.bounded);
    let classification = if outer == 0 && !any_bounded {
        HillClass::Empty
    } else if degenerate_saddle {
        HillClass::NonSpherical
    } else if outer == 1 && !any_bounded {
        HillClass::SingleLoop
    } else {
        HillClass::MultiComponent
    };

    Ok(HillAnalysis { energy, resolution, half_width: half, classification, loops, components, degenerate_saddle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialTerm;
    use crate::Vec3;

    fn bump() -> PotentialModel {
        PotentialModel::new(2, vec![PotentialTerm::gaussian(2.0, 1.0, Vec3::zeros())]).unwrap()
    }

    fn two_bumps() -> PotentialModel {
        PotentialModel::new(
            2,
            vec![
                PotentialTerm::gaussian(2.0, 1.0, planar(3.0, 0.0)),
                PotentialTerm::gaussian(2.0, 1.0, planar(-3.0, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn above_the_barrier_is_empty() {
        let h = hill_analysis(&bump(), 3.0, 128).unwrap();
        assert_eq!(h.classification, HillClass::Empty);
        assert!(h.loops.is_empty());
    }

    #[test]
    fn single_bump_loop_radius() {
        let h = hill_analysis(&bump(), 1.0, 256).unwrap();
        assert_eq!(h.classification, HillClass::SingleLoop);
        assert_eq!(h.loops.len(), 1);
        let target = 2f64.ln().sqrt();
        for p in &h.loops[0].points {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - target).abs() < 2e-3, "r = {r}");
        }
    }

    #[test]
    fn two_bumps_give_two_loops() {
        let h = hill_analysis(&two_bumps(), 1.0, 256).unwrap();
        assert_eq!(h.classification, HillClass::MultiComponent);
        assert_eq!(h.loops.iter().filter(|l| l.bounds_unbounded).count(), 2);
    }

    #[test]
    fn kepler_well_has_no_boundary() {
        let m = PotentialModel::new(2, vec![PotentialTerm::singular(1.0, 1.0, Vec3::zeros())]).unwrap();
        let h = hill_analysis(&m, 1.0, 64).unwrap();
        assert_eq!(h.classification, HillClass::Empty);
    }

    #[test]
    fn well_inside_a_ring_is_a_bounded_component() {
        // A repulsive plateau with an attractive dip at its center.
        let m = PotentialModel::new(
            2,
            vec![PotentialTerm::poly_bump(2.0, 3.0, Vec3::zeros()), PotentialTerm::gaussian(-3.0, 0.5, Vec3::zeros())],
        )
        .unwrap();
        let h = hill_analysis(&m, 1.0, 256).unwrap();
        assert_eq!(h.classification, HillClass::MultiComponent);
        assert!(h.components.iter().any(|c| c.bounded));
    }

    #[test]
    fn classification_stable_under_doubling() {
        for (m, e) in [(bump(), 1.0), (bump(), 2.5), (two_bumps(), 1.0), (two_bumps(), 2.2)] {
            let a = hill_analysis(&m, e, 128).unwrap().classification;
            let b = hill_analysis(&m, e, 256).unwrap().classification;
            assert_eq!(a, b);
        }
    }
}
