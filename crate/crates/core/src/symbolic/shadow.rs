use serde::Serialize;

use super::Support;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowingCheck {
    pub passed: bool,
    /// First triple (1-based) met by a single line.
    pub violation: Option<[usize; 3]>,
    pub lines_tested: usize,
}

/// Lines `n . x = h` tangent to both disks.
fn common_tangents(a: &Support, b: &Support) -> Vec<(f64, f64, f64)> {
    let d = a.center - b.center;
    let dist = d.x.hypot(d.y);
    let phi = d.y.atan2(d.x);
    let mut out = Vec::new();
    for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let delta = sa * a.radius - sb * b.radius;
        if dist == 0.0 || delta.abs() > dist {
            continue;
        }
        let spread = (delta / dist).acos();
        for psi in [phi + spread, phi - spread] {
            let (nx, ny) = (psi.cos(), psi.sin());
            out.push((nx, ny, nx * a.center.x + ny * a.center.y - sa * a.radius));
        }
    }
    out
}

/// Whether some straight line meets three of the disks. A line meeting three
/// disks can be moved until it is tangent to two of them, so the common
/// tangents of every pair are the only lines to test. Overlapping pairs also
/// get a pencil of lines through their overlap.
pub fn check_nonshadowing(supports: &[Support]) -> ShadowingCheck {
    let k = supports.len();
    let mut tested = 0;
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&supports[i], &supports[j]);
            let mut lines = common_tangents(a, b);
            let gap = (a.center - b.center).norm();
            if gap < a.radius + b.radius {
                let t = if gap > 0.0 { (a.radius - 0.5 * (a.radius + b.radius - gap)) / gap } else { 0.0 };
                let p = a.center + (b.center - a.center) * t;
                for s in 0..64 {
                    let psi = std::f64::consts::PI * s as f64 / 64.0;
                    let (nx, ny) = (psi.cos(), psi.sin());
                    lines.push((nx, ny, nx * p.x + ny * p.y));
                }
            }
            for (nx, ny, h) in lines {
                tested += 1;
                for (m, c) in supports.iter().enumerate() {
                    if m == i || m == j {
                        continue;
                    }
                    if (nx * c.center.x + ny * c.center.y - h).abs() <= c.radius {
                        let mut triple = [i + 1, j + 1, m + 1];
                        triple.sort_unstable();
                        return ShadowingCheck { passed: false, violation: Some(triple), lines_tested: tested };
                    }
                }
            }
        }
    }
    ShadowingCheck { passed: true, violation: None, lines_tested: tested }
}
