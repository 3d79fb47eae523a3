use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "scatdeg", version, about = "Scattering maps and their topological degree")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Potential model JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Relative and absolute integrator tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, env = "SCATDEG_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep impact parameters and write one CSV row per orbit.
    Scatter(ScatterArgs),
    /// Degree of the scattering map at one energy.
    Degree(DegreeArgs),
    /// Trapping evidence over a list of energies.
    Scan(ScanArgs),
    /// Swept angle of a central orbit by quadrature.
    Deflect(DeflectArgs),
    /// Shape of the forbidden region of a planar model.
    Hill(HillArgs),
    /// Find an orbit visiting the centers in a given order.
    Itinerary(ItineraryArgs),
    /// Trajectory polylines for a sweep of impact parameters.
    Trajfan(TrajfanArgs),
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[arg(long)]
    pub energy: f64,
    /// Incoming direction as an angle in the q1-q2 plane.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Impact parameters as min:max:count.
    #[arg(long, allow_hyphen_values = true)]
    pub b_range: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    #[value(name = "winding2d")]
    Winding2d,
    #[value(name = "sphere3d")]
    Sphere3d,
    QuadratureCentral,
    LagrangeProjection,
}

#[derive(Debug, Args)]
pub struct DegreeArgs {
    #[arg(long)]
    pub energy: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Icosahedron subdivision level for the spatial degree.
    #[arg(long, default_value_t = 3)]
    pub mesh: usize,
    /// Initial samples along the impact line for the planar winding.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    /// Configuration point x,y for the Lagrange projection.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    /// Attach a trapping scan at the same energy.
    #[arg(long)]
    pub with_scan: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Comma-separated list or min:max:count.
    #[arg(long)]
    pub energies: String,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    #[arg(long, default_value_t = 17)]
    pub impacts: usize,
    #[arg(long, default_value_t = 32)]
    pub monte_carlo: usize,
    #[arg(long, default_value_t = 400)]
    pub hill_resolution: usize,
}

#[derive(Debug, Args)]
pub struct DeflectArgs {
    #[arg(long)]
    pub energy: f64,
    /// Angular momentum; its sign sets the sense of rotation.
    #[arg(long, allow_hyphen_values = true)]
    pub l: f64,
}

#[derive(Debug, Args)]
pub struct HillArgs {
    #[arg(long)]
    pub energy: f64,
    /// Grid cells per axis.
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct ItineraryArgs {
    /// Centers to visit, 1-based and comma-separated.
    #[arg(long)]
    pub sequence: String,
    #[arg(long)]
    pub energy: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Incoming directions to try before giving up.
    #[arg(long, default_value_t = 6)]
    pub directions: usize,
}

#[derive(Debug, Args)]
pub struct TrajfanArgs {
    #[arg(long)]
    pub energy: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b_range: String,
}

/// Evenly spaced values from `min:max:count`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, count] = parts[..] else {
        return Err(format!("expected min:max:count, got '{text}'"));
    };
    let min: f64 = min.trim().parse().map_err(|_| format!("bad range start '{min}'"))?;
    let max: f64 = max.trim().parse().map_err(|_| format!("bad range end '{max}'"))?;
    let count: usize = count.trim().parse().map_err(|_| format!("bad range count '{count}'"))?;
    if !(min.is_finite() && max.is_finite()) {
        return Err("range bounds must be finite".into());
    }
    if count < 2 {
        return Err(format!("range count must be at least 2, got {count}"));
    }
    if min >= max {
        return Err(format!("range start {min} must be below its end {max}"));
    }
    Ok((0..count).map(|i| min + (max - min) * i as f64 / (count - 1) as f64).collect())
}

/// Either `min:max:count` or a comma-separated list.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    if text.contains(':') {
        return parse_range(text);
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number '{s}'"))).collect()
}

pub fn parse_point(text: &str) -> Result<[f64; 2], String> {
    let v = parse_values(text)?;
    match v[..] {
        [x, y] if x.is_finite() && y.is_finite() => Ok([x, y]),
        _ => Err(format!("expected x,y, got '{text}'")),
    }
}

pub fn parse_sequence(text: &str) -> Result<Vec<usize>, String> {
    text.split(',').map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad symbol '{s}'"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_range("0:1:101").unwrap().len(), 101);
        for bad in ["5:-5:10", "0:1:1", "1:1:4", "0:1", "a:1:3", "0:inf:3"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_values("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert_eq!(parse_point("-2.5,0.3").unwrap(), [-2.5, 0.3]);
        assert!(parse_point("1,2,3").is_err());
        assert_eq!(parse_sequence("1,2,1,3").unwrap(), vec![1, 2, 1, 3]);
        assert!(parse_sequence("1,-2").is_err());
    }

    proptest::proptest! {
        #[test]
        fn ranges_hit_both_ends(min in -1e3f64..1e3, width in 1e-6f64..1e3, count in 2usize..500) {
            let v = parse_range(&format!("{min}:{}:{count}", min + width)).unwrap();
            proptest::prop_assert_eq!(v.len(), count);
            proptest::prop_assert_eq!(v[0], min);
            proptest::prop_assert!((v[count - 1] - (min + width)).abs() <= 1e-12 * (1.0 + min.abs() + width));
            proptest::prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
