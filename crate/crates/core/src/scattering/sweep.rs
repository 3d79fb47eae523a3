use std::io::{self, Write};

use super::{chart_u, ScatterRecord, ScatterStatus};
use crate::geometry::angle_of;
use crate::output::fmt_f64;

fn status_name(s: ScatterStatus) -> &'static str {
    match s {
        ScatterStatus::Scattered => "scattered",
        ScatterStatus::TrappedTimeout => "trapped_timeout",
        ScatterStatus::CollisionRegularized => "collision_regularized",
        ScatterStatus::Failed => "failed",
    }
}

/// Sweep table with planar angles and signed impact parameters.
pub fn write_sweep_csv<'a, W: Write>(
    records: impl IntoIterator<Item = &'a ScatterRecord>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "E,theta_angle,b,u,theta_out_angle,b_out,status,min_radius,flight_time")?;
    for r in records {
        let b = r.b_in_scalar();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.energy),
            fmt_f64(angle_of(&r.theta_in)),
            fmt_f64(b),
            fmt_f64(chart_u(b)),
            fmt_f64(angle_of(&r.theta_out)),
            fmt_f64(r.b_out_scalar()),
            status_name(r.status),
            fmt_f64(r.diagnostics.min_radius),
            fmt_f64(r.diagnostics.flight_time),
        )?;
    }
    Ok(())
}
