//! Trajectory dumps: CSV samples plus a JSON events sidecar.

use std::io::{self, Write};

use super::Trajectory;
use crate::output::{fmt_f64, to_json};
use crate::potential::PotentialModel;

/// Header `t,q1..qd,p1..pd,H`, one row per stored state.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, model: &PotentialModel, out: &mut W) -> io::Result<()> {
    let d = model.dimension();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("q{i}")));
    header.extend((1..=d).map(|i| format!("p{i}")));
    header.push("H".into());
    writeln!(out, "{}", header.join(","))?;
    for x in &traj.states {
        let mut row = vec![fmt_f64(x.t)];
        row.extend(x.q.iter().take(d).map(|v| fmt_f64(*v)));
        row.extend(x.p.iter().take(d).map(|v| fmt_f64(*v)));
        row.push(x.energy(model).map(fmt_f64).unwrap_or_else(|_| "nan".into()));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn events_json(traj: &Trajectory) -> String {
    to_json(&serde_json::json!({ "events": traj.events }), true)
}
