use std::fmt::Write;

use cablebot_core::sim::{Trajectory, WorldConfig};

use crate::error::{HarnessError, Result};
use crate::report::{fmt_bool, CsvDoc};

pub fn trajectory_columns(n: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "bx", "by", "vbx", "vby", "dist"].iter().map(|s| s.to_string()).collect();
    for i in 0..n {
        cols.extend([format!("V_{i}"), format!("ell_{i}"), format!("d_{i}"), format!("taut_{i}")]);
    }
    cols
}

/// One row per recorded sample: object state, then per robot the voltage
/// commanded at that instant, free length, cable distance and slack flag.
pub fn trajectory_csv(doc: &mut CsvDoc, traj: &Trajectory, world: &WorldConfig) -> Result<()> {
    for (k, s) in traj.samples.iter().enumerate() {
        let w = traj.world_at(k, world).map_err(|e| HarnessError::Internal(e.to_string()))?;
        let cables = w.cables(world).map_err(|e| HarnessError::Internal(e.to_string()))?;
        let mut row = vec![
            s.t.to_string(),
            s.object.position.x.to_string(),
            s.object.position.y.to_string(),
            s.object.velocity.x.to_string(),
            s.object.velocity.y.to_string(),
            s.dist.to_string(),
        ];
        for (i, c) in cables.iter().enumerate() {
            row.extend([
                traj.voltages(k)[i].to_string(),
                c.free_length.to_string(),
                c.distance.to_string(),
                fmt_bool(c.is_taut()),
            ]);
        }
        doc.row(row);
    }
    Ok(())
}

const SIZE: f64 = 600.0;
const DOTS: usize = 60;

/// Blue at the start of the path, red at the end.
fn time_color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * u).round() as u8;
    let b = (240.0 - 200.0 * u).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

/// Top-down plot: anchors, the cables at the final frame, the object path
/// and a time-colored dot trail, the target marker.
pub fn trajectory_svg(traj: &Trajectory, world: &WorldConfig) -> Result<String> {
    let last = traj.len() - 1;
    let final_world = traj.world_at(last, world).map_err(|e| HarnessError::Internal(e.to_string()))?;
    let half = world.anchor_radius * 1.15;
    let scale = SIZE / (2.0 * half);
    let px = |x: f64| (x + half) * scale;
    let py = |y: f64| (half - y) * scale;

    let mut s = String::new();
    let w = |s: &mut String, text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    w(
        &mut s,
        format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        ),
    );
    w(&mut s, format!(r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#));
    let obj = final_world.object.position;
    for (i, a) in final_world.anchors.iter().enumerate() {
        w(
            &mut s,
            format!(
                r#"<path class="cable" d="M {:.2} {:.2} L {:.2} {:.2}" stroke="gray" stroke-width="1.5" fill="none"/>"#,
                px(a.x),
                py(a.y),
                px(obj.x),
                py(obj.y)
            ),
        );
        w(
            &mut s,
            format!(
                r#"<circle class="anchor" cx="{:.2}" cy="{:.2}" r="7" fill="black"><title>robot {i}</title></circle>"#,
                px(a.x),
                py(a.y)
            ),
        );
    }
    let mut d = String::new();
    for (k, smp) in traj.samples.iter().enumerate() {
        let p = smp.object.position;
        let _ = write!(d, "{} {:.2} {:.2} ", if k == 0 { "M" } else { "L" }, px(p.x), py(p.y));
    }
    w(
        &mut s,
        format!(
            r#"<path class="trajectory" d="{}" stroke="steelblue" stroke-width="1" fill="none"/>"#,
            d.trim_end()
        ),
    );
    let stride = (traj.len() / DOTS).max(1);
    for k in (0..traj.len()).step_by(stride) {
        let p = traj.samples[k].object.position;
        w(
            &mut s,
            format!(
                r#"<circle class="time" cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                px(p.x),
                py(p.y),
                time_color(k as f64 / last.max(1) as f64)
            ),
        );
    }
    let t = traj.target;
    w(
        &mut s,
        format!(
            r#"<circle class="target" cx="{:.2}" cy="{:.2}" r="{:.2}" stroke="green" stroke-width="2" fill="none"/>"#,
            px(t.x),
            py(t.y),
            (world.success_eps * scale).max(3.0)
        ),
    );
    w(&mut s, "</svg>".to_string());
    Ok(s)
}
