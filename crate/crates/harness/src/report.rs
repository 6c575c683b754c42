use cablebot_core::sim::{EpisodeOutcome, Scenario, Trajectory, WorldConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::model::Fleet;

/// Path steps shorter than this carry no usable heading.
pub const MIN_STEP: f64 = 1e-9;

/// Mean absolute turning angle (radians) between consecutive steps of the
/// object path. Steps shorter than [`MIN_STEP`] are skipped. Zero for a
/// straight path or one with fewer than two usable steps.
pub fn smoothness(traj: &Trajectory) -> f64 {
    let mut prev: Option<cablebot_core::sim::Vec2> = None;
    let mut total = 0.0;
    let mut count = 0usize;
    for w in traj.samples.windows(2) {
        let step = w[1].object.position - w[0].object.position;
        if step.norm() < MIN_STEP {
            continue;
        }
        if let Some(p) = prev {
            total += p.cross(step).atan2(p.dot(step)).abs();
            count += 1;
        }
        prev = Some(step);
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub index: usize,
    pub target_x: f64,
    pub target_y: f64,
    pub success: bool,
    pub settle_time: Option<f64>,
    pub cost: f64,
    pub smoothness: f64,
    pub t_end: f64,
    pub terminated_by: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub scenarios: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_settle_time: Option<f64>,
    pub median_settle_time: Option<f64>,
    pub mean_cost: f64,
    pub mean_smoothness: f64,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

impl EvalSummary {
    pub fn of(rows: &[EvalRow]) -> Self {
        let n = rows.len();
        let settles: Vec<f64> = rows.iter().filter(|r| r.success).filter_map(|r| r.settle_time).collect();
        let successes = rows.iter().filter(|r| r.success).count();
        let mean = |xs: &mut dyn Iterator<Item = f64>| xs.sum::<f64>() / n.max(1) as f64;
        Self {
            scenarios: n,
            successes,
            success_rate: successes as f64 / n.max(1) as f64,
            mean_settle_time: if settles.is_empty() {
                None
            } else {
                Some(settles.iter().sum::<f64>() / settles.len() as f64)
            },
            median_settle_time: median(&settles),
            mean_cost: mean(&mut rows.iter().map(|r| r.cost)),
            mean_smoothness: mean(&mut rows.iter().map(|r| r.smoothness)),
        }
    }
}

/// Run every scenario with `fleet`. Scenarios run in parallel; rows come
/// back in scenario order.
pub fn evaluate(fleet: &Fleet, scenarios: &[Scenario], world: &WorldConfig) -> Result<Vec<EvalRow>> {
    scenarios
        .par_iter()
        .enumerate()
        .map(|(index, sc)| {
            let traj = fleet
                .run(sc, world)
                .map_err(|e| HarnessError::Internal(format!("scenario {index}: {e}")))?;
            let o = EpisodeOutcome::of(&traj, world);
            Ok(EvalRow {
                index,
                target_x: sc.target.x,
                target_y: sc.target.y,
                success: o.success,
                settle_time: o.settle_time,
                cost: o.cost,
                smoothness: smoothness(&traj),
                t_end: o.t_end,
                terminated_by: o.terminated_by.as_str().to_string(),
            })
        })
        .collect()
}

/// CSV text preceded by `# key: value` comment lines.
pub struct CsvDoc {
    comments: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { comments: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.comments.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.comments {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        let internal = |e: csv::Error| HarnessError::Internal(e.to_string());
        w.write_record(&self.header).map_err(internal)?;
        for r in &self.rows {
            w.write_record(r).map_err(internal)?;
        }
        w.into_inner().map_err(|e| HarnessError::Internal(e.to_string()))
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn fmt_bool(b: bool) -> String {
    (b as u8).to_string()
}

pub const EVAL_COLUMNS: [&str; 9] = [
    "index",
    "target_x",
    "target_y",
    "success",
    "settle_time",
    "cost",
    "smoothness",
    "t_end",
    "terminated_by",
];

pub fn eval_rows_csv(doc: &mut CsvDoc, rows: &[EvalRow]) {
    for r in rows {
        doc.row(vec![
            r.index.to_string(),
            r.target_x.to_string(),
            r.target_y.to_string(),
            fmt_bool(r.success),
            fmt_opt(r.settle_time),
            r.cost.to_string(),
            r.smoothness.to_string(),
            r.t_end.to_string(),
            r.terminated_by.clone(),
        ]);
    }
}

pub const COMPARE_COLUMNS: [&str; 11] = [
    "index",
    "target_x",
    "target_y",
    "success_a",
    "success_b",
    "settle_time_a",
    "settle_time_b",
    "smoothness_a",
    "smoothness_b",
    "cost_a",
    "cost_b",
];

pub fn compare_rows_csv(doc: &mut CsvDoc, a: &[EvalRow], b: &[EvalRow]) {
    for (x, y) in a.iter().zip(b) {
        doc.row(vec![
            x.index.to_string(),
            x.target_x.to_string(),
            x.target_y.to_string(),
            fmt_bool(x.success),
            fmt_bool(y.success),
            fmt_opt(x.settle_time),
            fmt_opt(y.settle_time),
            x.smoothness.to_string(),
            y.smoothness.to_string(),
            x.cost.to_string(),
            y.cost.to_string(),
        ]);
    }
}
