//! Sampling partitions and trajectory records.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{norm, StateVector};
use crate::transforms::ExtendedControl;

/// Partition `0 = t_0 < t_1 < ...` of a time interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Domain("partition needs at least two nodes".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain("partition must start at t = 0".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("partition".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("partition times must be strictly increasing".into()));
        }
        Ok(Partition { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("partition is non-empty")
    }

    /// Largest gap between consecutive nodes.
    pub fn diameter(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// A control value held on one interval of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ControlValue {
    Original(Vec<f64>),
    Extended(ExtendedControl),
}

impl ControlValue {
    /// `|u|` for original controls, `|w|` for extended ones.
    pub fn magnitude(&self) -> f64 {
        match self {
            ControlValue::Original(u) => norm(u),
            ControlValue::Extended(wc) => norm(wc.w()),
        }
    }

    pub fn as_original(&self) -> Option<&[f64]> {
        match self {
            ControlValue::Original(u) => Some(u),
            ControlValue::Extended(_) => None,
        }
    }

    pub fn as_extended(&self) -> Option<&ExtendedControl> {
        match self {
            ControlValue::Extended(wc) => Some(wc),
            ControlValue::Original(_) => None,
        }
    }

    fn csv_fields(&self) -> Vec<f64> {
        match self {
            ControlValue::Original(u) => u.clone(),
            ControlValue::Extended(wc) => {
                let mut v = vec![wc.w0()];
                v.extend_from_slice(wc.w());
                v
            }
        }
    }
}

/// How a simulated trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "time")]
pub enum Status {
    /// The distance to the target fell below the target tolerance at this time.
    TargetReached(f64),
    /// The state escaped (norm bound or step collapse); the time is the last
    /// valid one.
    BlowUp(f64),
    HorizonEnd,
}

impl Status {
    pub fn describe(&self) -> String {
        match self {
            Status::TargetReached(t) => format!("TargetReached t={t}"),
            Status::BlowUp(t) => format!("BlowUp t={t}"),
            Status::HorizonEnd => "HorizonEnd".to_string(),
        }
    }
}

/// Recorded trajectory: states and distances at increasing times, and the
/// control held on each interval `[times[k], times[k+1])`.
///
/// `is_node[k]` marks samples that are partition nodes (the remaining samples
/// are integrator sub-steps). After `TargetReached` the state is frozen at
/// `frozen_point`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub distances: Vec<f64>,
    pub controls: Vec<ControlValue>,
    pub is_node: Vec<bool>,
    pub status: Status,
    pub frozen_point: Option<StateVector>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Indices of partition nodes.
    pub fn node_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_node[k]).collect()
    }

    /// State at time `t`: the recorded sample at or before `t`, or the frozen
    /// point once the target has been reached.
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        if let (Status::TargetReached(tx), Some(p)) = (self.status, &self.frozen_point) {
            if t >= tx {
                return Some(p);
            }
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            None
        } else {
            Some(&self.states[k - 1])
        }
    }

    /// Writes the CSV form: header `t,x_1..x_n,<controls>,d_to_target`, one row
    /// per sample and a trailing `# status:` comment. Control columns hold the
    /// value applied on `[t_k, t_{k+1})`; the last row repeats the last held
    /// control.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        match self.controls.first() {
            Some(ControlValue::Original(u)) => {
                header.extend((1..=u.len()).map(|i| format!("u_{i}")));
            }
            Some(ControlValue::Extended(wc)) => {
                header.push("w0".into());
                header.extend((1..=wc.w().len()).map(|i| format!("w_{i}")));
            }
            None => {}
        }
        header.push("d_to_target".into());
        writeln!(out, "{}", header.join(","))?;

        for k in 0..self.len() {
            let mut row = vec![self.times[k]];
            row.extend_from_slice(&self.states[k]);
            if let Some(c) = self.controls.get(k).or(self.controls.last()) {
                row.extend(c.csv_fields());
            }
            row.push(self.distances[k]);
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        writeln!(out, "# status: {}", self.status.describe())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
