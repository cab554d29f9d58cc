//! Recorded simulation output and its tabular export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::Measurements;
use crate::error::Result;
use crate::plant::{Saturation, StateVec};

/// Time series sampled at every controller tick.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub state: Vec<StateVec>,
    /// Sensor readings, noisy when noise is enabled.
    pub meas: Vec<Measurements>,
    /// Desired slave pressure (Pa).
    pub p_desired: Vec<f64>,
    /// Reference joint torque (N·m).
    pub torque_ref: Vec<f64>,
    pub current: Vec<f64>,
    /// Clutch force commanded to the plant (N).
    pub force_cmd: Vec<f64>,
    pub force_request: Vec<f64>,
    pub saturation: Vec<Saturation>,
    /// True master pressure (Pa).
    pub p_master: Vec<f64>,
    /// True slave pressure (Pa).
    pub p_slave: Vec<f64>,
    /// Delivered joint torque (N·m).
    pub torque: Vec<f64>,
    /// Controller internal state; empty for stateless controllers.
    pub internal: Vec<[f64; 8]>,
}

impl SimTrace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            time: Vec::with_capacity(n),
            state: Vec::with_capacity(n),
            meas: Vec::with_capacity(n),
            p_desired: Vec::with_capacity(n),
            torque_ref: Vec::with_capacity(n),
            current: Vec::with_capacity(n),
            force_cmd: Vec::with_capacity(n),
            force_request: Vec::with_capacity(n),
            saturation: Vec::with_capacity(n),
            p_master: Vec::with_capacity(n),
            p_slave: Vec::with_capacity(n),
            torque: Vec::with_capacity(n),
            internal: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Column of one plant state.
    pub fn state_series(&self, index: usize) -> Vec<f64> {
        self.state.iter().map(|x| x[index]).collect()
    }

    /// Samples taken at or after `t_from`.
    pub fn window_start(&self, t_from: f64) -> usize {
        self.time.partition_point(|&t| t < t_from - 1e-12)
    }

    /// All series have the trace length and hold finite values.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        let lens = [
            self.state.len(),
            self.meas.len(),
            self.p_desired.len(),
            self.torque_ref.len(),
            self.current.len(),
            self.force_cmd.len(),
            self.force_request.len(),
            self.saturation.len(),
            self.p_master.len(),
            self.p_slave.len(),
            self.torque.len(),
        ];
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        lens.iter().all(|&l| l == n)
            && (self.internal.is_empty() || self.internal.len() == n)
            && finite(&self.time)
            && finite(&self.p_master)
            && finite(&self.p_slave)
            && finite(&self.torque)
            && finite(&self.current)
            && self.state.iter().all(|x| x.iter().all(|v| v.is_finite()))
    }

    /// Writes one row per sample with a unit-annotated header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut head: Vec<String> = [
            "t_s",
            "x1_m",
            "v1_m_per_s",
            "x2_m",
            "v2_m_per_s",
            "x3_m",
            "v3_m_per_s",
            "f_mr_n",
            "meas_x1_m",
            "meas_v1_m_per_s",
            "meas_x3_m",
            "meas_p_master_pa",
            "meas_p_slave_pa",
            "p_desired_pa",
            "torque_ref_nm",
            "current_a",
            "force_cmd_n",
            "force_request_n",
            "saturation",
            "p_master_pa",
            "p_slave_pa",
            "torque_nm",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if !self.internal.is_empty() {
            head.extend((0..8).map(|i| format!("internal_{i}")));
        }
        w.write_record(&head)?;
        for k in 0..self.len() {
            let m = &self.meas[k];
            let sat = match self.saturation[k] {
                Saturation::None => "none",
                Saturation::Low => "low",
                Saturation::High => "high",
            };
            let mut row: Vec<String> = std::iter::once(self.time[k])
                .chain(self.state[k])
                .chain([m.x1, m.v1, m.x3, m.p_master, m.p_slave])
                .chain([
                    self.p_desired[k],
                    self.torque_ref[k],
                    self.current[k],
                    self.force_cmd[k],
                    self.force_request[k],
                ])
                .map(|v| format!("{v:e}"))
                .collect();
            row.push(sat.to_string());
            row.extend([self.p_master[k], self.p_slave[k], self.torque[k]].map(|v| format!("{v:e}")));
            if let Some(int) = self.internal.get(k) {
                row.extend(int.iter().map(|v| format!("{v:e}")));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
