//! Metric extraction from traces and linear models.

pub mod deviation;
pub mod frf;
pub mod friction_id;
pub mod report;
pub mod ripple;
pub mod step;

pub use deviation::torque_deviation;
pub use frf::{
    bandwidth, default_dwell_grid, fit_sinusoid, frf_from_sine_dwell, unwrap_phase_deg, Bandwidth, BandwidthCriterion,
    DwellRecord, FrfPoint, SineFit,
};
pub use friction_id::{identify_friction, FrictionFit};
pub use report::{comparison_report, published_values, Check, ComparisonReport, Metrics, ReportRow, Verdict};
pub use ripple::{moving_average, reversal_jump, ripple_amplitude};
pub use step::{step_metrics, StepMetrics};
