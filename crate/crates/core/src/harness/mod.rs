//! Model comparison, release-aware nowcasting, map export and run
//! configuration.

pub mod config;
mod evaluate;
mod export;
pub mod metrics;
mod schedule;

pub use config::RunConfig;
pub use evaluate::{
    evaluate_models, forecast_ar, forecast_rf, holdout_actuals, mfagl_aggregate, score_models, BaselineConfig,
    EvalConfig, Evaluation, EvaluationReport, ModelScore, MODEL_AR, MODEL_MFAGL, MODEL_RF,
};
pub use export::{choropleth_geojson, export_choropleth, read_geometries, ChoroplethExport};
pub use schedule::{schedule_run, Availability, LabelAccess, ReleaseSchedule, ReleasedLabels, ScheduleConfig, ScheduleRun};
