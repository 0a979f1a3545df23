//! Four-phase peristaltic gait: schedules, anchoring conditions, pressure
//! loops and the coupled locomotion run.

mod anchoring;
mod locomotion;
mod pid;
mod schedule;

pub use anchoring::{
    check_anchoring, friction_for_pressure, schedule_anchoring, schedule_to_plant_inputs, AnchorDirection,
    AnchoringCheck, ANCHOR_THRESHOLD_PSI,
};
pub use locomotion::{
    simulate_gait, GaitMetrics, GaitOptions, GaitRun, PressureTrace, DEFAULT_CONTACT_TOLERANCE_PSI,
    PRESSURE_CSV_HEADER,
};
pub use pid::{
    pid_track, pid_track_with_window, tracking_rmse, tune_gains, LoopGains, LoopTrace, PidController, PidGains,
    PressureLoop, PressureProfile, ValvePlant, DEFAULT_SETTLING_WINDOW_S,
};
pub use schedule::{Actuator, GaitPhase, GaitSchedule};
