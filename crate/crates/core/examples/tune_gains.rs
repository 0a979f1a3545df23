//! Re-derives the default PID gains by coordinate search on three strides
//! of the prototype schedule.

use peristalsis_core::gait::{tune_gains, Actuator, GaitSchedule, PidGains, PressureProfile, ValvePlant};

fn main() -> peristalsis_core::Result<()> {
    let sched = GaitSchedule::default();
    let plant = ValvePlant::default();
    let start = PidGains::new(1.0, 5.0, 0.01);
    for a in Actuator::ALL {
        let profile = PressureProfile::from_schedule(&sched, a, 3);
        let (g, rmse) = tune_gains(&profile, &plant, 1e-3, start)?;
        println!("{:<8} kp={:.6} ki={:.6} kd={:.6} rmse={rmse:.3e}", a.name(), g.kp, g.ki, g.kd);
    }
    Ok(())
}
