//! Water-filling transmit power over the bands judged idle, then a check of
//! power and interference limits over simulated allocations.

use mbsense::perf::{check_constraints, waterfill, PowerConstraintSet, WaterfillMode};

fn main() -> mbsense::Result<()> {
    let gains = [1.2, 0.3, 0.8, 2.0, 0.05];
    let avg = waterfill(&gains, 1.0, 3.0, WaterfillMode::AvgPower, None)?;
    println!("all bands:  level {:.3}, powers {:.3?}", avg.level, avg.powers);
    let idle = [true, true, false, false, true];
    let peak = waterfill(&gains, 1.0, 3.0, WaterfillMode::PeakPower, Some(&idle))?;
    println!("idle only:  level {:.3}, powers {:.3?}", peak.level, peak.powers);

    let draws = vec![avg.powers.clone(), peak.powers.clone()];
    let limits = PowerConstraintSet {
        avg_power: 3.0,
        peak_power: 2.5,
        avg_interference: 1.0,
        peak_interference: 2.0,
        users_per_band: Vec::new(),
    };
    let report = check_constraints(&draws, &limits)?;
    println!("peak power {:.3} (bound {}), all limits met: {}", report.peak_power.value, report.peak_power.bound, report.all_passed());
    Ok(())
}
