//! Sensing-time tradeoff: longer sensing improves detection but shortens the
//! transmission phase. Finds the best sensing time alone and with users
//! voting k-out-of-K.

use mbsense::perf::{optimize_tau, optimize_tau_fused, optimize_tau_k, SensingTradeoff, ThroughputModel};
use mbsense::sbdetect::ThresholdPolicy;

fn main() -> mbsense::Result<()> {
    let model = ThroughputModel::identical(10, 0.7, 0.1, 0.9);
    let setup = SensingTradeoff::new(model, 0.1, ThresholdPolicy::TargetPd(0.9));
    for tau in [0.002, 0.01, 0.03, 0.06, 0.09] {
        let p = setup.evaluate(tau)?;
        println!("tau {:>5.3}s  P_FA {:.4}  C {:.4e} bps", tau, p.pfa, p.c);
    }
    let best = optimize_tau(&setup)?;
    println!("single user: tau {:.4}s, C {:.4e} bps", best.tau, best.c);
    for users in [2, 8] {
        let or = optimize_tau_fused(&setup, users, 1)?;
        let joint = optimize_tau_k(&setup, users)?;
        println!(
            "K={users}: OR tau {:.4}s; best rule k={} tau {:.4}s C {:.4e} bps",
            or.tau, joint.k, joint.tau, joint.c
        );
    }
    Ok(())
}
