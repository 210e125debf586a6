//! Hard-decision fusion across identical users: closed-form fused ROC for the
//! OR, AND and majority rules, and a soft EGC combiner.

use mbsense::coop::{binomial_tail, invert_binomial_tail, soft_combine, HardRule, SoftWeights};
use mbsense::sbdetect::{AnalyticDetector, EnergyLaw};

fn main() -> mbsense::Result<()> {
    let law = AnalyticDetector::energy(125.0, 0.1).with_law(EnergyLaw::Exact);
    let qfa = 0.1;
    println!("fused detection at Q_FA = {qfa}");
    for rule in [HardRule::Or, HardRule::And, HardRule::Majority] {
        print!("{:>9}", rule.name());
        for users in [1, 2, 4, 8] {
            let k = rule.k(users);
            let lambda = law.threshold_for_pfa(invert_binomial_tail(qfa, users, k)?)?;
            print!("  K={users}: {:.4}", binomial_tail(&law.pd(lambda), users, k));
        }
        println!();
    }

    let stats = [131.0, 118.5, 140.2, 127.9];
    let egc = soft_combine(&stats, &SoftWeights::Egc)?;
    println!("EGC of {stats:?} = {egc:.3}");
    Ok(())
}
