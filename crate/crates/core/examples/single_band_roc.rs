//! Energy and coherent detection at -15 dB: closed-form ROC next to a
//! Monte-Carlo estimate from simulated frames.

use mbsense::perf::{roc_analytic, roc_monte_carlo};
use mbsense::sbdetect::{AnalyticDetector, Detector, StatisticSpec};
use mbsense::{FrameSpec, PuSignalModel, SampleDomain, SeedTree};

fn main() -> mbsense::Result<()> {
    let gamma = 10f64.powf(-1.5);
    let n = 500;
    let grid = [0.01, 0.05, 0.1, 0.2, 0.5];
    let seeds = SeedTree::new(1);

    let energy = AnalyticDetector::energy(n as f64, gamma);
    let coherent = AnalyticDetector::coherent(n as f64, gamma).with_domain(SampleDomain::Real);
    let frame = FrameSpec::new(PuSignalModel::Gaussian, gamma, 1.0, n);
    let det = Detector::prepare(&StatisticSpec::Energy, None, &frame)?;
    let thresholds: Vec<f64> = grid.iter().map(|&p| energy.threshold_for_pfa(p)).collect::<Result<_, _>>()?;
    let mc = roc_monte_carlo(&det, &frame, &thresholds, 20_000, &seeds)?;

    let e = roc_analytic(&energy, &grid)?;
    let c = roc_analytic(&coherent, &grid)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "pfa", "energy", "energy-mc", "mc-pfa", "coherent");
    for ((a, m), b) in e.points.iter().zip(&mc.points).zip(&c.points) {
        println!("{:>6.2} {:>10.4} {:>10.4} {:>10.4} {:>10.4}", a.pfa, a.pd, m.pd, m.pfa, b.pd);
    }
    Ok(())
}
