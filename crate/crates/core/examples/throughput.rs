//! Secondary throughput over ten 6 MHz bands: interweave versus hybrid access
//! as more bands are accessed, and the best number of bands to use.

use mbsense::perf::{avg_throughput, bandwidth_sweep, AccessMode, ThroughputModel};
use mbsense::special::db_to_linear;

fn main() -> mbsense::Result<()> {
    let mut model = ThroughputModel::identical(10, 0.7, 0.1, 0.9);
    model.interference_w = db_to_linear(-20.0);
    println!("{:>3} {:>14} {:>14}", "l", "interweave", "hybrid");
    for l in [1, 2, 5, 10] {
        let mut rate = |mode| {
            model.mode = mode;
            avg_throughput(&model, l)
        };
        println!("{l:>3} {:>14.4e} {:>14.4e}", rate(AccessMode::Interweave)?, rate(AccessMode::Hybrid)?);
    }

    model.mode = AccessMode::Interweave;
    model.pfa = (0..10).map(|m| 0.05 + 0.05 * m as f64).collect();
    let (points, best) = bandwidth_sweep(&model, &(1..=10).collect::<Vec<_>>())?;
    println!("with rising per-band false alarms the best l is {}", points[best].l);
    Ok(())
}
