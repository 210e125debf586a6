//! Band-edge estimation from a noisy PSD with the multiscale wavelet product,
//! compared with the single-scale modulus maxima.

use mbsense::rng::tag;
use mbsense::perf::edge_metrics;
use mbsense::scenario::synthesize_wideband_psd;
use mbsense::widebandest::{estimate_bands, wmm_edges, wmp_edges, WaveletConfig};
use mbsense::SeedTree;

fn main() -> mbsense::Result<()> {
    let nfft = 1024;
    let truth = [120, 260, 300, 520, 700, 860];
    let levels = [0.2, 4.0, 12.0, 0.2, 6.0, 2.5, 0.2];
    let mut rng = SeedTree::new(5).stream(&[tag::SCENE]);
    let mut psd = synthesize_wideband_psd(&truth, &levels, nfft, 0.02, &mut rng)?.psd;
    psd[420] += 15.0;

    let single = WaveletConfig::new(1, nfft);
    let multi = WaveletConfig::new(3, nfft);
    let raw = wmm_edges(&psd, &single)?;
    let found = wmp_edges(&psd, &multi)?;
    println!("true edges      {truth:?}");
    println!("J=1 maxima      {raw:?}");
    println!("J=3 product     {found:?}");
    let strict = WaveletConfig {
        delta: Some(1e-3),
        ..multi.clone()
    };
    let found = wmp_edges(&psd, &strict)?;
    println!("J=3, delta 1e-3 {found:?}");
    let m = edge_metrics(&truth, &found, nfft)?;
    println!("P_ME {:.3}  P_FE {:.5}  P_E {:.5}", m.p_me, m.p_fe, m.p_e);
    for b in estimate_bands(&found, nfft)? {
        let mean = psd[b.clone()].iter().sum::<f64>() / b.len() as f64;
        println!("  band {:>4}..{:<4} mean level {mean:.2}", b.start, b.end);
    }
    Ok(())
}
