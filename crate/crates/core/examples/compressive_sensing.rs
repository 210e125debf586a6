//! Sub-Nyquist spectrum recovery: a spectrum with four active DFT bins,
//! observed through 64 random projections of 256 samples, recovered by OMP.

use mbsense::rng::tag;
use mbsense::widebandest::cs::sparse_coefficients;
use mbsense::widebandest::{cs_measure, dft_basis, measurement_matrix, omp_recover, recovery_rate, MeasurementKind};
use mbsense::SeedTree;

fn main() -> mbsense::Result<()> {
    let (n, l, o) = (256, 4, 64);
    let seeds = SeedTree::new(11);
    let psi = dft_basis(n);
    let phi = measurement_matrix(&MeasurementKind::Gaussian, o, n, &mut seeds.stream(&[tag::MEASUREMENT]))?;
    let (mut support, s) = sparse_coefficients(n, l, &mut seeds.stream(&[tag::SIGNAL]))?;
    support.sort_unstable();
    let z = cs_measure(&(&psi * &s), &phi)?;
    let r = omp_recover(&z, &phi, &psi, l, 1e-10)?;
    let mut got = r.support.clone();
    got.sort_unstable();
    println!("true support {support:?}, recovered {got:?} in {} iterations", r.iterations);
    println!("coefficient error {:.2e}", (&r.coefficients - &s).norm());

    println!("exact recovery rate over 50 draws (N = 128):");
    for kind in [MeasurementKind::Gaussian, MeasurementKind::Bernoulli, MeasurementKind::Aic] {
        let rates: Vec<String> = [16, 32, 64]
            .iter()
            .map(|&o| recovery_rate(128, 6, o, &kind, 50, &seeds).map(|r| format!("O={o}: {r:.2}")))
            .collect::<Result<_, _>>()?;
        println!("  {kind:?}: {}", rates.join("  "));
    }
    Ok(())
}
