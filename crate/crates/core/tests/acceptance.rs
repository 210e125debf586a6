//! End-to-end acceptance checks, one report line per criterion.

use std::time::Instant;

use mbsense::coop::{assign_uniform, binomial_tail, enumerate_tail, sampling_cost};
use mbsense::experiment::{execute, preset, Cell, Table};
use mbsense::perf::metrics::{any_band_of, bod, boe, edge_metrics, mean_of, weighted_of};
use mbsense::perf::metrics::edge_metrics_from_counts;
use mbsense::perf::{avg_throughput, optimize_tau, waterfill, AccessMode, WaterfillMode};
use mbsense::rng::tag;
use mbsense::sbdetect::{empirical_threshold, simulate_statistics, AnalyticDetector, Detector, StatisticSpec};
use mbsense::scenario::{random_edge_layout, synthesize_wideband_psd};
use mbsense::special::db_to_linear;
use mbsense::widebandest::cs::{sparse_coefficients, CMatrix, CVector};
use mbsense::widebandest::{
    cs_measure, dft_basis, measurement_matrix, omp_recover, recovery_rate, wmm_edges, wmp_edges, MeasurementKind,
    WaveletConfig,
};
use mbsense::{FrameSpec, Hypothesis, PuSignalModel, SampleDomain, SeedTree};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rate_at(stats: &[f64], lambda: f64) -> f64 {
    stats.iter().filter(|&&s| s >= lambda).count() as f64 / stats.len() as f64
}

fn float(c: &Cell) -> f64 {
    match c {
        Cell::Float(v) => *v,
        Cell::Int(i) => *i as f64,
        Cell::Str(s) => panic!("expected a number, got {s}"),
    }
}

fn text(c: &Cell) -> &str {
    match c {
        Cell::Str(s) => s,
        _ => panic!("expected text"),
    }
}

fn table<'a>(tables: &'a [Table], name: &str) -> &'a Table {
    tables.iter().find(|t| t.name == name).expect("table present")
}

fn detection_roc() -> Outcome {
    let start = Instant::now();
    let gamma = 10f64.powf(-1.5);
    let grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let energy = AnalyticDetector::energy(500.0, gamma);
    let coherent = AnalyticDetector::coherent(500.0, gamma).with_domain(SampleDomain::Real);
    let dominates = grid.iter().all(|&p| {
        let pd_c = coherent.pd(coherent.threshold_for_pfa(p).unwrap());
        let pd_e = energy.pd(energy.threshold_for_pfa(p).unwrap());
        pd_c > pd_e
    });

    let seeds = SeedTree::new(8);
    let trials = 100_000;
    let simulate = |i: u64, frame: &FrameSpec, spec: StatisticSpec, n: u64| {
        let det = Detector::prepare(&spec, None, frame).unwrap();
        let s = seeds.child(&[i]);
        (
            simulate_statistics(&det, frame, Hypothesis::Idle, n, &s).unwrap(),
            simulate_statistics(&det, frame, Hypothesis::Occupied, n, &s).unwrap(),
        )
    };
    let e_frame = FrameSpec::new(PuSignalModel::Gaussian, gamma, 1.0, 500);
    let c_frame = FrameSpec::new(PuSignalModel::KnownWaveform { template_seed: 8 }, gamma, 1.0, 500)
        .with_domain(SampleDomain::Real);
    let cp_model = PuSignalModel::OfdmCp {
        useful_len: 64,
        cp_len: 16,
    };
    let cp_frame = FrameSpec::new(cp_model, gamma, 1.0, 40_000);
    let (e0, e1) = simulate(0, &e_frame, StatisticSpec::Energy, trials);
    let (c0, c1) = simulate(1, &c_frame, StatisticSpec::Coherent, trials);
    let cp_spec = StatisticSpec::CpAutocorr {
        useful_len: 64,
        cp_len: 16,
    };
    let (p0, p1) = simulate(2, &cp_frame, cp_spec, 2_000);

    let pd_e = rate_at(&e1, energy.threshold_for_pfa(0.1).unwrap());
    let pd_c = rate_at(&c1, coherent.threshold_for_pfa(0.1).unwrap());
    let between = grid
        .iter()
        .filter(|&&p| {
            let at = |h0: &[f64], h1: &[f64]| rate_at(h1, empirical_threshold(h0, p).unwrap());
            let (e, c, cp) = (at(&e0, &e1), at(&c0, &c1), at(&p0, &p1));
            e < cp && cp < c
        })
        .count();
    let secs = start.elapsed().as_secs_f64();
    let pass =
        dominates && (pd_c - 0.9965).abs() <= 1e-3 && (pd_e - 0.289).abs() <= 5e-3 && between >= 3 && secs < 60.0;
    outcome(
        pass,
        format!(
            "analytic dominance {dominates}, MC P_D coherent {pd_c:.4} energy {pd_e:.4}, \
             CP between at {between}/{} points, {secs:.1}s",
            grid.len()
        ),
    )
}

fn cooperative_roc() -> Outcome {
    let out = execute(&preset("fig9").unwrap()).unwrap();
    let t = table(&out.tables, "coop-roc");
    // (rule, K, qfa) -> qd
    let lookup = |rule: &str, users: usize, qfa: f64| {
        t.rows
            .iter()
            .find(|r| text(&r[0]) == rule && float(&r[2]) as usize == users && (float(&r[3]) - qfa).abs() < 1e-9)
            .map(|r| float(&r[4]))
    };
    let grid = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    let users = [1, 2, 4, 8];
    let increasing = grid.iter().all(|&q| {
        let v: Vec<f64> = users.iter().map(|&k| lookup("or", k, q).unwrap()).collect();
        v.windows(2).all(|w| w[1] > w[0])
    });
    let and_wins: Vec<String> = grid
        .iter()
        .flat_map(|&q| users.iter().map(move |&k| (q, k)))
        .filter(|&(q, k)| lookup("or", k, q).unwrap() < lookup("and", k, q).unwrap())
        .map(|(q, k)| format!("K={k}@{q}"))
        .collect();
    let or_over_and = and_wins.is_empty();
    let mut worst: f64 = 0.0;
    for rule in ["or", "and", "majority"] {
        let closed: Vec<_> = t.rows.iter().filter(|r| text(&r[0]) == rule).collect();
        let mc: Vec<_> = t.rows.iter().filter(|r| text(&r[0]) == format!("{rule}-mc")).collect();
        for (a, b) in closed.iter().zip(&mc) {
            worst = worst.max((float(&a[3]) - float(&b[3])).abs());
            worst = worst.max((float(&a[4]) - float(&b[4])).abs());
        }
    }
    outcome(
        increasing && or_over_and && worst <= 0.01,
        format!(
            "OR increasing in K {increasing}, OR >= AND {or_over_and} (AND ahead at {and_wins:?}), \
             max |MC - closed| {worst:.4}"
        ),
    )
}

fn throughput_orderings() -> Outcome {
    let base = preset("fig10").unwrap().throughput.unwrap().model;
    let rate = |mode, pfa: f64, l| {
        let mut m = base.clone();
        m.mode = mode;
        m.pfa = vec![pfa; m.num_bands()];
        avg_throughput(&m, l).unwrap()
    };
    let ls = [1, 5, 10];
    let mut increasing = true;
    let mut hybrid_wins = true;
    for mode in [AccessMode::Interweave, AccessMode::Hybrid] {
        increasing &= ls.windows(2).all(|w| rate(mode, 0.1, w[1]) > rate(mode, 0.1, w[0]));
    }
    for &l in &ls {
        hybrid_wins &= rate(AccessMode::Hybrid, 0.1, l) > rate(AccessMode::Interweave, 0.1, l);
    }
    let tighter = ls
        .iter()
        .all(|&l| rate(AccessMode::Interweave, 0.05, l) > rate(AccessMode::Interweave, 0.2, l));
    let interference_ok = (base.interference_w - db_to_linear(-20.0)).abs() < 1e-15;
    outcome(
        increasing && hybrid_wins && tighter && interference_ok,
        format!(
            "R increasing in l {increasing}, hybrid > interweave {hybrid_wins}, \
             P_FA 0.05 beats 0.2 {tighter}, R_hybrid(10) {:.4e} bps",
            rate(AccessMode::Hybrid, 0.1, 10)
        ),
    )
}

fn sensing_time() -> Outcome {
    let start = Instant::now();
    let setup = preset("fig12").unwrap().tradeoff.unwrap().setup;
    let grid = setup.grid();
    let points: Vec<_> = grid.iter().map(|&t| setup.evaluate(t).unwrap()).collect();
    let best = (0..points.len()).max_by(|&a, &b| points[a].c.total_cmp(&points[b].c)).unwrap();
    let interior = best > 0 && best + 1 < points.len();
    let pd_monotone = points.windows(2).all(|w| w[1].pd >= w[0].pd - 1e-12);
    let opt = optimize_tau(&setup).unwrap();
    let step = setup.model.frame_s / 201.0;
    let close = (opt.tau - grid[best]).abs() <= step && opt.c >= points[best].c - 1e-9;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        interior && pd_monotone && close && secs < 30.0,
        format!(
            "grid argmax tau {:.5}s (interior {interior}), P_D non-decreasing {pd_monotone}, \
             optimize_tau {:.5}s within one step {close}, {secs:.3}s",
            grid[best], opt.tau
        ),
    )
}

fn sampling_costs() -> Outcome {
    let start = Instant::now();
    let b = 6_000_000u64;
    let cost = |k: usize, m: usize, d: usize| sampling_cost(&assign_uniform(k, m, d).unwrap(), b).unwrap().max;
    let mut formula = true;
    let mut in_d = true;
    let mut in_k = true;
    let mut full = true;
    for m in 1..=20usize {
        for k in 1..=20usize {
            for d in 1..=k {
                formula &= cost(k, m, d) == 2 * b * (m * d).div_ceil(k) as u64;
                if d > 1 {
                    in_d &= cost(k, m, d) >= cost(k, m, d - 1);
                }
                if k > d {
                    in_k &= cost(k, m, d) <= cost(k - 1, m, d);
                }
            }
            full &= cost(k, m, k) == 2 * b * m as u64;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        formula && in_d && in_k && full && secs < 1.0,
        format!(
            "2B*ceil(Md/K) {formula}, non-decreasing in d {in_d}, non-increasing in K {in_k}, \
             full diversity 2BM {full}, {secs:.3}s"
        ),
    )
}

fn fusion_oracle() -> Outcome {
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let probs = [r(1, 10), r(7, 10), r(9, 10), r(1, 3), r(123, 1000)];
    let mut cases = 0;
    let mut all = true;
    for total in 1..=10usize {
        for k in 0..=total {
            for p in &probs {
                let closed = binomial_tail(p, total, k);
                let enumerated = enumerate_tail(&vec![p.clone(); total], k);
                all &= closed == enumerated;
                cases += 1;
            }
        }
    }
    outcome(all, format!("{cases} (K, k, p) cases equal in exact rationals"))
}

fn wavelet_edges() -> Outcome {
    let nfft = 1024;
    let cfg = WaveletConfig::new(3, nfft);
    let margin = 6 * 8 + 16;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut misses = 0.0;
    let mut false_edges = 0.0;
    for _ in 0..100 {
        let (truth, levels) = random_edge_layout(nfft, margin, 16, 120, &mut rng).unwrap();
        let psd = synthesize_wideband_psd(&truth, &levels, nfft, 0.0, &mut rng).unwrap().psd;
        let found = wmp_edges(&psd, &cfg).unwrap();
        let m = edge_metrics(&truth, &found, nfft).unwrap();
        misses += m.p_me;
        false_edges += m.p_fe;
    }
    let mut psd = synthesize_wideband_psd(&[150, 300, 600], &[1.0, 6.0, 1.0, 1.6], nfft, 0.0, &mut rng)
        .unwrap()
        .psd;
    psd[450] += 10.0;
    let spike = |edges: &[usize]| edges.iter().any(|e| e.abs_diff(450) <= 10);
    let wmm_reports = spike(&wmm_edges(&psd, &cfg).unwrap());
    let thresholded = WaveletConfig {
        delta: Some(1e-3),
        ..cfg.clone()
    };
    let kept = wmp_edges(&psd, &thresholded).unwrap();
    let removed = !spike(&kept);
    outcome(
        misses == 0.0 && false_edges == 0.0 && wmm_reports && removed,
        format!(
            "sum P_ME {misses}, sum P_FE {false_edges} over 100 scenes; impulse in WMM {wmm_reports}, \
             removed by threshold {removed} (kept {kept:?})"
        ),
    )
}

fn least_squares_on_support(z: &CVector, a: &CMatrix, support: &[usize]) -> CVector {
    let cols: Vec<_> = support.iter().map(|&j| a.column(j).into_owned()).collect();
    let sub = CMatrix::from_columns(&cols);
    let gram: DMatrix<Complex64> = sub.adjoint() * &sub;
    let coef = gram.lu().solve(&(sub.adjoint() * z)).expect("full rank");
    let mut full = CVector::zeros(a.ncols());
    for (i, &j) in support.iter().enumerate() {
        full[j] = coef[i];
    }
    full
}

fn compressive_sensing() -> Outcome {
    let (n, l, o) = (256, 4, 64);
    let seeds = SeedTree::new(256);
    let psi = dft_basis(n);
    let mut exact = 0;
    for t in 0..100u64 {
        let phi = measurement_matrix(&MeasurementKind::Gaussian, o, n, &mut seeds.stream(&[tag::MEASUREMENT, t])).unwrap();
        let (mut support, s) = sparse_coefficients(n, l, &mut seeds.stream(&[tag::SIGNAL, t])).unwrap();
        support.sort_unstable();
        let z = cs_measure(&(&psi * &s), &phi).unwrap();
        let oracle = least_squares_on_support(&z, &(&phi * &psi), &support);
        if let Ok(r) = omp_recover(&z, &phi, &psi, l, 1e-10) {
            let mut got = r.support.clone();
            got.sort_unstable();
            if got == support && (&r.coefficients - &oracle).norm() <= 1e-6 * oracle.norm() {
                exact += 1;
            }
        }
    }
    let same = recovery_rate(n, l, o, &MeasurementKind::Gaussian, 100, &seeds).unwrap();

    let grid_l = [2, 6, 10, 14, 18];
    let grid_o = [24, 36, 48, 60, 72];
    let grid_seeds = SeedTree::new(128);
    let rates: Vec<Vec<f64>> = grid_l
        .iter()
        .map(|&l| {
            grid_o
                .iter()
                .map(|&o| recovery_rate(128, l, o, &MeasurementKind::Gaussian, 40, &grid_seeds).unwrap())
                .collect()
        })
        .collect();
    let in_o = rates.iter().all(|row| row.windows(2).all(|w| w[1] >= w[0]));
    let in_l = (1..grid_l.len()).all(|i| (0..grid_o.len()).all(|j| rates[i][j] <= rates[i - 1][j]));
    outcome(
        exact >= 99 && in_o && in_l,
        format!(
            "{exact}/100 match least squares on the true support (library rate {same:.2}), \
             monotone in O {in_o}, in L {in_l}"
        ),
    )
}

fn metric_identities() -> Outcome {
    type Q = Ratio<i128>;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut weighted_ok = true;
    let mut any_ok = true;
    for m in 1..=10usize {
        let pd: Vec<Q> = (0..m).map(|_| Q::new(rng.gen_range(0..=20), 20)).collect();
        let w = vec![Q::new(1, m as i128); m];
        weighted_ok &= weighted_of(&pd, &w) == mean_of(&pd);
        let mut enumerated = Q::from_integer(0);
        for mask in 1u32..(1 << m) {
            enumerated += (0..m).fold(Q::from_integer(1), |acc, i| {
                acc * if mask >> i & 1 == 1 { pd[i] } else { Q::from_integer(1) - pd[i] }
            });
        }
        any_ok &= any_band_of(&pd) == enumerated;
    }
    let r = |n: i64| Ratio::from_integer(n);
    let actual = bod(&[true, false, true], &[r(4), r(0), r(1)]).unwrap();
    let est = bod(&[true, false, false], &[r(4), r(0), r(1)]).unwrap();
    let boe_ok = boe(&actual, &est).unwrap() == Ratio::new(1, 17);
    let e = edge_metrics_from_counts(4, 3, 5, 1024).unwrap();
    let edge_ok = (e.p_me - 0.25).abs() <= 1e-12
        && (e.p_fe - 2.0 / 1020.0).abs() <= 1e-12
        && (e.p_e - 0.5 * (0.25 + 2.0 / 1020.0)).abs() <= 1e-12;
    outcome(
        weighted_ok && any_ok && boe_ok && edge_ok,
        format!(
            "equal weights = mean {weighted_ok}, any-band = enumeration {any_ok}, BOE 1/17 {boe_ok}, \
             edge example {edge_ok}"
        ),
    )
}

fn waterfilling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=16);
        let gains: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..5.0)).collect();
        let noise = rng.gen_range(0.1..2.0);
        let budget = rng.gen_range(0.1..20.0);
        let a = waterfill(&gains, noise, budget, WaterfillMode::AvgPower, None).unwrap();
        let total: f64 = a.powers.iter().sum();
        worst = worst.max((total - budget).abs());
        for (p, g) in a.powers.iter().zip(&gains) {
            let floor = noise / g;
            if *p > 0.0 {
                worst = worst.max((p + floor - a.level).abs());
            } else {
                worst = worst.max((a.level - floor).max(0.0));
            }
            worst = worst.max((-p).max(0.0));
        }
    }
    let two = waterfill(&[1.0, 0.5], 1.0, 1.0, WaterfillMode::AvgPower, None).unwrap();
    let example = two.powers == [1.0, 0.0] && two.level == 2.0;
    outcome(
        worst <= 1e-8 && example,
        format!("max KKT residual {worst:.2e} over 100 draws, two-band [1, 0] example {example}"),
    )
}

#[test]
fn acceptance() {
    let checks: [Check; 10] = [
        ("single-band ROC", detection_roc),
        ("cooperative ROC", cooperative_roc),
        ("throughput orderings", throughput_orderings),
        ("sensing-time tradeoff", sensing_time),
        ("sampling cost", sampling_costs),
        ("fusion oracle", fusion_oracle),
        ("wavelet edges", wavelet_edges),
        ("compressive sensing", compressive_sensing),
        ("metric identities", metric_identities),
        ("water-filling KKT", waterfilling),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{verdict}] {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
