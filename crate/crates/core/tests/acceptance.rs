//! Acceptance suite: one PASS/FAIL line per criterion. Reference values come
//! from closed forms or from independent computations in this file.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use markov_quant::antichain::{enumerate_antichain, theorem_ratio_series, AntichainOptions};
use markov_quant::fixtures::{fixture_a, fixture_b, fixture_c};
use markov_quant::geometry::{
    antichain_midpoints, discretize, error_curve, integrate_error, lloyd_refine, realize, Codebook, CurveOptions,
};
use markov_quant::graph::{enumerate_chains, transient_sum};
use markov_quant::spectral::{row_sum_bounds, solve_sr};
use markov_quant::verify::{run_suite, VerifyConfig};
use markov_quant::{analyze, MarkovSystem, Scope};
use num_bigint::BigInt;
use num_rational::BigRational;

type Criterion = (&'static str, fn(&mut Report));

const GOLDEN: f64 = 1.618_033_988_749_895;

struct Report {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Report { failures: Vec::new(), notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn band(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Root of a decreasing function by plain bisection to machine precision.
fn oracle_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `s` with `m · w^{s/(s+r)} = 1`, the root for a block whose radius is
/// `m · w^{s/(s+r)}`.
fn closed_root(m: f64, w: f64, r: f64) -> f64 {
    let x = m.ln() / -w.ln();
    r * x / (1.0 - x)
}

fn fixtures() -> [(&'static str, MarkovSystem); 3] {
    [("A", fixture_a()), ("B", fixture_b()), ("C", fixture_c())]
}

fn criterion_1(rep: &mut Report) {
    let sys = fixture_a();
    let exact = 2f64.ln() / 3f64.ln();
    for r in [1.0, 2.0] {
        let start = Instant::now();
        let s = solve_sr(&sys, &Scope::Full, r).unwrap().root;
        let took = start.elapsed();
        rep.require((s - exact).abs() <= 1e-9, format!("r={r}: s_r = {s}, expected {exact}"));
        rep.require(took < Duration::from_secs(1), format!("r={r}: took {took:?}"));
        rep.note(format!("r={r}: |s_r - ln2/ln3| = {:.1e} in {took:.2?}", (s - exact).abs()));
    }
}

fn criterion_2(rep: &mut Report) {
    let sys = fixture_b();
    let oracle = oracle_root(|s| GOLDEN * (1.0 / 6.0f64).powf(s / (s + 1.0)), 0.0, 10.0);
    let oracle_k = oracle_root(|s| 2.0 * (1.0 / 18.0f64).powf(s / (s + 1.0)), 0.0, 10.0);
    rep.require((oracle - closed_root(GOLDEN, 1.0 / 6.0, 1.0)).abs() < 1e-12, "bisection oracle disagrees with closed form");
    let s = solve_sr(&sys, &Scope::Full, 1.0).unwrap().root;
    let s_k = solve_sr(&sys, &Scope::Component(vec![5, 6]), 1.0).unwrap().root;
    rep.require((s - oracle).abs() <= 1e-8, format!("s_1 = {s}, oracle {oracle}"));
    rep.require((s_k - oracle_k).abs() <= 1e-8, format!("s_1(K) = {s_k}, oracle {oracle_k}"));
    rep.require(s - s_k > 0.05, format!("gap {} not above 0.05", s - s_k));
    rep.note(format!("s_1 = {s:.12} (oracle {oracle:.12}), s_1(K) = {s_k:.12}, gap {:.6}", s - s_k));
}

fn criterion_3(rep: &mut Report) {
    let expected = [(1, 1), (2, 2), (2, 1)];
    for ((name, sys), want) in fixtures().into_iter().zip(expected) {
        let cs = analyze(&sys, 1.0).unwrap().structure;
        rep.require((cs.m_r, cs.t_r) == want, format!("{name}: (M_r, T_r) = ({}, {})", cs.m_r, cs.t_r));
        rep.note(format!("{name}: (M_r, T_r) = ({}, {})", cs.m_r, cs.t_r));
        if name == "B" {
            let chains = enumerate_chains(&cs, 2).unwrap();
            // H1 = {1,2}, H2 = {3,4}
            rep.require(chains == vec![vec![0, 1]], format!("B: H_2 = {chains:?}"));
        }
        if name == "C" {
            let chains = enumerate_chains(&cs, 2).unwrap();
            rep.require(chains.is_empty(), format!("C: H_2 = {chains:?}"));
        }
    }
}

fn criterion_4(rep: &mut Report) {
    let mut spent = Duration::ZERO;
    for (name, sys) in fixtures() {
        let mut ratios = Vec::new();
        let mut worst_spread: f64 = 0.0;
        for k in 6..=16 {
            let start = Instant::now();
            let ac = enumerate_antichain(&sys, 1.0, k, &AntichainOptions::default()).unwrap();
            spent += start.elapsed();
            ratios.push((ac.phi as f64).ln() / k as f64);
            rep.require(ac.depth_min <= ac.depth_max, format!("{name} k={k}: l1 > l2"));
            worst_spread = worst_spread.max(ac.depth_max as f64 / ac.depth_min as f64);
            if k <= 12 {
                let (phi, l1, l2) = common::brute_phi(&sys, 1.0, k);
                rep.require(
                    (ac.phi, ac.depth_min, ac.depth_max) == (phi, l1, l2),
                    format!("{name} k={k}: ({}, {}, {}) vs brute force ({phi}, {l1}, {l2})", ac.phi, ac.depth_min, ac.depth_max),
                );
            }
        }
        let b = band(&ratios);
        rep.require(b <= 2.0, format!("{name}: log phi/k band {b}"));
        rep.require(worst_spread <= 3.0, format!("{name}: l2/l1 up to {worst_spread}"));
        rep.note(format!("{name}: log phi/k band {b:.3}, max l2/l1 {worst_spread:.3}"));
    }
    rep.require(spent < Duration::from_secs(120), format!("enumeration took {spent:?}"));
    rep.note(format!("enumeration {spent:.2?}"));
}

fn criterion_5(rep: &mut Report) {
    let table = row_sum_bounds(&fixture_b(), 1.0, &[0, 1], 64).unwrap();
    let (c1, c2) = table.bounds;
    rep.require((c1 - 1.0 / GOLDEN).abs() <= 1e-5 && (c2 - GOLDEN).abs() <= 1e-5, format!("B: (C1, C2) = ({c1}, {c2})"));
    let sums: Vec<f64> = table.sums.iter().flatten().copied().collect();
    let (lo, hi) = (sums.iter().copied().fold(f64::INFINITY, f64::min), sums.iter().copied().fold(0.0, f64::max));
    rep.require(lo >= c1 - 1e-9 && hi <= c2 + 1e-9, format!("B: sums span [{lo}, {hi}]"));
    rep.note(format!("B: (C1, C2) = ({c1:.7}, {c2:.7}), sums in [{lo:.6}, {hi:.6}]"));

    let table = row_sum_bounds(&fixture_a(), 1.0, &[0, 1], 64).unwrap();
    let worst = table.sums.iter().flatten().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    rep.require(worst <= 1e-10, format!("A: sums deviate from 1 by {worst}"));
    rep.note(format!("A: max |sum - 1| = {worst:.1e}"));
}

fn criterion_6(rep: &mut Report) {
    let sys = fixture_b();
    let cs = analyze(&sys, 1.0).unwrap().structure;
    let s = oracle_root(|s| GOLDEN * (1.0 / 6.0f64).powf(s / (s + 1.0)), 0.0, 10.0);
    let x = s / (s + 1.0);
    // transient words of length n >= 2 are the 2^n words over {6, 7}
    let closed = |n: usize| 2f64.powi(n as i32) * 18f64.powf(-x * (n as f64 - 1.0));
    let limit = 2.0 * 18f64.powf(-x);
    let sums: Vec<f64> = (10..=61).map(|n| transient_sum(&sys, &cs, 1.0, cs.s_r, n).unwrap()).collect();
    for (n, v) in (10..=61).zip(&sums) {
        rep.require(((v - closed(n)) / closed(n)).abs() <= 1e-8, format!("n={n}: {v} vs {}", closed(n)));
    }
    let ratios: Vec<f64> = sums.windows(2).map(|w| w[1] / w[0]).collect();
    rep.require(ratios.iter().all(|r| (0.90..=0.94).contains(r)), "a ratio leaves [0.90, 0.94]");
    let last = *ratios.last().unwrap();
    rep.require((last - limit).abs() <= 1e-6, format!("final ratio {last} vs limit {limit}"));
    rep.note(format!("ratios n=10..60 in [{:.5}, {:.5}], limit {limit:.5}", band_lo(&ratios), band_hi(&ratios)));
}

fn band_lo(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn band_hi(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_7(rep: &mut Report) {
    for (name, sys) in fixtures() {
        let cs = analyze(&sys, 1.0).unwrap().structure;
        let rows = theorem_ratio_series(&sys, &cs, 8..=16).unwrap();
        if name == "B" {
            let lambda: Vec<f64> = rows
                .iter()
                .map(|row| row.lambdas.iter().find(|l| l.chain == [0, 1]).map_or(0.0, |l| l.value) / row.k as f64)
                .collect();
            let total: Vec<f64> = rows.iter().map(|row| row.sum_dim / row.k as f64).collect();
            rep.require(band(&lambda) <= 3.0, format!("B: lambda/k band {}", band(&lambda)));
            rep.require(band(&total) <= 3.0, format!("B: S_k/k band {}", band(&total)));
            rep.note(format!("B: lambda_(H1,H2)/k band {:.3}, S_k/k band {:.3}", band(&lambda), band(&total)));
        } else {
            let totals: Vec<f64> = rows.iter().map(|row| row.sum_dim).collect();
            rep.require(band(&totals) <= 3.0, format!("{name}: S_k band {}", band(&totals)));
            rep.note(format!("{name}: S_k band {:.4}", band(&totals)));
        }
        if name == "A" {
            for k in 8..=16u32 {
                let ac = enumerate_antichain(&sys, 1.0, k, &AntichainOptions::default()).unwrap();
                let phi = BigInt::from(2u32).pow(k + 2);
                let weight = BigRational::new(BigInt::from(1), BigInt::from(6u32).pow(k + 1));
                let exact_energy = BigRational::from_integer(phi.clone()) * weight;
                rep.require(BigInt::from(ac.phi) == phi, format!("A k={k}: phi = {}", ac.phi));
                rep.require(ac.sum_energy_exact() == Some(exact_energy), format!("A k={k}: exact energy differs"));
                rep.require(ac.depth_min == k as usize + 2 && ac.depth_max == k as usize + 2, format!("A k={k}: depths"));
            }
            let worst = rows.iter().map(|row| (row.sum_dim - 2.0).abs()).fold(0.0, f64::max);
            rep.require(worst <= 1e-12, format!("A: max |S_k - 2| = {worst}"));
            rep.note(format!("A: phi = 2^(k+2) and weights (1/6)^(k+1) exactly, max |S_k - 2| = {worst:.1e}"));
        }
    }
}

fn criterion_8(rep: &mut Report) {
    for (name, sys) in fixtures() {
        let cs = analyze(&sys, 1.0).unwrap().structure;
        let rows = theorem_ratio_series(&sys, &cs, 8..=16).unwrap();
        let r_k: Vec<f64> = rows.iter().map(|row| row.r_k).collect();
        let u_k: Vec<f64> = rows.iter().map(|row| row.u_k).collect();
        if name == "B" {
            let increasing = u_k.windows(2).all(|w| w[1] > w[0]);
            let factor = u_k.last().unwrap() / u_k[0];
            rep.require(band(&r_k) <= 3.0, format!("B: R_k band {}", band(&r_k)));
            rep.require(increasing, "B: U_k not increasing");
            rep.require(factor > 3.0, format!("B: U_k factor {factor}"));
            rep.note(format!("B: R_k band {:.3}, U_k increasing by x{factor:.2}", band(&r_k)));
        } else {
            rep.require(band(&u_k) <= 3.0, format!("{name}: U_k band {}", band(&u_k)));
            rep.note(format!("{name}: U_k band {:.4}", band(&u_k)));
        }
    }
}

fn criterion_9(rep: &mut Report) {
    let start = Instant::now();
    let sys = fixture_a();
    let rz = realize(&sys).unwrap();
    for r in [1.0, 2.0] {
        let cs = analyze(&sys, r).unwrap().structure;
        let rows = error_curve(&sys, &cs, 4..=9, &CurveOptions::default()).unwrap();
        rep.require(rows.iter().all(|row| row.lower <= row.upper), format!("A r={r}: lower > upper"));
        for k in 4..=9u32 {
            let cb = antichain_midpoints(&rz, &sys, r, k, u64::MAX).unwrap();
            let e = integrate_error(&rz, &sys, &cb, r, k).unwrap();
            // every word of the antichain has length k + 2 and ratio 3^-(k+1)
            let expected = 2f64.powf(-r) * 3f64.powf(-r * (k as f64 + 1.0));
            rep.require((e.upper - expected).abs() <= 1e-12 * expected, format!("A r={r} k={k}: {} vs {expected}", e.upper));
            let run = lloyd_refine(&rz, &sys, &cb, r, k + 6, 50, u64::MAX).unwrap();
            rep.require(
                run.trace.windows(2).all(|w| w[1].upper <= w[0].upper),
                format!("A r={r} k={k}: Lloyd raised the upper bound"),
            );
        }
        let xs: Vec<f64> = rows.iter().map(|row| (row.n as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|row| row.upper.ln()).collect();
        let target = -r * 3f64.ln() / 2f64.ln();
        let fitted = slope(&xs, &ys);
        rep.require(((fitted - target) / target).abs() <= 0.10, format!("A r={r}: slope {fitted} vs {target}"));
        rep.note(format!("A r={r}: slope {fitted:.4} vs {target:.4}"));
    }

    let sys = fixture_b();
    let cs = analyze(&sys, 1.0).unwrap().structure;
    let rows = error_curve(&sys, &cs, 6..=12, &CurveOptions::default()).unwrap();
    rep.require(rows.iter().all(|row| row.lower <= row.upper), "B: lower > upper");
    let corrected: Vec<f64> = rows.iter().map(|row| row.corrected_ratio).collect();
    let uncorrected: Vec<f64> = rows.iter().map(|row| row.uncorrected_ratio).collect();
    let (bc, bu) = (band(&corrected), band(&uncorrected));
    rep.require(bc < bu, format!("B: corrected band {bc} not below uncorrected {bu}"));
    rep.note(format!("B: corrected band {bc:.3} < uncorrected {bu:.3}"));
    rep.note(format!("geometry checks {:.1?}", start.elapsed()));

    let start = Instant::now();
    for (name, sys) in fixtures() {
        let result = run_suite(&sys, &VerifyConfig::default()).unwrap();
        rep.require(result.passed(), format!("{name}: verify suite reports failures"));
    }
    let took = start.elapsed();
    rep.require(took < Duration::from_secs(600), format!("verify suite took {took:?}"));
    rep.note(format!("verify suite on A, B, C {took:.1?}"));
}

fn criterion_10(rep: &mut Report) {
    let sys = fixture_a();
    let rz = realize(&sys).unwrap();
    let measure = discretize(&rz, &sys, 2.0, 10, u64::MAX).unwrap();
    let (xs, ms) = (&measure.points, &measure.masses);
    // optimal two-point partitions of a sorted line measure are splits
    let cost = |a: usize, b: usize| {
        let m: f64 = ms[a..b].iter().sum();
        let mean = xs[a..b].iter().zip(&ms[a..b]).map(|(x, w)| x * w).sum::<f64>() / m;
        xs[a..b].iter().zip(&ms[a..b]).map(|(x, w)| w * (x - mean) * (x - mean)).sum::<f64>()
    };
    let n = xs.len();
    let best = (1..n).map(|i| cost(0, i) + cost(i, n)).fold(f64::INFINITY, f64::min);
    let start = Codebook::new(vec![1.0 / 6.0, 5.0 / 6.0]).unwrap();
    let run = lloyd_refine(&rz, &sys, &start, 2.0, 10, 500, u64::MAX).unwrap();
    let found = run.trace.last().unwrap().discrete;
    rep.require((found - best).abs() <= 1e-9, format!("Lloyd {found} vs brute force {best}"));
    rep.note(format!(
        "{n} midpoints: brute force {best:.12}, Lloyd {found:.12} at {:?} after {} steps",
        run.codebook.points(),
        run.iterations
    ));
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("s_r closed form, fixture A", criterion_1),
        ("s_r root and criticality gap, fixture B", criterion_2),
        ("critical structure, fixtures A/B/C", criterion_3),
        ("antichain growth, fixtures A/B/C", criterion_4),
        ("eigenvector sums, fixtures A/B", criterion_5),
        ("transient decay, fixture B", criterion_6),
        ("chain sums, fixtures A/B/C", criterion_7),
        ("corrected vs uncorrected ratios", criterion_8),
        ("numeric quantization", criterion_9),
        ("Lloyd vs brute-force 2-point quantizer", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let mut rep = Report::new();
        let start = Instant::now();
        run(&mut rep);
        let status = if rep.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {title} ({:.2?})", i + 1, start.elapsed());
        for note in &rep.notes {
            println!("    {note}");
        }
        for failure in &rep.failures {
            println!("    failed: {failure}");
        }
        failed += usize::from(!rep.failures.is_empty());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
