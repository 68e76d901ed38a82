//! Model-agnostic verification suite: every check records the band or
//! tolerance it was held to and the values it measured.

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{analyze, SCHEMA_VERSION};
use crate::antichain::{enumerate_antichain, theorem_ratio_series, AntichainOptions, DEFAULT_CAP};
use crate::error::Result;
use crate::geometry::{
    antichain_midpoints, antichain_upper_bound, discretize, error_curve, integrate_error, lloyd_on_measure,
    monte_carlo_error, realize, CurveOptions, Realization,
};
use crate::graph::transient_sum;
use crate::model::MarkovSystem;
use crate::numeric::{band_ratio, regression_slope};
use crate::spectral::{row_sum_bounds, spectral_radius, weight_matrix, Scope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// Report taxonomy: which property of the theory the check exercises.
    pub tag: &'static str,
    pub r: f64,
    /// Band or tolerance in words, e.g. `max/min <= 2`.
    pub criterion: String,
    pub measured: Value,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationSuiteResult {
    pub schema_version: u32,
    pub r: Vec<f64>,
    pub k_range: (u32, u32),
    pub quantize_k_range: (u32, u32),
    pub depth_offset: u32,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerificationSuiteResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.checks.iter().filter(|c| c.outcome == outcome).count()
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub r: Vec<f64>,
    pub k_min: u32,
    pub k_max: u32,
    pub quantize_k_min: u32,
    pub quantize_k_max: u32,
    pub depth_offset: u32,
    pub cap: u64,
    pub seed: u64,
    pub mc_samples: usize,
    /// Largest discretized measure Lloyd is run on.
    pub lloyd_budget: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            r: vec![1.0],
            k_min: 6,
            k_max: 16,
            quantize_k_min: 6,
            quantize_k_max: 12,
            depth_offset: 6,
            cap: DEFAULT_CAP,
            seed: 0,
            mc_samples: 1_000_000,
            lloyd_budget: 2_000_000,
        }
    }
}

pub const BAND: f64 = 3.0;
pub const GROWTH_BAND: f64 = 2.0;
pub const ROOT_RESIDUAL: f64 = 1e-9;
pub const SUM_SLACK: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const SLOPE_TOL: f64 = 0.10;
pub const EIGEN_STEPS: usize = 64;

struct Suite {
    r: f64,
    checks: Vec<Check>,
}

impl Suite {
    fn push(&mut self, name: impl Into<String>, tag: &'static str, criterion: impl Into<String>, measured: Value, ok: bool) {
        self.checks.push(Check {
            name: name.into(),
            tag,
            r: self.r,
            criterion: criterion.into(),
            measured,
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            reason: None,
        });
    }

    fn skip(&mut self, name: impl Into<String>, tag: &'static str, reason: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            tag,
            r: self.r,
            criterion: String::new(),
            measured: Value::Null,
            outcome: Outcome::Skip,
            reason: Some(reason.into()),
        });
    }
}

pub fn run_suite(sys: &MarkovSystem, config: &VerifyConfig) -> Result<VerificationSuiteResult> {
    let mut checks = Vec::new();
    for &r in &config.r {
        let mut suite = Suite { r, checks: Vec::new() };
        symbolic_checks(&mut suite, sys, config)?;
        geometry_checks(&mut suite, sys, config)?;
        checks.extend(suite.checks);
    }
    Ok(VerificationSuiteResult {
        schema_version: SCHEMA_VERSION,
        r: config.r.clone(),
        k_range: (config.k_min, config.k_max),
        quantize_k_range: (config.quantize_k_min, config.quantize_k_max),
        depth_offset: config.depth_offset,
        seed: config.seed,
        checks,
    })
}

fn component_label(chain: &[usize]) -> String {
    chain.iter().map(|c| format!("H{}", c + 1)).collect::<Vec<_>>().join(",")
}

fn symbolic_checks(suite: &mut Suite, sys: &MarkovSystem, config: &VerifyConfig) -> Result<()> {
    let r = suite.r;
    let report = analyze(sys, r)?;
    let cs = &report.structure;

    let psi = spectral_radius(&weight_matrix(sys, &Scope::Full, r, cs.s_r));
    suite.push(
        "root_residual",
        "exponent",
        format!("|Psi(s_r) - 1| <= {ROOT_RESIDUAL:e}"),
        json!({ "s_r": cs.s_r, "psi": psi }),
        (psi - 1.0).abs() <= ROOT_RESIDUAL,
    );
    suite.push(
        "root_is_component_max",
        "exponent",
        format!("|s_r(full) - max_H s_r(H)| <= {ROOT_RESIDUAL:e}"),
        json!({ "full": report.s_r_global, "component_max": cs.s_r }),
        (report.s_r_global - cs.s_r).abs() <= ROOT_RESIDUAL,
    );

    let ks: Vec<u32> = (config.k_min..=config.k_max).collect();
    let mut log_phi_over_k = Vec::new();
    let mut depths = Vec::new();
    for &k in &ks {
        let ac = enumerate_antichain(sys, r, k, &AntichainOptions::default())?;
        log_phi_over_k.push((ac.phi as f64).ln() / k as f64);
        depths.push((ac.depth_min, ac.depth_max));
    }
    let band = band_ratio(&log_phi_over_k).unwrap_or(f64::INFINITY);
    suite.push(
        "log_phi_over_k_band",
        "antichain_growth",
        format!("max/min <= {GROWTH_BAND}"),
        json!({ "k": ks, "values": log_phi_over_k, "band": band }),
        band <= GROWTH_BAND,
    );
    let spread = depths.iter().map(|&(l1, l2)| l2 as f64 / l1 as f64).fold(0.0, f64::max);
    suite.push(
        "depth_spread",
        "antichain_growth",
        format!("l1 <= l2 and l2/l1 <= {BAND}"),
        json!({ "k": ks, "depths": depths, "max_ratio": spread }),
        depths.iter().all(|&(l1, l2)| l1 <= l2) && spread <= BAND,
    );

    for &c in &cs.critical {
        let comp = &cs.condensation.components[c].vertices;
        let table = row_sum_bounds(sys, r, comp, EIGEN_STEPS)?;
        let (c1, c2) = table.bounds;
        let all: Vec<f64> = table.sums.iter().flatten().copied().collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        suite.push(
            format!("eigenvector_sums[H{}]", c + 1),
            "eigenvector",
            format!("h = 1..={EIGEN_STEPS}: sums in [C1 - {SUM_SLACK:e}, C2 + {SUM_SLACK:e}]"),
            json!({ "c1": c1, "c2": c2, "min_sum": lo, "max_sum": hi }),
            lo >= c1 - SUM_SLACK && hi <= c2 + SUM_SLACK,
        );
    }

    let ns: Vec<usize> = (10..=61).collect();
    let sums = ns
        .iter()
        .map(|&n| transient_sum(sys, cs, r, cs.s_r, n))
        .collect::<Result<Vec<_>>>()?;
    if sums.iter().any(|&x| x <= 0.0) {
        suite.skip("transient_decay", "transient", "the transient set carries no long paths");
    } else {
        let ratios: Vec<f64> = sums.windows(2).map(|w| w[1] / w[0]).collect();
        let last = *ratios.last().unwrap();
        suite.push(
            "transient_decay",
            "transient",
            "ratio at n = 60 below 1",
            json!({ "first_ratio": ratios[0], "last_ratio": last }),
            last < 1.0,
        );
    }

    let series = theorem_ratio_series(sys, cs, ks.iter().copied())?;
    let scale = |k: u32| (k as f64).powi(cs.t_r as i32 - 1);
    let totals: Vec<f64> = series.iter().map(|row| row.sum_dim / scale(row.k)).collect();
    let band = band_ratio(&totals).unwrap_or(f64::INFINITY);
    suite.push(
        "total_sum_band",
        "chain_growth",
        format!("S_k / k^(T_r-1): max/min <= {BAND}"),
        json!({ "t_r": cs.t_r, "values": totals, "band": band }),
        band <= BAND,
    );
    if cs.t_r >= 1 {
        let top: Vec<Vec<usize>> = crate::graph::enumerate_chains(cs, cs.t_r)?;
        for chain in top {
            let values: Vec<f64> = series
                .iter()
                .map(|row| {
                    let v = row.lambdas.iter().find(|l| l.chain == chain).map_or(0.0, |l| l.value);
                    v / scale(row.k)
                })
                .collect();
            let band = band_ratio(&values).unwrap_or(f64::INFINITY);
            suite.push(
                format!("chain_sum_band[{}]", component_label(&chain)),
                "chain_growth",
                format!("lambda / k^(T_r-1): max/min <= {BAND}"),
                json!({ "values": values, "band": band }),
                band <= BAND,
            );
        }
    }

    let r_k: Vec<f64> = series.iter().map(|row| row.r_k).collect();
    let u_k: Vec<f64> = series.iter().map(|row| row.u_k).collect();
    let band = band_ratio(&r_k).unwrap_or(f64::INFINITY);
    suite.push(
        "corrected_ratio_band",
        "error_asymptotics",
        format!("R_k: max/min <= {BAND}"),
        json!({ "values": r_k, "band": band, "log_exponent": report.log_exponent }),
        band <= BAND,
    );
    if cs.t_r > 1 {
        let monotone = u_k.windows(2).all(|w| w[1] > w[0]);
        let factor = u_k.last().unwrap() / u_k[0];
        suite.push(
            "uncorrected_ratio_growth",
            "error_asymptotics",
            format!("U_k increasing with total factor > {BAND}"),
            json!({ "values": u_k, "factor": factor }),
            monotone && factor > BAND,
        );
    } else {
        let band = band_ratio(&u_k).unwrap_or(f64::INFINITY);
        suite.push(
            "uncorrected_ratio_band",
            "error_asymptotics",
            format!("U_k: max/min <= {BAND}"),
            json!({ "values": u_k, "band": band }),
            band <= BAND,
        );
    }
    Ok(())
}

const GEOMETRY_CHECKS: [&str; 5] =
    ["bracket_order", "antichain_bound_identity", "lloyd_monotone", "error_rate", "monte_carlo_sandwich"];

fn geometry_checks(suite: &mut Suite, sys: &MarkovSystem, config: &VerifyConfig) -> Result<()> {
    let r = suite.r;
    let rz = match realize(sys) {
        Ok(rz) => rz,
        Err(e) => {
            for name in GEOMETRY_CHECKS {
                suite.skip(name, "quantization", e.to_string());
            }
            return Ok(());
        }
    };
    let report = analyze(sys, r)?;
    let cs = &report.structure;
    let ks: Vec<u32> = (config.quantize_k_min..=config.quantize_k_max).collect();
    let options = CurveOptions { depth_offset: config.depth_offset, cap: config.cap, ..Default::default() };
    let rows = error_curve(sys, cs, ks.iter().copied(), &options)?;

    let ordered = rows.iter().all(|row| 0.0 <= row.lower && row.lower <= row.upper);
    suite.push(
        "bracket_order",
        "quantization",
        "0 <= lower <= upper at every k",
        json!({ "k": ks, "lower": rows.iter().map(|r| r.lower).collect::<Vec<_>>(),
                "upper": rows.iter().map(|r| r.upper).collect::<Vec<_>>() }),
        ordered,
    );

    let mut gaps = Vec::new();
    for &k in &ks {
        let ac = enumerate_antichain(sys, r, k, &AntichainOptions::default())?;
        let codebook = antichain_midpoints(&rz, sys, r, k, config.cap)?;
        let estimate = integrate_error(&rz, sys, &codebook, r, k)?;
        gaps.push((estimate.upper - antichain_upper_bound(&ac)).abs().max(estimate.lower));
    }
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    suite.push(
        "antichain_bound_identity",
        "quantization",
        format!("integrated upper at K = k equals 2^-r sum mu c^r within {IDENTITY_TOL:e}, lower = 0"),
        json!({ "k": ks, "deviation": gaps }),
        worst <= IDENTITY_TOL,
    );

    lloyd_check(suite, &rz, sys, &ks, config)?;

    let ns: Vec<f64> = rows.iter().map(|row| (row.n as f64).ln()).collect();
    let uppers: Vec<f64> = rows.iter().map(|row| row.upper.ln()).collect();
    if cs.t_r <= 1 {
        let target = -r / cs.s_r;
        let slope = regression_slope(&ns, &uppers).unwrap_or(f64::NAN);
        suite.push(
            "error_rate",
            "quantization",
            format!("slope of log upper vs log n within {}% of -r/s_r", SLOPE_TOL * 100.0),
            json!({ "slope": slope, "target": target }),
            ((slope - target) / target).abs() <= SLOPE_TOL,
        );
    } else {
        let corrected: Vec<f64> = rows.iter().map(|row| row.corrected_ratio).collect();
        let uncorrected: Vec<f64> = rows.iter().map(|row| row.uncorrected_ratio).collect();
        let (bc, bu) = (band_ratio(&corrected).unwrap_or(f64::INFINITY), band_ratio(&uncorrected).unwrap_or(0.0));
        suite.push(
            "error_rate",
            "quantization",
            "corrected band max/min strictly below uncorrected band",
            json!({ "corrected_band": bc, "uncorrected_band": bu }),
            bc < bu,
        );
    }

    let k = ks[0];
    let codebook = antichain_midpoints(&rz, sys, r, k, config.cap)?;
    let estimate = integrate_error(&rz, sys, &codebook, r, k + config.depth_offset)?;
    let (mean, se) = monte_carlo_error(&rz, sys, &codebook, r, config.mc_samples, 48, config.seed);
    suite.push(
        "monte_carlo_sandwich",
        "quantization",
        "MC mean in [lower - 3 se, upper + 3 se]",
        json!({ "k": k, "lower": estimate.lower, "upper": estimate.upper, "mc_mean": mean, "mc_se": se,
                "samples": config.mc_samples, "seed": config.seed }),
        mean >= estimate.lower - 3.0 * se && mean <= estimate.upper + 3.0 * se,
    );
    Ok(())
}

fn lloyd_check(
    suite: &mut Suite,
    rz: &Realization,
    sys: &MarkovSystem,
    ks: &[u32],
    config: &VerifyConfig,
) -> Result<()> {
    let r = suite.r;
    if r < 1.0 {
        suite.skip("lloyd_monotone", "quantization", format!("Lloyd needs r >= 1, got {r}"));
        return Ok(());
    }
    let mut runs = Vec::new();
    for &k in ks {
        let depth = k + config.depth_offset;
        let size = enumerate_antichain(sys, r, depth, &AntichainOptions::default())?.phi;
        if size > config.lloyd_budget.min(config.cap) {
            continue;
        }
        let measure = discretize(rz, sys, r, depth, config.cap)?;
        let start = antichain_midpoints(rz, sys, r, k, config.cap)?;
        let result = lloyd_on_measure(&measure, &start, r, 25)?;
        let uppers: Vec<f64> = result.trace.iter().map(|e| e.upper).collect();
        runs.push((k, uppers));
    }
    if runs.is_empty() {
        suite.skip("lloyd_monotone", "quantization", "every discretized measure exceeds the Lloyd budget");
        return Ok(());
    }
    let monotone = runs.iter().all(|(_, u)| u.windows(2).all(|w| w[1] <= w[0]));
    suite.push(
        "lloyd_monotone",
        "quantization",
        "upper bound non-increasing over Lloyd iterations",
        json!(runs.iter().map(|(k, u)| json!({ "k": k, "upper": u })).collect::<Vec<_>>()),
        monotone,
    );
    Ok(())
}
