//! The verification checks behind `verify` and the acceptance suite.
//!
//! Each `criterion_*` function runs one group of checks and returns its
//! records. Sizes scale with [`VerifyConfig::size`]; the default of 512
//! reproduces the reference sizes (512 for the main statistics, 256 for the
//! (×2,×3) windows, 1024 for the Rudin–Shapiro comb).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlations::{autocorr_table, autocorr_table_direct, correlation, CorrelationQuery};
use crate::diffraction::{bragg_estimate, flatness_report, periodogram, FLATNESS_TOLERANCE};
use crate::error::Result;
use crate::io::{report_json, table_csv, window_csv};
use crate::lattice::{LatticeVector, UnitWeight, WeightLaw, WeightWindow};
use crate::oracles::{ledrappier_bruteforce, ledrappier_corr_oracle, times23_corr_oracle};
use crate::samplers::{derive_seed, SamplerSpec, System, DEFAULT_GUARD_BITS};

/// Tolerances, keyed by check name. Every value can be overridden per job.
pub mod tolerance {
    pub const EXACT: f64 = 1e-12;
    /// Off-origin autocorrelation bound for Bernoulli and Ledrappier windows.
    pub const ETA_OFF_ORIGIN: f64 = 0.02;
    /// Off-origin bound for (×2,×3) windows, which are half as wide.
    pub const ETA_TIMES23: f64 = 0.05;
    pub const TRIPLE_BERNOULLI: f64 = 0.02;
    pub const LOCAL_RULE: f64 = 1e-10;
    pub const VANISHING_PAIR: f64 = 1e-6;
    pub const BRAGG: f64 = 0.01;
    pub const FLATNESS: f64 = super::FLATNESS_TOLERANCE;
    pub const PARSEVAL: f64 = 1e-9;
    pub const RS_VS_BERNOULLI: f64 = 0.03;
    pub const FFT_VS_DIRECT: f64 = 1e-10;
}

pub const ETA_RANGE: usize = 8;
pub const ETA_RANGE_TIMES23: usize = 6;
pub const ORACLE_QUERIES: usize = 1000;
pub const VANISHING_QUERIES: usize = 50;
pub const BRUTEFORCE_BOX: usize = 8;
pub const THREAD_COUNTS: [usize; 3] = [1, 4, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub criterion: u8,
    pub name: String,
    pub system: String,
    pub quantity: String,
    pub empirical: f64,
    pub oracle: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub seed: u64,
    pub size: usize,
    pub systems: Vec<String>,
    pub summary: Summary,
    pub checks: Vec<CheckRecord>,
    pub versions: BTreeMap<String, String>,
}

impl VerifyReport {
    pub fn new(config: &VerifyConfig, systems: Vec<String>, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let mut versions = BTreeMap::new();
        versions.insert(
            env!("CARGO_PKG_NAME").to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        VerifyReport {
            pass: passed == checks.len(),
            seed: config.seed,
            size: config.size,
            systems,
            summary: Summary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
            },
            checks,
            versions,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub size: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            size: 512,
            seed: 7,
            tolerances: BTreeMap::new(),
        }
    }
}

impl VerifyConfig {
    pub fn new(size: usize, seed: u64) -> Self {
        VerifyConfig {
            size,
            seed,
            ..Default::default()
        }
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    fn spec(&self, system: System, size: usize, salt: u64) -> SamplerSpec {
        SamplerSpec::square(system, size, derive_seed(self.seed, salt))
    }

    /// `|empirical − oracle| ≤ tolerance` under the (possibly overridden) tolerance `name`.
    #[allow(clippy::too_many_arguments)]
    fn check(
        &self,
        criterion: u8,
        name: &str,
        system: &str,
        quantity: impl Into<String>,
        empirical: f64,
        oracle: f64,
        default_tol: f64,
    ) -> CheckRecord {
        let tolerance = self.tol(name, default_tol);
        CheckRecord {
            criterion,
            name: name.to_string(),
            system: system.to_string(),
            quantity: quantity.into(),
            empirical,
            oracle,
            tolerance,
            pass: (empirical - oracle).abs() <= tolerance,
        }
    }
}

pub fn fair_coin() -> System {
    System::Bernoulli {
        law: WeightLaw::fair_coin(),
    }
}

pub fn times23() -> System {
    System::Times23 {
        guard_bits: DEFAULT_GUARD_BITS,
    }
}

fn triple(n: u32) -> CorrelationQuery {
    let s = 1i64 << n;
    CorrelationQuery::sites(&[LatticeVector::ZERO, LatticeVector::new(s, 0), LatticeVector::new(0, s)])
        .expect("nonempty")
}

fn sign(w: &WeightWindow, a: usize, b: usize) -> i8 {
    if w.at(a, b) == UnitWeight::PLUS {
        1
    } else {
        -1
    }
}

/// Sites where `w_x·w_{x+e₁}·w_{x+e₂} ≠ 1`.
pub fn ledrappier_violations(w: &WeightWindow) -> usize {
    let mut bad = 0;
    for b in 0..w.height() - 1 {
        for a in 0..w.width() - 1 {
            if sign(w, a, b) * sign(w, a + 1, b) * sign(w, a, b + 1) != 1 {
                bad += 1;
            }
        }
    }
    bad
}

/// Largest `|w_{x+e₁} − w_x²|` or `|w_{x+e₂} − w_x³|` over the window.
pub fn times23_rule_error(w: &WeightWindow) -> f64 {
    let mut worst: f64 = 0.0;
    for b in 0..w.height() {
        for a in 0..w.width() {
            let x = w.at(a, b).value();
            if a + 1 < w.width() {
                worst = worst.max((w.at(a + 1, b).value() - x * x).norm());
            }
            if b + 1 < w.height() {
                worst = worst.max((w.at(a, b + 1).value() - x * x * x).norm());
            }
        }
    }
    worst
}

/// Ledrappier rule and the dyadic triple correlations.
pub fn criterion_1(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let w = cfg.spec(System::Ledrappier, cfg.size, 1).sample()?;
    let mut out = vec![cfg.check(
        1,
        "ledrappier_rule",
        "ledrappier",
        "sites violating w_x w_{x+e1} w_{x+e2} = 1",
        ledrappier_violations(&w) as f64,
        0.0,
        0.0,
    )];
    for n in 0..=6 {
        let v = correlation(&w, &triple(n))?;
        out.push(cfg.check(
            1,
            "ledrappier_triple",
            "ledrappier",
            format!("<0, 2^{n} e1, 2^{n} e2>"),
            v.re,
            1.0,
            tolerance::EXACT,
        ));
    }
    Ok(out)
}

/// Bernoulli and Ledrappier share their autocorrelation but not their triple correlations.
pub fn criterion_2(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let bern = cfg.spec(fair_coin(), cfg.size, 2).sample()?;
    let ledr = cfg.spec(System::Ledrappier, cfg.size, 1).sample()?;
    let mut out = Vec::new();
    for (name, w) in [("bernoulli", &bern), ("ledrappier", &ledr)] {
        let table = autocorr_table(w, ETA_RANGE)?;
        out.push(cfg.check(
            2,
            "eta_off_origin",
            name,
            format!("max |eta(z)| over 0 < |z| <= {ETA_RANGE}"),
            table.max_off_origin(),
            0.0,
            tolerance::ETA_OFF_ORIGIN,
        ));
    }
    let q = triple(0);
    out.push(cfg.check(
        2,
        "triple_bernoulli",
        "bernoulli",
        "|<0, e1, e2>|",
        correlation(&bern, &q)?.norm(),
        0.0,
        tolerance::TRIPLE_BERNOULLI,
    ));
    out.push(cfg.check(
        2,
        "triple_ledrappier",
        "ledrappier",
        "<0, e1, e2>",
        correlation(&ledr, &q)?.re,
        1.0,
        tolerance::EXACT,
    ));
    Ok(out)
}

/// (×2,×3) local rules, autocorrelation, and the vanishing-sum correlation.
pub fn criterion_3(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let n = (cfg.size / 2).max(ETA_RANGE_TIMES23 + 1);
    let w = cfg.spec(times23(), n, 3).sample()?;
    let table = autocorr_table(&w, ETA_RANGE_TIMES23)?;
    let pair: CorrelationQuery = "(0,1):-2,(1,1):1".parse()?;
    let v = correlation(&w, &pair)?;
    Ok(vec![
        cfg.check(
            3,
            "times23_rules",
            "times23",
            "max |w_{x+e1} - w_x^2|, |w_{x+e2} - w_x^3|",
            times23_rule_error(&w),
            0.0,
            tolerance::LOCAL_RULE,
        ),
        cfg.check(
            3,
            "eta_times23",
            "times23",
            format!("max |eta(z)| over 0 < |z| <= {ETA_RANGE_TIMES23}"),
            table.max_off_origin(),
            0.0,
            tolerance::ETA_TIMES23,
        ),
        cfg.check(
            3,
            "times23_vanishing_pair",
            "times23",
            "|<((0,1),-2), ((1,1),1)> - 1|",
            (v - Complex64::new(1.0, 0.0)).norm(),
            0.0,
            tolerance::VANISHING_PAIR,
        ),
    ])
}

/// Random queries with 1 to 4 sites in `[0, BRUTEFORCE_BOX]²`.
pub fn random_box_queries(seed: u64, count: usize) -> Vec<CorrelationQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = BRUTEFORCE_BOX as i64;
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=4);
            let sites: Vec<LatticeVector> = (0..n)
                .map(|_| LatticeVector::new(rng.gen_range(0..=b), rng.gen_range(0..=b)))
                .collect();
            CorrelationQuery::sites(&sites).expect("nonempty")
        })
        .collect()
}

/// Queries with distinct sites and all powers 1.
pub fn random_distinct_queries(seed: u64, count: usize) -> Vec<CorrelationQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let mut sites = Vec::new();
            while sites.len() < n {
                let z = LatticeVector::new(rng.gen_range(-20..=20), rng.gen_range(-20..=20));
                if !sites.contains(&z) {
                    sites.push(z);
                }
            }
            CorrelationQuery::sites(&sites).expect("nonempty")
        })
        .collect()
}

/// Queries whose weighted sum vanishes, assembled from split terms
/// `2c·2^k3^ℓ − c·2^{k+1}3^ℓ = 0` and `3c·2^k3^ℓ − c·2^k3^{ℓ+1} = 0`.
pub fn vanishing_sum_queries(seed: u64, count: usize) -> Vec<CorrelationQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let blocks = rng.gen_range(1..=3);
            let mut terms = Vec::new();
            for _ in 0..blocks {
                let z = LatticeVector::new(rng.gen_range(-10..=10), rng.gen_range(-10..=10));
                let c: i64 = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
                if rng.gen_bool(0.5) {
                    terms.push((z, 2 * c));
                    terms.push((z + LatticeVector::E1, -c));
                } else {
                    terms.push((z, 3 * c));
                    terms.push((z + LatticeVector::E2, -c));
                }
            }
            CorrelationQuery::new(terms).expect("nonempty")
        })
        .collect()
}

/// Oracle cross-checks.
pub fn criterion_4(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let mut mismatches = 0usize;
    for q in random_box_queries(derive_seed(cfg.seed, 40), ORACLE_QUERIES) {
        let brute = ledrappier_bruteforce(&q, BRUTEFORCE_BOX)?;
        let exact = *brute.numer() as f64 / *brute.denom() as f64;
        if ledrappier_corr_oracle(&q).value != Complex64::new(exact, 0.0) {
            mismatches += 1;
        }
    }
    let nonzero = random_distinct_queries(derive_seed(cfg.seed, 41), ORACLE_QUERIES)
        .iter()
        .filter(|q| times23_corr_oracle(q).value != Complex64::new(0.0, 0.0))
        .count();
    let not_one = vanishing_sum_queries(derive_seed(cfg.seed, 42), VANISHING_QUERIES)
        .iter()
        .filter(|q| !times23_corr_oracle(q).is_one())
        .count();
    Ok(vec![
        cfg.check(
            4,
            "ledrappier_oracle_vs_bruteforce",
            "ledrappier",
            format!("mismatches over {ORACLE_QUERIES} random queries in [0,{BRUTEFORCE_BOX}]^2"),
            mismatches as f64,
            0.0,
            0.0,
        ),
        cfg.check(
            4,
            "times23_distinct_sites",
            "times23",
            format!("nonzero oracle values over {ORACLE_QUERIES} distinct-site queries"),
            nonzero as f64,
            0.0,
            0.0,
        ),
        cfg.check(
            4,
            "times23_vanishing_sums",
            "times23",
            format!("oracle values != 1 over {VANISHING_QUERIES} vanishing-sum queries"),
            not_one as f64,
            0.0,
            0.0,
        ),
    ])
}

/// Bragg peaks of the occupation comb `+1 ↦ 1, −1 ↦ 0` and its flat background.
pub fn criterion_5(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let spec = cfg.spec(fair_coin(), cfg.size, 5);
    let phi = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let mut out = Vec::new();
    for (label, q, expected) in [
        ("(0,0)", (0.0, 0.0), 0.25),
        ("(1,0)", (1.0, 0.0), 0.25),
        ("(0.5,0)", (0.5, 0.0), 0.0),
    ] {
        let (_, v) = bragg_estimate(&spec, phi, q, &[cfg.size])?[0];
        out.push(cfg.check(
            5,
            "bragg",
            "bernoulli",
            format!("I_N{label} / N^2"),
            v,
            expected,
            tolerance::BRAGG,
        ));
    }
    let window = spec.resized(cfg.size).sample()?;
    let grid = periodogram(&window.comb_weights(phi.0, phi.1)?);
    let report = flatness_report(&grid, 0.25, false)?;
    out.push(cfg.check(
        5,
        "flatness",
        "bernoulli",
        "max relative bin-mean deviation from 1/4 (occupation comb)",
        report.max_bin_deviation,
        0.0,
        tolerance::FLATNESS,
    ));
    Ok(out)
}

/// Flat periodograms and Parseval for one system's balanced comb.
pub fn flatness_checks(cfg: &VerifyConfig, system: System, salt: u64) -> Result<Vec<CheckRecord>> {
    let name = system.name();
    let w = cfg.spec(system, cfg.size, salt).sample()?;
    let grid = periodogram(&w);
    let eta0 = autocorr_table_direct(&w, 0)?.entries[0].value.re;
    let report = flatness_report(&grid, 1.0, false)?;
    Ok(vec![
        cfg.check(
            6,
            "flatness",
            name,
            "max relative bin-mean deviation from density 1",
            report.max_bin_deviation,
            0.0,
            tolerance::FLATNESS,
        ),
        cfg.check(
            6,
            "parseval",
            name,
            "grid mean - eta(0)",
            grid.mean() - eta0,
            0.0,
            tolerance::PARSEVAL,
        ),
    ])
}

pub fn criterion_6(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for (system, salt) in [
        (fair_coin(), 2),
        (System::Ledrappier, 1),
        (times23(), 6),
        (System::RudinShapiro, 0),
    ] {
        out.extend(flatness_checks(cfg, system, salt)?);
    }
    Ok(out)
}

/// Rudin–Shapiro product comb against the fair-coin table.
pub fn criterion_7(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let n = 2 * cfg.size;
    let rs = cfg.spec(System::RudinShapiro, n, 0);
    let (first, second) = (rs.sample()?, rs.sample()?);
    let rs_table = autocorr_table(&first, ETA_RANGE)?;
    let bern_table = autocorr_table(&cfg.spec(fair_coin(), cfg.size, 2).sample()?, ETA_RANGE)?;
    let gap = rs_table
        .entries
        .iter()
        .zip(&bern_table.entries)
        .map(|(a, b)| (a.value - b.value).norm())
        .fold(0.0, f64::max);
    Ok(vec![
        cfg.check(
            7,
            "rudin_shapiro_deterministic",
            "rudin-shapiro",
            "sites differing between two generations",
            first.data().iter().zip(second.data()).filter(|(a, b)| a != b).count() as f64,
            0.0,
            0.0,
        ),
        cfg.check(
            7,
            "eta_rudin_shapiro",
            "rudin-shapiro",
            format!("max |eta(z)| over 0 < |z| <= {ETA_RANGE}"),
            rs_table.max_off_origin(),
            0.0,
            tolerance::ETA_OFF_ORIGIN,
        ),
        cfg.check(
            7,
            "rudin_shapiro_vs_bernoulli",
            "rudin-shapiro",
            "max entrywise |eta_RS(z) - eta_Bernoulli(z)|",
            gap,
            0.0,
            tolerance::RS_VS_BERNOULLI,
        ),
    ])
}

/// Artifact bytes produced for the determinism check: window CSV, table CSV,
/// and a flatness report.
pub fn determinism_artifacts(spec: &SamplerSpec, range: usize) -> Result<Vec<u8>> {
    let w = spec.sample()?;
    let mut bytes = window_csv(&w).into_bytes();
    bytes.extend(table_csv(&autocorr_table(&w, range)?).into_bytes());
    let report = flatness_report(&periodogram(&w), 1.0, spec.system.is_iid())?;
    bytes.extend(report_json(&report)?.into_bytes());
    Ok(bytes)
}

/// FFT/direct agreement and thread-count independence.
pub fn criterion_8(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let n = (cfg.size / 2).max(ETA_RANGE + 1);
    let mut out = Vec::new();
    for (system, salt) in [
        (fair_coin(), 8),
        (
            System::Bernoulli {
                law: WeightLaw::UniformCircle,
            },
            9,
        ),
    ] {
        let label = match &system {
            System::Bernoulli {
                law: WeightLaw::UniformCircle,
            } => "bernoulli-circle",
            _ => "bernoulli",
        };
        let w = cfg.spec(system, n, salt).sample()?;
        let (fast, slow) = (autocorr_table(&w, ETA_RANGE)?, autocorr_table_direct(&w, ETA_RANGE)?);
        let gap = fast
            .entries
            .iter()
            .zip(&slow.entries)
            .map(|(a, b)| (a.value - b.value).norm())
            .fold(0.0, f64::max);
        out.push(cfg.check(
            8,
            "fft_vs_direct",
            label,
            "max |eta_fft(z) - eta_direct(z)|",
            gap,
            0.0,
            tolerance::FFT_VS_DIRECT,
        ));
    }
    for system in [fair_coin(), System::Ledrappier, times23()] {
        let name = system.name();
        let spec = cfg.spec(system, n, 10);
        let mut outputs = Vec::new();
        for threads in THREAD_COUNTS {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
            outputs.push(pool.install(|| determinism_artifacts(&spec, ETA_RANGE))?);
        }
        let differing = outputs.windows(2).filter(|p| p[0] != p[1]).count();
        out.push(cfg.check(
            8,
            "thread_determinism",
            name,
            "artifact sets differing across 1, 4, 8 threads",
            differing as f64,
            0.0,
            0.0,
        ));
    }
    Ok(out)
}

/// Criteria relevant to one system, or all of them for `None`.
pub fn verify(system: Option<&str>, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let systems: Vec<String> = match system {
        None | Some("all") => {
            for c in [
                criterion_1,
                criterion_2,
                criterion_3,
                criterion_4,
                criterion_5,
                criterion_6,
                criterion_7,
                criterion_8,
            ] {
                checks.extend(c(cfg)?);
            }
            ["bernoulli", "ledrappier", "times23", "rudin-shapiro"]
                .map(String::from)
                .to_vec()
        }
        Some(name) => {
            let keep = |records: Vec<CheckRecord>| -> Vec<CheckRecord> {
                records.into_iter().filter(|r| r.system.starts_with(name)).collect()
            };
            match name {
                "bernoulli" => {
                    checks.extend(keep(criterion_2(cfg)?));
                    checks.extend(criterion_5(cfg)?);
                    checks.extend(flatness_checks(cfg, fair_coin(), 2)?);
                    checks.extend(keep(criterion_8(cfg)?));
                }
                "ledrappier" => {
                    checks.extend(criterion_1(cfg)?);
                    checks.extend(keep(criterion_2(cfg)?));
                    checks.extend(keep(criterion_4(cfg)?));
                    checks.extend(flatness_checks(cfg, System::Ledrappier, 1)?);
                }
                "times23" => {
                    checks.extend(criterion_3(cfg)?);
                    checks.extend(keep(criterion_4(cfg)?));
                    checks.extend(flatness_checks(cfg, times23(), 6)?);
                }
                "rudin-shapiro" => {
                    checks.extend(criterion_7(cfg)?);
                    checks.extend(flatness_checks(cfg, System::RudinShapiro, 0)?);
                }
                other => {
                    return Err(crate::error::Error::InvalidArgument(format!(
                        "unknown system {other:?}"
                    )));
                }
            }
            vec![name.to_string()]
        }
    };
    Ok(VerifyReport::new(cfg, systems, checks))
}
