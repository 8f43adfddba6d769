//! Runs the statistical acceptance checks over 20 seeds and prints, for each
//! check, the spread of the observed statistic and how many seeds pass.
//!
//! `cargo run --release -p planar-diffraction --example calibrate [size] [seeds]`

use std::collections::BTreeMap;

use planar_diffraction::job::verify::{criterion_2, criterion_3, criterion_5, criterion_6, criterion_7, VerifyConfig};

/// (criterion, system, check, quantity) -> (|empirical - oracle| per seed, tolerance, seeds passing)
type Stats = BTreeMap<(u8, String, String, String), (Vec<f64>, f64, usize)>;

fn main() -> planar_diffraction::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map_or(512, |s| s.parse().expect("size"));
    let seeds: u64 = args.next().map_or(20, |s| s.parse().expect("seed count"));

    let mut stats = Stats::new();
    for seed in 1..=seeds {
        let cfg = VerifyConfig::new(size, seed);
        for criterion in [criterion_2, criterion_3, criterion_5, criterion_6, criterion_7] {
            for r in criterion(&cfg)? {
                let entry =
                    stats
                        .entry((r.criterion, r.system, r.name, r.quantity))
                        .or_insert((Vec::new(), r.tolerance, 0));
                entry.0.push((r.empirical - r.oracle).abs());
                entry.2 += r.pass as usize;
            }
        }
    }

    println!("size {size}, {seeds} seeds; statistic is |empirical - oracle|");
    println!(
        "{:<3} {:<14} {:<28} {:>10} {:>10} {:>10} {:>9} {:>6}",
        "c", "system", "check", "min", "mean", "max", "tol", "pass"
    );
    for ((c, system, name, _), (values, tol, passed)) in &stats {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(0.0, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!(
            "{c:<3} {system:<14} {name:<28} {min:>10.3e} {mean:>10.3e} {max:>10.3e} {tol:>9.1e} {:>3}/{}",
            passed,
            values.len()
        );
    }
    Ok(())
}
