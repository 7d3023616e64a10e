//! Monte Carlo estimation of the mean loop count.
//!
//! Sample `i` of a run with base seed `s` draws from `substream(s, i)`, and
//! the per-sample loop counts are accumulated as exact integers, so a run is
//! bit-identical whatever the number of worker threads.

use std::io::{Read, Write};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::check_size;
use crate::rng::{derive_seed, substream};
use crate::sampler::Sampler;
use crate::strands::count_loops_with;

/// Default per-size sample cap.
pub const DEFAULT_MAX_SAMPLES: u64 = 1_000_000;

/// Samples handed to one worker task.
const BLOCK: u64 = 256;

/// A measured (or published) mean with its standard error at size `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub p: u64,
    pub mean: f64,
    pub err: f64,
}

impl Observation {
    /// `log2 p` when `p` is a power of two.
    pub fn ell(&self) -> Option<u32> {
        self.p.is_power_of_two().then(|| self.p.trailing_zeros())
    }
}

/// Estimate of the mean number of loops at one size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p: u64,
    pub samples: u64,
    pub mean: f64,
    /// `sqrt(variance / samples)`.
    pub stderr: f64,
    /// Unbiased sample variance of the loop count.
    pub variance: f64,
    pub sum_k: u128,
    pub sum_k2: u128,
}

impl Estimate {
    pub fn from_sums(p: u64, samples: u64, sum_k: u128, sum_k2: u128) -> Result<Self> {
        if samples < 2 {
            return Err(Error::Statistics(format!(
                "variance needs at least 2 samples, got {samples}"
            )));
        }
        let n = samples as u128;
        // N Σk² - (Σk)² is a non-negative integer.
        let spread = n
            .checked_mul(sum_k2)
            .zip(sum_k.checked_mul(sum_k))
            .map(|(a, b)| (a - b) as f64)
            .unwrap_or_else(|| {
                let (nf, s, s2) = (n as f64, sum_k as f64, sum_k2 as f64);
                (nf * s2 - s * s).max(0.0)
            });
        let nf = samples as f64;
        let variance = spread / (nf * (nf - 1.0));
        Ok(Estimate {
            p,
            samples,
            mean: sum_k as f64 / nf,
            stderr: (variance / nf).sqrt(),
            variance,
            sum_k,
            sum_k2,
        })
    }

    pub fn observation(&self) -> Observation {
        Observation {
            p: self.p,
            mean: self.mean,
            err: self.stderr,
        }
    }

    pub fn ell(&self) -> Option<u32> {
        self.observation().ell()
    }
}

/// Exact `(Σk, Σk²)` over samples `range` of the stream family `seed`.
pub fn loop_sums(p: usize, range: std::ops::Range<u64>, seed: u64) -> Result<(u128, u128)> {
    let mut sampler = Sampler::new();
    let mut seen = Vec::new();
    let (mut s1, mut s2) = (0u128, 0u128);
    for i in range {
        let mut rng = substream(seed, i);
        let map = sampler.sample(p, &mut rng)?;
        let k = count_loops_with(map, &mut seen);
        assert!(k <= p, "loop count {k} exceeds size {p}");
        s1 += k as u128;
        s2 += (k * k) as u128;
    }
    Ok((s1, s2))
}

/// Mean and variance of the loop count over `samples` uniform maps of size
/// `p`. Runs on the current rayon pool.
pub fn monte_carlo(p: usize, samples: u64, seed: u64) -> Result<Estimate> {
    check_size(p)?;
    if samples < 2 {
        return Err(Error::Statistics(format!(
            "at least 2 samples required, got {samples}"
        )));
    }
    let blocks = samples.div_ceil(BLOCK);
    let (s1, s2) = (0..blocks)
        .into_par_iter()
        .map(|b| loop_sums(p, b * BLOCK..((b + 1) * BLOCK).min(samples), seed))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Estimate::from_sums(p as u64, samples, s1, s2)
}

/// `min(cap, budget / 2^ell)`, at least 2.
pub fn default_samples(ell: u32, budget: u64, cap: u64) -> u64 {
    (budget >> ell.min(63)).min(cap).max(2)
}

/// One estimate per `p = 2^ell`; size `ell` uses base seed
/// `derive_seed(seed, ell)`.
pub fn size_sweep(
    ells: RangeInclusive<u32>,
    samples: impl Fn(u32) -> u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if *ells.start() < 1 || ells.start() > ells.end() {
        return Err(Error::Size(format!(
            "size range {}..={} must satisfy 1 <= min <= max",
            ells.start(),
            ells.end()
        )));
    }
    if *ells.end() >= 31 {
        return Err(Error::Capacity(format!("2^{} vertices", ells.end())));
    }
    ells.map(|ell| monte_carlo(1usize << ell, samples(ell), derive_seed(seed, ell as u64)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UEntry {
    pub ell: u32,
    pub u: f64,
    pub err: f64,
}

/// `u_ell = 2 k_ell - k_{ell+1}`: the linear term cancels, leaving an
/// affine function of `ell` with slope `gamma' · ln 2` if the growth law holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct USeries {
    pub entries: Vec<UEntry>,
}

/// Builds the u-series from observations at consecutive powers of two.
pub fn u_series(points: &[Observation]) -> Result<USeries> {
    let mut sorted: Vec<(u32, Observation)> = points
        .iter()
        .map(|o| {
            o.ell()
                .map(|l| (l, *o))
                .ok_or_else(|| Error::Series(format!("p = {} is not a power of two", o.p)))
        })
        .collect::<Result<_>>()?;
    sorted.sort_by_key(|(l, _)| *l);
    for w in sorted.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(Error::Series(format!(
                "sizes must be consecutive powers of two; gap between ell={} and ell={}",
                w[0].0, w[1].0
            )));
        }
    }
    let entries = sorted
        .windows(2)
        .map(|w| {
            let (ell, a) = w[0];
            let b = w[1].1;
            UEntry {
                ell,
                u: 2.0 * a.mean - b.mean,
                err: (4.0 * a.err * a.err + b.err * b.err).sqrt(),
            }
        })
        .collect();
    Ok(USeries { entries })
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const ESTIMATE_HEADER: &str = "ell,p,N,mean,stderr,variance";

/// Writes the estimate table. Lines starting with `#` before the header
/// carry run metadata.
pub fn write_estimates_csv<W: Write>(
    mut w: W,
    metadata: &[String],
    rows: &[Estimate],
) -> Result<()> {
    for m in metadata {
        writeln!(w, "# {m}")?;
    }
    writeln!(w, "{ESTIMATE_HEADER}")?;
    for e in rows {
        let ell = e.ell().map(|l| l.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{ell},{},{},{},{},{}",
            e.p,
            e.samples,
            fmt_f64(e.mean),
            fmt_f64(e.stderr),
            fmt_f64(e.variance)
        )?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct EstimateRow {
    #[allow(dead_code)]
    ell: Option<u32>,
    p: u64,
    #[serde(rename = "N")]
    n: u64,
    mean: f64,
    stderr: f64,
    variance: f64,
}

/// Reads a table written by [`write_estimates_csv`]. Exact sums are not
/// stored in the file and come back as zero.
pub fn read_estimates_csv<R: Read>(r: R) -> Result<Vec<Estimate>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    reader
        .deserialize::<EstimateRow>()
        .map(|row| {
            let row = row?;
            Ok(Estimate {
                p: row.p,
                samples: row.n,
                mean: row.mean,
                stderr: row.stderr,
                variance: row.variance,
                sum_k: 0,
                sum_k2: 0,
            })
        })
        .collect()
}

pub fn write_useries_csv<W: Write>(mut w: W, metadata: &[String], series: &USeries) -> Result<()> {
    for m in metadata {
        writeln!(w, "# {m}")?;
    }
    writeln!(w, "ell,u,err")?;
    for e in &series.entries {
        writeln!(w, "{},{},{}", e.ell, fmt_f64(e.u), fmt_f64(e.err))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(ell: u32, mean: f64, err: f64) -> Observation {
        Observation {
            p: 1 << ell,
            mean,
            err,
        }
    }

    #[test]
    fn two_point_variance() {
        // k = 0 and k = 1: sample variance 1/2.
        let e = Estimate::from_sums(2, 2, 1, 1).unwrap();
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.variance, 0.5);
        assert_eq!(e.stderr, 0.5);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            Estimate::from_sums(2, 1, 0, 0),
            Err(Error::Statistics(_))
        ));
        assert!(matches!(monte_carlo(2, 1, 0), Err(Error::Statistics(_))));
        assert!(matches!(monte_carlo(0, 10, 0), Err(Error::Size(_))));
    }

    #[test]
    fn two_sample_run_matches_closed_form() {
        let e = monte_carlo(2, 2, 5).unwrap();
        let (s1, s2) = loop_sums(2, 0..2, 5).unwrap();
        // At p = 2 every k is 0 or 1, so Σk² = Σk and the two-point
        // variance (k1 - k2)² / 2 equals 2 m (1 - m).
        assert_eq!(s1, s2);
        let mean = s1 as f64 / 2.0;
        assert_eq!(e.mean, mean);
        assert_eq!(e.variance, 2.0 * mean * (1.0 - mean));
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(33, 3000, 77).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn sweep_shape_and_seeds() {
        let rows = size_sweep(1..=4, |_| 100, 3).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().map(|e| e.p).collect::<Vec<_>>(), [2, 4, 8, 16]);
        assert_eq!(rows, size_sweep(1..=4, |_| 100, 3).unwrap());
        assert!(size_sweep(0..=3, |_| 10, 1).is_err());
        assert!(size_sweep(RangeInclusive::new(3, 2), |_| 10, 1).is_err());
    }

    #[test]
    fn default_sample_budget() {
        assert_eq!(default_samples(1, 1 << 40, DEFAULT_MAX_SAMPLES), 1_000_000);
        assert_eq!(default_samples(20, 1 << 30, DEFAULT_MAX_SAMPLES), 1024);
        assert_eq!(default_samples(40, 10, DEFAULT_MAX_SAMPLES), 2);
    }

    #[test]
    fn useries_from_table_values() {
        let s = u_series(&[obs(1, 0.1111, 0.0), obs(2, 0.3228, 0.0)]).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert!((s.entries[0].u - (-0.1006)).abs() < 1e-12);
    }

    #[test]
    fn useries_of_constant_is_constant() {
        let pts: Vec<_> = (1..8).map(|l| obs(l, 2.5, 0.1)).collect();
        let s = u_series(&pts).unwrap();
        assert!(s.entries.iter().all(|e| e.u == 2.5));
        assert!((s.entries[0].err - (0.05f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn useries_of_growth_law_is_affine() {
        let (sigma, gamma, kappa) = (0.048, 0.3, -0.5);
        let ln2 = std::f64::consts::LN_2;
        let pts: Vec<_> = (1..20)
            .map(|l| {
                obs(
                    l,
                    sigma * (1u64 << l) as f64 + gamma * l as f64 * ln2 + kappa,
                    1.0,
                )
            })
            .collect();
        let s = u_series(&pts).unwrap();
        for e in &s.entries {
            let expect = (e.ell as f64 - 1.0) * gamma * ln2 + kappa;
            assert!((e.u - expect).abs() < 1e-9, "ell={}", e.ell);
        }
    }

    #[test]
    fn useries_rejects_gaps() {
        assert!(matches!(
            u_series(&[obs(1, 0.0, 1.0), obs(3, 0.0, 1.0)]),
            Err(Error::Series(_))
        ));
        assert!(matches!(
            u_series(&[Observation {
                p: 3,
                mean: 0.0,
                err: 1.0
            }]),
            Err(Error::Series(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let rows = size_sweep(1..=3, |_| 50, 9).unwrap();
        let mut buf = Vec::new();
        write_estimates_csv(&mut buf, &["seed: 9".into()], &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed: 9\nell,p,N,mean,stderr,variance\n1,2,50,"));
        let back = read_estimates_csv(buf.as_slice()).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(
                (a.p, a.samples, a.mean, a.stderr, a.variance),
                (b.p, b.samples, b.mean, b.stderr, b.variance)
            );
        }
    }
}
