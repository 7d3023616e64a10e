//! Published reference data shipped with the crate.
//!
//! `mean_loops.csv` lists the mean loop count `k_ell` at `p = 2^ell` for
//! `ell = 1..=24` with the published standard deviations. `growth_fits.csv` lists
//! the published growth-law fits for `lmin = 2..=19`.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::stats::Observation;

pub const MEAN_LOOPS_CSV: &str = include_str!("../data/mean_loops.csv");
pub const GROWTH_FITS_CSV: &str = include_str!("../data/growth_fits.csv");

/// Largest `ell` in the published table.
pub const MEAN_LOOPS_MAX_ELL: u32 = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct MeanLoopsRow {
    pub ell: u32,
    pub k: f64,
    /// Published standard deviation; zero when below the printed precision.
    pub err: f64,
    /// Decimal places printed for `k`.
    pub decimals: u32,
}

impl MeanLoopsRow {
    /// One unit of the last printed digit.
    pub fn unit(&self) -> f64 {
        10f64.powi(-(self.decimals as i32))
    }

    /// Error used for weighting: the published value, or half a unit of the
    /// last printed digit when the published value is zero.
    pub fn weight_err(&self) -> f64 {
        if self.err > 0.0 {
            self.err
        } else {
            0.5 * self.unit()
        }
    }

    pub fn observation(&self) -> Observation {
        Observation {
            p: 1u64 << self.ell,
            mean: self.k,
            err: self.weight_err(),
        }
    }
}

#[derive(Deserialize)]
struct RawRow {
    ell: u32,
    k: String,
    err: f64,
}

/// Parses a table in the `ell,k,err` layout of the shipped fixture.
pub fn parse_mean_loops(text: &str) -> Result<Vec<MeanLoopsRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .deserialize::<RawRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row?;
            let k: f64 = row.k.trim().parse().map_err(|e| Error::Parse {
                line: i + 2,
                msg: format!("k: {e}"),
            })?;
            let decimals = row
                .k
                .trim()
                .split_once('.')
                .map_or(0, |(_, f)| f.len() as u32);
            Ok(MeanLoopsRow {
                ell: row.ell,
                k,
                err: row.err,
                decimals,
            })
        })
        .collect()
}

pub fn mean_loops() -> Vec<MeanLoopsRow> {
    parse_mean_loops(MEAN_LOOPS_CSV).expect("shipped fixture parses")
}

/// The mean table as fit input, with the half-unit convention for zero errors.
pub fn mean_loops_observations() -> Vec<Observation> {
    mean_loops().iter().map(MeanLoopsRow::observation).collect()
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct GrowthFitRow {
    pub lmin: u32,
    pub sigma_prime: f64,
    pub gamma_prime: f64,
    pub kappa_prime: f64,
    pub chi2: f64,
}

pub fn growth_fits() -> Vec<GrowthFitRow> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(GROWTH_FITS_CSV.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .expect("shipped fixture parses")
}
