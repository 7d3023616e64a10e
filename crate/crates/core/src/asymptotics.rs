//! Exponent formulas for the two candidate universality classes and the
//! weighted least-squares fit of the loop-count growth law
//! `<k>_p ≈ σ' p + γ' ln p + κ'`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Observation;

/// String susceptibility exponent of a matter theory of central charge
/// `c <= 1` coupled to gravity.
pub fn gamma_exponent(c: f64) -> Result<f64> {
    if c.is_nan() || c > 1.0 {
        return Err(Error::Domain(format!("central charge {c} > 1")));
    }
    Ok((c - 1.0 - ((1.0 - c) * (25.0 - c)).sqrt()) / 12.0)
}

/// Candidate universality class of colored doodles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    /// Dense non-crossing loops.
    I,
    /// Spontaneously broken O(n) symmetry.
    II,
}

impl ModelId {
    pub const ALL: [ModelId; 2] = [ModelId::I, ModelId::II];
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::I => "I",
            ModelId::II => "II",
        })
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" | "i" => Ok(ModelId::I),
            "II" | "2" | "ii" => Ok(ModelId::II),
            other => Err(Error::Domain(format!(
                "unknown model {other:?}, expected I or II"
            ))),
        }
    }
}

/// Central charge of the model at loop weight `n ∈ [0, 2)`.
///
/// Model I uses `n = -2 cos(π g)` on the branch `1/2 <= g < 1` and
/// `c = 1 - 6 (√g - 1/√g)²`; model II has `c = n - 1`.
pub fn central_charge(model: ModelId, n: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&n) {
        return Err(Error::Domain(format!("loop weight {n} outside [0, 2)")));
    }
    Ok(match model {
        ModelId::I => {
            let g = (-n / 2.0).acos() / std::f64::consts::PI;
            let s = g.sqrt() - 1.0 / g.sqrt();
            1.0 - 6.0 * s * s
        }
        ModelId::II => n - 1.0,
    })
}

/// `γ(n) = gamma_exponent(central_charge(model, n))`.
pub fn gamma_of_weight(model: ModelId, n: f64) -> Result<f64> {
    gamma_exponent(central_charge(model, n)?)
}

/// Closed-form `dγ/dn` at `n = 1`: `3√3 / (4π)` for model I, `3/10` for II.
pub fn gamma_prime_prediction(model: ModelId) -> f64 {
    let closed = match model {
        ModelId::I => 3.0 * 3f64.sqrt() / (4.0 * std::f64::consts::PI),
        ModelId::II => 0.3,
    };
    debug_assert!((closed - gamma_prime_numeric(model)).abs() < 1e-8);
    closed
}

/// Step of the central difference used by [`gamma_prime_numeric`].
pub const DERIVATIVE_STEP: f64 = 1e-6;

/// Central difference of `n ↦ γ(c(n))` at `n = 1` with one Richardson
/// extrapolation step.
pub fn gamma_prime_numeric(model: ModelId) -> f64 {
    let f = |n: f64| gamma_of_weight(model, n).expect("n near 1 is in the domain");
    let central = |h: f64| (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
    let h = DERIVATIVE_STEP;
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

/// Weighted fit of the growth law over `lmin..=lmax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub sigma_prime: f64,
    pub gamma_prime: f64,
    pub kappa_prime: f64,
    /// Minimized `Σ ((mean - model) / err)²`.
    pub chi2: f64,
    pub ell_min: u32,
    pub ell_max: u32,
    pub points: usize,
}

impl FitResult {
    pub fn predict(&self, p: f64) -> f64 {
        self.sigma_prime * p + self.gamma_prime * p.ln() + self.kappa_prime
    }
}

/// Fits `σ' p + γ' ln p + κ'` to the observations with `2^lmin <= p <= 2^lmax`,
/// weighting each by `1 / err²`.
pub fn fit_loop_growth(data: &[Observation], ell_min: u32, ell_max: u32) -> Result<FitResult> {
    fit_loop_growth_with_log_base(data, ell_min, ell_max, std::f64::consts::E)
}

/// As [`fit_loop_growth`] with `log_base p` in place of `ln p`. Changing the
/// base divides `γ'` by `ln base` and leaves `σ'`, `κ'` and `χ²` unchanged.
pub fn fit_loop_growth_with_log_base(
    data: &[Observation],
    ell_min: u32,
    ell_max: u32,
    base: f64,
) -> Result<FitResult> {
    if !(base > 0.0 && base != 1.0) {
        return Err(Error::Domain(format!("logarithm base {base}")));
    }
    if ell_min > ell_max || ell_max >= 64 {
        return Err(Error::Underdetermined(format!(
            "empty size range {ell_min}..={ell_max}"
        )));
    }
    let (lo, hi) = (1u64 << ell_min, 1u64 << ell_max);
    let rows: Vec<&Observation> = data.iter().filter(|o| (lo..=hi).contains(&o.p)).collect();
    if rows.len() < 3 {
        return Err(Error::Underdetermined(format!(
            "{} points in range, need at least 3",
            rows.len()
        )));
    }
    if let Some(o) = rows.iter().find(|o| !o.err.is_finite() || o.err <= 0.0) {
        return Err(Error::Weight(format!("error {} at p = {}", o.err, o.p)));
    }

    let ln_base = base.ln();
    let m = rows.len();
    let mut design = DMatrix::<f64>::zeros(m, 3);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, o) in rows.iter().enumerate() {
        let w = 1.0 / o.err;
        let p = o.p as f64;
        design[(i, 0)] = p * w;
        design[(i, 1)] = p.ln() / ln_base * w;
        design[(i, 2)] = w;
        rhs[i] = o.mean * w;
    }

    // Equilibrate columns, then solve through a Householder QR.
    let scale: Vec<f64> = (0..3).map(|j| design.column(j).norm()).collect();
    let mut scaled = design.clone();
    for (j, s) in scale.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let largest = (0..3).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..3).any(|i| r[(i, i)].abs() <= 1e-12 * largest) {
        return Err(Error::Conditioning(
            "design matrix is rank deficient".into(),
        ));
    }
    let qtb = qr.q().transpose() * &rhs;
    let y = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Conditioning("singular triangular factor".into()))?;
    let coef: Vec<f64> = (0..3).map(|j| y[j] / scale[j]).collect();

    let residual = &rhs - &design * DVector::from_column_slice(&coef);
    Ok(FitResult {
        sigma_prime: coef[0],
        gamma_prime: coef[1],
        kappa_prime: coef[2],
        chi2: residual.norm_squared(),
        ell_min,
        ell_max,
        points: m,
    })
}

/// One fit per `lmin`, with `lmax` fixed at the largest power of two present.
pub fn fit_scan(
    data: &[Observation],
    ell_mins: impl IntoIterator<Item = u32>,
) -> Vec<Result<FitResult>> {
    let ell_max = data.iter().filter_map(Observation::ell).max();
    ell_mins
        .into_iter()
        .map(|lmin| match ell_max {
            Some(lmax) => fit_loop_growth(data, lmin, lmax),
            None => Err(Error::Underdetermined(
                "no power-of-two sizes in data".into(),
            )),
        })
        .collect()
}

pub const FIT_HEADER: &str = "lmin,sigma_prime,gamma_prime,kappa_prime,chi2";

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(
        sigma: f64,
        gamma: f64,
        kappa: f64,
        ells: std::ops::RangeInclusive<u32>,
    ) -> Vec<Observation> {
        ells.map(|l| {
            let p = (1u64 << l) as f64;
            Observation {
                p: 1 << l,
                mean: sigma * p + gamma * p.ln() + kappa,
                err: 1.0,
            }
        })
        .collect()
    }

    #[test]
    fn gamma_anchors() {
        assert!((gamma_exponent(0.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((gamma_exponent(-2.0).unwrap() + 1.0).abs() < 1e-15);
        let expect = -(1.0 + 13f64.sqrt()) / 6.0;
        assert!((gamma_exponent(-1.0).unwrap() - expect).abs() < 1e-15);
        assert_eq!(gamma_exponent(1.0).unwrap(), 0.0);
        assert!(matches!(gamma_exponent(1.5), Err(Error::Domain(_))));
        assert!(gamma_exponent(f64::NAN).is_err());
    }

    #[test]
    fn central_charge_anchors() {
        assert!(central_charge(ModelId::I, 1.0).unwrap().abs() < 1e-14);
        assert!((central_charge(ModelId::I, 0.0).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(central_charge(ModelId::II, 0.0).unwrap(), -1.0);
        assert_eq!(central_charge(ModelId::II, 1.0).unwrap(), 0.0);
        for m in ModelId::ALL {
            assert!((central_charge(m, 2.0 - 1e-12).unwrap() - 1.0).abs() < 1e-5);
            assert!(central_charge(m, 2.0).is_err());
            assert!(central_charge(m, -0.1).is_err());
        }
        let g = gamma_of_weight(ModelId::II, 0.0).unwrap();
        assert!((g + (1.0 + 13f64.sqrt()) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn predictions_match_numeric_derivative() {
        assert_eq!(gamma_prime_prediction(ModelId::II), 0.3);
        let one = gamma_prime_prediction(ModelId::I);
        assert!((one - 0.413_496_671_566).abs() < 1e-11);
        for m in ModelId::ALL {
            assert!((gamma_prime_numeric(m) - gamma_prime_prediction(m)).abs() < 1e-8);
        }
    }

    #[test]
    fn model_parse() {
        assert_eq!("II".parse::<ModelId>().unwrap(), ModelId::II);
        assert_eq!("1".parse::<ModelId>().unwrap(), ModelId::I);
        assert!("III".parse::<ModelId>().is_err());
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let data = synthetic(0.048, 0.3, -0.5, 2..=20);
        let fit = fit_loop_growth(&data, 2, 20).unwrap();
        assert!((fit.sigma_prime - 0.048).abs() < 1e-9);
        assert!((fit.gamma_prime - 0.3).abs() < 1e-9);
        assert!((fit.kappa_prime + 0.5).abs() < 1e-9);
        assert_eq!(fit.points, 19);
    }

    #[test]
    fn degenerate_inputs() {
        let data = synthetic(0.048, 0.3, -0.5, 2..=3);
        assert!(matches!(
            fit_loop_growth(&data, 2, 3),
            Err(Error::Underdetermined(_))
        ));
        let mut data = synthetic(0.048, 0.3, -0.5, 2..=6);
        data[1].err = 0.0;
        assert!(matches!(
            fit_loop_growth(&data, 2, 6),
            Err(Error::Weight(_))
        ));
        let same = vec![
            Observation {
                p: 4,
                mean: 1.0,
                err: 1.0,
            },
            Observation {
                p: 4,
                mean: 1.1,
                err: 1.0,
            },
            Observation {
                p: 4,
                mean: 0.9,
                err: 1.0,
            },
        ];
        assert!(matches!(
            fit_loop_growth(&same, 2, 2),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn scan_of_one_equals_single_fit() {
        let data = synthetic(0.05, 0.31, -0.4, 1..=15);
        let scan = fit_scan(&data, [4]);
        assert_eq!(scan.len(), 1);
        assert_eq!(
            *scan[0].as_ref().unwrap(),
            fit_loop_growth(&data, 4, 15).unwrap()
        );
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_to_design(
            noise in proptest::collection::vec(-1.0f64..1.0, 15),
            errs in proptest::collection::vec(0.01f64..2.0, 15),
        ) {
            let data: Vec<Observation> = (0..15u32).map(|i| {
                let l = i + 2;
                let p = (1u64 << l) as f64;
                Observation { p: 1 << l, mean: 0.048 * p + 0.3 * p.ln() - 0.5 + noise[i as usize] * errs[i as usize], err: errs[i as usize] }
            }).collect();
            let fit = fit_loop_growth(&data, 2, 16).unwrap();
            let cols: [fn(f64) -> f64; 3] = [|p| p, |p| p.ln(), |_| 1.0];
            for col in cols {
                let (mut dot, mut norm_a, mut norm_r) = (0.0, 0.0, 0.0);
                for o in &data {
                    let p = o.p as f64;
                    let a = col(p) / o.err;
                    let r = (o.mean - fit.predict(p)) / o.err;
                    dot += a * r;
                    norm_a += a * a;
                    norm_r += r * r;
                }
                prop_assert!(dot.abs() <= 1e-10 * (norm_a.sqrt() * norm_r.sqrt()).max(1e-300) + 1e-12);
            }
        }

        #[test]
        fn log_base_change_rescales_gamma(base in 1.5f64..20.0) {
            let data: Vec<Observation> = (2..=18u32).map(|l| {
                let p = (1u64 << l) as f64;
                Observation { p: 1 << l, mean: 0.048 * p + 0.3 * p.ln() - 0.5 + ((l * 7919) % 13) as f64 * 1e-3, err: 1e-2 }
            }).collect();
            let e = fit_loop_growth(&data, 2, 18).unwrap();
            let b = fit_loop_growth_with_log_base(&data, 2, 18, base).unwrap();
            prop_assert!((b.gamma_prime / base.ln() - e.gamma_prime).abs() < 1e-8);
            prop_assert!((b.sigma_prime - e.sigma_prime).abs() < 1e-12);
            prop_assert!((b.kappa_prime - e.kappa_prime).abs() < 1e-8);
            prop_assert!((b.chi2 - e.chi2).abs() <= 1e-8 * e.chi2.max(1.0));
        }

        #[test]
        fn gamma_is_increasing(a in -50.0f64..1.0, b in -50.0f64..1.0) {
            prop_assume!(a < b);
            prop_assert!(gamma_exponent(a).unwrap() < gamma_exponent(b).unwrap());
        }
    }
}
