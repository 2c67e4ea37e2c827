//! One-sided Welch t-test for "mean(a) < mean(b)" comparisons between
//! per-run metric samples.

use prefap::{Error, Result};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// p-values are clamped away from zero so `-log10(p)` stays finite and
/// serializable.
const MIN_P: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
    /// One-sided p-value for the alternative mean(a) < mean(b).
    pub p: f64,
    pub neg_log10_p: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch's unequal-variance t-test, one-sided for `mean(a) < mean(b)`.
/// Identical samples give p = 0.5; two zero-variance samples with equal
/// means have no defined statistic and error out.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidConfig(
            "t-test needs at least 2 values per sample".into(),
        ));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));

    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        if ma == mb {
            return Err(Error::DegenerateSample);
        }
        // Constant samples with separated means: the direction is certain.
        let p = if ma < mb { MIN_P } else { 1.0 };
        return Ok(TTest {
            t: if ma < mb { f64::NEG_INFINITY } else { f64::INFINITY },
            df: (na + nb - 2.0).max(1.0),
            p,
            neg_log10_p: -p.log10(),
        });
    }

    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidConfig(format!("t distribution: {e}")))?;
    let p = dist.cdf(t).clamp(MIN_P, 1.0);
    Ok(TTest {
        t,
        df,
        p,
        neg_log10_p: -p.log10(),
    })
}
