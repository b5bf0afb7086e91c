//! Correlation and paired-significance statistics for experiment tables.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelationReport {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    /// 95% confidence interval for Pearson r via the Fisher transform.
    pub fisher_ci_low: f64,
    pub fisher_ci_high: f64,
    pub n_points: usize,
}

/// Pearson and Spearman correlation with a Fisher-transform 95% CI on r.
/// Spearman uses average ranks on ties.
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<CorrelationReport> {
    if xs.len() != ys.len() {
        return Err(HarnessError::Stats(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 4 {
        return Err(HarnessError::Stats(format!(
            "need at least 4 points, got {n}"
        )));
    }
    let pearson_r = pearson(xs, ys)?;
    let spearman_rho = pearson(&ranks(xs), &ranks(ys))?;

    let z = pearson_r.clamp(-1.0, 1.0).atanh();
    let half = 1.96 / ((n - 3) as f64).sqrt();
    Ok(CorrelationReport {
        pearson_r,
        spearman_rho,
        fisher_ci_low: (z - half).tanh(),
        fisher_ci_high: (z + half).tanh(),
        n_points: n,
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(HarnessError::Stats("zero variance input".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairedTest {
    /// Mean of `variant - base`.
    pub delta_mean: f64,
    /// Two-sided paired t-test p-value.
    pub p_value: f64,
    /// Significance stars: 3 for p<0.001, 2 for p<0.01, 1 for p<0.05.
    pub stars: u8,
    /// All differences identical but nonzero: the t statistic is undefined
    /// and the reported p-value of 0 should not be trusted.
    pub degenerate: bool,
}

pub fn stars_for(p: f64) -> u8 {
    if p < 0.001 {
        3
    } else if p < 0.01 {
        2
    } else if p < 0.05 {
        1
    } else {
        0
    }
}

/// Two-sided paired t-test of `variant` against `base` (paired by index).
pub fn paired_test(base: &[f64], variant: &[f64]) -> Result<PairedTest> {
    if base.len() != variant.len() {
        return Err(HarnessError::Stats(format!(
            "length mismatch: {} vs {}",
            base.len(),
            variant.len()
        )));
    }
    let n = base.len();
    if n < 2 {
        return Err(HarnessError::Stats(format!(
            "need at least 2 pairs, got {n}"
        )));
    }
    let diffs: Vec<f64> = variant.iter().zip(base).map(|(v, b)| v - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;

    if var == 0.0 {
        return Ok(if mean == 0.0 {
            PairedTest {
                delta_mean: 0.0,
                p_value: 1.0,
                stars: 0,
                degenerate: false,
            }
        } else {
            PairedTest {
                delta_mean: mean,
                p_value: 0.0,
                stars: 3,
                degenerate: true,
            }
        });
    }

    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| HarnessError::Stats(e.to_string()))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(PairedTest {
        delta_mean: mean,
        p_value: p,
        stars: stars_for(p),
        degenerate: false,
    })
}

/// Mean and half-width of a 95% t-interval, the `mean ± ci` convention of
/// the result tables.
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(HarnessError::Stats("need at least 2 values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| HarnessError::Stats(e.to_string()))?;
    let t = dist.inverse_cdf(0.975);
    Ok((mean, t * (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_linear_relation() {
        let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let r = correlate(&xs, &ys).unwrap();
        assert!((r.pearson_r - 1.0).abs() < 1e-12);
        assert!((r.spearman_rho - 1.0).abs() < 1e-12);
        assert!(r.fisher_ci_high >= r.pearson_r && r.pearson_r >= r.fisher_ci_low);
    }

    #[test]
    fn monotone_nonlinear_relation() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.exp()).collect();
        let r = correlate(&xs, &ys).unwrap();
        assert!((r.spearman_rho - 1.0).abs() < 1e-12);
        assert!(r.pearson_r < 1.0 - 1e-6);
    }

    #[test]
    fn hand_ranked_dataset() {
        // Brute-force rank computation for {(1,2),(2,1),(3,4),(4,3),(5,5)}:
        // x ranks (1,2,3,4,5), y ranks (2,1,4,3,5), so Σd² = 4 and
        // ρ = 1 - 6·4/(5·24) = 0.8.
        let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = vec![2.0, 1.0, 4.0, 3.0, 5.0];
        let r = correlate(&xs, &ys).unwrap();
        assert!((r.spearman_rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn affine_invariance_of_correlations() {
        let xs = vec![0.3, -1.0, 2.5, 0.9, 4.0, -2.2];
        let ys = vec![1.0, 0.2, 2.0, 1.4, 2.5, -0.3];
        let base = correlate(&xs, &ys).unwrap();
        let xs2: Vec<f64> = xs.iter().map(|x| 3.0 * x + 7.0).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| 0.5 * y - 2.0).collect();
        let scaled = correlate(&xs2, &ys2).unwrap();
        assert!((base.pearson_r - scaled.pearson_r).abs() < 1e-12);
        assert!((base.spearman_rho - scaled.spearman_rho).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_is_an_error() {
        let xs = vec![1.0; 5];
        let ys = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(correlate(&xs, &ys).is_err());
    }

    #[test]
    fn identical_vectors_have_no_effect() {
        let vals = vec![0.8, 0.7, 0.9, 0.85];
        let t = paired_test(&vals, &vals).unwrap();
        assert_eq!(t.delta_mean, 0.0);
        assert_eq!(t.p_value, 1.0);
        assert_eq!(t.stars, 0);
        assert!(!t.degenerate);
    }

    #[test]
    fn constant_shift_is_flagged_degenerate() {
        let base = vec![0.5, 0.6, 0.7];
        let reg: Vec<f64> = base.iter().map(|v| v + 1.0).collect();
        let t = paired_test(&base, &reg).unwrap();
        assert_eq!(t.delta_mean, 1.0);
        assert!(t.degenerate);
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars_for(0.04), 1);
        assert_eq!(stars_for(0.009), 2);
        assert_eq!(stars_for(0.0009), 3);
        assert_eq!(stars_for(0.2), 0);
    }
}
