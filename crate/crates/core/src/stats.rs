//! Descriptive statistics and the Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean of the deviations from the first value, and that value.
///
/// Shifting keeps constant samples exact (mean equal to the value, zero
/// spread) and limits cancellation.
fn shifted_mean<T: Real>(xs: &[T]) -> Option<(T, T)> {
    let k = *xs.first()?;
    let d = xs.iter().map(|&x| x - k).sum::<T>() / T::of_count(xs.len() as u64);
    Some((k, d))
}

pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    shifted_mean(xs).map(|(k, d)| k + d)
}

/// Population standard deviation (divides by `n`).
pub fn population_std<T: Real>(xs: &[T]) -> Option<T> {
    let (k, d) = shifted_mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - k - d) * (x - k - d)).sum();
    Some((ss / T::of_count(xs.len() as u64)).sqrt())
}

/// Linear-interpolation quantile (Hyndman & Fan type 7).
pub fn quantile<T: Real>(xs: &[T], q: f64) -> Option<T> {
    if xs.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile input has no NaN"));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = T::of(h - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

pub fn median<T: Real>(xs: &[T]) -> Option<T> {
    quantile(xs, 0.5)
}

/// Five-number-style summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Summary> {
        Some(Summary {
            n: xs.len(),
            mean: mean(xs)?,
            std: population_std(xs)?,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            q1: quantile(xs, 0.25)?,
            median: quantile(xs, 0.5)?,
            q3: quantile(xs, 0.75)?,
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    /// Permutation distribution of the signed ranks, enumerated.
    Exact,
    /// Normal approximation with tie correction, no continuity correction.
    Normal,
    /// Every paired difference is zero; no test is possible.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_pairs: usize,
    /// Pairs left after dropping zero differences.
    pub n_used: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p-value; `None` when degenerate.
    pub p_value: Option<f64>,
    pub method: WilcoxonMethod,
}

/// Largest number of non-zero pairs handled with the exact distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples `x - y`.
///
/// Zero differences are dropped, tied magnitudes get average ranks. Up to
/// [`WILCOXON_EXACT_MAX`] pairs the null distribution is enumerated exactly
/// (ties included, on doubled ranks); above that a normal approximation is
/// used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "paired samples of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(Error::InvalidArgument("NaN in paired samples".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n_pairs: x.len(),
            n_used: 0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: None,
            method: WilcoxonMethod::Degenerate,
        });
    }

    let doubled = doubled_ranks(&diffs);
    let w_plus2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total2: u64 = doubled.iter().sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;

    let (p, method) = if n <= WILCOXON_EXACT_MAX {
        (exact_p_value(&doubled, w_plus2), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_groups(&doubled)
            .map(|t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = (w_plus - mu).abs() / var.sqrt();
            erfc(z / std::f64::consts::SQRT_2)
        };
        (p.min(1.0), WilcoxonMethod::Normal)
    };

    Ok(WilcoxonResult {
        n_pairs: x.len(),
        n_used: n,
        w_plus,
        w_minus,
        p_value: Some(p),
        method,
    })
}

/// Average ranks of `|d|`, times two so they stay integral.
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().partial_cmp(&diffs[b].abs()).unwrap());
    let mut ranks = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // ranks i+1 ..= j+1, average doubled = (i+1) + (j+1)
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

fn tie_groups(doubled: &[u64]) -> impl Iterator<Item = usize> {
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        groups.push(j);
        i += j;
    }
    groups.into_iter()
}

fn exact_p_value(doubled: &[u64], w_plus2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    // counts[s] = number of sign assignments with doubled W+ = s
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let w = w_plus2 as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sample(d: &[f64]) -> WilcoxonResult {
        wilcoxon_signed_rank(d, &vec![0.0; d.len()]).unwrap()
    }

    #[test]
    fn descriptive() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), Some(2.5));
        assert!((population_std::<f64>(&xs).unwrap() - 1.118_033_988_749_895).abs() < 1e-15);
        assert_eq!(median(&xs), Some(2.5));
        assert_eq!(quantile(&xs, 0.25), Some(1.75));
        assert_eq!(quantile::<f64>(&[], 0.5), None);
        assert_eq!(median(&[3.0f32, 1.0, 2.0]), Some(2.0));
    }

    // Reference p-values from scipy.stats.wilcoxon.
    #[test]
    fn exact_matches_reference() {
        let r = one_sample(&[1.5, 2.3, -0.4, 3.1, 0.7, -1.2, 2.2, 1.9]);
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.w_minus, 4.0);
        assert!((r.p_value.unwrap() - 0.0546875).abs() < 1e-12);

        let r = one_sample(&[3.0, -1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, -5.0, 3.5, 5.8, 9.7]);
        assert_eq!(r.w_minus, 9.0);
        assert!((r.p_value.unwrap() - 0.01611328125).abs() < 1e-12);
    }

    #[test]
    fn normal_matches_reference() {
        let z: Vec<f64> = (1..=30)
            .map(|v| if v % 4 == 0 { -(v as f64) } else { v as f64 })
            .collect();
        let r = one_sample(&z);
        assert_eq!(r.method, WilcoxonMethod::Normal);
        assert_eq!(r.w_minus, 112.0);
        assert!((r.p_value.unwrap() - 0.01319416986541395).abs() < 1e-10);

        let y = [
            1., 2., 2., 3., -1., 4., 4., -2., 5., 1., 3., 3., 2., 6., -3., 7., 2., 8., 1., 9., 2., 10., 3., 11., 2.,
            12., 1., 13.,
        ];
        let r = one_sample(&y);
        assert_eq!(r.w_minus, 27.0);
        assert!((r.p_value.unwrap() - 5.809220446418906e-05).abs() < 1e-12);
    }

    /// Brute-force sign enumeration as an independent oracle, ties included.
    fn brute_force_p(d: &[f64]) -> f64 {
        let d: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
        let n = d.len();
        let mut mags: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = |v: f64| {
            let below = mags.iter().filter(|m| **m < v).count() as f64;
            let eq = mags.iter().filter(|m| **m == v).count() as f64;
            below + (eq + 1.0) / 2.0
        };
        let ranks: Vec<f64> = d.iter().map(|x| rank(x.abs())).collect();
        let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0..(1u64 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w <= observed + 1e-9 {
                le += 1;
            }
            if w >= observed - 1e-9 {
                ge += 1;
            }
        }
        let all = (1u64 << n) as f64;
        (2.0 * (le.min(ge) as f64) / all).min(1.0)
    }

    #[test]
    fn exact_with_ties_matches_enumeration() {
        let cases: [&[f64]; 4] = [
            &[1.0, 1.0, -1.0, 2.0, 2.0, 3.0, -3.0, 0.0, 4.0],
            &[5.0, 5.0, 5.0, 5.0, -5.0],
            &[-2.0, -2.0, 1.0, 3.0, 3.0, 3.0, 7.0, -0.5, 0.5, 9.0, 9.0, 1.0],
            &[1.0],
        ];
        for d in cases {
            let r = one_sample(d);
            assert!((r.p_value.unwrap() - brute_force_p(d)).abs() < 1e-12, "case {d:?}");
        }
    }

    #[test]
    fn all_zero_is_degenerate() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Degenerate);
        assert_eq!(r.p_value, None);
        assert!(wilcoxon_signed_rank(&[1.0], &[]).is_err());
    }
}
