//! Small statistical helpers: binomial intervals, normal quantiles,
//! goodness-of-fit p-values and least squares.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided normal quantile for confidence level `level` (e.g. 0.95 -> 1.96).
pub fn z_two_sided(level: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided quantile for a family of `m` comparisons at joint level `level`.
pub fn z_bonferroni(level: f64, m: usize) -> f64 {
    let alpha = (1.0 - level) / m.max(1) as f64;
    z_two_sided(1.0 - alpha)
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Binomial standard error of a proportion, floored at the one-success level
/// so that empty cells still carry an uncertainty.
pub fn proportion_stderr(successes: u64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n_f = n as f64;
    let p = (successes as f64 / n_f).clamp(0.5 / n_f, 1.0 - 0.5 / n_f);
    (p * (1.0 - p) / n_f).sqrt()
}

/// Upper-tail p-value of Pearson's chi-square test for `observed` counts
/// against `expected` probabilities.
pub fn chi_square_pvalue(observed: &[u64], expected_prob: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected_prob.len());
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_prob)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (observed.len() - 1).max(1) as f64;
    1.0 - ChiSquared::new(dof).expect("dof > 0").cdf(stat)
}

/// Kolmogorov-Smirnov statistic and asymptotic p-value against U(0,1).
pub fn ks_uniform(sample: &[f64]) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i as f64 + 1.0) / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Weighted least squares for `y = a + b x`; returns `(a, b, stderr_b)` where
/// the slope error is computed from the supplied per-point variances.
pub fn weighted_line_fit(xs: &[f64], ys: &[f64], variances: &[f64]) -> (f64, f64, f64) {
    let w: Vec<f64> = variances.iter().map(|v| 1.0 / v).collect();
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(xs).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(ys).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(xs).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(xs).zip(ys).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    (a, b, (sw / det).sqrt())
}

/// Ordinary least squares with an arbitrary design matrix (rows of regressors).
/// Returns coefficients and the residual sum of squares.
pub fn least_squares(design: &[Vec<f64>], ys: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = design.first()?.len();
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (row, &y) in design.iter().zip(ys) {
        for i in 0..p {
            aty[i] += row[i] * y;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve_dense(ata, aty)?;
    let rss = design
        .iter()
        .zip(ys)
        .map(|(row, &y)| {
            let fit: f64 = row.iter().zip(&coef).map(|(a, c)| a * c).sum();
            (y - fit).powi(2)
        })
        .sum();
    Some((coef, rss))
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_degenerate_cases() {
        let z = z_two_sided(0.95);
        assert!((z - 1.959964).abs() < 1e-5);
        let (lo, hi) = wilson_interval(0, 1, z);
        assert_eq!(lo, 0.0);
        assert!((hi - z * z / (1.0 + z * z)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(1, 1, z);
        assert!((lo - 1.0 / (1.0 + z * z)).abs() < 1e-12);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn wilson_contains_estimate_and_shrinks() {
        let z = z_two_sided(0.95);
        let (a, b) = wilson_interval(30, 100, z);
        let (c, d) = wilson_interval(3000, 10000, z);
        assert!(a <= 0.3 && 0.3 <= b);
        let ratio = (b - a) / (d - c);
        assert!((ratio - 10.0).abs() < 0.5, "width ratio {ratio}");
    }

    #[test]
    fn line_fit_is_exact_on_lines() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 1.5 * x).collect();
        let (a, b, _) = weighted_line_fit(&xs, &ys, &[1.0, 2.0, 1.0, 0.5]);
        assert!((a - 3.0).abs() < 1e-12 && (b + 1.5).abs() < 1e-12);
        let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let ys2: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x + 0.5 * x * x).collect();
        let (coef, rss) = least_squares(&design, &ys2).unwrap();
        assert!((coef[2] - 0.5).abs() < 1e-10 && rss < 1e-18);
    }

    #[test]
    fn chi_square_perfect_fit_has_high_pvalue() {
        assert!(chi_square_pvalue(&[250, 250, 250, 250], &[0.25; 4]) > 0.99);
        assert!(chi_square_pvalue(&[400, 200, 200, 200], &[0.25; 4]) < 1e-6);
    }
}
