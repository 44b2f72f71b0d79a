use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided paired t-test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_diff: f64,
    /// Set when the differences have zero variance; `t` is then 0 or
    /// signed infinity and `p` is 1 or 0.
    pub degenerate: bool,
}

/// Paired t-test of `a - b`, where position `i` of both slices is the same group.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "paired t-test needs two equal-length samples of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let df = a.len() - 1;
    if var == 0.0 {
        let (t, p) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TTest {
            t,
            p,
            df,
            mean_diff: mean,
            degenerate: true,
        });
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest {
        t,
        p,
        df,
        mean_diff: mean,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_five_pairs() {
        // Differences (2, 1, 0, 3, 1): mean 1.4, sd sqrt(1.3), t = 2.7456 on
        // 4 df, just short of the 2.776 two-sided 5% critical value.
        let r = paired_t_test(&[10.0, 12.0, 9.0, 14.0, 11.0], &[8.0, 11.0, 9.0, 11.0, 10.0]).unwrap();
        assert!((r.t - 2.745625891934576).abs() < 1e-12);
        assert!((r.p - 0.05160595781117475).abs() < 1e-9, "{}", r.p);
        assert_eq!(r.df, 4);
        assert!(!r.degenerate);
    }

    #[test]
    fn identical_samples() {
        let r = paired_t_test(&[0.3, 0.5, 0.1], &[0.3, 0.5, 0.1]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(r.degenerate);
    }

    #[test]
    fn constant_shift() {
        let b = [0.25, 0.5, 0.75, 0.0];
        let a: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.degenerate);
        assert!(r.t > 0.0 && r.t.is_infinite());
        assert_eq!(r.p, 0.0);
    }

    #[test]
    fn length_checks() {
        assert!(paired_t_test(&[1.0], &[2.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[2.0]).is_err());
    }
}
