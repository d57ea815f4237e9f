use crate::{Error, Result};

const SUM_TOL: f64 = 1e-6;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::NotADistribution(format!("{name} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::NotADistribution(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// Jensen–Shannon divergence in nats, bounded by `ln 2`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    check_distribution(p, "P")?;
    check_distribution(q, "Q")?;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            total += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            total += 0.5 * b * (b / m).ln();
        }
    }
    Ok(total.clamp(0.0, std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn analytic_cases() {
        assert_eq!(js_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let max = js_divergence(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((max - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn formula_oracle() {
        // ½[0.5 ln(0.5/0.7) + 0.5 ln(0.5/0.3)] + ½[0.9 ln(0.9/0.7) + 0.1 ln(0.1/0.3)]
        let m = [0.7, 0.3];
        let kl_p = 0.5 * (0.5f64 / m[0]).ln() + 0.5 * (0.5f64 / m[1]).ln();
        let kl_q = 0.9 * (0.9f64 / m[0]).ln() + 0.1 * (0.1f64 / m[1]).ln();
        let expected = 0.5 * kl_p + 0.5 * kl_q;
        let got = js_divergence(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_distributions() {
        assert!(js_divergence(&[0.5, 0.6], &[0.5, 0.5]).is_err());
        assert!(js_divergence(&[1.5, -0.5], &[0.5, 0.5]).is_err());
        assert!(js_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("non-zero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded((p, q) in (2usize..6).prop_flat_map(|n| (dist(n), dist(n)))) {
            let a = js_divergence(&p, &q).unwrap();
            let b = js_divergence(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=std::f64::consts::LN_2).contains(&a));
            prop_assert!(js_divergence(&p, &p).unwrap() < 1e-12);
        }
    }
}
