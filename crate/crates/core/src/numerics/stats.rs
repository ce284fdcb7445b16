//! Moments and correlation. Variances use the population (1/n) convention.

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    // Shifting by the first value makes constant sequences exact.
    let x0 = values[0];
    Ok(x0 + values.iter().map(|v| v - x0).sum::<f64>() / values.len() as f64)
}

pub fn pop_var(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    Ok(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

pub fn pop_std(values: &[f64]) -> Result<f64> {
    pop_var(values).map(f64::sqrt)
}

/// Pearson correlation coefficient, clamped to [−1, 1].
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "pearson over sequences of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs at least two points".into(),
        ));
    }
    let ma = mean(a)?;
    let mb = mean(b)?;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateSeries("zero variance input".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&[1.0, 3.0, 5.0, 7.0]).unwrap(), 4.0);
        assert_eq!(mean(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(mean(&[5.0]).unwrap(), 5.0);
        assert!(matches!(mean(&[]), Err(Error::EmptyInput)));
        assert_eq!(Error::EmptyInput.to_string(), "empty input");
    }

    #[test]
    fn std_and_var_examples() {
        assert_eq!(pop_std(&[2.0, 6.0]).unwrap(), 2.0);
        assert_eq!(pop_std(&[3.3; 3]).unwrap(), 0.0);
        assert_eq!(pop_std(&[0.0, 2.0, 0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(pop_var(&[0.0, 2.0, 0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(pop_var(&[-1.5; 7]).unwrap(), 0.0);
        assert!((pop_var(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(pop_var(&[]).is_err());
        assert!(pop_std(&[]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate() {
        let err = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("degenerate series"));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }
}
