//! Densities of the built-in distributions.
//!
//! `bern(p)` lives on `{1, 2}` with `P(2) = p`, so that binary parameters
//! index arrays directly. `categorical(w)` normalises its weight vector.
//! Values outside a distribution's support have density zero.

use statrs::function::gamma::ln_gamma;

/// Density of `x` under `d(args)`.
pub fn pdf(d: &str, x: f64, args: &[f64]) -> Result<f64, String> {
    match (d, args) {
        ("normal", [mu, sigma]) => {
            if *sigma <= 0.0 || !sigma.is_finite() {
                return Err(format!("normal scale must be positive, got {sigma}"));
            }
            let z = (x - mu) / sigma;
            Ok((-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
        }
        ("beta", [a, b]) => {
            if *a <= 0.0 || *b <= 0.0 {
                return Err(format!("beta shapes must be positive, got {a}, {b}"));
            }
            if !(0.0..=1.0).contains(&x) {
                return Ok(0.0);
            }
            let ln_norm = ln_gamma(a + b) - ln_gamma(*a) - ln_gamma(*b);
            Ok((ln_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()).exp())
        }
        ("bern" | "bernoulli", [p]) => {
            if !(0.0..=1.0).contains(p) {
                return Err(format!("bernoulli probability must lie in [0, 1], got {p}"));
            }
            Ok(if x == 2.0 {
                *p
            } else if x == 1.0 {
                1.0 - p
            } else {
                0.0
            })
        }
        ("normal" | "beta" | "bern" | "bernoulli", _) => {
            Err(format!("`{d}` got {} argument(s)", args.len()))
        }
        _ => Err(format!("unknown distribution `{d}`")),
    }
}

/// Probability of `x` under `categorical(w)` with `w` normalised.
pub fn categorical(x: f64, w: &[f64]) -> Result<f64, String> {
    if w.iter().any(|v| *v < 0.0 || v.is_nan()) {
        return Err("categorical weights must be nonnegative".into());
    }
    let total: f64 = w.iter().sum();
    if total == 0.0 || x.fract() != 0.0 || x < 1.0 || x > w.len() as f64 {
        return Ok(0.0);
    }
    Ok(w[x as usize - 1] / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_zero() {
        let v = pdf("normal", 0.0, &[0.0, 1.0]).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bern_support_convention() {
        assert_eq!(pdf("bern", 1.0, &[0.3]).unwrap(), 0.7);
        assert_eq!(pdf("bern", 2.0, &[0.3]).unwrap(), 0.3);
        assert_eq!(pdf("bernoulli", 0.0, &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn beta_uniform_and_outside() {
        assert!((pdf("beta", 0.25, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        // beta(2, 2) = 6 x (1 - x)
        assert!((pdf("beta", 0.5, &[2.0, 2.0]).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(pdf("beta", 1.5, &[2.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn categorical_normalises() {
        assert!((categorical(2.0, &[1.0, 3.0]).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(categorical(3.0, &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(categorical(1.0, &[0.0, 0.0]).unwrap(), 0.0);
    }
}
