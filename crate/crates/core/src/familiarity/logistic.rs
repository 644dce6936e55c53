//! Logistic estimate of understanding a concept from the familiarity of the
//! concepts beneath it, plus a maximum-likelihood fitter for the coefficients.

use serde::{Deserialize, Serialize};

use super::FamiliarityError;

/// Intercept and one coefficient per descendant knowledge point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub alpha0: f64,
    pub alphas: Vec<f64>,
    /// Knowledge points the coefficients apply to, in order.
    #[serde(default)]
    pub points: Vec<String>,
}

impl LogisticParams {
    pub fn new(alpha0: f64, points: Vec<String>, alphas: Vec<f64>) -> Result<Self, FamiliarityError> {
        if points.len() != alphas.len() {
            return Err(FamiliarityError::LengthMismatch {
                expected: points.len(),
                found: alphas.len(),
            });
        }
        Ok(LogisticParams { alpha0, alphas, points })
    }
}

/// `alpha0 + sum(alpha_j * F_j)`.
pub fn understanding_logit(familiarities: &[f64], params: &LogisticParams) -> Result<f64, FamiliarityError> {
    if familiarities.len() != params.alphas.len() {
        return Err(FamiliarityError::LengthMismatch {
            expected: params.alphas.len(),
            found: familiarities.len(),
        });
    }
    Ok(params.alpha0
        + params
            .alphas
            .iter()
            .zip(familiarities)
            .map(|(a, f)| a * f)
            .sum::<f64>())
}

/// Standard logistic function.
pub fn understanding_probability(theta: f64) -> f64 {
    // split by sign so neither branch overflows
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub learning_rate: f64,
    /// Stop when every gradient component is below this in magnitude.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            learning_rate: 0.5,
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub alpha0: f64,
    pub alphas: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

impl LogisticFit {
    pub fn params(&self, points: Vec<String>) -> Result<LogisticParams, FamiliarityError> {
        LogisticParams::new(self.alpha0, points, self.alphas.clone())
    }
}

/// Maximum-likelihood logistic regression by batch gradient ascent on the
/// mean log-likelihood. Features are standardized internally and the
/// coefficients mapped back to the original scale.
pub fn fit_logistic(samples: &[(Vec<f64>, bool)], options: &FitOptions) -> Result<LogisticFit, FamiliarityError> {
    let Some((first, _)) = samples.first() else {
        return Err(FamiliarityError::Undefined("no training samples".into()));
    };
    let dim = first.len();
    if let Some((x, _)) = samples.iter().find(|(x, _)| x.len() != dim) {
        return Err(FamiliarityError::LengthMismatch {
            expected: dim,
            found: x.len(),
        });
    }
    if !(options.learning_rate > 0.0) || options.max_iterations == 0 {
        return Err(FamiliarityError::InvalidParameter("learning rate and iteration cap must be positive".into()));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    for (x, _) in samples {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    for (x, _) in samples {
        for j in 0..dim {
            scale[j] += (x[j] - mean[j]).powi(2) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let z: Vec<(Vec<f64>, f64)> = samples
        .iter()
        .map(|(x, y)| {
            let row = (0..dim).map(|j| (x[j] - mean[j]) / scale[j]).collect();
            (row, if *y { 1.0 } else { 0.0 })
        })
        .collect();

    let mut w0 = 0.0;
    let mut w = vec![0.0; dim];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        let mut g0 = 0.0;
        let mut g = vec![0.0; dim];
        for (x, y) in &z {
            let theta = w0 + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let r = y - understanding_probability(theta);
            g0 += r / n;
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += r * xj / n;
            }
        }
        w0 += options.learning_rate * g0;
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj += options.learning_rate * gj;
        }
        if g0.abs() < options.tolerance && g.iter().all(|v| v.abs() < options.tolerance) {
            converged = true;
            break;
        }
    }

    let alphas: Vec<f64> = w.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let alpha0 = w0 - alphas.iter().zip(&mean).map(|(a, m)| a * m).sum::<f64>();
    let log_likelihood = samples
        .iter()
        .map(|(x, y)| {
            let theta = alpha0 + alphas.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let p = understanding_probability(theta).clamp(1e-300, 1.0 - 1e-16);
            if *y { p.ln() } else { (1.0 - p).ln() }
        })
        .sum();
    Ok(LogisticFit {
        alpha0,
        alphas,
        iterations,
        converged,
        log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_examples() {
        let empty = LogisticParams { alpha0: 0.0, alphas: vec![], points: vec![] };
        assert_eq!(understanding_logit(&[], &empty).unwrap(), 0.0);
        let p = LogisticParams { alpha0: 1.0, alphas: vec![0.5], points: vec!["x".into()] };
        assert_eq!(understanding_logit(&[2.0], &p).unwrap(), 2.0);
        let zeros = LogisticParams { alpha0: -0.7, alphas: vec![0.0; 3], points: vec![] };
        assert_eq!(understanding_logit(&[5.0, 1e6, -3.0], &zeros).unwrap(), -0.7);
        assert!(matches!(
            understanding_logit(&[1.0, 2.0], &p),
            Err(FamiliarityError::LengthMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn probability_examples() {
        assert_eq!(understanding_probability(0.0), 0.5);
        assert!((understanding_probability(2.0) - 0.8808).abs() < 1e-4);
        assert!(understanding_probability(40.0) <= 1.0);
        assert!(understanding_probability(-800.0) >= 0.0);
        assert!(understanding_probability(10.0) < understanding_probability(11.0));
    }

    #[test]
    fn params_length_checked() {
        assert!(LogisticParams::new(0.0, vec!["a".into()], vec![]).is_err());
    }

    #[test]
    fn fitter_converges_on_overlapping_classes() {
        // labels agree with x > 1 except two crossed samples, so the MLE is finite
        let xs = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 0.8, 1.2];
        let ys = [false, false, false, true, true, true, true, false];
        let samples: Vec<(Vec<f64>, bool)> = xs.iter().zip(ys).map(|(x, y)| (vec![*x], y)).collect();
        let fit = fit_logistic(&samples, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!(fit.alphas[0] > 0.0);
        assert!(fit.alpha0 < 0.0);
    }

    #[test]
    fn fitter_rejects_ragged_input() {
        let samples = vec![(vec![1.0], true), (vec![1.0, 2.0], false)];
        assert!(fit_logistic(&samples, &FitOptions::default()).is_err());
        assert!(fit_logistic(&[], &FitOptions::default()).is_err());
    }
}
