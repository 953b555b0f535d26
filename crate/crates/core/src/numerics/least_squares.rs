//! Bounded nonlinear least squares: a projected Levenberg–Marquardt
//! (damped Gauss–Newton) iteration with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ModelFailure, NumericsError};

/// One weighted observation `(x, y, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost reduction below which an accepted step ends the fit.
    pub ftol: f64,
    /// Relative parameter step below which an accepted step ends the fit.
    pub xtol: f64,
    /// Scaled-gradient threshold.
    pub gtol: f64,
    /// Relative forward-difference step for the Jacobian.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            ftol: 1e-15,
            xtol: 1e-12,
            gtol: 1e-14,
            fd_step: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CostReduction,
    StepSize,
    Gradient,
    /// Damping grew without finding a descent step.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Euclidean norm of the weighted residual vector.
    pub residual_norm: f64,
    /// Σ((y − model)/σ)².
    pub chi_square: f64,
    /// (JᵀJ)⁻¹ of the weighted Jacobian (pseudo-inverse when rank deficient).
    pub covariance: Vec<Vec<f64>>,
    pub uncertainties: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// Per parameter: finished on its lower or upper bound.
    pub at_bound: Vec<bool>,
    pub rank_deficient: bool,
}

impl FitResult {
    pub fn bound_stuck(&self) -> bool {
        self.at_bound.iter().any(|&b| b)
    }
}

/// Fit `model(params, x)` to `data`, minimising Σ((yᵢ − model(p, xᵢ))/σᵢ)²
/// inside the box `[lower, upper]`.
pub fn least_squares_fit<M>(
    model: M,
    data: &[DataPoint],
    init: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<FitResult, NumericsError>
where
    M: Fn(&[f64], f64) -> f64,
{
    if data.len() < init.len() {
        return Err(NumericsError::InvalidInput(format!(
            "{} data points cannot constrain {} parameters",
            data.len(),
            init.len()
        )));
    }
    if let Some(bad) = data.iter().find(|d| !(d.sigma > 0.0) || !d.x.is_finite() || !d.y.is_finite()) {
        return Err(NumericsError::InvalidInput(format!("invalid data point {bad:?}")));
    }
    let residuals = |p: &[f64]| -> Result<Vec<f64>, ModelFailure> {
        Ok(data.iter().map(|d| (d.y - model(p, d.x)) / d.sigma).collect())
    };
    minimize(residuals, init, lower, upper, &FitOptions::default())
}

/// Minimise ‖r(p)‖² over the box `[lower, upper]`.
pub fn minimize<R>(
    residuals: R,
    init: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &FitOptions,
) -> Result<FitResult, NumericsError>
where
    R: Fn(&[f64]) -> Result<Vec<f64>, ModelFailure>,
{
    let n = init.len();
    if n == 0 || lower.len() != n || upper.len() != n {
        return Err(NumericsError::InvalidInput(format!(
            "parameter/bound length mismatch: init {}, lower {}, upper {}",
            n,
            lower.len(),
            upper.len()
        )));
    }
    for j in 0..n {
        if !(lower[j] <= init[j] && init[j] <= upper[j]) || init[j].is_nan() {
            return Err(NumericsError::InvalidInput(format!(
                "parameter {j}: init {} outside [{}, {}]",
                init[j], lower[j], upper[j]
            )));
        }
    }

    let eval = |p: &[f64]| -> Result<DVector<f64>, NumericsError> {
        let r = residuals(p).map_err(|source| NumericsError::Model { source })?;
        if let Some(i) = r.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::InvalidInput(format!(
                "residual {i} is not finite at parameters {p:?}"
            )));
        }
        Ok(DVector::from_vec(r))
    };

    let mut p = init.to_vec();
    let mut r = eval(&p)?;
    let m = r.len();
    if m < n {
        return Err(NumericsError::InvalidInput(format!("{m} residuals cannot constrain {n} parameters")));
    }
    let mut cost = r.norm_squared();
    let mut lambda = options.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    let mut jac = jacobian(&eval, &p, &r, lower, upper, options.fd_step)?;
    if let Some(j) = (0..n).find(|&j| jac.column(j).iter().all(|&v| v == 0.0)) {
        return Err(NumericsError::SingularJacobian {
            parameter: j,
            params: p.clone(),
        });
    }

    'outer: while iterations < options.max_iterations {
        iterations += 1;
        let grad = jac.transpose() * &r;
        let free: Vec<usize> = (0..n)
            .filter(|&j| !((p[j] <= lower[j] && grad[j] > 0.0) || (p[j] >= upper[j] && grad[j] < 0.0)))
            .collect();
        let scaled_grad = free
            .iter()
            .map(|&j| grad[j].abs() * (p[j].abs() + 1e-300))
            .fold(0.0, f64::max);
        if free.is_empty() || scaled_grad <= options.gtol * cost.max(f64::MIN_POSITIVE) {
            termination = Termination::Gradient;
            break;
        }

        let jf = DMatrix::from_fn(m, free.len(), |i, k| jac[(i, free[k])]);
        let a = jf.transpose() * &jf;
        let g = DVector::from_fn(free.len(), |k, _| grad[free[k]]);

        loop {
            let mut damped = a.clone();
            for k in 0..free.len() {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-300);
            }
            let step = match damped.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match damped.svd(true, true).solve(&(-&g), 1e-300) {
                    Ok(s) => s,
                    Err(_) => {
                        lambda *= 10.0;
                        if lambda > 1e20 {
                            termination = Termination::Stalled;
                            break 'outer;
                        }
                        continue;
                    }
                },
            };

            let mut trial = p.clone();
            for (k, &j) in free.iter().enumerate() {
                trial[j] = (p[j] + step[k]).clamp(lower[j], upper[j]);
            }
            let r_trial = eval(&trial)?;
            let cost_trial = r_trial.norm_squared();

            if cost_trial < cost {
                let small_step = free
                    .iter()
                    .all(|&j| (trial[j] - p[j]).abs() <= options.xtol * (p[j].abs() + options.xtol));
                let reduction = (cost - cost_trial) / cost;
                p = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 3.0).max(1e-15);
                if cost == 0.0 || reduction <= options.ftol {
                    termination = Termination::CostReduction;
                    break 'outer;
                }
                if small_step {
                    termination = Termination::StepSize;
                    break 'outer;
                }
                jac = jacobian(&eval, &p, &r, lower, upper, options.fd_step)?;
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                termination = Termination::Stalled;
                break 'outer;
            }
        }
    }

    let jac = jacobian(&eval, &p, &r, lower, upper, options.fd_step)?;
    let (covariance, rank_deficient) = covariance(&jac);
    let uncertainties = (0..n).map(|j| covariance[(j, j)].max(0.0).sqrt()).collect();
    let at_bound = (0..n)
        .map(|j| {
            let tol = 1e-9 * (upper[j] - lower[j]).abs().min(p[j].abs().max(1e-300));
            (p[j] - lower[j]).abs() <= tol || (upper[j] - p[j]).abs() <= tol
        })
        .collect();
    let converged = termination != Termination::MaxIterations;
    Ok(FitResult {
        params: p,
        residual_norm: cost.sqrt(),
        chi_square: cost,
        covariance: (0..n).map(|i| (0..n).map(|j| covariance[(i, j)]).collect()).collect(),
        uncertainties,
        converged,
        iterations,
        termination,
        at_bound,
        rank_deficient,
    })
}

fn jacobian<E>(
    eval: &E,
    p: &[f64],
    r0: &DVector<f64>,
    lower: &[f64],
    upper: &[f64],
    rel_step: f64,
) -> Result<DMatrix<f64>, NumericsError>
where
    E: Fn(&[f64]) -> Result<DVector<f64>, NumericsError>,
{
    let n = p.len();
    let mut jac = DMatrix::zeros(r0.len(), n);
    let mut shifted = p.to_vec();
    for j in 0..n {
        let mut h = rel_step * p[j].abs();
        if h == 0.0 {
            let span = upper[j] - lower[j];
            h = rel_step * if span.is_finite() && span > 0.0 { span } else { 1.0 };
        }
        if p[j] + h > upper[j] {
            h = -h;
        }
        shifted[j] = p[j] + h;
        let step = shifted[j] - p[j];
        let r1 = eval(&shifted)?;
        jac.set_column(j, &((r1 - r0) / step));
        shifted[j] = p[j];
    }
    Ok(jac)
}

fn covariance(jac: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let a = jac.transpose() * jac;
    let n = a.nrows();
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * 1e-13 * n as f64;
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= cutoff);
    let pinv = svd
        .pseudo_inverse(cutoff.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(n, n));
    let sym = (&pinv + pinv.transpose()) * 0.5;
    (sym, rank_deficient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn decay(p: &[f64], x: f64) -> f64 {
        p[0] * (-x / p[1]).exp()
    }

    fn decay_data(noise: Option<(u64, f64)>) -> Vec<DataPoint> {
        let mut rng = noise.map(|(seed, _)| ChaCha8Rng::seed_from_u64(seed));
        (0..20)
            .map(|i| {
                let x = 0.5 * i as f64;
                let y = decay(&[2.0, 3.0], x);
                match (&mut rng, noise) {
                    (Some(rng), Some((_, rel))) => {
                        let s = rel * y;
                        let y = y + Normal::new(0.0, s).unwrap().sample(rng);
                        DataPoint::new(x, y, s)
                    }
                    _ => DataPoint::new(x, y, 1.0),
                }
            })
            .collect()
    }

    #[test]
    fn recovers_noiseless_exponential() {
        let data = decay_data(None);
        let fit = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[100.0, 100.0]).unwrap();
        assert!(fit.converged, "{:?}", fit.termination);
        assert!((fit.params[0] - 2.0).abs() < 1e-6, "{:?}", fit.params);
        assert!((fit.params[1] - 3.0).abs() < 1e-6, "{:?}", fit.params);
        let sum_y2: f64 = data.iter().map(|d| d.y * d.y).sum();
        assert!(fit.residual_norm < 1e-8 * sum_y2);
    }

    #[test]
    fn recovers_noisy_exponential() {
        let data = decay_data(Some((7, 0.01)));
        let fit = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[100.0, 100.0]).unwrap();
        assert!((fit.params[0] / 2.0 - 1.0).abs() < 0.05, "{:?}", fit.params);
        assert!((fit.params[1] / 3.0 - 1.0).abs() < 0.05, "{:?}", fit.params);
        assert!(fit.uncertainties.iter().all(|u| *u > 0.0));
    }

    #[test]
    fn recovers_pseudo_voigt() {
        let pv = |p: &[f64], t: f64| (1.0 - p[1]) * (-t.abs() / p[0]).exp() + p[1] * (-(t / p[0]).powi(2)).exp();
        let data: Vec<_> = (0..40)
            .map(|i| {
                let t = 50.0 * i as f64;
                DataPoint::new(t, pv(&[500.0, 0.4], t), 0.01)
            })
            .collect();
        let fit = least_squares_fit(pv, &data, &[300.0, 0.5], &[1.0, 0.0], &[1e5, 1.0]).unwrap();
        assert!((fit.params[0] / 500.0 - 1.0).abs() < 0.03);
        assert!((fit.params[1] / 0.4 - 1.0).abs() < 0.03);
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let data = decay_data(Some((11, 0.02)));
        let fit = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[100.0, 100.0]).unwrap();
        let c = &fit.covariance;
        assert!((c[0][1] - c[1][0]).abs() <= 1e-12 * c[0][1].abs().max(1e-300));
        assert!(c[0][0] >= 0.0 && c[1][1] >= 0.0);
        assert!(c[0][0] * c[1][1] - c[0][1] * c[1][0] >= -1e-12 * c[0][0] * c[1][1]);
    }

    #[test]
    fn flags_bound_stuck_parameter() {
        let data = decay_data(None);
        // True amplitude 2 lies above the upper bound 1.5.
        let fit = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[1.5, 100.0]).unwrap();
        assert!(fit.at_bound[0]);
        assert!(fit.bound_stuck());
        assert!((fit.params[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn reports_parameter_without_influence() {
        let data = decay_data(None);
        let model = |p: &[f64], x: f64| p[0] * (-x / 3.0).exp() + 0.0 * p[1];
        let err = least_squares_fit(model, &data, &[1.0, 1.0], &[0.0, 0.0], &[10.0, 10.0]).unwrap_err();
        assert!(matches!(err, NumericsError::SingularJacobian { parameter: 1, .. }));
    }

    #[test]
    fn rejects_init_outside_bounds() {
        let data = decay_data(None);
        assert!(least_squares_fit(decay, &data, &[20.0, 1.0], &[0.0, 0.01], &[10.0, 10.0]).is_err());
    }

    #[test]
    fn rejects_underdetermined() {
        let data = vec![DataPoint::new(0.0, 1.0, 1.0)];
        assert!(least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[10.0, 10.0]).is_err());
    }

    #[test]
    fn deterministic() {
        let data = decay_data(Some((3, 0.01)));
        let a = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[100.0, 100.0]).unwrap();
        let b = least_squares_fit(decay, &data, &[1.0, 1.0], &[0.0, 0.01], &[100.0, 100.0]).unwrap();
        assert_eq!(a, b);
    }
}
