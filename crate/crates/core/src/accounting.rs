//! Privacy calibration and accounting.
//!
//! Gaussian noise scales, release thresholds, composition of approximate
//! zCDP budgets, geometric budget splits, and the conversion from
//! δ-approximate ρ-zCDP to (ε, δ)-DP through the Rényi-divergence bound of
//! Canonne, Kamath and Steinke.

use crate::error::{Error, Result};
use crate::types::{ApproxDpParams, PrivacyBudget, MAX_DELTA0};

/// Standard deviation of calibrated Gaussian noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseScale {
    pub sigma: f64,
}

/// Noisy-weight cutoff: items whose noisy weight is `>= value` are released.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub value: f64,
}

/// Minimizer of the zCDP → DP conversion objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConversionPoint {
    pub alpha: f64,
    pub delta_prime: f64,
}

/// σ = Δ / √(2ρ), the Gaussian mechanism's ρ-zCDP calibration.
pub fn gaussian_sigma(budget: PrivacyBudget, l2_sensitivity: f64) -> Result<NoiseScale> {
    if !(l2_sensitivity.is_finite() && l2_sensitivity > 0.0) {
        return Err(Error::invalid(format!(
            "l2 sensitivity must be > 0, got {l2_sensitivity}"
        )));
    }
    if !(budget.rho > 0.0) {
        return Err(Error::invalid(format!("rho must be > 0, got {}", budget.rho)));
    }
    Ok(NoiseScale {
        sigma: l2_sensitivity / (2.0 * budget.rho).sqrt(),
    })
}

/// Φ(z).
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// 1 − Φ(z), accurate in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p ∈ (0, 1).
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(ppnd16(p, 1.0 - p))
}

/// Φ⁻¹(1 − q), taking the upper-tail mass directly so that tiny `q` keeps
/// full precision.
pub fn inverse_normal_sf(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(ppnd16(1.0 - q, q))
}

/// Wichura's AS241 (PPND16), accurate to about 1 part in 10¹⁶.
///
/// `lower` and `upper` are p and 1 − p; the caller supplies both so the tail
/// branch can use whichever was computed without cancellation.
#[allow(clippy::excessive_precision)]
fn ppnd16(lower: f64, upper: f64) -> f64 {
    const SPLIT1: f64 = 0.425;
    const SPLIT2: f64 = 5.0;
    const CONST1: f64 = 0.180625;
    const CONST2: f64 = 1.6;

    const A: [f64; 8] = [
        3.3871328727963666080e0,
        1.3314166789178437745e2,
        1.9715909503065514427e3,
        1.3731693765509461125e4,
        4.5921953931549871457e4,
        6.7265770927008700853e4,
        3.3430575583588128105e4,
        2.5090809287301226727e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.2313330701600911252e1,
        6.8718700749205790830e2,
        5.3941960214247511077e3,
        2.1213794301586595867e4,
        3.9307895800092710610e4,
        2.8729085735721942674e4,
        5.2264952788528545610e3,
    ];
    const C: [f64; 8] = [
        1.42343711074968357734e0,
        4.63033784615654529590e0,
        5.76949722146069140550e0,
        3.64784832476320460504e0,
        1.27045825245236838258e0,
        2.41780725177450611770e-1,
        2.27238449892691845833e-2,
        7.74545014278341407640e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.05319162663775882187e0,
        1.67638483018380384940e0,
        6.89767334985100004550e-1,
        1.48103976427480074590e-1,
        1.51986665636164571966e-2,
        5.47593808499534494600e-4,
        1.05075007164441684324e-9,
    ];
    const E: [f64; 8] = [
        6.65790464350110377720e0,
        5.46378491116411436990e0,
        1.78482653991729133580e0,
        2.96560571828504891230e-1,
        2.65321895265761230930e-2,
        1.24266094738807843860e-3,
        2.71155556874348757815e-5,
        2.01033439929228813265e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.99832206555887937690e-1,
        1.36929880922735805310e-1,
        1.48753612908506148525e-2,
        7.86869131145613259100e-4,
        1.84631831751005468180e-5,
        1.42151175831644588870e-7,
        2.04426310338993978564e-15,
    ];

    fn poly(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    let q = lower - 0.5;
    if q.abs() <= SPLIT1 {
        let r = CONST1 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = lower.min(upper);
    let mut r = (-tail.ln()).sqrt();
    let z = if r <= SPLIT2 {
        r -= CONST2;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= SPLIT2;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// T = max over k ∈ 1..=Δ₀ of 1/√k + σ·Φ⁻¹((1 − δ)^{1/k}), σ = 1/√(2ρ).
pub fn release_threshold(budget: PrivacyBudget, delta0: usize) -> Result<Threshold> {
    release_threshold_argmax(budget, delta0).map(|(t, _)| t)
}

/// [`release_threshold`] plus the smallest k attaining the maximum.
pub fn release_threshold_argmax(budget: PrivacyBudget, delta0: usize) -> Result<(Threshold, usize)> {
    check_delta0(delta0)?;
    if !(budget.delta > 0.0 && budget.delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {}",
            budget.delta
        )));
    }
    let sigma = gaussian_sigma(budget, 1.0)?.sigma;
    let log_keep = (-budget.delta).ln_1p();
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 1..=delta0 {
        let kf = k as f64;
        // 1 − (1 − δ)^{1/k}, without cancellation.
        let fail = -(log_keep / kf).exp_m1();
        let v = 1.0 / kf.sqrt() + sigma * ppnd16(1.0 - fail, fail);
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok((Threshold { value: best.0 }, best.1))
}

/// Release threshold for Laplace(1/ε) noise on an ℓ₁-bounded histogram.
///
/// A new user spreads at most unit ℓ₁ mass over at most Δ₀ fresh items. By
/// the union bound with P[w + Lap(1/ε) ≥ T] = ½·e^{−ε(T−w)}, the chance of
/// releasing any of them is at most ½·e^{−εT}·Σ e^{ε·wᵢ}, and the sum is
/// largest (by convexity) when one item holds nearly all the mass. Setting
/// ½·e^{−εT}·(e^ε + Δ₀ − 1) = δ gives the threshold below; it is floored at
/// 1 so the tail formula applies to every weight.
pub fn laplace_threshold(dp: ApproxDpParams, delta0: usize) -> Result<Threshold> {
    check_delta0(delta0)?;
    if !(dp.epsilon > 0.0) || !(dp.delta_dp > 0.0 && dp.delta_dp < 1.0) {
        return Err(Error::invalid(format!(
            "need epsilon > 0 and delta_dp in (0, 1), got ({}, {})",
            dp.epsilon, dp.delta_dp
        )));
    }
    let eps = dp.epsilon;
    let log_mass = eps + ((delta0 as f64 - 1.0) * (-eps).exp()).ln_1p();
    let value = (log_mass - (2.0 * dp.delta_dp).ln()) / eps;
    Ok(Threshold {
        value: value.max(1.0),
    })
}

fn check_delta0(delta0: usize) -> Result<()> {
    if delta0 == 0 || delta0 > MAX_DELTA0 {
        return Err(Error::invalid(format!(
            "delta0 must lie in [1, {MAX_DELTA0}], got {delta0}"
        )));
    }
    Ok(())
}

/// Sequential composition: (ρ₁ + ρ₂, δ₁ + δ₂ − δ₁δ₂).
pub fn compose(a: PrivacyBudget, b: PrivacyBudget) -> PrivacyBudget {
    PrivacyBudget {
        rho: a.rho + b.rho,
        delta: a.delta + b.delta - a.delta * b.delta,
    }
}

/// ln of (e^{(α−1)(αρ−ε)} / (α−1))·(1 − 1/α)^α.
pub fn conversion_log_objective(rho: f64, epsilon: f64, alpha: f64) -> f64 {
    log_objective_at(rho, epsilon, (alpha - 1.0).ln())
}

/// Same objective parametrized by t = ln(α − 1).
fn log_objective_at(rho: f64, epsilon: f64, t: f64) -> f64 {
    let am1 = t.exp();
    let alpha = 1.0 + am1;
    // ln(1 − 1/α) = ln(α − 1) − ln α
    let ln_ratio = t - am1.ln_1p();
    am1 * (alpha * rho - epsilon) - t + alpha * ln_ratio
}

const LOG_AM1_MIN: f64 = -13.815510557964274; // ln 1e-6
const LOG_AM1_MAX: f64 = 13.815510557964274; // ln 1e6
const SCAN_POINTS: usize = 512;

/// Minimizes the conversion objective over α, returning (α, ln δ′).
fn minimize_conversion(rho: f64, epsilon: f64) -> (f64, f64) {
    let f = |t: f64| log_objective_at(rho, epsilon, t);
    let step = (LOG_AM1_MAX - LOG_AM1_MIN) / (SCAN_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..SCAN_POINTS {
        let v = f(LOG_AM1_MIN + step * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut lo = LOG_AM1_MIN + step * best_i.saturating_sub(1) as f64;
    let mut hi = LOG_AM1_MIN + step * (best_i + 1).min(SCAN_POINTS - 1) as f64;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-12 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let (t, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let (t, v) = if v <= best_v {
        (t, v)
    } else {
        (LOG_AM1_MIN + step * best_i as f64, best_v)
    };
    (1.0 + t.exp(), v)
}

/// δ-approximate ρ-zCDP ⇒ (ε, δ + (1 − δ)·δ′)-DP, with δ′ the infimum over
/// α > 1 of the Rényi conversion objective.
///
/// δ′ is capped at 1. With ρ = 0 the infimum is 0, approached as α → ∞.
pub fn zcdp_to_dp(budget: PrivacyBudget, epsilon: f64) -> Result<(ApproxDpParams, ConversionPoint)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    let (alpha, delta_prime) = if budget.rho == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let (alpha, log_dp) = minimize_conversion(budget.rho, epsilon);
        (alpha, log_dp.exp().min(1.0))
    };
    let delta_dp = budget.delta + (1.0 - budget.delta) * delta_prime;
    Ok((
        ApproxDpParams { epsilon, delta_dp },
        ConversionPoint { alpha, delta_prime },
    ))
}

fn converted_delta(budget: PrivacyBudget, epsilon: f64) -> f64 {
    let (alpha, log_dp) = minimize_conversion(budget.rho, epsilon);
    debug_assert!(alpha > 1.0);
    budget.delta + (1.0 - budget.delta) * log_dp.exp().min(1.0)
}

/// Smallest ε whose converted δ_DP does not exceed `target_delta_dp`.
///
/// δ_DP is strictly decreasing in ε, so this bisects on ε.
pub fn dp_epsilon_for_delta(budget: PrivacyBudget, target_delta_dp: f64) -> Result<f64> {
    if !(budget.rho > 0.0) {
        return Err(Error::invalid(format!("rho must be > 0, got {}", budget.rho)));
    }
    if !(target_delta_dp > budget.delta) {
        return Err(Error::Infeasible(format!(
            "target delta_dp {target_delta_dp} must exceed delta_cdp {}",
            budget.delta
        )));
    }
    if target_delta_dp >= 1.0 {
        return Err(Error::invalid(format!(
            "target delta_dp must be < 1, got {target_delta_dp}"
        )));
    }
    let mut hi = 1.0;
    while converted_delta(budget, hi) > target_delta_dp {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Infeasible(format!(
                "no epsilon below 1e6 reaches delta_dp {target_delta_dp}"
            )));
        }
    }
    let mut lo = 0.0;
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if converted_delta(budget, mid) <= target_delta_dp {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Largest ρ such that δ_cdp-approximate ρ-zCDP converts to `dp`.
///
/// Used to report the zCDP guarantee implied by an (ε, δ) setting.
pub fn max_rho_for_dp(dp: ApproxDpParams, delta_cdp: f64) -> Result<f64> {
    if !(dp.delta_dp > delta_cdp && (0.0..1.0).contains(&delta_cdp)) {
        return Err(Error::Infeasible(format!(
            "delta_dp {} must exceed delta_cdp {delta_cdp}",
            dp.delta_dp
        )));
    }
    let feasible = |rho: f64| {
        converted_delta(
            PrivacyBudget {
                rho,
                delta: delta_cdp,
            },
            dp.epsilon,
        ) <= dp.delta_dp
    };
    let mut lo = 0.0;
    let mut hi = dp.epsilon.max(1e-6);
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Geometric split of a budget over `iterations` rounds.
///
/// Round i (0-based) gets a share proportional to r^{I−i−1}; r = 1 splits
/// evenly. Shares are normalized by the directly summed geometric series,
/// which equals (1 − r^I)/(1 − r) but stays accurate as r → 1.
pub fn split_budget(budget: PrivacyBudget, iterations: usize, ratio: f64) -> Result<Vec<PrivacyBudget>> {
    if iterations == 0 {
        return Err(Error::invalid("iterations must be >= 1"));
    }
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::invalid(format!("ratio must be > 0, got {ratio}")));
    }
    if ratio == 1.0 {
        let n = iterations as f64;
        return Ok(vec![
            PrivacyBudget {
                rho: budget.rho / n,
                delta: budget.delta / n,
            };
            iterations
        ]);
    }
    let powers: Vec<f64> = (0..iterations as i32).map(|j| ratio.powi(j)).collect();
    let total: f64 = powers.iter().sum();
    Ok((0..iterations)
        .map(|i| {
            let share = powers[iterations - i - 1] / total;
            PrivacyBudget {
                rho: budget.rho * share,
                delta: budget.delta * share,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(rho: f64, delta: f64) -> PrivacyBudget {
        PrivacyBudget::new(rho, delta).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    // Bisection on Φ built from libm's erfc: independent of AS241.
    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sigma_values() {
        assert!(close(gaussian_sigma(budget(0.5, 1e-5), 1.0).unwrap().sigma, 1.0, 1e-15));
        assert!(close(gaussian_sigma(budget(0.1, 1e-5), 1.0).unwrap().sigma, 2.236_067_977_499_79, 1e-12));
        assert!(close(gaussian_sigma(budget(0.1, 1e-5), 2.0).unwrap().sigma, 4.472135954999579, 1e-12));
    }

    #[test]
    fn sigma_rejects_bad_input() {
        assert!(gaussian_sigma(budget(0.1, 1e-5), 0.0).is_err());
        assert!(gaussian_sigma(budget(0.1, 1e-5), -1.0).is_err());
        assert!(gaussian_sigma(budget(0.0, 1e-5), 1.0).is_err());
    }

    #[test]
    fn quantile_known_values() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
        assert!(close(inverse_normal_cdf(0.99999).unwrap(), 4.264890793922825, 1e-9));
        assert!(close(inverse_normal_cdf(0.975).unwrap(), 1.959963984540054, 1e-9));
        assert!(close(inverse_normal_cdf(0.025).unwrap(), -1.959963984540054, 1e-9));
    }

    #[test]
    fn quantile_matches_bisection_oracle() {
        for &p in &[1e-12, 1e-9, 1e-5, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0 - 1e-6] {
            let z = inverse_normal_cdf(p).unwrap();
            assert!(close(z, bisect_quantile(p), 1e-9), "p={p}");
        }
        for &q in &[1e-15, 1e-12, 1e-9] {
            let z = inverse_normal_sf(q).unwrap();
            assert!(rel_close(normal_sf(z), q, 1e-10), "q={q}");
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(inverse_normal_cdf(p).is_err());
        }
    }

    #[test]
    fn threshold_large_rho_limit() {
        let t = release_threshold(budget(1e8, 0.5), 3).unwrap();
        assert!(close(t.value, 1.0, 1e-3));
    }

    #[test]
    fn threshold_single_item() {
        let t = release_threshold(budget(0.1, 1e-5), 1).unwrap();
        // 1 + √5 · Φ⁻¹(0.99999)
        assert!(close(t.value, 1.0 + 2.236_067_977_499_79 * 4.264890793922825, 1e-8));
        assert!(close(t.value, 10.53658, 1e-4));
    }

    #[test]
    fn threshold_scan_at_delta0_100() {
        // Exhaustive scan with the bisection quantile as oracle.
        let sigma = 1.0 / 0.2f64.sqrt();
        let oracle: Vec<f64> = (1..=100)
            .map(|k| {
                let k = k as f64;
                1.0 / k.sqrt() + sigma * bisect_quantile((1.0 - 1e-5f64).powf(1.0 / k))
            })
            .collect();
        let (max_i, max_v) = oracle
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let (t, k) = release_threshold_argmax(budget(0.1, 1e-5), 100).unwrap();
        assert_eq!(k, max_i + 1);
        assert_eq!(k, 100);
        assert!(close(t.value, max_v, 1e-6));
        assert!(close(t.value, 11.72607, 1e-4));
        assert!(t.value > release_threshold(budget(0.1, 1e-5), 1).unwrap().value);
    }

    #[test]
    fn threshold_rejects_bad_delta() {
        assert!(release_threshold(budget(0.1, 1.0), 5).is_err());
        assert!(release_threshold(budget(0.1, 1e-5), 0).is_err());
    }

    #[test]
    fn threshold_monotone() {
        let t = |rho, delta, d0| release_threshold(budget(rho, delta), d0).unwrap().value;
        assert!(t(0.01, 1e-5, 10) >= t(0.1, 1e-5, 10));
        assert!(t(0.1, 1e-9, 10) >= t(0.1, 1e-5, 10));
        assert!(t(0.1, 1e-5, 50) >= t(0.1, 1e-5, 10));
    }

    #[test]
    fn composition_examples() {
        let c = compose(budget(0.1, 0.0), budget(0.2, 0.0));
        assert!(close(c.rho, 0.3, 1e-15) && c.delta == 0.0);
        let c = compose(budget(0.0, 1.0), budget(0.4, 0.3));
        assert_eq!(c.delta, 1.0);
        let c = compose(budget(0.05, 1e-5), budget(0.05, 1e-5));
        assert!(close(c.rho, 0.1, 1e-15));
        assert!(close(c.delta, 2e-5 - 1e-10, 1e-20));
    }

    #[test]
    fn conversion_table_row() {
        let (dp, pt) = zcdp_to_dp(budget(0.1, 1e-5), 1.765).unwrap();
        assert!(rel_close(dp.delta_dp, 4.96e-5, 0.01));
        assert!(rel_close(pt.alpha, 9.86, 0.02));
        assert!(close(conversion_log_objective(0.1, 1.765, pt.alpha).exp(), pt.delta_prime, 1e-15));

        let (dp, pt) = zcdp_to_dp(budget(0.005, 1e-9), 0.62).unwrap();
        assert!(rel_close(dp.delta_dp, 1.04e-9, 0.01));
        assert!(rel_close(pt.alpha, 64.073, 0.02));
    }

    #[test]
    fn conversion_total_failure() {
        let (dp, _) = zcdp_to_dp(budget(0.1, 1.0), 1.0).unwrap();
        assert_eq!(dp.delta_dp, 1.0);
    }

    #[test]
    fn conversion_pure_zcdp_zero_rho() {
        let (dp, pt) = zcdp_to_dp(budget(0.0, 1e-6), 0.5).unwrap();
        assert_eq!(dp.delta_dp, 1e-6);
        assert!(pt.alpha.is_infinite());
    }

    #[test]
    fn conversion_minimizer_is_local_minimum() {
        for &(rho, eps) in &[(0.1, 1.765), (0.001, 0.14), (0.5, 4.41), (0.013, 0.62)] {
            let (_, pt) = zcdp_to_dp(budget(rho, 1e-5), eps).unwrap();
            let f = |a: f64| conversion_log_objective(rho, eps, a);
            let at = f(pt.alpha);
            assert!(at <= f(pt.alpha * (1.0 + 1e-3)));
            assert!(at <= f(pt.alpha * (1.0 - 1e-3)));
        }
    }

    #[test]
    fn epsilon_inversion() {
        let eps = dp_epsilon_for_delta(budget(0.1, 1e-5), 8.1142e-5).unwrap();
        assert!(rel_close(eps, 1.7, 0.005), "eps={eps}");
        let eps = dp_epsilon_for_delta(budget(0.05, 1e-5), 4.99e-5).unwrap();
        assert!(rel_close(eps, 1.2, 0.005), "eps={eps}");
    }

    #[test]
    fn epsilon_inversion_round_trip() {
        for &(rho, eps) in &[(0.001, 0.14), (0.005, 0.338), (0.01, 0.495), (0.05, 1.2), (0.1, 1.765), (0.5, 4.41)] {
            let b = budget(rho, 1e-5);
            let (dp, _) = zcdp_to_dp(b, eps).unwrap();
            let back = dp_epsilon_for_delta(b, dp.delta_dp).unwrap();
            assert!(rel_close(back, eps, 1e-3), "rho={rho} eps={eps} back={back}");
        }
    }

    #[test]
    fn epsilon_inversion_infeasible() {
        assert!(matches!(
            dp_epsilon_for_delta(budget(0.1, 1e-5), 1e-5),
            Err(Error::Infeasible(_))
        ));
        assert!(dp_epsilon_for_delta(budget(0.1, 1e-5), 5e-6).is_err());
    }

    #[test]
    fn implied_rho_for_gw_setting() {
        let dp = ApproxDpParams::new(1.7, 8.1142e-5).unwrap();
        let rho = max_rho_for_dp(dp, 1e-5).unwrap();
        assert!(rel_close(rho, 0.1, 0.01), "rho={rho}");
        let (back, _) = zcdp_to_dp(budget(rho, 1e-5), 1.7).unwrap();
        assert!(back.delta_dp <= 8.1142e-5 * (1.0 + 1e-9));
    }

    #[test]
    fn split_even() {
        let parts = split_budget(budget(0.1, 1e-5), 3, 1.0).unwrap();
        assert_eq!(parts.len(), 3);
        for p in parts {
            assert!(close(p.rho, 0.1 / 3.0, 1e-16));
            assert!(close(p.delta, 1e-5 / 3.0, 1e-21));
        }
    }

    #[test]
    fn split_geometric_matches_closed_form() {
        let parts = split_budget(budget(0.1, 1e-5), 3, 1.0 / 3.0).unwrap();
        let expect = [0.1 / 13.0, 0.3 / 13.0, 0.9 / 13.0];
        for (p, e) in parts.iter().zip(expect) {
            assert!(rel_close(p.rho, e, 1e-14));
        }
        // (ρ·r^{I−i−1}·(1−r)/(1−r^I)) closed form
        let r: f64 = 1.0 / 3.0;
        for (i, p) in parts.iter().enumerate() {
            let closed = 0.1 * r.powi(3 - i as i32 - 1) * (1.0 - r) / (1.0 - r.powi(3));
            assert!(rel_close(p.rho, closed, 1e-14));
        }
        assert!(parts.windows(2).all(|w| w[0].rho < w[1].rho));
    }

    #[test]
    fn split_single_iteration_is_identity() {
        for r in [0.2, 1.0, 2.5] {
            let parts = split_budget(budget(0.3, 1e-4), 1, r).unwrap();
            assert_eq!(parts, vec![budget(0.3, 1e-4)]);
        }
    }

    #[test]
    fn laplace_threshold_controls_worst_split() {
        // Exact bound on P[any fresh item released] when one fresh item holds
        // mass 1 − (k−1)η and k−1 others hold η.
        let fail = |t: f64, eps: f64, k: usize, eta: f64| {
            let heavy = 1.0 - (k as f64 - 1.0) * eta;
            let mut keep = 1.0 - 0.5 * (-eps * (t - heavy)).exp();
            keep *= (1.0 - 0.5 * (-eps * (t - eta)).exp()).powi(k as i32 - 1);
            1.0 - keep
        };
        let dp = ApproxDpParams::new(1.0, 0.05).unwrap();
        let t = laplace_threshold(dp, 2).unwrap().value;
        assert!(fail(t, 1.0, 2, 1e-9) <= 0.05);
        // Equal-split maximization (1/k + ln(k/2δ)/ε) undershoots this case.
        let equal_split = (1..=2)
            .map(|k| 1.0 / k as f64 + (k as f64 / 0.1).ln())
            .fold(f64::MIN, f64::max);
        assert!(equal_split < t);
        assert!(fail(equal_split, 1.0, 2, 1e-9) > 0.05);
    }

    #[test]
    fn laplace_threshold_single_item_closed_form() {
        let dp = ApproxDpParams::new(1.7, 8.1142e-5).unwrap();
        let t = laplace_threshold(dp, 1).unwrap().value;
        assert!(close(t, 1.0 + (1.0f64 / (2.0 * 8.1142e-5)).ln() / 1.7, 1e-12));
    }
}
