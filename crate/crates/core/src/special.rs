//! Special functions: Γ wrappers, the Riemann zeta function, and the
//! conditionally convergent sine series Σ sin(kθ)/k^p.

use std::f64::consts::PI;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Surface area |𝕊^{n−1}| = 2π^{n/2}/Γ(n/2) of the unit sphere in ℝⁿ.
/// For n = 1 this is the counting measure of {−1, 1}, i.e. 2.
pub fn sphere_area(n: usize) -> f64 {
    // |𝕊^{k+1}| = 2π/k · |𝕊^{k−1}|, exact up to rounding for every n.
    let (mut area, mut k) = if n % 2 == 1 { (2.0, 1) } else { (2.0 * PI, 2) };
    while k < n {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// Volume of the ball of radius `r` in ℝⁿ.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_area(n) * r.powi(n as i32) / n as f64
}

const BERNOULLI_2J: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Riemann zeta function for real `x ≠ 1`.
///
/// Euler–Maclaurin summation for `x ≥ 0`, the functional equation below.
pub fn zeta(x: f64) -> f64 {
    if x < 0.0 {
        // ζ(x) = 2^x π^{x−1} sin(πx/2) Γ(1−x) ζ(1−x)
        let sin = (PI * x / 2.0).sin();
        if sin == 0.0 {
            return 0.0;
        }
        let log_mag = x * 2f64.ln() + (x - 1.0) * PI.ln() + ln_gamma(1.0 - x);
        return sin * log_mag.exp() * zeta(1.0 - x);
    }
    if x > 60.0 {
        return 1.0 + 2f64.powf(-x) + 3f64.powf(-x);
    }
    let n = 12.0f64;
    let mut sum: f64 = (1..12).map(|k| (k as f64).powf(-x)).sum();
    sum += n.powf(1.0 - x) / (x - 1.0) + 0.5 * n.powf(-x);
    // Rising factorial x(x+1)…(x+2j−2) / (2j)!
    let mut coeff = x / 2.0;
    let mut power = n.powf(-x - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        sum += b * coeff * power;
        let m = 2.0 * (j as f64 + 1.0);
        coeff *= (x + m - 1.0) * (x + m) / ((m + 1.0) * (m + 2.0));
        power /= n * n;
    }
    sum
}

/// S_p(θ) = Σ_{k≥1} sin(kθ)/k^p for p ∈ (0, 2), θ ∈ (0, 2π).
///
/// Uses the expansion of the polylogarithm about the unit circle,
/// Im Li_p(e^{iθ}) = Γ(1−p) cos(πp/2) θ^{p−1} + Σ_{m odd} (−1)^{(m−1)/2} ζ(p−m) θ^m/m!,
/// which converges geometrically with ratio θ/2π.
pub fn sine_series(p: f64, theta: f64) -> f64 {
    assert!(p > 0.0 && p < 2.0, "sine series exponent out of range");
    assert!(theta > 0.0 && theta < 2.0 * PI, "angle out of range");
    if (p - 1.0).abs() < 1e-12 {
        return 0.5 * (PI - theta);
    }
    let mut sum = gamma(1.0 - p) * (PI * p / 2.0).cos() * theta.powf(p - 1.0);
    let ratio = theta / (2.0 * PI);
    let mut sign = 1.0;
    let mut m = 1usize;
    loop {
        let x = p - m as f64;
        let term = if x < 0.0 {
            // ζ(x)/m! via the functional equation, kept in log form.
            let log_mag = ln_gamma(1.0 + m as f64 - p) - ln_gamma(m as f64 + 1.0);
            let sin = (PI * x / 2.0).sin();
            2f64.powf(p) * PI.powf(p - 1.0) * sin * log_mag.exp() * zeta(1.0 - x) * ratio.powi(m as i32)
        } else {
            zeta(x) * theta.powi(m as i32) / gamma(m as f64 + 1.0)
        };
        sum += sign * term;
        if m > 3 && term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        if m > 400 {
            break;
        }
        sign = -sign;
        m += 2;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zeta_known_values() {
        assert_relative_eq!(zeta(2.0), PI * PI / 6.0, epsilon = 1e-14);
        assert_relative_eq!(zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-14);
        assert_relative_eq!(zeta(0.0), -0.5, epsilon = 1e-14);
        assert_relative_eq!(zeta(-1.0), -1.0 / 12.0, epsilon = 1e-14);
        assert_relative_eq!(zeta(0.5), -1.460_354_508_809_586_8, epsilon = 1e-13);
        assert_relative_eq!(zeta(-0.5), -0.207_886_224_977_354_57, epsilon = 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, epsilon = 1e-15);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(ball_volume(3, 1.0), 4.0 * PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn sine_series_matches_closed_forms() {
        // Σ sin(kθ)/k = (π − θ)/2 on (0, 2π); approach p → 1 from both sides.
        for &t in &[0.3, 1.0, 2.5] {
            assert_relative_eq!(sine_series(1.0 + 1e-7, t), 0.5 * (PI - t), epsilon = 1e-6);
            assert_relative_eq!(sine_series(1.0 - 1e-7, t), 0.5 * (PI - t), epsilon = 1e-6);
        }
        // Reference values of Im Li_p(e^{iθ}) from 30-digit arithmetic.
        assert_relative_eq!(sine_series(1.9999, PI / 2.0), 0.915_957_435_731_521_2, epsilon = 1e-7);
        assert_relative_eq!(sine_series(0.5, 0.7), 1.351_985_295_970_471_4, epsilon = 1e-12);
        assert_relative_eq!(sine_series(0.2, 3.0), 0.042_929_421_011_120_001, epsilon = 1e-12);
    }

    #[test]
    fn sine_series_agrees_with_partial_sum() {
        // Absolutely convergent case; the tail past n is O(n^{-1.5}).
        let p = 1.5;
        let theta = 1.1;
        let n = 200_000usize;
        let brute: f64 = (1..=n).map(|k| (k as f64 * theta).sin() / (k as f64).powf(p)).sum();
        assert_relative_eq!(sine_series(p, theta), brute, epsilon = 1e-5);
    }
}
