//! Special functions used by the entropy estimator.

/// Digamma function ψ(x) for x > 0.
///
/// Shifts the argument up to at least 6 with ψ(x) = ψ(x+1) − 1/x, then applies
/// the asymptotic expansion in 1/x².
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "digamma is only used on positive arguments");
    let mut x = x;
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number coefficients B_{2n} / (2n)
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    acc + x.ln() - 0.5 * inv - series
}

/// ln Γ(d/2 + 1) for a positive integer dimension d, by exact recurrence from
/// Γ(1) = 1 or Γ(1/2) = √π.
pub fn ln_gamma_half_dim_plus_one(d: usize) -> f64 {
    let target = d as f64 / 2.0 + 1.0;
    let (mut x, mut acc) = if d.is_multiple_of(2) {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * std::f64::consts::PI.ln())
    };
    while x < target {
        acc += x.ln();
        x += 1.0;
    }
    acc
}
