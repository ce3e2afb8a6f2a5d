//! Closed forms for the blocking bounds and the approximation constants of
//! every policy.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_pmax<T: Float>(p_max: T) -> Result<()> {
    if !(p_max > T::zero() && p_max <= T::one()) {
        return Err(Error::invalid("p_max must lie in (0, 1]"));
    }
    Ok(())
}

/// Smallest possible `prod (1 - p_i)` given `sum p_i <= r` and `p_i <= p_max`.
pub fn eta<T: Float>(r: T, p_max: T) -> Result<T> {
    check_pmax(p_max)?;
    if r < T::zero() {
        return Err(Error::invalid("r must be >= 0"));
    }
    let full = (r / p_max).floor();
    let rest = r - full * p_max;
    Ok((T::one() - p_max).powf(full) * (T::one() - rest))
}

/// `int_0^1 (1 - x p)^k dx`.
fn power_integral<T: Float>(k: T, p: T) -> T {
    let k1 = k + T::one();
    -(k1 * (-p).ln_1p()).exp_m1() / (p * k1)
}

/// `int_0^1 eta(x r, x p_max) dx`, evaluated in closed form.
///
/// `floor(x r / (x p_max))` does not depend on `x`, so the integrand is
/// `(1 - x p)^g (1 - x d)` with `g` and `d` fixed.
pub fn rho<T: Float>(r: T, p_max: T) -> Result<T> {
    check_pmax(p_max)?;
    if r < T::zero() {
        return Err(Error::invalid("r must be >= 0"));
    }
    let g = (r / p_max).floor();
    let d = r - g * p_max;
    let i0 = power_integral(g, p_max);
    let i1 = power_integral(g + T::one(), p_max);
    Ok(i0 - d / p_max * (i0 - i1))
}

/// Permutation probing at `alpha = 1 + sqrt 5`.
pub fn c_permute() -> f64 {
    let s5 = 5f64.sqrt();
    3.0 * (16.0 + 8.0 * s5) / (11.0 + 3.0 * s5)
}

pub fn alpha_permute() -> f64 {
    1.0 + 5f64.sqrt()
}

/// Round-color-probe on bipartite graphs.
pub fn c_bipartite(p_max: f64) -> Result<f64> {
    Ok(1.0 / rho(2.0, p_max)?)
}

/// Random bipartition followed by round-color-probe.
pub fn c_general(p_max: f64) -> Result<f64> {
    Ok(2.0 / rho(1.0, p_max)?)
}

/// Greedy above `p_c`, LP rounding below it.
pub fn c_hybrid(p_c: f64) -> Result<f64> {
    Ok((4.0 - p_c).max(c_general(p_c)?))
}

/// Closed-form lower bound `(1 - (1 - p)^(1 + r/p)) / (r + p)` on `rho`.
pub fn rho_lower_bound<T: Float>(r: T, p_max: T) -> Result<T> {
    check_pmax(p_max)?;
    if r < T::zero() {
        return Err(Error::invalid("r must be >= 0"));
    }
    let exponent = T::one() + r / p_max;
    Ok(-(exponent * (-p_max).ln_1p()).exp_m1() / (r + p_max))
}

fn bisect_crossing(blocking: impl Fn(f64) -> f64) -> (f64, f64) {
    let gap = |p: f64| (4.0 - p) - 2.0 / blocking(p);
    let (mut lo, mut hi) = (1e-6, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    (p, 4.0 - p)
}

/// Cutoff where the greedy ratio `4 - p` meets the LP-rounding ratio
/// `2 / rho(1, p)` with `rho` replaced by [`rho_lower_bound`], found by
/// bisection to `1e-9`, with the common ratio. This is the cutoff the
/// hybrid policy uses by default.
pub fn hybrid_cutoff() -> (f64, f64) {
    bisect_crossing(|p| rho_lower_bound(1.0, p).expect("p in (0, 1]"))
}

/// Same crossing with the exact `rho`; it lies further right and gives a
/// slightly smaller ratio.
pub fn hybrid_cutoff_exact() -> (f64, f64) {
    bisect_crossing(|p| rho(1.0, p).expect("p in (0, 1]"))
}

pub fn alpha_online() -> f64 {
    2.0 / (3f64.sqrt() - 1.0)
}

/// Online policy factor `(1 - 1/e) (1/a) (1 - 1/a - 2/(3 a^2))`, inverted.
pub fn c_online(alpha: f64) -> f64 {
    let keep = 1.0 - 1.0 / alpha - 2.0 / (3.0 * alpha * alpha);
    1.0 / ((1.0 - (-1f64).exp()) * keep / alpha)
}

pub fn c_packing(k: usize) -> f64 {
    2.0 * k as f64
}

/// Matching-probing rounds; meaningful for `alpha > 5`.
pub fn c_multiround(alpha: f64) -> f64 {
    1.0 / ((1.0 / alpha) * (1.0 - 5.0 / alpha))
}

pub const C_GREEDY: f64 = 5.0;

/// The rounded hybrid and online ratios quoted for these algorithms.
pub const STATED_HYBRID: f64 = 3.46;
pub const STATED_ONLINE: f64 = 7.92;
pub const STATED_PERMUTE: f64 = 5.75;

/// Every approximation constant with the parameters it was evaluated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub alpha_permute: f64,
    pub c_permute: f64,
    pub c_permute_stated: f64,
    pub c_bip_pmax_1: f64,
    pub c_gen_pmax_1: f64,
    pub c_bip_pmax_to_0: f64,
    pub p_c: f64,
    pub c_hybrid: f64,
    pub p_c_exact_rho: f64,
    pub c_hybrid_exact_rho: f64,
    pub c_hybrid_stated: f64,
    pub alpha_online: f64,
    pub c_online: f64,
    pub c_online_stated: f64,
    pub c_packing_k3: f64,
    pub c_packing_k4: f64,
    pub alpha_multiround: f64,
    pub c_multiround: f64,
    pub c_greedy: f64,
}

impl RatioTable {
    pub fn compute() -> Self {
        let (p_c, c_hybrid) = hybrid_cutoff();
        let (p_c_exact_rho, c_hybrid_exact_rho) = hybrid_cutoff_exact();
        RatioTable {
            alpha_permute: alpha_permute(),
            c_permute: c_permute(),
            c_permute_stated: STATED_PERMUTE,
            c_bip_pmax_1: c_bipartite(1.0).expect("valid p"),
            c_gen_pmax_1: c_general(1.0).expect("valid p"),
            c_bip_pmax_to_0: 2.0 / (1.0 - (-2f64).exp()),
            p_c,
            c_hybrid,
            p_c_exact_rho,
            c_hybrid_exact_rho,
            c_hybrid_stated: STATED_HYBRID,
            alpha_online: alpha_online(),
            c_online: c_online(alpha_online()),
            c_online_stated: STATED_ONLINE,
            c_packing_k3: c_packing(3),
            c_packing_k4: c_packing(4),
            alpha_multiround: 10.0,
            c_multiround: c_multiround(10.0),
            c_greedy: C_GREEDY,
        }
    }
}
