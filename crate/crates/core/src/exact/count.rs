//! Size of the sufficient-statistic state space.

use num_bigint::BigUint;

use crate::error::{Error, Result};

fn binomial(n: u64, r: u64) -> BigUint {
    let r = r.min(n - r);
    let mut acc = BigUint::from(1u32);
    for j in 0..r {
        acc = acc * BigUint::from(n - j) / BigUint::from(j + 1);
    }
    acc
}

/// Number of distinct outcome-count states after `t` samples over `k`
/// alternatives with support sizes `supports`:
/// `L = sum over t_1 + .. + t_k = t of prod_i C(s_i + t_i - 1, s_i - 1)`.
///
/// The sum over compositions is carried out as a polynomial product, one
/// alternative at a time, in exact arithmetic.
pub fn state_space_size(t: usize, k: usize, supports: &[usize]) -> Result<BigUint> {
    if supports.len() != k {
        return Err(Error::invalid(format!(
            "expected {k} support sizes, got {}",
            supports.len()
        )));
    }
    if let Some(s) = supports.iter().find(|&&s| s == 0) {
        return Err(Error::invalid(format!("support size must be >= 1 (got {s})")));
    }
    // coeffs[m] = number of states with m samples over the alternatives so far.
    let mut coeffs = vec![BigUint::from(0u32); t + 1];
    coeffs[0] = BigUint::from(1u32);
    for &s in supports {
        let per_alt: Vec<BigUint> = (0..=t as u64)
            .map(|ti| binomial(s as u64 + ti - 1, s as u64 - 1))
            .collect();
        let mut next = vec![BigUint::from(0u32); t + 1];
        for (m, c) in coeffs.iter().enumerate() {
            if *c == BigUint::from(0u32) {
                continue;
            }
            for (ti, w) in per_alt.iter().enumerate().take(t + 1 - m) {
                next[m + ti] += c * w;
            }
        }
        coeffs = next;
    }
    Ok(coeffs.swap_remove(t))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Closed-form bounds on the state-space size for general supports, as
/// `(lower, upper)`:
/// `(1 + ceil(t/k)/(s_max - 1))^(k (s_min - 1)) <= L <=
///  (s_max + t + k - 1)^(k s_max) / ((s_max - 1)! (k - 1)!)`.
///
/// With `s = 2` everywhere the lower bound is `(ceil(t/k) + 1)^k`. The ceiling
/// makes the lower bound fail for some short horizons (`t = 1`, `k = 3`
/// Bernoulli gives `L = 6 < 8`); [`floor_lower_bound`] holds in general.
pub fn paper_bounds(t: usize, k: usize, supports: &[usize]) -> Result<(f64, f64)> {
    let (s_min, s_max) = support_range(k, supports)?;
    let per = t.div_ceil(k) as f64;
    let lower = (1.0 + per / (s_max - 1) as f64).powi((k * (s_min - 1)) as i32);
    let upper = ((s_max + t + k - 1) as f64).powi((k * s_max) as i32)
        / (factorial(s_max - 1) * factorial(k - 1));
    Ok((lower, upper))
}

/// Lower bound with `floor(t/k)`: some composition gives every alternative at
/// least `floor(t/k)` samples, and `C(s - 1 + m, s - 1) >= (1 + m/(s - 1))^(s - 1)`.
pub fn floor_lower_bound(t: usize, k: usize, supports: &[usize]) -> Result<f64> {
    let (s_min, s_max) = support_range(k, supports)?;
    let per = (t / k) as f64;
    Ok((1.0 + per / (s_max - 1) as f64).powi((k * (s_min - 1)) as i32))
}

/// Bernoulli-specific upper bound `(t + k - 1)^(2k) / (k - 1)!`.
pub fn bernoulli_upper_bound(t: usize, k: usize) -> f64 {
    ((t + k) as f64 - 1.0).powi(2 * k as i32) / factorial(k.saturating_sub(1))
}

fn support_range(k: usize, supports: &[usize]) -> Result<(usize, usize)> {
    if k == 0 || supports.len() != k {
        return Err(Error::invalid("bounds need k >= 1 matching support sizes"));
    }
    let s_min = *supports.iter().min().expect("non-empty");
    let s_max = *supports.iter().max().expect("non-empty");
    if s_min < 2 {
        return Err(Error::invalid("bounds need support sizes >= 2"));
    }
    Ok((s_min, s_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(t: usize, s: &[usize]) -> u64 {
        state_space_size(t, s.len(), s).unwrap().try_into().unwrap()
    }

    #[test]
    fn small_cases() {
        for k in 0..5 {
            assert_eq!(size(0, &vec![2; k]), 1);
        }
        assert_eq!(size(2, &[2, 2]), 10);
        for t in 0..20 {
            assert_eq!(size(t, &[2]), t as u64 + 1);
        }
        assert_eq!(size(1, &[3, 3]), 6);
        assert!(state_space_size(1, 2, &[2]).is_err());
    }

    #[test]
    fn bernoulli_formula_by_hand() {
        // sum over t1 + t2 = 3 of (t1 + 1)(t2 + 1) = 4 + 6 + 6 + 4
        assert_eq!(size(3, &[2, 2]), 20);
    }

    #[test]
    fn upper_bound_holds_and_floor_lower_bound_holds() {
        for k in 1..=4 {
            for mask in 0..(1usize << k) {
                let s: Vec<usize> = (0..k).map(|i| 2 + ((mask >> i) & 1)).collect();
                for t in 0..=12 {
                    let l = size(t, &s) as f64;
                    let (_, upper) = paper_bounds(t, k, &s).unwrap();
                    assert!(l <= upper, "upper fails at t={t} s={s:?}");
                    assert!(l >= floor_lower_bound(t, k, &s).unwrap(), "floor lower at t={t} s={s:?}");
                }
            }
        }
    }

    #[test]
    fn ceiling_lower_bound_counterexample() {
        let (lower, _) = paper_bounds(1, 3, &[2, 2, 2]).unwrap();
        assert_eq!(lower, 8.0);
        assert_eq!(size(1, &[2, 2, 2]), 6);
    }

    #[test]
    fn huge_sizes_are_exact() {
        let l = state_space_size(200, 10, &[3; 10]).unwrap();
        assert!(l.bits() > 100);
    }
}
