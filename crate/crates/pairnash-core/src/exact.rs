//! Exact rational replica of the equilibrium solve and payoff evaluation.
//!
//! This is the differential oracle for the float path and the final word on
//! strict-inequality stability verdicts: whenever a float comparison lands
//! within the escalation margin, the decision is recomputed here with no
//! rounding at all. It runs on demand only; arbitrary-precision elimination
//! is far slower than the dense `f64` solve.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, ToPrimitive, Zero};

use crate::error::Error;
use crate::model::{fabs, EffortProfile, Instance, Network};
use crate::Result;

/// Arbitrary-precision rational number, always in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(numer.into(), denom.into())
}

/// Exact counterpart of [`crate::model::equilibrium_efforts`]: solves the
/// same linear system over the rationals. The system is nonsingular for
/// every `alpha` in `[0, 1)`, so this never fails on valid inputs.
pub fn equilibrium_efforts_exact(instance: &Instance, network: &Network) -> Result<Vec<Rational>> {
    instance.check_network(network)?;
    let n = instance.n();
    let alpha = instance.alpha_exact();
    let one = Rational::one();
    let mut a = vec![Rational::zero(); n * n];
    let mut b = vec![Rational::zero(); n];
    for i in 0..n {
        a[i * n + i] = one.clone();
        let d = network.degree(i);
        if d == 0 {
            b[i] = instance.theta_exact()[i].clone();
        } else {
            let w = alpha / Rational::from_integer(d.into());
            for j in network.neighbors(i)? {
                a[i * n + j] = -w.clone();
            }
            b[i] = (&one - alpha) * &instance.theta_exact()[i];
        }
    }
    Ok(solve_exact(&mut a, &mut b, n))
}

/// Gaussian elimination over the rationals; pivots on the first nonzero
/// entry, which is deterministic and exact.
fn solve_exact(a: &mut [Rational], b: &mut [Rational], n: usize) -> Vec<Rational> {
    for col in 0..n {
        let piv = (col..n)
            .find(|&row| !a[row * n + col].is_zero())
            .expect("singular system");
        if piv != col {
            for c in col..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let pivot = a[col * n + col].clone();
        for row in (col + 1)..n {
            if a[row * n + col].is_zero() {
                continue;
            }
            let factor = &a[row * n + col] / &pivot;
            a[row * n + col] = Rational::zero();
            for c in (col + 1)..n {
                let delta = &factor * &a[col * n + c];
                a[row * n + c] -= delta;
            }
            let delta = &factor * &b[col];
            b[row] -= delta;
        }
    }
    let mut y = vec![Rational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for c in (row + 1)..n {
            acc -= &a[row * n + c] * &y[c];
        }
        y[row] = acc / &a[row * n + row];
    }
    y
}

/// Exact payoff of agent `i` at an arbitrary rational effort profile.
pub fn utility_exact(
    instance: &Instance,
    network: &Network,
    efforts: &[Rational],
    i: usize,
) -> Result<Rational> {
    instance.check_network(network)?;
    instance.check_agent(i)?;
    if efforts.len() != instance.n() {
        return Err(Error::LengthMismatch {
            expected: instance.n(),
            actual: efforts.len(),
        });
    }
    let yi = &efforts[i];
    let theta_i = &instance.theta_exact()[i];
    let half_sq = yi * yi / ratio(2, 1);
    let d = network.degree(i);
    if d == 0 {
        return Ok(theta_i * yi - half_sq);
    }
    let alpha = instance.alpha_exact();
    let one = Rational::one();
    let mut u = (&one - alpha) * theta_i * yi - half_sq;
    let d_exact = Rational::from_integer(d.into());
    for j in network.neighbors(i)? {
        u += instance.delta_exact() + alpha * yi * &efforts[j] / &d_exact;
    }
    Ok(u)
}

/// Exact equilibrium payoff of every agent on `network`.
pub fn payoffs_exact(instance: &Instance, network: &Network) -> Result<Vec<Rational>> {
    let efforts = equilibrium_efforts_exact(instance, network)?;
    (0..instance.n())
        .map(|i| utility_exact(instance, network, &efforts, i))
        .collect()
}

/// Largest absolute discrepancy between the float equilibrium efforts and
/// the exact ones rounded to `f64`.
pub fn compare_exact_float(instance: &Instance, network: &Network) -> Result<f64> {
    let float = crate::model::equilibrium_efforts(instance, network)?;
    let exact = equilibrium_efforts_exact(instance, network)?;
    Ok(max_abs_discrepancy(&float, &exact))
}

pub(crate) fn max_abs_discrepancy(float: &EffortProfile, exact: &[Rational]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, q) in exact.iter().enumerate() {
        let rounded = q.to_f64().unwrap_or(f64::NAN);
        let diff = fabs(float[i] - rounded);
        if diff > worst {
            worst = diff;
        }
    }
    worst
}
