//! Brute-force references for tests.

use crate::error::{check_len, Error, Result};
use crate::margin::sgn;
use crate::types::Instance;

/// Point on the boundary of the 2-d ℓ1 unit ball at parameter
/// `θ ∈ [0, 4)`, walking the four edges counter-clockwise from `e₁`.
pub fn diamond_point(theta: f64) -> [f64; 2] {
    let edge = theta.floor();
    let f = theta - edge;
    match edge as i64 {
        0 => [1.0 - f, f],
        1 => [-f, 1.0 - f],
        2 => [f - 1.0, -f],
        _ => [f, f - 1.0],
    }
}

/// Grid search for the max-ℓ1-margin of a two-dimensional instance.
///
/// Evaluates `min_i y_i ⟨X_i, β(θ)⟩` at `grid_count` equally spaced `θ`
/// and returns the best value. Every grid direction is feasible, so the
/// result never exceeds the true max-margin.
pub fn brute_force_margin(instance: &Instance, grid_count: usize) -> Result<f64> {
    if instance.p() != 2 {
        return Err(Error::Unsupported(format!(
            "brute-force margin needs p = 2, got p = {}",
            instance.p()
        )));
    }
    if grid_count < 1000 {
        return Err(Error::Domain(format!("grid_count must be at least 1000, got {grid_count}")));
    }
    let rows: Vec<[f64; 2]> = (0..instance.n())
        .map(|i| {
            let r = instance.features().row(i);
            let y = instance.label(i);
            [y * r[0], y * r[1]]
        })
        .collect();
    let step = 4.0 / grid_count as f64;
    let mut best = f64::NEG_INFINITY;
    for k in 0..grid_count {
        let b = diamond_point(k as f64 * step);
        let worst = rows
            .iter()
            .map(|r| r[0] * b[0] + r[1] * b[1])
            .fold(f64::INFINITY, f64::min);
        best = best.max(worst);
    }
    Ok(best)
}

/// True iff `sgn⟨X_i, β⟩ = y_i` for every sample.
pub fn exhaustive_sign_check(instance: &Instance, coefficients: &[f64]) -> Result<bool> {
    check_len(instance.p(), coefficients.len())?;
    Ok((0..instance.n()).all(|i| sgn(instance.features().row_dot(i, coefficients)) == instance.labels()[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpmargin::solve_max_margin;
    use crate::matrix::Matrix;

    fn inst(rows: &[&[f64]], labels: &[i8]) -> Instance {
        Instance::from_data(Matrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn diamond_covers_vertices() {
        assert_eq!(diamond_point(0.0), [1.0, 0.0]);
        assert_eq!(diamond_point(1.0), [0.0, 1.0]);
        assert_eq!(diamond_point(2.0), [-1.0, 0.0]);
        assert_eq!(diamond_point(3.0), [0.0, -1.0]);
        let q = diamond_point(3.5);
        assert_eq!(q[0].abs() + q[1].abs(), 1.0);
    }

    #[test]
    fn brute_force_examples() {
        let two = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, -1]);
        assert!((brute_force_margin(&two, 100_000).unwrap() - 0.5).abs() <= 1e-4);
        let one = inst(&[&[3.0, 0.0]], &[1]);
        assert!((brute_force_margin(&one, 100_000).unwrap() - 3.0).abs() <= 1e-4);
        let clash = inst(&[&[1.0, 1.0], &[1.0, 1.0]], &[1, -1]);
        assert!(brute_force_margin(&clash, 100_000).unwrap() <= 0.0);
    }

    #[test]
    fn brute_force_rejects_bad_input() {
        let three = inst(&[&[1.0, 0.0, 0.0]], &[1]);
        assert!(matches!(brute_force_margin(&three, 1000), Err(Error::Unsupported(_))));
        let two = inst(&[&[1.0, 0.0]], &[1]);
        assert!(matches!(brute_force_margin(&two, 999), Err(Error::Domain(_))));
    }

    #[test]
    fn sign_check_examples() {
        let i = inst(&[&[1.0, 0.0], &[0.0, 1.0]], &[1, -1]);
        let lp = solve_max_margin(&i).unwrap();
        assert!(exhaustive_sign_check(&i, &lp.beta_hat).unwrap());
        let neg: Vec<f64> = lp.beta_hat.iter().map(|v| -v).collect();
        assert!(!exhaustive_sign_check(&i, &neg).unwrap());
        assert!(!exhaustive_sign_check(&i, &[1.0, 0.0]).unwrap());
    }
}
