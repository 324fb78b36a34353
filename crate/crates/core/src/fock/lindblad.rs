use nalgebra::DMatrix;

use crate::coherent::C64;
use crate::error::{EcsError, Result};
use crate::linalg;

/// `κ(aρa† − ½{a†a, ρ})` in the truncated number basis.
fn damping_rhs(rho: &DMatrix<C64>, kappa: f64) -> DMatrix<C64> {
    let d = rho.nrows();
    DMatrix::from_fn(d, d, |m, n| {
        let gain = if m + 1 < d && n + 1 < d {
            rho[(m + 1, n + 1)] * (((m + 1) * (n + 1)) as f64).sqrt()
        } else {
            C64::new(0.0, 0.0)
        };
        (gain - rho[(m, n)] * ((m + n) as f64 / 2.0)) * kappa
    })
}

fn check_density(rho: &DMatrix<C64>) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(EcsError::ShapeMismatch("density matrix must be square".into()));
    }
    let dev = linalg::max_hermitian_deviation(rho);
    if dev > 1e-10 {
        return Err(EcsError::NotHermitian(dev));
    }
    Ok(())
}

/// Photon-loss master equation for one truncated mode, integrated with
/// classical RK4 over `steps` equal steps.
pub fn lindblad_damp_oracle(rho: &DMatrix<C64>, kappa: f64, t: f64, steps: usize) -> Result<DMatrix<C64>> {
    check_density(rho)?;
    if steps == 0 {
        return Err(EcsError::InvalidArgument("step count must be positive".into()));
    }
    let h = t / steps as f64;
    let mut y = rho.clone();
    for _ in 0..steps {
        let k1 = damping_rhs(&y, kappa);
        let k2 = damping_rhs(&(&y + &k1 * C64::new(h / 2.0, 0.0)), kappa);
        let k3 = damping_rhs(&(&y + &k2 * C64::new(h / 2.0, 0.0)), kappa);
        let k4 = damping_rhs(&(&y + &k3 * C64::new(h, 0.0)), kappa);
        y += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    }
    Ok(y)
}

/// Doubles the step count (starting at `initial_steps`) until two successive
/// results differ by less than `tol` entrywise. Returns the result and the
/// step count used.
pub fn lindblad_damp_converged(
    rho: &DMatrix<C64>,
    kappa: f64,
    t: f64,
    initial_steps: usize,
    tol: f64,
) -> Result<(DMatrix<C64>, usize)> {
    let mut steps = initial_steps.max(1);
    let mut prev = lindblad_damp_oracle(rho, kappa, t, steps)?;
    loop {
        steps *= 2;
        let next = lindblad_damp_oracle(rho, kappa, t, steps)?;
        let diff = (&next - &prev).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if diff < tol {
            return Ok((next, steps));
        }
        if steps > 1 << 20 {
            return Err(EcsError::InvalidArgument(
                "Lindblad integration failed to converge".into(),
            ));
        }
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_fock;

    fn pure(v: &[C64]) -> DMatrix<C64> {
        DMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    #[test]
    fn zero_rate_is_identity() {
        let (a, _) = coherent_fock(C64::new(1.0, 0.5), 20);
        let rho = pure(&a);
        let out = lindblad_damp_oracle(&rho, 0.0, 1.0, 8).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn coherent_state_stays_coherent() {
        let alpha = C64::new(1.5, -0.5);
        let cutoff = 40;
        let (a, _) = coherent_fock(alpha, cutoff);
        let (kappa, t) = (2.0, 0.2);
        let (out, _) = lindblad_damp_converged(&pure(&a), kappa, t, 16, 1e-10).unwrap();
        let (b, _) = coherent_fock(alpha * (-kappa * t / 2.0).exp(), cutoff);
        let diff = (&out - pure(&b)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
        assert!((out.trace().re - 1.0).abs() < 1e-8);
        let min_ev = linalg::hermitian_eigenvalues(&out)[0];
        assert!(min_ev > -1e-8);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut rho = DMatrix::<C64>::identity(3, 3);
        rho[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(
            lindblad_damp_oracle(&rho, 1.0, 1.0, 4),
            Err(EcsError::NotHermitian(_))
        ));
    }
}
