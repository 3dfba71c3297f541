//! Single-qubit priority register and the parametric Grover iteration.
//!
//! `|0>` means "accept this transition" and `|1>` means "deny". The
//! iteration is `G = U_psi * U_0` with
//! `U_0 = I - (1 - e^{j phi1}) |0><0|` and
//! `U_psi = (1 - e^{j phi2}) |psi><psi| - I`, where `|psi>` is the state
//! being acted on.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::Real;

/// Tolerance on `|alpha|^2 + |beta|^2` accepted by [`grover_apply`].
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitPriority<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
}

impl<T: Real> QubitPriority<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>) -> Self {
        Self { alpha, beta }
    }

    /// Eigenstate `|0>`: always accepted.
    pub fn ket_zero() -> Self {
        Self::new(Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    /// Uniform superposition `|+>`.
    pub fn plus() -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self::new(Complex::new(h, T::zero()), Complex::new(h, T::zero()))
    }

    /// Collapse probability onto `|0>`.
    pub fn p0(&self) -> T {
        self.alpha.norm_sqr()
    }

    pub fn p1(&self) -> T {
        self.beta.norm_sqr()
    }

    pub fn norm_sqr(&self) -> T {
        self.p0() + self.p1()
    }

    fn normalized(self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self::new(self.alpha / n, self.beta / n)
    }
}

fn unit<T: Real>(phi: T) -> Complex<T> {
    Complex::from_polar(T::one(), phi)
}

/// One Grover iteration with free phases, in closed form:
/// `alpha' = (Q - e^{j phi1}) alpha`, `beta' = (Q - 1) beta`,
/// `Q = (1 - e^{j phi2}) [1 - (1 - e^{j phi1}) |alpha|^2]`.
pub fn grover_apply<T: Real>(q: QubitPriority<T>, phi1: T, phi2: T) -> Result<QubitPriority<T>> {
    let norm = q.norm_sqr().to_f64_lossy();
    if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::Unnormalized(norm));
    }
    let one = Complex::new(T::one(), T::zero());
    let e1 = unit(phi1);
    let e2 = unit(phi2);
    let big_q = (one - e2) * (one - (one - e1).scale(q.p0()));
    Ok(QubitPriority::new((big_q - e1) * q.alpha, (big_q - one) * q.beta).normalized())
}

/// `|R|^2`: ratio of `|0>` collapse probability after and before `G`.
pub fn collapse_ratio_sq<T: Real>(phi1: T, phi2: T, alpha_sq: T) -> T {
    let one = Complex::new(T::one(), T::zero());
    let e1 = unit(phi1);
    let e2 = unit(phi2);
    ((one - e1 - e2) - (one - e1) * (one - e2).scale(alpha_sq)).norm_sqr()
}

/// Grover phases from TD error and replay age.
///
/// `phi1 = (pi/2) tanh(pi |delta| / delta_max)` sets the step size and
/// `phi2 = (rt / rt_max)(te / te_max) pi + pi/2` sets the direction.
/// `rt_max` is floored at 1 (undefined before the first replay).
pub fn amplification_phases<T: Real>(abs_delta: T, delta_max: T, rt: u64, rt_max: u64, te: usize, te_max: usize) -> (T, T) {
    let pi = T::PI();
    let half_pi = T::FRAC_PI_2();
    let ratio = if delta_max > T::zero() { abs_delta.abs() / delta_max } else { T::zero() };
    let phi1 = half_pi * (pi * ratio).tanh();
    let replay = T::from_u64(rt).unwrap() / T::from_u64(rt_max.max(1)).unwrap();
    let age = T::from_usize(te).unwrap() / T::from_usize(te_max.max(1)).unwrap();
    (phi1, replay * age * pi + half_pi)
}

/// Reset to `|+>` then apply one Grover iteration with the phases above.
pub fn prepare<T: Real>(abs_delta: T, delta_max: T, rt: u64, rt_max: u64, te: usize, te_max: usize) -> QubitPriority<T> {
    let (phi1, phi2) = amplification_phases(abs_delta, delta_max, rt, rt_max, te, te_max);
    grover_apply(QubitPriority::plus(), phi1, phi2).expect("|+> is normalized")
}
