//! Special functions and the adaptive quadrature engine.
//!
//! Contents: [`integrate`] and friends (complex adaptive Gauss–Legendre with
//! infinite-tail substitution), `Ei`/`E₁`, `I₀` and the scaled series of its
//! `2√s` composition, the integer-order upper incomplete Γ, the Tricomi
//! function `Ψ(a, b, x)` and the kernel `F(x, z)` with all partial
//! derivatives the closed forms require.

mod bessel;
mod ei;
mod kernel;
mod quad;

pub use bessel::{bessel_i0, bessel_i0_asymptotic_scaled, bessel_i0_scaled, bessel_i0_series, bessel_kernel_scaled};
pub use ei::{
    e1_scaled, exp_integral_e1, exp_integral_ei, exp_integral_ei_continued_fraction, exp_integral_ei_series,
    EULER_GAMMA,
};
pub use kernel::{
    as_nonnegative_integer, bessel_moment, kernel_f, kernel_f_closed, kernel_f_dz, kernel_f_dz_ei, kernel_f_partial,
    kernel_f_quadrature, psi_partial, tricomi_psi, tricomi_psi_with, upper_incomplete_gamma,
    upper_incomplete_gamma_scaled,
};
pub use quad::{
    gauss_legendre, integrate, integrate_semi_infinite, integrate_semi_infinite_split, Quadrature, QuadratureSettings,
    TailTransform,
};
