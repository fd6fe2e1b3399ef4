//! Exact mutual-information statistics of Gaussian MIMO channels.
//!
//! The crate evaluates closed forms for the joint eigenvalue density of
//! `G†G`, the moment generating function `g(z) = E[det(I + G†G)^z]`, the
//! ergodic capacity `E[I]` and the outage probability of the mutual
//! information `I = ln det(I + G†G)` for four Gaussian channel ensembles:
//! i.i.d., transmit-semicorrelated, nonzero-mean (Rician) and doubly
//! (Kronecker) correlated. Every closed form is backed by an independent
//! Monte Carlo oracle ([`mcsim`]) and by numeric checks of the unitary-group
//! identities the formulas are derived from ([`groupcheck`]).
//!
//! # Module map
//!
//! | module | contents |
//! |---|---|
//! | [`numkit`] | generic matrices, determinants, Vandermonde products, Hermitian eigenvalues, confluent determinant ratios |
//! | [`specfun`] | adaptive quadrature, `Ei`, `I₀`, incomplete Γ, Tricomi Ψ, the `F(x,z)` kernel |
//! | [`groupcheck`] | representation dimensions, Weyl characters, character expansion, Cauchy–Binet, Haar orthogonality |
//! | [`channels`] | correlation model, channel specifications, channel sampling |
//! | [`eigdens`] | joint eigenvalue densities |
//! | [`mgfcap`] | MGF, ergodic capacity, outage probability |
//! | [`mcsim`] | Monte Carlo estimators |
//! | [`ustm`] | received-signal density for unitary space-time modulation |
//!
//! # Scalars
//!
//! The linear-algebra layer ([`numkit`]) is generic over [`Scalar`], which is
//! implemented for `f32`, `f64`, their complex counterparts and exact
//! rationals ([`Rational`]); the dimension formulas in [`groupcheck`] use the
//! exact instantiation. The special functions and closed forms are
//! double-precision only: their accuracy targets (1e-12 quadrature, 1e-8
//! normalisation) are not reachable in single precision, so the concrete
//! aliases below are what the higher layers use.
//!
//! ```
//! use mimo_charexp::{channels::ChannelSpec, mgfcap, C64};
//!
//! let spec = ChannelSpec::iid(1, 1).unwrap();
//! let g1 = mgfcap::mgf(&spec, C64::new(1.0, 0.0)).unwrap();
//! // g(1) = E[1 + λ] = 2 for an exponential λ.
//! assert!((g1.value.re - 2.0).abs() < 1e-12);
//! let c = mgfcap::ergodic_capacity(&spec).unwrap();
//! assert!((c - 0.596_347_362_323_194).abs() < 1e-9);
//! ```

// Range checks are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod eigdens;
mod error;
pub mod groupcheck;
pub mod mcsim;
pub mod mgfcap;
pub mod numkit;
mod scalar;
pub mod specfun;
pub mod ustm;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision complex number, the working scalar of every closed form.
pub type C64 = num_complex::Complex<f64>;

/// Exact rational scalar used by the representation-dimension formulas.
pub type Rational = num_rational::BigRational;

/// Dense complex matrix (`G`, `T`, `R`, `G0`, `Y`, `X`, unitaries, …).
pub type ComplexMatrix = numkit::Mat<C64>;

/// Dense real matrix.
pub type RealMatrix = numkit::Mat<f64>;

/// Dense exact-rational matrix.
pub type RationalMatrix = numkit::Mat<Rational>;
