//! Finite-volume simulation of the parabolic–elliptic chemotaxis-consumption
//! system
//!
//! ```text
//! n_t = ∇·(∇n − n S(x,n,c) ∇c),   0 = Δc − n c   in Ω,
//! (∇n − n S ∇c)·ν = 0,            ∇c·ν = (γ − c) g   on ∂Ω,
//! ```
//!
//! together with diagnostics that evaluate the a priori bounds known for
//! its solutions: the maximum principle `0 ≤ c ≤ γ`, the gradient energy
//! bound `∫|∇c|² ≤ ½γ²|∂Ω|`, localized smallness of `∇c`, uniform bounds on
//! `‖n‖∞` and `∫ n log n`, and, for radial data on a ball, the cumulative
//! mass envelope `Q(r,t) ≤ M₀ r^d` with the signal floor `c ≥ c*`.
//!
//! The schemes are built so that these properties hold at the discrete
//! level: the elliptic operator is an M-matrix, the density update is
//! conservative and, under the step restriction, a convex combination.

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod io;
pub mod model;
pub mod parabolic;
pub mod presets;
pub mod radial;
pub mod simulation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book;
