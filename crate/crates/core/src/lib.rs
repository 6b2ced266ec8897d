//! Exhaustion-Galerkin solver for singular variational problems.
//!
//! A singular problem posed on `(0, 1)` is replaced by a chain of regular
//! problems on expanding subdomains. Each level is discretised, certified
//! (inf-sup constant, non-degeneracy, boundedness, and for the nonlinear
//! family monotonicity, coercivity and hemicontinuity evidence) and solved;
//! the driver then watches probe functionals and overlap differences to
//! decide when the level solutions have stabilised.
//!
//! Modules, bottom-up: [`coeff`] expressions, [`mesh`], [`linalg`],
//! [`assemble`], [`certify`], [`exhaust`].

pub mod assemble;
pub mod certify;
pub mod coeff;
pub mod exhaust;
pub mod linalg;
pub mod mesh;
