//! Excited random walks in one dimension.
//!
//! Cookie environments are realized into arrow environments through keyed
//! uniforms, so the walk and its dual processes `Z+`/`Z-` read the identical
//! instruction at every `(site, visit)`. On top of that the crate provides
//! exhaustive checks of the deterministic walk/`Z` identities over finite
//! arrow tables and reproducible Monte Carlo estimators for transience,
//! recurrence and speed.

pub mod arrow_env;
pub mod cookie_env;
pub mod exec;
pub mod experiments;
pub mod keyed;
pub mod oracle;
pub mod walk;
pub mod zproc;

pub use arrow_env::{realize, ArrowEnvironment, ArrowTable};
pub use cookie_env::{build_environment, delta_of, CookieEnvironment, EnvFamilySpec};
pub use exec::Exec;
