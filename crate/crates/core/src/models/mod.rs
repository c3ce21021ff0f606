//! Parametric heavy-tailed marginals, the Gumbel copula, and sampling of
//! standard heavy-tailed random fields.
//!
//! All sampling takes an explicit random stream; nothing here touches global
//! state, so two workers with independent streams never interfere.

mod copula;
mod field;
mod marginal;

pub use copula::{sample_gumbel_copula, sample_positive_stable, CopulaModel};
pub use field::FieldModel;
pub use marginal::{Family, MarginalModel};
