//! Left-invariant (alpha,beta)-metrics on Lie groups.
//!
//! The crate builds Finsler structures F = alpha * phi(beta/alpha) from
//! structure-constant data, certifies the regularity inequality of the
//! profile function, computes the compact symmetry intersection
//! k' = Der_X(g) ∩ so(g), and verifies the isometry-iff-invariance
//! criterion both at the algebra level and on nilpotent matrix-group
//! models.

pub mod error;
pub mod lie;
pub mod linalg;
pub mod metric;
pub mod phi;
pub mod symmetry;

pub use error::{CoreError, Result};
pub use lie::{
    catalog, CatalogEntry, InnerProduct, InvariantVectorField, LieAlgebraSpec, MatrixGroupModel,
    CATALOG_NAMES,
};
pub use metric::{FinslerStructure, FundamentalTensor};
pub use phi::{max_admissible_b, regularity_margin, PhiFunction, PhiJet, PhiKind};
pub use symmetry::{
    admissibility_scaling, automorphism_residual, commutation_check, converse_probe,
    derivation_algebra, exp_derivation, field_invariance_check, fixes_x, homomorphism_residual,
    is_automorphism, is_orthogonal, isometry_invariance_check, k_prime, lift_to_group,
    random_orthogonal, skew_derivations, x_fixing_derivations, AutomorphismMatrix, BasisKind,
    ConverseOutcome, DerivationBasis, GroupAutomorphism, SymmetryReport,
};
