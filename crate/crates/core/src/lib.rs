//! Exact homological computations over finitely presented abelian groups.
//!
//! The crate is organised bottom-up:
//!
//! * [`zlinalg`]: integer matrices, Hermite/Smith normal forms, exact linear
//!   system solving.  Everything else compiles its questions down to this.
//! * [`fpab`]: finitely presented abelian groups `Z^n / colspan(rels)`,
//!   morphisms given by integer matrices, kernels, images, cokernels,
//!   pushouts, exactness and splitting tests.
//! * [`homext`]: `Hom(A, B)` and `Ext^1(A, B)` as finitely presented groups
//!   with encode/decode between elements and actual morphisms or extensions.
//! * [`defect`]: the defect of a morphism `β : L → P`, i.e. the cokernel of
//!   `Hom(β, X)`, together with its comparison against `Ext^1` and the exact
//!   sequences it sits in.
//! * [`tower`]: countable chains of groups truncated at a window, direct and
//!   inverse limit approximations with certified three-valued verdicts.
//! * [`criteria`]: mechanical checkers for the splitting/factorisation
//!   conditions that characterise when defect commutes with direct unions.
//! * [`oracle`]: brute-force enumeration on finite groups, used as an
//!   independent cross-check of the symbolic machinery.
//! * [`gen`]: seeded random instance generators for tests and self-checks.
//! * [`selftest`]: the deterministic end-to-end check suite behind the CLI's
//!   `selftest` command.

pub mod criteria;
pub mod defect;
pub mod error;
pub mod fpab;
pub mod gen;
pub mod homext;
pub mod oracle;
pub mod selftest;
pub mod tower;
pub mod zlinalg;

pub use error::{Error, Result};
pub use zlinalg::{int, Int, IntMatrix};
