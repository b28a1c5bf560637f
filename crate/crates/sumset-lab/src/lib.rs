//! Exact computational toolkit for sumset avoidance in tensor powers of
//! finite abelian groups: regularity decomposition, pseudorandomness tests,
//! maximal correlation, structure extraction, and explicit constructions.

pub mod bitset;
pub mod constructions;
pub mod correlation;
pub mod counting;
pub mod error;
pub mod group;
pub mod ntt;
pub mod rat;
pub mod regularity;
pub mod setfile;
pub mod structure;
pub mod tensor;

pub use constructions::{
    coset_counterexample, cylinder_family, level_set_family, optimality_diagnostic,
    optimality_example, tribes, tribes_parameters, ImplicitSet, OptimalityDiagnostic,
    OptimalityExample, Predicate,
};
pub use correlation::{
    avoidance_coupling, conditional_pair, is_rho_one, maximal_correlation_pair, rho,
    CorrelationWitness, JointDistribution, RhoOneVerdict,
};
pub use counting::{
    avoids, convolve_counts, count_tuples, count_tuples_brute, count_tuples_via_transform,
    sumset, CountResult,
};
pub use error::{Error, Result};
pub use regularity::{
    decompose, energy, fiber_psr_fraction, is_pseudorandom, DecompositionResult,
    PseudorandomnessVerdict, PsrWitness, RegularityParams, TraceStep,
};
pub use setfile::{parse_set_file, read_set_file, save_set_file, write_set_file};
pub use structure::{
    contradiction_replay, empirical_count_ratio, extract_structure, extract_structure_traced,
    verify_certificate, ExtractionOutcome, ReplayFinding, StructureCertificate, StructureParams,
    VerificationReport,
};
pub use group::{
    is_in_strict_coset, make_group, quotient, subgroup_generated, FiniteAbelianGroup,
    GroupSubset, QuotientMap, StrictCosetWitness,
};
pub use rat::Rat;
pub use tensor::{
    cylinder, fiber_counts, generic_avoids, generic_image, project, restrict, CombinerTable,
    CoordinateSet, PowerShape, TensorSet,
};

/// The guide's code blocks run as doc-tests, so the book cannot drift from
/// the library. One module per chapter to make failures traceable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/tensor-sets.md")]
    mod tensor_sets {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
    #[doc = include_str!("../../../book/src/correlation.md")]
    mod correlation {}
    #[doc = include_str!("../../../book/src/structure.md")]
    mod structure {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
