//! Strong submeasures on finite models.
//!
//! The crate models compact spaces by finite point sets and provides
//! sublinear functionals generated by signed measures, their transport along
//! correspondences, invariant submeasures and entropy for the induced
//! dynamics, and the least-negative intersection families of signed measures.

pub mod correspondence;
pub mod dynamics;
pub mod error;
pub mod intersection;
pub mod io;
pub mod lp;
pub mod measure;
pub mod models;
mod polytope;
pub mod sampling;
pub mod space;
pub mod submeasure;
pub mod weak;

pub use correspondence::{
    compose, pullback_function, pullback_submeasure, pushforward_function, pushforward_submeasure, Correspondence,
    CorrespondenceData, EndoCorrespondence,
};
pub use error::{Error, Result};
pub use measure::{
    indicator_basis, jordan_decompose, probe_panel, FunctionVector, JordanDecomposition, PositiveMeasure,
    SignedMeasure,
};
pub use space::FiniteSpace;
pub use submeasure::{
    combine, combine_all, eval_submeasure, extend_usc, is_dominated, norm_and_mass, set_value, CombineMode,
    ExtendedValue, MassReport, SetMode, StrongSubmeasure,
};
