//! Numerical laboratory for masking quantum information with isometries.

pub mod appendix;
pub mod cli;
pub mod error;
pub mod families;
pub mod figures;
pub mod geometry;
pub mod linalg;
pub mod masker;
pub mod measure;
pub mod protocol;
pub mod reduce;
pub mod search;
pub mod statespace;

pub use appendix::{cascade_scan, Branch, CascadeReport};
pub use error::{Error, Result};
pub use geometry::{masking_constraints, xi_embed, LinearConstraint, XiVector};
pub use masker::{builtin_example_3d, builtin_example_4d, BipartiteState, Masker};
pub use measure::{epsilon_sweep, residual_fraction, MeasureEstimate, SweepReport};
pub use protocol::{LeakageAudit, SecretFamily};
pub use reduce::{masking_residual, DensityMatrix, Side};
pub use search::{optimize_masker, SearchConfig, SearchResult};
pub use statespace::{angles_to_amplitudes, HyperAngles, PureState};
