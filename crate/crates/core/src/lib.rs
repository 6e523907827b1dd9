//! Projection evolution (PEv) of quantum states on finite-dimensional spaces.
//!
//! Evolution is a sequence of stochastic Lüders-type projections ordered by
//! an integer parameter τ. Channels come from explicit operator families or
//! from spectral decompositions of hermitian generators; time enters as an
//! ordinary observable on a discretized 1+1D spacetime grid.

pub mod config;
pub mod doubleslit;
pub mod error;
pub mod evolution;
pub mod generators;
pub mod hilbert;
pub mod io;
pub mod quadrature;
pub mod special;
pub mod symmetry;
pub mod timeops;
pub mod units;

pub use error::{PevError, Result};
pub use evolution::{
    apply_channel, luders_update, mixed_unitary_update, sample_path, transition_prob,
    validate_family, Branch, Channel, ChannelFamily, ChannelLabel, FamilyKind, PathRecord,
};
pub use hilbert::{
    is_valid_density, spectral_decompose, DensityOperator, Operator, Projector,
    SpectralDecomposition, C64,
};
