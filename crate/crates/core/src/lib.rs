//! Linear Sobolev extension of data given on a line in the plane.
//!
//! The pipeline normalizes the sites, builds a Calderón–Zygmund decomposition
//! of `[-1,1]^2`, groups hard shadows, assigns anchor sites to each relevant
//! square and derives a sparse family of weighted linear functionals whose
//! `l^p` sum is comparable to the trace seminorm. The extension operator and
//! the numerical verification tools live in [`extension`] and [`verify`].

pub mod anchors;
pub mod audit;
pub mod bump;
pub mod czdecomp;
pub mod error;
pub mod extension;
pub mod functionals;
pub mod geometry;
pub mod grouping;
pub mod instances;
pub mod io;
pub mod pipeline;
pub mod rational;
pub mod sites;
pub mod svg;
pub mod verify;

pub use audit::Audit;
pub use czdecomp::{CzDecomposition, CzSquare, Kind};
pub use error::{Error, Result};
pub use geometry::{DyadicInterval, DyadicSquare, OpenBox, RationalPoint};
pub use rational::Rational;
pub use sites::{PlusSite, SiteSet};
pub use functionals::{FunctionalFamily, SparseFunctional};
pub use pipeline::Model;
pub use bump::Jet;
pub use extension::ExtensionField;
pub use instances::{generate, Family, Instance};
pub use verify::{comparability_report, converged_quadrature, seminorm_quadrature, variational_oracle, ComparabilityReport, OracleReport, QuadratureReport};
