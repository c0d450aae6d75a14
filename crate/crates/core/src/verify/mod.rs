//! Numerical checks of the comparability: quadrature of the extension's
//! seminorm from above, a discrete variational minimum from below.

pub mod gauss;
pub mod oracle;
pub mod quadrature;
pub mod report;

pub use oracle::{variational_oracle, OracleReport};
pub use quadrature::{converged_quadrature, seminorm_quadrature, QuadratureReport};
pub use report::{comparability_report, ComparabilityReport};
