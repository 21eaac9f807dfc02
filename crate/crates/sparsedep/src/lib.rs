//! Compile-time dependence analysis for sparse matrix codes.

pub mod assertions;
pub mod complexity;
pub mod parse;
pub mod inspector;
pub mod oracle;
pub mod pipeline;
pub mod presburger;
pub mod relation;
pub mod report;
pub mod superset;
pub mod ufenc;
