pub mod arith;
pub mod backends;
pub mod dsl;
pub mod error;
pub mod linalg;
pub mod module_builder;
pub mod series;
pub mod voa;
pub mod zhu;
