pub mod birthproc;
pub mod error;
pub mod exec;
pub mod ibrw;
pub mod netgen;
pub mod rules;
pub mod seed;
pub mod spectral;
pub mod spine;
pub mod stats;
pub mod validation;
