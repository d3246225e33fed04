pub mod bipartition;
pub mod error;
pub mod experiments;
pub mod fibsearch;
pub mod fixtures;
pub mod instance;
pub mod oracle;
pub mod tree;
pub mod weber;
