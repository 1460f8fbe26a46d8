pub mod cli;
pub mod dsl;
pub mod engine;
pub mod policy;
pub mod service;
pub mod simulation;
