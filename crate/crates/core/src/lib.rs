pub mod acp;
pub mod build;
pub mod config;
pub mod dist;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod fragsearch;
pub mod laws;
pub mod local;
pub mod poly;
pub mod program;
pub mod service;
pub mod term;
