//! Files, network and command-line layer over `trates-core`.

pub mod artifacts;
pub mod backend;
pub mod cache;
pub mod commands;
pub mod config;
pub mod demo;
pub mod http;
pub mod loaders;
pub mod metadata;
pub mod parallel;
