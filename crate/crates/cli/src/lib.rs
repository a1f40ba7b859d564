//! IO companion to `postrev-core`: CSV/config ingest, JSON and CSV reports,
//! SVG plot emission, and the `postrev` command-line pipeline.

pub mod cli;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod svg;
