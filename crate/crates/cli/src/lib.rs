//! Experiment harness around `cogvid-core`: configuration files, named
//! presets, offline policy solving with versioned artifacts, parallel
//! seeded runs, and CSV/SVG reporting.

pub mod artifact;
pub mod chart;
pub mod config;
pub mod csvout;
pub mod presets;
pub mod runner;
