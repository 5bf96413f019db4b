pub mod compress;
pub mod cost;
pub mod error;
pub mod fist;
pub mod oracle;
pub mod prefix;
pub mod report;
pub mod update;
pub mod workbench;
pub mod workload;
