//! Configuration, records and the command-line driver.

pub mod config;
pub mod record;
pub mod run;

pub use config::{RunConfig, KEYS};
pub use record::{parse_records, write_records, Record};
pub use run::{exit_code, run, Command, Outcome, EXIT_BUDGET, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
