//! Configuration files, binary snapshots, CSV time series and the
//! command-line front end.

mod commands;
mod config;
mod snapshot;
mod timeseries;

pub use commands::{
    execute, initial_and_forcing, setup_for, Cli, CliError, Command, EXIT_BLOWUP, EXIT_CONFIG, EXIT_NUMERICAL,
    EXIT_OK, EXIT_OTHER,
};
pub use config::{
    parse_config, ConfigError, DiagnosticsConfig, ForcingKind, InitialKind, LemmaConfig, MmsKind, OutputConfig,
    RunConfig, TimeConfig, VerifyConfig,
};
pub use snapshot::{
    decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, SnapshotError, HEADER_LEN, MAGIC, VERSION,
};
pub use timeseries::{
    compare_rows, format_value, run_rows, write_timeseries, SeriesMode, TimeseriesError, TimeseriesWriter,
    COMPARE_COLUMNS, RUN_COLUMNS,
};
