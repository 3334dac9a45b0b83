//! File formats: Matrix Market input, CSV/JSON/SVG output, run configuration.

mod config;
mod mtx;
mod output;

pub use config::{
    default_epsilons, format_grid, parse_f64_list, parse_grid, MuPolicy, OutputFormat, RunConfig, DEFAULT_NT, DEFAULT_TMAX,
};
pub use mtx::{fmt_f64, parse_matrix_market, read_dense, read_matrix, write_dense, write_matrix_market, Layout};
pub use output::{field_csv, parse_field_csv, to_json, ErrorBody, ErrorDocument, SvgPlot, EXIT_INPUT, EXIT_NUMERICAL};
