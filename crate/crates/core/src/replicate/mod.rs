//! Bundled summary tables, participant-level data files, dataset analysis and
//! the replication report.

pub mod analysis;
pub mod bundle;
pub mod io;
pub mod report;
pub mod tables;

pub use analysis::{analyze_dataset, DatasetAnalysis, GroupComparison, GroupRow};
pub use bundle::{
    experiment_info, find_row, load_bundled_tables, parse_summary_csv, sha256_hex, Experiment, ExperimentInfo,
    SummaryRow, ALL_AIDS,
};
pub use io::{ingest_csv, parse_samples, write_samples, SAMPLE_HEADER};
pub use report::{render_analysis_text, render_csv, render_text, replication_report, ReplicationReport};
pub use tables::{
    bundled_counterfactuals, check_table_consistency, recombine_all_rows, summary_welch_tests, table_effects,
    ConsistencyCheck, NamedCounterfactual, Recombined, RowComparison,
};
