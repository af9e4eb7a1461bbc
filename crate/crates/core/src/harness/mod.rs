//! Command-line harness: config loading, JSONL ingestion, experiment
//! orchestration and plot-data extraction behind the `mbr` binary.

pub mod config;
pub mod io;
pub mod plotdata;
pub mod run;

pub use config::{AnalyzeConfig, Config, DecodeConfig, DecoderKind, RerankConfig};
pub use io::{load_candidate_file, load_corpus, CandidateFileRecord, CorpusRecord, RecordKind};
pub use plotdata::emit_plot_data;
pub use run::{rerank_external, run_analyze, run_decode, validate, OutputRecord};
