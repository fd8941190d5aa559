pub mod check;
pub mod cli;
pub mod config;
pub mod duration;
pub mod individual;
pub mod ingest;
pub mod machine;
pub mod report;
pub mod tokenizer;
