pub mod augment;
pub mod evalkit;
pub mod ingest;
pub mod lang;
pub mod lexmodel;
pub mod miner;
pub mod textprep;
