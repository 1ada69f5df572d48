pub mod analysis;
pub mod cli;
pub mod diary;
pub mod engine;
pub mod params;
pub mod scenarios;
