pub mod analysis;
pub mod benchspec;
pub mod config;
pub mod datagen;
pub mod driver;
pub mod loadgen;
pub mod metrics;
pub mod value;
