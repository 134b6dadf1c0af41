pub mod circuit;
pub mod error;
pub mod measurement;
pub mod noise;
pub mod observable;
pub mod optimizers;
pub mod report;
pub mod simulator;
pub mod transpiler;
pub mod vqe;
