//! Quantum field modes coupled to a rotating heat bath.

pub mod bath;
pub mod beta;
pub mod birthdeath;
pub mod classical;
pub mod correlation;
pub mod integrate;
pub mod kinetics;
pub mod mode;
pub mod rates;
pub mod runner;
pub mod scenario;
pub mod thermo;
