//! Cellular-connected UAV navigation with duelling double deep Q-learning
//! and quantum-inspired experience replay.

pub mod agent;
pub mod antenna;
pub mod envgeo;
pub mod error;
pub mod mdp;
pub mod num;
pub mod radio;
pub mod replay;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};

pub type Qubit64 = replay::QubitPriority<f64>;
pub type Qubit32 = replay::QubitPriority<f32>;
pub type Ula64 = antenna::UlaConfig<f64>;
pub type Ula32 = antenna::UlaConfig<f32>;
pub type Network64 = agent::Network<f64>;
pub type Network32 = agent::Network<f32>;
pub type Agent64 = agent::Agent<f64>;
pub type Agent32 = agent::Agent<f32>;
