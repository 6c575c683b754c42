//! Simulation and controller training for cable-coupled robot teams.
//!
//! Robots sit on a regular polygon, each attached to a shared object by an
//! elastic cable, and must bring the object to a target without talking to
//! one another. Two trainers are provided: a genetic algorithm tuning one
//! fuzzy inference system per robot ([`gfs`]), and per-robot tabular
//! Q-learning distilled into small neural networks ([`qlearn`], [`mlp`]).

pub mod fuzzy;
pub mod ga;
pub mod gfs;
pub mod mlp;
pub mod qlearn;
pub mod sim;
