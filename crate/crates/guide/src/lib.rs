//! The chapters of the book, one module each, so `cargo test` runs every
//! code block in them.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/radio-model.md")]
pub mod radio_model {}

#[doc = include_str!("../../../book/src/gravitational-search.md")]
pub mod gravitational_search {}

#[doc = include_str!("../../../book/src/gradient-clustering.md")]
pub mod gradient_clustering {}

#[doc = include_str!("../../../book/src/gateway-assignment.md")]
pub mod gateway_assignment {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
