//! Two-level clustering for large wireless sensor networks with gateways.
//!
//! Sensors first organize into multihop clusters along residual-energy
//! gradients ([`clustering`]); a gravitational search ([`gsa`]) then assigns
//! each cluster head to a gateway ([`assignment`]). [`sim`] runs the network
//! round by round under the first-order radio model ([`net`]) and
//! [`experiment`] drives multi-seed scenarios.

pub mod assignment;
pub mod clustering;
pub mod experiment;
pub mod gsa;
pub mod net;
pub mod sim;
