//! Compiler for emitter-based photonic graph-state generation.
//!
//! A target graph state is rewritten backwards to the empty graph by six
//! operations ([`graph`]). The operation log becomes a forward gate sequence
//! that is scheduled and scored ([`compiler`]), checked on a statevector
//! ([`verify`]), and searched for by a deep Q-learning agent ([`agent`]) built
//! on a small graph neural network ([`qnet`]). [`bench`] holds the graph
//! generators and experiment drivers used by the command-line front end.

pub mod agent;
pub mod bench;
pub mod compiler;
pub mod graph;
pub mod qnet;
pub mod verify;
