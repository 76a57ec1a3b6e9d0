//! A node hosting the Kite bulletin board over HTTP/JSON.
//!
//! Mutations are funnelled through one lock, written to an append-only
//! command log and only then applied. Restarting replays the log.

pub mod api;
pub mod node;
pub mod server;

pub use node::{ApiError, Node, NodeConfig, NodeError};
pub use server::{router, serve, Server, Shared};
