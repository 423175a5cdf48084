//! HTTP front end and command-line tools for the errand robot simulator.
//!
//! The simulation runs on its own thread at a fixed tick rate (see
//! [`engine`]); HTTP handlers submit tasks to it over a channel and read the
//! snapshots it publishes, so a slow client never stalls the world.

pub mod engine;
pub mod server;

pub use engine::Engine;
pub use server::{
    router, serve, ApiError, AppState, CommandAccepted, MapView, ResetResponse, ServiceError,
    STREAM_PERIOD, TICK_PERIOD,
};
