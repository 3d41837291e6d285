//! Core of relaylab: covert per-recipient message transformation and relay for
//! dialogue-collection experiments.
//!
//! [`Platform`] is the entry point. It owns the [`store::Store`] and exposes the relay,
//! experiment-manager, export and integrity operations.

pub mod config;
pub mod error;
pub mod experiment;
pub mod export;
pub mod ids;
pub mod integrity;
pub mod model;
mod platform;
pub mod relay;
pub mod schedule;
pub mod store;
pub mod transform;

pub use error::{Error, Result};
pub use experiment::ConversationSummary;
pub use export::{rebuild_views, ExportOptions, ExportRecord, ViewLine};
pub use ids::{ConversationId, ExperimentId, MessageId, ParticipantId};
pub use integrity::{IntegrityReport, Violation};
pub use model::*;
pub use platform::Platform;
pub use schedule::{generate_round_robin_schedule, PairingSchedule};
pub use transform::{apply_transform, TransformSpec};
