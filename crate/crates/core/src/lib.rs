//! Stateful notebook widgets.
//!
//! Every interaction with a widget is recorded as an append-only pair of an
//! [`ActionRecord`](state::ActionRecord) and a full [`DataState`](state::DataState)
//! snapshot. Any past state can be restored (as a new state) or exported as
//! JSON, and the data operations behind the components are *shared actions*
//! that a user may wrap or replace at runtime.
//!
//! Modules:
//! - [`state`]: Data States store, action history, journal, export.
//! - [`actions`]: shared-action registry and user overrides.
//! - [`widget`]: widget lifecycle and dispatch routing.
//! - [`protocol`]: kernel/frontend message protocol and the headless driver.
//! - [`graph`]: the property-graph backend.
//! - [`demo`]: the Explorer and alignment-verification widgets.
//! - [`replay`]: deterministic replay of action logs.
//! - [`api`]: request and response bodies of the widget service.

pub mod actions;
pub mod api;
pub mod demo;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod protocol;
pub mod replay;
pub mod state;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod widget;

pub use error::{Error, Result};
