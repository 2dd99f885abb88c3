//! Turbulence mitigation from frames and events.
//!
//! The crate simulates atmospheric turbulence and event cameras, then
//! restores a frame by averaging the static scene (sharpened where event
//! polarities alternate) and motion-compensating objects whose events form
//! linear tubes.

pub mod epaw;
pub mod error;
pub mod ettube;
pub mod event;
pub mod evsynth;
pub mod field;
pub mod filter;
pub mod fixture;
pub mod frame;
pub mod io;
pub mod maps;
pub mod metrics;
pub mod paep;
pub mod restore;
pub mod turbsim;

pub use error::{Error, Result};
pub use event::{Event, EventStream, Polarity};
pub use field::{MotionField, TiltSlice, TurbulenceField};
pub use frame::{Frame, FrameSequence, Grid};
pub use maps::{GradientMap, PaepMap, TubeFit, TubeFitMap, TubeLabel, VelocityUnit};
