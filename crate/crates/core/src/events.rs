//! Non-fatal diagnostics recorded while integrating.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Width matrix lost positive definiteness and was clamped.
    EigenvalueClamp,
    /// Robertson-Schrodinger check failed at an output time.
    PhysicalityViolation,
    /// A complex Gaussian component collapsed and was frozen.
    ComponentFrozen,
    /// Fock-space population at the truncation edge exceeded the threshold.
    TruncationLeakage,
    /// Wigner grid did not cover the support or was too coarse.
    GridBoundary,
    /// Density-matrix trace drifted and was renormalized.
    TraceDrift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub message: String,
}

impl Event {
    pub fn new(t: f64, kind: EventKind, message: impl Into<String>) -> Self {
        Event {
            t,
            kind,
            message: message.into(),
        }
    }
}
