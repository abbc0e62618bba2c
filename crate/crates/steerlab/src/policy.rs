//! Central numeric tolerance policy.
//!
//! Every tolerance used by validity checks, solver stopping rules and the
//! acceptance tests lives here, so that tests and production code agree on a
//! single source of truth.

/// Tolerances shared across the crate.
#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy {
    /// Elementwise Hermiticity slack for flagged matrices.
    pub hermiticity: f64,
    /// Allowed negativity of the smallest eigenvalue of a PSD matrix.
    pub psd_slack: f64,
    /// Trace deviation allowed for normalized density matrices.
    pub trace: f64,
    /// Slack on the Bloch-ball norm of physical states.
    pub bloch_norm: f64,
    /// Tolerance on `|r|` when judging reconstructed states physical.
    pub tomography_validity: f64,
    /// Relative duality-gap stopping tolerance of the steering SDP.
    pub sdp_gap: f64,
    /// Primal/dual infeasibility stopping tolerance of the steering SDP.
    pub sdp_feasibility: f64,
    /// Duality gap a reported solution must satisfy.
    pub certificate_gap: f64,
    /// Negative-eigenvalue dust on assemblage members that is lifted
    /// instead of rejected.
    pub member_lift: f64,
    /// No-signaling defect above which a steering solve is refused.
    pub no_signaling_gate: f64,
    /// No-signaling defect above which a warning is recorded.
    pub no_signaling_warn: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            hermiticity: 1e-12,
            psd_slack: 1e-10,
            trace: 1e-10,
            bloch_norm: 1e-10,
            tomography_validity: 1e-9,
            sdp_gap: 1e-9,
            sdp_feasibility: 1e-9,
            certificate_gap: 1e-6,
            member_lift: 1e-9,
            no_signaling_gate: 0.05,
            no_signaling_warn: 1e-3,
        }
    }
}

impl NumericPolicy {
    pub const fn new() -> Self {
        Self {
            hermiticity: 1e-12,
            psd_slack: 1e-10,
            trace: 1e-10,
            bloch_norm: 1e-10,
            tomography_validity: 1e-9,
            sdp_gap: 1e-9,
            sdp_feasibility: 1e-9,
            certificate_gap: 1e-6,
            member_lift: 1e-9,
            no_signaling_gate: 0.05,
            no_signaling_warn: 1e-3,
        }
    }
}

/// Crate-wide default policy.
pub const DEFAULT_POLICY: NumericPolicy = NumericPolicy::new();
