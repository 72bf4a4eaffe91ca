use serde::Serialize;

/// Crate-wide error type. Anything that is a caller mistake (bad parameters,
/// incompatible profile geometry, malformed config) is an `Error`; soft
/// numerical-quality conditions are reported through [`Flags`] instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative radius {0} passed to a radial evaluation")]
    NegativeRadius(f64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("incompatible profile geometry: {0}")]
    IncompatibleGeometry(String),

    #[error("gauge unavailable: {0}")]
    GaugeUnavailable(String),

    #[error("domination precondition failed: {0}")]
    DominationFailed(String),

    #[error("query point not on a registered node: {0}")]
    QueryNotRegistered(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Soft numerical-quality warnings. A set flag never aborts a computation;
/// it travels with the value so callers (and the CLI exit code) can see that
/// a truncation boundary was touched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// The spatial box ends before the effective potential has risen far
    /// enough above the thermal window; wall effects may leak in.
    pub box_edge: bool,
    /// The fiber kernel has not decayed below the relative floor at the ends
    /// of the transverse-momentum window.
    pub k_window_edge: bool,
    /// The dispersion minimum sits on the edge of the momentum window while
    /// the band is still strictly decreasing there.
    pub band_edge: bool,
    /// The angular-momentum scan hit its hard cap with the minimizer still
    /// near the window edge.
    pub m_window_edge: bool,
    /// The momentum spacing is too coarse to resolve the transverse phase
    /// oscillation at the requested separation.
    pub phase_resolution: bool,
}

impl Flags {
    pub fn any(self) -> bool {
        self.box_edge
            || self.k_window_edge
            || self.band_edge
            || self.m_window_edge
            || self.phase_resolution
    }

    pub fn merge(&mut self, other: Flags) {
        self.box_edge |= other.box_edge;
        self.k_window_edge |= other.k_window_edge;
        self.band_edge |= other.band_edge;
        self.m_window_edge |= other.m_window_edge;
        self.phase_resolution |= other.phase_resolution;
    }
}

/// A value bundled with the quality flags accumulated while computing it.
#[derive(Clone, Copy, Debug)]
pub struct Flagged<V> {
    pub value: V,
    pub flags: Flags,
}

impl<V> Flagged<V> {
    pub fn clean(value: V) -> Self {
        Flagged {
            value,
            flags: Flags::default(),
        }
    }

    pub fn with(value: V, flags: Flags) -> Self {
        Flagged { value, flags }
    }

    pub fn map<W>(self, f: impl FnOnce(V) -> W) -> Flagged<W> {
        Flagged {
            value: f(self.value),
            flags: self.flags,
        }
    }
}
