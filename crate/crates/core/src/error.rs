use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or solver parameter lies outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument outside the state space [0, 1].
    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    /// A cost function violates a monotonicity assumption.
    #[error("monotonicity assumption violated: {0}")]
    Monotonicity(String),

    /// A bracketing root finder did not see a sign change.
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Pushing a measure lost or created mass.
    #[error("mass not conserved: input {input}, output {output}")]
    MassDefect { input: f64, output: f64 },

    /// The mean of the initial law disagrees with the configured m0.
    #[error("initial law has mean {mean}, expected m0 = {m0}")]
    InitialMean { mean: f64, m0: f64 },

    /// An iteration hit its cap.
    #[error("{what} did not converge in {iterations} iterations (last change {last_change})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    /// A regeneration cycle exceeded the step cap.
    #[error("regeneration cycle exceeded {0} steps")]
    CycleCap(usize),

    /// h(z) changes sign more than once although the uniqueness assumptions hold.
    #[error("{sign_changes} sign changes of h(z) under product cost with increasing R2")]
    MultipleEquilibria { sign_changes: usize },

    /// No stationary equilibrium was located.
    #[error("h(z) has no sign change on [0, 1]: h(0) = {h0}, h(1) = {h1}")]
    NoStationarySolution { h0: f64, h1: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
