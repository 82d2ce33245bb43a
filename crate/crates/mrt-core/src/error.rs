use alloc::string::String;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A physical parameter is outside its allowed domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),
    /// Grid or solver configuration cannot represent the problem.
    #[error("configuration error: {0}")]
    Config(String),
    /// The potential does not have the expected double-well shape.
    #[error("potential shape error: {0}")]
    Shape(String),
    /// More levels were requested than the well holds below the barrier.
    #[error("well {well} holds {available} metastable levels, {requested} requested")]
    LevelCount {
        /// "left" or "right".
        well: &'static str,
        /// Levels found below the barrier top.
        available: usize,
        /// Levels asked for.
        requested: usize,
    },
    /// Frequency resolution too coarse for the requested operation.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A state pair for which the requested quantity is singular.
    #[error("singular pair ({0}, {1}): equal currents with non-zero current element")]
    SingularPair(usize, usize),
    /// Unknown state label.
    #[error("no state with label {0}")]
    UnknownState(usize),
    /// The time integrator could not keep populations physical.
    #[error("integration accuracy error: {0}")]
    Integration(String),
    /// Error while solving at a particular flux bias.
    #[error("at flux bias {bias_mphi0} mΦ₀: {source}")]
    AtBias {
        /// Bias in mΦ₀.
        bias_mphi0: f64,
        /// Underlying error.
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

/// Library result alias.
pub type Result<T> = core::result::Result<T, Error>;
