use alloc::string::String;

/// Failure modes shared by every module.
///
/// The three variants map onto distinct process exit codes in the CLI.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Caller supplied an out-of-range or malformed value.
    #[error("invalid input: {0}")]
    Input(String),
    /// A computation needs more iterations than the configured cap allows.
    #[error("resource limit exceeded: {what} requires {required}, cap is {cap}")]
    Resource {
        what: String,
        required: String,
        cap: String,
    },
    /// Internal disagreement between a model and the data interpreted against it.
    #[error("consistency error: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
