use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// A provisioning call failed; `endpoint` names the URL that was used.
    #[error("provisioning failed at {endpoint}: {message}")]
    Provision { endpoint: String, message: String },
    /// The services misbehaved in a way that is not an observed outcome.
    #[error("infrastructure failure: {0}")]
    Infrastructure(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("no successful repetitions for {0}")]
    NoSuccessfulRuns(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
