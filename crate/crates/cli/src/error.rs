use std::fmt;

use stance_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Pipeline stage named in error lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Preprocess,
    Vectorize,
    Reduce,
    Featurize,
    Train,
    Transfer,
    FineTune,
    Evaluate,
    Predict,
    Bundle,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Preprocess => "preprocess",
            Stage::Vectorize => "vectorize",
            Stage::Reduce => "reduce",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Transfer => "transfer",
            Stage::FineTune => "fine_tune",
            Stage::Evaluate => "evaluate",
            Stage::Predict => "predict",
            Stage::Bundle => "bundle",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Usage,
    Io,
    Input,
    Config,
    Corrupt,
    Version,
    Numeric,
    Model,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Usage => "E_USAGE",
            Code::Io => "E_IO",
            Code::Input => "E_INPUT",
            Code::Config => "E_CONFIG",
            Code::Corrupt => "E_CORRUPT",
            Code::Version => "E_VERSION",
            Code::Numeric => "E_NUMERIC",
            Code::Model => "E_MODEL",
        }
    }

    /// Process exit status for this class of failure.
    pub fn exit_code(self) -> i32 {
        match self {
            Code::Usage => 64,
            Code::Io => 3,
            Code::Input => 4,
            Code::Config => 2,
            Code::Corrupt => 5,
            Code::Version => 6,
            Code::Numeric => 7,
            Code::Model => 8,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Renders as a single line: `error[CODE] stage=NAME: message`.
#[derive(Debug, Error)]
#[error("error[{code}] stage={stage}: {message}")]
pub struct CliError {
    pub code: Code,
    pub stage: Stage,
    pub message: String,
}

impl CliError {
    pub fn new(code: Code, stage: Stage, message: impl fmt::Display) -> Self {
        let message = message.to_string().replace(['\n', '\r'], " ");
        Self { code, stage, message }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new(Code::Config, Stage::Config, message)
    }

    pub fn corrupt(message: impl fmt::Display) -> Self {
        Self::new(Code::Corrupt, Stage::Bundle, message)
    }

    pub fn io(stage: Stage, path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(Code::Io, stage, format!("{}: {err}", path.display()))
    }
}

fn code_for(err: &CoreError) -> Code {
    match err {
        CoreError::Io { .. } => Code::Io,
        CoreError::Csv { .. }
        | CoreError::Header { .. }
        | CoreError::BodyId { .. }
        | CoreError::DuplicateBodyId { .. }
        | CoreError::UnknownStance(_)
        | CoreError::Record { .. }
        | CoreError::DanglingBodyIds(_)
        | CoreError::EmptyCorpus
        | CoreError::EmptyDataset
        | CoreError::LengthMismatch { .. }
        | CoreError::EmptyConfusion => Code::Input,
        CoreError::RankOutOfRange { .. }
        | CoreError::UnknownFeatureMode(_)
        | CoreError::Architecture(_) => Code::Config,
        CoreError::NonFinite(_) | CoreError::Diverged { .. } => Code::Numeric,
        CoreError::DimensionMismatch { .. }
        | CoreError::InvalidMatrix(_)
        | CoreError::InvalidCurve(_) => Code::Model,
    }
}

/// Attaches a stage to library errors.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T> AtStage<T> for stance_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| CliError::new(code_for(&e), stage, &e))
    }
}
