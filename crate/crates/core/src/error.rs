use thiserror::Error;

use crate::adaptation::AdaptError;
use crate::depgraph::SdgError;
use crate::frontend::{LoadError, ParseError};
use crate::implantation::ImplantError;
use crate::platform::PlatformError;
use crate::postop::PostopError;
use crate::reconfigurator::ReconfigError;
use crate::sandbox::BuildError;
use crate::suite::SuiteError;

/// Any failure of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Reconfig(#[from] ReconfigError),
    #[error(transparent)]
    Sdg(#[from] SdgError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error(transparent)]
    Adapt(#[from] AdaptError),
    #[error(transparent)]
    Implant(#[from] ImplantError),
    #[error(transparent)]
    Postop(#[from] PostopError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
