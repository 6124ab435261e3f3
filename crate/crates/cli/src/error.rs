use std::fmt;

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or config values. Exit 1.
    Input(String),
    /// The inputs are fine but no answer exists, such as a fleet larger
    /// than `m_max`. Exit 2.
    Infeasible(String),
    /// A run that could not finish. Exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Failed(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Failed(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<fleetroll::InputError> for CliError {
    fn from(e: fleetroll::InputError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<fleetroll::GraphError> for CliError {
    fn from(e: fleetroll::GraphError) -> Self {
        CliError::Input(format!("graph: {e}"))
    }
}

impl From<fleetroll::DemandError> for CliError {
    fn from(e: fleetroll::DemandError) -> Self {
        CliError::Input(format!("demand model: {e}"))
    }
}

impl From<fleetroll::FleetSizeError> for CliError {
    fn from(e: fleetroll::FleetSizeError) -> Self {
        match e {
            fleetroll::FleetSizeError::EmptyHistory => CliError::Input(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}
