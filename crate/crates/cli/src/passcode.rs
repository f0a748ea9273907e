use crate::error::CliError;

pub const PASSCODE_ENV: &str = "PF_PASSCODE";

/// Where a passcode comes from. Looked up only when a command actually
/// needs one.
#[derive(Debug, Clone)]
pub enum PasscodeSource {
    /// The `PF_PASSCODE` environment variable.
    Env,
    /// Interactive prompt on the terminal.
    Prompt,
    Fixed(String),
}

impl PasscodeSource {
    pub fn from_flag(use_env: bool) -> Self {
        if use_env {
            PasscodeSource::Env
        } else {
            PasscodeSource::Prompt
        }
    }

    pub fn get(&self) -> Result<String, CliError> {
        let pass = match self {
            PasscodeSource::Env => std::env::var(PASSCODE_ENV).map_err(|_| {
                CliError::Usage(format!(
                    "--passcode-env given but {PASSCODE_ENV} is not set"
                ))
            })?,
            PasscodeSource::Prompt => rpassword::prompt_password("Passcode: ")
                .map_err(|e| CliError::io("reading passcode", e))?,
            PasscodeSource::Fixed(p) => p.clone(),
        };
        if pass.is_empty() {
            return Err(CliError::Usage("passcode must not be empty".into()));
        }
        Ok(pass)
    }
}
