use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 2,
    Data = 3,
    Degenerate = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Data, message: message.into() }
    }

    pub fn degenerate(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Degenerate, message: message.into() }
    }

    pub fn code(&self) -> ExitCode {
        ExitCode::from(self.exit as u8)
    }

    /// Prefixes the message with the file it concerns.
    pub fn at(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn of(e: &bsbl::Error) -> Self {
        use bsbl::Error::*;
        let exit = match e {
            Partition(_) | InvalidParameter(_) | Io { .. } => Exit::Usage,
            Dimension { .. } | Format(_) | ZeroReference => Exit::Data,
            Degenerate { .. } => Exit::Degenerate,
        };
        CliError { exit, message: e.to_string() }
    }
}

impl From<bsbl::Error> for CliError {
    fn from(e: bsbl::Error) -> Self {
        CliError::of(&e)
    }
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::usage(e.to_string()).at(path))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    String::from_utf8(read(path)?).map_err(|_| CliError::data("not valid UTF-8 text").at(path))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::usage(e.to_string()).at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_classes() {
        let cases = [
            (bsbl::Error::Partition("x".into()), Exit::Usage),
            (bsbl::Error::InvalidParameter("x".into()), Exit::Usage),
            (bsbl::Error::Format("x".into()), Exit::Data),
            (bsbl::Error::ZeroReference, Exit::Data),
            (bsbl::Error::Dimension { context: "x", expected: 1, actual: 2 }, Exit::Data),
            (bsbl::Error::Degenerate { block: Some(3), what: "x" }, Exit::Degenerate),
        ];
        for (e, want) in cases {
            assert_eq!(CliError::from(e).exit, want);
        }
        assert_eq!(CliError::degenerate("x").code(), ExitCode::from(4));
    }

    #[test]
    fn io_errors_name_the_path() {
        let e = read(Path::new("/nonexistent/input.csv")).unwrap_err();
        assert_eq!(e.exit, Exit::Usage);
        assert!(e.message.starts_with("/nonexistent/input.csv: "));
    }
}
