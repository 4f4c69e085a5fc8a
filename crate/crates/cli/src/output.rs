use std::io::Write;

use crate::config::RunConfig;
use crate::CliError;

/// In-memory CSV table with a fixed header.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, T>(header: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).map_err(runtime)?;
        Ok(Table { writer })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(runtime)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.writer.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn runtime(e: csv::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Writes the CSV to the configured path, or to standard output. The report
/// goes to standard output unless the CSV already occupies it.
pub fn emit(cfg: &RunConfig, csv: &[u8], report: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match &cfg.output.path {
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes()).map_err(io)?;
            out.flush().map_err(io)
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv).map_err(io)?;
            out.flush().map_err(io)?;
            eprint!("{report}");
            Ok(())
        }
    }
}

pub fn optional(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
