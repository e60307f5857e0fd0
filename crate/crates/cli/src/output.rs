use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use cvar_persuasion::{AuditReport, PersuasionInstance, SignalingScheme};
use serde::Serialize;

use crate::Failure;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Output destination and format.
pub struct Sink {
    path: Option<PathBuf>,
    pub format: Format,
}

fn csv_error(e: csv::Error) -> Failure {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => Failure::Input(format!("writing CSV: {other:?}")),
    }
}

impl Sink {
    pub fn new(path: Option<PathBuf>, format: Format) -> Self {
        Sink { path, format }
    }

    fn writer(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.path {
            Some(p) => Box::new(
                File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
            ),
            None => Box::new(io::stdout().lock()),
        })
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let mut w = self.writer()?;
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Failure::Input(format!("serializing output: {e}")))?;
        writeln!(w, "{text}")?;
        Ok(())
    }

    /// Rows as CSV with a header from the field names, or as a JSON array.
    pub fn rows<T: Serialize>(&self, rows: &[T]) -> Result<(), Failure> {
        if self.format == Format::Json {
            return self.json(&rows);
        }
        let mut w = csv::Writer::from_writer(self.writer()?);
        for row in rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per signal: probability, action name, facet, then the
    /// posterior with one column per state.
    pub fn scheme_csv(
        &self,
        inst: &PersuasionInstance,
        scheme: &SignalingScheme,
    ) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.writer()?);
        let mut header = vec![
            "signal".to_string(),
            "p".into(),
            "action".into(),
            "facet".into(),
        ];
        header.extend(inst.states.iter().map(|s| format!("mu_{s}")));
        w.write_record(&header).map_err(csv_error)?;
        for (i, s) in scheme.signals.iter().enumerate() {
            let mut record = vec![
                i.to_string(),
                s.probability.to_string(),
                inst.actions[s.action].clone(),
                s.facet.map_or(String::new(), |f| f.to_string()),
            ];
            record.extend(s.posterior.iter().map(|x| x.to_string()));
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn audit_csv(&self, report: &AuditReport) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.writer()?);
        w.write_record(["signal", "regret", "margin"])
            .map_err(csv_error)?;
        for (i, regret) in report.regrets.iter().enumerate() {
            let margin = report
                .margins
                .get(i)
                .map_or(String::new(), |m| m.to_string());
            w.write_record([i.to_string(), regret.to_string(), margin])
                .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}
