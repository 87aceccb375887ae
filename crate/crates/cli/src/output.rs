use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Output directory that records every file written into it.
pub(crate) struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

pub(crate) use entropic_tail::numeric::fmt_num as num;

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.root.join(name);
        let f = File::create(&path).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn with_writer(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> entropic_tail::Result<()>,
    ) -> Result<(), CliError> {
        let mut w = self.open(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Validation(format!("json: {e}")))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// Header row of labels, then one numeric row per label.
pub(crate) fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let labels: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Validation(format!("{} row {}: {e}", path.display(), i + 1)))?;
        rows.push(row);
    }
    if rows.len() != labels.len() || rows.iter().any(|r| r.len() != labels.len()) {
        return Err(CliError::Validation(format!("{}: expected a square {}x{} matrix", path.display(), labels.len(), labels.len())));
    }
    Ok((labels, rows))
}

/// Columns `p, psi`.
pub(crate) fn read_psi_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let file = File::open(path).map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let (mut p, mut v) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let get = |k: usize| -> Result<f64, CliError> {
            rec.get(k)
                .ok_or_else(|| CliError::Validation(format!("{} row {}: expected columns p, psi", path.display(), i + 1)))?
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("{} row {}: {e}", path.display(), i + 1)))
        };
        p.push(get(0)?);
        v.push(get(1)?);
    }
    Ok((p, v))
}
