use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Writes a long-format CSV: `# ` comment lines, a header, then rows.
pub fn write_tidy(path: &Path, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest round-trip form; exponent notation for very large or small values.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
