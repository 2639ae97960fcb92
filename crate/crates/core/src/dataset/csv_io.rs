use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{infer_geometry, CsiSample, Dataset};
use crate::error::{CsixError, Result};

const META_COLUMNS: [&str; 3] = ["location", "session", "split"];

/// Overrides for values a CSV file does not carry.
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Number of location classes. Inferred as the largest label when absent.
    pub locations: Option<usize>,
    /// Antenna pairs A; the subcarrier count is K / A. Defaults to 4 when K allows.
    pub antenna_pairs: Option<usize>,
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv_with(path, CsvOptions::default())
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CsixError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header = reader.headers()?.clone();
    let k = check_header(&header)?;

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let bad = |message: String| CsixError::Row { row, message };
        if record.len() != k + META_COLUMNS.len() {
            return Err(bad(format!(
                "expected {k} channels, got {}",
                record.len().saturating_sub(META_COLUMNS.len())
            )));
        }
        let location: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad location {:?}", &record[0])))?;
        let session: u32 = record[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad session {:?}", &record[1])))?;
        let split = record[2].parse().map_err(|e: CsixError| bad(e.to_string()))?;
        let channels = record
            .iter()
            .skip(META_COLUMNS.len())
            .enumerate()
            .map(|(c, field)| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("channel {}: cannot parse {field:?}", c + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(CsiSample {
            channels,
            location,
            session,
            split,
        });
    }

    let (subcarriers, antenna_pairs) = match opts.antenna_pairs {
        Some(a) if a > 0 && k % a == 0 => (k / a, a),
        Some(a) => {
            return Err(CsixError::InvalidInput(format!(
                "{k} channels cannot be split into {a} antenna pairs"
            )))
        }
        None => infer_geometry(k),
    };
    let locations = opts
        .locations
        .unwrap_or_else(|| samples.iter().map(|s| s.location).max().unwrap_or(1).max(1));
    Dataset::new(samples, subcarriers, antenna_pairs, locations)
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let bad = |m: String| CsixError::InvalidInput(format!("header: {m}"));
    if header.len() < META_COLUMNS.len() + 1 {
        return Err(bad("expected location,session,split,c001,...".into()));
    }
    for (got, want) in header.iter().zip(META_COLUMNS) {
        if got.trim() != want {
            return Err(bad(format!("expected column {want:?}, found {got:?}")));
        }
    }
    let k = header.len() - META_COLUMNS.len();
    for (c, name) in header.iter().skip(META_COLUMNS.len()).enumerate() {
        let index = name
            .trim()
            .strip_prefix('c')
            .and_then(|d| d.parse::<usize>().ok());
        if index != Some(c + 1) {
            return Err(bad(format!("expected channel column {}, found {name:?}", c + 1)));
        }
    }
    Ok(k)
}

fn channel_column(c: usize, k: usize) -> String {
    let width = k.to_string().len().max(3);
    format!("c{c:0width$}")
}

/// Writes the dataset; amplitudes use 17 significant digits so that
/// reloading reproduces every value exactly.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CsixError::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv(dataset, &mut out).map_err(|e| CsixError::io(path, e))?;
    out.flush().map_err(|e| CsixError::io(path, e))
}

fn write_csv<W: Write>(dataset: &Dataset, out: &mut W) -> std::io::Result<()> {
    let k = dataset.channels();
    let mut line = META_COLUMNS.join(",");
    for c in 1..=k {
        line.push(',');
        line.push_str(&channel_column(c, k));
    }
    writeln!(out, "{line}")?;
    for s in dataset.samples() {
        write!(out, "{},{},{}", s.location, s.session, s.split)?;
        for v in &s.channels {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use std::fs;

    fn header(k: usize) -> String {
        let mut h = "location,session,split".to_string();
        for c in 1..=k {
            h.push_str(&format!(",c{c:03}"));
        }
        h
    }

    fn row(location: usize, values: &[f64]) -> String {
        let mut r = format!("{location},0,train");
        for v in values {
            r.push_str(&format!(",{v}"));
        }
        r
    }

    #[test]
    fn single_row_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        fs::write(&path, format!("{}\n{}\n", header(120), row(1, &[0.5; 120]))).unwrap();
        let ds = load_csv(&path).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.channels(), 120);
        assert_eq!((ds.subcarriers(), ds.antenna_pairs()), (30, 4));
        assert_eq!(ds.samples()[0].split, Split::Train);
    }

    #[test]
    fn short_row_reports_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.csv");
        fs::write(
            &path,
            format!("{}\n{}\n{}\n", header(120), row(1, &[0.5; 120]), row(1, &[0.5; 119])),
        )
        .unwrap();
        let err = load_csv(&path).unwrap_err().to_string();
        assert!(err.starts_with("row 2: expected 120 channels"), "{err}");
    }

    #[test]
    fn rejects_negative_amplitude_and_bad_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neg.csv");
        fs::write(&path, format!("{}\n{}\n", header(2), row(1, &[0.5, -1.0]))).unwrap();
        assert!(load_csv(&path).unwrap_err().to_string().contains("row 1"));

        fs::write(&path, format!("{}\n{}\n", header(2), row(0, &[0.5, 1.0]))).unwrap();
        assert!(load_csv(&path).is_err());

        fs::write(&path, format!("{}\n{}\n", header(2), row(3, &[0.5, 1.0]))).unwrap();
        let opts = CsvOptions {
            locations: Some(2),
            antenna_pairs: None,
        };
        assert!(load_csv_with(&path, opts).is_err());
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/nonexistent/dir/x.csv").unwrap_err();
        assert!(matches!(err, CsixError::Io { .. }));
    }

    #[test]
    fn empty_and_single_sample_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let empty = Dataset::new(vec![], 30, 4, 1).unwrap();
        save_csv(&empty, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("location,session,split,c001,c002"));
        assert!(text.trim_end().ends_with("c120"));

        let one = Dataset::new(
            vec![CsiSample {
                channels: vec![1.25; 120],
                location: 1,
                session: 3,
                split: Split::Test,
            }],
            30,
            4,
            1,
        )
        .unwrap();
        save_csv(&one, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("1,3,test,1.2500000000000000e0,"));
    }

    #[test]
    fn header_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        fs::write(&path, "loc,session,split,c001\n1,0,train,1.0\n").unwrap();
        assert!(load_csv(&path).is_err());
        fs::write(&path, "location,session,split,c002\n1,0,train,1.0\n").unwrap();
        assert!(load_csv(&path).is_err());
    }
}
