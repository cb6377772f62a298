//! Number formatting and CSV plumbing shared by every output file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Significant digits of every number written to disk.
pub const SIG_DIGITS: usize = 12;

/// `%.12g`: fixed notation for exponents in `[-5, 12)`, scientific otherwise,
/// trailing zeros dropped. NaN is written `NA`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NA".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_num)
}

pub fn fmt_flag(x: Option<bool>) -> String {
    match x {
        Some(true) => "true".into(),
        Some(false) => "false".into(),
        None => "NA".into(),
    }
}

/// Parses a field written by [`fmt_num`].
pub fn parse_num(s: &str) -> Result<f64> {
    match s {
        "NA" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Io(format!("not a number: {s:?}"))),
    }
}

/// A CSV file opened with its `# ...` description line already written.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
    path: String,
}

impl CsvOut {
    pub fn create(path: &Path, description: &str, columns: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "# {description}").map_err(|e| io_err(path, e))?;
        let mut inner = csv::WriterBuilder::new().from_writer(buf);
        inner.write_record(columns).map_err(|e| csv_err(path, e))?;
        Ok(Self {
            inner,
            path: path.display().to_string(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| Error::Io(format!("writing {}: {e}", self.path)))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner
            .flush()
            .map_err(|e| Error::Io(format!("writing {}: {e}", self.path)))
    }
}

/// Reads a file written through [`CsvOut`]: returns the column names and the
/// records, skipping the description line.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok((header, rows))
}

/// Position of `name` in a header row.
pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Io(format!("{}: missing column {name:?}", path.display())))
}

pub(crate) fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(5000.0), "5000");
        assert_eq!(fmt_num(1e-5), "0.00001");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(2.0 * (-20f64).exp()), "4.12230724488e-09");
        assert_eq!(fmt_num(1e15), "1e+15");
        assert_eq!(fmt_num(f64::NAN), "NA");
        assert_eq!(fmt_opt(None), "NA");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn round_trip_within_precision() {
        for x in [0.394, -0.39467, 7.8e-300, 1.0 / 7.0, 33.0 / 100.0] {
            let y = parse_num(&fmt_num(x)).unwrap();
            assert!((x - y).abs() <= 1e-11 * x.abs());
        }
        assert!(parse_num("NA").unwrap().is_nan());
        assert!(parse_num("x").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let mut w = CsvOut::create(&path, "demo mode=default", &["t", "x"]).unwrap();
        w.row(["0", &fmt_num(0.5)]).unwrap();
        w.row(["1", "NA"]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# demo mode=default\nt,x\n0,0.5\n1,NA\n");
        let (h, rows) = read_csv(&path).unwrap();
        assert_eq!(h, vec!["t", "x"]);
        assert_eq!(rows.len(), 2);
        assert_eq!(column(&h, "x", &path).unwrap(), 1);
        assert!(column(&h, "y", &path).is_err());
    }
}
