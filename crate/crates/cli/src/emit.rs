use std::io::Write;
use std::path::Path;

use boostdyn::Waveform;
use serde::Serialize;

use crate::error::CliError;

/// Shortest decimal string that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Builds a CSV document with LF line endings.
pub struct Table {
    out: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Self {
            out: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new()),
        };
        t.row(header);
        t
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        // writing into a Vec cannot fail
        self.out
            .write_record(fields.iter().map(|f| f.as_ref()))
            .expect("in-memory CSV write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.out.into_inner().expect("in-memory CSV flush")
    }
}

pub fn waveform_csv(w: &Waveform) -> Vec<u8> {
    let mut t = Table::new(&["t", "v_o"]);
    for (time, v) in w.iter() {
        t.row(&[num(time), num(v)]);
    }
    t.into_bytes()
}

#[derive(Serialize)]
struct WaveformJson<'a> {
    t: Vec<f64>,
    v_o: &'a [f64],
}

pub fn waveform_json(w: &Waveform) -> Vec<u8> {
    json(&WaveformJson {
        t: w.iter().map(|(t, _)| t).collect(),
        v_o: w.samples(),
    })
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable report");
    out.push(b'\n');
    out
}

/// Writes to `path`, or to stdout without one.
pub fn write(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            message: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1e-7, 6.4, 1.0 / 3.0, 13.458_372_1e3, -2.5e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(5.0), "5");
    }

    #[test]
    fn csv_uses_lf() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&["1", "x;y"]);
        assert_eq!(t.into_bytes(), b"a,b\n1,x;y\n");
    }
}
