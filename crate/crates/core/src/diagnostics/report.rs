use std::io::Write;

use serde::Serialize;

use crate::{Error, Result};

/// One CSV row: a grid point of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub law: String,
    pub n_or_t: usize,
    #[serde(rename = "K_or_a_or_delta")]
    pub param: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    /// Seeds of the pooled batches, joined with `+`.
    pub seed: String,
    pub exact: Option<f64>,
}

#[derive(Serialize)]
struct Core<'a> {
    law: &'a str,
    n_or_t: usize,
    #[serde(rename = "K_or_a_or_delta")]
    param: f64,
    estimate: f64,
    stderr: f64,
    samples: u64,
    seed: &'a str,
}

pub(crate) fn seed_label(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join("+")
}

/// Writes `rows` with the columns `law,n_or_t,K_or_a_or_delta,estimate,
/// stderr,samples,seed`, plus `exact` when any row carries one.
pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let err = |e: csv::Error| Error::Io(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    if rows.iter().any(|r| r.exact.is_some()) {
        for r in rows {
            w.serialize(r).map_err(err)?;
        }
    } else {
        for r in rows {
            w.serialize(Core {
                law: &r.law,
                n_or_t: r.n_or_t,
                param: r.param,
                estimate: r.estimate,
                stderr: r.stderr,
                samples: r.samples,
                seed: &r.seed,
            })
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(exact: Option<f64>) -> CsvRow {
        CsvRow {
            law: "meander".into(),
            n_or_t: 256,
            param: 4.0,
            estimate: 0.5,
            stderr: 0.01,
            samples: 100,
            seed: "7".into(),
            exact,
        }
    }

    #[test]
    fn header_and_optional_exact() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row(None)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "law,n_or_t,K_or_a_or_delta,estimate,stderr,samples,seed\nmeander,256,4.0,0.5,0.01,100,7\n"
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row(Some(0.25)), row(None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("law,n_or_t,K_or_a_or_delta,estimate,stderr,samples,seed,exact\n"));
        assert!(text.ends_with(",7,0.25\nmeander,256,4.0,0.5,0.01,100,7,\n"));
    }
}
