//! Binary cache of `f64` tables, keyed by law fingerprint, horizon and
//! table selection.
//!
//! Layout (little endian): magic `CWDPTAB\0`, format version `u32`, fingerprint
//! length `u32` + bytes, horizon `u64`, selection `u8`, then each present table
//! as row count `u64` and per row `start i64, len u64, below f64, above f64,
//! values f64*`, then the first-return pmf as `len u64, values f64*`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::table::{Row, Table};
use super::{DpTables, LawKind, TableSelection};
use crate::{Error, Result, StepLaw};

const MAGIC: &[u8; 8] = b"CWDPTAB\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn cache_path(dir: &Path, law: &StepLaw, n_max: usize, selection: TableSelection) -> PathBuf {
    let fp = law.fingerprint();
    dir.join(format!("{}-{n_max}-{:02x}.dp", &fp[..16], selection.bits()))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Cache(e.to_string())
}

pub fn save(tables: &DpTables<f64>, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    let mut w = BufWriter::new(fs::File::create(&tmp).map_err(io_err)?);
    let fp = tables.law().fingerprint();
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io_err);
    put(MAGIC)?;
    put(&FORMAT_VERSION.to_le_bytes())?;
    put(&(fp.len() as u32).to_le_bytes())?;
    put(fp.as_bytes())?;
    put(&(tables.horizon() as u64).to_le_bytes())?;
    put(&[tables.selection().bits()])?;
    for kind in LawKind::ALL {
        if let Some(table) = tables.table_rows(kind) {
            put(&(table.rows.len() as u64).to_le_bytes())?;
            for row in &table.rows {
                put(&row.start.to_le_bytes())?;
                put(&(row.vals.len() as u64).to_le_bytes())?;
                put(&row.below.to_le_bytes())?;
                put(&row.above.to_le_bytes())?;
                for v in &row.vals {
                    put(&v.to_le_bytes())?;
                }
            }
        }
    }
    let pmf = tables.t_pmf_slice();
    put(&(pmf.len() as u64).to_le_bytes())?;
    for v in pmf {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(io_err)?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err)
}

struct Reader<R>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf).map_err(io_err)?;
        Ok(buf)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn load(law: &StepLaw, path: &Path) -> Result<DpTables<f64>> {
    let mut r = Reader(BufReader::new(fs::File::open(path).map_err(io_err)?));
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != FORMAT_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let fp_len = u32::from_le_bytes(r.bytes()?) as usize;
    let mut fp = vec![0u8; fp_len];
    r.0.read_exact(&mut fp).map_err(io_err)?;
    if fp != law.fingerprint().as_bytes() {
        return Err(Error::Cache("law fingerprint mismatch".into()));
    }
    let horizon = r.u64()? as usize;
    let selection = TableSelection::from_bits(r.bytes::<1>()?[0]);
    let lattice = law.as_lattice()?;
    let mut tables: [Option<Table<f64>>; 5] = Default::default();
    for kind in LawKind::ALL {
        let Some(slot) = kind.slot() else { continue };
        if !selection.contains(kind) {
            continue;
        }
        let n_rows = r.u64()? as usize;
        let mut rows = Vec::with_capacity(n_rows);
        for _ in 0..n_rows {
            let start = i64::from_le_bytes(r.bytes()?);
            let len = r.u64()? as usize;
            let below = r.f64()?;
            let above = r.f64()?;
            let vals = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            rows.push(Row { start, vals, below, above });
        }
        tables[slot] = Some(Table { rows });
    }
    let pmf_len = r.u64()? as usize;
    let t_pmf = (0..pmf_len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    Ok(DpTables { law: law.clone(), horizon, support: lattice.support::<f64>(), tables, t_pmf })
}

/// Loads cached tables when present, else builds and stores them.
pub fn load_or_build(dir: &Path, law: &StepLaw, n_max: usize, selection: TableSelection) -> Result<DpTables<f64>> {
    let path = cache_path(dir, law, n_max, selection);
    if path.exists() {
        if let Ok(t) = load(law, &path) {
            return Ok(t);
        }
    }
    let tables = DpTables::build_with(law, n_max, selection)?;
    save(&tables, &path)?;
    Ok(tables)
}
