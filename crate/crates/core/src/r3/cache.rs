//! Certificate persistence: CSV with columns `N,value,method,witness`, the
//! witness written as space-separated elements.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::search::R3Search;
use super::{IntSet, R3Certificate};
use crate::error::{Error, Result};

#[derive(serde::Serialize, serde::Deserialize)]
struct Row {
    #[serde(rename = "N")]
    n: usize,
    value: usize,
    method: String,
    witness: String,
}

/// Every row is re-verified on load: witness size and progression-freeness.
pub fn load_certificates<R: Read>(input: R) -> Result<Vec<R3Certificate>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        let elems = row
            .witness
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Csv(format!("witness element {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let cert = R3Certificate { n: row.n, value: row.value, witness: IntSet::new(row.n, elems)?, method: row.method.parse()? };
        if !cert.is_consistent() {
            return Err(Error::Csv(format!("certificate for N = {} fails verification", row.n)));
        }
        out.push(cert);
    }
    Ok(out)
}

pub fn save_certificates<W: Write>(certs: &[R3Certificate], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for c in certs {
        let witness = c.witness.members().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writer.serialize(Row { n: c.n, value: c.value, method: c.method.as_str().to_string(), witness })?;
    }
    writer.flush()?;
    Ok(())
}

/// A certificate file that grows as values are computed.
#[derive(Clone, Debug)]
pub struct R3Cache {
    path: PathBuf,
}

impl R3Cache {
    pub fn new(path: impl AsRef<Path>) -> Self {
        Self { path: path.as_ref().to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Missing file reads as empty.
    pub fn load(&self) -> Result<BTreeMap<usize, R3Certificate>> {
        match std::fs::File::open(&self.path) {
            Ok(file) => Ok(load_certificates(file)?.into_iter().map(|c| (c.n, c)).collect()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }

    /// Add certificates, keeping existing rows for the same N.
    pub fn merge(&self, certs: &[R3Certificate]) -> Result<()> {
        let mut all = self.load()?;
        for c in certs {
            all.entry(c.n).or_insert_with(|| c.clone());
        }
        let rows: Vec<R3Certificate> = all.into_values().collect();
        save_certificates(&rows, std::fs::File::create(&self.path)?)
    }

    /// `r_3([n])`, resuming from the cached prefix `N = 1, 2, ...` and storing
    /// every newly certified value.
    pub fn solve(&self, n: usize, budget: u64) -> Result<R3Certificate> {
        let cached = self.load()?;
        if let Some(c) = cached.get(&n) {
            return Ok(c.clone());
        }
        let prefix: Vec<R3Certificate> =
            cached.values().enumerate().take_while(|(i, c)| c.n == i + 1).map(|(_, c)| c.clone()).collect();
        let start = prefix.len();
        let mut search = R3Search::resume(&prefix)?;
        let result = search.extend_to(n, budget);
        let fresh: Vec<R3Certificate> =
            (start + 1..=search.certified_up_to()).filter_map(|k| search.certificate(k)).collect();
        self.merge(&fresh)?;
        result?;
        Ok(search.certificate(n).expect("table reaches n"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::r3::{r3_exhaustive, R3Method};

    #[test]
    fn round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let cache = R3Cache::new(dir.path().join("r3.csv"));
        assert!(cache.load().unwrap().is_empty());
        let c9 = cache.solve(9, 1_000_000).unwrap();
        assert_eq!(c9.value, 5);
        let loaded = cache.load().unwrap();
        assert_eq!(loaded.len(), 9);
        assert_eq!(loaded[&9], c9);
        let c12 = cache.solve(12, 1_000_000).unwrap();
        assert_eq!(c12.value, r3_exhaustive(12).unwrap().value);
        assert_eq!(cache.load().unwrap().len(), 12);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = "N,value,method,witness\n3,3,exhaustive,1 2 3\n";
        assert!(load_certificates(bad.as_bytes()).is_err());
        let imported = "N,value,method,witness\n2,2,literature,1 2\n";
        assert!(load_certificates(imported.as_bytes()).is_err());
        let good = "N,value,method,witness\n2,2,exhaustive,1 2\n";
        assert_eq!(load_certificates(good.as_bytes()).unwrap()[0].method, R3Method::Exhaustive);
    }
}
