//! JSON-Lines datasets and constraint-set files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MilpInstance;

/// Version of the on-disk dataset and sets formats.
pub const FORMAT_VERSION: u32 = 1;

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(item);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a dataset, one instance per line.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<MilpInstance>> {
    let instances: Vec<MilpInstance> = read_jsonl(path.as_ref())?;
    for inst in &instances {
        inst.validate()?;
    }
    Ok(instances)
}

pub fn write_dataset(path: impl AsRef<Path>, instances: &[MilpInstance]) -> Result<()> {
    write_jsonl(path.as_ref(), instances)
}

/// One line of a sets file: binding and invariant sets of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetsRecord {
    pub name: String,
    #[serde(rename = "B")]
    pub binding: Vec<usize>,
    #[serde(rename = "S")]
    pub invariant: Vec<usize>,
}

pub fn read_sets(path: impl AsRef<Path>) -> Result<Vec<SetsRecord>> {
    read_jsonl(path.as_ref())
}

pub fn write_sets(path: impl AsRef<Path>, records: &[SetsRecord]) -> Result<()> {
    write_jsonl(path.as_ref(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_toy;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.jsonl");
        let toy = gen_toy();
        write_dataset(&p, &toy).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), toy);
    }

    #[test]
    fn instance_json_shape() {
        let v = serde_json::to_value(&gen_toy()[0]).unwrap();
        assert_eq!(
            v["constraints"][3]["coeffs"],
            serde_json::json!([[0, -1.0], [1, -1.0]])
        );
        assert_eq!(v["var_bounds"][0], serde_json::json!({}));
        assert_eq!(v["theta"], serde_json::json!([1.0]));
    }

    #[test]
    fn sets_record_field_names() {
        let r = SetsRecord {
            name: "a".into(),
            binding: vec![2],
            invariant: vec![1, 2],
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"name":"a","B":[2],"S":[1,2]}"#
        );
    }

    #[test]
    fn invalid_instance_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        let mut inst = gen_toy().remove(0);
        inst.objective.push(1.0);
        write_dataset(&p, &[inst]).unwrap();
        assert!(matches!(
            read_dataset(&p),
            Err(Error::InvalidInstance { .. })
        ));
        std::fs::write(&p, "{not json}\n").unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Parse(_))));
    }
}
