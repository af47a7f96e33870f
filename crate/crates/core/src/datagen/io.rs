//! On-disk layout: `train.jsonl`, `val.jsonl`, `test.jsonl` (one
//! [`DatasetRecord`] per line) and `meta.json`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DatagenError, Dataset, DatasetMeta, DatasetRecord};
use crate::sim::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.jsonl",
            Split::Val => "val.jsonl",
            Split::Test => "test.jsonl",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> DatagenError + '_ {
    move |source| DatagenError::Json {
        path: path.display().to_string(),
        source,
    }
}

fn write_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), DatagenError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(json_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<(), DatagenError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_jsonl(&dir.join(Split::Train.file_name()), &data.train)?;
    write_jsonl(&dir.join(Split::Val.file_name()), &data.val)?;
    write_jsonl(&dir.join(Split::Test.file_name()), &data.test)?;
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&data.meta).map_err(json_err(&meta_path))?;
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))
}

pub fn read_split(dir: impl AsRef<Path>, split: Split) -> Result<Vec<DatasetRecord>, DatagenError> {
    let path = dir.as_ref().join(split.file_name());
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(json_err(&path))?);
    }
    Ok(out)
}

pub fn read_meta(dir: impl AsRef<Path>) -> Result<DatasetMeta, DatagenError> {
    let path = dir.as_ref().join("meta.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text).map_err(json_err(&path))
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DatagenError> {
    let dir = dir.as_ref();
    Ok(Dataset {
        meta: read_meta(dir)?,
        train: read_split(dir, Split::Train)?,
        val: read_split(dir, Split::Val)?,
        test: read_split(dir, Split::Test)?,
    })
}

/// Optional copy of the topology next to the splits, for topologies that are
/// not built in.
pub const TOPOLOGY_FILE: &str = "topology.json";

pub fn write_topology(dir: impl AsRef<Path>, topology: &Topology) -> Result<(), DatagenError> {
    let path = dir.as_ref().join(TOPOLOGY_FILE);
    fs::write(&path, topology.to_json() + "\n").map_err(io_err(&path))
}

/// The dataset's topology: `topology.json` if present, else the built-in
/// fixture named in the metadata.
pub fn read_topology(dir: impl AsRef<Path>, meta: &DatasetMeta) -> Result<Topology, DatagenError> {
    let path = dir.as_ref().join(TOPOLOGY_FILE);
    if path.exists() {
        Ok(Topology::load(&path)?)
    } else {
        Ok(Topology::resolve(&meta.topology)?)
    }
}
