//! Dataset file formats.
//!
//! JSONL: one object per line, `{"id": .., "vector": [..], "label": .., "tokens": [..]}`
//! with `tokens` optional. The label set is the set of labels present.
//!
//! Binary (little-endian throughout):
//!
//! ```text
//! magic      b"SCIS"
//! version    u32            (currently 1)
//! n          u64            record count
//! u          u32            embedding width
//! k          u32            label-set size
//! label set  i32 * k
//! vectors    f32 * n * u    row-major
//! labels     i32 * n
//! ids        n * (u32 byte length, UTF-8 bytes)
//! tokens     n * (u32 count or u32::MAX for none, count * (u32 length, UTF-8 bytes))
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{validate_record, EmbeddingDataset, EmbeddingRecord};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SCIS";
pub const FORMAT_VERSION: u32 = 1;
const NO_TOKENS: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Binary => "bin",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(Error::InvalidArgument(format!("unknown dataset format `{other}`"))),
        }
    }
}

pub fn read_dataset(path: impl AsRef<Path>, format: Format) -> Result<EmbeddingDataset> {
    let file = File::open(path)?;
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file)),
        Format::Binary => read_binary(BufReader::new(file)),
    }
}

pub fn write_dataset(dataset: &EmbeddingDataset, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        Format::Jsonl => write_jsonl(dataset, &mut out)?,
        Format::Binary => write_binary(dataset, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonLine<'a> {
    id: &'a str,
    vector: &'a [f32],
    label: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<&'a [String]>,
}

pub fn read_jsonl(reader: impl BufRead) -> Result<EmbeddingDataset> {
    let mut records: Vec<EmbeddingRecord> = Vec::new();
    let mut dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EmbeddingRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        let expected = *dim.get_or_insert(record.vector.len());
        validate_record(&record, expected)?;
        records.push(record);
    }
    EmbeddingDataset::from_records(records)
}

pub fn write_jsonl(dataset: &EmbeddingDataset, out: &mut impl Write) -> Result<()> {
    for r in dataset.records() {
        let line = JsonLine { id: &r.id, vector: &r.vector, label: r.label, tokens: r.tokens.as_deref() };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn put_str(out: &mut impl Write, s: &str) -> Result<()> {
    let len = u32::try_from(s.len()).map_err(|_| Error::InvalidArgument("string longer than 4 GiB".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_binary(dataset: &EmbeddingDataset, out: &mut impl Write) -> Result<()> {
    let dim = u32::try_from(dataset.dim()).map_err(|_| Error::InvalidArgument("dimension overflows u32".into()))?;
    let k = u32::try_from(dataset.label_set().len()).expect("label set fits u32");
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    out.write_all(&dim.to_le_bytes())?;
    out.write_all(&k.to_le_bytes())?;
    for l in dataset.label_set() {
        out.write_all(&l.to_le_bytes())?;
    }
    for r in dataset.records() {
        for v in &r.vector {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for r in dataset.records() {
        out.write_all(&r.label.to_le_bytes())?;
    }
    for r in dataset.records() {
        put_str(out, &r.id)?;
    }
    for r in dataset.records() {
        match &r.tokens {
            None => out.write_all(&NO_TOKENS.to_le_bytes())?,
            Some(tokens) => {
                let count = u32::try_from(tokens.len())
                    .ok()
                    .filter(|&c| c != NO_TOKENS)
                    .ok_or_else(|| Error::InvalidArgument("too many tokens".into()))?;
                out.write_all(&count.to_le_bytes())?;
                for t in tokens {
                    put_str(out, t)?;
                }
            }
        }
    }
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::BadHeader(format!("truncated while reading {what}")),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.bytes::<4>(what).map(u32::from_le_bytes)
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        self.bytes::<4>(what).map(i32::from_le_bytes)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let mut buf = Vec::new();
        (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(Error::BadHeader(format!("truncated while reading {what}")));
        }
        String::from_utf8(buf).map_err(|_| Error::BadHeader(format!("{what} is not valid UTF-8")))
    }
}

pub fn read_binary(reader: impl Read) -> Result<EmbeddingDataset> {
    let mut c = Cursor { inner: reader };
    if &c.bytes::<4>("magic")? != MAGIC {
        return Err(Error::BadHeader("magic bytes are not SCIS".into()));
    }
    let version = c.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::BadHeader(format!("unsupported format version {version}")));
    }
    let n = usize::try_from(u64::from_le_bytes(c.bytes::<8>("record count")?))
        .map_err(|_| Error::BadHeader("record count overflows usize".into()))?;
    let dim = c.u32("dimension")? as usize;
    let k = c.u32("label-set size")? as usize;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let label_set = (0..k).map(|_| c.i32("label set")).collect::<Result<Vec<_>>>()?;

    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..dim)
            .map(|_| c.bytes::<4>("vectors").map(f32::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        vectors.push(v);
    }
    let labels = (0..n).map(|_| c.i32("labels")).collect::<Result<Vec<_>>>()?;
    let ids = (0..n).map(|_| c.string("id table")).collect::<Result<Vec<_>>>()?;
    let mut token_lists = Vec::with_capacity(n);
    for _ in 0..n {
        let count = c.u32("token table")?;
        if count == NO_TOKENS {
            token_lists.push(None);
        } else {
            let tokens = (0..count).map(|_| c.string("token table")).collect::<Result<Vec<_>>>()?;
            token_lists.push(Some(tokens));
        }
    }

    let records = vectors
        .into_iter()
        .zip(labels)
        .zip(ids)
        .zip(token_lists)
        .map(|(((vector, label), id), tokens)| EmbeddingRecord { id, vector, label, tokens })
        .collect();
    let dataset = EmbeddingDataset::new(label_set, records)?;
    if dataset.label_set().len() != k {
        return Err(Error::BadHeader(format!("label set of {k} entries contains duplicates")));
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingDataset {
        let records = (0..3)
            .map(|i| EmbeddingRecord {
                id: format!("r{i}"),
                vector: vec![i as f32, 0.1, -2.5e-7, 1.0 / 3.0],
                label: i % 2,
                tokens: (i == 1).then(|| vec!["a".to_string(), "ü".to_string()]),
            })
            .collect();
        EmbeddingDataset::from_records(records).unwrap()
    }

    #[test]
    fn three_records_of_dim_four() {
        let ds = sample();
        let mut buf = Vec::new();
        write_jsonl(&ds, &mut buf).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!((back.len(), back.dim()), (3, 4));
        assert_eq!(back, ds);
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = read_jsonl(&b""[..]).unwrap_err();
        assert_eq!(err.to_string(), "empty dataset");
        assert!(matches!(read_jsonl(&b"\n\n"[..]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn dimension_mismatch_names_the_record() {
        let text = "{\"id\":\"a\",\"vector\":[1,2,3,4],\"label\":0}\n{\"id\":\"bad\",\"vector\":[1,2,3],\"label\":1}\n";
        match read_jsonl(text.as_bytes()) {
            Err(Error::DimensionMismatch { id, expected: 4, found: 3 }) => assert_eq!(id, "bad"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"id\":\"a\",\"vector\":[1],\"label\":0}\n{oops\n";
        assert!(matches!(read_jsonl(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let overflow = "{\"id\":\"a\",\"vector\":[1e60],\"label\":0}\n";
        assert!(read_jsonl(overflow.as_bytes()).is_err());
    }

    #[test]
    fn binary_round_trip_and_header_checks() {
        let ds = sample();
        let mut buf = Vec::new();
        write_binary(&ds, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"SCIS");
        assert_eq!(read_binary(buf.as_slice()).unwrap(), ds);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(bad.as_slice()), Err(Error::BadHeader(_))));
        let mut future = buf.clone();
        future[4] = 9;
        assert!(matches!(read_binary(future.as_slice()), Err(Error::BadHeader(_))));
        assert!(matches!(read_binary(&buf[..buf.len() - 3]), Err(Error::BadHeader(_))));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let ds = sample();
        let err = write_dataset(&ds, "/nonexistent-dir/x/y.jsonl", Format::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
