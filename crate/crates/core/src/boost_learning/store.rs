//! Append-only JSON-lines log of every candidate inserted during a run.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::seed::sha256_hex;
use crate::textdata::{TokenId, TokenSeq};
use crate::{Error, Result};

const FORMAT: &str = "fbgec-candidates";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    /// Hash of the correct sentence the candidate belongs to.
    pub owner: String,
    pub tokens: TokenSeq,
    /// `f(x^c) / f(candidate)` at insertion time.
    pub ratio: f64,
    pub epoch: usize,
    pub strategy: Strategy,
}

pub fn sequence_hash(tokens: &[TokenId]) -> String {
    let bytes: Vec<u8> = tokens.iter().flat_map(|t| t.to_le_bytes()).collect();
    sha256_hex(&bytes)[..16].to_string()
}

pub struct CandidateLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CandidateLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(Error::io(format!("create {}", path.display())))?;
        let mut out = BufWriter::new(file);
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&header).expect("header serializes")
        )?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn append(
        &mut self,
        owner: &[TokenId],
        tokens: &[TokenId],
        ratio: f64,
        epoch: usize,
        strategy: Strategy,
    ) -> Result<()> {
        let rec = CandidateRecord {
            owner: sequence_hash(owner),
            tokens: tokens.to_vec(),
            ratio,
            epoch,
            strategy,
        };
        let line = serde_json::to_string(&rec).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(Error::io(format!("write {}", self.path.display())))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(Error::io(format!("flush {}", self.path.display())))
    }
}

pub fn read_candidate_log(path: &Path) -> Result<Vec<CandidateRecord>> {
    let file = File::open(path).map_err(Error::io(format!("open {}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let parse_err = |line: usize, e: serde_json::Error| Error::Parse {
        line,
        message: e.to_string(),
    };
    let header: Header = match lines.next() {
        Some(l) => serde_json::from_str(&l?).map_err(|e| parse_err(1, e))?,
        None => return Err(Error::Format("empty candidate log".into())),
    };
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported candidate log {} v{}",
            header.format, header.version
        )));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| parse_err(i + 2, e))?);
    }
    Ok(out)
}
