use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

use super::{apply_edits, tokenize, ErrorType, LabeledEdit, SentencePair};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `source<TAB>target` per line.
    Tsv,
    /// CoNLL m2: an `S` line, `A` annotation lines, blank-line separated.
    M2,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "m2" => Ok(CorpusFormat::M2),
            other => Err(Error::config(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// One m2 record with every annotator's edit list (sorted by annotator id).
#[derive(Clone, Debug, PartialEq)]
pub struct M2Sentence {
    pub source: Vec<String>,
    pub annotators: Vec<Vec<LabeledEdit>>,
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(Error::io(format!("open {}", path.display())))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(Error::io(format!("read {}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(Error::io(format!("create {}", dir.display())))?;
        }
    }
    let file = File::create(path).map_err(Error::io(format!("create {}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads one sentence per line, tokenizing each.
pub fn read_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, l)| tokenize(l).map_err(|_| parse_err(i + 1, "empty sentence")))
        .collect()
}

pub fn write_sentences<S: AsRef<str>>(path: &Path, sentences: &[Vec<S>]) -> Result<()> {
    let mut w = create(path)?;
    for s in sentences {
        writeln!(w, "{}", join(s))?;
    }
    w.flush()?;
    Ok(())
}

fn join<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_parallel_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<SentencePair>> {
    match format {
        CorpusFormat::Tsv => parse_tsv(&read_lines(path)?),
        CorpusFormat::M2 => Ok(parse_m2(&read_lines(path)?)?
            .into_iter()
            .map(|s| {
                let edits = s.annotators.into_iter().next().unwrap_or_default();
                let target = apply_edits(&s.source, &edits).expect("validated while parsing");
                SentencePair {
                    source: s.source,
                    target,
                    edits: Some(edits),
                }
            })
            .collect()),
    }
}

fn parse_tsv(lines: &[String]) -> Result<Vec<SentencePair>> {
    let mut pairs = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(
                i + 1,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let source = tokenize(fields[0]).map_err(|_| parse_err(i + 1, "empty source"))?;
        let target = tokenize(fields[1]).map_err(|_| parse_err(i + 1, "empty target"))?;
        pairs.push(SentencePair::new(source, target));
    }
    Ok(pairs)
}

/// TSV pairs plus a JSON-lines sidecar holding each pair's labeled edits.
pub fn load_tsv_with_edits(tsv: &Path, sidecar: &Path) -> Result<Vec<SentencePair>> {
    let mut pairs = parse_tsv(&read_lines(tsv)?)?;
    let lines = read_lines(sidecar)?;
    let lines: Vec<_> = lines.iter().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != pairs.len() {
        return Err(Error::InputMismatch(format!(
            "{} has {} pairs but {} has {} edit records",
            tsv.display(),
            pairs.len(),
            sidecar.display(),
            lines.len()
        )));
    }
    for (i, (pair, line)) in pairs.iter_mut().zip(lines).enumerate() {
        let edits: Vec<LabeledEdit> =
            serde_json::from_str(line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        let applied =
            apply_edits(&pair.source, &edits).map_err(|e| parse_err(i + 1, e.to_string()))?;
        if applied != pair.target {
            return Err(parse_err(i + 1, "edits do not turn source into target"));
        }
        pair.edits = Some(edits);
    }
    Ok(pairs)
}

pub fn write_tsv(path: &Path, pairs: &[SentencePair]) -> Result<()> {
    let mut w = create(path)?;
    for p in pairs {
        writeln!(w, "{}\t{}", join(&p.source), join(&p.target))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tsv_with_edits(tsv: &Path, sidecar: &Path, pairs: &[SentencePair]) -> Result<()> {
    write_tsv(tsv, pairs)?;
    let mut w = create(sidecar)?;
    for p in pairs {
        let edits = p.edits.as_deref().unwrap_or(&[]);
        writeln!(
            w,
            "{}",
            serde_json::to_string(edits).expect("edits serialize")
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes pairs as single-annotator m2 records.
pub fn write_m2(path: &Path, pairs: &[SentencePair]) -> Result<()> {
    let mut w = create(path)?;
    for p in pairs {
        writeln!(w, "S {}", join(&p.source))?;
        let edits = p.edits.as_deref().unwrap_or(&[]);
        if edits.is_empty() {
            writeln!(w, "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0")?;
        }
        for e in edits {
            let repl = if e.replacement.is_empty() {
                "-NONE-".to_string()
            } else {
                join(&e.replacement)
            };
            writeln!(
                w,
                "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||0",
                e.begin, e.end, e.kind, repl
            )?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_m2_gold(path: &Path) -> Result<Vec<M2Sentence>> {
    parse_m2(&read_lines(path)?)
}

type M2Record = (Vec<String>, Vec<(usize, LabeledEdit)>, usize);

fn parse_m2(lines: &[String]) -> Result<Vec<M2Sentence>> {
    let mut out = Vec::new();
    let mut current: Option<M2Record> = None;

    let finish = |rec: M2Record, out: &mut Vec<M2Sentence>| -> Result<()> {
        let (source, mut edits, line) = rec;
        let mut ids: Vec<usize> = edits.iter().map(|(a, _)| *a).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            ids.push(0);
        }
        edits.sort_by_key(|(a, e)| (*a, e.begin, e.end));
        let mut annotators = Vec::with_capacity(ids.len());
        for id in ids {
            let list: Vec<LabeledEdit> = edits
                .iter()
                .filter(|(a, e)| *a == id && e.kind != ErrorType::Other("noop".into()))
                .map(|(_, e)| e.clone())
                .collect();
            apply_edits(&source, &list).map_err(|e| parse_err(line, e.to_string()))?;
            annotators.push(list);
        }
        out.push(M2Sentence { source, annotators });
        Ok(())
    };

    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            if let Some(rec) = current.take() {
                finish(rec, &mut out)?;
            }
            continue;
        }
        if let Some(rest) = line
            .strip_prefix("S ")
            .or_else(|| (line == "S").then_some(""))
        {
            if let Some(rec) = current.take() {
                finish(rec, &mut out)?;
            }
            let source = rest.split_whitespace().map(str::to_string).collect();
            current = Some((source, Vec::new(), lineno));
        } else if let Some(rest) = line.strip_prefix("A ") {
            let Some((_, edits, _)) = current.as_mut() else {
                return Err(parse_err(lineno, "annotation before any S line"));
            };
            edits.push(parse_annotation(rest, lineno)?);
        } else {
            return Err(parse_err(lineno, "expected an S or A line"));
        }
    }
    if let Some(rec) = current.take() {
        finish(rec, &mut out)?;
    }
    Ok(out)
}

fn parse_annotation(rest: &str, line: usize) -> Result<(usize, LabeledEdit)> {
    let fields: Vec<&str> = rest.split("|||").collect();
    if fields.len() < 3 {
        return Err(parse_err(
            line,
            "annotation needs at least span|||type|||replacement",
        ));
    }
    let span: Vec<&str> = fields[0].split_whitespace().collect();
    let kind = ErrorType::from(fields[1].to_string());
    let annotator = match fields.get(5) {
        Some(a) => a
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad annotator id {a:?}")))?,
        None => 0,
    };
    if span.len() != 2 {
        return Err(parse_err(line, "span must be two offsets"));
    }
    if span == ["-1", "-1"] {
        let noop = LabeledEdit {
            begin: 0,
            end: 0,
            replacement: vec![],
            kind: ErrorType::Other("noop".into()),
        };
        return Ok((annotator, noop));
    }
    let offset = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(line, format!("bad offset {s:?}")))
    };
    let (begin, end) = (offset(span[0])?, offset(span[1])?);
    let replacement = match fields[2].trim() {
        "-NONE-" | "" => Vec::new(),
        r => r.split_whitespace().map(str::to_string).collect(),
    };
    Ok((
        annotator,
        LabeledEdit {
            begin,
            end,
            replacement,
            kind,
        },
    ))
}
