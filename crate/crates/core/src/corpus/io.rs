use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Corpus, CorpusHeader, Example, CORPUS_FORMAT_VERSION};
use crate::{Error, Result};

/// Header line followed by one example per line.
pub fn write_corpus<E: Example>(path: &Path, corpus: &Corpus<E>) -> Result<()> {
    if corpus.header.strength != E::STRENGTH {
        return Err(Error::usage("corpus header strength does not match its examples"));
    }
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &corpus.header)?;
    out.write_all(b"\n")?;
    for e in &corpus.examples {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads only the header line, e.g. to find out the annotation strength.
pub fn read_header(path: &Path) -> Result<CorpusHeader> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    if first.trim().is_empty() {
        return Err(Error::Format("empty corpus file".into()));
    }
    Ok(serde_json::from_str(&first)?)
}

pub fn read_corpus<E: Example>(path: &Path) -> Result<Corpus<E>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty corpus file".into()))??;
    let header: CorpusHeader = serde_json::from_str(&first)?;
    if header.format_version != CORPUS_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported corpus version {}", header.format_version)));
    }
    if header.strength != E::STRENGTH {
        return Err(Error::Format(format!(
            "corpus holds {:?} examples, expected {:?}",
            header.strength,
            E::STRENGTH
        )));
    }
    if header.config.hash() != header.config_hash {
        return Err(Error::Format("corpus config hash mismatch".into()));
    }
    let mut examples = Vec::new();
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            examples.push(serde_json::from_str(&line)?);
        }
    }
    Ok(Corpus { header, examples })
}
