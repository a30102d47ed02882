//! Binary index file: little-endian, magic `PHSC` and a version byte.
//!
//! ```text
//! "PHSC" 0x01
//! u64 corpus length (with sentinels)
//! u64 |C|
//! u32 vocabulary size (real tokens, sentinel excluded)
//! vocabulary size x { u32 byte length, UTF-8 bytes }   ids 1.. in order
//! u32 x length   token array
//! u64 x length   suffix array
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CorpusIndex, IndexError, TokenCorpus, TokenId, Vocabulary, SENTINEL};

pub const MAGIC: &[u8; 4] = b"PHSC";
pub const VERSION: u8 = 0x01;

pub fn write_index<W: Write>(index: &CorpusIndex, mut w: W) -> Result<(), IndexError> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(index.corpus().len() as u64).to_le_bytes())?;
    w.write_all(&index.total_tokens().to_le_bytes())?;
    w.write_all(&(index.vocabulary().len() as u32).to_le_bytes())?;
    for token in index.vocabulary().tokens() {
        w.write_all(&(token.len() as u32).to_le_bytes())?;
        w.write_all(token.as_bytes())?;
    }
    for &t in index.corpus().tokens() {
        w.write_all(&t.to_le_bytes())?;
    }
    for &p in index.suffix_array() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn exact<const N: usize>(&mut self, what: &str) -> Result<[u8; N], IndexError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| truncated(e, what))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.exact(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.exact(what)?))
    }
}

fn truncated(e: std::io::Error, what: &str) -> IndexError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        IndexError::Format(format!("truncated index file while reading {what}"))
    } else {
        IndexError::Io(e)
    }
}

pub fn read_index<R: Read>(inner: R) -> Result<CorpusIndex, IndexError> {
    let mut r = Reader { inner };
    let magic: [u8; 4] = r.exact("magic")?;
    if &magic != MAGIC {
        return Err(IndexError::Format(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let [version] = r.exact::<1>("version")?;
    if version != VERSION {
        return Err(IndexError::Format(format!(
            "unsupported index version {version}, expected {VERSION}"
        )));
    }
    let len = r.u64("corpus length")?;
    let total = r.u64("token total")?;
    let vocab_size = r.u32("vocabulary size")?;

    let mut tokens = Vec::with_capacity(vocab_size.min(1 << 20) as usize);
    for _ in 0..vocab_size {
        let n = r.u32("vocabulary entry length")? as usize;
        let mut bytes = vec![0u8; n];
        r.inner
            .read_exact(&mut bytes)
            .map_err(|e| truncated(e, "vocabulary entry"))?;
        let s = String::from_utf8(bytes)
            .map_err(|_| IndexError::Format("vocabulary entry is not UTF-8".into()))?;
        tokens.push(s);
    }
    let vocab = Vocabulary::from_ordered(tokens)?;

    let len = usize::try_from(len).map_err(|_| IndexError::Format("corpus too large".into()))?;
    let mut text = Vec::with_capacity(len.min(1 << 28));
    for _ in 0..len {
        let t: TokenId = r.u32("token array")?;
        if t != SENTINEL && t as usize > vocab.len() {
            return Err(IndexError::Format(format!("token id {t} outside vocabulary")));
        }
        text.push(t);
    }
    let mut sa = Vec::with_capacity(len.min(1 << 28));
    for _ in 0..len {
        let p = r.u64("suffix array")?;
        if p >= len as u64 {
            return Err(IndexError::Format(format!("suffix offset {p} out of range")));
        }
        sa.push(p);
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(IndexError::Format("trailing bytes after suffix array".into()));
    }

    let corpus = TokenCorpus::from_raw(text)?;
    if corpus.is_empty() {
        return Err(IndexError::Format("index holds an empty corpus".into()));
    }
    if corpus.total_tokens() != total {
        return Err(IndexError::Format(format!(
            "stored token total {total} disagrees with token array ({})",
            corpus.total_tokens()
        )));
    }
    Ok(CorpusIndex::from_parts(corpus, sa, vocab))
}

pub fn save_index(index: &CorpusIndex, path: &Path) -> Result<(), IndexError> {
    let file = File::create(path)?;
    write_index(index, BufWriter::new(file))
}

pub fn load_index(path: &Path) -> Result<CorpusIndex, IndexError> {
    let file = File::open(path)?;
    read_index(BufReader::new(file))
}
