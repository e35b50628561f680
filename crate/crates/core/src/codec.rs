//! Versioned little-endian binary envelope for index artifacts.
//!
//! Layout of every `.bin` file:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `OCNQIDX\0`                      |
//! | 8      | 4    | format version, u32 LE                 |
//! | 12     | 4    | artifact kind, u32 LE                  |
//! | 16     | 8    | payload length in bytes, u64 LE        |
//! | 24     | n    | payload                                |
//! | 24 + n | 32   | SHA-256 of the payload                 |
//!
//! Inside payloads, integers are fixed-width little endian, `f64` is its
//! IEEE-754 bit pattern as u64 LE, strings are a u64 byte length followed
//! by UTF-8 bytes, and sequences are a u64 count followed by elements.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"OCNQIDX\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Kind {
    Corpus = 1,
    Ocean = 2,
    TfIdfDoc = 3,
    TfIdfPara = 4,
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn count(&mut self, n: usize) {
        self.u64(n as u64);
    }

    pub fn str(&mut self, s: &str) {
        self.count(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn opt_f64(&mut self, v: Option<f64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.f64(x);
            }
            None => self.u8(0),
        }
    }

    /// Wrap the payload in the envelope.
    pub fn finish(self, kind: Kind) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.buf.len() + DIGEST_LEN);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(kind as u32).to_le_bytes());
        out.extend_from_slice(&(self.buf.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.buf);
        out.extend_from_slice(&Sha256::digest(&self.buf));
        out
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    file: &'a str,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validate the envelope of `bytes` and return a reader over the
    /// payload.
    pub fn open(file: &'a str, bytes: &'a [u8], kind: Kind) -> Result<Self> {
        let corrupt = |reason: &str| Error::Corrupt { file: file.to_owned(), reason: reason.to_owned() };
        if bytes.len() < HEADER_LEN {
            return Err(corrupt("truncated header"));
        }
        if bytes[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch { file: file.to_owned(), expected: FORMAT_VERSION, found: version });
        }
        let found_kind = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        if found_kind != kind as u32 {
            return Err(corrupt(&format!("artifact kind {found_kind}, expected {}", kind as u32)));
        }
        let len = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let expected_total = (HEADER_LEN as u64).checked_add(len).and_then(|n| n.checked_add(DIGEST_LEN as u64));
        if expected_total != Some(bytes.len() as u64) {
            return Err(corrupt("length mismatch (truncated or trailing bytes)"));
        }
        let payload = &bytes[HEADER_LEN..HEADER_LEN + len as usize];
        if Sha256::digest(payload).as_slice() != &bytes[HEADER_LEN + len as usize..] {
            return Err(corrupt("payload checksum mismatch"));
        }
        Ok(Reader { file, data: payload, pos: 0 })
    }

    fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::Corrupt { file: self.file.to_owned(), reason: reason.into() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.corrupt("unexpected end of payload"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// A sequence length, bounded by the remaining payload so corrupt
    /// counts cannot trigger huge allocations.
    pub fn count(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (self.data.len() - self.pos) as u64 {
            return Err(self.corrupt(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.count()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.corrupt("invalid UTF-8"))
    }

    pub fn opt_f64(&mut self) -> Result<Option<f64>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.f64()?)),
            t => Err(self.corrupt(format!("bad option tag {t}"))),
        }
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(self.corrupt("trailing payload bytes"));
        }
        Ok(())
    }
}
