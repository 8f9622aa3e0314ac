//! Little-endian primitives for the on-disk formats.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let len =
        u32::try_from(s.len()).map_err(|_| Error::InvalidArgument(format!("string of {} bytes too long", s.len())))?;
    write_u32(w, len)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn usize_to_u32(v: usize, what: &'static str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} {v} exceeds u32")))
}

/// Reader that reports short reads as [`Error::Truncated`].
pub(crate) struct LeReader<R> {
    inner: R,
}

impl<R: Read> LeReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    pub fn exact(&mut self, buf: &mut [u8], what: &'static str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Truncated(what),
            _ => Error::Io(e),
        })
    }

    pub fn u32(&mut self, what: &'static str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.exact(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self, what: &'static str) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }

    /// Read `n` f32 values, widened to f64. Reads in bounded chunks so a
    /// corrupt length cannot trigger a huge allocation up front.
    pub fn f32s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        const CHUNK: usize = 1 << 16;
        let mut out = Vec::with_capacity(n.min(CHUNK));
        let mut buf = vec![0u8; CHUNK.min(n.max(1)) * 4];
        let mut left = n;
        while left > 0 {
            let take = left.min(CHUNK);
            let bytes = &mut buf[..take * 4];
            self.exact(bytes, what)?;
            out.extend(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64),
            );
            left -= take;
        }
        Ok(out)
    }

    pub fn string(&mut self, what: &'static str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let mut bytes = Vec::new();
        (&mut self.inner)
            .take(len as u64)
            .read_to_end(&mut bytes)
            .map_err(Error::Io)?;
        if bytes.len() != len {
            return Err(Error::Truncated(what));
        }
        String::from_utf8(bytes).map_err(|_| Error::Format(format!("{what}: invalid UTF-8")))
    }

    /// True when the stream has no more bytes.
    pub fn at_end(&mut self) -> Result<bool> {
        let mut b = [0u8; 1];
        loop {
            match self.inner.read(&mut b) {
                Ok(0) => return Ok(true),
                Ok(_) => return Ok(false),
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(Error::Io(e)),
            }
        }
    }
}
