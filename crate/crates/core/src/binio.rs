//! Little-endian helpers for the versioned binary artifact formats.

use std::io::{Read, Write};

use crate::{Error, Result};

pub struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b).map_err(Error::io("write"))
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    pub fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        self.u64(vs.len() as u64)?;
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush().map_err(Error::io("flush"))?;
        Ok(self.inner)
    }
}

pub struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    pub fn exact<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        Ok(buf)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 8]) -> Result<()> {
        let got = self.exact::<8>()?;
        if &got != magic {
            return Err(Error::Format(format!(
                "bad magic header {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.exact()?))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.exact()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.exact()?))
    }

    pub fn len(&mut self, limit: u64) -> Result<usize> {
        let n = self.u64()?;
        if n > limit {
            return Err(Error::Format(format!("length {n} exceeds limit {limit}")));
        }
        Ok(n as usize)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        if n > 1 << 20 {
            return Err(Error::Format("string too long".into()));
        }
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("unexpected end of file".into()))?;
        String::from_utf8(buf).map_err(|_| Error::Format("invalid utf-8".into()))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(1 << 32)?;
        (0..n).map(|_| self.f64()).collect()
    }
}
