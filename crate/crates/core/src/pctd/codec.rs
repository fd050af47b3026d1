//! Length-prefixed big-endian integer encoding shared by key files and frames.

use num_bigint::BigUint;

use crate::error::{Error, Result};

pub fn put_int(out: &mut Vec<u8>, v: &BigUint) {
    let bytes = if v.bits() == 0 { Vec::new() } else { v.to_bytes_be() };
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

pub fn encode_ints<'a, I: IntoIterator<Item = &'a BigUint>>(vals: I) -> Vec<u8> {
    let mut out = Vec::new();
    for v in vals {
        put_int(&mut out, v);
    }
    out
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Decode("truncated input".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn int(&mut self) -> Result<BigUint> {
        let len = self.u32()? as usize;
        Ok(BigUint::from_bytes_be(self.bytes(len)?))
    }

    pub fn finish(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Decode(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}

/// Decode a payload that must hold a whole number of integers.
pub fn decode_ints(buf: &[u8]) -> Result<Vec<BigUint>> {
    let mut r = Reader::new(buf);
    let mut out = Vec::new();
    while !r.is_empty() {
        out.push(r.int()?);
    }
    Ok(out)
}
