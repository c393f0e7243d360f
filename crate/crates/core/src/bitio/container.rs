use super::BitString;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GCV1";
const HEADER_LEN: usize = 4 + 1 + 4 + 4;

/// Message file: magic, operator tag, little-endian `d` and bit length,
/// then the payload zero-padded to a byte boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub tag: u8,
    pub dim: u32,
    pub payload: BitString,
}

impl Container {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let bit_len = u32::try_from(self.payload.len())
            .map_err(|_| Error::invalid("payload longer than 2^32 bits"))?;
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.as_bytes().len());
        out.extend_from_slice(MAGIC);
        out.push(self.tag);
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&bit_len.to_le_bytes());
        out.extend_from_slice(self.payload.as_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header_err = |reason: &str| Error::Decode {
            offset: 0,
            reason: reason.to_string(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(header_err("container shorter than its header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(header_err("bad magic, expected GCV1"));
        }
        let tag = bytes[4];
        let dim = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
        let bit_len = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != bit_len.div_ceil(8) {
            return Err(header_err(&format!(
                "payload has {} bytes but the header declares {bit_len} bits",
                body.len()
            )));
        }
        Ok(Self {
            tag,
            dim,
            payload: BitString::from_bytes(body, bit_len)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_bit_exact() {
        let c = Container {
            tag: 1,
            dim: 2,
            payload: BitString::from_bit_chars("1010000011").unwrap(),
        };
        let bytes = c.to_bytes().unwrap();
        assert_eq!(
            bytes,
            vec![b'G', b'C', b'V', b'1', 1, 2, 0, 0, 0, 10, 0, 0, 0, 0b1010_0000, 0b1100_0000]
        );
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(Container::from_bytes(b"GCV").is_err());
        assert!(Container::from_bytes(b"XXXX\x01\x02\0\0\0\0\0\0\0").is_err());
        // Declares 9 bits but carries one byte.
        assert!(Container::from_bytes(b"GCV1\x01\x02\0\0\0\x09\0\0\0\xff").is_err());
    }
}
