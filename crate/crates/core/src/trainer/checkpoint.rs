//! Binary checkpoint container (little-endian).
//!
//! ```text
//! magic     8 bytes  "QFECKPT\0"
//! version   u32      currently 1
//! config    u32 length + UTF-8 resolved config text
//! epoch     u32      epochs completed
//! params    u32 group count, then per group: u64 length + f64 values
//! adam      f64 lr, u64 steps, u32 group count,
//!           then per group: u64 length + m values + v values
//! ```
//!
//! Trailing bytes are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::optim::Adam;

pub const MAGIC: &[u8; 8] = b"QFECKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub epoch: u32,
    pub params: Vec<Vec<f64>>,
    pub adam: Adam,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.config_text.len() as u32).to_le_bytes());
        out.extend_from_slice(self.config_text.as_bytes());
        out.extend_from_slice(&self.epoch.to_le_bytes());
        put_groups(&mut out, self.params.iter().map(|g| (g.as_slice(), None)));
        out.extend_from_slice(&self.adam.lr.to_le_bytes());
        out.extend_from_slice(&self.adam.steps().to_le_bytes());
        put_groups(
            &mut out,
            self.adam
                .first_moments()
                .iter()
                .zip(self.adam.second_moments())
                .map(|(m, v)| (m.as_slice(), Some(v.as_slice()))),
        );
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: "not a checkpoint (bad magic)".into(),
            });
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format {
                offset: 8,
                message: format!("unsupported checkpoint version {version}"),
            });
        }
        let config_len = r.u32()? as usize;
        let at = r.pos;
        let config_text = std::str::from_utf8(r.take(config_len)?)
            .map_err(|e| Error::Format {
                offset: at + e.valid_up_to(),
                message: "config text is not UTF-8".into(),
            })?
            .to_owned();
        let epoch = r.u32()?;
        let n = r.u32()? as usize;
        let params = (0..n).map(|_| r.floats()).collect::<Result<Vec<_>>>()?;
        let lr = r.f64()?;
        let steps = r.u64()?;
        let n = r.u32()? as usize;
        let mut m = Vec::new();
        let mut v = Vec::new();
        for _ in 0..n {
            let at = r.pos;
            let len = r.u64()?;
            let len = r.check_len(len, 16, at)?;
            m.push(r.f64s(len)?);
            v.push(r.f64s(len)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos,
                message: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        let adam = Adam::from_parts(lr, steps, m, v).map_err(|e| Error::Format {
            offset: bytes.len(),
            message: e.to_string(),
        })?;
        Ok(Checkpoint {
            config_text,
            epoch,
            params,
            adam,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Checkpoint::decode(&std::fs::read(path)?)
    }
}

fn put_groups<'a>(
    out: &mut Vec<u8>,
    groups: impl ExactSizeIterator<Item = (&'a [f64], Option<&'a [f64]>)>,
) {
    out.extend_from_slice(&(groups.len() as u32).to_le_bytes());
    for (a, b) in groups {
        out.extend_from_slice(&(a.len() as u64).to_le_bytes());
        for x in a.iter().chain(b.into_iter().flatten()) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.bytes.len(),
                message: format!("truncated: needed {n} bytes at offset {}", self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    /// Rejects lengths that cannot fit in the remaining input before allocating.
    fn check_len(&self, len: u64, bytes_per_item: usize, at: usize) -> Result<usize> {
        let remaining = (self.bytes.len() - self.pos) / bytes_per_item;
        match usize::try_from(len) {
            Ok(n) if n <= remaining => Ok(n),
            _ => Err(Error::Format {
                offset: at,
                message: format!("group length {len} exceeds remaining input"),
            }),
        }
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn floats(&mut self) -> Result<Vec<f64>> {
        let at = self.pos;
        let len = self.u64()?;
        let len = self.check_len(len, 8, at)?;
        self.f64s(len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut adam = Adam::new(&[3, 1], 0.01);
        let mut a = vec![1.0, -2.0, 0.5];
        let mut b = vec![0.25];
        adam.step(&mut [&mut a, &mut b], &[&[0.1, 0.2, -0.3], &[1.0]])
            .unwrap();
        Checkpoint {
            config_text: "train.seed = 3\n".into(),
            epoch: 2,
            params: vec![a, b],
            adam,
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let bytes = c.encode();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(Checkpoint::decode(&bytes).unwrap(), c);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            Checkpoint::decode(&bad),
            Err(Error::Format { offset: 0, .. })
        ));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(
            Checkpoint::decode(&bad),
            Err(Error::Format { offset: 8, .. })
        ));
        for cut in [0, 5, 12, 20, bytes.len() - 1] {
            assert!(Checkpoint::decode(&bytes[..cut]).is_err());
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            Checkpoint::decode(&long),
            Err(Error::Format { offset, .. }) if offset == bytes.len()
        ));
    }

    #[test]
    fn huge_length_does_not_allocate() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(
            Checkpoint::decode(&bytes),
            Err(Error::Format { offset: 24, .. })
        ));
    }
}
