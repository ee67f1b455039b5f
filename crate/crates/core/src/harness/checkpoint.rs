use std::path::Path;

use super::config::TrainConfig;
use super::HarnessError;
use crate::autodiff::ParamLayout;

const MAGIC: &[u8; 8] = b"PISNCKPT";
const VERSION: u32 = 1;

/// Flat parameter vector with its layout and the config that produced it.
///
/// Binary layout (little endian): magic, version `u32`, config length
/// `u64` and UTF-8 TOML, SHA-256 of the TOML, segment count `u32` and per
/// segment (name length `u32`, name, offset `u64`, length `u64`), value
/// count `u64` and the `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, layout: ParamLayout, values: Vec<f64>) -> Checkpoint {
        debug_assert_eq!(layout.len(), values.len());
        Checkpoint { config, layout, values }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let toml = self.config.to_toml();
        let mut b = Vec::with_capacity(64 + toml.len() + 8 * self.values.len());
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        b.extend_from_slice(&(toml.len() as u64).to_le_bytes());
        b.extend_from_slice(toml.as_bytes());
        b.extend_from_slice(&self.config.hash());
        b.extend_from_slice(&(self.layout.segments().len() as u32).to_le_bytes());
        for s in self.layout.segments() {
            b.extend_from_slice(&(s.name.len() as u32).to_le_bytes());
            b.extend_from_slice(s.name.as_bytes());
            b.extend_from_slice(&(s.offset as u64).to_le_bytes());
            b.extend_from_slice(&(s.len as u64).to_le_bytes());
        }
        b.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, HarnessError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(bad(&format!("unsupported checkpoint version {version}")));
        }
        let n = r.u64()? as usize;
        let toml = std::str::from_utf8(r.take(n)?).map_err(|_| bad("config is not UTF-8"))?;
        let hash = r.take(32)?;
        let config = TrainConfig::from_toml(toml)?;
        if config.hash()[..] != *hash {
            return Err(bad("config hash mismatch"));
        }
        let mut layout = ParamLayout::new();
        for _ in 0..r.u32()? {
            let n = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(n)?).map_err(|_| bad("segment name is not UTF-8"))?.to_string();
            let offset = r.u64()? as usize;
            let len = r.u64()? as usize;
            if offset != layout.len() {
                return Err(bad(&format!("segment {name} is not contiguous")));
            }
            layout.push(name, len);
        }
        let n = r.u64()? as usize;
        if n != layout.len() {
            return Err(bad(&format!("{n} values for a layout of {}", layout.len())));
        }
        let values = (0..n).map(|_| r.u64().map(f64::from_bits)).collect::<Result<Vec<_>, _>>()?;
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint { config, layout, values })
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Checkpoint, HarnessError> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn bad(msg: &str) -> HarnessError {
    HarnessError::Checkpoint(msg.to_string())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HarnessError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| bad("truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, HarnessError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, HarnessError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Architecture;

    #[test]
    fn exact_round_trip() {
        let config = TrainConfig::desk("fp1", None, Architecture::Pisn, 100, 10).unwrap();
        let mut layout = ParamLayout::new();
        layout.push("a", 2);
        layout.push("b", 1);
        let ck = Checkpoint::new(config, layout, vec![0.1, -1e-300, f64::MAX]);
        let bytes = ck.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut tampered = bytes.clone();
        tampered[30] ^= 1;
        assert!(Checkpoint::from_bytes(&tampered).is_err());
    }
}
