//! Binary trajectory records: a header (`BXTR`, format version u32, record count
//! u64) followed by fixed 42-byte little-endian records: entry face byte, exit
//! face byte, entry (2 × f64), exit (2 × f64), length (f64).

use std::io::{Read, Write};

use crate::density::io::{read_f64, read_u32, read_u64, read_u8};
use crate::error::{Error, Result};
use crate::geometry::FaceId;
use crate::montecarlo::sampler::{for_each_in_order, SampleConfig, SamplerStats, Trajectory};

pub const RECORD_MAGIC: &[u8; 4] = b"BXTR";
pub const RECORD_VERSION: u32 = 1;
pub const RECORD_BYTES: usize = 42;

pub fn write_record(w: &mut impl Write, t: &Trajectory) -> Result<()> {
    let mut buf = [0u8; RECORD_BYTES];
    buf[0] = t.entry_face.index() as u8;
    buf[1] = t.exit_face.index() as u8;
    for (m, v) in [t.entry[0], t.entry[1], t.exit[0], t.exit[1], t.length]
        .into_iter()
        .enumerate()
    {
        buf[2 + 8 * m..10 + 8 * m].copy_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Stream a whole run to `w` in sample-index order.
pub fn write_records(cfg: &SampleConfig, w: &mut impl Write) -> Result<SamplerStats> {
    w.write_all(RECORD_MAGIC)?;
    w.write_all(&RECORD_VERSION.to_le_bytes())?;
    w.write_all(&cfg.n_samples.to_le_bytes())?;
    for_each_in_order(cfg, 4096, |t| write_record(w, t))
}

fn face(byte: u8) -> Result<FaceId> {
    FaceId::from_index(byte as usize)
        .ok_or_else(|| Error::Format(format!("face byte {byte} out of range")))
}

pub fn read_records(r: &mut impl Read) -> Result<Vec<Trajectory>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RECORD_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != RECORD_VERSION {
        return Err(Error::Format(format!(
            "unsupported record version {version}"
        )));
    }
    let count = read_u64(r)?;
    let mut out = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let entry_face = face(read_u8(r)?)?;
        let exit_face = face(read_u8(r)?)?;
        let entry = [read_f64(r)?, read_f64(r)?];
        let exit = [read_f64(r)?, read_f64(r)?];
        let length = read_f64(r)?;
        out.push(Trajectory {
            entry_face,
            entry,
            exit_face,
            exit,
            length,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxDims;
    use crate::montecarlo::sampler::{generate, SamplerKind};

    #[test]
    fn round_trip() {
        let cfg = SampleConfig::new(BoxDims::cube(), SamplerKind::Baseline, 3, 500);
        let mut buf = Vec::new();
        write_records(&cfg, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 500 * RECORD_BYTES);
        let back = read_records(&mut buf.as_slice()).unwrap();
        assert_eq!(back, generate(&cfg).unwrap());
    }
}
