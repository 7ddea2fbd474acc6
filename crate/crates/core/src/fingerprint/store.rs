//! Binary index file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SWFP"  u32 version  u32 track count  (u32 track id, u32 frames) * tracks
//! u64 hash count  (u32 hash, u32 track id, u32 offset frame) * hashes
//! ```
//!
//! Entries are sorted by hash, then track, then offset.

use std::io::{Read, Write};

use super::{FingerprintError, FingerprintIndex, Posting};

pub const MAGIC: &[u8; 4] = b"SWFP";
pub const VERSION: u32 = 1;

pub fn write_index(index: &FingerprintIndex, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(index.tracks.len() as u32).to_le_bytes())?;
    for &(id, frames) in &index.tracks {
        out.write_all(&id.to_le_bytes())?;
        out.write_all(&frames.to_le_bytes())?;
    }
    let entries = index.entries();
    out.write_all(&(entries.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(entries.len() * 12);
    for (h, p) in entries {
        buf.extend_from_slice(&h.to_le_bytes());
        buf.extend_from_slice(&p.track_id.to_le_bytes());
        buf.extend_from_slice(&p.offset_frame.to_le_bytes());
    }
    out.write_all(&buf)
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

pub fn read_index(input: &mut impl Read) -> Result<FingerprintIndex, FingerprintError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let bad = |m: &str| FingerprintError::BadIndex(m.to_string());
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(bad("missing SWFP header"));
    }
    if u32_at(&bytes, 4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let n_tracks = u32_at(&bytes, 8) as usize;
    let mut at = 12;
    if bytes.len() < at + n_tracks * 8 + 8 {
        return Err(bad("truncated track table"));
    }
    let mut index = FingerprintIndex::default();
    for _ in 0..n_tracks {
        index.tracks.push((u32_at(&bytes, at), u32_at(&bytes, at + 4)));
        at += 8;
    }
    let n_hashes = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize;
    at += 8;
    if bytes.len() != at + n_hashes * 12 {
        return Err(bad("hash table size does not match count"));
    }
    let mut previous = None;
    for _ in 0..n_hashes {
        let h = u32_at(&bytes, at);
        let p = Posting {
            track_id: u32_at(&bytes, at + 4),
            offset_frame: u32_at(&bytes, at + 8),
        };
        at += 12;
        if previous.is_some_and(|prev| prev > (h, p)) {
            return Err(bad("entries not sorted"));
        }
        previous = Some((h, p));
        let frames = index
            .tracks
            .iter()
            .find(|t| t.0 == p.track_id)
            .ok_or_else(|| bad("entry for unknown track"))?
            .1;
        if p.offset_frame >= frames {
            return Err(bad("offset beyond track length"));
        }
        index.table.entry(h).or_default().push(p);
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let mut index = FingerprintIndex::default();
        index.tracks = vec![(3, 100), (1, 50)];
        index.table.insert(7, vec![Posting { track_id: 1, offset_frame: 4 }, Posting { track_id: 3, offset_frame: 99 }]);
        index.table.insert(2, vec![Posting { track_id: 3, offset_frame: 0 }]);
        let mut bytes = Vec::new();
        write_index(&index, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"SWFP");
        let back = read_index(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.entries(), index.entries());
        assert_eq!(back.tracks, index.tracks);

        let mut truncated = bytes.clone();
        truncated.pop();
        assert!(read_index(&mut truncated.as_slice()).is_err());
        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(matches!(read_index(&mut bad_magic.as_slice()), Err(FingerprintError::BadIndex(_))));
    }
}
