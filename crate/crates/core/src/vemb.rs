//! VEMB v1, the binary interchange format for sampled-frame embeddings.
//!
//! ```text
//! "VEMB" | u32 version | u32 rows | u32 dim | f64 input_fps | f64 sample_fps | u64 total_frames
//!        | rows x u64 sample index (1-based) | rows*dim x f32 row-major
//! ```
//!
//! Everything is little-endian. The payload is stored as `f32`, so a round
//! trip is exact only for values representable in single precision. Video id
//! and frame geometry are not part of the format; readers get a blank id and
//! unit geometry.

use std::io::{self, Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{EmbeddingSet, VideoMeta};

pub const MAGIC: [u8; 4] = *b"VEMB";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 8;

pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut sink: W) -> Result<usize> {
    let rows = set.len();
    let dim = set.dim();
    let rows32 = u32::try_from(rows).map_err(|_| Error::invalid("too many rows for VEMB"))?;
    let dim32 = u32::try_from(dim).map_err(|_| Error::invalid("dimension too large for VEMB"))?;

    // Validate the whole payload before emitting a single byte.
    let mut payload = Vec::with_capacity(rows * dim * 4);
    for ((row, col), &v) in set.matrix().indexed_iter() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
        payload.extend_from_slice(&f.to_le_bytes());
    }

    let mut buf = Vec::with_capacity(HEADER_LEN + rows * 8 + payload.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&rows32.to_le_bytes());
    buf.extend_from_slice(&dim32.to_le_bytes());
    buf.extend_from_slice(&set.meta().input_fps.to_le_bytes());
    buf.extend_from_slice(&set.sample_fps().to_le_bytes());
    buf.extend_from_slice(&(set.meta().total_frames as u64).to_le_bytes());
    for &t in set.sample_indexes() {
        buf.extend_from_slice(&(t as u64).to_le_bytes());
    }
    buf.extend_from_slice(&payload);
    sink.write_all(&buf)?;
    Ok(buf.len())
}

fn read_array<R: Read, const N: usize>(src: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    src.read_exact(&mut b).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(format!("stream ended inside {what}")),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_embeddings<R: Read>(mut source: R) -> Result<EmbeddingSet> {
    let magic: [u8; 4] = read_array(&mut source, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u32::from_le_bytes(read_array(&mut source, "version")?);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let rows = u32::from_le_bytes(read_array(&mut source, "header")?) as usize;
    let dim = u32::from_le_bytes(read_array(&mut source, "header")?) as usize;
    let input_fps = f64::from_le_bytes(read_array(&mut source, "header")?);
    let sample_fps = f64::from_le_bytes(read_array(&mut source, "header")?);
    let total = u64::from_le_bytes(read_array(&mut source, "header")?);

    let mut indexes = Vec::with_capacity(rows.min(1 << 20));
    for i in 0..rows {
        let t = u64::from_le_bytes(read_array(&mut source, "sample indexes")?);
        if let Some(&prev) = indexes.last() {
            if t <= prev as u64 {
                return Err(Error::NonIncreasingIndex {
                    position: i,
                    prev: prev as u64,
                    next: t,
                });
            }
        }
        indexes.push(t as usize);
    }

    let mut data = Vec::with_capacity((rows * dim).min(1 << 24));
    for _ in 0..rows * dim {
        let v = f32::from_le_bytes(read_array(&mut source, "embedding payload")?);
        data.push(v as f64);
    }
    let matrix =
        Array2::from_shape_vec((rows, dim), data).map_err(|e| Error::invalid(format!("payload shape: {e}")))?;
    let meta = VideoMeta::new(String::new(), total as usize, input_fps);
    EmbeddingSet::new(meta, indexes, sample_fps, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> EmbeddingSet {
        EmbeddingSet::new(VideoMeta::new("", 1, 30.0), vec![1], 4.0, array![[0.0, 0.0]]).unwrap()
    }

    #[test]
    fn single_row_layout() {
        let mut buf = Vec::new();
        let n = write_embeddings(&tiny(), &mut buf).unwrap();
        assert_eq!(n, HEADER_LEN + 8 + 8);
        assert_eq!(&buf[..4], b"VEMB");
        assert_eq!(read_embeddings(buf.as_slice()).unwrap(), tiny());
    }

    #[test]
    fn bad_magic() {
        let mut buf = Vec::new();
        write_embeddings(&tiny(), &mut buf).unwrap();
        buf[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_embeddings(buf.as_slice()), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn version_mismatch() {
        let mut buf = Vec::new();
        write_embeddings(&tiny(), &mut buf).unwrap();
        buf[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            read_embeddings(buf.as_slice()),
            Err(Error::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncated_payload() {
        let mut buf = Vec::new();
        write_embeddings(&tiny(), &mut buf).unwrap();
        buf.pop();
        assert!(matches!(read_embeddings(buf.as_slice()), Err(Error::Truncated(_))));
    }

    #[test]
    fn non_increasing_indexes() {
        let set = EmbeddingSet::new(VideoMeta::new("", 10, 30.0), vec![3, 5], 4.0, array![[1.0], [2.0]]).unwrap();
        let mut buf = Vec::new();
        write_embeddings(&set, &mut buf).unwrap();
        // Swap the two indexes to [5, 3].
        buf[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&5u64.to_le_bytes());
        buf[HEADER_LEN + 8..HEADER_LEN + 16].copy_from_slice(&3u64.to_le_bytes());
        let err = read_embeddings(buf.as_slice()).unwrap_err();
        assert!(matches!(err, Error::NonIncreasingIndex { prev: 5, next: 3, .. }));
    }

    #[test]
    fn write_rejects_values_outside_f32() {
        let set = EmbeddingSet::new(
            VideoMeta::new("", 2, 30.0),
            vec![1, 2],
            4.0,
            array![[1.0, 2.0], [1e300, 0.0]],
        )
        .unwrap();
        let err = write_embeddings(&set, Vec::new()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
    }
}
