//! Binary checkpoint format, version 1. All integers and floats are
//! little-endian:
//!
//! ```text
//! offset  size        field
//! 0       8           magic "ECOPOCKP"
//! 8       4   u32     format_version (= 1)
//! 12      4   u32     vocab_size
//! 16      4   u32     d_emb
//! 20      4   u32     hidden
//! 24      4   u32     window
//! 28      4   u32     lineage_len
//! 32      8·n u64     lineage seeds
//! ...     4·V u32     vocabulary tokens in id order; 0xFFFFFFFF = PAD,
//!                     0xFFFFFFFE = UNK, otherwise a Unicode scalar value
//! ...     8·P f64     parameters: embedding [V×d_emb], encoder weights
//!                     [hidden×(2w+1)·d_emb], encoder bias [hidden],
//!                     projection weights [V×hidden], projection bias [V],
//!                     each row-major
//! ```
//!
//! The file ends exactly after the last parameter.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vocab::{Token, Vocabulary};

use super::{ModelDims, ModelParams};

pub const MAGIC: &[u8; 8] = b"ECOPOCKP";
pub const FORMAT_VERSION: u32 = 1;

const PAD_CODE: u32 = 0xFFFF_FFFF;
const UNK_CODE: u32 = 0xFFFF_FFFE;

pub fn encode_checkpoint(params: &ModelParams, vocab: &Vocabulary) -> Result<Vec<u8>> {
    let dims = params.dims();
    if dims.vocab_size != vocab.size() {
        return Err(Error::DimensionMismatch(format!(
            "model vocabulary {} but vocabulary has {} entries",
            dims.vocab_size,
            vocab.size()
        )));
    }
    let mut out = Vec::with_capacity(32 + 4 * vocab.size() + 8 * dims.param_count());
    out.extend_from_slice(MAGIC);
    for v in [
        FORMAT_VERSION,
        dims.vocab_size as u32,
        dims.d_emb as u32,
        dims.hidden as u32,
        dims.window as u32,
        params.lineage().len() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for seed in params.lineage() {
        out.extend_from_slice(&seed.to_le_bytes());
    }
    for token in vocab.tokens() {
        let code = match token {
            Token::Pad => PAD_CODE,
            Token::Unk => UNK_CODE,
            Token::Char(c) => *c as u32,
        };
        out.extend_from_slice(&code.to_le_bytes());
    }
    for x in params.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::TruncatedCheckpoint)?;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or(Error::TruncatedCheckpoint)?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelParams, Vocabulary)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let vocab_size = r.u32()? as usize;
    let d_emb = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let window = r.u32()? as usize;
    let dims = ModelDims::new(vocab_size, d_emb, hidden, window)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    let lineage_len = r.u32()? as usize;
    if lineage_len.saturating_mul(8) > r.remaining() {
        return Err(Error::TruncatedCheckpoint);
    }
    let lineage = (0..lineage_len)
        .map(|_| r.u64())
        .collect::<Result<Vec<_>>>()?;

    let param_bytes = dims.param_count().checked_mul(8);
    let needed = vocab_size
        .checked_mul(4)
        .zip(param_bytes)
        .and_then(|(a, b)| a.checked_add(b))
        .ok_or_else(|| Error::DimensionMismatch("dimensions overflow".into()))?;
    if r.remaining() < needed {
        return Err(Error::TruncatedCheckpoint);
    }
    if r.remaining() > needed {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after parameters",
            r.remaining() - needed
        )));
    }

    let mut tokens = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let code = r.u32()?;
        tokens.push(match code {
            PAD_CODE => Token::Pad,
            UNK_CODE => Token::Unk,
            c => Token::Char(char::from_u32(c).ok_or_else(|| {
                Error::InvalidVocabulary(format!("{c:#x} is not a Unicode scalar value"))
            })?),
        });
    }
    let vocab = Vocabulary::from_tokens(tokens)?;
    let data = r
        .take(needed - 4 * vocab_size)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((ModelParams::from_raw(dims, data, lineage)?, vocab))
}

pub fn save_checkpoint(
    params: &ModelParams,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, encode_checkpoint(params, vocab)?)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, Vocabulary)> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (ModelParams, Vocabulary) {
        let vocab = Vocabulary::build(["a".chars()]).unwrap();
        let dims = ModelDims::new(3, 1, 1, 0).unwrap();
        // 3 embedding + 1 encoder weight + 1 encoder bias + 3 projection + 3 bias.
        let data = vec![
            0.5, -0.25, 1.0, 2.0, -1.5, 0.125, 0.75, -0.5, 0.0, 1.0, -2.0,
        ];
        (ModelParams::from_raw(dims, data, vec![42]).unwrap(), vocab)
    }

    fn hand_assembled() -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"ECOPOCKP");
        for v in [1u32, 3, 1, 1, 0, 1] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&42u64.to_le_bytes());
        for v in [0xFFFF_FFFFu32, 0xFFFF_FFFE, 'a' as u32] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for x in [
            0.5f64, -0.25, 1.0, 2.0, -1.5, 0.125, 0.75, -0.5, 0.0, 1.0, -2.0,
        ] {
            b.extend_from_slice(&x.to_le_bytes());
        }
        b
    }

    #[test]
    fn matches_golden_file() {
        let (p, v) = tiny();
        let bytes = encode_checkpoint(&p, &v).unwrap();
        assert_eq!(bytes, hand_assembled());
        assert_eq!(
            bytes.as_slice(),
            include_bytes!("../../tests/data/golden.ckpt")
        );
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let vocab = Vocabulary::build(["hello world".chars()]).unwrap();
        let mut p = ModelParams::init(ModelDims::new(vocab.size(), 3, 4, 2).unwrap(), 9);
        p.push_lineage(10);
        let (q, w) = decode_checkpoint(&encode_checkpoint(&p, &vocab).unwrap()).unwrap();
        assert_eq!(w, vocab);
        assert_eq!(q.dims(), p.dims());
        assert_eq!(q.lineage(), &[9, 10]);
        let bits = |m: &ModelParams| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&q), bits(&p));
    }

    #[test]
    fn truncated_file_is_detected() {
        let bytes = hand_assembled();
        for cut in [10, 30, 40, 52, bytes.len() - 1] {
            let err = decode_checkpoint(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, Error::TruncatedCheckpoint),
                "cut {cut}: {err}"
            );
        }
        assert_eq!(
            Error::TruncatedCheckpoint.to_string(),
            "truncated checkpoint"
        );
    }

    #[test]
    fn distinct_error_kinds() {
        let mut bytes = hand_assembled();
        bytes[8] = 2;
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(Error::VersionMismatch {
                found: 2,
                expected: 1
            })
        ));

        let mut bytes = hand_assembled();
        bytes.push(0);
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(Error::DimensionMismatch(_))
        ));

        let mut bytes = hand_assembled();
        bytes[16..20].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(Error::DimensionMismatch(_))
        ));

        let mut bytes = hand_assembled();
        bytes[0] = b'X';
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn vocabulary_size_must_match_model() {
        let (p, _) = tiny();
        let other = Vocabulary::build(["ab".chars()]).unwrap();
        assert!(matches!(
            encode_checkpoint(&p, &other),
            Err(Error::DimensionMismatch(_))
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip(
            text in "[a-z\u{4e00}-\u{4e20}]{1,12}",
            d_emb in 1usize..4,
            hidden in 1usize..4,
            window in 0usize..3,
            seed: u64,
            lineage in prop::collection::vec(any::<u64>(), 0..4),
        ) {
            let vocab = Vocabulary::build([text.chars()]).unwrap();
            let dims = ModelDims::new(vocab.size(), d_emb, hidden, window).unwrap();
            let init = ModelParams::init(dims, seed);
            let params = ModelParams::from_raw(dims, init.as_slice().to_vec(), lineage).unwrap();
            let bytes = encode_checkpoint(&params, &vocab).unwrap();
            let (p, v) = decode_checkpoint(&bytes).unwrap();
            prop_assert_eq!(p, params);
            prop_assert_eq!(v, vocab);
        }
    }
}
