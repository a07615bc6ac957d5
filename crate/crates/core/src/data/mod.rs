//! Parallel corpora: loading, saving, statistics and error injection.

pub mod synth;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::ConfusionSet;

/// Aligned source (possibly misspelled) and gold target of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelSentence {
    source: Vec<char>,
    target: Vec<char>,
    error_positions: Vec<usize>,
}

impl ParallelSentence {
    pub fn new(source: Vec<char>, target: Vec<char>) -> Result<Self> {
        if source.is_empty() {
            return Err(Error::InvalidArgument("empty sentence".into()));
        }
        if source.len() != target.len() {
            return Err(Error::InvalidArgument(format!(
                "length mismatch: source has {} characters, target has {}",
                source.len(),
                target.len()
            )));
        }
        if source
            .iter()
            .chain(&target)
            .any(|c| matches!(c, '\t' | '\n' | '\r'))
        {
            return Err(Error::InvalidArgument(
                "sentence contains a tab or line break".into(),
            ));
        }
        let error_positions = source
            .iter()
            .zip(&target)
            .enumerate()
            .filter(|(_, (s, t))| s != t)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            source,
            target,
            error_positions,
        })
    }

    /// A sentence with no errors.
    pub fn clean(text: Vec<char>) -> Result<Self> {
        Self::new(text.clone(), text)
    }

    pub fn from_strs(source: &str, target: &str) -> Result<Self> {
        Self::new(source.chars().collect(), target.chars().collect())
    }

    pub fn source(&self) -> &[char] {
        &self.source
    }

    pub fn target(&self) -> &[char] {
        &self.target
    }

    pub fn error_positions(&self) -> &[usize] {
        &self.error_positions
    }

    pub fn has_errors(&self) -> bool {
        !self.error_positions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub avg_length: f64,
    pub error_count: usize,
}

pub fn corpus_stats(corpus: &[ParallelSentence]) -> CorpusStats {
    let total_len: usize = corpus.iter().map(ParallelSentence::len).sum();
    CorpusStats {
        sentence_count: corpus.len(),
        avg_length: if corpus.is_empty() {
            0.0
        } else {
            total_len as f64 / corpus.len() as f64
        },
        error_count: corpus.iter().map(|s| s.error_positions.len()).sum(),
    }
}

/// Parses two-column `source\ttarget` TSV text. Blank lines are skipped;
/// reported line numbers are 1-based and count blank lines.
pub fn parse_parallel(text: &str, path: &Path) -> Result<Vec<ParallelSentence>> {
    let mut corpus = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: PathBuf::from(path),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(err(format!(
                "expected 2 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let sentence =
            ParallelSentence::new(fields[0].chars().collect(), fields[1].chars().collect())
                .map_err(|e| err(e.to_string()))?;
        corpus.push(sentence);
    }
    Ok(corpus)
}

pub fn load_parallel(path: impl AsRef<Path>) -> Result<Vec<ParallelSentence>> {
    let path = path.as_ref();
    parse_parallel(&fs::read_to_string(path)?, path)
}

pub fn format_parallel(corpus: &[ParallelSentence]) -> String {
    let mut out = String::new();
    for s in corpus {
        let source: String = s.source.iter().collect();
        let target: String = s.target.iter().collect();
        let _ = writeln!(out, "{source}\t{target}");
    }
    out
}

pub fn save_parallel(path: impl AsRef<Path>, corpus: &[ParallelSentence]) -> Result<()> {
    fs::write(path, format_parallel(corpus))?;
    Ok(())
}

/// Reads one clean sentence per non-blank line. For TSV input the last column
/// is taken, so a parallel corpus yields its gold side.
pub fn load_text_lines(path: impl AsRef<Path>) -> Result<Vec<Vec<char>>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.rsplit('\t').next().unwrap_or(l).chars().collect())
        .collect())
}

/// Default substitution probability per eligible position: 1.41 errors per
/// sentence at an average length of 42.6 characters.
pub const DEFAULT_INJECTION_RATE: f64 = 0.033;

/// Corrupts `clean` by replacing each position that has confusion candidates,
/// independently with probability `rate`, by a uniformly drawn candidate.
pub fn inject_errors(
    clean: &[char],
    confusion: &ConfusionSet,
    rate: f64,
    seed: u64,
) -> Result<ParallelSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inject_with_rng(clean, confusion, rate, &mut rng)
}

pub fn inject_with_rng<R: Rng + ?Sized>(
    clean: &[char],
    confusion: &ConfusionSet,
    rate: f64,
    rng: &mut R,
) -> Result<ParallelSentence> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "injection rate {rate} outside [0, 1]"
        )));
    }
    let mut source = clean.to_vec();
    for slot in source.iter_mut() {
        let candidates = confusion.candidates(*slot);
        if candidates.is_empty() {
            continue;
        }
        if rng.gen::<f64>() < rate {
            *slot = candidates[rng.gen_range(0..candidates.len())];
        }
    }
    ParallelSentence::new(source, clean.to_vec())
}

/// Injects errors into every sentence. Sentence `i` draws from its own
/// stream of the generator seeded with `seed`, so output does not depend on
/// processing order.
pub fn inject_corpus(
    clean: &[Vec<char>],
    confusion: &ConfusionSet,
    rate: f64,
    seed: u64,
) -> Result<Vec<ParallelSentence>> {
    clean
        .iter()
        .enumerate()
        .map(|(i, sentence)| {
            let mut rng = sentence_rng(seed, i);
            inject_with_rng(sentence, confusion, rate, &mut rng)
        })
        .collect()
}

fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}
