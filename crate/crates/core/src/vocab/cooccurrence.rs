use std::collections::HashMap;

use super::{CharId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `count(a, b, After)`: occurrences of `b` immediately after `a`.
    After,
    /// `count(a, b, Before)`: occurrences of `b` immediately before `a`.
    Before,
}

/// Directed adjacent-pair counts over a corpus, in vocabulary id space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CooccurrenceTable {
    after: HashMap<(CharId, CharId), u64>,
    corpus_size: u64,
}

impl CooccurrenceTable {
    /// Counts adjacent ordered pairs within each sentence. Characters outside
    /// `vocab` are counted as `UNK`.
    pub fn count<I, S>(vocab: &Vocabulary, corpus: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = char>,
    {
        let mut table = Self::default();
        for sentence in corpus {
            let mut prev: Option<CharId> = None;
            for c in sentence {
                let id = vocab.id_or_unk(c);
                table.corpus_size += 1;
                if let Some(p) = prev {
                    *table.after.entry((p, id)).or_insert(0) += 1;
                }
                prev = Some(id);
            }
        }
        table
    }

    pub fn count_of(&self, a: CharId, b: CharId, direction: Direction) -> u64 {
        let key = match direction {
            Direction::After => (a, b),
            Direction::Before => (b, a),
        };
        self.after.get(&key).copied().unwrap_or(0)
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    /// Every nonzero `(a, b, After)` count, in unspecified order.
    pub fn pairs(&self) -> impl Iterator<Item = ((CharId, CharId), u64)> + '_ {
        self.after.iter().map(|(k, v)| (*k, *v))
    }

    /// 99.5th percentile (nearest rank) of the nonzero pair counts, at least 1.
    pub fn default_threshold(&self) -> u64 {
        self.percentile_threshold(99.5)
    }

    pub fn percentile_threshold(&self, percentile: f64) -> u64 {
        let mut counts: Vec<u64> = self.after.values().copied().collect();
        if counts.is_empty() {
            return 1;
        }
        counts.sort_unstable();
        let rank = ((percentile / 100.0) * counts.len() as f64).ceil() as usize;
        counts[rank.clamp(1, counts.len()) - 1].max(1)
    }

    pub fn is_common(
        &self,
        c: CharId,
        left: Option<CharId>,
        right: Option<CharId>,
        threshold: u64,
    ) -> bool {
        is_common(c, left, right, self, threshold)
    }

    /// The `n` characters that co-occur most with the given context, scored by
    /// `count(left, c, After) + count(c, right, After)`. Ties go to the lower id;
    /// ids in `exclude` and zero scores are skipped.
    pub fn top_context_chars(
        &self,
        left: Option<CharId>,
        right: Option<CharId>,
        vocab_size: usize,
        n: usize,
        exclude: &[CharId],
    ) -> Vec<CharId> {
        let mut scored: Vec<(u64, CharId)> = (0..vocab_size)
            .filter(|id| !exclude.contains(id))
            .map(|c| {
                let l = left.map_or(0, |l| self.count_of(l, c, Direction::After));
                let r = right.map_or(0, |r| self.count_of(c, r, Direction::After));
                (l + r, c)
            })
            .filter(|(score, _)| *score > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(n).map(|(_, c)| c).collect()
    }
}

/// A character is common at a position when it follows the left neighbor, or
/// precedes the right neighbor, more than `threshold` times in the corpus.
/// Missing neighbors (sentence edges) never count.
pub fn is_common(
    c: CharId,
    left: Option<CharId>,
    right: Option<CharId>,
    table: &CooccurrenceTable,
    threshold: u64,
) -> bool {
    let before = left.map_or(0, |l| table.count_of(l, c, Direction::After));
    let after = right.map_or(0, |r| table.count_of(c, r, Direction::After));
    before > threshold || after > threshold
}
