//! A small synthetic language for desk-scale experiments.
//!
//! Characters are drawn from a CJK block with Zipf-skewed frequencies and
//! partitioned into confusion groups of 2–4 mutually similar characters.
//! Sentences are walks of a first-order Markov chain over a fixed word
//! lexicon, so a character's neighbors carry most of the information needed
//! to restore it.

use std::collections::HashSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vocab::ConfusionSet;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Number of ordinary characters (vocabulary size minus the two specials).
    pub alphabet_size: usize,
    pub lexicon_size: usize,
    pub min_word_len: usize,
    pub max_word_len: usize,
    /// Successor words per word in the Markov chain.
    pub successors: usize,
    /// Zipf exponent for character and word frequencies.
    pub zipf_exponent: f64,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 198,
            lexicon_size: 400,
            min_word_len: 1,
            max_word_len: 3,
            successors: 4,
            zipf_exponent: 1.0,
            min_sentence_len: 16,
            max_sentence_len: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticLanguage {
    alphabet: Vec<char>,
    confusion: ConfusionSet,
    words: Vec<Vec<char>>,
    start: WeightedIndex<f64>,
    transitions: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    min_len: usize,
    max_len: usize,
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (1..=n)
        .map(|rank| 1.0 / (rank as f64).powf(exponent))
        .collect()
}

impl SyntheticLanguage {
    pub fn generate(config: &SynthConfig) -> Result<Self> {
        let c = config;
        if c.alphabet_size < 2
            || c.lexicon_size == 0
            || c.successors == 0
            || c.min_word_len == 0
            || c.min_word_len > c.max_word_len
            || c.min_sentence_len == 0
            || c.min_sentence_len > c.max_sentence_len
        {
            return Err(Error::InvalidArgument(format!(
                "invalid synthetic language config: {c:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let alphabet: Vec<char> = (0..c.alphabet_size as u32)
            .map(|i| char::from_u32(0x4e00 + i).expect("CJK block is valid"))
            .collect();

        // Confusion groups over a shuffled alphabet, sizes 2..=4; a trailing
        // singleton joins the previous group.
        let mut order = alphabet.clone();
        order.shuffle(&mut rng);
        let mut groups: Vec<Vec<char>> = Vec::new();
        let mut rest = order.as_slice();
        while !rest.is_empty() {
            let take = rng.gen_range(2..=4).min(rest.len());
            groups.push(rest[..take].to_vec());
            rest = &rest[take..];
        }
        if groups.len() > 1 && groups.last().is_some_and(|g| g.len() == 1) {
            let single = groups.pop().unwrap();
            groups.last_mut().unwrap().extend(single);
        }
        let confusion = ConfusionSet::from_entries(groups.iter().flat_map(|g| {
            g.iter()
                .map(move |&k| (k, g.iter().copied().filter(|&x| x != k).collect()))
        }));

        // Character frequencies follow a Zipf law over a random ranking.
        let mut ranked = alphabet.clone();
        ranked.shuffle(&mut rng);
        let char_dist = WeightedIndex::new(zipf_weights(ranked.len(), c.zipf_exponent))
            .expect("positive weights");

        let mut seen = HashSet::new();
        let mut words = Vec::with_capacity(c.lexicon_size);
        // Every character appears in at least one word.
        for &ch in &alphabet {
            let len = rng.gen_range(c.min_word_len..=c.max_word_len);
            let at = rng.gen_range(0..len);
            let word: Vec<char> = (0..len)
                .map(|i| {
                    if i == at {
                        ch
                    } else {
                        ranked[char_dist.sample(&mut rng)]
                    }
                })
                .collect();
            if seen.insert(word.clone()) {
                words.push(word);
            }
        }
        let mut attempts = 0;
        while words.len() < c.lexicon_size.max(words.len()) && attempts < 100 * c.lexicon_size {
            attempts += 1;
            let len = rng.gen_range(c.min_word_len..=c.max_word_len);
            let word: Vec<char> = (0..len)
                .map(|_| ranked[char_dist.sample(&mut rng)])
                .collect();
            if seen.insert(word.clone()) {
                words.push(word);
            }
        }
        words.shuffle(&mut rng);

        let word_weights = zipf_weights(words.len(), c.zipf_exponent);
        let start = WeightedIndex::new(&word_weights).expect("positive weights");
        let succ_weights = zipf_weights(c.successors, c.zipf_exponent);
        let transitions = (0..words.len())
            .map(|_| {
                let next: Vec<usize> = (0..c.successors).map(|_| start.sample(&mut rng)).collect();
                (
                    next,
                    WeightedIndex::new(&succ_weights).expect("positive weights"),
                )
            })
            .collect();

        Ok(Self {
            alphabet,
            confusion,
            words,
            start,
            transitions,
            min_len: c.min_sentence_len,
            max_len: c.max_sentence_len,
        })
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn confusion(&self) -> &ConfusionSet {
        &self.confusion
    }

    pub fn words(&self) -> &[Vec<char>] {
        &self.words
    }

    pub fn sentence<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<char> {
        let target = rng.gen_range(self.min_len..=self.max_len);
        let mut out = Vec::with_capacity(target + 4);
        let mut word = self.start.sample(rng);
        loop {
            out.extend_from_slice(&self.words[word]);
            if out.len() >= target {
                break;
            }
            let (next, dist) = &self.transitions[word];
            word = next[dist.sample(rng)];
        }
        out.truncate(target);
        out
    }

    /// `count` clean sentences; sentence `i` uses stream `i` of `seed`.
    pub fn sentences(&self, count: usize, seed: u64) -> Vec<Vec<char>> {
        (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                self.sentence(&mut rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocabulary;

    #[test]
    fn every_character_has_confusables_and_appears_in_text() {
        let lang = SyntheticLanguage::generate(&SynthConfig::default()).unwrap();
        assert_eq!(lang.alphabet().len(), 198);
        for &c in lang.alphabet() {
            let cands = lang.confusion().candidates(c);
            assert!((1..=4).contains(&cands.len()), "{c}: {cands:?}");
            assert!(!cands.contains(&c));
            for &d in cands {
                assert!(lang.confusion().is_confusable(d, c), "groups are symmetric");
            }
        }
        let used: HashSet<char> = lang.words().iter().flatten().copied().collect();
        assert_eq!(used.len(), 198);
    }

    #[test]
    fn sentence_lengths_and_determinism() {
        let lang = SyntheticLanguage::generate(&SynthConfig::default()).unwrap();
        let a = lang.sentences(300, 4);
        assert_eq!(a, lang.sentences(300, 4));
        assert_ne!(a, lang.sentences(300, 5));
        assert!(a.iter().all(|s| (16..=32).contains(&s.len())));
        let vocab = Vocabulary::build(a.iter().map(|s| s.iter().copied())).unwrap();
        assert!(vocab.size() > 150);
    }

    #[test]
    fn rejects_bad_config() {
        let config = SynthConfig {
            min_sentence_len: 10,
            max_sentence_len: 5,
            ..Default::default()
        };
        assert!(SyntheticLanguage::generate(&config).is_err());
    }
}
