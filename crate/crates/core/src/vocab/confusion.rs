use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::Vocabulary;

/// How to treat confusion entries that mention characters outside the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

/// Per-character lists of phonologically or visually similar characters.
///
/// File format: one entry per line, `<char>\t<c1><c2>...`; `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionSet {
    entries: BTreeMap<char, Vec<char>>,
}

impl ConfusionSet {
    /// Builds a set from in-memory entries. Self references and duplicate
    /// candidates are removed; candidate order is otherwise preserved.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (char, Vec<char>)>,
    {
        let mut set = Self::default();
        for (key, candidates) in entries {
            let list = set.entries.entry(key).or_default();
            for c in candidates {
                if c != key && !list.contains(&c) {
                    list.push(c);
                }
            }
        }
        set.entries.retain(|_, v| !v.is_empty());
        set
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_from(text, Path::new("<input>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_from(&fs::read_to_string(path)?, path)
    }

    fn parse_from(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: PathBuf::from(path),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once('\t')
                .ok_or_else(|| err(line_no, "expected `<char>\\t<candidates>`".into()))?;
            let mut key_chars = key.chars();
            let key = match (key_chars.next(), key_chars.next()) {
                (Some(k), None) => k,
                _ => {
                    return Err(err(
                        line_no,
                        format!("key {key:?} is not a single character"),
                    ))
                }
            };
            let mut candidates: Vec<char> = Vec::new();
            for c in rest.chars() {
                if c == key {
                    return Err(err(line_no, format!("{key:?} lists itself as a candidate")));
                }
                if !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
            if entries.insert(key, candidates).is_some() {
                return Err(err(line_no, format!("duplicate entry for {key:?}")));
            }
        }
        entries.retain(|_, v: &mut Vec<char>| !v.is_empty());
        Ok(Self { entries })
    }

    /// Checks every key and candidate against `vocab`. Strict mode fails on the
    /// first unknown character; lenient mode drops it and reports it in the
    /// returned list.
    pub fn restrict_to(&self, vocab: &Vocabulary, mode: Strictness) -> Result<(Self, Vec<char>)> {
        let mut dropped = Vec::new();
        let mut entries = BTreeMap::new();
        for (&key, candidates) in &self.entries {
            if vocab.id_of(key).is_none() {
                if mode == Strictness::Strict {
                    return Err(Error::UnknownCharacter(key));
                }
                dropped.push(key);
                continue;
            }
            let mut kept = Vec::with_capacity(candidates.len());
            for &c in candidates {
                if vocab.id_of(c).is_some() {
                    kept.push(c);
                } else if mode == Strictness::Strict {
                    return Err(Error::UnknownCharacter(c));
                } else {
                    dropped.push(c);
                }
            }
            if !kept.is_empty() {
                entries.insert(key, kept);
            }
        }
        dropped.sort_unstable();
        dropped.dedup();
        Ok((Self { entries }, dropped))
    }

    pub fn candidates(&self, c: char) -> &[char] {
        self.entries.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_confusable(&self, gold: char, c: char) -> bool {
        self.candidates(gold).contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &[char])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, candidates) in &self.entries {
            out.push(*key);
            out.push('\t');
            out.extend(candidates.iter());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let set = ConfusionSet::parse("# header\n素\t诉速塑\n\n解\t懈\n").unwrap();
        assert_eq!(set.candidates('素'), &['诉', '速', '塑']);
        assert_eq!(set.candidates('解'), &['懈']);
        assert!(set.candidates('x').is_empty());
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn rejects_self_reference_and_malformed_lines() {
        let err = ConfusionSet::parse("a\tba\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ConfusionSet::parse("a\tb\nab c\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(ConfusionSet::parse("ab\tc\n").is_err());
        assert!(ConfusionSet::parse("a\tb\na\tc\n").is_err());
    }

    #[test]
    fn strict_and_lenient_vocabulary_check() {
        let vocab = Vocabulary::build(["abc".chars()]).unwrap();
        let set = ConfusionSet::parse("a\tbz\nq\tc\n").unwrap();
        assert!(matches!(
            set.restrict_to(&vocab, Strictness::Strict),
            Err(Error::UnknownCharacter(_))
        ));
        let (kept, dropped) = set.restrict_to(&vocab, Strictness::Lenient).unwrap();
        assert_eq!(kept.candidates('a'), &['b']);
        assert!(kept.candidates('q').is_empty());
        assert_eq!(dropped, vec!['q', 'z']);
    }

    #[test]
    fn text_round_trip() {
        let set = ConfusionSet::from_entries([('a', vec!['b', 'a', 'c', 'b']), ('d', vec!['e'])]);
        assert_eq!(set.candidates('a'), &['b', 'c']);
        assert_eq!(ConfusionSet::parse(&set.to_text()).unwrap(), set);
    }
}
