//! Character inventory, confusion sets and corpus adjacency statistics.

mod confusion;
mod cooccurrence;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use confusion::{ConfusionSet, Strictness};
pub use cooccurrence::{is_common, CooccurrenceTable, Direction};

/// Dense 0-based index into a [`Vocabulary`].
pub type CharId = usize;

/// Id reserved for padding outside sentence bounds.
pub const PAD: CharId = 0;
/// Id every out-of-vocabulary character maps to.
pub const UNK: CharId = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    Pad,
    Unk,
    Char(char),
}

/// Ordered character inventory. Ids `0` and `1` are always `PAD` and `UNK`;
/// ordinary characters follow in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    index: HashMap<char, CharId>,
}

impl Vocabulary {
    /// Builds a vocabulary from every distinct character in `corpus`.
    pub fn build<I, S>(corpus: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = char>,
    {
        let mut vocab = Self::specials_only();
        for sentence in corpus {
            for c in sentence {
                vocab.insert(c);
            }
        }
        if vocab.size() == 2 {
            return Err(Error::EmptyCorpus);
        }
        Ok(vocab)
    }

    /// Rebuilds a vocabulary from a full token list, as stored in checkpoints.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD] != Token::Pad || tokens[UNK] != Token::Unk {
            return Err(Error::InvalidVocabulary(
                "ids 0 and 1 must be PAD and UNK".into(),
            ));
        }
        let mut vocab = Self::specials_only();
        for token in &tokens[2..] {
            match *token {
                Token::Char(c) if !vocab.index.contains_key(&c) => vocab.insert(c),
                Token::Char(c) => {
                    return Err(Error::InvalidVocabulary(format!(
                        "duplicate character {c:?}"
                    )))
                }
                _ => return Err(Error::InvalidVocabulary("special token past id 1".into())),
            }
        }
        Ok(vocab)
    }

    fn specials_only() -> Self {
        Self {
            tokens: vec![Token::Pad, Token::Unk],
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, c: char) {
        if !self.index.contains_key(&c) {
            self.index.insert(c, self.tokens.len());
            self.tokens.push(Token::Char(c));
        }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, id: CharId) -> Option<Token> {
        self.tokens.get(id).copied()
    }

    pub fn id_of(&self, c: char) -> Option<CharId> {
        self.index.get(&c).copied()
    }

    /// Like [`Vocabulary::id_of`] but maps unknown characters to `UNK`.
    pub fn id_or_unk(&self, c: char) -> CharId {
        self.id_of(c).unwrap_or(UNK)
    }

    /// The character behind `id`, or `None` for specials and out-of-range ids.
    pub fn char_of(&self, id: CharId) -> Option<char> {
        match self.tokens.get(id) {
            Some(Token::Char(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn is_special(&self, id: CharId) -> bool {
        id == PAD || id == UNK
    }

    pub fn encode(&self, chars: &[char]) -> Vec<CharId> {
        chars.iter().map(|&c| self.id_or_unk(c)).collect()
    }

    /// Ordinary characters in id order.
    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.tokens.iter().filter_map(|t| match t {
            Token::Char(c) => Some(*c),
            _ => None,
        })
    }
}
