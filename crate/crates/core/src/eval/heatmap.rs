use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ParallelSentence;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::vocab::{CharId, ConfusionSet, CooccurrenceTable, Token, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharClass {
    Common,
    Confusing,
    Other,
}

impl CharClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CharClass::Common => "common",
            CharClass::Confusing => "confusing",
            CharClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub id: CharId,
    pub class: CharClass,
    pub prob: f64,
}

/// Probabilities at `position` for the given common and confusing
/// characters: the common block first, then the confusing block, each by
/// probability descending (ties by id).
pub fn heatmap_rows(
    params: &ModelParams,
    vocab: &Vocabulary,
    sentence: &ParallelSentence,
    position: usize,
    common: &[CharId],
    confusing: &[CharId],
) -> Result<Vec<HeatmapRow>> {
    if position >= sentence.len() {
        return Err(Error::InvalidArgument(format!(
            "position {position} outside sentence of length {}",
            sentence.len()
        )));
    }
    if common.is_empty() || confusing.is_empty() {
        return Err(Error::InvalidArgument(
            "character lists must be non-empty".into(),
        ));
    }
    let all: Vec<CharId> = common.iter().chain(confusing).copied().collect();
    for (i, a) in all.iter().enumerate() {
        if *a >= vocab.size() {
            return Err(Error::IdOutOfRange {
                id: *a,
                size: vocab.size(),
            });
        }
        if all[..i].contains(a) {
            return Err(Error::InvalidArgument(format!(
                "duplicate character id {a}"
            )));
        }
    }
    let gold = vocab.id_or_unk(sentence.target()[position]);
    if !confusing.contains(&gold) {
        return Err(Error::InvalidArgument(
            "the gold character must be among the confusing characters".into(),
        ));
    }
    let result = params.forward(&vocab.encode(sentence.source()))?;
    let probs = result.probs(position);
    let block = |ids: &[CharId], class| {
        let mut rows: Vec<HeatmapRow> = ids
            .iter()
            .map(|&id| HeatmapRow {
                id,
                class,
                prob: probs[id],
            })
            .collect();
        rows.sort_by(|a, b| b.prob.total_cmp(&a.prob).then(a.id.cmp(&b.id)));
        rows
    };
    let mut rows = block(common, CharClass::Common);
    rows.extend(block(confusing, CharClass::Confusing));
    Ok(rows)
}

fn display_token(vocab: &Vocabulary, id: CharId) -> String {
    let text = match vocab.token(id) {
        Some(Token::Char(c)) => c.to_string(),
        Some(Token::Pad) => "<pad>".into(),
        _ => "<unk>".into(),
    };
    if text.contains([',', '"']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text
    }
}

/// CSV with header `char,class,prob`.
pub fn format_heatmap_csv(vocab: &Vocabulary, rows: &[HeatmapRow]) -> String {
    let mut out = String::from("char,class,prob\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            display_token(vocab, r.id),
            r.class.as_str(),
            r.prob
        );
    }
    out
}

pub fn export_heatmap(
    params: &ModelParams,
    vocab: &Vocabulary,
    sentence: &ParallelSentence,
    position: usize,
    common: &[CharId],
    confusing: &[CharId],
    path: impl AsRef<Path>,
) -> Result<Vec<HeatmapRow>> {
    let rows = heatmap_rows(params, vocab, sentence, position, common, confusing)?;
    fs::write(path, format_heatmap_csv(vocab, &rows))?;
    Ok(rows)
}

/// Picks up to `n` confusing characters (the gold one first, then its
/// confusion list) and the `n` characters that co-occur most with the
/// position's source-side neighbours, excluding the confusing ones and specials.
pub fn suggest_heatmap_chars(
    vocab: &Vocabulary,
    table: &CooccurrenceTable,
    confusion: &ConfusionSet,
    sentence: &ParallelSentence,
    position: usize,
    n: usize,
) -> Result<(Vec<CharId>, Vec<CharId>)> {
    if position >= sentence.len() {
        return Err(Error::InvalidArgument(format!(
            "position {position} outside sentence"
        )));
    }
    let gold = sentence.target()[position];
    let gold_id = vocab.id_of(gold).ok_or(Error::UnknownCharacter(gold))?;
    let mut confusing = vec![gold_id];
    for &c in confusion.candidates(gold) {
        if confusing.len() == n {
            break;
        }
        if let Some(id) = vocab.id_of(c) {
            if !confusing.contains(&id) {
                confusing.push(id);
            }
        }
    }
    let src = sentence.source();
    let left = position.checked_sub(1).map(|l| vocab.id_or_unk(src[l]));
    let right = src.get(position + 1).map(|&r| vocab.id_or_unk(r));
    let mut exclude = confusing.clone();
    exclude.extend([crate::vocab::PAD, crate::vocab::UNK]);
    let common = table.top_context_chars(left, right, vocab.size(), n, &exclude);
    Ok((common, confusing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;

    fn setup() -> (ModelParams, Vocabulary, ParallelSentence) {
        let vocab = Vocabulary::build(["abcdefghijkl".chars()]).unwrap();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 3, 4, 1).unwrap(), 5);
        let s = ParallelSentence::from_strs("abxd", "abcd").unwrap();
        (params, vocab, s)
    }

    fn ids(vocab: &Vocabulary, s: &str) -> Vec<CharId> {
        s.chars().map(|c| vocab.id_of(c).unwrap()).collect()
    }

    #[test]
    fn rows_are_ordered_and_form_a_sub_distribution() {
        let (p, v, s) = setup();
        let rows = heatmap_rows(&p, &v, &s, 2, &ids(&v, "efghi"), &ids(&v, "cjkla")).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows[..5].iter().all(|r| r.class == CharClass::Common));
        assert!(rows[5..].iter().all(|r| r.class == CharClass::Confusing));
        for block in [&rows[..5], &rows[5..]] {
            assert!(block.windows(2).all(|w| w[0].prob >= w[1].prob));
        }
        let total: f64 = rows.iter().map(|r| r.prob).sum();
        assert!(total <= 1.0);
        let csv = format_heatmap_csv(&v, &rows);
        assert!(csv.starts_with("char,class,prob\n"));
        assert_eq!(csv.lines().count(), 11);
    }

    #[test]
    fn rejects_duplicates_and_missing_gold() {
        let (p, v, s) = setup();
        assert!(heatmap_rows(&p, &v, &s, 2, &ids(&v, "efghi"), &ids(&v, "cjkle")).is_err());
        assert!(heatmap_rows(&p, &v, &s, 2, &ids(&v, "efghi"), &ids(&v, "ajklb")).is_err());
        assert!(heatmap_rows(&p, &v, &s, 9, &ids(&v, "efghi"), &ids(&v, "cjkla")).is_err());
    }

    #[test]
    fn suggestion_includes_gold_and_skips_it_in_common() {
        let corpus = ["abcd", "abed", "abfd", "abfd", "xbcy"];
        let vocab = Vocabulary::build(corpus.iter().map(|s| s.chars())).unwrap();
        let table = CooccurrenceTable::count(&vocab, corpus.iter().map(|s| s.chars()));
        let confusion = ConfusionSet::from_entries([('c', vec!['e', 'x'])]);
        let s = ParallelSentence::from_strs("abed", "abcd").unwrap();
        let (common, confusing) =
            suggest_heatmap_chars(&vocab, &table, &confusion, &s, 2, 5).unwrap();
        assert_eq!(confusing, ids(&vocab, "cex"));
        // f follows b twice and precedes d twice; nothing else scores but excluded c, e.
        assert_eq!(common, ids(&vocab, "f"));
    }
}
