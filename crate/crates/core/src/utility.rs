//! Sentence-level utility functions u(reference, hypothesis) -> [0, 1].
//!
//! All metrics share the empty-side convention: if both sides are empty the
//! score is 1, if exactly one side is empty it is 0. Tokenisation is plain
//! whitespace splitting with no case folding.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// A sentence in both token and character form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenizedSentence {
    tokens: Vec<String>,
    chars: String,
}

impl TokenizedSentence {
    /// Whitespace-split a raw string. The canonical character form is the
    /// tokens re-joined by single spaces.
    pub fn from_text(text: &str) -> Self {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let chars = tokens.join(" ");
        TokenizedSentence { tokens, chars }
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let chars = tokens.join(" ");
        TokenizedSentence { tokens, chars }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn chars(&self) -> &str {
        &self.chars
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The utility functions understood by the toolkit.
///
/// Ids accepted by configs: `exact`, `uf`, `sbf`, `bleu`, `chrf`, with
/// parameterised variants like `chrf:n=6,beta=2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Utility {
    ExactMatch,
    UnigramF1,
    SkipBigramF1,
    SentenceBleu,
    CharNgramF { max_n: usize, beta: f64 },
}

impl Utility {
    pub fn parse(id: &str) -> Result<Utility> {
        let (name, params) = match id.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (id, None),
        };
        match name {
            "exact" => Ok(Utility::ExactMatch),
            "uf" => Ok(Utility::UnigramF1),
            "sbf" => Ok(Utility::SkipBigramF1),
            "bleu" => Ok(Utility::SentenceBleu),
            "chrf" => {
                let mut max_n = 6usize;
                let mut beta = 2.0f64;
                if let Some(params) = params {
                    for kv in params.split(',') {
                        let (key, value) = kv.split_once('=').ok_or_else(|| {
                            Error::Parameter(format!("bad metric parameter {kv:?} in {id:?}"))
                        })?;
                        match key {
                            "n" => {
                                max_n = value.parse().map_err(|_| {
                                    Error::Parameter(format!("bad n in {id:?}"))
                                })?
                            }
                            "beta" => {
                                beta = value.parse().map_err(|_| {
                                    Error::Parameter(format!("bad beta in {id:?}"))
                                })?
                            }
                            _ => {
                                return Err(Error::Parameter(format!(
                                    "unknown metric parameter {key:?} in {id:?}"
                                )))
                            }
                        }
                    }
                }
                if max_n == 0 || beta <= 0.0 {
                    return Err(Error::Parameter(format!(
                        "chrf needs n >= 1 and beta > 0, got {id:?}"
                    )));
                }
                Ok(Utility::CharNgramF { max_n, beta })
            }
            _ => Err(Error::Parameter(format!("unknown utility id {id:?}"))),
        }
    }

    /// Stable name used for call counting and reports.
    pub fn id(&self) -> String {
        match self {
            Utility::ExactMatch => "exact".into(),
            Utility::UnigramF1 => "uf".into(),
            Utility::SkipBigramF1 => "sbf".into(),
            Utility::SentenceBleu => "bleu".into(),
            Utility::CharNgramF { max_n, beta } => format!("chrf:n={max_n},beta={beta}"),
        }
    }

    /// Evaluate u(reference, hypothesis). Pure; always in [0, 1].
    pub fn eval(&self, reference: &TokenizedSentence, hypothesis: &TokenizedSentence) -> f64 {
        match self {
            Utility::ExactMatch => exact_match(reference, hypothesis),
            Utility::UnigramF1 => unigram_f1(reference, hypothesis),
            Utility::SkipBigramF1 => skip_bigram_f1(reference, hypothesis),
            Utility::SentenceBleu => sentence_bleu(reference, hypothesis),
            Utility::CharNgramF { max_n, beta } => {
                char_ngram_f(reference, hypothesis, *max_n, *beta)
            }
        }
    }
}

pub fn exact_match(y: &TokenizedSentence, h: &TokenizedSentence) -> f64 {
    if y.tokens == h.tokens {
        1.0
    } else {
        0.0
    }
}

fn counts<T: Eq + Hash + Clone>(items: impl Iterator<Item = T>) -> HashMap<T, usize> {
    let mut map = HashMap::new();
    for item in items {
        *map.entry(item).or_insert(0) += 1;
    }
    map
}

fn clipped_overlap<T: Eq + Hash>(a: &HashMap<T, usize>, b: &HashMap<T, usize>) -> usize {
    a.iter()
        .map(|(k, &ca)| ca.min(*b.get(k).unwrap_or(&0)))
        .sum()
}

fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Clipped-count unigram F1.
pub fn unigram_f1(y: &TokenizedSentence, h: &TokenizedSentence) -> f64 {
    match (y.is_empty(), h.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let cy = counts(y.tokens.iter());
    let ch = counts(h.tokens.iter());
    let overlap = clipped_overlap(&ch, &cy) as f64;
    f_beta(overlap / h.tokens.len() as f64, overlap / y.tokens.len() as f64, 1.0)
}

fn skip_bigrams(tokens: &[String]) -> HashMap<(&str, &str), usize> {
    let mut map = HashMap::new();
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            *map.entry((tokens[i].as_str(), tokens[j].as_str()))
                .or_insert(0) += 1;
        }
    }
    map
}

/// Clipped-count F1 over ordered, not necessarily adjacent token pairs.
/// Sides shorter than two tokens fall back to exact match.
pub fn skip_bigram_f1(y: &TokenizedSentence, h: &TokenizedSentence) -> f64 {
    if y.tokens.len() < 2 || h.tokens.len() < 2 {
        return exact_match(y, h);
    }
    let py = skip_bigrams(&y.tokens);
    let ph = skip_bigrams(&h.tokens);
    let overlap = clipped_overlap(&ph, &py) as f64;
    let ny = (y.tokens.len() * (y.tokens.len() - 1) / 2) as f64;
    let nh = (h.tokens.len() * (h.tokens.len() - 1) / 2) as f64;
    f_beta(overlap / nh, overlap / ny, 1.0)
}

/// Floor value substituted for zero (or undefined) modified n-gram
/// precisions in sentence BLEU.
pub const BLEU_FLOOR: f64 = 0.1;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut map = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *map.entry(window).or_insert(0) += 1;
        }
    }
    map
}

/// Smoothed sentence BLEU in [0, 1]: geometric mean of modified n-gram
/// precisions for n = 1..4 times the brevity penalty. A zero match count is
/// floored at `BLEU_FLOOR / total`; an order with no hypothesis n-grams at
/// all contributes `BLEU_FLOOR`.
pub fn sentence_bleu(y: &TokenizedSentence, h: &TokenizedSentence) -> f64 {
    match (y.is_empty(), h.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cy = ngram_counts(&y.tokens, n);
        let ch = ngram_counts(&h.tokens, n);
        let total = h.tokens.len().saturating_sub(n - 1);
        let p = if total == 0 {
            BLEU_FLOOR
        } else {
            let matches = clipped_overlap(&ch, &cy);
            if matches == 0 {
                BLEU_FLOOR / total as f64
            } else {
                matches as f64 / total as f64
            }
        };
        log_sum += p.ln();
    }
    let bp = (1.0 - y.tokens.len() as f64 / h.tokens.len() as f64)
        .exp()
        .min(1.0);
    bp * (log_sum / 4.0).exp()
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut map = HashMap::new();
    if chars.len() >= n {
        for window in chars.windows(n) {
            *map.entry(window).or_insert(0) += 1;
        }
    }
    map
}

/// ChrF-style character n-gram F score: arithmetic mean over n = 1..max_n of
/// F_beta over clipped character n-gram counts, whitespace excluded. Orders
/// where neither side has any n-grams are skipped; orders where exactly one
/// side is empty contribute 0.
pub fn char_ngram_f(y: &TokenizedSentence, h: &TokenizedSentence, max_n: usize, beta: f64) -> f64 {
    let ychars: Vec<char> = y.chars.chars().filter(|c| !c.is_whitespace()).collect();
    let hchars: Vec<char> = h.chars.chars().filter(|c| !c.is_whitespace()).collect();
    match (ychars.is_empty(), hchars.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n {
        let ty = ychars.len().saturating_sub(n - 1);
        let th = hchars.len().saturating_sub(n - 1);
        if ty == 0 && th == 0 {
            continue;
        }
        orders += 1;
        if ty == 0 || th == 0 {
            continue; // F_n = 0
        }
        let cy = char_ngrams(&ychars, n);
        let ch = char_ngrams(&hchars, n);
        let overlap = clipped_overlap(&ch, &cy) as f64;
        sum += f_beta(overlap / th as f64, overlap / ty as f64, beta);
    }
    if orders == 0 {
        1.0
    } else {
        sum / orders as f64
    }
}

/// Corpus-level aggregate of a metric over (reference, hypothesis) pairs.
///
/// BLEU pools n-gram match/total counts and sentence lengths before taking
/// the geometric mean and brevity penalty. F-style metrics micro-average:
/// overlap and totals are pooled across pairs and the F score is computed
/// once on the pooled counts. Exact match aggregates to the match rate.
pub fn corpus_aggregate(
    utility: &Utility,
    pairs: &[(TokenizedSentence, TokenizedSentence)],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Parameter(
            "corpus_aggregate needs a nonempty pair list".into(),
        ));
    }
    let score = match utility {
        Utility::ExactMatch => {
            pairs.iter().map(|(y, h)| exact_match(y, h)).sum::<f64>() / pairs.len() as f64
        }
        Utility::UnigramF1 => {
            let mut overlap = 0usize;
            let mut ny = 0usize;
            let mut nh = 0usize;
            for (y, h) in pairs {
                let cy = counts(y.tokens.iter());
                let ch = counts(h.tokens.iter());
                overlap += clipped_overlap(&ch, &cy);
                ny += y.tokens.len();
                nh += h.tokens.len();
            }
            pooled_f1(overlap, nh, ny)
        }
        Utility::SkipBigramF1 => {
            let mut overlap = 0usize;
            let mut ny = 0usize;
            let mut nh = 0usize;
            for (y, h) in pairs {
                let py = skip_bigrams(&y.tokens);
                let ph = skip_bigrams(&h.tokens);
                overlap += clipped_overlap(&ph, &py);
                ny += py.values().sum::<usize>();
                nh += ph.values().sum::<usize>();
            }
            pooled_f1(overlap, nh, ny)
        }
        Utility::SentenceBleu => {
            let mut matches = [0usize; 4];
            let mut totals = [0usize; 4];
            let mut ylen = 0usize;
            let mut hlen = 0usize;
            for (y, h) in pairs {
                ylen += y.tokens.len();
                hlen += h.tokens.len();
                for n in 1..=4 {
                    let cy = ngram_counts(&y.tokens, n);
                    let ch = ngram_counts(&h.tokens, n);
                    matches[n - 1] += clipped_overlap(&ch, &cy);
                    totals[n - 1] += h.tokens.len().saturating_sub(n - 1);
                }
            }
            if hlen == 0 {
                return Ok(if ylen == 0 { 1.0 } else { 0.0 });
            }
            // The zero-match floor scales with the pool size so duplicating
            // the pair list leaves the score unchanged; with one pair it
            // coincides with the sentence-level floor.
            let mut log_sum = 0.0;
            for n in 0..4 {
                let p = if totals[n] == 0 {
                    BLEU_FLOOR
                } else if matches[n] == 0 {
                    BLEU_FLOOR * pairs.len() as f64 / totals[n] as f64
                } else {
                    matches[n] as f64 / totals[n] as f64
                };
                log_sum += p.ln();
            }
            let bp = (1.0 - ylen as f64 / hlen as f64).exp().min(1.0);
            bp * (log_sum / 4.0).exp()
        }
        Utility::CharNgramF { max_n, beta } => {
            let mut sum = 0.0;
            let mut orders = 0usize;
            for n in 1..=*max_n {
                let mut overlap = 0usize;
                let mut ty = 0usize;
                let mut th = 0usize;
                for (y, h) in pairs {
                    let ychars: Vec<char> =
                        y.chars.chars().filter(|c| !c.is_whitespace()).collect();
                    let hchars: Vec<char> =
                        h.chars.chars().filter(|c| !c.is_whitespace()).collect();
                    let cy = char_ngrams(&ychars, n);
                    let ch = char_ngrams(&hchars, n);
                    overlap += clipped_overlap(&ch, &cy);
                    ty += ychars.len().saturating_sub(n - 1);
                    th += hchars.len().saturating_sub(n - 1);
                }
                if ty == 0 && th == 0 {
                    continue;
                }
                orders += 1;
                if ty == 0 || th == 0 {
                    continue;
                }
                sum += f_beta(
                    overlap as f64 / th as f64,
                    overlap as f64 / ty as f64,
                    *beta,
                );
            }
            if orders == 0 {
                1.0
            } else {
                sum / orders as f64
            }
        }
    };
    Ok(score)
}

fn pooled_f1(overlap: usize, nh: usize, ny: usize) -> f64 {
    if nh == 0 && ny == 0 {
        return 1.0;
    }
    if nh == 0 || ny == 0 {
        return 0.0;
    }
    f_beta(overlap as f64 / nh as f64, overlap as f64 / ny as f64, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(text: &str) -> TokenizedSentence {
        TokenizedSentence::from_text(text)
    }

    #[test]
    fn exact_match_examples() {
        assert_eq!(exact_match(&s("a b"), &s("a b")), 1.0);
        assert_eq!(exact_match(&s("a b"), &s("a c")), 0.0);
        assert_eq!(exact_match(&s(""), &s("")), 1.0);
    }

    #[test]
    fn unigram_f1_examples() {
        assert!((unigram_f1(&s("a b d"), &s("a b c")) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(unigram_f1(&s("x y"), &s("x y")), 1.0);
        assert_eq!(unigram_f1(&s("a"), &s("b")), 0.0);
        assert_eq!(unigram_f1(&s("a"), &s("")), 0.0);
        assert_eq!(unigram_f1(&s(""), &s("a")), 0.0);
    }

    #[test]
    fn skip_bigram_examples() {
        // y pairs {ab, ac, bc}, h pairs {ac, ab, cb}: overlap 2.
        assert!((skip_bigram_f1(&s("a b c"), &s("a c b")) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(skip_bigram_f1(&s("a b"), &s("a b")), 1.0);
        assert_eq!(skip_bigram_f1(&s("a b"), &s("b a")), 0.0);
        // Short sides fall back to exact match.
        assert_eq!(skip_bigram_f1(&s("a"), &s("a")), 1.0);
        assert_eq!(skip_bigram_f1(&s("a"), &s("a b c")), 0.0);
    }

    #[test]
    fn sentence_bleu_identity_and_empty() {
        assert!((sentence_bleu(&s("a b c d"), &s("a b c d")) - 1.0).abs() < 1e-15);
        assert_eq!(sentence_bleu(&s("a b"), &s("")), 0.0);
        assert_eq!(sentence_bleu(&s(""), &s("")), 1.0);
    }

    #[test]
    fn sentence_bleu_hand_value() {
        // y = "a b c d", h = "a b c x": p1 = 3/4, p2 = 2/3, p3 = 1/2,
        // p4 floored at 0.1/1; BP = 1.
        let expect = (0.75f64 * (2.0 / 3.0) * 0.5 * 0.1).powf(0.25);
        assert!((sentence_bleu(&s("a b c d"), &s("a b c x")) - expect).abs() < 1e-15);
    }

    #[test]
    fn char_ngram_examples() {
        assert!((char_ngram_f(&s("abc"), &s("abd"), 1, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(char_ngram_f(&s("hello world"), &s("hello world"), 6, 2.0), 1.0);
        assert_eq!(char_ngram_f(&s("ab"), &s("cd"), 6, 2.0), 0.0);
    }

    #[test]
    fn metric_id_round_trip() {
        for id in ["exact", "uf", "sbf", "bleu", "chrf:n=6,beta=2"] {
            assert_eq!(Utility::parse(id).unwrap().id(), id);
        }
        assert_eq!(Utility::parse("chrf").unwrap(), Utility::CharNgramF { max_n: 6, beta: 2.0 });
        assert!(Utility::parse("beer").is_err());
        assert!(Utility::parse("chrf:n=0").is_err());
    }

    #[test]
    fn corpus_aggregate_single_pair_matches_sentence_bleu() {
        let pair = (s("a b c d"), s("a b c x"));
        let pooled = corpus_aggregate(&Utility::SentenceBleu, std::slice::from_ref(&pair)).unwrap();
        assert!((pooled - sentence_bleu(&pair.0, &pair.1)).abs() < 1e-15);
    }

    #[test]
    fn corpus_aggregate_is_duplication_invariant() {
        let pair = (s("a b c"), s("a c b"));
        for u in [
            Utility::ExactMatch,
            Utility::UnigramF1,
            Utility::SkipBigramF1,
            Utility::SentenceBleu,
            Utility::CharNgramF { max_n: 6, beta: 2.0 },
        ] {
            let one = corpus_aggregate(&u, std::slice::from_ref(&pair)).unwrap();
            let four = corpus_aggregate(&u, &vec![pair.clone(); 4]).unwrap();
            assert!((one - four).abs() < 1e-12, "{}", u.id());
        }
    }

    #[test]
    fn corpus_aggregate_two_pair_hand_pool() {
        // uf pooling: pair 1 overlap 2 of |y|=3, |h|=3; pair 2 overlap 1 of
        // |y|=1, |h|=2. Pooled P = 3/5, R = 3/4.
        let pairs = vec![(s("a b d"), s("a b c")), (s("a"), s("a a"))];
        let expect = f_beta(3.0 / 5.0, 3.0 / 4.0, 1.0);
        let got = corpus_aggregate(&Utility::UnigramF1, &pairs).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn corpus_aggregate_rejects_empty_list() {
        assert!(corpus_aggregate(&Utility::ExactMatch, &[]).is_err());
    }

    #[test]
    fn monotone_overlap_append() {
        // Appending a token present in y never decreases the unigram
        // overlap count.
        let y = s("a b c");
        let h = s("x");
        let cy = counts(y.tokens().iter());
        let before = clipped_overlap(&counts(h.tokens().iter()), &cy);
        let mut extended = h.tokens().to_vec();
        extended.push("b".to_string());
        let after = clipped_overlap(
            &counts(TokenizedSentence::from_tokens(extended).tokens().iter()),
            &cy,
        );
        assert!(after >= before);
    }

    fn arb_sentence() -> impl Strategy<Value = TokenizedSentence> {
        proptest::collection::vec(
            proptest::sample::select(vec!["a", "b", "c", "ab", "xyz"]),
            0..8,
        )
        .prop_map(|toks| {
            TokenizedSentence::from_tokens(toks.into_iter().map(str::to_string).collect())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn utilities_stay_in_range(y in arb_sentence(), h in arb_sentence()) {
            for u in [
                Utility::ExactMatch,
                Utility::UnigramF1,
                Utility::SkipBigramF1,
                Utility::SentenceBleu,
                Utility::CharNgramF { max_n: 6, beta: 2.0 },
            ] {
                let v = u.eval(&y, &h);
                prop_assert!((0.0..=1.0).contains(&v), "{} gave {v}", u.id());
            }
        }

        #[test]
        fn f1_metrics_are_symmetric(y in arb_sentence(), h in arb_sentence()) {
            prop_assert_eq!(unigram_f1(&y, &h), unigram_f1(&h, &y));
            prop_assert_eq!(skip_bigram_f1(&y, &h), skip_bigram_f1(&h, &y));
            prop_assert_eq!(
                char_ngram_f(&y, &h, 6, 1.0),
                char_ngram_f(&h, &y, 6, 1.0)
            );
        }

        #[test]
        fn identity_is_maximal(y in arb_sentence()) {
            if !y.is_empty() {
                prop_assert_eq!(unigram_f1(&y, &y), 1.0);
                prop_assert_eq!(char_ngram_f(&y, &y, 6, 2.0), 1.0);
                if y.tokens().len() >= 2 {
                    prop_assert_eq!(skip_bigram_f1(&y, &y), 1.0);
                }
                let bleu = sentence_bleu(&y, &y);
                if y.tokens().len() >= 4 {
                    prop_assert_eq!(bleu, 1.0);
                } else {
                    // Short identities are diluted only by the smoothing
                    // floor on the missing orders.
                    let missing = 4 - y.tokens().len();
                    let floor = BLEU_FLOOR.powf(missing as f64 / 4.0);
                    prop_assert!(bleu >= floor - 1e-12, "bleu {bleu} < floor {floor}");
                }
            }
        }
    }
}
