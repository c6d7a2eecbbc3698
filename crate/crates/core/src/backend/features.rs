//! Feature templates shared by the four linear procedure models.

use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::scoring::EmbeddingTable;
use crate::words::{is_preposition, is_punct, is_relative_pronoun, is_wh, word_class};

/// Named feature values, ordered for determinism.
pub type SparseFeatures = BTreeMap<String, f64>;

fn length_bin(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5..=6 => "5-6",
        7..=9 => "7-9",
        10..=14 => "10-14",
        _ => "15+",
    }
}

fn position_bin(i: usize, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        (4 * i / n).min(3)
    }
}

fn lower(words: &[String]) -> Vec<String> {
    words.iter().map(|w| w.to_lowercase()).collect()
}

fn sentence_features(prefix: &str, words: &[String], out: &mut SparseFeatures) {
    let w = lower(words);
    let n = w.len();
    let mut set = |k: String| {
        out.insert(k, 1.0);
    };
    set(format!("{prefix}.len={}", length_bin(n)));
    for (i, tok) in w.iter().enumerate() {
        set(format!("{prefix}.u={tok}"));
        let bin = position_bin(i, n);
        if i > 0 && is_relative_pronoun(tok) {
            set(format!("{prefix}.relpron@{bin}"));
            set(format!("{prefix}.has_relpron"));
        }
        if is_preposition(tok) {
            set(format!("{prefix}.prep@{bin}"));
        }
        if tok == "," {
            set(format!("{prefix}.comma@{bin}"));
        }
        if is_wh(tok) {
            set(format!("{prefix}.wh={tok}"));
        }
        if matches!(tok.as_str(), "and" | "or" | "but") {
            set(format!("{prefix}.conj@{bin}"));
        }
    }
    for pair in w.windows(2) {
        set(format!("{prefix}.b={}_{}", pair[0], pair[1]));
    }
    if let Some(first) = w.first() {
        if is_wh(first) {
            set(format!("{prefix}.wh_first={first}"));
        }
    }
}

fn add_embedding<S: Scalar>(prefix: &str, words: &[String], emb: &EmbeddingTable<S>, out: &mut SparseFeatures) {
    for (k, v) in emb.mean(words).into_iter().enumerate() {
        let v = v.as_f64();
        if v != 0.0 {
            out.insert(format!("{prefix}.emb{k}"), v);
        }
    }
}

/// Features of one sentence, or of a sentence pair when `second` is given.
/// Pair inputs add cross features relating the two sentences.
pub fn featurize<S: Scalar>(
    first: &[String],
    second: Option<&[String]>,
    embeddings: Option<&EmbeddingTable<S>>,
) -> SparseFeatures {
    let mut out = SparseFeatures::new();
    out.insert("bias".into(), 1.0);
    sentence_features("a", first, &mut out);
    if let Some(emb) = embeddings {
        add_embedding("a", first, emb, &mut out);
    }
    if let Some(second) = second {
        sentence_features("b", second, &mut out);
        if let Some(emb) = embeddings {
            add_embedding("b", second, emb, &mut out);
        }
        let a = lower(first);
        let b = lower(second);
        let af = a.first().map_or("<none>", String::as_str);
        let al = a.last().map_or("<none>", String::as_str);
        let bf = b.first().map_or("<none>", String::as_str);
        let bl = b.last().map_or("<none>", String::as_str);
        out.insert(format!("x.firsts={af}|{bf}"), 1.0);
        out.insert(format!("x.afirst_blast={af}|{bl}"), 1.0);
        out.insert(format!("x.alast={al}"), 1.0);
        out.insert(format!("x.afirst_cls={}", word_class(af, 1)), 1.0);
        out.insert(format!("x.lens={}|{}", length_bin(a.len()), length_bin(b.len())), 1.0);
        for tok in a.iter().filter(|t| b.contains(t) && !is_punct(t)) {
            out.insert(format!("x.shared={tok}"), 1.0);
        }
    }
    out
}

fn at(words: &[String], i: isize) -> &str {
    if i < 0 {
        "<s>"
    } else {
        words.get(i as usize).map_or("</s>", String::as_str)
    }
}

fn cls(words: &[String], i: isize) -> &'static str {
    if i < 0 {
        "<s>"
    } else {
        words.get(i as usize).map_or("</s>", |w| word_class(w, i as usize))
    }
}

/// Features of candidate span `[start, end)` of `sentence`.
pub fn span_features(sentence: &[String], start: usize, end: usize) -> Vec<String> {
    let w = lower(sentence);
    let n = w.len();
    let (s, e) = (start as isize, end as isize);
    let first = at(&w, s);
    let last = at(&w, e - 1);
    let prev = at(&w, s - 1);
    let next = at(&w, e);
    let mut f = vec![
        format!("sp.first={first}"),
        format!("sp.last={last}"),
        format!("sp.prev={prev}"),
        format!("sp.next={next}"),
        format!("sp.prev+first={prev}|{first}"),
        format!("sp.last+next={last}|{next}"),
        format!("sp.len={}", length_bin(end - start)),
        format!("sp.firstcls={}", cls(sentence, s)),
        format!("sp.lastcls={}", cls(sentence, e - 1)),
        format!("sp.prevcls={}", cls(sentence, s - 1)),
        format!("sp.nextcls={}", cls(sentence, e)),
        format!("sp.firstcls+nextcls={}|{}", cls(sentence, s), cls(sentence, e)),
        format!("sp.first+len={first}|{}", length_bin(end - start)),
        format!("sp.start@{}", position_bin(start, n)),
    ];
    let tail = end == n || (end + 1 == n && is_punct(&w[n - 1]));
    if tail {
        f.push("sp.tail".into());
    }
    if start == 0 {
        f.push("sp.head".into());
    }
    if w[start..end].iter().any(|t| t == ",") {
        f.push("sp.inner_comma".into());
    }
    if w[start..end].iter().skip(1).any(|t| is_relative_pronoun(t)) {
        f.push("sp.inner_relpron".into());
    }
    f
}

/// Features of `remaining[i]` as the headword for `span`.
pub fn head_features(span: &[String], remaining: &[String], i: usize) -> Vec<String> {
    let r = lower(remaining);
    let sp = lower(span);
    let n = r.len();
    let word = &r[i];
    let sf = sp.first().map_or("<none>", String::as_str);
    let sl = sp.last().map_or("<none>", String::as_str);
    let c = word_class(&remaining[i], i);
    let sfc = word_class(span.first().map_or("", String::as_str), 1);
    let mut f = vec![
        format!("hw.w={word}"),
        format!("hw.w+sf={word}|{sf}"),
        format!("hw.w+sl={word}|{sl}"),
        format!("hw.cls={c}"),
        format!("hw.cls+sfcls={c}|{sfc}"),
        format!("hw.prev={}", at(&r, i as isize - 1)),
        format!("hw.next={}", at(&r, i as isize + 1)),
        format!("hw.pos@{}", position_bin(i, n)),
        format!("hw.from_end={}", (n - 1 - i).min(5)),
    ];
    let last_content = (0..n).rev().find(|&k| !is_punct(&r[k]));
    if last_content == Some(i) {
        f.push("hw.last_word".into());
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn deterministic() {
        let a = featurize::<f64>(&toks("what movie had a director"), None, None);
        let b = featurize::<f64>(&toks("what movie had a director"), None, None);
        assert_eq!(a, b);
    }

    #[test]
    fn single_token() {
        let f = featurize::<f64>(&toks("movie"), None, None);
        assert!(f.contains_key("a.u=movie"));
        assert!(f.contains_key("a.len=1"));
    }

    #[test]
    fn pair_adds_cross_features() {
        let first = toks("named Tom Vaughan");
        let one = featurize::<f64>(&first, None, None);
        let two = featurize::<f64>(&first, Some(&toks("what movie had a director")), None);
        let extra: Vec<_> = two.keys().filter(|k| !one.contains_key(*k)).collect();
        assert!(extra.iter().any(|k| k.starts_with("x.")));
        assert!(!one.keys().any(|k| k.starts_with("x.")));
        assert!(one.keys().all(|k| two.contains_key(k)));
    }

    #[test]
    fn embedding_means_included() {
        let emb = EmbeddingTable::<f64>::from_pairs(2, [("movie", vec![1.0, 0.5])]);
        let f = featurize(&toks("movie"), None, Some(&emb));
        assert_eq!(f.get("a.emb0"), Some(&1.0));
        assert_eq!(f.get("a.emb1"), Some(&0.5));
    }

    #[test]
    fn span_templates() {
        let s = toks("what movie had a director named Tom Vaughan ?");
        let f = span_features(&s, 5, 8);
        assert!(f.contains(&"sp.first=named".to_string()));
        assert!(f.contains(&"sp.tail".to_string()));
        assert!(f.contains(&"sp.prev=director".to_string()));
        let h = head_features(&toks("named Tom Vaughan"), &toks("what movie had a director ?"), 4);
        assert!(h.contains(&"hw.w+sf=director|named".to_string()));
        assert!(h.contains(&"hw.last_word".to_string()));
    }
}
