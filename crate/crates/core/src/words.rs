//! Closed word lists shared across the pipeline.

/// The fixed 127-word English stopword list.
pub const STOPWORDS: [&str; 127] = [
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
    "with", "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don",
    "should", "now",
];

pub const WH_WORDS: [&str; 9] = ["what", "which", "who", "whom", "whose", "where", "when", "how", "why"];

const RELATIVE_PRONOUNS: [&str; 7] = ["that", "which", "who", "whom", "whose", "where", "when"];

const PREPOSITIONS: [&str; 16] = [
    "of", "in", "with", "for", "on", "at", "by", "from", "to", "after", "before", "about", "during", "since", "into", "as",
];

pub fn is_stopword(word: &str) -> bool {
    let w = word.to_lowercase();
    STOPWORDS.contains(&w.as_str())
}

pub fn is_wh(word: &str) -> bool {
    let w = word.to_lowercase();
    WH_WORDS.contains(&w.as_str())
}

pub fn is_relative_pronoun(word: &str) -> bool {
    let w = word.to_lowercase();
    RELATIVE_PRONOUNS.contains(&w.as_str())
}

pub fn is_preposition(word: &str) -> bool {
    let w = word.to_lowercase();
    PREPOSITIONS.contains(&w.as_str())
}

/// A token without any alphanumeric character.
pub fn is_punct(word: &str) -> bool {
    !word.chars().any(char::is_alphanumeric)
}

/// Word that survives stopword, punctuation and clitic filtering.
pub fn is_content(word: &str) -> bool {
    !is_punct(word) && !is_stopword(word) && !word.starts_with('\'')
}

/// Coarse word class used by feature templates.
pub fn word_class(word: &str, position: usize) -> &'static str {
    let w = word.to_lowercase();
    if is_punct(&w) {
        "punct"
    } else if position == 0 && is_wh(&w) {
        "wh"
    } else if is_relative_pronoun(&w) {
        "rel"
    } else if w == "to" {
        "to"
    } else if is_preposition(&w) {
        "prep"
    } else if matches!(w.as_str(), "and" | "or" | "but") {
        "conj"
    } else if matches!(w.as_str(), "the" | "a" | "an") {
        "det"
    } else if w.starts_with('\'') {
        "clitic"
    } else if w.len() > 4 && w.ends_with("ing") {
        "ing"
    } else if w.len() > 3 && w.ends_with("ed") {
        "ed"
    } else if word.chars().next().is_some_and(char::is_uppercase) {
        "cap"
    } else if is_stopword(&w) {
        "stop"
    } else {
        "word"
    }
}
