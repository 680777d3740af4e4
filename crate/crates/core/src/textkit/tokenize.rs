use serde::{Deserialize, Serialize};

use super::normalize::{normalize_token, special_spans, HANDLE_TOKEN, URL_TOKEN};
use super::pos::PosTag;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub pos: Option<PosTag>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let norm = normalize_token(&surface);
        Token {
            surface,
            norm,
            pos: None,
        }
    }

    pub fn tagged(surface: impl Into<String>, pos: PosTag) -> Self {
        Token {
            pos: Some(pos),
            ..Token::new(surface)
        }
    }

    /// Anything with a letter or digit in it, including the URL/handle placeholders.
    pub fn is_word(&self) -> bool {
        self.norm.chars().any(char::is_alphanumeric)
    }

    pub fn is_special(&self) -> bool {
        self.norm == URL_TOKEN || self.norm == HANDLE_TOKEN
    }
}

/// Lower-cased words that take a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "vs", "etc", "e.g", "i.e",
    "inc", "ltd", "co", "corp", "no", "vol", "fig", "gen", "gov", "sen", "rep", "rev", "lt",
    "col", "capt", "sgt", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct",
    "nov", "dec", "approx", "dept", "est", "ave", "blvd", "al", "ep", "pt",
];

const CLITICS: &[&str] = &["n't", "'s", "'re", "'ve", "'ll", "'d", "'m"];

#[derive(Debug)]
struct Lexeme {
    token: Token,
    space_before: bool,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Split a raw chunk (no whitespace, no URLs) into words and punctuation.
fn lex_chunk(chunk: &str, mut space_before: bool, out: &mut Vec<Lexeme>) {
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        let mut j = i + 1;
        if is_word_char(c) {
            while j < chars.len() {
                let cj = chars[j].1;
                if is_word_char(cj) {
                    j += 1;
                } else if j + 1 < chars.len() && is_word_char(chars[j + 1].1) && {
                    let numeric_sep = matches!(cj, '.' | ',')
                        && chars[j - 1].1.is_ascii_digit()
                        && chars[j + 1].1.is_ascii_digit();
                    is_joiner(cj) || numeric_sep
                } {
                    j += 2;
                } else {
                    break;
                }
            }
        } else {
            while j < chars.len() && chars[j].1 == c {
                j += 1;
            }
        }
        let end = chars.get(j).map_or(chunk.len(), |&(b, _)| b);
        let piece = &chunk[start..end];
        if is_word_char(c) {
            for (k, part) in split_clitics(piece).into_iter().enumerate() {
                out.push(Lexeme {
                    token: Token::new(part),
                    space_before: space_before && k == 0,
                });
            }
        } else {
            out.push(Lexeme {
                token: Token::new(piece),
                space_before,
            });
        }
        space_before = false;
        i = j;
    }
}

/// Split English clitics the way treebank tokenization does: "don't" -> "do" "n't".
fn split_clitics(word: &str) -> Vec<&str> {
    let lower = word.to_lowercase().replace('\u{2019}', "'");
    if lower.len() != word.len() {
        return vec![word];
    }
    for clitic in CLITICS {
        if lower.len() > clitic.len() && lower.ends_with(clitic) {
            let cut = word.len() - clitic.len();
            if word.is_char_boundary(cut) {
                return vec![&word[..cut], &word[cut..]];
            }
        }
    }
    vec![word]
}

fn lex(text: &str) -> Vec<Lexeme> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for (start, end, kind) in special_spans(text) {
        lex_segment(text, cursor, start, &mut out);
        out.push(Lexeme {
            token: Token {
                surface: text[start..end].to_string(),
                norm: kind.token().to_string(),
                pos: None,
            },
            space_before: space_precedes(text, start),
        });
        cursor = end;
    }
    lex_segment(text, cursor, text.len(), &mut out);
    out
}

fn space_precedes(text: &str, at: usize) -> bool {
    at == 0 || text[..at].ends_with(char::is_whitespace)
}

/// Lex `text[from..to]`, which contains no URL or handle spans.
fn lex_segment(text: &str, from: usize, to: usize, out: &mut Vec<Lexeme>) {
    let segment = &text[from..to];
    let mut chunk_start: Option<usize> = None;
    let flush = |s: usize, e: usize, out: &mut Vec<Lexeme>| {
        lex_chunk(&segment[s..e], space_precedes(text, from + s), out);
    };
    for (i, c) in segment.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                flush(s, i, out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        flush(s, segment.len(), out);
    }
}

/// Sentence-final punctuation. An ellipsis trails off inside a sentence.
fn is_terminal(tok: &Token) -> bool {
    let s = tok.surface.as_str();
    !s.is_empty() && s.chars().all(|c| matches!(c, '.' | '!' | '?')) && !s.starts_with("..")
}

fn is_opener(tok: &Token) -> bool {
    tok.surface
        .chars()
        .all(|c| matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}'))
}

fn is_closer(tok: &Token) -> bool {
    tok.surface
        .chars()
        .all(|c| matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}'))
}

fn starts_upper(tok: &Token) -> bool {
    tok.surface
        .chars()
        .find(|c| c.is_alphanumeric())
        .is_some_and(char::is_uppercase)
}

fn guarded(prev: Option<&Token>, terminal: &Token) -> bool {
    if terminal.surface != "." {
        return false;
    }
    let Some(prev) = prev else { return false };
    let lower = prev.surface.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let mut chars = prev.surface.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic() && c.is_uppercase())
}

/// Split text into sentences of tokens. A sentence ends at `.`, `!` or `?`
/// (plus any closing quotes or brackets) when the next word is capitalized
/// and separated by whitespace, or at the end of the text. Opening quotes
/// before the next word are skipped. A period after a
/// known abbreviation or a single capital initial does not end a sentence.
pub fn tokenize_sentences(text: &str) -> Vec<Vec<Token>> {
    let lexemes = lex(text);
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < lexemes.len() {
        let tok = &lexemes[i].token;
        if is_terminal(tok) && !guarded(current.last(), tok) {
            current.push(tok.clone());
            let mut j = i + 1;
            while j < lexemes.len() && !lexemes[j].space_before && is_closer(&lexemes[j].token) {
                current.push(lexemes[j].token.clone());
                j += 1;
            }
            let boundary = match lexemes.get(j) {
                None => true,
                Some(next) if !next.space_before => false,
                Some(_) => {
                    let k = (j..lexemes.len())
                        .find(|&k| !is_opener(&lexemes[k].token))
                        .unwrap_or(j);
                    starts_upper(&lexemes[k].token)
                }
            };
            if boundary {
                sentences.push(std::mem::take(&mut current));
            }
            i = j;
            continue;
        }
        current.push(tok.clone());
        i += 1;
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Tokens without sentence structure.
pub fn tokenize(text: &str) -> Vec<Token> {
    lex(text).into_iter().map(|l| l.token).collect()
}
