use std::sync::OnceLock;

use regex::Regex;

pub const URL_TOKEN: &str = "<URL>";
pub const HANDLE_TOKEN: &str = "<HANDLE>";

/// A span of raw text that maps onto a single special token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Special {
    Url,
    Handle,
}

impl Special {
    pub(crate) fn token(self) -> &'static str {
        match self {
            Special::Url => URL_TOKEN,
            Special::Handle => HANDLE_TOKEN,
        }
    }
}

fn special_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?xi)
            (?P<placeholder><URL>|<HANDLE>)
            | (?P<url>
                (?:https?://|ftp://|www\.)[^\s<>"]*[^\s<>".,;:!?)\]'}]
              | \b[a-z0-9][a-z0-9-]*(?:\.[a-z0-9-]+)*\.(?:com|org|net|io|fm|co|ly|me|tv|us|uk|edu|gov|info|link|app|pod)\b(?:/[^\s<>"]*[^\s<>".,;:!?)\]'}])?
              )
            | (?P<handle>@[A-Za-z0-9_]+)
            "#,
        )
        .expect("static regex")
    })
}

/// Locate URL and handle spans in raw text, in order. Handles preceded by a
/// word character (email addresses) are not treated as handles.
pub(crate) fn special_spans(text: &str) -> Vec<(usize, usize, Special)> {
    let mut spans = Vec::new();
    for caps in special_regex().captures_iter(text) {
        if let Some(m) = caps.name("placeholder") {
            let kind = if m.as_str().eq_ignore_ascii_case(URL_TOKEN) {
                Special::Url
            } else {
                Special::Handle
            };
            spans.push((m.start(), m.end(), kind));
        } else if let Some(m) = caps.name("url") {
            spans.push((m.start(), m.end(), Special::Url));
        } else if let Some(m) = caps.name("handle") {
            let after_span = spans.last().is_some_and(|&(_, end, _)| end == m.start());
            let preceded_by_word = !after_span
                && text[..m.start()]
                    .chars()
                    .next_back()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_');
            if !preceded_by_word {
                spans.push((m.start(), m.end(), Special::Handle));
            }
        }
    }
    spans
}

/// Case-fold, replace URLs with `<URL>` and @-handles with `<HANDLE>`, and
/// collapse whitespace runs into single spaces.
pub fn normalize_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end, kind) in special_spans(text) {
        out.push_str(&text[last..start].to_lowercase());
        out.push(' ');
        out.push_str(kind.token());
        out.push(' ');
        last = end;
    }
    out.push_str(&text[last..].to_lowercase());
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalize a single token surface.
pub fn normalize_token(surface: &str) -> String {
    let spans = special_spans(surface);
    if let [(0, end, kind)] = spans.as_slice() {
        if *end == surface.len() {
            return kind.token().to_string();
        }
    }
    surface.to_lowercase()
}
