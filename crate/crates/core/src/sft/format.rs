//! Forbidden-set files.
//!
//! ```text
//! arity=2 labels=0,1 height=2
//! 1 0 1
//! 1 1 0
//! 1 1 1
//! ```
//!
//! After the header every line is either a normalized block in text form or a
//! `pattern` stanza of `word:label` pairs (`e` is the root), e.g.
//! `pattern e:1 0:1`. Patterns are normalized on load, to `height` when the
//! header gives one and to the smallest height that fits otherwise. Blank lines
//! and lines starting with `#` are ignored.

use std::collections::BTreeMap;

use crate::alphabet::Alphabets;
use crate::error::{Error, Result};
use crate::word::Word;

use super::{normalize, ForbiddenSet, NormalizedSft, Pattern};

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a `key=value key=value` header into a map.
pub(crate) fn parse_header(line_no: usize, line: &str) -> Result<BTreeMap<String, String>> {
    line.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| parse_error(line_no, format!("expected key=value, got `{tok}`")))
        })
        .collect()
}

pub(crate) fn header_usize(line_no: usize, header: &BTreeMap<String, String>, key: &str) -> Result<Option<usize>> {
    header
        .get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| parse_error(line_no, format!("`{key}` is not a number: `{v}`")))
        })
        .transpose()
}

pub(crate) fn header_alphabets(line_no: usize, header: &BTreeMap<String, String>) -> Result<Alphabets> {
    let arity = header_usize(line_no, header, "arity")?.ok_or_else(|| parse_error(line_no, "missing `arity`"))?;
    let labels = header
        .get("labels")
        .ok_or_else(|| parse_error(line_no, "missing `labels`"))?;
    Alphabets::new(arity, labels.split(',')).map_err(|e| parse_error(line_no, e.to_string()))
}

/// Content lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_forbidden_file(text: &str) -> Result<NormalizedSft> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let fields = parse_header(header_line, header)?;
    let alph = header_alphabets(header_line, &fields)?;
    let height = header_usize(header_line, &fields, "height")?;

    let mut patterns = Vec::new();
    let mut blocks = Vec::new();
    for (no, line) in lines {
        if let Some(rest) = line.strip_prefix("pattern") {
            let entries = rest
                .split_whitespace()
                .map(|pair| {
                    let (w, sym) = pair
                        .split_once(':')
                        .ok_or_else(|| parse_error(no, format!("expected word:label, got `{pair}`")))?;
                    let word: Word = w.parse().map_err(|e: Error| parse_error(no, e.to_string()))?;
                    let label = alph
                        .label(sym)
                        .ok_or_else(|| parse_error(no, format!("unknown label `{sym}`")))?;
                    Ok((word, label))
                })
                .collect::<Result<Vec<_>>>()?;
            patterns.push(Pattern::new(&alph, entries).map_err(|e| parse_error(no, e.to_string()))?);
        } else {
            let b = alph.parse_block(line).map_err(|e| parse_error(no, e.to_string()))?;
            blocks.push((no, b));
        }
    }

    if patterns.is_empty() {
        let height = match (height, blocks.first()) {
            (Some(h), _) => h,
            (None, Some((_, b))) => b.height(),
            (None, None) => 1,
        };
        if let Some((no, b)) = blocks.iter().find(|(_, b)| b.height() != height) {
            return Err(parse_error(
                *no,
                format!("block of height {} in a height-{height} file", b.height()),
            ));
        }
        return NormalizedSft::new(alph, height, blocks.into_iter().map(|(_, b)| b))
            .map_err(|e| parse_error(header_line, e.to_string()));
    }

    patterns.extend(blocks.iter().map(|(_, b)| Pattern::from_block(b)));
    let set = ForbiddenSet::new(alph, patterns);
    let p = height.unwrap_or_else(|| set.min_height());
    normalize(&set, p).map_err(|e| parse_error(header_line, e.to_string()))
}

pub fn write_forbidden_file(sft: &NormalizedSft) -> String {
    let alph = sft.alphabets();
    let mut out = format!("{} height={}\n", alph.header(), sft.height());
    for b in sft.forbidden() {
        out.push_str(&alph.format_block(b));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: &str = "arity=2 labels=0,1 height=2\n1 0 1\n1 1 0\n1 1 1\n";

    #[test]
    fn round_trip() {
        let sft = parse_forbidden_file(GOLDEN).unwrap();
        assert_eq!(sft.height(), 2);
        assert_eq!(sft.forbidden().len(), 3);
        assert_eq!(write_forbidden_file(&sft), GOLDEN);
    }

    #[test]
    fn patterns_are_normalized() {
        let text = "# golden mean, loosely\narity=2 labels=0,1\npattern e:1 0:1\npattern e:1 1:1\n";
        let sft = parse_forbidden_file(text).unwrap();
        assert_eq!(sft, parse_forbidden_file(GOLDEN).unwrap());

        let taller = parse_forbidden_file("arity=2 labels=0,1 height=3\npattern e:1\n").unwrap();
        assert_eq!(taller.forbidden().len(), 64);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_forbidden_file("arity=2 labels=0,1 height=2\n1 0 1\n1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_forbidden_file("arity=2 labels=0,1 height=1\n1 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_forbidden_file("labels=0,1\n").is_err());
        assert!(parse_forbidden_file("arity=2 labels=0,1\npattern 0:1\n").is_err());
        assert!(parse_forbidden_file("").is_err());
    }
}
