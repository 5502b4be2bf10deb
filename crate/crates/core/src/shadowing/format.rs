//! Pseudo-orbit files.
//!
//! ```text
//! arity=2 labels=0,1 order=2 depth=2 resolution=1
//! e: 0 1 0
//! 0: 1 0 0
//! 1: 0 0 0
//! ```
//!
//! One line per index word (`e` is the empty word), each followed by the entry
//! in block text form. Lines may come in any order but every word of length
//! below `order` must appear exactly once.

use crate::block::TruncatedTree;
use crate::error::{Error, Result};
use crate::sft::format::{content_lines, header_alphabets, header_usize, parse_header};
use crate::word::{bfs_index, checked_node_count, Word};

use super::PseudoOrbitFamily;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_orbit_file(text: &str) -> Result<PseudoOrbitFamily> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let fields = parse_header(header_line, header)?;
    let alph = header_alphabets(header_line, &fields)?;
    let required = |key: &str| {
        header_usize(header_line, &fields, key)?.ok_or_else(|| parse_error(header_line, format!("missing `{key}`")))
    };
    let order = required("order")?;
    let depth = required("depth")?;
    let resolution = required("resolution")?;
    if order == 0 || depth == 0 {
        return Err(parse_error(header_line, "order and depth must be at least 1"));
    }
    let count = checked_node_count(alph.arity(), order).ok_or_else(|| parse_error(header_line, "order too large"))?;

    let mut slots: Vec<Option<TruncatedTree>> = vec![None; count];
    for (no, line) in lines {
        let (w, body) = line
            .split_once(':')
            .ok_or_else(|| parse_error(no, "expected `word: block`"))?;
        let word: Word = w.trim().parse().map_err(|e: Error| parse_error(no, e.to_string()))?;
        alph.check_word(&word).map_err(|e| parse_error(no, e.to_string()))?;
        if word.len() >= order {
            return Err(parse_error(no, format!("{word} is not below order {order}")));
        }
        let b = alph.parse_block(body).map_err(|e| parse_error(no, e.to_string()))?;
        if b.height() != depth {
            return Err(parse_error(
                no,
                format!("entry of depth {} in a depth-{depth} file", b.height()),
            ));
        }
        let slot = &mut slots[bfs_index(&word, alph.arity())?];
        if slot.is_some() {
            return Err(parse_error(no, format!("{word} listed twice")));
        }
        *slot = Some(TruncatedTree::new(b));
    }
    let entries = slots
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or_else(|| {
                parse_error(
                    header_line,
                    format!("missing entry for {}", Word::from_bfs_index(i, alph.arity())),
                )
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PseudoOrbitFamily::new(alph, order, resolution, entries)
}

pub fn write_orbit_file(f: &PseudoOrbitFamily) -> String {
    let alph = f.alphabets();
    let mut out = format!(
        "{} order={} depth={} resolution={}\n",
        alph.header(),
        f.order(),
        f.depth(),
        f.resolution()
    );
    for (w, t) in f.words().zip(f.entries()) {
        out.push_str(&format!("{w}: {}\n", alph.format_block(t.body())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "arity=2 labels=0,1 order=2 depth=2 resolution=1\ne: 0 1 0\n0: 1 0 0\n1: 0 0 0\n";

    #[test]
    fn round_trip() {
        let f = parse_orbit_file(SMALL).unwrap();
        assert_eq!(f.order(), 2);
        assert_eq!(f.entry(&"0".parse().unwrap()).unwrap().body().labels(), &[1, 0, 0]);
        assert_eq!(write_orbit_file(&f), SMALL);
        assert!(super::super::verify_pseudo_orbit(&f).unwrap().passed);
    }

    #[test]
    fn any_line_order() {
        let shuffled = "arity=2 labels=0,1 order=2 depth=2 resolution=1\n1: 0 0 0\ne: 0 1 0\n0: 1 0 0\n";
        assert_eq!(parse_orbit_file(shuffled).unwrap(), parse_orbit_file(SMALL).unwrap());
    }

    #[test]
    fn errors() {
        let missing = "arity=2 labels=0,1 order=2 depth=2 resolution=1\ne: 0 1 0\n0: 1 0 0\n";
        assert!(matches!(parse_orbit_file(missing), Err(Error::Parse { line: 1, .. })));
        let twice = "arity=2 labels=0,1 order=2 depth=2 resolution=1\ne: 0 1 0\ne: 0 1 0\n";
        assert!(matches!(parse_orbit_file(twice), Err(Error::Parse { line: 3, .. })));
        let deep = "arity=2 labels=0,1 order=2 depth=2 resolution=1\n00: 0 1 0\n";
        assert!(matches!(parse_orbit_file(deep), Err(Error::Parse { line: 2, .. })));
        let shallow = "arity=2 labels=0,1 order=2 depth=2 resolution=1\ne: 0\n";
        assert!(matches!(parse_orbit_file(shallow), Err(Error::Parse { line: 2, .. })));
        assert!(parse_orbit_file("arity=2 labels=0,1 depth=2 resolution=1\n").is_err());
    }
}
