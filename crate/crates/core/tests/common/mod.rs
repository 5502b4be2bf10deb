//! Brute-force reference implementations, written against raw label vectors
//! with their own index arithmetic.

#![allow(dead_code)]

use std::collections::HashSet;

use treeshift::ShiftSpec;

pub fn nodes(arity: usize, height: usize) -> usize {
    (0..height).map(|k| arity.pow(k as u32)).sum()
}

pub fn index(arity: usize, level: usize, pos: usize) -> usize {
    nodes(arity, level) + pos
}

/// Labels of the height-`k` window rooted at (`level`, `pos`).
pub fn window(labels: &[u8], arity: usize, level: usize, pos: usize, k: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(nodes(arity, k));
    for d in 0..k {
        let width = arity.pow(d as u32);
        for j in pos * width..(pos + 1) * width {
            out.push(labels[index(arity, level + d, j)]);
        }
    }
    out
}

/// Every label vector of length `len` over `0..labels`.
pub fn all_vectors(labels: u8, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..labels).map(move |l| {
                    let mut w = v.clone();
                    w.push(l);
                    w
                })
            })
            .collect();
    }
    out
}

/// A shift of finite type decided by iterating "every child window exists"
/// on the raw height-`p` vectors until nothing changes.
pub struct BruteSft {
    pub arity: usize,
    pub labels: u8,
    pub p: usize,
    good: HashSet<Vec<u8>>,
}

impl BruteSft {
    pub fn new(arity: usize, labels: u8, p: usize, forbidden: &[Vec<u8>]) -> Self {
        let forbidden: HashSet<&Vec<u8>> = forbidden.iter().collect();
        let mut good: HashSet<Vec<u8>> = all_vectors(labels, nodes(arity, p))
            .into_iter()
            .filter(|v| !forbidden.contains(v))
            .collect();
        loop {
            let tops: HashSet<Vec<u8>> = good.iter().map(|v| v[..nodes(arity, p - 1)].to_vec()).collect();
            let next: HashSet<Vec<u8>> = good
                .iter()
                .filter(|v| (0..arity).all(|i| tops.contains(&window(v, arity, 1, i, p - 1))))
                .cloned()
                .collect();
            if next.len() == good.len() {
                break;
            }
            good = next;
        }
        BruteSft { arity, labels, p, good }
    }

    pub fn from_shift(shift: &ShiftSpec) -> Self {
        let e = shift.engine().expect("finite type");
        let forbidden: Vec<Vec<u8>> = e.sft().forbidden().iter().map(|b| b.labels().to_vec()).collect();
        BruteSft::new(
            e.alphabets().arity(),
            e.alphabets().label_count() as u8,
            e.height(),
            &forbidden,
        )
    }

    pub fn in_language(&self, labels: &[u8], height: usize) -> bool {
        let a = self.arity;
        if height < self.p {
            let len = nodes(a, height);
            return self.good.iter().any(|v| v[..len] == *labels);
        }
        (0..=height - self.p)
            .all(|level| (0..a.pow(level as u32)).all(|pos| self.good.contains(&window(labels, a, level, pos, self.p))))
    }

    pub fn count(&self, height: usize) -> u128 {
        all_vectors(self.labels, nodes(self.arity, height))
            .iter()
            .filter(|v| self.in_language(v, height))
            .count() as u128
    }

    pub fn viable_count(&self) -> usize {
        self.good.len()
    }
}

/// At most one zero on each level.
pub fn rows_ok(labels: &[u8], arity: usize, height: usize) -> bool {
    (0..height).all(|k| {
        let start = nodes(arity, k);
        labels[start..start + arity.pow(k as u32)]
            .iter()
            .filter(|&&l| l == 0)
            .count()
            <= 1
    })
}

/// Zeros of a level.
pub fn zeros_on_level(labels: &[u8], arity: usize, k: usize) -> usize {
    let start = nodes(arity, k);
    labels[start..start + arity.pow(k as u32)]
        .iter()
        .filter(|&&l| l == 0)
        .count()
}

/// Label of node `word` (letters as `usize`) in a raw vector.
pub fn at(labels: &[u8], arity: usize, word: &[usize]) -> u8 {
    let pos = word.iter().fold(0, |acc, &l| acc * arity + l);
    labels[index(arity, word.len(), pos)]
}

/// Every word of length below `h`, in canonical order.
pub fn words(arity: usize, h: usize) -> Vec<Vec<usize>> {
    if h == 0 {
        return Vec::new();
    }
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 1..h {
        frontier = frontier
            .into_iter()
            .flat_map(|w: Vec<usize>| {
                (0..arity).map(move |i| {
                    let mut x = w.clone();
                    x.push(i);
                    x
                })
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}
