//! Reduced normal-form words for the free groups F_k and for ℤ/2∗ℤ/3.
//!
//! Letters are ASCII bytes. F_k uses `a b c d` with inverses `A B C D`.
//! ℤ/2∗ℤ/3 = ⟨a, b | a², b³⟩ uses `a`, `b` and `B` = b² = b⁻¹; a normal form
//! alternates a single `a` with a single `b` or `B`. The identity is written
//! `e` as a label and is the empty word internally.

use super::GraphError;

pub const IDENTITY_LABEL: &str = "e";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Free { rank: usize },
    FreeProduct23,
}

impl Group {
    /// Generators in the order BFS explores them.
    pub fn generators(&self) -> Vec<u8> {
        match *self {
            Group::Free { rank } => (0..rank as u8)
                .flat_map(|i| [b'a' + i, b'A' + i])
                .collect(),
            Group::FreeProduct23 => vec![b'a', b'b', b'B'],
        }
    }

    pub fn inverse_letter(&self, l: u8) -> u8 {
        match *self {
            Group::Free { .. } => {
                if l.is_ascii_lowercase() {
                    l.to_ascii_uppercase()
                } else {
                    l.to_ascii_lowercase()
                }
            }
            Group::FreeProduct23 => match l {
                b'b' => b'B',
                b'B' => b'b',
                other => other,
            },
        }
    }

    fn is_letter(&self, l: u8) -> bool {
        match *self {
            Group::Free { rank } => {
                let lower = l.to_ascii_lowercase();
                l.is_ascii_alphabetic() && lower >= b'a' && lower < b'a' + rank as u8
            }
            Group::FreeProduct23 => matches!(l, b'a' | b'b' | b'B'),
        }
    }

    /// Right-multiplies a reduced word by one letter, keeping it reduced.
    pub fn push(&self, word: &mut Vec<u8>, l: u8) {
        match *self {
            Group::Free { .. } => {
                if word.last() == Some(&self.inverse_letter(l)) {
                    word.pop();
                } else {
                    word.push(l);
                }
            }
            Group::FreeProduct23 => match (word.last().copied(), l) {
                (Some(b'a'), b'a') => {
                    word.pop();
                }
                (Some(b'b'), b'b') => *word.last_mut().unwrap() = b'B',
                (Some(b'B'), b'B') => *word.last_mut().unwrap() = b'b',
                (Some(b'b'), b'B') | (Some(b'B'), b'b') => {
                    word.pop();
                }
                _ => word.push(l),
            },
        }
    }

    pub fn multiply(&self, x: &[u8], y: &[u8]) -> Vec<u8> {
        let mut w = Vec::with_capacity(x.len() + y.len());
        for &l in x.iter().chain(y) {
            self.push(&mut w, l);
        }
        w
    }

    pub fn inverse(&self, x: &[u8]) -> Vec<u8> {
        let mut w = Vec::with_capacity(x.len());
        for &l in x.iter().rev() {
            self.push(&mut w, self.inverse_letter(l));
        }
        w
    }

    pub fn label(word: &[u8]) -> String {
        if word.is_empty() {
            IDENTITY_LABEL.to_string()
        } else {
            String::from_utf8(word.to_vec()).expect("ascii word")
        }
    }

    /// Parses a label into a reduced word; rejects unreduced input.
    pub fn parse(&self, label: &str) -> Result<Vec<u8>, GraphError> {
        if label == IDENTITY_LABEL {
            return Ok(Vec::new());
        }
        let mut w = Vec::with_capacity(label.len());
        for l in label.bytes() {
            if !self.is_letter(l) {
                return Err(GraphError::Invalid(format!("bad letter in word {label:?}")));
            }
            self.push(&mut w, l);
        }
        if w.as_slice() != label.as_bytes() {
            return Err(GraphError::Invalid(format!("word {label:?} is not reduced")));
        }
        Ok(w)
    }
}
