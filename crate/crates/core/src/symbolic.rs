//! Exact algebra of symbols, words, formal sums, symbolic matrices, 0/1
//! matrices, and specifications.
//!
//! A [`FormalSum`] is a finite multiset of equal-length [`Word`]s; the empty
//! multiset is the zero entry and prints as `0`. A [`SymbolicMatrix`] is a
//! rectangular grid of formal sums sharing one word length. Composite symbols
//! (products of alphabets) are represented as flat words over the component
//! symbols, so nested products compare equal regardless of association order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// An interned symbol name. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym(Arc<str>);

impl Sym {
    pub fn new(name: &str) -> Self {
        Sym(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym::new(s)
    }
}

/// An ordered, non-empty set of distinct symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    pub name: String,
    pub symbols: Vec<Sym>,
}

impl Alphabet {
    pub fn new(name: &str, symbols: &[&str]) -> Result<Self> {
        let symbols: Vec<Sym> = symbols.iter().map(|s| Sym::new(s)).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidSystem(format!("alphabet {name} is empty")));
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.clone()) {
                return Err(Error::InvalidSystem(format!(
                    "alphabet {name} repeats symbol {s}"
                )));
            }
        }
        Ok(Alphabet {
            name: name.to_string(),
            symbols,
        })
    }

    pub fn contains(&self, s: &Sym) -> bool {
        self.symbols.contains(s)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// A finite sequence of symbols. The empty word has length zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<Sym>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn single(s: Sym) -> Self {
        Word(vec![s])
    }

    pub fn from_syms(syms: Vec<Sym>) -> Self {
        Word(syms)
    }

    /// Builds a word treating every `char` of `s` as one symbol. Test and
    /// example convenience for single-character alphabets.
    pub fn from_chars(s: &str) -> Self {
        Word(s.chars().map(|c| Sym::new(&c.to_string())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syms(&self) -> &[Sym] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Word(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> Word {
        Word(self.0[start..end].to_vec())
    }

    /// Splits into consecutive chunks of `n` symbols; the length must divide.
    pub fn chunks(&self, n: usize) -> Result<Vec<Word>> {
        if n == 0 || !self.len().is_multiple_of(n) {
            return Err(Error::ShapeMismatch(format!(
                "cannot cut word {self} of length {} into blocks of {n}",
                self.len()
            )));
        }
        Ok(self.0.chunks(n).map(|c| Word(c.to_vec())).collect())
    }

    /// Renders grouping `group` letters per displayed symbol: bare for
    /// single-letter symbols, `(x,y)` tuples otherwise.
    pub fn display_grouped(&self, group: usize) -> String {
        if group <= 1 || !self.len().is_multiple_of(group) {
            return self.to_string();
        }
        let mut out = String::new();
        for chunk in self.0.chunks(group) {
            out.push('(');
            for (i, s) in chunk.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(s.as_str());
            }
            out.push(')');
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for s in &self.0 {
            f.write_str(s.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A finite multiset of equal-length words, kept sorted so that equality is
/// order-insensitive but multiplicity-sensitive. The empty sum is the zero
/// entry of a symbolic matrix.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FormalSum {
    terms: Vec<Word>,
}

impl FormalSum {
    pub fn zero() -> Self {
        FormalSum { terms: Vec::new() }
    }

    pub fn from_words(mut terms: Vec<Word>) -> Self {
        terms.sort();
        FormalSum { terms }
    }

    pub fn single(w: Word) -> Self {
        FormalSum { terms: vec![w] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Word] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multiset union.
    pub fn union(&self, other: &FormalSum) -> FormalSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FormalSum::from_words(terms)
    }

    /// All concatenations `u·v` for `u` in `self`, `v` in `other`, with
    /// multiplicity.
    pub fn concat_all(&self, other: &FormalSum) -> FormalSum {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for u in &self.terms {
            for v in &other.terms {
                terms.push(u.concat(v));
            }
        }
        FormalSum::from_words(terms)
    }

    /// The common term length, if any term exists.
    pub fn word_len(&self) -> Option<usize> {
        self.terms.first().map(|w| w.len())
    }
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A rectangular matrix of formal sums whose terms all share one length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymbolicMatrix {
    rows: usize,
    cols: usize,
    word_len: usize,
    entries: Vec<FormalSum>,
}

impl SymbolicMatrix {
    /// Builds a matrix, checking that every term has length `word_len`.
    pub fn new(rows: usize, cols: usize, word_len: usize, entries: Vec<FormalSum>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symbolic matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows}x{cols}={} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for (idx, e) in entries.iter().enumerate() {
            for t in e.terms() {
                if t.len() != word_len {
                    return Err(Error::ShapeMismatch(format!(
                        "entry ({},{}) holds term {t} of length {}, expected {word_len}",
                        idx / cols,
                        idx % cols,
                        t.len()
                    )));
                }
            }
        }
        Ok(SymbolicMatrix {
            rows,
            cols,
            word_len,
            entries,
        })
    }

    pub fn zero(rows: usize, cols: usize, word_len: usize) -> Self {
        SymbolicMatrix {
            rows,
            cols,
            word_len,
            entries: vec![FormalSum::zero(); rows * cols],
        }
    }

    /// Diagonal square matrix with a single one-symbol word on the diagonal.
    pub fn scalar_diagonal(n: usize, s: &Sym) -> Self {
        let mut m = SymbolicMatrix::zero(n, n, 1);
        for i in 0..n {
            m.entries[i * n + i] = FormalSum::single(Word::single(s.clone()));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn get(&self, i: usize, j: usize) -> &FormalSum {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[FormalSum] {
        &self.entries
    }

    /// Every symbol occurring in any entry, in sorted order.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for e in &self.entries {
            for t in e.terms() {
                out.extend(t.syms().iter().cloned());
            }
        }
        out
    }

    /// Every term occurring in any entry, in sorted order.
    pub fn terms(&self) -> BTreeSet<Word> {
        let mut out = BTreeSet::new();
        for e in &self.entries {
            out.extend(t_iter(e));
        }
        out
    }

    /// Matrix product: entrywise multiset union of all concatenations.
    pub fn mul(&self, rhs: &SymbolicMatrix) -> Result<SymbolicMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let word_len = self.word_len + rhs.word_len;
        let mut entries = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = FormalSum::zero();
                for t in 0..self.cols {
                    acc = acc.union(&self.get(i, t).concat_all(rhs.get(t, j)));
                }
                entries.push(acc);
            }
        }
        SymbolicMatrix::new(self.rows, rhs.cols, word_len, entries)
    }

    /// Right multiplication by a 0/1 matrix acting as coefficients.
    pub fn mul_bit(&self, rhs: &BitMatrix) -> Result<SymbolicMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = FormalSum::zero();
                for t in 0..self.cols {
                    if rhs.get(t, j) == 1 {
                        acc = acc.union(self.get(i, t));
                    }
                }
                entries.push(acc);
            }
        }
        SymbolicMatrix::new(self.rows, rhs.cols, self.word_len, entries)
    }

    /// Applies a row permutation: returns `S * self` where `S` is the
    /// permutation matrix with `S[perm[i]][i] = 1`... concretely, row `i` of
    /// the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> SymbolicMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries.push(self.get(perm[i], j).clone());
            }
        }
        SymbolicMatrix {
            rows: self.rows,
            cols: self.cols,
            word_len: self.word_len,
            entries,
        }
    }

    /// Column permutation: column `j` of the result is column `perm[j]`.
    pub fn permute_cols(&self, perm: &[usize]) -> SymbolicMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries.push(self.get(i, perm[j]).clone());
            }
        }
        SymbolicMatrix {
            rows: self.rows,
            cols: self.cols,
            word_len: self.word_len,
            entries,
        }
    }
}

fn t_iter(e: &FormalSum) -> impl Iterator<Item = Word> + '_ {
    e.terms().iter().cloned()
}

impl fmt::Display for SymbolicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for SymbolicMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A rectangular matrix with entries in `{0,1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "bit matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if bits.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {rows}x{cols}={} entries, got {}",
                rows * cols,
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidSystem(format!(
                "bit matrix entry {b} outside {{0,1}}"
            )));
        }
        Ok(BitMatrix { rows, cols, bits })
    }

    pub fn identity(n: usize) -> Self {
        let mut bits = vec![0u8; n * n];
        for i in 0..n {
            bits[i * n + i] = 1;
        }
        BitMatrix {
            rows: n,
            cols: n,
            bits,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.cols + j]
    }

    /// Left multiplication of a symbolic matrix: row sums selected by ones.
    pub fn mul_sym(&self, rhs: &SymbolicMatrix) -> Result<SymbolicMatrix> {
        if self.cols != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows,
                self.cols,
                rhs.rows(),
                rhs.cols()
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * rhs.cols());
        for i in 0..self.rows {
            for j in 0..rhs.cols() {
                let mut acc = FormalSum::zero();
                for t in 0..self.cols {
                    if self.get(i, t) == 1 {
                        acc = acc.union(rhs.get(t, j));
                    }
                }
                entries.push(acc);
            }
        }
        SymbolicMatrix::new(self.rows, rhs.cols(), rhs.word_len(), entries)
    }

    /// Integer matrix product, without collapsing counts.
    pub fn mul_counts(&self, rhs: &BitMatrix) -> Result<Vec<u64>> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0u64; self.rows * rhs.cols];
        for i in 0..self.rows {
            for t in 0..self.cols {
                if self.get(i, t) == 1 {
                    for j in 0..rhs.cols {
                        out[i * rhs.cols + j] += rhs.get(t, j) as u64;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix product that must stay 0/1; errors on an entry above one.
    pub fn mul_checked(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        let counts = self.mul_counts(rhs)?;
        let mut bits = Vec::with_capacity(counts.len());
        for (idx, c) in counts.iter().enumerate() {
            if *c > 1 {
                return Err(Error::InvalidSystem(format!(
                    "0/1 product entry ({},{}) is {c}",
                    idx / rhs.cols,
                    idx % rhs.cols
                )));
            }
            bits.push(*c as u8);
        }
        BitMatrix::new(self.rows, rhs.cols, bits)
    }

    /// Integer equality against another 0/1 matrix of integer counts.
    pub fn counts_equal(&self, counts: &[u64], rows: usize, cols: usize) -> bool {
        if self.rows != rows || self.cols != cols {
            return false;
        }
        self.bits
            .iter()
            .zip(counts.iter())
            .all(|(&b, &c)| b as u64 == c)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Outcome of a specified-equivalence check: either the matrices agree
/// entrywise after rewriting, or the first differing entry is reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceCheck {
    /// `None` when the equivalence holds; otherwise the first mismatch.
    pub mismatch: Option<EquivalenceMismatch>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceMismatch {
    pub row: usize,
    pub col: usize,
    pub rewritten: FormalSum,
    pub expected: FormalSum,
}

impl EquivalenceCheck {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// A finite bijection between words of one fixed domain shape and words of
/// one fixed range shape.
#[derive(Clone, PartialEq, Eq)]
pub struct Specification {
    domain_len: usize,
    range_len: usize,
    map: BTreeMap<Word, Word>,
}

impl Specification {
    pub fn new(pairs: Vec<(Word, Word)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::ShapeMismatch(
                "specification needs at least one pair".into(),
            ));
        }
        let domain_len = pairs[0].0.len();
        let range_len = pairs[0].1.len();
        let mut map = BTreeMap::new();
        let mut seen_range: BTreeSet<Word> = BTreeSet::new();
        for (from, to) in pairs {
            if from.len() != domain_len || to.len() != range_len {
                return Err(Error::ShapeMismatch(format!(
                    "pair {from} -> {to} does not match shape {domain_len} -> {range_len}"
                )));
            }
            if !seen_range.insert(to.clone()) {
                return Err(Error::NotBijective(format!("range word {to} is hit twice")));
            }
            if let Some(prev) = map.insert(from.clone(), to.clone()) {
                return Err(Error::NotBijective(format!(
                    "domain word {from} maps to both {prev} and {to}"
                )));
            }
        }
        Ok(Specification {
            domain_len,
            range_len,
            map,
        })
    }

    /// The identity specification on the symbols of `alphabet`.
    pub fn identity(alphabet: &Alphabet) -> Self {
        let pairs = alphabet
            .symbols
            .iter()
            .map(|s| (Word::single(s.clone()), Word::single(s.clone())))
            .collect();
        Specification::new(pairs).expect("identity table is bijective")
    }

    pub fn domain_len(&self) -> usize {
        self.domain_len
    }

    pub fn range_len(&self) -> usize {
        self.range_len
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Word, &Word)> {
        self.map.iter()
    }

    pub fn get(&self, w: &Word) -> Option<&Word> {
        self.map.get(w)
    }

    /// Rewrites one word by cutting it into domain-shaped blocks.
    pub fn apply_word(&self, w: &Word) -> Result<Word> {
        let blocks = w.chunks(self.domain_len).map_err(|_| {
            Error::UnmappedTerm(format!(
                "term {w} of length {} cannot be cut into blocks of {}",
                w.len(),
                self.domain_len
            ))
        })?;
        let mut out = Word::empty();
        for b in blocks {
            let img = self
                .map
                .get(&b)
                .ok_or_else(|| Error::UnmappedTerm(format!("block {b} of term {w}")))?;
            out = out.concat(img);
        }
        Ok(out)
    }

    /// Rewrites every term of every entry blockwise, preserving multiplicity.
    pub fn apply_matrix(&self, a: &SymbolicMatrix) -> Result<SymbolicMatrix> {
        if !a.word_len().is_multiple_of(self.domain_len) {
            return Err(Error::ShapeMismatch(format!(
                "matrix word length {} is not a multiple of domain length {}",
                a.word_len(),
                self.domain_len
            )));
        }
        let out_len = a.word_len() / self.domain_len * self.range_len;
        let mut entries = Vec::with_capacity(a.rows() * a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let mut terms = Vec::new();
                for t in a.get(i, j).terms() {
                    let img = self
                        .apply_word(t)
                        .map_err(|e| Error::UnmappedTerm(format!("entry ({i},{j}): {e}")))?;
                    terms.push(img);
                }
                entries.push(FormalSum::from_words(terms));
            }
        }
        SymbolicMatrix::new(a.rows(), a.cols(), out_len, entries)
    }

    /// Checks `a ≃ b` under this specification, reporting the first
    /// differing entry on failure.
    pub fn check_equivalence(
        &self,
        a: &SymbolicMatrix,
        b: &SymbolicMatrix,
    ) -> Result<EquivalenceCheck> {
        if a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        let rewritten = self.apply_matrix(a)?;
        if rewritten.word_len() != b.word_len() {
            return Err(Error::ShapeMismatch(format!(
                "rewritten word length {} vs expected {}",
                rewritten.word_len(),
                b.word_len()
            )));
        }
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if rewritten.get(i, j) != b.get(i, j) {
                    return Ok(EquivalenceCheck {
                        mismatch: Some(EquivalenceMismatch {
                            row: i,
                            col: j,
                            rewritten: rewritten.get(i, j).clone(),
                            expected: b.get(i, j).clone(),
                        }),
                    });
                }
            }
        }
        Ok(EquivalenceCheck { mismatch: None })
    }

    /// Function composition `outer ∘ inner`, defined where both apply.
    pub fn compose(outer: &Specification, inner: &Specification) -> Result<Specification> {
        if inner.range_len != outer.domain_len {
            return Err(Error::ShapeMismatch(format!(
                "range length {} of inner does not match domain length {} of outer",
                inner.range_len, outer.domain_len
            )));
        }
        let mut pairs = Vec::new();
        for (from, mid) in inner.map.iter() {
            if let Some(to) = outer.map.get(mid) {
                pairs.push((from.clone(), to.clone()));
            }
        }
        Specification::new(pairs)
    }

    /// The inverse bijection.
    pub fn invert(&self) -> Specification {
        let pairs = self
            .map
            .iter()
            .map(|(from, to)| (to.clone(), from.clone()))
            .collect();
        Specification::new(pairs).expect("inverse of a bijection is a bijection")
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (from, to)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{from} -> {to}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum(words: &[&str]) -> FormalSum {
        FormalSum::from_words(words.iter().map(|w| Word::from_chars(w)).collect())
    }

    fn mat(rows: usize, cols: usize, word_len: usize, entries: &[&[&str]]) -> SymbolicMatrix {
        let entries = entries.iter().map(|e| sum(e)).collect();
        SymbolicMatrix::new(rows, cols, word_len, entries).unwrap()
    }

    #[test]
    fn formal_sum_is_a_multiset() {
        assert_eq!(sum(&["a", "b"]), sum(&["b", "a"]));
        assert_ne!(sum(&["a", "a", "b"]), sum(&["a", "b"]));
        assert_eq!(sum(&["a", "b", "a"]).len(), 3);
        assert_eq!(FormalSum::zero().to_string(), "0");
    }

    #[test]
    fn full_shift_square() {
        // [a+b]·[a+b] = [aa+ab+ba+bb]
        let m = mat(1, 1, 1, &[&["a", "b"]]);
        let sq = m.mul(&m).unwrap();
        assert_eq!(sq.get(0, 0), &sum(&["aa", "ab", "ba", "bb"]));
        assert_eq!(sq.word_len(), 2);
    }

    #[test]
    fn golden_mean_square_expands_by_hand() {
        // [[a,a],[b,0]]² = [[aa+ab, aa],[ba, ba]]
        let m = mat(2, 2, 1, &[&["a"], &["a"], &["b"], &[]]);
        let sq = m.mul(&m).unwrap();
        assert_eq!(sq.get(0, 0), &sum(&["aa", "ab"]));
        assert_eq!(sq.get(0, 1), &sum(&["aa"]));
        assert_eq!(sq.get(1, 0), &sum(&["ba"]));
        assert_eq!(sq.get(1, 1), &sum(&["ba"]));
    }

    #[test]
    fn zero_annihilates() {
        let m = mat(1, 1, 1, &[&["a", "b"]]);
        let z = SymbolicMatrix::zero(1, 1, 1);
        let prod = m.mul(&z).unwrap();
        assert!(prod.get(0, 0).is_zero());
        assert_eq!(prod.word_len(), 2);
    }

    #[test]
    fn bit_coefficients() {
        // identity·A = A
        let a = mat(2, 2, 1, &[&["a"], &["a"], &["b"], &[]]);
        let id = BitMatrix::identity(2);
        assert_eq!(id.mul_sym(&a).unwrap(), a);
        // [[1,1]]·[[a],[b]] = [[a+b]]
        let col = mat(2, 1, 1, &[&["a"], &["b"]]);
        let row = BitMatrix::new(1, 2, vec![1, 1]).unwrap();
        assert_eq!(row.mul_sym(&col).unwrap(), mat(1, 1, 1, &[&["a", "b"]]));
        // duplicated row duplicates rows of A
        let dup = BitMatrix::new(2, 1, vec![1, 1]).unwrap();
        let a1 = mat(1, 2, 1, &[&["a"], &["b"]]);
        let d = dup.mul_sym(&a1).unwrap();
        assert_eq!(d.get(0, 0), d.get(1, 0));
        assert_eq!(d.get(0, 1), d.get(1, 1));
    }

    #[test]
    fn mul_dimension_mismatch() {
        let a = mat(1, 1, 1, &[&["a"]]);
        let b = mat(2, 1, 1, &[&["a"], &["b"]]);
        assert!(a.mul(&b).is_err());
    }

    fn swap_spec() -> Specification {
        Specification::new(vec![
            (Word::from_chars("a"), Word::from_chars("Ib")),
            (Word::from_chars("b"), Word::from_chars("Ia")),
        ])
        .unwrap()
    }

    #[test]
    fn apply_specification_rewrites_symbolwise() {
        // κ: a↦Ib, b↦Ia on [a+b] gives [Ia+Ib]
        let m = mat(1, 1, 1, &[&["a", "b"]]);
        let out = swap_spec().apply_matrix(&m).unwrap();
        assert_eq!(out.get(0, 0), &sum(&["Ia", "Ib"]));
    }

    #[test]
    fn identity_specification_fixes_matrix() {
        let alph = Alphabet::new("S", &["a", "b"]).unwrap();
        let m = mat(2, 2, 1, &[&["a"], &["a"], &["b"], &[]]);
        assert_eq!(Specification::identity(&alph).apply_matrix(&m).unwrap(), m);
    }

    #[test]
    fn missing_symbol_reports_witness() {
        let only_a =
            Specification::new(vec![(Word::from_chars("a"), Word::from_chars("a"))]).unwrap();
        let m = mat(1, 1, 1, &[&["a", "b"]]);
        let err = only_a.apply_matrix(&m).unwrap_err();
        assert!(matches!(err, Error::UnmappedTerm(_)));
        assert!(err.to_string().contains('b'));
    }

    #[test]
    fn specified_equivalence_verdicts() {
        let m = mat(1, 1, 1, &[&["a", "b"]]);
        let alph = Alphabet::new("S", &["a", "b"]).unwrap();
        let id = Specification::identity(&alph);
        assert!(id.check_equivalence(&m, &m).unwrap().holds());

        let target = mat(1, 1, 2, &[&["Ia", "Ib"]]);
        assert!(swap_spec().check_equivalence(&m, &target).unwrap().holds());

        let bad = mat(1, 1, 1, &[&["a", "a"]]);
        let check = id.check_equivalence(&m, &bad).unwrap();
        let mm = check.mismatch.unwrap();
        assert_eq!((mm.row, mm.col), (0, 0));
    }

    #[test]
    fn compose_and_invert() {
        let k = swap_spec();
        let inv = k.invert();
        let round = Specification::compose(&inv, &k).unwrap();
        // κ⁻¹∘κ is the identity on the domain
        for (from, to) in round.pairs() {
            assert_eq!(from, to);
        }
        // (a↦Ib) inverted is Ib↦a
        assert_eq!(
            inv.get(&Word::from_chars("Ib")),
            Some(&Word::from_chars("a"))
        );
        // composing the swap on {a,b} with itself is the identity
        let pi = Specification::new(vec![
            (Word::from_chars("a"), Word::from_chars("b")),
            (Word::from_chars("b"), Word::from_chars("a")),
        ])
        .unwrap();
        let twice = Specification::compose(&pi, &pi).unwrap();
        for (from, to) in twice.pairs() {
            assert_eq!(from, to);
        }
    }

    #[test]
    fn non_injective_specification_rejected() {
        let err = Specification::new(vec![
            (Word::from_chars("a"), Word::from_chars("c")),
            (Word::from_chars("b"), Word::from_chars("c")),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NotBijective(_)));
    }

    prop_compose! {
        fn arb_sum(word_len: usize)(terms in prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b"]), word_len),
            0..3,
        )) -> FormalSum {
            FormalSum::from_words(
                terms
                    .into_iter()
                    .map(|t| Word::from_syms(t.into_iter().map(Sym::new).collect()))
                    .collect(),
            )
        }
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = SymbolicMatrix> {
        prop::collection::vec(arb_sum(1), rows * cols)
            .prop_map(move |entries| SymbolicMatrix::new(rows, cols, 1, entries).unwrap())
    }

    proptest! {
        #[test]
        fn permuting_terms_never_changes_equality(
            terms in prop::collection::vec(prop::sample::select(vec!["aa", "ab", "ba"]), 0..5),
            seed in 0usize..24,
        ) {
            let words: Vec<Word> = terms.iter().map(|t| Word::from_chars(t)).collect();
            let mut shuffled = words.clone();
            // cheap deterministic shuffle
            if shuffled.len() > 1 {
                let rot = seed % shuffled.len();
                shuffled.rotate_left(rot);
                if seed % 2 == 0 {
                    shuffled.reverse();
                }
            }
            prop_assert_eq!(FormalSum::from_words(words), FormalSum::from_words(shuffled));
        }

        #[test]
        fn product_is_associative(
            a in arb_matrix(2, 2),
            b in arb_matrix(2, 2),
            c in arb_matrix(2, 2),
        ) {
            let left = a.mul(&b).unwrap().mul(&c).unwrap();
            let right = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn specification_distributes_over_products(
            a in arb_matrix(2, 2),
            b in arb_matrix(2, 2),
        ) {
            let k = swap_spec();
            let lhs = k.apply_matrix(&a.mul(&b).unwrap()).unwrap();
            let rhs = k.apply_matrix(&a).unwrap().mul(&k.apply_matrix(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn specification_distributes_over_scalar_products(
            a in arb_matrix(1, 1),
            b in arb_matrix(1, 1),
        ) {
            let k = swap_spec();
            let lhs = k.apply_matrix(&a.mul(&b).unwrap()).unwrap();
            let rhs = k.apply_matrix(&a).unwrap().mul(&k.apply_matrix(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn invert_round_trips(pairs in prop::sample::subsequence(
            vec![("a", "x"), ("b", "y"), ("c", "z")], 1..=3
        )) {
            let spec = Specification::new(
                pairs
                    .into_iter()
                    .map(|(f, t)| (Word::from_chars(f), Word::from_chars(t)))
                    .collect(),
            ).unwrap();
            prop_assert_eq!(spec.invert().invert(), spec);
        }
    }
}
