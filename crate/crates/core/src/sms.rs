//! Symbolic matrix systems: pairs of matrix sequences `(M_l, I_l)` with the
//! commutation relation `I_l M_{l+1} = M_l I_{l+1}`, each row of `I_l`
//! carrying at least one 1 and each column exactly one.
//!
//! A system is either stationary (one square pair reused at every level) or
//! explicit (a finite truncation). Every consuming operation states how many
//! input levels one output level uses and fails loudly when an explicit
//! window is exhausted; stationary systems never exhaust.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lgs::LambdaGraphSystem;
use crate::symbolic::{BitMatrix, FormalSum, Specification, Sym, SymbolicMatrix, Word};
use crate::{Error, Result};

/// A level-indexed family: one template reused everywhere, or a finite list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Levels<T> {
    Stationary(T),
    Explicit(Vec<T>),
}

impl<T> Levels<T> {
    pub fn get(&self, l: usize) -> Option<&T> {
        match self {
            Levels::Stationary(t) => Some(t),
            Levels::Explicit(v) => v.get(l),
        }
    }

    /// `None` means unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            Levels::Stationary(_) => None,
            Levels::Explicit(v) => Some(v.len()),
        }
    }

    /// An explicit family with no stored levels.
    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, Levels::Stationary(_))
    }
}

/// A symbolic matrix system.
#[derive(Clone, PartialEq, Eq)]
pub struct Sms {
    symbol_len: usize,
    levels: Levels<(SymbolicMatrix, BitMatrix)>,
}

impl Sms {
    /// A stationary system; the pair must be square and equally sized.
    pub fn stationary(m: SymbolicMatrix, i: BitMatrix) -> Result<Self> {
        if m.rows() != m.cols() || i.rows() != i.cols() || m.rows() != i.rows() {
            return Err(Error::DimensionMismatch(format!(
                "stationary system needs square equally-sized matrices, got M {}x{}, I {}x{}",
                m.rows(),
                m.cols(),
                i.rows(),
                i.cols()
            )));
        }
        let symbol_len = m.word_len();
        Ok(Sms {
            symbol_len,
            levels: Levels::Stationary((m, i)),
        })
    }

    /// An explicit truncation holding `pairs.len()` matrix levels.
    pub fn explicit(pairs: Vec<(SymbolicMatrix, BitMatrix)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::WindowUnavailable(
                "explicit system needs at least one level".into(),
            ));
        }
        let symbol_len = pairs[0].0.word_len();
        for (l, (m, i)) in pairs.iter().enumerate() {
            if m.rows() != i.rows() || m.cols() != i.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "level {l}: M is {}x{}, I is {}x{}",
                    m.rows(),
                    m.cols(),
                    i.rows(),
                    i.cols()
                )));
            }
            if m.word_len() != symbol_len {
                return Err(Error::ShapeMismatch(format!(
                    "level {l} word length {} differs from {symbol_len}",
                    m.word_len()
                )));
            }
            if l + 1 < pairs.len() && m.cols() != pairs[l + 1].0.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "level {l} has {} columns but level {} has {} rows",
                    m.cols(),
                    l + 1,
                    pairs[l + 1].0.rows()
                )));
            }
        }
        Ok(Sms {
            symbol_len,
            levels: Levels::Explicit(pairs),
        })
    }

    pub fn symbol_len(&self) -> usize {
        self.symbol_len
    }

    pub fn is_stationary(&self) -> bool {
        self.levels.is_stationary()
    }

    /// Number of stored matrix levels; `None` for stationary systems.
    pub fn edge_levels(&self) -> Option<usize> {
        self.levels.len()
    }

    pub fn pair(&self, l: usize) -> Result<(&SymbolicMatrix, &BitMatrix)> {
        self.levels
            .get(l)
            .map(|(m, i)| (m, i))
            .ok_or_else(|| Error::WindowUnavailable(format!("matrix level {l}")))
    }

    pub fn matrix(&self, l: usize) -> Result<&SymbolicMatrix> {
        Ok(self.pair(l)?.0)
    }

    pub fn bit(&self, l: usize) -> Result<&BitMatrix> {
        Ok(self.pair(l)?.1)
    }

    pub fn vertex_count(&self, l: usize) -> Result<usize> {
        match &self.levels {
            Levels::Stationary((m, _)) => Ok(m.rows()),
            Levels::Explicit(v) => {
                if l < v.len() {
                    Ok(v[l].0.rows())
                } else if l == v.len() {
                    Ok(v[l - 1].0.cols())
                } else {
                    Err(Error::WindowUnavailable(format!("vertex level {l}")))
                }
            }
        }
    }

    /// Matrix levels to inspect for exhaustive validation.
    fn check_levels(&self) -> Vec<usize> {
        match &self.levels {
            Levels::Stationary(_) => vec![0],
            Levels::Explicit(v) => (0..v.len()).collect(),
        }
    }

    /// Checks the commutation relation and the `I` row/column conditions at
    /// every available level.
    pub fn validate(&self) -> SmsReport {
        let mut violations = Vec::new();
        for l in self.check_levels() {
            let (_, i_mat) = self.pair(l).expect("checked level exists");
            for col in 0..i_mat.cols() {
                let ones = (0..i_mat.rows())
                    .filter(|&r| i_mat.get(r, col) == 1)
                    .count();
                if ones != 1 {
                    violations.push(SmsViolation::ColumnOnes {
                        level: l,
                        col,
                        ones,
                    });
                }
            }
            for row in 0..i_mat.rows() {
                if (0..i_mat.cols()).all(|c| i_mat.get(row, c) == 0) {
                    violations.push(SmsViolation::RowZero { level: l, row });
                }
            }
        }
        // commutation needs two adjacent levels
        let commutation_levels: Vec<usize> = match &self.levels {
            Levels::Stationary(_) => vec![0],
            Levels::Explicit(v) if v.len() >= 2 => (0..v.len() - 1).collect(),
            Levels::Explicit(_) => vec![],
        };
        for l in commutation_levels {
            let (m_l, i_l) = self.pair(l).expect("level exists");
            let (m_next, i_next) = match &self.levels {
                Levels::Stationary(_) => self.pair(0).expect("level exists"),
                Levels::Explicit(_) => self.pair(l + 1).expect("level exists"),
            };
            let left = match i_l.mul_sym(m_next) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let right = match m_l.mul_bit(i_next) {
                Ok(x) => x,
                Err(_) => continue,
            };
            for r in 0..left.rows() {
                for c in 0..left.cols() {
                    if left.get(r, c) != right.get(r, c) {
                        violations.push(SmsViolation::Commutation {
                            level: l,
                            row: r,
                            col: c,
                            left: left.get(r, c).clone(),
                            right: right.get(r, c).clone(),
                        });
                    }
                }
            }
        }
        SmsReport { violations }
    }

    /// The level-compression higher block: one output level consumes `n`
    /// input levels, `M' = M·I···I` and `I' = I···I`. Symbols are unchanged.
    pub fn higher_block(&self, n: usize) -> Result<Sms> {
        if n == 0 {
            return Err(Error::WindowUnavailable("higher block needs n >= 1".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        match &self.levels {
            Levels::Stationary((m, i)) => {
                let mut m_out = m.clone();
                let mut i_out = i.clone();
                for _ in 1..n {
                    m_out = m_out.mul_bit(i)?;
                    i_out = i_out.mul_checked(i)?;
                }
                Sms::stationary(m_out, i_out)
            }
            Levels::Explicit(v) => {
                let out_levels = v.len() / n;
                if out_levels == 0 {
                    return Err(Error::WindowUnavailable(format!(
                        "higher block with n={n} needs {n} levels, have {}",
                        v.len()
                    )));
                }
                let mut pairs = Vec::with_capacity(out_levels);
                for l in 0..out_levels {
                    let mut m_out = v[n * l].0.clone();
                    let mut i_out = v[n * l].1.clone();
                    for t in 1..n {
                        m_out = m_out.mul_bit(&v[n * l + t].1)?;
                        i_out = i_out.mul_checked(&v[n * l + t].1)?;
                    }
                    pairs.push((m_out, i_out));
                }
                Sms::explicit(pairs)
            }
        }
    }

    /// Exact set of admissible words of `m` symbols read across one window
    /// of the induced lambda-graph system.
    pub fn language(&self, m: usize, base: BasePolicy) -> Result<BTreeSet<Word>> {
        let g = LambdaGraphSystem::from_sms(self)?;
        let l0 = self.resolve_base(m, base)?;
        g.enumerate_words(l0, m)
    }

    fn resolve_base(&self, m: usize, base: BasePolicy) -> Result<usize> {
        match (base, self.edge_levels()) {
            (BasePolicy::Deepest, None) => Ok(0),
            (BasePolicy::Deepest, Some(levels)) => {
                if levels < m {
                    Err(Error::WindowUnavailable(format!(
                        "deepest window of {m} symbols needs {m} levels, have {levels}"
                    )))
                } else {
                    Ok(levels - m)
                }
            }
            (BasePolicy::Level(l0), None) => Ok(l0),
            (BasePolicy::Level(l0), Some(levels)) => {
                if l0 + m > levels {
                    Err(Error::WindowUnavailable(format!(
                        "window [{l0}, {}] exceeds {levels} levels",
                        l0 + m
                    )))
                } else {
                    Ok(l0)
                }
            }
        }
    }

    /// Realized symbols across the checked levels.
    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for l in self.check_levels() {
            if let Ok((m, _)) = self.pair(l) {
                out.extend(m.symbols());
            }
        }
        out
    }
}

impl fmt::Debug for Sms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.levels {
            Levels::Stationary((m, i)) => write!(f, "Sms[stationary M={m} I={i}]"),
            Levels::Explicit(v) => {
                write!(f, "Sms[explicit")?;
                for (l, (m, i)) in v.iter().enumerate() {
                    write!(f, " level {l}: M={m} I={i};")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Window base policy for language enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasePolicy {
    /// The deepest complete window, the most constrained choice.
    Deepest,
    /// An explicit starting level.
    Level(usize),
}

/// Verdict of [`Sms::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmsReport {
    pub violations: Vec<SmsViolation>,
}

impl SmsReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmsViolation {
    /// `I_l M_{l+1}` and `M_l I_{l+1}` differ at an entry.
    Commutation {
        level: usize,
        row: usize,
        col: usize,
        left: FormalSum,
        right: FormalSum,
    },
    /// A column of `I_l` with a number of ones different from one.
    ColumnOnes {
        level: usize,
        col: usize,
        ones: usize,
    },
    /// An all-zero row of `I_l`.
    RowZero { level: usize, row: usize },
}

impl fmt::Display for SmsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmsViolation::Commutation {
                level,
                row,
                col,
                left,
                right,
            } => write!(
                f,
                "commutation fails at level {level} entry ({row},{col}): {left} vs {right}"
            ),
            SmsViolation::ColumnOnes { level, col, ones } => write!(
                f,
                "column {col} of I at level {level} has {ones} ones, expected exactly one"
            ),
            SmsViolation::RowZero { level, row } => {
                write!(f, "row {row} of I at level {level} is all zeros")
            }
        }
    }
}

/// Checks the squares condition: equal vertex sizes and equal `I` matrices
/// at every shared level.
pub fn form_squares(a: &Sms, b: &Sms) -> Result<()> {
    let levels: Vec<usize> = match (a.edge_levels(), b.edge_levels()) {
        (None, None) => vec![0],
        (Some(la), Some(lb)) => (0..la.min(lb)).collect(),
        _ => {
            return Err(Error::SquaresMismatch(
                "one system is stationary, the other explicit".into(),
            ))
        }
    };
    for l in levels {
        let (ma, ia) = a.pair(l)?;
        let (mb, ib) = b.pair(l)?;
        if ma.rows() != mb.rows() || ma.cols() != mb.cols() {
            return Err(Error::SquaresMismatch(format!(
                "level {l}: sizes {}x{} vs {}x{}",
                ma.rows(),
                ma.cols(),
                mb.rows(),
                mb.cols()
            )));
        }
        if ia != ib {
            return Err(Error::SquaresMismatch(format!(
                "level {l}: I matrices differ: {ia} vs {ib}"
            )));
        }
    }
    Ok(())
}

/// The two-factor product system over `(Σ^N)^k (Σ^M)^n`: one output level
/// consumes `k + n` input levels, the first `k` from `n_sys`, the rest from
/// `m_sys`.
pub fn product_system(n_sys: &Sms, m_sys: &Sms, k: usize, n: usize) -> Result<Sms> {
    if k + n == 0 {
        return Err(Error::WindowUnavailable("product needs k + n >= 1".into()));
    }
    form_squares(n_sys, m_sys)?;
    if k == 0 && n == 1 {
        return Ok(m_sys.clone());
    }
    if k == 1 && n == 0 {
        return Ok(n_sys.clone());
    }
    let build_level = |l: usize| -> Result<(SymbolicMatrix, BitMatrix)> {
        let start = l * (k + n);
        let mut m_acc: Option<SymbolicMatrix> = None;
        let mut i_acc: Option<BitMatrix> = None;
        for t in 0..k + n {
            let (factor, i_factor) = if t < k {
                n_sys.pair(start + t)?
            } else {
                m_sys.pair(start + t)?
            };
            m_acc = Some(match m_acc {
                None => factor.clone(),
                Some(acc) => acc.mul(factor)?,
            });
            i_acc = Some(match i_acc {
                None => i_factor.clone(),
                Some(acc) => acc.mul_checked(i_factor)?,
            });
        }
        Ok((m_acc.expect("k+n >= 1"), i_acc.expect("k+n >= 1")))
    };
    match (n_sys.edge_levels(), m_sys.edge_levels()) {
        (None, None) => {
            let (m, i) = build_level(0)?;
            Sms::stationary(m, i)
        }
        (la, lb) => {
            let levels = la.or(lb).expect("at least one explicit");
            let levels = match (la, lb) {
                (Some(x), Some(y)) => x.min(y),
                _ => levels,
            };
            let out_levels = levels / (k + n);
            if out_levels == 0 {
                return Err(Error::WindowUnavailable(format!(
                    "product with k+n={} needs {} levels, have {levels}",
                    k + n,
                    k + n
                )));
            }
            let pairs = (0..out_levels)
                .map(build_level)
                .collect::<Result<Vec<_>>>()?;
            Sms::explicit(pairs)
        }
    }
}

/// A level-indexed family of symbolic matrices each spanning `span` vertex
/// levels: the block at `l` maps level `l` to level `l + span`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanBlocks {
    pub span: usize,
    pub blocks: Levels<SymbolicMatrix>,
}

impl SpanBlocks {
    pub fn get(&self, l: usize) -> Result<&SymbolicMatrix> {
        self.blocks
            .get(l)
            .ok_or_else(|| Error::WindowUnavailable(format!("span block at level {l}")))
    }
}

/// The power-product system built from span blocks and a base system: one
/// output level consumes `k·span + n` input levels, first `k` blocks, then
/// `n` base factors; its `I` is the product of all consumed base `I`s.
pub fn power_product(p: &SpanBlocks, m_sys: &Sms, k: usize, n: usize) -> Result<Sms> {
    if n == 0 {
        return Err(Error::WindowUnavailable(
            "power product needs n >= 1".into(),
        ));
    }
    let span = p.span;
    let consumed = k * span + n;
    let build_level = |l: usize| -> Result<(SymbolicMatrix, BitMatrix)> {
        let start = l * consumed;
        let mut m_acc: Option<SymbolicMatrix> = None;
        for j in 0..k {
            let block = p.get(start + j * span)?;
            if block.rows() != m_sys.vertex_count(start + j * span)?
                || block.cols() != m_sys.vertex_count(start + (j + 1) * span)?
            {
                return Err(Error::DimensionMismatch(format!(
                    "span block at level {} is {}x{}, expected {}x{}",
                    start + j * span,
                    block.rows(),
                    block.cols(),
                    m_sys.vertex_count(start + j * span)?,
                    m_sys.vertex_count(start + (j + 1) * span)?
                )));
            }
            m_acc = Some(match m_acc {
                None => block.clone(),
                Some(acc) => acc.mul(block)?,
            });
        }
        for t in 0..n {
            let factor = m_sys.matrix(start + k * span + t)?;
            m_acc = Some(match m_acc {
                None => factor.clone(),
                Some(acc) => acc.mul(factor)?,
            });
        }
        let mut i_acc: Option<BitMatrix> = None;
        for t in 0..consumed {
            let i_factor = m_sys.bit(start + t)?;
            i_acc = Some(match i_acc {
                None => i_factor.clone(),
                Some(acc) => acc.mul_checked(i_factor)?,
            });
        }
        Ok((m_acc.expect("n >= 1"), i_acc.expect("consumed >= 1")))
    };
    match (p.blocks.len(), m_sys.edge_levels()) {
        (None, None) => {
            let (m, i) = build_level(0)?;
            Sms::stationary(m, i)
        }
        (la, lb) => {
            // block list counts start levels; base levels bound the window
            let available = match (la, lb) {
                (Some(x), Some(y)) => (x + span - 1).min(y),
                (Some(x), None) => x + span - 1,
                (None, Some(y)) => y,
                (None, None) => unreachable!(),
            };
            let out_levels = available / consumed;
            if out_levels == 0 {
                return Err(Error::WindowUnavailable(format!(
                    "power product consumes {consumed} levels per output level, have {available}"
                )));
            }
            let pairs = (0..out_levels)
                .map(build_level)
                .collect::<Result<Vec<_>>>()?;
            Sms::explicit(pairs)
        }
    }
}

/// Outcome of a language comparison, with up to ten witness words each way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageComparison {
    pub equal: bool,
    pub only_a: Vec<Word>,
    pub only_b: Vec<Word>,
}

/// Compares the length-`m` languages; `recode` rewrites `a`'s words first.
pub fn compare_languages(
    a: &Sms,
    b: &Sms,
    m: usize,
    recode: Option<&Specification>,
) -> Result<LanguageComparison> {
    let lang_a_raw = a.language(m, BasePolicy::Deepest)?;
    let lang_b = b.language(m, BasePolicy::Deepest)?;
    let mut lang_a = BTreeSet::new();
    for w in lang_a_raw {
        match recode {
            Some(spec) => {
                lang_a.insert(spec.apply_word(&w)?);
            }
            None => {
                lang_a.insert(w);
            }
        }
    }
    let only_a: Vec<Word> = lang_a.difference(&lang_b).take(10).cloned().collect();
    let only_b: Vec<Word> = lang_b.difference(&lang_a).take(10).cloned().collect();
    Ok(LanguageComparison {
        equal: only_a.is_empty() && only_b.is_empty(),
        only_a,
        only_b,
    })
}

/// Isomorphism search result; `kappa` and `perms` witness a positive answer.
#[derive(Clone, Debug)]
pub struct IsoVerdict {
    pub isomorphic: bool,
    pub kappa: Option<Specification>,
    pub perms: Option<Vec<Vec<usize>>>,
    pub reason: Option<String>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    fn heap(k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(current.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, current, out);
            if k.is_multiple_of(2) {
                current.swap(i, k - 1);
            } else {
                current.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut current, &mut out);
    out.sort();
    out.dedup();
    out
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

fn bit_permute(i: &BitMatrix, row_perm: &[usize], col_perm_inv: &[usize]) -> BitMatrix {
    let mut bits = Vec::with_capacity(i.rows() * i.cols());
    for r in 0..i.rows() {
        for c in 0..i.cols() {
            bits.push(i.get(row_perm[r], col_perm_inv[c]));
        }
    }
    BitMatrix::new(i.rows(), i.cols(), bits).expect("permutation preserves shape")
}

/// Searches for a specification `κ` and permutation matrices `S_l` with
/// `S_l M_l ≃^κ M'_l S_{l+1}` and `S_l I_l = I'_l S_{l+1}` at every level.
///
/// For stationary inputs the search is restricted to level-uniform
/// witnesses (one permutation reused at every level); explicit inputs get a
/// full per-level search.
pub fn isomorphic(a: &Sms, b: &Sms, max_size: usize) -> Result<IsoVerdict> {
    let no = |reason: &str| IsoVerdict {
        isomorphic: false,
        kappa: None,
        perms: None,
        reason: Some(reason.to_string()),
    };
    if a.is_stationary() != b.is_stationary() {
        return Ok(no("one system is stationary, the other explicit"));
    }
    if a.symbol_len() != b.symbol_len() {
        return Ok(no("symbol lengths differ"));
    }
    let levels = match (a.edge_levels(), b.edge_levels()) {
        (None, None) => 1,
        (Some(x), Some(y)) => {
            if x != y {
                return Ok(no("level counts differ"));
            }
            x
        }
        _ => unreachable!(),
    };
    let mut sizes = Vec::new();
    for l in 0..=levels {
        let (sa, sb) = match (a.vertex_count(l), b.vertex_count(l)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => break,
        };
        if sa != sb {
            return Ok(no(&format!(
                "vertex counts differ at level {l}: {sa} vs {sb}"
            )));
        }
        if sa > max_size {
            return Err(Error::SizeLimit(format!(
                "level {l} has {sa} vertices, limit {max_size}"
            )));
        }
        sizes.push(sa);
    }
    let syms_a: Vec<Sym> = a.symbols().into_iter().collect();
    let syms_b: Vec<Sym> = b.symbols().into_iter().collect();
    if syms_a.len() != syms_b.len() {
        return Ok(no("symbol counts differ"));
    }
    if syms_a.len() > max_size {
        return Err(Error::SizeLimit(format!(
            "{} symbols, limit {max_size}",
            syms_a.len()
        )));
    }
    // candidate symbol bijections
    let mut kappas = Vec::new();
    for perm in permutations(syms_b.len()) {
        let pairs: Vec<(Word, Word)> = syms_a
            .iter()
            .enumerate()
            .map(|(idx, s)| {
                (
                    Word::single(s.clone()),
                    Word::single(syms_b[perm[idx]].clone()),
                )
            })
            .collect();
        kappas.push(Specification::new(pairs).expect("bijective by construction"));
    }

    let check_level =
        |kappa: &Specification, l: usize, s_l: &[usize], s_next: &[usize]| -> Result<bool> {
            let (ma, ia) = a.pair(l)?;
            let (mb, ib) = b.pair(l)?;
            let left = ma.permute_rows(s_l);
            let right = mb.permute_cols(&invert_perm(s_next));
            if !kappa.check_equivalence(&left, &right)?.holds() {
                return Ok(false);
            }
            let ileft = bit_permute(ia, s_l, &(0..ia.cols()).collect::<Vec<_>>());
            let iright = bit_permute(
                ib,
                &(0..ib.rows()).collect::<Vec<_>>(),
                &invert_perm(s_next),
            );
            Ok(ileft == iright)
        };

    if a.is_stationary() {
        let n = sizes[0];
        for kappa in &kappas {
            for perm in permutations(n) {
                if check_level(kappa, 0, &perm, &perm)? {
                    return Ok(IsoVerdict {
                        isomorphic: true,
                        kappa: Some(kappa.clone()),
                        perms: Some(vec![perm]),
                        reason: None,
                    });
                }
            }
        }
        return Ok(no("no uniform witness found"));
    }

    // explicit: depth-first search over per-level permutations
    type LevelCheck<'a> = &'a dyn Fn(&Specification, usize, &[usize], &[usize]) -> Result<bool>;
    fn search(
        kappa: &Specification,
        sizes: &[usize],
        chosen: &mut Vec<Vec<usize>>,
        check: LevelCheck<'_>,
    ) -> Result<bool> {
        let l = chosen.len();
        if l == sizes.len() {
            return Ok(true);
        }
        for perm in permutations(sizes[l]) {
            if l > 0 && !check(kappa, l - 1, &chosen[l - 1].clone(), &perm)? {
                continue;
            }
            chosen.push(perm);
            if search(kappa, sizes, chosen, check)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
    for kappa in &kappas {
        let mut chosen = Vec::new();
        if search(kappa, &sizes, &mut chosen, &check_level)? {
            return Ok(IsoVerdict {
                isomorphic: true,
                kappa: Some(kappa.clone()),
                perms: Some(chosen),
                reason: None,
            });
        }
    }
    Ok(no("no witness found"))
}

/// Brute-force language oracle: all strings over `symbols` of length `m`
/// filtered by path existence in the matrix window starting at `base`.
///
/// Independent of the lambda-graph enumeration path: membership is decided
/// by direct vector-matrix reachability over the stored matrices.
pub fn brute_force_language(
    sys: &Sms,
    symbols: &[Sym],
    m: usize,
    base: usize,
) -> Result<BTreeSet<Word>> {
    let mut all_words = vec![Word::empty()];
    for _ in 0..m {
        let mut next = Vec::new();
        for w in &all_words {
            for s in symbols {
                next.push(w.concat(&Word::single(s.clone())));
            }
        }
        all_words = next;
    }
    let mut out = BTreeSet::new();
    for w in all_words {
        if word_admissible(sys, &w, base)? {
            out.insert(w);
        }
    }
    Ok(out)
}

fn word_admissible(sys: &Sms, w: &Word, base: usize) -> Result<bool> {
    let m = w.len() / sys.symbol_len().max(1);
    let mut reachable: BTreeSet<usize> = (0..sys.vertex_count(base)?).collect();
    for (step, chunk) in w.chunks(sys.symbol_len())?.iter().enumerate() {
        let matrix = sys.matrix(base + step)?;
        let mut next = BTreeSet::new();
        for &v in &reachable {
            for j in 0..matrix.cols() {
                if matrix.get(v, j).terms().contains(chunk) {
                    next.insert(j);
                }
            }
        }
        if next.is_empty() {
            return Ok(false);
        }
        reachable = next;
        let _ = m;
    }
    Ok(true)
}

/// Counts the realized length-`m` language, convenience over [`Sms::language`].
pub fn language_count(sys: &Sms, m: usize) -> Result<usize> {
    Ok(sys.language(m, BasePolicy::Deepest)?.len())
}

/// Builds a map from each symbol to its count of occurrences in the level-0
/// matrix; handy for witness reports.
pub fn symbol_usage(sys: &Sms) -> Result<BTreeMap<Sym, usize>> {
    let mut out = BTreeMap::new();
    let (m, _) = sys.pair(0)?;
    for e in m.entries() {
        for t in e.terms() {
            for s in t.syms() {
                *out.entry(s.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(words: &[&str]) -> FormalSum {
        FormalSum::from_words(words.iter().map(|w| Word::from_chars(w)).collect())
    }

    pub(crate) fn full_shift() -> Sms {
        let m = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "b"])]).unwrap();
        let i = BitMatrix::identity(1);
        Sms::stationary(m, i).unwrap()
    }

    pub(crate) fn golden_mean() -> Sms {
        let m = SymbolicMatrix::new(
            2,
            2,
            1,
            vec![sum(&["a"]), sum(&["a"]), sum(&["b"]), FormalSum::zero()],
        )
        .unwrap();
        Sms::stationary(m, BitMatrix::identity(2)).unwrap()
    }

    #[test]
    fn examples_validate() {
        assert!(full_shift().validate().is_valid());
        assert!(golden_mean().validate().is_valid());
    }

    #[test]
    fn bad_i_matrix_rejected() {
        let m = golden_mean().matrix(0).unwrap().clone();
        let i = BitMatrix::new(2, 2, vec![1, 1, 0, 0]).unwrap();
        let sys = Sms::stationary(m, i).unwrap();
        let report = sys.validate();
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SmsViolation::RowZero { row: 1, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SmsViolation::Commutation { .. })));
    }

    #[test]
    fn broken_commutation_in_explicit_system() {
        // two levels of the full shift, second level relabeled: I M1 != M0 I
        let m0 = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "b"])]).unwrap();
        let m1 = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "a"])]).unwrap();
        let i = BitMatrix::identity(1);
        let sys = Sms::explicit(vec![(m0, i.clone()), (m1, i)]).unwrap();
        let report = sys.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SmsViolation::Commutation { level: 0, .. })));
    }

    #[test]
    fn higher_block_identities() {
        let gm = golden_mean();
        assert_eq!(gm.higher_block(1).unwrap(), gm);
        // with I = identity the compression changes nothing
        assert_eq!(gm.higher_block(2).unwrap(), gm);
        let fs = full_shift();
        assert_eq!(fs.higher_block(2).unwrap(), fs);
    }

    #[test]
    fn higher_block_needs_levels() {
        let m = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a"])]).unwrap();
        let sys = Sms::explicit(vec![(m, BitMatrix::identity(1))]).unwrap();
        assert!(sys.higher_block(2).is_err());
    }

    #[test]
    fn language_counts_follow_fibonacci() {
        let gm = golden_mean();
        let expect = [2usize, 3, 5, 8, 13];
        for (m, want) in (1..=5).zip(expect) {
            assert_eq!(language_count(&gm, m).unwrap(), want, "length {m}");
        }
        assert_eq!(
            gm.language(2, BasePolicy::Deepest).unwrap(),
            [
                Word::from_chars("aa"),
                Word::from_chars("ab"),
                Word::from_chars("ba")
            ]
            .into_iter()
            .collect()
        );
    }

    #[test]
    fn full_shift_language_is_exhaustive() {
        for m in 0..=10 {
            assert_eq!(language_count(&full_shift(), m).unwrap(), 1 << m);
        }
    }

    #[test]
    fn brute_force_oracle_agrees() {
        let gm = golden_mean();
        let syms: Vec<Sym> = [Sym::new("a"), Sym::new("b")].to_vec();
        for m in 1..=5 {
            let fast = gm.language(m, BasePolicy::Deepest).unwrap();
            let slow = brute_force_language(&gm, &syms, m, 0).unwrap();
            assert_eq!(fast, slow, "length {m}");
        }
    }

    #[test]
    fn language_monotonic_in_level() {
        // deeper windows are at least as constrained
        let gm = golden_mean();
        let fs = full_shift();
        for sys in [&gm, &fs] {
            for m in 1..=6 {
                let shallow = sys.language(m, BasePolicy::Level(0)).unwrap();
                let deep = sys.language(m, BasePolicy::Level(3)).unwrap();
                assert!(deep.is_subset(&shallow));
            }
        }
    }

    #[test]
    fn compare_languages_reports_witnesses() {
        let gm = golden_mean();
        let fs = full_shift();
        let same = compare_languages(&gm, &gm, 4, None).unwrap();
        assert!(same.equal);
        let diff = compare_languages(&fs, &gm, 2, None).unwrap();
        assert!(!diff.equal);
        assert_eq!(diff.only_a, vec![Word::from_chars("bb")]);
    }

    #[test]
    fn product_system_degenerate_cases() {
        let fs = full_shift();
        assert_eq!(product_system(&fs, &fs, 0, 1).unwrap(), fs);
        assert_eq!(product_system(&fs, &fs, 1, 0).unwrap(), fs);
    }

    #[test]
    fn product_with_scalar_system() {
        // P = [I] against the full shift: k=1, n=1 gives [Ia+Ib]
        let p = Sms::stationary(
            SymbolicMatrix::new(1, 1, 1, vec![sum(&["I"])]).unwrap(),
            BitMatrix::identity(1),
        )
        .unwrap();
        let fs = full_shift();
        let prod = product_system(&p, &fs, 1, 1).unwrap();
        assert_eq!(prod.matrix(0).unwrap().get(0, 0), &sum(&["Ia", "Ib"]));
        assert!(prod.validate().is_valid());
    }

    #[test]
    fn squares_precondition_enforced() {
        let fs = full_shift();
        let gm = golden_mean();
        assert!(matches!(
            product_system(&fs, &gm, 1, 1),
            Err(Error::SquaresMismatch(_))
        ));
    }

    #[test]
    fn power_product_cases() {
        let fs = full_shift();
        let block = SymbolicMatrix::new(1, 1, 1, vec![sum(&["I"])]).unwrap();
        let blocks = SpanBlocks {
            span: 1,
            blocks: Levels::Stationary(block),
        };
        // k=0, n=1 gives the base system back
        assert_eq!(power_product(&blocks, &fs, 0, 1).unwrap(), fs);
        // k=1, n=1 matches the plain product
        let kn11 = power_product(&blocks, &fs, 1, 1).unwrap();
        assert_eq!(kn11.matrix(0).unwrap().get(0, 0), &sum(&["Ia", "Ib"]));
        // k=2, n=1 stacks two blocks
        let kn21 = power_product(&blocks, &fs, 2, 1).unwrap();
        assert_eq!(kn21.matrix(0).unwrap().get(0, 0), &sum(&["IIa", "IIb"]));
        assert!(kn21.validate().is_valid());
    }

    #[test]
    fn isomorphic_to_itself() {
        let gm = golden_mean();
        let v = isomorphic(&gm, &gm, 8).unwrap();
        assert!(v.isomorphic);
        assert_eq!(v.perms.unwrap()[0], vec![0, 1]);
    }

    #[test]
    fn isomorphic_to_row_permuted_copy() {
        let gm = golden_mean();
        let m = gm.matrix(0).unwrap();
        // conjugate by the transposition: swap rows and columns
        let perm = vec![1usize, 0];
        let permuted = m.permute_rows(&perm).permute_cols(&perm);
        let other = Sms::stationary(permuted, BitMatrix::identity(2)).unwrap();
        let v = isomorphic(&gm, &other, 8).unwrap();
        assert!(v.isomorphic);
        let w = v.perms.unwrap();
        assert_eq!(w[0], vec![1, 0]);
    }

    #[test]
    fn isomorphic_explicit_systems_with_level_permutations() {
        let gm = golden_mean();
        let m = gm.matrix(0).unwrap().clone();
        let i = gm.bit(0).unwrap().clone();
        let a = Sms::explicit(vec![(m.clone(), i.clone()), (m.clone(), i.clone())]).unwrap();
        // permute the middle vertex level: S_1 is the transposition
        let perm = vec![1usize, 0];
        let m0 = m.permute_cols(&perm);
        let m1 = m.permute_rows(&perm);
        let bits = |mat: &BitMatrix| -> Vec<u8> {
            let mut v = Vec::new();
            for r in 0..mat.rows() {
                for c in 0..mat.cols() {
                    v.push(mat.get(r, c));
                }
            }
            v
        };
        let i0 = {
            let raw = bits(&i);
            // swap the columns of I at level 0
            BitMatrix::new(2, 2, vec![raw[1], raw[0], raw[3], raw[2]]).unwrap()
        };
        let i1 = {
            let raw = bits(&i);
            BitMatrix::new(2, 2, vec![raw[2], raw[3], raw[0], raw[1]]).unwrap()
        };
        let b = Sms::explicit(vec![(m0, i0), (m1, i1)]).unwrap();
        let v = isomorphic(&a, &b, 8).unwrap();
        assert!(v.isomorphic, "{:?}", v.reason);
        let perms = v.perms.unwrap();
        assert_eq!(perms.len(), 3);
        assert_eq!(perms[1], vec![1, 0]);
    }

    #[test]
    fn isomorphism_shape_mismatch() {
        let v = isomorphic(&full_shift(), &golden_mean(), 8).unwrap();
        assert!(!v.isomorphic);
        assert!(v.reason.unwrap().contains("vertex counts differ"));
    }

    #[test]
    fn size_limit_enforced() {
        let gm = golden_mean();
        assert!(matches!(isomorphic(&gm, &gm, 1), Err(Error::SizeLimit(_))));
    }
}
