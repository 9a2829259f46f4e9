//! Textile systems on lambda-graph systems.
//!
//! A textile system couples a squares system `K` with a horizontal system
//! `M` and a vertical system `N` through a level-preserving homomorphism `p`
//! and a one-shift homomorphism `q`, subject to six compatibility
//! conditions. Each `K`-edge is one labeled square: its source and terminal
//! are vertical edges, its `p`- and `q`-images the top and bottom
//! horizontal edges.
//!
//! Infinite weaves are replaced everywhere by finite [`WeavePatch`]es plus
//! the extension search; no infinite configuration object exists. The
//! one-block codes reading top and bottom labels are operationalized as
//! bounded-window [`Decoder`]s: a failure at the window bound is reported as
//! not decodable within the window, never as a proof of non-injectivity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lgs::{LambdaGraphSystem, LgsEdge};
use crate::sms::{form_squares, Sms};
use crate::symbolic::{Specification, Word};
use crate::{Error, Result};

/// Per-level index maps of a homomorphism component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelMaps {
    Stationary(Vec<usize>),
    Explicit(Vec<Vec<usize>>),
}

impl LevelMaps {
    pub fn at(&self, l: usize) -> Result<&[usize]> {
        match self {
            LevelMaps::Stationary(v) => Ok(v),
            LevelMaps::Explicit(vs) => vs
                .get(l)
                .map(|v| v.as_slice())
                .ok_or_else(|| Error::WindowUnavailable(format!("hom map level {l}"))),
        }
    }
}

/// A lambda-graph system homomorphism: vertex maps `V^K_l -> V^M_l`, edge
/// maps `E^K_l -> E^M_l`, and a symbol map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphHom {
    pub v: LevelMaps,
    pub e: LevelMaps,
    pub sym: BTreeMap<Word, Word>,
}

/// A one-shift homomorphism: vertex maps `V^K_l -> V^M_{l+1}`, edge maps
/// `E^K_l -> E^M_{l+1}`, and a symbol map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneShiftHom {
    pub v: LevelMaps,
    pub e: LevelMaps,
    pub sym: BTreeMap<Word, Word>,
}

/// The four label components of one square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadLabels {
    pub left: Word,
    pub right: Word,
    pub upper: Word,
    pub lower: Word,
}

/// A textile system on lambda-graph systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextileSystem {
    pub k: LambdaGraphSystem,
    pub m: LambdaGraphSystem,
    pub n: LambdaGraphSystem,
    pub p: GraphHom,
    pub q: OneShiftHom,
    /// Bijection between realized label quadruples and the `K` labels.
    pub label_bijection: Specification,
}

fn placeholder_bijection() -> Specification {
    Specification::new(vec![(Word::from_chars("x"), Word::from_chars("x"))])
        .expect("single pair is bijective")
}

impl TextileSystem {
    pub fn is_stationary(&self) -> bool {
        self.k.is_stationary() && self.m.is_stationary() && self.n.is_stationary()
    }

    /// Usable `K` edge levels; `None` for stationary systems.
    pub fn level_count(&self) -> Option<usize> {
        let mut bound: Option<usize> = None;
        let mut shrink = |x: Option<usize>| {
            if let Some(x) = x {
                bound = Some(bound.map_or(x, |b| b.min(x)));
            }
        };
        shrink(self.k.edge_levels());
        shrink(self.m.edge_levels().map(|l| l.saturating_sub(1)));
        shrink(self.n.edge_levels().map(|l| l.saturating_sub(1)));
        bound
    }

    fn check_levels(&self) -> Vec<usize> {
        match self.level_count() {
            None => vec![0],
            Some(l) => (0..l).collect(),
        }
    }

    /// The quadruple of labels carried by one `K`-edge, flattened in the
    /// order left, right, upper, lower.
    pub fn quad_word(&self, l: usize, edge: usize) -> Result<Word> {
        let e = &self.k.edges_at(l)?[edge];
        let left = &self.n.edges_at(l)?[e.src].label;
        let right = &self.n.edges_at(l + 1)?[e.dst].label;
        let upper = &self.m.edges_at(l)?[self.p.e.at(l)?[edge]].label;
        let lower = &self.m.edges_at(l + 1)?[self.q.e.at(l)?[edge]].label;
        Ok(left.concat(right).concat(upper).concat(lower))
    }

    /// Recovers the four label parts of a `K` symbol through the stored
    /// bijection.
    pub fn label_parts(&self, k_label: &Word) -> Result<QuadLabels> {
        let quad = self
            .label_bijection
            .pairs()
            .find(|(_, to)| *to == k_label)
            .map(|(from, _)| from.clone())
            .ok_or_else(|| {
                Error::Inadmissible(format!("no quadruple registered for label {k_label}"))
            })?;
        let nl = self.n.symbol_len();
        let ml = self.m.symbol_len();
        Ok(QuadLabels {
            left: quad.slice(0, nl),
            right: quad.slice(nl, 2 * nl),
            upper: quad.slice(2 * nl, 2 * nl + ml),
            lower: quad.slice(2 * nl + ml, 2 * nl + 2 * ml),
        })
    }

    /// Checks all six defining conditions plus the homomorphism axioms at
    /// every available level. Internal computation failures (for example a
    /// missing edge surjection) are reported as violations, never panics.
    pub fn validate(&self) -> TextileReport {
        let mut violations = Vec::new();
        {
            let mut push = |cond: TextileCondition, level: usize, detail: String| {
                violations.push(TextileViolation {
                    condition: cond,
                    level,
                    detail,
                });
            };
            for l in self.check_levels() {
                if let Err(e) = self.validate_level(l, &mut push) {
                    push(TextileCondition::Structure, l, e.to_string());
                }
            }
        }
        // the label bijection must be single-valued both ways across levels
        let mut quad_to_label: BTreeMap<Word, Word> = BTreeMap::new();
        let mut label_to_quad: BTreeMap<Word, Word> = BTreeMap::new();
        for l in self.check_levels() {
            let edge_count = match self.k.edges_at(l) {
                Ok(es) => es.len(),
                Err(_) => continue,
            };
            for idx in 0..edge_count {
                let (quad, label) = match (self.quad_word(l, idx), self.k.edges_at(l)) {
                    (Ok(q), Ok(es)) => (q, es[idx].label.clone()),
                    _ => continue,
                };
                if let Some(prev) = quad_to_label.get(&quad) {
                    if *prev != label {
                        violations.push(TextileViolation {
                            condition: TextileCondition::LabelBijection,
                            level: l,
                            detail: format!("quadruple {quad} labels both {prev} and {label}"),
                        });
                    }
                } else {
                    quad_to_label.insert(quad.clone(), label.clone());
                }
                if let Some(prev) = label_to_quad.get(&label) {
                    if *prev != quad {
                        violations.push(TextileViolation {
                            condition: TextileCondition::LabelBijection,
                            level: l,
                            detail: format!("label {label} stands for both {prev} and {quad}"),
                        });
                    }
                } else {
                    label_to_quad.insert(label.clone(), quad.clone());
                }
                match self.label_bijection.get(&quad) {
                    Some(mapped) if *mapped == label => {}
                    Some(mapped) => violations.push(TextileViolation {
                        condition: TextileCondition::LabelBijection,
                        level: l,
                        detail: format!(
                            "stored bijection maps {quad} to {mapped}, edges carry {label}"
                        ),
                    }),
                    None => violations.push(TextileViolation {
                        condition: TextileCondition::LabelBijection,
                        level: l,
                        detail: format!("quadruple {quad} missing from stored bijection"),
                    }),
                }
            }
        }
        TextileReport { violations }
    }

    fn validate_level(
        &self,
        l: usize,
        push: &mut dyn FnMut(TextileCondition, usize, String),
    ) -> Result<()> {
        // (1) M and N form squares
        let vm = self.m.vertex_count(l)?;
        let vn = self.n.vertex_count(l)?;
        if vm != vn {
            push(
                TextileCondition::Squares,
                l,
                format!("vertex counts differ: {vm} vs {vn}"),
            );
        }
        if self.m.iota_at(l)? != self.n.iota_at(l)? {
            push(
                TextileCondition::Squares,
                l,
                "iota maps of the horizontal and vertical systems differ".into(),
            );
        }
        // (2) V^K_l = E^N_{l,l+1}
        let kv = self.k.vertex_count(l)?;
        let ne = self.n.edges_at(l)?.len();
        if kv != ne {
            push(
                TextileCondition::VertexIdentification,
                l,
                format!("{kv} K-vertices against {ne} N-edges"),
            );
        }
        // (3) iota^K = phi^N one level up
        match self.n.phi_level(l + 1) {
            Ok(phi) => {
                if self.k.iota_at(l)? != phi.as_slice() {
                    push(
                        TextileCondition::IotaIsPhi,
                        l,
                        "iota of K differs from the edge surjection of N".into(),
                    );
                }
            }
            Err(e) => push(TextileCondition::IotaIsPhi, l, e.to_string()),
        }
        // (4) p^V = source map of N, q^V = terminal map of N
        let n_edges = self.n.edges_at(l)?;
        let pv = self.p.v.at(l)?;
        let qv = self.q.v.at(l)?;
        for (v, f) in n_edges.iter().enumerate() {
            if pv.get(v) != Some(&f.src) {
                push(
                    TextileCondition::HomVertexMaps,
                    l,
                    format!("p^V({v}) is not the source of N-edge {v}"),
                );
            }
            if qv.get(v) != Some(&f.dst) {
                push(
                    TextileCondition::HomVertexMaps,
                    l,
                    format!("q^V({v}) is not the terminal of N-edge {v}"),
                );
            }
        }
        // (5) the index quadruple determines the edge
        let k_edges = self.k.edges_at(l)?;
        let pe = self.p.e.at(l)?;
        let qe = self.q.e.at(l)?;
        let mut seen: BTreeMap<(usize, usize, usize, usize), usize> = BTreeMap::new();
        for (idx, e) in k_edges.iter().enumerate() {
            let key = (e.src, e.dst, pe[idx], qe[idx]);
            if let Some(prev) = seen.insert(key, idx) {
                push(
                    TextileCondition::EdgeDetermined,
                    l,
                    format!("edges {prev} and {idx} share the same square"),
                );
            }
        }
        // p is a graph homomorphism
        let m_edges_l = self.m.edges_at(l)?;
        let m_edges_next = self.m.edges_at(l + 1)?;
        let pv_next = self.p.v.at(l + 1)?;
        let qv_next = self.q.v.at(l + 1)?;
        for (idx, e) in k_edges.iter().enumerate() {
            let img = &m_edges_l[pe[idx]];
            if img.src != pv[e.src] {
                push(
                    TextileCondition::PHomomorphism,
                    l,
                    format!("edge {idx}: source of p-image differs from p^V of source"),
                );
            }
            if img.dst != pv_next[e.dst] {
                push(
                    TextileCondition::PHomomorphism,
                    l,
                    format!("edge {idx}: terminal of p-image differs from p^V of terminal"),
                );
            }
            match self.p.sym.get(&e.label) {
                Some(s) if *s == img.label => {}
                _ => push(
                    TextileCondition::PHomomorphism,
                    l,
                    format!("edge {idx}: symbol map disagrees with p-image label"),
                ),
            }
        }
        // q is a one-shift homomorphism
        for (idx, e) in k_edges.iter().enumerate() {
            let img = &m_edges_next[qe[idx]];
            if img.src != qv[e.src] {
                push(
                    TextileCondition::QHomomorphism,
                    l,
                    format!("edge {idx}: source of q-image differs from q^V of source"),
                );
            }
            if img.dst != qv_next[e.dst] {
                push(
                    TextileCondition::QHomomorphism,
                    l,
                    format!("edge {idx}: terminal of q-image differs from q^V of terminal"),
                );
            }
            match self.q.sym.get(&e.label) {
                Some(s) if *s == img.label => {}
                _ => push(
                    TextileCondition::QHomomorphism,
                    l,
                    format!("edge {idx}: symbol map disagrees with q-image label"),
                ),
            }
        }
        // iota-compatibility of the vertex maps
        let iota_k = self.k.iota_at(l)?;
        let iota_m = self.m.iota_at(l)?;
        for v in 0..self.k.vertex_count(l + 1)? {
            if pv[iota_k[v]] != iota_m[pv_next[v]] {
                push(
                    TextileCondition::PHomomorphism,
                    l,
                    format!("p^V is not iota-compatible at vertex {v}"),
                );
            }
        }
        let iota_m_next = self.m.iota_at(l + 1)?;
        for v in 0..self.k.vertex_count(l + 1)? {
            if qv[iota_k[v]] != iota_m_next[qv_next[v]] {
                push(
                    TextileCondition::QHomomorphism,
                    l,
                    format!("q^V is not iota-compatible at vertex {v}"),
                );
            }
        }
        Ok(())
    }

    /// Normalizes the symbol tables and the label bijection to exactly the
    /// realized pairs.
    pub fn canonical_form(&self) -> Result<TextileSystem> {
        let mut p_sym = BTreeMap::new();
        let mut q_sym = BTreeMap::new();
        let mut bij = Vec::new();
        let mut seen = BTreeSet::new();
        for l in self.check_levels() {
            let k_edges = self.k.edges_at(l)?;
            let pe = self.p.e.at(l)?;
            let qe = self.q.e.at(l)?;
            for (idx, e) in k_edges.iter().enumerate() {
                p_sym.insert(e.label.clone(), self.m.edges_at(l)?[pe[idx]].label.clone());
                q_sym.insert(
                    e.label.clone(),
                    self.m.edges_at(l + 1)?[qe[idx]].label.clone(),
                );
                let quad = self.quad_word(l, idx)?;
                if seen.insert(quad.clone()) {
                    bij.push((quad, e.label.clone()));
                }
            }
        }
        Ok(TextileSystem {
            k: self.k.clone(),
            m: self.m.clone(),
            n: self.n.clone(),
            p: GraphHom {
                v: self.p.v.clone(),
                e: self.p.e.clone(),
                sym: p_sym,
            },
            q: OneShiftHom {
                v: self.q.v.clone(),
                e: self.q.e.clone(),
                sym: q_sym,
            },
            label_bijection: Specification::new(bij)?,
        })
    }

    /// The dual: the same squares read sideways, with the horizontal and
    /// vertical systems exchanged.
    pub fn dual(&self) -> Result<TextileSystem> {
        type LevelData = (
            Vec<LgsEdge>,
            Vec<usize>,
            Vec<usize>,
            Vec<usize>,
            Vec<usize>,
            Vec<usize>,
        );
        let build_level = |l: usize| -> Result<LevelData> {
            let k_edges = self.k.edges_at(l)?;
            let pe = self.p.e.at(l)?;
            let qe = self.q.e.at(l)?;
            let mut edges = Vec::with_capacity(k_edges.len());
            for (idx, e) in k_edges.iter().enumerate() {
                edges.push(LgsEdge {
                    src: pe[idx],
                    dst: qe[idx],
                    label: e.label.clone(),
                });
            }
            let iota = self.m.phi_level(l + 1)?;
            let m_edges = self.m.edges_at(l)?;
            let p_v: Vec<usize> = m_edges.iter().map(|f| f.src).collect();
            let q_v: Vec<usize> = m_edges.iter().map(|f| f.dst).collect();
            let p_e: Vec<usize> = k_edges.iter().map(|e| e.src).collect();
            let q_e: Vec<usize> = k_edges.iter().map(|e| e.dst).collect();
            Ok((edges, iota, p_v, q_v, p_e, q_e))
        };
        let dual = if self.is_stationary() {
            let (edges, iota, p_v, q_v, p_e, q_e) = build_level(0)?;
            let k_star = LambdaGraphSystem::stationary(
                self.k.symbol_len(),
                self.m.edges_at(0)?.len(),
                edges,
                iota,
            )?;
            TextileSystem {
                k: k_star,
                m: self.n.clone(),
                n: self.m.clone(),
                p: GraphHom {
                    v: LevelMaps::Stationary(p_v),
                    e: LevelMaps::Stationary(p_e),
                    sym: BTreeMap::new(),
                },
                q: OneShiftHom {
                    v: LevelMaps::Stationary(q_v),
                    e: LevelMaps::Stationary(q_e),
                    sym: BTreeMap::new(),
                },
                label_bijection: placeholder_bijection(),
            }
        } else {
            let levels = self
                .level_count()
                .filter(|&l| l > 0)
                .ok_or_else(|| Error::WindowUnavailable("no usable levels".into()))?;
            let mut vertex_counts = Vec::with_capacity(levels + 1);
            for l in 0..=levels {
                vertex_counts.push(self.m.edges_at(l)?.len());
            }
            let mut edges = Vec::new();
            let mut iota = Vec::new();
            let mut p_v = Vec::new();
            let mut q_v = Vec::new();
            let mut p_e = Vec::new();
            let mut q_e = Vec::new();
            for l in 0..levels {
                let (e, i, pv, qv, pe, qe) = build_level(l)?;
                edges.push(e);
                iota.push(i);
                p_v.push(pv);
                q_v.push(qv);
                p_e.push(pe);
                q_e.push(qe);
            }
            // vertex maps carry one more level than edge maps
            let m_edges_last = self.m.edges_at(levels)?;
            p_v.push(m_edges_last.iter().map(|f| f.src).collect());
            q_v.push(m_edges_last.iter().map(|f| f.dst).collect());
            let k_star =
                LambdaGraphSystem::explicit(self.k.symbol_len(), vertex_counts, edges, iota)?;
            TextileSystem {
                k: k_star,
                m: self.n.clone(),
                n: self.m.clone(),
                p: GraphHom {
                    v: LevelMaps::Explicit(p_v),
                    e: LevelMaps::Explicit(p_e),
                    sym: BTreeMap::new(),
                },
                q: OneShiftHom {
                    v: LevelMaps::Explicit(q_v),
                    e: LevelMaps::Explicit(q_e),
                    sym: BTreeMap::new(),
                },
                label_bijection: placeholder_bijection(),
            }
        };
        dual.canonical_form()
    }

    /// The relative higher block: `K` and `M` are block-recoded, the
    /// vertical system is rebuilt from `(n-1)`-paths of squares.
    pub fn higher_block(&self, n: usize) -> Result<TextileSystem> {
        if n == 0 {
            return Err(Error::WindowUnavailable("higher block needs n >= 1".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if !self.is_stationary() {
            return Err(Error::WindowUnavailable(
                "textile higher block is implemented for stationary systems".into(),
            ));
        }
        let k_block = self.k.higher_block(n)?;
        let m_block = self.m.higher_block(n)?;
        let k_vertex_paths = self.k.block_paths(0, n - 1)?;
        let k_edge_paths = self.k.block_paths(0, n)?;
        let m_vertex_paths = self.m.block_paths(0, n - 1)?;
        let m_edge_paths = self.m.block_paths(0, n)?;
        let m_vertex_index: BTreeMap<Vec<usize>, usize> = m_vertex_paths
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        let m_edge_index: BTreeMap<Vec<usize>, usize> = m_edge_paths
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        let pe_old = self.p.e.at(0)?;
        let qe_old = self.q.e.at(0)?;
        let k_edges_old = self.k.edges_at(0)?;
        // the vertical system: edges are (n-1)-paths of squares
        let mut vertical_edges = Vec::with_capacity(k_vertex_paths.len());
        for path in &k_vertex_paths {
            let p_path: Vec<usize> = path.iter().map(|&e| pe_old[e]).collect();
            let q_path: Vec<usize> = path.iter().map(|&e| qe_old[e]).collect();
            let src = *m_vertex_index.get(&p_path).ok_or_else(|| {
                Error::InvalidSystem("p-image path is not a horizontal block vertex".into())
            })?;
            let dst = *m_vertex_index.get(&q_path).ok_or_else(|| {
                Error::InvalidSystem("q-image path is not a horizontal block vertex".into())
            })?;
            let mut label = Word::empty();
            for &e in path {
                label = label.concat(&k_edges_old[e].label);
            }
            vertical_edges.push(LgsEdge { src, dst, label });
        }
        let m_block_iota = m_block.iota_at(0)?.to_vec();
        let vertical = LambdaGraphSystem::stationary(
            self.k.symbol_len() * (n - 1),
            m_block.vertex_count(0)?,
            vertical_edges,
            m_block_iota,
        )?;
        // block homomorphisms: concatenated images of the square paths
        let mut p_e = Vec::with_capacity(k_edge_paths.len());
        let mut q_e = Vec::with_capacity(k_edge_paths.len());
        for path in &k_edge_paths {
            let p_path: Vec<usize> = path.iter().map(|&e| pe_old[e]).collect();
            let q_path: Vec<usize> = path.iter().map(|&e| qe_old[e]).collect();
            p_e.push(*m_edge_index.get(&p_path).ok_or_else(|| {
                Error::InvalidSystem("p-image path is not a horizontal block edge".into())
            })?);
            q_e.push(*m_edge_index.get(&q_path).ok_or_else(|| {
                Error::InvalidSystem("q-image path is not a horizontal block edge".into())
            })?);
        }
        let mut p_v = Vec::with_capacity(k_vertex_paths.len());
        let mut q_v = Vec::with_capacity(k_vertex_paths.len());
        for path in &k_vertex_paths {
            let p_path: Vec<usize> = path.iter().map(|&e| pe_old[e]).collect();
            let q_path: Vec<usize> = path.iter().map(|&e| qe_old[e]).collect();
            p_v.push(m_vertex_index[&p_path]);
            q_v.push(m_vertex_index[&q_path]);
        }
        let block = TextileSystem {
            k: k_block,
            m: m_block,
            n: vertical,
            p: GraphHom {
                v: LevelMaps::Stationary(p_v),
                e: LevelMaps::Stationary(p_e),
                sym: BTreeMap::new(),
            },
            q: OneShiftHom {
                v: LevelMaps::Stationary(q_v),
                e: LevelMaps::Stationary(q_e),
                sym: BTreeMap::new(),
            },
            label_bijection: placeholder_bijection(),
        };
        block.canonical_form()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextileReport {
    pub violations: Vec<TextileViolation>,
}

impl TextileReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextileViolation {
    pub condition: TextileCondition,
    pub level: usize,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TextileCondition {
    /// Horizontal and vertical systems form squares.
    Squares,
    /// `K`-vertices are the vertical edges.
    VertexIdentification,
    /// `iota` of `K` is the vertical edge surjection.
    IotaIsPhi,
    /// `p^V` and `q^V` are the vertical source and terminal maps.
    HomVertexMaps,
    /// The square of incidences determines each `K`-edge.
    EdgeDetermined,
    /// Label quadruples correspond bijectively to `K`-labels.
    LabelBijection,
    /// `p` respects sources, terminals, `iota`, and labels.
    PHomomorphism,
    /// `q` respects sources, terminals, `iota`, and labels.
    QHomomorphism,
    /// A level window or surjection needed by the checks is missing.
    Structure,
}

impl fmt::Display for TextileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} at level {}: {}",
            self.condition, self.level, self.detail
        )
    }
}

/// Builds the LR textile system from a specified equivalence
/// `M_l N_{l+1} ≃ N_l M_{l+1}`: the squares are the quadruples compatible
/// with the geometry and the specification.
pub fn build_lr_textile(m_sys: &Sms, n_sys: &Sms, kappa: &Specification) -> Result<TextileSystem> {
    form_squares(m_sys, n_sys)?;
    let m = LambdaGraphSystem::from_sms(m_sys)?;
    let n = LambdaGraphSystem::from_sms(n_sys)?;
    for (name, g) in [("horizontal", &m), ("vertical", &n)] {
        if let Some(w) = g.check_left_resolving().first() {
            return Err(Error::NotLeftResolving(format!(
                "{name} system: edges {} and {} at level {} share label and terminal",
                w.first, w.second, w.level
            )));
        }
    }
    let commute_levels: Vec<usize> = match (m_sys.edge_levels(), n_sys.edge_levels()) {
        (None, None) => vec![0],
        (a, b) => {
            let bound = a.into_iter().chain(b).min().expect("at least one explicit");
            if bound < 2 {
                return Err(Error::WindowUnavailable(
                    "LR construction needs two adjacent levels".into(),
                ));
            }
            (0..bound - 1).collect()
        }
    };
    for &l in &commute_levels {
        let next = if m_sys.edge_levels().is_none() && n_sys.edge_levels().is_none() {
            l
        } else {
            l + 1
        };
        let lhs = m_sys.matrix(l)?.mul(n_sys.matrix(next)?)?;
        let rhs = n_sys.matrix(l)?.mul(m_sys.matrix(next)?)?;
        let check = kappa.check_equivalence(&lhs, &rhs)?;
        if let Some(mm) = check.mismatch {
            return Err(Error::EquivalenceFails(format!(
                "level {l} entry ({},{}): rewriting gives {}, expected {}",
                mm.row, mm.col, mm.rewritten, mm.expected
            )));
        }
    }

    let build_level = |l: usize, l_next: usize| -> Result<(Vec<LgsEdge>, Vec<usize>, Vec<usize>)> {
        let m_lo = m.edges_at(l)?;
        let m_hi = m.edges_at(l_next)?;
        let n_lo = n.edges_at(l)?;
        let n_hi = n.edges_at(l_next)?;
        let mut edges = Vec::new();
        let mut p_e = Vec::new();
        let mut q_e = Vec::new();
        for (fp_idx, fp) in n_lo.iter().enumerate() {
            for (f_idx, f) in n_hi.iter().enumerate() {
                for (e_idx, e) in m_lo.iter().enumerate() {
                    if e.src != fp.src || e.dst != f.src {
                        continue;
                    }
                    for (ep_idx, ep) in m_hi.iter().enumerate() {
                        if fp.dst != ep.src || ep.dst != f.dst {
                            continue;
                        }
                        let key = e.label.concat(&f.label);
                        let expect = fp.label.concat(&ep.label);
                        if kappa.get(&key) != Some(&expect) {
                            continue;
                        }
                        let label = fp.label.concat(&f.label).concat(&e.label).concat(&ep.label);
                        edges.push(LgsEdge {
                            src: fp_idx,
                            dst: f_idx,
                            label,
                        });
                        p_e.push(e_idx);
                        q_e.push(ep_idx);
                    }
                }
            }
        }
        Ok((edges, p_e, q_e))
    };

    let k_symbol_len = 2 * n.symbol_len() + 2 * m.symbol_len();
    let textile = if m.is_stationary() && n.is_stationary() {
        let (edges, p_e, q_e) = build_level(0, 0)?;
        let iota = n.phi_level(1)?;
        let k = LambdaGraphSystem::stationary(k_symbol_len, n.edges_at(0)?.len(), edges, iota)?;
        let p_v: Vec<usize> = n.edges_at(0)?.iter().map(|f| f.src).collect();
        let q_v: Vec<usize> = n.edges_at(0)?.iter().map(|f| f.dst).collect();
        TextileSystem {
            k,
            m,
            n,
            p: GraphHom {
                v: LevelMaps::Stationary(p_v),
                e: LevelMaps::Stationary(p_e),
                sym: BTreeMap::new(),
            },
            q: OneShiftHom {
                v: LevelMaps::Stationary(q_v),
                e: LevelMaps::Stationary(q_e),
                sym: BTreeMap::new(),
            },
            label_bijection: placeholder_bijection(),
        }
    } else {
        let levels = commute_levels.len();
        let mut vertex_counts = Vec::with_capacity(levels + 1);
        for l in 0..=levels {
            vertex_counts.push(n.edges_at(l)?.len());
        }
        let mut edges = Vec::new();
        let mut iota = Vec::new();
        let mut p_e = Vec::new();
        let mut q_e = Vec::new();
        let mut p_v = Vec::new();
        let mut q_v = Vec::new();
        for l in 0..levels {
            let (e, pe, qe) = build_level(l, l + 1)?;
            edges.push(e);
            iota.push(n.phi_level(l + 1)?);
            p_e.push(pe);
            q_e.push(qe);
            p_v.push(n.edges_at(l)?.iter().map(|f| f.src).collect());
            q_v.push(n.edges_at(l)?.iter().map(|f| f.dst).collect());
        }
        p_v.push(n.edges_at(levels)?.iter().map(|f| f.src).collect());
        q_v.push(n.edges_at(levels)?.iter().map(|f| f.dst).collect());
        let k = LambdaGraphSystem::explicit(k_symbol_len, vertex_counts, edges, iota)?;
        TextileSystem {
            k,
            m,
            n,
            p: GraphHom {
                v: LevelMaps::Explicit(p_v),
                e: LevelMaps::Explicit(p_e),
                sym: BTreeMap::new(),
            },
            q: OneShiftHom {
                v: LevelMaps::Explicit(q_v),
                e: LevelMaps::Explicit(q_e),
                sym: BTreeMap::new(),
            },
            label_bijection: placeholder_bijection(),
        }
    };
    textile.canonical_form()
}

/// Verdict of the bounded nondegeneracy check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NondegeneracyCheck {
    pub failures: Vec<LiftFailure>,
}

impl NondegeneracyCheck {
    pub fn is_nondegenerate(&self) -> bool {
        self.failures.is_empty()
    }
}

/// An unliftable horizontal path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftFailure {
    pub side: LiftSide,
    pub level: usize,
    pub path_word: Word,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftSide {
    /// Lifting through the top labels (the `p` images).
    Top,
    /// Lifting through the bottom labels (the `q` images).
    Bottom,
}

/// Searches a `K`-path preimage for every horizontal path of the given
/// depth under both induced path maps.
pub fn check_nondegenerate(t: &TextileSystem, depth: usize) -> Result<NondegeneracyCheck> {
    if depth == 0 {
        return Err(Error::WindowUnavailable("depth must be >= 1".into()));
    }
    let bases: Vec<usize> = match t.level_count() {
        None => vec![0],
        Some(l) => {
            if l < depth {
                return Err(Error::WindowUnavailable(format!(
                    "depth {depth} exceeds {l} usable levels"
                )));
            }
            (0..=l - depth).collect()
        }
    };
    let mut failures = Vec::new();
    for &base in &bases {
        for side in [LiftSide::Top, LiftSide::Bottom] {
            let m_base = match side {
                LiftSide::Top => base,
                LiftSide::Bottom => base + 1,
            };
            for m_path in t.m.enumerate_paths(m_base, depth)? {
                if !lift_exists(t, side, base, &m_path)? {
                    let mut w = Word::empty();
                    for (off, &ei) in m_path.iter().enumerate() {
                        w = w.concat(&t.m.edges_at(m_base + off)?[ei].label);
                    }
                    failures.push(LiftFailure {
                        side,
                        level: base,
                        path_word: w,
                    });
                }
            }
        }
    }
    Ok(NondegeneracyCheck { failures })
}

fn lift_exists(t: &TextileSystem, side: LiftSide, base: usize, m_path: &[usize]) -> Result<bool> {
    fn go(
        t: &TextileSystem,
        side: LiftSide,
        base: usize,
        m_path: &[usize],
        step: usize,
        prev_dst: Option<usize>,
    ) -> Result<bool> {
        if step == m_path.len() {
            return Ok(true);
        }
        let level = base + step;
        let k_edges = t.k.edges_at(level)?;
        let images = match side {
            LiftSide::Top => t.p.e.at(level)?,
            LiftSide::Bottom => t.q.e.at(level)?,
        };
        for (idx, e) in k_edges.iter().enumerate() {
            if images[idx] != m_path[step] {
                continue;
            }
            if let Some(prev) = prev_dst {
                if e.src != prev {
                    continue;
                }
            }
            if go(t, side, base, m_path, step + 1, Some(e.dst))? {
                return Ok(true);
            }
        }
        Ok(false)
    }
    go(t, side, base, m_path, 0, None)
}

/// Which one-block code a decoder inverts: top labels or bottom labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeSide {
    Top,
    Bottom,
}

/// A bounded-window sliding decoder: an admissible image word of `window`
/// symbols determines the `K`-symbol at `offset` within the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoder {
    pub side: CodeSide,
    pub window: usize,
    pub offset: usize,
    pub table: BTreeMap<Word, Word>,
}

impl Decoder {
    /// Decodes every position where the window fits; the returned sequence
    /// covers input positions `offset..=symbols-window+offset`.
    pub fn decode(&self, word: &Word, m_symbol_len: usize) -> Result<Vec<Word>> {
        if !word.len().is_multiple_of(m_symbol_len) {
            return Err(Error::ShapeMismatch(format!(
                "word length {} is not a multiple of {m_symbol_len}",
                word.len()
            )));
        }
        let msyms = word.len() / m_symbol_len;
        if msyms < self.window {
            return Err(Error::WordTooShort(format!(
                "{msyms} symbols against decoder window {}",
                self.window
            )));
        }
        let mut out = Vec::with_capacity(msyms - self.window + 1);
        for s in 0..=msyms - self.window {
            let key = word.slice(s * m_symbol_len, (s + self.window) * m_symbol_len);
            let sym = self
                .table
                .get(&key)
                .ok_or_else(|| Error::Inadmissible(format!("window {key} at position {s}")))?;
            out.push(sym.clone());
        }
        Ok(out)
    }
}

/// Finds the smallest `(window, offset)` pair up to `max_window` such that
/// the image word determines the `K`-symbol; otherwise reports an ambiguous
/// pair of `K`-words with equal images.
pub fn build_decoder(t: &TextileSystem, side: CodeSide, max_window: usize) -> Result<Decoder> {
    let mut witness: Option<(Word, Word, Word)> = None;
    for window in 1..=max_window {
        'offsets: for offset in 0..window {
            let bases: Vec<usize> = match t.level_count() {
                None => vec![0],
                Some(l) => {
                    if l < window {
                        continue;
                    }
                    (0..=l - window).collect()
                }
            };
            let mut table: BTreeMap<Word, Word> = BTreeMap::new();
            let mut k_words: BTreeMap<Word, Word> = BTreeMap::new();
            for &base in &bases {
                for k_path in t.k.enumerate_paths(base, window)? {
                    let mut image = Word::empty();
                    let mut k_word = Word::empty();
                    for (off, &ei) in k_path.iter().enumerate() {
                        let level = base + off;
                        let m_idx = match side {
                            CodeSide::Top => t.p.e.at(level)?[ei],
                            CodeSide::Bottom => t.q.e.at(level)?[ei],
                        };
                        let m_level = match side {
                            CodeSide::Top => level,
                            CodeSide::Bottom => level + 1,
                        };
                        image = image.concat(&t.m.edges_at(m_level)?[m_idx].label);
                        k_word = k_word.concat(&t.k.edges_at(level)?[ei].label);
                    }
                    let sym = t.k.edges_at(base + offset)?[k_path[offset]].label.clone();
                    match table.get(&image) {
                        Some(prev) if *prev != sym => {
                            if window == max_window && offset == 0 {
                                let other = k_words.get(&image).cloned().unwrap_or_default();
                                witness = Some((image.clone(), other, k_word.clone()));
                            }
                            continue 'offsets;
                        }
                        Some(_) => {}
                        None => {
                            table.insert(image.clone(), sym);
                            k_words.insert(image, k_word);
                        }
                    }
                }
            }
            return Ok(Decoder {
                side,
                window,
                offset,
                table,
            });
        }
    }
    match witness {
        Some((image, k1, k2)) => Err(Error::DecoderAmbiguous(format!(
            "image {image} is produced by distinct square words {k1} and {k2}"
        ))),
        None => Err(Error::DecoderAmbiguous(format!(
            "no decoder within window {max_window}"
        ))),
    }
}

/// A word together with the margins consumed from each side, in symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrimmedWord {
    pub word: Word,
    pub left: usize,
    pub right: usize,
}

impl TextileSystem {
    /// Decodes through the top labels and re-encodes through the bottom
    /// labels; the output loses the decoder margins.
    pub fn apply_automorphism(&self, word: &Word, max_window: usize) -> Result<TrimmedWord> {
        let base = match self.m.edge_levels() {
            None => 0,
            Some(levels) => levels
                .checked_sub(word.len() / self.m.symbol_len().max(1))
                .ok_or_else(|| Error::WindowUnavailable("word exceeds stored levels".into()))?,
        };
        if !self.m.is_word_admissible(base, word)? {
            return Err(Error::Inadmissible(format!(
                "{word} is not admissible for the horizontal system"
            )));
        }
        let xi = build_decoder(self, CodeSide::Top, max_window)?;
        let m_len = self.m.symbol_len();
        let symbols = xi.decode(word, m_len)?;
        let mut out = Word::empty();
        for sym in &symbols {
            out = out.concat(&self.label_parts(sym)?.lower);
        }
        Ok(TrimmedWord {
            word: out,
            left: xi.offset,
            right: xi.window - 1 - xi.offset,
        })
    }
}

/// A finite region of squares on the half-plane lattice, each cell holding
/// a `K`-edge index at level `i + j`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WeavePatch {
    pub cells: BTreeMap<(i64, i64), usize>,
}

impl WeavePatch {
    pub fn empty() -> Self {
        WeavePatch {
            cells: BTreeMap::new(),
        }
    }

    pub fn level_of(i: i64, j: i64) -> Result<usize> {
        let l = i + j;
        if l < 0 {
            return Err(Error::Patch(format!(
                "cell ({i},{j}) lies above the lattice"
            )));
        }
        Ok(l as usize)
    }

    /// Checks region shape (half-plane, row- and column-convex) and both
    /// matching conditions.
    pub fn validate(&self, t: &TextileSystem) -> Result<()> {
        let mut rows: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        let mut cols: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        for (&(i, j), &edge) in &self.cells {
            let level = Self::level_of(i, j)?;
            let edges = t.k.edges_at(level)?;
            if edge >= edges.len() {
                return Err(Error::Patch(format!(
                    "cell ({i},{j}) refers to edge {edge} out of range"
                )));
            }
            rows.entry(i).or_default().push(j);
            cols.entry(j).or_default().push(i);
        }
        for (i, js) in &rows {
            let lo = *js.iter().min().expect("non-empty");
            let hi = *js.iter().max().expect("non-empty");
            if (hi - lo + 1) as usize != js.len() {
                return Err(Error::Patch(format!("row {i} is not contiguous")));
            }
        }
        for (j, is) in &cols {
            let lo = *is.iter().min().expect("non-empty");
            let hi = *is.iter().max().expect("non-empty");
            if (hi - lo + 1) as usize != is.len() {
                return Err(Error::Patch(format!("column {j} is not contiguous")));
            }
        }
        for (&(i, j), &edge) in &self.cells {
            let level = Self::level_of(i, j)?;
            let e = &t.k.edges_at(level)?[edge];
            if let Some(&right) = self.cells.get(&(i, j + 1)) {
                let f = &t.k.edges_at(level + 1)?[right];
                if e.dst != f.src {
                    return Err(Error::Patch(format!(
                        "cells ({i},{j}) and ({i},{}) do not chain horizontally",
                        j + 1
                    )));
                }
            }
            if let Some(&below) = self.cells.get(&(i + 1, j)) {
                let p_img = t.p.e.at(level + 1)?[below];
                let q_img = t.q.e.at(level)?[edge];
                if p_img != q_img {
                    return Err(Error::Patch(format!(
                        "cells ({i},{j}) and ({},{j}) do not chain vertically",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// The triangle parameters `(n, k)` when the region is exactly the
    /// corner triangle with right-lower corner `(n, k)`.
    pub fn triangle_params(&self) -> Option<(i64, i64)> {
        if self.cells.is_empty() {
            return None;
        }
        let n = self.cells.keys().map(|&(i, _)| i).max()?;
        let k = self.cells.keys().map(|&(_, j)| j).max()?;
        let mut expected = 0usize;
        for i in -k..=n {
            for j in -i..=k {
                if !self.cells.contains_key(&(i, j)) {
                    return None;
                }
                expected += 1;
            }
        }
        if expected == self.cells.len() {
            Some((n, k))
        } else {
            None
        }
    }
}

/// Extends a corner-triangle patch one step in both directions: first a new
/// column through the dual lifts, then a new row through the direct lifts.
/// An empty patch becomes a single valid cell.
pub fn extend_patch(t: &TextileSystem, patch: &WeavePatch) -> Result<WeavePatch> {
    patch.validate(t)?;
    if patch.cells.is_empty() {
        let edges = t.k.edges_at(0)?;
        if edges.is_empty() {
            return Err(Error::ExtensionFailed("no squares at level 0".into()));
        }
        let mut cells = BTreeMap::new();
        cells.insert((0, 0), 0);
        return Ok(WeavePatch { cells });
    }
    let (n, k) = patch
        .triangle_params()
        .ok_or_else(|| Error::Patch("extension needs a corner-triangle region".into()))?;
    let mut extended = patch.clone();
    // phase 1: new column j = k+1, rows -(k+1)..=n
    let col_cells: Vec<(i64, i64)> = (-(k + 1)..=n).map(|i| (i, k + 1)).collect();
    if !fill_line(t, &mut extended, &col_cells)? {
        return Err(Error::ExtensionFailed(format!(
            "no valid column extension at j = {}",
            k + 1
        )));
    }
    // phase 2: new row i = n+1, columns -(n+1)..=k+1
    let row_cells: Vec<(i64, i64)> = (-(n + 1)..=k + 1).map(|j| (n + 1, j)).collect();
    if !fill_line(t, &mut extended, &row_cells)? {
        return Err(Error::ExtensionFailed(format!(
            "no valid row extension at i = {}",
            n + 1
        )));
    }
    extended.validate(t)?;
    Ok(extended)
}

fn fill_line(t: &TextileSystem, patch: &mut WeavePatch, cells: &[(i64, i64)]) -> Result<bool> {
    fn go(
        t: &TextileSystem,
        patch: &mut WeavePatch,
        cells: &[(i64, i64)],
        step: usize,
    ) -> Result<bool> {
        if step == cells.len() {
            return Ok(true);
        }
        let (i, j) = cells[step];
        let level = WeavePatch::level_of(i, j)?;
        let edge_count = t.k.edges_at(level)?.len();
        for cand in 0..edge_count {
            if fits(t, patch, i, j, cand)? {
                patch.cells.insert((i, j), cand);
                if go(t, patch, cells, step + 1)? {
                    return Ok(true);
                }
                patch.cells.remove(&(i, j));
            }
        }
        Ok(false)
    }
    go(t, patch, cells, 0)
}

/// Local consistency of a candidate square against all present neighbours.
fn fits(t: &TextileSystem, patch: &WeavePatch, i: i64, j: i64, edge: usize) -> Result<bool> {
    let level = WeavePatch::level_of(i, j)?;
    let e = &t.k.edges_at(level)?[edge];
    if let Some(&left) = patch.cells.get(&(i, j - 1)) {
        let f = &t.k.edges_at(level - 1)?[left];
        if f.dst != e.src {
            return Ok(false);
        }
    }
    if let Some(&right) = patch.cells.get(&(i, j + 1)) {
        let f = &t.k.edges_at(level + 1)?[right];
        if e.dst != f.src {
            return Ok(false);
        }
    }
    if let Some(&above) = patch.cells.get(&(i - 1, j)) {
        let q_img = t.q.e.at(level - 1)?[above];
        let p_img = t.p.e.at(level)?[edge];
        if q_img != p_img {
            return Ok(false);
        }
    }
    if let Some(&below) = patch.cells.get(&(i + 1, j)) {
        let q_img = t.q.e.at(level)?[edge];
        let p_img = t.p.e.at(level + 1)?[below];
        if q_img != p_img {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shift directions for patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    /// Pull from the right: new cell `(i,j)` is the pushed-down copy of
    /// `(i, j+1)`.
    Right,
    /// Pull from below: new cell `(i,j)` is the pushed-down copy of
    /// `(i+1, j)`.
    Down,
}

/// Re-indexes the patch one step and pushes every square one level down via
/// the label-preserving edge surjections.
pub fn shift_patch(
    t: &TextileSystem,
    patch: &WeavePatch,
    direction: ShiftDirection,
) -> Result<WeavePatch> {
    patch.validate(t)?;
    let dual = match direction {
        ShiftDirection::Down => Some(t.dual()?),
        ShiftDirection::Right => None,
    };
    let mut cells = BTreeMap::new();
    for (&(i, j), &edge) in &patch.cells {
        let (ni, nj) = match direction {
            ShiftDirection::Right => (i, j - 1),
            ShiftDirection::Down => (i - 1, j),
        };
        if ni + nj < 0 {
            continue;
        }
        let old_level = WeavePatch::level_of(i, j)?;
        let image = match direction {
            ShiftDirection::Right => t.k.phi_level(old_level)?[edge],
            ShiftDirection::Down => {
                dual.as_ref().expect("built above").k.phi_level(old_level)?[edge]
            }
        };
        cells.insert((ni, nj), image);
    }
    let shifted = WeavePatch { cells };
    shifted.validate(t)?;
    Ok(shifted)
}

/// Which diagonal reading to take from a patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasVariant {
    /// Left labels down the column, then top labels along the next row.
    Check,
    /// Top labels along the row, then left labels down the next column.
    Hat,
}

/// Reads `count` composite symbols of slope `(k, n)` from the patch: the
/// check variant takes `k` left labels at column `i·n` and `n` top labels
/// along row `i·k + k`; the hat variant takes the row first.
pub fn extract_bias_word(
    t: &TextileSystem,
    patch: &WeavePatch,
    k: usize,
    n: usize,
    variant: BiasVariant,
    count: usize,
) -> Result<Vec<Word>> {
    if n == 0 {
        return Err(Error::Patch("bias reading needs n >= 1".into()));
    }
    let cell_label = |i: i64, j: i64| -> Result<Word> {
        let edge = *patch
            .cells
            .get(&(i, j))
            .ok_or_else(|| Error::Patch(format!("patch too small: cell ({i},{j}) missing")))?;
        let level = WeavePatch::level_of(i, j)?;
        Ok(t.k.edges_at(level)?[edge].label.clone())
    };
    let upper = |i: i64, j: i64| -> Result<Word> { Ok(t.label_parts(&cell_label(i, j)?)?.upper) };
    let left = |i: i64, j: i64| -> Result<Word> { Ok(t.label_parts(&cell_label(i, j)?)?.left) };
    let mut out = Vec::with_capacity(count);
    for step in 0..count as i64 {
        let (ik, inn) = (step * k as i64, step * n as i64);
        let mut sym = Word::empty();
        match variant {
            BiasVariant::Check => {
                for r in 0..k as i64 {
                    sym = sym.concat(&left(ik + r, inn)?);
                }
                for c in 0..n as i64 {
                    sym = sym.concat(&upper(ik + k as i64, inn + c)?);
                }
            }
            BiasVariant::Hat => {
                for c in 0..n as i64 {
                    sym = sym.concat(&upper(ik, inn + c)?);
                }
                for r in 0..k as i64 {
                    sym = sym.concat(&left(ik + r, inn + n as i64)?);
                }
            }
        }
        out.push(sym);
    }
    Ok(out)
}

/// All valid fillings of the `rows x cols` rectangle anchored at the
/// origin, in deterministic order.
pub fn enumerate_patches(t: &TextileSystem, rows: usize, cols: usize) -> Result<Vec<WeavePatch>> {
    let mut out = Vec::new();
    let coords: Vec<(i64, i64)> = (0..rows as i64)
        .flat_map(|i| (0..cols as i64).map(move |j| (i, j)))
        .collect();
    fn go(
        t: &TextileSystem,
        coords: &[(i64, i64)],
        step: usize,
        patch: &mut WeavePatch,
        out: &mut Vec<WeavePatch>,
    ) -> Result<()> {
        if step == coords.len() {
            out.push(patch.clone());
            return Ok(());
        }
        let (i, j) = coords[step];
        let level = WeavePatch::level_of(i, j)?;
        let count = t.k.edges_at(level)?.len();
        for cand in 0..count {
            if fits(t, patch, i, j, cand)? {
                patch.cells.insert((i, j), cand);
                go(t, coords, step + 1, patch, out)?;
                patch.cells.remove(&(i, j));
            }
        }
        Ok(())
    }
    go(t, &coords, 0, &mut WeavePatch::empty(), &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sms::{BasePolicy, Sms};
    use crate::symbolic::{BitMatrix, FormalSum, SymbolicMatrix};

    fn sum(words: &[&str]) -> FormalSum {
        FormalSum::from_words(words.iter().map(|w| Word::from_chars(w)).collect())
    }

    fn full_shift() -> Sms {
        let m = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "b"])]).unwrap();
        Sms::stationary(m, BitMatrix::identity(1)).unwrap()
    }

    fn scalar_system() -> Sms {
        let p = SymbolicMatrix::new(1, 1, 1, vec![sum(&["I"])]).unwrap();
        Sms::stationary(p, BitMatrix::identity(1)).unwrap()
    }

    fn golden_mean() -> Sms {
        let m = SymbolicMatrix::new(
            2,
            2,
            1,
            vec![sum(&["a"]), sum(&["a"]), sum(&["b"]), FormalSum::zero()],
        )
        .unwrap();
        Sms::stationary(m, BitMatrix::identity(2)).unwrap()
    }

    fn scalar_system_2() -> Sms {
        let m = SymbolicMatrix::new(
            2,
            2,
            1,
            vec![
                sum(&["I"]),
                FormalSum::zero(),
                FormalSum::zero(),
                sum(&["I"]),
            ],
        )
        .unwrap();
        Sms::stationary(m, BitMatrix::identity(2)).unwrap()
    }

    fn swap_kappa() -> Specification {
        Specification::new(vec![
            (Word::from_chars("aI"), Word::from_chars("Ib")),
            (Word::from_chars("bI"), Word::from_chars("Ia")),
        ])
        .unwrap()
    }

    fn identity_kappa() -> Specification {
        Specification::new(vec![
            (Word::from_chars("aI"), Word::from_chars("Ia")),
            (Word::from_chars("bI"), Word::from_chars("Ib")),
        ])
        .unwrap()
    }

    /// The LR textile of the letter-swap equivalence on the full shift.
    pub(crate) fn swap_textile() -> TextileSystem {
        build_lr_textile(&full_shift(), &scalar_system(), &swap_kappa()).unwrap()
    }

    fn truncate(sys: &Sms, levels: usize) -> Sms {
        let pairs = (0..levels)
            .map(|l| (sys.matrix(l).unwrap().clone(), sys.bit(l).unwrap().clone()))
            .collect();
        Sms::explicit(pairs).unwrap()
    }

    #[test]
    fn truncated_lr_textile_builds_and_validates() {
        let m = truncate(&full_shift(), 5);
        let n = truncate(&scalar_system(), 5);
        let t = build_lr_textile(&m, &n, &swap_kappa()).unwrap();
        assert!(!t.is_stationary());
        assert_eq!(t.level_count(), Some(4));
        let report = t.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
        // decoders and the automorphism work over the stored window
        let out = t.apply_automorphism(&Word::from_chars("aba"), 2).unwrap();
        assert_eq!(out.word, Word::from_chars("bab"));
        // the dual of the truncation also validates
        let dual = t.dual().unwrap();
        let report = dual.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
        // depth-bounded lifting within the window
        assert!(check_nondegenerate(&t, 3).unwrap().is_nondegenerate());
        // exhausting the window fails loudly
        assert!(matches!(
            check_nondegenerate(&t, 5),
            Err(Error::WindowUnavailable(_))
        ));
    }

    fn golden_identity_textile() -> TextileSystem {
        let kappa = Specification::new(vec![
            (Word::from_chars("aI"), Word::from_chars("Ia")),
            (Word::from_chars("bI"), Word::from_chars("Ib")),
        ])
        .unwrap();
        build_lr_textile(&golden_mean(), &scalar_system_2(), &kappa).unwrap()
    }

    #[test]
    fn swap_textile_has_two_squares() {
        let t = swap_textile();
        let edges = t.k.edges_at(0).unwrap();
        assert_eq!(edges.len(), 2);
        let labels: BTreeSet<Word> = edges.iter().map(|e| e.label.clone()).collect();
        assert_eq!(
            labels,
            [Word::from_chars("IIab"), Word::from_chars("IIba")]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn swap_textile_validates() {
        let report = swap_textile().validate();
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn identity_textile_validates() {
        let t = build_lr_textile(&full_shift(), &scalar_system(), &identity_kappa()).unwrap();
        assert!(t.validate().is_valid());
        let labels: BTreeSet<Word> =
            t.k.edges_at(0)
                .unwrap()
                .iter()
                .map(|e| e.label.clone())
                .collect();
        assert_eq!(
            labels,
            [Word::from_chars("IIaa"), Word::from_chars("IIbb")]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn failing_equivalence_reports_level_witness() {
        // golden mean against the swap specification: the commuting
        // equivalence fails at level 0
        let err = build_lr_textile(&golden_mean(), &scalar_system_2(), &swap_kappa()).unwrap_err();
        assert!(matches!(err, Error::EquivalenceFails(_)));
        assert!(err.to_string().contains("level 0"));
    }

    #[test]
    fn unequal_i_matrices_fail_squares() {
        let other = {
            let m = SymbolicMatrix::new(
                2,
                2,
                1,
                vec![
                    FormalSum::zero(),
                    sum(&["I"]),
                    sum(&["I"]),
                    FormalSum::zero(),
                ],
            )
            .unwrap();
            let i = BitMatrix::new(2, 2, vec![0, 1, 1, 0]).unwrap();
            Sms::stationary(m, i).unwrap()
        };
        assert!(matches!(
            build_lr_textile(&golden_mean(), &other, &swap_kappa()),
            Err(Error::SquaresMismatch(_))
        ));
    }

    #[test]
    fn validate_flags_broken_squares_condition() {
        let t = golden_identity_textile();
        assert!(t.validate().is_valid());
        let mut broken = t.clone();
        broken.n =
            LambdaGraphSystem::stationary(1, 2, broken.n.edges_at(0).unwrap().to_vec(), vec![1, 0])
                .unwrap();
        let report = broken.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == TextileCondition::Squares));
    }

    #[test]
    fn dual_round_trips() {
        let t = swap_textile();
        let dual = t.dual().unwrap();
        assert!(
            dual.validate().is_valid(),
            "{:?}",
            dual.validate().violations
        );
        // dual exchanges the horizontal and vertical systems
        assert_eq!(dual.m, t.n);
        assert_eq!(dual.n, t.m);
        // the squares are preserved cellwise
        assert_eq!(
            dual.k.edges_at(0).unwrap().len(),
            t.k.edges_at(0).unwrap().len()
        );
        let round = dual.dual().unwrap();
        assert_eq!(round, t.canonical_form().unwrap());
    }

    #[test]
    fn lr_textiles_are_nondegenerate() {
        let t = swap_textile();
        for depth in 1..=6 {
            let check = check_nondegenerate(&t, depth).unwrap();
            assert!(check.is_nondegenerate(), "depth {depth}");
        }
        let dual = t.dual().unwrap();
        for depth in 1..=6 {
            assert!(check_nondegenerate(&dual, depth)
                .unwrap()
                .is_nondegenerate());
        }
    }

    /// Removes one square from the textile, truncating the edge maps with it.
    fn remove_square(t: &TextileSystem, idx: usize) -> TextileSystem {
        let mut edges = t.k.edges_at(0).unwrap().to_vec();
        edges.remove(idx);
        let k = LambdaGraphSystem::stationary(
            t.k.symbol_len(),
            t.k.vertex_count(0).unwrap(),
            edges,
            t.k.iota_at(0).unwrap().to_vec(),
        )
        .unwrap();
        let drop_at = |maps: &LevelMaps| -> LevelMaps {
            match maps {
                LevelMaps::Stationary(v) => {
                    let mut v = v.clone();
                    v.remove(idx);
                    LevelMaps::Stationary(v)
                }
                LevelMaps::Explicit(_) => unreachable!("test textile is stationary"),
            }
        };
        TextileSystem {
            k,
            m: t.m.clone(),
            n: t.n.clone(),
            p: GraphHom {
                v: t.p.v.clone(),
                e: drop_at(&t.p.e),
                sym: t.p.sym.clone(),
            },
            q: OneShiftHom {
                v: t.q.v.clone(),
                e: drop_at(&t.q.e),
                sym: t.q.sym.clone(),
            },
            label_bijection: t.label_bijection.clone(),
        }
    }

    #[test]
    fn removing_a_square_breaks_nondegeneracy() {
        let t = swap_textile();
        let mutated = remove_square(&t, 0);
        let check = check_nondegenerate(&mutated, 2).unwrap();
        assert!(!check.is_nondegenerate());
        assert!(!check.failures.is_empty());
    }

    #[test]
    fn depth_one_equals_edgewise_surjectivity() {
        let t = swap_textile();
        let check = check_nondegenerate(&t, 1).unwrap();
        assert!(check.is_nondegenerate());
    }

    #[test]
    fn swap_decoders_have_window_one() {
        let t = swap_textile();
        let xi = build_decoder(&t, CodeSide::Top, 4).unwrap();
        assert_eq!((xi.window, xi.offset), (1, 0));
        assert_eq!(xi.table.len(), 2);
        assert_eq!(
            xi.table.get(&Word::from_chars("a")),
            Some(&Word::from_chars("IIab"))
        );
        let eta = build_decoder(&t, CodeSide::Bottom, 4).unwrap();
        assert_eq!((eta.window, eta.offset), (1, 0));
        assert_eq!(
            eta.table.get(&Word::from_chars("b")),
            Some(&Word::from_chars("IIab"))
        );
    }

    /// Two squares with equal top labels make the top code undecodable.
    fn ambiguous_textile() -> TextileSystem {
        let t = swap_textile();
        // squares (I,I,a,a) and (I,I,a,b): same geometry, same top label
        let edges = vec![
            LgsEdge {
                src: 0,
                dst: 0,
                label: Word::from_chars("IIaa"),
            },
            LgsEdge {
                src: 0,
                dst: 0,
                label: Word::from_chars("IIab"),
            },
        ];
        let k = LambdaGraphSystem::stationary(4, 1, edges, vec![0]).unwrap();
        let bij = Specification::new(vec![
            (Word::from_chars("IIaa"), Word::from_chars("IIaa")),
            (Word::from_chars("IIab"), Word::from_chars("IIab")),
        ])
        .unwrap();
        TextileSystem {
            k,
            m: t.m.clone(),
            n: t.n.clone(),
            p: GraphHom {
                v: t.p.v.clone(),
                e: LevelMaps::Stationary(vec![0, 0]),
                sym: BTreeMap::new(),
            },
            q: OneShiftHom {
                v: t.q.v.clone(),
                e: LevelMaps::Stationary(vec![0, 1]),
                sym: BTreeMap::new(),
            },
            label_bijection: bij,
        }
    }

    #[test]
    fn ambiguity_is_reported_with_witness() {
        let t = ambiguous_textile().canonical_form().unwrap();
        let err = build_decoder(&t, CodeSide::Top, 3).unwrap_err();
        assert!(matches!(err, Error::DecoderAmbiguous(_)));
    }

    #[test]
    fn automorphism_is_letterwise_swap() {
        let t = swap_textile();
        let out = t.apply_automorphism(&Word::from_chars("aba"), 4).unwrap();
        assert_eq!(out.word, Word::from_chars("bab"));
        assert_eq!((out.left, out.right), (0, 0));
    }

    #[test]
    fn identity_textile_automorphism_is_identity() {
        let t = build_lr_textile(&full_shift(), &scalar_system(), &identity_kappa()).unwrap();
        let out = t.apply_automorphism(&Word::from_chars("abba"), 4).unwrap();
        assert_eq!(out.word, Word::from_chars("abba"));
    }

    #[test]
    fn inadmissible_word_is_rejected() {
        // the golden-mean identity textile refuses the forbidden word bb
        let t = golden_identity_textile();
        assert!(matches!(
            t.apply_automorphism(&Word::from_chars("bb"), 4),
            Err(Error::Inadmissible(_))
        ));
        // admissible words pass through unchanged
        let out = t.apply_automorphism(&Word::from_chars("aba"), 4).unwrap();
        assert_eq!(out.word, Word::from_chars("aba"));
    }

    #[test]
    fn higher_block_n1_is_identity() {
        let t = swap_textile();
        assert_eq!(t.higher_block(1).unwrap(), t);
    }

    #[test]
    fn higher_block_three_validates() {
        let t3 = swap_textile().higher_block(3).unwrap();
        let report = t3.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(t3.m.symbol_len(), 3);
        assert_eq!(t3.n.symbol_len(), 8);
    }

    #[test]
    fn higher_block_doubles_labels_and_validates() {
        let t = swap_textile();
        let t2 = t.higher_block(2).unwrap();
        let report = t2.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
        assert_eq!(t2.k.symbol_len(), 8);
        assert_eq!(t2.m.symbol_len(), 2);
        // the relative block of the vertical system carries one square label
        assert_eq!(t2.n.symbol_len(), 4);
        // at n = 2 the rebuilt vertical system is exactly the squares
        // system of the dual: same square set read column-wise
        let dual = t.dual().unwrap();
        assert_eq!(t2.n, dual.k);
        // its words are the vertically chained square columns
        let columns = t2.n.enumerate_words(0, 2).unwrap();
        assert_eq!(
            columns,
            [Word::from_chars("IIabIIba"), Word::from_chars("IIbaIIab")]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn patches_enumerate_and_validate() {
        let t = swap_textile();
        let patches = enumerate_patches(&t, 2, 2).unwrap();
        // the top row is free, everything below is forced by matching
        assert_eq!(patches.len(), 4);
        for p in &patches {
            p.validate(&t).unwrap();
        }
    }

    #[test]
    fn extend_patch_grows_triangles() {
        let t = swap_textile();
        let single = extend_patch(&t, &WeavePatch::empty()).unwrap();
        assert_eq!(single.cells.len(), 1);
        assert_eq!(single.triangle_params(), Some((0, 0)));
        let bigger = extend_patch(&t, &single).unwrap();
        assert_eq!(bigger.triangle_params(), Some((1, 1)));
        assert_eq!(bigger.cells.len(), 6);
        for (&(i, j), &e) in &single.cells {
            assert_eq!(bigger.cells.get(&(i, j)), Some(&e));
        }
    }

    #[test]
    fn degenerate_textile_fails_extension() {
        let t = remove_square(&swap_textile(), 0);
        // the single surviving square cannot weave a second row
        let single = extend_patch(&t, &WeavePatch::empty()).unwrap();
        let err = extend_patch(&t, &single);
        assert!(matches!(err, Err(Error::ExtensionFailed(_))));
    }

    #[test]
    fn shifts_commute_and_preserve_labels() {
        let t = swap_textile();
        let patches = enumerate_patches(&t, 3, 3).unwrap();
        for p in &patches {
            let r = shift_patch(&t, p, ShiftDirection::Right).unwrap();
            let d = shift_patch(&t, p, ShiftDirection::Down).unwrap();
            // labels are preserved cellwise
            for (&(i, j), &e) in &r.cells {
                let old = p.cells[&(i, j + 1)];
                let old_label = &t.k.edges_at((i + j + 1) as usize).unwrap()[old].label;
                let new_label = &t.k.edges_at((i + j) as usize).unwrap()[e].label;
                assert_eq!(old_label, new_label);
            }
            let rd = shift_patch(&t, &r, ShiftDirection::Down).unwrap();
            let dr = shift_patch(&t, &d, ShiftDirection::Right).unwrap();
            assert_eq!(rd, dr);
        }
    }

    #[test]
    fn bias_words_follow_the_check_formula() {
        let t = swap_textile();
        // a 2x1 patch: cells (0,0) and (1,0)
        let patches = enumerate_patches(&t, 2, 1).unwrap();
        assert!(!patches.is_empty());
        for p in &patches {
            let word = extract_bias_word(&t, p, 1, 1, BiasVariant::Check, 1).unwrap();
            assert_eq!(word.len(), 1);
            let sym = &word[0];
            // first letter is the left label, second the successor-row top
            assert_eq!(sym.len(), 2);
            assert_eq!(sym.slice(0, 1), Word::from_chars("I"));
            let top = t
                .label_parts(&t.k.edges_at(0).unwrap()[p.cells[&(0, 0)]].label)
                .unwrap();
            let below = t
                .label_parts(&t.k.edges_at(1).unwrap()[p.cells[&(1, 0)]].label)
                .unwrap();
            assert_eq!(below.upper, top.lower);
            assert_eq!(sym.slice(1, 2), below.upper);
        }
    }

    #[test]
    fn bias_reading_with_k0_takes_the_top_row() {
        let t = swap_textile();
        for p in enumerate_patches(&t, 1, 3).unwrap() {
            let word = extract_bias_word(&t, &p, 0, 3, BiasVariant::Check, 1).unwrap();
            let mut expected = Word::empty();
            for j in 0..3i64 {
                let label = &t.k.edges_at(j as usize).unwrap()[p.cells[&(0, j)]].label;
                expected = expected.concat(&t.label_parts(label).unwrap().upper);
            }
            assert_eq!(word, vec![expected]);
        }
    }

    #[test]
    fn bias_words_exhaust_the_product_language() {
        let t = swap_textile();
        let n_sys = scalar_system();
        let m_sys = full_shift();
        for (k, n, count) in [(1usize, 1usize, 3usize), (1, 2, 1), (2, 1, 1)] {
            let product = crate::sms::product_system(&n_sys, &m_sys, k, n).unwrap();
            let mut extracted: BTreeSet<Word> = BTreeSet::new();
            for p in enumerate_patches(&t, 4, 4).unwrap() {
                if let Ok(words) = extract_bias_word(&t, &p, k, n, BiasVariant::Check, count) {
                    let mut flat = Word::empty();
                    for w in &words {
                        flat = flat.concat(w);
                    }
                    extracted.insert(flat);
                }
            }
            let lang = product.language(count, BasePolicy::Deepest).unwrap();
            assert_eq!(extracted, lang, "k={k} n={n} count={count}");
        }
    }

    #[test]
    fn check_and_hat_readings_are_shift_related() {
        let t = swap_textile();
        let mut tested = 0usize;
        for p in enumerate_patches(&t, 4, 4).unwrap() {
            for (k, n) in [(1usize, 1usize), (1, 2)] {
                let count = 2;
                let hat = match extract_bias_word(&t, &p, k, n, BiasVariant::Hat, count) {
                    Ok(w) => w,
                    Err(_) => continue,
                };
                let mut shifted = p.clone();
                for _ in 0..n {
                    shifted = shift_patch(&t, &shifted, ShiftDirection::Right).unwrap();
                }
                let check =
                    match extract_bias_word(&t, &shifted, k, n, BiasVariant::Check, count - 1) {
                        Ok(w) => w,
                        Err(_) => continue,
                    };
                // the check reading of the shifted patch recombines the hat
                // parts: left block of symbol i with top block of symbol i+1
                for i in 0..count - 1 {
                    let b_part = hat[i].slice(n, n + k);
                    let a_part = hat[i + 1].slice(0, n);
                    assert_eq!(check[i], b_part.concat(&a_part));
                }
                tested += 1;
            }
        }
        assert!(tested > 0);
    }
}
