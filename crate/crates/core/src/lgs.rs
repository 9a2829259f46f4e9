//! Lambda-graph systems: leveled labeled graphs `(V, E, λ, ι)` with
//! surjective level maps `ι`, the graph form of a symbolic matrix system.
//!
//! Vertex identity is `(level, index)`. Stationary systems hold one level
//! template and answer queries at arbitrary depth; explicit systems are
//! finite truncations. Non-left-resolving systems are accepted by storage
//! and validation; constructions that need left-resolving refuse them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::sms::Sms;
use crate::symbolic::{BitMatrix, FormalSum, SymbolicMatrix, Word};
use crate::{Error, Result};

/// One labeled edge between consecutive levels.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LgsEdge {
    pub src: usize,
    pub dst: usize,
    pub label: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum LgsLevels {
    Stationary {
        vertices: usize,
        edges: Vec<LgsEdge>,
        iota: Vec<usize>,
    },
    Explicit {
        /// `vertex_counts.len()` = edge levels + 1.
        vertex_counts: Vec<usize>,
        edges: Vec<Vec<LgsEdge>>,
        /// `iota[l]` maps each vertex of `V_{l+1}` to a vertex of `V_l`.
        iota: Vec<Vec<usize>>,
    },
}

/// A lambda-graph system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaGraphSystem {
    symbol_len: usize,
    levels: LgsLevels,
}

/// A finite labeled directed graph, the seed of a stationary system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    pub vertices: usize,
    pub edges: Vec<LgsEdge>,
    pub symbol_len: usize,
}

impl LambdaGraphSystem {
    pub fn stationary(
        symbol_len: usize,
        vertices: usize,
        edges: Vec<LgsEdge>,
        iota: Vec<usize>,
    ) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidSystem("no vertices".into()));
        }
        if iota.len() != vertices {
            return Err(Error::DimensionMismatch(format!(
                "iota has {} entries for {vertices} vertices",
                iota.len()
            )));
        }
        for (idx, e) in edges.iter().enumerate() {
            if e.src >= vertices || e.dst >= vertices {
                return Err(Error::DimensionMismatch(format!(
                    "edge {idx} endpoints out of range"
                )));
            }
            if e.label.len() != symbol_len {
                return Err(Error::ShapeMismatch(format!(
                    "edge {idx} label {} has length {}, expected {symbol_len}",
                    e.label,
                    e.label.len()
                )));
            }
        }
        if let Some(&bad) = iota.iter().find(|&&v| v >= vertices) {
            return Err(Error::DimensionMismatch(format!(
                "iota image {bad} out of range"
            )));
        }
        Ok(LambdaGraphSystem {
            symbol_len,
            levels: LgsLevels::Stationary {
                vertices,
                edges,
                iota,
            },
        })
    }

    pub fn explicit(
        symbol_len: usize,
        vertex_counts: Vec<usize>,
        edges: Vec<Vec<LgsEdge>>,
        iota: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if vertex_counts.is_empty() || edges.len() + 1 != vertex_counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vertex levels against {} edge levels",
                vertex_counts.len(),
                edges.len()
            )));
        }
        if iota.len() != edges.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} iota levels against {} edge levels",
                iota.len(),
                edges.len()
            )));
        }
        for (l, es) in edges.iter().enumerate() {
            for e in es {
                if e.src >= vertex_counts[l] || e.dst >= vertex_counts[l + 1] {
                    return Err(Error::DimensionMismatch(format!(
                        "edge at level {l} out of range"
                    )));
                }
                if e.label.len() != symbol_len {
                    return Err(Error::ShapeMismatch(format!(
                        "edge label {} at level {l} has length {}, expected {symbol_len}",
                        e.label,
                        e.label.len()
                    )));
                }
            }
        }
        for (l, map) in iota.iter().enumerate() {
            if map.len() != vertex_counts[l + 1] {
                return Err(Error::DimensionMismatch(format!(
                    "iota at level {l} has {} entries for {} vertices",
                    map.len(),
                    vertex_counts[l + 1]
                )));
            }
            if let Some(&bad) = map.iter().find(|&&v| v >= vertex_counts[l]) {
                return Err(Error::DimensionMismatch(format!(
                    "iota image {bad} at level {l} out of range"
                )));
            }
        }
        Ok(LambdaGraphSystem {
            symbol_len,
            levels: LgsLevels::Explicit {
                vertex_counts,
                edges,
                iota,
            },
        })
    }

    /// Repeats a finite labeled graph level to level with `ι = id`.
    pub fn from_labeled_graph(g: &LabeledGraph) -> Result<Self> {
        let mut has_out = vec![false; g.vertices];
        let mut has_in = vec![false; g.vertices];
        for e in &g.edges {
            has_out[e.src] = true;
            has_in[e.dst] = true;
        }
        for v in 0..g.vertices {
            if !has_out[v] || !has_in[v] {
                return Err(Error::InvalidSystem(format!(
                    "vertex {v} is dangling: needs both in- and out-edges"
                )));
            }
        }
        LambdaGraphSystem::stationary(
            g.symbol_len,
            g.vertices,
            g.edges.clone(),
            (0..g.vertices).collect(),
        )
    }

    /// Reads the graph off a symbolic matrix system: one edge per term of
    /// `M_l(i,j)`, `ι` given by the unique 1 in each column of `I_l`.
    pub fn from_sms(sys: &Sms) -> Result<Self> {
        let read_level = |l: usize| -> Result<(Vec<LgsEdge>, Vec<usize>)> {
            let (m, i) = sys.pair(l)?;
            let mut edges = Vec::new();
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    for t in m.get(r, c).terms() {
                        edges.push(LgsEdge {
                            src: r,
                            dst: c,
                            label: t.clone(),
                        });
                    }
                }
            }
            edges.sort();
            let mut iota = Vec::with_capacity(i.cols());
            for c in 0..i.cols() {
                let ones: Vec<usize> = (0..i.rows()).filter(|&r| i.get(r, c) == 1).collect();
                if ones.len() != 1 {
                    return Err(Error::InvalidSystem(format!(
                        "column {c} of I at level {l} has {} ones, expected exactly one",
                        ones.len()
                    )));
                }
                iota.push(ones[0]);
            }
            Ok((edges, iota))
        };
        match sys.edge_levels() {
            None => {
                let (edges, iota) = read_level(0)?;
                LambdaGraphSystem::stationary(sys.symbol_len(), sys.vertex_count(0)?, edges, iota)
            }
            Some(levels) => {
                let mut vertex_counts = Vec::with_capacity(levels + 1);
                for l in 0..=levels {
                    vertex_counts.push(sys.vertex_count(l)?);
                }
                let mut edges = Vec::with_capacity(levels);
                let mut iota = Vec::with_capacity(levels);
                for l in 0..levels {
                    let (e, i) = read_level(l)?;
                    edges.push(e);
                    iota.push(i);
                }
                LambdaGraphSystem::explicit(sys.symbol_len(), vertex_counts, edges, iota)
            }
        }
    }

    /// Writes the system back as matrices. Requires all structural
    /// invariants; inverse of [`LambdaGraphSystem::from_sms`] up to term
    /// ordering.
    pub fn to_sms(&self) -> Result<Sms> {
        let report = self.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidSystem(format!("{v}")));
        }
        let build = |l: usize| -> Result<(SymbolicMatrix, BitMatrix)> {
            let rows = self.vertex_count(l)?;
            let cols = self.vertex_count(l + 1)?;
            let mut sums: Vec<Vec<Word>> = vec![Vec::new(); rows * cols];
            for e in self.edges_at(l)? {
                sums[e.src * cols + e.dst].push(e.label.clone());
            }
            let entries = sums.into_iter().map(FormalSum::from_words).collect();
            let m = SymbolicMatrix::new(rows, cols, self.symbol_len, entries)?;
            let mut bits = vec![0u8; rows * cols];
            for (j, &i) in self.iota_at(l)?.iter().enumerate() {
                bits[i * cols + j] = 1;
            }
            Ok((m, BitMatrix::new(rows, cols, bits)?))
        };
        match self.edge_levels() {
            None => {
                let (m, i) = build(0)?;
                Sms::stationary(m, i)
            }
            Some(levels) => {
                let pairs = (0..levels).map(build).collect::<Result<Vec<_>>>()?;
                Sms::explicit(pairs)
            }
        }
    }

    pub fn symbol_len(&self) -> usize {
        self.symbol_len
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.levels, LgsLevels::Stationary { .. })
    }

    /// Number of stored edge levels; `None` for stationary systems.
    pub fn edge_levels(&self) -> Option<usize> {
        match &self.levels {
            LgsLevels::Stationary { .. } => None,
            LgsLevels::Explicit { edges, .. } => Some(edges.len()),
        }
    }

    pub fn vertex_count(&self, l: usize) -> Result<usize> {
        match &self.levels {
            LgsLevels::Stationary { vertices, .. } => Ok(*vertices),
            LgsLevels::Explicit { vertex_counts, .. } => vertex_counts
                .get(l)
                .copied()
                .ok_or_else(|| Error::WindowUnavailable(format!("vertex level {l}"))),
        }
    }

    pub fn edges_at(&self, l: usize) -> Result<&[LgsEdge]> {
        match &self.levels {
            LgsLevels::Stationary { edges, .. } => Ok(edges),
            LgsLevels::Explicit { edges, .. } => edges
                .get(l)
                .map(|v| v.as_slice())
                .ok_or_else(|| Error::WindowUnavailable(format!("edge level {l}"))),
        }
    }

    /// The map `V_{l+1} -> V_l`.
    pub fn iota_at(&self, l: usize) -> Result<&[usize]> {
        match &self.levels {
            LgsLevels::Stationary { iota, .. } => Ok(iota),
            LgsLevels::Explicit { iota, .. } => iota
                .get(l)
                .map(|v| v.as_slice())
                .ok_or_else(|| Error::WindowUnavailable(format!("iota level {l}"))),
        }
    }

    fn structural_levels(&self) -> Vec<usize> {
        match &self.levels {
            LgsLevels::Stationary { .. } => vec![0],
            LgsLevels::Explicit { edges, .. } => (0..edges.len()).collect(),
        }
    }

    /// Checks all structural invariants: `ι` surjective, successors and
    /// predecessors present, `ι`-compatible label sets, no duplicate edges.
    pub fn validate(&self) -> LgsReport {
        let mut violations = Vec::new();
        for l in self.structural_levels() {
            let iota = self.iota_at(l).expect("level exists");
            let below = self.vertex_count(l).expect("level exists");
            let mut hit = vec![false; below];
            for &u in iota {
                hit[u] = true;
            }
            for (u, ok) in hit.iter().enumerate() {
                if !ok {
                    violations.push(LgsViolation::IotaNotSurjective {
                        level: l,
                        vertex: u,
                    });
                }
            }
            let edges = self.edges_at(l).expect("level exists");
            let mut has_out = vec![false; below];
            let mut has_in = vec![false; self.vertex_count(l + 1).expect("level exists")];
            for e in edges {
                has_out[e.src] = true;
                has_in[e.dst] = true;
            }
            for (v, ok) in has_out.iter().enumerate() {
                if !ok {
                    violations.push(LgsViolation::NoSuccessor {
                        level: l,
                        vertex: v,
                    });
                }
            }
            // level-0 in-degree is unconstrained; the template of a
            // stationary system stands for every level >= 1
            let check_in = self.is_stationary() || l + 1 >= 1;
            if check_in {
                for (v, ok) in has_in.iter().enumerate() {
                    if !ok {
                        violations.push(LgsViolation::NoPredecessor {
                            level: l + 1,
                            vertex: v,
                        });
                    }
                }
            }
        }
        // iota-compatibility of incoming label sets needs two edge levels
        for l in self.label_compat_levels() {
            let iota = self.iota_at(l).expect("level exists");
            let upper = self.edges_at(l).expect("level exists");
            let lower = self.edges_at(l - 1).expect("level exists");
            for v in 0..self.vertex_count(l + 1).expect("level exists") {
                let into_v: BTreeSet<&Word> = upper
                    .iter()
                    .filter(|e| e.dst == v)
                    .map(|e| &e.label)
                    .collect();
                let into_iv: BTreeSet<&Word> = lower
                    .iter()
                    .filter(|e| e.dst == iota[v])
                    .map(|e| &e.label)
                    .collect();
                if into_v != into_iv {
                    violations.push(LgsViolation::LabelIotaIncompatible {
                        level: l,
                        vertex: v,
                    });
                }
            }
        }
        for w in self.check_essential() {
            violations.push(LgsViolation::DuplicateEdge(w));
        }
        LgsReport { violations }
    }

    fn label_compat_levels(&self) -> Vec<usize> {
        match &self.levels {
            LgsLevels::Stationary { .. } => vec![1],
            LgsLevels::Explicit { edges, .. } => (1..edges.len()).collect(),
        }
    }

    /// Pairs of distinct edges with equal label and equal terminal.
    pub fn check_left_resolving(&self) -> Vec<EdgePairWitness> {
        let mut out = Vec::new();
        for l in self.structural_levels() {
            let edges = self.edges_at(l).expect("level exists");
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    if edges[i].label == edges[j].label && edges[i].dst == edges[j].dst {
                        out.push(EdgePairWitness {
                            level: l,
                            first: i,
                            second: j,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn is_left_resolving(&self) -> bool {
        self.check_left_resolving().is_empty()
    }

    /// Pairs of distinct edges sharing source, terminal, and label.
    pub fn check_essential(&self) -> Vec<EdgePairWitness> {
        let mut out = Vec::new();
        for l in self.structural_levels() {
            let edges = self.edges_at(l).expect("level exists");
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    if edges[i] == edges[j] {
                        out.push(EdgePairWitness {
                            level: l,
                            first: i,
                            second: j,
                        });
                    }
                }
            }
        }
        out
    }

    /// Compares the label multisets of `E^ι_{l,l+1}(u,v)` and
    /// `E_ι^{l-1,l}(u,v)` for every vertex pair; equality is equivalent to
    /// the existence of the level-bridging label-preserving bijections.
    pub fn check_local_property(&self) -> Vec<LocalPropertyWitness> {
        let mut out = Vec::new();
        for l in self.label_compat_levels() {
            let iota_low = self.iota_at(l - 1).expect("level exists");
            let iota_high = self.iota_at(l).expect("level exists");
            let upper = self.edges_at(l).expect("level exists");
            let lower = self.edges_at(l - 1).expect("level exists");
            let us = self.vertex_count(l - 1).expect("level exists");
            let vs = self.vertex_count(l + 1).expect("level exists");
            for u in 0..us {
                for v in 0..vs {
                    let mut ms1: Vec<&Word> = upper
                        .iter()
                        .filter(|e| e.dst == v && iota_low[e.src] == u)
                        .map(|e| &e.label)
                        .collect();
                    let mut ms2: Vec<&Word> = lower
                        .iter()
                        .filter(|e| e.src == u && e.dst == iota_high[v])
                        .map(|e| &e.label)
                        .collect();
                    ms1.sort();
                    ms2.sort();
                    if ms1 != ms2 {
                        out.push(LocalPropertyWitness { level: l, u, v });
                    }
                }
            }
        }
        out
    }

    /// The edge surjection one level down: entry `k` is the index in
    /// `E_{l-1,l}` of the unique edge with source `ι(s(e_k))`, terminal
    /// `ι(t(e_k))`, and the same label.
    pub fn phi_level(&self, l: usize) -> Result<Vec<usize>> {
        if l == 0 {
            return Err(Error::WindowUnavailable("phi needs level >= 1".into()));
        }
        let (upper_l, lower_l) = match &self.levels {
            LgsLevels::Stationary { .. } => (0, 0),
            LgsLevels::Explicit { .. } => (l, l - 1),
        };
        let iota_low = self.iota_at(lower_l)?;
        let iota_high = match &self.levels {
            LgsLevels::Stationary { .. } => self.iota_at(0)?,
            LgsLevels::Explicit { .. } => self.iota_at(l)?,
        };
        let upper = self.edges_at(upper_l)?;
        let lower = self.edges_at(lower_l)?;
        let mut out = Vec::with_capacity(upper.len());
        for (k, e) in upper.iter().enumerate() {
            let want_src = iota_low[e.src];
            let want_dst = iota_high[e.dst];
            let matches: Vec<usize> = lower
                .iter()
                .enumerate()
                .filter(|(_, f)| f.src == want_src && f.dst == want_dst && f.label == e.label)
                .map(|(i, _)| i)
                .collect();
            match matches.as_slice() {
                [unique] => out.push(*unique),
                [] => {
                    return Err(Error::LocalProperty(format!(
                        "edge {k} at level {l} ({} -{}-> {}) has no image",
                        e.src, e.label, e.dst
                    )))
                }
                _ => {
                    return Err(Error::InvalidSystem(format!(
                        "edge {k} at level {l} has several images; system is not essential"
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Materializes the surjections for levels `1..=depth` and verifies
    /// surjectivity at each.
    pub fn phi_map(&self, depth: usize) -> Result<PhiMap> {
        let mut maps = Vec::with_capacity(depth);
        for l in 1..=depth {
            let map = self.phi_level(l)?;
            let lower_len = self
                .edges_at(match &self.levels {
                    LgsLevels::Stationary { .. } => 0,
                    LgsLevels::Explicit { .. } => l - 1,
                })?
                .len();
            let mut hit = vec![false; lower_len];
            for &i in &map {
                hit[i] = true;
            }
            if let Some(miss) = hit.iter().position(|&h| !h) {
                return Err(Error::LocalProperty(format!(
                    "phi at level {l} misses edge {miss}"
                )));
            }
            maps.push(map);
        }
        Ok(PhiMap { maps })
    }

    /// The block recoding: vertices are `(n-1)`-paths, edges overlapping
    /// pairs, labels the concatenated edge labels. Requires left-resolving.
    pub fn higher_block(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::WindowUnavailable("higher block needs n >= 1".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if let Some(w) = self.check_left_resolving().first() {
            return Err(Error::NotLeftResolving(format!(
                "edges {} and {} at level {} share label and terminal",
                w.first, w.second, w.level
            )));
        }
        match &self.levels {
            LgsLevels::Stationary { edges, .. } => {
                let phi = self.phi_level(1)?;
                let paths = path_list(|_| Ok(edges), 0, n - 1)?;
                let index: BTreeMap<Vec<usize>, usize> = paths
                    .iter()
                    .cloned()
                    .enumerate()
                    .map(|(i, p)| (p, i))
                    .collect();
                let mut new_edges = Vec::new();
                for (src_idx, p) in paths.iter().enumerate() {
                    let last = &edges[p[n - 2]];
                    for (f_idx, f) in edges.iter().enumerate() {
                        if f.src != last.dst {
                            continue;
                        }
                        let mut q = p[1..].to_vec();
                        q.push(f_idx);
                        let dst_idx = index[&q];
                        let mut label = Word::empty();
                        for &ei in p {
                            label = label.concat(&edges[ei].label);
                        }
                        label = label.concat(&f.label);
                        new_edges.push(LgsEdge {
                            src: src_idx,
                            dst: dst_idx,
                            label,
                        });
                    }
                }
                let mut iota = Vec::with_capacity(paths.len());
                for p in &paths {
                    let image: Vec<usize> = p.iter().map(|&ei| phi[ei]).collect();
                    iota.push(*index.get(&image).ok_or_else(|| {
                        Error::LocalProperty("phi image is not a stored path".into())
                    })?);
                }
                LambdaGraphSystem::stationary(self.symbol_len * n, paths.len(), new_edges, iota)
            }
            LgsLevels::Explicit { edges, .. } => {
                let total = edges.len();
                if total < n {
                    return Err(Error::WindowUnavailable(format!(
                        "higher block with n={n} needs {n} edge levels, have {total}"
                    )));
                }
                let out_levels = total - n + 1;
                let mut level_paths: Vec<Vec<Vec<usize>>> = Vec::with_capacity(out_levels + 1);
                for l in 0..=out_levels {
                    level_paths.push(path_list(|t| self.edges_at(t), l, n - 1)?);
                }
                let indexes: Vec<BTreeMap<Vec<usize>, usize>> = level_paths
                    .iter()
                    .map(|ps| {
                        ps.iter()
                            .cloned()
                            .enumerate()
                            .map(|(i, p)| (p, i))
                            .collect()
                    })
                    .collect();
                let mut new_edges = Vec::with_capacity(out_levels);
                let mut new_iota = Vec::with_capacity(out_levels);
                for l in 0..out_levels {
                    let mut level_edges = Vec::new();
                    for (src_idx, p) in level_paths[l].iter().enumerate() {
                        let last = &self.edges_at(l + n - 2)?[p[n - 2]];
                        for (f_idx, f) in self.edges_at(l + n - 1)?.iter().enumerate() {
                            if f.src != last.dst {
                                continue;
                            }
                            let mut q = p[1..].to_vec();
                            q.push(f_idx);
                            let dst_idx = indexes[l + 1][&q];
                            let mut label = Word::empty();
                            for (off, &ei) in p.iter().enumerate() {
                                label = label.concat(&self.edges_at(l + off)?[ei].label);
                            }
                            label = label.concat(&f.label);
                            level_edges.push(LgsEdge {
                                src: src_idx,
                                dst: dst_idx,
                                label,
                            });
                        }
                    }
                    new_edges.push(level_edges);
                    let mut iota_l = Vec::with_capacity(level_paths[l + 1].len());
                    for p in &level_paths[l + 1] {
                        let mut image = Vec::with_capacity(p.len());
                        for (off, &ei) in p.iter().enumerate() {
                            let phi = self.phi_level(l + 1 + off)?;
                            image.push(phi[ei]);
                        }
                        iota_l.push(*indexes[l].get(&image).ok_or_else(|| {
                            Error::LocalProperty("phi image is not a stored path".into())
                        })?);
                    }
                    new_iota.push(iota_l);
                }
                let vertex_counts = level_paths.iter().map(|p| p.len()).collect();
                LambdaGraphSystem::explicit(self.symbol_len * n, vertex_counts, new_edges, new_iota)
            }
        }
    }

    /// Edge-index paths of `len` edges from level `l0` in the construction
    /// order used by [`LambdaGraphSystem::higher_block`]: block vertices are
    /// `block_paths(l, n-1)`, block edges `block_paths(l, n)`, index for
    /// index.
    pub fn block_paths(&self, l0: usize, len: usize) -> Result<Vec<Vec<usize>>> {
        path_list(|t| self.edges_at(t), l0, len)
    }

    /// All edge-index paths of `m` edges starting at level `l0`.
    pub fn enumerate_paths(&self, l0: usize, m: usize) -> Result<BTreeSet<Vec<usize>>> {
        if m == 0 {
            let mut s = BTreeSet::new();
            s.insert(Vec::new());
            return Ok(s);
        }
        // check the whole window up front so truncation fails loudly
        for t in 0..m {
            self.edges_at(l0 + t)?;
        }
        let mut paths: BTreeSet<Vec<usize>> = BTreeSet::new();
        let first = self.edges_at(l0)?;
        for i in 0..first.len() {
            paths.insert(vec![i]);
        }
        for t in 1..m {
            let edges = self.edges_at(l0 + t)?;
            let mut next = BTreeSet::new();
            for p in &paths {
                let prev = &self.edges_at(l0 + t - 1)?[*p.last().expect("non-empty")];
                for (i, e) in edges.iter().enumerate() {
                    if e.src == prev.dst {
                        let mut q = p.clone();
                        q.push(i);
                        next.insert(q);
                    }
                }
            }
            paths = next;
        }
        Ok(paths)
    }

    /// Whether a word is the label of some path from level `l0`, by vertex
    /// reachability.
    pub fn is_word_admissible(&self, l0: usize, w: &Word) -> Result<bool> {
        let chunks = w.chunks(self.symbol_len)?;
        let mut reachable: BTreeSet<usize> = (0..self.vertex_count(l0)?).collect();
        for (step, chunk) in chunks.iter().enumerate() {
            let mut next = BTreeSet::new();
            for e in self.edges_at(l0 + step)? {
                if reachable.contains(&e.src) && e.label == *chunk {
                    next.insert(e.dst);
                }
            }
            if next.is_empty() {
                return Ok(false);
            }
            reachable = next;
        }
        Ok(true)
    }

    /// The label projections of [`LambdaGraphSystem::enumerate_paths`].
    pub fn enumerate_words(&self, l0: usize, m: usize) -> Result<BTreeSet<Word>> {
        let mut out = BTreeSet::new();
        for p in self.enumerate_paths(l0, m)? {
            let mut w = Word::empty();
            for (off, &ei) in p.iter().enumerate() {
                w = w.concat(&self.edges_at(l0 + off)?[ei].label);
            }
            out.insert(w);
        }
        Ok(out)
    }
}

fn path_list<'a, F>(edges_at: F, l0: usize, len: usize) -> Result<Vec<Vec<usize>>>
where
    F: Fn(usize) -> Result<&'a [LgsEdge]>,
{
    if len == 0 {
        return Ok(vec![Vec::new()]);
    }
    let mut paths: Vec<Vec<usize>> = (0..edges_at(l0)?.len()).map(|i| vec![i]).collect();
    for t in 1..len {
        let prev_edges = edges_at(l0 + t - 1)?;
        let edges = edges_at(l0 + t)?;
        let mut next = Vec::new();
        for p in &paths {
            let prev = &prev_edges[*p.last().expect("non-empty")];
            for (i, e) in edges.iter().enumerate() {
                if e.src == prev.dst {
                    let mut q = p.clone();
                    q.push(i);
                    next.push(q);
                }
            }
        }
        paths = next;
    }
    Ok(paths)
}

/// The materialized level surjections `E_{l,l+1} -> E_{l-1,l}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiMap {
    /// `maps[i]` sends edge indices at level `i+1` to indices at level `i`.
    pub maps: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LgsReport {
    pub violations: Vec<LgsViolation>,
}

impl LgsReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LgsViolation {
    IotaNotSurjective { level: usize, vertex: usize },
    NoSuccessor { level: usize, vertex: usize },
    NoPredecessor { level: usize, vertex: usize },
    LabelIotaIncompatible { level: usize, vertex: usize },
    DuplicateEdge(EdgePairWitness),
}

impl fmt::Display for LgsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LgsViolation::IotaNotSurjective { level, vertex } => {
                write!(f, "iota at level {level} misses vertex {vertex}")
            }
            LgsViolation::NoSuccessor { level, vertex } => {
                write!(f, "vertex {vertex} at level {level} has no successor")
            }
            LgsViolation::NoPredecessor { level, vertex } => {
                write!(f, "vertex {vertex} at level {level} has no predecessor")
            }
            LgsViolation::LabelIotaIncompatible { level, vertex } => write!(
                f,
                "incoming labels of vertex {vertex} at level {} differ from those of its iota image",
                level + 1
            ),
            LgsViolation::DuplicateEdge(w) => write!(
                f,
                "edges {} and {} at level {} coincide",
                w.first, w.second, w.level
            ),
        }
    }
}

/// A pair of edge indices at one level witnessing a failed check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgePairWitness {
    pub level: usize,
    pub first: usize,
    pub second: usize,
}

/// Witness of a local-property failure: label multisets differ for the
/// vertex pair `(u, v)` bridging levels `level-1` and `level+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalPropertyWitness {
    pub level: usize,
    pub u: usize,
    pub v: usize,
}
