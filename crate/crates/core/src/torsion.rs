//! The ℓ-torsion subcomplex of the quotient, its reduction by edge fusion, and invariants
//! of its homeomorphism type.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cellcomplex::{EquivariantComplex, StabiliserType};
use crate::error::{Error, Result};
use crate::moebius::GroupElement;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionVertex {
    /// Vertex orbit in the complex.
    pub orbit: usize,
    pub kind: StabiliserType,
}

/// One end of a torsion edge, with the data fixing the induced map on homology.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEnd {
    /// Index into `TorsionGraph::vertices`.
    pub vertex: usize,
    /// Incidence sign.
    pub sign: i64,
    /// For Klein four-group vertices, which involution the edge stabiliser maps to.
    pub slot: usize,
    /// For ℓ = 3, whether the edge generator maps into the class of the inverse of the
    /// vertex's reference element.
    pub inverted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionEdge {
    /// Edge orbits of the complex making up this edge; more than one after fusion.
    pub orbits: Vec<usize>,
    pub ends: [EdgeEnd; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionGraph {
    pub ell: u64,
    pub vertices: Vec<TorsionVertex>,
    pub edges: Vec<TorsionEdge>,
    /// Set for (m, ℓ) = (1, 2) and (3, 3), where extra units act on the vertical cells.
    pub exceptional: bool,
}

/// Result of [`reduce`]; same shape, loops allowed.
pub type ReducedGraph = TorsionGraph;

impl TorsionGraph {
    /// Number of incident edge ends per vertex; a loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for e in &self.edges {
            for end in &e.ends {
                d[end.vertex] += 1;
            }
        }
        d
    }

    /// Connected components as sorted lists of vertex and edge indices.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.ends[0].vertex), find(&mut parent, e.ends[1].vertex));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            comps.entry(r).or_default().0.push(v);
        }
        for (k, e) in self.edges.iter().enumerate() {
            let r = find(&mut parent, e.ends[0].vertex);
            comps.get_mut(&r).expect("component").1.push(k);
        }
        comps.into_values().collect()
    }

    /// The subgraph on one component, re-indexed.
    pub fn subgraph(&self, vertices: &[usize], edges: &[usize]) -> TorsionGraph {
        let pos: BTreeMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        TorsionGraph {
            ell: self.ell,
            vertices: vertices.iter().map(|&v| self.vertices[v].clone()).collect(),
            edges: edges
                .iter()
                .map(|&k| {
                    let mut e = self.edges[k].clone();
                    for end in e.ends.iter_mut() {
                        end.vertex = pos[&end.vertex];
                    }
                    e
                })
                .collect(),
            exceptional: self.exceptional,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }
}

fn sorted_by_record(mut v: Vec<GroupElement>) -> Vec<GroupElement> {
    v.sort_by_key(|g| g.normalized().record().0);
    v
}

fn element_of_order(elements: &[GroupElement], n: usize) -> Option<GroupElement> {
    sorted_by_record(elements.to_vec()).into_iter().find(|g| g.psl_order() == Some(n))
}

/// True when `(m, ell)` is one of the two cases with torsion on the vertical cells.
pub fn is_exceptional(m: i64, ell: u64) -> bool {
    (m == 1 && ell == 2) || (m == 3 && ell == 3)
}

/// The ℓ-torsion subcomplex of the quotient; empty for primes other than 2 and 3.
pub fn extract(complex: &EquivariantComplex, ell: u64) -> Result<TorsionGraph> {
    let exceptional = is_exceptional(complex.field.m, ell);
    let mut g = TorsionGraph { ell, vertices: Vec::new(), edges: Vec::new(), exceptional };
    if ell != 2 && ell != 3 {
        return Ok(g);
    }
    let divisible = |t: StabiliserType| t.order().is_some_and(|n| n % ell as usize == 0);
    let mut index = BTreeMap::new();
    for (k, o) in complex.cells[0].iter().enumerate() {
        if divisible(o.kind) {
            index.insert(k, g.vertices.len());
            g.vertices.push(TorsionVertex { orbit: k, kind: o.kind });
        }
    }
    for (k, o) in complex.cells[2].iter().enumerate() {
        if divisible(o.kind) && !exceptional {
            return Err(Error::Invariant(format!("2-cell orbit {k} has {}-torsion in its stabiliser", ell)));
        }
    }
    let edge_kind = if ell == 2 { StabiliserType::Z2 } else { StabiliserType::Z3 };
    for (k, o) in complex.cells[1].iter().enumerate() {
        if o.kind == StabiliserType::Trivial {
            continue;
        }
        if !matches!(o.kind, StabiliserType::Z2 | StabiliserType::Z3) {
            return Err(Error::Invariant(format!("edge orbit {k} has non-cyclic stabiliser {}", o.kind.name())));
        }
        if o.kind != edge_kind {
            continue;
        }
        let h = element_of_order(&o.stabiliser, ell as usize).ok_or_else(|| Error::Invariant("edge stabiliser without generator".into()))?;
        let mut ends = Vec::new();
        for inc in &o.boundary {
            let vertex = *index.get(&inc.orbit).ok_or_else(|| Error::Invariant(format!("torsion edge {k} ends at a vertex without {ell}-torsion")))?;
            let stab = &complex.cells[0][inc.orbit].stabiliser;
            let image = (inc.transport * h * inc.transport.inverse()).normalized();
            if !stab.iter().any(|s| s.psl_eq(&image)) {
                return Err(Error::Invariant(format!("edge {k}: conjugated stabiliser is not in the vertex stabiliser")));
            }
            let mut end = EdgeEnd { vertex, sign: inc.sign, slot: 0, inverted: false };
            let kind = complex.cells[0][inc.orbit].kind;
            if ell == 2 && kind == StabiliserType::D2 {
                let inv: Vec<GroupElement> = sorted_by_record(stab.iter().filter(|s| !s.is_identity_psl()).copied().collect());
                end.slot = inv.iter().position(|s| s.psl_eq(&image)).expect("involution");
            }
            if ell == 3 {
                let r = element_of_order(stab, 3).expect("order three element");
                end.inverted = !stab.iter().any(|a| (*a * r * a.inverse()).psl_eq(&image));
            }
            ends.push(end);
        }
        let ends: [EdgeEnd; 2] = ends.try_into().map_err(|_| Error::Invariant("edge without two ends".into()))?;
        g.edges.push(TorsionEdge { orbits: vec![k], ends });
    }
    Ok(g)
}

/// Iterated edge fusion at vertices with exactly two incident edge ends.
pub fn reduce(g: &TorsionGraph) -> Result<ReducedGraph> {
    if g.exceptional {
        return Err(Error::Contract("the exceptional torsion subcomplexes are not reduced".into()));
    }
    let mut g = g.clone();
    loop {
        let deg = g.degrees();
        let candidate = (0..g.vertices.len()).find(|&v| {
            deg[v] == 2 && {
                let inc: Vec<usize> = g.edges.iter().enumerate().filter(|(_, e)| e.ends.iter().any(|x| x.vertex == v)).map(|(k, _)| k).collect();
                inc.len() == 2
            }
        });
        let Some(v) = candidate else { break };
        let inc: Vec<usize> = g.edges.iter().enumerate().filter(|(_, e)| e.ends.iter().any(|x| x.vertex == v)).map(|(k, _)| k).collect();
        let (e1, e2) = (g.edges[inc[0]].clone(), g.edges[inc[1]].clone());
        let j1 = e1.ends.iter().position(|x| x.vertex == v).expect("incident");
        let j2 = e2.ends.iter().position(|x| x.vertex == v).expect("incident");
        let (alpha, a) = (&e1.ends[j1], &e1.ends[1 - j1]);
        let (beta, b) = (&e2.ends[j2], &e2.ends[1 - j2]);
        // beta * column(e1) - alpha * column(e2) vanishes in the row of v
        let new_a = EdgeEnd { vertex: a.vertex, sign: beta.sign * a.sign, slot: a.slot, inverted: beta.inverted ^ a.inverted };
        let new_b = EdgeEnd { vertex: b.vertex, sign: -alpha.sign * b.sign, slot: b.slot, inverted: alpha.inverted ^ b.inverted };
        let mut orbits = e1.orbits.clone();
        orbits.extend(e2.orbits.iter().copied());
        let fused = TorsionEdge { orbits, ends: [new_a, new_b] };
        let mut edges: Vec<TorsionEdge> = g.edges.iter().enumerate().filter(|(k, _)| !inc.contains(k)).map(|(_, e)| e.clone()).collect();
        edges.push(fused);
        for e in edges.iter_mut() {
            for end in e.ends.iter_mut() {
                if end.vertex > v {
                    end.vertex -= 1;
                }
            }
        }
        g.vertices.remove(v);
        g.edges = edges;
    }
    Ok(g)
}

/// Homeomorphism invariants of one connected component.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentSignature {
    /// First Betti number.
    pub loops: usize,
    pub degree1: usize,
    pub degree3: usize,
    pub edges: usize,
    /// Stabiliser types of the degree-one vertices, sorted.
    pub endpoint_types: Vec<StabiliserType>,
}

impl fmt::Display for ComponentSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ends: Vec<&str> = self.endpoint_types.iter().map(|t| t.name()).collect();
        write!(f, "(loops {}, deg1 {}, deg3 {}, edges {}, ends [{}])", self.loops, self.degree1, self.degree3, self.edges, ends.join(","))
    }
}

impl ComponentSignature {
    /// A single edge whose ends are identified.
    pub fn is_loop(&self) -> bool {
        self.loops == 1 && self.edges == 1
    }
}

fn component_signature(g: &TorsionGraph, vertices: &[usize], edges: &[usize]) -> ComponentSignature {
    let deg = g.degrees();
    let mut endpoint_types: Vec<StabiliserType> = vertices.iter().filter(|&&v| deg[v] == 1).map(|&v| g.vertices[v].kind).collect();
    endpoint_types.sort();
    ComponentSignature {
        loops: (edges.len() + 1).saturating_sub(vertices.len()),
        degree1: vertices.iter().filter(|&&v| deg[v] == 1).count(),
        degree3: vertices.iter().filter(|&&v| deg[v] == 3).count(),
        edges: edges.len(),
        endpoint_types,
    }
}

/// Sorted multiset of component signatures.
pub fn signature(g: &ReducedGraph) -> Vec<ComponentSignature> {
    let mut out: Vec<ComponentSignature> = g.components().iter().map(|(v, e)| component_signature(g, v, e)).collect();
    out.sort();
    out
}

/// Expected number of adjacent Z/ℓ edge orbits at a vertex of the given type.
pub fn expected_degree(kind: StabiliserType, ell: u64) -> Option<usize> {
    use StabiliserType::*;
    Some(match (ell, kind) {
        (_, Trivial) => 0,
        (2, Z2) => 2,
        (2, Z3) => 0,
        (2, D2) => 3,
        (2, S3) => 2,
        (2, A4) => 1,
        (3, Z2) => 0,
        (3, Z3) => 2,
        (3, D2) => 0,
        (3, S3) => 1,
        (3, A4) => 2,
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeViolation {
    pub orbit: usize,
    pub kind: StabiliserType,
    pub expected: usize,
    pub found: usize,
}

/// Compares adjacent Z/ℓ edge orbit counts with the rigidity table for every finite vertex
/// orbit of the complex; `g` must be the unreduced subcomplex.
pub fn degree_table_check(g: &TorsionGraph, complex: &EquivariantComplex) -> Vec<DegreeViolation> {
    let deg = g.degrees();
    let mut found: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, v) in g.vertices.iter().enumerate() {
        found.insert(v.orbit, deg[i]);
    }
    let mut out = Vec::new();
    for (k, o) in complex.cells[0].iter().enumerate() {
        let Some(expected) = expected_degree(o.kind, g.ell) else { continue };
        let f = found.get(&k).copied().unwrap_or(0);
        if f != expected {
            out.push(DegreeViolation { orbit: k, kind: o.kind, expected, found: f });
        }
    }
    out
}

/// Stabiliser type of the preimage in SL2 of a finite subgroup of PSL2.
pub fn lift_to_sl2(t: StabiliserType) -> Result<&'static str> {
    use StabiliserType::*;
    Ok(match t {
        Trivial => "Z/2",
        Z2 => "Z/4",
        Z3 => "Z/6",
        D2 => "Q8",
        S3 => "Dic12",
        A4 => "SL(2,3)",
        Zsquare => return Err(Error::Contract("cusp stabilisers are not lifted".into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn end(vertex: usize, sign: i64) -> EdgeEnd {
        EdgeEnd { vertex, sign, slot: 0, inverted: false }
    }

    /// A path a - v1 - v2 - b of Z/2 edges.
    fn path() -> TorsionGraph {
        let kinds = [StabiliserType::A4, StabiliserType::Z2, StabiliserType::S3, StabiliserType::A4];
        TorsionGraph {
            ell: 2,
            vertices: kinds.iter().enumerate().map(|(i, &kind)| TorsionVertex { orbit: i, kind }).collect(),
            edges: (0..3).map(|i| TorsionEdge { orbits: vec![i], ends: [end(i, -1), end(i + 1, 1)] }).collect(),
            exceptional: false,
        }
    }

    #[test]
    fn path_fuses_to_one_edge() {
        let r = reduce(&path()).unwrap();
        assert_eq!(r.edges.len(), 1);
        assert_eq!(r.vertices.len(), 2);
        let sig = signature(&r);
        assert_eq!(sig.len(), 1);
        assert_eq!((sig[0].loops, sig[0].degree1, sig[0].edges), (0, 2, 1));
        assert_eq!(sig[0].endpoint_types, vec![StabiliserType::A4, StabiliserType::A4]);
    }

    #[test]
    fn circle_keeps_one_vertex() {
        let g = TorsionGraph {
            ell: 3,
            vertices: (0..3).map(|i| TorsionVertex { orbit: i, kind: StabiliserType::Z3 }).collect(),
            edges: (0..3).map(|i| TorsionEdge { orbits: vec![i], ends: [end(i, -1), end((i + 1) % 3, 1)] }).collect(),
            exceptional: false,
        };
        let r = reduce(&g).unwrap();
        assert_eq!(r.vertices.len(), 1);
        assert_eq!(r.edges.len(), 1);
        assert!(signature(&r)[0].is_loop());
    }

    #[test]
    fn sl2_lifts() {
        assert_eq!(lift_to_sl2(StabiliserType::Z3).unwrap(), "Z/6");
        assert_eq!(lift_to_sl2(StabiliserType::D2).unwrap(), "Q8");
        assert_eq!(lift_to_sl2(StabiliserType::Trivial).unwrap(), "Z/2");
        assert!(lift_to_sl2(StabiliserType::Zsquare).is_err());
    }
}
