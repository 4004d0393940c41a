//! Edge identity, the distinct total weight order and adjacency storage.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Dense vertex index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(v: usize) -> Self {
        VertexId(v as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Stable edge identifier. Ids are never reused within one owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Super-edges sort below every real edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeClass {
    Super = 0,
    Real = 1,
}

/// Totally ordered edge weight: lexicographic on `(class, rank, tiebreak)`.
///
/// The derived `Ord` relies on the field order below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightKey {
    pub class: EdgeClass,
    pub rank: u64,
    pub tiebreak: u64,
}

impl WeightKey {
    pub fn real(rank: u64, tiebreak: u64) -> Self {
        WeightKey {
            class: EdgeClass::Real,
            rank,
            tiebreak,
        }
    }

    pub fn super_edge(tiebreak: u64) -> Self {
        WeightKey {
            class: EdgeClass::Super,
            rank: 0,
            tiebreak,
        }
    }

    pub fn is_real(&self) -> bool {
        self.class == EdgeClass::Real
    }
}

impl fmt::Display for WeightKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.class {
            EdgeClass::Super => 'S',
            EdgeClass::Real => 'R',
        };
        write!(f, "{}{}:{}", c, self.rank, self.tiebreak)
    }
}

/// Strict comparison of two keys.
#[inline]
pub fn key_less(a: WeightKey, b: WeightKey) -> bool {
    a < b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeStatus {
    Tree,
    NonTree,
    Deleted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub endpoints: (VertexId, VertexId),
    pub key: WeightKey,
    pub level: u8,
    pub status: EdgeStatus,
}

impl EdgeRecord {
    pub fn other(&self, x: VertexId) -> VertexId {
        if self.endpoints.0 == x {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn is_live(&self) -> bool {
        self.status != EdgeStatus::Deleted
    }
}

/// Assigns REAL-class keys by sorted position of the raw weights.
///
/// Edge `k` of the input gets id `k`; equal raw weights are ordered by id.
/// Raw weights are compared with `f64::total_cmp`.
pub fn normalize_weights<T>(edges: &[(T, f64)]) -> Vec<WeightKey> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| match edges[a].1.total_cmp(&edges[b].1) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut keys = vec![WeightKey::real(0, 0); edges.len()];
    for (rank, &idx) in order.iter().enumerate() {
        keys[idx] = WeightKey::real(rank as u64, idx as u64);
    }
    keys
}

/// Edge table plus per-vertex incidence lists. Deleted edges are tombstoned
/// in the table and unlinked from the incidence lists.
#[derive(Clone, Debug, Default)]
pub struct EdgeStore {
    edges: Vec<EdgeRecord>,
    incident: Vec<Vec<EdgeId>>,
    // position of each edge inside the incidence lists of its two endpoints
    slots: Vec<[u32; 2]>,
}

impl EdgeStore {
    pub fn new(n: usize) -> Self {
        EdgeStore {
            edges: Vec::new(),
            incident: vec![Vec::new(); n],
            slots: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.incident.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.index() >= self.incident.len() {
            return Err(Error::VertexOutOfRange {
                vertex: v.0,
                n: self.incident.len(),
            });
        }
        Ok(())
    }

    /// Appends an edge with the next id. Self-loops are rejected.
    pub fn push(&mut self, u: VertexId, v: VertexId, key: WeightKey) -> Result<EdgeId> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u.0));
        }
        let id = EdgeId(self.edges.len() as u32);
        self.edges.push(EdgeRecord {
            id,
            endpoints: (u, v),
            key,
            level: 0,
            status: EdgeStatus::NonTree,
        });
        let su = self.incident[u.index()].len() as u32;
        self.incident[u.index()].push(id);
        let sv = self.incident[v.index()].len() as u32;
        self.incident[v.index()].push(id);
        self.slots.push([su, sv]);
        Ok(id)
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> &EdgeRecord {
        &self.edges[e.index()]
    }

    #[inline]
    pub fn get_mut(&mut self, e: EdgeId) -> &mut EdgeRecord {
        &mut self.edges[e.index()]
    }

    pub fn try_get(&self, e: EdgeId) -> Option<&EdgeRecord> {
        self.edges.get(e.index())
    }

    pub fn iter(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.iter()
    }

    pub fn live(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.iter().filter(|r| r.is_live())
    }

    /// Marks the edge deleted and unlinks it from both incidence lists.
    pub fn tombstone(&mut self, e: EdgeId) {
        let rec = &mut self.edges[e.index()];
        if rec.status == EdgeStatus::Deleted {
            return;
        }
        rec.status = EdgeStatus::Deleted;
        let (u, v) = rec.endpoints;
        for (side, x) in [u, v].into_iter().enumerate() {
            let pos = self.slots[e.index()][side] as usize;
            let list = &mut self.incident[x.index()];
            list.swap_remove(pos);
            if pos < list.len() {
                let moved = list[pos];
                let mrec = &self.edges[moved.index()];
                let mside = if mrec.endpoints.0 == x { 0 } else { 1 };
                self.slots[moved.index()][mside] = pos as u32;
            }
        }
    }

    /// Live edges incident to `v`, in unspecified order.
    pub fn adjacency(&self, v: VertexId) -> Result<&[EdgeId]> {
        self.check_vertex(v)?;
        Ok(&self.incident[v.index()])
    }
}
