//! Dynamic forest with link, cut, connectivity and path-maximum queries.
//!
//! A link-cut tree where every forest edge is materialised as its own node
//! carrying the edge key; vertex nodes carry no key. The splay aggregate is
//! the node holding the maximum key in the subtree, so a path query returns
//! the heaviest edge directly.

use crate::edge::{VertexId, WeightKey};
use crate::error::{Error, Result};

const NIL: u32 = u32::MAX;

/// Handle to a forest edge. Handles go stale when the edge is cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EdgeHandle {
    slot: u32,
    gen: u32,
}

#[derive(Clone, Debug)]
struct Node {
    ch: [u32; 2],
    p: u32,
    rev: bool,
    key: Option<WeightKey>,
    agg: u32,
}

impl Node {
    fn new(key: Option<WeightKey>, me: u32) -> Self {
        Node {
            ch: [NIL, NIL],
            p: NIL,
            rev: false,
            key,
            agg: if key.is_some() { me } else { NIL },
        }
    }
}

#[derive(Clone, Debug)]
struct Slot {
    ends: (u32, u32),
    gen: u32,
    live: bool,
}

#[derive(Clone, Debug)]
pub struct DynForest {
    n: usize,
    nodes: Vec<Node>,
    slots: Vec<Slot>,
    free: Vec<u32>,
    edges: usize,
}

impl DynForest {
    pub fn new(n: usize) -> Self {
        let nodes = (0..n as u32).map(|i| Node::new(None, i)).collect();
        DynForest {
            n,
            nodes,
            slots: Vec::new(),
            free: Vec::new(),
            edges: 0,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if v.index() >= self.n {
            return Err(Error::VertexOutOfRange {
                vertex: v.0,
                n: self.n,
            });
        }
        Ok(())
    }

    #[inline]
    fn is_root(&self, x: u32) -> bool {
        let p = self.nodes[x as usize].p;
        p == NIL || (self.nodes[p as usize].ch[0] != x && self.nodes[p as usize].ch[1] != x)
    }

    #[inline]
    fn better(&self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].key > self.nodes[b as usize].key {
            a
        } else {
            b
        }
    }

    fn pull(&mut self, x: u32) {
        let [l, r] = self.nodes[x as usize].ch;
        let mut best = if self.nodes[x as usize].key.is_some() {
            x
        } else {
            NIL
        };
        if l != NIL {
            best = self.better(best, self.nodes[l as usize].agg);
        }
        if r != NIL {
            best = self.better(best, self.nodes[r as usize].agg);
        }
        self.nodes[x as usize].agg = best;
    }

    fn push(&mut self, x: u32) {
        if self.nodes[x as usize].rev {
            let node = &mut self.nodes[x as usize];
            node.ch.swap(0, 1);
            node.rev = false;
            let [l, r] = node.ch;
            if l != NIL {
                self.nodes[l as usize].rev ^= true;
            }
            if r != NIL {
                self.nodes[r as usize].rev ^= true;
            }
        }
    }

    fn rotate(&mut self, x: u32) {
        let p = self.nodes[x as usize].p;
        let g = self.nodes[p as usize].p;
        let dir = (self.nodes[p as usize].ch[1] == x) as usize;
        let b = self.nodes[x as usize].ch[dir ^ 1];
        if !self.is_root(p) {
            let gd = (self.nodes[g as usize].ch[1] == p) as usize;
            self.nodes[g as usize].ch[gd] = x;
        }
        self.nodes[x as usize].p = g;
        self.nodes[x as usize].ch[dir ^ 1] = p;
        self.nodes[p as usize].p = x;
        self.nodes[p as usize].ch[dir] = b;
        if b != NIL {
            self.nodes[b as usize].p = p;
        }
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: u32) {
        let mut stack = vec![x];
        let mut y = x;
        while !self.is_root(y) {
            y = self.nodes[y as usize].p;
            stack.push(y);
        }
        while let Some(z) = stack.pop() {
            self.push(z);
        }
        while !self.is_root(x) {
            let p = self.nodes[x as usize].p;
            if !self.is_root(p) {
                let g = self.nodes[p as usize].p;
                let zigzig =
                    (self.nodes[g as usize].ch[1] == p) == (self.nodes[p as usize].ch[1] == x);
                if zigzig {
                    self.rotate(p);
                } else {
                    self.rotate(x);
                }
            }
            self.rotate(x);
        }
    }

    fn access(&mut self, x: u32) {
        let mut last = NIL;
        let mut y = x;
        while y != NIL {
            self.splay(y);
            self.nodes[y as usize].ch[1] = last;
            self.pull(y);
            last = y;
            y = self.nodes[y as usize].p;
        }
        self.splay(x);
    }

    fn make_root(&mut self, x: u32) {
        self.access(x);
        self.nodes[x as usize].rev ^= true;
        self.push(x);
    }

    fn find_root(&mut self, x: u32) -> u32 {
        self.access(x);
        let mut y = x;
        loop {
            self.push(y);
            let l = self.nodes[y as usize].ch[0];
            if l == NIL {
                break;
            }
            y = l;
        }
        self.splay(y);
        y
    }

    fn raw_link(&mut self, x: u32, y: u32) {
        self.make_root(x);
        self.nodes[x as usize].p = y;
    }

    fn raw_cut(&mut self, x: u32, y: u32) {
        self.make_root(x);
        self.access(y);
        // x is now y's left child and has no right child
        debug_assert_eq!(self.nodes[y as usize].ch[0], x);
        self.nodes[y as usize].ch[0] = NIL;
        self.nodes[x as usize].p = NIL;
        self.pull(y);
    }

    pub fn connected(&mut self, u: VertexId, v: VertexId) -> bool {
        if u == v {
            return true;
        }
        if u.index() >= self.n || v.index() >= self.n {
            return false;
        }
        self.find_root(u.0) == self.find_root(v.0)
    }

    pub fn link(&mut self, u: VertexId, v: VertexId, key: WeightKey) -> Result<EdgeHandle> {
        self.check(u)?;
        self.check(v)?;
        if self.connected(u, v) {
            return Err(Error::Cycle(u.0, v.0));
        }
        let slot = match self.free.pop() {
            Some(s) => {
                let sl = &mut self.slots[s as usize];
                sl.gen = sl.gen.wrapping_add(1);
                sl.live = true;
                sl.ends = (u.0, v.0);
                s
            }
            None => {
                self.slots.push(Slot {
                    ends: (u.0, v.0),
                    gen: 0,
                    live: true,
                });
                self.nodes.push(Node::new(None, 0));
                (self.slots.len() - 1) as u32
            }
        };
        let x = self.n as u32 + slot;
        self.nodes[x as usize] = Node::new(Some(key), x);
        self.raw_link(x, u.0);
        self.raw_link(v.0, x);
        self.edges += 1;
        Ok(EdgeHandle {
            slot,
            gen: self.slots[slot as usize].gen,
        })
    }

    fn live_slot(&self, h: EdgeHandle) -> Result<&Slot> {
        match self.slots.get(h.slot as usize) {
            Some(s) if s.live && s.gen == h.gen => Ok(s),
            _ => Err(Error::StaleHandle),
        }
    }

    pub fn cut(&mut self, h: EdgeHandle) -> Result<()> {
        let (u, v) = self.live_slot(h)?.ends;
        let x = self.n as u32 + h.slot;
        self.raw_cut(u, x);
        self.raw_cut(x, v);
        self.slots[h.slot as usize].live = false;
        self.free.push(h.slot);
        self.edges -= 1;
        Ok(())
    }

    pub fn key(&self, h: EdgeHandle) -> Result<WeightKey> {
        self.live_slot(h)?;
        Ok(self.nodes[self.n + h.slot as usize].key.expect("edge node has a key"))
    }

    pub fn endpoints(&self, h: EdgeHandle) -> Result<(VertexId, VertexId)> {
        let (u, v) = self.live_slot(h)?.ends;
        Ok((VertexId(u), VertexId(v)))
    }

    /// The maximum-key edge on the tree path between `u` and `v`.
    pub fn path_max(&mut self, u: VertexId, v: VertexId) -> Result<EdgeHandle> {
        self.check(u)?;
        self.check(v)?;
        if u == v || !self.connected(u, v) {
            return Err(Error::NoPath(u.0, v.0));
        }
        self.make_root(u.0);
        self.access(v.0);
        let best = self.nodes[v.0 as usize].agg;
        debug_assert!(best != NIL && best as usize >= self.n);
        let slot = best - self.n as u32;
        Ok(EdgeHandle {
            slot,
            gen: self.slots[slot as usize].gen,
        })
    }
}
