use super::{Address, Prefix};
use crate::error::{Error, Result};

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node<V> {
    children: [u32; 2],
    value: Option<V>,
}

impl<V> Node<V> {
    fn empty() -> Self {
        Node {
            children: [NIL, NIL],
            value: None,
        }
    }

    fn is_vacant(&self) -> bool {
        self.value.is_none() && self.children == [NIL, NIL]
    }
}

/// Uncompressed binary trie keyed by prefix bits. A prefix is stored iff its
/// node carries a payload.
#[derive(Clone, Debug)]
pub struct PrefixTrie<V> {
    width: u8,
    nodes: Vec<Node<V>>,
    free: Vec<u32>,
    len: usize,
}

impl<V> PrefixTrie<V> {
    pub fn new(width: u8) -> Self {
        PrefixTrie {
            width,
            nodes: vec![Node::empty()],
            free: Vec::new(),
            len: 0,
        }
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, width: u8) -> Result<()> {
        if width != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                found: width,
            });
        }
        Ok(())
    }

    fn alloc(&mut self) -> u32 {
        if let Some(i) = self.free.pop() {
            self.nodes[i as usize] = Node::empty();
            i
        } else {
            self.nodes.push(Node::empty());
            (self.nodes.len() - 1) as u32
        }
    }

    fn find(&self, p: &Prefix) -> Option<u32> {
        let mut cur = 0u32;
        for i in 0..p.len() {
            cur = self.nodes[cur as usize].children[p.bit(i) as usize];
            if cur == NIL {
                return None;
            }
        }
        Some(cur)
    }

    /// Stores `value` at `p`, returning the previous payload.
    pub fn insert(&mut self, p: Prefix, value: V) -> Result<Option<V>> {
        self.check(p.width())?;
        let mut cur = 0u32;
        for i in 0..p.len() {
            let b = p.bit(i) as usize;
            let next = self.nodes[cur as usize].children[b];
            cur = if next == NIL {
                let n = self.alloc();
                self.nodes[cur as usize].children[b] = n;
                n
            } else {
                next
            };
        }
        let old = self.nodes[cur as usize].value.replace(value);
        if old.is_none() {
            self.len += 1;
        }
        Ok(old)
    }

    /// Removes `p`'s payload and prunes nodes left without purpose.
    pub fn remove(&mut self, p: &Prefix) -> Result<Option<V>> {
        self.check(p.width())?;
        let mut path = Vec::with_capacity(p.len() as usize + 1);
        let mut cur = 0u32;
        path.push(cur);
        for i in 0..p.len() {
            cur = self.nodes[cur as usize].children[p.bit(i) as usize];
            if cur == NIL {
                return Ok(None);
            }
            path.push(cur);
        }
        let old = self.nodes[cur as usize].value.take();
        if old.is_some() {
            self.len -= 1;
            // path[k] is the node at depth k; prune upward, never the root
            for depth in (1..path.len()).rev() {
                let node = path[depth];
                if !self.nodes[node as usize].is_vacant() {
                    break;
                }
                let parent = path[depth - 1];
                let b = p.bit((depth - 1) as u8) as usize;
                self.nodes[parent as usize].children[b] = NIL;
                self.free.push(node);
            }
        }
        Ok(old)
    }

    pub fn get(&self, p: &Prefix) -> Option<&V> {
        if p.width() != self.width {
            return None;
        }
        self.find(p)
            .and_then(|n| self.nodes[n as usize].value.as_ref())
    }

    pub fn get_mut(&mut self, p: &Prefix) -> Option<&mut V> {
        if p.width() != self.width {
            return None;
        }
        let n = self.find(p)?;
        self.nodes[n as usize].value.as_mut()
    }

    pub fn contains(&self, p: &Prefix) -> bool {
        self.get(p).is_some()
    }

    /// Longest stored prefix matching `addr`.
    pub fn lmf_match(&self, addr: &Address) -> Result<Option<(Prefix, &V)>> {
        self.check(addr.width())?;
        Ok(self.lmf_unchecked(addr))
    }

    #[inline]
    pub(crate) fn lmf_unchecked(&self, addr: &Address) -> Option<(Prefix, &V)> {
        let mut cur = 0u32;
        let mut best: Option<(u8, &V)> = self.nodes[0].value.as_ref().map(|v| (0, v));
        for i in 0..self.width {
            cur = self.nodes[cur as usize].children[addr.bit(i) as usize];
            if cur == NIL {
                break;
            }
            if let Some(v) = self.nodes[cur as usize].value.as_ref() {
                best = Some((i + 1, v));
            }
        }
        best.map(|(len, v)| {
            let p = Prefix {
                width: self.width,
                len,
                bits: addr.bits() & super::mask(self.width, len),
            };
            (p, v)
        })
    }

    /// Longest stored strict prefix of `p` (`p` itself need not be stored).
    pub fn parent_of(&self, p: &Prefix) -> Result<Option<(Prefix, &V)>> {
        self.check(p.width())?;
        let mut cur = 0u32;
        let mut best = None;
        for i in 0..p.len() {
            if let Some(v) = self.nodes[cur as usize].value.as_ref() {
                best = Some((p.truncate(i), v));
            }
            cur = self.nodes[cur as usize].children[p.bit(i) as usize];
            if cur == NIL {
                break;
            }
        }
        Ok(best)
    }

    /// Stored prefixes in trie preorder (each prefix before its extensions).
    pub fn iter(&self) -> Iter<'_, V> {
        Iter {
            trie: self,
            stack: vec![(0, Prefix::wildcard(self.width))],
        }
    }

    pub fn prefixes(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.iter().map(|(p, _)| p)
    }

    /// Preorder walk over the stored prefixes covered by `root` (including
    /// `root` itself when stored). `visit` returns `false` to skip everything
    /// below the prefix it was just handed.
    pub fn walk_below<F>(&self, root: &Prefix, mut visit: F)
    where
        F: FnMut(Prefix, &V) -> bool,
    {
        let Some(start) = (root.width() == self.width).then(|| self.find(root)).flatten() else {
            return;
        };
        let mut stack = vec![(start, *root)];
        while let Some((n, p)) = stack.pop() {
            let node = &self.nodes[n as usize];
            if let Some(v) = node.value.as_ref() {
                if !visit(p, v) {
                    continue;
                }
            }
            for b in [true, false] {
                let c = node.children[b as usize];
                if c != NIL {
                    stack.push((c, p.child(b).expect("child below full width")));
                }
            }
        }
    }

    /// Stored prefixes whose nearest stored strict ancestor is `p`. With
    /// `p = *` not stored, these are the forest roots (`p` need not be
    /// stored either way).
    pub fn stored_children(&self, p: &Prefix) -> Vec<Prefix> {
        let mut out = Vec::new();
        let Some(start) = (p.width() == self.width).then(|| self.find(p)).flatten() else {
            return out;
        };
        let mut stack = Vec::new();
        let node = &self.nodes[start as usize];
        for b in [true, false] {
            let c = node.children[b as usize];
            if c != NIL {
                stack.push((c, p.child(b).unwrap()));
            }
        }
        while let Some((n, q)) = stack.pop() {
            let node = &self.nodes[n as usize];
            if node.value.is_some() {
                out.push(q);
                continue;
            }
            for b in [true, false] {
                let c = node.children[b as usize];
                if c != NIL {
                    stack.push((c, q.child(b).unwrap()));
                }
            }
        }
        out
    }
}

pub struct Iter<'a, V> {
    trie: &'a PrefixTrie<V>,
    stack: Vec<(u32, Prefix)>,
}

impl<'a, V> Iterator for Iter<'a, V> {
    type Item = (Prefix, &'a V);

    fn next(&mut self) -> Option<Self::Item> {
        while let Some((n, p)) = self.stack.pop() {
            let node = &self.trie.nodes[n as usize];
            for b in [true, false] {
                let c = node.children[b as usize];
                if c != NIL {
                    self.stack.push((c, p.child(b).unwrap()));
                }
            }
            if let Some(v) = node.value.as_ref() {
                return Some((p, v));
            }
        }
        None
    }
}

impl<V> FromIterator<(Prefix, V)> for PrefixTrie<V> {
    /// Panics on mixed widths; intended for tests and fixtures.
    fn from_iter<I: IntoIterator<Item = (Prefix, V)>>(iter: I) -> Self {
        let mut iter = iter.into_iter().peekable();
        let width = iter.peek().map(|(p, _)| p.width()).unwrap_or(1);
        let mut t = PrefixTrie::new(width);
        for (p, v) in iter {
            t.insert(p, v).expect("mixed widths");
        }
        t
    }
}
