use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fist::{Cell, FistTable};
use crate::prefix::Prefix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestNode {
    pub prefix: Prefix,
    /// Nearest stored strict ancestor among the source entries.
    pub parent: Option<Prefix>,
    pub black: bool,
}

/// Black/white labelling of the source entries for one destination. The
/// wildcard is a node (the root) only without isolation, so under isolation
/// this is generally a forest.
#[derive(Clone, Debug)]
pub struct ColoredForest {
    pub dest: Prefix,
    pub nodes: Vec<ForestNode>,
}

impl ColoredForest {
    pub fn black(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.nodes.iter().filter(|n| n.black).map(|n| n.prefix)
    }

    pub fn white(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.nodes.iter().filter(|n| !n.black).map(|n| n.prefix)
    }

    pub fn roots(&self) -> impl Iterator<Item = Prefix> + '_ {
        self.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.prefix)
    }

    pub fn node(&self, p: &Prefix) -> Option<&ForestNode> {
        self.nodes.iter().find(|n| n.prefix == *p)
    }

    /// `p` together with every white descendant reachable from it without
    /// passing through another black node.
    pub fn domain(&self, p: &Prefix) -> Vec<Prefix> {
        let mut children: BTreeMap<Prefix, Vec<&ForestNode>> = BTreeMap::new();
        for n in &self.nodes {
            if let Some(parent) = n.parent {
                children.entry(parent).or_default().push(n);
            }
        }
        let mut out = vec![*p];
        let mut stack = vec![*p];
        while let Some(q) = stack.pop() {
            for c in children.get(&q).into_iter().flatten() {
                if !c.black {
                    out.push(c.prefix);
                    stack.push(c.prefix);
                }
            }
        }
        out.sort();
        out
    }
}

impl FistTable {
    pub fn colored_forest(&self, dest: &Prefix) -> ColoredForest {
        let nodes = self
            .src
            .prefixes()
            .map(|q| ForestNode {
                prefix: q,
                parent: self.src.parent_of(&q).ok().flatten().map(|x| x.0),
                black: self.black_cell(dest, &q).is_some(),
            })
            .collect();
        ColoredForest { dest: *dest, nodes }
    }

    /// Domain of the black node `src` in the colored forest of `dest`, in
    /// preorder.
    pub fn domain(&self, dest: &Prefix, src: &Prefix) -> Result<Vec<Prefix>> {
        if !self.src.contains(src) || self.black_cell(dest, src).is_none() {
            return Err(Error::NotBlack {
                dest: *dest,
                src: *src,
            });
        }
        Ok(self.domain_unchecked(dest, src))
    }

    /// Domain of `src` whatever its own color; `src` must be a source entry.
    pub(crate) fn domain_unchecked(&self, dest: &Prefix, src: &Prefix) -> Vec<Prefix> {
        let mut out = Vec::new();
        self.src.walk_below(src, |q, _| {
            if q != *src && self.black_cell(dest, &q).is_some() {
                return false;
            }
            out.push(q);
            true
        });
        out.sort();
        out
    }

    /// Cell value `src` would inherit from its nearest black strict ancestor
    /// in the forest of `dest`.
    pub(crate) fn inherited_cell(&self, dest: &Prefix, src: &Prefix) -> Cell {
        (0..src.len())
            .rev()
            .map(|len| src.truncate(len))
            .filter(|q| self.src.contains(q))
            .find_map(|q| self.black_cell(dest, &q))
            .unwrap_or(Cell::Invalid)
    }
}
