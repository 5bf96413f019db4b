//! Minimum equivalent prefix table in one dimension, by the three-pass trie
//! procedure: complete the trie so every internal node has two children,
//! compute candidate sets bottom-up (intersection if non-empty, otherwise
//! union), then pick actions top-down keeping a node only where it
//! disagrees with what it would inherit.

use crate::error::{Error, Result};
use crate::prefix::Prefix;

/// What an address matching no stored prefix resolves to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootPolicy<A> {
    /// The input must cover every address, and so must the output.
    Required,
    /// Unmatched addresses take this action without a stored entry.
    Implicit(A),
}

const NIL: u32 = u32::MAX;

struct Node<A> {
    children: [u32; 2],
    action: Option<A>,
    set: Vec<A>,
}

fn intersect<A: Ord + Clone>(a: &[A], b: &[A]) -> Vec<A> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn union<A: Ord + Clone>(a: &[A], b: &[A]) -> Vec<A> {
    let mut out: Vec<A> = a.iter().chain(b).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// Minimizes `entries` (prefix → action, prefixes of `width` bits, no
/// duplicates) under longest-match semantics. The result is sorted.
pub fn ortc<A: Ord + Clone>(width: u8, entries: &[(Prefix, A)], root: RootPolicy<A>) -> Result<Vec<(Prefix, A)>> {
    let mut nodes: Vec<Node<A>> = vec![Node {
        children: [NIL; 2],
        action: None,
        set: Vec::new(),
    }];
    for (p, a) in entries {
        if p.width() != width {
            return Err(Error::WidthMismatch {
                expected: width,
                found: p.width(),
            });
        }
        let mut n = 0usize;
        for i in 0..p.len() {
            let b = p.bit(i) as usize;
            if nodes[n].children[b] == NIL {
                nodes[n].children[b] = nodes.len() as u32;
                nodes.push(Node {
                    children: [NIL; 2],
                    action: None,
                    set: Vec::new(),
                });
            }
            n = nodes[n].children[b] as usize;
        }
        nodes[n].action = Some(a.clone());
    }
    let implicit = match (&root, nodes[0].action.is_some()) {
        (RootPolicy::Implicit(a), false) => Some(a.clone()),
        _ => None,
    };
    if nodes[0].action.is_none() {
        nodes[0].action = implicit.clone();
    }

    // pass 1: push actions down and give every internal node two children
    let mut order = Vec::with_capacity(nodes.len() * 2);
    let mut stack = vec![(0usize, None::<A>)];
    while let Some((n, inherited)) = stack.pop() {
        order.push(n);
        let effective = nodes[n].action.clone().or(inherited);
        let kids = nodes[n].children;
        if kids == [NIL; 2] {
            let Some(a) = effective else {
                return Err(Error::NoRootAction);
            };
            nodes[n].set = vec![a];
            continue;
        }
        for b in 0..2 {
            let c = if kids[b] == NIL {
                nodes.push(Node {
                    children: [NIL; 2],
                    action: None,
                    set: Vec::new(),
                });
                let c = nodes.len() - 1;
                nodes[n].children[b] = c as u32;
                c
            } else {
                kids[b] as usize
            };
            stack.push((c, effective.clone()));
        }
    }

    // pass 2: candidate sets bottom-up
    for &n in order.iter().rev() {
        let [l, r] = nodes[n].children;
        if l == NIL {
            continue;
        }
        let (ls, rs) = (&nodes[l as usize].set, &nodes[r as usize].set);
        let both = intersect(ls, rs);
        nodes[n].set = if both.is_empty() { union(ls, rs) } else { both };
    }

    // pass 3: choose top-down
    let mut out = Vec::new();
    let root_pick = match &implicit {
        Some(a) if nodes[0].set.binary_search(a).is_ok() => a.clone(),
        _ => {
            let a = nodes[0].set[0].clone();
            out.push((Prefix::wildcard(width), a.clone()));
            a
        }
    };
    let mut stack = vec![(0usize, Prefix::wildcard(width), root_pick)];
    while let Some((n, p, chosen)) = stack.pop() {
        for b in [true, false] {
            let c = nodes[n].children[b as usize];
            if c == NIL {
                continue;
            }
            let c = c as usize;
            let q = p.child(b).unwrap();
            let pick = if nodes[c].set.binary_search(&chosen).is_ok() {
                chosen.clone()
            } else {
                let a = nodes[c].set[0].clone();
                out.push((q, a.clone()));
                a
            };
            stack.push((c, q, pick));
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Prefix {
        Prefix::parse(s, 3).unwrap()
    }

    #[test]
    fn sibling_merge() {
        let out = ortc(3, &[(p("0**"), 'A'), (p("1**"), 'A')], RootPolicy::Implicit('M')).unwrap();
        assert_eq!(out, vec![(p("***"), 'A')]);
        let out = ortc(3, &[(p("***"), 'A'), (p("0**"), 'A')], RootPolicy::Required).unwrap();
        assert_eq!(out, vec![(p("***"), 'A')]);
    }

    #[test]
    fn implicit_root_is_free() {
        let es = [(p("01*"), 'A'), (p("1**"), 'M')];
        assert_eq!(ortc(3, &es, RootPolicy::Implicit('M')).unwrap(), vec![(p("01*"), 'A')]);
        assert_eq!(ortc(3, &es, RootPolicy::Required), Err(Error::NoRootAction));
    }

    #[test]
    fn redundant_entries_are_dropped() {
        // 1** repeats the root; 0** A with a B hole is cheaper as 01* A
        let es = [(p("***"), 'B'), (p("0**"), 'A'), (p("00*"), 'B'), (p("1**"), 'B')];
        let out = ortc(3, &es, RootPolicy::Required).unwrap();
        assert_eq!(out, vec![(p("***"), 'B'), (p("01*"), 'A')]);
        // 1** is shadowed by its two children
        let es = [(p("0**"), 'A'), (p("1**"), 'B'), (p("11*"), 'A'), (p("10*"), 'A')];
        assert_eq!(ortc(3, &es, RootPolicy::Implicit('Z')).unwrap(), vec![(p("***"), 'A')]);
    }
}
