use std::collections::{BTreeSet, HashMap};

use super::td::ActionIndex;
use crate::oracle::Action;

/// Interned index-to-next-hop table with reference counts. An index is
/// reclaimed when its last rule or default lets go of it.
#[derive(Clone, Debug, Default)]
pub struct MappingTable {
    entries: Vec<Option<(Action, u32)>>,
    reverse: HashMap<Action, ActionIndex>,
    free: BTreeSet<ActionIndex>,
}

impl MappingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Takes a reference on `action`; the flag reports a fresh entry (one
    /// mapping-table write).
    pub fn acquire(&mut self, action: &Action) -> (ActionIndex, bool) {
        if let Some(&i) = self.reverse.get(action) {
            self.entries[i as usize].as_mut().unwrap().1 += 1;
            return (i, false);
        }
        let i = match self.free.pop_first() {
            Some(i) => {
                self.entries[i as usize] = Some((action.clone(), 1));
                i
            }
            None => {
                self.entries.push(Some((action.clone(), 1)));
                (self.entries.len() - 1) as ActionIndex
            }
        };
        self.reverse.insert(action.clone(), i);
        (i, true)
    }

    /// Drops a reference; returns true when the entry was reclaimed.
    pub fn release(&mut self, i: ActionIndex) -> bool {
        let slot = self.entries[i as usize].as_mut().expect("releasing a free mapping index");
        slot.1 -= 1;
        if slot.1 > 0 {
            return false;
        }
        let (action, _) = self.entries[i as usize].take().unwrap();
        self.reverse.remove(&action);
        self.free.insert(i);
        true
    }

    pub fn get(&self, i: ActionIndex) -> Option<&Action> {
        self.entries.get(i as usize)?.as_ref().map(|(a, _)| a)
    }

    pub fn index_of(&self, action: &Action) -> Option<ActionIndex> {
        self.reverse.get(action).copied()
    }

    pub fn refs(&self, i: ActionIndex) -> u32 {
        self.entries.get(i as usize).and_then(|e| e.as_ref()).map_or(0, |e| e.1)
    }

    /// Live entries.
    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActionIndex, &Action)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|(a, _)| (i as ActionIndex, a)))
    }
}
