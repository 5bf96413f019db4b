use std::collections::BTreeMap;
use std::fmt;
use std::ops::Bound;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prefix::Prefix;

/// Opaque next-hop identifier, e.g. `1.0.0.2`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Action(Arc<str>);

impl Action {
    pub fn new(name: impl AsRef<str>) -> Self {
        Action(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl From<&str> for Action {
    fn from(s: &str) -> Self {
        Action::new(s)
    }
}

impl From<String> for Action {
    fn from(s: String) -> Self {
        Action(s.into())
    }
}

/// A `(destination, source, action)` rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub dest: Prefix,
    pub src: Prefix,
    pub action: Action,
}

impl Rule {
    pub fn new(dest: Prefix, src: Prefix, action: impl Into<Action>) -> Self {
        Rule {
            dest,
            src,
            action: action.into(),
        }
    }
}

/// A set of two-dimensional rules plus per-destination default next hops.
///
/// A rule whose source is the full wildcard is the destination's default:
/// both resolve only when no longer source matches, so they are stored in a
/// single slot. Every destination that carries rules or a default is present
/// in the destination map; a destination with neither is dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    width_d: u8,
    width_s: u8,
    rules: BTreeMap<(Prefix, Prefix), Action>,
    dests: BTreeMap<Prefix, Option<Action>>,
}

impl RuleSet {
    pub fn new(width_d: u8, width_s: u8) -> Self {
        RuleSet {
            width_d,
            width_s,
            rules: BTreeMap::new(),
            dests: BTreeMap::new(),
        }
    }

    pub fn width_d(&self) -> u8 {
        self.width_d
    }

    pub fn width_s(&self) -> u8 {
        self.width_s
    }

    fn check(&self, dest: &Prefix, src: &Prefix) -> Result<()> {
        if dest.width() != self.width_d {
            return Err(Error::WidthMismatch {
                expected: self.width_d,
                found: dest.width(),
            });
        }
        if src.width() != self.width_s {
            return Err(Error::WidthMismatch {
                expected: self.width_s,
                found: src.width(),
            });
        }
        Ok(())
    }

    /// Adds a new rule; a wildcard source sets the default. Rejects an
    /// existing `(dest, src)` pair.
    pub fn insert(&mut self, dest: Prefix, src: Prefix, action: impl Into<Action>) -> Result<()> {
        self.check(&dest, &src)?;
        if self.get(&dest, &src).is_some() {
            return Err(Error::DuplicateRule { dest, src });
        }
        self.put(dest, src, action.into());
        Ok(())
    }

    /// Inserts or replaces; returns the previous action.
    pub fn upsert(&mut self, dest: Prefix, src: Prefix, action: impl Into<Action>) -> Result<Option<Action>> {
        self.check(&dest, &src)?;
        Ok(self.put(dest, src, action.into()))
    }

    fn put(&mut self, dest: Prefix, src: Prefix, action: Action) -> Option<Action> {
        if src.is_wildcard() {
            self.dests.entry(dest).or_insert(None).replace(action)
        } else {
            self.dests.entry(dest).or_insert(None);
            self.rules.insert((dest, src), action)
        }
    }

    pub fn set_default(&mut self, dest: Prefix, action: impl Into<Action>) -> Result<Option<Action>> {
        let src = Prefix::wildcard(self.width_s);
        self.upsert(dest, src, action)
    }

    /// Removes a rule (a wildcard source removes the default).
    pub fn remove(&mut self, dest: &Prefix, src: &Prefix) -> Result<Action> {
        self.check(dest, src)?;
        let removed = if src.is_wildcard() {
            self.dests.get_mut(dest).and_then(Option::take)
        } else {
            self.rules.remove(&(*dest, *src))
        };
        let action = removed.ok_or(Error::MissingRule {
            dest: *dest,
            src: *src,
        })?;
        if self.default_of(dest).is_none() && self.rules_of(dest).next().is_none() {
            self.dests.remove(dest);
        }
        Ok(action)
    }

    pub fn get(&self, dest: &Prefix, src: &Prefix) -> Option<&Action> {
        if src.is_wildcard() {
            self.default_of(dest)
        } else {
            self.rules.get(&(*dest, *src))
        }
    }

    pub fn default_of(&self, dest: &Prefix) -> Option<&Action> {
        self.dests.get(dest).and_then(Option::as_ref)
    }

    pub fn has_dest(&self, dest: &Prefix) -> bool {
        self.dests.contains_key(dest)
    }

    /// Non-default rules of one destination, by source prefix order.
    pub fn rules_of<'a>(&'a self, dest: &Prefix) -> impl Iterator<Item = (Prefix, &'a Action)> + 'a {
        let lo = (*dest, Prefix::wildcard(self.width_s));
        self.rules
            .range((Bound::Included(lo), Bound::Unbounded))
            .take_while({
                let dest = *dest;
                move |((d, _), _)| *d == dest
            })
            .map(|((_, s), a)| (*s, a))
    }

    /// All destinations with their (optional) defaults.
    pub fn dests(&self) -> impl Iterator<Item = (Prefix, Option<&Action>)> + '_ {
        self.dests.iter().map(|(d, a)| (*d, a.as_ref()))
    }

    /// Non-default rules.
    pub fn rules(&self) -> impl Iterator<Item = Rule> + '_ {
        self.rules
            .iter()
            .map(|((d, s), a)| Rule::new(*d, *s, a.clone()))
    }

    /// Every entry with defaults folded in as wildcard-source rules.
    pub fn folded_rules(&self) -> Vec<Rule> {
        let wild = Prefix::wildcard(self.width_s);
        let mut out: Vec<Rule> = self.rules().collect();
        out.extend(
            self.dests
                .iter()
                .filter_map(|(d, a)| a.as_ref().map(|a| Rule::new(*d, wild, a.clone()))),
        );
        out.sort();
        out
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn default_count(&self) -> usize {
        self.dests.values().filter(|a| a.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.dests.is_empty()
    }

    /// Distinct source prefixes used by non-default rules.
    pub fn src_prefixes(&self) -> std::collections::BTreeSet<Prefix> {
        self.rules.keys().map(|(_, s)| *s).collect()
    }

    pub fn actions(&self) -> std::collections::BTreeSet<&Action> {
        self.rules
            .values()
            .chain(self.dests.values().flatten())
            .collect()
    }

    /// Parses the rules file format: `<dest> <src> <action>` and
    /// `default <dest> <action>` per line, `#` starts a comment.
    pub fn parse(text: &str, width_d: u8, width_s: u8) -> Result<Self> {
        let mut rs = RuleSet::new(width_d, width_s);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let (dest, src, action) = match fields.as_slice() {
                ["default", d, a] => (
                    Prefix::parse(d, width_d).map_err(|e| err(e.to_string()))?,
                    Prefix::wildcard(width_s),
                    *a,
                ),
                [d, s, a] => (
                    Prefix::parse(d, width_d).map_err(|e| err(e.to_string()))?,
                    Prefix::parse(s, width_s).map_err(|e| err(e.to_string()))?,
                    *a,
                ),
                _ => {
                    return Err(err(format!(
                        "expected `<dest> <src> <action>` or `default <dest> <action>`, got `{content}`"
                    )))
                }
            };
            rs.insert(dest, src, action).map_err(|e| err(e.to_string()))?;
        }
        Ok(rs)
    }

    /// Serializes in the rules file format (rules, then defaults).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in self.rules() {
            out.push_str(&format!("{} {} {}\n", r.dest, r.src, r.action));
        }
        for (d, a) in self.dests() {
            if let Some(a) = a {
                out.push_str(&format!("default {d} {a}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Prefix {
        Prefix::parse(s, 4).unwrap()
    }

    #[test]
    fn defaults_and_rules_share_a_slot() {
        let mut rs = RuleSet::new(4, 4);
        rs.insert(p("101*"), p("11**"), "b").unwrap();
        rs.insert(p("101*"), p("****"), "a").unwrap();
        assert_eq!(rs.default_of(&p("101*")), Some(&Action::new("a")));
        assert!(matches!(
            rs.set_default(p("101*"), "c"),
            Ok(Some(_))
        ));
        assert!(matches!(
            rs.insert(p("101*"), p("****"), "d"),
            Err(Error::DuplicateRule { .. })
        ));
        assert!(matches!(
            rs.insert(p("101*"), p("11**"), "d"),
            Err(Error::DuplicateRule { .. })
        ));
        assert_eq!(rs.rule_count(), 1);
        rs.remove(&p("101*"), &p("11**")).unwrap();
        assert!(rs.has_dest(&p("101*")));
        rs.remove(&p("101*"), &p("****")).unwrap();
        assert!(!rs.has_dest(&p("101*")));
        assert!(rs.remove(&p("101*"), &p("****")).is_err());
    }

    #[test]
    fn rules_of_is_scoped() {
        let mut rs = RuleSet::new(4, 4);
        rs.insert(p("10**"), p("11**"), "x").unwrap();
        rs.insert(p("101*"), p("11**"), "y").unwrap();
        rs.insert(p("101*"), p("0***"), "z").unwrap();
        rs.insert(p("11**"), p("0***"), "w").unwrap();
        let got: Vec<_> = rs.rules_of(&p("101*")).map(|(s, _)| s).collect();
        assert_eq!(got, vec![p("0***"), p("11**")]);
    }

    #[test]
    fn parse_and_errors() {
        let text = "# table\n111* 111* 1.0.0.0\n\ndefault 11** 1.0.0.3  # trailing\n";
        let rs = RuleSet::parse(text, 4, 4).unwrap();
        assert_eq!(rs.rule_count(), 1);
        assert_eq!(rs.default_count(), 1);
        let again = RuleSet::parse(&rs.to_text(), 4, 4).unwrap();
        assert_eq!(again, rs);

        let e = RuleSet::parse("111* 111* a\n1x1* 111* b\n", 4, 4).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = RuleSet::parse("111* 111* a\n111* 111* b\n", 4, 4).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = RuleSet::parse("111* a\n", 4, 4).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn width_checked() {
        let mut rs = RuleSet::new(4, 8);
        assert!(rs.insert(p("1***"), p("1***"), "a").is_err());
        let src = Prefix::parse("1*******", 8).unwrap();
        rs.insert(p("1***"), src, "a").unwrap();
    }
}
