//! Address and prefix arithmetic over a runtime-sized address space of 1 to
//! 128 bits, plus the binary trie every table in the crate is built on.
//!
//! A [`Prefix`] keeps its significant bits left-aligned inside the address
//! width with every bit past `len` cleared, so equality, ordering and hashing
//! are purely structural.

mod trie;

use std::fmt;
use std::net::{Ipv4Addr, Ipv6Addr};

pub use trie::PrefixTrie;

use crate::error::{Error, Result};

pub const MAX_WIDTH: u8 = 128;

fn check_width(width: u32) -> Result<u8> {
    if width == 0 || width > MAX_WIDTH as u32 {
        return Err(Error::InvalidWidth(width));
    }
    Ok(width as u8)
}

/// Mask selecting the first `len` bits of a `width`-bit value.
#[inline]
pub(crate) fn mask(width: u8, len: u8) -> u128 {
    if len == 0 {
        0
    } else {
        (u128::MAX << (128 - len as u32)) >> (128 - width as u32)
    }
}

#[inline]
fn width_mask(width: u8) -> u128 {
    mask(width, width)
}

/// A bit-string of `len <= width` significant bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prefix {
    width: u8,
    len: u8,
    bits: u128,
}

impl Prefix {
    /// Builds a prefix from left-aligned `bits`. Bits past `len` must be zero.
    pub fn new(width: u8, len: u8, bits: u128) -> Result<Self> {
        let width = check_width(width as u32)?;
        if len > width {
            return Err(Error::InvalidPrefix {
                text: format!("{bits:#b}/{len}"),
                reason: format!("length {len} exceeds width {width}"),
            });
        }
        if bits & !mask(width, len) != 0 {
            return Err(Error::InvalidPrefix {
                text: format!("{bits:#b}/{len}"),
                reason: "bits set past the prefix length".into(),
            });
        }
        Ok(Prefix { width, len, bits })
    }

    /// Builds a prefix from the integer value of its `len` significant bits,
    /// e.g. `from_value(4, 3, 0b101)` is `101*`.
    pub fn from_value(width: u8, len: u8, value: u128) -> Result<Self> {
        let width = check_width(width as u32)?;
        if len > width {
            return Err(Error::InvalidPrefix {
                text: format!("{value:#b}/{len}"),
                reason: format!("length {len} exceeds width {width}"),
            });
        }
        if len < 128 && value >> len != 0 {
            return Err(Error::InvalidPrefix {
                text: format!("{value:#b}/{len}"),
                reason: "value has more than `len` bits".into(),
            });
        }
        let bits = if len == 0 {
            0
        } else {
            value << (width - len)
        };
        Ok(Prefix { width, len, bits })
    }

    /// The zero-length prefix, matching every address.
    pub fn wildcard(width: u8) -> Self {
        Prefix {
            width: width.clamp(1, MAX_WIDTH),
            len: 0,
            bits: 0,
        }
    }

    /// Parses `101*` (star padding to width), `1010/3` (slash form), or, at
    /// widths 32 and 128, dotted IPv4 / colon IPv6 CIDR notation.
    pub fn parse(text: &str, width: u8) -> Result<Self> {
        let width = check_width(width as u32)?;
        let invalid = |reason: &str| Error::InvalidPrefix {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let text = text.trim();
        if text.is_empty() {
            return Err(invalid("empty prefix"));
        }
        if let Some((addr, len)) = text.split_once('/') {
            let len: u8 = len.parse().map_err(|_| invalid("bad length"))?;
            if len > width {
                return Err(invalid("length exceeds width"));
            }
            let bits = if addr.contains('.') || addr.contains(':') {
                ip_bits(addr, width).ok_or_else(|| invalid("bad IP address"))?
            } else {
                if addr.len() > width as usize || addr.len() < len as usize {
                    return Err(invalid("bit string must hold between `len` and `width` digits"));
                }
                let mut v: u128 = 0;
                for c in addr.chars() {
                    v = (v << 1)
                        | match c {
                            '0' => 0,
                            '1' => 1,
                            _ => return Err(invalid("non-binary digit")),
                        };
                }
                v << (width as usize - addr.len())
            };
            if bits & !mask(width, len) != 0 {
                return Err(invalid("bits set past the prefix length"));
            }
            return Ok(Prefix { width, len, bits });
        }
        if text.chars().count() != width as usize {
            return Err(invalid("star form must have exactly `width` characters"));
        }
        let mut len = 0u8;
        let mut bits = 0u128;
        let mut in_stars = false;
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' | '1' if !in_stars => {
                    if c == '1' {
                        bits |= 1u128 << (width as usize - 1 - i);
                    }
                    len += 1;
                }
                '*' => in_stars = true,
                '0' | '1' => return Err(invalid("digit after '*'")),
                _ => return Err(invalid("unexpected character")),
            }
        }
        Ok(Prefix { width, len, bits })
    }

    #[inline]
    pub fn width(&self) -> u8 {
        self.width
    }

    #[inline]
    pub fn len(&self) -> u8 {
        self.len
    }

    #[inline]
    pub fn is_wildcard(&self) -> bool {
        self.len == 0
    }

    /// Left-aligned significant bits.
    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Integer value of the significant bits.
    pub fn value(&self) -> u128 {
        if self.len == 0 {
            0
        } else {
            self.bits >> (self.width - self.len)
        }
    }

    /// Bit `i` (0 = most significant). Panics if `i >= len`.
    #[inline]
    pub fn bit(&self, i: u8) -> bool {
        assert!(i < self.len, "bit index {i} past prefix length {}", self.len);
        (self.bits >> (self.width - 1 - i)) & 1 == 1
    }

    /// The prefix extended by one bit.
    pub fn child(&self, bit: bool) -> Option<Prefix> {
        if self.len == self.width {
            return None;
        }
        let mut bits = self.bits;
        if bit {
            bits |= 1u128 << (self.width - 1 - self.len);
        }
        Some(Prefix {
            width: self.width,
            len: self.len + 1,
            bits,
        })
    }

    /// The prefix shortened by one bit.
    pub fn parent(&self) -> Option<Prefix> {
        (self.len > 0).then(|| self.truncate(self.len - 1))
    }

    /// The first `len` bits of this prefix (`len` is clamped to `self.len`).
    pub fn truncate(&self, len: u8) -> Prefix {
        let len = len.min(self.len);
        Prefix {
            width: self.width,
            len,
            bits: self.bits & mask(self.width, len),
        }
    }

    /// True if `self` is a (non-strict) prefix of `other`.
    pub fn covers(&self, other: &Prefix) -> bool {
        self.width == other.width
            && self.len <= other.len
            && (self.bits ^ other.bits) & mask(self.width, self.len) == 0
    }

    /// True iff the first `len` bits of `addr` equal this prefix.
    pub fn matches(&self, addr: &Address) -> Result<bool> {
        if self.width != addr.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                found: addr.width,
            });
        }
        Ok(self.matches_unchecked(addr))
    }

    #[inline]
    pub(crate) fn matches_unchecked(&self, addr: &Address) -> bool {
        (self.bits ^ addr.bits) & mask(self.width, self.len) == 0
    }

    /// The lowest address inside this prefix.
    pub fn first_address(&self) -> Address {
        Address {
            width: self.width,
            bits: self.bits,
        }
    }

    /// Address inside this prefix whose host part is `suffix` (truncated).
    pub fn address_with_suffix(&self, suffix: u128) -> Address {
        let host = width_mask(self.width) & !mask(self.width, self.len);
        Address {
            width: self.width,
            bits: self.bits | (suffix & host),
        }
    }

    /// Star form, e.g. `101*` at width 4.
    pub fn star(&self) -> String {
        let mut s = String::with_capacity(self.width as usize);
        for i in 0..self.width {
            if i < self.len {
                s.push(if self.bit(i) { '1' } else { '0' });
            } else {
                s.push('*');
            }
        }
        s
    }

    /// Canonical bytes (width, length, significant bits), used for hashing.
    pub fn canonical_bytes(&self) -> [u8; 18] {
        let mut out = [0u8; 18];
        out[0] = self.width;
        out[1] = self.len;
        out[2..].copy_from_slice(&self.bits.to_be_bytes());
        out
    }
}

fn ip_bits(addr: &str, width: u8) -> Option<u128> {
    match width {
        32 => addr.parse::<Ipv4Addr>().ok().map(|a| u32::from(a) as u128),
        128 => addr.parse::<Ipv6Addr>().ok().map(u128::from),
        _ => None,
    }
}

impl Ord for Prefix {
    /// Preorder of the binary trie: a prefix sorts before its extensions.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.width
            .cmp(&other.width)
            .then(self.bits.cmp(&other.bits))
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for Prefix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Prefix {
    /// Slash form, e.g. `1010/3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        write!(f, "/{}", self.len)
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width <= 32 {
            f.write_str(&self.star())
        } else {
            fmt::Display::fmt(self, f)
        }
    }
}

/// A full-width address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    width: u8,
    bits: u128,
}

impl Address {
    pub fn new(width: u8, bits: u128) -> Result<Self> {
        let width = check_width(width as u32)?;
        if bits & !width_mask(width) != 0 {
            return Err(Error::InvalidAddress {
                text: format!("{bits:#b}"),
                reason: format!("value does not fit in {width} bits"),
            });
        }
        Ok(Address { width, bits })
    }

    /// Parses exactly `width` binary digits, or dotted IPv4 / colon IPv6 at
    /// widths 32 / 128.
    pub fn parse(text: &str, width: u8) -> Result<Self> {
        let width = check_width(width as u32)?;
        let text = text.trim();
        let invalid = |reason: &str| Error::InvalidAddress {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if text.contains('.') || text.contains(':') {
            let bits = ip_bits(text, width).ok_or_else(|| invalid("bad IP address"))?;
            return Ok(Address { width, bits });
        }
        if text.len() != width as usize {
            return Err(invalid("expected exactly `width` binary digits"));
        }
        let mut bits = 0u128;
        for c in text.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(invalid("non-binary digit")),
                };
        }
        Ok(Address { width, bits })
    }

    #[inline]
    pub fn width(&self) -> u8 {
        self.width
    }

    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    #[inline]
    pub fn bit(&self, i: u8) -> bool {
        (self.bits >> (self.width - 1 - i)) & 1 == 1
    }

    /// Every address of a `width`-bit space in ascending order. Intended for
    /// exhaustive sweeps at small widths.
    pub fn all(width: u8) -> impl Iterator<Item = Address> {
        assert!(width >= 1 && width <= 63, "exhaustive enumeration needs width < 64");
        (0..(1u128 << width)).map(move |bits| Address { width, bits })
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Prefix {
        Prefix::parse(s, 4).unwrap()
    }

    fn a(s: &str) -> Address {
        Address::parse(s, 4).unwrap()
    }

    #[test]
    fn star_and_slash_forms() {
        assert_eq!(p("101*"), p("1010/3"));
        assert_eq!(p("101*").to_string(), "1010/3");
        assert_eq!(p("****").to_string(), "0000/0");
        assert_eq!(p("1011"), Prefix::from_value(4, 4, 0b1011).unwrap());
        assert_eq!(p("101/3"), p("101*"));
        assert_eq!(p("11**").star(), "11**");
        assert!(p("****").is_wildcard());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Prefix::parse("1*1*", 4).is_err());
        assert!(Prefix::parse("101", 4).is_err());
        assert!(Prefix::parse("1011/3", 4).is_err());
        assert!(Prefix::parse("10a*", 4).is_err());
        assert!(Prefix::parse("1010/5", 4).is_err());
        assert!(Prefix::parse("", 4).is_err());
        assert!(Prefix::parse("1*", 0).is_err());
    }

    #[test]
    fn ip_shim() {
        let p = Prefix::parse("10.0.0.0/8", 32).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.value(), 10);
        let a = Address::parse("10.1.2.3", 32).unwrap();
        assert!(p.matches(&a).unwrap());
        let p6 = Prefix::parse("240c::/28", 128).unwrap();
        assert!(p6.matches(&Address::parse("240c:3::1", 128).unwrap()).unwrap());
        assert!(Prefix::parse("10.0.0.0/8", 16).is_err());
    }

    #[test]
    fn matching() {
        assert!(p("101*").matches(&a("1011")).unwrap());
        assert!(p("****").matches(&a("0000")).unwrap());
        assert!(!p("111*").matches(&a("1011")).unwrap());
        let wide = Address::parse("10110000", 8).unwrap();
        assert_eq!(
            p("101*").matches(&wide),
            Err(Error::WidthMismatch {
                expected: 4,
                found: 8
            })
        );
    }

    #[test]
    fn structure() {
        assert_eq!(p("101*").parent(), Some(p("10**")));
        assert_eq!(p("****").parent(), None);
        assert_eq!(p("10**").child(true), Some(p("101*")));
        assert_eq!(p("1011").child(false), None);
        assert!(p("1***").covers(&p("101*")));
        assert!(p("101*").covers(&p("101*")));
        assert!(!p("101*").covers(&p("10**")));
        assert!(p("101*") > p("10**"));
        assert!(p("100*") < p("101*"));
        assert_eq!(p("10**").address_with_suffix(0b1111), a("1011"));
    }

    #[test]
    fn full_width_128() {
        let all = Prefix::from_value(128, 128, u128::MAX).unwrap();
        assert_eq!(all.len(), 128);
        assert!(all.matches(&Address::new(128, u128::MAX).unwrap()).unwrap());
        assert!(!all.matches(&Address::new(128, 0).unwrap()).unwrap());
        assert!(Prefix::wildcard(128).matches(&Address::new(128, 7).unwrap()).unwrap());
    }
}
