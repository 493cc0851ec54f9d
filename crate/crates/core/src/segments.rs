//! Phonetic segments, transcriptions and segment cost tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Token standing for an empty alignment slot.
pub const GAP: &str = "-";

const BUNDLED_CLASSES: &str = include_str!("../data/segment_classes.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentClass {
    Vowel,
    Consonant,
}

impl fmt::Display for SegmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentClass::Vowel => "V",
            SegmentClass::Consonant => "C",
        })
    }
}

/// An NFC-normalized IPA token with its vowel/consonant class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    pub token: String,
    pub class: SegmentClass,
}

/// Maps IPA base characters to segment classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentClassTable {
    classes: HashMap<char, SegmentClass>,
    cross_class: BTreeSet<(char, char)>,
}

impl Default for SegmentClassTable {
    fn default() -> Self {
        Self::from_tsv(BUNDLED_CLASSES).expect("bundled segment class table is well-formed")
    }
}

impl SegmentClassTable {
    /// Parses `char<TAB>V|C` lines plus optional `allow<TAB>x<TAB>y` lines.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut classes = HashMap::new();
        let mut cross_class = BTreeSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Invalid(format!("segment class table line {}: '{line}'", lineno + 1));
            match fields.as_slice() {
                ["allow", x, y] => {
                    let (x, y) = (single_char(x).ok_or_else(bad)?, single_char(y).ok_or_else(bad)?);
                    cross_class.insert((x.min(y), x.max(y)));
                }
                [c, cls] => {
                    let c = single_char(c).ok_or_else(bad)?;
                    let cls = match *cls {
                        "V" => SegmentClass::Vowel,
                        "C" => SegmentClass::Consonant,
                        _ => return Err(bad()),
                    };
                    classes.insert(c, cls);
                }
                _ => return Err(bad()),
            }
        }
        Ok(Self {
            classes,
            cross_class,
        })
    }

    /// Normalizes `token` to NFC and resolves its class from the base character.
    pub fn segment(&self, token: &str) -> Result<Segment> {
        let token: String = token.nfc().collect();
        if token.is_empty() {
            return Err(Error::Invalid("empty segment token".into()));
        }
        if token == GAP {
            return Err(Error::Invalid(format!("'{GAP}' is reserved for alignment gaps")));
        }
        let base = base_char(&token)
            .ok_or_else(|| Error::Invalid(format!("segment '{token}' has no base character")))?;
        let class = *self.classes.get(&base).ok_or_else(|| {
            Error::Invalid(format!(
                "unknown base character '{base}' (U+{:04X}) in segment '{token}'",
                base as u32
            ))
        })?;
        Ok(Segment { token, class })
    }

    /// Whether two segments may occupy the same alignment column.
    pub fn may_substitute(&self, a: &Segment, b: &Segment) -> bool {
        if a.class == b.class {
            return true;
        }
        match (base_char(&a.token), base_char(&b.token)) {
            (Some(x), Some(y)) => self.cross_class.contains(&(x.min(y), x.max(y))),
            _ => false,
        }
    }

    pub fn cross_class_pairs(&self) -> &BTreeSet<(char, char)> {
        &self.cross_class
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    let c = it.next()?;
    it.next().is_none().then_some(c)
}

fn base_char(token: &str) -> Option<char> {
    token.nfd().find(|c| !is_combining_mark(*c))
}

/// Segmented pronunciation of one word at one location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcription {
    pub location_id: String,
    pub word_id: String,
    pub segments: Vec<Segment>,
}

impl Transcription {
    pub fn new(
        location_id: impl Into<String>,
        word_id: impl Into<String>,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Invalid("transcription without segments".into()));
        }
        Ok(Self {
            location_id: location_id.into(),
            word_id: word_id.into(),
            segments,
        })
    }

    /// Tokenizes a space-separated segment string against `classes`.
    pub fn parse(
        location_id: impl Into<String>,
        word_id: impl Into<String>,
        text: &str,
        classes: &SegmentClassTable,
    ) -> Result<Self> {
        let segments = text
            .split_whitespace()
            .map(|t| classes.segment(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(location_id, word_id, segments)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.token.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Unit,
    PmiInduced,
}

/// Substitution and insertion/deletion costs in [0, 1].
///
/// Unit tables carry no entries: identity costs 0 and every other admissible
/// operation costs 1. Induced tables look pairs up and fall back to `fallback`
/// (when set) for pairs never seen during induction.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDistanceTable {
    sub: BTreeMap<(String, String), f64>,
    indel: BTreeMap<String, f64>,
    provenance: Provenance,
    fallback: Option<f64>,
}

impl SegmentDistanceTable {
    pub fn unit() -> Self {
        Self {
            sub: BTreeMap::new(),
            indel: BTreeMap::new(),
            provenance: Provenance::Unit,
            fallback: None,
        }
    }

    pub fn induced(
        sub: impl IntoIterator<Item = ((String, String), f64)>,
        indel: impl IntoIterator<Item = (String, f64)>,
        fallback: Option<f64>,
    ) -> Result<Self> {
        let check = |what: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(Error::Invalid(format!("cost {v} for {what} outside [0, 1]")))
            }
        };
        let mut subs = BTreeMap::new();
        for ((a, b), c) in sub {
            let c = check(&format!("({a}, {b})"), c)?;
            let key = ordered(&a, &b);
            if let Some(prev) = subs.insert(key, c) {
                if prev != c {
                    return Err(Error::Invalid(format!("asymmetric costs for ({a}, {b})")));
                }
            }
        }
        let mut indels = BTreeMap::new();
        for (t, c) in indel {
            indels.insert(t.clone(), check(&format!("indel {t}"), c)?);
        }
        if let Some(f) = fallback {
            check("fallback", f)?;
        }
        Ok(Self {
            sub: subs,
            indel: indels,
            provenance: Provenance::PmiInduced,
            fallback,
        })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn fallback(&self) -> Option<f64> {
        self.fallback
    }

    pub fn sub_cost(&self, a: &str, b: &str) -> Result<f64> {
        match self.provenance {
            Provenance::Unit => Ok(if a == b { 0.0 } else { 1.0 }),
            Provenance::PmiInduced => self
                .sub
                .get(&ordered(a, b))
                .copied()
                .or(self.fallback)
                .ok_or_else(|| Error::MissingCost(a.into(), b.into())),
        }
    }

    pub fn indel_cost(&self, token: &str) -> Result<f64> {
        match self.provenance {
            Provenance::Unit => Ok(1.0),
            Provenance::PmiInduced => self
                .indel
                .get(token)
                .copied()
                .or(self.fallback)
                .ok_or_else(|| Error::MissingCost(token.into(), GAP.into())),
        }
    }

    pub fn substitutions(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.sub.iter().map(|((a, b), c)| (a.as_str(), b.as_str(), *c))
    }

    pub fn indels(&self) -> impl Iterator<Item = (&str, f64)> {
        self.indel.iter().map(|(t, c)| (t.as_str(), *c))
    }
}

pub(crate) fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}
