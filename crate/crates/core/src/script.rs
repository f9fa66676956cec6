//! Script classification for abugidas and the unit segmentation used to
//! initialize merge learning.
//!
//! A [`ScriptProfile`] names two codepoint classes: dependent vowel signs and
//! additional attaching signs (nukta, virama, ...). Plain BPE starts from one
//! unit per codepoint ([`bpe_units`]); constrained BPE glues every run of
//! attaching codepoints onto the preceding base character ([`cbpe_units`]), so
//! no later merge can ever produce a token that starts with a sign.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};

const PROFILE_DIRECTIVE: &str = "#morphtok-profile";
const PROFILE_VERSION: &str = "v1";

static DEVANAGARI_PROFILE: &str = include_str!("../data/devanagari.profile");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptProfile {
    name: String,
    dependent_vowels: BTreeSet<char>,
    attach_signs: BTreeSet<char>,
}

impl ScriptProfile {
    pub fn new(
        name: impl Into<String>,
        dependent_vowels: impl IntoIterator<Item = char>,
        attach_signs: impl IntoIterator<Item = char>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "profile name {name:?} must be non-empty and whitespace-free"
            )));
        }
        let profile = Self {
            name,
            dependent_vowels: dependent_vowels.into_iter().collect(),
            attach_signs: attach_signs.into_iter().collect(),
        };
        if let Some(cp) = profile
            .dependent_vowels
            .iter()
            .chain(&profile.attach_signs)
            .find(|c| c.is_whitespace() || c.is_control())
        {
            return Err(Error::InvalidArgument(format!(
                "profile {} classifies U+{:04X}, a space or control character",
                profile.name, *cp as u32
            )));
        }
        Ok(profile)
    }

    /// The built-in Devanagari profile: all dependent vowel signs, plus nukta
    /// and virama as attaching signs.
    pub fn devanagari() -> Self {
        Self::parse(DEVANAGARI_PROFILE, Path::new("devanagari.profile"))
            .expect("bundled devanagari profile is well-formed")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dependent_vowels(&self) -> &BTreeSet<char> {
        &self.dependent_vowels
    }

    pub fn attach_signs(&self) -> &BTreeSet<char> {
        &self.attach_signs
    }

    pub fn is_dependent_vowel(&self, cp: char) -> bool {
        self.dependent_vowels.contains(&cp)
    }

    /// True for every codepoint that CBPE glues onto the preceding unit.
    pub fn attaches(&self, cp: char) -> bool {
        self.dependent_vowels.contains(&cp) || self.attach_signs.contains(&cp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses the line-oriented profile format:
    ///
    /// ```text
    /// #morphtok-profile v1 name=devanagari
    /// dependent_vowel<TAB>093E
    /// attach_sign<TAB>094D
    /// ```
    ///
    /// The directive line is optional; without it the name is the file stem.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("unnamed")
            .to_string();
        let mut dependent_vowels = Vec::new();
        let mut attach_signs = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            if let Some(rest) = raw.strip_prefix(PROFILE_DIRECTIVE) {
                let mut fields = rest.split_whitespace();
                match fields.next() {
                    Some(PROFILE_VERSION) => {}
                    other => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unsupported profile version {:?}", other.unwrap_or("")),
                        ))
                    }
                }
                for field in fields {
                    match field.split_once('=') {
                        Some(("name", value)) => name = value.to_string(),
                        _ => {
                            return Err(Error::parse(
                                path,
                                lineno,
                                format!("unknown directive field {field:?}"),
                            ))
                        }
                    }
                }
                continue;
            }
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (category, hex) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, lineno, "expected <category>\\t<codepoint-hex>"))?;
            let cp = u32::from_str_radix(hex.trim().trim_start_matches("U+"), 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| Error::parse(path, lineno, format!("bad codepoint {hex:?}")))?;
            match category.trim() {
                "dependent_vowel" => dependent_vowels.push(cp),
                "attach_sign" => attach_signs.push(cp),
                other => {
                    return Err(Error::parse(path, lineno, format!("unknown category {other:?}")))
                }
            }
        }
        Self::new(name, dependent_vowels, attach_signs)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("{PROFILE_DIRECTIVE} {PROFILE_VERSION} name={}\n", self.name);
        for cp in &self.dependent_vowels {
            let _ = writeln!(out, "dependent_vowel\t{:04X}", *cp as u32);
        }
        for cp in &self.attach_signs {
            let _ = writeln!(out, "attach_sign\t{:04X}", *cp as u32);
        }
        out
    }
}

/// Named profiles available when resolving a model file's `profile=` field.
#[derive(Debug, Clone)]
pub struct ProfileRegistry {
    profiles: BTreeMap<String, ScriptProfile>,
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        let mut registry = Self {
            profiles: BTreeMap::new(),
        };
        registry.insert(ScriptProfile::devanagari());
        registry
    }
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        Self {
            profiles: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, profile: ScriptProfile) {
        self.profiles.insert(profile.name.clone(), profile);
    }

    pub fn get(&self, name: &str) -> Result<&ScriptProfile> {
        self.profiles
            .get(name)
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))
    }

    /// Resolves `name_or_path` as a profile file if it exists on disk, otherwise as the
    /// name of a registered profile.
    pub fn resolve(&self, name_or_path: &str) -> Result<ScriptProfile> {
        let path = PathBuf::from(name_or_path);
        if path.is_file() {
            ScriptProfile::load(path)
        } else {
            self.get(name_or_path).cloned()
        }
    }
}

/// Atomic units of one word, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSequence {
    pub units: Vec<String>,
    /// Set when the word began with an attaching sign (malformed orthography).
    pub leading_sign: bool,
}

impl UnitSequence {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn concat(&self) -> String {
        self.units.concat()
    }
}

fn check_word(word: &str) -> Result<()> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    if word.chars().any(char::is_whitespace) {
        return Err(Error::Whitespace(word.to_string()));
    }
    Ok(())
}

/// One unit per codepoint.
pub fn bpe_units(word: &str) -> Result<UnitSequence> {
    check_word(word)?;
    Ok(UnitSequence {
        units: word.chars().map(String::from).collect(),
        leading_sign: false,
    })
}

/// Codepoint units with every attaching sign appended to the unit before it.
pub fn cbpe_units(word: &str, profile: &ScriptProfile) -> Result<UnitSequence> {
    check_word(word)?;
    let mut units: Vec<String> = Vec::new();
    let mut leading_sign = false;
    for cp in word.chars() {
        match units.last_mut() {
            Some(current) if profile.attaches(cp) => current.push(cp),
            _ => {
                if units.is_empty() && profile.attaches(cp) {
                    leading_sign = true;
                }
                units.push(String::from(cp));
            }
        }
    }
    if leading_sign {
        warn!("word {word:?} starts with a combining sign; kept as its own unit");
    }
    Ok(UnitSequence {
        units,
        leading_sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units(seq: &UnitSequence) -> Vec<&str> {
        seq.units.iter().map(String::as_str).collect()
    }

    #[test]
    fn dependent_vowel_membership() {
        let p = ScriptProfile::devanagari();
        assert!(p.is_dependent_vowel('\u{093E}'));
        assert!(!p.is_dependent_vowel('\u{0915}'));
        assert!(!p.is_dependent_vowel('\u{094D}'));
        assert!(p.attaches('\u{094D}'));
        assert!(p.attaches('\u{093C}'));
        assert!(!p.attaches('\u{0902}'));
    }

    // Every codepoint in U+0900..U+097F whose UCD name contains "VOWEL SIGN"
    // (Unicode 13 character database).
    #[test]
    fn dependent_vowels_match_ucd_vowel_signs() {
        let ucd: Vec<u32> = vec![
            0x93a, 0x93b, 0x93e, 0x93f, 0x940, 0x941, 0x942, 0x943, 0x944, 0x945, 0x946, 0x947,
            0x948, 0x949, 0x94a, 0x94b, 0x94c, 0x94e, 0x94f, 0x955, 0x956, 0x957, 0x962, 0x963,
        ];
        let p = ScriptProfile::devanagari();
        let got: Vec<u32> = p.dependent_vowels().iter().map(|c| *c as u32).collect();
        assert_eq!(got, ucd);
        assert!(p.is_dependent_vowel('ि'));
    }

    #[test]
    fn initialization_contrast() {
        let p = ScriptProfile::devanagari();
        assert_eq!(units(&bpe_units("कलम").unwrap()), ["क", "ल", "म"]);
        assert_eq!(units(&cbpe_units("कलम", &p).unwrap()), ["क", "ल", "म"]);
        assert_eq!(
            units(&bpe_units("कार्यालय").unwrap()),
            ["क", "ा", "र", "्", "य", "ा", "ल", "य"]
        );
        assert_eq!(
            units(&cbpe_units("कार्यालय", &p).unwrap()),
            ["का", "र्", "या", "ल", "य"]
        );
    }

    #[test]
    fn nukta_and_vowel_coalesce() {
        let p = ScriptProfile::devanagari();
        let seq = cbpe_units("पढ़ाई", &p).unwrap();
        assert_eq!(units(&seq), ["प", "ढ\u{093C}\u{093E}", "ई"]);
        assert_eq!(seq.concat(), "पढ़ाई");
    }

    #[test]
    fn singleton_and_errors() {
        assert_eq!(units(&bpe_units("x").unwrap()), ["x"]);
        assert!(matches!(bpe_units(""), Err(Error::EmptyWord)));
        assert!(matches!(
            cbpe_units("a b", &ScriptProfile::devanagari()),
            Err(Error::Whitespace(_))
        ));
    }

    #[test]
    fn leading_sign_is_own_unit() {
        let p = ScriptProfile::devanagari();
        let seq = cbpe_units("ाक", &p).unwrap();
        assert!(seq.leading_sign);
        assert_eq!(units(&seq), ["ा", "क"]);
        let seq = cbpe_units("ा्क", &p).unwrap();
        assert_eq!(units(&seq), ["ा्", "क"]);
        assert!(!cbpe_units("का", &p).unwrap().leading_sign);
    }

    #[test]
    fn profile_file_round_trip() {
        let p = ScriptProfile::devanagari();
        let text = p.to_file_string();
        let back = ScriptProfile::parse(&text, Path::new("whatever.profile")).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn profile_name_defaults_to_stem() {
        let p = ScriptProfile::parse("dependent_vowel\t0BBE\n", Path::new("/x/tamil.profile"))
            .unwrap();
        assert_eq!(p.name(), "tamil");
        assert!(p.is_dependent_vowel('\u{0BBE}'));
    }

    #[test]
    fn profile_parse_errors() {
        let path = Path::new("p.profile");
        assert!(ScriptProfile::parse("dependent_vowel 093E\n", path).is_err());
        assert!(ScriptProfile::parse("matra\t093E\n", path).is_err());
        assert!(ScriptProfile::parse("attach_sign\tZZZZ\n", path).is_err());
        assert!(ScriptProfile::parse("attach_sign\t0020\n", path).is_err());
        assert!(ScriptProfile::parse("#morphtok-profile v9 name=x\n", path).is_err());
    }

    #[test]
    fn registry_resolves_builtin() {
        let reg = ProfileRegistry::default();
        assert_eq!(reg.resolve("devanagari").unwrap().name(), "devanagari");
        assert!(matches!(reg.get("klingon"), Err(Error::UnknownProfile(n)) if n == "klingon"));
    }
}
