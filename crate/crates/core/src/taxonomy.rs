//! PII label taxonomy and placeholder surface grammar.
//!
//! Placeholders come in three surface styles: `[X]`, `[[X]]` and `<X>`, where
//! `X` matches `[A-Z][A-Z0-9_]*`. Trailing digits on a known label become a
//! coreference index (`[GIVENNAME1]` is `GIVENNAME` with index 1); unknown
//! names are kept verbatim as [`PiiLabel::Extension`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

macro_rules! canonical_labels {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// A PII entity type.
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum PiiLabel {
            $($variant,)+
            /// A label outside the canonical taxonomy, e.g. `NAME` or `ORG`.
            Extension(String),
        }

        impl PiiLabel {
            /// Every canonical (non-extension) label, in declaration order.
            pub const CANONICAL: &'static [PiiLabel] = &[$(PiiLabel::$variant,)+];

            pub fn name(&self) -> &str {
                match self {
                    $(PiiLabel::$variant => $name,)+
                    PiiLabel::Extension(raw) => raw,
                }
            }

            fn canonical_from_name(name: &str) -> Option<PiiLabel> {
                match name {
                    $($name => Some(PiiLabel::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

canonical_labels! {
    Street => "STREET",
    Username => "USERNAME",
    GeoCoord => "GEOCOORD",
    GivenName => "GIVENNAME",
    SocialNumber => "SOCIALNUMBER",
    CardIssuer => "CARDISSUER",
    Tel => "TEL",
    Email => "EMAIL",
    Title => "TITLE",
    Building => "BUILDING",
    Passport => "PASSPORT",
    Ip => "IP",
    Pass => "PASS",
    City => "CITY",
    Country => "COUNTRY",
    PostCode => "POSTCODE",
    Sex => "SEX",
    SecAddress => "SECADDRESS",
    Bod => "BOD",
    State => "STATE",
    LastName => "LASTNAME",
    Time => "TIME",
    Date => "DATE",
    IdCard => "IDCARD",
    DriverLicense => "DRIVERLICENSE",
}

/// Surface forms listed in the supported-label appendix of the AI4Privacy
/// label set, including the numbered name variants.
pub const APPENDIX_LABELS: &[&str] = &[
    "STREET",
    "USERNAME",
    "GEOCOORD",
    "GIVENNAME1",
    "SOCIALNUMBER",
    "GIVENNAME2",
    "TEL",
    "CARDISSUER",
    "TITLE",
    "EMAIL",
    "PASSPORT",
    "BUILDING",
    "PASS",
    "IP",
    "COUNTRY",
    "CITY",
    "SEX",
    "POSTCODE",
    "BOD",
    "SECADDRESS",
    "LASTNAME3",
    "STATE",
    "TIME",
    "LASTNAME1",
    "LASTNAME2",
    "DATE",
    "IDCARD",
    "DRIVERLICENSE",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("not a placeholder: {0:?}")]
    NotAPlaceholder(String),
    #[error("invalid label name: {0:?}")]
    InvalidName(String),
}

/// True if `name` matches `[A-Z][A-Z0-9_]*`.
pub fn is_label_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl PiiLabel {
    pub fn is_extension(&self) -> bool {
        matches!(self, PiiLabel::Extension(_))
    }

    /// Builds a label from a bare name with no index folding.
    ///
    /// Canonical names map to their variant; anything else that fits the
    /// label grammar becomes an extension.
    pub fn from_name(name: &str) -> Result<PiiLabel, LabelError> {
        if !is_label_name(name) {
            return Err(LabelError::InvalidName(name.to_string()));
        }
        Ok(PiiLabel::canonical_from_name(name)
            .unwrap_or_else(|| PiiLabel::Extension(name.to_string())))
    }
}

impl fmt::Display for PiiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for PiiLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PiiLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        PiiLabel::from_name(&raw).map_err(serde::de::Error::custom)
    }
}

impl FromStr for PiiLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PiiLabel::from_name(s)
    }
}

/// Surface style of a rendered placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceholderStyle {
    /// `[EMAIL]`, the toolkit's canonical form.
    #[default]
    Single,
    /// `[[EMAIL]]`
    Double,
    /// `<EMAIL>`
    Angle,
}

/// A type-specific mask token, optionally carrying a coreference index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placeholder {
    pub label: PiiLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coref_index: Option<u32>,
}

impl Placeholder {
    pub fn new(label: PiiLabel) -> Self {
        Placeholder { label, coref_index: None }
    }

    pub fn indexed(label: PiiLabel, index: u32) -> Self {
        Placeholder { label, coref_index: Some(index) }
    }

    /// Interprets a bare label name such as `GIVENNAME1` or `EMAIL`.
    pub fn from_name(name: &str) -> Result<Placeholder, LabelError> {
        if !is_label_name(name) {
            return Err(LabelError::InvalidName(name.to_string()));
        }
        if let Some(label) = PiiLabel::canonical_from_name(name) {
            return Ok(Placeholder::new(label));
        }
        let stem = name.trim_end_matches(|c: char| c.is_ascii_digit());
        let digits = &name[stem.len()..];
        if !digits.is_empty() && !digits.starts_with('0') {
            if let (Some(label), Ok(index)) =
                (PiiLabel::canonical_from_name(stem), digits.parse::<u32>())
            {
                return Ok(Placeholder::indexed(label, index));
            }
        }
        Ok(Placeholder::new(PiiLabel::Extension(name.to_string())))
    }

    /// Label name with the coreference index appended, e.g. `GIVENNAME1`.
    pub fn inner_name(&self) -> String {
        match self.coref_index {
            Some(i) => format!("{}{}", self.label.name(), i),
            None => self.label.name().to_string(),
        }
    }

    pub fn render(&self, style: PlaceholderStyle) -> String {
        canonical_placeholder(self, style)
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_placeholder(self, PlaceholderStyle::Single))
    }
}

/// Parses a full placeholder surface form: `[X]`, `[[X]]` or `<X>`.
pub fn parse_label(surface: &str) -> Result<Placeholder, LabelError> {
    let inner = if let Some(rest) = surface.strip_prefix("[[") {
        rest.strip_suffix("]]")
    } else if let Some(rest) = surface.strip_prefix('[') {
        rest.strip_suffix(']')
    } else if let Some(rest) = surface.strip_prefix('<') {
        rest.strip_suffix('>')
    } else {
        None
    };
    match inner {
        Some(name) if is_label_name(name) => Placeholder::from_name(name),
        _ => Err(LabelError::NotAPlaceholder(surface.to_string())),
    }
}

pub fn canonical_placeholder(p: &Placeholder, style: PlaceholderStyle) -> String {
    let inner = p.inner_name();
    match style {
        PlaceholderStyle::Single => format!("[{inner}]"),
        PlaceholderStyle::Double => format!("[[{inner}]]"),
        PlaceholderStyle::Angle => format!("<{inner}>"),
    }
}
