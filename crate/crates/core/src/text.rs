//! Ingestion-time text normalization.

use std::borrow::Cow;
use std::str::FromStr;

use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Nfc,
    None,
}

impl Normalization {
    pub fn apply<'a>(self, text: &'a str) -> Cow<'a, str> {
        match self {
            Normalization::None => Cow::Borrowed(text),
            Normalization::Nfc => match is_nfc_quick(text.chars()) {
                IsNormalized::Yes => Cow::Borrowed(text),
                _ => Cow::Owned(text.nfc().collect()),
            },
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "nfc" => Ok(Normalization::Nfc),
            "none" => Ok(Normalization::None),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}
