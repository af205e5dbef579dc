//! Language codes handled by the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    /// Amharic.
    Am,
    /// Tigrinya.
    Ti,
    /// English.
    En,
    Unknown,
}

impl Lang {
    /// Languages that can be configured as a pipeline side.
    pub const SUPPORTED: [Lang; 3] = [Lang::Am, Lang::Ti, Lang::En];

    pub fn code(self) -> &'static str {
        match self {
            Lang::Am => "am",
            Lang::Ti => "ti",
            Lang::En => "en",
            Lang::Unknown => "unknown",
        }
    }

    pub fn is_supported(self) -> bool {
        self != Lang::Unknown
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code '{0}'")]
pub struct ParseLangError(pub String);

impl FromStr for Lang {
    type Err = ParseLangError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "am" => Ok(Lang::Am),
            "ti" => Ok(Lang::Ti),
            "en" => Ok(Lang::En),
            "unknown" => Ok(Lang::Unknown),
            other => Err(ParseLangError(other.to_string())),
        }
    }
}
