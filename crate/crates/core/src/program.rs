//! Identifiers shared by every stage.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, NaiveDate};

/// Calendar month in `YYYY-MM` form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid month key {0:?}, expected YYYY-MM")]
pub struct InvalidMonthKey(pub String);

impl MonthKey {
    pub fn from_date(date: NaiveDate) -> Self {
        MonthKey(alloc::format!("{:04}-{:02}", date.year(), date.month()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for MonthKey {
    type Err = InvalidMonthKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidMonthKey(s.to_string());
        let (year, month) = s.split_once('-').ok_or_else(bad)?;
        if year.len() != 4 || month.len() != 2 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let month: u32 = month.parse().map_err(|_| bad())?;
        NaiveDate::from_ymd_opt(year, month, 1).ok_or_else(bad)?;
        Ok(MonthKey(s.to_string()))
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A program is identified by its network together with its name, since
/// different networks occasionally reuse a show title.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgramId {
    pub network: String,
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid program id {0:?}, expected NETWORK/Program Name")]
pub struct InvalidProgramId(pub String);

impl ProgramId {
    pub fn new(network: impl Into<String>, program: impl Into<String>) -> Self {
        ProgramId {
            network: network.into(),
            program: program.into(),
        }
    }
}

/// Rendered as `NETWORK/Program Name`. Network labels never contain `/`.
impl fmt::Display for ProgramId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network, self.program)
    }
}

impl FromStr for ProgramId {
    type Err = InvalidProgramId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            Some((network, program)) if !network.is_empty() && !program.is_empty() => {
                Ok(ProgramId::new(network, program))
            }
            _ => Err(InvalidProgramId(s.to_string())),
        }
    }
}
