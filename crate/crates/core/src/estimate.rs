use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Exact,
    Push,
    PushPlus,
    Stw,
    Swf,
    Snb,
    SnbPlus,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Exact,
        Method::Push,
        Method::PushPlus,
        Method::Stw,
        Method::Swf,
        Method::Snb,
        Method::SnbPlus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Push => "push",
            Method::PushPlus => "push+",
            Method::Stw => "stw",
            Method::Swf => "swf",
            Method::Snb => "snb",
            Method::SnbPlus => "snb+",
        }
    }

    /// Whether the method answers a pairwise (as opposed to nodal) query.
    /// The exact oracle answers both.
    pub fn is_pairwise(self) -> bool {
        !matches!(self, Method::Snb | Method::SnbPlus)
    }

    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Method::Stw | Method::Swf | Method::Snb | Method::SnbPlus
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// An answered pairwise query.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    /// Truncation length used (number of hops / walk positions).
    pub ell: usize,
    /// Hops for push methods, samples for walk methods.
    pub work: u64,
    /// Nodes with nonzero residual (push methods only).
    pub touched: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    /// Standard error of the sample mean (walk methods only).
    pub std_error: Option<f64>,
    /// True when a sample cap below the theoretical count ended sampling.
    pub capped: bool,
    pub elapsed: Duration,
}
