use alloc::string::String;
use core::fmt;

use crate::error::FrameError;

/// A column / variable name. Restricted to `[A-Za-z_][A-Za-z0-9_]*` so it
/// maps onto a SPARQL variable by prefixing `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Result<Self, FrameError> {
        let name = name.into();
        if is_valid_name(&name) {
            Ok(Var(name))
        } else {
            Err(FrameError::InvalidColumnName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl PartialEq<str> for Var {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Var {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}
