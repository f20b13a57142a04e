#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod condition;
pub mod emit;
pub mod error;
pub mod frame;
pub mod generate;
pub mod model;
pub mod oracle;
pub mod ntriples;
pub mod prefix;
pub mod solution;
pub mod store;
pub mod term;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod var;

pub use condition::{CompareOp, Condition, Operand};
pub use emit::emit;
pub use error::{EvalError, FrameError, GenerateError, ModelError, NtParseError, TermError};
pub use frame::{AggFunc, Direction, Frame, JoinType, KnowledgeGraph, SortOrder};
pub use generate::{generate, naive_generate};
pub use model::QueryModel;
pub use prefix::PrefixMap;
pub use solution::{Mapping, SolutionBag};
pub use store::{Dataset, GraphStore, PatternTerm, TriplePattern};
pub use term::{Iri, Literal, Numeric, Term, Triple};
pub use var::Var;
