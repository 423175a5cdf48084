// Each chapter becomes an empty module whose docs are the chapter text, so
// `cargo test --doc -p errand-book` runs every snippet in the book. One
// module per chapter keeps failures traceable to their source file.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/commands.md")]
pub mod commands {}
#[doc = include_str!("src/landmarks.md")]
pub mod landmarks {}
#[doc = include_str!("src/planning.md")]
pub mod planning {}
#[doc = include_str!("src/avoidance.md")]
pub mod avoidance {}
#[doc = include_str!("src/executor.md")]
pub mod executor {}
#[doc = include_str!("src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("src/api.md")]
pub mod api {}
