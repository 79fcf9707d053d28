pub mod cli;
pub mod forms;
pub mod lattice;
pub mod oracle;
pub mod rewrite;
pub mod term;
pub mod tfpg;
