//! One module per subcommand. Each exposes clap `Args`, a `run` entry
//! point and, where useful to other callers, the pipeline as a function
//! that returns its report.

pub mod compare;
pub mod decode;
pub mod fit;
pub mod gof;
pub mod hierarchy;
pub mod recover;
pub mod simulate;
