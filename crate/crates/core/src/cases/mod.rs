//! Case studies: information sharing with history-dependent value, and a
//! coordination game coupled to an SIS epidemic.

pub mod cti;
pub mod sisgcg;
