//! Command-line front end and HTTP gateway over `prevent-core`.

pub mod gateway;
