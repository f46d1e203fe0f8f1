//! Library side of the draftflow binary: the HTTP service, importable so
//! tests can run it in-process on an ephemeral port.

pub mod server;
