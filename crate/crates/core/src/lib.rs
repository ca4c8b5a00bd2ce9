//! PEVD-based precoding for coherent optical FBMC/OQAM.
//!
//! The crate is organised bottom-up:
//!
//! * [`polymat`]: Laurent-polynomial matrices, the carrier for every
//!   channel, eigenvector and precoder matrix.
//! * [`pevd`] / [`polyinv`]: Polynomial eigenvalue decomposition (SBR2,
//!   SMD) and time-domain inversion of the polynomial eigenvalues.
//! * [`tmux`] / [`channel`]: The FBMC/OQAM transmultiplexer and the
//!   chromatic dispersion and AWGN fiber channel at sample level.
//! * [`chanmat`]: Polyphase composite responses and the banded channel
//!   matrices they assemble into.
//! * [`precoder`]: Pseudo-inverse precoder design, stream precoding and
//!   adaptive optimum-energy truncation.
//! * [`metrics`] / [`experiment`]: EVM, BER and the configurable link
//!   experiments built on top of everything else.

pub mod chanmat;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod pevd;
pub mod polyinv;
pub mod polymat;
pub mod precoder;
pub mod tmux;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use polymat::{LaurentPoly, PolyMatrix};
