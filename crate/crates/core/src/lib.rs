//! Bit-exact software model of modulo-(2^2n+1) residue arithmetic carried out
//! on two parallel n-bit complex residue channels with moduli 2^n - j and
//! 2^n + j (j^2 = -1).
//!
//! The crate is organised the way the datapath is:
//!
//! * [`residue`] holds the encodings shared by every unit (the flagged
//!   modulo-(2^2n+1) form, fresh channel operands, stored-borrow/stored-carry
//!   channel residues and moduli sets).
//! * [`oracle`] is an independent big-integer / Gaussian-integer reference and
//!   the generic sweep driver used to validate the units against it.
//! * [`forward`] converts binary inputs into residues.
//! * [`alu`] models the channel adder and multiplier stage by stage.
//! * [`reverse`] brings channel results back to modulo-(2^2n+1) form and
//!   reconstructs integers with the New CRT.
//! * [`verify`] wires each unit to the oracle for exhaustive or seeded random
//!   sweeps, and [`report`] holds the machine-readable reports.

pub mod alu;
pub mod error;
pub mod forward;
pub mod oracle;
pub mod report;
pub mod residue;
pub mod reverse;
pub mod verify;

pub use error::{Result, RnsError};
pub use residue::{
    ChannelDescriptor, ChannelSign, ComplexChannelResidue, Dim1Residue, FreshOperand, ModuliSet,
    Params,
};
