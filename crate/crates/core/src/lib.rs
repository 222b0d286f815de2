//! Infinite time register machines.
//!
//! * [`ordinal`]: clock values below ω^ω in Cantor normal form.
//! * [`isa`]: instruction set, assembler and canonical printer.
//! * [`vm`]: transfinite execution with the liminf limit rule and lasso
//!   acceleration.
//! * [`oracle`]: reals used as oracles.
//! * [`coding`]: pairing, codes of finite structures, well-order codes.
//! * [`gadgets`]: program generators, a first-order formula compiler and
//!   the recognizability harness.

pub mod coding;
pub mod gadgets;
pub mod isa;
pub mod oracle;
pub mod ordinal;
pub mod vm;
