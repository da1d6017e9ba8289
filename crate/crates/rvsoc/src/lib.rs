//! Cycle-level full-system simulator of a small RV32IMAC SoC: a
//! multi-cycle in-order core with Sv32 translation, split TLBs, a
//! direct-mapped write-through cache and a fetch buffer, MMIO devices, and
//! an RV32I I/O microcontroller driven over a doorbell. A functional
//! reference interpreter runs the same ISA against flat memory for
//! lockstep verification.

pub mod arch;
pub mod checkpoint;
pub mod devices;
pub mod elf;
pub mod error;
pub mod exec;
pub mod firmware;
pub mod fuzz;
pub mod isa;
pub mod machine;
pub mod mem;
pub mod mmu;
pub mod oracle;
pub mod rvuc;
pub mod stats;
pub mod timing;
pub mod trace;
