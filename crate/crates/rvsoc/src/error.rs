//! Host-level (simulation) faults, as opposed to guest traps.

use crate::arch::TrapCause;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HostFault {
    #[error("fetch from unmapped physical address {pc:#010x} with translation off")]
    UnmappedFetch { pc: u32 },
    #[error("RVuc firmware fault: {0}")]
    RvucFault(String),
    #[error("RVuc watchdog expired after {0} instructions in one request")]
    Watchdog(u64),
    #[error("device protocol violation: {0}")]
    DeviceProtocol(String),
}

/// Mid-instruction outcome inside the two executors: a guest trap that
/// redirects the program, or a host fault that ends the simulation.
#[derive(Debug)]
pub enum StepFault {
    Guest(TrapCause),
    Host(HostFault),
}

impl From<TrapCause> for StepFault {
    fn from(c: TrapCause) -> StepFault {
        StepFault::Guest(c)
    }
}

impl From<HostFault> for StepFault {
    fn from(f: HostFault) -> StepFault {
        StepFault::Host(f)
    }
}
