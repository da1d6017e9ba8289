//! Whole-system assembly: architectural state, memory system, MMU, RVuc
//! and a core (timing or functional reference) behind one step interface,
//! plus the run loop and the lockstep comparator.

use std::collections::VecDeque;

use crate::arch::ArchState;
use crate::error::HostFault;
use crate::mem::{MemConfig, MemorySystem, RAM_BASE};
use crate::mmu::Mmu;
use crate::oracle::{oracle_step, RetireRecord};
use crate::rvuc::Rvuc;
use crate::timing::TimingCore;

/// Which execution model drives the machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreModel {
    /// The multi-cycle core with cache, TLBs and fetch buffer.
    Timing,
    /// The flat-memory functional reference.
    Reference,
}

/// Why a run loop stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    /// The guest wrote the power-off magic.
    Poweroff,
    /// The slot budget ran out.
    SlotLimit,
    /// A host-level fault (bad firmware, unmapped fetch, ...).
    Fault(HostFault),
}

#[derive(Debug, Clone)]
pub struct Machine {
    pub st: ArchState,
    pub mem: MemorySystem,
    pub mmu: Mmu,
    pub rvuc: Rvuc,
    pub core: TimingCore,
    pub model: CoreModel,
    /// Pending console input script, drained into the RX FIFO between
    /// retirement slots so input timing is deterministic.
    pub stdin: VecDeque<u8>,
    pub stdin_consumed: u64,
    /// Retirement slots completed (instructions and trap slots).
    pub slot: u64,
}

impl Machine {
    pub fn new(cfg: MemConfig, firmware: &[u8], model: CoreModel) -> Result<Machine, HostFault> {
        Ok(Machine {
            st: ArchState::new(RAM_BASE),
            mem: MemorySystem::new(cfg),
            mmu: Mmu::default(),
            rvuc: Rvuc::new(firmware)?,
            core: TimingCore::default(),
            model,
            stdin: VecDeque::new(),
            stdin_consumed: 0,
            slot: 0,
        })
    }

    /// Copy a flat image into RAM at the given offset.
    pub fn load_ram(&mut self, offset: u32, image: &[u8]) -> Result<(), HostFault> {
        let end = offset as usize + image.len();
        if end > self.mem.ram.len() {
            return Err(HostFault::DeviceProtocol(format!(
                "RAM image of {} bytes at offset {offset:#x} exceeds the {} byte region",
                image.len(),
                self.mem.ram.len()
            )));
        }
        self.mem.ram[offset as usize..end].copy_from_slice(image);
        Ok(())
    }

    pub fn load_disk(&mut self, image: &[u8]) -> Result<(), HostFault> {
        if image.len() > self.mem.disk.len() {
            return Err(HostFault::DeviceProtocol(format!(
                "disk image of {} bytes exceeds the {} byte region",
                image.len(),
                self.mem.disk.len()
            )));
        }
        self.mem.disk[..image.len()].copy_from_slice(image);
        Ok(())
    }

    pub fn set_stdin(&mut self, script: &[u8]) {
        self.stdin = script.iter().copied().collect();
    }

    /// Top up the RX FIFO from the input script. Runs between slots only.
    fn feed_stdin(&mut self) {
        while self.mem.devices.console.rx_space() > 0 {
            match self.stdin.pop_front() {
                Some(b) => {
                    self.mem.devices.console.rx_push_from_host(b);
                    self.stdin_consumed += 1;
                }
                None => break,
            }
        }
    }

    /// Execute one retirement slot.
    pub fn step(&mut self) -> Result<RetireRecord, HostFault> {
        self.feed_stdin();
        let rec = match self.model {
            CoreModel::Timing => {
                self.core
                    .step(&mut self.st, &mut self.mem, &mut self.mmu, &mut self.rvuc)
            }
            CoreModel::Reference => {
                oracle_step(&mut self.st, &mut self.mem, &mut self.mmu, &mut self.rvuc)
            }
        }?;
        self.slot += 1;
        Ok(rec)
    }

    /// Run until power-off, a host fault or the slot budget. The callback
    /// sees every retirement record with its slot index.
    pub fn run(
        &mut self,
        max_slots: u64,
        mut on_retire: impl FnMut(u64, &RetireRecord),
    ) -> StopReason {
        while self.slot < max_slots {
            let idx = self.slot;
            match self.step() {
                Ok(rec) => {
                    on_retire(idx, &rec);
                    if self.mem.devices.poweroff {
                        return StopReason::Poweroff;
                    }
                }
                Err(f) => return StopReason::Fault(f),
            }
        }
        StopReason::SlotLimit
    }
}

/// First point where two machines disagreed.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub slot: u64,
    pub timing: RetireRecord,
    pub reference: RetireRecord,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "divergence at slot {}:", self.slot)?;
        writeln!(f, "  timing:    {:x?}", self.timing)?;
        write!(f, "  reference: {:x?}", self.reference)
    }
}

/// Outcome of a lockstep run.
#[derive(Debug)]
pub enum LockstepOutcome {
    /// Both machines agreed for the whole run.
    Match(StopReason),
    Diverged(Box<Divergence>),
    Fault(HostFault),
}

/// Step two machines in lockstep and compare every retirement record.
/// The two must be configured with identical images and input scripts.
pub fn run_lockstep(
    timing: &mut Machine,
    reference: &mut Machine,
    max_slots: u64,
    mut on_retire: impl FnMut(u64, &RetireRecord),
) -> LockstepOutcome {
    while timing.slot < max_slots {
        let idx = timing.slot;
        let a = match timing.step() {
            Ok(r) => r,
            Err(f) => return LockstepOutcome::Fault(f),
        };
        let b = match reference.step() {
            Ok(r) => r,
            Err(f) => return LockstepOutcome::Fault(f),
        };
        if a != b {
            return LockstepOutcome::Diverged(Box::new(Divergence {
                slot: idx,
                timing: a,
                reference: b,
            }));
        }
        on_retire(idx, &a);
        let off_a = timing.mem.devices.poweroff;
        let off_b = reference.mem.devices.poweroff;
        if off_a != off_b {
            return LockstepOutcome::Diverged(Box::new(Divergence {
                slot: idx,
                timing: a,
                reference: b,
            }));
        }
        if off_a {
            return LockstepOutcome::Match(StopReason::Poweroff);
        }
    }
    LockstepOutcome::Match(StopReason::SlotLimit)
}
