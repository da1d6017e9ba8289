//! RVuc: the RV32I I/O microcontroller. It sleeps until the main core
//! rings the doorbell, then runs its firmware from a private 8KB local
//! memory while the main core stalls. Data accesses go straight to the
//! physical address map (devices and DRAM); instruction fetches never
//! leave local memory.
//!
//! The firmware environment is deliberately austere: RV32I only. M, A, C
//! and Zicsr encodings in firmware indicate a broken image and surface as
//! host faults rather than guest traps.

use crate::error::HostFault;
use crate::exec;
use crate::isa::{decode32, InstClass};
use crate::mem::MemorySystem;

pub const RVUC_LOCAL_SIZE: usize = 8 << 10;
/// Per-request instruction budget; firmware that spins longer is broken.
pub const RVUC_WATCHDOG: u64 = 10_000_000;
/// The four-step fetch/decode/execute/write cycle of the RVuc core.
pub const RVUC_STEPS_PER_INST: u64 = 4;

#[derive(Debug, Clone)]
pub struct Rvuc {
    pub pc: u32,
    pub gpr: [u32; 32],
    pub local: Vec<u8>,
    /// Position within the four-step instruction cycle (timing model).
    pub phase: u8,
    /// Instructions executed since the current request began.
    pub insts: u64,
}

impl Rvuc {
    /// Load a firmware image into local memory. Oversized images are a
    /// host configuration error.
    pub fn new(firmware: &[u8]) -> Result<Rvuc, HostFault> {
        if firmware.len() > RVUC_LOCAL_SIZE {
            return Err(HostFault::RvucFault(format!(
                "firmware image is {} bytes, local memory holds {}",
                firmware.len(),
                RVUC_LOCAL_SIZE
            )));
        }
        let mut local = vec![0u8; RVUC_LOCAL_SIZE];
        local[..firmware.len()].copy_from_slice(firmware);
        Ok(Rvuc {
            pc: 0,
            gpr: [0; 32],
            local,
            phase: 0,
            insts: 0,
        })
    }

    /// A doorbell request resets the core to a clean state at pc 0.
    pub fn begin_request(&mut self) {
        self.pc = 0;
        self.gpr = [0; 32];
        self.phase = 0;
        self.insts = 0;
    }

    fn set_gpr(&mut self, idx: u8, v: u32) {
        if idx != 0 {
            self.gpr[idx as usize] = v;
        }
    }

    /// One cycle of the four-step core; the instruction's effects land on
    /// the final step. Used by the timing model while the main core stalls.
    pub fn step_cycle(&mut self, mem: &mut MemorySystem) -> Result<(), HostFault> {
        self.phase += 1;
        if self.phase == RVUC_STEPS_PER_INST as u8 {
            self.phase = 0;
            self.step_inst(mem, false)?;
        }
        Ok(())
    }

    /// Execute one whole instruction. `flat` selects the untimed memory
    /// path (used by the functional reference).
    pub fn step_inst(&mut self, mem: &mut MemorySystem, flat: bool) -> Result<(), HostFault> {
        if self.insts >= RVUC_WATCHDOG {
            return Err(HostFault::Watchdog(self.insts));
        }
        self.insts += 1;

        let fault = |msg: String| HostFault::RvucFault(msg);
        let pc = self.pc;
        if pc % 4 != 0 || pc as usize + 4 > self.local.len() {
            return Err(fault(format!("fetch outside local memory at {pc:#x}")));
        }
        let raw = u32::from_le_bytes(self.local[pc as usize..pc as usize + 4].try_into().unwrap());
        if raw & 3 != 3 {
            return Err(fault(format!("compressed parcel {raw:#010x} at {pc:#x}")));
        }
        let d = decode32(raw)
            .map_err(|_| fault(format!("illegal encoding {raw:#010x} at {pc:#x}")))?;

        let rs1 = self.gpr[d.rs1 as usize];
        let rs2 = self.gpr[d.rs2 as usize];
        let mut next_pc = pc.wrapping_add(4);
        match d.class {
            InstClass::Alu => self.set_gpr(d.rd, exec::alu(d.funct, rs1, rs2)),
            InstClass::AluImm => self.set_gpr(d.rd, exec::alu(d.funct, rs1, d.imm as u32)),
            InstClass::Lui => self.set_gpr(d.rd, d.imm as u32),
            InstClass::Auipc => self.set_gpr(d.rd, pc.wrapping_add(d.imm as u32)),
            InstClass::Jal => {
                self.set_gpr(d.rd, next_pc);
                next_pc = pc.wrapping_add(d.imm as u32);
            }
            InstClass::Jalr => {
                self.set_gpr(d.rd, next_pc);
                next_pc = rs1.wrapping_add(d.imm as u32) & !1;
            }
            InstClass::Branch => {
                if exec::branch_taken(d.funct, rs1, rs2) {
                    next_pc = pc.wrapping_add(d.imm as u32);
                }
            }
            InstClass::Load => {
                let va = rs1.wrapping_add(d.imm as u32);
                let w = exec::mem_width(d.funct);
                if va % w != 0 {
                    return Err(fault(format!("misaligned load at {va:#x}")));
                }
                let v = if flat {
                    mem.read_flat(va, w)
                } else {
                    mem.read(va, w).map(|(v, _)| v)
                }
                .map_err(|e| fault(format!("load from unmapped {:#x}", e.pa)))?;
                self.set_gpr(d.rd, exec::load_extend(d.funct, v));
            }
            InstClass::Store => {
                let va = rs1.wrapping_add(d.imm as u32);
                let w = exec::mem_width(d.funct);
                if va % w != 0 {
                    return Err(fault(format!("misaligned store at {va:#x}")));
                }
                if flat {
                    mem.write_flat(va, w, rs2)
                } else {
                    mem.write(va, w, rs2).map(|_| ())
                }
                .map_err(|e| fault(format!("store to unmapped {:#x}", e.pa)))?;
            }
            InstClass::Fence => {}
            _ => {
                return Err(fault(format!(
                    "unsupported instruction class {:?} ({raw:#010x}) at {pc:#x}",
                    d.class
                )));
            }
        }
        self.pc = next_pc;
        Ok(())
    }
}
