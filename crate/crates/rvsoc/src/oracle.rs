//! Functional reference interpreter. Executes one instruction at a time
//! against flat (uncached, untimed) memory, walking the page tables on
//! every access with no TLB. Architecturally it must match the multi-cycle
//! core exactly; the lockstep runner compares the two retirement streams.

use crate::arch::{ArchState, PrivMode, TrapCause, TrapReturn, TRACED_CSRS};
use crate::error::{HostFault, StepFault};
use crate::exec;
use crate::isa::{decode32, expand_compressed, InstClass, ParcelLen};
use crate::isa::{parcel_length, Funct};
use crate::mem::MemorySystem;
use crate::mmu::{AccessKind, Mmu, Satp, StatusBits};
use crate::rvuc::Rvuc;

/// One data-memory access performed by a retired instruction (page-walk
/// traffic is not included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemOp {
    pub store: bool,
    pub va: u32,
    pub pa: u32,
    pub width: u8,
    /// Raw (unextended) value read or written.
    pub value: u32,
}

/// Everything architecturally observable about one retirement slot:
/// either an executed instruction or a trap (exception or interrupt).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetireRecord {
    pub pc: u32,
    /// The fetched encoding: 16-bit parcel zero-extended for compressed
    /// instructions, zero for interrupts taken before fetch.
    pub raw: u32,
    /// Privilege mode the slot started in.
    pub mode: PrivMode,
    pub gpr_write: Option<(u8, u32)>,
    pub trap: Option<TrapCause>,
    /// Traced CSRs whose value changed, in canonical order.
    pub csr_writes: Vec<(u16, u32)>,
    pub mem_ops: Vec<MemOp>,
}

use StepFault::Guest;

/// Execute one retirement slot.
pub fn oracle_step(
    st: &mut ArchState,
    mem: &mut MemorySystem,
    mmu: &mut Mmu,
    rvuc: &mut Rvuc,
) -> Result<RetireRecord, HostFault> {
    st.mtimecmp = mem.devices.mtimecmp;
    st.update_mtip();
    let csr_before = st.traced_csr_snapshot();
    let mut rec = RetireRecord {
        pc: st.pc,
        raw: 0,
        mode: st.mode,
        gpr_write: None,
        trap: None,
        csr_writes: Vec::new(),
        mem_ops: Vec::new(),
    };

    if let Some(intr) = st.pending_interrupt() {
        rec.trap = Some(intr);
        st.take_trap(intr);
    } else {
        match execute(st, mem, mmu, &mut rec) {
            Ok(()) => {}
            Err(Guest(cause)) => {
                rec.trap = Some(cause);
                rec.gpr_write = None;
                rec.mem_ops.clear();
                st.take_trap(cause);
            }
            Err(StepFault::Host(f)) => return Err(f),
        }
    }

    if let Some(e) = mem.devices.host_error.take() {
        return Err(HostFault::DeviceProtocol(e));
    }
    // A store that rang the doorbell: run the whole request to completion
    // before this slot retires, mirroring the stall in the timing core.
    if mem.devices.doorbell.busy {
        rvuc.begin_request();
        while mem.devices.doorbell.busy {
            rvuc.step_inst(mem, true)?;
        }
        if let Some(e) = mem.devices.host_error.take() {
            return Err(HostFault::DeviceProtocol(e));
        }
    }

    if rec.trap.is_none() {
        st.instret += 1;
    }
    st.mtime += 1;
    mem.devices.mtime = st.mtime;
    st.mtimecmp = mem.devices.mtimecmp;
    st.update_mtip();
    let csr_after = st.traced_csr_snapshot();
    for (i, &addr) in TRACED_CSRS.iter().enumerate() {
        if csr_after[i] != csr_before[i] {
            rec.csr_writes.push((addr, csr_after[i]));
        }
    }
    Ok(rec)
}

/// Fetch, decode and execute at the current pc. On a guest trap the caller
/// discards the partial record; architectural state is only modified once
/// no trap can occur (CSR read-modify-write keeps the read before the
/// write check for the same reason).
fn execute(
    st: &mut ArchState,
    mem: &mut MemorySystem,
    mmu: &mut Mmu,
    rec: &mut RetireRecord,
) -> Result<(), StepFault> {
    let pc = st.pc;
    let mode = st.mode;
    let satp = Satp::from_bits(st.csr.satp);
    let status = StatusBits::from_mstatus(st.csr.mstatus);
    let translating = satp.enabled && mode != PrivMode::Machine;

    let fetch_fault = |pa: u32, va: u32| -> StepFault {
        if translating {
            Guest(TrapCause::exception(TrapCause::INST_ACCESS, va))
        } else {
            StepFault::Host(HostFault::UnmappedFetch { pc: pa })
        }
    };

    let pa_lo = mmu.translate(pc, AccessKind::Execute, mode, satp, status, mem, false)?;
    let window = mem
        .fetch_window_flat(pa_lo)
        .map_err(|f| fetch_fault(f.pa, pc))?;
    let lo = window as u16;

    let d = match parcel_length(lo) {
        ParcelLen::Half => {
            rec.raw = lo as u32;
            let word = expand_compressed(lo)
                .map_err(|_| Guest(TrapCause::illegal(lo as u32)))?;
            let mut d = decode32(word).map_err(|_| Guest(TrapCause::illegal(lo as u32)))?;
            d.was_compressed = true;
            d
        }
        ParcelLen::Word => {
            // The upper parcel may live on a different page; the lower
            // translation says nothing about it.
            let hi = if translating && pc & 0xfff == 0xffe {
                let pa_hi =
                    mmu.translate(pc + 2, AccessKind::Execute, mode, satp, status, mem, false)?;
                mem.fetch_window_flat(pa_hi).map(|w| w & 0xffff).unwrap_or(0)
            } else {
                window >> 16
            };
            let word = hi << 16 | lo as u32;
            rec.raw = word;
            decode32(word).map_err(|_| Guest(TrapCause::illegal(word)))?
        }
    };

    let rs1 = st.gpr(d.rs1);
    let rs2 = st.gpr(d.rs2);
    let mut next_pc = pc.wrapping_add(d.len());
    let mut gpr_write: Option<(u8, u32)> = None;
    let mut wr = |rd: u8, v: u32| {
        if rd != 0 {
            gpr_write = Some((rd, v));
        }
    };

    let xlate = |mmu: &mut Mmu, mem: &mut MemorySystem, va: u32, kind: AccessKind| {
        mmu.translate(va, kind, mode, satp, status, mem, false)
    };
    let jump_target = |t: u32| -> Result<u32, StepFault> {
        if t & 1 != 0 {
            Err(Guest(TrapCause::exception(TrapCause::INST_MISALIGNED, t)))
        } else {
            Ok(t)
        }
    };

    match d.class {
        InstClass::Alu => wr(d.rd, exec::alu(d.funct, rs1, rs2)),
        InstClass::AluImm => wr(d.rd, exec::alu(d.funct, rs1, d.imm as u32)),
        InstClass::MulDiv => wr(d.rd, exec::muldiv(d.funct, rs1, rs2)),
        InstClass::Lui => wr(d.rd, d.imm as u32),
        InstClass::Auipc => wr(d.rd, pc.wrapping_add(d.imm as u32)),
        InstClass::Jal => {
            let t = jump_target(pc.wrapping_add(d.imm as u32))?;
            wr(d.rd, next_pc);
            next_pc = t;
        }
        InstClass::Jalr => {
            let t = jump_target(rs1.wrapping_add(d.imm as u32) & !1)?;
            wr(d.rd, next_pc);
            next_pc = t;
        }
        InstClass::Branch => {
            if exec::branch_taken(d.funct, rs1, rs2) {
                next_pc = jump_target(pc.wrapping_add(d.imm as u32))?;
            }
        }
        InstClass::Load => {
            let va = rs1.wrapping_add(d.imm as u32);
            let w = exec::mem_width(d.funct);
            if va % w != 0 {
                return Err(Guest(TrapCause::exception(TrapCause::LOAD_MISALIGNED, va)));
            }
            let pa = xlate(mmu, mem, va, AccessKind::Read)?;
            let v = mem
                .read_flat(pa, w)
                .map_err(|_| Guest(TrapCause::exception(TrapCause::LOAD_ACCESS, va)))?;
            rec.mem_ops.push(MemOp {
                store: false,
                va,
                pa,
                width: w as u8,
                value: v,
            });
            wr(d.rd, exec::load_extend(d.funct, v));
        }
        InstClass::Store => {
            let va = rs1.wrapping_add(d.imm as u32);
            let w = exec::mem_width(d.funct);
            if va % w != 0 {
                return Err(Guest(TrapCause::exception(TrapCause::STORE_MISALIGNED, va)));
            }
            let pa = xlate(mmu, mem, va, AccessKind::Write)?;
            let value = if w == 4 { rs2 } else { rs2 & ((1 << (8 * w)) - 1) };
            mem.write_flat(pa, w, rs2)
                .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
            rec.mem_ops.push(MemOp {
                store: true,
                va,
                pa,
                width: w as u8,
                value,
            });
            // Any store kills the reservation.
            st.reservation.valid = false;
        }
        InstClass::LrSc => {
            let va = rs1;
            if va % 4 != 0 {
                return Err(Guest(TrapCause::exception(TrapCause::STORE_MISALIGNED, va)));
            }
            match d.funct {
                Funct::Lr => {
                    let pa = xlate(mmu, mem, va, AccessKind::Read)?;
                    let v = mem
                        .read_flat(pa, 4)
                        .map_err(|_| Guest(TrapCause::exception(TrapCause::LOAD_ACCESS, va)))?;
                    rec.mem_ops.push(MemOp {
                        store: false,
                        va,
                        pa,
                        width: 4,
                        value: v,
                    });
                    st.reservation.valid = true;
                    st.reservation.addr = pa;
                    wr(d.rd, v);
                }
                _ => {
                    let pa = xlate(mmu, mem, va, AccessKind::Write)?;
                    let hit = st.reservation.valid && st.reservation.addr == pa;
                    st.reservation.valid = false;
                    if hit {
                        mem.write_flat(pa, 4, rs2).map_err(|_| {
                            Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va))
                        })?;
                        rec.mem_ops.push(MemOp {
                            store: true,
                            va,
                            pa,
                            width: 4,
                            value: rs2,
                        });
                        wr(d.rd, 0);
                    } else {
                        wr(d.rd, 1);
                    }
                }
            }
        }
        InstClass::Amo => {
            let va = rs1;
            if va % 4 != 0 {
                return Err(Guest(TrapCause::exception(TrapCause::STORE_MISALIGNED, va)));
            }
            let pa = xlate(mmu, mem, va, AccessKind::Write)?;
            let old = mem
                .read_flat(pa, 4)
                .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
            let new = exec::amo(d.funct, old, rs2);
            mem.write_flat(pa, 4, new)
                .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
            rec.mem_ops.push(MemOp {
                store: false,
                va,
                pa,
                width: 4,
                value: old,
            });
            rec.mem_ops.push(MemOp {
                store: true,
                va,
                pa,
                width: 4,
                value: new,
            });
            st.reservation.valid = false;
            wr(d.rd, old);
        }
        InstClass::Csr => {
            let addr = d.imm as u16;
            let src = match d.funct {
                Funct::Csrrw | Funct::Csrrs | Funct::Csrrc => rs1,
                _ => d.rs1 as u32, // uimm rides in the rs1 field
            };
            let writes = match d.funct {
                Funct::Csrrw | Funct::Csrrwi => true,
                _ => d.rs1 != 0,
            };
            let old = st
                .csr_read(addr)
                .map_err(|_| Guest(TrapCause::illegal(d.raw)))?;
            if writes {
                let new = match d.funct {
                    Funct::Csrrw | Funct::Csrrwi => src,
                    Funct::Csrrs | Funct::Csrrsi => old | src,
                    _ => old & !src,
                };
                st.csr_write(addr, new)
                    .map_err(|_| Guest(TrapCause::illegal(d.raw)))?;
            }
            wr(d.rd, old);
        }
        InstClass::System => match d.funct {
            Funct::Ecall => {
                return Err(Guest(TrapCause::exception(
                    TrapCause::ECALL_U + mode as u32,
                    0,
                )));
            }
            Funct::Ebreak => {
                return Err(Guest(TrapCause::exception(TrapCause::BREAKPOINT, pc)));
            }
            Funct::Mret => {
                st.trap_return(TrapReturn::Mret)
                    .map_err(|_| Guest(TrapCause::illegal(d.raw)))?;
                next_pc = st.pc;
            }
            Funct::Sret => {
                st.trap_return(TrapReturn::Sret)
                    .map_err(|_| Guest(TrapCause::illegal(d.raw)))?;
                next_pc = st.pc;
            }
            Funct::Wfi => {}
            Funct::SfenceVma => {
                if mode < PrivMode::Supervisor {
                    return Err(Guest(TrapCause::illegal(d.raw)));
                }
                mmu.tlb_flush();
            }
            _ => return Err(Guest(TrapCause::illegal(d.raw))),
        },
        InstClass::Fence => {}
    }

    if let Some((rd, v)) = gpr_write {
        st.set_gpr(rd, v);
        rec.gpr_write = Some((rd, v));
    }
    st.pc = next_pc;
    Ok(())
}
