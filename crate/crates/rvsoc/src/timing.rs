//! The multi-cycle in-order core. Each instruction walks a twelve-step
//! path, one cycle per visited step, with three variable-latency points:
//! IF and LD/SD absorb cache and page-walk latency, and EX1 holds for the
//! iterative divider. The minimum path (ALU-type) is eight cycles:
//!
//!   INI -> IF -> CVT -> ID -> OF -> EX1 -> [LD -> EX2 -> SD] -> WB -> COM -> FIN
//!
//! INI is the reset state and consumes no cycle. Loads visit LD (9 total),
//! stores visit LD and SD but skip WB (9), SC adds WB after SD (10), AMOs
//! visit LD, EX2, SD and WB (11). DIV/REM occupy EX1 for 32 cycles (39
//! total). A pending trap or interrupt short-circuits to COM from any
//! step. While RVuc services a doorbell the core stalls and those cycles
//! are excluded from the core's cycle count.
//!
//! Architecturally this core must be indistinguishable from the
//! functional reference in `oracle`; only the cycle accounting and the
//! cache/TLB/fetch-buffer traffic differ.

use crate::arch::{ArchState, PrivMode, TrapCause, TrapReturn, TRACED_CSRS};
use crate::error::{HostFault, StepFault};
use crate::exec;
use crate::isa::{decode32, expand_compressed, parcel_length, Funct, InstClass, ParcelLen};
use crate::mem::MemorySystem;
use crate::mmu::{AccessKind, Mmu, Satp, StatusBits};
use crate::oracle::{MemOp, RetireRecord};
use crate::rvuc::Rvuc;

use StepFault::Guest;

/// The core state machine's steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum CoreStep {
    Ini = 0,
    If = 1,
    Cvt = 2,
    Id = 3,
    Of = 4,
    Ex1 = 5,
    Ld = 6,
    Ex2 = 7,
    Sd = 8,
    Wb = 9,
    Com = 10,
    Fin = 11,
}

pub const STEP_COUNT: usize = 12;

/// Cycles the divider occupies EX1.
pub const DIV_EX1_CYCLES: u64 = 32;

/// Core-side cycle bookkeeping. `cycles` counts only cycles where the
/// main core advanced; `excluded` counts stall cycles spent waiting for
/// RVuc, matching how the reference hardware reports its numbers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CycleCounters {
    pub cycles: u64,
    /// Retirement slots completed (instructions plus trap slots).
    pub slots: u64,
    pub excluded: u64,
    pub step_cycles: [u64; STEP_COUNT],
}

/// The timing core. All architectural state lives in [`ArchState`]; this
/// struct only owns the cycle counters, so a retirement boundary is a
/// complete description of the machine.
#[derive(Debug, Clone, Default)]
pub struct TimingCore {
    pub counters: CycleCounters,
}

impl TimingCore {
    /// Run one retirement slot to completion and account its cycles.
    pub fn step(
        &mut self,
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
            // Recognized in IF before any fetch; drain straight to COM.
            self.charge(CoreStep::If, 1);
            rec.trap = Some(intr);
            st.take_trap(intr);
        } else {
            match self.execute(st, mem, mmu, &mut rec) {
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
        // Doorbell stall: the core freezes while RVuc runs; its cycles are
        // tracked but excluded from the core count.
        if mem.devices.doorbell.busy {
            rvuc.begin_request();
            while mem.devices.doorbell.busy {
                rvuc.step_cycle(mem)?;
                self.counters.excluded += 1;
            }
            if let Some(e) = mem.devices.host_error.take() {
                return Err(HostFault::DeviceProtocol(e));
            }
        }

        self.charge(CoreStep::Com, 1);
        self.charge(CoreStep::Fin, 1);
        self.counters.slots += 1;

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

    fn charge(&mut self, step: CoreStep, cycles: u64) {
        self.counters.cycles += cycles;
        self.counters.step_cycles[step as usize] += cycles;
    }

    /// Translate through the TLB, charging the walk's PTE reads to `step`.
    fn translate(
        &mut self,
        step: CoreStep,
        mmu: &mut Mmu,
        mem: &mut MemorySystem,
        va: u32,
        kind: AccessKind,
        mode: PrivMode,
        satp: Satp,
        status: StatusBits,
    ) -> Result<u32, TrapCause> {
        let reads_before = mmu.stats.walk_reads;
        let r = mmu.translate(va, kind, mode, satp, status, mem, true);
        self.charge(step, mmu.stats.walk_reads - reads_before);
        r
    }

    fn execute(
        &mut self,
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

        // --- IF: translate the pc and pull a 4-byte window.
        let pa_lo = self
            .translate(CoreStep::If, mmu, mem, pc, AccessKind::Execute, mode, satp, status)
            .map_err(|c| {
                self.charge(CoreStep::If, 1);
                Guest(c)
            })?;
        let window = match mem.fetch_window(pa_lo) {
            Ok((w, _accesses, cycles)) => {
                self.charge(CoreStep::If, cycles);
                w
            }
            Err(f) => {
                self.charge(CoreStep::If, 1);
                return if translating {
                    Err(Guest(TrapCause::exception(TrapCause::INST_ACCESS, pc)))
                } else {
                    Err(StepFault::Host(HostFault::UnmappedFetch { pc: f.pa }))
                };
            }
        };
        let lo = window as u16;

        // --- CVT: compressed conversion (visited by every instruction).
        self.charge(CoreStep::Cvt, 1);
        let d = match parcel_length(lo) {
            ParcelLen::Half => {
                rec.raw = lo as u32;
                let word = expand_compressed(lo).map_err(|_| {
                    self.charge(CoreStep::Id, 1);
                    Guest(TrapCause::illegal(lo as u32))
                })?;
                let mut d = decode32(word).map_err(|_| {
                    self.charge(CoreStep::Id, 1);
                    Guest(TrapCause::illegal(lo as u32))
                })?;
                d.was_compressed = true;
                d
            }
            ParcelLen::Word => {
                let hi = if translating && pc & 0xfff == 0xffe {
                    // The upper parcel lives on the next virtual page.
                    let pa_hi = self
                        .translate(
                            CoreStep::If,
                            mmu,
                            mem,
                            pc + 2,
                            AccessKind::Execute,
                            mode,
                            satp,
                            status,
                        )
                        .map_err(Guest)?;
                    match mem.read(pa_hi, 2) {
                        Ok((v, cycles)) => {
                            self.charge(CoreStep::If, cycles);
                            v
                        }
                        Err(_) => 0,
                    }
                } else {
                    window >> 16
                };
                let word = hi << 16 | lo as u32;
                rec.raw = word;
                // --- ID happens next; charge it on the illegal path too.
                decode32(word).map_err(|_| {
                    self.charge(CoreStep::Id, 1);
                    Guest(TrapCause::illegal(word))
                })?
            }
        };

        // --- ID and OF.
        self.charge(CoreStep::Id, 1);
        self.charge(CoreStep::Of, 1);
        let rs1 = st.gpr(d.rs1);
        let rs2 = st.gpr(d.rs2);

        // --- EX1: ALU/address generation; the divider iterates here.
        let ex1 = match (d.class, d.funct) {
            (InstClass::MulDiv, Funct::Div | Funct::Divu | Funct::Rem | Funct::Remu) => {
                DIV_EX1_CYCLES
            }
            _ => 1,
        };
        self.charge(CoreStep::Ex1, ex1);

        let mut next_pc = pc.wrapping_add(d.len());
        let mut gpr_write: Option<(u8, u32)> = None;
        let mut writeback = true;
        let jump_target = |t: u32| -> Result<u32, StepFault> {
            if t & 1 != 0 {
                Err(Guest(TrapCause::exception(TrapCause::INST_MISALIGNED, t)))
            } else {
                Ok(t)
            }
        };

        match d.class {
            InstClass::Alu => gpr_write = Some((d.rd, exec::alu(d.funct, rs1, rs2))),
            InstClass::AluImm => {
                gpr_write = Some((d.rd, exec::alu(d.funct, rs1, d.imm as u32)));
            }
            InstClass::MulDiv => gpr_write = Some((d.rd, exec::muldiv(d.funct, rs1, rs2))),
            InstClass::Lui => gpr_write = Some((d.rd, d.imm as u32)),
            InstClass::Auipc => gpr_write = Some((d.rd, pc.wrapping_add(d.imm as u32))),
            InstClass::Jal => {
                let t = jump_target(pc.wrapping_add(d.imm as u32))?;
                gpr_write = Some((d.rd, next_pc));
                next_pc = t;
            }
            InstClass::Jalr => {
                let t = jump_target(rs1.wrapping_add(d.imm as u32) & !1)?;
                gpr_write = Some((d.rd, next_pc));
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
                let pa = self
                    .translate(CoreStep::Ld, mmu, mem, va, AccessKind::Read, mode, satp, status)
                    .map_err(Guest)?;
                let (v, cycles) = mem
                    .read(pa, w)
                    .map_err(|_| Guest(TrapCause::exception(TrapCause::LOAD_ACCESS, va)))?;
                self.charge(CoreStep::Ld, cycles);
                rec.mem_ops.push(MemOp {
                    store: false,
                    va,
                    pa,
                    width: w as u8,
                    value: v,
                });
                gpr_write = Some((d.rd, exec::load_extend(d.funct, v)));
            }
            InstClass::Store => {
                let va = rs1.wrapping_add(d.imm as u32);
                let w = exec::mem_width(d.funct);
                if va % w != 0 {
                    return Err(Guest(TrapCause::exception(
                        TrapCause::STORE_MISALIGNED,
                        va,
                    )));
                }
                // LD doubles as the address/translate step for stores.
                self.charge(CoreStep::Ld, 1);
                let pa = self
                    .translate(CoreStep::Ld, mmu, mem, va, AccessKind::Write, mode, satp, status)
                    .map_err(Guest)?;
                let cycles = mem
                    .write(pa, w, rs2)
                    .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
                self.charge(CoreStep::Sd, cycles);
                rec.mem_ops.push(MemOp {
                    store: true,
                    va,
                    pa,
                    width: w as u8,
                    value: if w == 4 { rs2 } else { rs2 & ((1 << (8 * w)) - 1) },
                });
                st.reservation.valid = false;
                writeback = false;
            }
            InstClass::LrSc => {
                let va = rs1;
                if va % 4 != 0 {
                    return Err(Guest(TrapCause::exception(
                        TrapCause::STORE_MISALIGNED,
                        va,
                    )));
                }
                match d.funct {
                    Funct::Lr => {
                        let pa = self
                            .translate(
                                CoreStep::Ld,
                                mmu,
                                mem,
                                va,
                                AccessKind::Read,
                                mode,
                                satp,
                                status,
                            )
                            .map_err(Guest)?;
                        let (v, cycles) = mem.read(pa, 4).map_err(|_| {
                            Guest(TrapCause::exception(TrapCause::LOAD_ACCESS, va))
                        })?;
                        self.charge(CoreStep::Ld, cycles);
                        rec.mem_ops.push(MemOp {
                            store: false,
                            va,
                            pa,
                            width: 4,
                            value: v,
                        });
                        st.reservation.valid = true;
                        st.reservation.addr = pa;
                        gpr_write = Some((d.rd, v));
                    }
                    _ => {
                        self.charge(CoreStep::Ld, 1);
                        let pa = self
                            .translate(
                                CoreStep::Ld,
                                mmu,
                                mem,
                                va,
                                AccessKind::Write,
                                mode,
                                satp,
                                status,
                            )
                            .map_err(Guest)?;
                        let hit = st.reservation.valid && st.reservation.addr == pa;
                        st.reservation.valid = false;
                        if hit {
                            let cycles = mem.write(pa, 4, rs2).map_err(|_| {
                                Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va))
                            })?;
                            self.charge(CoreStep::Sd, cycles);
                            rec.mem_ops.push(MemOp {
                                store: true,
                                va,
                                pa,
                                width: 4,
                                value: rs2,
                            });
                            gpr_write = Some((d.rd, 0));
                        } else {
                            self.charge(CoreStep::Sd, 1);
                            gpr_write = Some((d.rd, 1));
                        }
                    }
                }
            }
            InstClass::Amo => {
                let va = rs1;
                if va % 4 != 0 {
                    return Err(Guest(TrapCause::exception(
                        TrapCause::STORE_MISALIGNED,
                        va,
                    )));
                }
                let pa = self
                    .translate(CoreStep::Ld, mmu, mem, va, AccessKind::Write, mode, satp, status)
                    .map_err(Guest)?;
                let (old, cycles) = mem
                    .read(pa, 4)
                    .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
                self.charge(CoreStep::Ld, cycles);
                self.charge(CoreStep::Ex2, 1);
                let new = exec::amo(d.funct, old, rs2);
                let cycles = mem
                    .write(pa, 4, new)
                    .map_err(|_| Guest(TrapCause::exception(TrapCause::STORE_ACCESS, va)))?;
                self.charge(CoreStep::Sd, cycles);
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
                gpr_write = Some((d.rd, old));
            }
            InstClass::Csr => {
                let addr = d.imm as u16;
                let src = match d.funct {
                    Funct::Csrrw | Funct::Csrrs | Funct::Csrrc => rs1,
                    _ => d.rs1 as u32,
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
                gpr_write = Some((d.rd, old));
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

        // --- WB (skipped by stores), then COM/FIN charged by the caller.
        if writeback {
            self.charge(CoreStep::Wb, 1);
        }
        if let Some((rd, v)) = gpr_write {
            if rd != 0 {
                st.set_gpr(rd, v);
                rec.gpr_write = Some((rd, v));
            }
        }
        st.pc = next_pc;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firmware::reference_firmware;
    use crate::isa::encode;
    use crate::mem::{MemConfig, RAM_BASE};

    struct Rig {
        st: ArchState,
        mem: MemorySystem,
        mmu: Mmu,
        rvuc: Rvuc,
        core: TimingCore,
    }

    impl Rig {
        fn new(words: &[u32]) -> Rig {
            Self::with_cfg(words, MemConfig {
                ram_size: 1 << 20,
                disk_size: 1 << 16,
                ..MemConfig::default()
            })
        }
        fn with_cfg(words: &[u32], cfg: MemConfig) -> Rig {
            let mut mem = MemorySystem::new(cfg);
            for (i, w) in words.iter().enumerate() {
                mem.write_flat(RAM_BASE + 4 * i as u32, 4, *w).unwrap();
            }
            Rig {
                st: ArchState::new(RAM_BASE),
                mem,
                mmu: Mmu::default(),
                rvuc: Rvuc::new(&reference_firmware()).unwrap(),
                core: TimingCore::default(),
            }
        }
        fn step(&mut self) -> RetireRecord {
            self.core
                .step(&mut self.st, &mut self.mem, &mut self.mmu, &mut self.rvuc)
                .unwrap()
        }
    }

    fn zero_penalty() -> MemConfig {
        MemConfig {
            ram_size: 1 << 20,
            disk_size: 1 << 16,
            miss_penalty: 0,
            ..MemConfig::default()
        }
    }

    #[test]
    fn alu_takes_eight_cycles_warm() {
        let mut r = Rig::with_cfg(
            &[encode::addi(1, 0, 1), encode::addi(1, 1, 1)],
            zero_penalty(),
        );
        r.step();
        r.step();
        assert_eq!(r.core.counters.cycles, 16);
    }

    #[test]
    fn load_takes_nine_store_takes_nine() {
        let mut prog = encode::li(1, RAM_BASE + 0x100); // lui+addi = 16 cycles
        prog.push(encode::lw(2, 1, 0));
        prog.push(encode::sw(1, 2, 0));
        let mut r = Rig::with_cfg(&prog, zero_penalty());
        for _ in 0..2 {
            r.step();
        }
        let before = r.core.counters.cycles;
        r.step();
        assert_eq!(r.core.counters.cycles - before, 9, "load");
        let before = r.core.counters.cycles;
        r.step();
        assert_eq!(r.core.counters.cycles - before, 9, "store");
    }

    #[test]
    fn sc_takes_ten_amo_takes_eleven_div_takes_thirty_nine() {
        let mut prog = encode::li(1, RAM_BASE + 0x100);
        prog.push(encode::lr_w(2, 1)); // 9
        prog.push(encode::sc_w(3, 1, 2)); // 10
        prog.push(encode::amoadd_w(4, 1, 2)); // 11
        prog.push(encode::div(5, 2, 2)); // 39
        let mut r = Rig::with_cfg(&prog, zero_penalty());
        for _ in 0..2 {
            r.step();
        }
        for (expect, what) in [(9, "lr"), (10, "sc"), (11, "amo"), (39, "div")] {
            let before = r.core.counters.cycles;
            r.step();
            assert_eq!(r.core.counters.cycles - before, expect, "{what}");
        }
        assert_eq!(r.st.gpr(3), 0, "sc succeeded");
    }

    #[test]
    fn cache_miss_adds_the_penalty_to_if() {
        let mut r = Rig::new(&[encode::addi(1, 0, 1)]);
        r.step();
        // Cold fetch: one line fill at the default penalty.
        assert_eq!(r.core.counters.cycles, 8 + r.mem.cfg.miss_penalty);
        assert_eq!(
            r.core.counters.step_cycles[CoreStep::If as usize],
            1 + r.mem.cfg.miss_penalty
        );
    }

    #[test]
    fn rvuc_stall_cycles_are_excluded() {
        let mut prog = encode::li(1, crate::devices::CONSOLE_BASE);
        prog.extend(encode::li(2, b'Q' as u32));
        prog.push(encode::sw(1, 2, crate::devices::CON_DB_ARG0 as i32));
        prog.extend(encode::li(3, crate::devices::DB_CAUSE_CONSOLE_TX));
        prog.push(encode::sw(1, 3, crate::devices::CON_DB_REQ as i32));
        let mut r = Rig::with_cfg(&prog, zero_penalty());
        for _ in 0..prog.len() {
            r.step();
        }
        assert_eq!(r.mem.devices.console.tx_out, b"Q");
        // Firmware console path: 7 instructions at 4 cycles each.
        assert_eq!(r.core.counters.excluded, 7 * 4);
        // The two stores cost 9 core cycles each regardless of the stall.
        let stores = 2 * 9;
        let alus = (prog.len() as u64 - 2) * 8;
        assert_eq!(r.core.counters.cycles, stores + alus);
    }

    #[test]
    fn trap_slot_is_shorter_than_a_retirement() {
        let mut r = Rig::with_cfg(&[encode::ecall()], zero_penalty());
        let rec = r.step();
        assert!(rec.trap.is_some());
        // IF,CVT,ID,OF,EX1,COM,FIN.
        assert_eq!(r.core.counters.cycles, 7);
    }
}
