//! Architectural machine state: GPRs, PC, the CSR file, privilege mode and
//! the LR/SC reservation, plus trap entry and trap return.

use crate::isa::decode::IllegalInstruction;

/// Privilege modes, Machine highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PrivMode {
    User = 0,
    Supervisor = 1,
    Machine = 3,
}

impl PrivMode {
    pub fn from_bits(v: u32) -> PrivMode {
        match v & 3 {
            0 => PrivMode::User,
            1 => PrivMode::Supervisor,
            _ => PrivMode::Machine,
        }
    }
    pub fn letter(self) -> char {
        match self {
            PrivMode::User => 'U',
            PrivMode::Supervisor => 'S',
            PrivMode::Machine => 'M',
        }
    }
}

/// Exception and interrupt causes, numbered per the privileged architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrapCause {
    pub is_interrupt: bool,
    pub code: u32,
    pub tval: u32,
}

impl TrapCause {
    pub const INST_MISALIGNED: u32 = 0;
    pub const INST_ACCESS: u32 = 1;
    pub const ILLEGAL: u32 = 2;
    pub const BREAKPOINT: u32 = 3;
    pub const LOAD_MISALIGNED: u32 = 4;
    pub const LOAD_ACCESS: u32 = 5;
    pub const STORE_MISALIGNED: u32 = 6;
    pub const STORE_ACCESS: u32 = 7;
    pub const ECALL_U: u32 = 8;
    pub const ECALL_S: u32 = 9;
    pub const ECALL_M: u32 = 11;
    pub const INST_PAGE_FAULT: u32 = 12;
    pub const LOAD_PAGE_FAULT: u32 = 13;
    pub const STORE_PAGE_FAULT: u32 = 15;
    pub const INT_M_TIMER: u32 = 7;

    pub fn exception(code: u32, tval: u32) -> TrapCause {
        TrapCause {
            is_interrupt: false,
            code,
            tval,
        }
    }
    pub fn interrupt(code: u32) -> TrapCause {
        TrapCause {
            is_interrupt: true,
            code,
            tval: 0,
        }
    }
    pub fn illegal(raw: u32) -> TrapCause {
        TrapCause::exception(TrapCause::ILLEGAL, raw)
    }
    /// The xcause register encoding: interrupt bit in the MSB.
    pub fn cause_bits(&self) -> u32 {
        if self.is_interrupt {
            0x8000_0000 | self.code
        } else {
            self.code
        }
    }
}

// CSR addresses.
pub mod csr {
    pub const SSTATUS: u16 = 0x100;
    pub const STVEC: u16 = 0x105;
    pub const SSCRATCH: u16 = 0x140;
    pub const SEPC: u16 = 0x141;
    pub const SCAUSE: u16 = 0x142;
    pub const STVAL: u16 = 0x143;
    pub const SATP: u16 = 0x180;
    pub const MSTATUS: u16 = 0x300;
    pub const MISA: u16 = 0x301;
    pub const MEDELEG: u16 = 0x302;
    pub const MIDELEG: u16 = 0x303;
    pub const MIE: u16 = 0x304;
    pub const MTVEC: u16 = 0x305;
    pub const MSCRATCH: u16 = 0x340;
    pub const MEPC: u16 = 0x341;
    pub const MCAUSE: u16 = 0x342;
    pub const MTVAL: u16 = 0x343;
    pub const MIP: u16 = 0x344;
    pub const CYCLE: u16 = 0xc00;
    pub const TIME: u16 = 0xc01;
    pub const INSTRET: u16 = 0xc02;
    pub const CYCLEH: u16 = 0xc80;
    pub const TIMEH: u16 = 0xc81;
    pub const INSTRETH: u16 = 0xc82;
    pub const MHARTID: u16 = 0xf14;
}

// mstatus bit positions.
pub mod mstatus {
    pub const SIE: u32 = 1 << 1;
    pub const MIE: u32 = 1 << 3;
    pub const SPIE: u32 = 1 << 5;
    pub const MPIE: u32 = 1 << 7;
    pub const SPP: u32 = 1 << 8;
    pub const MPP_SHIFT: u32 = 11;
    pub const MPP_MASK: u32 = 3 << MPP_SHIFT;
    pub const SUM: u32 = 1 << 18;
    pub const MXR: u32 = 1 << 19;
    /// Bits writable through mstatus.
    pub const WRITABLE: u32 = SIE | MIE | SPIE | MPIE | SPP | MPP_MASK | SUM | MXR;
    /// The sstatus view of mstatus.
    pub const SSTATUS_VIEW: u32 = SIE | SPIE | SPP | SUM | MXR;
}

/// misa: RV32 (MXL=1) with I, M, A and C set.
pub const MISA_VALUE: u32 = (1 << 30) | (1 << 8) | (1 << 12) | (1 << 0) | (1 << 2);

/// Delegatable exception causes: everything implemented except ECALL-from-M.
const MEDELEG_MASK: u32 = 0b1011_0011_1111_1111;
/// Timer-only interrupt wiring; no interrupt delegation.
const MIDELEG_MASK: u32 = 0;
/// Machine timer interrupt enable is the only writable mie bit.
const MIE_MASK: u32 = 1 << 7;

/// LR/SC reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Reservation {
    pub valid: bool,
    pub addr: u32,
}

/// The implemented CSR file. Unlisted addresses trap as illegal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsrFile {
    pub mstatus: u32,
    pub mtvec: u32,
    pub mepc: u32,
    pub mcause: u32,
    pub mtval: u32,
    pub mie: u32,
    pub mip: u32,
    pub mscratch: u32,
    pub medeleg: u32,
    pub mideleg: u32,
    pub stvec: u32,
    pub sepc: u32,
    pub scause: u32,
    pub stval: u32,
    pub sscratch: u32,
    pub satp: u32,
}

/// CSRs watched by the retirement trace, in trace order.
pub const TRACED_CSRS: &[u16] = &[
    csr::SSTATUS,
    csr::STVEC,
    csr::SSCRATCH,
    csr::SEPC,
    csr::SCAUSE,
    csr::STVAL,
    csr::SATP,
    csr::MSTATUS,
    csr::MEDELEG,
    csr::MIDELEG,
    csr::MIE,
    csr::MTVEC,
    csr::MSCRATCH,
    csr::MEPC,
    csr::MCAUSE,
    csr::MTVAL,
    csr::MIP,
];

/// Complete architectural state of the main core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchState {
    pub pc: u32,
    gpr: [u32; 32],
    pub csr: CsrFile,
    pub mode: PrivMode,
    pub reservation: Reservation,
    /// Retired (non-trapping) instruction counter backing `instret`.
    pub instret: u64,
    /// Wall-clock substitute: advances once per retirement so that the
    /// cycle/time CSRs read identically in the timing core and the oracle.
    pub mtime: u64,
    pub mtimecmp: u64,
}

impl ArchState {
    pub fn new(reset_pc: u32) -> ArchState {
        ArchState {
            pc: reset_pc,
            gpr: [0; 32],
            csr: CsrFile::default(),
            mode: PrivMode::Machine,
            reservation: Reservation::default(),
            instret: 0,
            mtime: 0,
            mtimecmp: u64::MAX,
        }
    }

    pub fn gpr(&self, idx: u8) -> u32 {
        self.gpr[idx as usize]
    }

    /// x0 ignores writes.
    pub fn set_gpr(&mut self, idx: u8, value: u32) {
        if idx != 0 {
            self.gpr[idx as usize] = value;
        }
    }

    /// Whole register file, for checkpointing.
    pub fn gprs(&self) -> [u32; 32] {
        self.gpr
    }

    pub fn set_gprs(&mut self, g: [u32; 32]) {
        self.gpr = g;
        self.gpr[0] = 0;
    }

    fn csr_value(&self, addr: u16) -> Option<u32> {
        let c = &self.csr;
        Some(match addr {
            csr::SSTATUS => c.mstatus & mstatus::SSTATUS_VIEW,
            csr::STVEC => c.stvec,
            csr::SSCRATCH => c.sscratch,
            csr::SEPC => c.sepc,
            csr::SCAUSE => c.scause,
            csr::STVAL => c.stval,
            csr::SATP => c.satp,
            csr::MSTATUS => c.mstatus,
            csr::MISA => MISA_VALUE,
            csr::MEDELEG => c.medeleg,
            csr::MIDELEG => c.mideleg,
            csr::MIE => c.mie,
            csr::MTVEC => c.mtvec,
            csr::MSCRATCH => c.mscratch,
            csr::MEPC => c.mepc,
            csr::MCAUSE => c.mcause,
            csr::MTVAL => c.mtval,
            csr::MIP => c.mip,
            csr::CYCLE | csr::TIME => self.mtime as u32,
            csr::CYCLEH | csr::TIMEH => (self.mtime >> 32) as u32,
            csr::INSTRET => self.instret as u32,
            csr::INSTRETH => (self.instret >> 32) as u32,
            csr::MHARTID => 0,
            _ => return None,
        })
    }

    fn csr_min_priv(addr: u16) -> PrivMode {
        match (addr >> 8) & 3 {
            0 => PrivMode::User,
            1 | 2 => PrivMode::Supervisor,
            _ => PrivMode::Machine,
        }
    }

    fn csr_is_read_only(addr: u16) -> bool {
        (addr >> 10) & 3 == 3
    }

    /// Architecturally visible CSR read, with privilege checking.
    /// The user counters are hardwired readable from every mode.
    pub fn csr_read(&self, addr: u16) -> Result<u32, IllegalInstruction> {
        let value = self.csr_value(addr).ok_or(IllegalInstruction)?;
        let counter = matches!(
            addr,
            csr::CYCLE | csr::TIME | csr::INSTRET | csr::CYCLEH | csr::TIMEH | csr::INSTRETH
        );
        if !counter && self.mode < Self::csr_min_priv(addr) {
            return Err(IllegalInstruction);
        }
        Ok(value)
    }

    /// WARL-masked CSR write. misa writes are silently ignored.
    pub fn csr_write(&mut self, addr: u16, value: u32) -> Result<(), IllegalInstruction> {
        if self.csr_value(addr).is_none() {
            return Err(IllegalInstruction);
        }
        if self.mode < Self::csr_min_priv(addr) || Self::csr_is_read_only(addr) {
            return Err(IllegalInstruction);
        }
        let c = &mut self.csr;
        match addr {
            csr::SSTATUS => {
                c.mstatus = (c.mstatus & !mstatus::SSTATUS_VIEW)
                    | (value & mstatus::SSTATUS_VIEW);
            }
            csr::STVEC => c.stvec = value & !3,
            csr::SSCRATCH => c.sscratch = value,
            csr::SEPC => c.sepc = value & !1,
            csr::SCAUSE => c.scause = value & 0x8000_001f,
            csr::STVAL => c.stval = value,
            // ASID is WARL-zero: keep only the mode bit and the PPN.
            csr::SATP => c.satp = value & 0x803f_ffff,
            csr::MSTATUS => {
                let mut v = value & mstatus::WRITABLE;
                // MPP holds only legal modes; 0b10 folds to U.
                if v & mstatus::MPP_MASK == 2 << mstatus::MPP_SHIFT {
                    v &= !mstatus::MPP_MASK;
                }
                c.mstatus = v;
            }
            csr::MISA => {}
            csr::MEDELEG => c.medeleg = value & MEDELEG_MASK,
            csr::MIDELEG => c.mideleg = value & MIDELEG_MASK,
            csr::MIE => c.mie = value & MIE_MASK,
            csr::MTVEC => c.mtvec = value & !3,
            csr::MSCRATCH => c.mscratch = value,
            csr::MEPC => c.mepc = value & !1,
            csr::MCAUSE => c.mcause = value & 0x8000_001f,
            csr::MTVAL => c.mtval = value,
            // MTIP is hardware-driven; mip writes are dropped.
            csr::MIP => {}
            csr::MHARTID => return Err(IllegalInstruction),
            _ => return Err(IllegalInstruction),
        }
        Ok(())
    }

    /// Enter a trap: pick the target mode by delegation, save pc/cause/tval
    /// and the privilege stack, disable interrupts, jump to the vector.
    pub fn take_trap(&mut self, cause: TrapCause) {
        let deleg = if cause.is_interrupt {
            self.csr.mideleg
        } else {
            self.csr.medeleg
        };
        let delegated =
            self.mode != PrivMode::Machine && cause.code < 32 && (deleg >> cause.code) & 1 == 1;
        if delegated {
            self.csr.sepc = self.pc;
            self.csr.scause = cause.cause_bits();
            self.csr.stval = cause.tval;
            let old_sie = (self.csr.mstatus & mstatus::SIE) != 0;
            self.csr.mstatus &= !(mstatus::SIE | mstatus::SPIE | mstatus::SPP);
            if old_sie {
                self.csr.mstatus |= mstatus::SPIE;
            }
            if self.mode == PrivMode::Supervisor {
                self.csr.mstatus |= mstatus::SPP;
            }
            self.mode = PrivMode::Supervisor;
            self.pc = self.csr.stvec;
        } else {
            self.csr.mepc = self.pc;
            self.csr.mcause = cause.cause_bits();
            self.csr.mtval = cause.tval;
            let old_mie = (self.csr.mstatus & mstatus::MIE) != 0;
            self.csr.mstatus &= !(mstatus::MIE | mstatus::MPIE | mstatus::MPP_MASK);
            if old_mie {
                self.csr.mstatus |= mstatus::MPIE;
            }
            self.csr.mstatus |= (self.mode as u32) << mstatus::MPP_SHIFT;
            self.mode = PrivMode::Machine;
            self.pc = self.csr.mtvec;
        }
    }

    /// MRET/SRET. Errs when the current mode may not execute the return.
    pub fn trap_return(&mut self, kind: TrapReturn) -> Result<(), IllegalInstruction> {
        match kind {
            TrapReturn::Mret => {
                if self.mode != PrivMode::Machine {
                    return Err(IllegalInstruction);
                }
                let prev = PrivMode::from_bits(
                    (self.csr.mstatus & mstatus::MPP_MASK) >> mstatus::MPP_SHIFT,
                );
                let mpie = (self.csr.mstatus & mstatus::MPIE) != 0;
                self.csr.mstatus &= !(mstatus::MIE | mstatus::MPP_MASK);
                if mpie {
                    self.csr.mstatus |= mstatus::MIE;
                }
                self.csr.mstatus |= mstatus::MPIE;
                self.mode = prev;
                self.pc = self.csr.mepc;
            }
            TrapReturn::Sret => {
                if self.mode < PrivMode::Supervisor {
                    return Err(IllegalInstruction);
                }
                let prev = if self.csr.mstatus & mstatus::SPP != 0 {
                    PrivMode::Supervisor
                } else {
                    PrivMode::User
                };
                let spie = (self.csr.mstatus & mstatus::SPIE) != 0;
                self.csr.mstatus &= !(mstatus::SIE | mstatus::SPP);
                if spie {
                    self.csr.mstatus |= mstatus::SIE;
                }
                self.csr.mstatus |= mstatus::SPIE;
                self.mode = prev;
                self.pc = self.csr.sepc;
            }
        }
        Ok(())
    }

    /// Pending machine timer interrupt, honoring mstatus.MIE in M-mode.
    pub fn pending_interrupt(&self) -> Option<TrapCause> {
        let mtip = self.csr.mip & (1 << TrapCause::INT_M_TIMER) != 0;
        let mtie = self.csr.mie & (1 << TrapCause::INT_M_TIMER) != 0;
        let enabled = self.mode < PrivMode::Machine || self.csr.mstatus & mstatus::MIE != 0;
        if mtip && mtie && enabled {
            Some(TrapCause::interrupt(TrapCause::INT_M_TIMER))
        } else {
            None
        }
    }

    /// Recompute MTIP from the timer compare value.
    pub fn update_mtip(&mut self) {
        if self.mtime >= self.mtimecmp {
            self.csr.mip |= 1 << TrapCause::INT_M_TIMER;
        } else {
            self.csr.mip &= !(1 << TrapCause::INT_M_TIMER);
        }
    }

    /// Snapshot of the traced CSRs, for retirement diffing.
    pub fn traced_csr_snapshot(&self) -> Vec<u32> {
        TRACED_CSRS
            .iter()
            .map(|&a| self.csr_value(a).unwrap())
            .collect()
    }
}

/// Which trap-return instruction executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapReturn {
    Mret,
    Sret,
}
