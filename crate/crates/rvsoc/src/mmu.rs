//! Sv32 virtual-to-physical translation: three permission-split
//! direct-mapped TLBs and the two-level page walk with A/D write-back.

use crate::arch::{mstatus, PrivMode, TrapCause};

/// satp decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Satp {
    pub enabled: bool,
    pub root_ppn: u32,
}

impl Satp {
    pub fn from_bits(v: u32) -> Satp {
        Satp {
            enabled: v >> 31 != 0,
            root_ppn: v & 0x3f_ffff,
        }
    }
}

/// One translation request kind; selects the TLB array and the fault code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Execute = 0,
    Read = 1,
    Write = 2,
}

impl AccessKind {
    pub fn page_fault(self, va: u32) -> TrapCause {
        let code = match self {
            AccessKind::Execute => TrapCause::INST_PAGE_FAULT,
            AccessKind::Read => TrapCause::LOAD_PAGE_FAULT,
            AccessKind::Write => TrapCause::STORE_PAGE_FAULT,
        };
        TrapCause::exception(code, va)
    }
}

/// Sv32 page-table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pte(pub u32);

impl Pte {
    pub const V: u32 = 1 << 0;
    pub const R: u32 = 1 << 1;
    pub const W: u32 = 1 << 2;
    pub const X: u32 = 1 << 3;
    pub const U: u32 = 1 << 4;
    pub const G: u32 = 1 << 5;
    pub const A: u32 = 1 << 6;
    pub const D: u32 = 1 << 7;

    pub fn ppn(self) -> u32 {
        self.0 >> 10
    }
    pub fn flag(self, f: u32) -> bool {
        self.0 & f != 0
    }
    pub fn is_leaf(self) -> bool {
        self.0 & (Pte::R | Pte::X) != 0
    }
    /// V=0, or the reserved W-without-R combination.
    pub fn is_invalid(self) -> bool {
        !self.flag(Pte::V) || (self.flag(Pte::W) && !self.flag(Pte::R))
    }
}

/// Physical-memory hooks the walker needs: 32-bit PTE reads and the A/D
/// write-back. Reads return None on unmapped addresses.
pub trait PteMem {
    fn read_pte(&mut self, pa: u32) -> Option<u32>;
    fn write_pte(&mut self, pa: u32, value: u32);
}

/// mstatus bits that modulate permission checks, re-read on every access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatusBits {
    pub sum: bool,
    pub mxr: bool,
}

impl StatusBits {
    pub fn from_mstatus(v: u32) -> StatusBits {
        StatusBits {
            sum: v & mstatus::SUM != 0,
            mxr: v & mstatus::MXR != 0,
        }
    }
}

const TLB_ENTRIES: usize = 32;

/// One direct-mapped TLB entry; permissions are a snapshot of the leaf PTE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TlbEntry {
    pub valid: bool,
    pub vpn: u32,
    /// Leaf PTE ppn (22 bits as stored in the PTE).
    pub ppn: u32,
    pub flags: u32,
    pub megapage: bool,
}

/// 32-entry direct-mapped translation cache, one per access kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TlbArray {
    entries: [TlbEntry; TLB_ENTRIES],
}

impl Default for TlbArray {
    fn default() -> Self {
        TlbArray {
            entries: [TlbEntry::default(); TLB_ENTRIES],
        }
    }
}

impl TlbArray {
    fn index(vpn: u32) -> usize {
        (vpn as usize) & (TLB_ENTRIES - 1)
    }
    fn lookup(&self, vpn: u32) -> Option<&TlbEntry> {
        let e = &self.entries[Self::index(vpn)];
        (e.valid && e.vpn == vpn).then_some(e)
    }
    fn insert(&mut self, entry: TlbEntry) {
        self.entries[Self::index(entry.vpn)] = entry;
    }
    pub fn flush(&mut self) {
        self.entries = [TlbEntry::default(); TLB_ENTRIES];
    }
    pub fn entries(&self) -> &[TlbEntry] {
        &self.entries
    }
    pub fn entries_mut(&mut self) -> &mut [TlbEntry; TLB_ENTRIES] {
        &mut self.entries
    }
}

/// Per-kind walk counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MmuStats {
    pub walks: [u64; 3],
    pub walk_reads: u64,
}

/// The MMU: three TLBs plus walk statistics. The walker itself is also
/// usable standalone through [`page_walk`].
#[derive(Debug, Clone, Default)]
pub struct Mmu {
    pub tlbs: [TlbArray; 3],
    pub stats: MmuStats,
}

impl Mmu {
    /// Translate one access. Identity when translation is off or the core
    /// runs in M-mode; otherwise TLB lookup with walk fallback and a
    /// permission check against the current mode and status bits.
    pub fn translate(
        &mut self,
        va: u32,
        kind: AccessKind,
        mode: PrivMode,
        satp: Satp,
        status: StatusBits,
        mem: &mut impl PteMem,
        use_tlb: bool,
    ) -> Result<u32, TrapCause> {
        if !satp.enabled || mode == PrivMode::Machine {
            return Ok(va);
        }
        let vpn = va >> 12;
        if use_tlb {
            if let Some(e) = self.tlbs[kind as usize].lookup(vpn) {
                if permit(e.flags, kind, mode, status) && dirty_ok(e.flags, kind) {
                    let frame = if e.megapage {
                        (e.ppn & !0x3ff) | (vpn & 0x3ff)
                    } else {
                        e.ppn
                    };
                    return Ok(frame << 12 | (va & 0xfff));
                }
                // Insufficient permission behaves as a miss; the walk
                // re-judges and raises the fault.
            }
        }
        let walk = page_walk(va, kind, mode, satp, status, mem, &mut self.stats)?;
        if use_tlb {
            self.tlbs[kind as usize].insert(TlbEntry {
                valid: true,
                vpn,
                ppn: walk.pte.ppn(),
                flags: walk.pte.0,
                megapage: walk.megapage,
            });
        }
        Ok(walk.pa)
    }

    /// SFENCE.VMA support: invalidate all entries in all three arrays.
    pub fn tlb_flush(&mut self) {
        for t in &mut self.tlbs {
            t.flush();
        }
    }
}

fn permit(flags: u32, kind: AccessKind, mode: PrivMode, status: StatusBits) -> bool {
    let user_page = flags & Pte::U != 0;
    let mode_ok = match mode {
        PrivMode::User => user_page,
        PrivMode::Supervisor => {
            if user_page {
                // S-mode may touch U pages for data only, and only with SUM.
                status.sum && kind != AccessKind::Execute
            } else {
                true
            }
        }
        PrivMode::Machine => true,
    };
    if !mode_ok {
        return false;
    }
    match kind {
        AccessKind::Execute => flags & Pte::X != 0,
        AccessKind::Read => flags & Pte::R != 0 || (status.mxr && flags & Pte::X != 0),
        AccessKind::Write => flags & Pte::W != 0,
    }
}

/// A TLB hit additionally requires A set, and D set for stores; otherwise
/// the walk re-runs to perform the hardware update.
fn dirty_ok(flags: u32, kind: AccessKind) -> bool {
    flags & Pte::A != 0 && (kind != AccessKind::Write || flags & Pte::D != 0)
}

/// Successful walk result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkResult {
    pub pa: u32,
    pub pte: Pte,
    pub level: u8,
    pub megapage: bool,
}

/// The six-state Sv32 walk: read level-1 PTE, latch, read level-0 PTE,
/// latch, judge, then update TLB and write A (and D on stores) back to the
/// PTE in memory. At most two PTE reads per walk.
pub fn page_walk(
    va: u32,
    kind: AccessKind,
    mode: PrivMode,
    satp: Satp,
    status: StatusBits,
    mem: &mut impl PteMem,
    stats: &mut MmuStats,
) -> Result<WalkResult, TrapCause> {
    stats.walks[kind as usize] += 1;
    let fault = || kind.page_fault(va);
    let vpn1 = (va >> 22) & 0x3ff;
    let vpn0 = (va >> 12) & 0x3ff;

    // States 1-2: level-1 PTE.
    let pte1_addr = (satp.root_ppn << 12).wrapping_add(vpn1 * 4);
    stats.walk_reads += 1;
    let pte1 = Pte(mem.read_pte(pte1_addr).ok_or_else(fault)?);
    if pte1.is_invalid() {
        return Err(fault());
    }

    let (pte, pte_addr, level, megapage) = if pte1.is_leaf() {
        // 4MB megapage; low PPN bits must be aligned.
        if pte1.ppn() & 0x3ff != 0 {
            return Err(fault());
        }
        (pte1, pte1_addr, 1u8, true)
    } else {
        // States 3-4: level-0 PTE. Second and last memory read of the walk.
        let pte0_addr = (pte1.ppn() << 12).wrapping_add(vpn0 * 4);
        stats.walk_reads += 1;
        let pte0 = Pte(mem.read_pte(pte0_addr).ok_or_else(fault)?);
        if pte0.is_invalid() || !pte0.is_leaf() {
            return Err(fault());
        }
        (pte0, pte0_addr, 0u8, false)
    };

    // State 5: judge permissions.
    if !permit(pte.0, kind, mode, status) {
        return Err(fault());
    }

    // State 6: A/D hardware update written back to memory.
    let mut updated = pte.0 | Pte::A;
    if kind == AccessKind::Write {
        updated |= Pte::D;
    }
    if updated != pte.0 {
        mem.write_pte(pte_addr, updated);
    }
    let pte = Pte(updated);

    let frame = if megapage {
        (pte.ppn() & !0x3ff) | vpn0
    } else {
        pte.ppn()
    };
    Ok(WalkResult {
        // Sv32's 34-bit PA space is truncated to the 32-bit system map.
        pa: frame << 12 | (va & 0xfff),
        pte,
        level,
        megapage,
    })
}
