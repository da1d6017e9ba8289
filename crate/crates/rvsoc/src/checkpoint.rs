//! Checkpoint and restore. Snapshots are taken at retirement boundaries,
//! where the core's internal latches are empty, so the format only has to
//! carry architectural state, the memory hierarchy (cache lines, fetch
//! buffer, TLBs -- they affect timing, not semantics), devices, RVuc and
//! the counters. Everything is little-endian with explicit lengths; a
//! hash of the run configuration guards against restoring under different
//! timing parameters.

use thiserror::Error;

use crate::arch::{ArchState, PrivMode, Reservation};
use crate::machine::{CoreModel, Machine};
use crate::mem::{MemConfig, MemorySystem};
use crate::mmu::{Mmu, TlbEntry};
use crate::rvuc::Rvuc;
use crate::timing::{TimingCore, STEP_COUNT};

pub const MAGIC: &[u8; 8] = b"RVSOCKP\x01";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("truncated checkpoint")]
    Truncated,
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint was taken under a different configuration")]
    ConfigMismatch,
}

/// FNV-1a over the timing-relevant configuration.
pub fn config_hash(cfg: &MemConfig) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    };
    eat(cfg.ram_size as u64);
    eat(cfg.disk_size as u64);
    eat(cfg.cache_enabled as u64);
    eat(cfg.fbuf_enabled as u64);
    eat(cfg.miss_penalty);
    eat(cfg.store_latency);
    eat(cfg.mmio_latency);
    h
}

#[derive(Default)]
struct W(Vec<u8>);

impl W {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn b(&mut self, v: bool) {
        self.u8(v as u8);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn blob(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.0.extend_from_slice(v);
    }
}

struct R<'a> {
    b: &'a [u8],
    p: usize,
}

impl<'a> R<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.p + n > self.b.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &self.b[self.p..self.p + n];
        self.p += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn b(&mut self) -> Result<bool, CheckpointError> {
        Ok(self.u8()? != 0)
    }
    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn blob(&mut self) -> Result<&'a [u8], CheckpointError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

fn save_arch(w: &mut W, st: &ArchState) {
    w.u32(st.pc);
    for r in st.gprs() {
        w.u32(r);
    }
    w.u8(st.mode as u8);
    w.b(st.reservation.valid);
    w.u32(st.reservation.addr);
    w.u64(st.instret);
    w.u64(st.mtime);
    w.u64(st.mtimecmp);
    let c = &st.csr;
    for v in [
        c.mstatus, c.mtvec, c.mepc, c.mcause, c.mtval, c.mie, c.mip, c.mscratch, c.medeleg,
        c.mideleg, c.stvec, c.sepc, c.scause, c.stval, c.sscratch, c.satp,
    ] {
        w.u32(v);
    }
}

fn load_arch(r: &mut R, st: &mut ArchState) -> Result<(), CheckpointError> {
    st.pc = r.u32()?;
    let mut g = [0u32; 32];
    for v in &mut g {
        *v = r.u32()?;
    }
    st.set_gprs(g);
    st.mode = PrivMode::from_bits(r.u8()? as u32);
    st.reservation = Reservation {
        valid: r.b()?,
        addr: r.u32()?,
    };
    st.instret = r.u64()?;
    st.mtime = r.u64()?;
    st.mtimecmp = r.u64()?;
    let c = &mut st.csr;
    for f in [
        &mut c.mstatus,
        &mut c.mtvec,
        &mut c.mepc,
        &mut c.mcause,
        &mut c.mtval,
        &mut c.mie,
        &mut c.mip,
        &mut c.mscratch,
        &mut c.medeleg,
        &mut c.mideleg,
        &mut c.stvec,
        &mut c.sepc,
        &mut c.scause,
        &mut c.stval,
        &mut c.sscratch,
        &mut c.satp,
    ] {
        *f = r.u32()?;
    }
    Ok(())
}

fn save_mmu(w: &mut W, mmu: &Mmu) {
    for tlb in &mmu.tlbs {
        for e in tlb.entries() {
            w.b(e.valid);
            w.u32(e.vpn);
            w.u32(e.ppn);
            w.u32(e.flags);
            w.b(e.megapage);
        }
    }
    for v in mmu.stats.walks {
        w.u64(v);
    }
    w.u64(mmu.stats.walk_reads);
}

fn load_mmu(r: &mut R, mmu: &mut Mmu) -> Result<(), CheckpointError> {
    for tlb in &mut mmu.tlbs {
        for e in tlb.entries_mut() {
            *e = TlbEntry {
                valid: r.b()?,
                vpn: r.u32()?,
                ppn: r.u32()?,
                flags: r.u32()?,
                megapage: r.b()?,
            };
        }
    }
    for v in &mut mmu.stats.walks {
        *v = r.u64()?;
    }
    mmu.stats.walk_reads = r.u64()?;
    Ok(())
}

fn save_mem(w: &mut W, mem: &MemorySystem) {
    w.u64(mem.cache.accesses);
    w.u64(mem.cache.hits);
    let mut lines = Vec::new();
    mem.cache.save_lines(&mut lines);
    w.blob(&lines);
    w.b(mem.fbuf.valid);
    w.u16(mem.fbuf.half);
    w.u32(mem.fbuf.holder_pc);
    w.u64(mem.fetch_stats.windows);
    w.u64(mem.fetch_stats.straddles);
    w.u64(mem.fetch_stats.buffer_hits);
    let d = &mem.devices;
    w.blob(&d.console.tx_out);
    w.blob(&d.console.fifo_bytes());
    w.b(d.console.rx_overflow);
    w.u32(d.disk.sector);
    w.u32(d.disk.ram_addr);
    w.u32(d.disk.status);
    w.b(d.doorbell.busy);
    w.u32(d.doorbell.cause);
    for a in d.doorbell.args {
        w.u32(a);
    }
    w.b(d.poweroff);
    w.u64(d.mtimecmp);
    w.u64(d.mtime);
    w.blob(&mem.ram);
    w.blob(&mem.disk);
}

fn load_mem(r: &mut R, mem: &mut MemorySystem) -> Result<(), CheckpointError> {
    mem.cache.accesses = r.u64()?;
    mem.cache.hits = r.u64()?;
    let lines = r.blob()?;
    mem.cache.restore_lines(lines);
    mem.fbuf.valid = r.b()?;
    mem.fbuf.half = r.u16()?;
    mem.fbuf.holder_pc = r.u32()?;
    mem.fetch_stats.windows = r.u64()?;
    mem.fetch_stats.straddles = r.u64()?;
    mem.fetch_stats.buffer_hits = r.u64()?;
    let tx = r.blob()?.to_vec();
    let fifo = r.blob()?.to_vec();
    let overflow = r.b()?;
    let d = &mut mem.devices;
    d.console.tx_out = tx;
    d.console.restore_fifo(&fifo, overflow);
    d.disk.sector = r.u32()?;
    d.disk.ram_addr = r.u32()?;
    d.disk.status = r.u32()?;
    d.doorbell.busy = r.b()?;
    d.doorbell.cause = r.u32()?;
    for a in &mut d.doorbell.args {
        *a = r.u32()?;
    }
    d.poweroff = r.b()?;
    d.mtimecmp = r.u64()?;
    d.mtime = r.u64()?;
    let ram = r.blob()?;
    if ram.len() != mem.ram.len() {
        return Err(CheckpointError::ConfigMismatch);
    }
    mem.ram.copy_from_slice(ram);
    let disk = r.blob()?;
    if disk.len() != mem.disk.len() {
        return Err(CheckpointError::ConfigMismatch);
    }
    mem.disk.copy_from_slice(disk);
    Ok(())
}

fn save_rvuc(w: &mut W, uc: &Rvuc) {
    w.u32(uc.pc);
    for g in uc.gpr {
        w.u32(g);
    }
    w.blob(&uc.local);
    w.u8(uc.phase);
    w.u64(uc.insts);
}

fn load_rvuc(r: &mut R, uc: &mut Rvuc) -> Result<(), CheckpointError> {
    uc.pc = r.u32()?;
    for g in &mut uc.gpr {
        *g = r.u32()?;
    }
    let local = r.blob()?;
    if local.len() != uc.local.len() {
        return Err(CheckpointError::ConfigMismatch);
    }
    uc.local.copy_from_slice(local);
    uc.phase = r.u8()?;
    uc.insts = r.u64()?;
    Ok(())
}

fn save_core(w: &mut W, core: &TimingCore) {
    let c = &core.counters;
    w.u64(c.cycles);
    w.u64(c.slots);
    w.u64(c.excluded);
    for v in c.step_cycles {
        w.u64(v);
    }
}

fn load_core(r: &mut R, core: &mut TimingCore) -> Result<(), CheckpointError> {
    let c = &mut core.counters;
    c.cycles = r.u64()?;
    c.slots = r.u64()?;
    c.excluded = r.u64()?;
    for v in &mut c.step_cycles {
        *v = r.u64()?;
    }
    debug_assert_eq!(c.step_cycles.len(), STEP_COUNT);
    Ok(())
}

/// Serialize the machine. Must be called at a retirement boundary.
pub fn save(m: &Machine) -> Vec<u8> {
    let mut w = W::default();
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u64(config_hash(&m.mem.cfg));
    save_arch(&mut w, &m.st);
    save_mmu(&mut w, &m.mmu);
    save_mem(&mut w, &m.mem);
    save_rvuc(&mut w, &m.rvuc);
    save_core(&mut w, &m.core);
    w.u64(m.slot);
    w.u64(m.stdin_consumed);
    w.0
}

/// Rebuild a machine from a checkpoint. `script` is the full original
/// input script; the part already consumed before the snapshot is skipped.
pub fn restore(
    bytes: &[u8],
    cfg: MemConfig,
    model: CoreModel,
    script: &[u8],
) -> Result<Machine, CheckpointError> {
    let mut r = R { b: bytes, p: 0 };
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    if r.u64()? != config_hash(&cfg) {
        return Err(CheckpointError::ConfigMismatch);
    }
    let mut m = Machine::new(cfg, &[], model).expect("empty firmware always fits");
    load_arch(&mut r, &mut m.st)?;
    load_mmu(&mut r, &mut m.mmu)?;
    load_mem(&mut r, &mut m.mem)?;
    load_rvuc(&mut r, &mut m.rvuc)?;
    load_core(&mut r, &mut m.core)?;
    m.slot = r.u64()?;
    m.stdin_consumed = r.u64()?;
    let consumed = (m.stdin_consumed as usize).min(script.len());
    m.set_stdin(&script[consumed..]);
    m.stdin_consumed = consumed as u64;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firmware::reference_firmware;
    use crate::isa::encode;
    use crate::machine::StopReason;

    fn cfg() -> MemConfig {
        MemConfig {
            ram_size: 1 << 20,
            disk_size: 1 << 16,
            ..MemConfig::default()
        }
    }

    fn busy_program() -> Vec<u8> {
        let mut prog = encode::li(1, crate::mem::RAM_BASE + 0x400);
        prog.extend(encode::li(2, 257));
        // loop: sw, lw, addi, bne back
        prog.push(encode::sw(1, 2, 0));
        prog.push(encode::lw(3, 1, 0));
        prog.push(encode::addi(2, 2, -1));
        prog.push(encode::bne(2, 0, -12));
        prog.push(encode::jal(0, 0));
        prog.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    #[test]
    fn split_run_equals_straight_run() {
        let fw = reference_firmware();
        let image = busy_program();

        let mut whole = Machine::new(cfg(), &fw, CoreModel::Timing).unwrap();
        whole.load_ram(0, &image).unwrap();
        whole.run(500, |_, _| {});

        let mut first = Machine::new(cfg(), &fw, CoreModel::Timing).unwrap();
        first.load_ram(0, &image).unwrap();
        first.run(123, |_, _| {});
        let snap = save(&first);
        let mut second = restore(&snap, cfg(), CoreModel::Timing, &[]).unwrap();
        assert_eq!(second.run(500, |_, _| {}), StopReason::SlotLimit);

        assert_eq!(whole.st, second.st);
        assert_eq!(whole.core.counters, second.core.counters);
        assert_eq!(whole.mem.cache.accesses, second.mem.cache.accesses);
        assert_eq!(whole.mem.cache.hits, second.mem.cache.hits);
        assert_eq!(whole.mem.fbuf, second.mem.fbuf);
        assert_eq!(whole.mem.ram, second.mem.ram);
    }

    #[test]
    fn config_mismatch_rejected() {
        let fw = reference_firmware();
        let mut m = Machine::new(cfg(), &fw, CoreModel::Timing).unwrap();
        m.load_ram(0, &busy_program()).unwrap();
        m.run(10, |_, _| {});
        let snap = save(&m);
        let other = MemConfig {
            miss_penalty: 5,
            ..cfg()
        };
        assert_eq!(
            restore(&snap, other, CoreModel::Timing, &[]).unwrap_err(),
            CheckpointError::ConfigMismatch
        );
    }

    #[test]
    fn garbage_rejected() {
        assert_eq!(
            restore(b"not a checkpoint", cfg(), CoreModel::Timing, &[]).unwrap_err(),
            CheckpointError::BadMagic
        );
        assert_eq!(
            restore(&MAGIC[..4], cfg(), CoreModel::Timing, &[]).unwrap_err(),
            CheckpointError::Truncated
        );
    }
}
