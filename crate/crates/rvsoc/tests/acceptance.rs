//! Acceptance gate: ten end-to-end criteria, one test each, printing one
//! PASS line apiece. Several criteria check the simulator against
//! independent oracles implemented here (a brute-force Sv32 walker, plain
//! read-modify-write arithmetic for atomics) rather than against the
//! code under test.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rvsoc::arch::{csr, ArchState, PrivMode, TrapCause};
use rvsoc::checkpoint;
use rvsoc::firmware::reference_firmware;
use rvsoc::fuzz::{self, FuzzConfig};
use rvsoc::isa::{encode, expand_compressed, parcel_length, ParcelLen};
use rvsoc::machine::{run_lockstep, CoreModel, LockstepOutcome, Machine, StopReason};
use rvsoc::mem::{MemConfig, MemorySystem, RAM_BASE};
use rvsoc::mmu::{AccessKind, Mmu, Satp, StatusBits};
use rvsoc::stats;
use rvsoc::trace::format_record;

fn small_cfg() -> MemConfig {
    MemConfig {
        ram_size: 1 << 20,
        disk_size: 1 << 16,
        ..MemConfig::default()
    }
}

fn mk(cfg: MemConfig, model: CoreModel, image: &[u8]) -> Machine {
    let mut m = Machine::new(cfg, &reference_firmware(), model).unwrap();
    m.load_ram(0, image).unwrap();
    m
}

fn words_to_bytes(ws: &[u32]) -> Vec<u8> {
    ws.iter().flat_map(|w| w.to_le_bytes()).collect()
}

/// Tiny two-pass assembler for the hand-written test programs: emits
/// words, records labels, patches forward branches and jumps afterwards.
struct Asm {
    w: Vec<u32>,
    labels: HashMap<&'static str, usize>,
    fixups: Vec<(usize, Fixup, &'static str)>,
}

enum Fixup {
    Beq(u32, u32),
    Jal(u32),
}

impl Asm {
    fn new() -> Asm {
        Asm {
            w: Vec::new(),
            labels: HashMap::new(),
            fixups: Vec::new(),
        }
    }
    fn emit(&mut self, w: u32) {
        self.w.push(w);
    }
    fn li(&mut self, rd: u32, v: u32) {
        for w in encode::li(rd, v) {
            self.w.push(w);
        }
    }
    fn label(&mut self, name: &'static str) {
        self.labels.insert(name, self.w.len());
    }
    fn beq_to(&mut self, rs1: u32, rs2: u32, name: &'static str) {
        self.fixups.push((self.w.len(), Fixup::Beq(rs1, rs2), name));
        self.w.push(0);
    }
    fn jal_to(&mut self, rd: u32, name: &'static str) {
        self.fixups.push((self.w.len(), Fixup::Jal(rd), name));
        self.w.push(0);
    }
    fn finish(mut self) -> Vec<u32> {
        for (at, fix, name) in self.fixups {
            let target = self.labels[name];
            let off = (target as i32 - at as i32) * 4;
            self.w[at] = match fix {
                Fixup::Beq(a, b) => encode::beq(a, b, off),
                Fixup::Jal(rd) => encode::jal(rd, off),
            };
        }
        self.w
    }
}

// ------------------------------------------------------------------------
// 1. Lockstep campaign: >= 1M instructions over >= 20 seeds, with and
//    without Sv32, zero divergences, < 60 s.
// ------------------------------------------------------------------------

#[test]
fn criterion_01_lockstep_campaign() {
    let start = Instant::now();
    let flat = FuzzConfig {
        slots: 50_000,
        insts: 400,
        translated: false,
    };
    let sv32 = FuzzConfig {
        translated: true,
        ..flat
    };
    let seeds: Vec<u64> = (0..12).collect();
    let sv32_seeds: Vec<u64> = (100..112).collect();

    let mut total = 0u64;
    let mut programs = 0usize;
    for (cfg, seeds) in [(flat, &seeds), (sv32, &sv32_seeds)] {
        for (seed, res) in fuzz::run_campaign(seeds, &cfg) {
            match res {
                Ok(insts) => total += insts,
                Err(e) => panic!("FAIL criterion 1: seed {seed} diverged: {e}"),
            }
            programs += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(programs >= 20, "only {programs} programs");
    assert!(total >= 1_000_000, "only {total} instructions retired");
    assert!(
        elapsed.as_secs() < 60,
        "campaign took {elapsed:?}, budget 60 s"
    );
    println!(
        "PASS criterion 1: lockstep campaign, {programs} programs, \
         {total} instructions, 0 divergences, {elapsed:?}"
    );
}

// ------------------------------------------------------------------------
// 2. Exhaustive compressed sweep: all 65,536 parcels; valid ones execute
//    identically to their 32-bit expansion, invalid ones raise
//    IllegalInstruction on both paths.
// ------------------------------------------------------------------------

#[test]
fn criterion_02_compressed_sweep() {
    let mut a = mk(small_cfg(), CoreModel::Reference, &[]);
    let mut b = mk(small_cfg(), CoreModel::Reference, &[]);
    let reset = |m: &mut Machine| {
        m.st = ArchState::new(RAM_BASE);
        for i in 1..32u8 {
            // Every register holds a distinct 4-byte-aligned RAM address so
            // any parcel's loads, stores and indirect jumps stay in bounds.
            m.st.set_gpr(i, RAM_BASE + 0x2000 + i as u32 * 36);
        }
    };

    let (mut valid, mut invalid, mut word_halves) = (0u32, 0u32, 0u32);
    for parcel in 0..=0xffffu32 {
        let parcel = parcel as u16;
        if parcel & 3 == 3 {
            assert_eq!(parcel_length(parcel), ParcelLen::Word);
            word_halves += 1;
            continue;
        }
        let expansion = expand_compressed(parcel);
        reset(&mut a);
        a.load_ram(0, &[parcel as u8, (parcel >> 8) as u8, 0, 0])
            .unwrap();
        let ra = a.step().unwrap();

        match expansion {
            Err(_) => {
                invalid += 1;
                let trap = ra.trap.unwrap_or_else(|| {
                    panic!("parcel {parcel:04x}: invalid but executed")
                });
                assert_eq!(trap.code, TrapCause::ILLEGAL, "parcel {parcel:04x}");
                assert_eq!(trap.tval, parcel as u32, "parcel {parcel:04x}");
            }
            Ok(word) => {
                valid += 1;
                reset(&mut b);
                b.load_ram(0, &word.to_le_bytes()).unwrap();
                let rb = b.step().unwrap();
                assert_eq!(ra.trap, rb.trap, "parcel {parcel:04x} vs {word:08x}");
                assert_eq!(ra.mem_ops, rb.mem_ops, "parcel {parcel:04x}");
                // A jump-and-link writes the sequential pc, which is pc+2 on
                // the compressed path and pc+4 on the expanded one; that is
                // the only legitimate difference.
                let link_skew = matches!(
                    (ra.gpr_write, rb.gpr_write),
                    (Some((ra_rd, ra_v)), Some((rb_rd, rb_v)))
                        if ra_rd == rb_rd && ra_v == RAM_BASE + 2 && rb_v == RAM_BASE + 4
                );
                assert!(
                    ra.gpr_write == rb.gpr_write || link_skew,
                    "parcel {parcel:04x}: {:x?} vs {:x?}",
                    ra.gpr_write,
                    rb.gpr_write
                );
            }
        }
    }
    assert_eq!(valid + invalid + word_halves, 65_536);
    assert!(valid > 10_000, "suspiciously few valid parcels: {valid}");
    println!(
        "PASS criterion 2: compressed sweep, {valid} valid == expansion, \
         {invalid} invalid -> illegal on both paths, {word_halves} word-form"
    );
}

// ------------------------------------------------------------------------
// 3. Sv32 walker vs an independent brute-force walk: 10,000 random
//    configurations, exact fault kinds, A/D write-back, <= 2 PTE reads.
// ------------------------------------------------------------------------

/// Physical 32-bit read against the flat backing arrays, bypassing the
/// walker entirely.
fn phys_read32(m: &MemorySystem, pa: u32) -> Option<u32> {
    const DISK_BASE: u32 = 0x8400_0000;
    let bytes = if pa >= RAM_BASE && pa - RAM_BASE + 4 <= m.cfg.ram_size {
        &m.ram[(pa - RAM_BASE) as usize..]
    } else if pa >= DISK_BASE && pa.wrapping_sub(DISK_BASE) + 4 <= m.cfg.disk_size {
        &m.disk[(pa - DISK_BASE) as usize..]
    } else {
        return None;
    };
    Some(u32::from_le_bytes(bytes[..4].try_into().unwrap()))
}

fn poke32(m: &mut MemorySystem, pa: u32, v: u32) {
    let off = (pa - RAM_BASE) as usize;
    m.ram[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

const V: u32 = 1;
const R: u32 = 2;
const W: u32 = 4;
const X: u32 = 8;
const U: u32 = 16;
const A: u32 = 64;
const D: u32 = 128;

/// Straight-line reimplementation of the Sv32 walk, written directly from
/// the architecture's rules. Returns (pa, reads used, A/D write-back) or
/// the expected exception code.
#[allow(clippy::too_many_arguments)]
fn brute_walk(
    m: &MemorySystem,
    va: u32,
    kind: AccessKind,
    mode: PrivMode,
    sum: bool,
    mxr: bool,
    root_ppn: u32,
) -> Result<(u32, u32, Option<(u32, u32)>), u32> {
    let fault = match kind {
        AccessKind::Execute => 12u32,
        AccessKind::Read => 13,
        AccessKind::Write => 15,
    };
    let invalid = |p: u32| p & V == 0 || (p & W != 0 && p & R == 0);
    let vpn1 = (va >> 22) & 0x3ff;
    let vpn0 = (va >> 12) & 0x3ff;

    let a1 = (root_ppn << 12).wrapping_add(vpn1 * 4);
    let p1 = phys_read32(m, a1).ok_or(fault)?;
    if invalid(p1) {
        return Err(fault);
    }
    let (leaf, leaf_addr, reads, mega) = if p1 & (R | X) != 0 {
        if (p1 >> 10) & 0x3ff != 0 {
            return Err(fault); // misaligned megapage
        }
        (p1, a1, 1, true)
    } else {
        let a0 = ((p1 >> 10) << 12).wrapping_add(vpn0 * 4);
        let p0 = phys_read32(m, a0).ok_or(fault)?;
        if invalid(p0) || p0 & (R | X) == 0 {
            return Err(fault); // non-leaf at the last level
        }
        (p0, a0, 2, false)
    };

    let user_page = leaf & U != 0;
    let mode_ok = match mode {
        PrivMode::User => user_page,
        PrivMode::Supervisor => !user_page || (sum && kind != AccessKind::Execute),
        PrivMode::Machine => unreachable!(),
    };
    let kind_ok = match kind {
        AccessKind::Execute => leaf & X != 0,
        AccessKind::Read => leaf & R != 0 || (mxr && leaf & X != 0),
        AccessKind::Write => leaf & W != 0,
    };
    if !mode_ok || !kind_ok {
        return Err(fault);
    }

    let mut updated = leaf | A;
    if kind == AccessKind::Write {
        updated |= D;
    }
    let wb = (updated != leaf).then_some((leaf_addr, updated));
    let frame = if mega {
        ((updated >> 10) & !0x3ff) | vpn0
    } else {
        updated >> 10
    };
    Ok((frame << 12 | (va & 0xfff), reads, wb))
}

#[test]
fn criterion_03_sv32_walker_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a32);
    let mut mem = MemorySystem::new(small_cfg());
    let mut mmu = Mmu::default();
    const ROOT: u32 = 0x8000_4000;
    const L0: u32 = 0x8000_5000;

    let mut faults = 0u64;
    let mut translations = 0u64;
    for i in 0..10_000 {
        let va: u32 = rng.gen();
        let vpn1 = (va >> 22) & 0x3ff;
        let vpn0 = (va >> 12) & 0x3ff;

        // Random level-1 entry: pointer, aligned megapage, misaligned
        // megapage, or garbage.
        let flags = rng.gen::<u32>() & 0xff;
        let p1 = match rng.gen_range(0u32..10) {
            0..=3 => (L0 >> 12) << 10 | (flags & !(R | W | X)) | V,
            4..=6 => 0x80000 << 10 | flags,
            7 => (0x80000 | rng.gen_range(1u32..0x100)) << 10 | flags,
            8 => rng.gen(),
            _ => ((0x84000 + rng.gen_range(0u32..8)) << 10) | (flags & !(R | W | X)) | V,
        };
        poke32(&mut mem, ROOT + vpn1 * 4, p1);

        // Random level-0 entry.
        let p0 = match rng.gen_range(0u32..4) {
            0..=2 => (0x80010 + rng.gen_range(0u32..0x40)) << 10 | (rng.gen::<u32>() & 0xff),
            _ => rng.gen(),
        };
        poke32(&mut mem, L0 + vpn0 * 4, p0);

        let kind = [AccessKind::Execute, AccessKind::Read, AccessKind::Write]
            [rng.gen_range(0..3)];
        let mode = if rng.gen_bool(0.5) {
            PrivMode::Supervisor
        } else {
            PrivMode::User
        };
        let sum = rng.gen_bool(0.5);
        let mxr = rng.gen_bool(0.5);
        let root_ppn = if rng.gen_bool(0.97) {
            ROOT >> 12
        } else {
            rng.gen::<u32>() & 0x3f_ffff
        };

        let expected = brute_walk(&mem, va, kind, mode, sum, mxr, root_ppn);
        let satp = Satp {
            enabled: true,
            root_ppn,
        };
        let status = StatusBits { sum, mxr };
        let reads_before = mmu.stats.walk_reads;
        let got = mmu.translate(va, kind, mode, satp, status, &mut mem, false);
        let reads = mmu.stats.walk_reads - reads_before;
        assert!(reads <= 2, "case {i}: {reads} PTE reads");

        match (expected, got) {
            (Ok((pa, exp_reads, wb)), Ok(got_pa)) => {
                translations += 1;
                assert_eq!(got_pa, pa, "case {i}: pa mismatch va={va:08x}");
                assert_eq!(reads, exp_reads as u64, "case {i}: read count");
                if let Some((addr, val)) = wb {
                    assert_eq!(
                        phys_read32(&mem, addr),
                        Some(val),
                        "case {i}: A/D write-back missing at {addr:08x}"
                    );
                }
            }
            (Err(code), Err(cause)) => {
                faults += 1;
                assert!(!cause.is_interrupt);
                assert_eq!(cause.code, code, "case {i}: fault kind va={va:08x}");
                assert_eq!(cause.tval, va, "case {i}: fault tval");
            }
            (e, g) => panic!("case {i}: oracle {e:x?} vs walker {g:x?} (va={va:08x})"),
        }
    }
    assert!(faults > 500 && translations > 500, "skewed sampling: {translations} ok / {faults} faults");
    println!(
        "PASS criterion 3: Sv32 walker vs brute force, 10000 cases \
         ({translations} translations, {faults} faults), <= 2 reads each"
    );
}

// ------------------------------------------------------------------------
// 4. Timing floors: warm ALU loop at exactly 8.0 CPI; DIV at 39 +/- 1.
// ------------------------------------------------------------------------

/// Run `slots` retirement slots and return the cycle delta.
fn cycles_over(m: &mut Machine, slots: u64) -> u64 {
    let c0 = m.core.counters.cycles;
    let end = m.slot + slots;
    m.run(end, |_, _| {});
    assert_eq!(m.slot, end);
    m.core.counters.cycles - c0
}

#[test]
fn criterion_04_timing_floors() {
    // ALU loop: 64 addi + 1 jal back, all 4-byte and line-resident.
    let mut prog = vec![encode::addi(1, 0, 1), encode::addi(2, 0, 3)];
    let pre = prog.len() as u64;
    for _ in 0..64 {
        prog.push(encode::addi(3, 1, 5));
    }
    prog.push(encode::jal(0, -(64 * 4)));
    let loop_slots = 65u64;

    let mut m = mk(small_cfg(), CoreModel::Timing, &words_to_bytes(&prog));
    cycles_over(&mut m, pre + 2 * loop_slots); // warm-up: two full iterations
    let delta = cycles_over(&mut m, 10 * loop_slots);
    let alu_cpi = delta as f64 / (10 * loop_slots) as f64;
    assert_eq!(alu_cpi, 8.0, "warm ALU CPI");

    // DIV loop: 64 div + 1 jal back.
    let mut prog = vec![encode::addi(1, 0, 100), encode::addi(2, 0, 7)];
    let pre = prog.len() as u64;
    for _ in 0..64 {
        prog.push(encode::div(3, 1, 2));
    }
    prog.push(encode::jal(0, -(64 * 4)));

    let mut m = mk(small_cfg(), CoreModel::Timing, &words_to_bytes(&prog));
    cycles_over(&mut m, pre + 2 * loop_slots);
    let delta = cycles_over(&mut m, 10 * loop_slots);
    // Ten warm iterations: 640 divides and 10 jumps at 8 cycles each.
    let div_cycles = (delta - 10 * 8) as f64 / 640.0;
    assert!(
        (div_cycles - 39.0).abs() <= 1.0,
        "DIV cycles/instruction: {div_cycles}"
    );
    println!(
        "PASS criterion 4: warm ALU CPI = {alu_cpi:.1}, DIV = {div_cycles:.1} cycles"
    );
}

// ------------------------------------------------------------------------
// 5. Statistics formulas reproduce the published table figures.
// ------------------------------------------------------------------------

#[test]
fn criterion_05_published_figures() {
    let cpi_c = stats::cpi(1_213_305_856, 66_067_456).unwrap();
    let cpi_n = stats::cpi(1_233_961_984, 66_760_704).unwrap();
    assert!((cpi_c - 18.4).abs() < 0.05, "{cpi_c}");
    assert!((cpi_n - 18.5).abs() < 0.05, "{cpi_n}");

    let insts = 61_000_000u64;
    let hr_c = stats::hit_rate_percent(82_231_973, 86_738_837).unwrap();
    let mpki_c = stats::mpki(86_738_837 - 82_231_973, insts).unwrap();
    assert!((hr_c - 94.8).abs() < 0.1, "{hr_c}");
    assert!((mpki_c - 73.88).abs() < 0.05, "{mpki_c}");

    let hr_n = stats::hit_rate_percent(71_725_363, 77_055_765).unwrap();
    let mpki_n = stats::mpki(77_055_765 - 71_725_363, insts).unwrap();
    assert!((hr_n - 93.1).abs() < 0.1, "{hr_n}");
    assert!((mpki_n - 87.38).abs() < 0.05, "{mpki_n}");
    println!(
        "PASS criterion 5: CPI {cpi_c:.1}/{cpi_n:.1}, hit rate {hr_c:.1}/{hr_n:.1}, \
         MPKI {mpki_c:.2}/{mpki_n:.2}"
    );
}

// ------------------------------------------------------------------------
// 6. Fetch buffer: a line-straddling fetch costs 1 cache access with the
//    buffer, 2 without, with byte-identical traces.
// ------------------------------------------------------------------------

#[test]
fn criterion_06_fetch_buffer_benefit() {
    // Compressed nops steer 4-byte instructions onto offsets ending two
    // bytes before a line boundary, so their windows straddle lines and
    // the preceding 2-byte fetch leaves the low half in the buffer.
    const C_NOP: u16 = 0x0001;
    let mut bytes = Vec::new();
    while bytes.len() < 4_000 {
        match bytes.len() % 16 {
            10 | 12 => bytes.extend_from_slice(&C_NOP.to_le_bytes()),
            _ => bytes.extend_from_slice(&encode::addi(1, 1, 1).to_le_bytes()),
        }
    }

    let slots = 500u64;
    let with = MemConfig {
        fbuf_enabled: true,
        ..small_cfg()
    };
    let without = MemConfig {
        fbuf_enabled: false,
        ..small_cfg()
    };
    let mut ma = mk(with, CoreModel::Timing, &bytes);
    let mut mb = mk(without, CoreModel::Timing, &bytes);

    let mut straddlers = 0u64;
    for slot in 0..slots {
        let aa = ma.mem.cache.accesses;
        let ab = mb.mem.cache.accesses;
        let ra = ma.step().unwrap();
        let rb = mb.step().unwrap();
        assert_eq!(
            format_record(slot, &ra),
            format_record(slot, &rb),
            "traces must not depend on the fetch buffer"
        );
        if ra.pc % 16 == 14 {
            straddlers += 1;
            assert_eq!(ma.mem.cache.accesses - aa, 1, "slot {slot}: buffered straddle");
            assert_eq!(mb.mem.cache.accesses - ab, 2, "slot {slot}: unbuffered straddle");
        }
    }
    assert!(straddlers > 50, "only {straddlers} straddling fetches");
    assert_eq!(ma.mem.fetch_stats.straddles, mb.mem.fetch_stats.straddles);
    assert_eq!(ma.mem.fetch_stats.buffer_hits, straddlers);
    assert_eq!(
        mb.mem.cache.accesses - ma.mem.cache.accesses,
        straddlers,
        "each buffered straddle saves exactly one access"
    );
    println!(
        "PASS criterion 6: {straddlers} straddling fetches, 1 access buffered \
         vs 2 unbuffered, identical traces"
    );
}

// ------------------------------------------------------------------------
// 7. Cache transparency: traces identical with and without the cache;
//    invalidate-on-store makes a load/store/load pattern miss twice.
// ------------------------------------------------------------------------

#[test]
fn criterion_07_cache_transparency() {
    let slots = 20_000u64;
    for seed in [0u64, 1, 2, 3, 4] {
        let image = fuzz::generate_image(seed, &FuzzConfig::default());
        let cached = small_cfg();
        let uncached = MemConfig {
            cache_enabled: false,
            ..small_cfg()
        };
        let mut ma = mk(cached, CoreModel::Timing, &image);
        let mut mb = mk(uncached, CoreModel::Timing, &image);
        let mut ta = String::new();
        let mut tb = String::new();
        ma.run(slots, |s, r| ta.push_str(&format_record(s, r)));
        mb.run(slots, |s, r| tb.push_str(&format_record(s, r)));
        assert_eq!(ta, tb, "seed {seed}: cache changed architectural behavior");
    }

    // Load / store / load on one line: fill, invalidate, miss again.
    let mut mem = MemorySystem::new(small_cfg());
    let addr = RAM_BASE + 0x100;
    mem.read(addr, 4).unwrap();
    assert_eq!((mem.cache.accesses, mem.cache.hits), (1, 0));
    mem.read(addr, 4).unwrap();
    assert_eq!((mem.cache.accesses, mem.cache.hits), (2, 1));
    mem.write(addr + 8, 4, 0xdead_beef).unwrap(); // same line
    mem.read(addr, 4).unwrap();
    assert_eq!(
        (mem.cache.accesses, mem.cache.hits),
        (3, 1),
        "store must invalidate, not update, the line"
    );
    println!("PASS criterion 7: traces cache-independent over 5 seeds; store invalidates its line");
}

// ------------------------------------------------------------------------
// 8. Atomics vs plain read-modify-write, untranslated and under Sv32.
// ------------------------------------------------------------------------

/// Body exercising every AMO plus the three LR/SC scenarios against
/// scratch memory at `base`. Results land in x10..x26.
fn atomic_body(base: u32) -> Vec<u32> {
    let mut a = Asm::new();
    a.li(16, base);
    a.li(5, 0x0000_1234); // operand
    let ops: [fn(u32, u32, u32) -> u32; 9] = [
        encode::amoswap_w,
        encode::amoadd_w,
        encode::amoxor_w,
        encode::amoand_w,
        encode::amoor_w,
        encode::amomin_w,
        encode::amomax_w,
        encode::amominu_w,
        encode::amomaxu_w,
    ];
    for (i, op) in ops.iter().enumerate() {
        a.emit(encode::addi(28, 16, (i * 4) as i32));
        a.emit(op(AMO_RDS[i], 28, 5));
    }
    // LR/SC success.
    a.emit(encode::addi(28, 16, 64));
    a.emit(encode::lr_w(20, 28));
    a.emit(encode::sc_w(21, 28, 5));
    // SC without a reservation fails.
    a.emit(encode::sc_w(22, 28, 1));
    // An intervening store breaks the reservation.
    a.emit(encode::lr_w(23, 28));
    a.emit(encode::sw(16, 5, 96));
    a.emit(encode::sc_w(24, 28, 1));
    a.emit(encode::jal(0, 0));
    a.finish()
}

/// Result registers for the nine AMOs; x16 (the scratch base) is skipped.
const AMO_RDS: [u32; 9] = [10, 11, 12, 13, 14, 15, 17, 18, 19];

/// Expected results computed with plain Rust arithmetic.
fn atomic_expect(old: u32, operand: u32) -> [(u32, u32); 9] {
    let (o, p) = (old, operand);
    [
        (o, p),
        (o, o.wrapping_add(p)),
        (o, o ^ p),
        (o, o & p),
        (o, o | p),
        (o, (o as i32).min(p as i32) as u32),
        (o, (o as i32).max(p as i32) as u32),
        (o, o.min(p)),
        (o, o.max(p)),
    ]
}

fn check_atomics(m: &Machine, base_pa: u32, old: u32) {
    let expect = atomic_expect(old, 0x1234);
    for (i, (rd_val, mem_val)) in expect.iter().enumerate() {
        assert_eq!(m.st.gpr(AMO_RDS[i] as u8), *rd_val, "amo {i}: loaded value");
        assert_eq!(
            phys_read32(&m.mem, base_pa + i as u32 * 4),
            Some(*mem_val),
            "amo {i}: stored value"
        );
    }
    assert_eq!(m.st.gpr(20), old, "lr value");
    assert_eq!(m.st.gpr(21), 0, "sc after lr succeeds");
    assert_eq!(phys_read32(&m.mem, base_pa + 64), Some(0x1234));
    assert_eq!(m.st.gpr(22), 1, "sc without reservation fails");
    assert_eq!(m.st.gpr(24), 1, "sc after intervening store fails");
    assert_eq!(phys_read32(&m.mem, base_pa + 64), Some(0x1234), "failed scs left memory alone");
}

#[test]
fn criterion_08_atomic_suite() {
    let old = 0xfff0_4321u32; // negative as i32, exercises signed min/max
    let scratch_off = 0x8000u32;
    let mut seed_mem = vec![0u8; scratch_off as usize + 128];
    for i in 0..17 {
        let at = scratch_off as usize + i * 4;
        seed_mem[at..at + 4].copy_from_slice(&old.to_le_bytes());
    }

    // Untranslated: body runs in M-mode at the RAM base.
    let body = atomic_body(RAM_BASE + scratch_off);
    let mut image = seed_mem.clone();
    let code = words_to_bytes(&body);
    image[..code.len()].copy_from_slice(&code);
    for model in [CoreModel::Timing, CoreModel::Reference] {
        let mut m = mk(small_cfg(), model, &image);
        m.run(200, |_, _| {});
        check_atomics(&m, RAM_BASE + scratch_off, old);
    }

    // Translated: an M-mode stub installs an identity megapage and drops
    // to S-mode; the same body then runs on virtual addresses.
    let mut a = Asm::new();
    let root = RAM_BASE + 0x10000;
    a.li(1, root + (RAM_BASE >> 22) * 4);
    a.li(2, (RAM_BASE >> 12) << 10 | 0xcf); // V R W X A D
    a.emit(encode::sw(1, 2, 0));
    a.li(1, 1 << 31 | root >> 12);
    a.emit(encode::csrrw(0, csr::SATP as u32, 1));
    a.emit(encode::sfence_vma(0, 0));
    a.li(1, RAM_BASE + 0x500);
    a.emit(encode::csrrw(0, csr::MEPC as u32, 1));
    a.li(2, 1 << 11); // MPP = S
    a.emit(encode::csrrw(0, csr::MSTATUS as u32, 2));
    a.emit(encode::mret());
    let stub = a.finish();

    let mut image = vec![0u8; 0x11000];
    image[scratch_off as usize..scratch_off as usize + 128]
        .copy_from_slice(&seed_mem[scratch_off as usize..]);
    let stub_bytes = words_to_bytes(&stub);
    image[..stub_bytes.len()].copy_from_slice(&stub_bytes);
    let body_bytes = words_to_bytes(&atomic_body(RAM_BASE + scratch_off));
    image[0x500..0x500 + body_bytes.len()].copy_from_slice(&body_bytes);

    for model in [CoreModel::Timing, CoreModel::Reference] {
        let mut m = mk(small_cfg(), model, &image);
        m.run(200, |_, _| {});
        assert_eq!(m.st.mode, PrivMode::Supervisor, "stub must reach S-mode");
        check_atomics(&m, RAM_BASE + scratch_off, old);
    }
    println!("PASS criterion 8: 9 AMOs + 3 LR/SC scenarios match plain RMW, M-mode and Sv32");
}

// ------------------------------------------------------------------------
// 9. Checkpoint determinism: split runs equal the straight run.
// ------------------------------------------------------------------------

#[test]
fn criterion_09_checkpoint_split_runs() {
    let total = 100_000u64;
    let image = fuzz::generate_image(42, &FuzzConfig::default());
    let cfg = small_cfg();

    let mut straight = mk(cfg, CoreModel::Timing, &image);
    let mut full_trace = String::new();
    straight.run(total, |s, r| full_trace.push_str(&format_record(s, r)));
    let full_stats = stats::report(&straight);

    for k in [17_321u64, 50_000, 83_333] {
        let mut m = mk(cfg, CoreModel::Timing, &image);
        let mut trace = String::new();
        m.run(k, |s, r| trace.push_str(&format_record(s, r)));
        let snap = checkpoint::save(&m);
        drop(m);

        let mut m = checkpoint::restore(&snap, cfg, CoreModel::Timing, &[]).unwrap();
        assert_eq!(m.slot, k);
        m.run(total, |s, r| trace.push_str(&format_record(s, r)));
        assert_eq!(trace, full_trace, "split at {k}: trace differs");
        assert_eq!(stats::report(&m), full_stats, "split at {k}: stats differ");
    }
    println!("PASS criterion 9: 100k-slot run identical across 3 checkpoint splits");
}

// ------------------------------------------------------------------------
// 10. Supervisor demo: guest-installed page tables, a handled page fault,
//     a U-mode ECALL, and doorbell console output of an exact string.
// ------------------------------------------------------------------------

#[test]
fn criterion_10_supervisor_demo() {
    let start = Instant::now();
    const HANDLER: u32 = 0x200;
    const S_ENTRY: u32 = 0x300;
    const U_CODE: u32 = 0x380;
    const STRING: u32 = 0x400;
    const ROOT: u32 = 0x10000;
    const MSG: &[u8] = b"hello from sv32\n";

    // M-mode entry: trap vector, identity megapage for S, a U-visible
    // alias megapage at VA 0x0080_0000, then mret into S-mode.
    let mut m_entry = Asm::new();
    m_entry.li(1, RAM_BASE + HANDLER);
    m_entry.emit(encode::csrrw(0, csr::MTVEC as u32, 1));
    m_entry.li(2, RAM_BASE + ROOT + (RAM_BASE >> 22) * 4);
    m_entry.li(3, (RAM_BASE >> 12) << 10 | 0xcf); // V R W X A D
    m_entry.emit(encode::sw(2, 3, 0));
    m_entry.li(4, RAM_BASE + ROOT + 2 * 4); // vpn1 = 2
    m_entry.li(5, (RAM_BASE >> 12) << 10 | 0xdf); // + U
    m_entry.emit(encode::sw(4, 5, 0));
    m_entry.li(6, 1 << 31 | (RAM_BASE + ROOT) >> 12);
    m_entry.emit(encode::csrrw(0, csr::SATP as u32, 6));
    m_entry.emit(encode::sfence_vma(0, 0));
    m_entry.li(7, RAM_BASE + S_ENTRY);
    m_entry.emit(encode::csrrw(0, csr::MEPC as u32, 7));
    m_entry.li(9, 1 << 11); // MPP = S
    m_entry.emit(encode::csrrw(0, csr::MSTATUS as u32, 9));
    m_entry.emit(encode::mret());

    // M-mode trap handler: a load page fault maps the missing region and
    // retries; a U-mode ECALL prints the string via the doorbell and
    // powers off.
    let mut h = Asm::new();
    h.emit(encode::csrrs(30, csr::MCAUSE as u32, 0));
    h.emit(encode::addi(31, 0, 13));
    h.beq_to(30, 31, "pf");
    h.emit(encode::addi(31, 0, 8));
    h.beq_to(30, 31, "ecall");
    h.label("hang");
    h.jal_to(0, "hang");
    h.label("pf");
    h.li(28, RAM_BASE + ROOT + 4); // vpn1 = 1 (the faulting VA's slot)
    h.li(29, (RAM_BASE >> 12) << 10 | 0xcf);
    h.emit(encode::sw(28, 29, 0));
    h.emit(encode::sfence_vma(0, 0));
    h.emit(encode::mret()); // retry the faulting load
    h.label("ecall");
    h.li(5, 0x4000_0000); // console block, physical
    h.li(7, RAM_BASE + STRING);
    h.label("loop");
    h.emit(encode::lbu(6, 7, 0));
    h.beq_to(6, 0, "done");
    h.emit(encode::sw(5, 6, 0x18)); // DB_ARG0 = character
    h.emit(encode::addi(31, 0, 1));
    h.emit(encode::sw(5, 31, 0x0c)); // DB_REQ = console-tx cause
    h.emit(encode::addi(7, 7, 1));
    h.jal_to(0, "loop");
    h.label("done");
    h.li(28, 0x0010_0000);
    h.li(29, 0x5555);
    h.emit(encode::sw(28, 29, 0));
    h.label("off");
    h.jal_to(0, "off");
    let handler = h.finish();

    // S-mode: touch an unmapped VA (handled page fault), then sret to U.
    let mut s = Asm::new();
    s.li(10, 0x0040_0000); // vpn1 = 1, initially unmapped
    s.emit(encode::lw(11, 10, 0));
    s.li(12, 0x0080_0000 + U_CODE); // U alias of the code page
    s.emit(encode::csrrw(0, csr::SEPC as u32, 12));
    s.emit(encode::sret());
    let s_entry = s.finish();

    let u_code = vec![encode::ecall()];

    let mut image = vec![0u8; (ROOT + 0x1000) as usize];
    let mut place = |off: u32, ws: &[u32]| {
        let b = words_to_bytes(ws);
        image[off as usize..off as usize + b.len()].copy_from_slice(&b);
    };
    place(0, &m_entry.finish());
    place(HANDLER, &handler);
    place(S_ENTRY, &s_entry);
    place(U_CODE, &u_code);
    image[STRING as usize..STRING as usize + MSG.len()].copy_from_slice(MSG);

    let mut t = mk(small_cfg(), CoreModel::Timing, &image);
    let mut r = mk(small_cfg(), CoreModel::Reference, &image);
    let mut saw_page_fault = false;
    let mut saw_user_ecall = false;
    let outcome = run_lockstep(&mut t, &mut r, 20_000, |_, rec| {
        if let Some(trap) = rec.trap {
            saw_page_fault |= trap.code == TrapCause::LOAD_PAGE_FAULT && !trap.is_interrupt;
            saw_user_ecall |= trap.code == TrapCause::ECALL_U && !trap.is_interrupt;
        }
    });
    assert!(
        matches!(outcome, LockstepOutcome::Match(StopReason::Poweroff)),
        "demo did not power off cleanly: {outcome:?}"
    );
    assert!(saw_page_fault, "no load page fault was taken");
    assert!(saw_user_ecall, "no U-mode ecall was taken");
    assert_eq!(t.mem.devices.console.tx_out, MSG);
    assert_eq!(r.mem.devices.console.tx_out, MSG);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 5, "demo took {elapsed:?}");
    println!(
        "PASS criterion 10: supervisor demo printed {:?} with a handled page \
         fault and U-mode ecall in {elapsed:?}",
        String::from_utf8_lossy(MSG)
    );
}
