//! Seeded random-program generation and the lockstep verification
//! campaign: every seed builds one self-contained guest image, runs it on
//! the timing core and the functional reference in lockstep, and reports
//! the first divergence. Seeds are independent, so the campaign is data
//! parallel; with the `parallel` feature it fans out over rayon, and a
//! sequential fallback is always available (also used as the benchmark
//! baseline).
//!
//! Generated programs are straight-line with short forward branches and
//! jumps, loads/stores confined to two scratch regions, an M-mode trap
//! handler that skips the faulting word, and an optional Sv32 variant
//! that drops to S-mode under an identity megapage before running the
//! same instruction mix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arch::csr;
use crate::firmware::reference_firmware;
use crate::isa::encode;
use crate::machine::{run_lockstep, CoreModel, LockstepOutcome, Machine};
use crate::mem::{MemConfig, RAM_BASE};

/// Layout of the generated image (byte offsets from the RAM base).
const HANDLER_OFF: u32 = 0x400;
const BODY_OFF: u32 = 0x500;
const WORD_SCRATCH_OFF: u32 = 0x8000;
const CB_SCRATCH_OFF: u32 = 0xa000;
const PT_ROOT_OFF: u32 = 0x10000;
const RAM_SIZE: u32 = 1 << 20;

/// Registers the generator may write. Excluded: x0, x2 (kept as a stable
/// stack pointer), x8/x16 (scratch base pointers), x28/x29 (address and
/// jump temporaries), x30/x31 (reserved for the trap handler).
const RD_POOL: &[u32] = &[
    1, 3, 4, 5, 6, 7, 9, 10, 11, 12, 13, 14, 15, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27,
];
/// Compressed three-bit register fields that are also writable.
const CRD_POOL: &[u32] = &[9, 10, 11, 12, 13, 14, 15];

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    /// Lockstep retirement slots to run per seed.
    pub slots: u64,
    /// Instructions to generate in the body.
    pub insts: usize,
    /// Run the body in S-mode under an identity-mapped 4MB megapage.
    pub translated: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            slots: 2_000,
            insts: 400,
            translated: false,
        }
    }
}

// ---- compressed parcel builders (only the subset the generator emits) ----

fn c_li(rd: u32, imm: i32) -> u16 {
    let v = imm as u32;
    (0b010 << 13 | (v >> 5 & 1) << 12 | rd << 7 | (v & 0x1f) << 2 | 0b01) as u16
}
fn c_addi(rd: u32, imm: i32) -> u16 {
    let v = imm as u32;
    ((v >> 5 & 1) << 12 | rd << 7 | (v & 0x1f) << 2 | 0b01) as u16
}
fn c_mv(rd: u32, rs2: u32) -> u16 {
    (0b100 << 13 | rd << 7 | rs2 << 2 | 0b10) as u16
}
fn c_add(rd: u32, rs2: u32) -> u16 {
    (0b100 << 13 | 1 << 12 | rd << 7 | rs2 << 2 | 0b10) as u16
}
fn c_slli(rd: u32, shamt: u32) -> u16 {
    (0b000 << 13 | (shamt >> 5) << 12 | rd << 7 | (shamt & 0x1f) << 2 | 0b10) as u16
}
fn c_srli(rdp: u32, shamt: u32) -> u16 {
    (0b100 << 13 | (shamt >> 5) << 12 | 0b00 << 10 | (rdp - 8) << 7 | (shamt & 0x1f) << 2 | 0b01)
        as u16
}
fn c_srai(rdp: u32, shamt: u32) -> u16 {
    (0b100 << 13 | (shamt >> 5) << 12 | 0b01 << 10 | (rdp - 8) << 7 | (shamt & 0x1f) << 2 | 0b01)
        as u16
}
fn c_andi(rdp: u32, imm: i32) -> u16 {
    let v = imm as u32;
    (0b100 << 13 | (v >> 5 & 1) << 12 | 0b10 << 10 | (rdp - 8) << 7 | (v & 0x1f) << 2 | 0b01)
        as u16
}
fn c_lw(rdp: u32, rs1p: u32, off: u32) -> u16 {
    (0b010 << 13
        | (off >> 3 & 7) << 10
        | (rs1p - 8) << 7
        | (off >> 2 & 1) << 6
        | (off >> 6 & 1) << 5
        | (rdp - 8) << 2) as u16
}
fn c_sw(rs2p: u32, rs1p: u32, off: u32) -> u16 {
    (0b110 << 13
        | (off >> 3 & 7) << 10
        | (rs1p - 8) << 7
        | (off >> 2 & 1) << 6
        | (off >> 6 & 1) << 5
        | (rs2p - 8) << 2) as u16
}

// ---- body generation ----

enum Item {
    /// Pre-encoded bytes (one or more whole instructions).
    Fixed(Vec<u8>),
    /// Forward conditional branch over `skip` following items.
    Branch { funct3: u32, rs1: u32, rs2: u32, skip: usize },
    /// Forward jump over `skip` following items.
    Jal { rd: u32, skip: usize },
    /// auipc x29 + jalr pair jumping over `skip` following items.
    Jalr { skip: usize },
}

impl Item {
    fn len(&self) -> usize {
        match self {
            Item::Fixed(b) => b.len(),
            Item::Branch { .. } | Item::Jal { .. } => 4,
            Item::Jalr { .. } => 8,
        }
    }
}

fn words(ws: &[u32]) -> Item {
    Item::Fixed(ws.iter().flat_map(|w| w.to_le_bytes()).collect())
}

fn half(h: u16) -> Item {
    Item::Fixed(h.to_le_bytes().to_vec())
}

fn pick(rng: &mut ChaCha8Rng, pool: &[u32]) -> u32 {
    pool[rng.gen_range(0..pool.len())]
}

fn gen_item(rng: &mut ChaCha8Rng) -> Item {
    let any = |rng: &mut ChaCha8Rng| rng.gen_range(0u32..32);
    let rd = |rng: &mut ChaCha8Rng| pick(rng, RD_POOL);
    match rng.gen_range(0u32..100) {
        0..=34 => {
            // ALU immediate.
            let d = rd(rng);
            let s = any(rng);
            words(&[match rng.gen_range(0u32..9) {
                0 => encode::addi(d, s, rng.gen_range(-2048..2048)),
                1 => encode::slti(d, s, rng.gen_range(-2048..2048)),
                2 => encode::sltiu(d, s, rng.gen_range(-2048..2048)),
                3 => encode::xori(d, s, rng.gen_range(-2048..2048)),
                4 => encode::ori(d, s, rng.gen_range(-2048..2048)),
                5 => encode::andi(d, s, rng.gen_range(-2048..2048)),
                6 => encode::slli(d, s, rng.gen_range(0..32)),
                7 => encode::srli(d, s, rng.gen_range(0..32)),
                _ => encode::srai(d, s, rng.gen_range(0..32)),
            }])
        }
        35..=54 => {
            let d = rd(rng);
            let (a, b) = (any(rng), any(rng));
            words(&[match rng.gen_range(0u32..10) {
                0 => encode::add(d, a, b),
                1 => encode::sub(d, a, b),
                2 => encode::sll(d, a, b),
                3 => encode::slt(d, a, b),
                4 => encode::sltu(d, a, b),
                5 => encode::xor(d, a, b),
                6 => encode::srl(d, a, b),
                7 => encode::sra(d, a, b),
                8 => encode::or(d, a, b),
                _ => encode::and(d, a, b),
            }])
        }
        55..=61 => {
            let d = rd(rng);
            let (a, b) = (any(rng), any(rng));
            words(&[match rng.gen_range(0u32..8) {
                0 => encode::mul(d, a, b),
                1 => encode::mulh(d, a, b),
                2 => encode::mulhsu(d, a, b),
                3 => encode::mulhu(d, a, b),
                4 => encode::div(d, a, b),
                5 => encode::divu(d, a, b),
                6 => encode::rem(d, a, b),
                _ => encode::remu(d, a, b),
            }])
        }
        62..=71 => {
            // Load from the word scratch region (x16 base, aligned).
            let d = rd(rng);
            let (f, align) = match rng.gen_range(0u32..5) {
                0 => (0, 1),
                1 => (1, 2),
                2 => (2, 4),
                3 => (4, 1),
                _ => (5, 2),
            };
            let off = rng.gen_range(0..2048 / align) * align;
            words(&[encode::i_type(0x03, d, f, 16, off)])
        }
        72..=81 => {
            let s = any(rng);
            let (f, align) = match rng.gen_range(0u32..3) {
                0 => (0, 1),
                1 => (1, 2),
                _ => (2, 4),
            };
            let off = rng.gen_range(0..2048 / align) * align;
            words(&[encode::s_type(0x23, f, 16, s, off)])
        }
        82..=85 => {
            // Compressed arithmetic.
            half(match rng.gen_range(0u32..8) {
                0 => c_li(rd(rng), rng.gen_range(-32..32)),
                1 => c_addi(rd(rng), rng.gen_range(-32..32)),
                2 => c_mv(rd(rng), pick(rng, &RD_POOL[1..])),
                3 => c_add(rd(rng), pick(rng, &RD_POOL[1..])),
                4 => c_slli(rd(rng), rng.gen_range(1..32)),
                5 => c_srli(pick(rng, CRD_POOL), rng.gen_range(1..32)),
                6 => c_srai(pick(rng, CRD_POOL), rng.gen_range(1..32)),
                _ => c_andi(pick(rng, CRD_POOL), rng.gen_range(-32..32)),
            })
        }
        86..=88 => {
            // Compressed load/store against the x8 scratch base.
            let off = rng.gen_range(0u32..32) * 4;
            half(if rng.gen_bool(0.5) {
                c_lw(pick(rng, CRD_POOL), 8, off)
            } else {
                c_sw(pick(rng, CRD_POOL), 8, off)
            })
        }
        89..=92 => Item::Branch {
            funct3: [0, 1, 4, 5, 6, 7][rng.gen_range(0..6)],
            rs1: any(rng),
            rs2: any(rng),
            skip: rng.gen_range(1..=3),
        },
        93..=94 => Item::Jal {
            rd: if rng.gen_bool(0.5) { 0 } else { rd(rng) },
            skip: rng.gen_range(1..=3),
        },
        95 => Item::Jalr {
            skip: rng.gen_range(1..=3),
        },
        96 => words(&[encode::ecall()]),
        97 => {
            let d = rd(rng);
            words(&[if rng.gen_bool(0.5) {
                encode::csrrw(d, csr::MSCRATCH as u32, any(rng))
            } else {
                encode::csrrs(d, csr::MSCRATCH as u32, any(rng))
            }])
        }
        _ => {
            // Atomics on a random aligned scratch word via x28.
            let d = rd(rng);
            let s = any(rng);
            let off = rng.gen_range(0..512) * 4;
            let amo = match rng.gen_range(0u32..11) {
                0 => encode::lr_w(d, 28),
                1 => encode::sc_w(d, 28, s),
                2 => encode::amoswap_w(d, 28, s),
                3 => encode::amoadd_w(d, 28, s),
                4 => encode::amoxor_w(d, 28, s),
                5 => encode::amoand_w(d, 28, s),
                6 => encode::amoor_w(d, 28, s),
                7 => encode::amomin_w(d, 28, s),
                8 => encode::amomax_w(d, 28, s),
                9 => encode::amominu_w(d, 28, s),
                _ => encode::amomaxu_w(d, 28, s),
            };
            words(&[encode::addi(28, 16, off), amo])
        }
    }
}

fn assemble_body(items: &[Item]) -> Vec<u8> {
    // First pass: item start offsets (plus the end sentinel).
    let mut offs = Vec::with_capacity(items.len() + 1);
    let mut at = 0usize;
    for it in items {
        offs.push(at);
        at += it.len();
    }
    offs.push(at);

    let mut out = Vec::with_capacity(at + 4);
    for (i, it) in items.iter().enumerate() {
        let here = offs[i] as i32;
        let target = |skip: usize| offs[(i + 1 + skip).min(items.len())] as i32;
        match it {
            Item::Fixed(b) => out.extend_from_slice(b),
            Item::Branch {
                funct3,
                rs1,
                rs2,
                skip,
            } => {
                let w = encode::b_type(0x63, *funct3, *rs1, *rs2, target(*skip) - here);
                out.extend_from_slice(&w.to_le_bytes());
            }
            Item::Jal { rd, skip } => {
                let w = encode::jal(*rd, target(*skip) - here);
                out.extend_from_slice(&w.to_le_bytes());
            }
            Item::Jalr { skip } => {
                out.extend_from_slice(&encode::auipc(29, 0).to_le_bytes());
                out.extend_from_slice(
                    &encode::jalr(0, 29, target(*skip) - here).to_le_bytes(),
                );
            }
        }
    }
    // Terminator: spin in place until the slot budget runs out.
    out.extend_from_slice(&encode::jal(0, 0).to_le_bytes());
    out
}

/// Build the full guest image for one seed.
pub fn generate_image(seed: u64, cfg: &FuzzConfig) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut image = vec![0u8; PT_ROOT_OFF as usize + 0x1000];
    let emit_at = |image: &mut Vec<u8>, off: u32, ws: &[u32]| {
        for (i, w) in ws.iter().enumerate() {
            let p = off as usize + 4 * i;
            image[p..p + 4].copy_from_slice(&w.to_le_bytes());
        }
    };

    // Trap handler: mepc += 4, return.
    emit_at(
        &mut image,
        HANDLER_OFF,
        &[
            encode::csrrs(30, csr::MEPC as u32, 0),
            encode::addi(30, 30, 4),
            encode::csrrw(0, csr::MEPC as u32, 30),
            encode::mret(),
        ],
    );

    // Entry stub.
    let mut stub = Vec::new();
    stub.extend(encode::li(1, RAM_BASE + HANDLER_OFF));
    stub.push(encode::csrrw(0, csr::MTVEC as u32, 1));
    stub.extend(encode::li(16, RAM_BASE + WORD_SCRATCH_OFF));
    stub.extend(encode::li(8, RAM_BASE + CB_SCRATCH_OFF));
    for &r in RD_POOL {
        stub.extend(encode::li(r, rng.gen()));
    }
    if cfg.translated {
        // Identity megapage for the 4MB at the RAM base, then drop to S.
        let pte = (RAM_BASE >> 12) << 10 | 0xcf; // V R W X A D
        stub.extend(encode::li(
            1,
            RAM_BASE + PT_ROOT_OFF + (RAM_BASE >> 22) * 4,
        ));
        stub.extend(encode::li(2, pte));
        stub.push(encode::sw(1, 2, 0));
        stub.extend(encode::li(1, 1 << 31 | (RAM_BASE + PT_ROOT_OFF) >> 12));
        stub.push(encode::csrrw(0, csr::SATP as u32, 1));
        stub.push(encode::sfence_vma(0, 0));
        stub.extend(encode::li(1, RAM_BASE + BODY_OFF));
        stub.push(encode::csrrw(0, csr::MEPC as u32, 1));
        stub.extend(encode::li(2, 1 << 11)); // MPP = S
        stub.push(encode::csrrw(0, csr::MSTATUS as u32, 2));
        stub.push(encode::mret());
    } else {
        let from = 4 * stub.len() as i32;
        stub.push(encode::jal(0, BODY_OFF as i32 - from));
    }
    assert!(4 * stub.len() <= HANDLER_OFF as usize, "entry stub overflow");
    emit_at(&mut image, 0, &stub);

    // Body.
    let items: Vec<Item> = (0..cfg.insts).map(|_| gen_item(&mut rng)).collect();
    let body = assemble_body(&items);
    assert!(BODY_OFF as usize + body.len() <= WORD_SCRATCH_OFF as usize);
    image[BODY_OFF as usize..BODY_OFF as usize + body.len()].copy_from_slice(&body);

    // Pre-fill the scratch regions so loads see varied data.
    for i in 0..0x1000u32 {
        image[(WORD_SCRATCH_OFF + i) as usize] = rng.gen();
    }
    for i in 0..0x100u32 {
        image[(CB_SCRATCH_OFF + i) as usize] = rng.gen();
    }
    image
}

fn mem_cfg() -> MemConfig {
    MemConfig {
        ram_size: RAM_SIZE,
        disk_size: 1 << 16,
        ..MemConfig::default()
    }
}

/// Run one seed in lockstep. Ok carries the retired instruction count when
/// the two cores agreed for the whole slot budget.
pub fn run_seed(seed: u64, cfg: &FuzzConfig) -> Result<u64, String> {
    let image = generate_image(seed, cfg);
    let fw = reference_firmware();
    let mut t = Machine::new(mem_cfg(), &fw, CoreModel::Timing)
        .map_err(|e| e.to_string())?;
    let mut r = Machine::new(mem_cfg(), &fw, CoreModel::Reference)
        .map_err(|e| e.to_string())?;
    t.load_ram(0, &image).map_err(|e| e.to_string())?;
    r.load_ram(0, &image).map_err(|e| e.to_string())?;
    match run_lockstep(&mut t, &mut r, cfg.slots, |_, _| {}) {
        LockstepOutcome::Match(_) => Ok(r.st.instret),
        LockstepOutcome::Diverged(d) => Err(format!("seed {seed}: {d}")),
        LockstepOutcome::Fault(f) => Err(format!("seed {seed}: host fault: {f}")),
    }
}

/// Sequential campaign; also the benchmark baseline.
pub fn run_campaign_sequential(seeds: &[u64], cfg: &FuzzConfig) -> Vec<(u64, Result<u64, String>)> {
    seeds.iter().map(|&s| (s, run_seed(s, cfg))).collect()
}

/// Data-parallel campaign over rayon.
#[cfg(feature = "parallel")]
pub fn run_campaign_parallel(seeds: &[u64], cfg: &FuzzConfig) -> Vec<(u64, Result<u64, String>)> {
    use rayon::prelude::*;
    seeds.par_iter().map(|&s| (s, run_seed(s, cfg))).collect()
}

/// Campaign entry point: parallel when compiled in, sequential otherwise.
pub fn run_campaign(seeds: &[u64], cfg: &FuzzConfig) -> Vec<(u64, Result<u64, String>)> {
    #[cfg(feature = "parallel")]
    {
        run_campaign_parallel(seeds, cfg)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_campaign_sequential(seeds, cfg)
    }
}
