//! 32-bit instruction decoder and parcel-length discrimination.

use super::{DecodedInst, Funct, InstClass, ParcelLen};

/// Decode failure: the encoding is reserved or undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IllegalInstruction;

/// A 16-bit parcel whose low two bits are `11` starts a 32-bit instruction.
pub fn parcel_length(low16: u16) -> ParcelLen {
    if low16 & 0b11 == 0b11 {
        ParcelLen::Word
    } else {
        ParcelLen::Half
    }
}

fn rd(w: u32) -> u8 {
    ((w >> 7) & 0x1f) as u8
}
fn rs1(w: u32) -> u8 {
    ((w >> 15) & 0x1f) as u8
}
fn rs2(w: u32) -> u8 {
    ((w >> 20) & 0x1f) as u8
}
fn funct3(w: u32) -> u32 {
    (w >> 12) & 0x7
}
fn funct7(w: u32) -> u32 {
    w >> 25
}

fn imm_i(w: u32) -> i32 {
    (w as i32) >> 20
}
fn imm_s(w: u32) -> i32 {
    ((w as i32) >> 25 << 5) | ((w >> 7) & 0x1f) as i32
}
fn imm_b(w: u32) -> i32 {
    ((w as i32) >> 31 << 12)
        | (((w >> 7) & 1) << 11) as i32
        | (((w >> 25) & 0x3f) << 5) as i32
        | (((w >> 8) & 0xf) << 1) as i32
}
fn imm_u(w: u32) -> i32 {
    (w & 0xffff_f000) as i32
}
fn imm_j(w: u32) -> i32 {
    ((w as i32) >> 31 << 20)
        | (((w >> 12) & 0xff) << 12) as i32
        | (((w >> 20) & 1) << 11) as i32
        | (((w >> 21) & 0x3ff) << 1) as i32
}

fn inst(
    class: InstClass,
    funct: Funct,
    rd: u8,
    rs1: u8,
    rs2: u8,
    imm: i32,
    raw: u32,
) -> DecodedInst {
    DecodedInst {
        class,
        funct,
        rd,
        rs1,
        rs2,
        imm,
        was_compressed: false,
        raw,
    }
}

/// Decode a 32-bit standard encoding into the normalized record.
///
/// Covers RV32I, M, A (AMO + LR/SC), Zicsr, the privileged returns and
/// FENCE-family placeholders. Reserved or undefined encodings, including
/// the all-zero word, fail with [`IllegalInstruction`].
pub fn decode32(w: u32) -> Result<DecodedInst, IllegalInstruction> {
    let opcode = w & 0x7f;
    let f3 = funct3(w);
    let f7 = funct7(w);
    match opcode {
        0x37 => Ok(inst(InstClass::Lui, Funct::None, rd(w), 0, 0, imm_u(w), w)),
        0x17 => Ok(inst(InstClass::Auipc, Funct::None, rd(w), 0, 0, imm_u(w), w)),
        0x6f => Ok(inst(InstClass::Jal, Funct::None, rd(w), 0, 0, imm_j(w), w)),
        0x67 if f3 == 0 => Ok(inst(
            InstClass::Jalr,
            Funct::None,
            rd(w),
            rs1(w),
            0,
            imm_i(w),
            w,
        )),
        0x63 => {
            let funct = match f3 {
                0 => Funct::Beq,
                1 => Funct::Bne,
                4 => Funct::Blt,
                5 => Funct::Bge,
                6 => Funct::Bltu,
                7 => Funct::Bgeu,
                _ => return Err(IllegalInstruction),
            };
            Ok(inst(
                InstClass::Branch,
                funct,
                0,
                rs1(w),
                rs2(w),
                imm_b(w),
                w,
            ))
        }
        0x03 => {
            let funct = match f3 {
                0 => Funct::Lb,
                1 => Funct::Lh,
                2 => Funct::Lw,
                4 => Funct::Lbu,
                5 => Funct::Lhu,
                _ => return Err(IllegalInstruction),
            };
            Ok(inst(InstClass::Load, funct, rd(w), rs1(w), 0, imm_i(w), w))
        }
        0x23 => {
            let funct = match f3 {
                0 => Funct::Sb,
                1 => Funct::Sh,
                2 => Funct::Sw,
                _ => return Err(IllegalInstruction),
            };
            Ok(inst(
                InstClass::Store,
                funct,
                0,
                rs1(w),
                rs2(w),
                imm_s(w),
                w,
            ))
        }
        0x13 => {
            let funct = match f3 {
                0 => Funct::Add,
                2 => Funct::Slt,
                3 => Funct::Sltu,
                4 => Funct::Xor,
                6 => Funct::Or,
                7 => Funct::And,
                1 if f7 == 0x00 => Funct::Sll,
                5 if f7 == 0x00 => Funct::Srl,
                5 if f7 == 0x20 => Funct::Sra,
                _ => return Err(IllegalInstruction),
            };
            // Shift immediates carry the 5-bit shamt in the rs2 field.
            let imm = if matches!(funct, Funct::Sll | Funct::Srl | Funct::Sra) {
                rs2(w) as i32
            } else {
                imm_i(w)
            };
            Ok(inst(InstClass::AluImm, funct, rd(w), rs1(w), 0, imm, w))
        }
        0x33 => {
            let (class, funct) = match (f7, f3) {
                (0x00, 0) => (InstClass::Alu, Funct::Add),
                (0x20, 0) => (InstClass::Alu, Funct::Sub),
                (0x00, 1) => (InstClass::Alu, Funct::Sll),
                (0x00, 2) => (InstClass::Alu, Funct::Slt),
                (0x00, 3) => (InstClass::Alu, Funct::Sltu),
                (0x00, 4) => (InstClass::Alu, Funct::Xor),
                (0x00, 5) => (InstClass::Alu, Funct::Srl),
                (0x20, 5) => (InstClass::Alu, Funct::Sra),
                (0x00, 6) => (InstClass::Alu, Funct::Or),
                (0x00, 7) => (InstClass::Alu, Funct::And),
                (0x01, 0) => (InstClass::MulDiv, Funct::Mul),
                (0x01, 1) => (InstClass::MulDiv, Funct::Mulh),
                (0x01, 2) => (InstClass::MulDiv, Funct::Mulhsu),
                (0x01, 3) => (InstClass::MulDiv, Funct::Mulhu),
                (0x01, 4) => (InstClass::MulDiv, Funct::Div),
                (0x01, 5) => (InstClass::MulDiv, Funct::Divu),
                (0x01, 6) => (InstClass::MulDiv, Funct::Rem),
                (0x01, 7) => (InstClass::MulDiv, Funct::Remu),
                _ => return Err(IllegalInstruction),
            };
            Ok(inst(class, funct, rd(w), rs1(w), rs2(w), 0, w))
        }
        0x0f => match f3 {
            0 => Ok(inst(InstClass::Fence, Funct::Fence, 0, 0, 0, 0, w)),
            1 => Ok(inst(InstClass::Fence, Funct::FenceI, 0, 0, 0, 0, w)),
            _ => Err(IllegalInstruction),
        },
        0x2f if f3 == 2 => {
            let funct5 = f7 >> 2;
            let funct = match funct5 {
                0x02 if rs2(w) == 0 => Funct::Lr,
                0x03 => Funct::Sc,
                0x01 => Funct::AmoSwap,
                0x00 => Funct::AmoAdd,
                0x04 => Funct::AmoXor,
                0x0c => Funct::AmoAnd,
                0x08 => Funct::AmoOr,
                0x10 => Funct::AmoMin,
                0x14 => Funct::AmoMax,
                0x18 => Funct::AmoMinu,
                0x1c => Funct::AmoMaxu,
                _ => return Err(IllegalInstruction),
            };
            let class = if matches!(funct, Funct::Lr | Funct::Sc) {
                InstClass::LrSc
            } else {
                InstClass::Amo
            };
            Ok(inst(class, funct, rd(w), rs1(w), rs2(w), 0, w))
        }
        0x73 => match f3 {
            0 => {
                if f7 == 0x09 && rd(w) == 0 {
                    return Ok(inst(
                        InstClass::System,
                        Funct::SfenceVma,
                        0,
                        rs1(w),
                        rs2(w),
                        0,
                        w,
                    ));
                }
                if rd(w) != 0 || rs1(w) != 0 {
                    return Err(IllegalInstruction);
                }
                let funct = match (w >> 20) & 0xfff {
                    0x000 => Funct::Ecall,
                    0x001 => Funct::Ebreak,
                    0x302 => Funct::Mret,
                    0x102 => Funct::Sret,
                    0x105 => Funct::Wfi,
                    _ => return Err(IllegalInstruction),
                };
                Ok(inst(InstClass::System, funct, 0, 0, 0, 0, w))
            }
            1 | 2 | 3 | 5 | 6 | 7 => {
                let funct = match f3 {
                    1 => Funct::Csrrw,
                    2 => Funct::Csrrs,
                    3 => Funct::Csrrc,
                    5 => Funct::Csrrwi,
                    6 => Funct::Csrrsi,
                    _ => Funct::Csrrci,
                };
                // The CSR address rides in imm; rs1 doubles as uimm for
                // the immediate forms.
                Ok(inst(
                    InstClass::Csr,
                    funct,
                    rd(w),
                    rs1(w),
                    0,
                    ((w >> 20) & 0xfff) as i32,
                    w,
                ))
            }
            _ => Err(IllegalInstruction),
        },
        _ => Err(IllegalInstruction),
    }
}
