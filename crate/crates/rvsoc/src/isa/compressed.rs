//! Expansion of 16-bit compressed parcels into 32-bit standard encodings
//! (the CVT step's function). RV32C only; the floating-point compressed
//! loads/stores are rejected as illegal.

use super::decode::IllegalInstruction;
use super::encode;

fn bit(p: u16, n: u32) -> u32 {
    ((p >> n) & 1) as u32
}
fn bits(p: u16, hi: u32, lo: u32) -> u32 {
    ((p as u32) >> lo) & ((1 << (hi - lo + 1)) - 1)
}
fn sext(v: u32, width: u32) -> i32 {
    ((v << (32 - width)) as i32) >> (32 - width)
}

/// Expand a compressed parcel to the architecturally equivalent 32-bit
/// standard encoding. Hint encodings expand like any other; reserved and
/// undefined parcels (including all-zero) are illegal.
pub fn expand_compressed(parcel: u16) -> Result<u32, IllegalInstruction> {
    let p = parcel;
    let op = p & 0b11;
    let funct3 = bits(p, 15, 13);
    // x8-based register fields of the CIW/CL/CS/CB/CA formats.
    let rdp = 8 + bits(p, 4, 2);
    let rs1p = 8 + bits(p, 9, 7);
    // Full register fields of the CI/CR formats.
    let rd = bits(p, 11, 7);
    let rs2 = bits(p, 6, 2);
    match (op, funct3) {
        (0b00, 0b000) => {
            // C.ADDI4SPN; the all-zero parcel falls out here as illegal.
            let nzuimm = bits(p, 10, 7) << 6
                | bits(p, 12, 11) << 4
                | bit(p, 5) << 3
                | bit(p, 6) << 2;
            if nzuimm == 0 {
                return Err(IllegalInstruction);
            }
            Ok(encode::addi(rdp, 2, nzuimm as i32))
        }
        (0b00, 0b010) => {
            let off = bit(p, 5) << 6 | bits(p, 12, 10) << 3 | bit(p, 6) << 2;
            Ok(encode::lw(rdp, rs1p, off as i32))
        }
        (0b00, 0b110) => {
            let off = bit(p, 5) << 6 | bits(p, 12, 10) << 3 | bit(p, 6) << 2;
            Ok(encode::sw(rs1p, rdp, off as i32))
        }
        (0b01, 0b000) => {
            // C.ADDI / C.NOP (and the rd=x0 hints).
            let imm = sext(bit(p, 12) << 5 | bits(p, 6, 2), 6);
            Ok(encode::addi(rd, rd, imm))
        }
        (0b01, 0b001) => Ok(encode::jal(1, cj_offset(p))),
        (0b01, 0b010) => {
            let imm = sext(bit(p, 12) << 5 | bits(p, 6, 2), 6);
            Ok(encode::addi(rd, 0, imm))
        }
        (0b01, 0b011) => {
            if rd == 2 {
                // C.ADDI16SP
                let imm = sext(
                    bit(p, 12) << 9
                        | bits(p, 4, 3) << 7
                        | bit(p, 5) << 6
                        | bit(p, 2) << 5
                        | bit(p, 6) << 4,
                    10,
                );
                if imm == 0 {
                    return Err(IllegalInstruction);
                }
                Ok(encode::addi(2, 2, imm))
            } else {
                // C.LUI
                let imm6 = sext(bit(p, 12) << 5 | bits(p, 6, 2), 6);
                if imm6 == 0 {
                    return Err(IllegalInstruction);
                }
                Ok(encode::lui(rd, (imm6 as u32) & 0xfffff))
            }
        }
        (0b01, 0b100) => match bits(p, 11, 10) {
            0b00 | 0b01 => {
                let shamt = bit(p, 12) << 5 | bits(p, 6, 2);
                if shamt >= 32 {
                    return Err(IllegalInstruction);
                }
                if bits(p, 11, 10) == 0b00 {
                    Ok(encode::srli(rs1p, rs1p, shamt))
                } else {
                    Ok(encode::srai(rs1p, rs1p, shamt))
                }
            }
            0b10 => {
                let imm = sext(bit(p, 12) << 5 | bits(p, 6, 2), 6);
                Ok(encode::andi(rs1p, rs1p, imm))
            }
            _ => {
                if bit(p, 12) != 0 {
                    // C.SUBW/C.ADDW are RV64-only.
                    return Err(IllegalInstruction);
                }
                match bits(p, 6, 5) {
                    0b00 => Ok(encode::sub(rs1p, rs1p, rdp)),
                    0b01 => Ok(encode::xor(rs1p, rs1p, rdp)),
                    0b10 => Ok(encode::or(rs1p, rs1p, rdp)),
                    _ => Ok(encode::and(rs1p, rs1p, rdp)),
                }
            }
        },
        (0b01, 0b101) => Ok(encode::jal(0, cj_offset(p))),
        (0b01, 0b110) => Ok(encode::beq(rs1p, 0, cb_offset(p))),
        (0b01, 0b111) => Ok(encode::bne(rs1p, 0, cb_offset(p))),
        (0b10, 0b000) => {
            let shamt = bit(p, 12) << 5 | bits(p, 6, 2);
            if shamt >= 32 {
                return Err(IllegalInstruction);
            }
            Ok(encode::slli(rd, rd, shamt))
        }
        (0b10, 0b010) => {
            if rd == 0 {
                return Err(IllegalInstruction);
            }
            let off = bits(p, 3, 2) << 6 | bit(p, 12) << 5 | bits(p, 6, 4) << 2;
            Ok(encode::lw(rd, 2, off as i32))
        }
        (0b10, 0b100) => {
            if bit(p, 12) == 0 {
                if rs2 != 0 {
                    Ok(encode::add(rd, 0, rs2)) // C.MV
                } else if rd != 0 {
                    Ok(encode::jalr(0, rd, 0)) // C.JR
                } else {
                    Err(IllegalInstruction)
                }
            } else if rs2 != 0 {
                Ok(encode::add(rd, rd, rs2)) // C.ADD
            } else if rd != 0 {
                Ok(encode::jalr(1, rd, 0)) // C.JALR
            } else {
                Ok(encode::ebreak()) // C.EBREAK
            }
        }
        (0b10, 0b110) => {
            let off = bits(p, 8, 7) << 6 | bits(p, 12, 9) << 2;
            Ok(encode::sw(2, rs2, off as i32))
        }
        _ => Err(IllegalInstruction),
    }
}

fn cj_offset(p: u16) -> i32 {
    sext(
        bit(p, 12) << 11
            | bit(p, 8) << 10
            | bits(p, 10, 9) << 8
            | bit(p, 6) << 7
            | bit(p, 7) << 6
            | bit(p, 2) << 5
            | bit(p, 11) << 4
            | bits(p, 5, 3) << 1,
        12,
    )
}

fn cb_offset(p: u16) -> i32 {
    sext(
        bit(p, 12) << 8
            | bits(p, 6, 5) << 6
            | bit(p, 2) << 5
            | bits(p, 11, 10) << 3
            | bits(p, 4, 3) << 1,
        9,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{decode32, encode, parcel_length, ParcelLen};

    #[test]
    fn nop_expands_to_addi_x0() {
        assert_eq!(expand_compressed(0x0001), Ok(0x0000_0013));
    }

    #[test]
    fn all_zero_parcel_is_illegal() {
        assert_eq!(expand_compressed(0x0000), Err(IllegalInstruction));
    }

    #[test]
    fn c_li_a0_zero() {
        // c.li a0, 0
        assert_eq!(expand_compressed(0x4501), Ok(encode::addi(10, 0, 0)));
    }

    #[test]
    fn c_lui_negative() {
        // c.lui a0, 0x3f (imm6 = -1 maps to 0xfffff in the U field)
        assert_eq!(expand_compressed(0x757d), Ok(encode::lui(10, 0xfffff)));
    }

    #[test]
    fn known_expansions() {
        // c.addi4spn a0, sp, 4
        assert_eq!(expand_compressed(0x0048), Ok(encode::addi(10, 2, 4)));
        // c.lw a2, 8(a0)
        assert_eq!(expand_compressed(0x4510), Ok(encode::lw(12, 10, 8)));
        // c.sw a2, 8(a0)
        assert_eq!(expand_compressed(0xc510), Ok(encode::sw(10, 12, 8)));
        // c.addi a0, -1
        assert_eq!(expand_compressed(0x157d), Ok(encode::addi(10, 10, -1)));
        // c.addi16sp sp, -64
        assert_eq!(expand_compressed(0x7139), Ok(encode::addi(2, 2, -64)));
        // c.mv a0, a1
        assert_eq!(expand_compressed(0x852e), Ok(encode::add(10, 0, 11)));
        // c.add a0, a1
        assert_eq!(expand_compressed(0x952e), Ok(encode::add(10, 10, 11)));
        // c.jr ra
        assert_eq!(expand_compressed(0x8082), Ok(encode::jalr(0, 1, 0)));
        // c.jalr a0
        assert_eq!(expand_compressed(0x9502), Ok(encode::jalr(1, 10, 0)));
        // c.ebreak
        assert_eq!(expand_compressed(0x9002), Ok(encode::ebreak()));
        // c.slli a0, 3
        assert_eq!(expand_compressed(0x050e), Ok(encode::slli(10, 10, 3)));
        // c.srli a0, 3
        assert_eq!(expand_compressed(0x810d), Ok(encode::srli(10, 10, 3)));
        // c.srai a0, 3
        assert_eq!(expand_compressed(0x850d), Ok(encode::srai(10, 10, 3)));
        // c.andi a0, 5
        assert_eq!(expand_compressed(0x8915), Ok(encode::andi(10, 10, 5)));
        // c.sub a0, a1
        assert_eq!(expand_compressed(0x8d0d), Ok(encode::sub(10, 10, 11)));
        // c.lwsp a0, 8(sp)
        assert_eq!(expand_compressed(0x4522), Ok(encode::lw(10, 2, 8)));
        // c.swsp a0, 8(sp)
        assert_eq!(expand_compressed(0xc42a), Ok(encode::sw(2, 10, 8)));
        // c.j +16
        assert_eq!(expand_compressed(0xa801), Ok(encode::jal(0, 16)));
        // c.jal +16
        assert_eq!(expand_compressed(0x2801), Ok(encode::jal(1, 16)));
        // c.j +144 (imm bit 7 rides in inst bit 6)
        assert_eq!(expand_compressed(0xa841), Ok(encode::jal(0, 144)));
        // c.beqz a0, +8
        assert_eq!(expand_compressed(0xc501), Ok(encode::beq(10, 0, 8)));
        // c.bnez a0, -4
        assert_eq!(expand_compressed(0xfd75), Ok(encode::bne(10, 0, -4)));
    }

    #[test]
    fn fp_compressed_rejected() {
        // c.fld / c.flw / c.fsd / c.fsw and their SP forms are not in IMAC.
        for f3 in [0b001u16, 0b011, 0b101, 0b111] {
            assert_eq!(
                expand_compressed(f3 << 13 | 0b00),
                Err(IllegalInstruction)
            );
        }
        assert_eq!(expand_compressed(0b001 << 13 | 0b10), Err(IllegalInstruction));
    }

    // Exhaustive sweep: every 16-bit value that is a compressed parcel
    // either expands to a decodable 32-bit word or is illegal.
    #[test]
    fn exhaustive_expansion_decodes() {
        let mut valid = 0u32;
        for parcel in 0..=u16::MAX {
            if parcel_length(parcel) != ParcelLen::Half {
                continue;
            }
            if let Ok(word) = expand_compressed(parcel) {
                assert!(
                    decode32(word).is_ok(),
                    "parcel {parcel:#06x} expanded to undecodable {word:#010x}"
                );
                valid += 1;
            }
        }
        assert!(valid > 10_000, "suspiciously few valid parcels: {valid}");
    }
}
