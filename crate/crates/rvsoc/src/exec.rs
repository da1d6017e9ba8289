//! Pure data-path operations shared by the multi-cycle core, the
//! functional reference and RVuc: ALU, multiply/divide, branch compare,
//! AMO combine and load extension. No state, no memory, no traps.

use crate::isa::Funct;

pub fn alu(funct: Funct, a: u32, b: u32) -> u32 {
    match funct {
        Funct::Add => a.wrapping_add(b),
        Funct::Sub => a.wrapping_sub(b),
        Funct::Sll => a << (b & 31),
        Funct::Slt => ((a as i32) < (b as i32)) as u32,
        Funct::Sltu => (a < b) as u32,
        Funct::Xor => a ^ b,
        Funct::Srl => a >> (b & 31),
        Funct::Sra => ((a as i32) >> (b & 31)) as u32,
        Funct::Or => a | b,
        Funct::And => a & b,
        _ => unreachable!("non-ALU funct {funct:?}"),
    }
}

/// M-extension semantics, including the division edge cases: x/0 = -1 with
/// remainder x, and INT_MIN/-1 = INT_MIN with remainder 0.
pub fn muldiv(funct: Funct, a: u32, b: u32) -> u32 {
    let (sa, sb) = (a as i32, b as i32);
    match funct {
        Funct::Mul => a.wrapping_mul(b),
        Funct::Mulh => ((sa as i64 * sb as i64) >> 32) as u32,
        Funct::Mulhsu => ((sa as i64 * b as i64) >> 32) as u32,
        Funct::Mulhu => ((a as u64 * b as u64) >> 32) as u32,
        Funct::Div => {
            if sb == 0 {
                u32::MAX
            } else {
                sa.wrapping_div(sb) as u32
            }
        }
        Funct::Divu => {
            if b == 0 {
                u32::MAX
            } else {
                a / b
            }
        }
        Funct::Rem => {
            if sb == 0 {
                a
            } else {
                sa.wrapping_rem(sb) as u32
            }
        }
        Funct::Remu => {
            if b == 0 {
                a
            } else {
                a % b
            }
        }
        _ => unreachable!("non-muldiv funct {funct:?}"),
    }
}

pub fn branch_taken(funct: Funct, a: u32, b: u32) -> bool {
    match funct {
        Funct::Beq => a == b,
        Funct::Bne => a != b,
        Funct::Blt => (a as i32) < (b as i32),
        Funct::Bge => (a as i32) >= (b as i32),
        Funct::Bltu => a < b,
        Funct::Bgeu => a >= b,
        _ => unreachable!("non-branch funct {funct:?}"),
    }
}

/// New memory value for an AMO given the old value and the source operand.
pub fn amo(funct: Funct, old: u32, src: u32) -> u32 {
    match funct {
        Funct::AmoSwap => src,
        Funct::AmoAdd => old.wrapping_add(src),
        Funct::AmoXor => old ^ src,
        Funct::AmoAnd => old & src,
        Funct::AmoOr => old | src,
        Funct::AmoMin => (old as i32).min(src as i32) as u32,
        Funct::AmoMax => (old as i32).max(src as i32) as u32,
        Funct::AmoMinu => old.min(src),
        Funct::AmoMaxu => old.max(src),
        _ => unreachable!("non-AMO funct {funct:?}"),
    }
}

/// Access width in bytes for a load or store funct.
pub fn mem_width(funct: Funct) -> u32 {
    match funct {
        Funct::Lb | Funct::Lbu | Funct::Sb => 1,
        Funct::Lh | Funct::Lhu | Funct::Sh => 2,
        _ => 4,
    }
}

/// Sign/zero extension of a just-loaded value.
pub fn load_extend(funct: Funct, v: u32) -> u32 {
    match funct {
        Funct::Lb => v as u8 as i8 as i32 as u32,
        Funct::Lh => v as u16 as i16 as i32 as u32,
        Funct::Lbu => v & 0xff,
        Funct::Lhu => v & 0xffff,
        _ => v,
    }
}
