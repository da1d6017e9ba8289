//! 32-bit instruction encoders. Used by the compressed expander, the fuzz
//! program generator and the hand-assembled test/demo programs.

pub fn r_type(opcode: u32, rd: u32, funct3: u32, rs1: u32, rs2: u32, funct7: u32) -> u32 {
    (funct7 & 0x7f) << 25
        | (rs2 & 0x1f) << 20
        | (rs1 & 0x1f) << 15
        | (funct3 & 0x7) << 12
        | (rd & 0x1f) << 7
        | (opcode & 0x7f)
}

pub fn i_type(opcode: u32, rd: u32, funct3: u32, rs1: u32, imm: i32) -> u32 {
    ((imm as u32) & 0xfff) << 20
        | (rs1 & 0x1f) << 15
        | (funct3 & 0x7) << 12
        | (rd & 0x1f) << 7
        | (opcode & 0x7f)
}

pub fn s_type(opcode: u32, funct3: u32, rs1: u32, rs2: u32, imm: i32) -> u32 {
    let v = imm as u32;
    ((v >> 5) & 0x7f) << 25
        | (rs2 & 0x1f) << 20
        | (rs1 & 0x1f) << 15
        | (funct3 & 0x7) << 12
        | (v & 0x1f) << 7
        | (opcode & 0x7f)
}

pub fn b_type(opcode: u32, funct3: u32, rs1: u32, rs2: u32, imm: i32) -> u32 {
    let v = imm as u32;
    ((v >> 12) & 1) << 31
        | ((v >> 5) & 0x3f) << 25
        | (rs2 & 0x1f) << 20
        | (rs1 & 0x1f) << 15
        | (funct3 & 0x7) << 12
        | ((v >> 1) & 0xf) << 8
        | ((v >> 11) & 1) << 7
        | (opcode & 0x7f)
}

pub fn u_type(opcode: u32, rd: u32, imm_31_12: u32) -> u32 {
    (imm_31_12 & 0xfffff) << 12 | (rd & 0x1f) << 7 | (opcode & 0x7f)
}

pub fn j_type(opcode: u32, rd: u32, imm: i32) -> u32 {
    let v = imm as u32;
    ((v >> 20) & 1) << 31
        | ((v >> 1) & 0x3ff) << 21
        | ((v >> 11) & 1) << 20
        | ((v >> 12) & 0xff) << 12
        | (rd & 0x1f) << 7
        | (opcode & 0x7f)
}

// RV32I
pub fn lui(rd: u32, imm_31_12: u32) -> u32 {
    u_type(0x37, rd, imm_31_12)
}
pub fn auipc(rd: u32, imm_31_12: u32) -> u32 {
    u_type(0x17, rd, imm_31_12)
}
pub fn jal(rd: u32, offset: i32) -> u32 {
    j_type(0x6f, rd, offset)
}
pub fn jalr(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x67, rd, 0, rs1, offset)
}
pub fn beq(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 0, rs1, rs2, offset)
}
pub fn bne(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 1, rs1, rs2, offset)
}
pub fn blt(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 4, rs1, rs2, offset)
}
pub fn bge(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 5, rs1, rs2, offset)
}
pub fn bltu(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 6, rs1, rs2, offset)
}
pub fn bgeu(rs1: u32, rs2: u32, offset: i32) -> u32 {
    b_type(0x63, 7, rs1, rs2, offset)
}
pub fn lb(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x03, rd, 0, rs1, offset)
}
pub fn lh(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x03, rd, 1, rs1, offset)
}
pub fn lw(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x03, rd, 2, rs1, offset)
}
pub fn lbu(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x03, rd, 4, rs1, offset)
}
pub fn lhu(rd: u32, rs1: u32, offset: i32) -> u32 {
    i_type(0x03, rd, 5, rs1, offset)
}
pub fn sb(rs1: u32, rs2: u32, offset: i32) -> u32 {
    s_type(0x23, 0, rs1, rs2, offset)
}
pub fn sh(rs1: u32, rs2: u32, offset: i32) -> u32 {
    s_type(0x23, 1, rs1, rs2, offset)
}
pub fn sw(rs1: u32, rs2: u32, offset: i32) -> u32 {
    s_type(0x23, 2, rs1, rs2, offset)
}
pub fn addi(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 0, rs1, imm)
}
pub fn slti(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 2, rs1, imm)
}
pub fn sltiu(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 3, rs1, imm)
}
pub fn xori(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 4, rs1, imm)
}
pub fn ori(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 6, rs1, imm)
}
pub fn andi(rd: u32, rs1: u32, imm: i32) -> u32 {
    i_type(0x13, rd, 7, rs1, imm)
}
pub fn slli(rd: u32, rs1: u32, shamt: u32) -> u32 {
    r_type(0x13, rd, 1, rs1, shamt, 0x00)
}
pub fn srli(rd: u32, rs1: u32, shamt: u32) -> u32 {
    r_type(0x13, rd, 5, rs1, shamt, 0x00)
}
pub fn srai(rd: u32, rs1: u32, shamt: u32) -> u32 {
    r_type(0x13, rd, 5, rs1, shamt, 0x20)
}
pub fn add(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 0, rs1, rs2, 0x00)
}
pub fn sub(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 0, rs1, rs2, 0x20)
}
pub fn sll(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 1, rs1, rs2, 0x00)
}
pub fn slt(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 2, rs1, rs2, 0x00)
}
pub fn sltu(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 3, rs1, rs2, 0x00)
}
pub fn xor(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 4, rs1, rs2, 0x00)
}
pub fn srl(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 5, rs1, rs2, 0x00)
}
pub fn sra(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 5, rs1, rs2, 0x20)
}
pub fn or(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 6, rs1, rs2, 0x00)
}
pub fn and(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 7, rs1, rs2, 0x00)
}
pub fn fence() -> u32 {
    i_type(0x0f, 0, 0, 0, 0)
}
pub fn ecall() -> u32 {
    0x0000_0073
}
pub fn ebreak() -> u32 {
    0x0010_0073
}

// M extension
pub fn mul(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 0, rs1, rs2, 0x01)
}
pub fn mulh(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 1, rs1, rs2, 0x01)
}
pub fn mulhsu(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 2, rs1, rs2, 0x01)
}
pub fn mulhu(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 3, rs1, rs2, 0x01)
}
pub fn div(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 4, rs1, rs2, 0x01)
}
pub fn divu(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 5, rs1, rs2, 0x01)
}
pub fn rem(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 6, rs1, rs2, 0x01)
}
pub fn remu(rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x33, rd, 7, rs1, rs2, 0x01)
}

// A extension (aq/rl left clear)
fn amo(funct5: u32, rd: u32, rs1: u32, rs2: u32) -> u32 {
    r_type(0x2f, rd, 2, rs1, rs2, funct5 << 2)
}
pub fn lr_w(rd: u32, rs1: u32) -> u32 {
    amo(0x02, rd, rs1, 0)
}
pub fn sc_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x03, rd, rs1, rs2)
}
pub fn amoswap_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x01, rd, rs1, rs2)
}
pub fn amoadd_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x00, rd, rs1, rs2)
}
pub fn amoxor_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x04, rd, rs1, rs2)
}
pub fn amoand_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x0c, rd, rs1, rs2)
}
pub fn amoor_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x08, rd, rs1, rs2)
}
pub fn amomin_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x10, rd, rs1, rs2)
}
pub fn amomax_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x14, rd, rs1, rs2)
}
pub fn amominu_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x18, rd, rs1, rs2)
}
pub fn amomaxu_w(rd: u32, rs1: u32, rs2: u32) -> u32 {
    amo(0x1c, rd, rs1, rs2)
}

// Zicsr
pub fn csrrw(rd: u32, csr: u32, rs1: u32) -> u32 {
    i_type(0x73, rd, 1, rs1, csr as i32)
}
pub fn csrrs(rd: u32, csr: u32, rs1: u32) -> u32 {
    i_type(0x73, rd, 2, rs1, csr as i32)
}
pub fn csrrc(rd: u32, csr: u32, rs1: u32) -> u32 {
    i_type(0x73, rd, 3, rs1, csr as i32)
}
pub fn csrrwi(rd: u32, csr: u32, uimm: u32) -> u32 {
    i_type(0x73, rd, 5, uimm, csr as i32)
}
pub fn csrrsi(rd: u32, csr: u32, uimm: u32) -> u32 {
    i_type(0x73, rd, 6, uimm, csr as i32)
}
pub fn csrrci(rd: u32, csr: u32, uimm: u32) -> u32 {
    i_type(0x73, rd, 7, uimm, csr as i32)
}

// Privileged
pub fn mret() -> u32 {
    0x3020_0073
}
pub fn sret() -> u32 {
    0x1020_0073
}
pub fn wfi() -> u32 {
    0x1050_0073
}
pub fn sfence_vma(rs1: u32, rs2: u32) -> u32 {
    r_type(0x73, 0, 0, rs1, rs2, 0x09)
}

/// `li rd, value` as a lui/addi pair (single addi when it fits).
pub fn li(rd: u32, value: u32) -> Vec<u32> {
    let v = value as i32;
    if (-2048..2048).contains(&v) {
        return vec![addi(rd, 0, v)];
    }
    let lo = (value & 0xfff) as i32;
    let lo = if lo >= 2048 { lo - 4096 } else { lo };
    let hi = value.wrapping_sub(lo as u32) >> 12;
    if lo == 0 {
        vec![lui(rd, hi)]
    } else {
        vec![lui(rd, hi), addi(rd, rd, lo)]
    }
}
