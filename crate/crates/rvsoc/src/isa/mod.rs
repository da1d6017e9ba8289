//! RV32IMAC instruction forms: raw parcels, the normalized decoded record,
//! the 32-bit decoder and the compressed-instruction expander.

pub mod compressed;
pub mod decode;
pub mod encode;

pub use compressed::expand_compressed;
pub use decode::{decode32, parcel_length};

/// Width of a fetched instruction parcel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParcelLen {
    /// 16-bit compressed parcel.
    Half,
    /// 32-bit standard parcel.
    Word,
}

/// Coarse instruction class driving the core state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstClass {
    Alu,
    AluImm,
    Load,
    Store,
    Branch,
    Jal,
    Jalr,
    Lui,
    Auipc,
    MulDiv,
    Amo,
    LrSc,
    Csr,
    System,
    Fence,
}

/// Sub-operation selector within an [`InstClass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Funct {
    // Alu / AluImm
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    // MulDiv
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
    // Branch
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    // Load
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    // Store
    Sb,
    Sh,
    Sw,
    // LrSc
    Lr,
    Sc,
    // Amo
    AmoSwap,
    AmoAdd,
    AmoXor,
    AmoAnd,
    AmoOr,
    AmoMin,
    AmoMax,
    AmoMinu,
    AmoMaxu,
    // Csr (register and immediate forms)
    Csrrw,
    Csrrs,
    Csrrc,
    Csrrwi,
    Csrrsi,
    Csrrci,
    // System
    Ecall,
    Ebreak,
    Mret,
    Sret,
    Wfi,
    SfenceVma,
    // Fence
    Fence,
    FenceI,
    // Jal/Jalr/Lui/Auipc carry no sub-operation.
    None,
}

/// Normalized decoded instruction after optional compressed expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedInst {
    pub class: InstClass,
    pub funct: Funct,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    /// Sign-extended immediate. For CSR instructions this is the
    /// zero-extended 12-bit CSR address; for the immediate CSR forms
    /// `rs1` carries the 5-bit uimm.
    pub imm: i32,
    pub was_compressed: bool,
    /// The originating 32-bit encoding (post-expansion for compressed).
    pub raw: u32,
}

impl DecodedInst {
    /// Byte length of the fetched parcel (2 for compressed, 4 otherwise).
    pub fn len(&self) -> u32 {
        if self.was_compressed {
            2
        } else {
            4
        }
    }

    /// True when the instruction reads memory in the LD step.
    pub fn is_mem(&self) -> bool {
        matches!(
            self.class,
            InstClass::Load | InstClass::Store | InstClass::Amo | InstClass::LrSc
        )
    }
}
