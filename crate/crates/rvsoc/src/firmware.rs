//! Reference RVuc firmware, assembled at build time from the instruction
//! encoders. Two request causes are implemented:
//!
//!   cause 1 (console TX): emit the low byte of ARG0 on the console.
//!   cause 2 (disk): run a disk command; ARG0 = command (1 read, 2 write),
//!     ARG1 = sector, ARG2 = physical RAM address. The device status is
//!     written back into ARG0 (0 ok, 1 error).
//!
//! Unknown causes complete immediately so a confused guest cannot wedge
//! the machine. Every path ends by writing DB_DONE, which clears busy and
//! halts the core until the next request.

use crate::devices::{
    CONSOLE_BASE, CON_DB_ARG0, CON_DB_ARG1, CON_DB_ARG2, CON_DB_CAUSE, CON_DB_DONE, CON_TX,
    DB_CAUSE_CONSOLE_TX, DB_CAUSE_DISK, DISK_ADDR, DISK_CMD, DISK_CTL_BASE, DISK_SECTOR,
    DISK_STATUS,
};
use crate::isa::encode::*;

/// Assemble the firmware image. x5 = console base, x8 = disk base,
/// x6 = cause, x7 = scratch.
pub fn reference_firmware() -> Vec<u8> {
    let con = CONSOLE_BASE >> 12;
    let dsk = DISK_CTL_BASE >> 12;
    let words = [
        /*  0 */ lui(5, con),
        /*  1 */ lw(6, 5, CON_DB_CAUSE as i32),
        /*  2 */ addi(7, 0, DB_CAUSE_CONSOLE_TX as i32),
        /*  3 */ beq(6, 7, (8 - 3) * 4), // -> console_tx
        /*  4 */ addi(7, 0, DB_CAUSE_DISK as i32),
        /*  5 */ beq(6, 7, (12 - 5) * 4), // -> disk
        // unknown cause: acknowledge and halt
        /*  6 */ sw(5, 0, CON_DB_DONE as i32),
        /*  7 */ jal(0, 0),
        // console_tx:
        /*  8 */ lw(7, 5, CON_DB_ARG0 as i32),
        /*  9 */ sw(5, 7, CON_TX as i32),
        /* 10 */ sw(5, 0, CON_DB_DONE as i32),
        /* 11 */ jal(0, 0),
        // disk:
        /* 12 */ lui(8, dsk),
        /* 13 */ lw(7, 5, CON_DB_ARG1 as i32),
        /* 14 */ sw(8, 7, DISK_SECTOR as i32),
        /* 15 */ lw(7, 5, CON_DB_ARG2 as i32),
        /* 16 */ sw(8, 7, DISK_ADDR as i32),
        /* 17 */ lw(7, 5, CON_DB_ARG0 as i32),
        /* 18 */ sw(8, 7, DISK_CMD as i32), // the store runs the command
        /* 19 */ lw(7, 8, DISK_STATUS as i32),
        /* 20 */ sw(5, 7, CON_DB_ARG0 as i32),
        /* 21 */ sw(5, 0, CON_DB_DONE as i32),
        /* 22 */ jal(0, 0),
    ];
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}
