//! Textual retirement trace. One line per slot, fixed field order:
//!
//! ```text
//! <slot:08> <pc:08x> <raw:08x> <mode> <gpr|-> <trap|-> <csrs|->
//! ```
//!
//! where `gpr` is `xNN=VVVVVVVV`, `trap` is `CAUSE:TVAL` (xcause encoding,
//! both hex8) and `csrs` is a comma-joined `AAA=VVVVVVVV` list in the
//! canonical traced-CSR order. The format is stable; tools and the golden
//! tests depend on it byte for byte.

use crate::oracle::RetireRecord;

pub fn format_record(slot: u64, r: &RetireRecord) -> String {
    let gpr = match r.gpr_write {
        Some((rd, v)) => format!("x{rd:02}={v:08x}"),
        None => "-".to_string(),
    };
    let trap = match r.trap {
        Some(t) => format!("{:08x}:{:08x}", t.cause_bits(), t.tval),
        None => "-".to_string(),
    };
    let csrs = if r.csr_writes.is_empty() {
        "-".to_string()
    } else {
        r.csr_writes
            .iter()
            .map(|&(a, v)| format!("{a:03x}={v:08x}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "{slot:08} {:08x} {:08x} {} {gpr} {trap} {csrs}",
        r.pc,
        r.raw,
        r.mode.letter()
    )
}
