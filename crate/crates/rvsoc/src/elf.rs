//! Minimal ELF32 loader: enough to place the PT_LOAD segments of a
//! statically linked little-endian RISC-V executable into guest RAM and
//! report the entry point. Anything else (relocation, dynamic linking,
//! sections) is out of scope; raw binary images bypass this entirely.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ElfError {
    #[error("truncated ELF image")]
    Truncated,
    #[error("not a 32-bit little-endian RISC-V executable")]
    WrongFormat,
}

/// One loadable segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    /// Target physical address.
    pub paddr: u32,
    /// Bytes to copy; the segment is zero-padded to `memsz`.
    pub data: Vec<u8>,
    pub memsz: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedElf {
    pub entry: u32,
    pub segments: Vec<Segment>,
}

pub fn is_elf(image: &[u8]) -> bool {
    image.len() >= 4 && image[..4] == [0x7f, b'E', b'L', b'F']
}

fn u16le(b: &[u8], off: usize) -> Result<u16, ElfError> {
    b.get(off..off + 2)
        .map(|s| u16::from_le_bytes(s.try_into().unwrap()))
        .ok_or(ElfError::Truncated)
}

fn u32le(b: &[u8], off: usize) -> Result<u32, ElfError> {
    b.get(off..off + 4)
        .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
        .ok_or(ElfError::Truncated)
}

const EM_RISCV: u16 = 0xf3;
const PT_LOAD: u32 = 1;

pub fn parse(image: &[u8]) -> Result<LoadedElf, ElfError> {
    if !is_elf(image) {
        return Err(ElfError::WrongFormat);
    }
    if image.len() < 52 {
        return Err(ElfError::Truncated);
    }
    // Class 1 (32-bit), data 1 (little-endian), machine RISC-V.
    if image[4] != 1 || image[5] != 1 || u16le(image, 18)? != EM_RISCV {
        return Err(ElfError::WrongFormat);
    }
    let entry = u32le(image, 24)?;
    let phoff = u32le(image, 28)? as usize;
    let phentsize = u16le(image, 42)? as usize;
    let phnum = u16le(image, 44)? as usize;
    if phentsize < 32 {
        return Err(ElfError::WrongFormat);
    }

    let mut segments = Vec::new();
    for i in 0..phnum {
        let ph = phoff + i * phentsize;
        if u32le(image, ph)? != PT_LOAD {
            continue;
        }
        let offset = u32le(image, ph + 4)? as usize;
        let paddr = u32le(image, ph + 12)?;
        let filesz = u32le(image, ph + 16)? as usize;
        let memsz = u32le(image, ph + 20)?;
        let data = image
            .get(offset..offset + filesz)
            .ok_or(ElfError::Truncated)?
            .to_vec();
        segments.push(Segment {
            paddr,
            data,
            memsz,
        });
    }
    Ok(LoadedElf { entry, segments })
}
