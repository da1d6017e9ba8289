//! MMIO devices: console (with the 16-byte input FIFO), disk control
//! registers, the machine timer, the power-off latch and the RVuc doorbell.
//!
//! Register map (word registers, offsets from each block base):
//!
//! Console at 0x4000_0000:
//!   +0x00 TX        (W) emit low byte to the host terminal
//!   +0x04 RX_DATA   (R) pop one byte from the input FIFO; 0xffff_ffff when empty
//!   +0x08 RX_STATUS (R) bits 4:0 = FIFO count, bit 8 = sticky overflow
//!   +0x0c DB_REQ    (W) doorbell request: latch cause, raise RVuc busy
//!   +0x10 DB_CAUSE  (R) latched request cause (read by firmware)
//!   +0x14 DB_DONE   (W) completion: clear busy, halt RVuc
//!   +0x18 DB_ARG0, +0x1c DB_ARG1, +0x20 DB_ARG2 (RW) request mailbox
//!
//! Disk control at 0x4100_0000:
//!   +0x00 CMD    (W) 1 = read sector (disk->RAM), 2 = write sector (RAM->disk)
//!   +0x04 SECTOR (RW) 512-byte sector index
//!   +0x08 ADDR   (RW) physical RAM address, 4-byte aligned
//!   +0x0c STATUS (R) result of the last command: 0 ok, 1 error
//!
//! Timer at 0x0200_0000 (CLINT-style offsets):
//!   +0x4000 MTIMECMP (lo), +0x4004 MTIMECMP (hi)
//!   +0xbff8 MTIME (lo), +0xbffc MTIME (hi) -- MTIME is read-only and
//!   advances once per retired instruction.
//!
//! Power-off at 0x0010_0000: writing 0x5555 ends the simulation.

pub const CONSOLE_BASE: u32 = 0x4000_0000;
pub const DISK_CTL_BASE: u32 = 0x4100_0000;
pub const TIMER_BASE: u32 = 0x0200_0000;
pub const POWEROFF_ADDR: u32 = 0x0010_0000;
pub const POWEROFF_MAGIC: u32 = 0x5555;

pub const CON_TX: u32 = 0x00;
pub const CON_RX_DATA: u32 = 0x04;
pub const CON_RX_STATUS: u32 = 0x08;
pub const CON_DB_REQ: u32 = 0x0c;
pub const CON_DB_CAUSE: u32 = 0x10;
pub const CON_DB_DONE: u32 = 0x14;
pub const CON_DB_ARG0: u32 = 0x18;
pub const CON_DB_ARG1: u32 = 0x1c;
pub const CON_DB_ARG2: u32 = 0x20;

pub const DISK_CMD: u32 = 0x00;
pub const DISK_SECTOR: u32 = 0x04;
pub const DISK_ADDR: u32 = 0x08;
pub const DISK_STATUS: u32 = 0x0c;

pub const DISK_CMD_READ: u32 = 1;
pub const DISK_CMD_WRITE: u32 = 2;
pub const SECTOR_SIZE: u32 = 512;

/// Doorbell causes understood by the reference firmware.
pub const DB_CAUSE_CONSOLE_TX: u32 = 1;
pub const DB_CAUSE_DISK: u32 = 2;

const RX_FIFO_CAP: usize = 16;

/// Console device: TX byte stream out, 16-byte RX FIFO in.
#[derive(Debug, Clone, Default)]
pub struct ConsoleDev {
    pub tx_out: Vec<u8>,
    rx_fifo: std::collections::VecDeque<u8>,
    pub rx_overflow: bool,
}

impl ConsoleDev {
    pub fn tx_write(&mut self, byte: u8) {
        self.tx_out.push(byte);
    }

    /// Host-side enqueue; drop-newest with a sticky overflow flag when full.
    pub fn rx_push_from_host(&mut self, byte: u8) {
        if self.rx_fifo.len() >= RX_FIFO_CAP {
            self.rx_overflow = true;
        } else {
            self.rx_fifo.push_back(byte);
        }
    }

    /// Pop one byte; the empty FIFO reads as the distinguished empty code.
    pub fn rx_read(&mut self) -> u32 {
        match self.rx_fifo.pop_front() {
            Some(b) => b as u32,
            None => 0xffff_ffff,
        }
    }

    pub fn status_read(&self) -> u32 {
        self.rx_fifo.len() as u32 | if self.rx_overflow { 1 << 8 } else { 0 }
    }

    pub fn rx_space(&self) -> usize {
        RX_FIFO_CAP - self.rx_fifo.len()
    }

    pub fn fifo_bytes(&self) -> Vec<u8> {
        self.rx_fifo.iter().copied().collect()
    }

    pub fn restore_fifo(&mut self, bytes: &[u8], overflow: bool) {
        self.rx_fifo = bytes.iter().copied().collect();
        self.rx_overflow = overflow;
    }
}

/// Disk control registers. The actual sector copy runs in the memory
/// system, which owns both DRAM regions.
#[derive(Debug, Clone, Default)]
pub struct DiskDev {
    pub sector: u32,
    pub ram_addr: u32,
    pub status: u32,
}

/// Doorbell between the main core and RVuc. One outstanding request at a
/// time: the core stalls while busy, so overlap is impossible by
/// construction.
#[derive(Debug, Clone, Default)]
pub struct Doorbell {
    pub busy: bool,
    pub cause: u32,
    pub args: [u32; 3],
}

/// Aggregate device state hanging off the memory system.
#[derive(Debug, Clone)]
pub struct Devices {
    pub console: ConsoleDev,
    pub disk: DiskDev,
    pub doorbell: Doorbell,
    pub poweroff: bool,
    /// mtimecmp latch, authoritative; synced into ArchState each retirement.
    pub mtimecmp: u64,
    /// Mirror of ArchState.mtime for MMIO reads, refreshed each retirement.
    pub mtime: u64,
    /// Protocol violation surfaced as a host diagnostic (e.g. a doorbell
    /// request while one is already outstanding).
    pub host_error: Option<String>,
}

impl Default for Devices {
    fn default() -> Self {
        Devices {
            console: ConsoleDev::default(),
            disk: DiskDev::default(),
            doorbell: Doorbell::default(),
            poweroff: false,
            mtimecmp: u64::MAX,
            mtime: 0,
            host_error: None,
        }
    }
}
