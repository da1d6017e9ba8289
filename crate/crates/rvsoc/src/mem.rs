//! Timing-side physical memory system: the DRAM-backed RAM and disk
//! regions, a direct-mapped write-through cache with invalidate-on-store,
//! the 16-bit fetch buffer for cross-line instruction fetches, and MMIO
//! routing to the devices.

use crate::devices::{self, Devices};
use crate::mmu::PteMem;

pub const RAM_BASE: u32 = 0x8000_0000;
pub const DISK_BASE: u32 = 0x8400_0000;
pub const RAM_SIZE_MAX: u32 = 64 << 20;
pub const DISK_SIZE_MAX: u32 = 64 << 20;

pub const CACHE_LINE_BYTES: u32 = 16;
pub const CACHE_LINES: usize = (128 << 10) / CACHE_LINE_BYTES as usize;

/// Access to an unmapped physical address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessFault {
    pub pa: u32,
}

/// Tunables of the memory system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemConfig {
    pub ram_size: u32,
    pub disk_size: u32,
    pub cache_enabled: bool,
    pub fbuf_enabled: bool,
    /// Extra cycles charged when a cached access misses and fills a line.
    pub miss_penalty: u64,
    pub store_latency: u64,
    pub mmio_latency: u64,
}

impl Default for MemConfig {
    fn default() -> Self {
        MemConfig {
            ram_size: RAM_SIZE_MAX,
            disk_size: DISK_SIZE_MAX,
            cache_enabled: true,
            fbuf_enabled: true,
            miss_penalty: 16,
            store_latency: 1,
            mmio_latency: 1,
        }
    }
}

#[derive(Debug, Clone)]
struct CacheLine {
    valid: bool,
    tag: u32,
    data: [u8; CACHE_LINE_BYTES as usize],
}

/// 128KB direct-mapped write-through cache: index = pa[16:4], tag = pa[31:17].
#[derive(Debug, Clone)]
pub struct Cache {
    lines: Vec<CacheLine>,
    pub accesses: u64,
    pub hits: u64,
}

impl Cache {
    fn new() -> Cache {
        Cache {
            lines: vec![
                CacheLine {
                    valid: false,
                    tag: 0,
                    data: [0; 16],
                };
                CACHE_LINES
            ],
            accesses: 0,
            hits: 0,
        }
    }
    fn index(pa: u32) -> usize {
        ((pa >> 4) as usize) & (CACHE_LINES - 1)
    }
    fn tag(pa: u32) -> u32 {
        pa >> 17
    }
    pub fn flush(&mut self) {
        for l in &mut self.lines {
            l.valid = false;
        }
    }
    pub fn misses(&self) -> u64 {
        self.accesses - self.hits
    }
    /// Serialized image of the line array for checkpoints.
    pub fn save_lines(&self, out: &mut Vec<u8>) {
        for l in &self.lines {
            out.push(l.valid as u8);
            out.extend_from_slice(&l.tag.to_le_bytes());
            out.extend_from_slice(&l.data);
        }
    }
    pub fn restore_lines(&mut self, bytes: &[u8]) {
        for (l, chunk) in self.lines.iter_mut().zip(bytes.chunks_exact(21)) {
            l.valid = chunk[0] != 0;
            l.tag = u32::from_le_bytes(chunk[1..5].try_into().unwrap());
            l.data.copy_from_slice(&chunk[5..21]);
        }
    }
}

/// Holds the upper half of the previously fetched 4-byte window so a fetch
/// straddling two cache lines needs only one cache access.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchBuffer {
    pub valid: bool,
    pub half: u16,
    /// Physical address of the buffered halfword.
    pub holder_pc: u32,
}

enum Region {
    Ram(usize),
    Disk(usize),
    Mmio,
}

/// Cache and fetch-buffer counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchStats {
    pub windows: u64,
    pub straddles: u64,
    pub buffer_hits: u64,
}

#[derive(Debug, Clone)]
pub struct MemorySystem {
    pub cfg: MemConfig,
    pub ram: Vec<u8>,
    pub disk: Vec<u8>,
    pub cache: Cache,
    pub fbuf: FetchBuffer,
    pub fetch_stats: FetchStats,
    pub devices: Devices,
}

impl MemorySystem {
    pub fn new(cfg: MemConfig) -> MemorySystem {
        assert!(cfg.ram_size <= RAM_SIZE_MAX && cfg.disk_size <= DISK_SIZE_MAX);
        MemorySystem {
            cfg,
            ram: vec![0; cfg.ram_size as usize],
            disk: vec![0; cfg.disk_size as usize],
            cache: Cache::new(),
            fbuf: FetchBuffer::default(),
            fetch_stats: FetchStats::default(),
            devices: Devices::default(),
        }
    }

    fn region(&self, pa: u32) -> Option<Region> {
        if pa >= RAM_BASE && pa.wrapping_sub(RAM_BASE) < self.cfg.ram_size {
            Some(Region::Ram((pa - RAM_BASE) as usize))
        } else if pa >= DISK_BASE && pa.wrapping_sub(DISK_BASE) < self.cfg.disk_size {
            Some(Region::Disk((pa - DISK_BASE) as usize))
        } else if self.mmio_mapped(pa) {
            Some(Region::Mmio)
        } else {
            None
        }
    }

    fn mmio_mapped(&self, pa: u32) -> bool {
        let con = pa.wrapping_sub(devices::CONSOLE_BASE);
        let dsk = pa.wrapping_sub(devices::DISK_CTL_BASE);
        let tmr = pa.wrapping_sub(devices::TIMER_BASE);
        con < 0x24
            || dsk < 0x10
            || (0x4000..0x4008).contains(&tmr)
            || (0xbff8..0xc000).contains(&tmr)
            || pa & !3 == devices::POWEROFF_ADDR
    }

    fn backing(&self, pa: u32) -> Option<(&[u8], usize)> {
        match self.region(pa)? {
            Region::Ram(off) => Some((&self.ram, off)),
            Region::Disk(off) => Some((&self.disk, off)),
            Region::Mmio => None,
        }
    }

    fn backing_read(&self, pa: u32, width: u32) -> Option<u32> {
        let (buf, off) = self.backing(pa)?;
        if off + width as usize > buf.len() {
            return None;
        }
        let mut v = 0u32;
        for i in (0..width as usize).rev() {
            v = v << 8 | buf[off + i] as u32;
        }
        Some(v)
    }

    fn backing_write(&mut self, pa: u32, width: u32, value: u32) -> bool {
        let slot = match self.region(pa) {
            Some(Region::Ram(off)) => (&mut self.ram, off),
            Some(Region::Disk(off)) => (&mut self.disk, off),
            _ => return false,
        };
        let (buf, off) = slot;
        if off + width as usize > buf.len() {
            return false;
        }
        for i in 0..width as usize {
            buf[off + i] = (value >> (8 * i)) as u8;
        }
        true
    }

    /// One cached access touching a single line. Returns cycles consumed.
    fn cache_access(&mut self, pa: u32) -> u64 {
        self.cache.accesses += 1;
        let idx = Cache::index(pa);
        let tag = Cache::tag(pa);
        if self.cache.lines[idx].valid && self.cache.lines[idx].tag == tag {
            self.cache.hits += 1;
            1
        } else {
            let line_pa = pa & !(CACHE_LINE_BYTES - 1);
            let mut data = [0u8; 16];
            for (i, b) in data.iter_mut().enumerate() {
                *b = match self.backing(line_pa + i as u32) {
                    Some((buf, off)) => buf[off],
                    None => 0,
                };
            }
            let line = &mut self.cache.lines[idx];
            line.valid = true;
            line.tag = tag;
            line.data = data;
            self.cfg.miss_penalty + 1
        }
    }

    /// Timed read. RAM/disk go through the cache when enabled; MMIO always
    /// bypasses it.
    pub fn read(&mut self, pa: u32, width: u32) -> Result<(u32, u64), AccessFault> {
        debug_assert!(pa % width == 0);
        match self.region(pa) {
            Some(Region::Mmio) => {
                let v = self.mmio_read(pa, width);
                Ok((v, self.cfg.mmio_latency))
            }
            Some(_) => {
                let value = self.backing_read(pa, width).ok_or(AccessFault { pa })?;
                if self.cfg.cache_enabled {
                    let cycles = self.cache_access(pa);
                    Ok((value, cycles))
                } else {
                    Ok((value, 1))
                }
            }
            None => Err(AccessFault { pa }),
        }
    }

    /// Timed write-through. The matching cache line is invalidated, not
    /// updated; the fetch buffer is dropped on every store.
    pub fn write(&mut self, pa: u32, width: u32, value: u32) -> Result<u64, AccessFault> {
        debug_assert!(pa % width == 0);
        self.fbuf.valid = false;
        match self.region(pa) {
            Some(Region::Mmio) => {
                self.mmio_write(pa, value);
                Ok(self.cfg.mmio_latency)
            }
            Some(_) => {
                if !self.backing_write(pa, width, value) {
                    return Err(AccessFault { pa });
                }
                self.invalidate_line(pa);
                Ok(self.cfg.store_latency)
            }
            None => Err(AccessFault { pa }),
        }
    }

    fn invalidate_line(&mut self, pa: u32) {
        let idx = Cache::index(pa);
        if self.cache.lines[idx].valid && self.cache.lines[idx].tag == Cache::tag(pa) {
            self.cache.lines[idx].valid = false;
        }
    }

    /// Untimed flat read used by the functional reference. MMIO side
    /// effects still apply.
    pub fn read_flat(&mut self, pa: u32, width: u32) -> Result<u32, AccessFault> {
        match self.region(pa) {
            Some(Region::Mmio) => Ok(self.mmio_read(pa, width)),
            Some(_) => self.backing_read(pa, width).ok_or(AccessFault { pa }),
            None => Err(AccessFault { pa }),
        }
    }

    /// Untimed flat write.
    pub fn write_flat(&mut self, pa: u32, width: u32, value: u32) -> Result<(), AccessFault> {
        match self.region(pa) {
            Some(Region::Mmio) => {
                self.mmio_write(pa, value);
                Ok(())
            }
            Some(_) => {
                if self.backing_write(pa, width, value) {
                    Ok(())
                } else {
                    Err(AccessFault { pa })
                }
            }
            None => Err(AccessFault { pa }),
        }
    }

    /// Halfword read for instruction fetch; the second halfword of a window
    /// that runs off the end of a mapped region reads as zero.
    fn fetch_half_flat(&mut self, pa: u32) -> Option<u16> {
        self.backing_read(pa, 2).map(|v| v as u16)
    }

    /// Fetch the 4-byte window at `pa` (2-byte aligned, RAM/disk only).
    /// Returns (window, cache accesses made, cycles). When the window
    /// straddles two lines and the buffer holds the lower half, only the
    /// upper line is accessed; the buffer then latches the new upper half.
    pub fn fetch_window(&mut self, pa: u32) -> Result<(u32, u32, u64), AccessFault> {
        debug_assert!(pa % 2 == 0);
        self.fetch_stats.windows += 1;
        if matches!(self.region(pa), Some(Region::Mmio) | None) {
            return Err(AccessFault { pa });
        }
        if !self.cfg.cache_enabled {
            let lo = self.fetch_half_flat(pa).ok_or(AccessFault { pa })? as u32;
            let hi = self.fetch_half_flat(pa + 2).unwrap_or(0) as u32;
            return Ok((hi << 16 | lo, 0, 1));
        }
        let straddles = pa % CACHE_LINE_BYTES == CACHE_LINE_BYTES - 2;
        let (window, accesses, cycles) = if !straddles {
            let cycles = self.cache_access(pa);
            let lo = self.backing_read(pa, 2).ok_or(AccessFault { pa })?;
            let hi = self.backing_read(pa + 2, 2).unwrap_or(0);
            (hi << 16 | lo, 1, cycles)
        } else {
            self.fetch_stats.straddles += 1;
            let upper_mapped = self.backing(pa + 2).is_some();
            if self.cfg.fbuf_enabled && self.fbuf.valid && self.fbuf.holder_pc == pa {
                self.fetch_stats.buffer_hits += 1;
                let lo = self.fbuf.half as u32;
                if upper_mapped {
                    let cycles = self.cache_access(pa + 2);
                    let hi = self.backing_read(pa + 2, 2).unwrap();
                    (hi << 16 | lo, 1, cycles)
                } else {
                    (lo, 0, 1)
                }
            } else {
                let c1 = self.cache_access(pa);
                let lo = self.backing_read(pa, 2).ok_or(AccessFault { pa })?;
                if upper_mapped {
                    let c2 = self.cache_access(pa + 2);
                    let hi = self.backing_read(pa + 2, 2).unwrap();
                    (hi << 16 | lo, 2, c1 + c2)
                } else {
                    (lo, 1, c1)
                }
            }
        };
        self.fbuf = FetchBuffer {
            valid: self.cfg.fbuf_enabled,
            half: (window >> 16) as u16,
            holder_pc: pa + 2,
        };
        Ok((window, accesses, cycles))
    }

    /// Untimed window read for the functional reference; no cache, no
    /// buffer, identical byte results.
    pub fn fetch_window_flat(&mut self, pa: u32) -> Result<u32, AccessFault> {
        let lo = self.fetch_half_flat(pa).ok_or(AccessFault { pa })? as u32;
        let hi = self.fetch_half_flat(pa + 2).unwrap_or(0) as u32;
        Ok(hi << 16 | lo)
    }

    fn mmio_read(&mut self, pa: u32, _width: u32) -> u32 {
        let d = &mut self.devices;
        let con = pa.wrapping_sub(devices::CONSOLE_BASE);
        if con < 0x24 {
            return match con & !3 {
                devices::CON_RX_DATA => d.console.rx_read(),
                devices::CON_RX_STATUS => d.console.status_read(),
                devices::CON_DB_CAUSE => d.doorbell.cause,
                devices::CON_DB_ARG0 => d.doorbell.args[0],
                devices::CON_DB_ARG1 => d.doorbell.args[1],
                devices::CON_DB_ARG2 => d.doorbell.args[2],
                _ => 0,
            };
        }
        let dsk = pa.wrapping_sub(devices::DISK_CTL_BASE);
        if dsk < 0x10 {
            return match dsk & !3 {
                devices::DISK_SECTOR => d.disk.sector,
                devices::DISK_ADDR => d.disk.ram_addr,
                devices::DISK_STATUS => d.disk.status,
                _ => 0,
            };
        }
        let tmr = pa.wrapping_sub(devices::TIMER_BASE);
        match tmr {
            0x4000 => d.mtimecmp as u32,
            0x4004 => (d.mtimecmp >> 32) as u32,
            0xbff8 => d.mtime as u32,
            0xbffc => (d.mtime >> 32) as u32,
            _ => 0,
        }
    }

    fn mmio_write(&mut self, pa: u32, value: u32) {
        let con = pa.wrapping_sub(devices::CONSOLE_BASE);
        if con < 0x24 {
            match con & !3 {
                devices::CON_TX => self.devices.console.tx_write(value as u8),
                devices::CON_DB_REQ => {
                    if self.devices.doorbell.busy {
                        self.devices.host_error =
                            Some("doorbell request while RVuc busy".into());
                    } else {
                        self.devices.doorbell.busy = true;
                        self.devices.doorbell.cause = value;
                    }
                }
                devices::CON_DB_DONE => self.devices.doorbell.busy = false,
                devices::CON_DB_ARG0 => self.devices.doorbell.args[0] = value,
                devices::CON_DB_ARG1 => self.devices.doorbell.args[1] = value,
                devices::CON_DB_ARG2 => self.devices.doorbell.args[2] = value,
                _ => {}
            }
            return;
        }
        let dsk = pa.wrapping_sub(devices::DISK_CTL_BASE);
        if dsk < 0x10 {
            match dsk & !3 {
                devices::DISK_CMD => self.disk_command(value),
                devices::DISK_SECTOR => self.devices.disk.sector = value,
                devices::DISK_ADDR => self.devices.disk.ram_addr = value,
                _ => {}
            }
            return;
        }
        let tmr = pa.wrapping_sub(devices::TIMER_BASE);
        match tmr {
            0x4000 => {
                self.devices.mtimecmp =
                    (self.devices.mtimecmp & !0xffff_ffff) | value as u64;
            }
            0x4004 => {
                self.devices.mtimecmp =
                    (self.devices.mtimecmp & 0xffff_ffff) | (value as u64) << 32;
            }
            _ => {}
        }
        if pa & !3 == devices::POWEROFF_ADDR && value == devices::POWEROFF_MAGIC {
            self.devices.poweroff = true;
        }
    }

    /// Execute a disk command: copy one 512-byte sector between the RAM
    /// and disk regions. Copies route through the write path so cached
    /// lines are invalidated coherently.
    fn disk_command(&mut self, cmd: u32) {
        let sector = self.devices.disk.sector;
        let ram_addr = self.devices.disk.ram_addr;
        let sectors = self.cfg.disk_size / devices::SECTOR_SIZE;
        let ram_ok = ram_addr % 4 == 0
            && ram_addr >= RAM_BASE
            && ram_addr.wrapping_sub(RAM_BASE) + devices::SECTOR_SIZE <= self.cfg.ram_size;
        if sector >= sectors || !ram_ok {
            self.devices.disk.status = 1;
            return;
        }
        let disk_pa = DISK_BASE + sector * devices::SECTOR_SIZE;
        match cmd {
            devices::DISK_CMD_READ => {
                for i in (0..devices::SECTOR_SIZE).step_by(4) {
                    let v = self.backing_read(disk_pa + i, 4).unwrap();
                    self.backing_write(ram_addr + i, 4, v);
                    self.invalidate_line(ram_addr + i);
                }
                self.fbuf.valid = false;
                self.devices.disk.status = 0;
            }
            devices::DISK_CMD_WRITE => {
                for i in (0..devices::SECTOR_SIZE).step_by(4) {
                    let v = self.backing_read(ram_addr + i, 4).unwrap();
                    self.backing_write(disk_pa + i, 4, v);
                    self.invalidate_line(disk_pa + i);
                }
                self.devices.disk.status = 0;
            }
            _ => self.devices.disk.status = 1,
        }
    }
}

impl PteMem for MemorySystem {
    fn read_pte(&mut self, pa: u32) -> Option<u32> {
        self.backing_read(pa & !3, 4)
    }
    fn write_pte(&mut self, pa: u32, value: u32) {
        let pa = pa & !3;
        self.backing_write(pa, 4, value);
        self.invalidate_line(pa);
        self.fbuf.valid = false;
    }
}
