//! Command-line harness: loads a RAM image (raw binary or ELF), optional
//! disk image and I/O-controller firmware, then runs the timing core —
//! alone or in lockstep with the functional reference — with optional
//! retirement tracing, checkpointing and a statistics report.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rvsoc::checkpoint;
use rvsoc::elf;
use rvsoc::firmware::reference_firmware;
use rvsoc::machine::{run_lockstep, CoreModel, LockstepOutcome, Machine, StopReason};
use rvsoc::mem::{MemConfig, RAM_BASE};
use rvsoc::stats;
use rvsoc::trace::format_record;

#[derive(Parser, Debug)]
#[command(name = "rvsoc-sim", about = "Cycle-level RV32IMAC SoC simulator")]
struct Args {
    /// RAM image: raw binary placed at the RAM base, or an ELF executable.
    #[arg(long)]
    ram: Option<PathBuf>,
    /// Disk image, available to the guest through the I/O controller.
    #[arg(long)]
    disk: Option<PathBuf>,
    /// I/O-controller firmware (raw RV32I binary, at most 8KB). The
    /// built-in reference firmware is used when absent.
    #[arg(long)]
    firmware: Option<PathBuf>,
    /// Stop after this many retirement slots.
    #[arg(long, value_name = "N")]
    max_insns: Option<u64>,
    /// Write one line per retirement slot to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run the functional reference in lockstep and fail on divergence.
    #[arg(long)]
    lockstep: bool,
    /// Model every data access as a cache miss.
    #[arg(long)]
    no_cache: bool,
    /// Disable the 16-bit fetch buffer.
    #[arg(long)]
    no_fetch_buffer: bool,
    /// Cycles added on a cache miss.
    #[arg(long, value_name = "N")]
    miss_penalty: Option<u64>,
    /// Write a checkpoint of the final state to this file.
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Resume from a checkpoint instead of loading images.
    #[arg(long)]
    restore: Option<PathBuf>,
    /// Write the statistics report to this file (also printed to stderr).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Feed this file to the console receive channel.
    #[arg(long, value_name = "SCRIPT-FILE")]
    stdin: Option<PathBuf>,
}

fn read_file(path: &PathBuf) -> io::Result<Vec<u8>> {
    fs::read(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Place a RAM image into the machine; ELF segments go to their physical
/// addresses and set the entry point, raw binaries land at the RAM base.
fn load_image(m: &mut Machine, image: &[u8]) -> Result<(), String> {
    if elf::is_elf(image) {
        let loaded = elf::parse(image).map_err(|e| e.to_string())?;
        for seg in &loaded.segments {
            let off = seg.paddr.wrapping_sub(RAM_BASE);
            m.load_ram(off, &seg.data).map_err(|e| e.to_string())?;
            let pad = seg.memsz as usize - seg.data.len().min(seg.memsz as usize);
            if pad > 0 {
                m.load_ram(off + seg.data.len() as u32, &vec![0u8; pad])
                    .map_err(|e| e.to_string())?;
            }
        }
        m.st.pc = loaded.entry;
    } else {
        m.load_ram(0, image).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("rvsoc-sim: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<ExitCode, String> {
    let cfg = MemConfig {
        cache_enabled: !args.no_cache,
        fbuf_enabled: !args.no_fetch_buffer,
        miss_penalty: args.miss_penalty.unwrap_or(MemConfig::default().miss_penalty),
        ..MemConfig::default()
    };
    let firmware = match &args.firmware {
        Some(p) => read_file(p).map_err(|e| e.to_string())?,
        None => reference_firmware(),
    };
    let script = match &args.stdin {
        Some(p) => read_file(p).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };

    let build = |model: CoreModel| -> Result<Machine, String> {
        let mut m = if let Some(p) = &args.restore {
            let bytes = read_file(p).map_err(|e| e.to_string())?;
            checkpoint::restore(&bytes, cfg, model, &script).map_err(|e| e.to_string())?
        } else {
            let mut m = Machine::new(cfg, &firmware, model).map_err(|e| e.to_string())?;
            m.set_stdin(&script);
            m
        };
        if args.restore.is_none() {
            if let Some(p) = &args.ram {
                let image = read_file(p).map_err(|e| e.to_string())?;
                load_image(&mut m, &image)?;
            }
            if let Some(p) = &args.disk {
                let image = read_file(p).map_err(|e| e.to_string())?;
                m.load_disk(&image).map_err(|e| e.to_string())?;
            }
        }
        Ok(m)
    };

    let mut timing = build(CoreModel::Timing)?;
    let mut trace_out: Option<BufWriter<fs::File>> = match &args.trace {
        Some(p) => Some(BufWriter::new(
            fs::File::create(p).map_err(|e| e.to_string())?,
        )),
        None => None,
    };
    let max_slots = args.max_insns.unwrap_or(u64::MAX);

    let stop = if args.lockstep {
        let mut reference = build(CoreModel::Reference)?;
        let outcome = run_lockstep(&mut timing, &mut reference, max_slots, |slot, rec| {
            if let Some(w) = trace_out.as_mut() {
                let _ = writeln!(w, "{}", format_record(slot, rec));
            }
        });
        match outcome {
            LockstepOutcome::Match(stop) => stop,
            LockstepOutcome::Diverged(d) => return Err(d.to_string()),
            LockstepOutcome::Fault(f) => StopReason::Fault(f),
        }
    } else {
        timing.run(max_slots, |slot, rec| {
            if let Some(w) = trace_out.as_mut() {
                let _ = writeln!(w, "{}", format_record(slot, rec));
            }
        })
    };
    if let Some(w) = trace_out.as_mut() {
        w.flush().map_err(|e| e.to_string())?;
    }

    // Guest console output.
    io::stdout()
        .write_all(&timing.mem.devices.console.tx_out)
        .map_err(|e| e.to_string())?;

    if let Some(p) = &args.checkpoint_out {
        fs::write(p, checkpoint::save(&timing)).map_err(|e| e.to_string())?;
    }
    let report = stats::report(&timing);
    eprint!("{report}");
    if let Some(p) = &args.stats {
        fs::write(p, &report).map_err(|e| e.to_string())?;
    }

    match stop {
        StopReason::Poweroff | StopReason::SlotLimit => Ok(ExitCode::SUCCESS),
        StopReason::Fault(f) => Err(format!("host fault: {f}")),
    }
}
