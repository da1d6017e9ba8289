//! End-of-run statistics: CPI, cache hit rate and MPKI, plus the raw
//! counters they derive from. The quotients are also exposed as free
//! functions so they can be checked against published figures.

use crate::machine::Machine;

/// Cycles per retired instruction. None when nothing retired.
pub fn cpi(cycles: u64, instructions: u64) -> Option<f64> {
    (instructions > 0).then(|| cycles as f64 / instructions as f64)
}

/// Cache hit rate in percent. None when the cache saw no accesses.
pub fn hit_rate_percent(hits: u64, accesses: u64) -> Option<f64> {
    (accesses > 0).then(|| 100.0 * hits as f64 / accesses as f64)
}

/// Cache misses per thousand retired instructions.
pub fn mpki(misses: u64, instructions: u64) -> Option<f64> {
    (instructions > 0).then(|| 1000.0 * misses as f64 / instructions as f64)
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => "n/a".to_string(),
    }
}

/// Render the report. CPI and hit rate print with one decimal, MPKI with
/// two, matching how such figures are conventionally quoted.
pub fn report(m: &Machine) -> String {
    let c = &m.core.counters;
    let insts = m.st.instret;
    let cache = &m.mem.cache;
    let f = &m.mem.fetch_stats;
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("instructions   {insts}"));
    line(format!("slots          {}", c.slots));
    line(format!("cycles         {}", c.cycles));
    line(format!("excluded       {}", c.excluded));
    line(format!("cpi            {}", fmt_opt(cpi(c.cycles, insts), 1)));
    line(format!("cache_accesses {}", cache.accesses));
    line(format!("cache_hits     {}", cache.hits));
    line(format!(
        "hit_rate       {}",
        fmt_opt(hit_rate_percent(cache.hits, cache.accesses), 1)
    ));
    line(format!("cache_misses   {}", cache.misses()));
    line(format!(
        "mpki           {}",
        fmt_opt(mpki(cache.misses(), insts), 2)
    ));
    line(format!(
        "tlb_walks      {}",
        m.mmu.stats.walks.iter().sum::<u64>()
    ));
    line(format!("walk_reads     {}", m.mmu.stats.walk_reads));
    line(format!("fetch_windows  {}", f.windows));
    line(format!("straddles      {}", f.straddles));
    line(format!("fbuf_hits      {}", f.buffer_hits));
    out
}
