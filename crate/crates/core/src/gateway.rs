//! Command-line entry point: synchronous single runs and proteome runs,
//! the HTTP server, statistics reports and cache fetches.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::classify::SubclassId;
use crate::clients::{resolve_accession, AccessionKind, ClientConfig, Clients};
use crate::service::{
    compute_proteome_stats, http, process_manifest, Pipeline, ProteomeEntry, ResultBundle, Service, ServiceConfig,
};

pub const EXIT_DONE: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "daisy", version, about = "Tandem repeat protein curation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct FetchOpts {
    /// Never touch the network; serve from cache and bundled fixtures only.
    #[arg(long)]
    pub offline: bool,
    /// Download cache (default: $DAISY_CACHE_DIR or a temp directory).
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Curate one structure synchronously.
    Run {
        accession: String,
        /// Comma-separated subclass ids; bypasses the family classifier.
        #[arg(long, value_delimiter = ',')]
        subclasses: Option<Vec<String>>,
        /// Subclass selection threshold on normalized candidate scores.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        fetch: FetchOpts,
    },
    /// Process every component structure of a proteome.
    Proteome {
        proteome_id: String,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        fetch: FetchOpts,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_name = "DIR", default_value = "daisy-data")]
        data_dir: PathBuf,
        /// Worker threads (default: number of cores).
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        fetch: FetchOpts,
    },
    /// Print the statistics report of a finished proteome run.
    Stats {
        /// `entries.json` written by `proteome`, or its directory.
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Download a structure or proteome listing into the cache.
    Fetch {
        accession: String,
        /// Also write the chain sequences as FASTA to this file.
        #[arg(long, value_name = "FILE")]
        fasta: Option<PathBuf>,
        #[command(flatten)]
        fetch: FetchOpts,
    },
}

fn clients(opts: &FetchOpts) -> Arc<Clients> {
    let mut config = ClientConfig::from_env();
    if opts.offline {
        config.offline = true;
    }
    if let Some(dir) = &opts.cache_dir {
        config.cache_dir = dir.clone();
    }
    Arc::new(Clients::from_config(config))
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn failed(msg: impl std::fmt::Display) -> i32 {
    eprintln!("failed: {msg}");
    EXIT_FAILED
}

/// Region table printed after a run.
pub fn region_table(bundle: &ResultBundle) -> String {
    let mut out = String::new();
    if bundle.region_count() == 0 {
        let _ = writeln!(out, "{}: no tandem repeat regions identified", bundle.accession);
        return out;
    }
    let _ = writeln!(out, "chain\tregion\tsubclass\tunits\tstart\tend\tavg_rmsd\tlevel\trule");
    for chain in &bundle.chains {
        for r in &chain.regions {
            let start = r.units.first().map_or(0, |u| u.start);
            let end = r.units.last().map_or(0, |u| u.end);
            let rule = serde_json::to_value(r.rule_satisfied)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{}\t{}",
                chain.chain_id,
                r.region_id,
                r.classification,
                r.units.len(),
                start,
                end,
                r.average_rmsd,
                r.relaxation_level,
                rule
            );
        }
    }
    out
}

fn cmd_run(
    accession: &str,
    subclasses: Option<Vec<String>>,
    threshold: f64,
    out: Option<PathBuf>,
    fetch: &FetchOpts,
) -> i32 {
    let r = match resolve_accession(accession) {
        Ok(r) if r.kind != AccessionKind::ProteomeId => r,
        Ok(_) => return usage(format!("{accession} is a proteome id; use `daisy proteome`")),
        Err(e) => return usage(e),
    };
    if !(0.0..=1.0).contains(&threshold) {
        return usage(format!("--threshold must lie in [0, 1], got {threshold}"));
    }
    let mut pipeline = Pipeline::with_defaults(clients(fetch));
    pipeline.threshold = threshold;
    let selection = match subclasses {
        None => None,
        Some(list) => {
            let mut set = BTreeSet::new();
            for s in list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
                match s.parse::<SubclassId>() {
                    Ok(id) if pipeline.taxonomy.contains(&id) => {
                        set.insert(id);
                    }
                    _ => return usage(format!("unknown subclass '{s}'")),
                }
            }
            if set.is_empty() {
                return usage("--subclasses needs at least one subclass id");
            }
            Some(set)
        }
    };
    let out = out.unwrap_or_else(|| PathBuf::from("daisy-out").join(&r.value));
    match pipeline.run(&r, selection.as_ref(), &out) {
        Ok(res) => {
            print!("{}", region_table(&res.bundle));
            println!("outputs: {}", out.display());
            EXIT_DONE
        }
        Err(e) => failed(e),
    }
}

/// Entries as written by `proteome`.
pub const ENTRIES_FILE: &str = "entries.json";
pub const STATS_TEXT_FILE: &str = "stats.txt";
pub const STATS_JSON_FILE: &str = "stats.json";

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct EntriesFile {
    proteome_id: String,
    entries: Vec<ProteomeEntry>,
    skipped: Vec<crate::clients::PlannedStructure>,
}

fn write_stats(dir: &Path, proteome_id: &str, entries: &[ProteomeEntry]) -> Result<String, String> {
    let stats = compute_proteome_stats(entries).map_err(|e| e.to_string())?;
    let table = stats.to_table(proteome_id);
    fs::write(dir.join(STATS_TEXT_FILE), &table).map_err(|e| e.to_string())?;
    let json = serde_json::to_string_pretty(&stats).map_err(|e| e.to_string())?;
    fs::write(dir.join(STATS_JSON_FILE), json + "\n").map_err(|e| e.to_string())?;
    Ok(table)
}

fn cmd_proteome(proteome_id: &str, parallel: usize, out: Option<PathBuf>, fetch: &FetchOpts) -> i32 {
    match resolve_accession(proteome_id) {
        Ok(r) if r.kind == AccessionKind::ProteomeId => {}
        _ => return usage(format!("'{proteome_id}' is not a proteome id")),
    }
    if parallel == 0 {
        return usage("--parallel must be at least 1");
    }
    let pipeline = Pipeline::with_defaults(clients(fetch));
    let manifest = match pipeline.clients.fetch_proteome_manifest(proteome_id) {
        Ok(m) => m,
        Err(e) => return failed(e),
    };
    let out = out.unwrap_or_else(|| PathBuf::from("daisy-out").join(&manifest.proteome_id));
    if let Err(e) = fs::create_dir_all(&out) {
        return failed(e);
    }
    let (entries, skipped) = process_manifest(&pipeline, &manifest, parallel, &out.join("structures"));
    for s in &skipped {
        eprintln!("skipped {}: {}", s.component, s.skip_reason.as_deref().unwrap_or(""));
    }
    for e in entries.iter().filter(|e| !e.processed()) {
        eprintln!("{} failed: {}", e.accession, e.error.as_deref().unwrap_or(""));
    }
    let file = EntriesFile {
        proteome_id: manifest.proteome_id.clone(),
        entries,
        skipped,
    };
    let written = serde_json::to_string_pretty(&file)
        .map_err(|e| e.to_string())
        .and_then(|j| fs::write(out.join(ENTRIES_FILE), j + "\n").map_err(|e| e.to_string()));
    if let Err(e) = written {
        return failed(e);
    }
    match write_stats(&out, &manifest.proteome_id, &file.entries) {
        Ok(table) => {
            print!("{table}");
            EXIT_DONE
        }
        Err(e) => failed(e),
    }
}

fn cmd_stats(path: &Path, as_json: bool) -> i32 {
    let file = if path.is_dir() {
        path.join(ENTRIES_FILE)
    } else {
        path.to_path_buf()
    };
    let parsed: Result<EntriesFile, String> = fs::read_to_string(&file)
        .map_err(|e| format!("{}: {e}", file.display()))
        .and_then(|t| serde_json::from_str(&t).map_err(|e| format!("{}: {e}", file.display())));
    let f = match parsed {
        Ok(f) => f,
        Err(e) => return failed(e),
    };
    match compute_proteome_stats(&f.entries) {
        Ok(stats) if as_json => {
            println!("{}", serde_json::to_string_pretty(&stats).unwrap_or_default());
            EXIT_DONE
        }
        Ok(stats) => {
            print!("{}", stats.to_table(&f.proteome_id));
            EXIT_DONE
        }
        Err(e) => failed(e),
    }
}

fn cmd_fetch(accession: &str, fasta: Option<PathBuf>, fetch: &FetchOpts) -> i32 {
    let r = match resolve_accession(accession) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let clients = clients(fetch);
    if r.kind == AccessionKind::ProteomeId {
        return match clients.fetch_proteome_manifest(&r.value) {
            Ok(m) => {
                for p in m.structure_plan() {
                    let s = p.structure.map_or_else(|| "-".to_string(), |s| s.value);
                    println!("{}\t{}", s, p.component);
                }
                EXIT_DONE
            }
            Err(e) => failed(e),
        };
    }
    match clients.load_structure(&r) {
        Ok((structure, record)) => {
            println!(
                "{}\t{}",
                record.path.display(),
                if record.from_cache { "cached" } else { "downloaded" }
            );
            if let Some(path) = fasta {
                let text: String = structure
                    .chains
                    .iter()
                    .map(|c| crate::structmodel::extract_sequence(c, &structure.accession))
                    .collect();
                if let Err(e) = fs::write(&path, text) {
                    return failed(e);
                }
            }
            EXIT_DONE
        }
        Err(e) => failed(e),
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

fn cmd_serve(port: u16, data_dir: PathBuf, workers: Option<usize>, fetch: &FetchOpts) -> i32 {
    let mut config = ServiceConfig::new(data_dir);
    if let Some(w) = workers {
        config.workers = w.max(1);
    }
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => return failed(e),
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(("0.0.0.0", port)).await {
            Ok(l) => l,
            Err(e) => return failed(format!("cannot bind port {port}: {e}")),
        };
        let service = match Service::start(config, Pipeline::with_defaults(clients(fetch))) {
            Ok(s) => s,
            Err(e) => return failed(e),
        };
        eprintln!(
            "listening on {}",
            listener.local_addr().map(|a| a.to_string()).unwrap_or_default()
        );
        let result = http::serve(listener, service.clone(), shutdown_signal()).await;
        let svc = service.clone();
        let _ = tokio::task::spawn_blocking(move || svc.shutdown()).await;
        match result {
            Ok(()) => EXIT_DONE,
            Err(e) => failed(e),
        }
    })
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_DONE };
        }
    };
    match cli.command {
        Command::Run {
            accession,
            subclasses,
            threshold,
            out,
            fetch,
        } => cmd_run(&accession, subclasses, threshold, out, &fetch),
        Command::Proteome {
            proteome_id,
            parallel,
            out,
            fetch,
        } => cmd_proteome(&proteome_id, parallel, out, &fetch),
        Command::Serve {
            port,
            data_dir,
            workers,
            fetch,
        } => cmd_serve(port, data_dir, workers, &fetch),
        Command::Stats { path, json } => cmd_stats(&path, json),
        Command::Fetch {
            accession,
            fasta,
            fetch,
        } => cmd_fetch(&accession, fasta, &fetch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors() {
        assert_eq!(run_cli(["daisy", "run", "??"]), EXIT_USAGE);
        assert_eq!(run_cli(["daisy", "run", "SYN1", "--bogus"]), EXIT_USAGE);
        assert_eq!(run_cli(["daisy"]), EXIT_USAGE);
        assert_eq!(run_cli(["daisy", "run", "SYN1", "--threshold", "1.5"]), EXIT_USAGE);
        assert_eq!(run_cli(["daisy", "run", "SYN1", "--subclasses", "9.9"]), EXIT_USAGE);
    }
}
