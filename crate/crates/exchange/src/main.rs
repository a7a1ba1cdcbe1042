use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context as _, Result};
use blstrs::G1Affine;
use clap::{Args, Parser, Subcommand};
use fde_core::kzg::Crs;
use fde_core::veck::{MaskHash, SessionMode, VeckParams, DEFAULT_CHUNK_BITS};
use fde_exchange::bench::{run_grid, Grid, CSV_HEADER};
use fde_exchange::client::{recover_from_ledger, SessionRecord};
use fde_exchange::transport::StreamTransport;
use fde_exchange::world::{FileLedger, LedgerAccess, World};
use fde_exchange::{
    encode_file, run_client, run_server, ClientIdentity, ClientOutcome, Context, RailKind, Scheme, ServerAssets,
    ServerIdentity, ServerOptions, SessionConfig,
};
use fde_payments::sig::SigningKey;
use fde_payments::Address;
use rand::rngs::OsRng;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "fde", version, about = "Sell and buy files for an atomic on-chain payment")]
struct Cli {
    /// TOML file with session defaults; flags and FDE_* variables win.
    #[arg(long, global = true, env = "FDE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reference string and optionally a shared ledger.
    Setup(SetupArgs),
    /// Print the commitment a buyer should pin for a file.
    Commit(CommitArgs),
    /// Sell a file to buyers connecting over TCP.
    Serve(ServeArgs),
    /// Buy a file from a server.
    Buy(BuyArgs),
    /// Time every scheme and rail; writes CSV.
    Bench(BenchArgs),
    /// Recover a purchase from a saved session once its key is on the ledger.
    Reveal(RevealArgs),
}

#[derive(Args)]
struct SetupArgs {
    #[arg(long, env = "FDE_CRS")]
    crs: PathBuf,
    /// Largest polynomial degree; at least the number of file scalars.
    #[arg(long)]
    max_degree: usize,
    #[arg(long, env = "FDE_LEDGER")]
    ledger: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    block_ms: u64,
    /// Genesis balance as NAME=AMOUNT; repeatable.
    #[arg(long = "fund", value_parser = parse_fund)]
    funds: Vec<(String, u64)>,
}

#[derive(Args)]
struct CommitArgs {
    #[arg(long, env = "FDE_CRS")]
    crs: PathBuf,
    #[arg(long)]
    file: PathBuf,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "FDE_CRS")]
    crs: PathBuf,
    #[arg(long)]
    file: PathBuf,
    #[arg(long, env = "FDE_LISTEN", default_value = "127.0.0.1:7878")]
    listen: String,
    #[arg(long, env = "FDE_LEDGER")]
    ledger: PathBuf,
    #[arg(long, env = "FDE_ADDRESS", default_value = "server")]
    address: String,
    /// Exit after this many sessions; runs forever if unset.
    #[arg(long)]
    sessions: Option<usize>,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct BuyArgs {
    #[arg(long, env = "FDE_CRS")]
    crs: PathBuf,
    #[arg(long, env = "FDE_CONNECT", default_value = "127.0.0.1:7878")]
    connect: String,
    #[arg(long, env = "FDE_LEDGER")]
    ledger: PathBuf,
    #[arg(long, env = "FDE_ADDRESS", default_value = "client")]
    address: String,
    /// Expected file commitment (compressed, hex).
    #[arg(long)]
    commitment: Option<String>,
    /// Comma-separated block positions; buys the whole file if unset.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<u64>>,
    #[arg(long)]
    out: PathBuf,
    /// Where to save the session for a later `reveal`.
    #[arg(long)]
    session_file: Option<PathBuf>,
    /// Server's ledger address, needed to open a channel.
    #[arg(long, default_value = "server")]
    server_address: String,
    #[arg(long, default_value_t = 10_000)]
    channel_capacity: u64,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Run the full scheme x rail grid.
    #[arg(long)]
    grid: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 4096])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [2.0f64])]
    betas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    rails: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct RevealArgs {
    #[arg(long)]
    session_file: PathBuf,
    #[arg(long, env = "FDE_CRS")]
    crs: PathBuf,
    #[arg(long, env = "FDE_LEDGER")]
    ledger: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    session: SessionArgs,
}

/// Session terms; each falls back to FDE_* and then the config file.
#[derive(Args, Default)]
struct SessionArgs {
    #[arg(long, env = "FDE_SCHEME")]
    scheme: Option<String>,
    #[arg(long, env = "FDE_RAIL")]
    rail: Option<String>,
    #[arg(long, env = "FDE_BETA")]
    beta: Option<f64>,
    #[arg(long, env = "FDE_PRICE")]
    price: Option<u64>,
    #[arg(long, env = "FDE_TIMEOUT_BLOCKS")]
    timeout_blocks: Option<u64>,
    #[arg(long, env = "FDE_CHUNK_BITS")]
    chunk_bits: Option<u32>,
    /// `sha256` or `algebraic`.
    #[arg(long, env = "FDE_MASK")]
    mask: Option<String>,
    #[arg(long, env = "FDE_PARAMS_SEED")]
    params_seed: Option<String>,
    /// Network timeout in milliseconds.
    #[arg(long, env = "FDE_IO_TIMEOUT_MS")]
    io_timeout_ms: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scheme: Option<String>,
    rail: Option<String>,
    beta: Option<f64>,
    price: Option<u64>,
    timeout_blocks: Option<u64>,
    chunk_bits: Option<u32>,
    mask: Option<String>,
    params_seed: Option<String>,
    io_timeout_ms: Option<u64>,
}

struct Resolved {
    cfg: SessionConfig,
    params_seed: String,
    io_timeout: Duration,
}

impl SessionArgs {
    fn resolve(&self, file: &FileConfig) -> Result<Resolved> {
        let mut cfg = SessionConfig::default();
        if let Some(s) = self.scheme.as_ref().or(file.scheme.as_ref()) {
            cfg.scheme = s.parse()?;
        }
        if let Some(r) = self.rail.as_ref().or(file.rail.as_ref()) {
            cfg.rail = r.parse()?;
        }
        cfg.beta = self.beta.or(file.beta).unwrap_or(cfg.beta);
        cfg.price = self.price.or(file.price).unwrap_or(cfg.price);
        cfg.timeout_blocks = self.timeout_blocks.or(file.timeout_blocks).unwrap_or(cfg.timeout_blocks);
        cfg.chunk_bits = self.chunk_bits.or(file.chunk_bits).unwrap_or(DEFAULT_CHUNK_BITS);
        if let Some(m) = self.mask.as_ref().or(file.mask.as_ref()) {
            cfg.mask = match m.to_ascii_lowercase().as_str() {
                "sha256" => MaskHash::Sha256,
                "algebraic" => MaskHash::Algebraic,
                _ => bail!("unknown mask `{m}`"),
            };
        }
        // Only the transparent backend exists.
        cfg.mode = SessionMode::TestOnly;
        let params_seed = self.params_seed.clone().or(file.params_seed.clone()).unwrap_or_else(|| "fde".into());
        let io_timeout = Duration::from_millis(self.io_timeout_ms.or(file.io_timeout_ms).unwrap_or(600_000));
        Ok(Resolved { cfg, params_seed, io_timeout })
    }
}

fn parse_fund(s: &str) -> std::result::Result<(String, u64), String> {
    let (name, amount) = s.split_once('=').ok_or("expected NAME=AMOUNT")?;
    Ok((name.to_string(), amount.parse().map_err(|e| format!("{e}"))?))
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&raw).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_context(crs: &Path, r: &Resolved) -> Result<Context> {
    let mut f = BufReader::new(File::open(crs).with_context(|| format!("opening {}", crs.display()))?);
    let crs = Crs::read_from(&mut f, &mut OsRng)?;
    let params = VeckParams::new(r.params_seed.as_bytes(), r.cfg.chunk_bits)?;
    Ok(Context::new(Arc::new(crs), params))
}

fn setup(a: &SetupArgs) -> Result<()> {
    let crs: Crs = Crs::setup(a.max_degree, &mut OsRng)?;
    let mut out = BufWriter::new(File::create(&a.crs)?);
    crs.write_to(&mut out)?;
    out.flush()?;
    println!("crs {} degree {} digest {}", a.crs.display(), a.max_degree, hex::encode(crs.digest()));
    if let Some(path) = &a.ledger {
        let funds: Vec<(Address, u64)> = a.funds.iter().map(|(n, v)| (Address(n.clone()), *v)).collect();
        FileLedger::create(path, a.block_ms, &funds)?;
        println!("ledger {} block_ms {}", path.display(), a.block_ms);
    }
    Ok(())
}

fn commit(a: &CommitArgs, file_cfg: &FileConfig) -> Result<()> {
    let r = a.session.resolve(file_cfg)?;
    let ctx = load_context(&a.crs, &r)?;
    let enc = encode_file(&fs::read(&a.file)?)?;
    let assets = ServerAssets::new(ctx, &enc)?;
    println!("commitment {}", hex::encode(assets.file.commitment().to_compressed()));
    println!("scalars {} bytes {}", enc.ell() + 1, enc.byte_len());
    Ok(())
}

fn serve(a: &ServeArgs, file_cfg: &FileConfig) -> Result<()> {
    let r = a.session.resolve(file_cfg)?;
    r.cfg.validate()?;
    let ctx = load_context(&a.crs, &r)?;
    let enc = encode_file(&fs::read(&a.file)?)?;
    let assets = ServerAssets::new(ctx, &enc)?;
    let ledger = FileLedger::open(&a.ledger)?;
    let me = ServerIdentity { address: Address(a.address.clone()), signing_key: SigningKey::generate(&mut OsRng) };
    let listener = TcpListener::bind(&a.listen)?;
    println!("listening {} commitment {}", listener.local_addr()?, hex::encode(assets.file.commitment().to_compressed()));
    std::io::stdout().flush()?;
    for (served, stream) in listener.incoming().enumerate() {
        let mut t = StreamTransport::tcp(stream?, r.io_timeout)?;
        match run_server(&r.cfg, &assets, &me, &ServerOptions::default(), &ledger, &mut t, &mut OsRng) {
            Ok(rep) => println!("session {served} {:?} bytes_sent {}", rep.outcome, rep.bytes_sent),
            Err(e) => eprintln!("session {served} failed: {e}"),
        }
        std::io::stdout().flush()?;
        if a.sessions.is_some_and(|n| served + 1 >= n) {
            break;
        }
    }
    Ok(())
}

fn buy(a: &BuyArgs, file_cfg: &FileConfig) -> Result<()> {
    let mut r = a.session.resolve(file_cfg)?;
    r.cfg.subset = a.subset.clone();
    r.cfg.validate()?;
    let ctx = load_context(&a.crs, &r)?;
    let ledger = FileLedger::open(&a.ledger)?;
    let address = Address(a.address.clone());
    let channel = match r.cfg.rail {
        RailKind::Lightning => {
            let server = Address(a.server_address.clone());
            let cap = a.channel_capacity;
            Some(ledger.transact(|w| w.open_channel(&address, &server, cap))??)
        }
        _ => None,
    };
    let me = ClientIdentity { address, signing_key: SigningKey::generate(&mut OsRng), channel };
    let pinned = a.commitment.as_deref().map(parse_commitment).transpose()?;
    let stream = TcpStream::connect(&a.connect).with_context(|| format!("connecting to {}", a.connect))?;
    let mut t = StreamTransport::tcp(stream, r.io_timeout)?;
    let report = run_client(&ctx, &r.cfg, &me, pinned.as_ref(), &ledger, &mut t, &mut OsRng)?;
    if let (Some(path), Some(record)) = (&a.session_file, &report.record) {
        fs::write(path, serde_json::to_vec_pretty(record)?)?;
    }
    if let Some(ch) = channel {
        ledger.transact(|w| {
            let World { ledger, channels } = w;
            channels.iter_mut().find(|c| c.id() == ch).map(|c| c.close(ledger))
        })?;
    }
    let t = report.timings;
    eprintln!("verify_ms {:.1} dec_ms {:.1} bytes_sent {}", t.verify_ms, t.dec_ms, report.bytes_sent);
    match report.outcome {
        ClientOutcome::Delivered(bytes) => {
            fs::write(&a.out, &bytes)?;
            println!("delivered {} bytes to {}", bytes.len(), a.out.display());
            Ok(())
        }
        ClientOutcome::Aborted(reason) => bail!("aborted before payment: {reason}"),
        ClientOutcome::Refunded(reason) => bail!("refunded after {reason}"),
        ClientOutcome::PaidUndelivered(reason) => bail!("paid but could not decode: {reason}"),
    }
}

fn parse_commitment(s: &str) -> Result<G1Affine> {
    let raw: [u8; 48] =
        hex::decode(s)?.try_into().map_err(|_| anyhow!("commitment must be 48 bytes"))?;
    Option::from(G1Affine::from_compressed(&raw)).ok_or_else(|| anyhow!("commitment is not a curve point"))
}

fn parse_list<T>(v: &Option<Vec<String>>, all: &[T]) -> Result<Vec<T>>
where
    T: Copy + std::str::FromStr<Err = fde_exchange::ExchangeError>,
{
    match v {
        None => Ok(all.to_vec()),
        Some(names) => names.iter().map(|n| n.parse().map_err(Into::into)).collect(),
    }
}

fn bench(a: &BenchArgs, file_cfg: &FileConfig) -> Result<()> {
    let r = a.session.resolve(file_cfg)?;
    let grid = if a.grid {
        Grid {
            schemes: parse_list(&a.schemes, &Scheme::ALL)?,
            rails: parse_list(&a.rails, &RailKind::ALL)?,
            betas: a.betas.clone(),
            sizes: a.sizes.clone(),
            chunk_bits: r.cfg.chunk_bits,
            seed: a.seed,
        }
    } else {
        Grid {
            schemes: vec![r.cfg.scheme],
            rails: vec![r.cfg.rail],
            betas: vec![r.cfg.beta],
            sizes: a.sizes.clone(),
            chunk_bits: r.cfg.chunk_bits,
            seed: a.seed,
        }
    };
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout()),
    };
    writeln!(out, "{CSV_HEADER}")?;
    let mut failed = None;
    run_grid(&grid, |row| {
        if let Err(e) = writeln!(out, "{}", row.csv()).and_then(|_| out.flush()) {
            failed.get_or_insert(e);
        }
    })?;
    failed.map_or(Ok(()), |e| Err(e.into()))
}

fn reveal(a: &RevealArgs, file_cfg: &FileConfig) -> Result<()> {
    let record: SessionRecord = serde_json::from_slice(&fs::read(&a.session_file)?)?;
    let mut r = a.session.resolve(file_cfg)?;
    r.cfg.chunk_bits = record.chunk_bits;
    let ctx = load_context(&a.crs, &r)?;
    let ledger = FileLedger::open(&a.ledger)?;
    let bytes = recover_from_ledger(&ctx, &record, &ledger, &mut OsRng)?;
    fs::write(&a.out, &bytes)?;
    println!("recovered {} bytes to {}", bytes.len(), a.out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file_cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Setup(a) => setup(a),
        Command::Commit(a) => commit(a, &file_cfg),
        Command::Serve(a) => serve(a, &file_cfg),
        Command::Buy(a) => buy(a, &file_cfg),
        Command::Bench(a) => bench(a, &file_cfg),
        Command::Reveal(a) => reveal(a, &file_cfg),
    }
}
