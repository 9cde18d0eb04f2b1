// SPDX-License-Identifier: Apache-2.0

//! `hgum`: validate schemas, dump schema ROMs, run messages through the
//! codecs and sweep the cycle model.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hgum::codec::{
    adapt_tokens, oracle_tokenize, parse_message, sw_deserialize_reverse, sw_serialize, value_from_tokens,
};
use hgum::rom::encode_rom;
use hgum::schema::{check_message, normalize, parse_client_schema, parse_schema, validate_schema};
use hgum::sim::{run_des, run_ser, sweep, sweep_csv, CycleModel, SweepKind};
use hgum::tokens::{write_ser_tokens, write_tokens};
use hgum::wire::{pack, unpack};
use hgum::{ClientSchema, DesMode, MessageValue, Phit, RomImage, SchemaDef, SchemaTree, SerMode, Token, WireConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hgum", version, about = "Schema compiler and streaming codecs for structured messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a schema, and optionally a client schema and a message against it.
    Validate {
        #[command(flatten)]
        schema: SchemaArgs,
        #[arg(long)]
        client: Option<PathBuf>,
        #[arg(long)]
        message: Option<PathBuf>,
    },
    /// Write the schema ROM dump (tagged when a client schema is given).
    Compile {
        #[command(flatten)]
        schema: SchemaArgs,
        #[arg(long)]
        client: Option<PathBuf>,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Encode a message along one path and check it decodes to the input.
    Roundtrip(RoundtripArgs),
    /// Sweep the loopback cycle model and write CSV.
    Bench {
        #[arg(long, value_enum)]
        kind: BenchKind,
        /// `a..b` (inclusive), `pow2:N`, or a comma list.
        #[arg(long, default_value = "pow2:8192")]
        lengths: String,
        #[command(flatten)]
        wire: WireArgs,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SchemaArgs {
    /// IDL file (JSON).
    schema: PathBuf,
    /// Name of the top-level struct.
    #[arg(long)]
    message_name: String,
    #[arg(long, default_value_t = 32)]
    tag_bits: u32,
}

#[derive(Args, Clone, Copy)]
struct WireArgs {
    #[arg(long, default_value_t = 16)]
    phit_bytes: usize,
    #[arg(long, default_value_t = 500)]
    frame_phits: usize,
    #[arg(long, default_value_t = 4)]
    length_bytes: usize,
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
}

impl WireArgs {
    fn config(self) -> WireConfig {
        WireConfig {
            phit_bytes: self.phit_bytes,
            length_bytes: self.length_bytes,
            max_frame_payload_phits: self.frame_phits,
            max_depth: self.max_depth,
        }
    }
}

#[derive(Args)]
struct RoundtripArgs {
    #[command(flatten)]
    schema: SchemaArgs,
    #[arg(long)]
    client: PathBuf,
    #[arg(long)]
    message: PathBuf,
    #[arg(long, value_enum, default_value_t = PathKind::Loopback)]
    path: PathKind,
    #[command(flatten)]
    wire: WireArgs,
    /// Write each wire as raw phits plus a `.meta` JSON sidecar. The
    /// loopback path appends the hop name to the file name.
    #[arg(long)]
    emit_wire: Option<PathBuf>,
    /// Write the last token stream in `.tokens` text form.
    #[arg(long)]
    emit_tokens: Option<PathBuf>,
    /// Flip bit `k` of the wire before it is decoded (the hardware-to-hardware
    /// wire on the loopback path).
    #[arg(long, value_name = "K")]
    inject_flip: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PathKind {
    SwHw,
    HwSw,
    HwHw,
    Loopback,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    Array,
    List,
}

/// A failure and the exit code it maps to.
enum Failure {
    Validation(String),
    Engine(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Engine(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Engine(m) => write!(f, "error: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn invalid(e: impl fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn engine(e: impl fmt::Display) -> Failure {
    Failure::Engine(e.to_string())
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_schema(args: &SchemaArgs) -> Outcome<(SchemaDef, SchemaTree)> {
    let def = parse_schema(&read(&args.schema)?, &args.message_name).map_err(invalid)?;
    let report = validate_schema(&def);
    if !report.is_empty() {
        return Err(invalid(format!("schema\n{report}")));
    }
    let tree = normalize(&def).map_err(invalid)?;
    Ok((def, tree))
}

fn load_client(path: &Path, tree: &SchemaTree, bits: u32) -> Outcome<ClientSchema> {
    if !(1..=64).contains(&bits) {
        return Err(invalid("--tag-bits must be 1..=64"));
    }
    parse_client_schema(&read(path)?, tree, bits).map_err(|e| invalid(format!("client schema: {e}")))
}

fn load_message(path: &Path, def: &SchemaDef) -> Outcome<MessageValue> {
    parse_message(&read(path)?, def).map_err(|e| invalid(format!("message: {e}")))
}

fn validate(schema: &SchemaArgs, client: Option<&Path>, message: Option<&Path>) -> Outcome {
    let (def, tree) = load_schema(schema)?;
    println!("schema: ok ({} nodes)", tree.node_count());
    if let Some(path) = client {
        let c = load_client(path, &tree, schema.tag_bits)?;
        println!("client schema: ok ({} tags)", c.entries().count());
    }
    if let Some(path) = message {
        let v = load_message(path, &def)?;
        let report = check_message(&v, &def);
        if !report.is_empty() {
            return Err(invalid(format!("message\n{report}")));
        }
        println!("message: ok");
    }
    Ok(())
}

fn compile(schema: &SchemaArgs, client: Option<&Path>, out: Option<&Path>) -> Outcome {
    let (_, tree) = load_schema(schema)?;
    let client = client.map(|p| load_client(p, &tree, schema.tag_bits)).transpose()?;
    let dump = encode_rom(&tree, client.as_ref()).dump();
    match out {
        Some(path) => write(path, dump),
        None => {
            print!("{dump}");
            Ok(())
        }
    }
}

/// Wire bytes as phits plus the unpadded length.
struct Wire {
    phits: Vec<Phit>,
    total_bytes: u64,
}

impl Wire {
    fn flip(&mut self, bit: u64) -> Outcome {
        let width = self.phits.first().map_or(0, Phit::width) as u64;
        let byte = bit / 8;
        if byte >= width * self.phits.len() as u64 {
            return Err(invalid(format!("--inject-flip {bit} is past the end of the wire")));
        }
        let phit = &mut self.phits[(byte / width) as usize];
        let mut bytes = phit.as_bytes().to_vec();
        bytes[(byte % width) as usize] ^= 1 << (bit % 8);
        *phit = Phit::new(bytes);
        Ok(())
    }

    fn emit(&self, path: &Path, hop: &str, cfg: &WireConfig) -> Outcome {
        let raw: Vec<u8> = self.phits.iter().flat_map(|p| p.as_bytes().iter().copied()).collect();
        write(path, raw)?;
        let meta = json!({
            "hop": hop,
            "phit_bytes": cfg.phit_bytes,
            "phits": self.phits.len(),
            "total_bytes": self.total_bytes,
        });
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta");
        write(Path::new(&meta_path), format!("{meta:#}\n"))
    }
}

struct Pipeline {
    def: SchemaDef,
    client: ClientSchema,
    tagged: Arc<RomImage>,
    untagged: Arc<RomImage>,
    cfg: WireConfig,
}

impl Pipeline {
    fn sw_to_hw_wire(&self, v: &MessageValue) -> Outcome<Wire> {
        let bytes = sw_serialize(v, &self.def, &self.cfg).map_err(engine)?;
        Ok(Wire {
            phits: pack(&bytes, self.cfg.phit_bytes),
            total_bytes: bytes.len() as u64,
        })
    }

    fn ser(&self, tokens: &[Token], mode: SerMode) -> Outcome<Wire> {
        let input = adapt_tokens(tokens).map_err(engine)?;
        let run = run_ser(&self.untagged, self.cfg, mode, &input).map_err(|e| engine(format!("serializer: {e}")))?;
        Ok(Wire {
            phits: run.phits,
            total_bytes: run.total_bytes,
        })
    }

    fn des(&self, wire: &Wire, mode: DesMode) -> Outcome<Vec<Token>> {
        run_des(&self.tagged, self.cfg, mode, &wire.phits)
            .map(|r| r.tokens)
            .map_err(|e| engine(format!("deserializer: {e}")))
    }

    fn value(&self, tokens: &[Token]) -> Outcome<MessageValue> {
        value_from_tokens(tokens, &self.def, &self.client).map_err(engine)
    }

    fn to_software(&self, wire: &Wire) -> Outcome<MessageValue> {
        let bytes = unpack(&wire.phits, wire.total_bytes as usize).map_err(engine)?;
        sw_deserialize_reverse(&bytes, &self.def, &self.cfg).map_err(|e| engine(format!("software decode: {e}")))
    }
}

/// Wires and tokens seen so far, kept for `--emit-*` even on failure.
#[derive(Default)]
struct Trace {
    wires: Vec<(&'static str, Wire)>,
    last_tokens: Option<Vec<Token>>,
}

impl Trace {
    fn hop(&mut self, hop: &'static str, mut wire: Wire, args: &RoundtripArgs) -> Outcome<&Wire> {
        let flip_here = args.path != PathKind::Loopback || hop == "hw-to-hw";
        if let (Some(bit), true) = (args.inject_flip, flip_here) {
            wire.flip(bit)?;
        }
        self.wires.push((hop, wire));
        Ok(&self.wires.last().expect("just pushed").1)
    }
}

fn execute(
    args: &RoundtripArgs,
    p: &Pipeline,
    value: &MessageValue,
    oracle: &[Token],
    trace: &mut Trace,
) -> Outcome<MessageValue> {
    match args.path {
        PathKind::SwHw => {
            let w = trace.hop("sw-to-hw", p.sw_to_hw_wire(value)?, args)?;
            let t = p.des(w, DesMode::FromSoftware)?;
            trace.last_tokens = Some(t.clone());
            check_tokens(&t, oracle)?;
            p.value(&t)
        }
        PathKind::HwSw => {
            let w = trace.hop("hw-to-sw", p.ser(oracle, SerMode::ToSoftware)?, args)?;
            p.to_software(w)
        }
        PathKind::HwHw => {
            let w = trace.hop("hw-to-hw", p.ser(oracle, SerMode::ToHardware)?, args)?;
            let t = p.des(w, DesMode::FromHardware)?;
            trace.last_tokens = Some(t.clone());
            check_tokens(&t, oracle)?;
            p.value(&t)
        }
        PathKind::Loopback => {
            let w = trace.hop("sw-to-hw", p.sw_to_hw_wire(value)?, args)?;
            let t1 = p.des(w, DesMode::FromSoftware)?;
            let w = trace.hop("hw-to-hw", p.ser(&t1, SerMode::ToHardware)?, args)?;
            let t2 = p.des(w, DesMode::FromHardware)?;
            let w = trace.hop("hw-to-sw", p.ser(&t2, SerMode::ToSoftware)?, args)?;
            let v = p.to_software(w);
            trace.last_tokens = Some(t2);
            v
        }
    }
}

fn first_difference(a: &[Token], b: &[Token]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y).or((a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn roundtrip(args: &RoundtripArgs) -> Outcome {
    let (def, tree) = load_schema(&args.schema)?;
    let client = load_client(&args.client, &tree, args.schema.tag_bits)?;
    let value = load_message(&args.message, &def)?;
    let cfg = args.wire.config();
    cfg.validate().map_err(invalid)?;
    let p = Pipeline {
        tagged: Arc::new(encode_rom(&tree, Some(&client))),
        untagged: Arc::new(encode_rom(&tree, None)),
        def,
        client,
        cfg,
    };
    let oracle = oracle_tokenize(&value, &p.def, &p.client);

    let mut trace = Trace::default();
    let result = execute(args, &p, &value, &oracle, &mut trace);
    let Trace { wires, last_tokens } = trace;

    // Artifacts are written even when decoding failed.
    if let Some(base) = &args.emit_wire {
        for (hop, wire) in &wires {
            let path = if args.path == PathKind::Loopback {
                let mut s = base.as_os_str().to_owned();
                s.push(format!(".{hop}"));
                PathBuf::from(s)
            } else {
                base.clone()
            };
            wire.emit(&path, hop, &cfg)?;
        }
    }
    if let Some(path) = &args.emit_tokens {
        let text = match &last_tokens {
            Some(t) => write_tokens(t),
            None => write_ser_tokens(&adapt_tokens(&oracle).map_err(engine)?),
        };
        write(path, text)?;
    }

    let recovered = result?;
    if recovered != value {
        let back = oracle_tokenize(&recovered, &p.def, &p.client);
        let at = first_difference(&back, &oracle).unwrap_or(0);
        return Err(engine(format!("round trip mismatch: recovered message differs at token {at}")));
    }
    let hops: Vec<String> = wires
        .iter()
        .map(|(hop, w)| format!("{hop} {} phits", w.phits.len()))
        .collect();
    println!("round trip ok: {} tokens; {}", oracle.len(), hops.join(", "));
    Ok(())
}

fn check_tokens(got: &[Token], want: &[Token]) -> Outcome {
    match first_difference(got, want) {
        None => Ok(()),
        Some(i) => Err(engine(format!("token stream differs from the reference at token {i}"))),
    }
}

fn parse_lengths(spec: &str) -> Outcome<Vec<usize>> {
    let bad = || invalid(format!("bad --lengths {spec:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let out = if let Some(max) = spec.strip_prefix("pow2:") {
        hgum::sim::powers_of_two(num(max)?)
    } else if let Some((a, b)) = spec.split_once("..") {
        (num(a)?..=num(b)?).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn bench(kind: BenchKind, lengths: &str, wire: WireArgs, out: Option<&Path>) -> Outcome {
    let lengths = parse_lengths(lengths)?;
    let cfg = wire.config();
    cfg.validate_framed().map_err(invalid)?;
    let kind = match kind {
        BenchKind::Array => SweepKind::Array,
        BenchKind::List => SweepKind::List,
    };
    let rows = sweep(kind, &lengths, cfg, &CycleModel::default()).map_err(engine)?;
    let csv = sweep_csv(&rows);
    match out {
        Some(path) => write(path, csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Validate {
            schema,
            client,
            message,
        } => validate(schema, client.as_deref(), message.as_deref()),
        Command::Compile { schema, client, out } => compile(schema, client.as_deref(), out.as_deref()),
        Command::Roundtrip(args) => roundtrip(args),
        Command::Bench {
            kind,
            lengths,
            wire,
            out,
        } => bench(*kind, lengths, *wire, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
