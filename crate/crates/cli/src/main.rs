use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ttimatch::coker::{Direction, StringSource};
use ttimatch::harness::{self, content_hash, SweepConfig};
use ttimatch::{
    build_decoder, BitVector, Catalog, CodeEntry, CokerBasisData, CssCode, DecoderKind, DecoderParams, Error, Result,
    Sector,
};

#[derive(Parser)]
#[command(name = "ttimatch", version, about = "Decoders and Monte Carlo tools for 2D translation-invariant codes")]
struct Cli {
    /// Code catalog (JSON); the built-in catalog when omitted.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,

    /// Directory holding cached cokernel basis data.
    #[arg(long, global = true, env = "TTIMATCH_CACHE", default_value = ".ttimatch-cache")]
    cache_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code construction queries.
    Code {
        #[command(subcommand)]
        what: CodeCommand,
    },
    /// Build or load the cokernel basis and print its summary.
    Basis {
        name: String,
        /// Ignore any cached copy.
        #[arg(long)]
        rebuild: bool,
    },
    /// Print the verified short strings of every basis element.
    Shortstrings {
        name: String,
        /// Also write them as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a single syndrome and print the correction as JSON.
    Decode {
        name: String,
        #[arg(long)]
        decoder: DecoderKind,
        /// Bit string or JSON list of violated check indices.
        #[arg(long)]
        syndrome: PathBuf,
        /// Channel prior for BP.
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Monte Carlo sweep over physical error rates.
    Mc(McArgs),
    /// Pseudothreshold from a sweep report.
    Pseudothreshold { report: PathBuf },
    /// Threshold crossing from sweeps at several lattice sizes.
    Threshold {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Print n, k, orthogonality and the catalog distance.
    Info { name: String },
}

#[derive(Args)]
struct McArgs {
    name: String,
    #[arg(long)]
    decoder: DecoderKind,
    /// Comma-separated physical error rates.
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Adaptive trial counts until enough failures are seen.
    #[arg(long)]
    paper_fidelity: bool,
    #[arg(long)]
    workers: Option<usize>,
    /// TOML or JSON file with `decoder` and `sweep` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; a JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    decoder: Option<DecoderParams>,
    #[serde(default)]
    sweep: Option<SweepConfig>,
}

fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn default_params(kind: DecoderKind) -> DecoderParams {
    match kind {
        DecoderKind::Intermediate => DecoderParams::intermediate(),
        _ => DecoderParams::small(),
    }
}

fn parse_syndrome(text: &str, n_checks: usize) -> Result<BitVector> {
    let t = text.trim();
    if t.starts_with('[') {
        let idx: Vec<usize> = serde_json::from_str(t)?;
        return BitVector::from_indices(n_checks, &idx);
    }
    let bits: Vec<bool> = t
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("unexpected character `{c}` in syndrome"))),
        })
        .collect::<Result<_>>()?;
    if bits.len() != n_checks {
        return Err(Error::DimensionMismatch { expected: n_checks, got: bits.len() });
    }
    Ok(BitVector::from_bools(&bits))
}

struct Ctx {
    catalog: Catalog,
    cache_dir: PathBuf,
}

impl Ctx {
    fn load(&self, name: &str) -> Result<(CodeEntry, CssCode)> {
        let entry = self.catalog.get(name)?.clone();
        let code = entry.build()?;
        Ok((entry, code))
    }

    fn basis(&self, entry: &CodeEntry, code: &CssCode, rebuild: bool) -> Result<CokerBasisData> {
        CokerBasisData::load_or_build(entry, code, Some(&self.cache_dir), rebuild)
    }

    fn basis_for(&self, kind: DecoderKind, entry: &CodeEntry, code: &CssCode) -> Result<Option<CokerBasisData>> {
        match kind {
            DecoderKind::Small | DecoderKind::Intermediate => Ok(Some(self.basis(entry, code, false)?)),
            _ => Ok(None),
        }
    }
}

fn site_list(lat: ttimatch::Lattice, v: &BitVector) -> String {
    v.ones_iter()
        .map(|c| {
            let (i, j) = lat.coords(c);
            format!("({i},{j})")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn run(cli: Cli) -> Result<()> {
    let catalog = match &cli.catalog {
        Some(p) => Catalog::load(p)?,
        None => Catalog::builtin(),
    };
    let ctx = Ctx { catalog, cache_dir: cli.cache_dir };
    match cli.command {
        Command::Code { what: CodeCommand::Info { name } } => {
            let (entry, code) = ctx.load(&name)?;
            println!("code: {}", entry.name);
            println!("lattice: {}x{}", entry.l, entry.m);
            println!("n: {}", code.n());
            println!("k: {}", code.k());
            println!("orthogonal: {}", code.is_orthogonal());
            println!("d: {}", entry.d);
        }
        Command::Basis { name, rebuild } => {
            let (entry, code) = ctx.load(&name)?;
            let data = ctx.basis(&entry, &code, rebuild)?;
            println!("code: {}", entry.name);
            println!("coker dimension: {}", data.r);
            println!("period: {}", data.period);
            println!("index\tscale\tpublished\tpattern");
            for (i, b) in data.basis.iter().enumerate() {
                let published = entry
                    .published_scales
                    .as_ref()
                    .and_then(|s| s.get(i))
                    .map_or("-".to_string(), |s| s.to_string());
                println!("{i}\t{}\t{published}\t{}", b.scale, site_list(data.lattice, &b.pattern));
            }
        }
        Command::Shortstrings { name, out } => {
            let (entry, code) = ctx.load(&name)?;
            let data = ctx.basis(&entry, &code, false)?;
            let lat = data.lattice;
            println!("index\tdirection\tstep\tweight\tsource\tverified");
            for s in &data.short_strings {
                let b = &data.basis[s.basis_index].pattern;
                let (ux, uy) = s.direction.unit();
                let step = s.step as i64;
                let target = lat.translate_vector(b, ux * step, uy * step).xor(b)?;
                let ok = code.syndrome(&s.error, data.sector)? == target;
                let dir = match s.direction {
                    Direction::Horizontal => "x",
                    Direction::Vertical => "y",
                };
                let source = match s.source {
                    StringSource::Transfer => "transfer",
                    StringSource::Search => "search",
                    StringSource::Window => "window",
                };
                println!("{}\t{dir}\t{}\t{}\t{source}\t{ok}", s.basis_index, s.step, s.error.weight());
            }
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_vec_pretty(&data.short_strings)?)?;
            }
        }
        Command::Decode { name, decoder, syndrome, p, config } => {
            let (entry, code) = ctx.load(&name)?;
            let params = match config {
                Some(c) => load_config(&c)?.decoder.unwrap_or_else(|| default_params(decoder)),
                None => default_params(decoder),
            };
            let s = parse_syndrome(&std::fs::read_to_string(&syndrome)?, code.num_checks())?;
            let data = ctx.basis_for(decoder, &entry, &code)?;
            let dec = build_decoder(decoder, &entry, &code, data.as_ref(), &params, p)?;
            let out = dec.decode(&s)?;
            let json = serde_json::json!({
                "code": entry.name,
                "decoder": dec.name(),
                "sector": Sector::X,
                "failed": out.failed,
                "correction": out.correction.as_ref().map(|c| c.support()),
                "diagnostics": out.diagnostics,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        Command::Mc(args) => run_mc(&ctx, args)?,
        Command::Pseudothreshold { report } => {
            let points = harness::read_csv(&report)?;
            let c = harness::estimate_pseudothreshold(&points)?;
            println!("pseudothreshold: {:.6} +/- {:.6}", c.value, c.uncertainty);
        }
        Command::Threshold { reports } => {
            let curves = reports.iter().map(|r| harness::read_csv(r)).collect::<Result<Vec<_>>>()?;
            let c = harness::estimate_threshold_crossing(&curves)?;
            println!("threshold: {:.6} +/- {:.6}", c.value, c.uncertainty);
        }
    }
    Ok(())
}

fn run_mc(ctx: &Ctx, args: McArgs) -> Result<()> {
    let file = match &args.config {
        Some(c) => load_config(c)?,
        None => FileConfig::default(),
    };
    let params = file.decoder.unwrap_or_else(|| default_params(args.decoder));
    let mut sweep = file.sweep.unwrap_or_default();
    if !args.p.is_empty() {
        sweep.ps = args.p;
    }
    if let Some(t) = args.trials {
        sweep.trials = t;
    }
    if let Some(s) = args.seed {
        sweep.seed = s;
    }
    if let Some(w) = args.workers {
        sweep.workers = w;
    }
    sweep.paper_fidelity |= args.paper_fidelity;
    if sweep.ps.is_empty() {
        return Err(Error::Parse("no physical error rates given".into()));
    }

    let (entry, code) = ctx.load(&args.name)?;
    let data = ctx.basis_for(args.decoder, &entry, &code)?;
    let kind = args.decoder;
    let mut report = harness::run_sweep(&code, &params, &sweep, |p| {
        build_decoder(kind, &entry, &code, data.as_ref(), &params, p)
    })?;
    if let Some(d) = &data {
        report.basis_hash = Some(content_hash(&serde_json::to_vec(d)?));
    }
    let csv = report.to_csv()?;
    print!("{csv}");
    if let Some(c) = report.pseudothreshold {
        eprintln!("pseudothreshold: {:.6} +/- {:.6}", c.value, c.uncertainty);
    }
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-{}-seed{}.csv", entry.name, kind, sweep.seed)));
    report.write(&out)?;
    eprintln!("wrote {} and {}", out.display(), out.with_extension("json").display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
