//! `ccb`: partition graphs, sweep the toy family, segment images and score
//! segmentations through the ccb service.
//!
//! Without `--server` an in-process service is started on a loopback port,
//! so every command goes through the same HTTP path either way.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use base64::Engine as _;
use ccb_api::*;
use ccb_client::{Client, ClientError, ErrorKind};
use ccb_core::formats::{
    parse_config, parse_edge_list, parse_grid, parse_partition, write_embedding, write_partition,
    write_sweep, write_trace,
};
use ccb_core::{BalanceMode, CostKind, Embedding, IrrqConfig, LabelMap, MetricsRow, SweepFamily};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "ccb",
    about = "Balanced graph cuts and image segmentation",
    disable_version_flag = true
)]
struct Cli {
    /// Base URL of a running service; omitted, one is started in-process.
    #[arg(long, global = true, env = "CCB_SERVER")]
    server: Option<String>,
    /// Worker threads for the in-process service (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Print the version and the solver defaults, then exit.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Partition a graph given as an edge list.
    Partition(PartitionArgs),
    /// Brute-force argmin classes of the toy graph over a parameter grid.
    Sweep(SweepArgs),
    /// Segment an image.
    Segment(SegmentArgs),
    /// Score a partition against ground truths.
    Eval(EvalArgs),
    /// Write an IRRQ embedding and its trace.
    Embed(EmbedArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Cut,
    Ccb,
    Bh,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ratio,
    Normalized,
}

impl From<ModeArg> for BalanceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ratio => BalanceMode::Ratio,
            ModeArg::Normalized => BalanceMode::Normalized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Multiway,
    Hierarchical,
    Brute,
}

/// Solver settings shared by the commands that run IRRQ.
#[derive(Args)]
struct SolverArgs {
    /// `key = value` file with solver settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverArgs {
    fn resolve(&self, default_k: usize) -> Result<IrrqConfig, Failure> {
        let mut cfg = IrrqConfig {
            k: default_k,
            ..Default::default()
        };
        if let Some(path) = &self.config {
            cfg = parse_config(&read_text(path)?, cfg)?;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PartitionArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "ccb")]
    cost: CostArg,
    /// Exponent of the Bühler–Hein cost.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "ratio")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "multiway")]
    method: MethodArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Partition file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "0.05:0.05:0.95")]
    alpha_grid: String,
    /// `τ` values for `--cost ccb`.
    #[arg(long)]
    tau_grid: Option<String>,
    /// `p` values for `--cost bh`.
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long, value_enum, default_value = "ccb")]
    cost: CostArg,
    #[arg(long, value_enum, default_value = "ratio")]
    mode: ModeArg,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImageMethodArg {
    Multiway,
    Hierarchical,
}

#[derive(Args)]
struct SegmentArgs {
    image: PathBuf,
    #[arg(long, value_enum, default_value = "normalized")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "multiway")]
    method: ImageMethodArg,
    #[arg(long, default_value_t = AffinityParams::default().radius)]
    radius: f64,
    /// Kernel scale; defaults to the median in-radius Lab distance.
    #[arg(long)]
    sigma: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Ground truth: partition file or label image. Repeatable.
    #[arg(long)]
    gt: Vec<PathBuf>,
    /// Writes `<prefix>.png`, `<prefix>_color.png`, `<prefix>.part` and,
    /// with `--gt`, `<prefix>_metrics.csv`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    partition: PathBuf,
    /// Partition files or label images.
    gts: Vec<PathBuf>,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "ratio")]
    mode: ModeArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// Message plus exit code: 1 I/O, 2 configuration, 3 solver.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn io(msg: impl Into<String>) -> Self {
        Failure {
            code: 1,
            msg: msg.into(),
        }
    }

    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }
}

fn code_of(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io => 1,
        ErrorKind::Config => 2,
        ErrorKind::Solver => 3,
    }
}

impl From<ccb_core::Error> for Failure {
    fn from(e: ccb_core::Error) -> Self {
        Failure {
            code: code_of(e.category().into()),
            msg: e.to_string(),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Failure {
            code: code_of(e.kind()),
            msg: e.to_string(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, data).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("png" | "pgm" | "ppm" | "pnm")
    )
}

/// Raw labels from a partition file or a label image (pixel value = label),
/// with the image size when there is one.
fn read_labels(path: &Path) -> Result<(Vec<usize>, Option<(u32, u32)>), Failure> {
    if is_image(path) {
        let img = image::open(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        let gray = img.to_luma16();
        let dims = gray.dimensions();
        return Ok((gray.pixels().map(|p| p.0[0] as usize).collect(), Some(dims)));
    }
    let part = parse_partition(&read_text(path)?)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Ok((part.into_labels(), None))
}

fn read_graph(path: &Path) -> Result<GraphSpec, Failure> {
    let g = parse_edge_list(&read_text(path)?)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Ok(GraphSpec::from(&g))
}

fn encode_png<P, C>(img: &image::ImageBuffer<P, C>) -> Result<Vec<u8>, Failure>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Failure::io(format!("png encoding: {e}")))?;
    Ok(buf.into_inner())
}

async fn partition(client: &Client, a: &PartitionArgs) -> Result<(), Failure> {
    let mut config = a.solver.resolve(2)?;
    let mode = a.mode.into();
    let cost = match a.cost {
        CostArg::Cut => CostKind::Cut,
        CostArg::Ccb => CostKind::Ccb {
            tau: config.tau,
            mode,
        },
        CostArg::Bh => CostKind::Bh { p: a.p, mode },
    };
    cost.validate()?;
    let method = match a.method {
        MethodArg::Multiway => PartitionMethod::Multiway,
        MethodArg::Hierarchical => PartitionMethod::Hierarchical,
        MethodArg::Brute => PartitionMethod::Brute,
    };
    if let CostKind::Ccb { tau, .. } = cost {
        config.tau = tau;
    }
    let req = PartitionRequest {
        graph: read_graph(&a.graph)?,
        cost,
        method,
        config,
    };
    let resp = client.partition(&req).await?;
    write_file(&a.out, write_partition(&resp.partition()?).as_bytes())?;
    let stats = serde_json::json!({
        "cost": resp.cost,
        "k": resp.k,
        "iterations": resp.iterations,
        "wall_time_s": resp.wall_time_s,
    });
    println!("{stats}");
    Ok(())
}

async fn sweep(client: &Client, a: &SweepArgs) -> Result<(), Failure> {
    let mode = a.mode.into();
    let (family, grid) = match a.cost {
        CostArg::Ccb if a.p_grid.is_none() => (
            SweepFamily::Ccb(mode),
            a.tau_grid.as_deref().unwrap_or("0.05:0.05:2"),
        ),
        CostArg::Bh if a.tau_grid.is_none() => (
            SweepFamily::Bh(mode),
            a.p_grid.as_deref().unwrap_or("1.1:0.1:10"),
        ),
        CostArg::Cut => {
            return Err(Failure::config(
                "the sweep needs a parameterized cost: ccb or bh",
            ))
        }
        _ => {
            return Err(Failure::config(
                "--tau-grid goes with --cost ccb, --p-grid with --cost bh",
            ))
        }
    };
    let req = SweepRequest {
        alphas: parse_grid(&a.alpha_grid)?,
        params: parse_grid(grid)?,
        family,
    };
    let rows = client.sweep(&req).await?.rows;
    emit(a.out.as_deref(), &write_sweep(&rows))
}

async fn segment(client: &Client, a: &SegmentArgs) -> Result<(), Failure> {
    let config = a.solver.resolve(2)?;
    let bytes =
        std::fs::read(&a.image).map_err(|e| Failure::io(format!("{}: {e}", a.image.display())))?;
    // decode once locally so unreadable images fail before any work
    let dims = image::load_from_memory(&bytes)
        .map_err(|e| Failure::io(format!("{}: {e}", a.image.display())))?
        .to_rgb8()
        .dimensions();
    let mut gts = Vec::new();
    for path in &a.gt {
        let (labels, size) = read_labels(path)?;
        let ok = match size {
            Some(s) => s == dims,
            None => labels.len() == dims.0 as usize * dims.1 as usize,
        };
        if !ok {
            return Err(Failure::config(format!(
                "{}: ground truth does not match the {}x{} image",
                path.display(),
                dims.0,
                dims.1
            )));
        }
        gts.push(labels);
    }
    let method = match a.method {
        ImageMethodArg::Multiway => ImageMethod::Multiway,
        ImageMethodArg::Hierarchical => ImageMethod::Hierarchical,
    };
    let req = SegmentRequest {
        image_base64: base64::engine::general_purpose::STANDARD.encode(&bytes),
        method,
        mode: a.mode.into(),
        affinity: AffinityParams {
            radius: a.radius,
            sigma: a.sigma,
            ..Default::default()
        },
        config: config.clone(),
    };
    let seg = client.segment(&req).await?;
    let map = LabelMap::new(seg.width, seg.height, seg.labels.clone())?;
    let prefix = a.out_prefix.display().to_string();
    write_file(
        Path::new(&format!("{prefix}.png")),
        &encode_png(&map.to_gray16())?,
    )?;
    write_file(
        Path::new(&format!("{prefix}_color.png")),
        &encode_png(&map.colorize())?,
    )?;
    write_file(
        Path::new(&format!("{prefix}.part")),
        write_partition(&map.to_partition()?).as_bytes(),
    )?;

    let mut stats = serde_json::json!({
        "k": map.k(),
        "sigma": seg.sigma,
        "iterations": seg.iterations,
        "degree_spread": seg.degree_spread,
        "wall_time_s": seg.wall_time_s,
    });
    if !gts.is_empty() {
        let m = client
            .eval(&EvalRequest {
                segmentation: seg.labels.iter().map(|&l| l as usize).collect(),
                ground_truths: gts,
            })
            .await?;
        let row = MetricsRow {
            image: a
                .image
                .file_name()
                .map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
            method: format!("{:?}", method).to_lowercase(),
            tau: config.tau,
            k: config.k,
            covering: m.covering,
            pri: m.pri,
            voi: m.voi,
            degree_spread: seg.degree_spread,
            runtime_s: seg.wall_time_s,
        };
        let csv = format!("{}\n{}\n", MetricsRow::HEADER, row.to_csv());
        write_file(Path::new(&format!("{prefix}_metrics.csv")), csv.as_bytes())?;
        stats["covering"] = m.covering.into();
        stats["pri"] = m.pri.into();
        stats["voi"] = m.voi.into();
    }
    println!("{stats}");
    Ok(())
}

async fn eval(client: &Client, a: &EvalArgs) -> Result<(), Failure> {
    if a.gts.is_empty() {
        return Err(Failure::config(
            "at least one ground-truth file is required",
        ));
    }
    let (segmentation, _) = read_labels(&a.partition)?;
    let ground_truths = a
        .gts
        .iter()
        .map(|p| read_labels(p).map(|(l, _)| l))
        .collect::<Result<Vec<_>, _>>()?;
    let m = client
        .eval(&EvalRequest {
            segmentation,
            ground_truths,
        })
        .await?;
    emit(
        a.out.as_deref(),
        &format!("covering,pri,voi\n{},{},{}\n", m.covering, m.pri, m.voi),
    )
}

async fn embed(client: &Client, a: &EmbedArgs) -> Result<(), Failure> {
    let config = a.solver.resolve(1)?;
    let mode = a.mode.into();
    let resp = client
        .embed(&EmbedRequest {
            graph: read_graph(&a.graph)?,
            mode,
            config: config.clone(),
        })
        .await?;
    let n = resp.rows.len();
    let flat: Vec<f64> = resp.rows.iter().flatten().copied().collect();
    let y = Embedding::from_matrix(ccb_core::nalgebra::DMatrix::from_row_slice(
        n, config.k, &flat,
    ));
    write_file(&a.out, write_embedding(&y, config.tau, mode).as_bytes())?;
    if let Some(t) = &a.trace {
        write_file(t, write_trace(&resp.trace).as_bytes())?;
    }
    println!(
        "{}",
        serde_json::json!({"iterations": resp.trace.len(), "stop": resp.stop, "theta_hat": resp.theta_hat, "kappa": resp.kappa})
    );
    Ok(())
}

fn print_version() {
    let v = VersionResponse::current();
    let c = &v.irrq;
    let e = &v.eigen;
    let a = &v.affinity;
    println!("ccb {}", v.version);
    println!("tau domain: {}", v.tau_domain);
    println!(
        "irrq: tau={:?} k={} kappa_tilde={:?} max_iters={} rel_cost_tol={:?} eig_tol={:?} eig_max_iters={} seed={}",
        c.tau, c.k, c.kappa_tilde, c.max_iters, c.rel_cost_tol, c.eig_tol, c.eig_max_iters, c.seed
    );
    println!(
        "eigensolver: tol={:?} max_iters={} dense_threshold={} guard={}",
        e.tol, e.max_iters, e.dense_threshold, e.guard
    );
    println!(
        "affinity: radius={:?} sigma=median min_weight={:?} max_edges={}",
        a.radius, a.min_weight, a.max_edges
    );
}

async fn run(cli: Cli) -> Result<(), Failure> {
    let Some(command) = cli.command else {
        return Err(Failure::config("no command given; see --help"));
    };
    let base = match cli.server {
        Some(url) => {
            if cli.threads > 0 {
                eprintln!(
                    "ccb: --threads only sizes the in-process service; ignored with --server"
                );
            }
            url
        }
        None => {
            if cli.threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cli.threads)
                    .build_global()
                    .map_err(|e| Failure::config(format!("--threads: {e}")))?;
            }
            ccb_server::spawn_local(ccb_server::ServerConfig::default())
                .await
                .map_err(|e| Failure::io(format!("cannot start the in-process service: {e}")))?
        }
    };
    let client = Client::new(base);
    match &command {
        Command::Partition(a) => partition(&client, a).await,
        Command::Sweep(a) => sweep(&client, a).await,
        Command::Segment(a) => segment(&client, a).await,
        Command::Eval(a) => eval(&client, a).await,
        Command::Embed(a) => embed(&client, a).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        print_version();
        return ExitCode::SUCCESS;
    }
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ccb: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
