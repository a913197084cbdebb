use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "figuresdf", version, about = "Articulated SDF figure pipeline", arg_required_else_help = true)]
pub struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Renderer worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FIGURESDF_THREADS")]
    pub threads: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a watertight OBJ mesh into an SDFG grid.
    Mesh2sdf(Mesh2SdfArgs),
    /// Split a rigged OBJ into watertight body-part meshes.
    Split(SplitArgs),
    /// Place body-part grids along a skeleton and write a scene file.
    Assemble(AssembleArgs),
    /// Sphere trace a scene into an image.
    Render(RenderArgs),
    /// Export an oriented point cloud of a scene.
    Pointcloud(PointcloudArgs),
    /// Reconstruct a mesh from a point cloud by ball pivoting.
    Bpa(BpaArgs),
    /// Pose lifting: synthetic data, training, prediction, evaluation.
    #[command(subcommand, arg_required_else_help = true)]
    Poselift(PoseliftCommand),
    /// Grid and pose metrics.
    #[command(subcommand, arg_required_else_help = true)]
    Metrics(MetricsCommand),
}

#[derive(Debug, Args)]
pub struct Mesh2SdfArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub res: usize,
    /// Padding around the mesh bounds, as a fraction of the largest extent.
    #[arg(long, default_value_t = 0.1)]
    pub pad: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Skeleton the mesh was modeled on; writes the part's anchors next to
    /// the grid.
    #[arg(long, requires = "part")]
    pub skeleton: Option<PathBuf>,
    /// Body part the mesh represents.
    #[arg(long, requires = "skeleton")]
    pub part: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON `{"names": [...], "weights": [[...], ...]}` with one row per vertex.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Directory of `<part>.sdfg` grids; missing right parts mirror the left.
    #[arg(long)]
    pub parts: PathBuf,
    /// JSON map from part name to `{"width": w, "height": h}` in meters.
    #[arg(long)]
    pub mask_sizes: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderMode {
    Depth,
    Mask,
    Uv,
    Lit,
    Textured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ViewArg {
    Front,
    Left,
    Back,
    Right,
    Custom,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: RenderMode,
    #[arg(long, value_enum, default_value = "front")]
    pub view: ViewArg,
    /// Camera JSON for `--view custom`.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Direction the light travels, `x,y,z` (lit mode; default along the view).
    #[arg(long, value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    pub light: Option<Vec<f64>>,
    /// Directory of `<part>.obj` meshes for UV mode.
    #[arg(long)]
    pub parts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PointcloudArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub views: usize,
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BpaArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Ball radius; repeat for increasing radii (default: twice the median
    /// point spacing).
    #[arg(long)]
    pub radius: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PoseliftCommand {
    /// Generate synthetic 3D poses as JSON lines.
    Gen {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Joint rotation ranges JSON (default ranges otherwise).
        #[arg(long)]
        ranges: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a lifter on a pose dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        #[arg(long, default_value_t = 0.5)]
        dropout: f64,
        #[arg(long, default_value_t = 1024)]
        hidden: usize,
        /// Per-epoch training loss, one value per line.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lift 2D poses (`{"joints2d": [[x, y], ...]}` lines) to 3D.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// RMSE and PCK of a lifter against held-out 3D poses.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Intersection over union of the inside nodes of two grids.
    Iou { a: PathBuf, b: PathBuf },
    /// Root mean squared difference of two grids.
    Rmse { a: PathBuf, b: PathBuf },
    /// Percentage of joints within the threshold, over two pose datasets.
    Pck {
        pred: PathBuf,
        truth: PathBuf,
        #[arg(long, default_value_t = 150.0)]
        threshold: f64,
    },
}
