//! Command line front end for the tubal tensor toolkit.
//!
//! Exit codes: 0 on success, 1 when a check command reaches a negative
//! verdict, 2 on usage errors, 3 when computation fails (unreadable or
//! malformed files, singular transforms, solver breakdowns).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use starm::algebra::{default_tube_tol, StarMContext};
use starm::completion::{complete_tensor, m_nuclear_norm, nuclear_norm_via_msdp, CompletionTask};
use starm::equivariance::{check_all_tubes_equivariant, equivariant_subspace, IrrepDims};
use starm::io;
use starm::linalg::Mat;
use starm::sdp::{
    solve_msdp_general, solve_msdp_sliced, Residuals, SDPSolution, SolveStatus, SolverConfig,
};
use starm::semidefinite::{feasible_region_tensor, is_psd};
use starm::sos::{check_invariance, msos_certify, msos_with_subspace, MsosFailure, MsosVerdict};
use starm::tensor::Tensor3;
use starm::transform::{OrthoTransform, TransformKind};

#[derive(Parser)]
#[command(
    name = "tsdp",
    version,
    about = "Tubal tensor algebra: PSD checks, semidefinite programs, equivariance, \
             sum-of-squares certificates, nuclear norms, and completion"
)]
struct Cli {
    /// Seed for randomized spot checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Tolerance for verdicts and certificates.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration cap for the semidefinite solver.
    #[arg(long, global = true, default_value_t = 50_000)]
    max_iters: usize,

    /// Worker threads for slice-parallel solves (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// How to build the transform. Accepts `identity`, `dct`, `haar`, `data`,
/// `random:SEED`, or `file:PATH`; the named kinds take an optional size
/// suffix as in `haar:2`. When the size is omitted it is inferred from the
/// main input file.
#[derive(Args)]
struct TransformArg {
    #[arg(long, value_name = "NAME[:ARG]")]
    transform: String,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a symmetric tensor is positive semidefinite.
    PsdCheck {
        /// Tensor to test.
        #[arg(long, conflicts_with = "region")]
        tensor: Option<PathBuf>,
        /// Use the built-in 2x2x2 region family at the given point.
        #[arg(long, value_name = "X,Y")]
        region: Option<String>,
        #[command(flatten)]
        transform: TransformArg,
    },
    /// Solve a linear program over the tensor PSD cone.
    Solve {
        /// Problem description file.
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// Solver route: `sliced`, `general`, or `auto`.
        #[arg(long, default_value = "auto")]
        route: String,
        /// Write the solution tensor here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the tubes whose multiplication action commutes with a group.
    Equivariance {
        /// Generator matrices of the representation.
        #[arg(long)]
        rep: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// Block sizes of the adapted decomposition, e.g. `1,2`.
        #[arg(long)]
        dims: String,
        /// Write the subspace basis here as an n3 x dim x 1 tensor.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a quadratic form as a tube-structured sum of squares.
    Msos {
        /// Quadratic form file.
        #[arg(long)]
        form: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// Also check invariance under these generators.
        #[arg(long)]
        rep: Option<PathBuf>,
        /// With --rep: restrict Gram tubes to the equivariant subspace for
        /// these block sizes.
        #[arg(long, requires = "rep")]
        dims: Option<String>,
        /// Write the Gram tensor here on success.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sum of the nuclear norms of the transformed slices.
    NuclearNorm {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// `direct` (singular values) or `sdp` (semidefinite program).
        #[arg(long, default_value = "direct")]
        route: String,
    },
    /// Fill in unobserved tubes by nuclear norm minimization.
    Complete {
        /// Observed tensor; values outside the mask are ignored.
        #[arg(long)]
        tensor: PathBuf,
        /// Tubal observation pattern.
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// Ground truth for error reporting.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Write the completed tensor here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tensor singular value decomposition.
    Svd {
        #[arg(long)]
        tensor: PathBuf,
        #[command(flatten)]
        transform: TransformArg,
        /// Write factors to PREFIX.u.tsdp, PREFIX.s.tsdp, PREFIX.v.tsdp.
        #[arg(long, value_name = "PREFIX")]
        out_prefix: Option<String>,
    },
    /// Describe a transform: kind, size, orthogonality, matrix entries.
    TransformInfo {
        #[command(flatten)]
        transform: TransformArg,
        /// Source tensor for the `data` transform or for size inference.
        #[arg(long)]
        tensor: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad command line; prints the message and exits 2.
    Usage(String),
    /// Computation failed; prints the message and exits 3.
    Failure(String),
}

impl From<starm::Error> for CliError {
    fn from(e: starm::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

type CliResult = Result<ExitCode, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error when a pool already exists (repeat invocation
        // inside a test harness); the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {}", msg);
            eprintln!("run `tsdp --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(3)
        }
    }
}

/// Parsed form of the `--transform` flag.
struct TransformSpec {
    kind: TransformKind,
    n3: Option<usize>,
    seed: Option<u64>,
    matrix: Option<Mat<f64>>,
}

fn parse_transform(arg: &str) -> Result<TransformSpec, CliError> {
    let mut parts = arg.split(':');
    let name = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let parse_n3 = |tok: &str| -> Result<usize, CliError> {
        tok.parse()
            .map_err(|_| usage(format!("invalid transform size '{}'", tok)))
    };
    match name {
        "identity" | "dct" | "haar" | "data" => {
            let kind = match name {
                "identity" => TransformKind::Identity,
                "dct" => TransformKind::Dct,
                "haar" => TransformKind::Haar,
                _ => TransformKind::DataDependent,
            };
            let n3 = match rest.as_slice() {
                [] => None,
                [tok] => Some(parse_n3(tok)?),
                _ => return Err(usage(format!("too many ':' parts in '{}'", arg))),
            };
            Ok(TransformSpec {
                kind,
                n3,
                seed: None,
                matrix: None,
            })
        }
        "random" => {
            let (seed_tok, n3) = match rest.as_slice() {
                [s] => (*s, None),
                [s, n] => (*s, Some(parse_n3(n)?)),
                _ => return Err(usage("random transform takes `random:SEED[:N3]`")),
            };
            let seed = seed_tok
                .parse()
                .map_err(|_| usage(format!("invalid transform seed '{}'", seed_tok)))?;
            Ok(TransformSpec {
                kind: TransformKind::Random,
                n3,
                seed: Some(seed),
                matrix: None,
            })
        }
        "file" => {
            if rest.is_empty() {
                return Err(usage("file transform takes `file:PATH`"));
            }
            // Paths may legitimately contain ':'.
            let path = rest.join(":");
            let m = io::read_matrix(&path)?;
            if !m.is_square() {
                return Err(usage(format!(
                    "transform matrix in {} is {}x{}, must be square",
                    path,
                    m.rows(),
                    m.cols()
                )));
            }
            let n3 = Some(m.rows());
            Ok(TransformSpec {
                kind: TransformKind::User,
                n3,
                seed: None,
                matrix: Some(m),
            })
        }
        other => Err(usage(format!(
            "unknown transform '{}'; expected identity, dct, haar, data, random:SEED, or file:PATH",
            other
        ))),
    }
}

/// Build the transform, taking the size from the flag itself or from the
/// input data, and the data tensor when the kind needs one.
fn build_transform(
    spec: &TransformSpec,
    inferred_n3: Option<usize>,
    data: Option<&Tensor3<f64>>,
) -> Result<OrthoTransform<f64>, CliError> {
    if let (Some(have), Some(want)) = (spec.n3, inferred_n3) {
        if have != want {
            return Err(usage(format!(
                "transform size {} does not match the input's {} slices",
                have, want
            )));
        }
    }
    match spec.kind {
        TransformKind::User => Ok(OrthoTransform::new(
            spec.matrix.clone().expect("file transform carries a matrix"),
            TransformKind::User,
            1e-10,
            None,
        )?),
        TransformKind::DataDependent => {
            let y = data.ok_or_else(|| {
                usage("the data transform needs a tensor input to be built from")
            })?;
            Ok(OrthoTransform::build_data_dependent(y)?)
        }
        kind => {
            let n3 = spec
                .n3
                .or(inferred_n3)
                .ok_or_else(|| usage("transform size unknown; use NAME:N3 or give a tensor"))?;
            Ok(OrthoTransform::build(kind, n3, spec.seed)?)
        }
    }
}

fn parse_dims(arg: &str) -> Result<IrrepDims, CliError> {
    let dims: Vec<usize> = arg
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| usage(format!("invalid block size '{}'", t)))
        })
        .collect::<Result<_, _>>()?;
    Ok(IrrepDims::new(dims)?)
}

fn solver_config(cli: &Cli) -> SolverConfig<f64> {
    SolverConfig {
        max_iters: cli.max_iters,
        ..SolverConfig::default()
    }
}

fn format_vec(v: &[f64]) -> String {
    let mut out = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", x);
    }
    out
}

fn print_residuals(r: &Residuals<f64>) {
    println!("residual_primal: {}", r.primal);
    println!("residual_dual: {}", r.dual);
    println!("residual_gap: {}", r.gap);
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::PsdCheck {
            tensor,
            region,
            transform,
        } => cmd_psd_check(cli, tensor.as_deref(), region.as_deref(), &transform.transform),
        Command::Solve {
            problem,
            transform,
            route,
            out,
        } => cmd_solve(cli, problem, &transform.transform, route, out.as_deref()),
        Command::Equivariance {
            rep,
            transform,
            dims,
            out,
        } => cmd_equivariance(cli, rep, &transform.transform, dims, out.as_deref()),
        Command::Msos {
            form,
            transform,
            rep,
            dims,
            out,
        } => cmd_msos(
            cli,
            form,
            &transform.transform,
            rep.as_deref(),
            dims.as_deref(),
            out.as_deref(),
        ),
        Command::NuclearNorm {
            tensor,
            transform,
            route,
        } => cmd_nuclear_norm(cli, tensor, &transform.transform, route),
        Command::Complete {
            tensor,
            mask,
            transform,
            truth,
            out,
        } => cmd_complete(
            cli,
            tensor,
            mask,
            &transform.transform,
            truth.as_deref(),
            out.as_deref(),
        ),
        Command::Svd {
            tensor,
            transform,
            out_prefix,
        } => cmd_svd(cli, tensor, &transform.transform, out_prefix.as_deref()),
        Command::TransformInfo { transform, tensor } => {
            cmd_transform_info(&transform.transform, tensor.as_deref())
        }
    }
}

fn cmd_psd_check(
    cli: &Cli,
    tensor: Option<&std::path::Path>,
    region: Option<&str>,
    transform: &str,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let a = match (tensor, region) {
        (Some(path), None) => io::read_tensor(path)?,
        (None, Some(point)) => {
            let coords: Vec<f64> = point
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| usage(format!("invalid coordinate '{}'", t)))
                })
                .collect::<Result<_, _>>()?;
            if coords.len() != 2 {
                return Err(usage("--region takes exactly two coordinates, X,Y"));
            }
            feasible_region_tensor(coords[0], coords[1])
        }
        _ => return Err(usage("psd-check needs exactly one of --tensor or --region")),
    };
    let t = build_transform(&spec, Some(a.n3()), Some(&a))?;
    let ctx = StarMContext::new(t);
    let verdict = is_psd(&ctx, &a, cli.tol)?;
    println!("psd: {}", verdict.is_psd);
    println!(
        "min_eigenvalue_per_slice: {}",
        format_vec(&verdict.min_eigenvalue_per_slice)
    );
    if let Some((slice, witness)) = &verdict.witness {
        println!("witness_slice: {}", slice);
        println!("witness_vector: {}", format_vec(witness));
    }
    Ok(if verdict.is_psd {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_solve(
    cli: &Cli,
    problem: &std::path::Path,
    transform: &str,
    route: &str,
    out: Option<&std::path::Path>,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let ps = io::read_problem_spec(problem)?;
    let cost = io::read_tensor(&ps.cost_path)?;
    let t = build_transform(&spec, Some(cost.n3()), Some(&cost))?;
    let ctx = StarMContext::new(t);
    let p = io::load_problem(&ps, ctx)?;
    let cfg = solver_config(cli);

    let (solution, route_used): (SDPSolution<Tensor3<f64>, f64>, &str) = match route {
        "sliced" => (solve_msdp_sliced(&p, &cfg)?, "sliced"),
        "general" => (solve_msdp_general(&p, &cfg)?, "general"),
        "auto" => match solve_msdp_sliced(&p, &cfg) {
            Ok(s) => (s, "sliced"),
            Err(starm::Error::NotSliceSeparable(_)) => (solve_msdp_general(&p, &cfg)?, "general"),
            Err(e) => return Err(e.into()),
        },
        other => return Err(usage(format!("unknown route '{}'", other))),
    };
    println!("route: {}", route_used);
    println!("status: {}", solution.status);
    println!("objective: {}", solution.objective);
    println!("iterations: {}", solution.iterations);
    print_residuals(&solution.residuals);
    if let Some(path) = out {
        io::write_tensor(path, &solution.x)?;
        println!("solution_written: {}", path.display());
    }
    Ok(match solution.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        status => {
            eprintln!("solver did not reach an optimal certificate: {}", status);
            ExitCode::from(3)
        }
    })
}

fn cmd_equivariance(
    cli: &Cli,
    rep_path: &std::path::Path,
    transform: &str,
    dims: &str,
    out: Option<&std::path::Path>,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let rep = io::read_rep(rep_path)?;
    let dims = parse_dims(dims)?;
    let t = build_transform(&spec, Some(rep.n3()), None)?;

    let check = check_all_tubes_equivariant(&rep, &t, cli.tol)?;
    let w = equivariant_subspace(&rep, &t, &dims, cli.tol)?;
    println!("n3: {}", rep.n3());
    println!("generators: {}", rep.generators().len());
    println!("all_tubes_equivariant: {}", check.all_equivariant);
    println!(
        "max_off_diagonal_per_generator: {}",
        format_vec(&check.max_off_diagonal)
    );
    println!("subspace_dimension: {}", w.dim());
    for (i, basis_tube) in w.basis().iter().enumerate() {
        println!("basis_{}: {}", i, format_vec(basis_tube.as_vec()));
    }
    if let Some(path) = out {
        let b = w.basis_matrix();
        let basis = Tensor3::from_fn(b.rows(), b.cols(), 1, |i, j, _| b[(i, j)]);
        io::write_tensor(path, &basis)?;
        println!("basis_written: {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_msos(
    cli: &Cli,
    form_path: &std::path::Path,
    transform: &str,
    rep_path: Option<&std::path::Path>,
    dims: Option<&str>,
    out: Option<&std::path::Path>,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let form = io::read_form(form_path)?;
    let t = build_transform(&spec, Some(form.tube_len()), None)?;
    let ctx = StarMContext::new(t.clone());

    let rep = rep_path.map(io::read_rep).transpose()?;
    let verdict: MsosVerdict<f64> = match (&rep, dims) {
        (Some(rep), Some(dims)) => {
            let dims = parse_dims(dims)?;
            let w = equivariant_subspace(rep, &t, &dims, cli.tol)?;
            msos_with_subspace(&ctx, &form, &w, cli.tol)?
        }
        _ => msos_certify(&ctx, &form, cli.tol)?,
    };

    println!("msos: {}", verdict.is_msos);
    match &verdict.failure {
        Some(MsosFailure::OffDiagonal { block, magnitude }) => {
            println!("failure: off_diagonal");
            println!("failing_block: {} {}", block.0, block.1);
            println!("off_diagonal_magnitude: {}", magnitude);
        }
        Some(MsosFailure::NotPsd { eigenvalue }) => {
            println!("failure: gram_not_psd");
            println!("min_eigenvalue: {}", eigenvalue);
        }
        Some(MsosFailure::TubeOutsideSubspace { block, residual }) => {
            println!("failure: tube_outside_subspace");
            println!("failing_block: {} {}", block.0, block.1);
            println!("subspace_residual: {}", residual);
        }
        None => {}
    }
    if let Some(rep) = &rep {
        let invariant = check_invariance(rep, &ctx, &form, 200, cli.seed, cli.tol)?;
        println!("invariant_under_rep: {}", invariant);
    }
    if let (Some(path), Some(gram)) = (out, &verdict.gram_tensor) {
        io::write_tensor(path, gram)?;
        println!("gram_tensor_written: {}", path.display());
    }
    Ok(if verdict.is_msos {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_nuclear_norm(
    cli: &Cli,
    tensor: &std::path::Path,
    transform: &str,
    route: &str,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let a = io::read_tensor(tensor)?;
    let t = build_transform(&spec, Some(a.n3()), Some(&a))?;
    let ctx = StarMContext::new(t);
    let value = match route {
        "direct" => m_nuclear_norm(&ctx, &a)?,
        "sdp" => nuclear_norm_via_msdp(&ctx, &a, &solver_config(cli))?,
        other => return Err(usage(format!("unknown route '{}'", other))),
    };
    println!("nuclear_norm: {}", value);
    Ok(ExitCode::SUCCESS)
}

fn cmd_complete(
    cli: &Cli,
    tensor: &std::path::Path,
    mask: &std::path::Path,
    transform: &str,
    truth: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
) -> CliResult {
    let spec = parse_transform(transform)?;
    let y = io::read_tensor(tensor)?;
    let mask = io::read_mask(mask)?;
    if mask.n1 != y.n1() || mask.n2 != y.n2() {
        return Err(CliError::Failure(format!(
            "mask grid {}x{} does not match tensor {}x{}",
            mask.n1,
            mask.n2,
            y.n1(),
            y.n2()
        )));
    }
    let t = build_transform(&spec, Some(y.n3()), Some(&y))?;
    let ctx = StarMContext::new(t);
    let mut task = CompletionTask::new(y, mask.omega, ctx)?;
    if let Some(path) = truth {
        task = task.with_truth(io::read_tensor(path)?)?;
    }
    let result = complete_tensor(&task, &solver_config(cli))?;
    println!("nuclear_norm: {}", result.m_nuclear);
    let statuses: Vec<String> = result
        .per_slice_status
        .iter()
        .map(|s| s.to_string())
        .collect();
    println!("per_slice_status: {}", statuses.join(" "));
    print_residuals(&result.residuals);
    if let Some(fit) = result.fit {
        println!("relative_max_error: {}", fit);
    }
    if let Some(path) = out {
        io::write_tensor(path, &result.a)?;
        println!("completed_written: {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_svd(
    cli: &Cli,
    tensor: &std::path::Path,
    transform: &str,
    out_prefix: Option<&str>,
) -> CliResult {
    let _ = cli;
    let spec = parse_transform(transform)?;
    let a = io::read_tensor(tensor)?;
    let t = build_transform(&spec, Some(a.n3()), Some(&a))?;
    let ctx = StarMContext::new(t);
    let svd = ctx.starm_svd(&a)?;
    println!("shape: {} {} {}", a.n1(), a.n2(), a.n3());
    println!("rank: {}", svd.rank);
    println!("tube_tolerance: {}", default_tube_tol::<f64>());
    for i in 0..a.n1().min(a.n2()) {
        let tube = svd.singular_tube(i);
        println!("singular_tube_{}_norm: {}", i, tube.norm());
        println!("singular_tube_{}: {}", i, format_vec(tube.as_vec()));
    }
    if let Some(prefix) = out_prefix {
        io::write_tensor(format!("{}.u.tsdp", prefix), &svd.u)?;
        io::write_tensor(format!("{}.s.tsdp", prefix), &svd.s)?;
        io::write_tensor(format!("{}.v.tsdp", prefix), &svd.v)?;
        println!("factors_written: {0}.u.tsdp {0}.s.tsdp {0}.v.tsdp", prefix);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_transform_info(transform: &str, tensor: Option<&std::path::Path>) -> CliResult {
    let spec = parse_transform(transform)?;
    let data = tensor.map(io::read_tensor).transpose()?;
    let t = build_transform(&spec, data.as_ref().map(|a| a.n3()), data.as_ref())?;
    println!("kind: {}", t.kind());
    println!("n3: {}", t.n3());
    println!("orthogonal: {}", t.is_orthogonal());
    println!("ortho_defect: {}", t.m().ortho_defect());
    for i in 0..t.n3() {
        let row: Vec<f64> = (0..t.n3()).map(|j| t.m()[(i, j)]).collect();
        println!("row_{}: {}", i, format_vec(&row));
    }
    Ok(ExitCode::SUCCESS)
}
