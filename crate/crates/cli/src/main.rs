//! `ttmmk` command-line pipeline: synth → decompose → kernel → train/predict,
//! plus cross-validation, grid search and a kernel benchmark.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ttmmk::io::{self, DatasetManifest, ManifestEntry};
use ttmmk::{
    assemble_gram, cp_als, cross_kernel, cross_validate_gram, equilibrate_norms, generate_synthetic, grid_search,
    predict, smo_solve, stratified_folds, tt_svd_unique, tt_to_cp, CpAlsOptions, Error, GramMatrix,
    GridSpec, KernelConfig, KernelItem, KernelKind, LabeledDataset, Result, SmoOptions, SyntheticSpec, TtTruncation,
};

const THREADS_ENV: &str = "TTMMK_NUM_THREADS";

#[derive(Parser)]
#[command(name = "ttmmk", version, about = "Tensor-train kernel SVM pipeline")]
struct Cli {
    /// Worker threads (defaults to $TTMMK_NUM_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-class synthetic dataset.
    Synth(SynthArgs),
    /// Decompose every tensor of a manifest into TT and/or CP files.
    Decompose(DecomposeArgs),
    /// Compute a Gram matrix file.
    Kernel(KernelArgs),
    /// Train an SVM on a Gram matrix or a manifest.
    Train(TrainArgs),
    /// Predict labels for a manifest with a trained model.
    Predict(PredictArgs),
    /// Stratified k-fold cross-validation for one hyperparameter setting.
    Cv(CvArgs),
    /// Exhaustive (R, sigma, C) search with cross-validation.
    Grid(GridArgs),
    /// Tuned accuracy of every kernel, side by side.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Mode sizes, e.g. 8,8,8.
    #[arg(long, value_delimiter = ',', default_value = "8,8,8")]
    dims: Vec<usize>,
    /// CP rank of each class signal.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Noise norm relative to the signal norm.
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives manifest.tsv and tensors/.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Sign-canonical TT-SVD.
    Tt,
    /// CP-ALS fit (baseline).
    CpAls,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fixed rank cap.
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    rank: Option<usize>,
    /// Relative error threshold (TT only).
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value = "tt")]
    method: Method,
    /// Also write the CP expansion of each train.
    #[arg(long)]
    cp: bool,
    /// Skip norm equilibration of the written CP factors.
    #[arg(long)]
    no_equilibrate: bool,
    /// Initialization seed for CP-ALS.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct KernelOpts {
    #[arg(long, default_value = "ttmmk")]
    kind: KernelKind,
    /// Decomposition rank used when raw tensors must be decomposed.
    #[arg(long)]
    rank: Option<usize>,
    /// Disable CP norm equilibration (ttmmk only).
    #[arg(long)]
    no_equilibrate: bool,
    /// Equilibrate CP-ALS factors too (cp-dusk only).
    #[arg(long)]
    equilibrate: bool,
    /// Normalize to unit diagonal.
    #[arg(long)]
    normalize: bool,
}

impl KernelOpts {
    fn config(&self, sigma: f64, rank: usize) -> KernelConfig {
        let mut config = KernelConfig::new(self.kind, sigma, rank);
        config.equilibrate = match self.kind {
            KernelKind::TtMmk => !self.no_equilibrate,
            KernelKind::CpDusk => self.equilibrate,
            _ => false,
        };
        config.normalize = self.normalize;
        config
    }
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[command(flatten)]
    kernel: KernelOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Labels (and items when no Gram file is given).
    #[arg(long)]
    manifest: PathBuf,
    /// Precomputed Gram matrix file.
    #[arg(long)]
    gram: Option<PathBuf>,
    #[arg(long, required_unless_present = "gram")]
    sigma: Option<f64>,
    #[command(flatten)]
    kernel: KernelOpts,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Manifest the model was trained on.
    #[arg(long)]
    train: PathBuf,
    /// Items to classify.
    #[arg(long)]
    manifest: PathBuf,
    /// Label CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Precomputed Gram matrix over the manifest items.
    #[arg(long)]
    gram: Option<PathBuf>,
    #[arg(long, required_unless_present = "gram")]
    sigma: Option<f64>,
    #[command(flatten)]
    kernel: KernelOpts,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

#[derive(Args, Clone)]
struct GridOpts {
    /// Ranks, as `LO..HI` (inclusive) or a comma list.
    #[arg(long, default_value = "1..10")]
    ranks: String,
    /// Base-2 exponents of sigma, as `LO..HI` or a comma list.
    #[arg(long, default_value = "-8..8", allow_hyphen_values = true)]
    sigma_exps: String,
    /// Base-2 exponents of C, as `LO..HI` or a comma list.
    #[arg(long, default_value = "-8..8", allow_hyphen_values = true)]
    c_exps: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

impl GridOpts {
    fn spec(&self, base: KernelConfig) -> Result<GridSpec> {
        let to_pow2 = |list: Vec<i64>| -> Vec<f64> { list.into_iter().map(|e| 2f64.powi(e as i32)).collect() };
        let ranks = parse_int_list(&self.ranks)?
            .into_iter()
            .map(|r| usize::try_from(r).map_err(|_| Error::InvalidArgument(format!("rank {r} is negative"))))
            .collect::<Result<_>>()?;
        Ok(GridSpec {
            base,
            ranks,
            sigmas: to_pow2(parse_int_list(&self.sigma_exps)?),
            cs: to_pow2(parse_int_list(&self.c_exps)?),
            folds: self.k,
            seed: self.seed,
            repeats: self.repeats,
        })
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    kernel: KernelOpts,
    #[command(flatten)]
    grid: GridOpts,
    /// Full table `R,sigma,C,mean,std`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Best cell per rank, `R,mean,std,sigma,C`.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    grid: GridOpts,
    /// Summary CSV `kernel,R,sigma,C,mean,std`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_int_list(text: &str) -> Result<Vec<i64>> {
    let bad = || Error::InvalidArgument(format!("cannot parse {text:?} as LO..HI or a comma list"));
    let values: Vec<i64> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

/// Percent with four significant digits.
fn percent(fraction: f64) -> String {
    let p = 100.0 * fraction;
    let digits = if p == 0.0 { 3 } else { (3 - p.abs().log10().floor() as i64).max(0) as usize };
    format!("{p:.digits$}%")
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Rank recorded in output metadata: the explicit flag, else read off the
/// stored decompositions (largest TT rank, or the CP rank).
fn effective_rank(flag: Option<usize>, items: &[KernelItem]) -> usize {
    flag.unwrap_or_else(|| match items.first() {
        Some(KernelItem::Tt(t)) => t.ranks().into_iter().max().unwrap_or(1),
        Some(KernelItem::Cp(c)) => c.rank(),
        _ => 1,
    })
}

/// Loads manifest items and brings them into the representation the kernel
/// needs. Returns the items and the configuration with its rank resolved.
fn load_conformed(manifest: &DatasetManifest, base: KernelConfig, rank_flag: Option<usize>) -> Result<(Vec<KernelItem>, KernelConfig)> {
    use rayon::prelude::*;
    let items = manifest.load_items()?;
    let needs_rank = base.kind != KernelKind::VectorRbf && items.iter().any(|i| matches!(i, KernelItem::Tensor(_)));
    if needs_rank && rank_flag.is_none() {
        return Err(Error::InvalidArgument(format!("{} on raw tensors needs --rank", base.kind)));
    }
    let config = KernelConfig {
        rank: effective_rank(rank_flag, &items),
        ..base
    };
    config.validate()?;
    let items = items.into_par_iter().map(|item| item.conform(&config)).collect::<Result<_>>()?;
    Ok((items, config))
}

fn kernel_gram(manifest: &DatasetManifest, opts: &KernelOpts, sigma: f64) -> Result<GramMatrix> {
    let (items, config) = load_conformed(manifest, opts.config(sigma, 1), opts.rank)?;
    assemble_gram(&items, &config)
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        dims: a.dims.clone(),
        rank: a.rank,
        noise: a.noise,
        per_class: a.per_class,
        seed: a.seed,
    };
    let data = generate_synthetic(&spec)?;
    fs::create_dir_all(a.out.join("tensors"))?;
    let mut entries = Vec::with_capacity(data.len());
    for (i, (x, &y)) in data.items.iter().zip(&data.labels).enumerate() {
        let rel = PathBuf::from("tensors").join(format!("item-{i:04}.tnsb"));
        io::write_tensor(a.out.join(&rel), x)?;
        entries.push(ManifestEntry {
            path: rel,
            label: y,
            id: Some(format!("{}{i:04}", if y > 0 { "pos" } else { "neg" })),
        });
    }
    let manifest = DatasetManifest {
        dims: a.dims,
        entries,
        base_dir: a.out.clone(),
    };
    manifest.save(a.out.join("manifest.tsv"))?;
    println!("wrote {} tensors and {}", data.len(), a.out.join("manifest.tsv").display());
    Ok(())
}

fn cmd_decompose(a: DecomposeArgs) -> Result<()> {
    use rayon::prelude::*;
    let manifest = DatasetManifest::load(&a.manifest)?;
    let data = manifest.load_dataset()?;
    let mode = match (a.rank, a.eps) {
        (Some(r), _) => TtTruncation::FixedRank(r),
        (None, Some(eps)) => TtTruncation::Threshold(eps),
        (None, None) => unreachable!("clap requires --rank or --eps"),
    };
    if matches!(a.method, Method::CpAls) && a.rank.is_none() {
        return Err(Error::InvalidArgument("cp-als needs --rank".into()));
    }
    fs::create_dir_all(&a.out)?;
    let stems: Vec<String> = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| match e.path.file_stem() {
            Some(s) => s.to_string_lossy().into_owned(),
            None => format!("item-{i:04}"),
        })
        .collect();
    let equilibrate = |c| if a.no_equilibrate { c } else { equilibrate_norms(&c) };

    let written: Vec<(Option<PathBuf>, Option<PathBuf>)> = data
        .items
        .par_iter()
        .zip(&stems)
        .map(|(x, stem)| -> Result<_> {
            match a.method {
                Method::Tt => {
                    let tt = tt_svd_unique(x, mode)?;
                    let tt_path = PathBuf::from(format!("{stem}.tnst"));
                    io::write_tt(a.out.join(&tt_path), &tt)?;
                    let cp_path = if a.cp {
                        let p = PathBuf::from(format!("{stem}.tnsc"));
                        io::write_cp(a.out.join(&p), &equilibrate(tt_to_cp(&tt)))?;
                        Some(p)
                    } else {
                        None
                    };
                    Ok((Some(tt_path), cp_path))
                }
                Method::CpAls => {
                    let mut opts = CpAlsOptions::new(a.rank.expect("checked above"));
                    opts.seed = a.seed;
                    let fit = cp_als(x, &opts)?;
                    let cp = if a.no_equilibrate || !a.cp {
                        fit.decomposition
                    } else {
                        equilibrate_norms(&fit.decomposition)
                    };
                    let p = PathBuf::from(format!("{stem}.tnsc"));
                    io::write_cp(a.out.join(&p), &cp)?;
                    Ok((None, Some(p)))
                }
            }
        })
        .collect::<Result<_>>()?;

    let listing = |paths: Vec<PathBuf>| DatasetManifest {
        dims: manifest.dims.clone(),
        entries: manifest
            .entries
            .iter()
            .zip(paths)
            .map(|(e, path)| ManifestEntry { path, ..e.clone() })
            .collect(),
        base_dir: a.out.clone(),
    };
    let (tt_paths, cp_paths): (Vec<_>, Vec<_>) = written.into_iter().unzip();
    if let Some(tt) = tt_paths.into_iter().collect::<Option<Vec<_>>>() {
        listing(tt).save(a.out.join("manifest.tsv"))?;
        println!("wrote {} TT files and {}", data.len(), a.out.join("manifest.tsv").display());
    }
    if let Some(cp) = cp_paths.into_iter().collect::<Option<Vec<_>>>() {
        let name = if matches!(a.method, Method::Tt) { "manifest-cp.tsv" } else { "manifest.tsv" };
        listing(cp).save(a.out.join(name))?;
        println!("wrote {} CP files and {}", data.len(), a.out.join(name).display());
    }
    Ok(())
}

fn cmd_kernel(a: KernelArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let gram = kernel_gram(&manifest, &a.kernel, a.sigma)?;
    io::write_gram(&a.out, &gram)?;
    println!(
        "wrote {}x{} {} Gram matrix (sigma {}) to {}",
        gram.len(),
        gram.len(),
        gram.config.kind,
        gram.config.sigma,
        a.out.display()
    );
    Ok(())
}

fn load_or_compute_gram(
    manifest: &DatasetManifest,
    gram: Option<&Path>,
    sigma: Option<f64>,
    opts: &KernelOpts,
) -> Result<GramMatrix> {
    let g = match gram {
        Some(path) => io::read_gram(path)?,
        None => kernel_gram(manifest, opts, sigma.expect("clap requires --sigma without --gram"))?,
    };
    if g.len() != manifest.entries.len() {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix has {} items, manifest lists {}",
            g.len(),
            manifest.entries.len()
        )));
    }
    Ok(g)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let gram = load_or_compute_gram(&manifest, a.gram.as_deref(), a.sigma, &a.kernel)?;
    let labels = manifest.labels();
    let model = smo_solve(&gram, &labels, a.c, &SmoOptions::default())?;
    io::write_model(&a.out, &model)?;
    let correct = (0..labels.len())
        .filter(|&i| {
            let row: Vec<f64> = gram.values.row(i).iter().copied().collect();
            predict(&model, &row).map(|p| p.label == labels[i]).unwrap_or(false)
        })
        .count();
    println!(
        "trained on {} items: {} support vectors, {} iterations{}, training accuracy {}",
        labels.len(),
        model.support_indices().len(),
        model.iterations,
        if model.converged { "" } else { " (iteration cap reached)" },
        percent(correct as f64 / labels.len() as f64)
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let train = DatasetManifest::load(&a.train)?;
    let test = DatasetManifest::load(&a.manifest)?;
    if train.entries.len() != model.alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} training items, manifest lists {}",
            model.alpha.len(),
            train.entries.len()
        )));
    }
    let rank = Some(model.config.rank);
    let (train_items, _) = load_conformed(&train, model.config, rank)?;
    let (test_items, _) = load_conformed(&test, model.config, rank)?;
    let k = cross_kernel(&train_items, &test_items, &model.config)?;
    let mut csv = String::from("index,id,label,decision\n");
    let mut correct = 0;
    for (i, entry) in test.entries.iter().enumerate() {
        let row: Vec<f64> = k.row(i).iter().copied().collect();
        let p = predict(&model, &row)?;
        correct += usize::from(p.label == entry.label);
        writeln!(csv, "{i},{},{},{}", entry.id.as_deref().unwrap_or(""), p.label, p.decision).expect("string write");
    }
    write_output(a.out.as_deref(), &csv)?;
    let summary = format!("accuracy against manifest labels: {}", percent(correct as f64 / test.entries.len() as f64));
    if a.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_cv(a: CvArgs) -> Result<()> {
    if a.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let manifest = DatasetManifest::load(&a.manifest)?;
    let gram = load_or_compute_gram(&manifest, a.gram.as_deref(), a.sigma, &a.kernel)?;
    let labels = manifest.labels();
    let mut all = Vec::new();
    for r in 0..a.repeats {
        let folds = stratified_folds(&labels, a.k, a.seed.wrapping_add(r as u64))?;
        let cv = cross_validate_gram(&gram.values, &labels, a.c, &folds)?;
        for (f, acc) in cv.fold_accuracies.iter().enumerate() {
            println!("repeat {} fold {}: {}", r + 1, f + 1, percent(*acc));
        }
        all.extend(cv.fold_accuracies);
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let std = (all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / all.len() as f64).sqrt();
    println!(
        "{} sigma={} R={} C={}: mean accuracy {} (std {})",
        gram.config.kind,
        gram.config.sigma,
        gram.config.rank,
        a.c,
        percent(mean),
        percent(std)
    );
    Ok(())
}

fn load_raw(path: &Path) -> Result<LabeledDataset> {
    DatasetManifest::load(path)?.load_dataset()
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let data = load_raw(&a.manifest)?;
    let spec = a.grid.spec(a.kernel.config(1.0, 1))?;
    let report = grid_search(&data, &spec)?;
    write_output(a.out.as_deref(), &report.to_csv())?;
    if let Some(curve) = &a.curve {
        fs::write(curve, report.rank_curve_csv())?;
    }
    let b = report.best;
    let line = format!(
        "best {}: R={} sigma={} C={} mean accuracy {} (std {})",
        report.kind,
        b.rank,
        b.sigma,
        b.c,
        percent(b.mean),
        percent(b.std)
    );
    if a.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let data = load_raw(&a.manifest)?;
    let order = data.items.first().map_or(0, |x| x.order());
    let mut variants: Vec<(&str, KernelConfig)> = vec![
        ("ttmmk", KernelConfig::new(KernelKind::TtMmk, 1.0, 1)),
        (
            "ttmmk-no-equilibration",
            KernelConfig {
                equilibrate: false,
                ..KernelConfig::new(KernelKind::TtMmk, 1.0, 1)
            },
        ),
    ];
    if order == 3 {
        variants.push(("tt-naive", KernelConfig::new(KernelKind::TtNaive, 1.0, 1)));
    }
    variants.push(("cp-dusk", KernelConfig::new(KernelKind::CpDusk, 1.0, 1)));
    variants.push(("vector-rbf", KernelConfig::new(KernelKind::VectorRbf, 1.0, 1)));

    let mut csv = String::from("kernel,R,sigma,C,mean,std\n");
    println!("{:<24} {:>3} {:>10} {:>10} {:>9} {:>9} {:>8}", "kernel", "R", "sigma", "C", "mean", "std", "time");
    for (name, base) in variants {
        let mut spec = a.grid.spec(base)?;
        if base.kind == KernelKind::VectorRbf {
            spec.ranks = vec![1];
        }
        let start = Instant::now();
        let b = grid_search(&data, &spec)?.best;
        writeln!(csv, "{name},{},{},{},{},{}", b.rank, b.sigma, b.c, b.mean, b.std).expect("string write");
        println!(
            "{:<24} {:>3} {:>10} {:>10} {:>9} {:>9} {:>7.1}s",
            name,
            b.rank,
            b.sigma,
            b.c,
            percent(b.mean),
            percent(b.std),
            start.elapsed().as_secs_f64()
        );
    }
    if let Some(out) = &a.out {
        fs::write(out, csv)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
