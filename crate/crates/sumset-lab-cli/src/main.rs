//! Batch front end over the sumset-lab kernels. Every subcommand prints one
//! machine-readable JSON document to stdout; progress, warnings, and timing
//! go to stderr so reruns with the same inputs and seed are byte-identical
//! on stdout.
//!
//! Exit codes: 0 success, 2 input error, 3 internal invariant violation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use num::BigRational;
use serde::Serialize;
use serde_json::{json, Value};
use sumset_lab::constructions::{level_set_family, optimality_example, tribes};
use sumset_lab::correlation::{avoidance_coupling, is_rho_one, rho};
use sumset_lab::counting::{avoids, count_tuples};
use sumset_lab::group::{is_in_strict_coset, make_group, quotient, FiniteAbelianGroup, GroupSubset};
use sumset_lab::rat::{fmt_rat, parse_rat, rat_from_counts};
use sumset_lab::regularity::{decompose, RegularityParams};
use sumset_lab::setfile::{read_set_file, save_set_file};
use sumset_lab::structure::{extract_structure, verify_certificate, StructureParams};
use sumset_lab::tensor::{CombinerTable, TensorSet};
use sumset_lab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "sumset-lab",
    version,
    about = "Regularity decomposition, correlation analysis, and explicit \
             constructions for sumset-avoiding families over G^n"
)]
struct Cli {
    /// Worker threads for the counting kernels; the SUMSET_LAB_THREADS
    /// environment variable is the fallback, default all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Echoed into the report; any randomized step draws from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Grow a coordinate set I until every input set's fibers are mostly
    /// pseudorandom; prints I, the refinement trace, and fiber fractions.
    Decompose {
        /// Set file, repeatable; all files must share alphabet and n.
        #[arg(long = "set", required = true)]
        sets: Vec<PathBuf>,
        /// Restriction order r.
        #[arg(short, default_value_t = 1)]
        r: usize,
        /// Density deviation bound, as a rational like 1/10.
        #[arg(long, default_value = "1/10")]
        beta: String,
        /// Allowed fraction of bad fibers, as a rational.
        #[arg(long, default_value = "1/10")]
        alpha: String,
    },
    /// Run the full structure pipeline and emit a certificate: a coordinate
    /// set I and kept fiber sets with exact error masses.
    Extract {
        /// Group spec: cyclic factor orders joined by 'x', e.g. 3 or 2x4.
        #[arg(long)]
        group: String,
        /// Forbidden sums Z_0, comma-separated elements, e.g. 0,1.
        #[arg(long)]
        z0: String,
        #[arg(long = "set", required = true)]
        sets: Vec<PathBuf>,
        /// Structure tolerance epsilon, as a rational.
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        #[arg(short, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value = "1/10")]
        beta: String,
        /// Write the certificate JSON here instead of stdout; stdout then
        /// carries the run report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-check the certificate against the inputs and report PASS.
        #[arg(long)]
        verify: bool,
    },
    /// Maximal correlation of the avoidance coupling: d uniform coordinates
    /// conditioned on their sum landing in Z_0.
    Rho {
        #[arg(long)]
        group: String,
        #[arg(long)]
        z0: String,
        /// Number of coupled coordinates.
        #[arg(short, default_value_t = 2)]
        d: usize,
    },
    /// Materialize a named construction into set files plus a density report.
    Construct {
        #[command(subcommand)]
        which: ConstructCmd,
    },
    /// Exact count of avoidance-violating tuples and the tuple ratio.
    Count {
        #[arg(long)]
        group: String,
        #[arg(long)]
        z0: String,
        #[arg(long = "set", required = true)]
        sets: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// AND-of-ORs / OR-of-ANDs pair over r*s coordinates from member sets A
    /// and B; the combined values must dodge Z_0 and |A| + |B| must exceed
    /// the alphabet size.
    Tribes {
        #[arg(long, default_value_t = 3)]
        alphabet: usize,
        /// Members of A, comma-separated symbols.
        #[arg(long)]
        a: String,
        /// Members of B.
        #[arg(long)]
        b: String,
        /// Forbidden combined symbols.
        #[arg(long)]
        z0: String,
        #[arg(short)]
        r: usize,
        #[arg(short)]
        s: usize,
        /// Digit combiner: min, or add (addition mod alphabet).
        #[arg(long, default_value = "min")]
        combiner: String,
        /// Files are written as PREFIX-E.set and PREFIX-F.set.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Level sets of the digitwise quotient sum by a subgroup H: one set per
    /// target value, each of density 1/|G:H|.
    LevelSets {
        #[arg(long)]
        group: String,
        /// Elements of H, comma-separated.
        #[arg(long)]
        subgroup: String,
        /// Z_0 is the coset H + shift.
        #[arg(long, default_value_t = 0)]
        shift: u64,
        /// Quotient-sum targets, one per output set; their total must differ
        /// from n * kappa.
        #[arg(long)]
        targets: String,
        #[arg(short)]
        n: usize,
        /// Files are written as PREFIX-1.set, PREFIX-2.set, ...
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// The sharpness pair over Z_p^n: E misses the {0,1}-cube on the first k
    /// coordinates, F pins them to zero.
    Optimality {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: usize,
        #[arg(short)]
        n: usize,
        /// Files are written as PREFIX-E.set and PREFIX-F.set.
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    parameters: Value,
    outputs: Value,
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let started = Instant::now();
    let seed = cli.seed;
    let command: String = std::env::args().collect::<Vec<_>>().join(" ");
    let code = match run(cli.cmd, command, seed) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::InternalInvariant(_) => 3,
                _ => 2,
            }
        }
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    std::process::exit(code);
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("SUMSET_LAB_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n.filter(|&n| n > 0) {
        // Ignore a pool that is already running; the setting is best-effort.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cmd: Cmd, command: String, seed: u64) -> Result<()> {
    match cmd {
        Cmd::Decompose { sets, r, beta, alpha } => cmd_decompose(&sets, r, &beta, &alpha, command, seed),
        Cmd::Extract { group, z0, sets, epsilon, r, beta, out, verify } => {
            cmd_extract(&group, &z0, &sets, &epsilon, r, &beta, out.as_deref(), verify, command, seed)
        }
        Cmd::Rho { group, z0, d } => cmd_rho(&group, &z0, d, command, seed),
        Cmd::Construct { which } => cmd_construct(which, command, seed),
        Cmd::Count { group, z0, sets } => cmd_count(&group, &z0, &sets, command, seed),
    }
}

// ------------------------------------------------------------- helpers --

fn parse_group_spec(spec: &str) -> Result<FiniteAbelianGroup> {
    let orders: Vec<u64> = spec
        .split('x')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad group factor '{t}' in '{spec}'")))
        })
        .collect::<Result<_>>()?;
    make_group(&orders)
}

fn parse_symbols(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad element '{t}' in '{s}'")))
        })
        .collect()
}

fn parse_subset(g: &FiniteAbelianGroup, s: &str) -> Result<GroupSubset> {
    GroupSubset::from_elements(g, &parse_symbols(s)?)
}

fn load_sets(paths: &[PathBuf]) -> Result<Vec<TensorSet>> {
    paths.iter().map(|p| read_set_file(p)).collect()
}

/// Twelve significant digits, the only place floats are printed.
fn fmt_rho_value(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_big(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn one_based(coords: &[usize]) -> Vec<usize> {
    coords.iter().map(|c| c + 1).collect()
}

fn emit(report: &RunReport) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("report serializes")
    );
}

// ------------------------------------------------------------ commands --

#[allow(clippy::too_many_arguments)]
fn cmd_decompose(
    paths: &[PathBuf],
    r: usize,
    beta: &str,
    alpha: &str,
    command: String,
    seed: u64,
) -> Result<()> {
    let sets = load_sets(paths)?;
    let beta = parse_rat(beta)?;
    let alpha = parse_rat(alpha)?;
    let params = RegularityParams::new(r, beta, alpha)?;
    let result = decompose(&sets, &params)?;

    let empty: Vec<usize> = sets
        .iter()
        .enumerate()
        .filter_map(|(j, e)| e.is_empty().then_some(j + 1))
        .collect();
    let trace: Vec<Value> = result
        .trace
        .iter()
        .map(|step| {
            json!({
                "step": step.step,
                "I_before": one_based(step.i_before.as_slice()),
                "energies_before": step.energies_before.iter().map(fmt_rat).collect::<Vec<_>>(),
                "bad_fractions": step.bad_fractions.iter().map(fmt_rat).collect::<Vec<_>>(),
                "trigger": step.trigger.map(|t| t + 1),
                "added": one_based(&step.added),
            })
        })
        .collect();
    let mut outputs = json!({
        "I": one_based(result.i_set.as_slice()),
        "exhausted": result.exhausted,
        "trace": trace,
        "energies_final": result.energies_final.iter().map(fmt_rat).collect::<Vec<_>>(),
        "fiber_fractions": result.fiber_report.iter().map(fmt_rat).collect::<Vec<_>>(),
    });
    if !empty.is_empty() {
        outputs["note"] = json!(format!(
            "input set(s) {empty:?} are empty; structure extraction would take the sparse branch"
        ));
    }
    emit(&RunReport {
        command,
        parameters: json!({
            "sets": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "r": r,
            "beta": fmt_rat(&beta),
            "alpha": fmt_rat(&alpha),
        }),
        outputs,
        seed,
    });
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    group: &str,
    z0_spec: &str,
    paths: &[PathBuf],
    epsilon: &str,
    r: usize,
    beta: &str,
    out: Option<&Path>,
    verify: bool,
    command: String,
    seed: u64,
) -> Result<()> {
    let g = parse_group_spec(group)?;
    let z0 = parse_subset(&g, z0_spec)?;
    let sets = load_sets(paths)?;
    let epsilon = parse_rat(epsilon)?;
    let beta = parse_rat(beta)?;
    let params = StructureParams::new(epsilon, r, beta)?;

    if is_in_strict_coset(&g, &z0)?.is_some() {
        eprintln!(
            "warning: Z_0 is contained in a coset of a strict subgroup; the structure \
             guarantee assumes Z_0 is not contained in any strict coset, so the \
             certificate's avoidance verdict may be false"
        );
    }

    let cert = extract_structure(&g, &z0, &sets, &params)?;
    let cert_json = cert.to_json();

    if verify {
        let report = verify_certificate(&g, &z0, &sets, &cert, &epsilon)?;
        if report.all_ok && report.consistent {
            eprintln!("verify: PASS");
        } else {
            eprintln!("verify: FAIL");
            return Err(Error::InternalInvariant(format!(
                "fresh certificate failed verification: masses {:?} avoidance {} consistent {}",
                report.recomputed_masses.iter().map(fmt_rat).collect::<Vec<_>>(),
                report.avoidance_ok,
                report.consistent,
            )));
        }
    }

    match out {
        Some(path) => {
            std::fs::write(path, format!("{cert_json}\n"))?;
            emit(&RunReport {
                command,
                parameters: json!({
                    "group": group,
                    "z0": z0_spec,
                    "sets": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                    "epsilon": fmt_rat(&epsilon),
                    "r": r,
                    "beta": fmt_rat(&beta),
                }),
                outputs: json!({
                    "certificate_path": path.display().to_string(),
                    "I": one_based(cert.i_set.as_slice()),
                    "sparse_branch": cert.sparse_branch,
                    "avoidance_on_I": cert.avoidance_on_i,
                    "error_masses": cert.error_masses.iter().map(fmt_rat).collect::<Vec<_>>(),
                }),
                seed,
            });
        }
        None => println!("{cert_json}"),
    }
    Ok(())
}

fn cmd_rho(group: &str, z0_spec: &str, d: usize, command: String, seed: u64) -> Result<()> {
    let g = parse_group_spec(group)?;
    let z0 = parse_subset(&g, z0_spec)?;
    let p = avoidance_coupling(&g, &z0, d)?;
    let w = rho(&p)?;
    let verdict = if d == 2 {
        is_rho_one(&p)?
    } else {
        is_rho_one(&p.flatten_to_pair(w.achieving_index)?)?
    };
    let coset = is_in_strict_coset(&g, &z0)?;

    let mut outputs = json!({
        "rho": fmt_rho_value(w.value),
        "ace": fmt_rho_value(w.ace_value),
        "top_singular_value": fmt_rho_value(w.top_singular_value),
        "rho_is_one": verdict.rho_is_one,
        "support_components": verdict.components,
        "achieving_coordinate": w.achieving_index + 1,
    });
    if let Some(cw) = coset {
        outputs["coset_witness"] = json!({
            "subgroup": cw.subgroup.iter().collect::<Vec<_>>(),
            "shift": cw.shift,
        });
    }
    emit(&RunReport {
        command,
        parameters: json!({ "group": group, "z0": z0_spec, "d": d }),
        outputs,
        seed,
    });
    Ok(())
}

fn cmd_construct(which: ConstructCmd, command: String, seed: u64) -> Result<()> {
    match which {
        ConstructCmd::Tribes { alphabet, a, b, z0, r, s, combiner, out_prefix } => {
            let a_set = parse_symbols(&a)?;
            let b_set = parse_symbols(&b)?;
            let z0_syms = parse_symbols(&z0)?;
            let f = match combiner.as_str() {
                "min" => CombinerTable::from_fn(alphabet, alphabet, alphabet, |x, y| x.min(y))?,
                "add" => CombinerTable::from_fn(alphabet, alphabet, alphabet, |x, y| {
                    (x + y) % alphabet as u64
                })?,
                other => {
                    return Err(Error::Parse(format!(
                        "unknown combiner '{other}' (expected min or add)"
                    )))
                }
            };
            let (e, fl) = tribes(&f, &z0_syms, &a_set, &b_set, r, s)?;
            let em = e.materialize()?;
            let fm = fl.materialize()?;
            let paths = [suffixed(&out_prefix, "E"), suffixed(&out_prefix, "F")];
            save_set_file(&paths[0], &em)?;
            save_set_file(&paths[1], &fm)?;
            emit(&RunReport {
                command,
                parameters: json!({
                    "alphabet": alphabet, "a": a, "b": b, "z0": z0,
                    "r": r, "s": s, "combiner": combiner,
                }),
                outputs: json!({
                    "files": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
                    "n": e.n(),
                    "density_E": fmt_big(e.density()),
                    "density_F": fmt_big(fl.density()),
                }),
                seed,
            });
        }
        ConstructCmd::LevelSets { group, subgroup, shift, targets, n, out_prefix } => {
            let g = parse_group_spec(&group)?;
            let h = parse_subset(&g, &subgroup)?;
            let z0 = h.translate(shift % g.order());
            let targets = parse_symbols(&targets)?;
            let family = level_set_family(&g, &z0, &h, &targets, n)?;
            let pi = quotient(&g, &h)?;
            let mut files = Vec::new();
            let mut densities = Vec::new();
            for (j, implicit) in family.iter().enumerate() {
                let mat = implicit.materialize()?;
                let path = suffixed(&out_prefix, &(j + 1).to_string());
                save_set_file(&path, &mat)?;
                files.push(path.display().to_string());
                densities.push(fmt_big(implicit.density()));
            }
            emit(&RunReport {
                command,
                parameters: json!({
                    "group": group, "subgroup": subgroup, "shift": shift,
                    "targets": targets, "n": n,
                }),
                outputs: json!({
                    "files": files,
                    "densities": densities,
                    "quotient_order": pi.image.order(),
                    "kappa": pi.apply(shift % g.order()),
                }),
                seed,
            });
        }
        ConstructCmd::Optimality { p, k, n, out_prefix } => {
            let ex = optimality_example(p, k, n)?;
            let em = ex.e.materialize()?;
            let fm = ex.f.materialize()?;
            let paths = [suffixed(&out_prefix, "E"), suffixed(&out_prefix, "F")];
            save_set_file(&paths[0], &em)?;
            save_set_file(&paths[1], &fm)?;
            emit(&RunReport {
                command,
                parameters: json!({ "p": p, "k": k, "n": n }),
                outputs: json!({
                    "files": paths.iter().map(|q| q.display().to_string()).collect::<Vec<_>>(),
                    "z0": ex.z0.iter().collect::<Vec<_>>(),
                    "density_E": fmt_big(ex.e.density()),
                    "density_F": fmt_big(ex.f.density()),
                    "epsilon": fmt_big(&sumset_lab::rat::big_pow(
                        &sumset_lab::rat::to_big(&sumset_lab::rat::rat(1, p as i128)),
                        k as u32 + 1,
                    )),
                }),
                seed,
            });
        }
    }
    Ok(())
}

fn suffixed(prefix: &Path, tag: &str) -> PathBuf {
    let mut name = prefix.file_name().map_or_else(String::new, |s| {
        s.to_string_lossy().into_owned()
    });
    name.push('-');
    name.push_str(tag);
    name.push_str(".set");
    prefix.with_file_name(name)
}

fn cmd_count(group: &str, z0_spec: &str, paths: &[PathBuf], command: String, seed: u64) -> Result<()> {
    let g = parse_group_spec(group)?;
    let z0 = parse_subset(&g, z0_spec)?;
    let sets = load_sets(paths)?;
    let res = count_tuples(&g, &sets, &z0)?;
    let ratio = if res.tuple_space == 0 {
        "0/1".to_string()
    } else {
        fmt_rat(&rat_from_counts(res.count, res.tuple_space)?)
    };
    emit(&RunReport {
        command,
        parameters: json!({
            "group": group,
            "z0": z0_spec,
            "sets": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        }),
        outputs: json!({
            "count": res.count.to_string(),
            "tuple_space": res.tuple_space.to_string(),
            "ratio": ratio,
            "avoids": avoids(&g, &sets, &z0)?,
        }),
        seed,
    });
    Ok(())
}
