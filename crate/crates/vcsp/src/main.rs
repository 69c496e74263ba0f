//! Command-line front end for the valued-structure toolkit.
//!
//! Exit codes: 0 success (including negative answers), 2 input error,
//! 3 resource limit exceeded, 4 precondition failed.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use vcsp::cores::{compute_core, core_weighting, is_core, reduction_step};
use vcsp::error::{Error, Result};
use vcsp::improvement::{find_ifh, validate_ifh, IfhCheck, IfhDistribution, IfhDistributionJson};
use vcsp::mappings::{opt_bruteforce, Mapping};
use vcsp::search::search_solve;
use vcsp::sherali::{
    build_sa, gap_instance_overlap, gap_instance_treewidth, opt_k, sa_tight_decide,
};
use vcsp::structures::{
    gen_crisp_clique, gen_diag_grid, gen_grid, gen_path, gen_random, gen_two_triangles, Signature,
    ValuedStructure,
};
use vcsp::width::{
    gaifman, overlap, scopes, treewidth, twms, validate_decomposition, DecompositionJson,
    TreeDecomposition,
};
use vcsp::Limits;

#[derive(Parser)]
#[command(
    name = "vcsp",
    version,
    about = "Structural analysis of general-valued constraint satisfaction"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Simplex pivot cap.
    #[arg(long, global = true, default_value_t = Limits::default().max_pivots)]
    max_pivots: u64,
    /// Cap on LP columns / relaxation variables.
    #[arg(long, global = true, default_value_t = Limits::default().max_columns)]
    max_columns: u64,
    /// Cap on enumerated mappings / search nodes.
    #[arg(long, global = true, default_value_t = Limits::default().max_maps)]
    max_maps: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Tw,
    Twms,
    Overlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapKind {
    Treewidth,
    Overlap,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact minimum mapping cost by branch-and-bound.
    Opt { a: PathBuf, b: PathBuf },
    /// Optimum of the level-k Sherali-Adams relaxation.
    Sa {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Write the LP in text form to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        /// Also brute-force the exact optimum and report tightness.
        #[arg(long)]
        compare_opt: bool,
    },
    /// Does A improve B (inverse fractional homomorphism exists)?
    Improves { a: PathBuf, b: PathBuf },
    /// Are A and B equivalent (improvement both ways)?
    Equiv { a: PathBuf, b: PathBuf },
    /// Is A a valued core?
    IsCore { a: PathBuf },
    /// Compute a valued core of A.
    Core {
        a: PathBuf,
        /// Write the core structure here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// A weighting certifying that A is a core.
    CoreWeighting { a: PathBuf },
    /// Treewidth, treewidth modulo scopes, or overlap of pos(A).
    Width {
        a: PathBuf,
        #[arg(long, value_enum, default_value = "tw")]
        measure: Measure,
    },
    /// Largest element-set intersection of two distinct positive tuples.
    Overlap { a: PathBuf },
    /// Is the level-k relaxation always tight for A?
    SaTight {
        a: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Construct a gap instance witnessing non-tightness at level k.
    Gap {
        a: PathBuf,
        #[arg(long, value_enum)]
        kind: GapKind,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Write the target structure here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Recover a minimum-cost mapping via the core and the relaxation.
    Search {
        a: PathBuf,
        b: PathBuf,
        /// Override the auto-derived relaxation level.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Generate a named structure.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
    /// Check a claimed improvement distribution from A to B.
    ValidateIfh {
        a: PathBuf,
        b: PathBuf,
        distribution: PathBuf,
    },
    /// Check a claimed tree decomposition of the Gaifman graph of pos(A).
    ValidateDecomp { a: PathBuf, decomposition: PathBuf },
}

#[derive(Subcommand)]
enum GenCmd {
    /// The n-by-n grid with crisp arcs and unit weights.
    Grid {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The length-(2n-1) weighted directed path.
    Path {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The diagonally weighted n-by-n grid with base m.
    DiagGrid {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The crisp k-clique.
    Clique {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Two crisp ternary tuples glued along two elements.
    TwoTriangles {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Seeded random structure; every tuple value is drawn uniformly from
    /// {0, 1, 2, inf}.
    Random {
        /// Universe size.
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        /// Comma-separated symbol arities; symbols are named f1, f2, ...
        #[arg(long, default_value = "2,1")]
        arities: String,
    },
}

fn load(path: &PathBuf) -> Result<ValuedStructure> {
    ValuedStructure::from_json_str(&fs::read_to_string(path)?)
}

fn emit_structure(s: &ValuedStructure, output: &Option<PathBuf>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, s.to_json_string())?,
        None => println!("{}", s.to_json_string()),
    }
    Ok(())
}

fn decomposition_json(td: &TreeDecomposition, names: &[String]) -> serde_json::Value {
    serde_json::to_value(td.to_json(names)).expect("serializable decomposition")
}

fn run(cli: Cli) -> Result<()> {
    let limits = Limits {
        max_pivots: cli.max_pivots,
        max_columns: cli.max_columns,
        max_maps: cli.max_maps,
    };
    match cli.cmd {
        Cmd::Opt { a, b } => {
            let (a, b) = (load(&a)?, load(&b)?);
            let (value, mapping) = opt_bruteforce(&a, &b, limits.max_maps)?;
            println!(
                "{}",
                json!({
                    "opt": value.to_string(),
                    "mapping": mapping.to_json(&a, &b),
                })
            );
        }
        Cmd::Sa {
            a,
            b,
            level,
            dump_lp,
            compare_opt,
        } => {
            let (a, b) = (load(&a)?, load(&b)?);
            if let Some(path) = dump_lp {
                let (lp, _) = build_sa(&a, &b, level, &limits)?;
                fs::write(path, lp.dump())?;
            }
            let (value, _) = opt_k(&a, &b, level, &limits)?;
            let mut out = json!({ "opt_k": value.to_string() });
            if compare_opt {
                let (exact, _) = opt_bruteforce(&a, &b, limits.max_maps)?;
                out["opt"] = json!(exact.to_string());
                out["tight_vs_bruteforce"] = json!(value == exact);
            }
            println!("{out}");
        }
        Cmd::Improves { a, b } => {
            let (a, b) = (load(&a)?, load(&b)?);
            match find_ifh(&a, &b, &limits)? {
                Some(dist) => println!(
                    "{}",
                    json!({ "answer": true, "witness": dist.to_json(&a, &b).entries })
                ),
                None => println!("{}", json!({ "answer": false })),
            }
        }
        Cmd::Equiv { a, b } => {
            let (a, b) = (load(&a)?, load(&b)?);
            let forward = find_ifh(&a, &b, &limits)?;
            let backward = match forward {
                Some(_) => find_ifh(&b, &a, &limits)?,
                None => None,
            };
            match (forward, backward) {
                (Some(f), Some(g)) => println!(
                    "{}",
                    json!({
                        "answer": true,
                        "forward": f.to_json(&a, &b).entries,
                        "backward": g.to_json(&b, &a).entries,
                    })
                ),
                _ => println!("{}", json!({ "answer": false })),
            }
        }
        Cmd::IsCore { a } => {
            let a = load(&a)?;
            if is_core(&a, &limits)? {
                println!("{}", json!({ "answer": true }));
            } else {
                let witness = reduction_step(&a, &Mapping::identity(a.size()), &limits)?
                    .map(|g| g.to_json(&a, &a));
                println!("{}", json!({ "answer": false, "witness": witness }));
            }
        }
        Cmd::Core { a, output } => {
            let a = load(&a)?;
            let result = compute_core(&a, &limits)?;
            emit_structure(&result.core, &output)?;
            eprintln!(
                "{}",
                json!({
                    "endomap": result.endomap.to_json(&a, &a),
                    "projection": result.projection.to_json(&a, &result.core),
                })
            );
        }
        Cmd::CoreWeighting { a } => {
            let a = load(&a)?;
            let w = core_weighting(&a, &limits)?;
            let weights: Vec<serde_json::Value> = w
                .entries
                .iter()
                .map(|((sym, t), v)| {
                    json!({
                        "symbol": a.signature.symbols[*sym].name,
                        "args": t.iter().map(|&e| a.universe[e].clone()).collect::<Vec<_>>(),
                        "value": v.to_string(),
                    })
                })
                .collect();
            println!(
                "{}",
                json!({ "weights": weights, "base_cost": w.base_cost(&a).to_string() })
            );
        }
        Cmd::Width { a, measure } => {
            let a = load(&a)?;
            let rel = a.pos();
            match measure {
                Measure::Tw => {
                    let g = gaifman(&rel)?;
                    let (w, td) = treewidth(&g)?;
                    println!(
                        "{}",
                        json!({ "value": w, "decomposition": decomposition_json(&td, &rel.universe) })
                    );
                }
                Measure::Twms => {
                    let (w, td) = twms(&rel)?;
                    println!(
                        "{}",
                        json!({ "value": w, "decomposition": decomposition_json(&td, &rel.universe) })
                    );
                }
                Measure::Overlap => println!("{}", json!({ "value": overlap(&a) })),
            }
        }
        Cmd::Overlap { a } => {
            let a = load(&a)?;
            println!("{}", json!({ "value": overlap(&a) }));
        }
        Cmd::SaTight { a, level } => {
            let a = load(&a)?;
            let cert = sa_tight_decide(&a, level, &limits)?;
            println!(
                "{}",
                json!({
                    "answer": cert.tight,
                    "core_size": cert.core.size(),
                    "twms": cert.twms,
                    "overlap": cert.overlap,
                })
            );
        }
        Cmd::Gap {
            a,
            kind,
            level,
            output,
        } => {
            let a = load(&a)?;
            let (b, params) = match kind {
                GapKind::Treewidth => gap_instance_treewidth(&a, level, &limits)?,
                GapKind::Overlap => gap_instance_overlap(&a, level, &limits)?,
            };
            emit_structure(&b, &output)?;
            eprintln!(
                "{}",
                json!({
                    "size": b.size(),
                    "mass": params.mass.to_string(),
                    "min_positive": params.min_positive.to_string(),
                    "off_value": params.off_value.to_string(),
                })
            );
        }
        Cmd::Search { a, b, level } => {
            let (a, b) = (load(&a)?, load(&b)?);
            let result = match level {
                None => search_solve(&a, &b, &limits)?,
                Some(k) => vcsp::search::search_fix_loop(&a, &b, k, &limits)?,
            };
            println!(
                "{}",
                json!({
                    "cost": result.cost.to_string(),
                    "infinite": result.infinite,
                    "mapping": result.mapping.to_json(&a, &b),
                })
            );
        }
        Cmd::Gen { what } => match what {
            GenCmd::Grid { n, output } => emit_structure(&gen_grid(n)?, &output)?,
            GenCmd::Path { n, output } => emit_structure(&gen_path(n)?, &output)?,
            GenCmd::DiagGrid { n, m, output } => emit_structure(&gen_diag_grid(n, m)?, &output)?,
            GenCmd::Clique { n, output } => emit_structure(&gen_crisp_clique(n)?, &output)?,
            GenCmd::TwoTriangles { output } => emit_structure(&gen_two_triangles()?, &output)?,
            GenCmd::Random {
                size,
                seed,
                arities,
            } => {
                let arities: Vec<usize> = arities
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| Error::BadParameter(format!("bad arity {s:?}")))
                    })
                    .collect::<Result<_>>()?;
                let symbols: Vec<(String, usize)> = arities
                    .iter()
                    .enumerate()
                    .map(|(i, &ar)| (format!("f{}", i + 1), ar))
                    .collect();
                let sig = Signature::from_owned(symbols)?;
                emit_structure(&gen_random(&sig, size, seed)?, &None)?;
            }
        },
        Cmd::ValidateIfh { a, b, distribution } => {
            let (a, b) = (load(&a)?, load(&b)?);
            let json_dist: IfhDistributionJson =
                serde_json::from_str(&fs::read_to_string(distribution)?)?;
            let dist = IfhDistribution::from_json(&json_dist, &a, &b)?;
            match validate_ifh(&a, &b, &dist)? {
                IfhCheck::Valid => println!("{}", json!({ "answer": true })),
                IfhCheck::NotADistribution(reason) => {
                    println!("{}", json!({ "answer": false, "reason": reason }))
                }
                IfhCheck::Violated { symbol, tuple } => println!(
                    "{}",
                    json!({
                        "answer": false,
                        "reason": "constraint violated",
                        "symbol": symbol,
                        "tuple": tuple,
                    })
                ),
            }
        }
        Cmd::ValidateDecomp { a, decomposition } => {
            let a = load(&a)?;
            let rel = a.pos();
            let json_td: DecompositionJson =
                serde_json::from_str(&fs::read_to_string(decomposition)?)?;
            let td = TreeDecomposition::from_json(&json_td, &rel.universe)?;
            let g = gaifman(&rel)?;
            match validate_decomposition(&g, &td, &scopes(&rel)) {
                Ok((w, ms)) => println!(
                    "{}",
                    json!({ "answer": true, "width": w, "width_modulo_scopes": ms })
                ),
                Err(Error::NotADecomposition(reason)) => {
                    println!("{}", json!({ "answer": false, "reason": reason }))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ResourceLimit(_) => 3,
                Error::PreconditionFailed(_)
                | Error::NotACore
                | Error::NoTighteningWitness => 4,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
