use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use keylink::access::{AccessStructure, MembershipMode, ResourceId};
use keylink::audit::{check_collusion, check_soundness};
use keylink::error::Error;
use keylink::kdf::{resource_key, HmacSha256, KeyMaterial, PrfContract};
use keylink::kps::{
    build_bounded, build_complete_circulant, build_complete_extended, build_star,
    make_eulerian, KeyingRelationshipGraph,
};
use keylink::linker::{
    exhaustive_link, greedy_link, lower_bound, storage_report, LinkForest,
};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "keylink", about = "Key storage compression by key linking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PrfArgs {
    /// Keyed derivation function
    #[arg(long, default_value = "hmac-sha256")]
    prf: String,
    /// Key length in bits
    #[arg(long, default_value_t = 256)]
    keylen: usize,
}

impl PrfArgs {
    fn resolve(&self) -> Result<HmacSha256, Error> {
        if self.prf != "hmac-sha256" {
            return Err(Error::Validation(format!("unknown PRF {:?}", self.prf)));
        }
        if self.keylen != 256 {
            return Err(Error::Validation(
                "hmac-sha256 supports --keylen 256 only".into(),
            ));
        }
        Ok(HmacSha256)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print n, m, the storage lower bound and unlinked storage figures
    Analyze { structure: PathBuf },
    /// Compute a link forest and its storage report
    Link {
        structure: PathBuf,
        /// Exhaustive optimal search instead of the greedy procedure
        #[arg(long)]
        exhaustive: bool,
        /// Where to write the forest JSON
        #[arg(long, default_value = "forest.json")]
        out: PathBuf,
    },
    /// Derive a resource key over a forest from root seeds
    Derive {
        forest: PathBuf,
        /// JSON map of root resource id to 64-hex-char seed
        seeds: PathBuf,
        resource: String,
        #[command(flatten)]
        prf: PrfArgs,
    },
    /// Generate a key pre-distribution scheme
    Kps {
        #[command(subcommand)]
        scheme: KpsScheme,
    },
    /// Audit a structure + forest for soundness and collusion resistance
    Verify {
        structure: PathBuf,
        forest: PathBuf,
        /// Maximum coalition size to check
        #[arg(long, default_value_t = 1)]
        coalitions: usize,
    },
    /// Generate a seeded random ideal access structure
    GenRandom {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        resources: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum KpsScheme {
    /// Base station plus n sensors sharing one master seed
    Star {
        n: usize,
        #[arg(long, default_value = "kps")]
        out: PathBuf,
    },
    /// Complete keying graph, circulant split (odd n)
    Complete {
        n: usize,
        /// For even n, route through the bounded scheme after evening
        /// degrees (fails on complete graphs; kept for general use)
        #[arg(long)]
        extend: bool,
        #[arg(long, default_value = "kps")]
        out: PathBuf,
    },
    /// Bounded-degree keying graph from an edge-list file
    Bounded {
        graph: PathBuf,
        /// Add pairing edges first if any degree is odd
        #[arg(long)]
        make_eulerian: bool,
        #[arg(long, default_value = "kps")]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<AccessStructure, Error> {
    AccessStructure::parse(&read(path)?, MembershipMode::Strict)
}

fn load_seeds(path: &Path) -> Result<BTreeMap<ResourceId, KeyMaterial>, Error> {
    let raw: BTreeMap<String, String> = serde_json::from_slice(&read(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    raw.into_iter()
        .map(|(id, hex)| Ok((ResourceId::new(id)?, KeyMaterial::from_hex(&hex)?)))
        .collect()
}

fn write_kps(
    out: &Path,
    pairwise: &AccessStructure,
    plan: &keylink::kps::KpsPlan,
) -> Result<(), Error> {
    let prefix = out.to_string_lossy();
    std::fs::write(format!("{prefix}.structure.json"), pairwise.to_json())?;
    std::fs::write(format!("{prefix}.full.json"), plan.full_structure.to_json())?;
    std::fs::write(format!("{prefix}.forest.json"), plan.forest.to_json())?;
    std::fs::write(format!("{prefix}.plan.json"), plan.to_json())?;
    eprintln!(
        "wrote {prefix}.structure.json {prefix}.full.json {prefix}.forest.json {prefix}.plan.json"
    );
    println!(
        "max_storage={} lower_bound={}",
        plan.max_storage,
        lower_bound(pairwise)
    );
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze { structure } => {
            let s = load_structure(&structure)?;
            let report = storage_report(&s, &LinkForest::new())?;
            println!(
                "n={} m={} bound={} max_unlinked={} avg_unlinked={:.2}",
                report.total_users_n,
                report.total_resources_m,
                report.lower_bound,
                report.max_storage,
                report.avg_storage
            );
            Ok(0)
        }
        Command::Link {
            structure,
            exhaustive,
            out,
        } => {
            let s = load_structure(&structure)?;
            let forest = if exhaustive {
                exhaustive_link(&s)?
            } else {
                greedy_link(&s)
            };
            let report = storage_report(&s, &forest)?;
            std::fs::write(&out, forest.to_json())?;
            eprintln!(
                "wrote {} ({} links, max storage {})",
                out.display(),
                forest.link_count(),
                report.max_storage
            );
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(0)
        }
        Command::Derive {
            forest,
            seeds,
            resource,
            prf,
        } => {
            let f = prf.resolve()?;
            let forest = LinkForest::parse(&read(&forest)?)?;
            let seeds = load_seeds(&seeds)?;
            let r = ResourceId::new(resource)?;
            if forest.parent(&r).is_none() && !seeds.contains_key(&r) {
                return Err(Error::Validation(format!(
                    "unknown resource {r}: not linked and no seed"
                )));
            }
            let key = resource_key(&forest, &seeds, &r, &f as &dyn PrfContract)?;
            println!("{}", key.to_hex());
            Ok(0)
        }
        Command::Kps { scheme } => {
            match scheme {
                KpsScheme::Star { n, out } => {
                    let (pairwise, plan) = build_star(n)?;
                    write_kps(&out, &pairwise, &plan)?;
                }
                KpsScheme::Complete { n, extend, out } => {
                    if n % 2 == 0 && extend {
                        let (pairwise, plan, _) = build_complete_extended(n)?;
                        write_kps(&out, &pairwise, &plan)?;
                    } else {
                        let (pairwise, plan) = build_complete_circulant(n)?;
                        write_kps(&out, &pairwise, &plan)?;
                    }
                }
                KpsScheme::Bounded {
                    graph,
                    make_eulerian: fix,
                    out,
                } => {
                    let text = String::from_utf8_lossy(&read(&graph)?).into_owned();
                    let mut g = KeyingRelationshipGraph::parse_edge_list(&text)?;
                    if fix {
                        g = make_eulerian(&g)?;
                    }
                    let (pairwise, plan, _) = build_bounded(&g)?;
                    write_kps(&out, &pairwise, &plan)?;
                }
            }
            Ok(0)
        }
        Command::Verify {
            structure,
            forest,
            coalitions,
        } => {
            let s = load_structure(&structure)?;
            let f = LinkForest::parse(&read(&forest)?)?;
            // unknown resources are a validation failure; links violating
            // the subset rule surface as audit violations below
            for (child, parent) in f.links() {
                s.resource(child)?;
                s.resource(parent)?;
            }
            let report = if coalitions <= 1 {
                check_soundness(&s, &f)
            } else {
                check_collusion(&s, &f, coalitions)?
            };
            println!("{}", report.to_json());
            if report.ok {
                Ok(0)
            } else {
                eprintln!("{} violation(s)", report.violations.len());
                Ok(EXIT_AUDIT)
            }
        }
        Command::GenRandom {
            users,
            resources,
            seed,
        } => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = keylink::gen::random_ideal_structure(&mut rng, users, resources)?;
            println!("{}", s.to_json());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
