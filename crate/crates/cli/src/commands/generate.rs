//! `generate`: random instances filtered by satisfiability.

use log::{info, warn};
use mosaic_qaoa_core::sat::{generate_balanced, generate_uniform, max_sat_opt};
use mosaic_qaoa_core::{CnfFormula, Provenance};
use serde::Serialize;

use crate::cli::{GenerateArgs, Kind, SatFilter};
use crate::files::{write_dimacs, write_json};
use crate::{config_digest, derive_seed, fatal, unix_time, Failure, Outcome, TOOL_VERSION};

#[derive(Debug, Serialize)]
pub struct InstanceEntry {
    pub id: String,
    pub file: String,
    pub provenance: Provenance,
    pub seed: u64,
    pub n: u32,
    pub m: usize,
    pub opt: usize,
    pub satisfiable: bool,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    config_digest: String,
    config: &'a GenerateArgs,
    created_unix: u64,
    instances: Vec<InstanceEntry>,
    failures: Vec<String>,
}

fn provenance_for(kind: Kind, index: usize, count: usize) -> Provenance {
    match kind {
        Kind::Uniform => Provenance::Uniform,
        Kind::Balanced => Provenance::Balanced,
        Kind::Mixed if index < count / 2 => Provenance::Uniform,
        Kind::Mixed => Provenance::Balanced,
    }
}

fn wants(filter: SatFilter, index: usize, count: usize) -> Option<bool> {
    match filter {
        SatFilter::Any => None,
        SatFilter::Sat => Some(true),
        SatFilter::Unsat => Some(false),
        SatFilter::Half => Some(index < count.div_ceil(2)),
    }
}

pub fn execute(args: &GenerateArgs) -> Outcome {
    if args.n < 3 {
        return Err(Failure::Config(format!("--n {} is below 3", args.n)));
    }
    if args.max_attempts == 0 {
        return Err(Failure::Config("--max-attempts must be positive".into()));
    }
    let digest = config_digest(args);
    let mut instances = Vec::new();
    let mut failures = Vec::new();
    for i in 0..args.count {
        let provenance = provenance_for(args.kind, i, args.count);
        let prefix = match provenance {
            Provenance::Balanced => 'b',
            _ => 'u',
        };
        let id = format!("{prefix}{:02}_{:04}", args.n, i + 1);
        let base = derive_seed(args.seed, &id);
        let want = wants(args.sat, i, args.count);
        let mut found: Option<(CnfFormula, usize)> = None;
        for attempt in 0..args.max_attempts {
            let seed = base.wrapping_add(attempt);
            let f = match provenance {
                Provenance::Balanced => generate_balanced(args.n, seed),
                _ => generate_uniform(args.n, seed),
            }
            .map_err(fatal)?;
            let opt = max_sat_opt(&f).map_err(fatal)?.opt;
            if want.is_none_or(|w| w == (opt == f.m())) {
                found = Some((f, opt));
                break;
            }
        }
        let Some((f, opt)) = found else {
            warn!("{id}: no instance matched the sat filter in {} attempts", args.max_attempts);
            failures.push(id);
            continue;
        };
        let file = format!("{id}.cnf");
        write_dimacs(&args.out.join(&file), &f)?;
        info!("{id}: m={} opt={opt}", f.m());
        instances.push(InstanceEntry {
            id,
            file,
            provenance,
            seed: f.seed(),
            n: f.n(),
            m: f.m(),
            opt,
            satisfiable: opt == f.m(),
        });
    }
    let failed = failures.len();
    write_json(
        &args.out.join("manifest.json"),
        &Manifest {
            tool_version: TOOL_VERSION,
            config_digest: digest,
            config: args,
            created_unix: unix_time(),
            instances,
            failures,
        },
    )?;
    Ok(failed)
}
