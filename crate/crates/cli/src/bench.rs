//! `compare` and `bench`: comparison runs over the simulator, and measured
//! cost beside the closed-form cost.

use clap::ValueEnum;
use obfw::compare::{run_malicious, run_shared_inputs, run_two_party, CompareError, ComparisonParams, ComparisonRun};
use obfw::compare::Variant as TwoParty;
use obfw::sharing::RandomSource;

use crate::{CliError, Env};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Semi-honest three-party comparison, five rounds.
    Alg4,
    /// Four-round variant.
    Alg5,
    /// Inputs additively shared among m parties.
    Alg6,
    /// Shamir-shared inputs, malicious-aware.
    Alg7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

impl From<CompareError> for CliError {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::DomainOverflow { .. } | CompareError::BadParams(_) => CliError::Usage(e.to_string()),
            CompareError::Protocol(obfw::net::ProtocolError::Net(_)) => CliError::Transport(e.to_string()),
            _ => CliError::Protocol(e.to_string()),
        }
    }
}

fn execute(variant: Variant, params: &ComparisonParams, a: u128, b: u128, m: usize, t: usize, seed: u64) -> Result<ComparisonRun, CompareError> {
    match variant {
        Variant::Alg4 => run_two_party(TwoParty::SemiHonest, params, a, b, seed, None),
        Variant::Alg5 => run_two_party(TwoParty::LowRounds, params, a, b, seed, None),
        Variant::Alg6 => run_shared_inputs(params, m, a, b, seed),
        Variant::Alg7 => run_malicious(params, t, a, b, seed),
    }
}

fn fresh_seed() -> u64 {
    u64::from_le_bytes(RandomSource::from_entropy().seed()[..8].try_into().unwrap())
}

pub fn compare(env: &Env, variant: Variant, a: u128, b: u128, ell: u32, m: usize, t: usize) -> Result<(), CliError> {
    let params = ComparisonParams::new(ell)?;
    let run = execute(variant, &params, a, b, m, t, env.seed.unwrap_or_else(fresh_seed))?;
    println!("{}", if run.f == 1 { "a >= b" } else { "a < b" });
    if let Some(path) = &env.transcript {
        std::fs::write(path, run.transcript.to_json()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

struct Row {
    variant: Variant,
    ell: u32,
    m: Option<usize>,
    bits: u64,
    formula_bits: Option<u64>,
    rounds: usize,
    formula_rounds: Option<usize>,
    note: String,
}

impl Row {
    fn mismatch(&self) -> bool {
        self.formula_bits.is_some_and(|f| f != self.bits) || self.formula_rounds.is_some_and(|r| r != self.rounds)
    }

    fn status(&self) -> &'static str {
        if self.mismatch() {
            "MISMATCH"
        } else if self.formula_bits.is_some() {
            "ok"
        } else {
            "info"
        }
    }
}

/// Closed-form bits and rounds; `None` where no exact form applies.
fn closed_form(variant: Variant, ell: u64, m: u64) -> (Option<u64>, Option<usize>) {
    if !ell.is_power_of_two() {
        return (None, None);
    }
    let l = ell.trailing_zeros() as u64;
    match variant {
        Variant::Alg4 => (Some(7 * ell * l + 26 * ell + 11 * l + 32), Some(5)),
        Variant::Alg5 => (Some(2 * ell * ell + 5 * ell * l + 23 * ell + 6 * l + 22), Some(4)),
        Variant::Alg6 => (Some(9 * ell * l + 4 * m * ell + 25 * ell + 12 * l + 35), None),
        Variant::Alg7 => (None, None),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn bench(variant: Variant, ells: &[u32], ms: &[usize], t: usize, format: Format, strict: bool) -> Result<(), CliError> {
    if ells.is_empty() {
        return Err(CliError::Usage("give at least one ℓ, e.g. 8,16,32".into()));
    }
    let mut rows = Vec::new();
    for &ell in ells {
        let params = ComparisonParams::new(ell)?;
        let max = (1u128 << ell) - 1;
        let party_counts: Vec<Option<usize>> = if variant == Variant::Alg6 { ms.iter().copied().map(Some).collect() } else { vec![None] };
        for m in party_counts {
            let run = execute(variant, &params, max / 3, max / 5, m.unwrap_or(3), t, ell as u64)?;
            let (formula_bits, formula_rounds) = closed_form(variant, ell as u64, m.unwrap_or(0) as u64);
            rows.push(Row {
                variant,
                ell,
                m,
                bits: run.transcript.total_accounting_bits(),
                formula_bits,
                rounds: run.transcript.rounds(),
                formula_rounds,
                note: if variant == Variant::Alg7 {
                    let l = ell as i128;
                    format!("tree fan-in; published 216ℓ³ − 36ℓ² + 72ℓ = {}", 216 * l * l * l - 36 * l * l + 72 * l)
                } else {
                    String::new()
                },
            });
        }
    }
    match format {
        Format::Markdown => {
            println!("| variant | ℓ | m | bits | closed form | rounds | closed form | status | note |");
            println!("|---|---|---|---|---|---|---|---|---|");
            for r in &rows {
                println!(
                    "| {:?} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    r.variant,
                    r.ell,
                    opt(r.m),
                    r.bits,
                    opt(r.formula_bits),
                    r.rounds,
                    opt(r.formula_rounds),
                    r.status(),
                    r.note
                );
            }
        }
        Format::Csv => {
            println!("variant,ell,m,bits,formula_bits,rounds,formula_rounds,status");
            for r in &rows {
                println!(
                    "{:?},{},{},{},{},{},{},{}",
                    r.variant,
                    r.ell,
                    opt(r.m),
                    r.bits,
                    opt(r.formula_bits),
                    r.rounds,
                    opt(r.formula_rounds),
                    r.status()
                );
            }
        }
    }
    if strict && rows.iter().any(Row::mismatch) {
        return Err(CliError::Protocol("measured cost differs from the closed form".into()));
    }
    Ok(())
}
