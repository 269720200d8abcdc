//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input/parse/validation error, 3 optimizer or
//! degenerate-Jastrow failure, 4 contract, dimension or size violation.
//!
//! Every structured output embeds the resolved configuration and its SHA-256
//! hash. Wall time lives in a separate `timing` field so that manifests from
//! identical configurations are otherwise byte-identical.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::ansatz::{build_hea, HeaKind, HeaSpec};
use crate::error::{Error, Result};
use crate::fermion::{self, OrbitalOrdering};
use crate::jastrow::{self, JastrowParams};
use crate::measurement::{self, GroupWeight, Grouping, PreparedObservable, Strategy};
use crate::optim::{Method, OptimizerConfig};
use crate::par::Exec;
use crate::pauli::{PauliSum, DEFAULT_DROP_TOL};
use crate::resource::{
    self, Assumptions, CountModel, CountSeries, PlatformProfile, Scenario, ScalingRow, YEAR_SECONDS,
};
use crate::rng::RNG_ALGORITHM;
use crate::statevector::Statevector;
use crate::vqe::{self, CostSpec, OptimizeConfig, Penalty};

#[derive(Debug, Parser)]
#[command(name = "nuvqe", version, about = "Jastrow-dressed VQE simulation and cost modelling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map an FCIDUMP file to a qubit Hamiltonian (Jordan–Wigner).
    Ham(HamArgs),
    /// Run multi-start VQE or nuVQE in exact mode.
    Vqe(VqeArgs),
    /// Count QWC and FC measurement groups of an operator.
    Group(GroupArgs),
    /// Repeated sampled estimation with a shot-allocation strategy.
    Sample(SampleArgs),
    /// Wall-clock estimate for one energy query.
    Estimate(EstimateArgs),
    /// Fraction of correlation energy recovered.
    Correlation(CorrelationArgs),
    /// Print ⟨S²⟩, ⟨S_z⟩ and ⟨N⟩ of a state file.
    Spin(SpinArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HamArgs {
    #[arg(long)]
    pub fcidump: PathBuf,
    #[arg(long, default_value = "interleaved")]
    pub ordering: String,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also emit JHJ and JJ for Jastrow parameters drawn with this seed.
    #[arg(long)]
    pub jastrow_seed: Option<u64>,
    #[arg(long, default_value_t = jastrow::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, requires = "jastrow_seed")]
    pub jhj_out: Option<PathBuf>,
    #[arg(long, requires = "jastrow_seed")]
    pub jj_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VqeArgs {
    /// Qubit Hamiltonian (Pauli-sum JSON).
    #[arg(long, conflicts_with = "fcidump")]
    pub hamiltonian: Option<PathBuf>,
    #[arg(long)]
    pub fcidump: Option<PathBuf>,
    #[arg(long, default_value = "interleaved")]
    pub ordering: String,
    #[arg(long, default_value = "ry_linear")]
    pub ansatz: String,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Defaults to 1000 (VQE) or 100 (nuVQE).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jastrow: bool,
    #[arg(long, default_value_t = jastrow::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Start Jastrow parameters at zero.
    #[arg(long)]
    pub jastrow_zero_start: bool,
    /// Target ⟨S²⟩ of the spin penalty.
    #[arg(long, allow_hyphen_values = true)]
    pub penalty_spin: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub penalty_weight: f64,
    /// Evaluate the penalty on the Jastrow-dressed state.
    #[arg(long)]
    pub penalty_dressed: bool,
    /// `zeros`, `hf`, or an amplitude file; defaults to `hf` with an FCIDUMP.
    #[arg(long)]
    pub init: Option<String>,
    /// Electron count for `--init hf` with a Pauli-sum Hamiltonian.
    #[arg(long)]
    pub n_electrons: Option<usize>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub ms2: i64,
    #[arg(long, default_value = "lbfgs")]
    pub optimizer: String,
    #[arg(long, default_value_t = 2000)]
    pub max_evals: usize,
    /// Start every θ at zero.
    #[arg(long)]
    pub zero_start: bool,
    /// Previous `vqe` manifest whose best parameters seed restart 0.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    /// Manifest output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file of option values; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GroupArgs {
    /// Operator file (Pauli-sum JSON).
    #[arg(long)]
    pub op: PathBuf,
    /// Operator name in the report; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "jordan_wigner")]
    pub mapping: String,
    /// `csv` or `json`.
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    /// Operator to estimate (numerator when `--jj` is given).
    #[arg(long)]
    pub op: PathBuf,
    /// Denominator operator; switches to the sampled Rayleigh quotient.
    #[arg(long)]
    pub jj: Option<PathBuf>,
    /// Amplitude file.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value = "UDS")]
    pub strategy: String,
    #[arg(long, default_value_t = 1000)]
    pub s_tot: u64,
    /// `none` or `qwc`.
    #[arg(long, default_value = "none")]
    pub grouping: String,
    /// `sum` or `max` of member |c| as group weight.
    #[arg(long, default_value = "sum")]
    pub group_weight: String,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub sequential: bool,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-repetition CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// Scenario JSON with qubit list, platform profiles, assumptions and counts.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Comma-separated qubit counts (overrides the scenario).
    #[arg(long, value_delimiter = ',')]
    pub qubits: Option<Vec<usize>>,
    #[arg(long)]
    pub shots_per_circuit: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<u64>,
    /// Report CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report with fits and the resolved scenario.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrelationArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub e_las: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub e_method: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub e_ref: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpinArgs {
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value = "interleaved")]
    pub ordering: String,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Invalid(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        Error::Optimizer(_) | Error::DegenerateJastrow { .. } => 3,
        Error::Contract(_) | Error::Dimension { .. } | Error::Size { .. } | Error::UndefinedFraction => 4,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return 2;
        }
    };
    let sub = matches.subcommand().map(|(_, m)| m.clone()).unwrap_or_default();
    match dispatch(cli.command, &sub, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, m: &ArgMatches, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Ham(a) => cmd_ham(&a, out),
        Command::Vqe(a) => {
            let a = resolve(&a, m, a.config.as_deref())?;
            cmd_vqe(&a, out)
        }
        Command::Group(a) => cmd_group(&a, out),
        Command::Sample(a) => {
            let a = resolve(&a, m, a.config.as_deref())?;
            cmd_sample(&a, out)
        }
        Command::Estimate(a) => cmd_estimate(&a, out),
        Command::Correlation(a) => cmd_correlation(&a, out),
        Command::Spin(a) => cmd_spin(&a, out),
    }
}

/// Overlays a JSON config file on the defaults; explicit flags win.
fn resolve<T: Serialize + DeserializeOwned>(parsed: &T, m: &ArgMatches, config: Option<&Path>) -> Result<T> {
    let mut base = serde_json::to_value(parsed)?;
    let Some(path) = config else {
        return Ok(serde_json::from_value(base)?);
    };
    let file: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let (Value::Object(file), Value::Object(map)) = (file, &mut base) else {
        return Err(Error::invalid("config file must hold a JSON object"));
    };
    for (k, v) in file {
        if !map.contains_key(&k) {
            return Err(Error::invalid(format!("unknown config key {k:?}")));
        }
        if m.value_source(&k) != Some(ValueSource::CommandLine) {
            map.insert(k, v);
        }
    }
    Ok(serde_json::from_value(base)?)
}

// Output locations and execution mode do not change results.
const UNHASHED_KEYS: [&str; 6] = ["out", "csv", "json", "jhj_out", "jj_out", "sequential"];

/// SHA-256 (hex) of the compact JSON encoding of `config`, ignoring output
/// paths and the `sequential` switch.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let mut v = serde_json::to_value(config)?;
    if let Value::Object(m) = &mut v {
        for k in UNHASHED_KEYS {
            m.remove(k);
        }
    }
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
}

fn envelope<T: Serialize>(subcommand: &str, config: &T) -> Result<serde_json::Map<String, Value>> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("nuvqe"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("subcommand".into(), json!(subcommand));
    m.insert("config".into(), serde_json::to_value(config)?);
    m.insert("config_hash".into(), json!(config_hash(config)?));
    m.insert("rng_algorithm".into(), json!(RNG_ALGORITHM));
    Ok(m)
}

fn write_json_file(path: &Path, v: &Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_op(path: &Path) -> Result<PauliSum> {
    PauliSum::read_json(BufReader::new(File::open(path)?))
}

fn read_state(path: &Path) -> Result<Statevector> {
    Statevector::from_amplitude_file(BufReader::new(File::open(path)?))
}

fn write_op(op: &PauliSum, metadata: Value, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let mut file = op.to_file();
    file.metadata = Some(metadata);
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut w, &file)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            serde_json::to_writer_pretty(&mut *out, &file)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn cmd_ham(a: &HamArgs, out: &mut dyn Write) -> Result<()> {
    let ordering: OrbitalOrdering = a.ordering.parse()?;
    let ints = fermion::parse_fcidump(BufReader::new(File::open(&a.fcidump)?))?;
    let h = fermion::jw_map(&ints, ordering)?;
    let hash = config_hash(a)?;
    let meta = |operator: &str| {
        json!({
            "operator": operator,
            "source": a.fcidump.display().to_string(),
            "ordering": ordering.to_string(),
            "n_spatial": ints.n_spatial(),
            "n_electrons": ints.n_electrons(),
            "ms2": ints.ms2(),
            "e_core": ints.e_core(),
            "config_hash": hash,
        })
    };
    write_op(&h, meta("H"), a.out.as_deref(), out)?;
    if let Some(seed) = a.jastrow_seed {
        let p = jastrow::sample_params(h.n_qubits(), a.epsilon, seed)?;
        let j = jastrow::build_linear_jastrow(&p)?;
        let (jhj, jj) = jastrow::conjugate_pair(&j, &h)?;
        let extra = |name: &str| {
            let mut m = meta(name);
            m["jastrow"] = serde_json::to_value(&p).unwrap_or(Value::Null);
            m["jastrow_seed"] = json!(seed);
            m
        };
        if let Some(path) = &a.jhj_out {
            write_op(&jhj, extra("JHJ"), Some(path), out)?;
        }
        if let Some(path) = &a.jj_out {
            write_op(&jj, extra("JJ"), Some(path), out)?;
        }
    }
    if let Some(p) = &a.out {
        writeln!(out, "wrote {} terms to {}", h.len(), p.display())?;
    }
    Ok(())
}

struct Problem {
    hamiltonian: PauliSum,
    n_spatial: Option<usize>,
    n_electrons: Option<usize>,
    ms2: i64,
}

fn load_problem(a: &VqeArgs, ordering: OrbitalOrdering) -> Result<Problem> {
    match (&a.hamiltonian, &a.fcidump) {
        (Some(p), None) => {
            let h = read_op(p)?;
            let nq = h.n_qubits();
            Ok(Problem {
                hamiltonian: h,
                n_spatial: (nq % 2 == 0).then_some(nq / 2),
                n_electrons: a.n_electrons,
                ms2: a.ms2,
            })
        }
        (None, Some(p)) => {
            let ints = fermion::parse_fcidump(BufReader::new(File::open(p)?))?;
            Ok(Problem {
                hamiltonian: fermion::jw_map(&ints, ordering)?,
                n_spatial: Some(ints.n_spatial()),
                n_electrons: Some(a.n_electrons.unwrap_or(ints.n_electrons())),
                ms2: if a.n_electrons.is_some() { a.ms2 } else { ints.ms2() },
            })
        }
        _ => Err(Error::invalid("give exactly one of --hamiltonian or --fcidump")),
    }
}

fn initial_state(a: &VqeArgs, prob: &Problem, ordering: OrbitalOrdering) -> Result<Statevector> {
    let nq = prob.hamiltonian.n_qubits();
    let init = a
        .init
        .clone()
        .unwrap_or_else(|| if a.fcidump.is_some() { "hf".into() } else { "zeros".into() });
    match init.as_str() {
        "zeros" => Statevector::zero(nq),
        "hf" => {
            let ns = prob
                .n_spatial
                .ok_or_else(|| Error::invalid("--init hf needs an even qubit count"))?;
            let ne = prob
                .n_electrons
                .ok_or_else(|| Error::invalid("--init hf needs --n-electrons or an FCIDUMP"))?;
            let mask = fermion::determinant_occupation(ns, ne, prob.ms2, ordering)?;
            Statevector::from_basis_index(nq, mask as usize)
        }
        path => {
            let s = read_state(Path::new(path))?;
            Error::check_dim(nq, s.n_qubits())?;
            Ok(s)
        }
    }
}

fn warm_start_vector(path: &Path, spec: &CostSpec) -> Result<Vec<f64>> {
    let m: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let theta: Vec<f64> = serde_json::from_value(m["result"]["best_theta"].clone())
        .map_err(|_| Error::invalid("warm-start manifest lacks result.best_theta"))?;
    if theta.len() != spec.n_theta() {
        return Err(Error::contract(format!(
            "warm start has {} circuit parameters, expected {}",
            theta.len(),
            spec.n_theta()
        )));
    }
    let mut x = theta;
    if spec.jastrow {
        match serde_json::from_value::<JastrowParams>(m["result"]["best_jastrow"].clone()) {
            Ok(p) => x.extend(p.to_flat()),
            Err(_) => x.extend(JastrowParams::zeros(spec.n_qubits()).to_flat()),
        }
    }
    Ok(x)
}

pub fn cmd_vqe(a: &VqeArgs, out: &mut dyn Write) -> Result<()> {
    let started = Instant::now();
    let ordering: OrbitalOrdering = a.ordering.parse()?;
    let kind: HeaKind = a.ansatz.parse()?;
    let method: Method = a.optimizer.parse()?;
    let prob = load_problem(a, ordering)?;
    let nq = prob.hamiltonian.n_qubits();
    let circuit = build_hea(&HeaSpec::new(kind, nq, a.layers)?)?;
    let init = initial_state(a, &prob, ordering)?;
    let s2 = match prob.n_spatial {
        Some(ns) => Some(fermion::build_s2_operator(ns, ordering)?),
        None => None,
    };
    let mut spec = CostSpec::new(prob.hamiltonian.clone(), circuit, init)?.with_jastrow(a.jastrow);
    if let Some(target) = a.penalty_spin {
        let op = s2
            .clone()
            .ok_or_else(|| Error::invalid("spin penalty needs an even qubit count"))?;
        spec = spec.with_penalty(Penalty {
            operator: op,
            target,
            weight: a.penalty_weight,
            dressed: a.penalty_dressed,
        })?;
    }
    let restarts = a.restarts.unwrap_or(if a.jastrow {
        vqe::DEFAULT_NUVQE_RESTARTS
    } else {
        vqe::DEFAULT_VQE_RESTARTS
    });
    let warm = match &a.warm_start {
        Some(p) => Some(warm_start_vector(p, &spec)?),
        None => None,
    };
    let cfg = OptimizeConfig {
        restarts,
        seed: a.seed,
        optimizer: OptimizerConfig {
            method,
            max_evals: a.max_evals,
            ..Default::default()
        },
        zero_start: a.zero_start,
        jastrow_zero_start: a.jastrow_zero_start,
        epsilon: a.epsilon,
        warm_start: warm,
        exec: if a.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let result = vqe::optimize(&spec, &cfg)?;
    let state = vqe::final_state(&spec, &result.best_flat())?;
    let s2_value = match &s2 {
        Some(op) => Some(state.expectation(op)?),
        None => None,
    };
    let n_value = state.expectation(&fermion::build_number_operator(nq)?)?;

    writeln!(out, "best_energy = {:.12}", result.best_energy)?;
    writeln!(out, "hamiltonian_energy = {:.12}", result.best_hamiltonian_energy)?;
    if let Some(p) = result.best_penalty {
        writeln!(out, "penalty_expectation = {p:.6e}")?;
    }
    match s2_value {
        Some(v) => writeln!(out, "s2 = {v:.6e}")?,
        None => writeln!(out, "s2 = n/a")?,
    }
    writeln!(out, "n_electrons = {n_value:.6}")?;
    writeln!(
        out,
        "restarts = {} ok / {}",
        result.restart_energies.iter().flatten().count(),
        result.n_restarts
    )?;

    if let Some(path) = &a.out {
        let mut m = envelope("vqe", a)?;
        m.insert("seed".into(), json!(a.seed));
        m.insert("n_qubits".into(), json!(nq));
        m.insert("n_params".into(), json!(spec.n_params()));
        m.insert("result".into(), serde_json::to_value(&result)?);
        m.insert(
            "observables".into(),
            json!({"energy": result.best_hamiltonian_energy, "s2": s2_value, "n": n_value}),
        );
        m.insert("timing".into(), json!({"wall_seconds": started.elapsed().as_secs_f64()}));
        write_json_file(path, &Value::Object(m))?;
    }
    Ok(())
}

pub fn cmd_group(a: &GroupArgs, out: &mut dyn Write) -> Result<()> {
    let op = read_op(&a.op)?;
    let name = a.name.clone().unwrap_or_else(|| {
        a.op.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "operator".into())
    });
    let row = measurement::group_counts(&name, &a.mapping, &op);
    let hash = config_hash(a)?;
    let mut sink: Box<dyn Write + '_> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(&mut *out),
    };
    match a.format.as_str() {
        "csv" => {
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(["operator", "mapping", "n_terms", "n_qwc", "n_fc", "config_hash"])?;
            w.write_record([
                row.operator.clone(),
                row.mapping.clone(),
                row.n_terms.to_string(),
                row.n_qwc.to_string(),
                row.n_fc.to_string(),
                hash,
            ])?;
            w.flush()?;
        }
        "json" => {
            let simplified = op.simplify(DEFAULT_DROP_TOL);
            let groups = |g: Vec<measurement::MeasurementGroup>| -> Vec<Vec<String>> {
                g.iter().map(|g| g.labels()).collect()
            };
            let mut m = envelope("group", a)?;
            m.insert("rows".into(), json!([row]));
            m.insert("qwc_groups".into(), json!(groups(measurement::group_qwc(&simplified))));
            m.insert("fc_groups".into(), json!(groups(measurement::group_fc(&simplified))));
            serde_json::to_writer_pretty(&mut sink, &Value::Object(m))?;
            writeln!(sink)?;
        }
        other => return Err(Error::invalid(format!("unknown format {other:?}"))),
    }
    sink.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SampleRecord {
    rep: usize,
    seed: u64,
    estimate: f64,
    error: f64,
}

pub fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    let started = Instant::now();
    if a.s_tot == 0 {
        return Err(Error::invalid("--s-tot must be >= 1"));
    }
    if a.reps == 0 {
        return Err(Error::invalid("--reps must be >= 1"));
    }
    let strategy: Strategy = a.strategy.parse()?;
    let grouping: Grouping = a.grouping.parse()?;
    let weight_rule: GroupWeight = a.group_weight.parse()?;
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let op = read_op(&a.op)?;
    let state = read_state(&a.state)?;
    let num = PreparedObservable::new(&state, &op, grouping, weight_rule)?;

    let (exact, estimates, seeds, variance_model, starved_mass) = match &a.jj {
        None => {
            let study = measurement::repetition_study(&num, strategy, a.s_tot, a.reps, a.seed, exec)?;
            let plan = num.plan(strategy, a.s_tot, a.seed)?;
            let starved = num.estimate(&plan, a.seed)?.starved_mass;
            (study.exact, study.estimates, study.seeds, Some(study.variance_model), starved)
        }
        Some(jj_path) => {
            let jj = read_op(jj_path)?;
            let den = PreparedObservable::new(&state, &jj, grouping, weight_rule)?;
            if !(den.exact() > vqe::DENOM_TOL) {
                return Err(Error::DegenerateJastrow {
                    value: den.exact(),
                    tol: vqe::DENOM_TOL,
                });
            }
            let seeds: Vec<u64> = (0..a.reps).map(|i| measurement::repetition_seed(a.seed, i)).collect();
            let results = crate::par::map_slice(exec, &seeds, |&s| {
                measurement::ratio_estimate(&num, &den, strategy, a.s_tot, s)
            });
            let est: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
            (num.exact() / den.exact(), est, seeds, None, 0.0)
        }
    };
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let empirical_variance = if estimates.len() > 1 {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let records: Vec<SampleRecord> = estimates
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(rep, (e, s))| SampleRecord {
            rep,
            seed: *s,
            estimate: *e,
            error: e - exact,
        })
        .collect();

    writeln!(out, "exact = {exact:.12}")?;
    writeln!(out, "mean = {mean:.12}")?;
    writeln!(out, "empirical_variance = {empirical_variance:.6e}")?;
    match variance_model {
        Some(v) => writeln!(out, "variance_model = {v:.6e}")?,
        None => writeln!(out, "variance_model = n/a")?,
    }
    writeln!(out, "units = {}", num.n_units())?;

    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        for r in &records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.out {
        let mut m = envelope("sample", a)?;
        m.insert("seed".into(), json!(a.seed));
        m.insert("exact".into(), json!(exact));
        m.insert("mean".into(), json!(mean));
        m.insert("empirical_variance".into(), json!(empirical_variance));
        m.insert("variance_model".into(), json!(variance_model));
        m.insert("n_units".into(), json!(num.n_units()));
        m.insert("starved_mass_first_rep".into(), json!(starved_mass));
        m.insert("repetitions".into(), serde_json::to_value(&records)?);
        m.insert("timing".into(), json!({"wall_seconds": started.elapsed().as_secs_f64()}));
        write_json_file(path, &Value::Object(m))?;
    }
    Ok(())
}

/// Contents of an `estimate` scenario file; every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioFile {
    pub qubits: Vec<usize>,
    pub platforms: Vec<PlatformProfile>,
    pub assumptions: Assumptions,
    /// Replaces the built-in hydrogen-chain counts when present.
    pub counts: Option<Vec<CountSeries>>,
    /// Replaces the default method list when present.
    pub scenarios: Option<Vec<Scenario>>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            qubits: vec![4, 6, 8, 10, 12, 20, 25, 50, 100],
            platforms: vec![
                PlatformProfile::superconducting(),
                PlatformProfile::trapped_ion_neutral_atom(),
            ],
            assumptions: Assumptions::default(),
            counts: None,
            scenarios: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct EstimateRecord<'a> {
    scenario: &'a str,
    method: String,
    grouping: String,
    shot_frugal: bool,
    n_qubits: usize,
    platform: String,
    extrapolated: bool,
    circuits: f64,
    measurements: f64,
    gates: u64,
    t_prepare: f64,
    t_sample: f64,
    t_switch: f64,
    t_cloud: f64,
    total_seconds: f64,
    total_years: f64,
    shots_per_circuit: f64,
    shot_frugal_factor: f64,
    layers: String,
    batch_size: u64,
    sampling_rate: f64,
    switch_overhead: f64,
    network_roundtrip: f64,
    gate_time: Option<f64>,
    combined_shot_time: Option<f64>,
    config_hash: &'a str,
}

pub fn resolve_scenario(a: &EstimateArgs) -> Result<ScenarioFile> {
    let mut sc = match &a.scenario {
        Some(p) => serde_json::from_reader(BufReader::new(File::open(p)?))?,
        None => ScenarioFile::default(),
    };
    if let Some(q) = &a.qubits {
        sc.qubits = q.clone();
    }
    if let Some(s) = a.shots_per_circuit {
        sc.assumptions.shots_per_circuit = s;
    }
    if let Some(b) = a.batch_size {
        for p in &mut sc.platforms {
            p.batch_size = b;
        }
    }
    if sc.qubits.is_empty() || sc.qubits.iter().any(|&n| n < 2) {
        return Err(Error::invalid("qubit list must be non-empty with every entry >= 2"));
    }
    for p in &sc.platforms {
        p.validate()?;
    }
    Ok(sc)
}

pub fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let sc = resolve_scenario(a)?;
    let model = match &sc.counts {
        Some(c) => CountModel::new(c.clone())?,
        None => CountModel::hydrogen_chains(),
    };
    let scenarios = sc.scenarios.clone().unwrap_or_else(Scenario::standard);
    let rows = resource::scaling_report(&model, &sc.qubits, &scenarios, &sc.platforms, &sc.assumptions)?;
    let hash = config_hash(&sc)?;

    let mut sink: Box<dyn Write + '_> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(&mut *out),
    };
    {
        let mut w = csv::Writer::from_writer(&mut sink);
        for r in &rows {
            let p = sc
                .platforms
                .iter()
                .find(|p| p.name == r.platform)
                .expect("row platform comes from the scenario");
            w.serialize(record(r, p, &sc.assumptions, &hash))?;
        }
        w.flush()?;
    }
    sink.flush()?;
    drop(sink);

    if let Some(path) = &a.json {
        let fits: Vec<Value> = resource::Family::ALL
            .iter()
            .flat_map(|f| resource::CountGrouping::ALL.iter().map(move |g| (*f, *g)))
            .filter_map(|(f, g)| {
                model
                    .fit(f, g)
                    .map(|fit| json!({"family": f.to_string(), "grouping": g.to_string(), "a": fit.a, "p": fit.p, "residual": fit.residual}))
            })
            .collect();
        let mut m = envelope("estimate", &sc)?;
        m.insert("year_seconds".into(), json!(YEAR_SECONDS));
        m.insert("fits".into(), json!(fits));
        m.insert("rows".into(), serde_json::to_value(&rows)?);
        write_json_file(path, &Value::Object(m))?;
    }
    Ok(())
}

fn record<'a>(r: &'a ScalingRow, p: &PlatformProfile, a: &Assumptions, hash: &'a str) -> EstimateRecord<'a> {
    EstimateRecord {
        scenario: &r.scenario,
        method: r.method.to_string(),
        grouping: r.grouping.to_string(),
        shot_frugal: r.shot_frugal,
        n_qubits: r.n_qubits,
        platform: r.platform.to_string(),
        extrapolated: r.extrapolated,
        circuits: r.circuits,
        measurements: r.measurements,
        gates: r.gates,
        t_prepare: r.t_prepare,
        t_sample: r.t_sample,
        t_switch: r.t_switch,
        t_cloud: r.t_cloud,
        total_seconds: r.total_seconds,
        total_years: r.total_years,
        shots_per_circuit: a.shots_per_circuit,
        shot_frugal_factor: a.shot_frugal_factor,
        layers: a.layers.map_or("n_qubits".into(), |l| l.to_string()),
        batch_size: p.batch_size,
        sampling_rate: p.sampling_rate,
        switch_overhead: p.switch_overhead,
        network_roundtrip: p.network_roundtrip,
        gate_time: p.gate_time,
        combined_shot_time: p.combined_shot_time,
        config_hash: hash,
    }
}

pub fn cmd_correlation(a: &CorrelationArgs, out: &mut dyn Write) -> Result<()> {
    let f = vqe::correlation_fraction(a.e_las, a.e_method, a.e_ref)?;
    writeln!(out, "{:.2}%", 100.0 * f)?;
    Ok(())
}

pub fn cmd_spin(a: &SpinArgs, out: &mut dyn Write) -> Result<()> {
    let ordering: OrbitalOrdering = a.ordering.parse()?;
    let state = read_state(&a.state)?;
    let nq = state.n_qubits();
    if nq % 2 != 0 {
        return Err(Error::invalid("spin operators need an even qubit count"));
    }
    let s2 = fermion::build_s2_operator(nq / 2, ordering)?;
    let n = fermion::build_number_operator(nq)?;
    let sz = fermion::build_sz_operator(nq / 2, ordering)?;
    writeln!(out, "s2 = {:.12}", state.expectation(&s2)?)?;
    writeln!(out, "sz = {:.12}", state.expectation(&sz)?)?;
    writeln!(out, "n = {:.12}", state.expectation(&n)?)?;
    Ok(())
}
