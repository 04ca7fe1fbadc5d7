//! Subcommand pipelines: config → typed plan → computation → files.
//!
//! Every subcommand first turns its config into a plan, loading and parsing
//! any referenced files. [`validate_config`] is exactly that step, so it
//! reports a problem iff [`run`] would reject the config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value as Json};
use thermoml_core::activeinf::{expected_free_energy, fe_value_iteration, value_iteration, DiscreteMDP, GenerativeModel, ValueIterationReport};
use thermoml_core::anneal::{anneal, AnnealConfig, AnnealRow, CoolingSchedule, IsingLandscape};
use thermoml_core::bm::{bm_train, BoltzmannMachine, TrainConfig, TrainMethod};
use thermoml_core::boost::{boost3, boost_recursive, empirical_risk, threshold_dataset, NoisyThresholdLearner, WeightedDataset};
use thermoml_core::conv::{conv_fft, conv_naive, distribution_sum, smooth_signal};
use thermoml_core::digest::{brute_force_min_energy, double_digest_implied_fragments, DigestLandscape, DoubleDigestInstance};
use thermoml_core::ebm::{ebl_infer, gibbs_posterior, loss_hinge, loss_nll, loss_perceptron, EnergyTable};
use thermoml_core::info::{entropy_gibbs, entropy_shannon, ib_objective, joint_entropy, kl_divergence, mutual_information};
use thermoml_core::ising::{empirical_distribution, estimate_observables, metropolis_chain, partition_exact, Beta, ChainConfig, CouplingGraph};
use thermoml_core::marl::{run_ising_game, GameConfig, IsingGameEnv, LearningRate, NeighborGraph};
use thermoml_core::{DiscreteDistribution, JointDistribution, RngStream, MAX_ENUMERATION_SITES};

use crate::config::{Reader, RealsSource};
use crate::formats;
use crate::manifest::{self, config_to_json, sha256_hex, Manifest, Status};
use crate::{CliError, ConfigDocument, Diagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Subcommand {
    Entropy,
    Ising,
    Anneal,
    Digest,
    Ebm,
    Conv,
    Boost,
    Activeinf,
    Marl,
}

impl Subcommand {
    pub const ALL: [Subcommand; 9] = [
        Subcommand::Entropy,
        Subcommand::Ising,
        Subcommand::Anneal,
        Subcommand::Digest,
        Subcommand::Ebm,
        Subcommand::Conv,
        Subcommand::Boost,
        Subcommand::Activeinf,
        Subcommand::Marl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Entropy => "entropy",
            Subcommand::Ising => "ising",
            Subcommand::Anneal => "anneal",
            Subcommand::Digest => "digest",
            Subcommand::Ebm => "ebm",
            Subcommand::Conv => "conv",
            Subcommand::Boost => "boost",
            Subcommand::Activeinf => "activeinf",
            Subcommand::Marl => "marl",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// RNG stream used by this subcommand under the master seed.
    pub fn stream_id(self) -> u64 {
        Self::ALL.iter().position(|&s| s == self).expect("listed") as u64 + 1
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        const GRAPH: [&str; 5] = ["graph.kind", "graph.size", "graph.coupling", "graph.field", "graph.path"];
        match self {
            Subcommand::Entropy => &[
                "distribution.probs",
                "entropy.base",
                "entropy.k_b",
                "kl.reference",
                "joint.table",
                "ib.xt",
                "ib.ty",
                "ib.beta",
            ],
            Subcommand::Ising => &[
                GRAPH[0], GRAPH[1], GRAPH[2], GRAPH[3], GRAPH[4],
                "chain.beta",
                "chain.steps",
                "chain.burn_in",
                "chain.thin",
            ],
            Subcommand::Anneal => &[
                GRAPH[0], GRAPH[1], GRAPH[2], GRAPH[3], GRAPH[4],
                "schedule.kind",
                "schedule.t0",
                "schedule.parameter",
                "anneal.sweeps",
                "anneal.proposals_per_sweep",
            ],
            Subcommand::Digest => &[
                "digest.path",
                "digest.a",
                "digest.b",
                "digest.c",
                "digest.verify",
                "schedule.kind",
                "schedule.t0",
                "schedule.parameter",
                "anneal.sweeps",
                "anneal.proposals_per_sweep",
            ],
            Subcommand::Ebm => &[
                "ebm.task",
                "ebm.energies",
                "ebm.correct",
                "ebm.incorrect",
                "ebm.beta",
                "ebm.margin",
                "bm.machine",
                "bm.hidden",
                "bm.init_scale",
                "bm.data",
                "bm.method",
                "bm.k",
                "bm.learning_rate",
                "bm.epochs",
            ],
            Subcommand::Conv => &["conv.a", "conv.b", "conv.mode", "conv.method"],
            Subcommand::Boost => &["boost.data", "boost.n", "boost.threshold", "boost.gamma", "boost.target_epsilon"],
            Subcommand::Activeinf => &[
                "activeinf.mode",
                "mdp.path",
                "model.path",
                "solver.tolerance",
                "solver.gamma",
                "efe.policy",
            ],
            Subcommand::Marl => &[
                "lattice.side",
                "game.coupling",
                "game.episodes",
                "game.steps_per_episode",
                "game.alpha",
                "game.gamma",
                "game.bins",
                "schedule.t_start",
                "schedule.t_end",
            ],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoding of trace tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub subcommand: Subcommand,
    pub config: ConfigDocument,
    pub seed: u64,
    /// Output directory exactly as given; recorded verbatim in the manifest.
    pub out: PathBuf,
    pub format: Format,
}

impl RunOptions {
    /// Options that reproduce the run a manifest describes, writing to `out`.
    pub fn from_manifest(m: &Manifest, out: PathBuf) -> Result<Self, CliError> {
        Ok(RunOptions {
            subcommand: Subcommand::from_name(&m.subcommand)
                .ok_or_else(|| CliError::Validation(format!("manifest names unknown subcommand {:?}", m.subcommand)))?,
            config: m.config_document()?,
            seed: m.seed,
            out,
            format: Format::from_name(&m.format).ok_or_else(|| CliError::Validation(format!("manifest format {:?}", m.format)))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
enum Cell {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(r) => write!(f, "{}", r + 0.0),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

struct Table {
    name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn encode(&self, format: Format) -> (String, Vec<u8>) {
        match format {
            Format::Csv => {
                let rows = self.rows.iter().map(|r| r.iter().map(Cell::to_string).collect::<Vec<_>>());
                (format!("{}.csv", self.name), formats::csv(self.header, rows).into_bytes())
            }
            Format::Json => {
                let doc = json!({ "columns": self.header, "rows": self.rows });
                (format!("{}.json", self.name), pretty(&doc))
            }
        }
    }
}

fn pretty(v: &Json) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serialises");
    s.push('\n');
    s.into_bytes()
}

struct Outputs {
    result: Json,
    documents: Vec<(&'static str, Json)>,
    tables: Vec<Table>,
}

/// Input files read while planning, with their checksums.
#[derive(Default)]
struct Inputs(BTreeMap<String, String>);

impl Inputs {
    fn read(&mut self, r: &mut Reader, key: &str) -> Option<String> {
        let raw = r.string(key, None)?;
        let path = r.doc().resolve(&raw);
        match std::fs::read(&path) {
            Ok(bytes) => {
                self.0.insert(raw, sha256_hex(&bytes));
                match String::from_utf8(bytes) {
                    Ok(s) => Some(s),
                    Err(_) => {
                        r.error(key, format!("{} is not UTF-8 text", path.display()));
                        None
                    }
                }
            }
            Err(e) => {
                r.error(key, format!("cannot read {}: {e}", path.display()));
                None
            }
        }
    }

    fn reals(&mut self, r: &mut Reader, key: &str) -> Option<Vec<f64>> {
        match r.reals_or_path(key)? {
            RealsSource::Inline(v) if v.is_empty() => {
                r.error(key, "needs at least one value");
                None
            }
            RealsSource::Inline(v) => Some(v),
            RealsSource::Path(_) => {
                let text = self.read(r, key)?;
                parse_into(r, key, formats::parse_coefficients(&text))
            }
        }
    }
}

fn parse_into<T>(r: &mut Reader, key: &str, res: Result<T, CliError>) -> Option<T> {
    res.map_err(|e| r.error(key, e.to_string())).ok()
}

fn core_into<T>(r: &mut Reader, key: &str, res: thermoml_core::Result<T>) -> Option<T> {
    res.map_err(|e| r.error(key, e.to_string())).ok()
}

enum Plan {
    Entropy(EntropyPlan),
    Ising(IsingPlan),
    Anneal(AnnealPlan),
    Digest(DigestPlan),
    EbmLosses(LossPlan),
    EbmTrain(TrainPlan),
    Conv(ConvPlan),
    Boost(BoostPlan),
    Value(DiscreteMDP, f64),
    FreeEnergy(FreeEnergyPlan),
    Marl(IsingGameEnv, GameConfig),
}

pub fn validate_config(subcommand: Subcommand, config: &ConfigDocument) -> Vec<Diagnostic> {
    match prepare(subcommand, config) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

fn prepare(sub: Subcommand, doc: &ConfigDocument) -> Result<(Plan, Inputs), Vec<Diagnostic>> {
    let mut r = Reader::new(doc, sub.allowed_keys());
    let mut inputs = Inputs::default();
    let plan = match sub {
        Subcommand::Entropy => prepare_entropy(&mut r).map(Plan::Entropy),
        Subcommand::Ising => prepare_ising(&mut r, &mut inputs).map(Plan::Ising),
        Subcommand::Anneal => prepare_anneal(&mut r, &mut inputs).map(Plan::Anneal),
        Subcommand::Digest => prepare_digest(&mut r, &mut inputs).map(Plan::Digest),
        Subcommand::Ebm => prepare_ebm(&mut r, &mut inputs),
        Subcommand::Conv => prepare_conv(&mut r, &mut inputs).map(Plan::Conv),
        Subcommand::Boost => prepare_boost(&mut r, &mut inputs).map(Plan::Boost),
        Subcommand::Activeinf => prepare_activeinf(&mut r, &mut inputs),
        Subcommand::Marl => prepare_marl(&mut r),
    };
    match plan {
        Some(p) if r.ok() => Ok((p, inputs)),
        _ => {
            let d = r.finish();
            debug_assert!(!d.is_empty(), "plan failed without a diagnostic");
            Err(d)
        }
    }
}

/// Runs a subcommand end to end. The manifest is written before any
/// computation and rewritten with the outcome and artifact checksums.
pub fn run(opts: &RunOptions) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", opts.out.display())))?;
    let mut manifest = Manifest {
        schema_version: manifest::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: opts.subcommand.name().to_string(),
        seed: opts.seed,
        stream_id: opts.subcommand.stream_id(),
        format: opts.format.name().to_string(),
        output_dir: opts.out.display().to_string(),
        base_dir: opts.config.base_dir().display().to_string(),
        config: config_to_json(&opts.config),
        inputs: BTreeMap::new(),
        status: Status::Running,
        exit_code: None,
        error: None,
        artifacts: BTreeMap::new(),
    };
    manifest.write(&opts.out)?;
    let outcome = execute_and_write(opts, &mut manifest);
    match &outcome {
        Ok(()) => {
            manifest.status = Status::Complete;
            manifest.exit_code = Some(crate::EXIT_OK);
        }
        Err(e) => {
            manifest.status = Status::Failed;
            manifest.exit_code = Some(e.exit_code());
            manifest.error = Some(e.to_string());
        }
    }
    manifest.write(&opts.out)?;
    outcome.map(|()| manifest)
}

fn execute_and_write(opts: &RunOptions, manifest: &mut Manifest) -> Result<(), CliError> {
    let (plan, inputs) = prepare(opts.subcommand, &opts.config).map_err(CliError::Config)?;
    manifest.inputs = inputs.0;
    let mut rng = RngStream::new(opts.seed, opts.subcommand.stream_id());
    let mut out = execute(plan, &mut rng)?;
    if let Json::Object(m) = &mut out.result {
        m.insert("schema_version".into(), json!(manifest::SCHEMA_VERSION));
        m.insert("subcommand".into(), json!(opts.subcommand.name()));
    }
    let mut files: Vec<(String, Vec<u8>)> = vec![("result.json".into(), pretty(&out.result))];
    for (name, doc) in &out.documents {
        files.push((format!("{name}.json"), pretty(doc)));
    }
    for t in &out.tables {
        files.push(t.encode(opts.format));
    }
    for (name, bytes) in files {
        std::fs::write(opts.out.join(&name), &bytes)?;
        manifest.artifacts.insert(name, sha256_hex(&bytes));
    }
    Ok(())
}

fn execute(plan: Plan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    match plan {
        Plan::Entropy(p) => exec_entropy(p),
        Plan::Ising(p) => exec_ising(p, rng),
        Plan::Anneal(p) => exec_anneal(p, rng),
        Plan::Digest(p) => exec_digest(p, rng),
        Plan::EbmLosses(p) => exec_losses(p),
        Plan::EbmTrain(p) => exec_train(p, rng),
        Plan::Conv(p) => exec_conv(p),
        Plan::Boost(p) => exec_boost(p, rng),
        Plan::Value(mdp, tol) => exec_value(&mdp, tol),
        Plan::FreeEnergy(p) => exec_free_energy(p),
        Plan::Marl(env, cfg) => exec_marl(&env, &cfg, rng),
    }
}

struct EntropyPlan {
    dist: DiscreteDistribution,
    base: f64,
    k_b: f64,
    reference: Option<DiscreteDistribution>,
    joint: Option<JointDistribution>,
    ib: Option<(JointDistribution, JointDistribution, f64)>,
}

fn joint_from(r: &mut Reader, key: &str) -> Option<JointDistribution> {
    let rows = r.real_matrix(key, true)?;
    core_into(r, key, JointDistribution::from_rows(&rows))
}

fn prepare_entropy(r: &mut Reader) -> Option<EntropyPlan> {
    let probs = r.real_list("distribution.probs", true);
    let base = r.real("entropy.base", Some(2.0), |b| b > 1.0, "must be > 1");
    let k_b = r.real("entropy.k_b", Some(1.0), |k| k > 0.0, "must be > 0");
    let dist = probs.and_then(|p| core_into(r, "distribution.probs", DiscreteDistribution::new(p)));
    let reference = match r.real_list("kl.reference", false) {
        Some(p) => Some(core_into(r, "kl.reference", DiscreteDistribution::new(p))?),
        None => None,
    };
    let joint = if r.has("joint.table") { Some(joint_from(r, "joint.table")?) } else { None };
    let ib_keys = ["ib.xt", "ib.ty", "ib.beta"];
    let ib = if ib_keys.iter().any(|k| r.has(k)) {
        let xt = joint_from(r, "ib.xt");
        let ty = joint_from(r, "ib.ty");
        let beta = r.real("ib.beta", None, |b| b >= 0.0, "must be >= 0");
        Some((xt?, ty?, beta?))
    } else {
        None
    };
    if let (Some(d), Some(q)) = (&dist, &reference) {
        if d.len() != q.len() {
            r.error("kl.reference", format!("has {} entries, distribution.probs has {}", q.len(), d.len()));
        }
    }
    Some(EntropyPlan {
        dist: dist?,
        base: base?,
        k_b: k_b?,
        reference,
        joint,
        ib,
    })
}

fn exec_entropy(p: EntropyPlan) -> Result<Outputs, CliError> {
    let mut result = json!({
        "entropy_shannon": entropy_shannon(&p.dist, p.base)?,
        "entropy_gibbs": entropy_gibbs(&p.dist, p.k_b)?,
        "log_base": p.base,
        "k_b": p.k_b,
    });
    if let Some(q) = &p.reference {
        result["kl_divergence"] = json!(kl_divergence(&p.dist, q)?);
    }
    if let Some(j) = &p.joint {
        result["mutual_information"] = json!(mutual_information(j));
        result["joint_entropy"] = json!(joint_entropy(j));
    }
    if let Some((xt, ty, beta)) = &p.ib {
        result["ib_objective"] = json!(ib_objective(xt, ty, *beta)?);
    }
    let ln_base = p.base.ln();
    let rows = p
        .dist
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let term = if q > 0.0 { -q * q.ln() / ln_base } else { 0.0 };
            vec![Cell::Int(i as i64), Cell::Real(q), Cell::Real(term)]
        })
        .collect();
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![Table {
            name: "terms",
            header: &["index", "probability", "contribution"],
            rows,
        }],
    })
}

fn prepare_graph(r: &mut Reader, inputs: &mut Inputs) -> Option<CouplingGraph> {
    let kind = r.choice("graph.kind", None, &["chain", "complete", "torus", "file"]);
    let coupling = r.any_real("graph.coupling", Some(1.0));
    let field = r.any_real("graph.field", Some(0.0));
    match kind?.as_str() {
        "file" => {
            let text = inputs.read(r, "graph.path")?;
            parse_into(r, "graph.path", formats::parse_graph(&text))
        }
        kind => {
            let size = r.count("graph.size", None, 1)? as usize;
            let (j, h) = (coupling?, field?);
            let g = match kind {
                "chain" => CouplingGraph::chain(size, j, h),
                "complete" => CouplingGraph::complete(size, j, h),
                _ => CouplingGraph::torus(size, j, h),
            };
            core_into(r, "graph.size", g)
        }
    }
}

struct IsingPlan {
    graph: CouplingGraph,
    beta: Beta,
    chain: ChainConfig,
}

fn prepare_ising(r: &mut Reader, inputs: &mut Inputs) -> Option<IsingPlan> {
    let graph = prepare_graph(r, inputs);
    let beta = r.real("chain.beta", None, |b| b >= 0.0, "must be >= 0");
    let steps = r.count("chain.steps", None, 1);
    let burn_in = r.count("chain.burn_in", Some(steps.unwrap_or(0) / 10), 0);
    let thin = r.count("chain.thin", Some(1), 1);
    let (steps, burn_in) = (steps?, burn_in?);
    if burn_in >= steps {
        r.error("chain.burn_in", format!("must be below chain.steps ({steps}), got {burn_in}"));
        return None;
    }
    let beta = core_into(r, "chain.beta", Beta::new(beta?))?;
    Some(IsingPlan {
        graph: graph?,
        beta,
        chain: ChainConfig {
            steps,
            burn_in,
            thin: thin?,
        },
    })
}

fn exec_ising(p: IsingPlan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let run = metropolis_chain(&p.graph, p.beta, p.chain, rng, None)?;
    let obs = estimate_observables(&run.samples, &p.graph)?;
    let mut result = json!({
        "n_sites": p.graph.n_sites(),
        "beta": p.beta.value(),
        "steps": p.chain.steps,
        "burn_in": p.chain.burn_in,
        "thin": p.chain.thin,
        "samples": run.samples.len(),
        "acceptance_rate": run.trace.acceptance_rate(),
        "mean_energy": obs.mean_energy,
        "energy_std_error": obs.energy_std_error,
        "mean_magnetization": obs.mean_magnetization,
        "magnetization_std_error": obs.magnetization_std_error,
        "final_state": run.final_state.spins(),
    });
    if p.graph.n_sites() <= MAX_ENUMERATION_SITES {
        let (z, exact) = partition_exact(&p.graph, p.beta)?;
        let empirical = empirical_distribution(&run.samples, p.graph.n_sites())?;
        result["partition_function"] = json!(z);
        result["total_variation_to_exact"] = json!(empirical.total_variation(&exact)?);
    }
    let rows = run
        .trace
        .rows
        .iter()
        .map(|t| vec![Cell::Int(t.step as i64), Cell::Real(t.energy), Cell::Bool(t.accepted), Cell::Real(t.magnetization)])
        .collect();
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![Table {
            name: "trace",
            header: &["step", "energy", "accepted", "magnetization"],
            rows,
        }],
    })
}

fn prepare_schedule(r: &mut Reader, t0: Option<f64>) -> Option<CoolingSchedule> {
    let kind = r.choice("schedule.kind", Some("geometric"), &["geometric", "linear", "logarithmic", "constant"]);
    let t0 = r.real("schedule.t0", t0, |t| t > 0.0, "must be > 0");
    let param = r.any_real("schedule.parameter", Some(0.995));
    let s = CoolingSchedule::from_kind(&kind?, t0?, param?);
    core_into(r, "schedule.parameter", s)
}

fn prepare_anneal_config(r: &mut Reader, sweeps: Option<u64>, per_sweep: Option<u64>) -> Option<AnnealConfig> {
    let sweeps = r.count("anneal.sweeps", sweeps, 1);
    let per = r.count("anneal.proposals_per_sweep", per_sweep, 1);
    Some(AnnealConfig {
        sweeps: sweeps?,
        proposals_per_sweep: per?,
    })
}

fn anneal_table(trace: &[AnnealRow]) -> Table {
    Table {
        name: "trace",
        header: &["sweep", "temperature", "current_energy", "best_energy", "acceptance_rate"],
        rows: trace
            .iter()
            .map(|t| {
                vec![
                    Cell::Int(t.sweep as i64),
                    Cell::Real(t.temperature),
                    Cell::Real(t.current_energy),
                    Cell::Real(t.best_energy),
                    Cell::Real(t.acceptance_rate),
                ]
            })
            .collect(),
    }
}

struct AnnealPlan {
    graph: CouplingGraph,
    schedule: CoolingSchedule,
    config: AnnealConfig,
}

fn prepare_anneal(r: &mut Reader, inputs: &mut Inputs) -> Option<AnnealPlan> {
    let graph = prepare_graph(r, inputs);
    let schedule = prepare_schedule(r, None);
    let per_sweep = graph.as_ref().map(|g| g.n_sites().max(1) as u64);
    let config = prepare_anneal_config(r, None, per_sweep.or(Some(1)));
    Some(AnnealPlan {
        graph: graph?,
        schedule: schedule?,
        config: config?,
    })
}

fn exec_anneal(p: AnnealPlan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let res = anneal(&IsingLandscape { graph: &p.graph }, &p.schedule, p.config, rng)?;
    let result = json!({
        "best_energy": res.best_energy,
        "best_state": res.best_state.spins(),
        "final_energy": res.trace.last().map(|t| t.current_energy),
        "sweeps": p.config.sweeps,
        "proposals_per_sweep": p.config.proposals_per_sweep,
    });
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![anneal_table(&res.trace)],
    })
}

struct DigestPlan {
    instance: DoubleDigestInstance,
    schedule: CoolingSchedule,
    config: AnnealConfig,
    verify: bool,
}

fn prepare_digest(r: &mut Reader, inputs: &mut Inputs) -> Option<DigestPlan> {
    let inline = ["digest.a", "digest.b", "digest.c"];
    let instance = if r.has("digest.path") {
        if inline.iter().any(|k| r.has(k)) {
            r.error("digest.path", "give either digest.path or digest.a/b/c, not both");
            return None;
        }
        let text = inputs.read(r, "digest.path")?;
        parse_into(r, "digest.path", formats::parse_digest(&text))
    } else if !inline.iter().any(|k| r.has(k)) {
        r.error("digest.path", "missing required key (or give digest.a, digest.b and digest.c)");
        None
    } else {
        let lists: Vec<Option<Vec<u64>>> = inline
            .iter()
            .map(|k| r.int_list(k, true, 1).map(|v| v.into_iter().map(|x| x as u64).collect()))
            .collect();
        match (&lists[0], &lists[1], &lists[2]) {
            (Some(a), Some(b), Some(c)) => core_into(r, "digest.c", DoubleDigestInstance::new(a.clone(), b.clone(), c.clone())),
            _ => None,
        }
    };
    let schedule = prepare_schedule(r, Some(5.0));
    let config = prepare_anneal_config(r, Some(1000), Some(100));
    let verify = r.boolean("digest.verify", false);
    Some(DigestPlan {
        instance: instance?,
        schedule: schedule?,
        config: config?,
        verify: verify?,
    })
}

fn exec_digest(p: DigestPlan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let res = anneal(&DigestLandscape { instance: &p.instance }, &p.schedule, p.config, rng)?;
    let best = &res.best_state;
    let mut result = json!({
        "best_energy": res.best_energy,
        "sigma": best.sigma,
        "mu": best.mu,
        "a_order": best.sigma.iter().map(|&i| p.instance.a()[i]).collect::<Vec<_>>(),
        "b_order": best.mu.iter().map(|&i| p.instance.b()[i]).collect::<Vec<_>>(),
        "implied_fragments": double_digest_implied_fragments(best, &p.instance)?,
        "total_length": p.instance.total_length(),
    });
    if p.verify {
        let (min, _) = brute_force_min_energy(&p.instance, true);
        result["brute_force_min_energy"] = json!(min);
    }
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![anneal_table(&res.trace)],
    })
}

struct LossPlan {
    energies: EnergyTable,
    correct: usize,
    incorrect: Option<usize>,
    beta: f64,
    margin: f64,
}

struct TrainPlan {
    machine: Option<BoltzmannMachine>,
    hidden: usize,
    init_scale: f64,
    data: Vec<Vec<u8>>,
    config: TrainConfig,
}

fn prepare_ebm(r: &mut Reader, inputs: &mut Inputs) -> Option<Plan> {
    match r.choice("ebm.task", None, &["losses", "train"])?.as_str() {
        "losses" => {
            let energies = r
                .real_list("ebm.energies", true)
                .and_then(|e| core_into(r, "ebm.energies", EnergyTable::new(e)));
            let n = energies.as_ref().map_or(usize::MAX, EnergyTable::len);
            let label = |r: &mut Reader, key: &str, required: bool| -> Option<Option<usize>> {
                if !required && !r.has(key) {
                    return Some(None);
                }
                let v = r.count(key, None, 0)? as usize;
                if v >= n {
                    r.error(key, format!("label {v} outside 0..{n}"));
                    return None;
                }
                Some(Some(v))
            };
            let correct = label(r, "ebm.correct", true);
            let incorrect = label(r, "ebm.incorrect", false);
            let beta = r.real("ebm.beta", Some(1.0), |b| b > 0.0, "must be > 0");
            let margin = r.real("ebm.margin", Some(1.0), |m| m >= 0.0, "must be >= 0");
            let (correct, incorrect) = (correct??, incorrect?);
            if incorrect == Some(correct) {
                r.error("ebm.incorrect", "must differ from ebm.correct");
                return None;
            }
            Some(Plan::EbmLosses(LossPlan {
                energies: energies?,
                correct,
                incorrect,
                beta: beta?,
                margin: margin?,
            }))
        }
        _ => {
            let data = inputs.read(r, "bm.data").and_then(|t| parse_into(r, "bm.data", formats::parse_training_data(&t)));
            let machine = if r.has("bm.machine") {
                let text = inputs.read(r, "bm.machine")?;
                Some(parse_into(r, "bm.machine", formats::parse_machine(&text))?)
            } else {
                None
            };
            let hidden = match &machine {
                Some(m) => m.n_hidden(),
                None => r.count("bm.hidden", None, 1)? as usize,
            };
            let init_scale = r.real("bm.init_scale", Some(0.1), |s| s >= 0.0, "must be >= 0");
            let method = r.choice("bm.method", Some("cd"), &["exact", "cd"]);
            let k = r.count("bm.k", Some(1), 1);
            let lr = r.real("bm.learning_rate", Some(0.1), |l| l >= 0.0, "must be >= 0");
            let epochs = r.count("bm.epochs", Some(100), 0);
            let data = data?;
            let visible = data[0].len();
            if let Some(m) = &machine {
                if m.n_visible() != visible {
                    r.error("bm.machine", format!("has {} visible units, data has {visible}", m.n_visible()));
                }
            }
            let method = match method?.as_str() {
                "exact" => {
                    if visible + hidden > MAX_ENUMERATION_SITES {
                        r.error("bm.method", format!("exact needs at most {MAX_ENUMERATION_SITES} units, machine has {}", visible + hidden));
                    }
                    TrainMethod::ExactGradient
                }
                _ => TrainMethod::ContrastiveDivergence { k: k? as usize },
            };
            Some(Plan::EbmTrain(TrainPlan {
                machine,
                hidden,
                init_scale: init_scale?,
                data,
                config: TrainConfig {
                    method,
                    learning_rate: lr?,
                    epochs: epochs? as usize,
                },
            }))
        }
    }
}

fn exec_losses(p: LossPlan) -> Result<Outputs, CliError> {
    let posterior = gibbs_posterior(&p.energies, p.beta)?;
    let e = p.energies.energies();
    let incorrect = p.incorrect.or_else(|| {
        (0..e.len())
            .filter(|&y| y != p.correct)
            .min_by(|&a, &b| e[a].total_cmp(&e[b]))
    });
    let hinge = match incorrect {
        Some(y) => Some(loss_hinge(e[p.correct], e[y], p.margin)?),
        None => None,
    };
    let result = json!({
        "prediction": ebl_infer(&p.energies),
        "posterior": posterior.distribution.probs(),
        "log_partition": posterior.log_partition,
        "loss_perceptron": loss_perceptron(&p.energies, p.correct)?,
        "loss_hinge": hinge,
        "hinge_incorrect_label": incorrect,
        "loss_nll": loss_nll(&p.energies, p.correct, p.beta)?,
        "beta": p.beta,
        "margin": p.margin,
    });
    let rows = e
        .iter()
        .zip(posterior.distribution.probs())
        .enumerate()
        .map(|(y, (en, q))| vec![Cell::Int(y as i64), Cell::Real(*en), Cell::Real(*q)])
        .collect();
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![Table {
            name: "labels",
            header: &["label", "energy", "posterior"],
            rows,
        }],
    })
}

fn exec_train(p: TrainPlan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let visible = p.data[0].len();
    let start = match p.machine {
        Some(m) => m,
        None => BoltzmannMachine::random(visible, p.hidden, p.init_scale, rng),
    };
    let initial_nll = start.negative_log_likelihood(&p.data).ok();
    let out = bm_train(&start, &p.data, p.config, rng)?;
    let method = match p.config.method {
        TrainMethod::ExactGradient => "exact".to_string(),
        TrainMethod::ContrastiveDivergence { k } => format!("cd-{k}"),
    };
    let result = json!({
        "method": method,
        "epochs": p.config.epochs,
        "learning_rate": p.config.learning_rate,
        "n_visible": visible,
        "n_hidden": out.machine.n_hidden(),
        "training_vectors": p.data.len(),
        "initial_nll": initial_nll,
        "final_nll": out.loss_curve.last(),
    });
    let rows = out
        .loss_curve
        .iter()
        .enumerate()
        .map(|(i, l)| vec![Cell::Int(i as i64 + 1), Cell::Real(*l)])
        .collect();
    Ok(Outputs {
        result,
        documents: vec![("machine", serde_json::to_value(formats::machine_file(&out.machine)).expect("serialises"))],
        tables: vec![Table {
            name: "trace",
            header: &["epoch", "nll"],
            rows,
        }],
    })
}

struct ConvPlan {
    a: Vec<f64>,
    b: Vec<f64>,
    mode: String,
    method: String,
}

fn prepare_conv(r: &mut Reader, inputs: &mut Inputs) -> Option<ConvPlan> {
    let a = inputs.reals(r, "conv.a");
    let b = inputs.reals(r, "conv.b");
    let mode = r.choice("conv.mode", Some("coeffs"), &["coeffs", "distribution", "smooth"])?;
    let method = r.choice("conv.method", Some("fft"), &["fft", "naive"])?;
    let (a, b) = (a?, b?);
    if mode == "distribution" {
        core_into(r, "conv.a", DiscreteDistribution::new(a.clone()))?;
        core_into(r, "conv.b", DiscreteDistribution::new(b.clone()))?;
    }
    Some(ConvPlan { a, b, mode, method })
}

fn exec_conv(p: ConvPlan) -> Result<Outputs, CliError> {
    let values = match p.mode.as_str() {
        "distribution" => distribution_sum(&DiscreteDistribution::new(p.a)?, &DiscreteDistribution::new(p.b)?)?.into_probs(),
        "smooth" => smooth_signal(&p.a, &p.b)?,
        _ if p.method == "naive" => conv_naive(&p.a, &p.b)?,
        _ => conv_fft(&p.a, &p.b)?,
    };
    let result = json!({
        "mode": p.mode,
        "method": if p.mode == "coeffs" { Some(&p.method) } else { None },
        "length": values.len(),
        "values": values,
    });
    let rows = values.iter().enumerate().map(|(i, v)| vec![Cell::Int(i as i64), Cell::Real(*v)]).collect();
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![Table {
            name: "values",
            header: &["index", "value"],
            rows,
        }],
    })
}

enum BoostData {
    File(WeightedDataset),
    Synthetic(usize),
}

struct BoostPlan {
    data: BoostData,
    threshold: f64,
    gamma: f64,
    target_epsilon: Option<f64>,
}

fn prepare_boost(r: &mut Reader, inputs: &mut Inputs) -> Option<BoostPlan> {
    let data = if r.has("boost.data") {
        if r.has("boost.n") {
            r.error("boost.n", "cannot be combined with boost.data");
        }
        let text = inputs.read(r, "boost.data")?;
        parse_into(r, "boost.data", formats::parse_dataset(&text)).map(BoostData::File)
    } else {
        r.count("boost.n", Some(10_000), 1).map(|n| BoostData::Synthetic(n as usize))
    };
    let threshold = r.any_real("boost.threshold", Some(0.5));
    let gamma = r.real("boost.gamma", None, |g| g > 0.0 && g <= 0.5, "must be in (0, 1/2]");
    let target_epsilon = if r.has("boost.target_epsilon") {
        Some(r.real("boost.target_epsilon", None, |e| e > 0.0 && e < 0.5, "must be in (0, 1/2)")?)
    } else {
        None
    };
    Some(BoostPlan {
        data: data?,
        threshold: threshold?,
        gamma: gamma?,
        target_epsilon,
    })
}

fn exec_boost(p: BoostPlan, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let dataset = match p.data {
        BoostData::File(d) => d,
        BoostData::Synthetic(n) => threshold_dataset(n, p.threshold, rng)?,
    };
    let weak = NoisyThresholdLearner::new(p.threshold, p.gamma)?;
    let (_, diag) = boost3(&weak, &dataset, rng)?;
    let diagnostics = json!({
        "h1_err": diag.h1_err,
        "h2_err": diag.h2_err,
        "h3_err": diag.h3_err,
        "final_err": diag.final_err,
        "bound": diag.bound,
    });
    let mut result = json!({
        "items": dataset.len(),
        "gamma": p.gamma,
        "threshold": p.threshold,
        "final_err": diag.final_err,
        "bound": diag.bound,
    });
    if let Some(eps) = p.target_epsilon {
        let (h, depth) = boost_recursive(&weak, &dataset, eps, rng)?;
        result["recursive"] = json!({
            "target_epsilon": eps,
            "depth": depth,
            "error": empirical_risk(&h, &dataset),
        });
    }
    let mut rows = vec![vec![Cell::Int(1), Cell::Real(diag.h1_err)]];
    for (i, e) in [(2, diag.h2_err), (3, diag.h3_err)] {
        if let Some(e) = e {
            rows.push(vec![Cell::Int(i), Cell::Real(e)]);
        }
    }
    rows.push(vec![Cell::Int(0), Cell::Real(diag.final_err)]);
    Ok(Outputs {
        result,
        documents: vec![("diagnostics", diagnostics)],
        tables: vec![Table {
            name: "rounds",
            header: &["hypothesis", "weighted_error"],
            rows,
        }],
    })
}

struct FreeEnergyPlan {
    model: GenerativeModel,
    gamma: f64,
    tolerance: f64,
    policy: Option<Vec<usize>>,
}

fn prepare_activeinf(r: &mut Reader, inputs: &mut Inputs) -> Option<Plan> {
    let mode = r.choice("activeinf.mode", Some("value_iteration"), &["value_iteration", "free_energy"]);
    let tolerance = r.real("solver.tolerance", Some(1e-10), |t| t > 0.0, "must be > 0");
    match mode?.as_str() {
        "value_iteration" => {
            for k in ["model.path", "solver.gamma", "efe.policy"] {
                if r.has(k) {
                    r.error(k, "only used with activeinf.mode = \"free_energy\"");
                }
            }
            let text = inputs.read(r, "mdp.path")?;
            let mdp = parse_into(r, "mdp.path", formats::parse_mdp(&text))?;
            Some(Plan::Value(mdp, tolerance?))
        }
        _ => {
            if r.has("mdp.path") {
                r.error("mdp.path", "only used with activeinf.mode = \"value_iteration\"");
            }
            let model = inputs
                .read(r, "model.path")
                .and_then(|t| parse_into(r, "model.path", formats::parse_model(&t)));
            let gamma = r.real("solver.gamma", None, |g| (0.0..1.0).contains(&g), "must be in [0, 1)");
            let policy = if r.has("efe.policy") {
                let p = r.int_list("efe.policy", true, 0)?;
                let n_actions = model.as_ref()?.n_actions();
                if let Some(a) = p.iter().find(|&&a| a as usize >= n_actions) {
                    r.error("efe.policy", format!("action {a} outside 0..{n_actions}"));
                    return None;
                }
                Some(p.into_iter().map(|a| a as usize).collect())
            } else {
                None
            };
            Some(Plan::FreeEnergy(FreeEnergyPlan {
                model: model?,
                gamma: gamma?,
                tolerance: tolerance?,
                policy,
            }))
        }
    }
}

fn solution_outputs(rep: ValueIterationReport, mut result: Json) -> Outputs {
    let solution = json!({
        "V": rep.values,
        "policy": rep.policy,
        "iterations": rep.iterations,
        "residual": rep.residual,
    });
    result["iterations"] = json!(rep.iterations);
    result["residual"] = json!(rep.residual);
    let rows = rep
        .diffs
        .iter()
        .enumerate()
        .map(|(i, d)| vec![Cell::Int(i as i64 + 1), Cell::Real(*d)])
        .collect();
    Outputs {
        result,
        documents: vec![("solution", solution)],
        tables: vec![Table {
            name: "residuals",
            header: &["iteration", "sup_norm_change"],
            rows,
        }],
    }
}

fn exec_value(mdp: &DiscreteMDP, tolerance: f64) -> Result<Outputs, CliError> {
    let rep = value_iteration(mdp, tolerance)?;
    let result = json!({
        "mode": "value_iteration",
        "gamma": mdp.gamma(),
        "tolerance": tolerance,
        "V": rep.values,
        "policy": rep.policy,
    });
    Ok(solution_outputs(rep, result))
}

fn exec_free_energy(p: FreeEnergyPlan) -> Result<Outputs, CliError> {
    let rep = fe_value_iteration(&p.model, p.gamma, p.tolerance)?;
    let mut result = json!({
        "mode": "free_energy",
        "gamma": p.gamma,
        "tolerance": p.tolerance,
        "V": rep.values,
        "policy": rep.policy,
        "step_costs": p.model.cost_table(),
    });
    if let Some(policy) = &p.policy {
        result["expected_free_energy"] = json!(expected_free_energy(policy, &p.model, p.model.prior())?);
    }
    Ok(solution_outputs(rep, result))
}

fn prepare_marl(r: &mut Reader) -> Option<Plan> {
    let side = r.count("lattice.side", Some(4), 3);
    let coupling = r.any_real("game.coupling", Some(1.0));
    let episodes = r.count("game.episodes", Some(500), 1);
    let steps = r.count("game.steps_per_episode", Some(10), 1);
    let alpha = r.real("game.alpha", Some(0.1), |a| (0.0..=1.0).contains(&a), "must be in [0, 1]");
    let gamma = r.real("game.gamma", Some(0.9), |g| (0.0..1.0).contains(&g), "must be in [0, 1)");
    let bins = r.count("game.bins", Some(GameConfig::DEFAULT_BINS as u64), 2);
    let t_start = r.real("schedule.t_start", Some(10.0), |t| t > 0.0, "must be > 0");
    let t_end = r.real("schedule.t_end", Some(0.1), |t| t > 0.0, "must be > 0");
    let schedule = core_into(r, "schedule.t_end", CoolingSchedule::geometric_between(t_start?, t_end?, episodes?))?;
    let graph = core_into(r, "lattice.side", NeighborGraph::torus(side? as usize))?;
    let env = core_into(r, "game.coupling", IsingGameEnv::new(graph, coupling?))?;
    Some(Plan::Marl(
        env,
        GameConfig {
            episodes: episodes?,
            steps_per_episode: steps?,
            learning_rate: LearningRate::Constant(alpha?),
            gamma: gamma?,
            schedule,
            bins: bins? as usize,
        },
    ))
}

fn exec_marl(env: &IsingGameEnv, cfg: &GameConfig, rng: &mut RngStream) -> Result<Outputs, CliError> {
    let run = run_ising_game(env, cfg, rng)?;
    let result = json!({
        "n_agents": env.graph.n_agents(),
        "episodes": cfg.episodes,
        "steps_per_episode": cfg.steps_per_episode,
        "final_magnetization": run.magnetization.last(),
        "final_spins": run.final_spins,
        "q_entries": run.q_tables.iter().map(|q| q.len()).sum::<usize>(),
    });
    let rows = run
        .magnetization
        .iter()
        .enumerate()
        .map(|(i, m)| vec![Cell::Int(i as i64), Cell::Real(*m)])
        .collect();
    Ok(Outputs {
        result,
        documents: vec![],
        tables: vec![Table {
            name: "magnetization",
            header: &["episode", "magnetization"],
            rows,
        }],
    })
}

/// Reads and parses a config file; relative paths inside it resolve
/// against its directory.
pub fn load_config(path: &Path) -> Result<ConfigDocument, CliError> {
    let text = formats::read_text(path)?;
    let base = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."));
    let base = std::fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    ConfigDocument::parse(&text, base).map_err(CliError::Config)
}
