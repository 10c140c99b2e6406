//! Command-line front end. [`run`] parses arguments, performs the command and
//! returns the exit code with the text destined for stdout and stderr, so the
//! binary is a thin wrapper and tests can drive it in-process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use stablematch::instance::{random_cardinal_instance, random_instance};
use stablematch::intersection::{self, build_exchange_graph};
use stablematch::mechanism::Mechanism;
use stablematch::oracle::{self, MisreportFamily, SearchOptions};
use stablematch::sat_gadget::{self, GadgetInstance};
use stablematch::welfare_opt::{self, DoctorObjective};
use stablematch::{rational, Allocation, Error, Instance, RandomKind};

#[derive(Parser, Debug)]
#[command(
    name = "stablematch",
    version,
    about = "Stable matching with matroid rank valuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a mechanism or optimizer on an instance.
    Solve {
        #[arg(value_enum)]
        solver: Solver,
        #[command(flatten)]
        common: Common,
        /// Doctor processing order for hwsd/sd, e.g. `2,0,1`.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Objective::Usw)]
        doctor_objective: Objective,
        /// Write the per-doctor probe trace of hwsd/sd here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check properties of a given allocation.
    Check {
        #[arg(value_enum)]
        what: CheckKind,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alloc: PathBuf,
    },
    /// Exhaustive ground truth on small instances.
    Oracle {
        #[arg(value_enum)]
        query: OracleQuery,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        hospital: Option<usize>,
        #[arg(long)]
        doctor: Option<usize>,
        #[arg(long, default_value = "capped_additive_all")]
        family: String,
        #[arg(long, default_value = "hwsd")]
        mechanism: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Maximum number of misreports evaluated.
        #[arg(long)]
        budget: Option<u128>,
    },
    /// 2P2N-3SAT reduction.
    Reduce {
        #[arg(value_enum)]
        what: ReduceKind,
        #[command(flatten)]
        common: Common,
        /// Truth values per variable, e.g. `1,1,0`.
        #[arg(long, value_delimiter = ',')]
        assignment: Option<Vec<String>>,
    },
    /// Generate reproducible inputs.
    Gen {
        #[arg(value_enum)]
        what: GenKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        hospitals: usize,
        #[arg(long, default_value_t = 5)]
        doctors: usize,
        #[arg(long, default_value = "mixed")]
        kind: String,
        /// Integer utility range `LO:HI`; generates cardinal doctors.
        #[arg(long)]
        cardinal: Option<String>,
        /// Variable count for planted formulas (a multiple of 3).
        #[arg(long, default_value_t = 3)]
        variables: usize,
    },
    /// Dump internal structures.
    Inspect {
        #[arg(value_enum)]
        what: InspectKind,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alloc: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall-clock time to the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Solver {
    Hwsd,
    Sd,
    MaxUsw,
    MaxDw,
    MaxNsw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Objective {
    Usw,
    Nsw,
}

impl From<Objective> for DoctorObjective {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Usw => DoctorObjective::Usw,
            Objective::Nsw => DoctorObjective::Nsw,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckKind {
    Stability,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleQuery {
    Stable,
    MaxUsw,
    Manipulate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReduceKind {
    Sat,
    Witness,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Random,
    Formula,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InspectKind {
    ExchangeGraph,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// What a command produced: text for stdout or `--out`, and its exit code.
struct Emitted {
    code: i32,
    text: String,
}

impl Emitted {
    fn ok(text: String) -> Self {
        Self { code: 0, text }
    }
}

/// Runs one command line. `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let out_path = match &cli.command {
        Command::Solve { common, .. }
        | Command::Check { common, .. }
        | Command::Oracle { common, .. }
        | Command::Reduce { common, .. }
        | Command::Inspect { common, .. } => common.out.clone(),
        Command::Gen { out, .. } => out.clone(),
    };
    let result = dispatch(cli.command).and_then(|emitted| {
        if let Some(path) = &out_path {
            fs::write(path, &emitted.text)
                .map_err(|e| fail(format!("cannot write {}: {e}", path.display())))?;
            Ok(Emitted {
                code: emitted.code,
                text: String::new(),
            })
        } else {
            Ok(emitted)
        }
    });
    match result {
        Ok(e) => Outcome {
            code: e.code,
            stdout: e.text,
            stderr: String::new(),
        },
        Err(f) => Outcome {
            code: f.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", f.message),
        },
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| fail(format!("cannot read {}: {e}", path.display())))
}

fn read_instance(path: &Path) -> CliResult<Instance> {
    Ok(Instance::from_json(&read_text(path)?)?)
}

fn read_allocation(path: &Path, inst: &Instance) -> CliResult<Allocation> {
    let alloc: Allocation = serde_json::from_str(&read_text(path)?)
        .map_err(|e| fail(format!("bad allocation file {}: {e}", path.display())))?;
    inst.check_allocation(&alloc)?;
    Ok(alloc)
}

fn digest(inst: &Instance) -> CliResult<String> {
    let canonical = serde_json::to_string(&inst.to_file()?).map_err(|e| fail(e.to_string()))?;
    Ok(format!("{:x}", Sha256::digest(canonical.as_bytes())))
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Pretty JSON with object keys sorted, newline-terminated.
fn render(v: &Value) -> String {
    // serde_json's default map is ordered by key, so a round trip sorts nested objects
    let sorted: Value = serde_json::from_str(&v.to_string()).expect("valid json");
    let mut s = serde_json::to_string_pretty(&sorted).expect("json");
    s.push('\n');
    s
}

fn reset_queries(inst: &Instance) {
    for v in inst.hospitals() {
        v.reset_query_count();
    }
}

fn total_queries(inst: &Instance) -> u64 {
    inst.hospitals().iter().map(|v| v.query_count()).sum()
}

fn welfare(inst: &Instance, alloc: &Allocation) -> Value {
    let mut w = json!({
        "hospital_usw": inst.hospital_usw(alloc),
        "hospital_nsw": inst.hospital_nsw(alloc).to_string(),
        "hospital_utilities": inst.hospital_utilities(alloc),
    });
    if !inst.is_ordinal() {
        if let Ok(u) = inst.doctor_usw(alloc) {
            w["doctor_usw"] = json!(rational::format(&u));
        }
        w["doctor_nsw"] = match inst.doctor_nsw(alloc) {
            Ok(p) => json!(rational::format(&p)),
            Err(_) => Value::Null,
        };
    }
    w
}

/// The common report envelope.
struct Report<'a> {
    command: &'a str,
    inst: &'a Instance,
    started: Instant,
    timing: bool,
}

impl Report<'_> {
    fn finish(&self, alloc: Option<&Allocation>, details: Value) -> CliResult<String> {
        let mut v = json!({
            "command": self.command,
            "instance_digest": digest(self.inst)?,
            "query_count": total_queries(self.inst),
            "details": details,
        });
        if let Some(a) = alloc {
            v["allocation"] = to_value(a);
            v["welfare"] = welfare(self.inst, a);
            v["stable"] = json!(self.inst.is_stable(a));
        }
        if self.timing {
            v["elapsed_ms"] = json!(self.started.elapsed().as_secs_f64() * 1e3);
        }
        Ok(render(&v))
    }
}

fn dispatch(command: Command) -> CliResult<Emitted> {
    match command {
        Command::Solve {
            solver,
            common,
            order,
            doctor_objective,
            trace,
        } => solve(solver, &common, order, doctor_objective, trace),
        Command::Check { common, alloc, .. } => check_stability(&common, &alloc),
        Command::Oracle {
            query,
            common,
            hospital,
            doctor,
            family,
            mechanism,
            jobs,
            budget,
        } => oracle_cmd(
            query, &common, hospital, doctor, &family, &mechanism, jobs, budget,
        ),
        Command::Reduce {
            what,
            common,
            assignment,
        } => reduce(what, &common, assignment),
        Command::Gen {
            what,
            seed,
            hospitals,
            doctors,
            kind,
            cardinal,
            variables,
            ..
        } => generate(
            what,
            seed,
            hospitals,
            doctors,
            &kind,
            cardinal.as_deref(),
            variables,
        ),
        Command::Inspect { common, alloc, .. } => inspect(&common, &alloc),
    }
}

fn solve(
    solver: Solver,
    common: &Common,
    order: Option<Vec<usize>>,
    objective: Objective,
    trace: Option<PathBuf>,
) -> CliResult<Emitted> {
    let inst = read_instance(&common.input)?;
    reset_queries(&inst);
    let started = Instant::now();
    let name = match solver {
        Solver::Hwsd => "solve hwsd",
        Solver::Sd => "solve sd",
        Solver::MaxUsw => "solve max-usw",
        Solver::MaxDw => "solve max-dw",
        Solver::MaxNsw => "solve max-nsw",
    };
    let report = Report {
        command: name,
        inst: &inst,
        started,
        timing: common.timing,
    };
    let (alloc, details) = match solver {
        Solver::Hwsd | Solver::Sd => {
            let mech = if matches!(solver, Solver::Hwsd) {
                Mechanism::Hwsd
            } else {
                Mechanism::SerialDictatorship
            };
            let (alloc, tr) = match &order {
                Some(o) => mech.run_with_order(&inst, o)?,
                None => mech.run(&inst)?,
            };
            if let Some(path) = &trace {
                fs::write(path, render(&to_value(&tr)))
                    .map_err(|e| fail(format!("cannot write {}: {e}", path.display())))?;
            }
            let order = order.unwrap_or_else(|| (0..inst.doctor_count()).collect());
            (alloc, json!({ "mechanism": mech, "order": order }))
        }
        Solver::MaxUsw => {
            let alloc = intersection::max_usw_allocation(&inst);
            let k = alloc.assigned_count();
            (alloc, json!({ "max_usw": k }))
        }
        Solver::MaxDw => {
            let best = match objective {
                Objective::Usw => intersection::max_doctor_usw_with_max_k(&inst)?,
                Objective::Nsw => intersection::max_doctor_nsw_with_max_k(&inst)?,
            };
            let k = best.size();
            let details = json!({
                "doctor_objective": DoctorObjective::from(objective),
                "doctor_welfare": rational::format(&best.weight),
                "k": k,
            });
            (best.allocation, details)
        }
        Solver::MaxNsw => {
            let out = welfare_opt::max_nash_subject_to(&inst, objective.into())?;
            let details = json!({
                "doctor_objective": DoctorObjective::from(objective),
                "doctor_welfare": rational::format(&out.doctor_welfare),
                "hospital_nsw": out.hospital_nsw.to_string(),
                "k": out.k,
                "local_search": to_value(&out.logs),
            });
            (out.allocation, details)
        }
    };
    Ok(Emitted::ok(report.finish(Some(&alloc), details)?))
}

fn check_stability(common: &Common, alloc_path: &Path) -> CliResult<Emitted> {
    let inst = read_instance(&common.input)?;
    let alloc = read_allocation(alloc_path, &inst)?;
    reset_queries(&inst);
    let report = Report {
        command: "check stability",
        inst: &inst,
        started: Instant::now(),
        timing: common.timing,
    };
    let non_redundant = inst.is_non_redundant(&alloc)?;
    let blocking = if non_redundant {
        inst.find_blocking_pair(&alloc)?
    } else {
        None
    };
    let details = json!({
        "non_redundant": non_redundant,
        "stable": non_redundant && blocking.is_none(),
        "blocking_pair": blocking.map(|w| json!({"doctor": w.doctor, "hospital": w.hospital})),
    });
    Ok(Emitted::ok(report.finish(Some(&alloc), details)?))
}

#[allow(clippy::too_many_arguments)]
fn oracle_cmd(
    query: OracleQuery,
    common: &Common,
    hospital: Option<usize>,
    doctor: Option<usize>,
    family: &str,
    mechanism: &str,
    jobs: usize,
    budget: Option<u128>,
) -> CliResult<Emitted> {
    let inst = read_instance(&common.input)?;
    reset_queries(&inst);
    let started = Instant::now();
    let (name, details, code) = match query {
        OracleQuery::Stable => {
            let stable = oracle::brute_stable(&inst)?;
            let details = json!({
                "count": stable.len(),
                "stable_allocations": to_value(&stable),
            });
            ("oracle stable", details, 0)
        }
        OracleQuery::MaxUsw => (
            "oracle max-usw",
            json!({ "max_usw": oracle::brute_max_usw(&inst)? }),
            0,
        ),
        OracleQuery::Manipulate => {
            let mech: Mechanism = mechanism.parse()?;
            let family: MisreportFamily = family.parse()?;
            match (family, hospital, doctor) {
                (MisreportFamily::OrdinalAll, None, Some(d)) => {
                    let rep = oracle::doctor_manipulation_search(&inst, mech, d)?;
                    ("oracle manipulate", to_value(&rep), 0)
                }
                (MisreportFamily::OrdinalAll, _, _) => {
                    return Err(fail("family ordinal_all needs --doctor and no --hospital"))
                }
                (_, Some(h), None) => {
                    let opts = SearchOptions {
                        budget: budget.unwrap_or(oracle::DEFAULT_BUDGET),
                        jobs,
                    };
                    let rep = oracle::manipulation_search(&inst, mech, h, family, opts)?;
                    let code = if rep.partial { 2 } else { 0 };
                    ("oracle manipulate", to_value(&rep), code)
                }
                _ => {
                    return Err(fail(
                        "hospital misreport families need --hospital and no --doctor",
                    ))
                }
            }
        }
    };
    let report = Report {
        command: name,
        inst: &inst,
        started,
        timing: common.timing,
    };
    Ok(Emitted {
        code,
        text: report.finish(None, details)?,
    })
}

fn parse_assignment(values: &[String]) -> CliResult<Vec<bool>> {
    values
        .iter()
        .map(|v| match v.trim() {
            "1" | "true" | "T" | "t" => Ok(true),
            "0" | "false" | "F" | "f" => Ok(false),
            other => Err(fail(format!("not a truth value: {other:?}"))),
        })
        .collect()
}

fn reduce(
    what: ReduceKind,
    common: &Common,
    assignment: Option<Vec<String>>,
) -> CliResult<Emitted> {
    let formula = sat_gadget::parse_formula(&read_text(&common.input)?)?;
    let gadget: GadgetInstance = sat_gadget::reduce(&formula);
    match what {
        ReduceKind::Sat => Ok(Emitted::ok(render(&to_value(&gadget.instance.to_file()?)))),
        ReduceKind::Witness => {
            let values = assignment.ok_or_else(|| fail("reduce witness needs --assignment"))?;
            let assignment = parse_assignment(&values)?;
            let alloc = sat_gadget::witness_allocation(&gadget, &assignment)?;
            let inst = &gadget.instance;
            let report = Report {
                command: "reduce witness",
                inst,
                started: Instant::now(),
                timing: common.timing,
            };
            let utils = inst.hospital_utilities(&alloc);
            let details = json!({
                "assignment": assignment,
                "hospitals": inst.hospital_count(),
                "doctors": inst.doctor_count(),
                "min_hospital_utility": utils.iter().min(),
                "literal_conflicts": gadget.literal_conflicts(&alloc),
            });
            Ok(Emitted::ok(report.finish(Some(&alloc), details)?))
        }
    }
}

fn parse_range(text: &str) -> CliResult<(i64, i64)> {
    let bad = || fail(format!("utility range must look like LO:HI, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn generate(
    what: GenKind,
    seed: u64,
    hospitals: usize,
    doctors: usize,
    kind: &str,
    cardinal: Option<&str>,
    variables: usize,
) -> CliResult<Emitted> {
    match what {
        GenKind::Random => {
            let kind: RandomKind = kind.parse()?;
            let inst = match cardinal {
                Some(range) => {
                    let (lo, hi) = parse_range(range)?;
                    random_cardinal_instance(hospitals, doctors, kind, seed, lo, hi)?
                }
                None => random_instance(hospitals, doctors, kind, seed)?,
            };
            Ok(Emitted::ok(render(&to_value(&inst.to_file()?))))
        }
        GenKind::Formula => {
            let (formula, assignment) = sat_gadget::planted_formula(variables, seed)?;
            let planted: Vec<&str> = assignment
                .iter()
                .map(|&b| if b { "1" } else { "0" })
                .collect();
            Ok(Emitted::ok(format!(
                "c planted assignment {}\n{}",
                planted.join(","),
                formula.to_dimacs()
            )))
        }
    }
}

fn inspect(common: &Common, alloc_path: &Path) -> CliResult<Emitted> {
    let inst = read_instance(&common.input)?;
    let alloc = read_allocation(alloc_path, &inst)?;
    reset_queries(&inst);
    let report = Report {
        command: "inspect exchange-graph",
        inst: &inst,
        started: Instant::now(),
        timing: common.timing,
    };
    let graph = build_exchange_graph(&inst, &alloc)?;
    let cycle = graph.find_negative_cycle().map(|c| {
        json!({
            "nodes": to_value(&c.nodes),
            "total_weight": rational::format(&c.total_weight),
            "cross_edge_count": c.cross_edge_count,
        })
    });
    let details = json!({
        "nodes": to_value(graph.nodes()),
        "edges": to_value(&graph.edges()),
        "negative_cycle": cycle,
    });
    Ok(Emitted::ok(report.finish(Some(&alloc), details)?))
}
