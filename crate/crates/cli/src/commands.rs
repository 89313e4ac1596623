use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use obscert::certify::{
    bound, check_pairs, grid_pairs, node_pairs, table_to_certificate, validate_dense, BoundReport,
    Certificate, CheckReport, CheckSettings, InnerRule,
};
use obscert::hyperprops::{
    empirical_probability, empirical_probability_finite, state_estimate, EstimateKind, GridObserver,
    ProbabilityReport, PropertySpec,
};
use obscert::ltlf::{parse, Dfa, HyperFormula};
use obscert::oracle::{dp_backward, theorem1_check, FiniteInstance, GridSpec, Mode, Theorem1Report, ValueTable};
use obscert::poss::{sample_trajectory, simulate, trajectory_csv, Poss};
use obscert::product::{ProductState, VerificationStructure};
use obscert::region::{linspace, tensor_product, BoxRegion};
use obscert::rng::{derive_seed, stream_rng};
use obscert::scalar::{Probability, Real};
use obscert::system::{State, System};
use obscert::trainer::{log_csv, train};
use obscert::{Error, Result};

use crate::config::{Model, Precision, RunConfig};

/// Outcome of a command: the summary printed on stdout and whether the
/// verification it performed failed.
pub struct Outcome {
    pub summary: Value,
    pub failed: bool,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self { summary, failed: false }
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    hash: String,
}

impl Ctx {
    /// Validates the configuration, creates the output directory and writes
    /// the resolved-config snapshot.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash()?;
        fs::create_dir_all(&cfg.output.dir)?;
        fs::write(cfg.output.dir.join("resolved_config.json"), cfg.resolved_json()?)?;
        Ok(Self { cfg, hash })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.output.dir.join(name)
    }

    fn provenance(&self, command: &str) -> Value {
        json!({
            "command": command,
            "config_sha256": self.hash,
            "seed": self.cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, command: &str, body: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_value(body)?;
        if let Value::Object(m) = &mut v {
            m.insert("provenance".into(), self.provenance(command));
        }
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(&v)? + "\n")?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, format!("# config_sha256={} seed={}\n{body}", self.hash, self.cfg.seed))?;
        Ok(path)
    }

    fn formula(&self) -> Result<HyperFormula> {
        self.cfg.property.to_formula()
    }
}

/// Everything the certificate commands need about one system.
struct Setup<S: System> {
    vs: VerificationStructure<S>,
    grid: GridSpec,
    settings: CheckSettings,
    calibration: CheckSettings,
    validation_pairs: Vec<(State, State)>,
    calibration_pairs: Vec<(State, State)>,
    /// Initial states scanned for bounds, also used as companions.
    scan: Vec<State>,
    domain: BoxRegion,
    /// Dense grid size, reported with validations on continuous systems.
    per_dim: Option<usize>,
}

impl Setup<Poss> {
    fn poss(ctx: &Ctx, model: Poss) -> Result<Self> {
        let d = &ctx.cfg.discretization;
        let t = &ctx.cfg.training;
        let domain = model.domain().clone();
        let dist = model.disturbance().clone();
        let region = d.dp_region.clone().unwrap_or_else(|| domain.clone());
        let grid = GridSpec::for_distribution(region, d.dp_per_dim, &dist, d.quadrature_nodes, d.candidates, d.sigmas)?;
        let settings = t.validation.settings(&dist, t.sigmas, model.horizon());
        let calibration = CheckSettings { seed: derive_seed(t.validation.seed, "calibration"), ..settings.clone() };
        let sink = d.domain_sink.then(|| domain.clone());
        let initial = model.initial().clone();
        let scan = initial.grid(t.validation.scan_per_dim);
        let vs = VerificationStructure::new(model, &ctx.formula()?, ctx.cfg.property.secret().cloned(), initial, sink)?;
        Ok(Self {
            validation_pairs: grid_pairs(&domain, t.validation.per_dim),
            calibration_pairs: grid_pairs(&domain, t.validation.calibrate_per_dim),
            vs,
            grid,
            settings,
            calibration,
            scan,
            domain,
            per_dim: Some(t.validation.per_dim),
        })
    }
}

impl Setup<FiniteInstance<BigRational>> {
    fn finite(ctx: &Ctx, inst: FiniteInstance<BigRational>) -> Result<Self> {
        let grid = GridSpec::for_finite(&inst)?;
        let v = &ctx.cfg.training.validation;
        let settings = CheckSettings {
            candidates: grid.candidates.clone(),
            inner: InnerRule::Quadrature(grid.quadrature.clone()),
            seed: v.seed,
            tol: v.tol,
            t_range: (0, inst.horizon),
        };
        let pairs = node_pairs(&inst.coords);
        let scan: Vec<State> = inst.initial.iter().map(|&i| inst.coords[i].clone()).collect();
        let initial = obscert::region::StateRegion::new(
            scan.iter().map(|x| BoxRegion { lo: x.clone(), hi: x.clone() }).collect(),
        )?;
        let vs = VerificationStructure::new(inst, &ctx.formula()?, ctx.cfg.property.secret().cloned(), initial, None)?;
        Ok(Self {
            domain: grid.region.clone(),
            grid,
            calibration: settings.clone(),
            settings,
            validation_pairs: pairs.clone(),
            calibration_pairs: pairs,
            scan,
            vs,
            per_dim: None,
        })
    }
}

impl<S: System> Setup<S> {
    fn mode(&self) -> Mode {
        Mode::from(self.vs.quantifier())
    }

    fn validate<T: Real>(&self, cert: &Certificate<T>) -> Result<CheckReport> {
        match self.per_dim {
            Some(n) => validate_dense(cert, &self.vs, &self.domain, n, &self.settings),
            None => check_pairs(cert, &self.vs, &self.validation_pairs, &self.settings),
        }
    }

    fn bound<T: Real>(&self, cert: &Certificate<T>) -> Result<BoundReport> {
        bound(cert, &self.vs, &self.scan, &self.scan)
    }

    fn check_hash<T: Real>(&self, cert: &Certificate<T>) -> Result<()> {
        let h = self.vs.dfa().hash();
        if cert.dfa_hash != h {
            return Err(Error::Config(format!(
                "certificate was built for automaton {} but the configured property compiles to {h}",
                cert.dfa_hash
            )));
        }
        Ok(())
    }
}

/// Runs `$body` with `$s` bound to the setup of the configured model.
macro_rules! with_setup {
    ($ctx:expr, $s:ident => $body:expr) => {
        match $ctx.cfg.model()? {
            Model::Poss(m) => {
                let $s = Setup::poss($ctx, m)?;
                $body
            }
            Model::Finite(i) => {
                let $s = Setup::finite($ctx, i)?;
                $body
            }
        }
    };
}

/// Runs `$body` with the scalar type `$t` chosen by the configured precision.
macro_rules! with_precision {
    ($ctx:expr, $t:ident => $body:expr) => {
        match $ctx.cfg.precision {
            Precision::F64 => {
                type $t = f64;
                $body
            }
            Precision::F32 => {
                type $t = f32;
                $body
            }
        }
    };
}

/// Exact game values and satisfaction probabilities per initial state.
#[derive(Serialize)]
struct ExactRow {
    x0: State,
    value: f64,
    value_exact: String,
    probability: f64,
    probability_exact: String,
    status: String,
}

fn exact_rows(vs: &VerificationStructure<FiniteInstance<BigRational>>) -> Result<Vec<ExactRow>> {
    let report: Theorem1Report<BigRational> = theorem1_check(vs, 1e-12)?;
    let inst = vs.system();
    Ok(report
        .rows
        .iter()
        .map(|r| ExactRow {
            x0: inst.coords[r.x0].clone(),
            value: r.lhs.to_f64(),
            value_exact: r.lhs.to_string(),
            probability: r.rhs.to_f64(),
            probability_exact: r.rhs.to_string(),
            status: format!("{:?}", r.status).to_lowercase(),
        })
        .collect())
}

pub fn compile(formula: &HyperFormula, out: &Path) -> Result<Outcome> {
    let dfa = Dfa::compile(&formula.body)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("dfa.txt"), dfa.to_table())?;
    let summary = json!({
        "formula": formula.to_string(),
        "quantifier": format!("{:?}", formula.quantifier).to_lowercase(),
        "states": dfa.num_states(),
        "letters": dfa.num_letters(),
        "accepting": dfa.accepting_states(),
        "dfa_hash": dfa.hash(),
    });
    fs::write(out.join("dfa.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(Outcome::ok(summary))
}

pub fn compile_config(ctx: &Ctx) -> Result<Outcome> {
    compile(&ctx.formula()?, &ctx.cfg.output.dir)
}

pub fn compile_text(text: &str, out: &Path) -> Result<Outcome> {
    compile(&parse(text)?, out)
}

fn default_x0(model: &Model) -> State {
    match model {
        Model::Poss(m) => m.initial().hull().center(),
        Model::Finite(i) => i.coords[i.initial[0]].clone(),
    }
}

pub fn simulate_cmd(ctx: &Ctx, x0: Option<Vec<f64>>) -> Result<Outcome> {
    let model = ctx.cfg.model()?;
    let x0 = x0.unwrap_or_else(|| default_x0(&model));
    let seed = derive_seed(ctx.cfg.seed, "simulate");
    let mut files = Vec::new();
    for i in 0..ctx.cfg.output.trajectories {
        let mut rng = stream_rng(seed, i as u64);
        let csv = match &model {
            Model::Poss(m) => trajectory_csv(m, &sample_trajectory(m, &x0, &mut rng)?)?,
            Model::Finite(f) => trajectory_csv(f, &simulate(f, &x0, &mut rng)?)?,
        };
        files.push(ctx.write_csv(&format!("trajectory_{i}.csv"), &csv)?);
    }
    Ok(Outcome::ok(json!({ "x0": x0, "files": files })))
}

fn estimate_kind(spec: &PropertySpec) -> EstimateKind {
    match spec {
        PropertySpec::InitialDetect { .. } | PropertySpec::InitialOpacity { .. } => EstimateKind::Initial,
        _ => EstimateKind::Current,
    }
}

fn spec_eps(spec: &PropertySpec) -> f64 {
    match spec {
        PropertySpec::InitialDetect { eps, .. }
        | PropertySpec::CurrentDetect { eps, .. }
        | PropertySpec::InitialOpacity { eps, .. }
        | PropertySpec::CurrentOpacity { eps, .. } => *eps,
        PropertySpec::Custom { .. } => 0.0,
    }
}

pub fn estimate_cmd(ctx: &Ctx) -> Result<Outcome> {
    let d = &ctx.cfg.discretization;
    let spec = &ctx.cfg.property;
    let seed = derive_seed(ctx.cfg.seed, "estimate");
    let model = ctx.cfg.model()?;
    let mut exact = None;
    let reports: Vec<ProbabilityReport> = match &model {
        Model::Poss(m) => {
            let hull = m.initial().hull();
            let axes: Vec<Vec<f64>> =
                hull.lo.iter().zip(&hull.hi).map(|(l, h)| linspace(*l, *h, d.estimate_points)).collect();
            let points: Vec<State> = tensor_product(&axes).into_iter().filter(|x| m.initial().contains(x)).collect();
            let observer = GridObserver::for_poss(m, &d.observer)?;
            let mut rng = stream_rng(seed, u64::MAX);
            let s = sample_trajectory(m, &points[0], &mut rng)?;
            let set = state_estimate(m, &observer, &s.states, spec_eps(spec), estimate_kind(spec))?;
            ctx.write_csv("state_estimate.csv", &set.to_csv())?;
            points
                .iter()
                .enumerate()
                .map(|(i, x0)| {
                    let r = empirical_probability(m, spec, x0, d.estimate_samples, derive_seed(seed, &i.to_string()), &d.observer);
                    log::info!("estimate at {x0:?}: {:?}", r.as_ref().map(|r| r.estimate));
                    r
                })
                .collect::<Result<_>>()?
        }
        Model::Finite(f) => {
            let s = Setup::finite(ctx, f.clone())?;
            exact = Some(exact_rows(&s.vs)?);
            f.initial
                .iter()
                .enumerate()
                .map(|(i, &x0)| empirical_probability_finite(f, spec, x0, d.estimate_samples, derive_seed(seed, &i.to_string())))
                .collect::<Result<_>>()?
        }
    };
    let worst = reports
        .iter()
        .enumerate()
        .fold(0, |w, (i, r)| if r.estimate < reports[w].estimate { i } else { w });
    let mut csv = String::from("x0,estimate,ci_low,ci_high,n,successes\n");
    for r in &reports {
        let x: Vec<String> = r.x0.iter().map(|v| v.to_string()).collect();
        csv.push_str(&format!("{},{},{},{},{},{}\n", x.join(" "), r.estimate, r.ci_low, r.ci_high, r.n, r.successes));
    }
    ctx.write_csv("estimate.csv", &csv)?;
    let body = json!({
        "estimate": reports[worst].estimate,
        "ci_low": reports[worst].ci_low,
        "ci_high": reports[worst].ci_high,
        "n": reports[worst].n,
        "seed": seed,
        "x0": reports[worst].x0,
        "points": reports,
        "observer": d.observer,
        "exact": exact,
    });
    ctx.write_json("estimate.json", "estimate", &body)?;
    Ok(Outcome::ok(json!({
        "estimate": reports[worst].estimate,
        "ci_low": reports[worst].ci_low,
        "ci_high": reports[worst].ci_high,
        "n": reports[worst].n,
        "x0": reports[worst].x0,
    })))
}

fn dp_on<S: System>(ctx: &Ctx, s: &Setup<S>, exact: Option<Vec<ExactRow>>) -> Result<Outcome> {
    let table: ValueTable<f64> = dp_backward(&s.vs, &s.grid, s.mode(), ctx.cfg.discretization.memory_cap)?;
    let mut file = std::io::BufWriter::new(fs::File::create(ctx.path("value_table.bin"))?);
    table.write_binary(&mut file)?;
    drop(file);
    let raw = Certificate::from_table(table.clone(), 0.0, s.vs.dfa().hash());
    let raw_bound = s.bound(&raw)?;
    let mut cert =
        table_to_certificate(table, ctx.cfg.discretization.table_delta, &s.vs, &s.calibration_pairs, &s.calibration)?;
    cert.provenance = Some(ctx.provenance("dp"));
    cert.save(&ctx.path("table_certificate.json"))?;
    let cert_bound = s.bound(&cert)?;
    let body = json!({
        "grid": { "region": s.grid.region, "per_dim": s.grid.per_dim, "quadrature_nodes": s.grid.quadrature.len(),
                  "candidates": s.grid.candidates.len() },
        "mode": s.mode(),
        "dp_bound": raw_bound.overall,
        "dp_bound_x0": raw_bound.overall_x0,
        "table_certificate": { "beta": cert.beta, "bound": cert_bound.overall, "bound_x0": cert_bound.overall_x0 },
        "exact": exact,
    });
    ctx.write_json("dp.json", "dp", &body)?;
    Ok(Outcome::ok(json!({
        "dp_bound": raw_bound.overall,
        "table_certificate_beta": cert.beta,
        "table_certificate_bound": cert_bound.overall,
    })))
}

pub fn dp_cmd(ctx: &Ctx) -> Result<Outcome> {
    match ctx.cfg.model()? {
        Model::Poss(m) => dp_on(ctx, &Setup::poss(ctx, m)?, None),
        Model::Finite(i) => {
            let s = Setup::finite(ctx, i)?;
            let exact = exact_rows(&s.vs)?;
            dp_on(ctx, &s, Some(exact))
        }
    }
}

fn train_on<T: Real>(ctx: &Ctx, s: &Setup<Poss>) -> Result<Outcome> {
    let warm = if ctx.cfg.discretization.warm_start {
        let path = ctx.path("table_certificate.json");
        if !path.exists() {
            return Err(Error::Config(format!("warm start needs {}; run `dp` first", path.display())));
        }
        let c = Certificate::<f64>::load(&path)?;
        s.check_hash(&c)?;
        Some(c)
    } else {
        None
    };
    let dist = s.vs.system().disturbance().clone();
    let mut out = train::<_, T>(&s.vs, &dist, &s.domain, &ctx.cfg.training, warm.as_ref())?;
    out.certificate.provenance = Some(ctx.provenance("train"));
    out.certificate.save(&ctx.path("certificate.json"))?;
    ctx.write_csv("train_log.csv", &log_csv(&out.log))?;
    let bound_overall = out.bound.as_ref().map(|b| b.overall);
    let body = json!({
        "certified": out.certified,
        "steps": out.steps,
        "raw_beta": out.raw_beta,
        "beta": out.certificate.beta,
        "offset": out.certificate.offset,
        "bound": bound_overall,
        "validation": out.report,
    });
    ctx.write_json("train.json", "train", &body)?;
    Ok(Outcome::ok(json!({
        "beta": out.certificate.beta,
        "bound": bound_overall,
        "status": out.report.as_ref().map(|r| r.status.clone()),
        "steps": out.steps,
    })))
}

pub fn train_cmd(ctx: &Ctx) -> Result<Outcome> {
    match ctx.cfg.model()? {
        Model::Poss(m) => {
            let s = Setup::poss(ctx, m)?;
            with_precision!(ctx, T => train_on::<T>(ctx, &s))
        }
        Model::Finite(_) => Err(Error::Config(
            "training samples states across the domain and needs a [system] model; use `dp` for finite instances".into(),
        )),
    }
}

/// The certificate named on the command line, or the trained one, or the
/// table certificate written by `dp`.
fn certificate_path(ctx: &Ctx, cert: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = cert {
        return Ok(p.to_path_buf());
    }
    for name in ["certificate.json", "table_certificate.json"] {
        let p = ctx.path(name);
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::Config(format!("no certificate in {}; run `train` or `dp`, or pass --cert", ctx.cfg.output.dir.display())))
}

fn load_cert<T: Real, S: System>(s: &Setup<S>, path: &Path) -> Result<Certificate<T>> {
    let c = Certificate::<T>::load(path)?;
    s.check_hash(&c)?;
    Ok(c)
}

fn validate_on<T: Real, S: System>(ctx: &Ctx, s: &Setup<S>, path: &Path) -> Result<Outcome> {
    let cert = load_cert::<T, S>(s, path)?;
    let report = s.validate(&cert)?;
    ctx.write_json("validation.json", "validate", &json!({ "certificate": path, "report": report }))?;
    ctx.write_csv("margins.csv", &report.margins_csv())?;
    Ok(Outcome {
        failed: !report.passed(),
        summary: json!({
            "status": report.status,
            "violations": report.total_violations(),
            "points_checked": report.points_checked,
        }),
    })
}

pub fn validate_cmd(ctx: &Ctx, cert: Option<&Path>) -> Result<Outcome> {
    let path = certificate_path(ctx, cert)?;
    with_setup!(ctx, s => with_precision!(ctx, T => validate_on::<T, _>(ctx, &s, &path)))
}

fn bound_on<T: Real, S: System>(ctx: &Ctx, s: &Setup<S>, path: &Path) -> Result<Outcome> {
    let cert = load_cert::<T, S>(s, path)?;
    let b = s.bound(&cert)?;
    ctx.write_json("bound.json", "bound", &json!({ "certificate": path, "report": b }))?;
    let p = ctx.cfg.property.p();
    Ok(Outcome {
        failed: b.overall < p,
        summary: json!({ "bound": b.overall, "x0": b.overall_x0, "beta": b.beta, "p": p }),
    })
}

pub fn bound_cmd(ctx: &Ctx, cert: Option<&Path>) -> Result<Outcome> {
    let path = certificate_path(ctx, cert)?;
    with_setup!(ctx, s => with_precision!(ctx, T => bound_on::<T, _>(ctx, &s, &path)))
}

fn read_artifact(ctx: &Ctx, name: &str) -> Option<Value> {
    fs::read_to_string(ctx.path(name)).ok().and_then(|t| serde_json::from_str(&t).ok())
}

fn report_on<T: Real, S: System>(ctx: &Ctx, s: &Setup<S>, path: &Path, exact: Option<Vec<ExactRow>>) -> Result<Outcome> {
    let cert = load_cert::<T, S>(s, path)?;
    let validation = s.validate(&cert)?;
    let b = s.bound(&cert)?;
    let p = ctx.cfg.property.p();
    let satisfied = validation.passed() && b.overall >= p;
    let exact_verdict = exact.as_ref().map(|rows| {
        let worst = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
        json!({ "value": worst, "verdict": if worst >= p { "SATISFIED" } else { "FAILED" } })
    });
    let estimate = read_artifact(ctx, "estimate.json").map(|e| {
        json!({ "estimate": e["estimate"], "ci_low": e["ci_low"], "ci_high": e["ci_high"], "n": e["n"], "x0": e["x0"] })
    });
    let dp = read_artifact(ctx, "dp.json").map(|d| d["dp_bound"].clone());
    let verdict = if satisfied { "SATISFIED" } else { "FAILED" };
    let body = json!({
        "verdict": verdict,
        "p": p,
        "certificate": path,
        "certificate_bound": b.overall,
        "certificate_bound_x0": b.overall_x0,
        "beta": cert.beta,
        "validation": { "status": validation.status, "violations": validation.total_violations(),
                        "points_checked": validation.points_checked },
        "dp_bound": dp,
        "empirical": estimate,
        "exact": exact_verdict,
        "exact_rows": exact,
    });
    ctx.write_json("report.json", "report", &body)?;
    Ok(Outcome {
        failed: !satisfied,
        summary: json!({ "verdict": verdict, "bound": b.overall, "p": p, "status": validation.status }),
    })
}

pub fn report_cmd(ctx: &Ctx, cert: Option<&Path>) -> Result<Outcome> {
    let path = certificate_path(ctx, cert)?;
    match ctx.cfg.model()? {
        Model::Poss(m) => {
            let s = Setup::poss(ctx, m)?;
            with_precision!(ctx, T => report_on::<T, _>(ctx, &s, &path, None))
        }
        Model::Finite(i) => {
            let s = Setup::finite(ctx, i)?;
            let exact = exact_rows(&s.vs)?;
            with_precision!(ctx, T => report_on::<T, _>(ctx, &s, &path, Some(exact)))
        }
    }
}

pub struct PlotArgs {
    pub table: Option<PathBuf>,
    pub cert: Option<PathBuf>,
    pub t: usize,
    pub q: Option<usize>,
    pub per_dim: usize,
}

/// `(x1, x2, value)` rows of a certificate at fixed `q` and `t` over the
/// product of the domain grid with itself.
pub fn certificate_slice<T: Real>(cert: &Certificate<T>, domain: &BoxRegion, per_dim: usize, q: usize, t: usize) -> Result<String> {
    let d = cert.state_dim;
    if domain.dim() != d {
        return Err(Error::Dimension { what: "plot domain", expected: d, got: domain.dim() });
    }
    let nodes = domain.grid(per_dim);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x1_{i}")).collect();
    header.extend((1..=d).map(|i| format!("x2_{i}")));
    header.push("value".into());
    let mut out = header.join(",") + "\n";
    for a in &nodes {
        for b in &nodes {
            let v = cert.eval(&ProductState::new(a.clone(), b.clone(), q as u32), t)?;
            let row: Vec<String> = a.iter().chain(b).map(|x| x.to_string()).chain([v.to_string()]).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    Ok(out)
}

fn plot_on<T: Real, S: System>(ctx: &Ctx, s: &Setup<S>, args: &PlotArgs) -> Result<Outcome> {
    let q = args.q.unwrap_or(s.vs.dfa().initial() as usize);
    let horizon = s.vs.horizon();
    if args.t > horizon {
        return Err(Error::TimeOutOfRange { t: args.t, horizon });
    }
    let (source, csv) = match (&args.table, &args.cert) {
        (Some(p), _) => {
            let table = ValueTable::<f64>::read_binary(std::io::BufReader::new(fs::File::open(p)?))?;
            if q >= table.num_q {
                return Err(Error::Config(format!("automaton state {q} out of range")));
            }
            (p.clone(), table.slice_csv(args.t, q)?)
        }
        (None, c) => {
            let path = certificate_path(ctx, c.as_deref())?;
            let cert = load_cert::<T, S>(s, &path)?;
            let per_dim = if s.per_dim.is_some() { args.per_dim } else { s.grid.per_dim };
            (path, certificate_slice(&cert, &s.domain, per_dim, q, args.t)?)
        }
    };
    let name = format!("plot_t{}_q{q}.csv", args.t);
    let file = ctx.write_csv(&name, &csv)?;
    Ok(Outcome::ok(json!({ "source": source, "file": file, "t": args.t, "q": q })))
}

pub fn plotdata_cmd(ctx: &Ctx, args: &PlotArgs) -> Result<Outcome> {
    if let Some(p) = args.table.as_ref().or(args.cert.as_ref()) {
        if !p.exists() {
            return Err(Error::Config(format!("artifact {} does not exist", p.display())));
        }
    }
    with_setup!(ctx, s => with_precision!(ctx, T => plot_on::<T, _>(ctx, &s, args)))
}
