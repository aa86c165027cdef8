//! The `kms-lab` subcommands as library functions returning reports.

use std::str::FromStr;

use kmslab_core::catalog::{self, catalog_instances};
use kmslab_core::correspondence::{induced_trace, induced_trace_functional, tensor, tensor_operator};
use kmslab_core::fock::{build_fock_with_cap, fock_state, partial_trace_sum, represent, tail_bound};
use kmslab_core::linalg::{self, CMatrix};
use kmslab_core::states::{classify_wold, moment_matrix_psd, verify_kms, wold_decompose_weighted};
use kmslab_core::transfer::{self, heat_kernel, spectral_radius, transfer_matrix};
use kmslab_core::weights::{defining_property_residual, induce_weight, restrict_weight, solve_kms_states_general};
use kmslab_core::weights::{weight_stages_check, WeightFunctional};
use kmslab_core::{
    Beta, CoeffDynamics, Correspondence, KmsError, KmsState, ModuleOperator, ModuleVector, MonomialWord,
    StateEvaluator, ToeplitzElement, TraceVector, TransferMatrix, TwistedIsometryGroup, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::instance::{InstanceFile, Model};
use crate::words::WordLiteral;
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_EMPTY: i32 = 2;
pub const EXIT_GATE: i32 = 3;

pub const NO_CRITICAL_BETA: &str = "r(Z(β)) < 1 for all β ≥ 0";

const SWEEP_POINTS: usize = 21;
const STAGES_GATE: f64 = 1e-11;
const FRAME_GATE: f64 = 1e-10;
const FOCK_EXACT_GATE: f64 = 1e-10;
const MOMENT_UNITS: usize = 4;

/// Result of one command: the JSON report (absent on input errors), a
/// human summary and the process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Option<Value>,
    pub summary: String,
    pub code: i32,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.code == EXIT_OK
    }
}

/// `--beta` value: a number or `critical`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaChoice {
    Value(f64),
    Critical,
}

impl FromStr for BetaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("critical") || s.eq_ignore_ascii_case("c") {
            return Ok(BetaChoice::Critical);
        }
        let b: f64 = s.parse().map_err(|_| format!("expected a number or `critical`, found `{s}`"))?;
        if !b.is_finite() || b < 0.0 {
            return Err("β must be finite and >= 0".into());
        }
        Ok(BetaChoice::Value(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Target {
    Toeplitz,
    Pimsner,
}

impl Target {
    fn name(self) -> &'static str {
        match self {
            Target::Toeplitz => "toeplitz",
            Target::Pimsner => "pimsner",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub beta: Option<BetaChoice>,
    pub target: Target,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct EvaluateOptions {
    pub beta: Option<BetaChoice>,
    pub trace: Option<Vec<f64>>,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub beta: Option<BetaChoice>,
    pub seed: u64,
    pub max_degree: usize,
    pub fock_level: usize,
    pub cap_dimension: usize,
    pub pairs: usize,
    pub trace: Option<Vec<f64>>,
    pub tol: f64,
}

impl VerifyOptions {
    pub fn new(seed: u64) -> Self {
        VerifyOptions {
            beta: None,
            seed,
            max_degree: 3,
            fock_level: 6,
            cap_dimension: 4000,
            pairs: 50,
            trace: None,
            tol: 1e-9,
        }
    }
}

fn core(context: &str) -> impl Fn(KmsError) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

struct Context {
    file: InstanceFile,
    model: Model,
    group: TwistedIsometryGroup,
}

impl Context {
    fn new(file: &InstanceFile) -> Result<Self, CliError> {
        let model = file.model()?;
        let x = &model.correspondence;
        let h = model.dynamics.clone().unwrap_or_else(|| CoeffDynamics::trivial(x.algebra()));
        let group = TwistedIsometryGroup::new(x, model.generator.clone(), h).map_err(core("coeff_dynamics"))?;
        Ok(Context { file: file.clone(), model, group })
    }

    fn x(&self) -> &Correspondence {
        &self.model.correspondence
    }

    fn twisted(&self) -> bool {
        !self.group.is_untwisted()
    }

    fn weights(&self, beta: f64) -> Vec<f64> {
        self.group.coefficient_dynamics().partition_weights(beta)
    }

    fn echo(&self) -> Value {
        serde_json::to_value(&self.file).expect("instance files serialize")
    }

    fn critical(&self, tol: f64) -> Result<Option<f64>, CliError> {
        transfer::critical_beta(self.x(), &self.model.generator, tol).map_err(core("critical β"))
    }

    /// Flag, then file, then `β_c`.
    fn beta(&self, choice: Option<BetaChoice>, tol: f64) -> Result<f64, CliError> {
        match choice.or(self.model.beta.map(BetaChoice::Value)).unwrap_or(BetaChoice::Critical) {
            BetaChoice::Value(b) => Ok(b),
            BetaChoice::Critical => self.critical(tol)?.ok_or_else(|| CliError::Empty(NO_CRITICAL_BETA.into())),
        }
    }

    fn transfer(&self, beta: f64) -> Result<TransferMatrix, CliError> {
        transfer_matrix(self.x(), &self.model.generator, beta).map_err(core("transfer matrix"))
    }

    /// Coefficients of a KMS state at `β` for `target`.
    fn solve(&self, beta: f64, target: Target, tol: f64) -> Result<Option<Vec<f64>>, CliError> {
        if self.twisted() {
            let sol = solve_kms_states_general(self.x(), &self.group, beta, tol).map_err(core("solver"))?;
            let phi = match target {
                Target::Toeplitz => sol.toeplitz,
                Target::Pimsner => sol.cuntz_pimsner,
            };
            return Ok(phi.map(|p| p.coeffs().to_vec()));
        }
        let z = self.transfer(beta)?;
        let alg = self.x().algebra();
        let t = match target {
            Target::Toeplitz => transfer::subinvariant_solver_tol(&z, alg, tol),
            Target::Pimsner => transfer::invariant_solver_tol(&z, alg, tol),
        };
        Ok(t.map(|t| t.coeffs().to_vec()))
    }

    /// `--trace`, then the file, then the subinvariant solver.
    fn coefficients(&self, beta: f64, flag: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, &'static str), CliError> {
        let n = self.x().num_blocks();
        if let Some(t) = flag {
            if t.len() != n || t.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CliError::Input(format!("--trace: expected {n} finite nonnegative entries")));
            }
            return Ok((t.to_vec(), "flag"));
        }
        if let Some(t) = &self.model.trace {
            return Ok((t.coeffs().to_vec(), "file"));
        }
        match self.solve(beta, Target::Toeplitz, tol)? {
            Some(c) => Ok((c, "solver")),
            None => Err(CliError::Empty(format!("no subinvariant trace at β = {beta}"))),
        }
    }

    fn state(&self, beta: f64, coeffs: Vec<f64>, degree: usize) -> Result<KmsState, CliError> {
        KmsState::new_unchecked(self.x(), self.group.clone(), Beta::Finite(beta), coeffs, degree).map_err(core("state"))
    }
}

fn matrix_json(z: &TransferMatrix) -> Value {
    json!(z.matrix().rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn zt(z: &TransferMatrix, t: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n).map(|v| (0..n).map(|w| z.entry(w, v) * t[w]).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn gate(name: &str, clause: &str, value: f64, bound: f64) -> (Value, bool) {
    let pass = value.is_finite() && value <= bound;
    (json!({"check": name, "clause": clause, "value": value, "gate": bound, "pass": pass}), pass)
}

fn empty(command: &str, message: String) -> Outcome {
    Outcome {
        report: Some(json!({"command": command, "result": "none", "reason": message})),
        summary: message,
        code: EXIT_EMPTY,
    }
}

/// Maps errors to outcomes: empty answers keep a report, input errors do not.
pub fn finish(command: &str, r: Result<Outcome, CliError>) -> Outcome {
    match r {
        Ok(o) => o,
        Err(CliError::Empty(m)) => empty(command, m),
        Err(e) => Outcome { report: None, summary: e.to_string(), code: EXIT_INPUT },
    }
}

pub fn critical_beta(file: &InstanceFile, tol: f64) -> Outcome {
    finish("critical-beta", critical_beta_inner(file, tol))
}

fn critical_beta_inner(file: &InstanceFile, tol: f64) -> Result<Outcome, CliError> {
    let ctx = Context::new(file)?;
    ctx.model.generator.check_positive_energy().map_err(core("generator.slots"))?;
    let bc = ctx.critical(tol)?;
    let top = match bc {
        Some(b) if b > 0.0 => 2.0 * b,
        _ => 2.0,
    };
    let mut sweep = Vec::with_capacity(SWEEP_POINTS);
    for k in 0..SWEEP_POINTS {
        let beta = top * k as f64 / (SWEEP_POINTS - 1) as f64;
        let r = spectral_radius(&ctx.transfer(beta)?).radius;
        sweep.push(json!({"beta": beta, "radius": r}));
    }
    let mut report = json!({
        "command": "critical-beta",
        "instance": ctx.echo(),
        "tol": tol,
        "clause": "critical inverse temperature solves r(Z(β)) = 1",
    });
    let o = report.as_object_mut().expect("object");
    let (summary, code) = match bc {
        Some(b) => {
            let z = ctx.transfer(b)?;
            let root = spectral_radius(&z);
            o.insert("result".into(), json!("found"));
            o.insert("beta_c".into(), json!(b));
            o.insert("radius_at_beta_c".into(), json!(root.radius));
            o.insert("transfer_matrix".into(), matrix_json(&z));
            o.insert(
                "spectral".into(),
                json!({"radius": root.radius, "lower": root.lower, "upper": root.upper, "perron_vector": root.vector}),
            );
            (format!("β_c = {b:.10}, r(Z(β_c)) = {:.12}", root.radius), EXIT_OK)
        }
        None => {
            o.insert("result".into(), json!("none"));
            o.insert("reason".into(), json!(NO_CRITICAL_BETA));
            (NO_CRITICAL_BETA.to_string(), EXIT_EMPTY)
        }
    };
    o.insert("sweep".into(), json!(sweep));
    Ok(Outcome { report: Some(report), summary, code })
}

pub fn solve(file: &InstanceFile, opts: &SolveOptions) -> Outcome {
    finish("solve", solve_inner(file, opts))
}

fn solve_inner(file: &InstanceFile, opts: &SolveOptions) -> Result<Outcome, CliError> {
    let ctx = Context::new(file)?;
    let beta = ctx.beta(opts.beta, opts.tol)?;
    let z = ctx.transfer(beta)?;
    let root = spectral_radius(&z);
    let bc = if ctx.model.generator.positive_energy() { ctx.critical(opts.tol)? } else { None };
    let clause = match opts.target {
        Target::Toeplitz => {
            "KMS states of the Toeplitz algebra correspond to subinvariant traces Tr_τ(a e^{-βD}) ≤ τ(a)"
        }
        Target::Pimsner => "a KMS state descends to the Cuntz-Pimsner algebra if and only if its trace is invariant",
    };
    let mut report = json!({
        "command": "solve",
        "instance": ctx.echo(),
        "beta": beta,
        "target": opts.target.name(),
        "tol": opts.tol,
        "clause": clause,
        "positive_energy": ctx.model.generator.positive_energy(),
        "critical_beta": bc,
        "transfer_matrix": matrix_json(&z),
        "spectral": {"radius": root.radius, "lower": root.lower, "upper": root.upper},
    });
    let o = report.as_object_mut().expect("object");
    let Some(t) = ctx.solve(beta, opts.target, opts.tol)? else {
        o.insert("result".into(), json!("none"));
        let summary = format!("no {} KMS state at β = {beta}", opts.target.name());
        return Ok(Outcome { report: Some(report), summary, code: EXIT_EMPTY });
    };
    let weights = ctx.weights(beta);
    let ft = zt(&z, &t);
    let scale = t.iter().copied().fold(1.0, f64::max);
    let residuals = json!({
        "mass": (dot(&t, &weights) - 1.0).abs(),
        "subinvariance_excess": max_of(ft.iter().zip(&t).map(|(a, b)| a - b)),
        "invariance": max_of(ft.iter().zip(&t).map(|(a, b)| (a - b).abs())),
        "scale": scale,
    });
    let tau = TraceVector::new(t.clone()).map_err(core("solution"))?;
    let wold = wold_decompose_weighted(&tau, &z, &weights).map_err(core("Wold decomposition"))?;
    let kind = classify_wold(&wold);
    o.insert("result".into(), json!("state"));
    o.insert(if ctx.twisted() { "coefficients" } else { "trace" }.into(), json!({"t": t}));
    o.insert("residuals".into(), residuals);
    o.insert(
        "wold".into(),
        json!({
            "finite": wold.finite.coeffs(),
            "infinite": wold.infinite.coeffs(),
            "tau0": wold.tau0.coeffs(),
            "lambda": wold.lambda,
            "clause": "every KMS state is a unique convex combination of finite and infinite type states",
        }),
    );
    o.insert("type".into(), json!(kind.to_string()));
    let summary = format!("{} state at β = {beta}: t = {t:?}, type {kind}", opts.target.name());
    Ok(Outcome { report: Some(report), summary, code: EXIT_OK })
}

pub fn evaluate(file: &InstanceFile, words: &[WordLiteral], opts: &EvaluateOptions) -> Outcome {
    finish("evaluate", evaluate_inner(file, words, opts))
}

fn evaluate_inner(file: &InstanceFile, words: &[WordLiteral], opts: &EvaluateOptions) -> Result<Outcome, CliError> {
    let ctx = Context::new(file)?;
    let x = ctx.x();
    let parsed = words.iter().enumerate().map(|(i, w)| w.word(x, i)).collect::<Result<Vec<MonomialWord>, _>>()?;
    let beta = ctx.beta(opts.beta, opts.tol)?;
    let (coeffs, source) = ctx.coefficients(beta, opts.trace.as_deref(), opts.tol)?;
    let degree = words.iter().map(WordLiteral::len).max().unwrap_or(0);
    let phi = ctx.state(beta, coeffs.clone(), degree)?;
    let mut values = Vec::with_capacity(parsed.len());
    for (i, w) in parsed.iter().enumerate() {
        let v = phi.evaluate_word(w).map_err(core(&format!("words[{i}]")))?;
        values.push(json!({
            "index": i,
            "creations": w.left.len(),
            "annihilations": w.right.len(),
            "balanced": w.is_balanced(),
            "value": [v.re, v.im],
        }));
    }
    let summary = format!("evaluated {} words at β = {beta}", values.len());
    let report = json!({
        "command": "evaluate",
        "instance": ctx.echo(),
        "beta": beta,
        "trace": {"t": coeffs, "source": source},
        "clause": "φ(T_ξ T*_η) = τ(⟨η, e^{-βD}ξ⟩) on balanced words, 0 otherwise",
        "values": values,
    });
    Ok(Outcome { report: Some(report), summary, code: EXIT_OK })
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    let mut m = linalg::zeros(r, c);
    m.mapv_inplace(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m
}

fn random_vector(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleVector {
    let blocks = (0..x.num_blocks()).map(|w| random_matrix(rng, x.row_dim(w), x.algebra().dim(w))).collect();
    ModuleVector::new(x, blocks).expect("shapes match")
}

fn random_positive(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleOperator {
    let blocks = (0..x.num_blocks())
        .map(|w| {
            let a = random_matrix(rng, x.row_dim(w), x.row_dim(w));
            a.dot(&linalg::dagger(&a))
        })
        .collect();
    ModuleOperator::new(x, blocks).expect("shapes match")
}

/// Word of total degree `total` with a random split into creations and
/// annihilations.
fn random_word(rng: &mut ChaCha8Rng, x: &Correspondence, total: usize) -> MonomialWord {
    let m = rng.gen_range(0..=total);
    MonomialWord::new(
        (0..m).map(|_| random_vector(rng, x)).collect(),
        (0..total - m).map(|_| random_vector(rng, x)).collect(),
    )
}

/// Largest relative KMS residual over `pairs` random pairs whose product
/// has total degree at most `degree`.
pub fn kms_residual_suite(phi: &KmsState, rng: &mut ChaCha8Rng, pairs: usize, degree: usize) -> Result<f64, KmsError> {
    let x = phi.correspondence().clone();
    let p = phi.powers();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let total = rng.gen_range(0..=degree);
        let a = rng.gen_range(0..=total);
        let xw = ToeplitzElement::from_word(&random_word(rng, &x, a), p)?;
        let yw = ToeplitzElement::from_word(&random_word(rng, &x, total - a), p)?;
        let scale = phi.evaluate(&xw.mul(&yw, p)?)?.norm().max(1.0);
        worst = worst.max(verify_kms(phi, &xw, &yw)? / scale);
    }
    Ok(worst)
}

/// Words of degree at most two in creation and annihilation operators of
/// (at most [`MOMENT_UNITS`]) canonical basis vectors.
pub fn moment_words(
    x: &Correspondence,
    rng: &mut ChaCha8Rng,
    phi: &KmsState,
) -> Result<Vec<ToeplitzElement>, KmsError> {
    let mut units = x.matrix_units();
    while units.len() > MOMENT_UNITS {
        let k = rng.gen_range(0..units.len());
        units.remove(k);
    }
    let p = phi.powers();
    let mut letters = Vec::new();
    for u in &units {
        letters.push(ToeplitzElement::creation(u));
        letters.push(ToeplitzElement::annihilation(u));
    }
    let mut words = vec![ToeplitzElement::unit(p)];
    words.extend(letters.iter().cloned());
    for a in &letters {
        for b in &letters {
            words.push(a.mul(b, p)?);
        }
    }
    Ok(words)
}

pub fn verify(file: &InstanceFile, opts: &VerifyOptions) -> Outcome {
    finish("verify", verify_inner(file, opts))
}

fn verify_inner(file: &InstanceFile, opts: &VerifyOptions) -> Result<Outcome, CliError> {
    let ctx = Context::new(file)?;
    let x = ctx.x().clone();
    let d = ctx.model.generator.clone();
    let beta = ctx.beta(opts.beta, opts.tol)?;
    let (coeffs, source) = ctx.coefficients(beta, opts.trace.as_deref(), opts.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let tol = opts.tol;
    let phi = ctx.state(beta, coeffs.clone(), opts.max_degree.max(4))?;
    let z = ctx.transfer(beta)?;
    let weights = ctx.weights(beta);
    let mut checks = Vec::new();
    let mut all = true;
    let mut push = |(v, ok): (Value, bool)| {
        all &= ok;
        checks.push(v);
    };

    let kms = kms_residual_suite(&phi, &mut rng, opts.pairs, opts.max_degree).map_err(core("KMS residuals"))?;
    push(gate("kms_residual", "φ(xy) = φ(y γ_{iβ}(x)) on analytic words", kms, tol));

    let mass = (dot(&coeffs, &weights) - 1.0).abs();
    push(gate("normalization", "φ(1) = 1", mass, tol));
    let scale = coeffs.iter().copied().fold(1.0, f64::max);
    let excess = phi.subinvariance_excess().map_err(core("subinvariance"))?.max(0.0);
    push(gate("subinvariance", "Tr_τ(a e^{-βD}) ≤ τ(a) for a ≥ 0", excess, tol * scale));

    let words = moment_words(&x, &mut rng, &phi).map_err(core("moment words"))?;
    let min_eig = moment_matrix_psd(&phi, &words).map_err(core("moment matrix"))?;
    push(gate("moment_psd", "φ(w*w) ≥ 0 on words of degree ≤ 2", (-min_eig).max(0.0), tol));

    let stages = stages_section(&x, &d, beta, &coeffs, &mut rng).map_err(core("induction in stages"))?;
    for g in stages {
        push(g);
    }

    let weights_section = if ctx.twisted() {
        let (sec, gates) = weights_checks(&ctx, &phi, beta, &mut rng).map_err(core("weights"))?;
        for g in gates {
            push(g);
        }
        sec
    } else {
        json!({"skipped": "no coefficient dynamics"})
    };

    let root = spectral_radius(&z);
    let fock = if ctx.twisted() {
        json!({"skipped": "Fock densities use the untwisted generator"})
    } else if root.radius >= 1.0 {
        json!({"skipped": format!("r(Z(β)) = {} is not < 1", root.radius)})
    } else {
        match fock_section(&ctx, &z, beta, &coeffs, opts, &mut rng) {
            Ok(FockSection::Ran(sec, gates)) => {
                for g in gates {
                    push(g);
                }
                sec
            }
            Ok(FockSection::Skipped(why)) => json!({"skipped": why}),
            Err(e) => return Err(e),
        }
    };

    let summary = format!(
        "{} at β = {beta}: {} checks, {}",
        if all { "PASS" } else { "FAIL" },
        checks.len(),
        if all { "all gates pass".to_string() } else { failed_names(&checks) }
    );
    let report = json!({
        "command": "verify",
        "instance": ctx.echo(),
        "beta": beta,
        "seed": opts.seed,
        "max_degree": opts.max_degree,
        "fock_level": opts.fock_level,
        "cap_dimension": opts.cap_dimension,
        "pairs": opts.pairs,
        "tol": tol,
        "trace": {"t": coeffs, "source": source},
        "transfer_matrix": matrix_json(&z),
        "spectral": {"radius": root.radius, "lower": root.lower, "upper": root.upper},
        "moment_min_eigenvalue": min_eig,
        "checks": checks,
        "weights": weights_section,
        "fock": fock,
        "pass": all,
    });
    Ok(Outcome { report: Some(report), summary, code: if all { EXIT_OK } else { EXIT_GATE } })
}

fn failed_names(checks: &[Value]) -> String {
    let names: Vec<&str> =
        checks.iter().filter(|c| c["pass"] == json!(false)).filter_map(|c| c["check"].as_str()).collect();
    format!("failed: {}", names.join(", "))
}

fn stages_section(
    x: &Correspondence,
    d: &kmslab_core::Generator,
    beta: f64,
    coeffs: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(Value, bool)>, KmsError> {
    let tau = TraceVector::new(coeffs.to_vec())?;
    let tp = tensor(x, x)?;
    let hk = heat_kernel(d, beta);
    let s = random_positive(rng, x);
    let lhs = induced_trace(&tau, &tensor_operator(&tp, x, x, &s, &hk)?)?;
    let rhs = induced_trace(&induced_trace_functional(&tau, &hk, x)?, &s)?;
    let rel = (lhs - rhs).norm() / rhs.norm().max(1.0);

    let z = transfer_matrix(x, d, beta)?;
    let z2 = transfer_matrix(tp.correspondence(), &d.tensor(&tp, x, x, d), beta)?;
    let zz = z.matrix().dot(z.matrix());
    let scale = zz.iter().copied().fold(1.0, f64::max);
    let comp = max_of(zz.iter().zip(z2.matrix().iter()).map(|(a, b)| (a - b).abs())) / scale;
    Ok(vec![
        gate("induction_in_stages", "Tr_τ^{X⊗Y}(S⊗T) = Tr_{τ_T}^X(S)", rel, STAGES_GATE),
        gate("transfer_composition", "F for X⊗X equals F∘F", comp, STAGES_GATE),
    ])
}

fn weights_checks(
    ctx: &Context,
    phi: &KmsState,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Value, Vec<(Value, bool)>), KmsError> {
    let x = ctx.x();
    let u = &ctx.group;
    let f = phi.functional()?;
    let kappa = induce_weight(&f, x, u)?;
    let mut frame = x.frame();
    frame.extend(x.matrix_units());
    let defining = defining_property_residual(&kappa, &f, x, u, &frame)?;
    let mut gates =
        vec![gate("weight_defining_property", "κ(θ_{ξ,ξ}) = φ(⟨U_{iβ/2}ξ, U_{iβ/2}ξ⟩)", defining, FRAME_GATE)];
    let round_trip = match x.check_full() {
        Ok(()) => {
            let back = restrict_weight(&kappa, x, u, beta)?;
            let scale = f.coeffs().iter().copied().fold(1.0, f64::max);
            let r = max_of(back.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).abs())) / scale;
            gates.push(gate("weight_round_trip", "restricting the induced weight recovers φ", r, 1e-9));
            Some(r)
        }
        Err(_) => None,
    };
    let ops: Vec<ModuleOperator> = (0..3).map(|_| random_positive(rng, x)).collect();
    let stages = weight_stages_check(x, x, u, u, &f, &ops)?;
    let scale = ops.iter().map(|s| kappa.eval(s).map(|v| v.norm())).collect::<Result<Vec<_>, _>>()?;
    let stages_rel = stages / scale.into_iter().fold(1.0, f64::max);
    gates.push(gate("weight_stages", "κ^{U⊗V}_φ(S⊗1) = κ^U_ψ(S)", stages_rel, 1e-9));
    let sec = json!({
        "defining_property": defining,
        "round_trip": round_trip,
        "stages": stages_rel,
        "coefficients": f.coeffs(),
    });
    Ok((sec, gates))
}

enum FockSection {
    Ran(Value, Vec<(Value, bool)>),
    Skipped(String),
}

fn fock_section(
    ctx: &Context,
    z: &TransferMatrix,
    beta: f64,
    coeffs: &[f64],
    opts: &VerifyOptions,
    rng: &mut ChaCha8Rng,
) -> Result<FockSection, CliError> {
    let x = ctx.x();
    let d = &ctx.model.generator;
    let n = opts.fock_level;
    let tau = TraceVector::new(coeffs.to_vec()).map_err(core("fock"))?;
    let wold = match wold_decompose_weighted(&tau, z, &ctx.weights(beta)) {
        Ok(w) => w,
        Err(KmsError::NotSubinvariant(m)) => {
            return Ok(FockSection::Skipped(format!("trace is not subinvariant: {m}")))
        }
        Err(e) => return Err(core("fock")(e)),
    };
    let f = match build_fock_with_cap(x, n, opts.cap_dimension) {
        Ok(f) => f,
        Err(KmsError::Resource(m)) => return Ok(FockSection::Skipped(format!("dimension cap: {m}"))),
        Err(e) => return Err(core("fock")(e)),
    };
    let mut run = || -> Result<(Value, Vec<(Value, bool)>), KmsError> {
        let t0 = &wold.tau0;
        let phi_n = fock_state(t0, &f, d, beta)?;
        let tb = tail_bound(t0, x, d, beta, n)?;
        let degree = n.min(3);
        let probe = ctx.state(beta, coeffs.to_vec(), degree).map_err(|e| KmsError::Invalid(e.to_string()))?;
        let mut exact_worst: f64 = 0.0;
        let mut tail_excess: f64 = f64::NEG_INFINITY;
        let mut worst_gap: f64 = 0.0;
        let samples = 10;
        for _ in 0..samples {
            let m = rng.gen_range(0..=degree);
            let w = MonomialWord::new(
                (0..m).map(|_| random_vector(rng, x)).collect(),
                (0..m).map(|_| random_vector(rng, x)).collect(),
            );
            let el = ToeplitzElement::from_word(&w, probe.powers())?;
            let spatial = phi_n.evaluate(&represent(&el, &f)?);
            let partial = partial_trace_sum(t0, x, d, beta, n - m)?;
            let exact =
                KmsState::new_unchecked(x, ctx.group.clone(), Beta::Finite(beta), partial.coeffs().to_vec(), m)?;
            let e = exact.evaluate(&el)?;
            exact_worst = exact_worst.max((spatial - e).norm() / e.norm().max(1.0));
            let a = probe.evaluate(&el)?;
            let gap = (spatial - a).norm();
            worst_gap = worst_gap.max(gap);
            tail_excess = tail_excess.max(gap - el.norm_bound() * tb.bound);
        }
        let sec = json!({
            "level": n,
            "dimension": f.total_dim(),
            "radius": phi_n.radius(),
            "tau0": t0.coeffs(),
            "tail_bound": tb.bound,
            "rho_upper": tb.rho_upper,
            "samples": samples,
            "exact_residual": exact_worst,
            "max_gap": worst_gap,
        });
        let gates = vec![
            gate(
                "fock_partial_sum",
                "Φ_N agrees with the state of the partial sum Σ_{k≤N-m} F^k τ0",
                exact_worst,
                FOCK_EXACT_GATE,
            ),
            gate("fock_tail_bound", "|Φ_N(K) − φ(K)| ≤ ‖K‖ tail_bound(N)", tail_excess.max(0.0), 1e-12),
        ];
        Ok((sec, gates))
    };
    let (sec, gates) = run().map_err(core("fock"))?;
    Ok(FockSection::Ran(sec, gates))
}

/// Names accepted by [`catalog_file`].
pub fn catalog_names() -> Vec<String> {
    let mut names: Vec<String> = catalog_instances().into_iter().map(|i| i.name).collect();
    names.push("acyclic".into());
    names.push("twisted".into());
    names
}

/// Instance file for a catalog name.
pub fn catalog_file(name: &str) -> Result<InstanceFile, CliError> {
    match name {
        "acyclic" => {
            let (x, d) = catalog::acyclic(3).map_err(core("acyclic"))?;
            Ok(InstanceFile::from_parts(&x, &d, None))
        }
        "twisted" => {
            let inst = (0..)
                .map(|s| catalog::random_instance(s, 2, 2, 1).expect("random instances are valid"))
                .find(|i| i.dynamics.as_ref().is_some_and(|h| !h.is_trivial()))
                .expect("some seed carries coefficient dynamics");
            Ok(InstanceFile::from_parts(&inst.correspondence, &inst.generator, inst.dynamics.as_ref()))
        }
        _ => catalog::catalog_instance(name)
            .map(|i| InstanceFile::from_parts(&i.correspondence, &i.generator, i.dynamics.as_ref()))
            .ok_or_else(|| CliError::Input(format!("unknown catalog instance `{name}`; try --list"))),
    }
}
