//! KMS, ground and quasi-free states on the Toeplitz algebra, the Wold
//! decomposition of subinvariant traces and the Cuntz–Pimsner criterion.

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::algebra::{AlgebraElement, BlockAlgebra, CoeffDynamics, KmsFunctional, TraceVector};
use crate::correspondence::{
    induced_trace_functional, inner_product, BimoduleOperator, Correspondence, ModuleOperator,
};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::powers::TensorPowers;
use crate::toeplitz::{MonomialWord, ToeplitzElement};
use crate::transfer::{self, apply_transpose, Generator, TransferMatrix};
use crate::weights::TwistedIsometryGroup;

/// Tolerance of the subinvariance and normalisation checks.
pub const STATE_TOL: f64 = 1e-9;

const WOLD_SQUARINGS: usize = 64;
const WOLD_STOP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }
}

/// Anything that evaluates normal-ordered elements.
pub trait StateEvaluator {
    fn powers(&self) -> &TensorPowers;
    fn evaluate(&self, x: &ToeplitzElement) -> Result<C64>;
}

fn weighted_trace(coeffs: &[f64], blocks: &[CMatrix], density: &[CMatrix]) -> C64 {
    blocks
        .iter()
        .zip(density)
        .zip(coeffs)
        .map(|((k, g), &c)| if c == 0.0 || k.is_empty() { C64::new(0.0, 0.0) } else { linalg::trace(&k.dot(g)) * c })
        .sum()
}

/// `φ(K_{n,n}) = Σ_u c_u tr(K_u e^{-βG^{(n)}_u})`, zero off the diagonal.
#[derive(Clone, Debug)]
pub struct KmsState {
    powers: TensorPowers,
    group: TwistedIsometryGroup,
    beta: Beta,
    coeffs: Vec<f64>,
    densities: Vec<OnceLock<Vec<CMatrix>>>,
}

impl KmsState {
    /// The state of the trace `τ` for the quasi-free dynamics of `d`.
    pub fn new(x: &Correspondence, d: &Generator, beta: f64, tau: &TraceVector, max_degree: usize) -> Result<Self> {
        let group = TwistedIsometryGroup::untwisted(x, d.clone());
        Self::with_group(x, group, Beta::Finite(beta), tau.coeffs().to_vec(), max_degree)
    }

    /// General coefficients `c` for a twisted group; `c` must be a
    /// subinvariant state.
    pub fn with_group(
        x: &Correspondence,
        group: TwistedIsometryGroup,
        beta: Beta,
        coeffs: Vec<f64>,
        max_degree: usize,
    ) -> Result<Self> {
        let state = Self::new_unchecked(x, group, beta, coeffs, max_degree)?;
        let mass = state.mass();
        if (mass - 1.0).abs() > STATE_TOL {
            return Err(KmsError::Invalid(format!("coefficients have mass {mass}, not 1")));
        }
        if let Beta::Finite(_) = beta {
            let excess = state.subinvariance_excess()?;
            if excess > STATE_TOL {
                return Err(KmsError::NotSubinvariant(format!("(Fτ − τ) reaches {excess:e}")));
            }
        }
        Ok(state)
    }

    /// Skips the normalisation and subinvariance checks.
    pub fn new_unchecked(
        x: &Correspondence,
        group: TwistedIsometryGroup,
        beta: Beta,
        coeffs: Vec<f64>,
        max_degree: usize,
    ) -> Result<Self> {
        if coeffs.len() != x.num_blocks() {
            return Err(KmsError::Shape("one coefficient per block required".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(KmsError::Invalid("coefficients must be finite and >= 0".into()));
        }
        if let Beta::Finite(b) = beta {
            if !b.is_finite() {
                return Err(KmsError::Invalid("finite β expected".into()));
            }
        }
        let powers = TensorPowers::new(x, max_degree)?;
        let densities = (0..=max_degree).map(|_| OnceLock::new()).collect();
        Ok(KmsState { powers, group, beta, coeffs, densities })
    }

    /// Ground state of `τ` (`β = ∞`).
    pub fn ground(x: &Correspondence, d: &Generator, tau: &TraceVector, max_degree: usize) -> Result<Self> {
        let group = TwistedIsometryGroup::untwisted(x, d.clone());
        Self::with_group(x, group, Beta::Infinite, tau.coeffs().to_vec(), max_degree)
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn trace(&self) -> TraceVector {
        TraceVector::from_raw(self.coeffs.clone())
    }

    pub fn group(&self) -> &TwistedIsometryGroup {
        &self.group
    }

    pub fn correspondence(&self) -> &Correspondence {
        self.powers.base()
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        self.powers.base().algebra()
    }

    pub fn positive_energy(&self) -> bool {
        self.group.generator().positive_energy()
    }

    fn partition_weights(&self) -> Vec<f64> {
        match self.beta {
            Beta::Finite(b) => self.group.coefficient_dynamics().partition_weights(b),
            Beta::Infinite => self.algebra().dim_weights(),
        }
    }

    /// `φ(1)`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().zip(self.partition_weights()).map(|(c, w)| c * w).sum()
    }

    pub fn transfer_matrix(&self) -> Result<TransferMatrix> {
        match self.beta {
            Beta::Finite(b) => transfer::transfer_matrix(self.correspondence(), self.group.generator(), b),
            Beta::Infinite => Err(KmsError::Invalid("no transfer matrix at β = ∞".into())),
        }
    }

    /// `max_v ((Fc)_v − c_v)`.
    pub fn subinvariance_excess(&self) -> Result<f64> {
        let z = self.transfer_matrix()?;
        let fc = apply_transpose(z.matrix(), &self.coeffs)?;
        Ok(fc.iter().zip(&self.coeffs).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max))
    }

    /// The restriction to `A` as a KMS functional.
    pub fn functional(&self) -> Result<KmsFunctional> {
        match self.beta {
            Beta::Finite(b) => KmsFunctional::new(b, self.group.coefficient_dynamics().clone(), self.coeffs.clone()),
            Beta::Infinite => Err(KmsError::Invalid("β = ∞ has no KMS functional".into())),
        }
    }

    /// `e^{-βG^{(n)}}` on level `n`.
    pub fn level_density(&self, n: usize) -> Result<&[CMatrix]> {
        let beta = self.beta.finite().ok_or_else(|| KmsError::Invalid("no density at β = ∞".into()))?;
        self.powers.check_level(n)?;
        if let Some(d) = self.densities[n].get() {
            return Ok(d);
        }
        let z = C64::new(-beta, 0.0);
        let op = self.powers.level_exponential(n, &self.group.generator().exp(z), &self.group.coeff_exp(z))?;
        let _ = self.densities[n].set(op.into_blocks());
        Ok(self.densities[n].get().expect("just set"))
    }

    /// `φ(T_ξ T*_η) = φ|_A(⟨η, U_{iβ}ξ⟩)` through tensor products of vectors.
    pub fn evaluate_word(&self, word: &MonomialWord) -> Result<C64> {
        if !word.is_balanced() {
            return Ok(C64::new(0.0, 0.0));
        }
        let n = word.left.len();
        let xi = self.powers.elementary(&word.left)?;
        let eta = self.powers.elementary(&word.right)?;
        match self.beta {
            Beta::Infinite => {
                if n > 0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let a = inner_product(&eta, &xi)?;
                Ok(crate::algebra::evaluate_trace(&self.trace(), &a)?)
            }
            Beta::Finite(_) => {
                let g = ModuleOperator::from_blocks(self.level_density(n)?.to_vec());
                let y = inner_product(&eta, &g.apply(&xi))?;
                Ok(self.coeffs.iter().zip(y.blocks()).map(|(&c, b)| linalg::trace(b) * c).sum())
            }
        }
    }
}

impl StateEvaluator for KmsState {
    fn powers(&self) -> &TensorPowers {
        &self.powers
    }

    fn evaluate(&self, x: &ToeplitzElement) -> Result<C64> {
        let mut total = C64::new(0.0, 0.0);
        for ((m, n), blocks) in x.components() {
            if m != n {
                continue;
            }
            match self.beta {
                Beta::Infinite => {
                    if n == 0 {
                        total += self.coeffs.iter().zip(blocks).map(|(&c, b)| linalg::trace(b) * c).sum::<C64>();
                    }
                }
                Beta::Finite(_) => total += weighted_trace(&self.coeffs, blocks, self.level_density(n)?),
            }
        }
        Ok(total)
    }
}

pub fn evaluate_kms_state(phi: &KmsState, word: &MonomialWord) -> Result<C64> {
    phi.evaluate_word(word)
}

/// `γ_z(K_{m,n}) = e^{izG^{(m)}} K e^{-izG^{(n)}}`.
pub fn gamma_apply(
    x: &ToeplitzElement,
    z: C64,
    group: &TwistedIsometryGroup,
    p: &TensorPowers,
) -> Result<ToeplitzElement> {
    let top = x.max_level();
    p.check_level(top)?;
    let iz = C64::i() * z;
    let fwd_edge = group.generator().exp(iz);
    let bwd_edge = group.generator().exp(-iz);
    let (fwd_c, bwd_c) = (group.coeff_exp(iz), group.coeff_exp(-iz));
    let mut fwd = Vec::with_capacity(top + 1);
    let mut bwd = Vec::with_capacity(top + 1);
    for n in 0..=top {
        fwd.push(p.level_exponential(n, &fwd_edge, &fwd_c)?);
        bwd.push(p.level_exponential(n, &bwd_edge, &bwd_c)?);
    }
    let mut out = ToeplitzElement::zero();
    for ((m, n), blocks) in x.components() {
        let moved = blocks.iter().enumerate().map(|(u, k)| fwd[m].block(u).dot(k).dot(bwd[n].block(u))).collect();
        out = out.add(&ToeplitzElement::from_component(p, m, n, moved)?);
    }
    Ok(out)
}

/// `|φ(xy) − φ(y γ_{iβ}(x))|`.
pub fn verify_kms(phi: &KmsState, x: &ToeplitzElement, y: &ToeplitzElement) -> Result<f64> {
    let beta = phi.beta.finite().ok_or_else(|| KmsError::Invalid("the KMS identity needs a finite β".into()))?;
    let p = &phi.powers;
    let lhs = phi.evaluate(&x.mul(y, p)?)?;
    let gx = gamma_apply(x, C64::new(0.0, beta), &phi.group, p)?;
    let rhs = phi.evaluate(&y.mul(&gx, p)?)?;
    Ok((lhs - rhs).norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct WoldDecomposition {
    pub finite: TraceVector,
    pub infinite: TraceVector,
    pub tau0: TraceVector,
    pub lambda: f64,
}

/// `τ = τ_finite + τ_infinite` with `τ_infinite = lim (Z^T)^n τ`.
pub fn wold_decompose(tau: &TraceVector, z: &TransferMatrix, algebra: &BlockAlgebra) -> Result<WoldDecomposition> {
    if algebra.num_blocks() != tau.len() {
        return Err(KmsError::Shape("trace and algebra disagree".into()));
    }
    wold_decompose_weighted(tau, z, &algebra.dim_weights())
}

/// Same splitting with the mass `Σ_v weights_v c_v` used for `λ`.
pub fn wold_decompose_weighted(tau: &TraceVector, z: &TransferMatrix, weights: &[f64]) -> Result<WoldDecomposition> {
    let t = tau.coeffs();
    let n = t.len();
    if z.dim() != n || weights.len() != n {
        return Err(KmsError::Shape("trace, transfer matrix and weights disagree".into()));
    }
    let ft = apply_transpose(z.matrix(), t)?;
    let scale = t.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let excess = ft.iter().zip(t).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    if excess > STATE_TOL * scale.max(1.0) {
        return Err(KmsError::NotSubinvariant(format!("(Fτ − τ) reaches {excess:e}")));
    }
    let tau0: Vec<f64> = t.iter().zip(&ft).map(|(a, b)| (a - b).max(0.0)).collect();

    // restrict to the support of τ, which F maps into itself
    let support: Vec<usize> = (0..n).filter(|&v| t[v] > 0.0).collect();
    let k = support.len();
    let mut p = Array2::from_shape_fn((k, k), |(i, j)| z.matrix()[[support[j], support[i]]]);
    let ts: Vec<f64> = support.iter().map(|&v| t[v]).collect();
    let apply = |p: &Array2<f64>| -> Vec<f64> {
        (0..k).map(|i| (0..k).map(|j| p[[i, j]] * ts[j]).sum::<f64>().clamp(0.0, ts[i])).collect()
    };
    let mut limit = apply(&p);
    for _ in 0..WOLD_SQUARINGS {
        p = p.dot(&p);
        if !p.iter().all(|x| x.is_finite()) {
            return Err(KmsError::NotSubinvariant("powers of F diverge on the support of τ".into()));
        }
        let next = apply(&p);
        let diff: f64 = next.iter().zip(&limit).map(|(a, b)| (a - b).abs()).sum();
        limit = next;
        if diff < WOLD_STOP * scale {
            break;
        }
    }
    let mut infinite = vec![0.0; n];
    for (i, &v) in support.iter().enumerate() {
        infinite[v] = if limit[i] <= 1e-15 * scale { 0.0 } else { limit[i] };
    }
    let finite: Vec<f64> = t.iter().zip(&infinite).map(|(a, b)| (a - b).max(0.0)).collect();
    let d = weights;
    let mass: f64 = t.iter().zip(d).map(|(a, b)| a * b).sum();
    let fmass: f64 = finite.iter().zip(d).map(|(a, b)| a * b).sum();
    let lambda = if mass > 0.0 { fmass / mass } else { 0.0 };
    Ok(WoldDecomposition {
        finite: TraceVector::from_raw(finite),
        infinite: TraceVector::from_raw(infinite),
        tau0: TraceVector::from_raw(tau0),
        lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateType {
    Finite,
    Infinite,
    Mixed,
}

impl std::fmt::Display for StateType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StateType::Finite => "finite",
            StateType::Infinite => "infinite",
            StateType::Mixed => "mixed",
        })
    }
}

pub fn classify_wold(w: &WoldDecomposition) -> StateType {
    if w.lambda >= 1.0 - STATE_TOL {
        StateType::Finite
    } else if w.lambda <= STATE_TOL {
        StateType::Infinite
    } else {
        StateType::Mixed
    }
}

pub fn classify_type(phi: &KmsState) -> Result<StateType> {
    let z = phi.transfer_matrix()?;
    Ok(classify_wold(&wold_decompose(&phi.trace(), &z, phi.algebra())?))
}

/// Blocks `v` with `1_v ∈ I_X = i_X^{-1}(K(X))`. Every block qualifies,
/// because `K(X) = B(X)` for a finitely generated module.
pub fn ideal_ix(x: &Correspondence) -> Vec<bool> {
    vec![true; x.num_blocks()]
}

/// `Fτ = τ` on `I_X`.
pub fn check_ox_descends(phi: &KmsState) -> Result<bool> {
    check_ox_descends_tol(phi, STATE_TOL)
}

pub fn check_ox_descends_tol(phi: &KmsState, tol: f64) -> Result<bool> {
    if phi.beta == Beta::Infinite {
        // Tr_τ(a e^{-∞D}) = 0 would force τ = 0 on I_X
        let ix = ideal_ix(phi.correspondence());
        return Ok(phi.coeffs.iter().zip(ix).all(|(&c, inside)| !inside || c == 0.0));
    }
    let z = phi.transfer_matrix()?;
    let fc = apply_transpose(z.matrix(), &phi.coeffs)?;
    let ix = ideal_ix(phi.correspondence());
    Ok(fc.iter().zip(&phi.coeffs).zip(ix).all(|((a, b), inside)| !inside || (a - b).abs() <= tol))
}

/// Generalized Fock state `φ_ω`: `ω` on `A`, zero on every word with a
/// creation or annihilation factor.
#[derive(Clone, Debug)]
pub struct GroundState {
    powers: TensorPowers,
    omega: Vec<CMatrix>,
}

/// `ω = tr(ρ ·)` for a positive density of trace one.
pub fn ground_state(x: &Correspondence, rho: &AlgebraElement, max_degree: usize) -> Result<GroundState> {
    rho.check_shape(x.algebra())?;
    if !rho.is_positive(1e-12) {
        return Err(KmsError::NotPositive("ground-state density must be positive".into()));
    }
    let mass: f64 = rho.blocks().iter().map(|b| linalg::trace(b).re).sum();
    if (mass - 1.0).abs() > STATE_TOL {
        return Err(KmsError::Invalid(format!("ground-state density has trace {mass}, not 1")));
    }
    Ok(GroundState { powers: TensorPowers::new(x, max_degree)?, omega: rho.blocks().to_vec() })
}

impl StateEvaluator for GroundState {
    fn powers(&self) -> &TensorPowers {
        &self.powers
    }

    fn evaluate(&self, x: &ToeplitzElement) -> Result<C64> {
        Ok(match x.component(0, 0) {
            Some(blocks) => blocks.iter().zip(&self.omega).map(|(a, r)| linalg::trace(&r.dot(a))).sum(),
            None => C64::new(0.0, 0.0),
        })
    }
}

/// How the sequence `τ_n` continues past the listed traces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    Constant,
    Geometric(f64),
}

/// `τ₀, τ₁, …` and positive bimodule maps `S₁, S₂, …`; the last `S` repeats
/// and an empty list means `S_n = 0`.
#[derive(Clone, Debug)]
pub struct QuasiFreeSpec {
    pub traces: Vec<TraceVector>,
    pub operators: Vec<BimoduleOperator>,
    pub tail: TailRule,
}

impl QuasiFreeSpec {
    pub fn trace_at(&self, n: usize) -> TraceVector {
        let last = self.traces.len() - 1;
        if n <= last {
            return self.traces[n].clone();
        }
        match self.tail {
            TailRule::Constant => self.traces[last].clone(),
            TailRule::Geometric(q) => self.traces[last].scaled(q.powi((n - last) as i32)),
        }
    }

    pub fn operator_at(&self, x: &Correspondence, n: usize) -> BimoduleOperator {
        debug_assert!(n >= 1);
        match self.operators.last() {
            None => BimoduleOperator::zero(x),
            Some(last) => self.operators.get(n - 1).unwrap_or(last).clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuasiFreeState {
    powers: TensorPowers,
    spec: QuasiFreeSpec,
    descends: bool,
}

impl QuasiFreeState {
    /// Equality `Tr_{τ_n}(π(·)S_n) = τ_{n-1}` on `I_X` at every level.
    pub fn descends_to_cuntz_pimsner(&self) -> bool {
        self.descends
    }

    pub fn spec(&self) -> &QuasiFreeSpec {
        &self.spec
    }
}

pub fn quasi_free_state(x: &Correspondence, spec: QuasiFreeSpec, max_degree: usize) -> Result<QuasiFreeState> {
    if spec.traces.is_empty() {
        return Err(KmsError::Invalid("τ₀ is required".into()));
    }
    if let TailRule::Geometric(q) = spec.tail {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(KmsError::Invalid("geometric tail ratio must be finite and >= 0".into()));
        }
    }
    for t in &spec.traces {
        if t.len() != x.num_blocks() {
            return Err(KmsError::Shape("trace length differs from the block count".into()));
        }
    }
    for s in &spec.operators {
        BimoduleOperator::new(x, s.slots().to_vec())?;
        if !s.is_positive(1e-10) {
            return Err(KmsError::NotPositive("quasi-free operators must be positive".into()));
        }
    }
    if !spec.traces[0].is_state(x.algebra(), STATE_TOL) {
        return Err(KmsError::Invalid("τ₀ must be a state".into()));
    }
    let ix = ideal_ix(x);
    let horizon = spec.traces.len().max(spec.operators.len()) + 1;
    let mut descends = true;
    for n in 1..=horizon {
        let lhs = induced_trace_functional(&spec.trace_at(n), &spec.operator_at(x, n), x)?;
        let rhs = spec.trace_at(n - 1);
        for v in 0..x.num_blocks() {
            let (a, b) = (lhs.coeffs()[v], rhs.coeffs()[v]);
            if a > b + STATE_TOL {
                return Err(KmsError::Incompatible(format!(
                    "Tr_τ{n}(π(·)S{n}) exceeds τ{} on block {v}: {a} > {b}",
                    n - 1
                )));
            }
            if ix[v] && (a - b).abs() > STATE_TOL {
                descends = false;
            }
        }
    }
    Ok(QuasiFreeState { powers: TensorPowers::new(x, max_degree)?, spec, descends })
}

impl StateEvaluator for QuasiFreeState {
    fn powers(&self) -> &TensorPowers {
        &self.powers
    }

    fn evaluate(&self, x: &ToeplitzElement) -> Result<C64> {
        let base = self.powers.base();
        let mut total = C64::new(0.0, 0.0);
        for ((m, n), blocks) in x.components() {
            if m != n {
                continue;
            }
            let tau = self.spec.trace_at(n);
            let ops: Vec<BimoduleOperator> = (1..=n).map(|k| self.spec.operator_at(base, k)).collect();
            let s = self.powers.tensor_bimodules(&ops)?.embed(self.powers.level(n));
            total += weighted_trace(tau.coeffs(), blocks, s.blocks());
        }
        Ok(total)
    }
}

/// Smallest eigenvalue of `G_{ij} = φ(w_i^* w_j)`.
pub fn moment_matrix_psd(phi: &dyn StateEvaluator, words: &[ToeplitzElement]) -> Result<f64> {
    let n = words.len();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let p = phi.powers();
    let mut g = linalg::zeros(n, n);
    for i in 0..n {
        let wi = words[i].adjoint();
        for j in 0..n {
            g[[i, j]] = phi.evaluate(&wi.mul(&words[j], p)?)?;
        }
    }
    let herm = (&g + &linalg::dagger(&g)).mapv(|z| z * 0.5);
    Ok(linalg::min_eigenvalue(&herm))
}

/// Diagnostic helper: the untwisted group of `d`.
pub fn untwisted_group(x: &Correspondence, d: &Generator) -> TwistedIsometryGroup {
    TwistedIsometryGroup::untwisted(x, d.clone())
}

/// Coefficient dynamics with every Hamiltonian zero.
pub fn trivial_dynamics(x: &Correspondence) -> CoeffDynamics {
    CoeffDynamics::trivial(x.algebra())
}
