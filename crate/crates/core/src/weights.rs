//! Nontrivial coefficient dynamics: twisted isometry groups on `X`, the
//! induced KMS weight on `B(X)`, restriction back to `A`, and the general
//! transfer operator on KMS functionals.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::algebra::{sigma_apply, AlgebraElement, CoeffDynamics, KmsFunctional};
use crate::correspondence::{
    inner_product, left_action, tensor, tensor_operator, theta, BimoduleOperator, Correspondence, ModuleOperator,
    ModuleVector,
};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::transfer::{self, Generator, TransferMatrix};

const RESTRICT_RESIDUAL_GATE: f64 = 1e-8;

/// `U_z(ξ)_w = e^{izG_w} ξ_w e^{-izH_w}` with
/// `G_w = ⊕_v (D^{(w,v)} ⊗ 1 + 1 ⊗ H_v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedIsometryGroup {
    d: Generator,
    h: CoeffDynamics,
}

impl TwistedIsometryGroup {
    pub fn new(x: &Correspondence, d: Generator, h: CoeffDynamics) -> Result<Self> {
        let n = x.num_blocks();
        if d.operator().slots().len() != n || h.hamiltonians().len() != n {
            return Err(KmsError::Shape("generator or coefficient dynamics do not match the module".into()));
        }
        for w in 0..n {
            for v in 0..n {
                let m = x.multiplicity(w, v);
                if d.slot(w, v).dim() != (m, m) {
                    return Err(KmsError::Shape(format!("generator slot ({w},{v}) must be {m}x{m}")));
                }
            }
            if h.hamiltonian(w).dim() != (x.algebra().dim(w), x.algebra().dim(w)) {
                return Err(KmsError::Shape(format!("coefficient Hamiltonian {w} has the wrong size")));
            }
        }
        Ok(TwistedIsometryGroup { d, h })
    }

    /// `H = 0`.
    pub fn untwisted(x: &Correspondence, d: Generator) -> Self {
        TwistedIsometryGroup { d, h: CoeffDynamics::trivial(x.algebra()) }
    }

    pub fn generator(&self) -> &Generator {
        &self.d
    }

    pub fn coefficient_dynamics(&self) -> &CoeffDynamics {
        &self.h
    }

    pub fn is_untwisted(&self) -> bool {
        self.h.is_trivial()
    }

    fn h_element(&self) -> AlgebraElement {
        AlgebraElement::from_blocks_unchecked(self.h.hamiltonians().to_vec())
    }

    /// `e^{zH}` as an element of `A`.
    pub fn coeff_exp(&self, z: C64) -> AlgebraElement {
        AlgebraElement::from_blocks_unchecked(
            self.h.hamiltonians().iter().map(|h| linalg::expm_hermitian(h, z)).collect(),
        )
    }

    /// `G` as an operator on `X`.
    pub fn total_generator(&self, x: &Correspondence) -> Result<ModuleOperator> {
        Ok(self.d.operator().embed(x).add(&left_action(x, &self.h_element())?))
    }

    /// `e^{zG}` on `X`.
    pub fn exp_g(&self, x: &Correspondence, z: C64) -> Result<ModuleOperator> {
        let edge = self.d.exp(z).embed(x);
        Ok(edge.compose(&left_action(x, &self.coeff_exp(z))?))
    }

    pub fn apply(&self, x: &Correspondence, z: C64, xi: &ModuleVector) -> Result<ModuleVector> {
        xi.check(x)?;
        let g = self.exp_g(x, C64::i() * z)?;
        let back = self.coeff_exp(-C64::i() * z);
        Ok(g.apply(xi).right_act(&back))
    }

    /// `γ_z(T) = e^{izG} T e^{-izG}` on `B(X)`.
    pub fn gamma(&self, x: &Correspondence, z: C64, t: &ModuleOperator) -> Result<ModuleOperator> {
        t.check(x)?;
        let fwd = self.exp_g(x, C64::i() * z)?;
        let bwd = self.exp_g(x, -C64::i() * z)?;
        Ok(fwd.compose(t).compose(&bwd))
    }
}

/// Anything that can be evaluated on `B(X)`.
pub trait WeightFunctional {
    fn eval(&self, t: &ModuleOperator) -> Result<C64>;
}

impl<F> WeightFunctional for F
where
    F: Fn(&ModuleOperator) -> C64,
{
    fn eval(&self, t: &ModuleOperator) -> Result<C64> {
        Ok(self(t))
    }
}

/// `κ(T) = Σ_w c_w tr(T_w e^{-βG_w})`.
#[derive(Clone, Debug)]
pub struct InducedWeight {
    beta: f64,
    coeffs: Vec<f64>,
    densities: Vec<CMatrix>,
}

impl InducedWeight {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `e^{-βG_w}`.
    pub fn densities(&self) -> &[CMatrix] {
        &self.densities
    }
}

impl WeightFunctional for InducedWeight {
    fn eval(&self, t: &ModuleOperator) -> Result<C64> {
        if t.blocks().len() != self.coeffs.len()
            || t.blocks().iter().zip(&self.densities).any(|(b, g)| b.dim() != g.dim())
        {
            return Err(KmsError::Shape("operator does not match the weight".into()));
        }
        Ok(t.blocks()
            .iter()
            .zip(&self.densities)
            .zip(&self.coeffs)
            .map(|((b, g), &c)| linalg::trace(&b.dot(g)) * c)
            .sum())
    }
}

/// `max |φ(xy) − φ(y σ_{iβ}(x))|` over matrix units, with `σ` from `h`.
fn kms_residual_against(phi: &KmsFunctional, h: &CoeffDynamics) -> Result<f64> {
    let alg = crate::algebra::BlockAlgebra::new(h.hamiltonians().iter().map(|m| m.nrows()).collect())?;
    let units = AlgebraElement::matrix_units(&alg);
    let z = C64::new(0.0, phi.beta());
    let mut worst: f64 = 0.0;
    for x in &units {
        let sx = sigma_apply(h, z, x)?;
        for y in &units {
            let lhs = phi.eval(&(x * y))?;
            let rhs = phi.eval(&(y * &sx))?;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

pub fn induce_weight(phi: &KmsFunctional, x: &Correspondence, u: &TwistedIsometryGroup) -> Result<InducedWeight> {
    if phi.coeffs().len() != x.num_blocks() {
        return Err(KmsError::Shape("functional does not match the module".into()));
    }
    let resid = kms_residual_against(phi, &u.h)?;
    let scale = phi.mass().max(1.0);
    if resid > 1e-9 * scale {
        return Err(KmsError::NotKms(resid));
    }
    let g = u.exp_g(x, C64::new(-phi.beta(), 0.0))?;
    Ok(InducedWeight { beta: phi.beta(), coeffs: phi.coeffs().to_vec(), densities: g.into_blocks() })
}

/// `max |κ(θ_{ξ,ξ}) − φ(⟨U_{iβ/2}ξ, U_{iβ/2}ξ⟩)|` over the given vectors.
pub fn defining_property_residual(
    kappa: &InducedWeight,
    phi: &KmsFunctional,
    x: &Correspondence,
    u: &TwistedIsometryGroup,
    vectors: &[ModuleVector],
) -> Result<f64> {
    let z = C64::new(0.0, phi.beta() / 2.0);
    let mut worst: f64 = 0.0;
    for xi in vectors {
        let lhs = kappa.eval(&theta(xi, xi)?)?;
        let moved = u.apply(x, z, xi)?;
        let rhs = phi.eval(&inner_product(&moved, &moved)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// The KMS functional `φ` on `A` with
/// `φ(⟨ξ,ξ⟩) = κ(θ_{U_{-iβ/2}ξ, U_{-iβ/2}ξ})`.
pub fn restrict_weight(
    kappa: &impl WeightFunctional,
    x: &Correspondence,
    u: &TwistedIsometryGroup,
    beta: f64,
) -> Result<KmsFunctional> {
    x.check_full()?;
    let n = x.num_blocks();
    let z = C64::new(0.0, -beta / 2.0);
    let gibbs = u.h.gibbs_densities(beta);
    let units = x.matrix_units();
    let mut rows = Vec::with_capacity(units.len());
    let mut rhs = Vec::with_capacity(units.len());
    for w in 0..n {
        for r in 0..x.row_dim(w) {
            for j in 0..x.algebra().dim(w) {
                let xi = ModuleVector::basis(x, w, r, j);
                let moved = u.apply(x, z, &xi)?;
                let val = kappa.eval(&theta(&moved, &moved)?)?;
                // φ(⟨ξ,ξ⟩) = c_w (e^{-βH_w})_{jj}
                let mut row = vec![0.0; n];
                row[w] = gibbs[w][[j, j]].re;
                rows.push(row);
                rhs.push(val.re);
            }
        }
    }
    let mut ata = Array2::<f64>::zeros((n, n));
    let mut atb = vec![0.0; n];
    for (row, &b) in rows.iter().zip(&rhs) {
        for i in 0..n {
            atb[i] += row[i] * b;
            for j in 0..n {
                ata[[i, j]] += row[i] * row[j];
            }
        }
    }
    let c = linalg::solve_real(&ata, &atb)
        .ok_or_else(|| KmsError::NotFull("restriction system is underdetermined".into()))?;
    let scale = rhs.iter().map(|b| b.abs()).fold(1.0, f64::max);
    let resid = rows
        .iter()
        .zip(&rhs)
        .map(|(row, b)| (row.iter().zip(&c).map(|(a, x)| a * x).sum::<f64>() - b).abs())
        .fold(0.0, f64::max);
    if resid > RESTRICT_RESIDUAL_GATE * scale {
        return Err(KmsError::NotKms(resid));
    }
    let c = c.into_iter().map(|v| if v.abs() <= 1e-14 * scale { 0.0 } else { v }).collect();
    KmsFunctional::new(beta, u.h.clone(), c)
}

/// `Fφ = κ_φ ∘ π`, coefficientwise `c'_v = Σ_w Z_{wv} c_w`.
pub fn apply_f_general(phi: &KmsFunctional, x: &Correspondence, u: &TwistedIsometryGroup) -> Result<KmsFunctional> {
    if phi.coeffs().len() != x.num_blocks() {
        return Err(KmsError::Shape("functional does not match the module".into()));
    }
    let z = transfer::transfer_matrix(x, &u.d, phi.beta())?;
    let c = transfer::apply_transpose(z.matrix(), phi.coeffs())?;
    KmsFunctional::new(phi.beta(), u.h.clone(), c)
}

/// `Fφ` computed from the definition, `(Fφ)(1_v) = κ_φ(π(1_v))`.
pub fn apply_f_definitional(
    phi: &KmsFunctional,
    x: &Correspondence,
    u: &TwistedIsometryGroup,
) -> Result<KmsFunctional> {
    let kappa = induce_weight(phi, x, u)?;
    let weights = u.h.partition_weights(phi.beta());
    let mut c = Vec::with_capacity(x.num_blocks());
    for v in 0..x.num_blocks() {
        let unit = AlgebraElement::block_unit(x.algebra(), v);
        let val = kappa.eval(&left_action(x, &unit)?)?;
        c.push((val.re / weights[v]).max(0.0));
    }
    KmsFunctional::new(phi.beta(), u.h.clone(), c)
}

/// `|κ^{U⊗V}_φ(S⊗1) − κ^U_ψ(S)|` with `ψ = κ^V_φ|_A`, maximised over `ops`.
pub fn weight_stages_check(
    x: &Correspondence,
    y: &Correspondence,
    u: &TwistedIsometryGroup,
    v: &TwistedIsometryGroup,
    phi: &KmsFunctional,
    ops: &[ModuleOperator],
) -> Result<f64> {
    x.same_algebra(y)?;
    if u.h != v.h {
        return Err(KmsError::Shape("both groups must implement the same coefficient dynamics".into()));
    }
    let tp = tensor(x, y)?;
    let xy = tp.correspondence();
    let uv = TwistedIsometryGroup::new(xy, u.d.tensor(&tp, x, y, &v.d), u.h.clone())?;
    let kappa_xy = induce_weight(phi, xy, &uv)?;
    let psi = apply_f_general(phi, y, v)?;
    let kappa_x = induce_weight(&psi, x, u)?;
    let one = BimoduleOperator::identity(y);
    let mut worst: f64 = 0.0;
    for s in ops {
        let lhs = kappa_xy.eval(&tensor_operator(&tp, x, y, s, &one)?)?;
        let rhs = kappa_x.eval(s)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Subinvariant and invariant KMS states on the coefficient cone.
#[derive(Clone, Debug)]
pub struct GeneralSolution {
    pub transfer: TransferMatrix,
    pub toeplitz: Option<KmsFunctional>,
    pub cuntz_pimsner: Option<KmsFunctional>,
    pub positive_energy: bool,
}

pub fn solve_kms_states_general(
    x: &Correspondence,
    u: &TwistedIsometryGroup,
    beta: f64,
    tol: f64,
) -> Result<GeneralSolution> {
    let z = transfer::transfer_matrix(x, &u.d, beta)?;
    let weights = u.h.partition_weights(beta);
    let toeplitz = transfer::subinvariant_lp(z.matrix(), &weights, tol)
        .map(|c| normalise(c, &weights))
        .map(|c| KmsFunctional::new(beta, u.h.clone(), c))
        .transpose()?;
    let cuntz_pimsner = transfer::fixed_vector(z.matrix(), 1.0, &weights, tol)
        .map(|c| KmsFunctional::new(beta, u.h.clone(), c))
        .transpose()?;
    Ok(GeneralSolution { transfer: z, toeplitz, cuntz_pimsner, positive_energy: u.d.positive_energy() })
}

fn normalise(c: Vec<f64>, weights: &[f64]) -> Vec<f64> {
    let c: Vec<f64> = c.into_iter().map(|v| v.max(0.0)).collect();
    let m: f64 = c.iter().zip(weights).map(|(a, b)| a * b).sum();
    c.into_iter().map(|v| v / m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{BlockAlgebra, TraceVector};
    use crate::correspondence::induced_trace;
    use crate::linalg::real;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut a = linalg::zeros(n, n);
        a.mapv_inplace(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&a + &linalg::dagger(&a)).mapv(|z| z * 0.5)
    }

    fn random_group(rng: &mut ChaCha8Rng, x: &Correspondence) -> TwistedIsometryGroup {
        let d = Generator::from_operator(BimoduleOperator::from_fn(x, |_, _, m| {
            let h = random_hermitian(rng, m);
            &h + &linalg::identity(m).mapv(|z| z * 2.0)
        }))
        .unwrap();
        let h = CoeffDynamics::new(x.algebra(), x.algebra().dims().iter().map(|&d| random_hermitian(rng, d)).collect())
            .unwrap();
        TwistedIsometryGroup::new(x, d, h).unwrap()
    }

    fn random_vector(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleVector {
        let mut v = ModuleVector::zero(x);
        for w in 0..x.num_blocks() {
            v.block_mut(w).mapv_inplace(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        v
    }

    fn random_element(rng: &mut ChaCha8Rng, alg: &BlockAlgebra) -> AlgebraElement {
        let blocks = alg
            .dims()
            .iter()
            .map(|&d| {
                let mut m = linalg::zeros(d, d);
                m.mapv_inplace(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                m
            })
            .collect();
        AlgebraElement::new(alg, blocks).unwrap()
    }

    fn sample() -> Correspondence {
        Correspondence::new(BlockAlgebra::new(vec![2, 1]).unwrap(), vec![vec![1, 1], vec![2, 1]]).unwrap()
    }

    fn m2_example() -> (Correspondence, TwistedIsometryGroup) {
        let x = Correspondence::new(BlockAlgebra::new(vec![2]).unwrap(), vec![vec![1]]).unwrap();
        let d = Generator::scalar(&x, 1.0);
        let mut h = linalg::zeros(2, 2);
        h[[1, 1]] = real(1.0);
        let h = CoeffDynamics::new(x.algebra(), vec![h]).unwrap();
        let u = TwistedIsometryGroup::new(&x, d, h).unwrap();
        (x, u)
    }

    #[test]
    fn intertwining() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = sample();
        let u = random_group(&mut rng, &x);
        for &t in &[-2.0, -0.7, 0.0, 1.3, 2.0] {
            let z = real(t);
            let (xi, eta) = (random_vector(&mut rng, &x), random_vector(&mut rng, &x));
            let lhs = inner_product(&u.apply(&x, z, &xi).unwrap(), &u.apply(&x, z, &eta).unwrap()).unwrap();
            let rhs = sigma_apply(&u.h, z, &inner_product(&xi, &eta).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-11);
            let a = random_element(&mut rng, x.algebra());
            let lhs = u.apply(&x, z, &crate::correspondence::left_act(&x, &a, &xi).unwrap()).unwrap();
            let rhs =
                crate::correspondence::left_act(&x, &sigma_apply(&u.h, z, &a).unwrap(), &u.apply(&x, z, &xi).unwrap())
                    .unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-11);
        }
    }

    #[test]
    fn untwisted_group_is_the_edge_unitary() {
        let x = sample();
        let d = Generator::diagonal(&x, |w, v, c| 0.5 + (w + v + c) as f64);
        let u = TwistedIsometryGroup::untwisted(&x, d.clone());
        let xi = ModuleVector::basis(&x, 1, 2, 0);
        let direct = d.unitary(0.8).embed(&x).apply(&xi);
        assert!(u.apply(&x, real(0.8), &xi).unwrap().max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn induced_weight_untwisted_matches_trace() {
        let x = Correspondence::new(BlockAlgebra::new(vec![1]).unwrap(), vec![vec![2]]).unwrap();
        let d = Generator::scalar(&x, 1.0);
        let u = TwistedIsometryGroup::untwisted(&x, d.clone());
        let tau = TraceVector::new(vec![1.0]).unwrap();
        let beta = std::f64::consts::LN_2;
        let phi = KmsFunctional::from_trace(x.algebra(), &tau, beta).unwrap();
        let kappa = induce_weight(&phi, &x, &u).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..5 {
            let (a, b) = (random_vector(&mut rng, &x), random_vector(&mut rng, &x));
            let t = theta(&a, &b).unwrap();
            let via = induced_trace(&tau, &t.compose(&crate::transfer::heat_kernel(&d, beta).embed(&x))).unwrap();
            assert!((kappa.eval(&t).unwrap() - via).norm() < 1e-13);
        }
    }

    #[test]
    fn m2_spot_value() {
        let (x, u) = m2_example();
        let c = 0.7;
        let phi = KmsFunctional::new(1.0, u.h.clone(), vec![c]).unwrap();
        let kappa = induce_weight(&phi, &x, &u).unwrap();
        // ξ = e_0 ⊗ e_0^*: θ = E_00, G = 1 + H, so κ = c e^{-1}
        let xi = ModuleVector::basis(&x, 0, 0, 0);
        let val = kappa.eval(&theta(&xi, &xi).unwrap()).unwrap();
        assert!((val.re - c * (-1f64).exp()).abs() < 1e-14);
        let xi1 = ModuleVector::basis(&x, 0, 1, 0);
        let val = kappa.eval(&theta(&xi1, &xi1).unwrap()).unwrap();
        assert!((val.re - c * (-2f64).exp()).abs() < 1e-14);
        let fphi = apply_f_general(&phi, &x, &u).unwrap();
        assert!((fphi.coeffs()[0] - (-1f64).exp() * c).abs() < 1e-15);
    }

    #[test]
    fn zero_functional() {
        let (x, u) = m2_example();
        let phi = KmsFunctional::new(1.0, u.h.clone(), vec![0.0]).unwrap();
        let kappa = induce_weight(&phi, &x, &u).unwrap();
        assert_eq!(kappa.eval(&ModuleOperator::identity(&x)).unwrap(), real(0.0));
        assert_eq!(apply_f_general(&phi, &x, &u).unwrap().coeffs(), &[0.0]);
        let zero = |_: &ModuleOperator| real(0.0);
        assert_eq!(restrict_weight(&zero, &x, &u, 1.0).unwrap().coeffs(), &[0.0]);
    }

    #[test]
    fn defining_property_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = sample();
        let u = random_group(&mut rng, &x);
        let beta = 0.8;
        let phi = KmsFunctional::new(beta, u.h.clone(), vec![0.3, 0.9]).unwrap();
        let kappa = induce_weight(&phi, &x, &u).unwrap();
        let mut vectors = x.matrix_units();
        vectors.extend((0..5).map(|_| random_vector(&mut rng, &x)));
        assert!(defining_property_residual(&kappa, &phi, &x, &u, &vectors).unwrap() < 1e-10);
        let back = restrict_weight(&kappa, &x, &u, beta).unwrap();
        for (a, b) in back.coeffs().iter().zip(phi.coeffs()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn induced_weight_is_kms_for_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let x = sample();
        let u = random_group(&mut rng, &x);
        let beta = 0.6;
        let phi = KmsFunctional::new(beta, u.h.clone(), vec![0.5, 0.2]).unwrap();
        let kappa = induce_weight(&phi, &x, &u).unwrap();
        for _ in 0..5 {
            let a = theta(&random_vector(&mut rng, &x), &random_vector(&mut rng, &x)).unwrap();
            let b = theta(&random_vector(&mut rng, &x), &random_vector(&mut rng, &x)).unwrap();
            let lhs = kappa.eval(&a.compose(&b)).unwrap();
            let rhs = kappa.eval(&b.compose(&u.gamma(&x, C64::new(0.0, beta), &a).unwrap())).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn wrong_dynamics_rejected() {
        let (x, u) = m2_example();
        let phi = KmsFunctional::new(1.0, CoeffDynamics::trivial(x.algebra()), vec![1.0]).unwrap();
        assert!(matches!(induce_weight(&phi, &x, &u), Err(KmsError::NotKms(_))));
    }

    #[test]
    fn restrict_rejects_non_full() {
        let x = Correspondence::new(BlockAlgebra::commutative(2).unwrap(), vec![vec![0, 0], vec![1, 0]]).unwrap();
        let u = TwistedIsometryGroup::untwisted(&x, Generator::scalar(&x, 1.0));
        let k = |_: &ModuleOperator| real(0.0);
        assert!(matches!(restrict_weight(&k, &x, &u, 1.0), Err(KmsError::NotFull(_))));
    }

    #[test]
    fn restrict_trace_on_cuntz() {
        let x = Correspondence::new(BlockAlgebra::new(vec![1]).unwrap(), vec![vec![2]]).unwrap();
        let u = TwistedIsometryGroup::untwisted(&x, Generator::scalar(&x, 1.0));
        let tr = |t: &ModuleOperator| linalg::trace(t.block(0));
        let phi = restrict_weight(&tr, &x, &u, std::f64::consts::LN_2).unwrap();
        // φ(⟨ξ,ξ⟩) = e^{β} ‖ξ‖², so φ = 2τ
        assert!((phi.coeffs()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn general_f_matches_definition_and_untwisted_transfer() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let x = sample();
        let u = random_group(&mut rng, &x);
        let phi = KmsFunctional::new(0.9, u.h.clone(), vec![0.25, 0.4]).unwrap();
        let a = apply_f_general(&phi, &x, &u).unwrap();
        let b = apply_f_definitional(&phi, &x, &u).unwrap();
        for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((p - q).abs() < 1e-10 * p.abs().max(1.0));
        }
        let plain = TwistedIsometryGroup::untwisted(&x, u.d.clone());
        let tau = TraceVector::new(vec![0.25, 0.4]).unwrap();
        let phi0 = KmsFunctional::from_trace(x.algebra(), &tau, 0.9).unwrap();
        let g = apply_f_general(&phi0, &x, &plain).unwrap();
        let f = crate::transfer::apply_f(&tau, &crate::transfer::transfer_matrix(&x, &u.d, 0.9).unwrap()).unwrap();
        for (p, q) in g.coeffs().iter().zip(f.coeffs()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn stages() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let x = sample();
        let y = Correspondence::new(x.algebra().clone(), vec![vec![2, 0], vec![1, 1]]).unwrap();
        let u = random_group(&mut rng, &x);
        let dy = Generator::from_operator(BimoduleOperator::from_fn(&y, |_, _, m| {
            let h = random_hermitian(&mut rng, m);
            &h + &linalg::identity(m)
        }))
        .unwrap();
        let v = TwistedIsometryGroup::new(&y, dy, u.h.clone()).unwrap();
        let phi = KmsFunctional::new(0.7, u.h.clone(), vec![0.6, 0.1]).unwrap();
        let mut ops = vec![ModuleOperator::identity(&x)];
        for _ in 0..4 {
            let g = theta(&random_vector(&mut rng, &x), &random_vector(&mut rng, &x)).unwrap();
            ops.push(g.compose(&g.adjoint()));
        }
        assert!(weight_stages_check(&x, &y, &u, &v, &phi, &ops).unwrap() < 1e-9);

        // identity bimodule with trivial V
        let id = Correspondence::identity(x.algebra());
        let v0 = TwistedIsometryGroup::new(&id, Generator::scalar(&id, 0.0), u.h.clone()).unwrap();
        assert!(weight_stages_check(&x, &id, &u, &v0, &phi, &ops).unwrap() < 1e-10);
    }

    #[test]
    fn m2_solutions() {
        let (x, u) = m2_example();
        for beta in [0.5, 1.0, 3.0] {
            let sol = solve_kms_states_general(&x, &u, beta, 1e-9).unwrap();
            assert!(sol.toeplitz.is_some());
            assert!(sol.cuntz_pimsner.is_none());
            let phi = sol.toeplitz.unwrap();
            assert!((phi.mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn general_solver_agrees_with_untwisted_pipeline() {
        let x = Correspondence::new(BlockAlgebra::commutative(2).unwrap(), vec![vec![1, 1], vec![1, 0]]).unwrap();
        let d = Generator::scalar(&x, 1.0);
        let u = TwistedIsometryGroup::untwisted(&x, d.clone());
        let beta = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let sol = solve_kms_states_general(&x, &u, beta, 1e-9).unwrap();
        let z = crate::transfer::transfer_matrix(&x, &d, beta).unwrap();
        let inv = crate::transfer::invariant_solver(&z, x.algebra()).unwrap();
        for (a, b) in sol.cuntz_pimsner.unwrap().coeffs().iter().zip(inv.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
