//! Bipartite correlation models, correlations and the abstract state on words.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eye, hermitian_eig, inner, kron, norm, r, vnorm, CMatrix, CVector, Side, Tolerance};
use crate::schmidt_support::schmidt_decompose;

/// Input and output alphabet sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "nX")]
    pub n_x: usize,
    #[serde(rename = "nY")]
    pub n_y: usize,
    #[serde(rename = "nA")]
    pub n_a: usize,
    #[serde(rename = "nB")]
    pub n_b: usize,
}

impl Scenario {
    pub fn new(n_x: usize, n_y: usize, n_a: usize, n_b: usize) -> Result<Self> {
        if n_x == 0 || n_y == 0 || n_a == 0 || n_b == 0 {
            return Err(Error::InvalidModel(format!(
                "scenario sizes must be positive, got nX={n_x} nY={n_y} nA={n_a} nB={n_b}"
            )));
        }
        Ok(Scenario { n_x, n_y, n_a, n_b })
    }

    pub fn binary(n_x: usize, n_y: usize) -> Self {
        Scenario {
            n_x,
            n_y,
            n_a: 2,
            n_b: 2,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.n_a == 2 && self.n_b == 2
    }

    pub fn is_synchronous_shape(&self) -> bool {
        self.n_x == self.n_y && self.n_a == self.n_b
    }

    pub fn inputs(&self, side: Side) -> usize {
        match side {
            Side::A => self.n_x,
            Side::B => self.n_y,
        }
    }

    pub fn outputs(&self, side: Side) -> usize {
        match side {
            Side::A => self.n_a,
            Side::B => self.n_b,
        }
    }

    /// All generators in canonical order: side A before B, then input, then output.
    pub fn letters(&self) -> Vec<(Side, Letter)> {
        let mut out = Vec::new();
        for side in [Side::A, Side::B] {
            for input in 0..self.inputs(side) {
                for output in 0..self.outputs(side) {
                    out.push((side, Letter { input, output }));
                }
            }
        }
        out
    }
}

/// A measurement family `family[input][output]`.
pub type Povms = Vec<Vec<CMatrix>>;

/// Finite-dimensional tensor-product model `(H_A, H_B, {M}, {N}, psi)`.
#[derive(Clone, Debug)]
pub struct QuantumModel {
    pub scenario: Scenario,
    pub dim_a: usize,
    pub dim_b: usize,
    pub m: Povms,
    pub n: Povms,
    pub psi: CVector,
}

/// Single-space model with mutually commuting measurement families.
#[derive(Clone, Debug)]
pub struct CommutingModel {
    pub scenario: Scenario,
    pub dim: usize,
    pub m: Povms,
    pub n: Povms,
    pub psi: CVector,
}

fn check_family(family: &Povms, inputs: usize, outputs: usize, dim: usize, name: &str) -> Result<()> {
    if family.len() != inputs {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {} inputs, scenario expects {inputs}",
            family.len()
        )));
    }
    for (x, ops) in family.iter().enumerate() {
        if ops.len() != outputs {
            return Err(Error::DimensionMismatch(format!(
                "{name}[{x}] has {} outcomes, scenario expects {outputs}",
                ops.len()
            )));
        }
        for (a, op) in ops.iter().enumerate() {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "{name}[{x}][{a}] is {}x{}, expected {dim}x{dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
            if !crate::numerics::is_finite(op) {
                return Err(Error::InvalidModel(format!("{name}[{x}][{a}] has non-finite entries")));
            }
        }
    }
    Ok(())
}

fn check_state(psi: &CVector, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "psi has length {}, expected {dim}",
            psi.len()
        )));
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidModel("psi has non-finite entries".into()));
    }
    Ok(())
}

impl QuantumModel {
    /// Shape-checked constructor. POVM and normalization conditions are left to
    /// [`validate_quantum_model`].
    pub fn new(scenario: Scenario, dim_a: usize, dim_b: usize, m: Povms, n: Povms, psi: CVector) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::DimensionMismatch("local dimensions must be positive".into()));
        }
        check_family(&m, scenario.n_x, scenario.n_a, dim_a, "M")?;
        check_family(&n, scenario.n_y, scenario.n_b, dim_b, "N")?;
        check_state(&psi, dim_a * dim_b)?;
        Ok(QuantumModel {
            scenario,
            dim_a,
            dim_b,
            m,
            n,
            psi,
        })
    }

    pub fn family(&self, side: Side) -> &Povms {
        match side {
            Side::A => &self.m,
            Side::B => &self.n,
        }
    }

    pub fn local_dim(&self, side: Side) -> usize {
        match side {
            Side::A => self.dim_a,
            Side::B => self.dim_b,
        }
    }

    /// `(op ⊗ Id) v`
    pub fn apply_a(&self, op: &CMatrix, v: &CVector) -> CVector {
        let (da, db) = (self.dim_a, self.dim_b);
        CVector::from_fn(da * db, |k, _| {
            let (i, b) = (k / db, k % db);
            (0..da).map(|j| op[(i, j)] * v[j * db + b]).sum()
        })
    }

    /// `(Id ⊗ op) v`
    pub fn apply_b(&self, op: &CMatrix, v: &CVector) -> CVector {
        let db = self.dim_b;
        CVector::from_fn(self.dim_a * db, |k, _| {
            let (a, i) = (k / db, k % db);
            (0..db).map(|j| op[(i, j)] * v[a * db + j]).sum()
        })
    }

    pub fn to_commuting(&self) -> CommutingModel {
        let ia = eye(self.dim_a);
        let ib = eye(self.dim_b);
        CommutingModel {
            scenario: self.scenario,
            dim: self.dim_a * self.dim_b,
            m: self
                .m
                .iter()
                .map(|ops| ops.iter().map(|op| kron(op, &ib)).collect())
                .collect(),
            n: self
                .n
                .iter()
                .map(|ops| ops.iter().map(|op| kron(&ia, op)).collect())
                .collect(),
            psi: self.psi.clone(),
        }
    }
}

impl CommutingModel {
    pub fn new(scenario: Scenario, dim: usize, m: Povms, n: Povms, psi: CVector) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("dimension must be positive".into()));
        }
        check_family(&m, scenario.n_x, scenario.n_a, dim, "M")?;
        check_family(&n, scenario.n_y, scenario.n_b, dim, "N")?;
        check_state(&psi, dim)?;
        Ok(CommutingModel {
            scenario,
            dim,
            m,
            n,
            psi,
        })
    }

    pub fn family(&self, side: Side) -> &Povms {
        match side {
            Side::A => &self.m,
            Side::B => &self.n,
        }
    }
}

/// Shared view over both model kinds: a carrier space, a state, and the action
/// of each generator `m^x_a` / `n^y_b` on carrier vectors.
pub trait BipartiteModel {
    fn scenario(&self) -> Scenario;
    fn carrier_dim(&self) -> usize;
    fn state(&self) -> &CVector;
    fn act(&self, side: Side, letter: Letter, v: &CVector) -> CVector;
    /// Generator as an operator on the carrier.
    fn carrier_operator(&self, side: Side, letter: Letter) -> CMatrix;
    fn local_operator(&self, side: Side, letter: Letter) -> &CMatrix;
    fn as_tensor(&self) -> Option<&QuantumModel> {
        None
    }
}

impl BipartiteModel for QuantumModel {
    fn scenario(&self) -> Scenario {
        self.scenario
    }
    fn carrier_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }
    fn state(&self) -> &CVector {
        &self.psi
    }
    fn act(&self, side: Side, letter: Letter, v: &CVector) -> CVector {
        let op = self.local_operator(side, letter);
        match side {
            Side::A => self.apply_a(op, v),
            Side::B => self.apply_b(op, v),
        }
    }
    fn carrier_operator(&self, side: Side, letter: Letter) -> CMatrix {
        let op = self.local_operator(side, letter);
        match side {
            Side::A => kron(op, &eye(self.dim_b)),
            Side::B => kron(&eye(self.dim_a), op),
        }
    }
    fn local_operator(&self, side: Side, letter: Letter) -> &CMatrix {
        &self.family(side)[letter.input][letter.output]
    }
    fn as_tensor(&self) -> Option<&QuantumModel> {
        Some(self)
    }
}

impl BipartiteModel for CommutingModel {
    fn scenario(&self) -> Scenario {
        self.scenario
    }
    fn carrier_dim(&self) -> usize {
        self.dim
    }
    fn state(&self) -> &CVector {
        &self.psi
    }
    fn act(&self, side: Side, letter: Letter, v: &CVector) -> CVector {
        self.local_operator(side, letter) * v
    }
    fn carrier_operator(&self, side: Side, letter: Letter) -> CMatrix {
        self.local_operator(side, letter).clone()
    }
    fn local_operator(&self, side: Side, letter: Letter) -> &CMatrix {
        &self.family(side)[letter.input][letter.output]
    }
}

/// Either kind of model, as read from a model file.
#[derive(Clone, Debug)]
pub enum AnyModel {
    Tensor(QuantumModel),
    Commuting(CommutingModel),
}

impl AnyModel {
    pub fn as_dyn(&self) -> &dyn BipartiteModel {
        match self {
            AnyModel::Tensor(m) => m,
            AnyModel::Commuting(m) => m,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Tensor(_) => "tensor",
            AnyModel::Commuting(_) => "commuting",
        }
    }
}

impl From<QuantumModel> for AnyModel {
    fn from(m: QuantumModel) -> Self {
        AnyModel::Tensor(m)
    }
}

impl From<CommutingModel> for AnyModel {
    fn from(m: CommutingModel) -> Self {
        AnyModel::Commuting(m)
    }
}

impl BipartiteModel for AnyModel {
    fn scenario(&self) -> Scenario {
        self.as_dyn().scenario()
    }
    fn carrier_dim(&self) -> usize {
        self.as_dyn().carrier_dim()
    }
    fn state(&self) -> &CVector {
        self.as_dyn().state()
    }
    fn act(&self, side: Side, letter: Letter, v: &CVector) -> CVector {
        self.as_dyn().act(side, letter, v)
    }
    fn carrier_operator(&self, side: Side, letter: Letter) -> CMatrix {
        self.as_dyn().carrier_operator(side, letter)
    }
    fn local_operator(&self, side: Side, letter: Letter) -> &CMatrix {
        match self {
            AnyModel::Tensor(m) => m.local_operator(side, letter),
            AnyModel::Commuting(m) => m.local_operator(side, letter),
        }
    }
    fn as_tensor(&self) -> Option<&QuantumModel> {
        match self {
            AnyModel::Tensor(m) => Some(m),
            AnyModel::Commuting(_) => None,
        }
    }
}

/// Probability table `p(a,b|x,y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub scenario: Scenario,
    p: Vec<f64>,
}

impl Correlation {
    pub fn from_fn(scenario: Scenario, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = Vec::with_capacity(scenario.n_a * scenario.n_b * scenario.n_x * scenario.n_y);
        for a in 0..scenario.n_a {
            for b in 0..scenario.n_b {
                for x in 0..scenario.n_x {
                    for y in 0..scenario.n_y {
                        p.push(f(a, b, x, y));
                    }
                }
            }
        }
        Correlation { scenario, p }
    }

    /// From the nested `[a][b][x][y]` layout of correlation files.
    pub fn from_nested(scenario: Scenario, nested: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        let shape_err = |what: String| Error::DimensionMismatch(format!("correlation table {what}"));
        if nested.len() != scenario.n_a {
            return Err(shape_err(format!(
                "has {} rows for a, expected {}",
                nested.len(),
                scenario.n_a
            )));
        }
        for (a, by_b) in nested.iter().enumerate() {
            if by_b.len() != scenario.n_b {
                return Err(shape_err(format!(
                    "p[{a}] has {} entries, expected {}",
                    by_b.len(),
                    scenario.n_b
                )));
            }
            for (b, by_x) in by_b.iter().enumerate() {
                if by_x.len() != scenario.n_x {
                    return Err(shape_err(format!(
                        "p[{a}][{b}] has {} entries, expected {}",
                        by_x.len(),
                        scenario.n_x
                    )));
                }
                for (x, by_y) in by_x.iter().enumerate() {
                    if by_y.len() != scenario.n_y {
                        return Err(shape_err(format!(
                            "p[{a}][{b}][{x}] has {} entries, expected {}",
                            by_y.len(),
                            scenario.n_y
                        )));
                    }
                    if by_y.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidModel(format!("p[{a}][{b}][{x}] has non-finite entries")));
                    }
                }
            }
        }
        Ok(Self::from_fn(scenario, |a, b, x, y| nested[a][b][x][y]))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let s = self.scenario;
        (0..s.n_a)
            .map(|a| {
                (0..s.n_b)
                    .map(|b| {
                        (0..s.n_x)
                            .map(|x| (0..s.n_y).map(|y| self.get(a, b, x, y)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        let s = self.scenario;
        ((a * s.n_b + b) * s.n_x + x) * s.n_y + y
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.index(a, b, x, y)]
    }

    pub fn set(&mut self, a: usize, b: usize, x: usize, y: usize, value: f64) {
        let i = self.index(a, b, x, y);
        self.p[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Violated correlation invariants (negativity, normalization), with residuals.
    pub fn violations(&self, tol: Tolerance) -> Vec<Violation> {
        let s = self.scenario;
        let mut out = Vec::new();
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let mut total = 0.0;
                for a in 0..s.n_a {
                    for b in 0..s.n_b {
                        let v = self.get(a, b, x, y);
                        total += v;
                        if v < -tol.eps {
                            out.push(Violation::new(format!("negative probability p({a},{b}|{x},{y})"), -v));
                        }
                    }
                }
                if !tol.approx_eq(total, 1.0) {
                    out.push(Violation::new(
                        format!("normalization for (x,y)=({x},{y})"),
                        (total - 1.0).abs(),
                    ));
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Correlation) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_synchronous(&self, tol: Tolerance) -> bool {
        self.synchronicity_defect().is_some_and(|d| d <= tol.eps)
    }

    /// `max_x max_{a != b} p(a,b|x,x)`, or `None` if the scenario is not square.
    pub fn synchronicity_defect(&self) -> Option<f64> {
        let s = self.scenario;
        if !s.is_synchronous_shape() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for x in 0..s.n_x {
            for a in 0..s.n_a {
                for b in 0..s.n_b {
                    if a != b {
                        worst = worst.max(self.get(a, b, x, x));
                    }
                }
            }
        }
        Some(worst)
    }

    /// Weighted sum of correlations over the same scenario.
    pub fn mixture(parts: &[(f64, &Correlation)]) -> Result<Correlation> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidModel("empty mixture".into()))?;
        let scenario = first.1.scenario;
        let mut p = vec![0.0; first.1.p.len()];
        for (w, corr) in parts {
            if corr.scenario != scenario {
                return Err(Error::ScenarioMismatch("mixture components differ in scenario".into()));
            }
            for (acc, v) in p.iter_mut().zip(&corr.p) {
                *acc += w * v;
            }
        }
        Ok(Correlation { scenario, p })
    }
}

/// One generator index `(input, output)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub input: usize,
    pub output: usize,
}

impl Letter {
    pub fn new(input: usize, output: usize) -> Self {
        Letter { input, output }
    }
}

/// Formal product of generators on one side; empty means the identity.
/// Letters are read left to right as operator products, so the last letter
/// acts on the state first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub side: Side,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn identity(side: Side) -> Self {
        Word {
            side,
            letters: Vec::new(),
        }
    }

    pub fn letter(side: Side, input: usize, output: usize) -> Self {
        Word {
            side,
            letters: vec![Letter { input, output }],
        }
    }

    pub fn new(side: Side, letters: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Word {
            side,
            letters: letters
                .into_iter()
                .map(|(input, output)| Letter { input, output })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The adjoint word (generators are self-adjoint).
    pub fn reversed(&self) -> Word {
        Word {
            side: self.side,
            letters: self.letters.iter().rev().copied().collect(),
        }
    }

    /// `letter · self`
    pub fn prepend(&self, letter: Letter) -> Word {
        let mut letters = Vec::with_capacity(self.letters.len() + 1);
        letters.push(letter);
        letters.extend_from_slice(&self.letters);
        Word {
            side: self.side,
            letters,
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word {
            side: self.side,
            letters,
        }
    }

    pub fn check(&self, scenario: Scenario) -> Result<()> {
        for l in &self.letters {
            if l.input >= scenario.inputs(self.side) || l.output >= scenario.outputs(self.side) {
                return Err(Error::IndexOutOfRange(format!(
                    "letter ({}, {}) on side {} outside scenario",
                    l.input, l.output, self.side
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        let sym = match self.side {
            Side::A => 'm',
            Side::B => 'n',
        };
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| format!("{sym}{}_{}", l.input, l.output))
            .collect();
        f.write_str(&parts.join("·"))
    }
}

/// `π(w) v` for a word on either side of any model.
pub fn apply_word<M: BipartiteModel + ?Sized>(model: &M, word: &Word, v: &CVector) -> CVector {
    let mut out = v.clone();
    for &letter in word.letters.iter().rev() {
        out = model.act(word.side, letter, &out);
    }
    out
}

/// `π_A(w_A) π_B(w_B) ψ`
pub fn word_vector<M: BipartiteModel + ?Sized>(model: &M, wa: &Word, wb: &Word) -> CVector {
    let v = apply_word(model, wb, model.state());
    apply_word(model, wa, &v)
}

/// `f_S(w_A ⊗ w_B) = <ψ| π_A(w_A) ⊗ π_B(w_B) |ψ>`
pub fn evaluate_moment<M: BipartiteModel + ?Sized>(model: &M, wa: &Word, wb: &Word) -> Result<Complex64> {
    if wa.side != Side::A || wb.side != Side::B {
        return Err(Error::IndexOutOfRange(
            "moment words must be (side A word, side B word)".into(),
        ));
    }
    let scenario = model.scenario();
    wa.check(scenario)?;
    wb.check(scenario)?;
    Ok(inner(model.state(), &word_vector(model, wa, wb)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub what: String,
    pub residual: f64,
}

impl Violation {
    pub fn new(what: impl Into<String>, residual: f64) -> Self {
        Violation {
            what: what.into(),
            residual,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn validate_family(family: &Povms, dim: usize, name: &str, tol: Tolerance, out: &mut Vec<Violation>) {
    for (x, ops) in family.iter().enumerate() {
        let mut total = CMatrix::zeros(dim, dim);
        for (a, op) in ops.iter().enumerate() {
            total += op;
            let scale = norm(op);
            let herm = crate::numerics::hermitian_residual(op);
            if !tol.negligible(herm, scale) {
                out.push(Violation::new(format!("{name}[{x}][{a}] Hermitian"), herm));
                continue;
            }
            if let Ok(eig) = hermitian_eig(op, tol) {
                let min = eig.values.last().copied().unwrap_or(0.0);
                if min < -tol.eps {
                    out.push(Violation::new(format!("{name}[{x}][{a}] positivity"), -min));
                }
            }
        }
        // operator norm of the completeness defect
        let defect = &total - eye(dim);
        let residual = hermitian_eig(&(&defect + defect.adjoint()).scale(0.5), tol)
            .map(|e| e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .unwrap_or_else(|_| norm(&defect));
        if !tol.negligible(residual, 1.0) {
            out.push(Violation::new(format!("{name}[{x}] POVM completeness"), residual));
        }
    }
}

fn validate_state(psi: &CVector, tol: Tolerance, out: &mut Vec<Violation>) {
    let n = vnorm(psi);
    if !tol.approx_eq(n, 1.0) {
        out.push(Violation::new("state normalization", (n - 1.0).abs()));
    }
}

pub fn validate_quantum_model(model: &QuantumModel, tol: Tolerance) -> ValidationReport {
    let mut violations = Vec::new();
    validate_family(&model.m, model.dim_a, "M", tol, &mut violations);
    validate_family(&model.n, model.dim_b, "N", tol, &mut violations);
    validate_state(&model.psi, tol, &mut violations);
    ValidationReport { violations }
}

pub fn validate_commuting_model(model: &CommutingModel, tol: Tolerance) -> ValidationReport {
    let mut violations = Vec::new();
    validate_family(&model.m, model.dim, "M", tol, &mut violations);
    validate_family(&model.n, model.dim, "N", tol, &mut violations);
    validate_state(&model.psi, tol, &mut violations);
    for (x, ops_a) in model.m.iter().enumerate() {
        for (a, ma) in ops_a.iter().enumerate() {
            for (y, ops_b) in model.n.iter().enumerate() {
                for (b, nb) in ops_b.iter().enumerate() {
                    let res = norm(&crate::numerics::commutator(ma, nb));
                    if !tol.negligible(res, 1.0) {
                        violations.push(Violation::new(format!("[M[{x}][{a}], N[{y}][{b}]] commutation"), res));
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

pub fn validate_model(model: &AnyModel, tol: Tolerance) -> ValidationReport {
    match model {
        AnyModel::Tensor(m) => validate_quantum_model(m, tol),
        AnyModel::Commuting(m) => validate_commuting_model(m, tol),
    }
}

/// Adjustments made while extracting a correlation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationNotes {
    pub max_imaginary: f64,
    pub clamped_entries: usize,
    pub max_clamped: f64,
    pub max_renormalization: f64,
}

/// `p(a,b|x,y) = <ψ| M^x_a N^y_b |ψ>` as degree-(1,1) moments.
pub fn correlation_of<M: BipartiteModel + ?Sized>(model: &M, tol: Tolerance) -> Result<Correlation> {
    correlation_with_notes(model, tol).map(|(c, _)| c)
}

pub fn correlation_with_notes<M: BipartiteModel + ?Sized>(
    model: &M,
    tol: Tolerance,
) -> Result<(Correlation, CorrelationNotes)> {
    let s = model.scenario();
    let mut notes = CorrelationNotes::default();
    // B-side vectors are reused across all A letters.
    let mut table = vec![0.0; s.n_a * s.n_b * s.n_x * s.n_y];
    let idx = |a: usize, b: usize, x: usize, y: usize| ((a * s.n_b + b) * s.n_x + x) * s.n_y + y;
    for y in 0..s.n_y {
        for b in 0..s.n_b {
            let vb = model.act(Side::B, Letter::new(y, b), model.state());
            for x in 0..s.n_x {
                for a in 0..s.n_a {
                    let va = model.act(Side::A, Letter::new(x, a), model.state());
                    let z = inner(&va, &vb);
                    notes.max_imaginary = notes.max_imaginary.max(z.im.abs());
                    table[idx(a, b, x, y)] = z.re;
                }
            }
        }
    }
    if notes.max_imaginary >= tol.eps {
        return Err(Error::InvalidModel(format!(
            "correlation has imaginary residual {:.3e}",
            notes.max_imaginary
        )));
    }
    for x in 0..s.n_x {
        for y in 0..s.n_y {
            let mut total = 0.0;
            for a in 0..s.n_a {
                for b in 0..s.n_b {
                    let v = &mut table[idx(a, b, x, y)];
                    if *v < 0.0 {
                        notes.clamped_entries += 1;
                        notes.max_clamped = notes.max_clamped.max(-*v);
                        *v = 0.0;
                    }
                    total += *v;
                }
            }
            if total <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "zero total probability at (x,y)=({x},{y})"
                )));
            }
            notes.max_renormalization = notes.max_renormalization.max((total - 1.0).abs());
            for a in 0..s.n_a {
                for b in 0..s.n_b {
                    table[idx(a, b, x, y)] /= total;
                }
            }
        }
    }
    Ok((Correlation { scenario: s, p: table }, notes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub projective: bool,
    pub full_rank: bool,
    pub synchronous_scenario: bool,
    pub binary: bool,
}

pub fn is_projective_model(model: &QuantumModel, tol: Tolerance) -> bool {
    model
        .m
        .iter()
        .chain(model.n.iter())
        .flatten()
        .all(|op| crate::numerics::structural_predicates(op, tol).projection)
}

pub fn classify(model: &QuantumModel, tol: Tolerance) -> Result<ModelFlags> {
    let rank = schmidt_decompose(&model.psi, model.dim_a, model.dim_b, tol)?.rank;
    Ok(ModelFlags {
        projective: is_projective_model(model, tol),
        full_rank: model.dim_a == model.dim_b && rank == model.dim_a,
        synchronous_scenario: model.scenario.is_synchronous_shape(),
        binary: model.scenario.is_binary(),
    })
}

/// Largest `|f_S(m - m^2)|` over all generators on both sides.
pub fn projective_state_defect<M: BipartiteModel + ?Sized>(model: &M) -> f64 {
    let s = model.scenario();
    let mut worst: f64 = 0.0;
    for (side, letter) in s.letters() {
        let single = Word {
            side,
            letters: vec![letter],
        };
        let double = Word {
            side,
            letters: vec![letter, letter],
        };
        let (f1, f2) = match side {
            Side::A => (
                evaluate_moment(model, &single, &Word::identity(Side::B)),
                evaluate_moment(model, &double, &Word::identity(Side::B)),
            ),
            Side::B => (
                evaluate_moment(model, &Word::identity(Side::A), &single),
                evaluate_moment(model, &Word::identity(Side::A), &double),
            ),
        };
        let defect = f1.expect("letters from scenario") - f2.expect("letters from scenario");
        worst = worst.max(defect.norm());
    }
    worst
}

/// True iff `f_S(m^x_a − (m^x_a)^2) = f_S(n^y_b − (n^y_b)^2) = 0` for every generator.
pub fn is_projective_state<M: BipartiteModel + ?Sized>(model: &M, tol: Tolerance) -> bool {
    projective_state_defect(model) <= tol.eps
}

/// Tensor a model with an auxiliary bipartite state, measurements acting as identity
/// on the auxiliary registers. Local spaces become `H_A ⊗ aux_A`, `H_B ⊗ aux_B`.
pub fn tensor_with_aux(model: &QuantumModel, aux: &CVector, aux_a: usize, aux_b: usize) -> Result<QuantumModel> {
    if aux.len() != aux_a * aux_b {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary state has length {}, expected {}",
            aux.len(),
            aux_a * aux_b
        )));
    }
    let (da, db) = (model.dim_a, model.dim_b);
    let ia = eye(aux_a);
    let ib = eye(aux_b);
    let m = model
        .m
        .iter()
        .map(|ops| ops.iter().map(|op| kron(op, &ia)).collect())
        .collect();
    let n = model
        .n
        .iter()
        .map(|ops| ops.iter().map(|op| kron(op, &ib)).collect())
        .collect();
    let psi = regroup_product(&model.psi, aux, da, db, aux_a, aux_b);
    QuantumModel::new(model.scenario, da * aux_a, db * aux_b, m, n, psi)
}

/// `u ⊗ v ∈ (X_A ⊗ X_B) ⊗ (Y_A ⊗ Y_B)` regrouped as `(X_A ⊗ Y_A) ⊗ (X_B ⊗ Y_B)`.
pub fn regroup_product(u: &CVector, v: &CVector, xa: usize, xb: usize, ya: usize, yb: usize) -> CVector {
    let mut out = CVector::zeros(xa * xb * ya * yb);
    for i in 0..xa {
        for j in 0..xb {
            let uij = u[i * xb + j];
            if uij == r(0.0) {
                continue;
            }
            for k in 0..ya {
                for l in 0..yb {
                    out[(i * ya + k) * (xb * yb) + j * yb + l] += uij * v[k * yb + l];
                }
            }
        }
    }
    out
}
