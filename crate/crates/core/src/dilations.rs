//! Naimark dilation, verification of local dilations `S ⪰ S̃`, and the
//! constructive search for a local dilation onto an irreducible target.

use serde::Serialize;

use crate::error::{Error, NotDilatable, Result};
use crate::models::{evaluate_moment, regroup_product, Letter, QuantumModel, Word};
use crate::numerics::{
    eye, fix_phase, from_coefficients, hermitian_eig, kron, norm, null_space, polar_unitary, psd_sqrt, r,
    to_coefficients, vnorm, CMatrix, CVector, Side, Tolerance,
};
use crate::representations::{commutant_basis, irrep_decompose, side_generators, RepDecomposition};
use crate::schmidt_support::{schmidt_decompose, support_of};

/// `V : H → H ⊗ ℂ^k` with `M_i = V† P_i V` and `P_i = Id ⊗ |i><i|`.
#[derive(Clone, Debug)]
pub struct NaimarkDilation {
    pub v: CMatrix,
    pub projections: Vec<CMatrix>,
    pub outcomes: usize,
}

impl NaimarkDilation {
    /// Largest `‖V† P_i V − M_i‖`.
    pub fn reproduction_residual(&self, povm: &[CMatrix]) -> f64 {
        self.projections
            .iter()
            .zip(povm)
            .map(|(p, m)| norm(&(self.v.adjoint() * p * &self.v - m)))
            .fold(0.0, f64::max)
    }

    pub fn isometry_residual(&self) -> f64 {
        norm(&(self.v.adjoint() * &self.v - eye(self.v.ncols())))
    }
}

/// Reject anything that is not a POVM on a common space.
pub fn check_povm(povm: &[CMatrix], tol: Tolerance) -> Result<()> {
    let d = match povm.first() {
        Some(m) => m.nrows(),
        None => return Err(Error::NotPovm("no outcomes".into())),
    };
    let mut total = CMatrix::zeros(d, d);
    for (i, m) in povm.iter().enumerate() {
        if m.shape() != (d, d) {
            return Err(Error::NotPovm(format!(
                "effect {i} is {}x{}, expected {d}x{d}",
                m.nrows(),
                m.ncols()
            )));
        }
        let eig = hermitian_eig(m, tol).map_err(|_| Error::NotPovm(format!("effect {i} is not Hermitian")))?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -tol.eps * (1.0 + norm(m)) {
            return Err(Error::NotPovm(format!("effect {i} has eigenvalue {min:.3e}")));
        }
        total += m;
    }
    let defect = norm(&(total - eye(d)));
    if !tol.negligible(defect, 1.0) {
        return Err(Error::NotPovm(format!(
            "effects sum to identity only up to {defect:.3e}"
        )));
    }
    Ok(())
}

pub fn naimark_dilate(povm: &[CMatrix], tol: Tolerance) -> Result<NaimarkDilation> {
    check_povm(povm, tol)?;
    let d = povm[0].nrows();
    let k = povm.len();
    let mut v = CMatrix::zeros(d * k, d);
    for (i, m) in povm.iter().enumerate() {
        let root = psd_sqrt(m, tol)?;
        for h in 0..d {
            for j in 0..d {
                v[(h * k + i, j)] = root[(h, j)];
            }
        }
    }
    let projections = (0..k)
        .map(|i| {
            let mut e = CMatrix::zeros(k, k);
            e[(i, i)] = r(1.0);
            kron(&eye(d), &e)
        })
        .collect();
    Ok(NaimarkDilation {
        v,
        projections,
        outcomes: k,
    })
}

/// Isometries `I_A : H_A → H̃_A ⊗ H_A^aux`, `I_B : H_B → H̃_B ⊗ H_B^aux` and the
/// auxiliary state. Row index of `I_A` is `ĩ · aux_dim_a + k`.
#[derive(Clone, Debug)]
pub struct DilationWitness {
    pub ia: CMatrix,
    pub ib: CMatrix,
    pub aux: CVector,
    pub aux_dim_a: usize,
    pub aux_dim_b: usize,
}

impl DilationWitness {
    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        DilationWitness {
            ia: eye(dim_a),
            ib: eye(dim_b),
            aux: CVector::from_element(1, r(1.0)),
            aux_dim_a: 1,
            aux_dim_b: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationResidual {
    /// `None` for the identity (no measurement) case.
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub x: Option<usize>,
    pub y: Option<usize>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentCheck {
    pub words_checked: usize,
    pub max_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub max_residual: f64,
    pub isometry_residual_a: f64,
    pub isometry_residual_b: f64,
    pub aux_norm_defect: f64,
    pub residuals: Vec<DilationResidual>,
    pub moment_check: Option<MomentCheck>,
}

/// `(I_A ⊗ I_B) v` for `v ∈ H_A ⊗ H_B`, grouped as `(H̃_A ⊗ aux_A) ⊗ (H̃_B ⊗ aux_B)`.
fn apply_isometries(w: &DilationWitness, v: &CVector, dim_a: usize, dim_b: usize) -> CVector {
    let coeffs = to_coefficients(v, dim_a, dim_b);
    from_coefficients(&(&w.ia * coeffs * w.ib.transpose()))
}

fn words_of_length(s: &QuantumModel, side: Side, len: usize) -> Vec<Word> {
    let mut layer = vec![Word::identity(side)];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &layer {
            for x in 0..s.scenario.inputs(side) {
                for a in 0..s.scenario.outputs(side) {
                    next.push(w.prepend(Letter::new(x, a)));
                }
            }
        }
        layer = next;
    }
    layer
}

/// Check `(I_A ⊗ I_B)(M^x_a ⊗ N^y_b)|ψ> = (M̃^x_a ⊗ Ñ^y_b |ψ̃>) ⊗ |aux>` for every
/// index and for the identity. When `S̃` is centrally supported, the moments
/// of both models are also compared on word pairs of total length at most 3.
pub fn verify_local_dilation(
    s: &QuantumModel,
    target: &QuantumModel,
    w: &DilationWitness,
    tol: Tolerance,
) -> Result<VerificationReport> {
    if s.scenario != target.scenario {
        return Err(Error::ScenarioMismatch(format!(
            "{:?} vs {:?}",
            s.scenario, target.scenario
        )));
    }
    let (ta, tb) = (target.dim_a, target.dim_b);
    if w.ia.shape() != (ta * w.aux_dim_a, s.dim_a)
        || w.ib.shape() != (tb * w.aux_dim_b, s.dim_b)
        || w.aux.len() != w.aux_dim_a * w.aux_dim_b
    {
        return Err(Error::DimensionMismatch(format!(
            "witness shapes I_A {}x{}, I_B {}x{}, aux {} do not match ({}·{})x{}, ({}·{})x{}",
            w.ia.nrows(),
            w.ia.ncols(),
            w.ib.nrows(),
            w.ib.ncols(),
            w.aux.len(),
            ta,
            w.aux_dim_a,
            s.dim_a,
            tb,
            w.aux_dim_b,
            s.dim_b
        )));
    }
    let mut residuals = Vec::new();
    let mut check = |a: Option<usize>, b: Option<usize>, x: Option<usize>, y: Option<usize>| {
        let mut v = s.psi.clone();
        let mut vt = target.psi.clone();
        if let (Some(b), Some(y)) = (b, y) {
            v = s.apply_b(&s.n[y][b], &v);
            vt = target.apply_b(&target.n[y][b], &vt);
        }
        if let (Some(a), Some(x)) = (a, x) {
            v = s.apply_a(&s.m[x][a], &v);
            vt = target.apply_a(&target.m[x][a], &vt);
        }
        let lhs = apply_isometries(w, &v, s.dim_a, s.dim_b);
        let rhs = regroup_product(&vt, &w.aux, ta, tb, w.aux_dim_a, w.aux_dim_b);
        residuals.push(DilationResidual {
            a,
            b,
            x,
            y,
            residual: vnorm(&(lhs - rhs)),
        });
    };
    check(None, None, None, None);
    let sc = s.scenario;
    for x in 0..sc.n_x {
        for y in 0..sc.n_y {
            for a in 0..sc.n_a {
                for b in 0..sc.n_b {
                    check(Some(a), Some(b), Some(x), Some(y));
                }
            }
        }
    }
    let max_residual = residuals.iter().map(|d| d.residual).fold(0.0, f64::max);
    let isometry_residual_a = norm(&(w.ia.adjoint() * &w.ia - eye(s.dim_a)));
    let isometry_residual_b = norm(&(w.ib.adjoint() * &w.ib - eye(s.dim_b)));
    let aux_norm_defect = (vnorm(&w.aux) - 1.0).abs();

    let moment_check = if support_of(target, tol)?.centrally_supported {
        let mut max_defect: f64 = 0.0;
        let mut count = 0;
        for la in 0..=3 {
            for lb in 0..=(3 - la) {
                for wa in words_of_length(s, Side::A, la) {
                    for wb in words_of_length(s, Side::B, lb) {
                        let f = evaluate_moment(s, &wa, &wb)?;
                        let g = evaluate_moment(target, &wa, &wb)?;
                        max_defect = max_defect.max((f - g).norm());
                        count += 1;
                    }
                }
            }
        }
        Some(MomentCheck {
            words_checked: count,
            max_defect,
        })
    } else {
        None
    };

    let passed = tol.negligible(max_residual, 1.0)
        && tol.negligible(isometry_residual_a, 1.0)
        && tol.negligible(isometry_residual_b, 1.0)
        && tol.negligible(aux_norm_defect, 1.0)
        && moment_check.as_ref().is_none_or(|m| tol.negligible(m.max_defect, 1.0));
    Ok(VerificationReport {
        passed,
        max_residual,
        isometry_residual_a,
        isometry_residual_b,
        aux_norm_defect,
        residuals,
        moment_check,
    })
}

/// Witness for `S ⪰ S″` from witnesses for `S ⪰ S′` and `S′ ⪰ S″`.
/// Auxiliary factors are ordered `aux″ ⊗ aux′` on each side.
pub fn compose_witnesses(first: &DilationWitness, second: &DilationWitness) -> DilationWitness {
    let ia = kron(&second.ia, &eye(first.aux_dim_a)) * &first.ia;
    let ib = kron(&second.ib, &eye(first.aux_dim_b)) * &first.ib;
    let aux = regroup_product(
        &second.aux,
        &first.aux,
        second.aux_dim_a,
        second.aux_dim_b,
        first.aux_dim_a,
        first.aux_dim_b,
    );
    DilationWitness {
        ia,
        ib,
        aux,
        aux_dim_a: second.aux_dim_a * first.aux_dim_a,
        aux_dim_b: second.aux_dim_b * first.aux_dim_b,
    }
}

fn not_dilatable(reason: NotDilatable) -> Error {
    Error::NotDilatable(reason)
}

/// Unitary `U` with `U g_k U† = h_k` for all k, phase-fixed on its first entry.
fn intertwining_unitary(src: &[CMatrix], dst: &[CMatrix], tol: Tolerance) -> std::result::Result<CMatrix, String> {
    let n = src[0].nrows();
    if dst[0].nrows() != n {
        return Err(format!(
            "irreducible dimension {n} differs from target dimension {}",
            dst[0].nrows()
        ));
    }
    let mut sys = CMatrix::zeros(n * n * src.len(), n * n);
    for (k, (gs, gd)) in src.iter().zip(dst).enumerate() {
        let op = kron(&gs.transpose(), &eye(n)) - kron(&eye(n), gd);
        sys.view_mut((k * n * n, 0), (n * n, n * n)).copy_from(&op);
    }
    let ns = null_space(&sys, tol);
    if ns.basis.len() != 1 {
        return Err(format!(
            "intertwiner space has dimension {} (expected 1), so the component is not equivalent to the target",
            ns.basis.len()
        ));
    }
    let mut x = ns.basis[0].clone();
    fix_phase(&mut x);
    let u = polar_unitary(&CMatrix::from_column_slice(n, n, x.as_slice()));
    let residual = src
        .iter()
        .zip(dst)
        .map(|(g, h)| norm(&(&u * g * u.adjoint() - h)))
        .fold(0.0, f64::max);
    if !tol.negligible(residual, ns.scale) {
        return Err(format!("best intertwiner leaves residual {residual:.3e}"));
    }
    Ok(u)
}

struct Offsets {
    /// Start of each block inside the decomposed coordinates.
    coord: Vec<usize>,
    /// Start of each block inside the auxiliary space.
    aux: Vec<usize>,
    aux_dim: usize,
}

fn offsets(dec: &RepDecomposition, supported: &[bool]) -> Offsets {
    let mut coord = Vec::new();
    let mut aux = Vec::new();
    let (mut c, mut a) = (0, 0);
    for (b, &inside) in dec.blocks.iter().zip(supported) {
        coord.push(c);
        aux.push(a);
        c += b.irrep_dim * b.multiplicity;
        a += if inside {
            b.multiplicity
        } else {
            b.irrep_dim * b.multiplicity
        };
    }
    Offsets { coord, aux, aux_dim: a }
}

/// Build `I = ⊕ I_i` on decomposed coordinates, then pull back through the change of basis.
fn assemble_isometry(
    dec: &RepDecomposition,
    unitaries: &[Option<CMatrix>],
    off: &Offsets,
    target_dim: usize,
) -> CMatrix {
    let rows = target_dim * off.aux_dim;
    let mut iso = CMatrix::zeros(rows, dec.dim);
    for (bi, b) in dec.blocks.iter().enumerate() {
        let m = b.multiplicity;
        for a in 0..b.irrep_dim {
            for k in 0..m {
                let col = off.coord[bi] + a * m + k;
                match &unitaries[bi] {
                    Some(u) => {
                        for c in 0..target_dim {
                            iso[(c * off.aux_dim + off.aux[bi] + k, col)] = u[(c, a)];
                        }
                    }
                    // |v> ↦ |e_0> ⊗ |v>
                    None => iso[(off.aux[bi] + a * m + k, col)] = r(1.0),
                }
            }
        }
    }
    iso * dec.change_of_basis.adjoint()
}

fn check_target_irreducible(target: &QuantumModel, tol: Tolerance) -> Result<()> {
    for side in [Side::A, Side::B] {
        let dim = commutant_basis(&side_generators(target, side), tol)?.len();
        if dim != 1 {
            return Err(not_dilatable(NotDilatable::TargetReducible {
                side,
                commutant_dim: dim,
            }));
        }
    }
    Ok(())
}

/// Construct a local dilation `S ⪰ S̃` for a target `S̃` whose local
/// representations are irreducible.
///
/// Both local representations of `S` are split into irreducible blocks with
/// multiplicity spaces; every block visited by `ψ` is mapped onto the target
/// by an intertwining unitary and must carry `ψ̃` times a multiplicity-space
/// vector, which becomes part of the auxiliary state. Blocks not visited by
/// `ψ` are parked beside `|0>` of the target space in their own auxiliary
/// sector. Phases are pushed onto the unitaries along a spanning forest of the
/// visited block pairs; any that remain are carried by `|aux>`.
pub fn find_local_dilation(
    s: &QuantumModel,
    target: &QuantumModel,
    seed: u64,
    tol: Tolerance,
) -> Result<DilationWitness> {
    if s.scenario != target.scenario {
        return Err(Error::ScenarioMismatch(format!(
            "{:?} vs {:?}",
            s.scenario, target.scenario
        )));
    }
    let source_rank = schmidt_decompose(&s.psi, s.dim_a, s.dim_b, tol)?.rank;
    let target_rank = schmidt_decompose(&target.psi, target.dim_a, target.dim_b, tol)?.rank;
    if source_rank % target_rank != 0 {
        return Err(not_dilatable(NotDilatable::SchmidtRankObstruction {
            source_rank,
            target_rank,
        }));
    }
    check_target_irreducible(target, tol)?;

    let target_a = side_generators(target, Side::A);
    let target_b = side_generators(target, Side::B);
    let dec_a = irrep_decompose(&side_generators(s, Side::A), seed, tol)?;
    let dec_b = irrep_decompose(&side_generators(s, Side::B), seed.wrapping_add(1), tol)?;

    // ψ in decomposed coordinates
    let coeffs = dec_a.change_of_basis.adjoint()
        * to_coefficients(&s.psi, s.dim_a, s.dim_b)
        * dec_b.change_of_basis.map(|z| z.conj());
    let block_ranges = |dec: &RepDecomposition| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut o = 0;
        for b in &dec.blocks {
            let size = b.irrep_dim * b.multiplicity;
            out.push((o, size));
            o += size;
        }
        out
    };
    let ranges_a = block_ranges(&dec_a);
    let ranges_b = block_ranges(&dec_b);
    let mut visited = Vec::new();
    for (i, &(oa, sa)) in ranges_a.iter().enumerate() {
        for (j, &(ob, sb)) in ranges_b.iter().enumerate() {
            if !tol.negligible(coeffs.view((oa, ob), (sa, sb)).norm(), 1.0) {
                visited.push((i, j));
            }
        }
    }
    let in_a: Vec<bool> = (0..dec_a.blocks.len())
        .map(|i| visited.iter().any(|p| p.0 == i))
        .collect();
    let in_b: Vec<bool> = (0..dec_b.blocks.len())
        .map(|j| visited.iter().any(|p| p.1 == j))
        .collect();

    let mut units_a: Vec<Option<CMatrix>> = vec![None; dec_a.blocks.len()];
    for (i, b) in dec_a.blocks.iter().enumerate() {
        if in_a[i] {
            let u = intertwining_unitary(&b.generators, &target_a, tol).map_err(|reason| {
                not_dilatable(NotDilatable::ComponentRepresentation {
                    side: Side::A,
                    block: i,
                    reason,
                })
            })?;
            units_a[i] = Some(u);
        }
    }
    let mut units_b: Vec<Option<CMatrix>> = vec![None; dec_b.blocks.len()];
    for (j, b) in dec_b.blocks.iter().enumerate() {
        if in_b[j] {
            let u = intertwining_unitary(&b.generators, &target_b, tol).map_err(|reason| {
                not_dilatable(NotDilatable::ComponentRepresentation {
                    side: Side::B,
                    block: j,
                    reason,
                })
            })?;
            units_b[j] = Some(u);
        }
    }

    let (ta, tb) = (target.dim_a, target.dim_b);
    // κ̂_ij: (U_i ⊗ U_j) ψ_ij = ψ̃ ⊗ κ̂_ij in (H̃_A ⊗ H̃_B) ⊗ (K_i ⊗ K_j)
    let kappa = |i: usize, j: usize, ua: &CMatrix, ub: &CMatrix| -> (CMatrix, f64) {
        let (ma, mb) = (dec_a.blocks[i].multiplicity, dec_b.blocks[j].multiplicity);
        let (na, nb) = (dec_a.blocks[i].irrep_dim, dec_b.blocks[j].irrep_dim);
        let (oa, ob) = (ranges_a[i].0, ranges_b[j].0);
        let mut defect: f64 = 0.0;
        let mut kap = CMatrix::zeros(ma, mb);
        let mut columns = Vec::with_capacity(ma * mb);
        for k in 0..ma {
            for l in 0..mb {
                // component of ψ_ij on multiplicity indices (k, l), as a vector in H_i ⊗ H_j
                let comp = CMatrix::from_fn(na, nb, |a, b| coeffs[(oa + a * ma + k, ob + b * mb + l)]);
                let moved = from_coefficients(&(ua * comp * ub.transpose()));
                let overlap = target.psi.dotc(&moved);
                kap[(k, l)] = overlap;
                columns.push((moved, overlap));
            }
        }
        for (moved, overlap) in &columns {
            defect = defect.max(vnorm(&(moved - &target.psi * *overlap)));
        }
        (kap, defect)
    };

    // spanning-forest phase fixing: make the leading entry of κ̂_ij real positive
    let mut fixed_a = vec![false; dec_a.blocks.len()];
    let mut fixed_b = vec![false; dec_b.blocks.len()];
    for &(i, j) in &visited {
        if fixed_a[i] && fixed_b[j] {
            continue;
        }
        let (kap, _) = kappa(
            i,
            j,
            units_a[i].as_ref().expect("visited"),
            units_b[j].as_ref().expect("visited"),
        );
        let scale = kap.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(lead) = kap.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
            let phase = lead.conj() / lead.norm();
            if !fixed_a[i] {
                units_a[i] = units_a[i].take().map(|u| u * phase);
            } else {
                units_b[j] = units_b[j].take().map(|u| u * phase);
            }
        }
        fixed_a[i] = true;
        fixed_b[j] = true;
    }

    let off_a = offsets(&dec_a, &in_a);
    let off_b = offsets(&dec_b, &in_b);
    let mut aux = CVector::zeros(off_a.aux_dim * off_b.aux_dim);
    for &(i, j) in &visited {
        let (kap, defect) = kappa(
            i,
            j,
            units_a[i].as_ref().expect("visited"),
            units_b[j].as_ref().expect("visited"),
        );
        if !tol.negligible(defect, 1.0) {
            return Err(not_dilatable(NotDilatable::ComponentState {
                block_a: i,
                block_b: j,
                residual: defect,
            }));
        }
        for k in 0..kap.nrows() {
            for l in 0..kap.ncols() {
                aux[(off_a.aux[i] + k) * off_b.aux_dim + off_b.aux[j] + l] = kap[(k, l)];
            }
        }
    }

    let witness = DilationWitness {
        ia: assemble_isometry(&dec_a, &units_a, &off_a, ta),
        ib: assemble_isometry(&dec_b, &units_b, &off_b, tb),
        aux,
        aux_dim_a: off_a.aux_dim,
        aux_dim_b: off_b.aux_dim,
    };
    let report = verify_local_dilation(s, target, &witness, tol)?;
    if !report.passed {
        let residual = report
            .max_residual
            .max(report.isometry_residual_a)
            .max(report.isometry_residual_b)
            .max(report.moment_check.map_or(0.0, |m| m.max_defect));
        return Err(not_dilatable(NotDilatable::VerificationFailed { residual }));
    }
    Ok(witness)
}
