//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use selftest_cli::io::parse_model;
use selftest_cli::{run, Command, Outcome, RunConfig};
use selftest_core::batch::{criteria_sweep, tilted_identity_sweep, Execution};
use selftest_core::dilations::naimark_dilate;
use selftest_core::fixtures;
use selftest_core::models::{correlation_of, is_projective_model, AnyModel, QuantumModel, Scenario};
use selftest_core::numerics::{eye, norm, vnorm, CMatrix};
use selftest_core::random::{random_povm, rng_for};
use selftest_core::representations::irrep_decompose;
use selftest_core::schmidt_support::schmidt_decompose;
use selftest_core::special::{binary_round, optimize_tilted, synchronous_verify, tilted_lambda, xor_of, SearchConfig};
use selftest_core::{Error, Tolerance};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn load(name: &str) -> QuantumModel {
    let path = fixture(name);
    let text = std::fs::read_to_string(&path).expect("shipped fixture");
    match parse_model(&text, &path.display().to_string()).expect("valid fixture") {
        AnyModel::Tensor(m) => m,
        AnyModel::Commuting(_) => panic!("{name} is not a tensor model"),
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn example_reproduction() -> Check {
    let start = Instant::now();
    let s = load("exA_S.model.json");
    let shat = load("exA_Shat.model.json");
    for (name, m) in [("S", &s), ("Shat", &shat)] {
        let p = correlation_of(m, tol()).map_err(|e| e.to_string())?;
        for (a, b, want) in [(0, 0, 0.5), (1, 1, 0.5), (0, 1, 0.0), (1, 0, 0.0)] {
            let got = p.get(a, b, 0, 0);
            ensure((got - want).abs() <= 1e-10, || {
                format!("{name}: p({a},{b}|0,0) = {got}")
            })?;
        }
    }
    let rank = |m: &QuantumModel| schmidt_decompose(&m.psi, m.dim_a, m.dim_b, tol()).map(|d| d.rank);
    let ranks = (
        rank(&shat).map_err(|e| e.to_string())?,
        rank(&s).map_err(|e| e.to_string())?,
    );
    ensure(ranks == (2, 3), || format!("Schmidt ranks {ranks:?}"))?;

    let eq = run(&RunConfig::new(Command::StateEqual {
        first: fixture("exA_S.model.json"),
        second: fixture("exA_Shat.model.json"),
    }));
    ensure(eq.outcome() == Outcome::Pass && eq.result["equal"] == true, || {
        format!("state-equal: {}", eq.summary)
    })?;
    let fd = run(&RunConfig::new(Command::FindDilation {
        source: fixture("exA_S.model.json"),
        target: fixture("exA_Shat.model.json"),
    }));
    let kind = fd.error.as_ref().map(|e| e.kind.as_str());
    ensure(
        fd.outcome() == Outcome::Fail && kind == Some("notDilatable") && fd.result["obstruction"] == "schmidtRank",
        || format!("find-dilation: {}", fd.summary),
    )?;
    let took = within(start, Duration::from_secs(1))?;
    Ok(format!(
        "p, ranks (2, 3), state-equal, Schmidt obstruction in {took:.2?}"
    ))
}

fn chsh_suite() -> Check {
    let start = Instant::now();
    let ideal = load("chsh_ideal.model.json");
    let p = correlation_of(&ideal, tol()).map_err(|e| e.to_string())?;
    let xor = xor_of(&p, tol()).map_err(|e| e.to_string())?;
    let h = 1.0 / 2f64.sqrt();
    let want = [[h, h], [h, -h]];
    let dev = (0..2)
        .flat_map(|x| (0..2).map(move |y| (x, y)))
        .map(|(x, y)| (xor.c[x][y] - want[x][y]).abs())
        .fold(0.0, f64::max);
    ensure(dev <= 1e-9, || format!("XOR matrix deviates by {dev:.3e}"))?;
    ensure(xor.rank == 2, || format!("XOR rank {}", xor.rank))?;

    let mut cfg = RunConfig::new(Command::XorCertify {
        input: fixture("chsh.corr.json"),
    });
    cfg.assert_extremal = true;
    let cert = run(&cfg);
    ensure(
        cert.outcome() == Outcome::Pass && cert.result["granted"] == true,
        || format!("xor-certify: {}", cert.summary),
    )?;

    let source = fixture("chsh_entangled_aux.model.json");
    let target = fixture("chsh_ideal.model.json");
    let fd = run(&RunConfig::new(Command::FindDilation {
        source: source.clone(),
        target: target.clone(),
    }));
    ensure(fd.outcome() == Outcome::Pass, || {
        format!("find-dilation: {}", fd.summary)
    })?;
    let witness = std::env::temp_dir().join(format!("selftest-acceptance-{}.json", std::process::id()));
    std::fs::write(&witness, serde_json::to_string(&fd.result["witness"]).unwrap()).map_err(|e| e.to_string())?;
    let vd = run(&RunConfig::new(Command::VerifyDilation {
        source,
        target,
        witness: witness.clone(),
    }));
    std::fs::remove_file(&witness).ok();
    let residual = vd.result["max_residual"].as_f64().unwrap_or(f64::INFINITY);
    ensure(vd.outcome() == Outcome::Pass && residual < 1e-8, || {
        format!("verify-dilation residual {residual:.3e}: {}", vd.summary)
    })?;
    let took = within(start, Duration::from_secs(2))?;
    Ok(format!(
        "XOR deviation {dev:.1e}, rank 2, certificate granted, dilation residual {residual:.1e} in {took:.2?}"
    ))
}

fn tilted_identities() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let alpha = 0.25 * k as f64;
        let d = tilted_identity_sweep(alpha, 17 + k, 50, tol(), Execution::Parallel).map_err(|e| e.to_string())?;
        ensure(d < 1e-8, || format!("alpha {alpha}: identity defect {d:.3e}"))?;
        worst = worst.max(d);
    }
    let took = within(start, Duration::from_secs(30))?;
    Ok(format!("8 alphas x 50 models, max defect {worst:.1e} in {took:.2?}"))
}

fn tilted_optimum() -> Check {
    let mut notes = Vec::new();
    for alpha in [0.0, 0.5, 1.0] {
        let opt = optimize_tilted(alpha, SearchConfig::default()).map_err(|e| e.to_string())?;
        let lambda = tilted_lambda(alpha);
        ensure(opt.value >= lambda - 1e-6, || {
            format!("alpha {alpha}: f(eta) = {} < {lambda}", opt.value)
        })?;
        let cert = selftest_core::special::verify_tilted_sos(&opt.model, alpha, tol()).map_err(|e| e.to_string())?;
        let worst = cert.max_state_residual();
        ensure(worst < 1e-5, || format!("alpha {alpha}: residual {worst:.3e}"))?;
        if alpha == 0.0 {
            let gap = (opt.value - 8f64.sqrt()).abs();
            ensure(gap <= 1e-6, || format!("CHSH optimum off by {gap:.3e}"))?;
        }
        notes.push(format!("{alpha}: {worst:.1e}"));
    }
    Ok(format!("max residuals {}", notes.join(", ")))
}

fn naimark_suite() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = rng_for(55, i);
        let d = 1 + (i as usize) % 5;
        let k = 1 + (i as usize / 5) % 4;
        let povm = random_povm(&mut rng, d, k);
        let nd = naimark_dilate(&povm, tol()).map_err(|e| e.to_string())?;
        let big = nd.v.nrows();
        let mut sum = CMatrix::zeros(big, big);
        let mut proj_defect: f64 = 0.0;
        for (i, p) in nd.projections.iter().enumerate() {
            proj_defect = proj_defect.max(norm(&(p * p - p))).max(norm(&(p - p.adjoint())));
            for q in &nd.projections[i + 1..] {
                proj_defect = proj_defect.max(norm(&(p * q)));
            }
            sum += p;
        }
        proj_defect = proj_defect.max(norm(&(sum - eye(big))));
        let iso = norm(&(nd.v.adjoint() * &nd.v - eye(d)));
        let repro = nd
            .projections
            .iter()
            .zip(&povm)
            .map(|(p, m)| norm(&(nd.v.adjoint() * p * &nd.v - m)))
            .fold(0.0, f64::max);
        let r = iso.max(proj_defect).max(repro);
        ensure(r < 1e-10, || format!("POVM {i} (d={d}, k={k}): residual {r:.3e}"))?;
        worst = worst.max(r);
    }
    let took = within(start, Duration::from_secs(5))?;
    Ok(format!("100 POVMs, max residual {worst:.1e} in {took:.2?}"))
}

fn criteria_equivalence() -> Check {
    let out = criteria_sweep(2024, 200, tol(), Execution::Parallel);
    ensure(out.len() == 200, || format!("{} fixtures", out.len()))?;
    if let Some(bad) = out.iter().find(|o| !o.agree()) {
        return Err(format!(
            "fixture {} ({}): commutator {} vs transfer {}",
            bad.index, bad.family, bad.commutator, bad.transfer
        ));
    }
    let supported = out.iter().filter(|o| o.commutator).count();
    ensure(supported > 0 && supported < 200, || {
        format!("{supported} supported, sweep is one-sided")
    })?;
    Ok(format!("200 fixtures agree ({supported} centrally supported)"))
}

fn binary_rounding() -> Check {
    let mut rounding_fixtures = vec![
        ("chsh_padded", load("chsh_padded.model.json")),
        ("chsh_ideal", fixtures::chsh_ideal()),
        ("hidden_defect", fixtures::hidden_defect_model()),
    ];
    for i in 0..10 {
        let mut rng = rng_for(77, i);
        let m = fixtures::random_model(&mut rng, Scenario::binary(2, 3), 1 + i as usize % 3, 2, true);
        rounding_fixtures.push(("random_pvm", fixtures::random_local_frame(&mut rng, &m)));
    }
    let mut worst: f64 = 0.0;
    for (name, m) in &rounding_fixtures {
        let out = binary_round(m, true, tol()).map_err(|e| format!("{name}: {e}"))?;
        ensure(is_projective_model(&out.model, tol()), || {
            format!("{name}: output not projective")
        })?;
        let p = correlation_of(m, tol()).map_err(|e| e.to_string())?;
        let q = correlation_of(&out.model, tol()).map_err(|e| e.to_string())?;
        let dp = p.max_abs_diff(&q);
        let mut ds: f64 = 0.0;
        for (orig, new, side_a) in [(&m.m, &out.model.m, true), (&m.n, &out.model.n, false)] {
            for (f, g) in orig.iter().zip(new) {
                for (e, proj) in f.iter().zip(g) {
                    let diff = e - proj;
                    let v = if side_a {
                        m.apply_a(&diff, &m.psi)
                    } else {
                        m.apply_b(&diff, &m.psi)
                    };
                    ds = ds.max(vnorm(&v));
                }
            }
        }
        ensure(dp <= 1e-9 && ds < 1e-9, || {
            format!("{name}: correlation {dp:.3e}, state {ds:.3e}")
        })?;
        worst = worst.max(dp).max(ds);
    }
    let violating = load("binary_violation.model.json");
    match binary_round(&violating, true, tol()) {
        Err(Error::LemmaViolated { .. }) => {}
        other => return Err(format!("violating fixture gave {:?}", other.map(|_| "a rounding"))),
    }
    Ok(format!(
        "{} fixtures rounded, max defect {worst:.1e}; violation rejected",
        rounding_fixtures.len()
    ))
}

fn synchronous_suite() -> Check {
    let mut models = vec![("sync_maxent", load("sync_maxent.model.json"))];
    for i in 0..6u64 {
        let mut rng = rng_for(88, i);
        let d = 2 + i as usize % 3;
        models.push((
            "maxent",
            fixtures::synchronous_maximally_entangled(&mut rng, d, 2, 2 + i as usize % 2),
        ));
        models.push(("diagonal", fixtures::synchronous_diagonal(&mut rng, d, 2)));
    }
    let mut full_rank = 0;
    for (name, m) in &models {
        let r = synchronous_verify(m, tol()).map_err(|e| format!("{name}: {e}"))?;
        ensure(r.max_swap_residual < 1e-9, || {
            format!("{name}: swap residual {:.3e}", r.max_swap_residual)
        })?;
        ensure(r.projective_state, || format!("{name}: state not projective"))?;
        ensure(r.centrally_supported && r.centrally_supported_via_transfer, || {
            format!("{name}: not centrally supported under both criteria")
        })?;
        if r.full_rank {
            full_rank += 1;
            let p = r.max_projectivity_residual.unwrap_or(f64::INFINITY);
            ensure(p < 1e-9, || format!("{name}: projectivity residual {p:.3e}"))?;
        }
    }
    ensure(full_rank > 0, || "no full-rank synchronous fixture".into())?;
    Ok(format!("{} fixtures ({full_rank} full rank) pass", models.len()))
}

fn representation_round_trip() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..30u64 {
        let mut rng = rng_for(99, i);
        let n_blocks = 1 + i as usize % 3;
        let mut shape: Vec<(usize, usize)> = (0..n_blocks)
            .map(|b| (1 + (i as usize + b) % 3, 1 + (i as usize / 3 + 2 * b) % 2))
            .collect();
        let gens = fixtures::constructed_representation(&mut rng, &shape, 2);
        let dec = irrep_decompose(&gens, i, tol()).map_err(|e| format!("rep {i}: {e}"))?;
        let mut got = dec.structure();
        got.sort_unstable();
        shape.sort_unstable();
        // blocks with the same irrep dimension are inequivalent, so multiplicities do not merge
        ensure(got == shape, || format!("rep {i}: expected {shape:?}, got {got:?}"))?;
        let sigma: usize = shape.iter().map(|(_, m)| m * m).sum();
        ensure(dec.commutant_dim() == sigma, || {
            format!("rep {i}: commutant dim {}", dec.commutant_dim())
        })?;
        let w = &dec.change_of_basis;
        let mut defect = dec.reassembly_defect;
        for (k, g) in gens.iter().enumerate() {
            defect = defect.max(norm(&(w * dec.block_form(k) * w.adjoint() - g)));
        }
        ensure(defect < 1e-8, || format!("rep {i}: reassembly defect {defect:.3e}"))?;
        worst = worst.max(defect);
    }
    Ok(format!(
        "30 representations recovered, max reassembly defect {worst:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("1 example reproduction", example_reproduction),
        ("2 CHSH suite", chsh_suite),
        ("3 tilted CHSH identities", tilted_identities),
        ("4 tilted CHSH optimum", tilted_optimum),
        ("5 Naimark dilation", naimark_suite),
        ("6 central support criteria", criteria_equivalence),
        ("7 binary rounding", binary_rounding),
        ("8 synchronous models", synchronous_suite),
        ("9 representation round-trip", representation_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(note) => println!("PASS  {name}: {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
}
