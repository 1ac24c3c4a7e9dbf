//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use symcone::exact_d1::{hypercube_residuals, p_n1_membership, sigma_n1_membership};
use symcone::fuzz::{
    halfdeg_outcome, lemma_check, moment_equivalence_case, random_lemma_target, random_moment, random_quadratic,
    task_rng, ROUTE_TOL,
};
use symcone::measures::{measure_moments, random_atomic_measure, Support};
use symcone::moment::{classify, necessary_condition, residual_bound};
use symcone::sandwich::{ray_gap, Ray};
use symcone::sos::{ellipsoid_quadratic_min, sigma_membership_lmi, sos_witness_for_member, verify_sos_witness};
use symcone::spin::{
    coherent_state, dicke_state, entanglement_witness, random_pure_state, random_state, spin_form_mismatch, Family,
    SpinVerdict,
};
use symcone::moment::Side;
use symcone::{pair, ProblemDims, SymmetricQuadratic, Witness};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn d1_sandwich() -> Outcome {
    let per_n = 10_000u64;
    let results: Vec<(u64, u64, u64)> = (2..=20usize)
        .into_par_iter()
        .map(|n| {
            let dims = ProblemDims::new(n, 1).unwrap();
            let (mut bad, mut strict_lo, mut strict_hi) = (0, 0, 0);
            for i in 0..per_n {
                let mut rng = task_rng(1, (n as u64) << 32 | i);
                let a = rng.random_range(-1.0..1.0);
                let aa = rng.random_range(-1.0..1.0);
                let base = SymmetricQuadratic::new(dims, 0.0, vec![a], vec![aa]).unwrap();
                let lowest = hypercube_residuals(&base)
                    .unwrap()
                    .iter()
                    .map(|f| f.residual)
                    .fold(f64::INFINITY, f64::min);
                // Constant term spread around the P-boundary.
                let q = base.with_a0(-lowest + rng.random_range(-1.0..1.0) * n as f64 * 0.5);
                let s = sigma_n1_membership(&q, false, TOL).unwrap().is_member();
                let p = p_n1_membership(&q, TOL).unwrap().0.is_member();
                let sp = sigma_n1_membership(&q, true, TOL).unwrap().is_member();
                bad += u64::from((s && !p) || (p && !sp));
                strict_lo += u64::from(p && !s);
                strict_hi += u64::from(sp && !p);
            }
            (bad, strict_lo, strict_hi)
        })
        .collect();
    let bad: u64 = results.iter().map(|r| r.0).sum();
    let lo: u64 = results.iter().map(|r| r.1).sum();
    let hi: u64 = results.iter().map(|r| r.2).sum();
    outcome(bad == 0, format!("{bad} violations over 190000 quadratics; P\\Σ hits {lo}, Σ'\\P hits {hi}"))
}

fn route_equivalence() -> Outcome {
    let cells: Vec<(usize, usize)> = (2..=10).flat_map(|n| (1..=4).map(move |d| (n, d))).collect();
    let bad: Vec<String> = cells
        .par_iter()
        .flat_map_iter(|&(n, d)| {
            let dims = ProblemDims::new(n, d).unwrap();
            (0..1000u64).filter_map(move |i| {
                let mut rng = task_rng(2, ((n * 8 + d) as u64) << 32 | i);
                let q = random_quadratic(dims, &mut rng);
                let lmi = sigma_membership_lmi(&q, ROUTE_TOL).unwrap().0.is_member();
                let (min, _) = ellipsoid_quadratic_min(&q).unwrap();
                let ell = min >= -ROUTE_TOL * q.scale();
                (lmi != ell).then(|| serde_json::to_string(&q).unwrap())
            })
        })
        .collect();
    outcome(
        bad.is_empty(),
        format!("{} disagreements over 36000 instances{}", bad.len(), bad.first().map(|s| format!(", e.g. {s}")).unwrap_or_default()),
    )
}

fn moment_soundness() -> Outcome {
    let worst = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(3, i);
            let dims = ProblemDims::new(rng.random_range(2..=64), rng.random_range(1..=4)).unwrap();
            let support = [Support::Ball, Support::Sphere, Support::Hypercube][rng.random_range(0..3)];
            let mu = random_atomic_measure(dims, rng.random_range(1..5), support, &mut rng);
            let m = measure_moments(&mu);
            let (ok, rep) = necessary_condition(&m, TOL);
            let normalized = rep.residual / residual_bound(&m, 1.0);
            (ok, normalized)
        })
        .reduce(|| (true, f64::INFINITY), |a, b| (a.0 && b.0, a.1.min(b.1)));
    outcome(
        worst.0 && worst.1 >= -TOL,
        format!("100000 measures, smallest normalized residual {:.3e}", worst.1),
    )
}

fn lmi_equivalence() -> Outcome {
    let failures: Vec<String> = (0..10_000u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = task_rng(4, i);
            let dims = ProblemDims::new(rng.random_range(2..=40), rng.random_range(1..=4)).unwrap();
            moment_equivalence_case(&mut rng, dims, TOL).err()
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!(
            "{} failures over 10000 vectors (both sides, witness eigenvalues){}",
            failures.len(),
            failures.first().map(|s| format!(": {s}")).unwrap_or_default()
        ),
    )
}

fn half_degree() -> Outcome {
    let cells: Vec<(usize, usize, u64)> = (3..=6)
        .flat_map(|n| (2..=3).flat_map(move |d| (0..50u64).map(move |i| (n, d, i))))
        .collect();
    let results: Vec<(f64, bool, Option<f64>)> = cells
        .par_iter()
        .map(|&(n, d, i)| {
            let mut rng = task_rng(5, ((n * 8 + d) as u64) << 32 | i);
            let q = random_quadratic(ProblemDims::new(n, d).unwrap(), &mut rng);
            let o = halfdeg_outcome(&q, rng.random()).unwrap();
            ((o.reduced - o.bruteforce).abs(), o.distinct <= 2 * d, o.critical)
        })
        .collect();
    let gap = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let distinct_ok = results.iter().all(|r| r.1);
    let crit: Vec<f64> = results.iter().filter_map(|r| r.2).collect();
    let crit_max = crit.iter().copied().fold(0.0, f64::max);
    outcome(
        gap <= 1e-6 && distinct_ok && crit_max < 1e-6,
        format!(
            "400 quadratics: max |reduced − brute force| {gap:.2e}, ≤2d distinct points: {distinct_ok}, \
             max |P(ξ)|/‖P‖ {crit_max:.2e} over {} generic minima",
            crit.len()
        ),
    )
}

fn lemma_approx() -> Outcome {
    let cells: Vec<(usize, usize)> = (2..=64).flat_map(|n| (1..=4).map(move |d| (n, d))).collect();
    let failures: Vec<String> = cells
        .par_iter()
        .flat_map_iter(|&(n, d)| {
            let mut rng = task_rng(6, (n * 8 + d) as u64);
            (0..10_000).filter_map(move |_| {
                let target = random_lemma_target(d, n, &mut rng);
                lemma_check(&target, n).err()
            })
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!(
            "{} failures over 2520000 targets{}",
            failures.len(),
            failures.first().map(|s| format!(": {s}")).unwrap_or_default()
        ),
    )
}

fn convergence_rate() -> Outcome {
    let ns: Vec<usize> = (2..=9).map(|k| 1usize << k).collect();
    let mut fits = Vec::new();
    let mut drawn = 0u64;
    while fits.len() < 100 {
        let batch: Vec<_> = (drawn..drawn + 64)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = task_rng(7, i);
                let d = rng.random_range(1..=4);
                ray_gap(&Ray::random(d, &mut rng), &ns).unwrap()
            })
            .collect();
        drawn += 64;
        fits.extend(batch);
    }
    fits.truncate(100);
    let pmin = fits.iter().map(|f| f.p).fold(f64::INFINITY, f64::min);
    let pmax = fits.iter().map(|f| f.p).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        (0.8..=1.2).contains(&pmin) && (0.8..=1.2).contains(&pmax),
        format!("100 rays (from {drawn} drawn, limit crossing ≤ 3): fitted exponent in [{pmin:.3}, {pmax:.3}]"),
    )
}

fn spin_witness() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    // Coherent states.
    let mut worst_sat = 0.0_f64;
    for n in 2..=32usize {
        let mut rng = task_rng(8, n as u64);
        for k in 0..20 {
            let (theta, phi) = if k == 0 {
                (0.0, 0.0)
            } else {
                (rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..std::f64::consts::TAU))
            };
            let r = entanglement_witness(&coherent_state(n, theta, phi).unwrap(), TOL).unwrap();
            pass &= r.verdict != SpinVerdict::EntanglementDetected;
            for e in r.inequalities.iter().filter(|e| e.side == Side::Necessary && e.family == Family::Second) {
                worst_sat = worst_sat.max(e.residual.abs() / (n * n) as f64);
            }
        }
    }
    pass &= worst_sat <= 1e-9;
    notes.push(format!("coherent saturation {worst_sat:.1e}·n²"));
    // Dicke |j,0⟩.
    let mut dicke_ok = true;
    for n in (2..=32usize).step_by(2) {
        let r = entanglement_witness(&dicke_state(n, 0.0).unwrap(), TOL).unwrap();
        let z = r.inequalities.iter().find(|e| e.name == "necessary:axis_variance_z").unwrap();
        let nn = (n * n) as f64;
        dicke_ok &= r.verdict == SpinVerdict::EntanglementDetected && (z.residual + nn).abs() <= 1e-9 * nn;
    }
    pass &= dicke_ok;
    notes.push(format!("Dicke |j,0⟩ detected with residual −n²: {dicke_ok}"));
    // Random states.
    let (trivial_ok, mismatch) = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(9, i);
            let n = rng.random_range(2..=32);
            let s = if i % 2 == 0 { random_state(n, &mut rng) } else { random_pure_state(n, &mut rng) }.unwrap();
            let ok = entanglement_witness(&s, TOL).is_ok_and(|r| {
                r.inequalities
                    .iter()
                    .filter(|e| e.side == Side::Necessary && e.family == Family::Trivial)
                    .all(|e| e.residual >= -TOL * (n * n) as f64)
            });
            (ok, spin_form_mismatch(&s).unwrap())
        })
        .reduce(|| (true, 0.0), |a, b| (a.0 && b.0, a.1.max(b.1)));
    pass &= trivial_ok && mismatch <= 1e-12;
    notes.push(format!("trivial pair holds on 1000 states: {trivial_ok}, spin/moment form mismatch {mismatch:.1e}·n²"));
    outcome(pass, notes.join("; "))
}

fn witness_validation() -> Outcome {
    let (members, worst) = (0..4000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(10, i);
            let dims = ProblemDims::new(rng.random_range(2..=10), rng.random_range(1..=4)).unwrap();
            let q = random_quadratic(dims, &mut rng);
            if !sigma_membership_lmi(&q, TOL).unwrap().0.is_member() {
                return (0u64, 0.0);
            }
            let w = sos_witness_for_member(&q, TOL).unwrap();
            let c = verify_sos_witness(&w, &q, 100, &mut rng).unwrap();
            let bad = c.g_min_eigenvalue < -1e-8 * q.scale() || c.h_min < -1e-8 * q.scale() || c.c < -1e-8;
            let ratio = if bad { f64::INFINITY } else { c.identity_residual / q.scale() };
            (1, ratio)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    let (nonmembers, separator_bad) = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(11, i);
            let dims = ProblemDims::new(rng.random_range(2..=40), rng.random_range(1..=4)).unwrap();
            let m = random_moment(dims, &mut rng);
            let v = classify(&m, TOL).unwrap();
            if !v.is_non_member() {
                return (0u64, 0u64);
            }
            let ok = match &v.witness {
                Witness::SeparatingPolynomial { q, .. } => {
                    sigma_membership_lmi(q, TOL).unwrap().0.is_member() && pair(q, &m).unwrap() < 0.0
                }
                _ => false,
            };
            (1, u64::from(!ok))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    outcome(
        worst < 1e-8 && separator_bad == 0,
        format!(
            "{members} SOS witnesses, max residual/scale {worst:.2e}; {nonmembers} NonMember moment verdicts, \
             {separator_bad} without a valid separator"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("d=1 sandwich Σ ⊆ P ⊆ Σ'", d1_sandwich, Duration::from_secs(30)),
        ("SOS route equivalence", route_equivalence, Duration::from_secs(60)),
        ("moment soundness", moment_soundness, Duration::from_secs(60)),
        ("closed form ⇔ witness matrix", lmi_equivalence, Duration::from_secs(60)),
        ("half-degree reduction", half_degree, Duration::from_secs(300)),
        ("near-target configurations", lemma_approx, Duration::from_secs(30)),
        ("necessary/sufficient gap rate", convergence_rate, Duration::from_secs(60)),
        ("spin witness", spin_witness, Duration::from_secs(30)),
        ("witness self-validation", witness_validation, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {}: {} {name} ({:.1}s, budget {}s) {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
