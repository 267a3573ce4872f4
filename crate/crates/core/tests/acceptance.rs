//! Acceptance criteria, one verdict line each. Exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use opplab_core::congruence::{index_enumerated, index_formula};
use opplab_core::eisenstein::RadialIndicator;
use opplab_core::experiments::{run, Config, ExperimentId, ExperimentReport};
use opplab_core::haar::{estimate_siegel_first_moment, estimate_theta_first_moment, sampler_calibration, verify_second_moment_n2};
use opplab_core::lattice::Interval;
use opplab_core::numtheory::zeta;
use opplab_core::qforms::random_form;
use opplab_core::volume::{estimate_cq, Convergence};

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn experiment(id: ExperimentId, extra: &str) -> ExperimentReport {
    let mut cfg = Config::parse(extra).unwrap();
    cfg.set("seed", SEED);
    let dir = tempfile::tempdir().unwrap();
    run(id, &cfg, dir.path()).unwrap()
}

fn checks_pass(r: &ExperimentReport, needle: &str) -> (bool, usize) {
    let hits: Vec<_> = r.checks.iter().filter(|c| c.name.contains(needle)).collect();
    (!hits.is_empty() && hits.iter().all(|c| c.pass), hits.len())
}

fn annulus() -> RadialIndicator {
    RadialIndicator::annulus(1.0, 2.0).unwrap()
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let mut total = 0;
    let mut equal = 0;
    for n in 2..=4 {
        for q in 1..=12 {
            total += 1;
            equal += (index_enumerated(n, q).unwrap() == index_formula(n, q).unwrap()) as usize;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(equal == total && secs < 10.0, format!("{equal}/{total} (n, q) pairs equal in {secs:.2} s (limit 10 s)"))
}

fn ac2() -> Verdict {
    let r = experiment(ExperimentId::E5, "n = 2 3\nq = 1 2 3 4\ninstances = 100\nmax_radius = 6\n");
    let (ok, _) = checks_pass(&r, "Eisenstein sum");
    let failures = r.checks[0].value;
    verdict(ok && r.wall_time_s < 60.0, format!("800 instances, {failures} mismatches, {:.2} s (limit 60 s)", r.wall_time_s))
}

fn ac3() -> Verdict {
    let r = experiment(ExperimentId::E4, "orbit_instances = 20\norbit_box = 12\n");
    let c = r.checks.iter().find(|c| c.name.starts_with("orbit decomposition")).unwrap();
    verdict(c.pass, format!("20 random (p, q), box radius 12, {} mismatches", c.value))
}

fn ac4() -> Verdict {
    let target = 3.0 * PI;
    let mut pass = true;
    let mut parts = Vec::new();
    for q in 1..=3 {
        let start = Instant::now();
        let e = estimate_siegel_first_moment(&annulus(), &[1, 1], q, 100_000, SEED + q as u64).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let z = (e.mean - target) / e.stderr;
        pass &= z.abs() <= 3.0 && secs < 30.0;
        parts.push(format!("q={q}: {:.4} ± {:.4} (z {z:+.2}, {secs:.1} s)", e.mean, e.stderr));
    }
    verdict(pass, format!("target 3π = {target:.4}; {}", parts.join("; ")))
}

fn ac5() -> Verdict {
    let target = 3.0 * PI / zeta(2).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for q in 1..=3 {
        let e = estimate_theta_first_moment(&annulus(), q, 100_000, SEED + 10 + q as u64).unwrap();
        let nu = index_formula(2, q as u64).unwrap() as f64;
        let z = (nu * e.mean - target) / (nu * e.stderr);
        pass &= z.abs() <= 3.0;
        parts.push(format!("q={q}: {:.4} (z {z:+.2})", nu * e.mean));
    }
    verdict(pass, format!("target 18/π = {target:.4}; {}", parts.join("; ")))
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, ell) in [(1, 1), (2, 1), (3, 1), (3, 2)] {
        let c = verify_second_moment_n2(&annulus(), &annulus(), q, ell, 1_000_000, SEED + 20 + q as u64, 3.0, 1e-4).unwrap();
        pass &= c.pass;
        parts.push(format!("(q,l)=({q},{ell}): {:.4} vs {:.4}", c.lhs.mean, c.rhs));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(pass && secs < 600.0, format!("{}; {secs:.1} s (limit 600 s)", parts.join("; ")))
}

fn ac7() -> Verdict {
    let c = sampler_calibration(1_000_000, SEED).unwrap().into_iter().find(|c| c.name == "P(y>2)").unwrap();
    verdict(
        c.z_score().abs() <= 4.0,
        format!("P(y>2) = {:.5} vs 3/(2π) = {:.5}, z {:+.2}", c.estimate.mean, c.target, c.z_score()),
    )
}

fn ac8() -> Verdict {
    let r = experiment(ExperimentId::E2, "n = 3\nq = 2\nt = 60\nforms = 10\ndev_tol = 0.1\npass_fraction = 0.8\n");
    let (partition, _) = checks_pass(&r, "partition identity");
    let dev = r.checks.iter().find(|c| c.name.contains("max class deviation")).unwrap();
    verdict(
        partition && dev.pass,
        format!("partition identity {}, {:.0}/10 forms within 10%", if partition { "exact" } else { "BROKEN" }, dev.value * 10.0),
    )
}

fn ac9() -> Verdict {
    let r = experiment(
        ExperimentId::E1,
        "n = 3\nshift_p = 1 0 0\nshift_q = 2\nkappas = 0 0.3\nforms = 20\nslope_tol = 0.15\nslope_tol_fixed = 0.15\npass_fraction = 0.8\n",
    );
    let slopes: Vec<_> = r.checks.iter().filter(|c| c.name.contains("slope within")).collect();
    let pass = slopes.len() == 2 && slopes.iter().all(|c| c.pass) && r.wall_time_s < 900.0;
    let fr: Vec<String> = slopes.iter().map(|c| format!("{:.0}%", 100.0 * c.value)).collect();
    verdict(pass, format!("slope fractions (kappa 0, 0.3): {}; {:.1} s (limit 900 s)", fr.join(", "), r.wall_time_s))
}

fn ac10() -> Verdict {
    let form = random_form(3, 2, 1, SEED).unwrap();
    let interval = Interval::new(-1.0, 1.0).unwrap();
    let est = estimate_cq(&form, interval, &[20.0, 40.0, 80.0], 10_000_000, SEED, Convergence::default()).unwrap();
    let (a, b) = (est.points[1], est.points[2]);
    let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let gap = (b.c_hat - a.c_hat).abs();
    let allowed = 0.02 * b.c_hat + 3.0 * combined;
    verdict(
        gap <= allowed,
        format!("c(20,40,80) = {:.4}, {:.4}, {:.4}; |c(80) - c(40)| = {gap:.4} <= {allowed:.4}", est.points[0].c_hat, a.c_hat, b.c_hat),
    )
}

fn ac11() -> Verdict {
    let r = experiment(ExperimentId::E8, "random_n = 1 2 3\nrandom_alphas = 100\n");
    let needles = ["Fibonacci", "Dirichlet inequality on random", "Lagarias inequality on random", "kappa_window(5, 1, 1)"];
    let mut pass = true;
    let mut parts = Vec::new();
    for needle in needles {
        let (ok, _) = checks_pass(&r, needle);
        pass &= ok;
        parts.push(format!("{needle}: {}", if ok { "ok" } else { "FAIL" }));
    }
    verdict(pass, format!("{} ({:.1} s)", parts.join(", "), r.wall_time_s))
}

fn ac12() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut same = 0;
    for (id, _) in common::SMALL {
        same += common::deterministic(id, &common::small_config(id, SEED), dir.path()) as usize;
    }
    verdict(same == 8, format!("{same}/8 experiments byte-identical on rerun (1 vs 3 workers)"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("index formula equals enumeration", ac1),
        ("Siegel transform equals the Eisenstein sum", ac2),
        ("orbit decomposition", ac3),
        ("first moment on Y_{p/q}", ac4),
        ("first moment of the incomplete Eisenstein series", ac5),
        ("second moment, n = 2", ac6),
        ("Haar sampler calibration", ac7),
        ("congruence equidistribution", ac8),
        ("counting growth", ac9),
        ("volume asymptotics", ac10),
        ("Diophantine suite", ac11),
        ("determinism", ac12),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += !v.pass as usize;
        println!(
            "AC{:<2} {} {name}: {} [{:.1} s]",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
