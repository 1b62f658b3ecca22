//! One PASS/FAIL line per acceptance criterion, driven by the shipped configs.

use cgolab::field::{BoundaryPartition, Grid2D, GridField, Label, VectorField};
use cgolab::fixtures::manufactured_dirichlet_error;
use cgolab::forward::{cauchy_data, neumann_trace, CoefficientTriple, ForwardSolver};
use cgolab::Complex64;
use cgolab_cli::{run_scenario, Report, ScenarioConfig};

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn scenario(text: &str) -> Result<Report, String> {
    let cfg = ScenarioConfig::from_json(text).map_err(|e| e.to_string())?;
    run_scenario(&cfg, jobs()).map_err(|e| e.to_string())
}

/// Named report criteria as `(pass, summary)`; missing names fail.
fn select(report: &Result<Report, String>, names: &[&str]) -> (bool, String) {
    let rep = match report {
        Ok(r) => r,
        Err(e) => return (false, e.clone()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        match rep.criterion(name) {
            Some(c) => {
                ok &= c.pass;
                parts.push(format!("{name}={:.4e} ({})", c.value, c.threshold));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn all(report: &Result<Report, String>) -> (bool, String) {
    match report {
        Ok(r) => {
            let names: Vec<&str> = r.criteria.iter().map(|c| c.name.as_str()).collect();
            select(report, &names)
        }
        Err(e) => (false, e.clone()),
    }
}

fn join(a: (bool, String), b: (bool, String)) -> (bool, String) {
    (a.0 && b.0, format!("{}; {}", a.1, b.1))
}

fn manufactured_orders() -> (bool, String) {
    let mut worst = f64::INFINITY;
    for n_sys in 1..=3 {
        for seed in [1u64, 2] {
            let errs: Result<Vec<f64>, _> =
                [17, 33, 65].iter().map(|&n| manufactured_dirichlet_error(n, n_sys, seed)).collect();
            match errs {
                Ok(e) => {
                    for w in e.windows(2) {
                        worst = worst.min((w[0] / w[1]).log2());
                    }
                }
                Err(e) => return (false, e.to_string()),
            }
        }
    }
    (worst >= 1.9, format!("manufactured_order={worst:.3} (>= 1.9)"))
}

fn dtn_linearity() -> (bool, String) {
    let g = Grid2D::unit_square(33).unwrap();
    let part = BoundaryPartition::top_bottom(g);
    let mut worst = 0.0f64;
    for seed in [1u64, 2, 3] {
        let t = CoefficientTriple::random_smooth(g, 2, seed, 0.5);
        let solver = ForwardSolver::new(&t).unwrap();
        let alpha = Complex64::new(0.7, -1.3);
        let one = Complex64::new(1.0, 0.0);
        let f1 = VectorField::from_fn(g, 2, |z| vec![z, z.conj() * z]);
        let f2 = VectorField::from_fn(g, 2, |z| vec![(z * 2.0).exp(), one]);
        let combo = f1.lin_comb(alpha, &f2, one);
        let trace = |f: &VectorField| neumann_trace(&solver.solve(f, None).unwrap(), &part, Label::GammaTilde).unwrap();
        let (n1, n2, n12) = (trace(&f1), trace(&f2), trace(&combo));
        let scale = n12.max_abs() + n1.max_abs() + n2.max_abs();
        for q in 0..n12.values.len() {
            worst = worst.max((n12.values[q] - (alpha * n1.values[q] + n2.values[q])).norm() / scale);
        }
    }
    (worst <= 1e-10, format!("dtn_relative_defect={worst:.3e} (<= 1e-10)"))
}

fn byte_identical_reruns(text: &str) -> (bool, String) {
    let files = |r: Report| -> Vec<String> {
        let mut out = vec![serde_json::to_string_pretty(&r).unwrap()];
        out.extend(r.tables.iter().map(|t| t.to_csv().unwrap()));
        out
    };
    let (a, b) = match (scenario(text), scenario(text)) {
        (Ok(a), Ok(b)) => (files(a), files(b)),
        (Err(e), _) | (_, Err(e)) => return (false, e),
    };
    let g = Grid2D::unit_square(33).unwrap();
    let part = BoundaryPartition::top_bottom(g);
    let t = CoefficientTriple::random_smooth(g, 2, 9, 1.0);
    let c1 = serde_json::to_string(&cauchy_data(&t, &part, 4).unwrap()).unwrap();
    let c2 = serde_json::to_string(&cauchy_data(&CoefficientTriple::random_smooth(g, 2, 9, 1.0), &part, 4).unwrap()).unwrap();
    let same = a == b && c1 == c2;
    (same, format!("report_and_tables_identical={}, cauchy_data_identical={}", a == b, c1 == c2))
}

fn main() {
    let transforms = scenario(include_str!("../../../configs/transforms.json"));
    let relations_gauge = scenario(include_str!("../../../configs/relations-gauge.json"));
    let relations_q = scenario(include_str!("../../../configs/relations-q-bump.json"));
    let results = [
        (
            "cauchy transform round trip and disk",
            select(&transforms, &["round_trip_order_zbar", "round_trip_order_z", "disk_interior_error"]),
        ),
        ("conjugated identity", select(&transforms, &["identity_order_zbar", "identity_order_z"])),
        ("decay for data vanishing at the critical set", select(&transforms, &["decay_strictly_decreasing"])),
        ("stationary phase", all(&scenario(include_str!("../../../configs/stationary-phase.json")))),
        ("cgo identity and factorization", all(&scenario(include_str!("../../../configs/cgo.json")))),
        ("gauge non-uniqueness", all(&scenario(include_str!("../../../configs/gauge.json")))),
        ("relations on gauge pairs and q bump", join(all(&relations_gauge), all(&relations_q))),
        ("carleman probes", all(&scenario(include_str!("../../../configs/carleman.json")))),
        (
            "forward solver",
            join(
                join(manufactured_orders(), dtn_linearity()),
                byte_identical_reruns(include_str!("../../../configs/relations-gauge.json")),
            ),
        ),
    ];
    let mut failed = Vec::new();
    for (k, (label, (pass, detail))) in results.iter().enumerate() {
        println!("{} {} {label}: {detail}", if *pass { "PASS" } else { "FAIL" }, k + 1);
        if !pass {
            failed.push(k + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
