//! Scenario runners: each one turns a config into a report with metrics,
//! pass/fail criteria and CSV tables.

use std::fmt;
use std::sync::Arc as Shared;

use cgolab::cauchy::{ConjugatedInverse, Side, TransformPlan};
use cgolab::cgo::{build_amplitude, cgo_residual, factorization_check, CgoSolution};
use cgolab::field::{
    Arc, BoundaryPartition, BoxRegion, CutoffFunction, Edge, Grid2D, GridField, Label, MatrixField, ScalarField,
    VectorField,
};
use cgolab::fit::{fit_decay, fit_power_law, refinement_orders};
use cgolab::fixtures::{bump, bump_value, disk_indicator, rng};
use cgolab::forward::CoefficientTriple;
use cgolab::harness::gauge::gauge_transform;
use cgolab::harness::relations::FieldNorms;
use cgolab::harness::{
    carleman_probe, check_relations, corollary_pipeline, dirichlet_test_family, gauge_equivalence_experiment,
    separation_experiment, CarlemanProbe, CorollaryCase, GaugeSpec, QBump, TripleRecipe,
};
use cgolab::weight::{
    oscillatory_integral, stationary_phase_leading_field, weight_catalog, CarlemanConvexWeight, HolomorphicWeight,
    WeightSpec,
};
use cgolab::{Complex64, LabError};
use rand::Rng;

use crate::config::{ConfigError, PairKind, Scenario, ScenarioConfig};
use crate::jobs::run_jobs;
use crate::report::{num, Criterion, Report, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical { module: &'static str, source: LabError },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Numerical { module, source } => write!(f, "{module}: {source}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

trait InModule<T> {
    fn module(self, name: &'static str) -> Result<T, RunError>;
}

impl<T> InModule<T> for cgolab::Result<T> {
    fn module(self, name: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical { module: name, source })
    }
}

pub fn run_scenario(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    cfg.validate()?;
    match cfg.scenario {
        Scenario::Transforms => transforms(cfg, jobs),
        Scenario::Cgo => cgo(cfg, jobs),
        Scenario::Gauge => gauge(cfg, jobs),
        Scenario::Carleman => carleman(cfg, jobs),
        Scenario::StationaryPhase => stationary_phase(cfg),
        Scenario::Relations => relations(cfg, jobs),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit(nx: usize) -> Result<Grid2D, RunError> {
    Grid2D::unit_square(nx).module("field-core")
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn weight_or(cfg: &ScenarioConfig, default: WeightSpec) -> WeightSpec {
    cfg.weight.unwrap_or(default)
}

const CENTERED: WeightSpec = WeightSpec::Quadratic { center: [0.5, 0.5] };

/// Smooth holomorphic seed vector with `n` components.
pub fn holomorphic_seed(g: Grid2D, n: usize) -> VectorField {
    VectorField::from_fn(g, n, |z| {
        (0..n)
            .map(|r| if r == 0 { z * z + 1.0 } else { (z * (0.5 * r as f64)).exp() })
            .collect()
    })
}

// ---------------------------------------------------------------- transforms

fn round_trip_source(g: Grid2D) -> ScalarField {
    bump(g, c(0.5, 0.45), 0.35).mul(&ScalarField::from_fn(g, |z| c(1.0, 0.5) + z * z - z.conj() * 0.3))
}

/// Conjugated inverse on the fixed decay family: `g = bump(x~, 0.4) |z - x~|^2 (1 + x)`
/// vanishing at the critical point `x~`, `B = (0.8 + 0.3i)(1 + 0.5 sin(3x) y)`,
/// cutoff plateau `[0.08, 0.92]^2` inside support `[0.03, 0.97]^2`.
fn decay_family(
    plan: Shared<TransformPlan>,
    weight: &HolomorphicWeight,
    side: Side,
) -> Result<(ConjugatedInverse, VectorField), RunError> {
    let g = *plan.grid();
    let center = weight.critical_points.first().map(|p| p.location).unwrap_or(c(0.5, 0.5));
    let b = MatrixField::from_fn(g, 1, |z| vec![c(0.8, 0.3) * (1.0 + 0.5 * (3.0 * z.re).sin() * z.im)]);
    let cutoff = CutoffFunction::smooth_box(g, BoxRegion::new(0.08, 0.92, 0.08, 0.92), BoxRegion::new(0.03, 0.97, 0.03, 0.97))
        .module("field-core")?;
    let src = ScalarField::from_fn(g, |z| c(bump_value(z, center, 0.4) * (z - center).norm_sqr() * (1.0 + z.re), 0.0));
    let op = ConjugatedInverse::new(plan, b, cutoff, side).module("cauchy-transform")?;
    Ok((op, src.to_vector()))
}

struct TransformRow {
    nx: usize,
    round_trip: [f64; 2],
    identity: [f64; 2],
}

fn transforms(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    let spec = weight_or(cfg, CENTERED);
    let tau0 = cfg.identity_tau;
    let rows: Vec<Result<TransformRow, RunError>> = run_jobs(jobs, &cfg.grid_ladder, |&nx| {
        let g = unit(nx)?;
        let plan = Shared::new(TransformPlan::new(g).module("cauchy-transform")?);
        let src = round_trip_source(g);
        let mut round_trip = [0.0; 2];
        let mut identity = [0.0; 2];
        let weight = weight_catalog(spec, &BoundaryPartition::top_bottom(g)).module("weight-phase")?;
        for (k, side) in [Side::Zbar, Side::Z].into_iter().enumerate() {
            let w = plan.apply(side, &src);
            round_trip[k] = side.derivative(&w).sub(&src).inner_max_abs(2);
            let (op, f) = decay_family(plan.clone(), &weight, side)?;
            let r = op.apply(&f, &weight, tau0).module("cauchy-transform")?;
            identity[k] = op.identity_defect(&r, &f, &weight, tau0).inner_max_abs(2);
        }
        Ok(TransformRow { nx, round_trip, identity })
    });
    let rows: Vec<TransformRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut rep = Report::new(cfg);
    let mut table = Table::new("transforms", &["nx", "round_trip_zbar", "round_trip_z", "identity_zbar", "identity_z"]);
    for r in &rows {
        table.push(vec![
            r.nx.to_string(),
            num(r.round_trip[0]),
            num(r.round_trip[1]),
            num(r.identity[0]),
            num(r.identity[1]),
        ]);
    }
    let h: Vec<f64> = cfg.grid_ladder.iter().map(|&n| 1.0 / (n - 1) as f64).collect();
    if rows.len() >= 2 {
        for (k, label) in ["zbar", "z"].iter().enumerate() {
            let rt = refinement_orders(&h, &rows.iter().map(|r| r.round_trip[k]).collect::<Vec<_>>());
            let id = refinement_orders(&h, &rows.iter().map(|r| r.identity[k]).collect::<Vec<_>>());
            rep.criteria.push(Criterion::at_least(&format!("round_trip_order_{label}"), min(&rt), 1.8));
            rep.criteria.push(Criterion::at_least(&format!("identity_order_{label}"), min(&id), 1.8));
            rep.metric(&format!("round_trip_orders_{label}"), rt);
            rep.metric(&format!("identity_orders_{label}"), id);
        }
    }

    // disk indicator on (-2, 2)^2 at the finest size; the transform is conj(z) inside
    let finest = *cfg.grid_ladder.last().expect("validated");
    let dg = Grid2D::square(-2.0, 2.0, finest).module("field-core")?;
    let dplan = TransformPlan::new(dg).module("cauchy-transform")?;
    let t = dplan.dzbar_inv(&disk_indicator(dg, c(0.0, 0.0), 1.0));
    let disk_err = (0..dg.len())
        .filter(|&k| dg.z_at(k).norm() <= 0.9)
        .map(|k| (t.values()[k] - dg.z_at(k).conj()).norm())
        .fold(0.0, f64::max);
    rep.metric("disk_interior_error", disk_err);
    rep.criteria.push(Criterion::below("disk_interior_error", disk_err, 5e-3));

    // τ-decay of the conjugated inverse against its leading profile
    let g = unit(finest)?;
    let plan = Shared::new(TransformPlan::new(g).module("cauchy-transform")?);
    let weight = weight_catalog(spec, &BoundaryPartition::top_bottom(g)).module("weight-phase")?;
    let mut decay = Table::new("decay", &["tau", "scaled_deviation_z", "scaled_deviation_zbar", "nodes_per_period"]);
    let mut dev_z = Vec::new();
    let ops = [decay_family(plan.clone(), &weight, Side::Z)?, decay_family(plan, &weight, Side::Zbar)?];
    for &tau in cfg.taus() {
        let mut vals = [0.0; 2];
        for (k, (op, f)) in ops.iter().enumerate() {
            let r = op.apply(f, &weight, tau).module("cauchy-transform")?;
            vals[k] = tau * r.sub(&op.leading_profile(f, &weight, tau)).l2_norm();
        }
        dev_z.push(vals[0]);
        decay.push(vec![tau.to_string(), num(vals[0]), num(vals[1]), num(weight.nodes_per_period(&g, tau))]);
    }
    if dev_z.len() >= 2 {
        let decreasing = dev_z.windows(2).all(|w| w[1] < w[0]);
        rep.criteria.push(Criterion::flag("decay_strictly_decreasing", decreasing));
    }
    rep.metric("decay_nx", finest);
    rep.metric("scaled_deviation_z", &dev_z);
    rep.tables = vec![table, decay];
    Ok(rep)
}

// ----------------------------------------------------------------------- cgo

struct CgoRow {
    nx: usize,
    amplitude_residual: f64,
    stencil_residual: f64,
    records: Vec<cgolab::cgo::CgoDecayRecord>,
    factorization: cgolab::cgo::FactorizationReport,
}

fn cgo(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    let spec = weight_or(cfg, CENTERED);
    let n = cfg.n_sys;
    let rows: Vec<Result<CgoRow, RunError>> = run_jobs(jobs, &cfg.grid_ladder, |&nx| {
        let g = unit(nx)?;
        let coefs = CoefficientTriple::random_smooth(g, n, cfg.seed, 1.0);
        let weight = weight_catalog(spec, &BoundaryPartition::top_bottom(g)).module("weight-phase")?;
        let amp = build_amplitude(&coefs, &holomorphic_seed(g, n), None).module("cgo-builder")?;
        let (amplitude_residual, stencil_residual) = (amp.residual, amp.stencil_residual);
        let mut records = Vec::new();
        for &tau in cfg.taus() {
            let sol = CgoSolution::new(amp.clone(), weight.clone(), tau, &coefs).module("cgo-builder")?;
            records.push(cgo_residual(&sol, &coefs).module("cgo-builder")?);
        }
        let v = VectorField::from_fn(g, n, |z| (0..n).map(|r| (z * (2.0 + r as f64)).sin() + z.conj() * z).collect());
        let factorization = factorization_check(&coefs, &v).module("cgo-builder")?;
        Ok(CgoRow {
            nx,
            amplitude_residual,
            stencil_residual,
            records,
            factorization,
        })
    });
    let rows: Vec<CgoRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut rep = Report::new(cfg);
    let mut table = Table::new("cgo_decay", &["tau", "nx", "residual_weighted", "residual_raw"]);
    let mut samples = Vec::new();
    for r in &rows {
        for rec in &r.records {
            table.push(vec![rec.tau.to_string(), rec.nx.to_string(), num(rec.residual_weighted), num(rec.residual_raw)]);
            if rec.tau > 0.0 {
                samples.push((rec.tau, 1.0 / (rec.nx - 1) as f64, rec.residual_weighted));
            }
        }
    }
    let mut ftable = Table::new("factorization", &["nx", "first_form", "second_form", "five_point", "scale"]);
    for r in &rows {
        let f = &r.factorization;
        ftable.push(vec![r.nx.to_string(), num(f.first_form), num(f.second_form), num(f.five_point), num(f.scale)]);
    }
    let worst_amp = rows.iter().map(|r| r.amplitude_residual).fold(0.0, f64::max);
    rep.metric("amplitude_residual", worst_amp);
    rep.metric("stencil_residual", rows.iter().map(|r| r.stencil_residual).collect::<Vec<_>>());
    rep.criteria.push(Criterion::at_most("amplitude_residual", worst_amp, 1e-8));
    let distinct = |k: usize| {
        let mut v: Vec<f64> = samples.iter().map(|s| if k == 0 { s.0 } else { s.1 }).collect();
        v.dedup();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if samples.len() >= 3 && distinct(0) >= 2 && distinct(1) >= 2 {
        let fixed = fit_power_law(&samples, Some((1.0, 2.0))).module("harness-cli")?;
        let free = fit_power_law(&samples, None).module("harness-cli")?;
        rep.metric("fit_tau_h2", &fixed);
        rep.metric("fit_free", &free);
        rep.criteria.push(Criterion::at_least("fit_tau_h2_r_squared", fixed.r_squared, 0.95));
    }
    if rows.len() >= 2 {
        let h: Vec<f64> = rows.iter().map(|r| 1.0 / (r.nx - 1) as f64).collect();
        let o1 = refinement_orders(&h, &rows.iter().map(|r| r.factorization.first_form).collect::<Vec<_>>());
        let o2 = refinement_orders(&h, &rows.iter().map(|r| r.factorization.second_form).collect::<Vec<_>>());
        rep.criteria.push(Criterion::at_least("factorization_order", min(&o1).min(min(&o2)), 1.8));
        rep.metric("factorization_orders", [o1, o2]);
    }
    rep.tables = vec![table, ftable];
    Ok(rep)
}

// --------------------------------------------------------------------- gauge

fn top_bottom_arcs() -> Vec<Arc> {
    vec![
        Arc { edge: Edge::Bottom, label: Label::GammaTilde },
        Arc { edge: Edge::Right, label: Label::Gamma0 },
        Arc { edge: Edge::Top, label: Label::GammaTilde },
        Arc { edge: Edge::Left, label: Label::Gamma0 },
    ]
}

fn gauge(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    let gcfg = cfg.gauge.unwrap_or_default();
    let recipe = cfg.base.unwrap_or(TripleRecipe::Zero { n_sys: cfg.n_sys });
    let arcs = top_bottom_arcs();
    let rows = run_jobs(jobs, &cfg.grid_ladder, |&nx| {
        gauge_equivalence_experiment(&recipe, gcfg.s, gcfg.profile, &arcs, cfg.basis_size, &[nx], cfg.off_gauge.as_ref())
    });
    let rows: Vec<_> = rows
        .into_iter()
        .map(|r| r.map(|mut rep| rep.rows.remove(0)))
        .collect::<cgolab::Result<_>>()
        .module("theorem-harness")?;
    let mut rep = Report::new(cfg);
    let mut table = Table::new("gauge", &["nx", "h", "distance", "coefficient_gap", "off_gauge_distance"]);
    for r in &rows {
        table.push(vec![
            r.nx.to_string(),
            num(r.h),
            num(r.distance),
            num(r.coefficient_gap),
            r.off_gauge_distance.map(num).unwrap_or_default(),
        ]);
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let orders = refinement_orders(&h, &d);
    rep.metric("orders", &orders);
    rep.metric("distances", &d);
    if rows.len() >= 2 && d[0] > 0.0 {
        rep.criteria.push(Criterion::at_least("distance_order", min(&orders), 1.5));
    }
    let gap = rows.iter().map(|r| r.coefficient_gap).fold(f64::INFINITY, f64::min);
    rep.criteria.push(Criterion::at_least("coefficient_gap", gap, 0.5));
    if let Some(last) = rows.last() {
        if let Some(off) = last.off_gauge_distance {
            let ratio = if last.distance == 0.0 { f64::INFINITY } else { off / last.distance };
            rep.metric("off_gauge_ratio", ratio);
            rep.criteria.push(Criterion::at_least("off_gauge_ratio", ratio, 10.0));
        }
    }
    if let Some(sep) = cfg.separation {
        let s = separation_experiment(&recipe, &arcs, cfg.basis_size, sep.nx, sep.samples, cfg.seed)
            .module("theorem-harness")?;
        let mut st = Table::new("separation", &["sample", "gauge_distance", "off_gauge_distance"]);
        for (k, (a, b)) in s.gauge_distances.iter().zip(&s.off_gauge_distances).enumerate() {
            st.push(vec![k.to_string(), num(*a), num(*b)]);
        }
        rep.tables.push(st);
        rep.metric("separation_ratio", s.ratio);
        rep.criteria.push(Criterion::at_least("separation_ratio", s.ratio, 10.0));
    }
    rep.tables.insert(0, table);
    Ok(rep)
}

// ------------------------------------------------------------------ carleman

/// `Γ0` = bottom and left, `Γ~` = top and right.
fn corner_arcs() -> Vec<Arc> {
    vec![
        Arc { edge: Edge::Bottom, label: Label::Gamma0 },
        Arc { edge: Edge::Right, label: Label::GammaTilde },
        Arc { edge: Edge::Top, label: Label::GammaTilde },
        Arc { edge: Edge::Left, label: Label::Gamma0 },
    ]
}

fn random_constant(g: Grid2D, n: usize, r: &mut impl Rng) -> MatrixField {
    let m: Vec<Complex64> = (0..n * n).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    MatrixField::constant(g, n, &m)
}

fn carleman(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    let spec = weight_or(cfg, WeightSpec::Quadratic { center: [0.0, 0.0] });
    let taus = cfg.taus().to_vec();
    let cases: Vec<(usize, usize)> = (1..=cfg.n_sys)
        .flat_map(|n| cfg.grid_ladder.iter().map(move |&nx| (n, nx)))
        .collect();
    let reports = run_jobs(jobs, &cases, |&(n, nx)| -> Result<Vec<cgolab::harness::CarlemanReport>, RunError> {
        let g = unit(nx)?;
        let convex = CarlemanConvexWeight::new(g, |x, y| x + 0.1 * y, 2.0).module("weight-phase")?;
        let family = dirichlet_test_family(&g, n, 4, cfg.seed);
        let mut r = rng(cfg.seed);
        let b1 = random_constant(g, n, &mut r);
        let b2 = random_constant(g, n, &mut r);
        let part = BoundaryPartition::new(g, corner_arcs()).module("field-core")?;
        let weight = weight_catalog(spec, &part).module("weight-phase")?;
        let coefs = CoefficientTriple::random_smooth(g, n, cfg.seed.wrapping_add(1), 1.0);
        let probes = [
            (CarlemanProbe::FirstOrderDz(convex.clone()), family.clone()),
            (CarlemanProbe::FirstOrderDzbar(convex.clone()), family.clone()),
            (
                CarlemanProbe::SystemZeroOrder { weight: convex, b1, b2 },
                dirichlet_test_family(&g, n * n, 4, cfg.seed),
            ),
            (CarlemanProbe::FullOperator { weight, coefs, part }, family),
        ];
        probes
            .iter()
            .map(|(p, f)| carleman_probe(p, &taus, f))
            .collect::<cgolab::Result<Vec<_>>>()
            .module("theorem-harness")
    });
    let mut rep = Report::new(cfg);
    let mut table = Table::new("carleman", &["kind", "n_sys", "nx", "tau", "sup_ratio"]);
    for (&(n, nx), reps) in cases.iter().zip(reports) {
        for r in reps? {
            let kind = serde_json::to_value(r.kind).expect("kind serializes");
            let kind = kind.as_str().expect("unit variant").to_string();
            for (tau, s) in r.taus.iter().zip(&r.sup_ratios) {
                table.push(vec![kind.clone(), n.to_string(), nx.to_string(), tau.to_string(), s.map(num).unwrap_or_default()]);
            }
            let upper = r.upper_sup.unwrap_or(0.0);
            let name = format!("{kind}_n{n}_nx{nx}");
            rep.criteria.push(Criterion {
                name: name.clone(),
                pass: r.pass,
                value: upper / r.lower_sup.unwrap_or(1.0),
                threshold: "<= 1 (upper-half sup over lower-half sup)".into(),
            });
            rep.metric(&name, &r);
        }
    }
    rep.tables = vec![table];
    Ok(rep)
}

// ---------------------------------------------------------- stationary phase

fn stationary_phase(cfg: &ScenarioConfig) -> Result<Report, RunError> {
    let spec = weight_or(cfg, CENTERED);
    let nx = *cfg.grid_ladder.last().expect("validated");
    let g = unit(nx)?;
    let w = weight_catalog(spec, &BoundaryPartition::top_bottom(g)).module("weight-phase")?;
    let Some(p) = w.critical_points.first().copied() else {
        return Err(RunError::Numerical {
            module: "weight-phase",
            source: LabError::Precondition("the weight has no critical point in the domain".into()),
        });
    };
    let x = p.location;
    let edge = x.re.min(1.0 - x.re).min(x.im).min(1.0 - x.im);
    let radius = 0.4f64.min(edge);
    if radius <= 4.0 * g.h() {
        return Err(RunError::Numerical {
            module: "weight-phase",
            source: LabError::Precondition("the critical point is too close to the boundary".into()),
        });
    }
    let amp = ScalarField::from_fn(g, |z| (1.0 + 0.5 * z.re + c(0.0, 0.3) * z.im * z.im) * bump_value(z, x, radius));
    let plain = ScalarField::from_fn(g, |z| c((1.0 + 0.5 * z.re) * bump_value(z, x, radius), 0.0));
    let vanishing = ScalarField::from_fn(g, |z| (z - x) * (1.0 + 0.5 * z.re) * bump_value(z, x, radius));
    let mut table = Table::new(
        "stationary_phase",
        &["tau", "integral_re", "integral_im", "leading_re", "leading_im", "relative_error", "plain_abs", "vanishing_abs"],
    );
    let (mut rel, mut pl, mut va) = (Vec::new(), Vec::new(), Vec::new());
    let mut resolved = true;
    for &tau in cfg.taus() {
        resolved &= w.check_resolution(&g, tau);
        let full = oscillatory_integral(&amp, &w, tau);
        let mut lead = c(0.0, 0.0);
        for q in &w.critical_points {
            lead += stationary_phase_leading_field(&amp, q, tau).module("weight-phase")?;
        }
        let r = (full - lead).norm() / lead.norm();
        let (a, b) = (oscillatory_integral(&plain, &w, tau).norm(), oscillatory_integral(&vanishing, &w, tau).norm());
        rel.push((tau, r));
        pl.push((tau, a));
        va.push((tau, b));
        table.push(vec![tau.to_string(), num(full.re), num(full.im), num(lead.re), num(lead.im), num(r), num(a), num(b)]);
    }
    let fr = fit_decay(&rel).module("harness-cli")?;
    let fp = fit_decay(&pl).module("harness-cli")?;
    let fv = fit_decay(&va).module("harness-cli")?;
    let mut rep = Report::new(cfg);
    rep.metric("nx", nx);
    rep.metric("relative_error_fit", &fr);
    rep.metric("plain_fit", &fp);
    rep.metric("vanishing_fit", &fv);
    rep.criteria.push(Criterion::flag("oscillation_resolved", resolved));
    rep.criteria.push(Criterion::at_most("relative_error_slope", fr.slope, -0.8));
    rep.criteria.push(Criterion::at_least("vanishing_slope_margin", fp.slope - fv.slope, 0.3));
    rep.tables = vec![table];
    Ok(rep)
}

// ----------------------------------------------------------------- relations

const DEFAULT_Q_BUMP: QBump = QBump {
    center: [0.4, 0.6],
    radius: 0.25,
    amplitude: [3.0, -1.0],
};

struct RelationRow {
    nx: usize,
    a1: FieldNorms,
    a2: FieldNorms,
    boundary_gap: f64,
    perturbation: Option<FieldNorms>,
    cases: Vec<(CorollaryCase, Option<f64>)>,
}

fn relations(cfg: &ScenarioConfig, jobs: usize) -> Result<Report, RunError> {
    let gcfg = cfg.gauge.unwrap_or_default();
    let rows = run_jobs(jobs, &cfg.grid_ladder, |&nx| -> Result<RelationRow, RunError> {
        let g = unit(nx)?;
        let part = BoundaryPartition::new(g, top_bottom_arcs()).module("field-core")?;
        let t1 = CoefficientTriple::random_smooth(g, cfg.n_sys, cfg.seed, 0.5);
        let t2 = match cfg.pair {
            PairKind::Identical => t1.clone(),
            PairKind::Gauge => {
                let gs = GaugeSpec::new(gcfg.s, gcfg.profile, &part).module("theorem-harness")?;
                gauge_transform(&t1, &gs)
            }
            PairKind::QBump => cfg.off_gauge.unwrap_or(DEFAULT_Q_BUMP).apply(&t1),
        };
        let r = check_relations(&t1, &t2, &part).module("theorem-harness")?;
        let perturbation = (cfg.pair == PairKind::QBump).then(|| FieldNorms::of(&t1.q().sub(t2.q())));
        let cases = [CorollaryCase::QKnown, CorollaryCase::BKnown, CorollaryCase::AKnown]
            .into_iter()
            .map(|case| (case, corollary_pipeline(case, &t1, &t2).ok().map(|c| c.max_l2())))
            .collect();
        Ok(RelationRow {
            nx,
            a1: r.a1,
            a2: r.a2,
            boundary_gap: r.boundary_gap,
            perturbation,
            cases,
        })
    });
    let rows: Vec<RelationRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let mut rep = Report::new(cfg);
    let mut table = Table::new("relations", &["nx", "r_a1_l2", "r_a2_l2", "r_a1_max", "r_a2_max", "boundary_gap"]);
    for r in &rows {
        table.push(vec![
            r.nx.to_string(),
            num(r.a1.l2),
            num(r.a2.l2),
            num(r.a1.max),
            num(r.a2.max),
            num(r.boundary_gap),
        ]);
    }
    let gap = rows.iter().map(|r| r.boundary_gap).fold(0.0, f64::max);
    rep.criteria.push(Criterion::flag("boundary_gap_zero", gap == 0.0));
    let worst: Vec<f64> = rows.iter().map(|r| r.a1.l2.max(r.a2.l2)).collect();
    rep.metric("residual_l2", &worst);
    let case_metrics: Vec<_> = rows
        .iter()
        .map(|r| {
            r.cases
                .iter()
                .map(|(case, v)| serde_json::json!({"case": case, "max_l2": v, "precondition_met": v.is_some()}))
                .collect::<Vec<_>>()
        })
        .collect();
    rep.metric("corollary_cases", case_metrics);
    match cfg.pair {
        PairKind::Identical => {
            let zero = rows.iter().all(|r| r.a1.max == 0.0 && r.a2.max == 0.0);
            rep.criteria.push(Criterion::flag("residuals_zero", zero));
            let cases_zero = rows.iter().all(|r| r.cases.iter().all(|(_, v)| *v == Some(0.0)));
            rep.criteria.push(Criterion::flag("corollary_residuals_zero", cases_zero));
        }
        PairKind::Gauge => {
            if rows.len() >= 2 {
                let h: Vec<f64> = rows.iter().map(|r| 1.0 / (r.nx - 1) as f64).collect();
                let orders = refinement_orders(&h, &worst);
                rep.criteria.push(Criterion::at_least("residual_order", min(&orders), 1.8));
                rep.metric("orders", orders);
            }
        }
        PairKind::QBump => {
            let dev = rows
                .iter()
                .map(|r| {
                    let p = r.perturbation.expect("set for q_bump pairs");
                    ((r.a1.l2 - p.l2).abs().max((r.a2.l2 - p.l2).abs())) / p.l2
                })
                .fold(0.0, f64::max);
            rep.metric("perturbation_norm_deviation", dev);
            rep.criteria.push(Criterion::at_most("perturbation_norm_match", dev, 1e-12));
        }
    }
    rep.tables = vec![table];
    Ok(rep)
}
