use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{parse_scenario, Check, Dynamics, MemberSpec, RateBound, Scenario};
use crate::dynamics::{
    closed_form_nonuniq, evolve_grid, evolve_particles, evolve_selfsimilar_pme, DiagnosticsRow, TrajectoryRecord,
};
use crate::energetics::{dissipation, energy, Internal, Kernel, Potential};
use crate::equilibria::{
    barenblatt, dirac_lattice, distance_to_set, kuramoto_order_ratio, kuramoto_sigma, kuramoto_state,
    mckean_vlasov_fixed_point, uniform_state, weak_confinement_state, CompactPowerProfile, Equilibrium,
    EquilibriumSet, Metric, Provenance, SymmetryClass,
};
use crate::error::{Error, Result};
use crate::lasalle::{
    check_center_of_mass, check_convergence_to_set, check_energy_limit, check_energy_monotone,
    check_mass_conservation, check_second_moment_monotone, extract_omega_limit, fit_exponential_rate, gq_integral,
    ms_residual, LasalleReport, SlackRule,
};
use crate::measures::{bounded_lipschitz, moments, write_measure_csv, Measure, ParticleMeasure};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output root; the run writes to `<out>/<id>/`. `None` skips artifacts.
    pub out: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub id: String,
    #[serde(skip)]
    pub wall_time: f64,
    pub steps: usize,
    pub final_diagnostics: Option<DiagnosticsRow>,
    pub report: LasalleReport,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.report.all_pass()
    }

    pub fn verdict_line(&self) -> String {
        let failed: Vec<&str> = self.report.verdicts.iter().filter(|v| !v.pass).map(|v| v.check.as_str()).collect();
        format!(
            "{} {:<22} {:>8.2}s  steps {:<9} {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.id,
            self.wall_time,
            self.steps,
            if failed.is_empty() { String::new() } else { format!("failed: {}", failed.join(", ")) }
        )
    }
}

/// Solution data the checks need besides the equilibrium set.
struct Built {
    eqs: EquilibriumSet,
    outside_p2: Option<bool>,
}

fn initial_mean(mu: &Measure) -> f64 {
    match mu {
        Measure::Grid(g) => moments(g).mean,
        Measure::Particles(p) => moments(p).mean,
    }
}

fn build_equilibria(sc: &Scenario, initial: &Measure) -> Result<Built> {
    let class = if sc.equilibria.translation_quotient {
        SymmetryClass::Translates
    } else if sc.equilibria.members.contains(&MemberSpec::Lattice) {
        SymmetryClass::LatticeFamily
    } else {
        SymmetryClass::Singleton
    };
    let mut eqs = EquilibriumSet::new(class);
    let mut outside_p2 = None;
    let cells = || sc.cells.ok_or_else(|| Error::InvalidModel("equilibrium needs a cell count".into()));
    let closed = |measure: Measure, label: &str| Equilibrium { measure, provenance: Provenance::ClosedForm, label: label.into() };
    for spec in &sc.equilibria.members {
        match spec {
            MemberSpec::Uniform => eqs.push(closed(uniform_state(sc.domain, cells()?)?.into(), "uniform")),
            MemberSpec::Kuramoto { center } => {
                let kappa = match sc.model.interaction {
                    Kernel::Kuramoto { kappa } => kappa,
                    _ => return Err(Error::InvalidModel("kuramoto equilibria need the kuramoto kernel".into())),
                };
                eqs.push(closed(kuramoto_state(kappa, *center, cells()?)?.into(), "kuramoto"));
            }
            MemberSpec::Barenblatt => {
                let Dynamics::SelfSimilarPme { m, .. } = sc.dynamics else {
                    return Err(Error::InvalidModel("barenblatt needs selfsimilar_pme dynamics".into()));
                };
                let half = sc.domain.right().min(-sc.domain.left());
                eqs.push(closed(barenblatt(m, cells()?, half)?.into(), "barenblatt"));
            }
            MemberSpec::WeakConfinement => {
                let Potential::WeakLog { dim } = sc.model.potential else {
                    return Err(Error::InvalidModel("weak confinement state needs the weaklog potential".into()));
                };
                let half = sc.domain.right().min(-sc.domain.left());
                let st = weak_confinement_state(dim, cells()?, half)?;
                outside_p2 = Some(!st.in_p2);
                eqs.push(closed(st.measure.into(), "weak confinement (truncated)"));
            }
            MemberSpec::FixedPoints { seeds, width, damping, max_iter } => {
                let n = cells()?;
                let found = seeds
                    .par_iter()
                    .map(|&c| {
                        let init = crate::measures::GridMeasure::from_fn(sc.domain, n, |x| {
                            (-sc.domain.displacement(c, x).powi(2) / (2.0 * width * width)).exp()
                        })?;
                        let mut eq = mckean_vlasov_fixed_point(&sc.model, &init, *damping, *max_iter)?;
                        eq.label = format!("fixed point from seed {c}");
                        Ok(eq)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for eq in found {
                    eqs.push(eq);
                }
            }
            MemberSpec::CompactPower => {
                let (Internal::Power { m, scale }, Kernel::QuadraticAttraction { kappa }) =
                    (sc.model.internal, &sc.model.interaction)
                else {
                    return Err(Error::InvalidModel("compact_power needs power diffusion and quadratic attraction".into()));
                };
                let profile = CompactPowerProfile::new(m, scale, *kappa, initial_mean(initial))?;
                eqs.push(closed(profile.on_grid(sc.domain, cells()?)?.into(), "compact power profile"));
            }
            MemberSpec::Consensus => {
                let d = ParticleMeasure::dirac(sc.domain, initial_mean(initial))?;
                eqs.push(closed(d.into(), "consensus"));
            }
            MemberSpec::Lattice => {
                let p = initial
                    .as_particles()
                    .ok_or_else(|| Error::InvalidModel("lattice member needs atomic initial data".into()))?;
                eqs.push(dirac_lattice(sc.domain, p.weights(), p.positions(), &sc.model.interaction)?);
            }
            MemberSpec::Initial => eqs.push(closed(initial.clone(), "initial datum")),
            MemberSpec::Dirac { position } => {
                eqs.push(closed(ParticleMeasure::dirac(sc.domain, *position)?.into(), "dirac"));
            }
        }
    }
    Ok(Built { eqs, outside_p2 })
}

/// Builds the stationary set of a scenario without running the flow.
pub fn scenario_equilibria(sc: &Scenario) -> Result<EquilibriumSet> {
    let initial = sc.initial.build(sc.domain, sc.cells)?;
    Ok(build_equilibria(sc, &initial)?.eqs)
}

fn evolve(sc: &Scenario, initial: &Measure, stride: Option<usize>) -> Result<TrajectoryRecord> {
    let mut dynamics = sc.dynamics.clone();
    if let Some(s) = stride {
        dynamics.set_snapshot_stride(s.max(1));
    }
    match (&dynamics, initial) {
        (Dynamics::Grid(c), Measure::Grid(g)) => evolve_grid(&sc.model, g, sc.t_end, c),
        (Dynamics::SelfSimilarPme { m, controls }, Measure::Grid(g)) => evolve_selfsimilar_pme(*m, g, sc.t_end, controls),
        (Dynamics::Particles(c), Measure::Particles(p)) => evolve_particles(&sc.model, p, sc.t_end, c),
        _ => Err(Error::InvalidModel("initial datum does not match the dynamics (density vs atoms)".into())),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn nearest_member<'a>(mu: &Measure, eqs: &'a EquilibriumSet) -> Result<(&'a Equilibrium, f64)> {
    let mut best: Option<(&Equilibrium, f64)> = None;
    for m in &eqs.members {
        let d = bounded_lipschitz(mu, &m.measure)?;
        if best.is_none_or(|b| d < b.1) {
            best = Some((m, d));
        }
    }
    best.ok_or(Error::EmptySet)
}

fn evaluate(
    sc: &Scenario,
    check: &Check,
    record: &TrajectoryRecord,
    built: &Built,
    initial: &Measure,
    report: &mut LasalleReport,
) -> Result<()> {
    let name = check.name();
    let eqs = &built.eqs;
    match check {
        Check::EnergyMonotone { factor } => {
            let r = check_energy_monotone(record, &SlackRule { factor: *factor, cell_width: record.cell_width });
            let detail = match r.failed_index {
                Some(k) => format!("energy rises by more than the slack at row {k} (t = {})", record.rows[k].t),
                None => format!("worst uphill step {}", fmt(r.worst_step)),
            };
            report.record(name, r.pass, detail);
            report.energy_monotone = Some(r);
        }
        Check::MsResidual { relative_tol, window } => {
            let r = ms_residual(record, record.metric_p, *window)?;
            let scale = record
                .rows
                .windows(2)
                .filter(|w| window.is_none_or(|(a, b)| w[0].t >= a && w[0].t <= b))
                .map(|w| ((w[1].energy - w[0].energy) / (w[1].t - w[0].t)).abs())
                .fold(0.0, f64::max);
            let bound = relative_tol * scale;
            report.record(name, r.sup <= bound, format!("sup {} vs {} (h = {})", fmt(r.sup), fmt(bound), fmt(r.h)));
            report.ms_residual_sup = Some(r.sup);
        }
        Check::GqBound => {
            let integral = gq_integral(record);
            let e0 = record.rows[0].energy;
            let tail = &record.rows[record.rows.len() - record.rows.len().div_ceil(10)..];
            let e_inf = tail.iter().map(|r| r.energy).sum::<f64>() / tail.len() as f64;
            let q = sc.model.conjugate_q();
            // trapezoid error on the recorded rows plus the mesh term of the energy slack
            let quadrature: f64 = record
                .rows
                .windows(2)
                .map(|w| (w[1].t - w[0].t) * (w[1].dissipation - w[0].dissipation).abs())
                .sum();
            let e_scale = record.rows.iter().map(|r| r.energy.abs()).fold(0.0, f64::max);
            let h = record.cell_width.unwrap_or(0.0);
            let slack = quadrature + 10.0 * h * h * e_scale + 1e-12;
            let bound = q * (e0 - e_inf) + slack;
            report.record(name, integral <= bound, format!("integral {} vs {}", fmt(integral), fmt(bound)));
            report.gq_integral = Some(integral);
        }
        Check::Convergence { metric, tol, window } => {
            let r = check_convergence_to_set(record, eqs, *metric, *tol, *window, sc.equilibria.translation_quotient)?;
            report.record(name, r.pass, format!("{} distance {} (tol {})", r.metric, fmt(r.final_distance), fmt(*tol)));
            report.convergence = Some(r);
        }
        Check::OmegaLimit { max_clusters, tail } => {
            let w = extract_omega_limit(record, *tail, None)?;
            let pass = w.cluster_count <= *max_clusters;
            let mut detail = format!("{} cluster(s), scatter {}", w.cluster_count, fmt(w.scatter));
            if w.cluster_count > 3 {
                detail.push_str(" (oscillatory tail)");
            }
            report.record(name, pass, detail);
            report.omega_limit_clusters = Some(w.cluster_count);
            report.omega_limit_scatter = Some(w.scatter);
        }
        Check::EnergyLimit { tol, continuous } => {
            let r = check_energy_limit(record, eqs, &sc.model, *tol, *continuous)?;
            report.record(name, r.pass, format!("E_inf {} vs E(rep) {} [{}]", r.e_infinity, r.e_representative, r.note));
            report.energy_limit = Some(r);
        }
        Check::SecondMoment { tol } => {
            let r = check_second_moment_monotone(record, *tol);
            report.record(name, r.pass, format!("largest increase {}", fmt(r.worst)));
            report.moment_checks.push(r);
        }
        Check::Mass { bound } => {
            let r = check_mass_conservation(record, *bound);
            report.record(name, r.pass, format!("worst defect {}", fmt(r.worst)));
            report.moment_checks.push(r);
        }
        Check::CenterOfMass { tol } => {
            let r = check_center_of_mass(record, *tol);
            report.record(name, r.pass, format!("drift {}", fmt(r.worst)));
            report.moment_checks.push(r);
        }
        Check::Rate { window, min, slack, target } => {
            let metric = Metric::W1;
            let series = record
                .snapshots
                .par_iter()
                .map(|s| Ok((record.rows[s.row].t, distance_to_set(&s.measure, eqs, metric, sc.equilibria.translation_quotient)?)))
                .collect::<Result<Vec<_>>>()?;
            let win = window.unwrap_or((0.0, sc.t_end));
            let fit = fit_exponential_rate(&series, win)?;
            let mut pass = true;
            let mut detail = format!("rate {} (R² {})", fit.rate, fit.goodness);
            if let Some(bound) = min {
                let delta = match bound {
                    RateBound::Value(v) => *v,
                    RateBound::Consensus => match (&sc.model.interaction, initial.as_particles()) {
                        (Kernel::Hk(k), Some(p)) => {
                            let d = p.positions().last().unwrap() - p.positions()[0];
                            k.spec().consensus_rate(d)
                        }
                        _ => return Err(Error::InvalidModel("consensus rate bound needs HK particles".into())),
                    },
                };
                pass &= fit.rate >= delta * (1.0 - slack);
                detail.push_str(&format!(", bound {delta}"));
            }
            if let Some((t, tol)) = target {
                pass &= (fit.rate - t).abs() <= *tol;
                detail.push_str(&format!(", target {t} ± {tol}"));
            }
            report.record(name, pass, detail);
        }
        Check::ClosedForm { curve, tol } => {
            let mut worst = 0.0f64;
            for s in &record.snapshots {
                let t = record.rows[s.row].t;
                let exact = closed_form_nonuniq(*curve, sc.domain, t)?;
                let got = s
                    .measure
                    .as_particles()
                    .ok_or_else(|| Error::InvalidModel("closed-form check needs particle snapshots".into()))?;
                if got.len() != exact.len() {
                    worst = f64::INFINITY;
                    break;
                }
                for (a, b) in got.positions().iter().zip(exact.positions()) {
                    worst = worst.max((a - b).abs());
                }
            }
            report.record(name, worst <= *tol, format!("max position error {}", fmt(worst)));
        }
        Check::MinGap => {
            let Kernel::Hk(k) = &sc.model.interaction else {
                return Err(Error::InvalidModel("min_gap needs the HK kernel".into()));
            };
            let lip = k.lipschitz();
            let gap0 = record.rows[0].particles.map(|p| p.min_gap).unwrap_or(f64::NAN);
            let mut failed = None;
            for (i, r) in record.rows.iter().enumerate() {
                let g = r.particles.map(|p| p.min_gap).unwrap_or(f64::NAN);
                if !(g >= gap0 * (-lip * r.t).exp() * (1.0 - 1e-6)) && failed.is_none() {
                    failed = Some(i);
                }
            }
            report.record(name, failed.is_none(), match failed {
                Some(i) => format!("gap below bound at row {i}"),
                None => format!("gap0 {gap0}, K {lip}"),
            });
        }
        Check::Stationary { tol } => {
            let worst = record.rows.iter().map(|r| r.dissipation).fold(0.0, f64::max);
            report.record(name, worst <= *tol, format!("max dissipation {}", fmt(worst)));
        }
        Check::EquilibriaDissipation { tol } => {
            let worst = eqs.max_dissipation(&sc.model)?;
            report.record(name, worst <= *tol, format!("max member dissipation {}", fmt(worst)));
        }
        Check::DistinctEquilibria { gap } | Check::MergedEquilibria { gap } => {
            let n = eqs.members.len();
            let mut widest = 0.0f64;
            for i in 0..n {
                for j in i + 1..n {
                    widest = widest.max(bounded_lipschitz(&eqs.members[i].measure, &eqs.members[j].measure)?);
                }
            }
            let pass = if matches!(check, Check::DistinctEquilibria { .. }) { n >= 2 && widest > *gap } else { widest < *gap };
            report.record(name, pass, format!("{n} member(s), widest BL gap {}", fmt(widest)));
        }
        Check::OutsideP2 => {
            let flagged = built.outside_p2.unwrap_or(false);
            if flagged {
                report.notes.push("limit lies outside P2: its untruncated second moment diverges".into());
            }
            report.record(name, flagged, if flagged { "limit flagged outside P2" } else { "limit not flagged" });
        }
        Check::Nearest { label } => {
            let last = record.final_measure().ok_or_else(|| Error::InvalidMeasure("empty record".into()))?;
            let (m, d) = nearest_member(last, eqs)?;
            report.record(name, m.label.contains(label.as_str()), format!("nearest `{}` at BL {}", m.label, fmt(d)));
        }
        Check::SigmaResidual { tol } => {
            let kappa = sc.kappa().ok_or_else(|| Error::InvalidModel("sigma residual needs a coupling".into()))?;
            let sigma = kuramoto_sigma(kappa, *tol, true)?;
            let residual = (kappa * kuramoto_order_ratio(sigma) - sigma).abs();
            report.record(name, residual < *tol, format!("sigma {sigma}, residual {}", fmt(residual)));
        }
        Check::EquilibriumEnergyBelow { value } => {
            let mut worst = f64::NEG_INFINITY;
            for m in &eqs.members {
                if m.label != "uniform" {
                    worst = worst.max(energy(&sc.model, &m.measure)?);
                }
            }
            report.record(name, worst < *value, format!("largest non-uniform member energy {worst}"));
        }
    }
    Ok(())
}

fn write(path: &Path, text: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    artifacts.push(path.to_path_buf());
    Ok(())
}

fn write_artifacts(
    dir: &Path,
    sc: &Scenario,
    record: &TrajectoryRecord,
    eqs: &EquilibriumSet,
    report: &LasalleReport,
) -> Result<Vec<PathBuf>> {
    let mut artifacts = Vec::new();
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| Error::io(format!("clearing {}", dir.display()), e))?;
    }
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps).map_err(|e| Error::io(format!("creating {}", snaps.display()), e))?;
    write(&dir.join("diagnostics.csv"), &record.diagnostics_csv(), &mut artifacts)?;
    let mut index = String::from("index,t,file\n");
    for (k, s) in record.snapshots.iter().enumerate() {
        let file = format!("snapshot_{k:05}.csv");
        write_measure_csv(&snaps.join(&file), &s.measure)?;
        index.push_str(&format!("{k},{},{file}\n", record.rows[s.row].t));
    }
    write(&snaps.join("index.csv"), &index, &mut artifacts)?;
    artifacts.push(snaps);
    let eq_dir = dir.join("equilibria");
    eqs.write_dir(&eq_dir, &sc.model)?;
    artifacts.push(eq_dir);
    write(&dir.join("report.json"), &report.to_json()?, &mut artifacts)?;
    write(&dir.join("summary.txt"), &report.summary(), &mut artifacts)?;
    Ok(artifacts)
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    run_inner(sc, opts).map_err(|e| Error::Scenario { id: sc.id.clone(), source: Box::new(e) })
}

fn run_inner(sc: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    let initial = sc.initial.build(sc.domain, sc.cells)?;
    let built = build_equilibria(sc, &initial)?;
    let mut record = evolve(sc, &initial, opts.snapshot_stride)?;
    if sc.checks.iter().any(|c| matches!(c, Check::MsResidual { .. })) {
        record.fill_metric_derivatives()?;
    }
    let mut report = LasalleReport::default();
    for w in &record.warnings {
        report.notes.push(w.clone());
    }
    if let Some(t) = record.steady_from {
        report.notes.push(format!("flow reached a discrete fixed point at t = {t}"));
    }
    for check in &sc.checks {
        evaluate(sc, check, &record, &built, &initial, &mut report)?;
    }
    let artifacts = match &opts.out {
        Some(root) => write_artifacts(&root.join(&sc.id), sc, &record, &built.eqs, &report)?,
        None => Vec::new(),
    };
    Ok(RunSummary {
        id: sc.id.clone(),
        wall_time: started.elapsed().as_secs_f64(),
        steps: record.steps,
        final_diagnostics: record.rows.last().cloned(),
        report,
        artifacts,
    })
}

/// Every `*.cfg` in `dir`, sorted by file name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(format!("listing {}", dir.display()), e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario in `dir` with at most `parallelism` concurrent runs; results keep file order.
pub fn run_suite(dir: &Path, parallelism: usize, opts: &RunOptions) -> Result<Vec<Result<RunSummary>>> {
    let files = scenario_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let sc = parse_scenario(f).map_err(|e| Error::Scenario {
                    id: f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                    source: Box::new(e),
                })?;
                run(&sc, opts)
            })
            .collect()
    }))
}

/// Energy and dissipation of each member, for listing.
pub fn describe_equilibria(sc: &Scenario, eqs: &EquilibriumSet) -> Result<Vec<(String, f64, f64)>> {
    eqs.members
        .iter()
        .map(|m| Ok((m.label.clone(), energy(&sc.model, &m.measure)?, dissipation(&sc.model, &m.measure)?)))
        .collect()
}
