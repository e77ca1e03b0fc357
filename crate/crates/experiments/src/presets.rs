//! Figure presets.
//!
//! Desk scale keeps the Table II system but shortens the block to `N = 16`
//! symbols (`N = 32` for the Q~ sweeps and the detection presets, whose
//! CFAR window needs at least 11 Doppler bins). `scale = s` instead sets
//! `N = round(143 s)` and scales the desk trial count by `s` relative to
//! the desk block length, so `scale = 1` is the full Table II block.

use anyhow::{bail, Result};
use vcpsense::analysis::stats::{validate_lemmas, validate_propositions, StatReport, StatSetup, Tolerances};
use vcpsense::analysis::{from_db, sinr_ccc_vcp, sinr_cos, sinr_ratio_vcp, Layout, SinrInputs};
use vcpsense::channel::{ScenarioSpec, TargetSpec};
use vcpsense::rdm::RdmKind;
use vcpsense::sensing_vcp::SegmentationParams;
use vcpsense::waveform::{RrcConfig, SystemParams, Waveform, C0};

use crate::config::ExperimentConfig;
use crate::engine::{summarize, summarize_db, Frontend, FrontendKind, Measure, Metric, Plan, Point, RunOutput};
use crate::output::{Curve, ResultRow, ResultTable};

pub const PRESETS: [&str; 8] = [
    "fig3_sinr_vs_gamma0",
    "fig4_sinr_vs_qtilde",
    "fig5_6_sinr_vs_qbar",
    "fig7_8_pd_pfa_vs_gamma0",
    "fig9_10_roc",
    "fig11_pd_vs_qbar",
    "lemma_validation",
    "proposition_validation",
];

/// Symbols per block of the full Table II system.
pub const FULL_N: usize = 143;

/// Where the single target of the Q~ sweep sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// `(Q- - 1) c / (2B)`, as the figure caption reads.
    QBar,
    /// `(Q~ - 1) c / (2B)`, the largest delay the VCP covers.
    QTilde,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub scale: Option<f64>,
}

/// How slots map onto curves and sweep values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Gamma0,
    Point,
    Pf,
}

pub struct Resolved {
    pub params: SystemParams,
    pub trials: usize,
    pub seed: u64,
    pub scale: Option<f64>,
}

fn resolve(base: &ExperimentConfig, ov: &Overrides, desk_n: usize, desk_trials: usize) -> Result<Resolved> {
    let scale = ov.scale.or(base.scale);
    let mut params = base.system;
    let trials = match scale {
        Some(s) if !(s > 0.0 && s.is_finite()) => bail!("scale {s} must be positive and finite"),
        Some(s) => {
            params.n = ((FULL_N as f64 * s).round() as usize).max(1);
            let t = desk_trials as f64 * s * FULL_N as f64 / desk_n as f64;
            ov.trials.unwrap_or((t.round() as usize).max(2))
        }
        None => {
            params.n = desk_n;
            ov.trials.unwrap_or(desk_trials)
        }
    };
    if trials < 1 {
        bail!("trials must be at least 1");
    }
    Ok(Resolved {
        params,
        trials,
        seed: ov.seed.unwrap_or(base.seed),
        scale,
    })
}

fn vcp(m: usize, q: usize, qb: usize) -> Frontend {
    Frontend {
        label: format!("vcp{m}"),
        kind: FrontendKind::Vcp(SegmentationParams::new(m, q, qb)),
    }
}

fn cos() -> Frontend {
    Frontend {
        label: "cos".into(),
        kind: FrontendKind::Cos,
    }
}

fn range_for_delay(samples: f64, bandwidth: f64) -> f64 {
    samples * C0 / (2.0 * bandwidth)
}

/// Segmentation of the Q~ sweep: `M~ = 4 Q~`, `Q- = round(M~ / 3)`.
pub fn qtilde_sweep_seg(q_tilde: usize) -> SegmentationParams {
    let m = 4 * q_tilde;
    SegmentationParams::new(m, q_tilde, (m as f64 / 3.0).round() as usize)
}

/// Target range used by the Q~ sweep.
pub fn qtilde_sweep_range(seg: &SegmentationParams, placement: Placement, bandwidth: f64) -> f64 {
    let d = match placement {
        Placement::QBar => seg.q_bar,
        Placement::QTilde => seg.q_tilde,
    };
    range_for_delay(d as f64 - 1.0, bandwidth)
}

fn gamma_tag(g: f64) -> String {
    format!("_g{}", g)
}

fn kind_name(k: RdmKind) -> &'static str {
    k.as_str()
}

/// Closed-form SINR for a front end, or `None` where no formula applies.
pub fn theory_sinr(fe: &Frontend, kind: RdmKind, params: &SystemParams, gamma0: f64, sigma_p2: f64) -> Option<f64> {
    let layout = match fe.kind {
        FrontendKind::Cos => Layout::Cos {
            m: params.m,
            n: params.n,
            q: params.q,
        },
        FrontendKind::Vcp(seg) => Layout::Vcp {
            total: params.total_samples(),
            seg,
        },
    };
    let inp = SinrInputs {
        gamma0,
        sigma_p2,
        epsilon: None,
        layout,
    };
    match (fe.kind, kind) {
        (FrontendKind::Cos, k) => sinr_cos(&inp, k).ok(),
        (FrontendKind::Vcp(_), RdmKind::Ratio) => sinr_ratio_vcp(&inp).ok(),
        (FrontendKind::Vcp(_), RdmKind::Ccc) => sinr_ccc_vcp(&inp).ok(),
    }
}

fn total_power(s: &ScenarioSpec) -> f64 {
    s.powers_db().iter().map(|&p| from_db(p)).sum()
}

fn tabulate(name: &str, sweep_name: &str, plan: &Plan, run: &RunOutput, axis: Axis, trials: usize, seed: u64, with_theory: bool) -> ResultTable {
    let pfs = if plan.measure.pf_list.is_empty() {
        plan.measure.cfar.map(|c| vec![c.pf]).unwrap_or_default()
    } else {
        plan.measure.pf_list.clone()
    };
    let mut curves: Vec<Curve> = Vec::new();
    let mut push = |curve: String, row: ResultRow| match curves.iter_mut().find(|c| c.name == curve) {
        Some(c) => c.rows.push(row),
        None => curves.push(Curve { name: curve, rows: vec![row] }),
    };
    for (i, slot) in run.slots.iter().enumerate() {
        let point = &plan.points[slot.point];
        let fe = &point.frontends[slot.frontend];
        let g = point.gamma0_db[slot.gamma];
        let mut curve = format!("{}_{}{}", fe.label, kind_name(slot.kind), point.tag);
        let sweep_value = match axis {
            Axis::Gamma0 => g,
            Axis::Point => {
                if point.gamma0_db.len() > 1 {
                    curve.push_str(&gamma_tag(g));
                }
                point.sweep_value
            }
            Axis::Pf => {
                curve.push_str(&gamma_tag(g));
                pfs[slot.pf.unwrap_or(0)]
            }
        };
        let col = run.column(i);
        let (metric, s) = match slot.metric {
            Metric::Sinr => ("sinr_db", summarize_db(&col)),
            Metric::Pd => ("pd", summarize(&col)),
            Metric::Pfa => ("pfa", summarize(&col)),
        };
        let row = |metric: &str, mean: f64, stderr: f64| ResultRow {
            sweep_name: sweep_name.into(),
            sweep_value,
            metric: metric.into(),
            mean,
            stderr,
            trials,
            seed,
        };
        push(curve.clone(), row(metric, s.mean, s.stderr));
        if with_theory && slot.metric == Metric::Sinr {
            if let Some(t) = theory_sinr(fe, slot.kind, &plan.params, from_db(g), total_power(&point.scenario)) {
                push(curve, row("theory_db", 10.0 * t.log10(), 0.0));
            }
        }
    }
    ResultTable {
        preset: name.into(),
        sweep_name: sweep_name.into(),
        curves,
    }
}

fn stat_table(name: &str, report: &StatReport, trials: usize, seed: u64) -> ResultTable {
    let rows = report
        .checks
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            let row = |metric: String, mean: f64| ResultRow {
                sweep_name: "check".into(),
                sweep_value: i as f64,
                metric,
                mean,
                stderr: 0.0,
                trials,
                seed,
            };
            [
                row(c.name.clone(), c.empirical),
                row(format!("{}_theory", c.name), c.theory),
                row(format!("{}_passed", c.name), if c.passed { 1.0 } else { 0.0 }),
            ]
        })
        .collect();
    ResultTable {
        preset: name.into(),
        sweep_name: "check".into(),
        curves: vec![Curve {
            name: "checks".into(),
            rows,
        }],
    }
}

/// Statistics setup used by the lemma and proposition presets: RCP-OTFS
/// block, Table II segmentation, one target.
pub fn stat_setup(params: SystemParams) -> StatSetup {
    StatSetup {
        params: SystemParams {
            waveform: Waveform::RcpOtfs,
            ..params
        },
        seg: SegmentationParams::new(512, 128, 150),
        gamma0: from_db(-20.0),
        sigma_p2: 1.0,
        n_targets: 1,
        max_doppler_bin: 1,
        z_lags: vec![1, 2, 3, 4, 8],
        tolerances: Tolerances::default(),
    }
}

/// A preset resolved into something runnable.
pub enum Job {
    Sweep {
        plan: Plan,
        axis: Axis,
        sweep_name: &'static str,
        theory: bool,
    },
    Lemmas(StatSetup),
    Propositions(StatSetup),
}

pub struct Prepared {
    pub name: String,
    pub job: Job,
    pub resolved: Resolved,
}

pub fn prepare(name: &str, base: &ExperimentConfig, ov: &Overrides) -> Result<Prepared> {
    let sinr = Some(base.sinr);
    let sweep = |plan: Plan, axis, sweep_name, theory| Job::Sweep {
        plan,
        axis,
        sweep_name,
        theory,
    };
    let measure_sinr = Measure {
        sinr,
        cfar: None,
        pf_list: Vec::new(),
        match_tol: (3, 3),
    };
    let gammas_fig3: Vec<f64> = (0..9).map(|i| -30.0 + 5.0 * i as f64).collect();
    let (job, resolved) = match name {
        "fig3_sinr_vs_gamma0" => {
            let r = resolve(base, ov, 16, 50)?;
            let plan = Plan {
                params: r.params,
                points: vec![Point {
                    sweep_value: 0.0,
                    tag: String::new(),
                    scenario: ScenarioSpec::Table2,
                    frontends: vec![cos(), vcp(600, 128, 150), vcp(1200, 128, 150), vcp(1800, 128, 150)],
                    gamma0_db: gammas_fig3,
                }],
                measure: measure_sinr,
                rrc: RrcConfig::default(),
            };
            (sweep(plan, Axis::Gamma0, "gamma0_db", true), r)
        }
        "fig4_sinr_vs_qtilde" => {
            let r = resolve(base, ov, 32, 50)?;
            let plan = qtilde_plan(r.params, &[100, 200, 300, 400], Placement::QBar, 20.0, measure_sinr);
            (sweep(plan, Axis::Point, "q_tilde", true), r)
        }
        "fig5_6_sinr_vs_qbar" => {
            let r = resolve(base, ov, 16, 50)?;
            let points = [0usize, 50, 100, 150, 200, 250]
                .iter()
                .map(|&qb| Point {
                    sweep_value: qb as f64,
                    tag: String::new(),
                    scenario: ScenarioSpec::Table2,
                    frontends: vec![vcp(600, 128, qb), vcp(1200, 128, qb)],
                    gamma0_db: vec![-20.0, 10.0],
                })
                .collect();
            let plan = Plan {
                params: r.params,
                points,
                measure: measure_sinr,
                rrc: RrcConfig::default(),
            };
            (sweep(plan, Axis::Point, "q_bar", true), r)
        }
        "fig7_8_pd_pfa_vs_gamma0" => {
            let r = resolve(base, ov, 32, 200)?;
            let full = r.params.n >= FULL_N;
            let cfar = vcpsense::detector::CfarParams {
                pf: if full { 1e-6 } else { base.cfar.pf },
                ..base.cfar
            };
            let plan = Plan {
                params: r.params,
                points: vec![Point {
                    sweep_value: 0.0,
                    tag: String::new(),
                    scenario: ScenarioSpec::Detection10 { max_range_m: 10.0 },
                    frontends: vec![cos(), vcp(600, 128, 150), vcp(1200, 128, 150)],
                    gamma0_db: (0..7).map(|i| -30.0 + 5.0 * i as f64).collect(),
                }],
                measure: Measure {
                    sinr: None,
                    cfar: Some(cfar),
                    pf_list: Vec::new(),
                    match_tol: (3, 3),
                },
                rrc: RrcConfig::default(),
            };
            (sweep(plan, Axis::Gamma0, "gamma0_db", false), r)
        }
        "fig9_10_roc" => {
            let r = resolve(base, ov, 32, 100)?;
            let points = [100usize, 400]
                .iter()
                .map(|&qt| {
                    let seg = qtilde_sweep_seg(qt);
                    let max_range = qtilde_sweep_range(&seg, Placement::QTilde, r.params.bandwidth);
                    Point {
                        sweep_value: qt as f64,
                        tag: format!("_q{qt}"),
                        scenario: ScenarioSpec::Detection10 { max_range_m: max_range },
                        frontends: vec![
                            cos(),
                            Frontend {
                                label: "vcp".into(),
                                kind: FrontendKind::Vcp(seg),
                            },
                        ],
                        gamma0_db: vec![-15.0, 15.0],
                    }
                })
                .collect();
            let plan = Plan {
                params: r.params,
                points,
                measure: Measure {
                    sinr: None,
                    cfar: Some(base.cfar),
                    pf_list: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
                    match_tol: (3, 3),
                },
                rrc: RrcConfig::default(),
            };
            (sweep(plan, Axis::Pf, "pf", false), r)
        }
        "fig11_pd_vs_qbar" => {
            let r = resolve(base, ov, 32, 100)?;
            let points = [0usize, 50, 100, 150, 200, 250]
                .iter()
                .map(|&qb| Point {
                    sweep_value: qb as f64,
                    tag: String::new(),
                    scenario: ScenarioSpec::Detection10 { max_range_m: 10.0 },
                    frontends: vec![vcp(600, 128, qb), vcp(1200, 128, qb)],
                    gamma0_db: vec![-20.0, 10.0],
                })
                .collect();
            let plan = Plan {
                params: r.params,
                points,
                measure: Measure {
                    sinr: None,
                    cfar: Some(base.cfar),
                    pf_list: Vec::new(),
                    match_tol: (3, 3),
                },
                rrc: RrcConfig::default(),
            };
            (sweep(plan, Axis::Point, "q_bar", false), r)
        }
        "lemma_validation" => {
            let r = resolve(base, ov, 16, 50)?;
            (Job::Lemmas(stat_setup(r.params)), r)
        }
        "proposition_validation" => {
            let r = resolve(base, ov, 16, 50)?;
            (Job::Propositions(stat_setup(r.params)), r)
        }
        other => bail!("unknown preset `{other}`; expected one of {}", PRESETS.join(", ")),
    };
    Ok(Prepared {
        name: name.into(),
        job,
        resolved,
    })
}

/// Single-target sweep over Q~ with the ratios held at 1/4 and 1/3.
pub fn qtilde_plan(params: SystemParams, q_tildes: &[usize], placement: Placement, gamma0_db: f64, measure: Measure) -> Plan {
    let points = q_tildes
        .iter()
        .map(|&qt| {
            let seg = qtilde_sweep_seg(qt);
            Point {
                sweep_value: qt as f64,
                tag: String::new(),
                scenario: ScenarioSpec::Explicit {
                    targets: vec![TargetSpec {
                        power_db: 0.0,
                        range_m: qtilde_sweep_range(&seg, placement, params.bandwidth),
                        velocity_mps: None,
                        alpha: None,
                    }],
                },
                frontends: vec![
                    cos(),
                    Frontend {
                        label: "vcp".into(),
                        kind: FrontendKind::Vcp(seg),
                    },
                ],
                gamma0_db: vec![gamma0_db],
            }
        })
        .collect();
    Plan {
        params,
        points,
        measure,
        rrc: RrcConfig::default(),
    }
}

impl Prepared {
    pub fn run(&self) -> Result<ResultTable> {
        let Resolved { trials, seed, .. } = self.resolved;
        match &self.job {
            Job::Sweep {
                plan,
                axis,
                sweep_name,
                theory,
            } => {
                let run = plan.run(trials, seed)?;
                let mut table = tabulate(&self.name, sweep_name, plan, &run, *axis, trials, seed, *theory);
                // A 1e-6 false-alarm rate cannot be estimated from a few full-scale trials.
                if self.name == "fig7_8_pd_pfa_vs_gamma0" && plan.params.n >= FULL_N {
                    for c in &mut table.curves {
                        c.rows.retain(|r| r.metric != "pfa");
                    }
                }
                Ok(table)
            }
            Job::Lemmas(setup) => Ok(stat_table(&self.name, &validate_lemmas(setup, trials, seed)?, trials, seed)),
            Job::Propositions(setup) => Ok(stat_table(&self.name, &validate_propositions(setup, trials, seed)?, trials, seed)),
        }
    }
}

/// Tabulate an arbitrary plan with the `gamma0_db` axis.
pub fn tabulate_gamma(name: &str, plan: &Plan, run: &RunOutput, trials: usize, seed: u64, theory: bool) -> ResultTable {
    tabulate(name, "gamma0_db", plan, run, Axis::Gamma0, trials, seed, theory)
}

/// Tabulate an arbitrary plan with one sweep value per point.
pub fn tabulate_points(name: &str, sweep_name: &str, plan: &Plan, run: &RunOutput, trials: usize, seed: u64, theory: bool) -> ResultTable {
    tabulate(name, sweep_name, plan, run, Axis::Point, trials, seed, theory)
}
