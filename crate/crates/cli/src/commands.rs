use std::path::Path;

use gossicrypt::adversary::{AdversaryError, InterceptRecord};
use gossicrypt::analysis::{
    breach_probability, energy_compare, f1_over_paths, path_length_distribution, success_probability, table1,
    EnergyModel, MarkovModel, SuccessForm,
};
use gossicrypt::crypto::SuiteKind;
use gossicrypt::protocol::{NodeId, Payload};
use gossicrypt::sim::{derive_seed, measure_breach, measure_success, run, GridTopology, SimConfig, Simulation};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_file, apply_override, config_error};
use crate::output::{emit, fmt_float, fmt_opt, to_json, Table};
use crate::{CliError, Command, Common, Format};

pub mod headers {
    macro_rules! header {
        ($name:ident, $help:ident, $cols:literal) => {
            pub const $name: &str = $cols;
            pub const $help: &str = concat!("CSV columns: ", $cols);
        };
    }

    header!(STATIONARY, STATIONARY_HELP, "i,pi");
    header!(TABLE1, TABLE1_HELP, "L,q,p_success,flag");
    header!(SUCCESS, SUCCESS_HELP, "L,q,p0,p_success");
    pub const BREACH: &str = "k,f1,analytical";
    pub const BREACH_SIM: &str = "k,f_hat,windows,breached_windows,geometric,analytical";
    pub const BREACH_HELP: &str = "CSV columns: k,f1,analytical\n\
        With --simulate: k,f_hat,windows,breached_windows,geometric,analytical";
    header!(ENERGY, ENERGY_HELP, "metric,gossicrypt,pke_rsa,pke_ecc");
    pub const SIMULATE: &str = "i,events,empirical,analytical";
    pub const INTERCEPTS: &str = "time,outer_id,layers,outcome";
    pub const SIMULATE_HELP: &str = "JSON metrics by default. CSV columns: i,events,empirical,analytical\n\
        Intercept log columns: time,outer_id,layers,outcome";
    pub const FIG3: &str = "tau,i,pi";
    pub const FIG4: &str = "i,analytical,run_1,run_2,run_3,run_4";
    pub const FIG5: &str = "q,analytical,median,q025,q975";
    pub const FIGURES_HELP: &str = "Files and CSV columns:\n  \
        fig3_stationary.csv  tau,i,pi\n  \
        fig4_empirical.csv   i,analytical,run_1,run_2,run_3,run_4\n  \
        fig5_success.csv     q,analytical,median,q025,q975\n  \
        fig6_breach.csv      k,f_hat,windows,breached_windows,geometric,analytical\n\
        fig6 simulates with the toy cipher suite; breach outcomes depend only on which keys the adversary holds.";
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Stationary { n, lambda, tau, common } => {
            let cfg = resolve(&common, |c| {
                c.n = n.unwrap_or(c.n);
                c.lambda = lambda.unwrap_or(c.lambda);
                c.tau = tau.unwrap_or(c.tau);
            })?;
            stationary(&cfg, &common)
        }
        Command::Table1 { common } => {
            let cfg = resolve(&common, |_| {})?;
            table1_cmd(&cfg, &common)
        }
        Command::Success {
            l,
            q,
            eq4_literal,
            common,
        } => {
            let cfg = resolve(&common, |c| c.l = l.unwrap_or(c.l))?;
            let qs = if q.is_empty() { vec![cfg.q] } else { q };
            let form = if eq4_literal {
                SuccessForm::Eq4Literal
            } else {
                SuccessForm::Full
            };
            success(&cfg, &qs, form, &common)
        }
        Command::Breach {
            f1,
            k,
            simulate,
            source,
            collector,
            common,
        } => {
            let cfg = resolve(&common, |c| c.k = k.unwrap_or(c.k))?;
            breach(&cfg, f1, simulate, NodeId(source), NodeId(collector), &common)
        }
        Command::Energy { n, q, hops, common } => {
            let cfg = resolve(&common, |_| {})?;
            energy(q.unwrap_or(cfg.q), n, hops, &common)
        }
        Command::Simulate { intercept_log, common } => {
            let cfg = resolve(&common, |c| c.record_trace |= intercept_log.is_some())?;
            simulate(cfg, intercept_log.as_deref(), &common)
        }
        Command::Figures {
            outdir,
            f1,
            k_max,
            source,
            collector,
            common,
        } => {
            let cfg = resolve(&common, |_| {})?;
            figures(&cfg, &outdir, f1, k_max, NodeId(source), NodeId(collector))
        }
    }
}

fn resolve(common: &Common, flags: impl FnOnce(&mut SimConfig)) -> Result<SimConfig, CliError> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &common.config {
        apply_file(&mut cfg, path)?;
    }
    for kv in &common.set {
        apply_override(&mut cfg, kv)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    flags(&mut cfg);
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn finish(
    common: &Common,
    default: Format,
    table: impl FnOnce() -> Table,
    json: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let text = match common.format.unwrap_or(default) {
        Format::Csv => table().to_csv(),
        Format::Json => json(),
    };
    emit(&text, common.output.as_deref())
}

fn model(cfg: &SimConfig) -> Result<MarkovModel, CliError> {
    cfg.model().map_err(config_error)
}

fn topology(cfg: &SimConfig) -> Result<GridTopology, CliError> {
    GridTopology::new(cfg.n).map_err(|e| CliError::Config(format!("invalid `n`: {e}")))
}

#[derive(Serialize)]
struct StationaryOut<'a> {
    n: usize,
    lambda: f64,
    tau: f64,
    mean: f64,
    mode: usize,
    residual: f64,
    pi: &'a [f64],
}

fn stationary(cfg: &SimConfig, common: &Common) -> Result<(), CliError> {
    let m = model(cfg)?;
    let dist = m.stationary();
    finish(
        common,
        Format::Csv,
        || {
            let mut t = Table::new(headers::STATIONARY);
            for (i, p) in dist.pi.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_float(*p)]);
            }
            t
        },
        || {
            to_json(&StationaryOut {
                n: cfg.n,
                lambda: m.lambda(),
                tau: cfg.tau,
                mean: dist.mean(),
                mode: dist.mode(),
                residual: m.residual(&dist.pi),
                pi: &dist.pi,
            })
        },
    )
}

fn table1_cmd(cfg: &SimConfig, common: &Common) -> Result<(), CliError> {
    let m = model(cfg)?;
    let rows = table1(&m);
    finish(
        common,
        Format::Csv,
        || {
            let mut t = Table::new(headers::TABLE1);
            for r in &rows {
                let flag = if r.suspect { "suspect" } else { "" };
                t.push(vec![
                    r.l.to_string(),
                    fmt_float(r.q),
                    fmt_float(r.p_success),
                    flag.into(),
                ]);
            }
            t
        },
        || to_json(&serde_json::json!({ "p0": m.prob_relay_compromised(), "rows": rows })),
    )
}

#[derive(Serialize)]
struct SuccessOut {
    l: usize,
    q: f64,
    p0: f64,
    p_success: f64,
    form: SuccessForm,
}

fn success(cfg: &SimConfig, qs: &[f64], form: SuccessForm, common: &Common) -> Result<(), CliError> {
    let p0 = model(cfg)?.prob_relay_compromised();
    let rows = qs
        .iter()
        .map(|&q| {
            Ok(SuccessOut {
                l: cfg.l,
                q,
                p0,
                p_success: success_probability(p0, cfg.l, q, form)?,
                form,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    finish(
        common,
        Format::Csv,
        || {
            let mut t = Table::new(headers::SUCCESS);
            for r in &rows {
                t.push(vec![
                    r.l.to_string(),
                    fmt_float(r.q),
                    fmt_float(r.p0),
                    fmt_float(r.p_success),
                ]);
            }
            t
        },
        || to_json(&rows),
    )
}

/// `f1` as given, or averaged over the torus path-length distribution.
fn analytical_f1(cfg: &SimConfig, f1: Option<f64>) -> Result<f64, CliError> {
    match f1 {
        Some(v) => Ok(v),
        None => {
            let p0 = model(cfg)?.prob_relay_compromised();
            Ok(f1_over_paths(p0, cfg.q, &path_length_distribution(&topology(cfg)?))?)
        }
    }
}

fn breach_table(report: &gossicrypt::sim::BreachReport, f1: f64) -> Result<Table, CliError> {
    let mut t = Table::new(headers::BREACH_SIM);
    for p in report.points.iter().filter(|p| p.k >= 1) {
        t.push(vec![
            p.k.to_string(),
            fmt_float(p.f_hat),
            p.windows.to_string(),
            p.breached_windows.to_string(),
            fmt_float(p.geometric),
            fmt_float(breach_probability(f1, p.k)?),
        ]);
    }
    Ok(t)
}

fn breach(
    cfg: &SimConfig,
    f1: Option<f64>,
    simulate: bool,
    source: NodeId,
    collector: NodeId,
    common: &Common,
) -> Result<(), CliError> {
    let f1 = analytical_f1(cfg, f1)?;
    let k_max = cfg.k;
    if simulate {
        let report = measure_breach(cfg, source, collector, k_max)?;
        let table = breach_table(&report, f1)?;
        return finish(
            common,
            Format::Csv,
            || table,
            || to_json(&serde_json::json!({ "f1": f1, "report": report })),
        );
    }
    let rows = (1..=k_max)
        .map(|k| Ok((k, breach_probability(f1, k)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    finish(
        common,
        Format::Csv,
        || {
            let mut t = Table::new(headers::BREACH);
            for &(k, p) in &rows {
                t.push(vec![k.to_string(), fmt_float(f1), fmt_float(p)]);
            }
            t
        },
        || {
            let points: Vec<_> = rows
                .iter()
                .map(|&(k, p)| serde_json::json!({ "k": k, "analytical": p }))
                .collect();
            to_json(&serde_json::json!({ "f1": f1, "points": points }))
        },
    )
}

fn energy(q: f64, n: usize, hops: f64, common: &Common) -> Result<(), CliError> {
    let report = energy_compare(&EnergyModel::default(), n, q, hops)?;
    finish(
        common,
        Format::Csv,
        || {
            let mut t = Table::new(headers::ENERGY);
            for r in &report.rows {
                t.push(vec![
                    r.metric.clone(),
                    fmt_opt(r.gossicrypt),
                    fmt_opt(r.pke_rsa),
                    fmt_opt(r.pke_ecc),
                ]);
            }
            t
        },
        || to_json(&report),
    )
}

fn outcome_tag(r: &InterceptRecord) -> &'static str {
    match &r.outcome {
        Ok(Payload::Data(_)) => "data",
        Ok(Payload::Refresh(_)) => "refresh",
        Err(AdversaryError::MissingKey(_)) => "missing_key",
        Err(AdversaryError::StaleKey(_)) => "stale_key",
        Err(AdversaryError::Malformed) => "malformed",
        Err(AdversaryError::NotAtPosition { .. }) => "not_at_position",
        Err(AdversaryError::TooSoon { .. }) => "too_soon",
    }
}

fn simulate(cfg: SimConfig, intercept_log: Option<&Path>, common: &Common) -> Result<(), CliError> {
    let pi = model(&cfg)?.stationary().pi;
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end();
    let metrics = sim.metrics();
    if let Some(path) = intercept_log {
        let mut t = Table::new(headers::INTERCEPTS);
        for r in sim.adversary().intercept_log() {
            t.push(vec![
                fmt_float(r.time),
                r.packet.outer_id().0.to_string(),
                r.packet.layer_count().to_string(),
                outcome_tag(r).into(),
            ]);
        }
        emit(&t.to_csv(), Some(path))?;
    }
    finish(
        common,
        Format::Json,
        || {
            let mut t = Table::new(headers::SIMULATE);
            let empirical = metrics.empirical_distribution();
            for (i, (&count, (e, a))) in metrics
                .state_histogram
                .iter()
                .zip(empirical.iter().zip(&pi))
                .enumerate()
            {
                t.push(vec![i.to_string(), count.to_string(), fmt_float(*e), fmt_float(*a)]);
            }
            t
        },
        || to_json(&metrics),
    )
}

const FIG4_RUNS: u64 = 4;

fn figures(
    cfg: &SimConfig,
    outdir: &Path,
    f1: Option<f64>,
    k_max: u32,
    source: NodeId,
    collector: NodeId,
) -> Result<(), CliError> {
    std::fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let write = |name: &str, t: Table| -> Result<(), CliError> {
        let path = outdir.join(name);
        emit(&t.to_csv(), Some(&path))?;
        println!("{}", path.display());
        Ok(())
    };

    let mut fig3 = Table::new(headers::FIG3);
    for tau in [0.6, 1.0, 1.5] {
        let pi = MarkovModel::new(cfg.n, cfg.effective_lambda(), tau)?.stationary().pi;
        for (i, p) in pi.iter().enumerate() {
            fig3.push(vec![fmt_float(tau), i.to_string(), fmt_float(*p)]);
        }
    }
    write("fig3_stationary.csv", fig3)?;

    let pi = model(cfg)?.stationary().pi;
    let runs = (0..FIG4_RUNS)
        .into_par_iter()
        .map(|r| {
            run(&SimConfig {
                seed: derive_seed(cfg.seed, r),
                ..cfg.clone()
            })
            .map(|m| m.empirical_distribution())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut fig4 = Table::new(headers::FIG4);
    for (i, a) in pi.iter().enumerate() {
        let mut row = vec![i.to_string(), fmt_float(*a)];
        row.extend(runs.iter().map(|r| fmt_float(r[i])));
        fig4.push(row);
    }
    write("fig4_empirical.csv", fig4)?;

    let qs: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let mut fig5 = Table::new(headers::FIG5);
    for e in measure_success(cfg, cfg.l, &qs)? {
        fig5.push(vec![
            fmt_float(e.q),
            fmt_float(e.analytical),
            fmt_float(e.median),
            fmt_float(e.q025),
            fmt_float(e.q975),
        ]);
    }
    write("fig5_success.csv", fig5)?;

    let f1 = analytical_f1(cfg, f1)?;
    let breach_cfg = SimConfig {
        suite: SuiteKind::Toy,
        ..cfg.clone()
    };
    let report = measure_breach(&breach_cfg, source, collector, k_max)?;
    write("fig6_breach.csv", breach_table(&report, f1)?)
}
