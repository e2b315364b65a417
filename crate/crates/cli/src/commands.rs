//! The subcommands. Each writes its artifacts into the output directory before
//! reporting a tolerance failure, so failed runs can still be inspected.

use std::f64::consts::PI;
use std::path::Path;

use clap::ValueEnum;
use serde_json::json;
use trimer_core::analysis::{
    classify_P, equilibria_hpos, heteroclinic_closed_form, restricted_spectrum_at, EquilibriumReport,
};
use trimer_core::dynamics::{
    admissibility, max_rt, positive_energy, positive_energy_field, slave_R, zero_energy_energy, InfinityPositiveFlow,
    InfinityZeroFlow, PositiveEnergyFlow, PositiveEnergyState, ReducedFlow, ZeroEnergyFlow, ZeroEnergyState,
};
use trimer_core::field::Chart;
use trimer_core::integrate::{
    classify_escape, escape_events, find_periodic_orbit, integrate, sweep as run_sweep, trace_heteroclinic, EscapeKind,
    EscapeThresholds, EventKind, EventSpec, IntegratorConfig, Sampler, Trajectory,
};
use trimer_core::{ShapePotentials, VectorField};

use crate::config::RunConfig;
use crate::output::{num, Csv, OutDir, Plot};
use crate::CliError;

/// `h0` is the zero-energy chart, `hpos` the positive-energy chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartArg {
    H0,
    Hpos,
}

pub struct Context {
    pub cfg: RunConfig,
    pub pot: ShapePotentials,
    pub chart: ChartArg,
    pub out: OutDir,
    pub svg: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, out: &Path, svg: bool, chart: Option<ChartArg>) -> Result<Self, CliError> {
        let chart = resolve_chart(cfg.params.h(), chart)?;
        let pot = ShapePotentials::new(&cfg.params)?;
        Ok(Context {
            cfg,
            pot,
            chart,
            out: OutDir::create(out)?,
            svg,
        })
    }

    fn h(&self) -> f64 {
        self.cfg.params.h()
    }
}

fn plot(
    out: &mut OutDir,
    svg: bool,
    name: &str,
    x_label: &str,
    y_label: &str,
    lines: Vec<Vec<(f64, f64)>>,
) -> Result<(), CliError> {
    if !svg {
        return Ok(());
    }
    let plot = Plot {
        x_label: x_label.into(),
        y_label: y_label.into(),
        lines,
    };
    out.write(name, &plot.render())
}

fn resolve_chart(h: f64, requested: Option<ChartArg>) -> Result<ChartArg, CliError> {
    let inferred = if h == 0.0 {
        ChartArg::H0
    } else if h > 0.0 {
        ChartArg::Hpos
    } else {
        return Err(CliError::Config(format!(
            "negative energy h = {h} has no regularized chart"
        )));
    };
    match requested {
        Some(c) if c != inferred => Err(CliError::Config(format!(
            "chart {c:?} does not match the energy h = {h}; use {inferred:?}"
        ))),
        _ => Ok(inferred),
    }
}

fn require_chart(ctx: &Context, chart: ChartArg, what: &str) -> Result<(), CliError> {
    if ctx.chart != chart {
        return Err(CliError::Config(format!(
            "{what} needs the {chart:?} chart, the energy selects {:?}",
            ctx.chart
        )));
    }
    Ok(())
}

fn require_symmetric(ctx: &Context, what: &str) -> Result<(), CliError> {
    if !ctx.cfg.params.is_mass_symmetric() {
        return Err(CliError::Config(format!(
            "{what} needs mass-symmetric parameters (m1 = m3, equal pair couplings)"
        )));
    }
    Ok(())
}

fn unwrap_angle(prev: f64, raw: f64) -> f64 {
    raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round()
}

fn check_terminal<const N: usize>(tr: &Trajectory<N>) -> Result<(), CliError> {
    match tr.terminal_event.as_ref().map(|e| &e.kind) {
        Some(EventKind::MaxSteps) => Err(CliError::Tolerance(format!(
            "integration stopped after {} steps at time {}",
            tr.stats.accepted,
            tr.last().time
        ))),
        Some(EventKind::StepUnderflow(msg)) => Err(CliError::Tolerance(format!("step size underflow: {msg}"))),
        _ => Ok(()),
    }
}

fn run<const N: usize, F: VectorField<N>>(
    flow: &F,
    x: &[f64; N],
    ic: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Trajectory<N>, CliError> {
    Ok(integrate(flow, x, ic, events)?)
}

fn eig_cells(rep: &EquilibriumReport, n: usize) -> Vec<String> {
    let mut cells = Vec::with_capacity(2 * n + 3);
    for k in 0..n {
        let [re, im] = rep.eigenvalues.get(k).copied().unwrap_or([f64::NAN; 2]);
        cells.push(num(re));
        cells.push(num(im));
    }
    cells.push(rep.stable_dim.to_string());
    cells.push(rep.unstable_dim.to_string());
    cells.push(rep.center_dim.to_string());
    cells
}

fn eig_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=n)
        .flat_map(|k| [format!("eig{k}_re"), format!("eig{k}_im")])
        .collect();
    h.extend(["stable_dim", "unstable_dim", "center_dim"].map(String::from));
    h
}

// ---------------------------------------------------------------- simulate

pub fn simulate(ctx: &mut Context) -> Result<(), CliError> {
    match ctx.chart {
        ChartArg::H0 => simulate_h0(ctx),
        ChartArg::Hpos => simulate_hpos(ctx),
    }
}

fn simulate_h0(ctx: &mut Context) -> Result<(), CliError> {
    let sc = ctx.cfg.simulate.clone();
    let initial = sc.initial.clone().unwrap_or_else(|| vec![0.0, 0.5, 0.0]);
    let pot = &ctx.pot;
    let mut csv = Csv::new(&["clock", "time", "R", "y", "s", "w", "energy_residual"]);
    let (summary, terminal, lines) = match initial.len() {
        3 => {
            let x = [initial[0], initial[1], initial[2]];
            slave_R(&x, pot)?;
            let ev = if sc.events {
                escape_events::<3>(Chart::Reduced, pot, &sc.thresholds)
            } else {
                Vec::new()
            };
            let tr = run(&ReducedFlow { pot }, &x, &sc.integrator, &ev)?;
            for p in &tr.samples {
                let r = slave_R(&p.state, pot).unwrap_or(f64::NAN);
                let [y, s, w] = p.state;
                csv.row(&[
                    tr.clock.label().into(),
                    num(p.time),
                    num(r),
                    num(y),
                    num(s),
                    num(w),
                    num(p.energy_residual),
                ]);
            }
            let pts = tr.samples.iter().map(|p| (p.state[1], p.state[2])).collect();
            (
                summarize(&tr, pot, &sc.thresholds, &initial),
                check_terminal(&tr),
                vec![pts],
            )
        }
        4 => {
            let x = [initial[0], initial[1], initial[2], initial[3]];
            let f = zero_energy_energy(&ZeroEnergyState::from_array(&x), pot)?;
            if f.abs() >= 1e-8 {
                return Err(CliError::Config(format!(
                    "initial state is off the zero-energy level (F = {f:e})"
                )));
            }
            let ev = if sc.events {
                escape_events::<4>(Chart::ZeroEnergy, pot, &sc.thresholds)
            } else {
                Vec::new()
            };
            let tr = run(&ZeroEnergyFlow { pot }, &x, &sc.integrator, &ev)?;
            for p in &tr.samples {
                let [r, y, s, w] = p.state;
                csv.row(&[
                    tr.clock.label().into(),
                    num(p.time),
                    num(r),
                    num(y),
                    num(s),
                    num(w),
                    num(p.energy_residual),
                ]);
            }
            let pts = tr.samples.iter().map(|p| (p.state[2], p.state[3])).collect();
            (
                summarize(&tr, pot, &sc.thresholds, &initial),
                check_terminal(&tr),
                vec![pts],
            )
        }
        n => {
            return Err(CliError::Config(format!(
                "simulate.initial needs 3 or 4 values on the h0 chart, got {n}"
            )))
        }
    };
    ctx.out.csv("simulate.csv", &csv)?;
    ctx.out.json("simulate.json", &summary)?;
    plot(&mut ctx.out, ctx.svg, "simulate.svg", "s", "w", lines)?;
    terminal
}

fn simulate_hpos(ctx: &mut Context) -> Result<(), CliError> {
    let sc = ctx.cfg.simulate.clone();
    let h = ctx.h();
    let pot = &ctx.pot;
    let initial = match sc.initial.clone() {
        Some(v) => v,
        None => vec![0.5 * max_rt(h, 0.3, pot)?, 0.0, 0.3],
    };
    let x = match initial.len() {
        3 => {
            let f0 = positive_energy(
                &PositiveEnergyState::from_array(&[initial[0], initial[1], initial[2], 0.0]),
                pot,
            )?;
            let u2 = 2.0 * (h - f0);
            if u2 < 0.0 {
                return Err(CliError::Config(format!(
                    "no real ut reaches energy {h} from {initial:?}"
                )));
            }
            [initial[0], initial[1], initial[2], u2.sqrt()]
        }
        4 => {
            let x = [initial[0], initial[1], initial[2], initial[3]];
            let f = positive_energy(&PositiveEnergyState::from_array(&x), pot)?;
            if (f - h).abs() > 1e-8 * (1.0 + h) {
                return Err(CliError::Config(format!("initial state has energy {f}, expected {h}")));
            }
            x
        }
        n => {
            return Err(CliError::Config(format!(
                "simulate.initial needs 3 or 4 values on the hpos chart, got {n}"
            )))
        }
    };
    let ev = if sc.events {
        escape_events::<4>(Chart::PositiveEnergy, pot, &sc.thresholds)
    } else {
        Vec::new()
    };
    let tr = run(&PositiveEnergyFlow { pot, h }, &x, &sc.integrator, &ev)?;
    let mut csv = Csv::new(&["clock", "time", "Rt", "vt", "st", "ut", "energy_residual"]);
    let mut pts = Vec::with_capacity(tr.samples.len());
    let mut prev = x[1].atan2(x[3]);
    for p in &tr.samples {
        let [rt, vt, st, ut] = p.state;
        csv.row(&[
            tr.clock.label().into(),
            num(p.time),
            num(rt),
            num(vt),
            num(st),
            num(ut),
            num(p.energy_residual),
        ]);
        prev = unwrap_angle(prev, vt.atan2(ut));
        pts.push((st, prev));
    }
    let summary = summarize(&tr, pot, &sc.thresholds, &x);
    ctx.out.csv("simulate.csv", &csv)?;
    ctx.out.json("simulate.json", &summary)?;
    plot(&mut ctx.out, ctx.svg, "simulate.svg", "st", "chi", vec![pts])?;
    check_terminal(&tr)
}

fn summarize<const N: usize>(
    tr: &Trajectory<N>,
    pot: &ShapePotentials,
    thr: &EscapeThresholds,
    initial: &[f64],
) -> serde_json::Value {
    let class = classify_escape(tr, pot, thr);
    json!({
        "chart": tr.chart,
        "clock": tr.clock.label(),
        "initial": initial,
        "final": tr.last().state.to_vec(),
        "end_time": tr.last().time,
        "terminal_event": tr.terminal_event.as_ref().map(|e| e.label()),
        "escape": class,
        "max_energy_residual": tr.max_energy_residual(),
        "stats": tr.stats,
    })
}

// -------------------------------------------------------------- equilibria

pub fn equilibria(ctx: &mut Context) -> Result<(), CliError> {
    match ctx.chart {
        ChartArg::H0 => equilibria_h0(ctx),
        ChartArg::Hpos => equilibria_positive(ctx),
    }
}

fn equilibria_h0(ctx: &mut Context) -> Result<(), CliError> {
    let rep = classify_P(&ctx.pot)?;
    let mut header: Vec<String> = ["point", "y", "s", "w"].map(String::from).to_vec();
    header.extend(eig_header(3));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (name, r) in [("P-", &rep.minus), ("P+", &rep.plus)] {
        let mut cells = vec![name.to_string()];
        cells.extend(r.location.iter().map(|&v| num(v)));
        cells.extend(eig_cells(r, 3));
        csv.row(&cells);
        let eig: Vec<String> = r
            .eigenvalues
            .iter()
            .map(|[re, im]| format!("{re:.6}{im:+.6}i"))
            .collect();
        println!(
            "{name} at (y, s, w) = ({:.6}, {:.6}, {:.6}): eigenvalues [{}], dims stable/unstable/center {}/{}/{}",
            r.location[0],
            r.location[1],
            r.location[2],
            eig.join(", "),
            r.stable_dim,
            r.unstable_dim,
            r.center_dim
        );
    }
    let doc = json!({ "lambda": ctx.pot.lambda(), "report": rep });
    ctx.out.csv("equilibria.csv", &csv)?;
    ctx.out.json("equilibria.json", &doc)
}

fn equilibria_positive(ctx: &mut Context) -> Result<(), CliError> {
    let h = ctx.h();
    let mut header: Vec<String> = ["family", "index", "vt", "st", "ut", "field_residual"]
        .map(String::from)
        .to_vec();
    header.extend(eig_header(3));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    for (k, (fam, [vt, st, ut])) in equilibria_hpos(h, ctx.cfg.equilibria.samples)?.into_iter().enumerate() {
        let x = [0.0, vt, st, ut];
        let f = positive_energy_field(&PositiveEnergyState::from_array(&x), &ctx.pot)?.to_array();
        let res = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(res);
        let rep = restricted_spectrum_at(&ctx.pot, &x)?;
        let mut cells = vec![format!("{fam:?}"), k.to_string(), num(vt), num(st), num(ut), num(res)];
        cells.extend(eig_cells(&rep, 3));
        csv.row(&cells);
        reports.push(json!({ "family": fam, "triple_escape": fam.is_triple_escape(), "report": rep }));
    }
    println!(
        "{} rest points on the infinity manifold at h = {h}, max field residual {worst:.3e}",
        reports.len()
    );
    ctx.out.csv("equilibria.csv", &csv)?;
    ctx.out.json(
        "equilibria.json",
        &json!({ "h": h, "lambda": ctx.pot.lambda(), "max_field_residual": worst, "points": reports }),
    )
}

// --------------------------------------------------------------- po-search

pub fn po_search(ctx: &mut Context) -> Result<(), CliError> {
    require_chart(ctx, ChartArg::H0, "po-search")?;
    require_symmetric(ctx, "po-search")?;
    let pc = ctx.cfg.po_search.clone();
    let [y0, w0] = pc.seed;
    let g = admissibility(&[y0, 0.0, w0], &ctx.pot)?;
    if g < 0.0 {
        let wmax = (2.0 * admissibility(&[y0, 0.0, 0.0], &ctx.pot)?).max(0.0).sqrt();
        return Err(CliError::Config(format!(
            "seed (y, w) = ({y0}, {w0}) is outside the zero-energy region; at y = {y0} it needs |w| <= {wmax:.6}"
        )));
    }
    if !(w0 > 0.0) {
        return Err(CliError::Config(
            "the section is {s = 0, w > 0}; the seed needs w > 0".into(),
        ));
    }
    let orbit = match find_periodic_orbit(&ctx.pot, (y0, w0), &pc.shooting) {
        Ok(o) => o,
        Err(e) => {
            let history = match &e {
                trimer_core::Error::Convergence { history, .. } => history.clone(),
                _ => Vec::new(),
            };
            ctx.out.json(
                "po.json",
                &json!({ "seed": pc.seed, "error": e.to_string(), "residual_history": history }),
            )?;
            return Err(e.into());
        }
    };
    let x = [orbit.state[0], orbit.state[1], orbit.state[2]];
    let ic = pc.shooting.integrator.clone().with_max_time(orbit.period);
    let tr = run(&ReducedFlow { pot: &ctx.pot }, &x, &ic, &[])?;
    let mut csv = Csv::new(&["sigma", "y", "s", "w", "energy_residual"]);
    for p in &tr.samples {
        let [y, s, w] = p.state;
        csv.row(&[num(p.time), num(y), num(s), num(w), num(p.energy_residual)]);
    }
    println!(
        "periodic orbit through (y, w) = ({:.10}, {:.10}), period {:.10}",
        x[0], x[2], orbit.period
    );
    ctx.out.csv("po.csv", &csv)?;
    ctx.out.json("po.json", &json!({ "seed": pc.seed, "orbit": orbit }))?;
    let pts = tr.samples.iter().map(|p| (p.state[1], p.state[2])).collect();
    plot(&mut ctx.out, ctx.svg, "po.svg", "s", "w", vec![pts])
}

// ------------------------------------------------------------------ hetero

pub fn hetero(ctx: &mut Context) -> Result<(), CliError> {
    require_chart(ctx, ChartArg::H0, "hetero")?;
    require_symmetric(ctx, "hetero")?;
    let hc = ctx.cfg.hetero.clone();
    let trace = trace_heteroclinic(&ctx.pot, hc.sigma_start, hc.sigma_end, &hc.integrator)?;
    let mut csv = Csv::new(&["sigma", "R", "y", "s", "w", "y_closed_form", "deviation"]);
    let mut traced = Vec::new();
    let mut exact = Vec::new();
    for p in &trace.trajectory.samples {
        let [y, s, w] = p.state;
        let yc = heteroclinic_closed_form(&ctx.pot, p.time)?;
        let dev = (y - yc).abs().max(s.abs()).max(w.abs());
        let r = slave_R(&p.state, &ctx.pot).unwrap_or(f64::NAN);
        csv.row(&[num(p.time), num(r), num(y), num(s), num(w), num(yc), num(dev)]);
        traced.push((p.time, y));
        exact.push((p.time, yc));
    }
    let sm = trace.summary;
    println!(
        "heteroclinic: sup deviation {:.3e}, distance to P+ at the end {:.3e}",
        sm.sup_error, sm.terminal_distance
    );
    ctx.out.csv("hetero.csv", &csv)?;
    ctx.out.json(
        "hetero.json",
        &json!({ "summary": sm, "sigma_seed": trace.sigma_seed, "sup_tol": hc.sup_tol, "terminal_tol": hc.terminal_tol }),
    )?;
    plot(&mut ctx.out, ctx.svg, "hetero.svg", "sigma", "y", vec![exact, traced])?;
    if !(sm.sup_error < hc.sup_tol) {
        return Err(CliError::Tolerance(format!(
            "sup deviation {:e} >= {:e}",
            sm.sup_error, hc.sup_tol
        )));
    }
    if !(sm.terminal_distance < hc.terminal_tol) {
        return Err(CliError::Tolerance(format!(
            "terminal distance {:e} >= {:e}",
            sm.terminal_distance, hc.terminal_tol
        )));
    }
    Ok(())
}

// ------------------------------------------------------------------- sweep

pub fn sweep(ctx: &mut Context) -> Result<(), CliError> {
    let section = ctx.cfg.sweep.clone();
    let (sampler, coords): (Sampler, &[&str]) = match ctx.chart {
        ChartArg::H0 => (Sampler::ZeroEnergy, &["y", "s", "w"]),
        ChartArg::Hpos => (Sampler::PositiveEnergy, &["Rt", "vt", "st", "ut"]),
    };
    let stats = run_sweep(&ctx.pot, sampler, section.n, &section.to_core())?;
    let mut counts = Csv::new(&["kind", "count", "fraction"]);
    for kind in EscapeKind::ALL {
        counts.row(&[
            kind.label().into(),
            stats.count(kind).to_string(),
            num(stats.fraction(kind)),
        ]);
        println!(
            "{:>12}: {:>6} ({:.4})",
            kind.label(),
            stats.count(kind),
            stats.fraction(kind)
        );
    }
    let mut header = vec!["index"];
    header.extend_from_slice(coords);
    header.extend(["class", "asymptotic_s", "asymptotic_y", "terminal", "end_time", "steps"]);
    let mut records = Csv::new(&header);
    for r in &stats.records {
        let mut cells = vec![r.index.to_string()];
        cells.extend(r.initial.iter().map(|&v| num(v)));
        cells.extend([
            r.class.kind.label().to_string(),
            num(r.class.asymptotic_s),
            num(r.class.asymptotic_y),
            r.terminal.clone(),
            num(r.end_time),
            r.steps.to_string(),
        ]);
        records.row(&cells);
    }
    ctx.out.csv("sweep_counts.csv", &counts)?;
    ctx.out.csv("sweep_records.csv", &records)?;
    ctx.out.json("sweep.json", &stats)
}

// ---------------------------------------------------------------- infinity

pub fn infinity(ctx: &mut Context) -> Result<(), CliError> {
    match ctx.chart {
        ChartArg::H0 => infinity_h0(ctx),
        ChartArg::Hpos => infinity_positive(ctx),
    }
}

fn infinity_h0(ctx: &mut Context) -> Result<(), CliError> {
    let ic = ctx.cfg.infinity.clone();
    let pot = &ctx.pot;
    let thr = EscapeThresholds::default();
    let ev = escape_events::<3>(Chart::InfinityZero, pot, &thr);
    let flow = InfinityZeroFlow { pot };
    let mut csv = Csv::new(&["orbit", "clock", "time", "y", "s", "w", "energy_residual"]);
    let mut orbits = Vec::new();
    let mut lines = Vec::new();
    let mut worst: f64 = 0.0;
    let mut failure = Ok(());
    for (k, [y, s]) in ic.starts_h0().into_iter().enumerate() {
        let g = admissibility(&[y, s, 0.0], pot)?;
        if g < 0.0 {
            return Err(CliError::Config(format!(
                "infinity start (y, s) = ({y}, {s}) lies outside the manifold"
            )));
        }
        let tr = run(&flow, &[y, s, (2.0 * g).sqrt()], &ic.integrator, &ev)?;
        for p in &tr.samples {
            let [y, s, w] = p.state;
            csv.row(&[
                k.to_string(),
                tr.clock.label().into(),
                num(p.time),
                num(y),
                num(s),
                num(w),
                num(p.energy_residual),
            ]);
        }
        worst = worst.max(tr.max_energy_residual());
        lines.push(tr.samples.iter().map(|p| (p.state[1], p.state[2])).collect());
        orbits.push(summarize(&tr, pot, &thr, &[y, s]));
        if failure.is_ok() {
            failure = check_terminal(&tr);
        }
    }
    println!(
        "{} orbits on the infinity manifold, max residual {worst:.3e}",
        orbits.len()
    );
    ctx.out.csv("infinity.csv", &csv)?;
    ctx.out.json(
        "infinity.json",
        &json!({ "max_residual": worst, "residual_tol": ic.residual_tol, "orbits": orbits }),
    )?;
    plot(&mut ctx.out, ctx.svg, "infinity.svg", "s", "w", lines)?;
    if !(worst < ic.residual_tol) {
        return Err(CliError::Tolerance(format!(
            "manifold residual {worst:e} >= {:e}",
            ic.residual_tol
        )));
    }
    failure
}

fn infinity_positive(ctx: &mut Context) -> Result<(), CliError> {
    let ic = ctx.cfg.infinity.clone();
    let h = ctx.h();
    let lambda = ctx.pot.lambda();
    let thr = EscapeThresholds::default();
    let ev = escape_events::<3>(Chart::InfinityPositive, &ctx.pot, &thr);
    let flow = InfinityPositiveFlow { lambda, h };
    let k0 = (2.0 * h).sqrt();
    let mut csv = Csv::new(&["orbit", "clock", "time", "vt", "st", "ut", "chi", "energy_residual"]);
    let mut orbits = Vec::new();
    let mut lines = Vec::new();
    let (mut worst, mut worst_slope): (f64, f64) = (0.0, 0.0);
    let mut failure = Ok(());
    for (k, [st0, chi0]) in ic.starts_hpos().into_iter().enumerate() {
        let x = [k0 * chi0.sin(), st0, k0 * chi0.cos()];
        let tr = run(&flow, &x, &ic.integrator, &ev)?;
        let mut chi = chi0;
        let mut slope: f64 = 0.0;
        let mut pts = Vec::with_capacity(tr.samples.len());
        for p in &tr.samples {
            let [vt, st, ut] = p.state;
            chi = unwrap_angle(chi, vt.atan2(ut));
            slope = slope.max((chi - chi0 - lambda * (st - st0)).abs());
            csv.row(&[
                k.to_string(),
                tr.clock.label().into(),
                num(p.time),
                num(vt),
                num(st),
                num(ut),
                num(chi),
                num(p.energy_residual),
            ]);
            pts.push((st, chi));
        }
        worst = worst.max(tr.max_energy_residual());
        worst_slope = worst_slope.max(slope);
        lines.push(pts);
        let mut doc = summarize(&tr, &ctx.pot, &thr, &[st0, chi0]);
        doc["slope_error"] = json!(slope);
        orbits.push(doc);
        if failure.is_ok() {
            failure = check_terminal(&tr);
        }
    }
    println!(
        "{} orbits on the infinity manifold at h = {h}, max residual {worst:.3e}, max deviation from chi' = lambda {worst_slope:.3e}",
        orbits.len()
    );
    ctx.out.csv("infinity.csv", &csv)?;
    ctx.out.json(
        "infinity.json",
        &json!({
            "h": h,
            "lambda": lambda,
            "max_residual": worst,
            "max_slope_error": worst_slope,
            "residual_tol": ic.residual_tol,
            "slope_tol": ic.slope_tol,
            "orbits": orbits,
        }),
    )?;
    plot(&mut ctx.out, ctx.svg, "infinity.svg", "st", "chi", lines)?;
    if !(worst < ic.residual_tol) {
        return Err(CliError::Tolerance(format!(
            "manifold residual {worst:e} >= {:e}",
            ic.residual_tol
        )));
    }
    if !(worst_slope < ic.slope_tol) {
        return Err(CliError::Tolerance(format!(
            "chi deviates from slope lambda by {worst_slope:e}"
        )));
    }
    failure
}
