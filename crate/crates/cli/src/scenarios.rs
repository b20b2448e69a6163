//! Experiments wired from the library, each producing an [`Artifacts`] set.

use coldplasma::affine::{
    conic_constant, direction_field, integrate_affine_with, AffineOptions, AffineState, Branch, OffsetEquation,
};
use coldplasma::characteristics::{
    energy_audit, run_euler_analog, run_field, v_at_blowup, FieldOptions, FieldOutcome, Harmonic, InitialData,
};
use coldplasma::damping::{
    check_parabolic_condition, check_suppression_condition, check_tail_regularity, DampingIntegral,
};
use coldplasma::perturbation::{
    blowup_persistence_bound, corrector_alpha1, corrector_growth_rate, corrector_predicts_blowup, fit_sigma0,
    sigma0_system,
};
use coldplasma::scalar::log_grid;
use coldplasma::{DampingSpec64, Verdict};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::manifest::{BranchChoice, DatumKind, Manifest};
use crate::output::{Artifacts, Cell, Table};
use crate::plots;
use crate::table::SampledData;

fn verdict_line(v: &Verdict<f64>) -> String {
    match v {
        Verdict::GloballySmoothUpTo(t) => format!("verdict: smooth up to t = {t}"),
        Verdict::BlowUpAt(t) => format!("verdict: blow-up at t* = {t}"),
    }
}

fn t_star_cell(v: &Verdict<f64>) -> Cell {
    v.blowup_time().map_or(Cell::Text(String::new()), Cell::Num)
}

fn affine_options(m: &Manifest, t_end: f64, tol: f64) -> AffineOptions<f64> {
    let mut opts = AffineOptions::new(t_end, tol);
    if m.affine.flipped_offset_sign {
        opts.offset_equation = OffsetEquation::FlippedSign;
    }
    opts
}

pub fn affine_run(m: &Manifest) -> Result<Artifacts> {
    let a = &m.affine;
    let spec = m.damping.spec()?;
    let init = AffineState::new(a.a0, a.b0, a.v_offset, a.e_offset);
    let class = conic_constant(a.a0, a.b0)?;
    let out = integrate_affine_with(init, &spec, &affine_options(m, a.t_end, a.tol))?;

    let mut table = Table::new(&["t", "a", "b", "A", "B", "step", "invC"]);
    for s in &out.trace {
        let st = s.state;
        table.push(vec![
            st.t.into(),
            st.a.into(),
            st.b.into(),
            st.v_offset.into(),
            st.e_offset.into(),
            s.step.into(),
            s.inv_c().into(),
        ]);
    }
    let mut art = Artifacts::default();
    art.line(format!("C = {} ({:?})", class.c, class.kind));
    art.line(verdict_line(&out.verdict));
    let d = out.diagnostics;
    art.line(format!(
        "max |a| = {}, min density = {}, accepted steps = {}, rejected = {}",
        d.max_abs_a, d.min_density, d.accepted, d.rejected
    ));
    if a.flipped_offset_sign {
        art.line("offset equation: flipped friction sign");
    }
    art.csv("affine.csv", table);
    art.text("plot_affine.py", plots::AFFINE);
    Ok(art)
}

pub fn phase(m: &Manifest) -> Result<Artifacts> {
    let a = &m.affine;
    let spec = m.damping.spec()?;
    let out = integrate_affine_with(
        AffineState::slopes(a.a0, a.b0),
        &spec,
        &affine_options(m, a.t_end, a.tol),
    )?;
    let mut curve = Table::new(&["t", "b", "a"]);
    for s in &out.trace {
        curve.push(vec![s.state.t.into(), s.state.b.into(), s.state.a.into()]);
    }
    let returns = {
        let pts: Vec<f64> = out.trace.iter().map(|s| s.state.a).collect();
        pts.iter()
            .position(|&x| x < 0.0)
            .is_some_and(|i| pts[i..].iter().any(|&x| x > 0.0))
    };
    let mut art = Artifacts::default();
    art.line(format!("C = {}", conic_constant(a.a0, a.b0)?.c));
    art.line(verdict_line(&out.verdict));
    art.line(format!("returns to a > 0 after entering a < 0: {returns}"));
    art.csv("phase_curve.csv", curve);
    art.csv("direction_field.csv", field_table(&spec, m));
    art.text("plot_phase.py", plots::PHASE);
    Ok(art)
}

fn field_table(spec: &DampingSpec64, m: &Manifest) -> Table {
    let p = &m.phase;
    let mut t = Table::new(&["b", "a", "db", "da"]);
    for [b, a, db, da] in direction_field(spec, (p.b_min, p.b_max), (p.a_min, p.a_max), p.grid, p.grid) {
        t.push(vec![b.into(), a.into(), db.into(), da.into()]);
    }
    t
}

pub fn corrector(m: &Manifest) -> Result<Artifacts> {
    let c = &m.corrector;
    let spec = m.damping.spec()?;
    let depth_max = c.b0 - c.b_min;
    let depth_min = (depth_max * 1e-6).min(1e-3);
    let grid: Vec<f64> = log_grid(depth_min, depth_max, c.points)
        .iter()
        .map(|d| c.b0 - d)
        .collect();
    let curve = corrector_alpha1(c.c, c.b0, &spec, &grid)?;
    let mut table = Table::new(&["b", "alpha1"]);
    for (&b, &al) in curve.b_grid.iter().zip(&curve.alpha1) {
        table.push(vec![b.into(), al.into()]);
    }
    let mut art = Artifacts::default();
    art.line(format!("C = {}, b0 = {}, eps = {}", c.c, c.b0, spec.epsilon));
    if c.c > 0.0 {
        match corrector_growth_rate(c.c, c.b0, &spec)? {
            DampingIntegral::Finite(rate) => art.line(format!("corrector growth rate alpha1/(1-b) -> {rate}")),
            DampingIntegral::Divergent => art.line("corrector growth rate: unbounded (damping integral diverges)"),
        }
        let predicts = corrector_predicts_blowup(c.c, c.b0, &spec)?;
        art.line(format!(
            "first-order prediction at eps = {}: {}",
            spec.epsilon,
            if predicts { "blow-up" } else { "smooth" }
        ));
        let bound = blowup_persistence_bound(c.c, &spec, 1.0 - c.b0)?;
        art.line(format!("persistence bound: {bound}"));
    }
    art.csv("corrector.csv", table);
    art.text("plot_corrector.py", plots::CORRECTOR);
    Ok(art)
}

pub fn sigma0(m: &Manifest) -> Result<Artifacts> {
    let s = &m.sigma0;
    let branch = match s.branch {
        BranchChoice::Upper => Branch::Upper,
        BranchChoice::Lower => Branch::Lower,
    };
    let form = s.form.into();
    let trace = sigma0_system((s.s_start, s.s_end), (s.sigma0, s.xi0), s.c, branch, form, s.samples)?;
    let fit = fit_sigma0(&trace)?;
    let mut table = Table::new(&["s", "sigma0", "xi0", "sigma0_closed"]);
    for i in 0..trace.len() {
        let closed = fit.eval(form, trace.s[i], trace.q0(i));
        table.push(vec![
            trace.s[i].into(),
            trace.sigma[i].into(),
            trace.xi[i].into(),
            closed.into(),
        ]);
    }
    let mut art = Artifacts::default();
    art.line(format!("form {:?}, branch {:?}, C = {}", form, branch, s.c));
    art.line(format!(
        "fit C1 = {}, C2 = {}, relative residual = {:e}",
        fit.c1, fit.c2, fit.residual
    ));
    art.csv("sigma0.csv", table);
    art.text("plot_sigma0.py", plots::SIGMA0);
    Ok(art)
}

fn field_data(m: &Manifest) -> Result<InitialData<f64>> {
    let f = &m.field;
    Ok(match f.datum {
        DatumKind::ZeroVelocitySine | DatumKind::DriftingSine => {
            let drifting = f.datum == DatumKind::DriftingSine;
            InitialData::Harmonic(Harmonic {
                e_amp: f.d,
                e_mean: 0.0,
                v_amp: if drifting { f.d } else { 0.0 },
                v_mean: if drifting { f.drift } else { 0.0 },
                v_phase: std::f64::consts::PI,
                period: f.length,
            })
        }
        DatumKind::Affine => InitialData::Affine {
            a0: f.a0,
            b0: f.b0,
            v_offset: f.v_offset,
            e_offset: f.e_offset,
            half_width: f.length / 2.0,
        },
        DatumKind::CustomTable => {
            let path = f
                .table
                .as_ref()
                .ok_or_else(|| CliError::field("field.table", "missing"))?;
            SampledData::read(path, f.domain.into(), f.length)?.into_initial_data()
        }
    })
}

fn snapshot_table(out: &FieldOutcome<f64>) -> Table {
    let mut t = Table::new(&["t", "x", "V", "E", "q", "s", "n"]);
    for snap in &out.snapshots {
        for p in &snap.particles {
            t.push(vec![
                snap.t.into(),
                p.x.into(),
                p.v.into(),
                p.e.into(),
                p.q.into(),
                p.s.into(),
                p.density().into(),
            ]);
        }
    }
    t
}

/// Runs the Poisson-coupled field (`euler = false`) or the Euler analog.
pub fn field_run(m: &Manifest, euler: bool) -> Result<Artifacts> {
    let f = &m.field;
    let spec = m.damping.spec()?;
    let data = field_data(m)?;
    let mut opts = FieldOptions::new(f.t_end, f.tol, f.particles);
    opts.snapshot_every = Some(f.snapshot_every);
    opts.sigma = f.sigma.into();
    let out = if euler {
        run_euler_analog(&data, &spec, &opts)?
    } else {
        run_field(&data, &spec, &opts)?
    };

    let mut art = Artifacts::default();
    art.line(format!(
        "{} run: N = {}, tol = {}, eps = {}",
        if euler { "Euler analog" } else { "field" },
        f.particles,
        f.tol,
        spec.epsilon
    ));
    art.line(verdict_line(&out.verdict));
    if let (Some(sig), Some(i)) = (out.signal, out.blowup_index) {
        art.line(format!(
            "trigger: {sig:?} at particle {i}, x = {}",
            out.last.particles[i].x
        ));
    }
    let d = out.diagnostics;
    art.line(format!(
        "min q = {}, max density = {}, accepted steps = {}, rejected = {}",
        d.min_q, d.max_density, d.accepted, d.rejected
    ));
    art.line(format!("deepest compression relaxed (q > 0 again): {}", out.reentered));
    if !euler {
        let audit = energy_audit(&out, f.tol)?;
        art.line(format!(
            "energy: max relative rise {:e}, budget residual {:e}, monotone {}, bounded {}",
            audit.max_relative_increase, audit.budget_residual, audit.monotone, audit.bounded
        ));
        if out.verdict.is_blowup() && spec.epsilon > 0.0 {
            if let Ok(v) = v_at_blowup(&out, &spec) {
                art.line(format!(
                    "V on the blow-up characteristic: last resolved {}, one e-fold earlier {:?}",
                    v.v_last,
                    v.v_one_efold_earlier()
                ));
            }
        }
        let mut energy = Table::new(&["index", "x0", "initial", "final", "dissipated", "max_increase"]);
        if let Some(led) = &out.energy {
            for i in 0..led.initial.len() {
                energy.push(vec![
                    i.into(),
                    out.initial.particles[i].x.into(),
                    led.initial[i].into(),
                    led.current[i].into(),
                    led.dissipated[i].into(),
                    led.max_increase[i].into(),
                ]);
            }
        }
        art.csv("energy.csv", energy);
    }
    let mut minq = Table::new(&["t", "index", "q", "n"]);
    for s in &out.min_q_history {
        minq.push(vec![
            s.t.into(),
            s.index.into(),
            s.particle.q.into(),
            s.particle.density().into(),
        ]);
    }
    art.csv("snapshots.csv", snapshot_table(&out));
    art.csv("min_q.csv", minq);
    art.text("plot_field.py", plots::FIELD);
    Ok(art)
}

/// One cell of the gamma sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub gamma: f64,
    pub epsilon: f64,
    pub d: f64,
    pub outcome: std::result::Result<(Verdict<f64>, String, f64), String>,
}

pub fn gamma_threshold_sweep(m: &Manifest) -> Result<(Vec<SweepCell>, Artifacts)> {
    let s = &m.sweep;
    let mut grid = Vec::new();
    for &e in &s.epsilons {
        for &d in &s.ds {
            for &g in &s.gammas {
                grid.push((g, e, d));
            }
        }
    }
    let run_cell = |&(g, e, d): &(f64, f64, f64)| -> SweepCell {
        let outcome = m
            .damping
            .spec_with(g, e)
            .map_err(|err| err.to_string())
            .and_then(|spec| {
                run_field(
                    &InitialData::sine(d),
                    &spec,
                    &FieldOptions::new(s.t_end, s.tol, s.particles),
                )
                .map_err(|err| err.to_string())
            })
            .map(|o| {
                let sig = o.signal.map(|x| format!("{x:?}")).unwrap_or_default();
                (o.verdict, sig, o.diagnostics.max_density)
            });
        SweepCell {
            gamma: g,
            epsilon: e,
            d,
            outcome,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.workers)
        .build()
        .map_err(|e| CliError::field("sweep.workers", e.to_string()))?;
    // Parallel map, ordered collect: the table never depends on scheduling.
    let cells: Vec<SweepCell> = pool.install(|| grid.par_iter().map(run_cell).collect());

    let mut table = Table::new(&[
        "gamma",
        "epsilon",
        "d",
        "N",
        "tol",
        "verdict",
        "t_star",
        "signal",
        "max_density",
        "error",
    ]);
    for c in &cells {
        let mut row: Vec<Cell> = vec![
            c.gamma.into(),
            c.epsilon.into(),
            c.d.into(),
            s.particles.into(),
            s.tol.into(),
        ];
        match &c.outcome {
            Ok((v, sig, nmax)) => row.extend([
                v.label().into(),
                t_star_cell(v),
                sig.clone().into(),
                (*nmax).into(),
                "".into(),
            ]),
            Err(e) => row.extend(["error".into(), "".into(), "".into(), "".into(), e.clone().into()]),
        }
        table.push(row);
    }

    let mut art = Artifacts::default();
    art.line(format!(
        "sweep: {} cells, N = {}, tol = {}, T_end = {}",
        cells.len(),
        s.particles,
        s.tol,
        s.t_end
    ));
    for &e in &s.epsilons {
        for &d in &s.ds {
            let mut row: Vec<&SweepCell> = cells.iter().filter(|c| c.epsilon == e && c.d == d).collect();
            row.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
            let blows = |c: &SweepCell| !matches!(c.outcome, Ok((Verdict::GloballySmoothUpTo(_), _, _)));
            let last_blow = row
                .iter()
                .filter(|c| blows(c))
                .map(|c| c.gamma)
                .fold(f64::NEG_INFINITY, f64::max);
            let first_smooth = row
                .iter()
                .filter(|c| !blows(c))
                .map(|c| c.gamma)
                .fold(f64::INFINITY, f64::min);
            let monotone = last_blow < first_smooth;
            let contradictions: Vec<f64> = row
                .iter()
                .filter(|c| c.gamma >= 1.0 && e > 0.0 && blows(c))
                .map(|c| c.gamma)
                .collect();
            art.line(format!(
                "eps = {e}, d = {d}: largest blow-up gamma {}, smallest smooth gamma {}, monotone {monotone}",
                fmt_bound(last_blow),
                fmt_bound(first_smooth)
            ));
            if !contradictions.is_empty() {
                art.line(format!(
                    "  blow-up at gamma >= 1 (where the damping integral diverges): {contradictions:?}"
                ));
            }
        }
    }
    art.csv("sweep.csv", table);
    art.text("plot_sweep.py", plots::SWEEP);
    Ok((cells, art))
}

fn fmt_bound(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        "none".into()
    }
}

/// Analytic conditions on the damping shape and the behaviour they predict.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub suppression: bool,
    pub parabolic: bool,
    pub tail_regular: bool,
    pub tail_exponent: f64,
    pub prediction: &'static str,
}

pub fn condition_report(spec: &DampingSpec64) -> Result<ConditionReport> {
    let suppression = check_suppression_condition(spec)?;
    let parabolic = check_parabolic_condition(spec)?;
    let tail = check_tail_regularity(spec, &log_grid(1.0, 1e6, 61))?;
    let gamma = spec.tail_exponent()?;
    let prediction = if spec.epsilon == 0.0 {
        "no damping: data with C > 0 blow up"
    } else if suppression && tail.passes {
        "suppresses blow-up for all data"
    } else if suppression {
        "damping integral diverges but the tail is irregular: no prediction"
    } else if parabolic {
        "suppresses C = 0 data only; C > 0 data blow up for small eps"
    } else if gamma == 0.0 {
        "constant-damping regime: blow-up data exist for every eps"
    } else {
        "blow-up data exist for every eps"
    };
    Ok(ConditionReport {
        suppression,
        parabolic,
        tail_regular: tail.passes,
        tail_exponent: tail.limit_estimate,
        prediction,
    })
}

pub fn check_condition(m: &Manifest) -> Result<Artifacts> {
    let spec = m.damping.spec()?;
    let r = condition_report(&spec)?;
    let mut table = Table::new(&["condition", "value", "passes"]);
    let yes = |b: bool| Cell::from(if b { "true" } else { "false" });
    table.push(vec![
        "damping integral diverges".into(),
        r.tail_exponent.into(),
        yes(r.suppression),
    ]);
    table.push(vec![
        "tail exponent above one half".into(),
        r.tail_exponent.into(),
        yes(r.parabolic),
    ]);
    table.push(vec![
        "tail ratio eta f'/f converges".into(),
        r.tail_exponent.into(),
        yes(r.tail_regular),
    ]);
    let mut art = Artifacts::default();
    art.line(format!(
        "damping: nu0 = {}, gamma = {}, eps = {}",
        m.damping.nu0, m.damping.gamma, spec.epsilon
    ));
    art.line(format!("  int f/eta^2 diverges        : {}", r.suppression));
    art.line(format!("  tail exponent > 1/2          : {}", r.parabolic));
    art.line(format!(
        "  eta f'/f has a limit ({:.4}): {}",
        r.tail_exponent, r.tail_regular
    ));
    art.line(format!("prediction: {}", r.prediction));
    art.csv("condition.csv", table);
    Ok(art)
}

/// Phase-plane figure data: direction field plus the undamped and damped
/// curves from one start.
pub fn reproduce_fig1(m: &Manifest, epsilon: f64) -> Result<Artifacts> {
    let f = &m.figures;
    let damped = m.damping.spec_with(m.damping.gamma, epsilon)?;
    let undamped = m.damping.spec_with(m.damping.gamma, 0.0)?;
    let init = AffineState::slopes(f.a0, f.b0);
    let mut art = Artifacts::default();
    let mut curves = Vec::new();
    for (eps, spec) in [(0.0, &undamped), (epsilon, &damped)] {
        let out = integrate_affine_with(init, spec, &AffineOptions::new(f.fig1_t_end, f.tol))?;
        let mut curve = Table::new(&["t", "b", "a"]);
        for s in &out.trace {
            curve.push(vec![s.state.t.into(), s.state.b.into(), s.state.a.into()]);
        }
        art.line(format!("fig1 eps = {eps}: {}", verdict_line(&out.verdict)));
        curves.push(curve);
    }
    let mut fm = m.clone();
    fm.phase.b_max = fm.phase.b_max.min(0.95);
    art.csv("fig1_direction_field.csv", field_table(&damped, &fm));
    let damped_curve = curves.pop().expect("two curves");
    art.csv("fig1_curve_undamped.csv", curves.pop().expect("two curves"));
    art.csv("fig1_curve_damped.csv", damped_curve);
    art.text("plot_fig1.py", plots::FIG1);
    Ok(art)
}

/// `b(t)` with and without damping from one start.
pub fn reproduce_fig2(m: &Manifest) -> Result<Artifacts> {
    let f = &m.figures;
    let init = AffineState::slopes(f.a0, f.b0);
    let mut series = Table::new(&["epsilon", "t", "b"]);
    let mut art = Artifacts::default();
    for eps in [0.0, f.fig2_epsilon] {
        let spec = m.damping.spec_with(m.damping.gamma, eps)?;
        let out = integrate_affine_with(init, &spec, &AffineOptions::new(f.fig2_t_end, f.tol))?;
        for s in &out.trace {
            series.push(vec![eps.into(), s.state.t.into(), s.state.b.into()]);
        }
        art.line(format!("fig2 eps = {eps}: {}", verdict_line(&out.verdict)));
        if !out.verdict.is_blowup() {
            let (early, late) = envelope_halves(&out.trace.iter().map(|s| (s.state.t, s.state.b)).collect::<Vec<_>>());
            art.line(format!(
                "  |b| envelope: second quarter {early:.3e}, last quarter {late:.3e}"
            ));
        }
    }
    art.csv("fig2_series.csv", series);
    art.text("plot_fig2.py", plots::FIG2);
    Ok(art)
}

/// Max `|b|` over the second and the last quarter of the time span.
pub fn envelope_halves(series: &[(f64, f64)]) -> (f64, f64) {
    let t_end = series.last().map_or(0.0, |s| s.0);
    let max_in = |lo: f64, hi: f64| {
        series
            .iter()
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|(_, b)| b.abs())
            .fold(0.0, f64::max)
    };
    (max_in(0.25 * t_end, 0.5 * t_end), max_in(0.75 * t_end, t_end))
}

pub fn figures(m: &Manifest) -> Result<Artifacts> {
    let mut art = reproduce_fig1(m, m.figures.fig1_epsilon)?;
    let fig2 = reproduce_fig2(m)?;
    art.files.extend(fig2.files);
    art.summary.push_str(&fig2.summary);
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep_manifest(gammas: Vec<f64>) -> Manifest {
        let mut m = Manifest::default();
        m.sweep.gammas = gammas;
        m.sweep.particles = 32;
        m.sweep.t_end = 5.0;
        m.sweep.workers = 2;
        m
    }

    #[test]
    fn condition_report_classes() {
        let pl = |g: f64| DampingSpec64::power_law(1.0, g, 0.5).unwrap();
        assert_eq!(
            condition_report(&pl(2.0)).unwrap().prediction,
            "suppresses blow-up for all data"
        );
        let r = condition_report(&pl(0.75)).unwrap();
        assert!(!r.suppression && r.parabolic);
        assert!(r.prediction.starts_with("suppresses C = 0 data only"));
        let r = condition_report(&pl(0.0)).unwrap();
        assert!(!r.suppression && !r.parabolic && r.prediction.starts_with("constant-damping"));
    }

    #[test]
    fn fig1_contrasts_damped_and_undamped() {
        let art = reproduce_fig1(&Manifest::default(), 0.8).unwrap();
        assert!(art.summary.contains("fig1 eps = 0: verdict: blow-up"));
        assert!(art.summary.contains("fig1 eps = 0.8: verdict: smooth"));
        let curve = art.table("fig1_curve_damped.csv").unwrap();
        // The damped curve dips below a = 0 and comes back.
        let a: Vec<f64> = curve
            .rows
            .iter()
            .map(|r| match r[2] {
                Cell::Num(x) => x,
                _ => unreachable!(),
            })
            .collect();
        let first_neg = a.iter().position(|&x| x < 0.0).unwrap();
        assert!(a[first_neg..].iter().any(|&x| x > 0.0));
    }

    #[test]
    fn fig1_identical_curves_without_damping() {
        let art = reproduce_fig1(&Manifest::default(), 0.0).unwrap();
        assert_eq!(art.table("fig1_curve_undamped.csv"), art.table("fig1_curve_damped.csv"));
    }

    #[test]
    fn fig1_ellipse_start_stays_bounded() {
        let mut m = Manifest::default();
        (m.figures.a0, m.figures.b0) = (0.0, 0.3);
        let art = reproduce_fig1(&m, 0.8).unwrap();
        assert_eq!(art.summary.matches("verdict: smooth").count(), 2, "{}", art.summary);
    }

    #[test]
    fn fig2_damped_oscillation_decays() {
        let mut m = Manifest::default();
        m.figures.fig2_t_end = 60.0;
        let art = reproduce_fig2(&m).unwrap();
        assert!(art.summary.contains("fig2 eps = 0: verdict: blow-up"));
        let rows = &art.table("fig2_series.csv").unwrap().rows;
        let damped: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r[0] == Cell::Num(1.0))
            .map(|r| match (&r[1], &r[2]) {
                (Cell::Num(t), Cell::Num(b)) => (*t, *b),
                _ => unreachable!(),
            })
            .collect();
        let (early, late) = envelope_halves(&damped);
        assert!(late < early, "{early} {late}");
        // The two series coincide at the start, while damping is still weak.
        let first: Vec<&Vec<Cell>> = rows.iter().filter(|r| r[1] == Cell::Num(0.0)).collect();
        assert_eq!(first.len(), 2);
        assert_eq!(first[0][2], first[1][2]);
    }

    #[test]
    fn empty_sweep_yields_empty_table() {
        let (cells, art) = gamma_threshold_sweep(&sweep_manifest(vec![])).unwrap();
        assert!(cells.is_empty());
        assert!(art.table("sweep.csv").unwrap().is_empty());
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let m = sweep_manifest(vec![2.0, 0.25]);
        let (a, art_a) = gamma_threshold_sweep(&m).unwrap();
        let (b, art_b) = gamma_threshold_sweep(&m).unwrap();
        assert_eq!(a, b);
        assert_eq!(art_a, art_b);
        assert_eq!(a[0].gamma, 2.0);
        // gamma = 1/4 breaks close to the undamped time arccos(1 - 1/0.9).
        let (v, _, _) = a[1].outcome.as_ref().unwrap();
        assert!(v.is_blowup());
    }

    #[test]
    fn sweep_records_cell_failures_and_continues() {
        let mut m = sweep_manifest(vec![0.25]);
        m.sweep.ds = vec![0.9, 1.5];
        let (cells, _) = gamma_threshold_sweep(&m).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells[1].outcome.is_err());
    }
}
