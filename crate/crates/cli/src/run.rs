//! Dispatch from scenario kinds to the library operations.

use serde_json::{json, Value};

use potlab_core::capacity::{capacity_chain, null_capacity_trend, parabolicity, Parabolicity, SolveOptions, TrendOptions};
use potlab_core::harmonic1d::{
    bounded_extension_bound, decide_removable_1d, fit_two_points, weak_extend, AffineInNu, DecideOptions, ExtensionError,
    PiecewiseHarmonic1D, RemovabilityStatus,
};
use potlab_core::harmonicnd::{
    dirichlet_solve, harnack_ratio, max_principle_check, min_principle_check, puncture_limit_probe, qmin_spot_check,
    removability_experiment, ExperimentSpec,
};
use potlab_core::quasi1d::{
    decide_removable_quasi_1d, extend_quasi_1d, f_q_bound, q_after_reflections, q_update, reflect, reflection_factor, QRule,
    QuasiConstant,
};
use potlab_core::verdict::{
    classify_superharmonic, classify_unweighted_in, classify_weighted, CapacityContext, CapacityFact, ParabolicityInput,
};
use potlab_core::weights1d::{ap_constant, nu_measure, nu_ratio_truncated, ApProbe, Interval, DEFAULT_TRUNCATION};

use crate::output::{fmt_num, num, opt_num, CliError, Diagnostic, Report, Table};
use crate::scenario::*;

type Run<T> = std::result::Result<T, CliError>;

/// Semantic checks that need no solve.
pub fn check(s: &Scenario) -> Vec<Diagnostic> {
    let r = match &s.body {
        Body::Decide1d(d) => line_sets(&d.omega, d.sequence, &d.e, d.trim)
            .and_then(|_| exponent(d.p))
            .and_then(|p| weight(&d.weight, p, &s.base))
            .map(|_| ()),
        Body::Extend1d(d) => line_sets(&d.omega, d.sequence, &d.e, d.trim)
            .and_then(|_| exponent(d.p))
            .and_then(|p| weight(&d.weight, p, &s.base))
            .and_then(|_| d.pieces.iter().enumerate().try_for_each(|(i, pc)| piece_shape(i, pc))),
        Body::Quasi1d(d) => line_sets(&d.omega, d.sequence, &d.e, d.trim)
            .and_then(|_| exponent(d.p))
            .and_then(|_| quasi_constant(d.q))
            .map(|_| ()),
        Body::Fq(f) => exponent(f.p).and_then(|_| quasi_constant(f.q)).map(|_| ()),
        Body::Capacity(c) => c.spec().and_then(|spec| {
            exponent(c.p)?;
            check_levels(&c.levels)?;
            for &h in &c.levels {
                let g = spec.build(h).map_err(|e| Diagnostic::new("grid", format!("at h = {h}: {e}")))?;
                if !g.has_k() {
                    return Err(Diagnostic::new("grid.k", format!("plate K has no nodes at h = {h}")));
                }
            }
            Ok(())
        }),
        Body::Parabolic(pr) => pr
            .growth
            .to_vec()
            .iter()
            .try_for_each(|g| g.build().map(|_| ()))
            .and_then(|_| pr.p.to_vec().into_iter().try_for_each(|p| exponent(p).map(|_| ()))),
        Body::Solve(sv) => (|| {
            exponent(sv.p)?;
            check_levels(&sv.levels)?;
            if sv.grid.k.is_some() {
                return Err(Diagnostic::new("grid.k", "solve scenarios take their boundary values from `boundary`, not a plate"));
            }
            for &h in &sv.levels {
                let g = sv.grid.build(h).map_err(|e| Diagnostic::new("grid", format!("at h = {h}: {e}")))?;
                sv.boundary.check(g.dimension()).map_err(|e| Diagnostic::new("boundary", e.to_string()))?;
            }
            Ok(())
        })(),
        Body::Experiment(x) => (|| {
            exponent(x.p)?;
            check_levels(&x.levels)?;
            for &h in &x.levels {
                let g = x.grid.build(h).map_err(|e| Diagnostic::new("grid", format!("at h = {h}: {e}")))?;
                x.boundary.check(g.dimension()).map_err(|e| Diagnostic::new("boundary", e.to_string()))?;
                let e = x.e.mask(g.lattice(), true).map_err(|e| Diagnostic::new("e", e.to_string()))?;
                if !e.iter().any(|&b| b) {
                    return Err(Diagnostic::new("e", format!("E has no nodes at h = {h}")));
                }
                if e.iter().zip(g.omega()).any(|(&ei, &oi)| ei && !oi) {
                    return Err(Diagnostic::new("e", format!("E ⊄ Ω: E has nodes outside Ω at h = {h}")));
                }
            }
            Ok(())
        })(),
        Body::Verdict(v) => {
            let mut out = Vec::new();
            for (i, c) in v.cases.iter().enumerate() {
                if let Err(d) = verdict_inputs(c, i) {
                    out.push(d);
                }
            }
            return out;
        }
    };
    r.err().into_iter().collect()
}

pub fn execute(s: &Scenario) -> Run<Report> {
    if let Some(d) = check(s).into_iter().next() {
        return Err(d.into());
    }
    match &s.body {
        Body::Decide1d(d) => decide1d(d, s),
        Body::Extend1d(d) => extend1d(d, s),
        Body::Quasi1d(d) => quasi1d(d),
        Body::Fq(f) => fq(f),
        Body::Capacity(c) => capacity(c),
        Body::Parabolic(p) => parabolic(p),
        Body::Solve(sv) => solve(sv),
        Body::Experiment(x) => experiment(x),
        Body::Verdict(v) => verdict(v),
    }
}

fn quasi_constant(q: f64) -> Built<QuasiConstant> {
    QuasiConstant::new(q).map_err(|e| Diagnostic::new("q", e.to_string()))
}

fn solver_options(s: &Solver) -> SolveOptions {
    let mut o = SolveOptions::default();
    if let Some(t) = s.tol_rel {
        o.tol_rel = t;
    }
    if let Some(m) = s.max_iter {
        o.max_iter = m;
    }
    o
}

fn nonincreasing(history: &[f64]) -> bool {
    history.windows(2).all(|w| w[1] <= w[0])
}

/// `n` interior points of an interval; unbounded sides are cut at
/// distance 10 from the finite end (or to `[-5, 5]`).
fn sample_points(iv: &Interval, n: usize) -> Vec<f64> {
    let (lo, hi) = match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => (iv.lo, iv.hi),
        (true, false) => (iv.lo, iv.lo + 10.0),
        (false, true) => (iv.hi - 10.0, iv.hi),
        (false, false) => (-5.0, 5.0),
    };
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

fn pieces_json(f: &PiecewiseHarmonic1D) -> Value {
    Value::Array(
        f.pieces
            .iter()
            .map(|(iv, a)| json!({"interval": iv.to_string(), "a": num(a.a), "b": num(a.b), "basepoint": num(a.basepoint)}))
            .collect(),
    )
}

fn decide1d(d: &Decide1d, s: &Scenario) -> Run<Report> {
    let (om, e) = line_sets(&d.omega, d.sequence, &d.e, d.trim)?;
    let w = weight(&d.weight, exponent(d.p)?, &s.base)?;
    let opts = DecideOptions {
        truncation: d.truncation.unwrap_or(DEFAULT_TRUNCATION),
        ..DecideOptions::default()
    };
    let v = decide_removable_1d(&om, &e, &w, &opts)?;
    let nu = nu_ratio_truncated(&om, &e, &w, opts.truncation, opts.policy)?;
    let removable = v.status == RemovabilityStatus::Removable;
    let mut out = json!({
        "removable": removable,
        "status": format!("{:?}", v.status),
        "clause": v.clause,
        "C": num(v.constant.unwrap_or(v.lebesgue.value)),
        "C_prime": num(nu.value),
        "worst": v.lebesgue.worst.map(|id| id.to_string()),
        "weight": w.to_string(),
    });
    if let Some(m) = d.sup_norm {
        out["extension_bound"] = if removable {
            num(bounded_extension_bound(&om, &e, &w, m, &opts)?)
        } else {
            Value::Null
        };
    }
    if let Some(ap) = &d.ap_probe {
        let probe = ApProbe::dyadic(&w, ap.lo, ap.hi, ap.per_scale)?;
        let est = ap_constant(&w, &probe, opts.policy)?;
        out["ap_constant"] = json!({"lower_bound": num(est.value), "worst": [est.worst.0, est.worst.1], "probe": est.probe});
    }
    if !d.measure.is_empty() {
        let mut rows = Vec::new();
        for (i, m) in d.measure.iter().enumerate() {
            let iv = interval(&format!("measure[{i}]"), m)?;
            let est = nu_measure(&w, &iv)?;
            rows.push(json!({"interval": iv.to_string(), "nu": num(est.value), "error": num(est.error)}));
        }
        out["nu_measure"] = Value::Array(rows);
    }
    if let Some(wit) = &v.witness {
        out["witness"] = json!({
            "case": format!("{:?}", wit.case),
            "function": pieces_json(&wit.function),
            "extension": wit.extension.as_ref().map(pieces_json),
        });
    }
    let mut csv = Table::new(&[
        "component", "interval", "length", "remainder", "ratio", "nu", "nu_remainder", "nu_ratio", "connected",
    ]);
    for (l, n) in v.lebesgue.rows.iter().zip(&nu.rows) {
        csv.push(vec![
            l.id.to_string(),
            l.component.to_string(),
            fmt_num(l.whole),
            fmt_num(l.remainder),
            fmt_num(l.ratio),
            fmt_num(n.whole),
            fmt_num(n.remainder),
            fmt_num(n.ratio),
            l.connected.to_string(),
        ]);
    }
    Ok(Report { json: out, csv })
}

fn piece_shape(i: usize, pc: &PieceSpec) -> Built<()> {
    interval(&format!("pieces[{i}].interval"), &pc.interval)?;
    if pc.through.is_some() == pc.constant.is_some() {
        return Err(Diagnostic::new(format!("pieces[{i}]"), "give exactly one of `through` and `constant`"));
    }
    Ok(())
}

fn extend1d(d: &Extend1d, s: &Scenario) -> Run<Report> {
    let (om, e) = line_sets(&d.omega, d.sequence, &d.e, d.trim)?;
    let w = weight(&d.weight, exponent(d.p)?, &s.base)?;
    let mut pieces = Vec::new();
    for (i, pc) in d.pieces.iter().enumerate() {
        let iv = interval(&format!("pieces[{i}].interval"), &pc.interval)?;
        let f = match (pc.constant, pc.through) {
            (Some(c), _) => AffineInNu::constant(c, w.clone()),
            (None, Some([[x1, u1], [x2, u2]])) => fit_two_points(&w, &iv, (x1, u1), (x2, u2))?,
            (None, None) => unreachable!("checked"),
        };
        pieces.push((iv, f));
    }
    let u = PiecewiseHarmonic1D::new(pieces);
    let mut csv = Table::new(&["component", "x", "u"]);
    let out = match weak_extend(&om, &e, &u) {
        Ok(ext) => {
            for (id, comp) in om.enumerate(8) {
                for x in sample_points(&comp, d.samples) {
                    csv.push(vec![id.to_string(), fmt_num(x), fmt_num(ext.eval(x)?)]);
                }
            }
            let mut values = Vec::new();
            for &x in &d.eval {
                values.push(json!([x, num(ext.eval(x)?)]));
            }
            json!({"extended": true, "extension": pieces_json(&ext), "eval": values})
        }
        Err(ExtensionError::Disconnected { component, witness }) => {
            for (iv, f) in &witness.pieces {
                for x in sample_points(iv, d.samples) {
                    let id = om.locate(x).map(|id| id.to_string()).unwrap_or_default();
                    csv.push(vec![id, fmt_num(x), fmt_num(f.eval(x)?)]);
                }
            }
            json!({
                "extended": false,
                "reason": format!("component {component} minus E is disconnected"),
                "witness": pieces_json(&witness),
            })
        }
        Err(ExtensionError::Numeric(err)) => return Err(err.into()),
    };
    Ok(Report { json: out, csv })
}

fn quasi1d(d: &Quasi1d) -> Run<Report> {
    let (om, e) = line_sets(&d.omega, d.sequence, &d.e, d.trim)?;
    let p = exponent(d.p)?;
    let q = quasi_constant(d.q)?;
    let v = decide_removable_quasi_1d(&om, &e, p, q)?;
    let removable = v.verdict.status == RemovabilityStatus::Removable;
    let mut updates = serde_json::Map::new();
    for (name, rule) in [("martio", QRule::Martio), ("uppman", QRule::Uppman), ("uppman_small", QRule::UppmanSmall)] {
        let r = match q_update(q, p, rule) {
            Ok(q2) => num(q2.get()),
            Err(err) => json!({ "not_applicable": err.to_string() }),
        };
        updates.insert(name.into(), r);
    }
    let mut out = json!({
        "removable": removable,
        "status": format!("{:?}", v.verdict.status),
        "clause": v.verdict.clause,
        "C": num(v.verdict.constant.unwrap_or(v.verdict.lebesgue.value)),
        "q": q.get(),
        "reflections_needed": v.n,
        "reflection_factor": reflection_factor(p),
        "q_update": updates,
        "certificate": v.certificate.iter().map(|&(x, f)| json!([num(x), num(f)])).collect::<Vec<_>>(),
    });
    let mut csv;
    match (&d.u, removable && d.sequence.is_none()) {
        (Some(u), true) => {
            let ext = extend_quasi_1d(&om, &e, u.function(), q, p)?;
            out["extension"] = json!({
                "n": ext.n,
                "reflections_used": ext.reflections_used,
                "q_prime": ext.q_prime.get(),
                "q_after_n": q_after_reflections(q, p, ext.n).get(),
                "ratio": num(ext.ratio),
            });
            csv = Table::new(&["x", "u"]);
            for comp in om.components() {
                for x in sample_points(comp, d.samples) {
                    csv.push(vec![fmt_num(x), fmt_num(ext.eval(x)?)]);
                }
            }
        }
        _ => {
            csv = Table::new(&["x", "f_q"]);
            for &(x, f) in &v.certificate {
                csv.push(vec![fmt_num(x), fmt_num(f)]);
            }
        }
    }
    if let Some(r) = &d.reflect {
        let u = d
            .u
            .as_ref()
            .ok_or_else(|| CliError::Input("reflect: needs the function `u`".into()))?;
        let iv = interval("reflect.interval", &r.interval)?;
        let rf = reflect(u.function(), &iv, r.pivot, r.pivot_value)?;
        out["reflection"] = Value::Array(r.at.iter().map(|&x| json!([x, num(rf.eval(x))])).collect());
    }
    Ok(Report { json: out, csv })
}

fn fq(f: &Fq) -> Run<Report> {
    let (p, q) = (exponent(f.p)?, quasi_constant(f.q)?);
    let mut rows = Vec::new();
    if f.x.is_empty() {
        for k in 1..=60 {
            let x = 2f64.powi(k);
            let b = f_q_bound(q, p, x)?.value();
            rows.push((x, b));
            if b.is_none_or(|b| b > f.until) {
                break;
            }
        }
    } else {
        for &x in &f.x {
            rows.push((x, f_q_bound(q, p, x)?.value()));
        }
    }
    let mut csv = Table::new(&["x", "bound", "feasible"]);
    for &(x, b) in &rows {
        csv.push(vec![fmt_num(x), b.map(fmt_num).unwrap_or_default(), b.is_some().to_string()]);
    }
    let bounds: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
    let out = json!({
        "q": q.get(),
        "p": p.get(),
        "rows": rows.iter().map(|&(x, b)| json!({"x": num(x), "bound": opt_num(b)})).collect::<Vec<_>>(),
        "monotone": bounds.windows(2).all(|w| w[1] >= w[0]),
        "exceeds_until": bounds.last().is_some_and(|b| *b > f.until),
    });
    Ok(Report { json: out, csv })
}

fn capacity(c: &CapacityRun) -> Run<Report> {
    let spec = c.spec()?;
    let opts = solver_options(&c.solver);
    let chain = capacity_chain(&spec, &c.levels, c.p, &opts)?;
    let pairs: Vec<(f64, f64)> = chain.iter().map(|e| (e.h, e.value)).collect();
    let trend = null_capacity_trend(&pairs, &TrendOptions::default());
    let mut csv = Table::new(&["h", "capacity", "iterations"]);
    for e in &chain {
        csv.push(vec![fmt_num(e.h), fmt_num(e.value), e.iterations.to_string()]);
    }
    let out = json!({
        "p": c.p,
        "trend": trend.to_string(),
        "capacity": chain.last().map(|e| num(e.value)),
        "levels": chain.iter().map(|e| json!({
            "h": e.h,
            "capacity": num(e.value),
            "iterations": e.iterations,
            "energy_nonincreasing": nonincreasing(&e.energy_history),
        })).collect::<Vec<_>>(),
    });
    Ok(Report { json: out, csv })
}

fn parabolic(pr: &ParabolicRun) -> Run<Report> {
    let mut cases = Vec::new();
    let mut csv = Table::new(&["growth", "p", "verdict", "rule"]);
    for g in pr.growth.to_vec() {
        let growth = g.build()?;
        for p in pr.p.to_vec() {
            let r = parabolicity(&growth, p)?;
            let parabolic = match r.verdict {
                Parabolicity::Parabolic => Some(true),
                Parabolicity::Hyperbolic => Some(false),
                Parabolicity::Inconclusive => None,
            };
            csv.push(vec![g.describe(), fmt_num(p), format!("{:?}", r.verdict), r.rule.to_string()]);
            cases.push(json!({
                "growth": g.describe(),
                "p": p,
                "parabolic": parabolic,
                "verdict": format!("{:?}", r.verdict),
                "rule": r.rule,
                "blocks": r.blocks.iter().map(|&b| num(b)).collect::<Vec<_>>(),
            }));
        }
    }
    let out = if cases.len() == 1 {
        cases.pop().expect("one case")
    } else {
        json!({ "cases": cases })
    };
    Ok(Report { json: out, csv })
}

fn solve(sv: &SolveRun) -> Run<Report> {
    let opts = solver_options(&sv.solver);
    let f = |x: &[f64]| sv.boundary.eval(x);
    let mut levels = Vec::new();
    let mut fields = Vec::new();
    for &h in &sv.levels {
        let g = sv.grid.build(h)?;
        let rep = dirichlet_solve(&g, sv.p, &f, &opts)?;
        let mut row = json!({
            "h": h,
            "energy": num(rep.energy),
            "iterations": rep.iterations,
            "energy_nonincreasing": nonincreasing(&rep.energy_history),
            "max_principle": max_principle_check(&rep.field),
            "min_principle": min_principle_check(&rep.field),
        });
        if let Some(hs) = &sv.harnack {
            row["harnack_ratio"] = num(harnack_ratio(&rep.field, &g, &hs.center, hs.radius)?);
        }
        if let Some(qs) = &sv.qmin {
            row["qmin"] = serde_json::to_value(qmin_spot_check(&rep.field, &g, sv.p, qs.q, qs.trials, qs.seed)?).expect("plain data");
        }
        levels.push(row);
        fields.push(rep.field);
    }
    let mut out = json!({ "p": sv.p, "levels": levels });
    if let Some(pr) = &sv.probe {
        out["probe"] = serde_json::to_value(puncture_limit_probe(&fields, &pr.at)?).expect("plain data");
    }
    let u = fields.last().expect("levels checked nonempty");
    let n = u.lattice.dimension();
    let mut header: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
    header.push("u".into());
    let mut csv = Table::new(&header);
    for i in u.present() {
        let mut row: Vec<String> = u.lattice.point(i).into_iter().map(fmt_num).collect();
        row.push(fmt_num(u.values[i]));
        csv.push(row);
    }
    Ok(Report { json: out, csv })
}

fn experiment(x: &ExperimentRun) -> Run<Report> {
    let spec = ExperimentSpec {
        grid: x.grid.clone(),
        e: x.e.clone(),
        p: x.p,
        boundary: x.boundary.clone(),
        levels: x.levels.clone(),
        e_value: x.e_value,
    };
    let rep = removability_experiment(&spec, &solver_options(&x.solver))?;
    let mut csv = Table::new(&["h", "value", "oscillation", "verdict"]);
    for (h, v, o, verdict) in rep.csv_rows() {
        csv.push(vec![fmt_num(h), fmt_num(v), fmt_num(o), verdict.to_string()]);
    }
    let primary = rep.primary();
    let out = json!({
        "verdict": primary.verdict.to_string(),
        "quantity": primary.quantity,
        "contraction_factors": primary.contraction_factors().into_iter().map(num).collect::<Vec<_>>(),
        "report": serde_json::to_value(&rep).expect("plain data"),
    });
    Ok(Report { json: out, csv })
}

struct VerdictInputs {
    ctx: CapacityContext,
    facts: Vec<CapacityFact>,
    growth: Option<ParabolicityInput>,
}

fn verdict_inputs(c: &VerdictCase, i: usize) -> Built<VerdictInputs> {
    let at = |f: &str| format!("cases[{i}].{f}");
    let facts = c
        .facts
        .iter()
        .enumerate()
        .map(|(j, f)| f.build(&at(&format!("facts[{j}]"))))
        .collect::<Built<Vec<_>>>()?;
    let ctx = CapacityContext {
        n: c.n,
        p: c.p,
        unweighted: match c.mode {
            Mode::Unweighted => true,
            Mode::Weighted => false,
            Mode::Superharmonic => !c.weighted,
        },
        numeric_floor: c.numeric_floor,
    };
    let growth = match (c.mode, &c.growth, c.parabolicity) {
        (Mode::Weighted, Some(g), None) => Some(ParabolicityInput::Growth(g.build().map_err(|d| Diagnostic::new(at("growth"), d.message))?)),
        (Mode::Weighted, None, Some(v)) => Some(ParabolicityInput::Declared(v)),
        (Mode::Weighted, _, _) => {
            return Err(Diagnostic::new(at("growth"), "weighted cases give exactly one of `growth` and `parabolicity`"))
        }
        (_, None, None) => None,
        _ => return Err(Diagnostic::new(at("growth"), "only weighted cases take `growth` or `parabolicity`")),
    };
    // Dimension, exponent and set coordinates are checked by a dry run on
    // the structural rules alone.
    let dry = match c.mode {
        Mode::Superharmonic => classify_superharmonic(&ctx, &c.e, &facts).map(|_| ()),
        _ => classify_unweighted_in(&ctx, &c.omega, &c.e, &facts).map(|_| ()),
    };
    dry.map_err(|e| Diagnostic::new(format!("cases[{i}]"), e.to_string()))?;
    Ok(VerdictInputs { ctx, facts, growth })
}

fn verdict(v: &VerdictRun) -> Run<Report> {
    let mut rows = Vec::new();
    let mut csv = Table::new(&["label", "mode", "n", "p", "removable", "clause", "provenance"]);
    for (i, c) in v.cases.iter().enumerate() {
        let inp = verdict_inputs(c, i)?;
        let label = c.label.clone().unwrap_or_else(|| format!("case {}", i + 1));
        let (mode, mut value, removable, clause, provenance) = match c.mode {
            Mode::Superharmonic => {
                let sv = classify_superharmonic(&inp.ctx, &c.e, &inp.facts)?;
                let r = (sv.verdict.removable, sv.verdict.clause, sv.verdict.provenance.join(";"));
                ("superharmonic", serde_json::to_value(&sv).expect("plain data"), r.0, r.1, r.2)
            }
            Mode::Unweighted => {
                let cv = classify_unweighted_in(&inp.ctx, &c.omega, &c.e, &inp.facts)?;
                let r = (cv.removable, cv.clause, cv.provenance.join(";"));
                ("unweighted", serde_json::to_value(&cv).expect("plain data"), r.0, r.1, r.2)
            }
            Mode::Weighted => {
                let growth = inp.growth.as_ref().expect("checked");
                let cv = classify_weighted(&inp.ctx, growth, &c.omega, &c.e, &inp.facts)?;
                let r = (cv.removable, cv.clause, cv.provenance.join(";"));
                ("weighted", serde_json::to_value(&cv).expect("plain data"), r.0, r.1, r.2)
            }
        };
        value["label"] = json!(label);
        value["mode"] = json!(mode);
        csv.push(vec![label, mode.into(), c.n.to_string(), fmt_num(c.p), removable.to_string(), clause.into(), provenance]);
        rows.push(value);
    }
    Ok(Report {
        json: json!({ "verdicts": rows }),
        csv,
    })
}
