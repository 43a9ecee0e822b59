use crate::output::{Artifact, Cell};
use crate::{BlayerArgs, CriterionArgs, KernelArgs, ReproduceArgs, SimulateArgs, SpectrumArgs};
use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use reglab::blayer::{biharmonic_closed_form, dispersion_closed_form, heat_closed_form, solve_bl_bvp, BlFamily};
use reglab::criteria::*;
use reglab::kernels::*;
use reglab::pdesim::*;
use reglab::spectral::*;
use serde_json::json;
use std::str::FromStr;

fn err(s: String) -> anyhow::Error {
    anyhow!(s)
}

/// `start:end:step`, both ends included.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("range '{s}' must read start:end:step"))?;
    let [a, b, h] = parts[..] else { bail!("range '{s}' must read start:end:step") };
    if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
        bail!("range '{s}' needs step > 0 and end ≥ start");
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    if n > 10_000_000 {
        bail!("range '{s}' has too many points");
    }
    Ok((0..=n).map(|i| a + i as f64 * h).collect())
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("window '{s}' must read lo:hi"))?;
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    if !(b > a) {
        bail!("window '{s}' needs lo < hi");
    }
    Ok((a, b))
}

fn kernel_family(name: &str, m: u32) -> Result<EquationFamily> {
    if name.trim().eq_ignore_ascii_case("parabolic") {
        if m == 0 {
            bail!("--m must be at least 1");
        }
        return Ok(EquationFamily::Parabolic(m));
    }
    EquationFamily::from_str(name).map_err(err)
}

pub fn kernel(a: &KernelArgs) -> Result<Artifact> {
    let family = kernel_family(&a.family, a.m)?;
    let ys = parse_range(&a.range)?;
    let window = match &a.fit_window {
        Some(w) => parse_window(w)?,
        None => default_fit_window(family),
    };
    let fit = kernel_asymptotics_fit(family, window)?;
    let kc = kernel_constants(family).with_fit(&fit);
    let values: Vec<f64> = ys.par_iter().map(|&y| eval_kernel(family, y, a.tol)).collect::<Result<_, _>>()?;
    let mut art = Artifact::new(vec!["y", "F", "asymptotic", "abs_diff"]);
    art.set("command", "kernel")?;
    art.set("family", family.to_string())?;
    art.set("constants", &kc)?;
    art.set("fit", &fit)?;
    art.set("tol", a.tol)?;
    let even = matches!(family, EquationFamily::Parabolic(_));
    for (&y, &f) in ys.iter().zip(&values) {
        let asym = if y > 0.0 || (even && y < 0.0) { fit.evaluate(&kc, y.abs()) } else { f64::NAN };
        art.push(vec![y.into(), f.into(), asym.into(), (f - asym).abs().into()]);
    }
    Ok(art)
}

fn eigen_row(l: f64, a: &SpectrumArgs, method: Method) -> Result<(f64, f64, f64)> {
    let mut p = IntervalEigenProblem::new(l).with_family(EquationFamily::Parabolic(a.m)).with_method(method);
    p.tol = a.tol;
    if let Some(n) = a.grid {
        p = p.with_grid(n);
    }
    let top = interval_spectrum(&p, 1).with_context(|| format!("l = {l}"))?;
    let e = &top[0];
    Ok((e.lambda.re, e.lambda.im, e.residual))
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Artifact> {
    let method = Method::from_str(&a.method).map_err(err)?;
    if a.m == 0 {
        bail!("--m must be at least 1");
    }
    if let Some(range) = &a.branch {
        if a.m != 2 {
            bail!("branch continuation is implemented for m = 2");
        }
        let ls = parse_range(range)?;
        let (lo, hi) = (ls[0], *ls.last().unwrap());
        let step = if ls.len() > 1 { ls[1] - ls[0] } else { bail!("branch range needs at least two points") };
        let br = branch_trace_with_tol((lo, hi), step, a.tol)?;
        let mut art;
        if a.roots {
            art = Artifact::new(vec!["k", "l_root"]);
            for (k, r) in br.roots.iter().enumerate() {
                art.push(vec![(k + 1).into(), (*r).into()]);
            }
        } else {
            art = Artifact::new(vec!["l", "lambda0"]);
            for (l, v) in &br.samples {
                art.push(vec![(*l).into(), (*v).into()]);
            }
        }
        art.set("command", "spectrum")?;
        art.set("branch", json!({"start": lo, "end": hi, "step": step}))?;
        art.set("roots", &br.roots)?;
        art.set("reseeds", &br.reseeds)?;
        return Ok(art);
    }
    let mut ls: Vec<f64> = a.l.clone();
    if let Some(r) = &a.l_range {
        ls.extend(parse_range(r)?);
    }
    let reference: Option<Vec<f64>> = match a.reproduce.as_deref() {
        None => None,
        Some("table1") => {
            if a.m != 2 {
                bail!("table1 is tabulated for m = 2");
            }
            ls.extend(REFERENCE_LAMBDA0.iter().map(|r| r.0));
            Some(REFERENCE_LAMBDA0.iter().map(|r| r.1).collect())
        }
        Some(other) => bail!("unknown table '{other}' (available: table1)"),
    };
    if ls.is_empty() {
        bail!("give --l, --l-range, --branch or --reproduce table1");
    }
    let rows: Vec<(f64, f64, f64)> = ls.par_iter().map(|&l| eigen_row(l, a, method)).collect::<Result<_>>()?;
    let mut art = if reference.is_some() {
        Artifact::new(vec!["l", "reference_lambda0", "re_lambda0", "im_lambda0", "residual", "method"])
    } else {
        Artifact::new(vec!["l", "re_lambda0", "im_lambda0", "residual", "method"])
    };
    art.set("command", "spectrum")?;
    art.set("m", a.m)?;
    art.set("tol", a.tol)?;
    let n_ref = reference.as_ref().map_or(0, |r| r.len());
    let first_ref = ls.len() - n_ref;
    for (i, (&l, (re, im, res))) in ls.iter().zip(rows).enumerate() {
        let mut row: Vec<Cell> = vec![l.into()];
        if let Some(r) = &reference {
            row.push(if i >= first_ref { r[i - first_ref].into() } else { f64::NAN.into() });
        }
        row.extend([re.into(), im.into(), res.into(), a.method.as_str().into()]);
        art.push(row);
    }
    Ok(art)
}

pub fn blayer(a: &BlayerArgs) -> Result<Artifact> {
    let family = BlFamily::from_str(&a.family).map_err(err)?;
    let p = solve_bl_bvp(family, a.length, a.tol)?;
    let closed: Option<fn(u32, f64) -> f64> = match family {
        BlFamily::Biharmonic => Some(biharmonic_closed_form),
        BlFamily::Heat => Some(heat_closed_form),
        BlFamily::Dispersion => Some(dispersion_closed_form),
        BlFamily::Pme4 => None,
    };
    let mut art = Artifact::new(vec!["xi", "g", "dg", "closed_form", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for i in 0..p.xi.len() {
        let c = closed.map_or(f64::NAN, |f| f(0, p.xi[i]));
        if c.is_finite() {
            worst = worst.max((p.g[i] - c).abs());
        }
        art.push(vec![p.xi[i].into(), p.g[i].into(), p.dg[i].into(), c.into(), (p.g[i] - c).abs().into()]);
    }
    art.set("command", "blayer")?;
    art.set("family", family.to_string())?;
    art.set("profile", if family == BlFamily::Pme4 { "G = g^3" } else { "g" })?;
    art.set("provenance", p.provenance)?;
    art.set("wall", &p.wall)?;
    art.set("gamma1", p.gamma1)?;
    art.set("gamma2", p.gamma2)?;
    art.set("far_field", p.far_field)?;
    art.set("truncation", p.truncation)?;
    art.set("residual", p.residual)?;
    art.set("overshoots", p.overshoots(1e-6))?;
    if closed.is_some() {
        art.set("max_abs_diff", worst)?;
    }
    Ok(art)
}

fn criterion_family(name: &str, side: Side) -> Result<(CriterionFamily, u32)> {
    let n = name.trim().to_ascii_lowercase();
    Ok(match n.as_str() {
        "heat" | "parabolic:1" => (CriterionFamily::Heat, 1),
        "biharmonic" | "parabolic:2" => (CriterionFamily::Biharmonic, 2),
        "dispersion3" | "dispersion" => match side {
            Side::Left => (CriterionFamily::DispersionLeft, 0),
            Side::Right => (CriterionFamily::DispersionRight, 0),
        },
        "beam4" | "beam" => (CriterionFamily::Beam4, 0),
        _ => {
            let m = n
                .strip_prefix("polyharmonic:")
                .or_else(|| n.strip_prefix("parabolic:"))
                .and_then(|m| m.parse::<u32>().ok())
                .filter(|&m| m >= 1)
                .ok_or_else(|| anyhow!("unknown criterion family '{name}'"))?;
            match m {
                1 => (CriterionFamily::Heat, 1),
                2 => (CriterionFamily::Biharmonic, 2),
                m => (CriterionFamily::Polyharmonic(m), m),
            }
        }
    })
}

pub fn classify(family: &str, side: &str, phi: &BoundaryFunction, cutoff: bool, eps_s: f64) -> Result<CriterionVerdict> {
    let side = Side::from_str(side).map_err(err)?;
    let (fam, m) = criterion_family(family, side)?;
    let boundary: Boundary = if cutoff {
        apply_cutoff_with(phi, &criterion_integrand(fam)?, eps_s)?.into()
    } else {
        phi.clone().into()
    };
    let v = match fam {
        CriterionFamily::Heat => {
            let mut v = classify_heat(phi)?;
            if let Boundary::Cutoff(c) = &boundary {
                v.notes.extend(c.notice.clone());
            }
            v
        }
        CriterionFamily::Biharmonic | CriterionFamily::Polyharmonic(_) => classify_polyharmonic(m, &boundary)?,
        CriterionFamily::DispersionLeft | CriterionFamily::DispersionRight => classify_dispersion(side, &boundary)?,
        CriterionFamily::Beam4 => classify_beam(&boundary)?,
    };
    Ok(v)
}

pub fn criterion(a: &CriterionArgs) -> Result<Artifact> {
    let phi_s = a.phi.as_deref().ok_or_else(|| anyhow!("--phi is required"))?;
    let phi = BoundaryFunction::from_str(phi_s).map_err(err)?;
    let v = classify(&a.family, &a.side, &phi, a.cutoff, a.eps_s)?;
    let mut art = Artifact::new(vec!["lo", "hi", "integral", "abs_integral", "partial"]);
    if let Some(d) = &v.diagnostics {
        for w in &d.windows {
            art.push(vec![w.lo.into(), w.hi.into(), w.integral.into(), w.abs_integral.into(), w.partial.into()]);
        }
    }
    let mut record = serde_json::to_value(&v)?;
    if let Some(d) = record.get_mut("diagnostics").and_then(|d| d.as_object_mut()) {
        d.remove("windows");
    }
    for (k, val) in record.as_object().expect("verdict record") {
        art.header.insert(k.clone(), val.clone());
    }
    art.set("command", "criterion")?;
    art.set("input", json!({"family": a.family, "side": a.side, "phi": phi_s, "cutoff": a.cutoff, "eps_s": a.eps_s}))?;
    Ok(art)
}

pub fn simulate(a: &SimulateArgs) -> Result<Artifact> {
    if a.verify_p2 {
        return verify(a);
    }
    let family = SimFamily::from_str(&a.family).map_err(err)?;
    let phi = BoundaryFunction::from_str(&a.phi).map_err(err)?;
    let constant = matches!(phi, BoundaryFunction::Constant { .. });
    let boundary: Boundary = if a.cutoff {
        let cf = match family {
            SimFamily::Heat => CriterionFamily::Heat,
            SimFamily::Biharmonic => CriterionFamily::Biharmonic,
        };
        apply_cutoff_with(&phi, &criterion_integrand(cf)?, DEFAULT_EPS_S)?.into()
    } else {
        phi.into()
    };
    let t0 = a.tau_start.unwrap_or(if constant { 0.0 } else { TAU0 });
    let initial = match a.seed {
        Some(seed) => InitialData::RandomSmooth { seed, modes: a.modes },
        None => InitialData::default(),
    };
    let mut cfg = SimConfig::new(family, boundary, (t0, a.tau_end))
        .with_grid(a.n)
        .with_samples(a.samples)
        .with_initial(initial)
        .with_bl_checks(a.bl_check.clone());
    cfg.steps.rtol = a.rtol;
    cfg.steps.max_steps = a.max_steps;
    let r = reglab::pdesim::simulate(&cfg)?;
    let fit = match &a.fit_window {
        Some(w) => Some(fit_rate(&r, parse_window(w)?)?),
        None => None,
    };
    let sigma = fit.as_ref().map(|f| f.sigma).or(r.sigma_fit);
    let mut art = Artifact::new(vec!["tau", "phi", "sup_norm", "a0"]);
    for i in 0..r.tau.len() {
        art.push(vec![r.tau[i].into(), r.phi[i].into(), r.sup[i].into(), r.a0[i].into()]);
    }
    art.set("command", "simulate")?;
    art.set("config", &cfg)?;
    art.set("sigma_fit", sigma)?;
    art.set("fit", &fit)?;
    art.set("steps_accepted", r.steps_accepted)?;
    art.set("steps_rejected", r.steps_rejected)?;
    art.set("bl", &r.bl)?;
    Ok(art)
}

fn verify(a: &SimulateArgs) -> Result<Artifact> {
    if a.p2_seeds.is_empty() {
        bail!("verify-P2 needs at least one seed");
    }
    let rep = verify_p2(&a.p2_seeds)?;
    let mut art = Artifact::new(vec!["l", "seed", "sigma", "expected_sign", "ok"]);
    for row in &rep.rows {
        art.push(vec![
            row.l.into(),
            row.seed.into(),
            row.sigma.into(),
            (row.expected_sign as f64).into(),
            if row.ok { "true" } else { "false" }.into(),
        ]);
    }
    let status = if rep.pass { "PASS" } else { "FAIL" };
    art.set("command", "simulate")?;
    art.set("suite", "verify-P2")?;
    art.set("window", rep.window)?;
    art.set("pass", rep.pass)?;
    art.set("status", status)?;
    let traces: Vec<_> = rep.rows.iter().filter(|r| r.trace.is_some()).collect();
    if !traces.is_empty() {
        art.set("failing_traces", traces)?;
    }
    eprintln!("verify-P2: {status}");
    Ok(art)
}

pub fn reproduce(a: &ReproduceArgs) -> Result<Artifact> {
    match a.name.as_deref() {
        Some("table1") => spectrum(&SpectrumArgs {
            l: Vec::new(),
            l_range: None,
            reproduce: Some("table1".into()),
            branch: None,
            roots: false,
            method: "shooting".into(),
            m: 2,
            grid: None,
            tol: 1e-12,
        }),
        Some("branch-roots") => branch_roots(),
        Some("petrovskii-heat") => petrovskii_heat(),
        Some("critical-constants") => critical_constants(),
        Some(other) => bail!("unknown reproduction '{other}' (table1, branch-roots, petrovskii-heat, critical-constants)"),
        None => bail!("name a reproduction: table1, branch-roots, petrovskii-heat, critical-constants"),
    }
}

fn branch_roots() -> Result<Artifact> {
    let step = 0.05;
    let chunks = [(3.5, 6.0), (6.0, 8.5), (8.5, 11.0), (11.0, 13.5)];
    let parts: Vec<EigenBranch> = chunks.par_iter().map(|&c| branch_trace(c, step)).collect::<Result<_, _>>()?;
    let mut roots: Vec<f64> = parts.iter().flat_map(|b| b.roots.iter().copied()).collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    let approx = [4.0775, 7.25, 10.0, 13.0];
    let mut art = Artifact::new(vec!["k", "l_root", "reference"]);
    for (k, r) in roots.iter().enumerate() {
        art.push(vec![(k + 1).into(), (*r).into(), approx.get(k).copied().unwrap_or(f64::NAN).into()]);
    }
    art.set("command", "reproduce")?;
    art.set("name", "branch-roots")?;
    art.set("range", (3.5, 13.5))?;
    art.set("step", step)?;
    Ok(art)
}

fn petrovskii_heat() -> Result<Artifact> {
    let cs: Vec<f64> = (0..=20).map(|i| 1.5 + 0.05 * i as f64).collect();
    let verdicts: Vec<CriterionVerdict> = cs
        .par_iter()
        .map(|&c| classify_heat(&BoundaryFunction::PetrovskiiSqrtLog { c }))
        .collect::<Result<_, _>>()?;
    let mut art = Artifact::new(vec!["C", "verdict", "rho_verdict"]);
    for (c, v) in cs.iter().zip(&verdicts) {
        let rho = v.rho_form.map_or(String::new(), |r| r.to_string());
        art.push(vec![(*c).into(), v.verdict.to_string().into(), rho.into()]);
    }
    art.set("command", "reproduce")?;
    art.set("name", "petrovskii-heat")?;
    art.set("boundary", "sqrtlog:C")?;
    art.set("threshold", 2.0)?;
    Ok(art)
}

fn critical_constants() -> Result<Artifact> {
    let fams = [
        (CriterionFamily::Heat, Some(2.0)),
        (CriterionFamily::Biharmonic, Some(3f64.powf(-0.75) * 2f64.powf(2.75))),
        (CriterionFamily::Polyharmonic(3), None),
        (CriterionFamily::Polyharmonic(4), None),
        (CriterionFamily::DispersionLeft, Some((1.5 * 3f64.sqrt()).powf(2.0 / 3.0))),
        (CriterionFamily::DispersionRight, Some(4.0 / 3.0)),
        (CriterionFamily::Beam4, None),
    ];
    let mut art = Artifact::new(vec![
        "family",
        "alpha",
        "decay",
        "freq",
        "threshold_constant",
        "critical_log_exponent",
        "critical_power_exponent",
        "closed_form",
    ]);
    for (f, closed) in fams {
        let ig = criterion_integrand(f)?;
        let o = |v: Option<f64>| Cell::from(v.unwrap_or(f64::NAN));
        art.push(vec![
            f.to_string().into(),
            ig.alpha.into(),
            ig.decay.into(),
            ig.freq.into(),
            o(ig.threshold_constant()),
            o(ig.critical_log_exponent()),
            o(ig.critical_power_exponent()),
            o(closed),
        ]);
    }
    art.set("command", "reproduce")?;
    art.set("name", "critical-constants")?;
    Ok(art)
}
