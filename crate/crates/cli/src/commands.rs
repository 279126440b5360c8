//! Thin adapters from parsed arguments to core calls and rendered output.

use pdov_core::mc::mc_moments;
use pdov_core::verify::{self, VerifyConfig};
use pdov_core::*;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cli::*;
use crate::output::{jnum, pretty, Cell, Table};

/// Rendered data plus conditions the caller turns into exit codes.
pub struct Rendered {
    pub body: String,
    /// Importance-sampling weights degenerated (ESS below threshold).
    pub degenerate: Option<String>,
    /// A verification suite failed.
    pub failed_checks: usize,
}

impl Rendered {
    fn data(body: String) -> Self {
        Rendered { body, degenerate: None, failed_checks: 0 }
    }
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.csv(),
        Format::Json => pretty(&table.json()),
    }
}

fn cells<const N: usize>(row: [Cell; N]) -> Vec<Cell> {
    row.to_vec()
}

pub fn run(command: &Command, global: &GlobalOpts) -> Result<Rendered> {
    let fmt = |default| global.format.unwrap_or(default);
    match command {
        Command::Coeffs(a) => coeffs(a, fmt(Format::Csv)),
        Command::Moments(a) => moments(a, global.seed, fmt(Format::Csv)),
        Command::Kn(a) => kn(a, fmt(Format::Csv)),
        Command::Mgf(a) => mgf_cmd(a, fmt(Format::Csv)),
        Command::Phase(a) => phase(a, fmt(Format::Csv)),
        Command::Tails(a) => tails(a, fmt(Format::Csv)),
        Command::Rate(a) => rate(a, fmt(Format::Json)),
        Command::Sample(a) => {
            let default = if a.hist_bins.is_some() { Format::Csv } else { Format::Json };
            sample(a, global.seed, fmt(default))
        }
        Command::Verify(a) => verify_cmd(a, global.seed, fmt(Format::Csv)),
    }
}

fn coeffs(a: &CoeffsArgs, format: Format) -> Result<Rendered> {
    let table = if a.theta == 0.0 { build_limit_table(a.kmax)? } else { build_coeff_table(a.theta, a.kmax)? };
    let body = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("ascii output")
        }
        Format::Json => {
            let e = table.to_export();
            let rows = |rs: &Vec<Vec<f64>>| -> Value {
                rs.iter().map(|r| r.iter().map(|&v| jnum(v)).collect::<Vec<_>>()).collect::<Vec<_>>().into()
            };
            pretty(&json!({
                "theta": jnum(e.theta),
                "kmax": e.kmax,
                "rows": rows(&e.rows),
                "ln_rows": rows(&e.ln_rows),
            }))
        }
    };
    Ok(Rendered::data(body))
}

fn moments(a: &MomentsArgs, seed: u64, format: Format) -> Result<Rendered> {
    let mv = moments_from_table(&build_coeff_table(a.theta, a.kmax)?, a.kmax)?;
    let mc = a.mc_check.map(|n| mc_moments(a.theta, a.kmax, n, seed)).transpose()?;
    let mut header = vec!["k", "m_exact", "m_recursion"];
    if mc.is_some() {
        header.extend(["m_mc", "se"]);
    }
    let mut t = Table::new(header);
    for k in 1..=a.kmax {
        let mut row = vec![k.into(), mv.get(k).into(), moment_via_recursion(a.theta, k)?.into()];
        if let Some(mc) = &mc {
            row.extend([mc[k - 1].value.into(), mc[k - 1].std_error.into()]);
        }
        t.push(row);
    }
    Ok(Rendered::data(render(&t, format)))
}

fn kn(a: &KnArgs, format: Format) -> Result<Rendered> {
    let rows: Vec<(f64, f64, tilted::ProofDiagnostics)> = a
        .theta
        .par_iter()
        .map(|&theta| {
            let spec = SelectionSpec::new(a.lambda, theta)?;
            Ok((theta, spec.x(), proof_diagnostics(&spec, a.n)?))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(vec!["theta", "x", "k_n", "k_tilde_n", "f_n", "g"]);
    for (theta, x, d) in rows {
        t.push(cells([theta.into(), x.into(), d.k.into(), d.k_tilde.into(), d.f.into(), d.g.into()]));
    }
    Ok(Rendered::data(render(&t, format)))
}

fn mgf_cmd(a: &MgfArgs, format: Format) -> Result<Rendered> {
    let spec = SelectionSpec::new(a.lambda, a.theta)?;
    let kmax = a.kmax.unwrap_or_else(|| spec.kmax());
    let rows: Vec<(f64, f64, f64)> = a
        .t
        .par_iter()
        .map(|&t| Ok((t, mgf(&spec, t, kmax)?, limit_mgf(a.lambda, t)?)))
        .collect::<Result<_>>()?;
    let mut t = Table::new(vec!["t", "mgf", "limit_mgf"]);
    for (tv, m, l) in rows {
        t.push(cells([tv.into(), m.into(), l.into()]));
    }
    Ok(Rendered::data(render(&t, format)))
}

fn phase(a: &PhaseArgs, format: Format) -> Result<Rendered> {
    let mut t = Table::new(vec!["lambda", "u", "h_limit"]);
    for p in tilted::phase_sweep(a.lambda_min, a.lambda_max, a.step)? {
        t.push(cells([p.lambda.into(), p.u.into(), p.limit_homozygosity.into()]));
    }
    Ok(Rendered::data(render(&t, format)))
}

fn tails(a: &TailsArgs, format: Format) -> Result<Rendered> {
    let r = tail_bound(&SelectionSpec::new(a.lambda, a.theta)?)?;
    let mut t = Table::new(vec!["lambda", "theta", "computed_tail", "analytic_bound", "truncation_bound", "holds"]);
    t.push(cells([
        a.lambda.into(),
        a.theta.into(),
        r.computed_tail.into(),
        r.analytic_bound.into(),
        r.truncation_bound.into(),
        r.holds().into(),
    ]));
    Ok(Rendered::data(render(&t, format)))
}

fn single_row(fields: Vec<(&'static str, Cell)>, format: Format) -> String {
    match format {
        Format::Json => pretty(&Value::Object(
            fields
                .iter()
                .map(|(k, c)| {
                    let v = match c {
                        Cell::Real(x) => jnum(*x),
                        Cell::Int(i) => Value::from(*i),
                        Cell::Bool(b) => Value::Bool(*b),
                        Cell::Text(s) => Value::String(s.clone()),
                        Cell::Empty => Value::Null,
                    };
                    (k.to_string(), v)
                })
                .collect(),
        )),
        Format::Csv => {
            let mut t = Table::new(fields.iter().map(|(k, _)| *k).collect());
            t.push(fields.into_iter().map(|(_, c)| c).collect());
            t.csv()
        }
    }
}

fn rate(a: &RateArgs, format: Format) -> Result<Rendered> {
    let x = match (&a.config, a.uniform) {
        (Some(c), _) => Configuration::from_unsorted(c.clone())?,
        (None, Some(k)) => uniform_config(k)?,
        (None, None) => unreachable!("clap requires one of --config, --uniform"),
    };
    let fields = vec![
        ("J", j_rate(&x).into()),
        ("phi2", phi2(&x).into()),
        ("infTerm", inf_term(a.lambda)?.value.into()),
        ("S", s_rate(&x, a.lambda)?.into()),
    ];
    Ok(Rendered::data(single_row(fields, format)))
}

fn degeneracy(ess: f64, flagged: bool) -> Option<String> {
    flagged.then(|| format!("importance weights degenerate: ESS {ess:.1} < {}", mc::ESS_WARNING))
}

fn sample(a: &SampleArgs, seed: u64, format: Format) -> Result<Rendered> {
    let spec = SelectionSpec::new(a.lambda, a.theta)?;
    if let Some(bins) = a.hist_bins {
        let h = homozygosity_histogram(&spec, a.samples, bins, seed)?;
        let body = match format {
            Format::Csv => {
                let mut t = Table::new(vec!["bin_lo", "bin_hi", "mass"]);
                for b in &h.bins {
                    t.push(cells([b.lo.into(), b.hi.into(), b.mass.into()]));
                }
                t.csv()
            }
            Format::Json => pretty(&json!({
                "bins": h.bins.iter().map(|b| json!({"bin_lo": jnum(b.lo), "bin_hi": jnum(b.hi), "mass": jnum(b.mass)})).collect::<Vec<_>>(),
                "ess": jnum(h.effective_sample_size),
                "n": h.n_samples,
            })),
        };
        return Ok(Rendered { body, degenerate: degeneracy(h.effective_sample_size, h.degenerate), failed_checks: 0 });
    }
    let est = match &a.ball {
        Some(v) => {
            let [k, delta] = v[..] else {
                return Err(PdovError::Domain(format!("--ball expects K,DELTA, got {} values", v.len())));
            };
            if k < 1.0 || k.fract() != 0.0 {
                return Err(PdovError::Domain(format!("--ball K must be a positive integer, got {k}")));
            }
            ball_probability(&spec, k as usize, delta, a.samples, seed)?
        }
        None => tilted_estimate(&spec, phi2, a.samples, seed)?,
    };
    let fields = vec![
        ("estimate", est.value.into()),
        ("se", est.std_error.into()),
        ("ess", est.effective_sample_size.into()),
        ("n", est.n_samples.into()),
    ];
    Ok(Rendered {
        body: single_row(fields, format),
        degenerate: degeneracy(est.effective_sample_size, est.degenerate),
        failed_checks: 0,
    })
}

fn verify_cmd(a: &VerifyArgs, seed: u64, format: Format) -> Result<Rendered> {
    let config = VerifyConfig { seed, mc_samples: a.mc_samples, inclusion_samples: a.inclusion_samples };
    let reports = verify::run(a.suite, &config)?;
    let failed = reports.iter().flat_map(|r| &r.checks).filter(|c| !c.passed).count();
    let body = match format {
        Format::Csv => {
            let mut t = Table::new(vec!["suite", "check", "evaluated", "violations", "worst_margin", "passed", "statement"]);
            for r in &reports {
                for c in &r.checks {
                    t.push(cells([
                        r.suite.name().into(),
                        c.name.as_str().into(),
                        c.evaluated.into(),
                        c.violations.into(),
                        c.worst_margin.into(),
                        c.passed.into(),
                        format!("\"{}\"", c.statement.replace('"', "\"\"")).as_str().into(),
                    ]));
                }
            }
            t.csv()
        }
        Format::Json => pretty(&Value::Array(
            reports
                .iter()
                .map(|r| {
                    json!({
                        "suite": r.suite.name(),
                        "subject": r.subject,
                        "passed": r.passed,
                        "checks": r.checks.iter().map(|c| json!({
                            "name": c.name,
                            "statement": c.statement,
                            "evaluated": c.evaluated,
                            "violations": c.violations,
                            "worst_margin": jnum(c.worst_margin),
                            "passed": c.passed,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )),
    };
    Ok(Rendered { body, degenerate: None, failed_checks: failed })
}
