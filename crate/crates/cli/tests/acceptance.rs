//! Acceptance battery: one line per criterion, nonzero exit if any fails.

use compdiv_cli::verify::*;
use compdiv_core::circuits::{bell_projector, build_effect_family, BudgetPolynomial, BuildOptions, EffectFamily, GateSet};
use std::process::Command;
use std::time::Instant;

const SEED: u64 = 20_240_601;

fn family(n: usize, preset: &str, budget: i64, n_anc: usize, post: bool) -> EffectFamily {
    let o = BuildOptions { n_anc, postprocessing: post, ..Default::default() };
    build_effect_family(n, &GateSet::preset(preset).unwrap(), &BudgetPolynomial::constant(budget), &o).unwrap()
}

fn with_bell(f: EffectFamily, n: usize) -> EffectFamily {
    f.with_extra(vec![bell_projector(n)], 1_000_000).unwrap()
}

fn one_qubit_families() -> Vec<EffectFamily> {
    vec![family(1, "HTCNOT", 0, 1, false), family(1, "HTCNOT", 2, 1, true), family(1, "CLIFFORDT", 3, 1, false)]
}

fn two_qubit_families() -> Vec<EffectFamily> {
    vec![family(2, "HTCNOT", 0, 0, true), family(2, "HTCNOT", 2, 1, false), family(2, "HCNOT", 3, 0, true)]
}

struct Outcome {
    ok: bool,
    summary: String,
}

fn from_rows(rows: &[CheckRow], extra: bool, note: String) -> Outcome {
    let ok = extra && rows.iter().all(|r| r.status == CheckStatus::Pass);
    let parts: Vec<String> = rows
        .iter()
        .map(|r| format!("{}: {} cases, {} violations, min slack {:.3e}", r.name, r.cases, r.violations, r.min_slack))
        .collect();
    let mut summary = parts.join(" | ");
    if !note.is_empty() {
        summary = format!("{summary} | {note}");
    }
    if !ok {
        let details: Vec<&str> = rows.iter().map(|r| r.detail.as_str()).collect();
        summary = format!("{summary} | {}", details.join(" | "));
    }
    Outcome { ok, summary }
}

fn max_divergence_equivalence() -> Outcome {
    let mut fams = one_qubit_families();
    fams.extend(two_qubit_families());
    let row = check_max_equivalence(&fams, 200, SEED, 1e-9);
    let planted_inf = row.detail.split(", ").nth(1).and_then(|s| s.split(' ').next()).and_then(|s| s.parse::<usize>().ok());
    let enough = row.cases >= 200 * 6 && planted_inf.is_some_and(|k| k > 0);
    from_rows(std::slice::from_ref(&row), enough, row.detail.clone())
}

fn bell_entanglement_value() -> Outcome {
    let cases = vec![
        (1, with_bell(family(2, "HTCNOT", 2, 1, true), 1)),
        (2, with_bell(family(4, "HTCNOT", 0, 0, true), 2)),
    ];
    let row = check_bell_resource(&cases, 30, SEED, 1e-6);
    let d = row.detail.clone();
    from_rows(&[row], true, d)
}

fn pinsker_and_fvdg() -> Outcome {
    let fams = vec![family(1, "HTCNOT", 2, 1, true), family(1, "CLIFFORDT", 3, 1, false), family(2, "HTCNOT", 0, 0, true)];
    let p = check_pinsker(&fams, 170, SEED, 1e-12);
    let f = check_fuchs_van_de_graaf(&fams, 170, SEED, 1e-12);
    let enough = p.cases >= 500 * 3 && f.cases >= 500 * 2;
    from_rows(&[p, f], enough, String::new())
}

fn additivity() -> Outcome {
    let f = family(1, "HTCNOT", 2, 1, true);
    let comp = product_family(&f).unwrap();
    let sup = check_super_additivity(&f, &comp, 100, SEED, 1e-12);
    let iid = check_iid_lower_bound(&f, 30, 3, SEED, 1e-12);
    let gs = GateSet::preset("HTCNOT").unwrap();
    let sub = SubAdditivity::new(gs, BudgetPolynomial::new(vec![0, -1, 1]).eval(2)).unwrap().check(50, 2, SEED, 1e-12);
    let finite = sub.detail.rsplit(", ").next().and_then(|s| s.split(' ').next()).and_then(|s| s.parse::<usize>().ok());
    let enough = sup.cases >= 100 && sub.cases >= 50 && finite.is_some_and(|k| k >= 10);
    let note = format!("sub-additivity: {}", sub.detail);
    from_rows(&[sup, iid, sub], enough, note)
}

fn bernstein() -> Outcome {
    let f = family(1, "HTCNOT", 2, 1, true);
    let hulls = random_hull_elements(&f, 6, SEED);
    let row = check_bernstein(&f, &hulls, &[0.5, 0.25], 200, SEED);
    let d = row.detail.clone();
    from_rows(&[row], hulls.len() >= 5, d)
}

fn stein_converse() -> Outcome {
    let bases = vec![
        (family(1, "HTCNOT", 0, 0, true), 4),
        (family(1, "HTCNOT", 1, 1, false), 4),
        (family(2, "HTCNOT", 0, 0, true), 2),
    ];
    let conv = check_stein_converse(&bases, 10, &[0.0, 0.1, 0.3], SEED, 1e-12);
    let exact = check_bell_stein(&with_bell(family(2, "HTCNOT", 0, 0, false), 1), 3, 0.0);
    let d = conv.detail.clone();
    from_rows(&[conv, exact], true, d)
}

fn beta_dh() -> Outcome {
    let mut fams = one_qubit_families();
    fams.push(family(2, "HTCNOT", 0, 0, true));
    let (row, scaled) = check_beta_dh(&fams, 60, SEED, 1e-9);
    from_rows(&[row], scaled >= 50, format!("{scaled} scaled-equality instances"))
}

fn continuity() -> Outcome {
    let f = with_bell(family(2, "HTCNOT", 2, 1, true), 1);
    let row = check_continuity_bound(&f, 120, 30, SEED, 1e-12);
    let d = row.detail.clone();
    let range: Vec<f64> = d
        .rsplit('[')
        .next()
        .unwrap_or("")
        .trim_end_matches(']')
        .split(", ")
        .filter_map(|x| x.parse().ok())
        .collect();
    let in_range = range.len() == 2 && range[0] >= 1e-4 && range[1] <= 0.3;
    from_rows(std::slice::from_ref(&row), row.cases >= 100 && in_range, d)
}

fn separation() -> Outcome {
    let sh = shallow_family(&GateSet::preset("HTCNOT").unwrap()).unwrap();
    let row = check_separation(&sh, 25, SEED, 1e-9);
    from_rows(&[row], true, String::new())
}

fn verify_body(seed: u64) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_compdiv"))
        .args(["--seed", &seed.to_string(), "verify"])
        .env_remove("COMPDIV_CACHE")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("verify exited with {}", out.status));
    }
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    v.as_object_mut().ok_or("report is not an object")?.remove("timings_ms");
    serde_json::to_vec(&v).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    match (verify_body(SEED), verify_body(SEED)) {
        (Ok(a), Ok(b)) => Outcome { ok: a == b, summary: format!("two verify runs, {} byte bodies, identical: {}", a.len(), a == b) },
        (Err(e), _) | (_, Err(e)) => Outcome { ok: false, summary: e },
    }
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("max-divergence equivalence", max_divergence_equivalence),
        ("Bell entanglement value", bell_entanglement_value),
        ("computational Pinsker and Fuchs-van de Graaf", pinsker_and_fvdg),
        ("super-additivity, IID bound, sub-additivity", additivity),
        ("sampling approximation", bernstein),
        ("Stein converse", stein_converse),
        ("beta versus D_H", beta_dh),
        ("continuity bound", continuity),
        ("separation construction", separation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.ok);
        let tag = if o.ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name} ({:.1}s): {}", i + 1, t.elapsed().as_secs_f64(), o.summary);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
