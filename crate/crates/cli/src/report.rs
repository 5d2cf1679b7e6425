use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use smoothdist_core::{
    build_group, build_prime_table, central_half_width, central_segment, contour_psi_auto,
    default_distance_threshold, flag_problem_characters_with_threshold, ht_estimate,
    psi_progression_exact, Character, CharacterGroup, Complex64, ContourValue, Error,
    MellinEvaluator, PrimeTable, ProblemSet, Result, SaddleData, SmoothCounts, SmoothWeight,
};

use crate::config::{OutputFormat, RunConfig};
use crate::format::{csv_quote, format_f64};

/// Absolute tolerance for rebuilding per-residue counts from character sums.
const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Relative tolerance for the normalized-count total against phi(q).
const DEVIATION_SUM_TOL: f64 = 1e-9;
/// Random (chi, m, n) probes of complete multiplicativity per run.
const MULT_SAMPLES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Psi,
    Saddle,
    Spectrum,
    Equidist,
    Subgroup,
    Contour,
}

impl Command {
    fn needs_counts(self) -> bool {
        matches!(self, Command::Psi | Command::Spectrum | Command::Equidist | Command::Subgroup)
    }

    fn needs_saddle(self) -> bool {
        matches!(self, Command::Saddle | Command::Equidist | Command::Contour)
    }

    fn needs_contour(self) -> bool {
        matches!(self, Command::Equidist | Command::Contour)
    }

    fn needs_spectrum(self) -> bool {
        matches!(self, Command::Spectrum | Command::Equidist)
    }

    fn needs_problem_set(self) -> bool {
        matches!(self, Command::Equidist | Command::Subgroup)
    }
}

#[derive(Debug)]
pub struct Report {
    pub json: Value,
    /// Present exactly when the configured format is csv.
    pub csv: Option<String>,
}

/// Runs one subcommand end to end: exact counts where the command calls for
/// them, saddle-point and contour estimates where it does not, and the
/// internal consistency checks that gate emission.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let table = build_prime_table(cfg.y.ceil() as u64 + 1)?;
    let group = build_group(cfg.q)?;
    let weight = SmoothWeight::new(cfg.side.into(), cfg.epsilon)?;

    let counts = if cmd.needs_counts() {
        Some(psi_progression_exact(cfg.x, cfg.y, cfg.q, &table)?)
    } else {
        None
    };
    let sums = counts.as_ref().map(|c| character_sums(&group, c));

    // Both checks abort the run before anything is emitted: a failure here is
    // a pipeline bug, not bad input.
    let recon_error = match (&counts, &sums) {
        (Some(c), Some(s)) => Some(reconstruction_error(&group, c, s)?),
        _ => None,
    };
    let deviation_total = counts
        .as_ref()
        .map(|c| deviation_sum(c).map(|t| (t, c.per_residue.len() as f64)))
        .transpose()?;
    let mult_samples = multiplicativity_probe(&group, cfg.seed)?;

    let saddle = if cmd.needs_saddle() || cmd.needs_problem_set() {
        Some(SaddleData::compute(cfg.x, cfg.y, cfg.q, &table)?)
    } else {
        None
    };

    let saddle_value = if cmd.needs_saddle() {
        let sd = saddle.as_ref().expect("saddle data computed for saddle-bearing commands");
        let residual = saddle_residual(sd, &table)?;
        let ht = ht_estimate(cfg.x, cfg.y, &weight, cfg.q, &table)?;
        if !ht.is_finite() {
            return Err(Error::capacity(format!(
                "saddle estimate overflows f64 at x = {}, y = {}",
                cfg.x, cfg.y
            )));
        }
        let contour = if cmd.needs_contour() {
            Some(contour_block(cfg, sd, &group, weight, &table)?)
        } else {
            None
        };
        saddle_section(sd, residual, ht, contour)?
    } else {
        Value::Null
    };

    let counts_value = match &counts {
        Some(c) => counts_section(c)?,
        None => Value::Null,
    };

    let spectrum_value = if cmd.needs_spectrum() {
        let c = counts.as_ref().expect("spectrum commands carry counts");
        let s = sums.as_ref().expect("spectrum commands carry character sums");
        spectrum_section(s, c.psi_q)?
    } else {
        Value::Null
    };

    let problem_set = if cmd.needs_problem_set() {
        let sd = saddle.as_ref().expect("problem-set commands compute saddle data");
        let threshold = default_distance_threshold(sd.u, cfg.b_order) * cfg.threshold_scale;
        Some(flag_problem_characters_with_threshold(
            &group,
            sd.alpha,
            cfg.y,
            cfg.b_order,
            threshold,
            &table,
        )?)
    } else {
        None
    };
    let problem_set_value = match (&problem_set, &saddle, &counts) {
        (Some(ps), Some(sd), Some(c)) => problem_set_section(ps, sd, cfg, c)?,
        _ => Value::Null,
    };

    let checks_value = checks_section(cfg, recon_error, deviation_total, mult_samples)?;

    let json = obj(vec![
        ("config", config_section(cfg)?),
        ("saddle", saddle_value),
        ("counts", counts_value),
        ("spectrum", spectrum_value),
        ("problem_set", problem_set_value),
        ("checks", checks_value),
    ]);

    let csv = if cfg.format == OutputFormat::Csv {
        Some(csv_output(cmd, &counts, &sums, &problem_set)?)
    } else {
        None
    };

    Ok(Report { json, csv })
}

/// psi(x, y; chi) for every character, regrouped over residue classes as
/// sum over a of chi(a) * count(a); counts below 2^53 keep this exact.
fn character_sums(group: &CharacterGroup, counts: &SmoothCounts) -> Vec<(Character, Complex64)> {
    group
        .characters()
        .into_iter()
        .map(|chi| {
            let s = counts
                .per_residue
                .iter()
                .map(|(&a, &c)| chi.eval(a) * c as f64)
                .sum();
            (chi, s)
        })
        .collect()
}

/// Rebuilds every per-residue count from the character sums and returns the
/// worst absolute error.
fn reconstruction_error(
    group: &CharacterGroup,
    counts: &SmoothCounts,
    sums: &[(Character, Complex64)],
) -> Result<f64> {
    let phi = group.phi() as f64;
    let mut worst = 0.0f64;
    for (&a, &c) in &counts.per_residue {
        let mut acc = Complex64::new(0.0, 0.0);
        for (chi, s) in sums {
            acc += chi.eval(a).conj() * s;
        }
        let err = (acc / phi - Complex64::new(c as f64, 0.0)).norm();
        worst = worst.max(err);
    }
    if worst > RECONSTRUCTION_TOL {
        return Err(Error::internal(format!(
            "reconstruction error {worst:.3e} exceeds {RECONSTRUCTION_TOL:.0e} at q = {}",
            counts.q
        )));
    }
    Ok(worst)
}

/// Sum of normalized counts over the reduced residues; must equal phi(q).
fn deviation_sum(counts: &SmoothCounts) -> Result<f64> {
    let phi = counts.per_residue.len() as f64;
    let total: f64 = counts.deviations().iter().map(|&(_, d)| d + 1.0).sum();
    if (total - phi).abs() > DEVIATION_SUM_TOL * phi {
        return Err(Error::internal(format!(
            "normalized counts sum to {total}, expected phi = {phi}"
        )));
    }
    Ok(total)
}

fn multiplicativity_probe(group: &CharacterGroup, seed: u64) -> Result<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chars = group.characters();
    let hi = 10 * group.modulus().max(2);
    for _ in 0..MULT_SAMPLES {
        let chi = &chars[rng.gen_range(0..chars.len())];
        let m = rng.gen_range(1..=hi);
        let n = rng.gen_range(1..=hi);
        let gap = (chi.eval(m * n) - chi.eval(m) * chi.eval(n)).norm();
        if gap > 1e-12 {
            return Err(Error::internal(format!(
                "character multiplicativity off by {gap:.3e} at ({m}, {n}) mod {}",
                group.modulus()
            )));
        }
    }
    Ok(MULT_SAMPLES)
}

/// Residual of the saddle equation at the solved alpha.
fn saddle_residual(sd: &SaddleData, table: &PrimeTable) -> Result<f64> {
    let mut sum = 0.0;
    for &p in table.primes_upto(sd.y)? {
        let pf = p as f64;
        sum += pf.ln() / (pf.powf(sd.alpha) - 1.0);
    }
    Ok(sum - sd.x.ln())
}

struct ContourBlock {
    auto: ContourValue,
    u_param: f64,
    half_width: f64,
    central: Complex64,
    central_error: f64,
}

fn contour_block(
    cfg: &RunConfig,
    sd: &SaddleData,
    group: &CharacterGroup,
    weight: SmoothWeight,
    table: &PrimeTable,
) -> Result<ContourBlock> {
    let ev = MellinEvaluator::new(weight);
    let chi0 = group.principal();
    let auto = contour_psi_auto(cfg.x, cfg.y, &chi0, &ev, table)?;
    // An explicit U is honored as given so out-of-range requests fail loudly;
    // the default is clamped into [1, sqrt(u)].
    let u_param = match cfg.u_central {
        Some(v) => v,
        None => (1.0 / cfg.epsilon.sqrt()).min(sd.u.sqrt()),
    };
    let (central, central_error) = central_segment(cfg.x, cfg.y, &chi0, &ev, u_param, table)?;
    let half_width = central_half_width(cfg.x, cfg.y, u_param);
    Ok(ContourBlock { auto, u_param, half_width, central, central_error })
}

fn obj(entries: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

fn num(v: f64) -> Result<Value> {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .ok_or_else(|| Error::internal(format!("non-finite value {v} in report")))
}

fn complex(v: Complex64) -> Result<Value> {
    Ok(obj(vec![("re", num(v.re)?), ("im", num(v.im)?)]))
}

fn config_section(cfg: &RunConfig) -> Result<Value> {
    Ok(obj(vec![
        ("x", num(cfg.x)?),
        ("y", num(cfg.y)?),
        ("q", Value::from(cfg.q)),
        ("epsilon", num(cfg.epsilon)?),
        ("side", Value::from(cfg.side.as_str())),
        ("B", Value::from(cfg.b_order)),
        ("threshold_scale", num(cfg.threshold_scale)?),
        ("U", num(cfg.u_requested())?),
        ("format", Value::from(cfg.format.as_str())),
        ("seed", Value::from(cfg.seed)),
    ]))
}

fn counts_section(counts: &SmoothCounts) -> Result<Value> {
    let phi = counts.per_residue.len() as u64;
    let mut rows = Vec::with_capacity(counts.per_residue.len());
    for (&a, &c) in &counts.per_residue {
        let normalized = c as f64 * phi as f64 / counts.psi_q as f64;
        rows.push(obj(vec![
            ("residue", Value::from(a)),
            ("count", Value::from(c)),
            ("normalized", num(normalized)?),
            ("deviation", num(normalized - 1.0)?),
        ]));
    }
    Ok(obj(vec![
        ("psi_q", Value::from(counts.psi_q)),
        ("phi_q", Value::from(phi)),
        ("discrepancy", num(counts.discrepancy())?),
        ("per_residue", Value::Array(rows)),
    ]))
}

/// Spectrum rows: principal first, then descending ratio, ties by id.
fn spectrum_rows(sums: &[(Character, Complex64)], psi_q: u64) -> Vec<(String, u64, f64)> {
    let mut rows: Vec<(bool, String, u64, f64)> = sums
        .iter()
        .map(|(chi, s)| (chi.is_principal(), chi.id(), chi.order(), s.norm() / psi_q as f64))
        .collect();
    rows.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.3.partial_cmp(&a.3).unwrap_or(std::cmp::Ordering::Equal))
            .then(a.1.cmp(&b.1))
    });
    rows.into_iter().map(|(_, id, order, ratio)| (id, order, ratio)).collect()
}

fn spectrum_section(sums: &[(Character, Complex64)], psi_q: u64) -> Result<Value> {
    let mut rows = Vec::new();
    for (id, order, ratio) in spectrum_rows(sums, psi_q) {
        rows.push(obj(vec![
            ("char_id", Value::from(id)),
            ("order", Value::from(order)),
            ("ratio", num(ratio)?),
        ]));
    }
    Ok(Value::Array(rows))
}

fn saddle_section(
    sd: &SaddleData,
    residual: f64,
    ht: f64,
    contour: Option<ContourBlock>,
) -> Result<Value> {
    let contour_value = match contour {
        Some(cb) => obj(vec![
            ("t_max", num(cb.auto.t_max)?),
            ("value", complex(cb.auto.value)?),
            ("quad_error", num(cb.auto.quad_error)?),
            ("tail_bound", num(cb.auto.tail_bound)?),
            (
                "central",
                obj(vec![
                    ("u_param", num(cb.u_param)?),
                    ("half_width", num(cb.half_width)?),
                    ("value", complex(cb.central)?),
                    ("quad_error", num(cb.central_error)?),
                ]),
            ),
        ]),
        None => Value::Null,
    };
    Ok(obj(vec![
        ("u", num(sd.u)?),
        ("alpha", num(sd.alpha)?),
        ("xi", num(sd.xi)?),
        ("phi2", num(sd.phi2)?),
        ("log_l", num(sd.log_l)?),
        ("residual", num(residual)?),
        ("ht_estimate", num(ht)?),
        ("contour", contour_value),
    ]))
}

fn problem_set_section(
    ps: &ProblemSet,
    sd: &SaddleData,
    cfg: &RunConfig,
    counts: &SmoothCounts,
) -> Result<Value> {
    let t_max = (ps.q as f64).sqrt() / (2 * ps.b_order) as f64;
    let grid_step = 1.0 / (4.0 * cfg.y.ln() * ps.b_order as f64);

    let mut flagged = Vec::new();
    for f in &ps.flagged {
        flagged.push(obj(vec![
            ("char_id", Value::from(f.character.id())),
            ("order", Value::from(f.order)),
            ("t_min", num(f.t_min)?),
            ("d2_min", num(f.d2_min)?),
        ]));
    }

    let mut cosets = Vec::new();
    for coset in &ps.cosets {
        let member_counts: Vec<(u64, u64)> = coset
            .members
            .iter()
            .map(|&r| {
                counts
                    .per_residue
                    .get(&r)
                    .map(|&c| (r, c))
                    .ok_or_else(|| Error::internal(format!("coset member {r} has no count")))
            })
            .collect::<Result<_>>()?;
        let mean = member_counts.iter().map(|&(_, c)| c as f64).sum::<f64>()
            / member_counts.len() as f64;
        let mut members = Vec::new();
        let mut max_dev = 0.0f64;
        for (r, c) in member_counts {
            let dev = c as f64 - mean;
            max_dev = max_dev.max(dev.abs());
            members.push(obj(vec![
                ("residue", Value::from(r)),
                ("count", Value::from(c)),
                ("deviation", num(dev)?),
            ]));
        }
        cosets.push(obj(vec![
            ("rep", Value::from(coset.rep)),
            ("mean_count", num(mean)?),
            ("max_abs_deviation", num(max_dev)?),
            ("members", Value::Array(members)),
        ]));
    }

    Ok(obj(vec![
        ("q", Value::from(ps.q)),
        ("B", Value::from(ps.b_order)),
        ("alpha", num(sd.alpha)?),
        ("u", num(sd.u)?),
        ("threshold", num(ps.threshold)?),
        ("t_max", num(t_max)?),
        ("grid_step", num(grid_step)?),
        ("criterion", Value::from("distance surrogate")),
        ("flagged", Value::Array(flagged)),
        ("h", Value::Array(ps.h.iter().map(|&r| Value::from(r)).collect())),
        ("index", Value::from(ps.index)),
        ("cosets", Value::Array(cosets)),
    ]))
}

fn checks_section(
    cfg: &RunConfig,
    recon_error: Option<f64>,
    deviation_total: Option<(f64, f64)>,
    mult_samples: u64,
) -> Result<Value> {
    let reconstruction = match recon_error {
        Some(e) => obj(vec![
            ("passed", Value::Bool(true)),
            ("max_abs_error", num(e)?),
            ("tolerance", num(RECONSTRUCTION_TOL)?),
        ]),
        None => Value::Null,
    };
    let deviation = match deviation_total {
        Some((total, phi)) => obj(vec![
            ("passed", Value::Bool(true)),
            ("value", num(total)?),
            ("target", num(phi)?),
        ]),
        None => Value::Null,
    };
    let multiplicativity = obj(vec![
        ("passed", Value::Bool(true)),
        ("samples", Value::from(mult_samples)),
    ]);

    let ln_y = cfg.y.ln();
    let x_lower_ok = cfg.x.ln() >= ln_y.ln().powi(4) * ln_y;
    let x_upper_ok = cfg.x.ln() <= cfg.y.powf(1.0 - cfg.epsilon);
    let q_sqrt_y_ok = (cfg.q as f64) <= cfg.y.sqrt();
    let q_power_ok = (cfg.q as f64) <= cfg.y.powf(4.0 * std::f64::consts::E.sqrt() - cfg.epsilon);
    let range = obj(vec![
        ("x_lower_ok", Value::Bool(x_lower_ok)),
        ("x_upper_ok", Value::Bool(x_upper_ok)),
        ("q_sqrt_y_ok", Value::Bool(q_sqrt_y_ok)),
        ("q_power_ok", Value::Bool(q_power_ok)),
        (
            "inside_proven_range",
            Value::Bool(x_lower_ok && x_upper_ok && q_sqrt_y_ok && q_power_ok),
        ),
    ]);

    Ok(obj(vec![
        ("reconstruction", reconstruction),
        ("deviation_sum", deviation),
        ("multiplicativity", multiplicativity),
        ("range", range),
    ]))
}

fn csv_output(
    cmd: Command,
    counts: &Option<SmoothCounts>,
    sums: &Option<Vec<(Character, Complex64)>>,
    problem_set: &Option<ProblemSet>,
) -> Result<String> {
    match cmd {
        Command::Psi | Command::Equidist => {
            let c = counts.as_ref().expect("counts present for psi and equidist");
            let mut out = String::from("residue,count,normalized,deviation\n");
            let phi = c.per_residue.len() as f64;
            for (&a, &n) in &c.per_residue {
                let normalized = n as f64 * phi / c.psi_q as f64;
                let _ = writeln!(
                    out,
                    "{a},{n},{},{}",
                    format_f64(normalized),
                    format_f64(normalized - 1.0)
                );
            }
            Ok(out)
        }
        Command::Spectrum => {
            let c = counts.as_ref().expect("counts present for spectrum");
            let s = sums.as_ref().expect("sums present for spectrum");
            let mut out = String::from("char_id,order,ratio\n");
            for (id, order, ratio) in spectrum_rows(s, c.psi_q) {
                let _ = writeln!(out, "{},{order},{}", csv_quote(&id), format_f64(ratio));
            }
            Ok(out)
        }
        Command::Subgroup => {
            let c = counts.as_ref().expect("counts present for subgroup");
            let ps = problem_set.as_ref().expect("problem set present for subgroup");
            let mut out = String::from("coset_rep,residue,count,deviation_from_coset_mean\n");
            for coset in &ps.cosets {
                let mean = coset
                    .members
                    .iter()
                    .map(|r| c.per_residue.get(r).copied().unwrap_or(0) as f64)
                    .sum::<f64>()
                    / coset.members.len() as f64;
                for &r in &coset.members {
                    let n = c.per_residue.get(&r).copied().unwrap_or(0);
                    let _ = writeln!(
                        out,
                        "{},{r},{n},{}",
                        coset.rep,
                        format_f64(n as f64 - mean)
                    );
                }
            }
            Ok(out)
        }
        Command::Saddle | Command::Contour => Err(Error::domain(
            "csv schemas exist for psi, spectrum, equidist, and subgroup reports only; use json",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Side;
    use crate::format::write_json;

    fn cfg(x: f64, y: f64, q: u64) -> RunConfig {
        RunConfig {
            x,
            y,
            q,
            epsilon: 0.05,
            side: Side::Lower,
            b_order: 10,
            threshold_scale: 1.0,
            u_central: None,
            format: OutputFormat::Json,
            seed: 0,
        }
    }

    #[test]
    fn psi_report_counts_powers_of_two() {
        let report = run(Command::Psi, &cfg(1e4, 2.0, 7)).unwrap();
        let counts = &report.json["counts"];
        // 1, 2, 4, ..., 8192: fourteen powers of two up to 10^4
        assert_eq!(counts["psi_q"], Value::from(14u64));
        assert_eq!(counts["phi_q"], Value::from(6u64));
        let rows = counts["per_residue"].as_array().unwrap();
        let by_residue: std::collections::BTreeMap<u64, u64> = rows
            .iter()
            .map(|r| (r["residue"].as_u64().unwrap(), r["count"].as_u64().unwrap()))
            .collect();
        assert_eq!(by_residue[&3], 0);
        assert_eq!(by_residue[&5], 0);
        assert_eq!(by_residue[&6], 0);
        assert_eq!(by_residue[&1] + by_residue[&2] + by_residue[&4], 14);
        assert_eq!(report.json["saddle"], Value::Null);
        assert_eq!(report.json["spectrum"], Value::Null);
        assert_eq!(report.json["problem_set"], Value::Null);
    }

    #[test]
    fn top_level_keys_are_pinned() {
        let report = run(Command::Psi, &cfg(100.0, 10.0, 4)).unwrap();
        let keys: Vec<&str> =
            report.json.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["config", "saddle", "counts", "spectrum", "problem_set", "checks"]);
    }

    #[test]
    fn spectrum_leads_with_principal_at_one() {
        let report = run(Command::Spectrum, &cfg(1e4, 2.0, 7)).unwrap();
        let rows = report.json["spectrum"].as_array().unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0]["char_id"], Value::from("0"));
        assert_eq!(rows[0]["ratio"].as_f64().unwrap(), 1.0);
        // every 2-smooth number lands in the squares mod 7, so the quadratic
        // character also sums with ratio exactly 1
        let quadratic = rows.iter().find(|r| r["order"] == Value::from(2u64)).unwrap();
        assert_eq!(quadratic["ratio"].as_f64().unwrap(), 1.0);
        for row in rows {
            assert!(row["ratio"].as_f64().unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn subgroup_report_splits_quadratic_residues() {
        let mut c = cfg(1048576.0, 2.0, 7);
        c.b_order = 2;
        let report = run(Command::Subgroup, &c).unwrap();
        let ps = &report.json["problem_set"];
        let h: Vec<u64> =
            ps["h"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        assert_eq!(h, [1, 2, 4]);
        assert_eq!(ps["index"], Value::from(2u64));
        assert_eq!(ps["criterion"], Value::from("distance surrogate"));
        let cosets = ps["cosets"].as_array().unwrap();
        assert_eq!(cosets.len(), 2);
        assert_eq!(cosets[0]["rep"], Value::from(1u64));
        assert_eq!(cosets[1]["rep"], Value::from(3u64));
        // 21 powers of two split 7/7/7 across {1,2,4}; the other coset is empty
        assert_eq!(cosets[0]["mean_count"].as_f64().unwrap(), 7.0);
        assert_eq!(cosets[1]["mean_count"].as_f64().unwrap(), 0.0);
        assert_eq!(report.json["saddle"], Value::Null);
    }

    #[test]
    fn saddle_report_has_small_residual() {
        let report = run(Command::Saddle, &cfg(1e6, 100.0, 1)).unwrap();
        let sd = &report.json["saddle"];
        let residual = sd["residual"].as_f64().unwrap();
        assert!(residual.abs() <= 1e-9 * 1e6f64.ln());
        assert!(sd["ht_estimate"].as_f64().unwrap() > 0.0);
        assert_eq!(sd["contour"], Value::Null);
        assert_eq!(report.json["counts"], Value::Null);
    }

    #[test]
    fn saddle_requires_u_above_one() {
        let err = run(Command::Saddle, &cfg(50.0, 100.0, 1)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn csv_for_saddle_is_rejected() {
        let mut c = cfg(1e4, 30.0, 7);
        c.format = OutputFormat::Csv;
        assert!(matches!(run(Command::Saddle, &c), Err(Error::Domain(_))));
        assert!(matches!(run(Command::Contour, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn equidist_csv_matches_schema() {
        let mut c = cfg(1000.0, 10.0, 5);
        c.format = OutputFormat::Csv;
        let report = run(Command::Psi, &c).unwrap();
        let csv = report.csv.unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "residue,count,normalized,deviation");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn report_json_round_trips() {
        let report = run(Command::Spectrum, &cfg(1e4, 30.0, 7)).unwrap();
        let text = write_json(&report.json);
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(write_json(&parsed), text);
    }

    #[test]
    fn seed_shifts_only_the_config_echo() {
        let mut a = cfg(1000.0, 10.0, 5);
        let mut b = cfg(1000.0, 10.0, 5);
        a.seed = 7;
        b.seed = 9;
        let ra = write_json(&run(Command::Psi, &a).unwrap().json);
        let rb = write_json(&run(Command::Psi, &b).unwrap().json);
        assert_eq!(ra.replace("\"seed\": 7", "\"seed\": 9"), rb);
    }
}
