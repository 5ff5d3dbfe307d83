use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use latangle_core::cells::{enumerate_cells, KVector};
use latangle_core::circle::{angles, consecutive_split_primes, m2plus1_primes, random_split_radius, AngleSet, FactoredRadius};
use latangle_core::family::{corr_family_average_with, lsd_compare_with, local_product, Family, FamilySpec, PrimeTable};
use latangle_core::gaussian::{check_repulsion, split_prime, PrecisionContext};
use latangle_core::kernels::{correlation_direct, correlation_distinct, correlation_fourier, SmoothingKernel};
use latangle_core::random_model::{
    expected_lambda_product_f64, expected_r2_star, expected_r_r, mc_correlation, mc_lambda_product, MCReport,
    TupleSum,
};
use latangle_core::spacing::{
    gaps, histogram, ks_exponential, scale_report, star_discrepancy, GapMode,
};

use crate::config::*;
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, OutputDir};

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let ctx = PrecisionContext::new(cfg.precision_bits);
    match &cfg.command {
        Command::GenCircle(a) => gen_circle(a, cfg.seed, ctx, out),
        Command::Spacing(a) => spacing(a, cfg.seed, ctx, out),
        Command::Correlate(a) => correlate(a, cfg.seed, ctx, out),
        Command::RandomModel(a) => random_model(a, cfg.seed, out),
        Command::Family(a) => family(a, out),
        Command::Cells(a) => cells(a, out),
        Command::Repulsion(a) => repulsion(a, ctx, out),
    }
}

fn parse_prime_power(s: &str) -> CliResult<(u64, u32)> {
    let bad = || CliError::Usage(format!("cannot parse prime power {s:?}"));
    match s.trim().split_once('^') {
        Some((p, e)) => Ok((p.trim().parse().map_err(|_| bad())?, e.trim().parse().map_err(|_| bad())?)),
        None => Ok((s.trim().parse().map_err(|_| bad())?, 1)),
    }
}

pub fn resolve_radius(a: &RadiusArgs, seed: u64) -> CliResult<FactoredRadius> {
    let sources = [
        !a.primes.is_empty(),
        a.random_split.is_some(),
        a.m2plus1_primes.is_some(),
        a.consecutive_split.is_some(),
        a.n.is_some(),
    ];
    match sources.iter().filter(|&&b| b).count() {
        1 => {}
        0 => return Err(CliError::Usage("give one of --primes, --random-split, --m2plus1-primes, --consecutive-split, --n".into())),
        _ => return Err(CliError::Usage("radius sources are mutually exclusive".into())),
    }
    if !a.primes.is_empty() {
        let mut split = Vec::new();
        for s in &a.primes {
            let (p, e) = parse_prime_power(s)?;
            split.push((split_prime(p)?, e));
        }
        return Ok(FactoredRadius::new(0, Vec::new(), split)?);
    }
    if let Some(m) = a.random_split {
        return Ok(random_split_radius(m, a.max_prime, seed)?);
    }
    if let Some(k) = a.m2plus1_primes {
        return Ok(FactoredRadius::from_split_primes(&m2plus1_primes(a.m2plus1_skip + k)[a.m2plus1_skip..])?);
    }
    if let Some(k) = a.consecutive_split {
        return Ok(FactoredRadius::from_split_primes(&consecutive_split_primes(a.start, k))?);
    }
    Ok(FactoredRadius::from_small(a.n.unwrap_or(1))?)
}

fn kernel_of(k: &KernelArgs, dim: usize) -> CliResult<SmoothingKernel> {
    Ok(match k.kernel {
        KernelFamily::Gaussian => SmoothingKernel::gaussian(dim, k.sigma)?,
        KernelFamily::Fejer => SmoothingKernel::fejer(dim, k.t_max)?,
    })
}

fn gen_circle(a: &GenCircleArgs, seed: u64, ctx: PrecisionContext, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let fr = resolve_radius(&a.radius, seed)?;
    let set = angles(&fr, ctx);
    let rows: Vec<Vec<String>> = set.angles.iter().map(|t| vec![format!("{t:.16e}")]).collect();
    out.write_csv("angles.csv", &["angle"], &rows)?;
    out.write_json("angles.json", &set)?;
    let mut win_rows = Vec::new();
    let mut counts = Vec::new();
    for &w in &a.widths {
        let (lo, hi) = (a.center - w / 2.0, a.center + w / 2.0);
        let inside: Vec<f64> = set.angles.iter().copied().filter(|&t| t >= lo && t <= hi).collect();
        counts.push(json!({"width": w, "count": inside.len()}));
        win_rows.extend(inside.iter().map(|t| vec![fmt_f64(w), format!("{t:.16e}")]));
    }
    out.write_csv("windows.csv", &["width", "angle"], &win_rows)?;
    if a.gnuplot {
        let mut gp = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nunset ytics\n");
        gp.push_str(&format!("set multiplot layout {},1\n", a.widths.len().max(1)));
        for &w in &a.widths {
            gp.push_str(&format!(
                "set xrange [{}:{}]\nplot 'windows.csv' using ($1=={}?$2:1/0):(0) with impulses notitle\n",
                a.center - w / 2.0,
                a.center + w / 2.0,
                fmt_f64(w)
            ));
        }
        gp.push_str("unset multiplot\n");
        out.write_text("windows.gp", &gp)?;
    }
    Ok(json!({"n": fr.n().to_string(), "N": set.N(), "windows": counts}))
}

fn load_angles(path: &str) -> CliResult<AngleSet> {
    let text = fs::read_to_string(path)?;
    if Path::new(path).extension().map_or(false, |e| e == "json") {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut vals = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "angle" {
            continue;
        }
        let field = line.split(',').last().unwrap_or(line);
        vals.push(field.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad angle {field:?}")))?);
    }
    Ok(AngleSet::from_unsorted(BigUint::from(0u32), vals))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn spacing(a: &SpacingArgs, seed: u64, ctx: PrecisionContext, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let radius_given = a.radius.is_given();
    let set = match (&a.angles, a.equally_spaced, radius_given) {
        (Some(p), None, false) => load_angles(p)?,
        (None, Some(n), false) => AngleSet::equally_spaced(n),
        (None, None, true) => angles(&resolve_radius(&a.radius, seed)?, ctx),
        _ => return Err(CliError::Usage("give exactly one of --angles, --equally-spaced or a radius".into())),
    };
    let g = gaps(&set, GapMode::Wrapped)?;
    let ks = ks_exponential(&g);
    let hist = histogram(&g, a.bins, 0.0, a.max_spacing);
    let rows: Vec<Vec<String>> = (0..a.bins)
        .map(|i| {
            vec![
                fmt_f64(hist.bin_edges[i]),
                fmt_f64(hist.bin_edges[i + 1]),
                fmt_f64(hist.masses[i]),
                fmt_f64(hist.reference[i]),
            ]
        })
        .collect();
    out.write_csv("histogram.csv", &["bin_lo", "bin_hi", "mass", "reference"], &rows)?;
    let n = set.N();
    let typical = if a.reference_samples > 0 && n.is_power_of_two() && n >= 2 {
        let m = n.trailing_zeros() as usize;
        let vals: CliResult<Vec<f64>> = (0..a.reference_samples as u64)
            .map(|i| {
                let fr = random_split_radius(m, a.radius.max_prime, seed.wrapping_add(1 + i))?;
                Ok(ks_exponential(&gaps(&angles(&fr, ctx), GapMode::Wrapped)?))
            })
            .collect();
        Some(median(vals?))
    } else {
        None
    };
    let atypical = typical.map(|t| ks > a.atypical_factor * t);
    let scales = scale_report(n);
    let report = json!({
        "N": n,
        "ks": ks,
        "typical_ks_median": typical,
        "atypical": atypical,
        "star_discrepancy": star_discrepancy(&set),
        "scales": scales,
        "scales_truncated": scales.truncated(),
    });
    out.write_json("report.json", &report)?;
    if a.gnuplot {
        let gp = "set datafile separator ','\nset datafile commentschars '#'\nset key top right\nset xlabel 's'\n\
                  plot 'histogram.csv' every ::1 using (($1+$2)/2):($3/($2-$1)) with boxes title 'spacings', \
                  exp(-x) with lines title 'e^{-s}'\n";
        out.write_text("spacing.gp", gp)?;
    }
    Ok(report)
}

fn correlate(a: &CorrelateArgs, seed: u64, ctx: PrecisionContext, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    if a.r < 2 {
        return Err(CliError::Usage("r must be at least 2".into()));
    }
    let fr = resolve_radius(&a.radius, seed)?;
    let set = angles(&fr, ctx);
    let kernel = kernel_of(&a.kernel, a.r - 1)?;
    let want = |m: CorrelationMethod| a.method == m || a.method == CorrelationMethod::All;
    let direct = if want(CorrelationMethod::Direct) { Some(correlation_direct(&set, &kernel, a.r)?) } else { None };
    let distinct = if want(CorrelationMethod::Distinct) { Some(correlation_distinct(&set, &kernel, a.r)?) } else { None };
    let k_cutoff = kernel.required_k_cutoff(set.N());
    let fourier = if want(CorrelationMethod::Fourier) { Some(correlation_fourier(&fr, &kernel, a.r, k_cutoff)?) } else { None };
    let report = json!({
        "n": fr.n().to_string(),
        "N": set.N(),
        "r": a.r,
        "direct": direct,
        "distinct": distinct,
        "fourier": fourier,
        "k_cutoff": k_cutoff,
    });
    out.write_json("report.json", &report)?;
    Ok(report)
}

fn random_model(a: &RandomModelArgs, seed: u64, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    if a.r < 2 {
        return Err(CliError::Usage("r must be at least 2".into()));
    }
    if a.m > 20 {
        return Err(CliError::Refused(format!("M = {} means 2^{} points per sample", a.m, a.m)));
    }
    let n0 = FactoredRadius::from_small(a.n0)?;
    let n0_angles = angles(&n0, PrecisionContext::default()).angles;
    let n = (1usize << a.m) * n0_angles.len();
    let kernel = kernel_of(&a.kernel, a.r - 1)?;
    let fhat0 = kernel.fhat(&vec![0.0; a.r - 1]);
    let (statistic, est, expected, kind) = match a.statistic {
        Statistic::Lambda => {
            if a.k.len() != a.r - 1 {
                return Err(CliError::Usage(format!("--k needs {} entries", a.r - 1)));
            }
            if a.n0 != 1 {
                return Err(CliError::Usage("the lambda statistic has no n0 shift".into()));
            }
            let kv = KVector::new(a.k.clone());
            let est = mc_lambda_product(&kv, a.m, a.samples, seed)?;
            ("lambda_product".to_string(), est, Some(expected_lambda_product_f64(&kv, a.m)), Some("exact"))
        }
        Statistic::R => {
            let est = mc_correlation(a.m, &n0_angles, &kernel, a.r, TupleSum::All, a.moment, a.samples, seed)?;
            let k = kernel.required_k_cutoff(n) as f64;
            let exact = if a.moment == 1 && (2.0 * k + 1.0).powi(a.r as i32 - 1) <= 1e8 {
                Some(expected_r_r(a.m, &n0_angles, &kernel, a.r)?)
            } else {
                None
            };
            (format!("R_{}^{}", a.r, a.moment), est, exact, exact.map(|_| "exact"))
        }
        Statistic::RStar => {
            let est = mc_correlation(a.m, &n0_angles, &kernel, a.r, TupleSum::Distinct, a.moment, a.samples, seed)?;
            let (e, kind) = match (a.moment, a.r, a.n0) {
                (1, 2, 1) => (expected_r2_star(&kernel, n), "exact"),
                (1, _, _) => (fhat0, "asymptotic"),
                (2, _, _) => (fhat0 * fhat0, "asymptotic"),
                _ => return Err(CliError::Usage("moment must be 1 or 2".into())),
            };
            (format!("R*_{}^{}", a.r, a.moment), est, Some(e), Some(kind))
        }
    };
    let report = MCReport {
        statistic,
        mean: est.mean,
        stderr: est.stderr,
        n_samples: est.n_samples,
        seed_base: seed,
        expected,
        expected_kind: kind.map(str::to_string),
    };
    out.write_json("report.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

/// Rough member count `x (log log x)^{M-1} / ((M-1)! 2^M log x)`.
fn family_size_estimate(x: f64, m: usize) -> f64 {
    let ll = x.ln().ln().max(1.0);
    let fact: f64 = (1..m).map(|i| i as f64).product();
    x * ll.powi(m as i32 - 1) / (fact * 2f64.powi(m as i32) * x.ln())
}

#[derive(Serialize)]
struct FamilyCorrelation {
    r: usize,
    mean: f64,
    second_moment: f64,
}

fn family(a: &FamilyArgs, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let x = parse_count(&a.x)?;
    if a.m >= 4 || x > 1_000_000_000 {
        return Err(CliError::Refused(format!(
            "M = {}, x = {x} is beyond desk scale (about {:.2e} members)",
            a.m,
            family_size_estimate(x as f64, a.m)
        )));
    }
    if a.k.is_empty() {
        return Err(CliError::Usage("--k needs at least one entry".into()));
    }
    let n0 = FactoredRadius::from_small(a.n0)?;
    let spec = FamilySpec::new(x, a.m, n0)?;
    let bound = Family::prime_bound(&spec).max(a.prime_cutoff);
    let table = PrimeTable::new(bound);
    let fam = Family::with_table(spec, &table)?;
    let kv = KVector::new(a.k.clone());
    let cmp = lsd_compare_with(&fam, &kv, &table, a.prime_cutoff)?;
    out.write_json("lsd.json", &cmp)?;
    let mut summary = serde_json::to_value(&cmp)?;
    summary["spec"] = serde_json::to_value(&fam.spec)?;
    summary["count"] = json!(cmp.family_size);
    if a.correlation {
        let kernel = kernel_of(&a.kernel, 1)?;
        let c = FamilyCorrelation {
            r: 2,
            mean: corr_family_average_with(&fam, &kernel, 2, 1)?,
            second_moment: corr_family_average_with(&fam, &kernel, 2, 2)?,
        };
        out.write_json("correlation.json", &c)?;
        summary["correlation"] = serde_json::to_value(&c)?;
    }
    if a.dump_terms {
        let rows: Vec<Vec<String>> = fam
            .member_indices()
            .iter()
            .map(|idx| {
                let n: u64 = idx.iter().map(|&i| fam.primes()[i as usize].p).product();
                let v: f64 = idx.iter().map(|&i| local_product(fam.primes()[i as usize].theta, &kv)).product();
                vec![n.to_string(), fmt_f64(v)]
            })
            .collect();
        out.write_csv("terms.csv", &["n", "lambda_product"], &rows)?;
    }
    Ok(summary)
}

fn cells(a: &CellsArgs, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let table = enumerate_cells(a.r)?;
    let set = |members: Vec<usize>| {
        format!("{{{}}}", members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","))
    };
    let rows: Vec<Vec<String>> = table
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                i.to_string(),
                c.d.to_string(),
                c.alpha.to_string(),
                c.maximal.to_string(),
                c.defining_classes.iter().map(|s| set(s.members())).collect::<Vec<_>>().join("|"),
                c.kernel_basis
                    .iter()
                    .map(|b| format!("({})", b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
                    .collect::<Vec<_>>()
                    .join(";"),
                c.subcells.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
            ]
        })
        .collect();
    out.write_csv(
        "cells.csv",
        &["index", "d", "alpha", "maximal", "defining_classes", "kernel_basis", "subcells"],
        &rows,
    )?;
    out.write_json("cells.json", &table)?;
    let shape: Vec<(usize, u64)> = table.cells.iter().map(|c| (c.d, c.alpha)).collect();
    Ok(json!({"r": a.r, "cells": table.cells.len(), "shape": shape}))
}

fn repulsion(a: &RepulsionArgs, ctx: PrecisionContext, out: &mut OutputDir) -> CliResult<serde_json::Value> {
    let primes = a.primes.iter().map(|&p| split_prime(p)).collect::<Result<Vec<_>, _>>()?;
    let rep = check_repulsion(&primes, &a.coeffs, ctx)?;
    let report = json!({
        "primes": a.primes,
        "coeffs": a.coeffs,
        "precision_bits": ctx.mantissa_bits,
        "lhs": rep.lhs,
        "rhs": rep.rhs,
        "ratio": rep.lhs / rep.rhs,
        "holds": rep.holds,
        "lhs_positive": rep.lhs_positive,
        "error_bound": rep.error_bound,
    });
    out.write_json("report.json", &report)?;
    Ok(report)
}
