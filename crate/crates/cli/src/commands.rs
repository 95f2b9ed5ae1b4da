use crate::config::RunConfig;
use crate::error::{input, CliError, Result};
use crate::Command;
use fgm_core::library::{
    format_float, log_spaced, read_csv, subset_study, tabulate, write_csv, write_library, Dataset,
    FlameletLibrary,
};
use fgm_core::mech::parse_mechanism;
use fgm_ml::tuner::{
    classify_bands, estimate_cost, grid_search, render_top_csv, render_top_text, report_top_k,
    Budget, SearchOptions,
};
use fgm_ml::{evaluate, fit_and_report, save_model, train_test_split, Family, TrainReport};
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn dispatch(cmd: Command, mut cfg: RunConfig, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::MechCheck { path } => mech_check(path.or(cfg.mechanism.path.clone()), out),
        Command::Tabulate { chi } => {
            if let Some(c) = chi {
                cfg.flamelet.chi = c;
            }
            cfg.validate()?;
            cmd_tabulate(&cfg, out)
        }
        Command::Train {
            family,
            dataset,
            layers,
            seed,
        } => {
            if let Some(f) = family {
                cfg.model.family = parse_family(&f)?;
            }
            if dataset.is_some() {
                cfg.data.dataset = dataset;
            }
            if let Some(l) = layers {
                cfg.model.mlp.hidden_layers = l;
            }
            if let Some(s) = seed {
                cfg.model.lr.seed = s;
                cfg.model.mlp.seed = s;
                cfg.model.rf.seed = s;
                cfg.model.svr.seed = s;
            }
            cfg.validate()?;
            cmd_train(&cfg, out)
        }
        Command::Compare { chi, dataset } => {
            if let Some(c) = chi {
                cfg.compare.chi = c;
            }
            if dataset.is_some() {
                cfg.data.dataset = dataset;
            }
            cfg.validate()?;
            cmd_compare(&cfg, out)
        }
        Command::Tune {
            budget,
            seed,
            top_k,
            min_layers,
            max_layers,
            full,
            confirm_full,
            dataset,
        } => {
            let t = &mut cfg.tune;
            t.budget = budget.unwrap_or(t.budget);
            t.seed = seed.unwrap_or(t.seed);
            t.top_k = top_k.unwrap_or(t.top_k);
            t.min_layers = min_layers.unwrap_or(t.min_layers);
            t.max_layers = max_layers.unwrap_or(t.max_layers);
            t.full |= full;
            t.confirm_full |= confirm_full;
            if dataset.is_some() {
                cfg.data.dataset = dataset;
            }
            cfg.validate()?;
            cmd_tune(&cfg, out)
        }
        Command::SubsetStudy { counts, pool_size } => {
            if let Some(c) = counts {
                cfg.subset.counts = c;
            }
            if let Some(p) = pool_size {
                cfg.subset.pool_size = p;
            }
            cfg.validate()?;
            cmd_subset_study(&cfg, out)
        }
    }
}

pub fn parse_family(s: &str) -> Result<Family> {
    match s.trim().to_ascii_lowercase().as_str() {
        "lr" => Ok(Family::Lr),
        "mlp" => Ok(Family::Mlp),
        "rf" => Ok(Family::Rf),
        "svr" => Ok(Family::Svr),
        other => Err(input(format!(
            "unknown model family '{other}' (lr, mlp, rf, svr)"
        ))),
    }
}

fn mech_check(path: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let mech = match path {
        None => fgm_core::mech::bundled_methane(),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| input(format!("cannot read {}: {e}", p.display())))?;
            parse_mechanism(&text)?
        }
    };
    writeln!(
        out,
        "{} species, {} reactions, OK",
        mech.n_species(),
        mech.reactions.len()
    )?;
    Ok(())
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| input(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

/// Tabulate `chis`, print one line per entry, fail on the first entry that
/// did not converge.
fn build_library(cfg: &RunConfig, chis: &[f64], out: &mut dyn Write) -> Result<FlameletLibrary> {
    let mech = cfg.mechanism()?;
    let bc = cfg.boundary(&mech)?;
    let grid = cfg.grid(&mech, &bc)?;
    let mut opts = cfg.tabulate_options();
    opts.allow_unconverged = true;
    let lib = tabulate(&mech, &bc, &grid, chis, &opts)?;
    for e in &lib.entries {
        writeln!(
            out,
            "chi {:>9.4}  {:<11}  steps {:>5}  residual {:.3e}  T_max {:.1} K",
            e.chi_st,
            if e.converged {
                "converged"
            } else {
                "UNCONVERGED"
            },
            e.steps,
            e.residual_norm,
            e.max_temperature()
        )?;
    }
    if let Some(bad) = lib.entries.iter().find(|e| !e.converged) {
        return Err(CliError::Numerical(format!(
            "flamelet at chi = {} 1/s did not converge (residual {:e})",
            format_float(bad.chi_st),
            bad.residual_norm
        )));
    }
    Ok(lib)
}

fn load_dataset(cfg: &RunConfig, out: &mut dyn Write) -> Result<Dataset> {
    match &cfg.data.dataset {
        Some(p) => Ok(read_csv(p)?),
        None => {
            if cfg.flamelet.chi.is_empty() {
                return Err(input("flamelet.chi is empty"));
            }
            Ok(build_library(cfg, &cfg.flamelet.chi, out)?.flatten())
        }
    }
}

fn cmd_tabulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    if cfg.flamelet.chi.is_empty() {
        return Err(input("flamelet.chi is empty"));
    }
    let lib = build_library(cfg, &cfg.flamelet.chi, out)?;
    let dir = output_dir(cfg)?;
    let ds = lib.flatten();
    write_library(&lib, dir.join("library.fgmlib"))?;
    write_csv(&ds, dir.join("library.csv"))?;
    writeln!(
        out,
        "{} flamelets, {} rows -> {}",
        lib.entries.len(),
        ds.len(),
        dir.display()
    )?;
    Ok(())
}

fn csv_line(fields: impl IntoIterator<Item = String>) -> String {
    let mut s = fields.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn percent(v: f64) -> String {
    format!("{v:.2}")
}

fn cmd_train(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let ds = load_dataset(cfg, out)?;
    let (train, test) = train_test_split(&ds, cfg.data.test_fraction, cfg.data.split_seed);
    let family = cfg.model.family;
    let (model, ev) = fit_and_report(&cfg.model.spec(family), &train, &test)?;
    let dir = output_dir(cfg)?;
    save_model(&model, dir.join(format!("model-{family}.fgm")))?;
    let r = &ev.report;
    let names: Vec<String> = r.per_target.iter().map(|t| t.name.clone()).collect();
    let mut report = csv_line(
        ["family", "accuracy", "mse"]
            .map(String::from)
            .into_iter()
            .chain(names.clone()),
    );
    report += &csv_line(
        [
            family.to_string(),
            format_float(r.accuracy),
            format_float(r.mse),
        ]
        .into_iter()
        .chain(r.per_target.iter().map(|t| format_float(t.accuracy))),
    );
    std::fs::write(dir.join("report.csv"), report)?;
    let timings = csv_line(["family", "train_time_s", "predict_time_s"].map(String::from))
        + &csv_line([
            family.to_string(),
            format!("{:.6}", r.train_time),
            format!("{:.6}", r.predict_time),
        ]);
    std::fs::write(dir.join("timings.csv"), timings)?;
    let arch = match &cfg.model.spec(family) {
        fgm_ml::ModelSpec::Mlp(c) => format!(" {}", c.architecture()),
        _ => String::new(),
    };
    writeln!(
        out,
        "model {family}{arch}: {} train rows, {} test rows",
        train.len(),
        test.len()
    )?;
    writeln!(out, "accuracy        {} %", percent(r.accuracy))?;
    writeln!(out, "mse             {:.4}", r.mse)?;
    writeln!(out, "training time   {:.3} s", r.train_time)?;
    writeln!(out, "prediction time {:.3} s", r.predict_time)?;
    for t in &r.per_target {
        writeln!(out, "  {:<6} {} %", t.name, percent(t.accuracy))?;
    }
    Ok(())
}

/// Families in the order of the comparison table.
pub const COMPARE_ORDER: [Family; 4] = [Family::Mlp, Family::Rf, Family::Lr, Family::Svr];

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub family: Family,
    pub outcome: std::result::Result<CompareScores, String>,
}

#[derive(Debug, Clone)]
pub struct CompareScores {
    pub held_out: TrainReport,
    /// scores against a direct solve at the curve dissipation rate
    pub curve: Option<TrainReport>,
    pub negatives: Vec<(String, usize)>,
}

/// Train every family on the configured split and score it on the held-out
/// rows and, when `reference` is given, on that flamelet.
pub fn compare_families(
    cfg: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    curve_inputs: &[Vec<f64>],
    reference: Option<&Dataset>,
    dir: &Path,
) -> Result<Vec<CompareRow>> {
    let mut rows = Vec::new();
    for family in COMPARE_ORDER {
        let outcome = match fit_and_report(&cfg.model.spec(family), train, test) {
            Err(e) => Err(e.to_string()),
            Ok((model, ev)) => {
                let curve = model.predict(curve_inputs)?;
                let mut cds = Dataset::new(model.input_names.clone(), model.target_names.clone());
                for (x, y) in curve_inputs.iter().zip(curve) {
                    cds.push(x.clone(), y);
                }
                write_csv(&cds, dir.join(format!("curves_{family}.csv")))?;
                let curve = match reference {
                    Some(r) => Some(evaluate(&model, r)?.report),
                    None => None,
                };
                Ok(CompareScores {
                    held_out: ev.report,
                    curve,
                    negatives: ev.negative_counts,
                })
            }
        };
        rows.push(CompareRow { family, outcome });
    }
    Ok(rows)
}

fn cmd_compare(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let ds = load_dataset(cfg, out)?;
    let (train, test) = train_test_split(&ds, cfg.data.test_fraction, cfg.data.split_seed);
    let dir = output_dir(cfg)?;
    let mech = cfg.mechanism()?;
    let bc = cfg.boundary(&mech)?;
    let grid = cfg.grid(&mech, &bc)?;
    let chi = cfg.compare.chi;
    let reference = match tabulate(&mech, &bc, &grid, &[chi], &cfg.tabulate_options()) {
        Ok(lib) => {
            let r = lib.flatten();
            write_csv(&r, dir.join("curves_reference.csv"))?;
            Some(r)
        }
        Err(e) => {
            writeln!(
                out,
                "reference flamelet at chi = {} unavailable: {e}",
                format_float(chi)
            )?;
            None
        }
    };
    let reference = reference.filter(|r| r.target_names == ds.target_names);
    let inputs: Vec<Vec<f64>> = grid.points().iter().map(|&z| vec![z, chi]).collect();
    let rows = compare_families(cfg, &train, &test, &inputs, reference.as_ref(), dir)?;

    let names = ds.target_names.clone();
    let mut header: Vec<String> = ["family", "status", "accuracy", "mse"]
        .map(String::from)
        .to_vec();
    header.extend(names.iter().map(|n| format!("acc_{n}")));
    header.push("curve_accuracy".into());
    header.extend(names.iter().map(|n| format!("curve_acc_{n}")));
    header.extend(names.iter().map(|n| format!("neg_{n}")));
    header.push("negatives_flagged".into());
    let mut table = csv_line(header);
    let mut timings = csv_line(["family", "train_time_s", "predict_time_s"].map(String::from));
    let width = 4 + 2 * names.len() + 1 + names.len() + 1;
    for row in &rows {
        let mut f = vec![row.family.to_string()];
        match &row.outcome {
            Err(reason) => {
                f.push(format!("failed: {}", reason.replace(',', ";")));
                f.resize(width, String::new());
            }
            Ok(s) => {
                let r = &s.held_out;
                f.extend(["ok".into(), format_float(r.accuracy), format_float(r.mse)]);
                f.extend(r.per_target.iter().map(|t| format_float(t.accuracy)));
                match &s.curve {
                    Some(c) => {
                        f.push(format_float(c.accuracy));
                        f.extend(c.per_target.iter().map(|t| format_float(t.accuracy)));
                    }
                    None => f.extend(std::iter::repeat_n(String::new(), 1 + names.len())),
                }
                f.extend(s.negatives.iter().map(|(_, n)| n.to_string()));
                f.push((s.negatives.iter().any(|(_, n)| *n > 0)).to_string());
                timings += &csv_line([
                    row.family.to_string(),
                    format!("{:.6}", r.train_time),
                    format!("{:.6}", r.predict_time),
                ]);
            }
        }
        table += &csv_line(f);
    }
    std::fs::write(dir.join("compare.csv"), table)?;
    std::fs::write(dir.join("compare_timings.csv"), timings)?;

    write!(out, "{:<6} {:>8} {:>8}", "family", "accuracy", "mse")?;
    for n in &names {
        write!(out, " {:>7}", n)?;
    }
    writeln!(
        out,
        " {:>9}  negatives",
        format!("chi={}", format_float(chi))
    )?;
    for row in &rows {
        match &row.outcome {
            Err(reason) => writeln!(out, "{:<6} failed: {reason}", row.family.to_string())?,
            Ok(s) => {
                let r = &s.held_out;
                write!(
                    out,
                    "{:<6} {:>8} {:>8.4}",
                    row.family.to_string(),
                    percent(r.accuracy),
                    r.mse
                )?;
                for t in &r.per_target {
                    write!(out, " {:>7}", percent(t.accuracy))?;
                }
                let curve = s
                    .curve
                    .as_ref()
                    .map_or("-".to_string(), |c| percent(c.accuracy));
                let neg: Vec<String> = s
                    .negatives
                    .iter()
                    .filter(|(_, n)| *n > 0)
                    .map(|(t, n)| format!("{t}:{n}"))
                    .collect();
                let neg = if neg.is_empty() {
                    "none".to_string()
                } else {
                    format!("FLAGGED {}", neg.join(" "))
                };
                writeln!(out, " {:>9}  {neg}", curve)?;
            }
        }
    }
    Ok(())
}

fn cmd_tune(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let t = &cfg.tune;
    let space = t.space();
    space.validate()?;
    let ds = load_dataset(cfg, out)?;
    let (train, test) = train_test_split(&ds, cfg.data.test_fraction, cfg.data.split_seed);
    let base = &cfg.model.mlp;
    let budget = if t.full {
        Budget::Full
    } else {
        Budget::RandomSample {
            n: t.budget,
            seed: t.seed,
        }
    };
    if t.full && !t.confirm_full {
        let est = estimate_cost(&space, base, &train, &test, budget, t.probes, cfg.workers)?;
        writeln!(
            out,
            "full search: {} configurations, about {:.3} s each, roughly {:.1} h with {} worker(s)",
            est.configs,
            est.seconds_per_config,
            est.total_seconds() / 3600.0,
            est.workers
        )?;
        return Err(input(
            "full search refused; pass --confirm-full (or tune.confirm_full = true) to run it",
        ));
    }
    let dir = output_dir(cfg)?;
    let journal = dir.join("tune_journal.jsonl");
    let opts = SearchOptions {
        workers: cfg.workers,
        journal: Some(&journal),
        limit: None,
    };
    let results = grid_search(&space, base, &train, &test, budget, &opts)?;
    let rows = report_top_k(&results, t.top_k);
    std::fs::write(dir.join("tune_top.csv"), render_top_csv(&rows))?;
    let text = render_top_text(&rows);
    std::fs::write(dir.join("tune_top.txt"), &text)?;
    let failed = results
        .iter()
        .filter(|r| r.record.report().is_none())
        .count();
    writeln!(
        out,
        "{} configurations evaluated ({failed} failed) of {} in the space",
        results.len(),
        space.count()
    )?;
    let mut acc_bands = [0usize; 5];
    let mut mse_bands = [0usize; 5];
    for r in results.iter().filter_map(|r| r.record.report()) {
        let b = classify_bands(r.accuracy, r.mse);
        acc_bands[b.accuracy as usize] += 1;
        mse_bands[b.mse as usize] += 1;
    }
    let fmt = |counts: &[usize; 5], label: fn(u8) -> &'static str| {
        (0..5u8)
            .rev()
            .map(|b| format!("{} {}", label(b), counts[b as usize]))
            .collect::<Vec<_>>()
            .join(", ")
    };
    writeln!(
        out,
        "accuracy bands: {}",
        fmt(&acc_bands, fgm_ml::tuner::accuracy_band_label)
    )?;
    writeln!(
        out,
        "mse bands:      {}",
        fmt(&mse_bands, fgm_ml::tuner::mse_band_label)
    )?;
    write!(out, "{text}")?;
    Ok(())
}

fn cmd_subset_study(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let s = &cfg.subset;
    if s.counts.is_empty() {
        return Err(input("subset.counts is empty"));
    }
    if let Some(&k) = s.counts.iter().find(|&&k| k < 2 || k > s.pool_size) {
        return Err(input(format!(
            "pool of {} entries cannot supply a subset of {k}",
            s.pool_size
        )));
    }
    if !(s.chi_min > 0.0 && s.chi_max > s.chi_min) {
        return Err(input("subset needs 0 < chi_min < chi_max"));
    }
    let pool = build_library(cfg, &log_spaced(s.chi_min, s.chi_max, s.pool_size), out)?;
    let mech = cfg.mechanism()?;
    let rows = subset_study(&mech, &pool, &s.counts, &cfg.tabulate_options())?;
    let mut csv = csv_line(
        [
            "libraries",
            "T_max",
            "T_min",
            "T_mean",
            "CO2_max",
            "CO2_min",
            "CO2_mean",
        ]
        .map(String::from),
    );
    writeln!(
        out,
        "{:>9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "libraries", "T_max", "T_min", "T_mean", "CO2_max", "CO2_min", "CO2_mean"
    )?;
    for r in &rows {
        let t = r.temperature;
        let c = r.co2.map(|c| [c.max, c.min, c.mean]);
        let cs = c.map_or(vec![String::new(); 3], |v| {
            v.iter().map(|x| format_float(*x)).collect()
        });
        csv += &csv_line(
            [
                r.count.to_string(),
                format_float(t.max),
                format_float(t.min),
                format_float(t.mean),
            ]
            .into_iter()
            .chain(cs),
        );
        let ct = c.map_or(
            "-".repeat(3)
                .split("")
                .filter(|x| !x.is_empty())
                .map(|_| format!("{:>8}", "-"))
                .collect::<Vec<_>>()
                .join(" "),
            |v| {
                v.iter()
                    .map(|x| format!("{x:>8.3}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            },
        );
        writeln!(
            out,
            "{:>9} {:>8.3} {:>8.3} {:>8.3} {ct}",
            r.count, t.max, t.min, t.mean
        )?;
    }
    let dir = output_dir(cfg)?;
    std::fs::write(dir.join("subset_study.csv"), csv)?;
    writeln!(
        out,
        "errors in percent over interior nodes at the midpoints between selected flamelets"
    )?;
    Ok(())
}
