use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use log::{info, warn};
use rmcal_core::calibrator::{
    calibrate_pair, calibrate_per_category, mismatch_degree, solve_offsets_joint, CalibrationResult, JointOptions,
    PairwiseScores, WinRates,
};
use rmcal_core::elo::write_battles;
use rmcal_core::ingest::{EloFormat, EloTable, ScoreFormat, ScoreTable};
use rmcal_core::prefs::{
    bt_loss, build_pairs, build_pairs_by_category, build_pairs_multi, flip_count, read_dataset, write_dataset,
    PreferenceDataset,
};
use rmcal_core::report::{
    collect_plot_data, read_records, write_md_tsv, write_pattern_tsv, write_records, write_style_tsv,
    write_win_rate_tsv, CalibrationRecord, ReportRecord, StyleSummary,
};
use rmcal_core::sim::{run_recovery_suite, simulate_battles, simulate_scores, SimConfig};
use rmcal_core::style::{pattern_stats, style_zscores};

use crate::cli::*;
use crate::exit::{fail, usage, Status};
use crate::manifest::RunManifest;

fn score_format(path: &Path, format: Option<FormatArg>) -> ScoreFormat {
    match format {
        Some(FormatArg::Jsonl) => ScoreFormat::Jsonl,
        Some(FormatArg::Csv) => ScoreFormat::Csv,
        None => ScoreFormat::from_path(path),
    }
}

fn load_scores(path: &Path, format: Option<FormatArg>, manifest: &mut RunManifest) -> Result<ScoreTable> {
    manifest
        .input(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let table = ScoreTable::load(path, score_format(path, format))
        .with_context(|| format!("loading scores from {}", path.display()))?;
    info!("{}: {} records", path.display(), table.len());
    Ok(table)
}

fn load_elo(arg: &EloArg, manifest: &mut RunManifest) -> Result<EloTable> {
    match &arg.elo {
        Some(path) => {
            manifest
                .input(path)
                .with_context(|| format!("reading {}", path.display()))?;
            EloTable::load(path, EloFormat::from_path(path))
                .with_context(|| format!("loading Elo ratings from {}", path.display()))
        }
        None => {
            manifest.param("elo", "bundled");
            Ok(EloTable::arena_snapshot())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_report(out: Option<&Path>, manifest: &RunManifest, records: Vec<ReportRecord>) -> Result<()> {
    let Some(path) = out else { return Ok(()) };
    let mut all = Vec::with_capacity(records.len() + 1);
    all.push(ReportRecord::Manifest(manifest.to_value()));
    all.extend(records);
    let mut w = create(path)?;
    write_records(&all, &mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    println!("report: {}", path.display());
    Ok(())
}

pub fn ingest_check(args: &IngestCheckArgs) -> Result<()> {
    let mut manifest = RunManifest::new("ingest-check");
    let table = load_scores(&args.scores.scores, args.scores.format, &mut manifest)?;
    println!("records  {}", table.len());
    println!("prompts  {}", table.prompts().len());
    let models: Vec<&str> = table.models().collect();
    println!("models   {}", models.len());
    for m in &models {
        let recs: Vec<_> = table.model_records(m)?.collect();
        let labeled = recs.iter().filter(|r| r.category.is_some()).count();
        let texts = recs.iter().filter(|r| r.response_text.is_some()).count();
        println!(
            "  {m:<32} records {:>7}  with category {labeled:>7}  with text {texts:>7}",
            recs.len()
        );
    }
    if args.elo.elo.is_some() {
        let elo = load_elo(&args.elo, &mut manifest)?;
        let missing: Vec<&str> = models.iter().copied().filter(|m| !elo.contains(m)).collect();
        if missing.is_empty() {
            println!("elo      all {} models rated", models.len());
        } else {
            println!("elo      no rating for: {}", missing.join(", "));
        }
    }
    for (i, a) in args.models.iter().enumerate() {
        for b in &args.models[i + 1..] {
            let shared = table.require_shared(a, b)?;
            println!("shared   {a} / {b}: {}", shared.len());
        }
    }
    Ok(())
}

fn print_calibration(label: &str, r: &CalibrationRecord) {
    let (achieved, target) = r.result.pair_rates().unwrap_or((f64::NAN, f64::NAN));
    println!("{label}");
    println!("  prompts        {}", r.before.n);
    println!("  target         {target:.6}");
    println!("  empirical      {:.6}", r.before.empirical);
    println!("  md before      {:.6} ({})", r.before.md, direction(&r.before));
    println!("  offset         {:.6}", r.result.offset(&r.over_valued));
    println!("  achieved       {achieved:.6}");
    println!("  md after       {:.3e}", r.after.md);
    println!("  residual       {:.3e}", r.result.residual_loss);
    println!(
        "  converged      {} ({} iterations)",
        r.result.converged, r.result.iterations
    );
}

fn direction(m: &rmcal_core::calibrator::MismatchReport) -> String {
    serde_json::to_value(m.direction)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    if args.over_valued == args.reference {
        return Err(usage("--over-valued and --reference must name different models"));
    }
    let mut manifest = RunManifest::new("calibrate");
    manifest
        .param("over_valued", &args.over_valued)
        .param("reference", &args.reference)
        .param("per_category", args.per_category)
        .param("tol", args.tol);
    let table = load_scores(&args.scores.scores, args.scores.format, &mut manifest)?;
    let elo = load_elo(&args.elo, &mut manifest)?;

    let mut records = Vec::new();
    if args.per_category {
        let rep = calibrate_per_category(&table, &elo, &args.over_valued, &args.reference, args.tol)?;
        for c in rep.categories {
            let rec = CalibrationRecord {
                over_valued: rep.over_valued.clone(),
                reference: rep.reference.clone(),
                category: Some(c.category.clone()),
                result: c.result,
                before: c.before,
                after: c.after,
            };
            print_calibration(
                &format!("{} vs {} [{}]", rec.over_valued, rec.reference, c.category),
                &rec,
            );
            records.push(rec);
        }
        for s in &rep.skipped {
            println!("skipped category {s}: no shared prompts");
        }
    } else {
        let c = calibrate_pair(&table, &elo, &args.over_valued, &args.reference, args.tol)?;
        let rec = CalibrationRecord {
            over_valued: args.over_valued.clone(),
            reference: args.reference.clone(),
            category: None,
            result: c.result,
            before: c.before,
            after: c.after,
        };
        print_calibration(&format!("{} vs {}", rec.over_valued, rec.reference), &rec);
        records.push(rec);
    }
    let unconverged = records.iter().filter(|r| !r.result.converged).count();
    write_report(
        args.out.as_deref(),
        &manifest,
        records.into_iter().map(ReportRecord::Calibration).collect(),
    )?;
    if unconverged > 0 {
        return Err(fail(
            Status::Solver,
            format!("{unconverged} solve(s) did not reach tolerance"),
        ));
    }
    Ok(())
}

pub fn calibrate_joint(args: &JointArgs) -> Result<()> {
    let mut manifest = RunManifest::new("calibrate-joint");
    let table = load_scores(&args.scores.scores, args.scores.format, &mut manifest)?;
    let elo = load_elo(&args.elo, &mut manifest)?;
    let models: Vec<&str> = if args.models.is_empty() {
        table.models().collect()
    } else {
        args.models.iter().map(String::as_str).collect()
    };
    let anchor = match &args.anchor {
        Some(a) => a.as_str(),
        None => elo.top_model(models.iter().copied())?,
    };
    manifest
        .param("models", &models)
        .param("anchor", anchor)
        .param("step", args.step)
        .param("max_iters", args.max_iters)
        .param("tol", args.tol);
    let opts = JointOptions {
        step: args.step,
        max_iters: args.max_iters,
        tol: args.tol,
    };
    let result = solve_offsets_joint(&table, &elo, &models, anchor, opts)?;
    println!("anchor      {anchor}");
    for m in &models {
        println!("  {m:<32} offset {:>12.6}", result.offset(m));
    }
    println!("residual    {:.6e}", result.residual_loss);
    println!("converged   {} ({} iterations)", result.converged, result.iterations);
    let converged = result.converged;
    write_report(args.out.as_deref(), &manifest, vec![ReportRecord::Joint(result)])?;
    if !converged {
        return Err(fail(
            Status::Solver,
            format!("no convergence within {} iterations", args.max_iters),
        ));
    }
    Ok(())
}

pub fn md(args: &MdArgs) -> Result<()> {
    let mut manifest = RunManifest::new("md");
    manifest
        .param("over_valued", &args.over_valued)
        .param("reference", &args.reference)
        .param("offset", args.offset);
    let table = load_scores(&args.scores.scores, args.scores.format, &mut manifest)?;
    let elo = load_elo(&args.elo, &mut manifest)?;
    let scores = PairwiseScores::from_table(&table, &args.over_valued, &args.reference)?;
    let m = mismatch_degree(&scores, &elo, args.offset)?;
    println!(
        "{} vs {} ({} prompts, offset {})",
        m.over_valued, m.reference, m.n, m.offset
    );
    println!("  expected   {:.6}", m.expected);
    println!("  empirical  {:.6}", m.empirical);
    println!("  md         {:.6} ({})", m.md, direction(&m));
    write_report(args.out.as_deref(), &manifest, vec![ReportRecord::Mismatch(m)])
}

enum OffsetSource {
    Pair {
        over: String,
        reference: String,
        offset: f64,
    },
    Categories {
        over: String,
        reference: String,
        offsets: BTreeMap<String, f64>,
    },
    Joint {
        models: Vec<String>,
        offsets: BTreeMap<String, f64>,
    },
}

fn pick_pair(flag: &Option<String>, from_report: &str, name: &str) -> Result<String> {
    match flag {
        Some(f) if f != from_report => Err(usage(format!(
            "--{name} {f:?} conflicts with {from_report:?} in the calibration report"
        ))),
        _ => Ok(from_report.to_string()),
    }
}

fn offset_source(args: &BuildPrefsArgs, manifest: &mut RunManifest) -> Result<OffsetSource> {
    match (args.offset, &args.calibration) {
        (Some(offset), None) => {
            let (Some(over), Some(reference)) = (&args.over_valued, &args.reference) else {
                return Err(usage("--offset needs --over-valued and --reference"));
            };
            Ok(OffsetSource::Pair {
                over: over.clone(),
                reference: reference.clone(),
                offset,
            })
        }
        (None, Some(path)) => {
            manifest
                .input(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let records = read_records(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
            let cals: Vec<&CalibrationRecord> = records
                .iter()
                .filter_map(|r| match r {
                    ReportRecord::Calibration(c) => Some(c),
                    _ => None,
                })
                .collect();
            let joints: Vec<&CalibrationResult> = records
                .iter()
                .filter_map(|r| match r {
                    ReportRecord::Joint(j) => Some(j),
                    _ => None,
                })
                .collect();
            match (cals.as_slice(), joints.as_slice()) {
                ([], [j]) => {
                    let models = match &j.win_rates {
                        WinRates::Matrix { models, .. } => models.clone(),
                        WinRates::Pair { .. } => j.offsets.keys().cloned().collect(),
                    };
                    Ok(OffsetSource::Joint {
                        models,
                        offsets: j.offsets.clone(),
                    })
                }
                ([c], []) if c.category.is_none() => Ok(OffsetSource::Pair {
                    over: pick_pair(&args.over_valued, &c.over_valued, "over-valued")?,
                    reference: pick_pair(&args.reference, &c.reference, "reference")?,
                    offset: c.result.offset(&c.over_valued),
                }),
                (cs, []) if !cs.is_empty() && cs.iter().all(|c| c.category.is_some()) => {
                    let (o, r) = (&cs[0].over_valued, &cs[0].reference);
                    if cs.iter().any(|c| &c.over_valued != o || &c.reference != r) {
                        return Err(usage("calibration report mixes several model pairs"));
                    }
                    let offsets = cs
                        .iter()
                        .map(|c| (c.category.clone().unwrap_or_default(), c.result.offset(o)))
                        .collect();
                    Ok(OffsetSource::Categories {
                        over: pick_pair(&args.over_valued, o, "over-valued")?,
                        reference: pick_pair(&args.reference, r, "reference")?,
                        offsets,
                    })
                }
                _ => Err(usage(format!(
                    "{} must hold one pair calibration, one set of per-category calibrations, or one joint result",
                    path.display()
                ))),
            }
        }
        (None, None) => Err(usage("give either --offset or --calibration")),
        (Some(_), Some(_)) => Err(usage("--offset and --calibration are mutually exclusive")),
    }
}

pub fn build_prefs(args: &BuildPrefsArgs) -> Result<()> {
    let mut manifest = RunManifest::new("build-prefs");
    manifest.param("tie_policy", args.tie_policy);
    let table = load_scores(&args.scores.scores, args.scores.format, &mut manifest)?;
    let source = offset_source(args, &mut manifest)?;
    let policy = args.tie_policy;

    let (dataset, baseline, over) = match &source {
        OffsetSource::Pair {
            over,
            reference,
            offset,
        } => {
            manifest
                .param("over_valued", over)
                .param("reference", reference)
                .param("offset", offset);
            (
                build_pairs(&table, over, reference, *offset, policy)?,
                build_pairs(&table, over, reference, 0.0, policy)?,
                Some(over.as_str()),
            )
        }
        OffsetSource::Categories {
            over,
            reference,
            offsets,
        } => {
            manifest
                .param("over_valued", over)
                .param("reference", reference)
                .param("category_offsets", offsets);
            (
                build_pairs_by_category(&table, over, reference, offsets, policy)?,
                build_pairs(&table, over, reference, 0.0, policy)?,
                Some(over.as_str()),
            )
        }
        OffsetSource::Joint { models, offsets } => {
            let names: Vec<&str> = models.iter().map(String::as_str).collect();
            manifest.param("models", &names).param("offsets", offsets);
            let zero: BTreeMap<String, f64> = models.iter().map(|m| (m.clone(), 0.0)).collect();
            let reference = args.reference.as_deref();
            (
                build_pairs_multi(&table, &names, offsets, policy, reference)?,
                build_pairs_multi(&table, &names, &zero, policy, reference)?,
                None,
            )
        }
    };

    let mut w = create(&args.out)?;
    write_dataset(&dataset, Some(&manifest.to_value()), &mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", args.out.display()))?;

    println!("pairs         {}", dataset.pairs.len());
    println!("dropped ties  {}", dataset.dropped_ties);
    println!("flips vs 0    {}", flip_count(&baseline, &dataset));
    if let Some(o) = over {
        println!("{o} chosen  {:.6}", dataset.win_fraction(o));
    }
    println!("dataset: {}", args.out.display());
    Ok(())
}

fn load_dataset(path: &Path, manifest: &mut RunManifest) -> Result<PreferenceDataset> {
    manifest
        .input(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let (ds, _) = read_dataset(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(ds)
}

pub fn patterns(args: &PatternsArgs) -> Result<()> {
    let mut manifest = RunManifest::new("patterns");
    let ds = load_dataset(&args.dataset, &mut manifest)?;
    let rep = pattern_stats(&ds);
    if rep.pairs_skipped > 0 {
        warn!("{} pairs without both texts skipped", rep.pairs_skipped);
    }
    println!("{:<8} {:>10} {:>10} {:>7}", "pattern", "chosen", "rejected", "ratio");
    for s in &rep.stats {
        println!(
            "{:<8} {:>10} {:>10} {:>7}",
            s.pattern.label(),
            s.chosen_count,
            s.rejected_count,
            s.ratio_label()
        );
    }
    println!("pairs analyzed {}, skipped {}", rep.pairs_analyzed, rep.pairs_skipped);
    write_report(
        args.out.as_deref(),
        &manifest,
        rep.stats.into_iter().map(ReportRecord::Pattern).collect(),
    )
}

pub fn zscore(args: &ZscoreArgs) -> Result<()> {
    let mut manifest = RunManifest::new("zscore");
    let records: Vec<(f64, String)> = match (&args.scores, &args.dataset) {
        (Some(path), None) => {
            manifest.param("group_by", format!("{:?}", args.group_by).to_lowercase());
            let table = load_scores(path, args.format, &mut manifest)?;
            let mut unlabeled = 0;
            let recs: Vec<(f64, String)> = table
                .records()
                .iter()
                .filter_map(|r| {
                    let label = match args.group_by {
                        GroupBy::Style => r.style_label.clone(),
                        GroupBy::Category => r.category.clone(),
                        GroupBy::Model => Some(r.model_id.clone()),
                    };
                    if label.is_none() {
                        unlabeled += 1;
                    }
                    label.map(|l| (r.score, l))
                })
                .collect();
            if unlabeled > 0 {
                warn!("{unlabeled} records without a group label skipped");
            }
            recs
        }
        (None, Some(path)) => {
            let ds = load_dataset(path, &mut manifest)?;
            ds.pairs
                .iter()
                .flat_map(|p| {
                    [
                        (p.chosen_score, "chosen".to_string()),
                        (p.rejected_score, "rejected".to_string()),
                    ]
                })
                .collect()
        }
        _ => return Err(usage("give exactly one of --scores and --dataset")),
    };
    let rep = style_zscores(&records)?;
    println!("{:<24} {:>12} {:>8}", "group", "mean_z", "count");
    for g in &rep.groups {
        println!("{:<24} {:>12.6} {:>8}", g.group_label, g.mean_z, g.count);
    }
    println!("variance across groups {:.6e}", rep.variance_across_groups);
    if rep.degenerate {
        println!("all scores equal; z-scores set to 0");
    }
    let mut out: Vec<ReportRecord> = rep.groups.iter().cloned().map(ReportRecord::StyleGroup).collect();
    out.push(ReportRecord::StyleSummary(StyleSummary {
        variance_across_groups: rep.variance_across_groups,
        degenerate: rep.degenerate,
        records: records.len(),
    }));
    write_report(args.out.as_deref(), &manifest, out)
}

pub fn btloss(args: &BtlossArgs) -> Result<()> {
    let mut manifest = RunManifest::new("btloss");
    let ds = load_dataset(&args.dataset, &mut manifest)?;
    let table = match &args.scores {
        Some(p) => Some(load_scores(p, args.format, &mut manifest)?),
        None => None,
    };
    let by_prompt: BTreeMap<&str, &rmcal_core::prefs::PreferencePair> =
        ds.pairs.iter().map(|p| (p.prompt_id.as_str(), p)).collect();
    let scorer = |prompt: &str, model: &str| -> Option<f64> {
        let pair = by_prompt.get(prompt)?;
        let raw = match &table {
            Some(t) => t.score(prompt, model)?,
            None if model == pair.chosen_model => pair.chosen_score,
            None if model == pair.rejected_model => pair.rejected_score,
            None => return None,
        };
        let offset = if args.calibrated {
            pair.applied_offsets.get(model).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        Some(raw + offset)
    };
    let loss = bt_loss(&ds, scorer)?;
    println!("pairs    {}", ds.pairs.len());
    println!("bt loss  {loss:.9}");
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("simulate");
    manifest
        .input(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut config: SimConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    manifest.seed = Some(config.seed);
    manifest.param("config", &config);

    if let Some(path) = &args.scores_out {
        let mut w = create(path)?;
        simulate_scores(&config)?
            .write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.battles_out {
        let mut w = create(path)?;
        write_battles(&simulate_battles(&config)?, &mut w)
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let report = run_recovery_suite(&config)?;
    print!("{report}");
    if let Some(path) = &args.out {
        let doc = serde_json::json!({ "manifest": manifest.to_value(), "report": &report });
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("report: {}", path.display());
    }
    if !report.all_passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(fail(
            Status::Oracle,
            format!("oracle checks failed: {}", failed.join(", ")),
        ));
    }
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let mut all = Vec::new();
    for path in &args.inputs {
        let recs = read_records(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
        all.extend(recs);
    }
    let plot = collect_plot_data(&all);
    if plot.is_empty() {
        return Err(usage(
            "input reports contain no calibration, mismatch, pattern or style records",
        ));
    }
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> rmcal_core::Result<()>| -> Result<()> {
        let path = args.out_dir.join(name);
        let mut w = create(&path)?;
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    if !plot.win_rates.is_empty() {
        emit("win_rates.tsv", &|w| write_win_rate_tsv(&plot.win_rates, w))?;
    }
    if !plot.md.is_empty() {
        emit("md.tsv", &|w| write_md_tsv(&plot.md, w))?;
    }
    if !plot.patterns.is_empty() {
        emit("patterns.tsv", &|w| write_pattern_tsv(&plot.patterns, w))?;
    }
    if !plot.style_groups.is_empty() {
        emit("style_groups.tsv", &|w| write_style_tsv(&plot.style_groups, w))?;
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
