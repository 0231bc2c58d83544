use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use hierens::datio::{
    align_columns, file_digest, format_scores_text, load_hierarchy, load_labels, load_ranking,
    load_scores, write_atomic, write_hierarchy, write_labels, write_ranking, write_reports,
    write_scores, AlignLevel, DataError, ReportFile, RunEcho, ScoreFormat,
};
use hierens::ensemble::{cascade_by_depth, hie_combine, hie_self, Level};
use hierens::metrics::{eval_report, EvalInput, EvalReport, LabelVector};
use hierens::riskmin::{crm_rerank, hie_then_crm};
use hierens::scorespace::{
    softmax_rows, top_k, validate_probabilities, Ranking, ScoreKind, ScoreMatrix, EXTERNAL_PROB_TOL,
};
use hierens::synthlab::{gen_instance, SynthConfig, LOGIT_MARGIN, RNG_ALGORITHM};
use hierens::taxonomy::Taxonomy;
use serde::Serialize;

use crate::error::CliError;
use crate::{CompareArgs, EvalArgs, Format, KindArg, Method, ScoreInputs, SynthArgs};

const DEFAULT_KS: [usize; 3] = [1, 5, 20];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| usage(format!("{what}: cannot parse {part:?}")))
        })
        .collect()
}

fn parse_ks(s: &str) -> Result<Vec<usize>, CliError> {
    let mut ks: Vec<usize> = parse_list(s, "--k")?;
    if ks.contains(&0) {
        return Err(usage("--k values must be positive"));
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Every input a method may draw on, loaded once, aligned to the taxonomy and
/// converted to probabilities.
struct Inputs {
    taxonomy: Taxonomy,
    fine: Option<ScoreMatrix>,
    coarse: Option<ScoreMatrix>,
    /// Sorted by depth, top down.
    levels: Vec<(usize, ScoreMatrix)>,
    digests: BTreeMap<String, String>,
}

fn declared_kind(k: Option<KindArg>) -> Option<ScoreKind> {
    k.map(|k| match k {
        KindArg::Logits => ScoreKind::Logits,
        KindArg::Probs => ScoreKind::Probabilities,
    })
}

fn load_probabilities(
    path: &Path,
    kind: Option<ScoreKind>,
    t: &Taxonomy,
    level: AlignLevel,
) -> Result<ScoreMatrix, CliError> {
    let m = align_columns(&load_scores(path, kind)?, t, level)?;
    match m.kind() {
        ScoreKind::Logits => Ok(softmax_rows(&m)?),
        ScoreKind::Probabilities => {
            validate_probabilities(&m, EXTERNAL_PROB_TOL)?;
            Ok(m)
        }
    }
}

impl Inputs {
    fn load(a: &ScoreInputs) -> Result<Self, CliError> {
        let taxonomy = load_hierarchy(&a.hierarchy)?;
        let kind = declared_kind(a.kind);
        let mut digests = BTreeMap::new();
        digests.insert("hierarchy".to_string(), file_digest(&a.hierarchy)?);

        let fine = match &a.fine {
            Some(p) => {
                digests.insert("fine".into(), file_digest(p)?);
                Some(load_probabilities(p, kind, &taxonomy, AlignLevel::Leaf)?)
            }
            None => None,
        };
        let coarse = match &a.coarse {
            Some(p) => {
                digests.insert("coarse".into(), file_digest(p)?);
                Some(load_probabilities(p, kind, &taxonomy, AlignLevel::Coarse)?)
            }
            None => None,
        };
        let mut seen = HashSet::new();
        let mut levels = Vec::with_capacity(a.levels.len());
        for (d, p) in &a.levels {
            if !seen.insert(*d) {
                return Err(usage(format!("--level depth {d} given twice")));
            }
            digests.insert(format!("level{d}"), file_digest(p)?);
            levels.push((
                *d,
                load_probabilities(p, kind, &taxonomy, AlignLevel::Depth(*d))?,
            ));
        }
        levels.sort_by_key(|(d, _)| *d);
        Ok(Self {
            taxonomy,
            fine,
            coarse,
            levels,
            digests,
        })
    }

    fn require(&self, method: Method) -> Result<(), CliError> {
        if self.fine.is_none() {
            return Err(usage(format!("method {} requires --fine", method.name())));
        }
        match method {
            Method::Hie | Method::HieCrm if self.coarse.is_none() => {
                Err(usage(format!("method {} requires --coarse", method.name())))
            }
            Method::Cascade if self.levels.is_empty() => Err(usage(
                "method cascade requires at least one --level DEPTH=PATH",
            )),
            _ => Ok(()),
        }
    }

    /// Digests of the inputs `method` reads.
    fn digests_for(&self, method: Method) -> BTreeMap<String, String> {
        self.digests
            .iter()
            .filter(|(k, _)| match k.as_str() {
                "hierarchy" | "fine" | "labels" => true,
                "coarse" => matches!(method, Method::Hie | Method::HieCrm),
                _ => method == Method::Cascade,
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

/// Output of one decision rule: renormalized scores, or a full risk ranking.
enum Decision {
    Scores(ScoreMatrix),
    Ranking(Ranking),
}

fn apply(method: Method, inp: &Inputs) -> Result<(Decision, Vec<Level>), CliError> {
    inp.require(method)?;
    let t = &inp.taxonomy;
    let fine = inp.fine.as_ref().expect("checked by require");
    let pmap = t.parent_index_map();
    Ok(match method {
        Method::Argmax => (Decision::Scores(fine.clone()), Vec::new()),
        Method::Hie => {
            let c = hie_combine(fine, inp.coarse.as_ref().unwrap(), &pmap)?;
            (Decision::Scores(c.scores), c.provenance.levels_used)
        }
        Method::HieSelf => {
            let c = hie_self(fine, &pmap, t.coarse_count())?;
            (Decision::Scores(c.scores), c.provenance.levels_used)
        }
        Method::Cascade => {
            let levels: Vec<(usize, &ScoreMatrix)> =
                inp.levels.iter().map(|(d, m)| (*d, m)).collect();
            let c = cascade_by_depth(t, fine, &levels)?;
            (Decision::Scores(c.scores), c.provenance.levels_used)
        }
        Method::Crm => (
            Decision::Ranking(crm_rerank(fine, &t.cost_matrix())?.ranking),
            Vec::new(),
        ),
        Method::HieCrm => {
            let r = hie_then_crm(fine, inp.coarse.as_ref().unwrap(), &pmap, &t.cost_matrix())?;
            (Decision::Ranking(r.ranking), vec![Level::Parent])
        }
    })
}

fn evaluate(
    decision: &Decision,
    labels: &LabelVector,
    t: &Taxonomy,
    ks: &[usize],
    name: &str,
) -> Result<EvalReport, CliError> {
    let input = match decision {
        Decision::Scores(m) => EvalInput::Scores(m),
        Decision::Ranking(r) => EvalInput::Ranking(r),
    };
    Ok(eval_report(input, labels, t, ks, name)?)
}

fn table_header(ks: &[usize]) -> String {
    let mut s = String::from("method\ttop1_err\tseverity");
    for k in ks {
        s.push_str(&format!("\thd@{k}"));
    }
    s
}

fn table_row(r: &EvalReport) -> String {
    let severity = r
        .avg_mistake_severity
        .map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
    let mut s = format!("{}\t{:.6}\t{severity}", r.method, r.top1_error());
    for v in r.hier_dist_at_k.values() {
        s.push_str(&format!("\t{v:.6}"));
    }
    s
}

pub fn validate(hierarchy: &Path) -> Result<(), CliError> {
    let t = load_hierarchy(hierarchy)?;
    println!(
        "nodes={} leaves={} coarse={} depth={} leveled={}",
        t.node_count(),
        t.leaf_count(),
        t.coarse_count(),
        t.max_depth(),
        if t.is_leveled() { "yes" } else { "no" }
    );
    Ok(())
}

pub fn infer(a: &ScoreInputs, method: Method, out: &Path) -> Result<(), CliError> {
    let inp = Inputs::load(a)?;
    let t = &inp.taxonomy;
    let (decision, _) = apply(method, &inp)?;
    match &decision {
        Decision::Scores(m) => {
            write_scores(m, &with_suffix(out, ".scores.csv"))?;
            write_labels(&top_k(m, 1)?.top1(), t, out)?;
        }
        Decision::Ranking(r) => {
            write_ranking(r, t, &with_suffix(out, ".ranking.csv"))?;
            write_labels(&r.top1(), t, out)?;
        }
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let ks = match &a.k {
        Some(k) => parse_ks(k)?,
        None if a.predictions.is_some() => vec![1],
        None => DEFAULT_KS.to_vec(),
    };
    let t = load_hierarchy(&a.inputs.hierarchy)?;
    let labels = load_labels(&a.labels, &t)?;
    let mut digests = BTreeMap::new();
    digests.insert("hierarchy".to_string(), file_digest(&a.inputs.hierarchy)?);
    digests.insert("labels".to_string(), file_digest(&a.labels)?);

    let (decision, levels, default_name) = if let Some(method) = a.method {
        let mut inp = Inputs::load(&a.inputs)?;
        inp.digests.extend(digests);
        let (d, levels) = apply(method, &inp)?;
        digests = inp.digests_for(method);
        (d, levels, method.name().to_string())
    } else if let Some(p) = &a.scores {
        digests.insert("scores".into(), file_digest(p)?);
        let m = load_scores(p, declared_kind(a.inputs.kind))?;
        (
            Decision::Scores(align_columns(&m, &t, AlignLevel::Leaf)?),
            Vec::new(),
            "scores".into(),
        )
    } else if let Some(p) = &a.ranking {
        digests.insert("ranking".into(), file_digest(p)?);
        (
            Decision::Ranking(load_ranking(p, &t)?),
            Vec::new(),
            "ranking".into(),
        )
    } else {
        let p = a.predictions.as_ref().expect("clap requires one source");
        digests.insert("predictions".into(), file_digest(p)?);
        let pred = load_labels(p, &t)?;
        let ranking = Ranking::new(pred.len(), 1, pred.as_slice().to_vec())?;
        (Decision::Ranking(ranking), Vec::new(), "predictions".into())
    };
    let name = a.name.clone().unwrap_or(default_name);
    let report = evaluate(&decision, &labels, &t, &ks, &name)?;
    println!("{}", table_row(&report));
    write_reports(
        &[ReportFile {
            config: RunEcho {
                method: name,
                levels,
                ks,
                input_digests: digests,
            },
            report,
        }],
        &a.out,
    )?;
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let mut methods = Vec::new();
    for part in a.methods.split(',') {
        let m =
            Method::from_str(part.trim(), false).map_err(|e| usage(format!("--methods: {e}")))?;
        if methods.contains(&m) {
            return Err(CliError::DuplicateMethod(m.name().into()));
        }
        methods.push(m);
    }
    let ks = parse_ks(&a.k)?;
    let mut inp = Inputs::load(&a.inputs)?;
    for &m in &methods {
        inp.require(m)?;
    }
    let labels = load_labels(&a.labels, &inp.taxonomy)?;
    inp.digests.insert("labels".into(), file_digest(&a.labels)?);

    let mut reports = Vec::with_capacity(methods.len());
    for &m in &methods {
        let (decision, levels) = apply(m, &inp)?;
        let report = evaluate(&decision, &labels, &inp.taxonomy, &ks, m.name())?;
        reports.push(ReportFile {
            config: RunEcho {
                method: m.name().into(),
                levels,
                ks: ks.clone(),
                input_digests: inp.digests_for(m),
            },
            report,
        });
    }
    println!("{}", table_header(&ks));
    for r in &reports {
        println!("{}", table_row(&r.report));
    }
    write_reports(&reports, &a.out)?;
    Ok(())
}

pub fn costs(hierarchy: &Path, out: &Path) -> Result<(), CliError> {
    let t = load_hierarchy(hierarchy)?;
    let c = t.cost_matrix();
    let values = c.values().iter().map(|&v| f64::from(v)).collect();
    let m = ScoreMatrix::new(
        c.side(),
        c.side(),
        values,
        ScoreKind::Logits,
        t.leaf_names(),
    )?;
    match ScoreFormat::from_path(out) {
        ScoreFormat::Binary => write_scores(&m, out)?,
        ScoreFormat::Text => write_atomic(out, format_scores_text(&m, false).as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SynthEcho<'a> {
    #[serde(flatten)]
    config: &'a SynthConfig,
    logit_margin: f64,
    rng_algorithm: &'a str,
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        branching: parse_list(&a.branching, "--branching")?,
        n_samples: a.samples,
        noise: parse_list(&a.noise, "--noise")?,
        seed: a.seed,
    };
    let inst = gen_instance(&cfg)?;
    fs::create_dir_all(&a.out).map_err(|source| DataError::Io {
        path: a.out.clone(),
        source,
    })?;
    let ext = match a.format {
        Format::Text => "csv",
        Format::Binary => "hies",
    };
    write_hierarchy(&inst.taxonomy, &a.out.join("hierarchy.json"))?;
    write_labels(
        inst.labels.as_slice(),
        &inst.taxonomy,
        &a.out.join("labels.txt"),
    )?;
    write_scores(&inst.fine, &a.out.join(format!("fine.{ext}")))?;
    for (d, m) in &inst.uppers {
        write_scores(m, &a.out.join(format!("level{d}.{ext}")))?;
    }
    let echo = SynthEcho {
        config: &cfg,
        logit_margin: LOGIT_MARGIN,
        rng_algorithm: RNG_ALGORITHM,
    };
    let mut text = serde_json::to_string_pretty(&echo).expect("config serializes");
    text.push('\n');
    write_atomic(&a.out.join("config.json"), text.as_bytes())?;
    Ok(())
}
