use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Baseline, Cli, Command, CurveArgs, EmbedArgs, EvalArgs, ExplainArgs, GenArgs, LayerArg, TrainArgs, AffinityArg};
use crate::baselines::{confusion, knn_predict_all, svm_train, EvalReport, SvmConfig};
use crate::dataset::{class_stats, generate_synthetic, load_csv_with, save_csv, CsvOptions, Dataset, MinMax, Split, SynthConfig};
use crate::embedding::{embed, extract_last_hidden, raw_inputs, Affinity, TsneConfig};
use crate::error::{CsixError, Result};
use crate::lrp::{explain, RelevanceExport};
use crate::manipulation::{progressive_curve, CurveSpec, Mode};
use crate::mlp::{init_random, layer_dims, load_model, predict, save_model, NetworkParams, TrainConfig};
use crate::report::{render_curve, render_heatmap, render_scatter, render_subcarrier_heatmap};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Embed(a) => embed_cmd(a),
        Command::Curve(a) => curve(a),
        Command::Explain(a) => explain_cmd(a),
    }
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CsixError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, &text)
}

/// 1-based CLI class to zero-based, checked against the model.
fn class_arg(value: usize, model: &NetworkParams, flag: &str) -> Result<usize> {
    if value == 0 || value > model.classes() {
        return Err(CsixError::Config(format!(
            "--{flag} {value} is outside 1..={}",
            model.classes()
        )));
    }
    Ok(value - 1)
}

fn load_for_model(path: &Path, model: &NetworkParams) -> Result<Dataset> {
    let data = load_csv_with(
        path,
        CsvOptions {
            locations: Some(model.classes()),
            antenna_pairs: None,
        },
    )?;
    if data.channels() != model.input_dim() {
        return Err(CsixError::DimensionMismatch {
            expected: model.input_dim(),
            got: data.channels(),
        });
    }
    match &model.input_scaling {
        Some(scaler) => scaler.apply(&data),
        None => Ok(data),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => SynthConfig::from_json_file(path)?,
        None => SynthConfig::default(),
    };
    let (train, test) = generate_synthetic(&config)?;
    fs::create_dir_all(&args.out).map_err(|e| CsixError::io(&args.out, e))?;
    save_csv(&train, args.out.join("train.csv"))?;
    save_csv(&test, args.out.join("test.csv"))?;
    println!("location,train,test");
    for m in 1..=train.locations() {
        println!(
            "p{m},{},{}",
            train.of_location(m).count(),
            test.of_location(m).count()
        );
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut data = load_csv_with(&args.train, CsvOptions::default())?;
    let scaler = args.min_max.then(|| MinMax::fit(&data));
    if let Some(scaler) = &scaler {
        data = scaler.apply(&data)?;
    }
    if args.hidden.iter().any(|&h| h == 0) {
        return Err(CsixError::Config("hidden layer widths must be positive".into()));
    }
    let config = TrainConfig {
        backprop_iters: args.iters,
        pretrain_iters: args.pretrain,
        learning_rate: args.lr,
        batch_size: args.batch,
        seed: args.seed,
        init: args.init.into(),
    };
    let dims = layer_dims(data.channels(), &args.hidden, data.locations());
    let mut initial = init_random(&dims, config.seed, config.init)?;
    initial.input_scaling = scaler;
    let (model, history) = crate::mlp::train(&initial, &data, &config)?;
    save_model(&model, &args.model)?;

    let log = args
        .loss_log
        .unwrap_or_else(|| args.model.with_extension("loss.csv"));
    let mut text = String::from("epoch,loss\n");
    for (i, loss) in history.iter().enumerate() {
        text.push_str(&format!("{},{loss:.12e}\n", i + 1));
    }
    write(&log, &text)?;

    let correct = data
        .samples()
        .iter()
        .map(|s| predict(&model, &s.channels).map(|p| usize::from(p == s.class())))
        .sum::<Result<usize>>()?;
    println!(
        "dims {:?}, {} epochs, final loss {}, training accuracy {:.2}%",
        dims,
        history.len(),
        history.last().map_or("n/a".into(), |l| format!("{l:.6}")),
        100.0 * correct as f64 / data.len() as f64
    );
    Ok(())
}

#[derive(Serialize)]
struct Report {
    classes: usize,
    samples: usize,
    schemes: Vec<EvalReport>,
}

fn eval(args: EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let test = load_for_model(&args.test, &model)?;
    let baselines = args
        .baselines
        .iter()
        .map(|b| b.parse::<Baseline>())
        .collect::<Result<Vec<_>>>()?;
    let train = match (&args.train, baselines.is_empty()) {
        (Some(path), _) => Some(load_for_model(path, &model)?),
        (None, false) => {
            return Err(CsixError::Config("--baseline needs --train".into()));
        }
        (None, true) => None,
    };
    let labels = test.labels();
    let classes = model.classes();
    let names = test.location_names().to_vec();

    let preds = test
        .samples()
        .iter()
        .map(|s| predict(&model, &s.channels))
        .collect::<Result<Vec<_>>>()?;
    let mut schemes = vec![EvalReport::new("dnn", &confusion(&preds, &labels, classes)?, &names)?];
    for b in &baselines {
        let train = train.as_ref().expect("checked above");
        let preds = match b {
            Baseline::Knn { k } => knn_predict_all(train, &test, *k)?,
            Baseline::Svm { gamma, c } => {
                let cfg = SvmConfig {
                    gamma: *gamma,
                    c: *c,
                    ..SvmConfig::default()
                };
                svm_train(train, &cfg)?.predict_all(&test)?
            }
        };
        schemes.push(EvalReport::new(&b.scheme(), &confusion(&preds, &labels, classes)?, &names)?);
    }
    for s in &schemes {
        println!(
            "{}: accuracy {:.2}%, macro precision {:.2}%, macro recall {:.2}%, F1 {:.2}%",
            s.scheme, s.accuracy_pct, s.macro_precision_pct, s.macro_recall_pct, s.f1_pct
        );
    }
    write_json(
        &args.report,
        &Report {
            classes,
            samples: test.len(),
            schemes,
        },
    )
}

fn embed_cmd(args: EmbedArgs) -> Result<()> {
    let model = match (&args.model, args.layer) {
        (Some(path), _) => Some(load_model(path)?),
        (None, LayerArg::LastHidden) => {
            return Err(CsixError::Config("--layer last-hidden needs --model".into()));
        }
        (None, LayerArg::Input) => None,
    };
    let opts = CsvOptions {
        locations: model.as_ref().map(NetworkParams::classes),
        antenna_pairs: None,
    };
    let mut data: Option<Dataset> = None;
    for path in &args.data {
        let part = load_csv_with(path, opts)?;
        data = Some(match data {
            Some(d) => d.concat(&part)?,
            None => part,
        });
    }
    let mut data = data.expect("clap requires at least one --data");
    if let Some(scaler) = model.as_ref().and_then(|m| m.input_scaling.as_ref()) {
        data = scaler.apply(&data)?;
    }
    let rows = match (args.layer, &model) {
        (LayerArg::LastHidden, Some(m)) => extract_last_hidden(m, &data)?,
        _ => raw_inputs(&data),
    };
    let config = TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iters,
        seed: args.seed,
        affinity: match args.affinity {
            AffinityArg::Perplexity => Affinity::Perplexity,
            AffinityArg::FixedBandwidth => Affinity::FixedBandwidth,
        },
        ..TsneConfig::default()
    };
    let embedding = embed(&rows, &data, &config)?;
    let split: Split = args.silhouette_on.into();
    render_scatter(&embedding, split, data.location_names()).save(with_suffix(&args.out, "svg"))?;
    embedding.save_csv(with_suffix(&args.out, "csv"))?;
    let score = embedding
        .silhouette_on(split)
        .map_or_else(|_| "n/a".to_string(), |s| format!("{s:.4}"));
    println!(
        "{} points, KL {:.4} -> {:.4}, silhouette ({split}) {score}",
        embedding.len(),
        embedding.initial_kl,
        embedding.final_kl
    );
    Ok(())
}

fn curve(args: CurveArgs) -> Result<()> {
    let mode: Mode = args.mode.into();
    if mode == Mode::Modify && args.stats_from.is_none() {
        return Err(CsixError::Config("--mode modify requires --stats-from".into()));
    }
    let model = load_model(&args.model)?;
    let spec = CurveSpec {
        true_class: class_arg(args.true_class, &model, "true")?,
        target_class: class_arg(args.target, &model, "target")?,
        kind: args.kind,
        mode,
        granularity: args.granularity.into(),
        source: args.ordering_source.into(),
    };
    let test = load_for_model(&args.test, &model)?;
    let stats = match &args.stats_from {
        Some(path) => Some(class_stats(&load_for_model(path, &model)?)?),
        None => None,
    };
    let curve = progressive_curve(&model, &test, &spec, stats.as_ref())?;
    curve.save_csv(with_suffix(&args.out, "csv"))?;
    render_curve(std::slice::from_ref(&curve))?.save(with_suffix(&args.out, "svg"))?;
    let last = curve.points.last().expect("t = 0 is always present");
    println!(
        "{} samples, frac_true {:.3} -> {:.3}, frac_target {:.3} -> {:.3}, AUC(true) {:.4}",
        curve.samples,
        curve.points[0].frac_true,
        last.frac_true,
        curve.points[0].frac_target,
        last.frac_target,
        curve.auc_true()
    );
    Ok(())
}

fn explain_cmd(args: ExplainArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let n = class_arg(args.true_class, &model, "true")?;
    let m = class_arg(args.target, &model, "target")?;
    let data = load_for_model(&args.data, &model)?;
    let split: Option<Split> = args.split.map(Into::into);
    let samples: Vec<Vec<f64>> = data
        .samples()
        .iter()
        .filter(|s| s.class() == n && split.is_none_or(|sp| s.split == sp))
        .map(|s| s.channels.clone())
        .collect();
    if samples.is_empty() {
        return Err(CsixError::InvalidInput(format!(
            "no samples of location {} to explain",
            n + 1
        )));
    }
    let exports = samples
        .iter()
        .map(|x| RelevanceExport::new(&explain(&model, x, n, m)?, data.subcarriers(), data.antenna_pairs()))
        .collect::<Result<Vec<_>>>()?;
    let h_primes: Vec<Vec<f64>> = exports.iter().map(|e| e.h_prime.clone()).collect();
    let svg = if args.subcarrier {
        render_subcarrier_heatmap(&samples, &h_primes, data.subcarriers(), data.antenna_pairs(), (n, m))?
    } else {
        render_heatmap(&samples, &h_primes, (n, m))?
    };
    svg.save(with_suffix(&args.out, "svg"))?;
    write_json(&with_suffix(&args.out, "json"), &exports)?;
    println!("explained {} samples of p{} toward p{}", exports.len(), n + 1, m + 1);
    Ok(())
}
