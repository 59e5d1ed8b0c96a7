use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sogcn_core::models::{
    self, Checkpoint, EpochRecord, NetworkConfig, NetworkParams, SweepRow, TrainOptions,
};
use sogcn_core::poly::{factor_quadratics, lss_dimension, PolyFilter, RANK_TOL};
use sogcn_core::sgs::{self, Dataset, DatasetCounts, Split};
use sogcn_core::{graph_basis, spectrum_csv, Error, Result};

use crate::args::{
    Command, EvalArgs, FactorizeArgs, GenDataArgs, LssDimArgs, ModelArgs, ReplayArgs,
    ScheduleArgs, SpectrumArgs, SweepArgs, TrainArgs,
};
use crate::manifest::Manifest;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::SweepDepth(a) => sweep_depth(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Factorize(a) => factorize(a),
        Command::LssDim(a) => lss_dim(a),
        Command::Replay(a) => replay(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let counts = DatasetCounts {
        train: a.train,
        val: a.val,
        test: a.test,
    };
    let paths = sgs::generate_dataset(a.kind, counts, a.seed, &a.out)?;
    Manifest::new(Command::GenData(a)).write(paths[0].parent().expect("split file has a parent"))?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn network_config(m: &ModelArgs) -> NetworkConfig {
    NetworkConfig {
        layer: m.layer,
        depth: m.depth,
        hidden: m.hidden,
        in_channels: 1,
        out_channels: 1,
        activation: m.activation.into(),
        use_gru: m.gru,
        readout: m.readout.into(),
        embed_hidden: m.embed_hidden.clone(),
        readout_hidden: m.readout_hidden.clone(),
        bias: m.bias,
        seed: m.seed,
    }
}

fn train_options(s: &ScheduleArgs) -> TrainOptions {
    TrainOptions {
        batch_size: s.batch_size,
        learning_rate: s.lr,
        min_learning_rate: s.min_lr,
        patience: s.patience,
        max_epochs: s.epochs,
        seed: s.train_seed,
        deterministic: s.deterministic,
        ..TrainOptions::default()
    }
}

fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,lr,train_mae,val_mae\n");
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.epoch,
            fmt(r.learning_rate),
            fmt(r.train_mae),
            fmt(r.val_mae)
        );
    }
    out
}

fn train(a: TrainArgs) -> Result<()> {
    let data = Dataset::load(&a.data)?;
    let config = network_config(&a.model);
    let init = NetworkParams::init(&config)?;
    let outcome = models::train(&config, init, &data.train, &data.val, &train_options(&a.schedule))?;
    create_dir(&a.out)?;
    Checkpoint::new(config, outcome.params).save(&a.out.join("checkpoint.json"))?;
    write_file(&a.out.join("history.csv"), &history_csv(&outcome.history))?;
    println!(
        "epochs {} best_val_mae {}",
        outcome.history.len(),
        fmt(outcome.best_val_mae)
    );
    Manifest::new(Command::Train(a.clone())).write(&a.out)
}

fn eval(a: EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let samples = sgs::read_split(&a.data.join(Split::from(a.split).file_name()))?;
    let mae = models::evaluate(&ckpt.config, &ckpt.params, &samples)?;
    println!("{}", fmt(mae));
    Ok(())
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("layers,model,test_mae\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.layers, r.model, fmt(r.test_mae));
    }
    out
}

fn sweep_depth(a: SweepArgs) -> Result<()> {
    let data = Dataset::load(&a.data)?;
    let first = *a.models.first().ok_or_else(|| Error::Parameter("no models given".into()))?;
    let template = NetworkConfig::linear(first, 1, a.hidden, a.seed);
    let rows = models::sweep_depth(&template, &a.models, &a.depths, &data, &train_options(&a.schedule))?;
    create_dir(&a.out)?;
    let csv = sweep_csv(&rows);
    write_file(&a.out.join("sweep.csv"), &csv)?;
    print!("{csv}");
    Manifest::new(Command::SweepDepth(a.clone())).write(&a.out)
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let samples = sgs::read_split(&a.data.join(Split::from(a.split).file_name()))?;
    let sample = samples.get(a.index).ok_or_else(|| {
        Error::Parameter(format!("sample {} out of range ({} samples)", a.index, samples.len()))
    })?;
    let stages = models::activations(&ckpt.config, &ckpt.params, &sample.graph, &sample.x)?;
    let basis = graph_basis(&sample.graph)?;
    create_dir(&a.out)?;
    for (name, signal) in stages {
        // Graph-level outputs have no node spectrum.
        if signal.rows() != sample.graph.num_nodes() {
            continue;
        }
        let path = a.out.join(format!("{name}.csv"));
        write_file(&path, &spectrum_csv(&basis, &signal)?)?;
        println!("{}", path.display());
    }
    Manifest::new(Command::Spectrum(a.clone())).write(&a.out)
}

fn parse_coeffs(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parameter(format!("invalid coefficient {t:?}")))
        })
        .collect()
}

fn tuple(p: &PolyFilter) -> String {
    let parts: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn factorize(a: FactorizeArgs) -> Result<()> {
    let text = match (&a.coeffs, &a.file) {
        (_, Some(path)) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        (Some(c), None) => c.clone(),
        (None, None) => return Err(Error::Parameter("no coefficients given".into())),
    };
    let poly = PolyFilter::new(parse_coeffs(&text)?)?;
    let cascade = factor_quadratics(&poly, a.tol)?;
    for f in &cascade.factors {
        println!("{}", tuple(f));
    }
    println!("leading_scale {}", cascade.leading_scale);
    println!("residual {:e}", cascade.residual);
    Ok(())
}

fn lss_dim(a: LssDimArgs) -> Result<()> {
    let graphs = sgs::read_graphs(&a.graphs)?;
    println!("{}", lss_dimension(&graphs, a.order, RANK_TOL)?);
    Ok(())
}

fn with_out(command: Command, out: PathBuf) -> Result<Command> {
    Ok(match command {
        Command::GenData(a) => Command::GenData(GenDataArgs { out, ..a }),
        Command::Train(a) => Command::Train(TrainArgs { out, ..a }),
        Command::SweepDepth(a) => Command::SweepDepth(SweepArgs { out, ..a }),
        Command::Spectrum(a) => Command::Spectrum(SpectrumArgs { out, ..a }),
        _ => return Err(Error::Parameter("recorded command has no output directory".into())),
    })
}

fn replay(a: ReplayArgs) -> Result<()> {
    let manifest = Manifest::read(&a.manifest)?;
    let command = match a.out {
        Some(out) => with_out(manifest.invocation, out)?,
        None => manifest.invocation,
    };
    if let Command::Replay(_) = command {
        return Err(Error::Format("a manifest cannot record a replay".into()));
    }
    run(command)
}
