//! Command-line front end for the `word2rate` library.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a runtime error.

mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::Parser;

use args::{
    BuildVocabArgs, Cli, Command, ExportArgs, GradcheckArgs, NeighborsArgs, ProbeArgs, ProbeKind,
    StabilityArgs, SynthArgs, TrainArgs,
};
use word2rate::analysis::{
    generate_synthetic_corpus, length_probe, nearest_neighbors, order_probe, stability_curve,
    GrammarSpec, ProbeResult,
};
use word2rate::corpus::{build_vocabulary, read_corpus, LengthBounds};
use word2rate::persistence::{
    export_text_vectors, load_checkpoint, save_checkpoint, write_stability_csv,
};
use word2rate::rng::{derive_seed, seeded};
use word2rate::trainer::gradcheck::{gradient_check, GradCheckConfig};
use word2rate::trainer::{train_with_progress, Mode, TrainConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::BuildVocab(a) => build_vocab(a),
        Command::Train(a) => train(a),
        Command::Export(a) => export(a),
        Command::Neighbors(a) => neighbors(a),
        Command::Stability(a) => stability(a),
        Command::Probe(a) => probe(a),
        Command::Synth(a) => synth(a),
        Command::Gradcheck(a) => return gradcheck(a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn build_vocab(a: BuildVocabArgs) -> Result<()> {
    let bounds = LengthBounds::new(a.lengths.min_len, a.lengths.max_len)?;
    let sentences = read_corpus(&a.corpus)?;
    let vocab = build_vocabulary(&sentences, a.min_count, bounds)?;
    vocab.save_tsv(&a.output)?;
    eprintln!("words={} output={}", vocab.len(), a.output.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mode = Mode::from(a.mode);
    let config = TrainConfig {
        mode,
        dim: a.dim.unwrap_or(mode.default_dim()),
        epsilon: a.epsilon.unwrap_or(mode.default_epsilon()),
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        window: a.window,
        negatives: a.negatives,
        lr_split: a.lr_split,
        seed: a.seed,
        neg_exponent: a.neg_exponent,
        min_count: a.min_count,
        length_bounds: LengthBounds::new(a.lengths.min_len, a.lengths.max_len)?,
        target_policy: a.targets.into(),
        threads: a.threads,
    };
    config.validate()?;
    let sentences = read_corpus(&a.corpus)?;
    let quiet = a.quiet;
    let out = train_with_progress(&sentences, &config, |e| {
        if !quiet {
            eprintln!("epoch={} loss={} examples={}", e.epoch, e.mean_loss, e.examples);
        }
    })?;
    save_checkpoint(&out.bank, Some(&out.adam), &config, &out.vocab, &a.output)?;
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let c = load_checkpoint(&a.checkpoint)?;
    export_text_vectors(&c.bank, c.config.epsilon, &c.vocab, &a.output, a.which.into())?;
    Ok(())
}

fn neighbors(a: NeighborsArgs) -> Result<()> {
    let c = load_checkpoint(&a.checkpoint)?;
    let Some(id) = c.vocab.id(&a.word) else {
        bail!("{:?} is not in the vocabulary", a.word);
    };
    let mut out = io::stdout().lock();
    for (other, cos) in nearest_neighbors(&c.bank, c.config.epsilon, id, a.top_k)? {
        let token = c.vocab.token(other).expect("neighbor ids come from the bank");
        writeln!(out, "{token}\t{cos}")?;
    }
    Ok(())
}

fn stability(a: StabilityArgs) -> Result<()> {
    let seeds: Vec<u64> = (a.seed..a.seed + a.seeds).collect();
    let records = stability_curve(a.dim, &a.epsilons, a.max_len, &seeds, a.draw.into())?;
    match &a.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            write_stability_csv(&mut out, &records)?;
            out.flush()?;
        }
        None => write_stability_csv(io::stdout().lock(), &records)?,
    }
    Ok(())
}

fn probe(a: ProbeArgs) -> Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let c = load_checkpoint(&a.checkpoint)?;
    let bounds = LengthBounds::new(
        a.min_len.unwrap_or(c.config.length_bounds.min),
        a.max_len.unwrap_or(c.config.length_bounds.max),
    )?;
    let sentences: Vec<Vec<usize>> = read_corpus(&a.corpus)?
        .iter()
        .filter_map(|s| c.vocab.encode(s, bounds))
        .collect();
    let mut accuracy = 0.0;
    let mut baseline = 0.0;
    for i in 0..a.seeds {
        let mut rng = seeded(derive_seed(a.seed, &[i as u64]));
        let r = match a.probe {
            ProbeKind::Bshift => order_probe(&c.bank, c.config.epsilon, &sentences, &mut rng)?,
            ProbeKind::Length => length_probe(&c.bank, c.config.epsilon, &sentences, &mut rng)?,
        };
        accuracy += r.accuracy / a.seeds as f64;
        baseline += r.baseline / a.seeds as f64;
    }
    let result = ProbeResult {
        probe: match a.probe {
            ProbeKind::Bshift => "bshift",
            ProbeKind::Length => "length",
        }
        .into(),
        mode: c.config.mode.name().into(),
        accuracy,
        baseline,
        seeds: a.seeds,
    };
    println!("{}", result.to_json_line());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = GrammarSpec {
        sentences: a.sentences,
        ..GrammarSpec::with_seed(a.seed)
    };
    let corpus = generate_synthetic_corpus(&spec)?;
    let file = File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut out = BufWriter::new(file);
    for line in &corpus {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<ExitCode> {
    let modes: Vec<Mode> = match a.mode {
        Some(m) => vec![m.into()],
        None => Mode::ALL.to_vec(),
    };
    let splits: &[bool] = match (a.lr_split, a.joint) {
        (true, _) => &[true],
        (_, true) => &[false],
        _ => &[false, true],
    };
    let mut all_passed = true;
    for &mode in &modes {
        for &lr_split in splits {
            let check = GradCheckConfig {
                dim: a.dim,
                window: a.window,
                negatives: a.negatives,
                instances: a.instances,
                tolerance: a.tolerance,
                seed: a.seed,
                ..GradCheckConfig::new(mode, lr_split)
            };
            let r = gradient_check(&check)?;
            all_passed &= r.passed();
            println!(
                "{} mode={} objective={} dim={} coordinates={} max_rel_error={:.3e} failures={}",
                if r.passed() { "PASS" } else { "FAIL" },
                r.mode,
                if r.lr_split { "split" } else { "joint" },
                r.dim,
                r.coordinates,
                r.max_rel_error,
                r.failures,
            );
        }
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
