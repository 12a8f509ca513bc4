// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use anyhow::{anyhow, Context};
use edtemu_core::sim::{
    run_accuracy_experiment, run_bulk_load_benchmark, run_config_benchmark, run_latency_probe,
    run_throughput_flow, sweep_counts, write_csv, DatapathKind, ExperimentConfig, ExperimentError,
    LoadTiming, ProbeKind, SampleSeries,
};
use edtemu_core::{
    build_full_mesh, parse_link_config, render_link_spec, CostModel, EmulationMap, LinkParams,
    ParamsError,
};

use crate::args::{
    AccuracyArgs, BenchCommand, ConfigBenchArgs, CostArgs, LinkArgs, LoadArgs, MeshArgs, SimArgs,
    SweepArgs,
};

const DEFAULT_COUNTS: [usize; 6] = [1_000, 5_000, 10_000, 20_000, 40_000, 65_000];

/// A failed invocation, split by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input from the user: flags, config grammar, invalid combinations.
    Usage(anyhow::Error),
    /// The request was valid but could not be carried out.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(anyhow!("{e}"))
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn experiment_failure(e: ExperimentError) -> Failure {
    // every experiment error stems from the requested configuration
    usage(e)
}

pub fn load(args: &LoadArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(runtime)?;
    let specs = parse_link_config(&text)
        .map_err(|e| usage(format_args!("{}: {e}", args.config.display())))?;
    let mut map = EmulationMap::with_capacity(args.key_mode.into(), args.capacity);
    let report = map.bulk_load(&specs).map_err(|e| match e {
        ParamsError::CapacityExceeded { .. } => runtime(e),
        other => usage(other),
    })?;
    println!(
        "loaded {} entries in {:.3} ms",
        report.entry_count,
        report.elapsed_ns as f64 / 1e6
    );
    Ok(())
}

pub fn mesh(args: &MeshArgs) -> Result<(), Failure> {
    if args.n < 2 {
        return Err(usage("a mesh needs at least 2 processes"));
    }
    let params = LinkParams::new(args.rate.map(|r| r.get()), args.delay).map_err(usage)?;
    let addresses: Vec<Ipv4Addr> = args.subnet.hosts().take(args.n).collect();
    if addresses.len() < args.n {
        return Err(usage(format_args!(
            "subnet {} holds only {} host addresses, {} needed",
            args.subnet,
            addresses.len(),
            args.n
        )));
    }
    let links = build_full_mesh(&addresses, params).map_err(usage)?;
    write_output(args.out.as_deref(), |out| {
        for link in &links {
            writeln!(out, "{}", render_link_spec(link))?;
        }
        Ok(())
    })
}

pub fn bench(command: &BenchCommand) -> Result<(), Failure> {
    let (series, output) = match command {
        BenchCommand::Config(args) => (bench_config(args)?, &args.output),
        BenchCommand::Latency(args) => (bench_sweep(args, ProbeKind::LatencyProbe)?, &args.output),
        BenchCommand::Throughput(args) => {
            (bench_sweep(args, ProbeKind::ThroughputFlow)?, &args.output)
        }
        BenchCommand::Accuracy(args) => (bench_accuracy(args)?, &args.output),
    };
    write_output(output.out.as_deref(), |out| {
        write_csv(&mut { out }, output.seed, &series)
    })
}

fn bench_config(args: &ConfigBenchArgs) -> Result<Vec<SampleSeries>, Failure> {
    let model = cost_model(&args.cost);
    let timing = if args.wall_clock {
        LoadTiming::WallClock
    } else {
        LoadTiming::Modeled
    };
    let bench = match args.entries {
        Some(count) => {
            if args.datapath != DatapathKind::EdtMap {
                return Err(usage(
                    "--entries is only meaningful for the edt-map datapath",
                ));
            }
            run_bulk_load_benchmark(count, &model, timing)
        }
        None => run_config_benchmark(args.n, args.datapath, &model, timing),
    }
    .map_err(experiment_failure)?;
    Ok(vec![bench.per_item, bench.total])
}

fn bench_sweep(args: &SweepArgs, probe: ProbeKind) -> Result<Vec<SampleSeries>, Failure> {
    let emulated = link_params(&args.link)?;
    let counts = match (&args.counts, emulated) {
        (Some(counts), _) => counts.clone(),
        (None, Some(_)) => vec![1],
        (None, None) => DEFAULT_COUNTS.to_vec(),
    };
    let cfg = ExperimentConfig {
        datapath: args.datapath,
        entry_count: counts.first().copied().unwrap_or(0),
        match_index: args.match_index.or(emulated.map(|_| 0)),
        emulated,
        probe,
        seed: args.output.seed,
        cost_model: cost_model(&args.cost),
        ..sim_config(&args.sim)
    };
    let series = match probe {
        ProbeKind::ThroughputFlow => sweep_counts(&cfg, &counts, run_throughput_flow),
        _ => sweep_counts(&cfg, &counts, run_latency_probe),
    }
    .map_err(experiment_failure)?;
    Ok(vec![series])
}

fn bench_accuracy(args: &AccuracyArgs) -> Result<Vec<SampleSeries>, Failure> {
    let emulated =
        link_params(&args.link)?.ok_or_else(|| usage("accuracy needs --rate and/or --delay"))?;
    let cfg = ExperimentConfig {
        emulated: Some(emulated),
        seed: args.output.seed,
        cost_model: cost_model(&args.cost),
        ..sim_config(&args.sim)
    };
    let run = run_accuracy_experiment(&cfg).map_err(experiment_failure)?;
    Ok(vec![run.edt, run.netem])
}

fn link_params(args: &LinkArgs) -> Result<Option<LinkParams>, Failure> {
    match (args.rate, args.delay) {
        (None, None) => Ok(None),
        (rate, delay) => LinkParams::new(rate.map(|r| r.get()), delay)
            .map(Some)
            .map_err(usage),
    }
}

fn sim_config(args: &SimArgs) -> ExperimentConfig {
    ExperimentConfig {
        duration_ns: args.duration,
        packet_length: args.packet_length,
        baseline_rtt_ns: args.baseline_rtt,
        baseline_jitter_ns: args.jitter,
        line_rate: args.line_rate.get(),
        queue_limit: args.queue_limit,
        throttle_mode: args.mode.into(),
        ..Default::default()
    }
}

fn cost_model(args: &CostArgs) -> CostModel {
    let d = CostModel::default();
    CostModel {
        per_filter_check_ns: args.filter_check_ns.unwrap_or(d.per_filter_check_ns),
        attach_base_ns: args.attach_base_ns.unwrap_or(d.attach_base_ns),
        attach_per_existing_ns: args
            .attach_per_existing_ns
            .unwrap_or(d.attach_per_existing_ns),
        per_map_lookup_ns: args.map_lookup_ns.unwrap_or(d.per_map_lookup_ns),
        per_map_update_ns: args.map_update_ns.unwrap_or(d.per_map_update_ns),
    }
}

fn write_output(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    let result = match path {
        Some(path) => File::create(path)
            .and_then(|file| {
                let mut out = BufWriter::new(file);
                body(&mut out)?;
                out.flush()
            })
            .with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            match body(&mut out).and_then(|()| out.flush()) {
                // the reader went away, e.g. `edtemu mesh ... | head`
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => other.context("writing standard output"),
            }
        }
    };
    result.map_err(runtime)
}
