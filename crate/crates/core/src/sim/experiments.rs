// SPDX-License-Identifier: Apache-2.0

//! Experiment drivers. Latency and throughput runs are pure functions of
//! their configuration and execute in virtual time; bulk-load benchmarks
//! can optionally be timed against the wall clock.

use std::collections::{HashMap, VecDeque};
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edt::Packet;
use crate::map::{EmulationMap, LoadReport, DEFAULT_CAPACITY};
use crate::netem::{CostModel, FilterChain};
use crate::params::{KeyMode, LinkParams, LinkSpec, NANOS_PER_SEC};
use crate::topology::{build_full_mesh, mesh_link_count, synthetic_address};

use super::clock::VirtualClock;
use super::config::{DatapathKind, ExperimentConfig, ExperimentError, ProbeKind};
use super::datapath::{build_datapath, PROBE_DST, PROBE_SRC};
use super::series::{Metric, SampleSeries, SeriesPoint};

/// One ping per virtual second.
pub const PROBE_INTERVAL_NS: u64 = NANOS_PER_SEC;
/// Probes are sent at a random offset within this window of each interval.
pub const PROBE_PHASE_WINDOW_NS: u64 = 1_000_000;
/// ICMP echo request with the default 56-byte payload.
pub const PROBE_LENGTH: u32 = 84;
/// Throughput is binned per virtual second; the steady state is the mean of
/// the last bins.
pub const STEADY_STATE_BINS: usize = 10;

fn point(cfg: &ExperimentConfig, samples: Vec<f64>) -> SeriesPoint {
    SeriesPoint {
        param_count: cfg.entry_count,
        match_index: cfg.match_index,
        samples,
    }
}

/// Pings [`PROBE_DST`] once per virtual second for the configured duration.
///
/// Each probe crosses the device under test once: RTT is the baseline plus
/// the time between sending and leaving the datapath (classification cost,
/// any shaping and the emulated one-way latency).
pub fn run_latency_probe(cfg: &ExperimentConfig) -> Result<SampleSeries, ExperimentError> {
    cfg.validate()?;
    let reps = (cfg.duration_ns / PROBE_INTERVAL_NS).max(1) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let send_times: Vec<u64> = (0..reps as u64)
        .map(|i| i * PROBE_INTERVAL_NS + rng.gen_range(0..PROBE_PHASE_WINDOW_NS))
        .collect();
    let jitter = cfg.baseline_jitter_ns as i64;
    let baselines: Vec<u64> = (0..reps)
        .map(|_| {
            let j = if jitter > 0 {
                rng.gen_range(-jitter..=jitter)
            } else {
                0
            };
            cfg.baseline_rtt_ns
                .checked_add_signed(j)
                .expect("jitter bounded by baseline")
        })
        .collect();

    let mut dp = build_datapath(cfg, cfg.datapath);
    let mut clock = VirtualClock::new();
    let mut in_flight: HashMap<u64, (u64, u64)> = HashMap::new();
    let mut rtts = vec![0.0; reps];
    let mut released = Vec::new();
    let mut next_probe = 0usize;

    loop {
        let probe_at = send_times.get(next_probe).copied();
        let release_at = dp.next_release().map(|t| t.max(clock.now()));
        let release_first = match (probe_at, release_at) {
            (None, None) => break,
            (Some(_), None) => false,
            (None, Some(_)) => true,
            (Some(p), Some(r)) => r <= p,
        };

        if release_first {
            let t = release_at.expect("checked");
            clock.advance_to(t);
            dp.release_into(t, &mut released);
            for p in released.drain(..) {
                let (sent, ready) = in_flight.remove(&p.id).expect("probe was sent");
                let left = t.max(ready);
                rtts[p.id as usize] = (baselines[p.id as usize] + (left - sent)) as f64;
            }
        } else {
            let sent = probe_at.expect("checked");
            clock.advance_to(sent);
            let id = next_probe as u64;
            let ingest = dp.ingest(
                Packet::new(id, PROBE_SRC, PROBE_DST, PROBE_LENGTH, sent),
                sent,
            );
            let ready = sent + ingest.cost_ns;
            if ingest.forwarded.is_some() {
                rtts[next_probe] = (baselines[next_probe] + (ready - sent)) as f64;
            } else {
                in_flight.insert(id, (sent, ready));
            }
            next_probe += 1;
        }
    }

    Ok(
        SampleSeries::new("latency", cfg.datapath, Metric::RttNs, "ns")
            .with_point(point(cfg, rtts)),
    )
}

/// Packet accounting for a throughput run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlowStats {
    /// Packets handed to the datapath by the sender.
    pub offered: u64,
    /// Packets that started transmission on the wire.
    pub transmitted: u64,
    /// Packets still held by the datapath's release queue.
    pub queued_in_datapath: u64,
    /// Released packets still waiting for the wire.
    pub awaiting_wire: u64,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    /// Bytes delivered per virtual second.
    pub series: SampleSeries,
    pub stats: FlowStats,
    /// Mean over the last [`STEADY_STATE_BINS`] seconds, bytes per second.
    pub steady_state_bps: f64,
}

/// Wire time of one packet at `line_rate` bytes per second, rounded up.
pub fn transmission_time(length: u32, line_rate: u64) -> u64 {
    (length as u128 * NANOS_PER_SEC as u128).div_ceil(line_rate as u128) as u64
}

/// Saturating sender through one datapath onto a line-rate link.
///
/// The device is a single server: classifying a packet costs the datapath's
/// per-packet cost, transmitting one costs its wire time, and released
/// packets are transmitted before new ones are classified. The sender keeps
/// up to `queue_limit` packets inside the device and otherwise waits.
pub fn simulate_flow(cfg: &ExperimentConfig) -> Result<FlowRun, ExperimentError> {
    cfg.validate()?;
    let bins = (cfg.duration_ns / NANOS_PER_SEC) as usize;
    if bins == 0 {
        return Err(ExperimentError::Invalid(
            "throughput runs need at least one virtual second",
        ));
    }
    let end = bins as u64 * NANOS_PER_SEC;
    let tx = transmission_time(cfg.packet_length, cfg.line_rate);

    let mut dp = build_datapath(cfg, cfg.datapath);
    let mut clock = VirtualClock::new();
    let mut bytes = vec![0u64; bins];
    let mut wire: VecDeque<Packet> = VecDeque::new();
    let mut released = Vec::new();
    let mut in_device = 0usize;
    let mut stats = FlowStats::default();

    while clock.now() < end {
        let t = clock.now();
        dp.release_into(t, &mut released);
        wire.extend(released.drain(..));

        if let Some(_packet) = wire.pop_front() {
            let done = t + tx;
            in_device -= 1;
            stats.transmitted += 1;
            if done < end {
                bytes[(done / NANOS_PER_SEC) as usize] += cfg.packet_length as u64;
            }
            clock.advance_to(done);
        } else if in_device < cfg.queue_limit {
            let packet = Packet::new(stats.offered, PROBE_SRC, PROBE_DST, cfg.packet_length, t);
            stats.offered += 1;
            in_device += 1;
            let ingest = dp.ingest(packet, t);
            if let Some(p) = ingest.forwarded {
                wire.push_back(p);
            }
            clock.advance_by(ingest.cost_ns);
        } else {
            let next = dp
                .next_release()
                .expect("device full with nothing on the wire means packets are queued");
            debug_assert!(next > t);
            clock.advance_to(next.min(end));
        }
    }

    stats.queued_in_datapath = dp.queued() as u64;
    stats.awaiting_wire = wire.len() as u64;

    let samples: Vec<f64> = bytes.iter().map(|&b| b as f64).collect();
    let point = point(cfg, samples);
    let steady_state_bps = point.tail_mean(STEADY_STATE_BINS);
    Ok(FlowRun {
        series: SampleSeries::new("throughput", cfg.datapath, Metric::ThroughputBps, "B/s")
            .with_point(point),
        stats,
        steady_state_bps,
    })
}

pub fn run_throughput_flow(cfg: &ExperimentConfig) -> Result<SampleSeries, ExperimentError> {
    simulate_flow(cfg).map(|run| run.series)
}

/// Runs `experiment` once per entry count and merges the points.
pub fn sweep_counts(
    cfg: &ExperimentConfig,
    counts: &[usize],
    experiment: impl Fn(&ExperimentConfig) -> Result<SampleSeries, ExperimentError>,
) -> Result<SampleSeries, ExperimentError> {
    let mut merged: Option<SampleSeries> = None;
    for &count in counts {
        let run = experiment(&ExperimentConfig {
            entry_count: count,
            ..cfg.clone()
        })?;
        match merged.as_mut() {
            Some(m) => m.extend(run),
            None => merged = Some(run),
        }
    }
    merged.ok_or(ExperimentError::Invalid("no entry counts given"))
}

/// How bulk-load times are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadTiming {
    /// Charge [`CostModel::per_map_update_ns`] per entry; reproducible.
    #[default]
    Modeled,
    /// Measure the real map load.
    WallClock,
}

#[derive(Debug, Clone)]
pub struct ConfigBench {
    /// Per-link attach times (filter chain) or per-entry load times per
    /// load chunk (map).
    pub per_item: SampleSeries,
    /// Single-sample series holding the total.
    pub total: SampleSeries,
    /// The real load report, for map benchmarks.
    pub load: Option<LoadReport>,
}

/// Configures every link of an `n`-node full mesh.
pub fn run_config_benchmark(
    n_processes: usize,
    datapath: DatapathKind,
    model: &CostModel,
    timing: LoadTiming,
) -> Result<ConfigBench, ExperimentError> {
    if n_processes < 2 {
        return Err(ExperimentError::Invalid(
            "a mesh needs at least 2 processes",
        ));
    }
    let links = mesh_link_count(n_processes);
    match datapath {
        DatapathKind::FilterChain => {
            let built = FilterChain::build(links, model);
            let total: f64 = built.per_link_times.iter().map(|&t| t as f64).sum();
            let per_item = SampleSeries::new("config", datapath, Metric::ConfigTimeNs, "ns")
                .with_point(SeriesPoint {
                    param_count: links,
                    match_index: None,
                    samples: built.per_link_times.iter().map(|&t| t as f64).collect(),
                });
            let total = SampleSeries::new("config_total", datapath, Metric::ConfigTimeNs, "ns")
                .with_point(SeriesPoint {
                    param_count: links,
                    match_index: None,
                    samples: vec![total],
                });
            Ok(ConfigBench {
                per_item,
                total,
                load: None,
            })
        }
        DatapathKind::EdtMap => {
            let addresses: Vec<Ipv4Addr> = (0..n_processes).map(synthetic_address).collect();
            let specs = build_full_mesh(&addresses, LinkParams::with_latency(0))
                .expect("synthetic addresses are distinct");
            let map = EmulationMap::with_capacity(KeyMode::Pair, links.max(DEFAULT_CAPACITY));
            map_load_bench(map, &specs, model, timing)
        }
    }
}

/// Loads `count` destination entries into a fresh map.
pub fn run_bulk_load_benchmark(
    count: usize,
    model: &CostModel,
    timing: LoadTiming,
) -> Result<ConfigBench, ExperimentError> {
    let specs: Vec<LinkSpec> = (0..count)
        .map(|k| {
            LinkSpec::new(PROBE_SRC, synthetic_address(k), LinkParams::with_latency(0))
                .expect("synthetic addresses never equal the source")
        })
        .collect();
    let map = EmulationMap::with_capacity(KeyMode::Destination, count.max(DEFAULT_CAPACITY));
    map_load_bench(map, &specs, model, timing)
}

fn map_load_bench(
    mut map: EmulationMap,
    specs: &[LinkSpec],
    model: &CostModel,
    timing: LoadTiming,
) -> Result<ConfigBench, ExperimentError> {
    let report = map
        .bulk_load(specs)
        .map_err(|_| ExperimentError::Invalid("map capacity too small for the benchmark"))?;
    let (per_entry, total): (Vec<f64>, f64) = match timing {
        LoadTiming::WallClock => (
            report.chunks.iter().map(|c| c.per_entry_ns()).collect(),
            report.elapsed_ns as f64,
        ),
        LoadTiming::Modeled => (
            report
                .chunks
                .iter()
                .map(|_| model.per_map_update_ns as f64)
                .collect(),
            (model.per_map_update_ns * specs.len() as u64) as f64,
        ),
    };
    let count = report.entry_count;
    let kind = DatapathKind::EdtMap;
    Ok(ConfigBench {
        per_item: SampleSeries::new("config", kind, Metric::LoadTimeNs, "ns/entry").with_point(
            SeriesPoint {
                param_count: count,
                match_index: None,
                samples: per_entry,
            },
        ),
        total: SampleSeries::new("config_total", kind, Metric::LoadTimeNs, "ns").with_point(
            SeriesPoint {
                param_count: count,
                match_index: None,
                samples: vec![total],
            },
        ),
        load: Some(report),
    })
}

#[derive(Debug, Clone)]
pub struct AccuracyRun {
    pub edt: SampleSeries,
    pub netem: SampleSeries,
}

/// Runs the same single-link emulation over both datapaths. Rate-limited
/// parameters are measured with a throughput flow, delay-only parameters
/// with latency probes.
pub fn run_accuracy_experiment(cfg: &ExperimentConfig) -> Result<AccuracyRun, ExperimentError> {
    let emulated = cfg.emulated.ok_or(ExperimentError::MissingEmulation)?;
    let probe = if emulated.rate().is_some() {
        ProbeKind::ThroughputFlow
    } else {
        ProbeKind::LatencyProbe
    };
    let run = |datapath| {
        let single = ExperimentConfig {
            datapath,
            entry_count: 1,
            match_index: Some(0),
            probe,
            ..cfg.clone()
        };
        let mut series = match probe {
            ProbeKind::ThroughputFlow => run_throughput_flow(&single)?,
            _ => run_latency_probe(&single)?,
        };
        series.experiment = "accuracy".to_string();
        Ok::<_, ExperimentError>(series)
    };
    Ok(AccuracyRun {
        edt: run(DatapathKind::EdtMap)?,
        netem: run(DatapathKind::FilterChain)?,
    })
}
