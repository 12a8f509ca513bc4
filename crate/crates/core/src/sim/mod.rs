// SPDX-License-Identifier: Apache-2.0

//! Deterministic experiment harness over both datapaths.

mod clock;
mod config;
mod datapath;
mod experiments;
mod series;

pub use clock::VirtualClock;
pub use config::{DatapathKind, ExperimentConfig, ExperimentError, ProbeKind};
pub use datapath::{
    build_datapath, build_emulation_map, Datapath, EdtDatapath, Ingest, NetemDatapath, PROBE_DST,
    PROBE_SRC,
};
pub use experiments::{
    run_accuracy_experiment, run_bulk_load_benchmark, run_config_benchmark, run_latency_probe,
    run_throughput_flow, simulate_flow, sweep_counts, transmission_time, AccuracyRun, ConfigBench,
    FlowRun, FlowStats, LoadTiming, PROBE_INTERVAL_NS, PROBE_LENGTH, PROBE_PHASE_WINDOW_NS,
    STEADY_STATE_BINS,
};
pub use series::{write_csv, Metric, SampleSeries, SeriesPoint, Summary, CSV_HEADER};
