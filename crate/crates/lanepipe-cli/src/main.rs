//! `lanepipe` — drive the simulated lane-detection datapath and its
//! sensor bus from the command line.
//!
//! Three subcommands:
//!
//! * `pipeline` runs one image (PPM, PNG, or a generated synthetic
//!   road) through the cycle-accurate stream and prints a JSON run
//!   report with latency and throughput accounting.
//! * `scenario` replays brightness/temperature stimulus traces against
//!   the emulated sensors, polling them over the serial bus and logging
//!   every control decision as CSV.
//! * `trace` performs a single bus transaction, emits its event CSV,
//!   and re-validates the wire recording with the protocol checker.
//!
//! Exit codes are stable: 0 success, 1 I/O or parse trouble, 2 invalid
//! configuration or usage, 3 protocol violation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lanepipe::control::{
    light_decision, scale_brightness, tcu_step, ControlCommand, LightConfig, TcuConfig,
    temp_celsius,
};
use lanepipe::i2c::{
    check_wire, events_to_csv, inject_sda_glitch, parse_preload, ClockDividerConfig, I2cBus,
    SensorDevice, SensorKind,
};
use lanepipe::refmodel::{average_ref, diff_bytes, gray_ref, sobel_binary_ref, StageDiff};
use lanepipe::stream::StageTap;
use lanepipe::synth::random_road;
use lanepipe::{
    estimate_frame_time, pnm, CycleStats, Error, FrameGeometry, GrayWeights, LaneReport, Pipeline,
    PipelineConfig, RgbFrame, SobelConfig,
};

#[derive(Parser)]
#[command(
    name = "lanepipe",
    version,
    about = "Cycle-accurate lane-detection pipeline and sensor-bus simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an image through the streaming pipeline with cycle accounting.
    Pipeline(PipelineArgs),
    /// Replay sensor stimulus traces through the control units.
    Scenario(ScenarioArgs),
    /// Perform one bus transaction and dump its event trace.
    Trace(TraceArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Input image: binary PPM, or PNG by file extension.
    #[arg(required_unless_present = "synthetic")]
    input: Option<PathBuf>,

    /// Generate a synthetic road with this many lane boundaries instead
    /// of reading a file (seeded by LANEPIPE_SEED, default 0).
    #[arg(long, value_name = "BOUNDARIES", conflicts_with = "input")]
    synthetic: Option<u32>,

    /// Frame geometry the pipeline is configured for.
    #[arg(long, default_value = "416x416", value_name = "WxH")]
    geometry: String,

    /// Clock rate used for the frame-time estimate.
    #[arg(long, default_value_t = 150_000_000, value_name = "HZ")]
    clock_hz: u64,

    /// Edge-magnitude binarization threshold (0..=2040).
    #[arg(long, default_value_t = 100)]
    sobel_threshold: u16,

    /// Gray conversion weights; must sum to 256.
    #[arg(long, default_value = "77,150,29", value_name = "R,G,B")]
    gray_weights: String,

    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Dump a stage's output as PGM into the working directory
    /// (<stage>.pgm); repeatable.
    #[arg(long, value_enum, value_name = "STAGE")]
    dump_stage: Vec<StageName>,

    /// Include per-stage diffs against the brute-force reference.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Brightness stimulus trace: `time_ms,raw_value` rows.
    #[arg(long, value_name = "PATH")]
    lux_trace: PathBuf,

    /// Temperature stimulus trace: `time_ms,raw_value` rows, raw in the
    /// sensor's 16-bit register encoding.
    #[arg(long, value_name = "PATH")]
    temp_trace: PathBuf,

    /// Sensor polling interval.
    #[arg(long, default_value_t = 100, value_name = "MS")]
    poll_ms: u64,

    /// Scaled-brightness level below which the lamp turns on.
    #[arg(long, default_value_t = 2000)]
    light_threshold: u16,

    /// Write the CSV log here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Target device address (decimal or 0x-prefixed).
    #[arg(long, default_value = "0x48")]
    device: String,

    /// Target register (decimal or 0x-prefixed).
    #[arg(long, default_value = "0x00")]
    register: String,

    /// Read this many bytes (the default action reads 2).
    #[arg(long, value_name = "N", conflicts_with_all = ["write", "loopback"])]
    read: Option<usize>,

    /// Write these hex bytes (e.g. `1900`).
    #[arg(long, value_name = "HEX", conflicts_with = "loopback")]
    write: Option<String>,

    /// Write these hex bytes, read them back, and require equality.
    #[arg(long, value_name = "HEX")]
    loopback: Option<String>,

    /// Preload device registers from `address,register,hex_bytes` lines.
    #[arg(long, value_name = "PATH")]
    preload: Option<PathBuf>,

    /// Corrupt the recorded wire trace so the checker must object.
    #[arg(long)]
    inject_fault: bool,

    /// System clock the bus divider runs from.
    #[arg(long, default_value_t = 150_000_000, value_name = "HZ")]
    clock_hz: u64,

    /// Target serial clock rate.
    #[arg(long, default_value_t = 100_000, value_name = "HZ")]
    scl_hz: u64,

    /// Write the event CSV here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageName {
    Gray,
    Avg,
    Sobel,
}

impl StageName {
    fn tap(self) -> StageTap {
        match self {
            StageName::Gray => StageTap::Gray,
            StageName::Avg => StageTap::Average,
            StageName::Sobel => StageTap::Sobel,
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            StageName::Gray => "gray.pgm",
            StageName::Avg => "avg.pgm",
            StageName::Sobel => "sobel.pgm",
        }
    }
}

/// Everything one pipeline run reports.
#[derive(Serialize)]
struct RunReport {
    lane_report: LaneReport,
    cycle_stats: CycleStats,
    frame_time_ms: f64,
    stage_latencies: StageLatencies,
    #[serde(skip_serializing_if = "Option::is_none")]
    compare: Option<CompareReport>,
}

/// First-output delays: the converter relative to ingest, the filters
/// relative to the filter cascade's first input.
#[derive(Serialize)]
struct StageLatencies {
    gray: u64,
    avg: u64,
    sobel: u64,
}

#[derive(Serialize)]
struct CompareReport {
    gray: StageDiff,
    avg: StageDiff,
    sobel: StageDiff,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(args) => cmd_pipeline(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::Trace(args) => cmd_trace(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_class(&err))
        }
    }
}

/// The stable exit-code contract.
fn exit_class(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse { .. } => 1,
        Error::Protocol(_) => 3,
        _ => 2,
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn read_error(path: &Path, err: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        err.kind(),
        format!("{}: {err}", path.display()),
    ))
}

fn write_output(out: Option<&PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| read_error(path, e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn seed_from_env() -> Result<u64, Error> {
    match std::env::var("LANEPIPE_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| config_error(format!("LANEPIPE_SEED '{text}' is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn parse_weights(text: &str) -> Result<GrayWeights, Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(config_error(format!(
            "gray weights '{text}' must be three comma-separated values"
        )));
    }
    let mut values = [0u8; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| config_error(format!("bad gray weight '{part}'")))?;
    }
    GrayWeights::new(values[0], values[1], values[2])
}

/// Parse `0x2F` or plain decimal into a byte.
fn parse_byte(text: &str, what: &str) -> Result<u8, Error> {
    let t = text.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u8::from_str_radix(hex, 16).ok()
    } else {
        t.parse().ok()
    };
    parsed.ok_or_else(|| config_error(format!("bad {what} '{text}'")))
}

fn parse_hex_bytes(text: &str, what: &str) -> Result<Vec<u8>, Error> {
    let t = text.trim();
    if t.is_empty() || t.len() % 2 != 0 {
        return Err(config_error(format!(
            "{what} '{text}' must be a non-empty string of hex byte pairs"
        )));
    }
    t.as_bytes()
        .chunks(2)
        .map(|pair| {
            let pair = std::str::from_utf8(pair).expect("chunked from str");
            u8::from_str_radix(pair, 16)
                .map_err(|_| config_error(format!("bad hex pair '{pair}' in {what}")))
        })
        .collect()
}

fn load_input(path: &Path, geometry: FrameGeometry) -> Result<RgbFrame, Error> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let frame = if is_png {
        let decoded = image::open(path)
            .map_err(|e| {
                Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
            })?
            .to_rgb8();
        let (w, h) = decoded.dimensions();
        if (w, h) != (geometry.width, geometry.height) {
            return Err(config_error(format!(
                "input is {w}x{h} but the pipeline is configured for {geometry}; pass --geometry {w}x{h}"
            )));
        }
        RgbFrame::from_data(geometry, decoded.into_raw())?
    } else {
        let frame = pnm::load_ppm(path)?;
        if frame.geometry != geometry {
            return Err(config_error(format!(
                "input is {} but the pipeline is configured for {geometry}; pass --geometry {}",
                frame.geometry, frame.geometry
            )));
        }
        frame
    };
    Ok(frame)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<(), Error> {
    let geometry: FrameGeometry = args.geometry.parse()?;
    let weights = parse_weights(&args.gray_weights)?;
    let sobel = SobelConfig::new(args.sobel_threshold)?;
    if args.clock_hz == 0 {
        return Err(Error::ZeroClock);
    }

    let frame = match (&args.input, args.synthetic) {
        (Some(path), _) => load_input(path, geometry)?,
        (None, Some(boundaries)) => {
            if boundaries == 0 {
                return Err(config_error("--synthetic needs at least one boundary"));
            }
            random_road(geometry, boundaries, 0.0, seed_from_env()?).0
        }
        (None, None) => unreachable!("clap enforces input or --synthetic"),
    };

    let mut config = PipelineConfig::new(geometry);
    config.weights = weights;
    config.sobel = sobel;
    let max_cycles = config.default_max_cycles();
    let mut pipeline = Pipeline::new(config)?;
    for stage in &args.dump_stage {
        pipeline.enable_capture(stage.tap());
    }
    if args.compare {
        pipeline.enable_capture(StageTap::Gray);
        pipeline.enable_capture(StageTap::Average);
        pipeline.enable_capture(StageTap::Sobel);
    }

    let run = pipeline.run_frame(&frame, max_cycles)?;

    let gray_in = pipeline.stage_first_input(StageTap::Gray).unwrap_or(0);
    let gray_out = pipeline.stage_first_output(StageTap::Gray).unwrap_or(0);
    let cascade_in = pipeline.stage_first_input(StageTap::Average).unwrap_or(0);
    let avg_out = pipeline.stage_first_output(StageTap::Average).unwrap_or(0);
    let sobel_out = pipeline.stage_first_output(StageTap::Sobel).unwrap_or(0);

    let compare = if args.compare {
        let gray = gray_ref(&frame, weights);
        let averaged = average_ref(&gray);
        let binary = sobel_binary_ref(&averaged, args.sobel_threshold);
        Some(CompareReport {
            gray: diff_bytes(pipeline.capture(StageTap::Gray).unwrap(), &gray.data),
            avg: diff_bytes(pipeline.capture(StageTap::Average).unwrap(), &averaged.data),
            sobel: diff_bytes(pipeline.capture(StageTap::Sobel).unwrap(), &binary.data),
        })
    } else {
        None
    };

    for stage in &args.dump_stage {
        let data = pipeline
            .capture(stage.tap())
            .expect("capture was enabled above");
        let dump = lanepipe::ByteFrame::from_data(geometry, data.to_vec())?;
        pnm::save_pgm(Path::new(stage.file_name()), &dump)?;
    }

    let report = RunReport {
        lane_report: run.report,
        frame_time_ms: estimate_frame_time(run.stats.cycles_elapsed, args.clock_hz)?,
        cycle_stats: run.stats,
        stage_latencies: StageLatencies {
            gray: gray_out - gray_in,
            avg: avg_out - cascade_in,
            sobel: sobel_out - cascade_in,
        },
        compare,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_output(args.out.as_ref(), &json)
}

/// A stimulus trace: `time_ms,raw_value` rows, sorted by time. The
/// value at time t is the last row at or before t (hold-first before
/// the first row).
struct Trace {
    rows: Vec<(u64, u16)>,
}

impl Trace {
    fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e))?;
        let mut rows: Vec<(u64, u16)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (time, value) = trimmed.split_once(',').ok_or_else(|| {
                Error::Parse {
                    line: lineno,
                    message: format!("expected 'time_ms,raw_value', found '{trimmed}'"),
                }
            })?;
            let time: u64 = time.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad time '{time}'"),
            })?;
            let value_text = value.trim();
            let value: u16 = if let Some(hex) = value_text
                .strip_prefix("0x")
                .or_else(|| value_text.strip_prefix("0X"))
            {
                u16::from_str_radix(hex, 16).map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad raw value '{value_text}'"),
                })?
            } else {
                value_text.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad raw value '{value_text}'"),
                })?
            };
            if let Some(&(last, _)) = rows.last() {
                if time < last {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("time {time} goes backwards (previous {last})"),
                    });
                }
            }
            rows.push((time, value));
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: format!("{}: trace has no stimulus rows", path.display()),
            });
        }
        Ok(Self { rows })
    }

    fn value_at(&self, t: u64) -> u16 {
        self.rows
            .iter()
            .take_while(|&&(time, _)| time <= t)
            .last()
            .unwrap_or(&self.rows[0])
            .1
    }

    fn end_time(&self) -> u64 {
        self.rows.last().expect("validated non-empty").0
    }
}

fn log_row(
    log: &mut String,
    time: u64,
    unit: &str,
    raw: u16,
    converted: &str,
    cmd: &ControlCommand,
) {
    writeln!(
        log,
        "{time},{unit},{raw},{converted},{},{},{}",
        u8::from(cmd.enable),
        cmd.mode,
        cmd.dac_code
    )
    .expect("string writes are infallible");
}

fn cmd_scenario(args: ScenarioArgs) -> Result<(), Error> {
    if args.poll_ms == 0 {
        return Err(config_error("--poll-ms must be positive"));
    }
    let light_cfg = LightConfig::new(args.light_threshold)?;
    let tcu_cfg = TcuConfig::default();
    let lux = Trace::load(&args.lux_trace)?;
    let temp = Trace::load(&args.temp_trace)?;

    let divider = ClockDividerConfig::new(150_000_000, 100_000)?;
    let mut bus = I2cBus::new(divider);
    bus.attach(SensorDevice::light_default())?;
    bus.attach(SensorDevice::temperature_default())?;

    // Power-up configuration: one control-register write per device.
    bus.master_write(0x23, 0x01, &[0x01])?;
    bus.master_write(0x48, 0x01, &[0x01])?;

    let mut log = String::from("time_ms,unit,raw,converted,enable,mode,dac_code\n");
    let end = lux.end_time().max(temp.end_time());
    let mut t = 0;
    while t <= end {
        // The stimulus is the physical world: plant it in the device
        // registers, then observe it the way firmware would, over the
        // bus.
        bus.device_mut(0x23)
            .expect("attached above")
            .set_reading_u16(lux.value_at(t));
        bus.device_mut(0x48)
            .expect("attached above")
            .set_reading_u16(temp.value_at(t));

        let light_txn = bus.master_read(0x23, 0x00, 2)?;
        let raw_lux = u16::from_be_bytes([light_txn.payload[0], light_txn.payload[1]]);
        let scaled = scale_brightness(raw_lux);
        let light_cmd = light_decision(scaled, &light_cfg);
        log_row(&mut log, t, "light", raw_lux, &scaled.to_string(), &light_cmd);

        let temp_txn = bus.master_read(0x48, 0x00, 2)?;
        let raw_temp = u16::from_be_bytes([temp_txn.payload[0], temp_txn.payload[1]]);
        let celsius = temp_celsius(temp_txn.payload[0], temp_txn.payload[1], &tcu_cfg);
        let temp_cmd = tcu_step(celsius, &tcu_cfg);
        log_row(
            &mut log,
            t,
            "temp",
            raw_temp,
            &format!("{celsius:.4}"),
            &temp_cmd,
        );

        t += args.poll_ms;
    }

    // The whole session must decode cleanly off the wire.
    check_wire(bus.samples())?;

    write_output(args.out.as_ref(), &log)
}

fn cmd_trace(args: TraceArgs) -> Result<(), Error> {
    let address = parse_byte(&args.device, "device address")?;
    let register = parse_byte(&args.register, "register")?;
    let divider = ClockDividerConfig::new(args.clock_hz, args.scl_hz)?;
    let mut bus = I2cBus::new(divider);
    bus.attach(SensorDevice::light_default())?;
    bus.attach(SensorDevice::temperature_default())?;

    if let Some(path) = &args.preload {
        let text = std::fs::read_to_string(path).map_err(|e| read_error(path, e))?;
        for (dev_addr, reg, bytes) in parse_preload(&text)? {
            if bus.device(dev_addr).is_none() {
                let kind = if dev_addr == 0x48 {
                    SensorKind::Temperature
                } else {
                    SensorKind::Light
                };
                bus.attach(SensorDevice::new(dev_addr, kind)?)?;
            }
            bus.device_mut(dev_addr)
                .expect("attached above")
                .set_register(reg, bytes);
        }
    }

    if let Some(hex) = &args.loopback {
        let payload = parse_hex_bytes(hex, "loopback payload")?;
        let write_txn = bus.master_write(address, register, &payload)?;
        if !write_txn.acked {
            return Err(Error::Protocol(format!(
                "loopback write to 0x{address:02X} was not acknowledged"
            )));
        }
        let read_txn = bus.master_read(address, register, payload.len())?;
        if read_txn.payload != payload {
            return Err(Error::Protocol(format!(
                "loopback mismatch: wrote {payload:02X?}, read {:02X?}",
                read_txn.payload
            )));
        }
    } else if let Some(hex) = &args.write {
        let payload = parse_hex_bytes(hex, "write payload")?;
        bus.master_write(address, register, &payload)?;
    } else {
        let count = args.read.unwrap_or(2);
        bus.master_read(address, register, count)?;
    }

    let samples = if args.inject_fault {
        inject_sda_glitch(bus.samples())
    } else {
        bus.samples().to_vec()
    };
    check_wire(&samples)?;

    write_output(args.out.as_ref(), &events_to_csv(bus.events()))
}
