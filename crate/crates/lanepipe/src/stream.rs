//! Cycle-accurate ready/valid streaming model of the detection pipeline.
//!
//! The datapath is source -> gray -> average -> Sobel/binarize -> sink.
//! Every stage ends in a one-deep output register: a beat consumed on
//! cycle t is offered downstream on cycle t+1. A transfer happens on a
//! link exactly when the producer offers a beat and the consumer accepts
//! it in the same cycle; ready propagates combinationally from the sink
//! toward the source, so a sink stall freezes the whole chain within one
//! cycle while small fall-through queues on the window-stage inputs soak
//! up beats already in flight.
//!
//! With everything free-flowing, the gray stage adds 1 cycle and each
//! window stage adds width+6 cycles (a 416-wide frame: 422), so the first
//! binarized pixel leaves 845 cycles after the first RGB beat enters and
//! the whole frame finishes in width*height + 2*(width+6) + 2 cycles.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::filters::{average, binarize, sobel_magnitude, SobelConfig};
use crate::frame::{ByteFrame, RgbFrame};
use crate::lane::{DecisionAccumulator, DecisionConfig, LaneReport};
use crate::rgb2gray::{to_gray, GrayWeights, PixelRgb};
use crate::window::LineBuffer;
use crate::{Error, Result};

/// One beat on a stream link. RGB enters packed as 0x00RRGGBB; the
/// filter links carry a single byte in the low bits.
pub type StreamBeat = u32;

/// Frame dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameGeometry {
    pub width: u32,
    pub height: u32,
}

impl FrameGeometry {
    /// Both dimensions must cover at least one full 3x3 window.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Geometry { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

impl Default for FrameGeometry {
    fn default() -> Self {
        Self {
            width: 416,
            height: 416,
        }
    }
}

impl std::fmt::Display for FrameGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for FrameGeometry {
    type Err = Error;

    /// Parse "WIDTHxHEIGHT", e.g. "416x416".
    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::config(format!("geometry '{s}' is not WIDTHxHEIGHT")))?;
        let width = w
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad width in geometry '{s}'")))?;
        let height = h
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad height in geometry '{s}'")))?;
        Self::new(width, height)
    }
}

/// Bounded FIFO used between the filter stages. Fall-through: the
/// pipeline bypasses it entirely while it is empty, so it adds latency
/// only once backpressure actually parks beats in it.
#[derive(Debug, Clone)]
pub struct PixelQueue {
    buf: VecDeque<StreamBeat>,
    capacity: usize,
}

impl PixelQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "a zero-capacity queue cannot hold a beat");
        Self {
            buf: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn try_enqueue(&mut self, beat: StreamBeat) -> Result<()> {
        if self.buf.len() == self.capacity {
            return Err(Error::QueueFull {
                capacity: self.capacity,
            });
        }
        self.buf.push_back(beat);
        Ok(())
    }

    pub fn dequeue(&mut self) -> Option<StreamBeat> {
        self.buf.pop_front()
    }

    pub fn front(&self) -> Option<StreamBeat> {
        self.buf.front().copied()
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Per-cycle sink readiness. Cycles without an entry are ready; an entry
/// overrides a single cycle.
#[derive(Debug, Clone, Default)]
pub struct StallSchedule {
    overrides: std::collections::HashMap<u64, bool>,
}

impl StallSchedule {
    pub fn always_ready() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, bool)>) -> Self {
        Self {
            overrides: pairs.into_iter().collect(),
        }
    }

    pub fn set(&mut self, cycle: u64, ready: bool) {
        self.overrides.insert(cycle, ready);
    }

    pub fn ready_at(&self, cycle: u64) -> bool {
        self.overrides.get(&cycle).copied().unwrap_or(true)
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }

    /// Parse "cycle,ready_bit" lines. Blank lines and '#' comments are
    /// skipped, as is an optional literal header row.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut schedule = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if idx == 0 && trimmed.eq_ignore_ascii_case("cycle,ready_bit") {
                continue;
            }
            let (cycle_s, ready_s) = trimmed
                .split_once(',')
                .ok_or_else(|| Error::parse(line, "expected 'cycle,ready_bit'"))?;
            let cycle: u64 = cycle_s
                .trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad cycle '{}'", cycle_s.trim())))?;
            let ready = match ready_s.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(line, format!("ready bit '{other}' is not 0 or 1")))
                }
            };
            schedule.set(cycle, ready);
        }
        Ok(schedule)
    }
}

/// Counters a frame run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleStats {
    /// Cycles simulated until the lane report registered.
    pub cycles_elapsed: u64,
    /// RGB beats accepted from the source.
    pub transfers_in: u64,
    /// Binarized pixels delivered to the sink.
    pub transfers_out: u64,
    /// Cycle of the first sink-side transfer.
    pub first_output_cycle: Option<u64>,
    /// Cycles the sink held off an offered output beat.
    pub stall_cycles: u64,
}

/// Frame time in milliseconds for a cycle count at a clock rate, as an
/// exact rational rounded half-up to 4 decimal places.
pub fn estimate_frame_time(cycles: u64, clock_hz: u64) -> Result<f64> {
    if clock_hz == 0 {
        return Err(Error::ZeroClock);
    }
    // cycles / hz seconds = cycles * 1e3 ms; scale by 1e4 for 4 decimals.
    let num = u128::from(cycles) * 10_000_000;
    let den = u128::from(clock_hz);
    let scaled = (2 * num + den) / (2 * den);
    Ok(scaled as f64 / 10_000.0)
}

/// The taps a run can be observed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageTap {
    /// Grayscale bytes leaving the converter.
    Gray,
    /// Smoothed bytes leaving the averaging stage.
    Average,
    /// Binarized bytes leaving the Sobel/threshold stage.
    Sobel,
}

impl StageTap {
    /// Link index the tap's producer drives.
    fn link(self) -> usize {
        match self {
            StageTap::Gray => 1,
            StageTap::Average => 2,
            StageTap::Sobel => 3,
        }
    }

    pub const ALL: [StageTap; 3] = [StageTap::Gray, StageTap::Average, StageTap::Sobel];
}

/// A processing stage with a one-deep output register.
pub trait PixelStage {
    /// Beat in the output register, offered downstream this cycle.
    fn offered(&self) -> Option<StreamBeat>;

    /// Whether the stage can take one input this cycle, given whether its
    /// offered beat leaves.
    fn can_accept(&self, out_fires: bool) -> bool;

    /// Commit the cycle: drop the output register if it fired, then
    /// consume `input` if present.
    fn clock(&mut self, input: Option<StreamBeat>, out_fired: bool) -> Result<()>;
}

/// RGB-to-gray conversion stage: one beat in, one beat out, every cycle.
struct GrayStage {
    weights: GrayWeights,
    out: Option<StreamBeat>,
}

impl GrayStage {
    fn new(weights: GrayWeights) -> Self {
        Self { weights, out: None }
    }
}

impl PixelStage for GrayStage {
    fn offered(&self) -> Option<StreamBeat> {
        self.out
    }

    fn can_accept(&self, out_fires: bool) -> bool {
        self.out.is_none() || out_fires
    }

    fn clock(&mut self, input: Option<StreamBeat>, out_fired: bool) -> Result<()> {
        if out_fired {
            self.out = None;
        }
        if let Some(beat) = input {
            assert!(self.out.is_none(), "gray stage accepted a beat while full");
            self.out = Some(StreamBeat::from(to_gray(PixelRgb::from_beat(beat), self.weights)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum WindowKernel {
    Average,
    Sobel(SobelConfig),
}

/// Line-buffered 3x3 stage. Accepts one pixel per cycle until the frame
/// is in, then keeps producing border windows from internal zero-feed
/// cycles until width*height outputs have left.
struct WindowStage {
    line_buffer: LineBuffer,
    kernel: WindowKernel,
    out: Option<StreamBeat>,
}

impl WindowStage {
    fn new(geometry: FrameGeometry, kernel: WindowKernel) -> Self {
        Self {
            line_buffer: LineBuffer::new(geometry),
            kernel,
            out: None,
        }
    }

    fn apply(&self, window: &crate::window::Window3x3) -> StreamBeat {
        match self.kernel {
            WindowKernel::Average => StreamBeat::from(average(window)),
            WindowKernel::Sobel(cfg) => StreamBeat::from(binarize(sobel_magnitude(window), cfg).0),
        }
    }
}

impl PixelStage for WindowStage {
    fn offered(&self) -> Option<StreamBeat> {
        self.out
    }

    fn can_accept(&self, out_fires: bool) -> bool {
        (self.out.is_none() || out_fires) && !self.line_buffer.frame_fed()
    }

    fn clock(&mut self, input: Option<StreamBeat>, out_fired: bool) -> Result<()> {
        if out_fired {
            self.out = None;
        }
        if let Some(beat) = input {
            assert!(self.out.is_none(), "window stage accepted a beat while full");
            if let Some(window) = self.line_buffer.feed(beat as u8)? {
                self.out = Some(self.apply(&window));
            }
        } else if self.out.is_none() {
            // No input this cycle and the register is free: flush cycles
            // after the frame has been fed emit the border windows.
            if let Some(window) = self.line_buffer.drain_step() {
                self.out = Some(self.apply(&window));
            }
        }
        Ok(())
    }
}

/// Supplies the frame's RGB beats; the first is offered on cycle 0.
struct FrameSource {
    beats: Vec<StreamBeat>,
    next: usize,
}

impl FrameSource {
    fn new(beats: Vec<StreamBeat>) -> Self {
        Self { beats, next: 0 }
    }

    fn offered(&self) -> Option<StreamBeat> {
        self.beats.get(self.next).copied()
    }

    fn clock(&mut self, out_fired: bool) {
        if out_fired {
            self.next += 1;
        }
    }
}

/// Collects binarized pixels, feeds the lane-decision accumulator, and
/// applies the stall schedule. The lane report registers one cycle after
/// the last band-row pixel arrives.
struct FrameSink {
    schedule: StallSchedule,
    collected: Vec<u8>,
    transfer_cycles: Vec<u64>,
    accumulator: DecisionAccumulator,
    first_output_cycle: Option<u64>,
    report_cycle: Option<u64>,
    stall_cycles: u64,
}

impl FrameSink {
    fn new(geometry: FrameGeometry, decision: DecisionConfig, schedule: StallSchedule) -> Result<Self> {
        Ok(Self {
            schedule,
            collected: Vec::with_capacity(geometry.pixel_count()),
            transfer_cycles: Vec::with_capacity(geometry.pixel_count()),
            accumulator: DecisionAccumulator::new(geometry, decision)?,
            first_output_cycle: None,
            report_cycle: None,
            stall_cycles: 0,
        })
    }

    fn ready(&self, cycle: u64) -> bool {
        self.schedule.ready_at(cycle)
    }

    fn accept(&mut self, cycle: u64, pixel: u8) -> Result<()> {
        self.collected.push(pixel);
        self.transfer_cycles.push(cycle);
        self.accumulator.push(pixel)?;
        self.first_output_cycle.get_or_insert(cycle);
        if self.report_cycle.is_none() && self.accumulator.band_complete() {
            self.report_cycle = Some(cycle + 1);
        }
        Ok(())
    }
}

/// Everything a pipeline instance is built from.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub geometry: FrameGeometry,
    pub weights: GrayWeights,
    pub sobel: SobelConfig,
    pub decision: DecisionConfig,
    /// Capacity of each inter-filter queue.
    pub fifo_capacity: usize,
    pub stalls: StallSchedule,
}

impl PipelineConfig {
    /// Defaults for a geometry: standard weights and thresholds, queues
    /// one row deep, sink always ready.
    pub fn new(geometry: FrameGeometry) -> Self {
        Self {
            geometry,
            weights: GrayWeights::default(),
            sobel: SobelConfig::default(),
            decision: DecisionConfig::default_for(geometry),
            fifo_capacity: geometry.width as usize,
            stalls: StallSchedule::always_ready(),
        }
    }

    /// A generous simulation budget: several times the free-flow frame
    /// span, so only a wedged sink trips it.
    pub fn default_max_cycles(&self) -> u64 {
        let nominal = self.geometry.pixel_count() as u64 + 2 * (u64::from(self.geometry.width) + 6) + 2;
        nominal * 8 + 100_000
    }
}

/// One stream link, with a transfer log and an optional capture tap.
struct Link {
    fifo: Option<PixelQueue>,
    capture: Option<Vec<u8>>,
    first_prod_fire: Option<u64>,
    first_cons_take: Option<u64>,
    prod_fires: u64,
    cons_takes: u64,
}

impl Link {
    fn direct() -> Self {
        Self {
            fifo: None,
            capture: None,
            first_prod_fire: None,
            first_cons_take: None,
            prod_fires: 0,
            cons_takes: 0,
        }
    }

    fn queued(capacity: usize) -> Self {
        Self {
            fifo: Some(PixelQueue::new(capacity)),
            ..Self::direct()
        }
    }
}

/// Result of running one frame to completion.
#[derive(Debug, Clone)]
pub struct FrameRun {
    pub report: LaneReport,
    pub stats: CycleStats,
    /// The binarized frame as the sink received it.
    pub output: ByteFrame,
}

/// The full streaming datapath plus instrumentation.
///
/// Links are indexed 0..4: source->gray, gray->average, average->Sobel,
/// Sobel->sink. The two middle links carry the fall-through queues.
pub struct Pipeline {
    config: PipelineConfig,
    source: FrameSource,
    stages: [Box<dyn PixelStage>; 3],
    sink: FrameSink,
    links: [Link; 4],
    cycle: u64,
    loaded: bool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        if config.fifo_capacity == 0 {
            return Err(Error::config("inter-stage queue capacity must be at least 1"));
        }
        config.decision.validate(config.geometry)?;
        let geometry = config.geometry;
        let sink = FrameSink::new(geometry, config.decision, config.stalls.clone())?;
        Ok(Self {
            source: FrameSource::new(Vec::new()),
            stages: [
                Box::new(GrayStage::new(config.weights)),
                Box::new(WindowStage::new(geometry, WindowKernel::Average)),
                Box::new(WindowStage::new(geometry, WindowKernel::Sobel(config.sobel))),
            ],
            sink,
            links: [
                Link::direct(),
                Link::queued(config.fifo_capacity),
                Link::queued(config.fifo_capacity),
                Link::direct(),
            ],
            cycle: 0,
            loaded: false,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Record the beats leaving a tap during the run.
    pub fn enable_capture(&mut self, tap: StageTap) {
        let capacity = self.config.geometry.pixel_count();
        self.links[tap.link()].capture = Some(Vec::with_capacity(capacity));
    }

    /// Beats captured at a tap so far, in transfer order.
    pub fn capture(&self, tap: StageTap) -> Option<&[u8]> {
        self.links[tap.link()].capture.as_deref()
    }

    /// Cycle of the first beat entering the tap's stage.
    pub fn stage_first_input(&self, tap: StageTap) -> Option<u64> {
        self.links[tap.link() - 1].first_cons_take
    }

    /// Cycle of the first beat leaving the tap's stage.
    pub fn stage_first_output(&self, tap: StageTap) -> Option<u64> {
        self.links[tap.link()].first_prod_fire
    }

    /// Cycles at which the sink accepted each output pixel.
    pub fn output_transfer_cycles(&self) -> &[u64] {
        &self.sink.transfer_cycles
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Stage fresh state and queue a frame's beats; instrumentation and
    /// counters restart, the stall schedule and captures stay armed.
    pub fn load_frame(&mut self, frame: &RgbFrame) -> Result<()> {
        if frame.geometry != self.config.geometry {
            return Err(Error::config(format!(
                "frame is {} but the pipeline is built for {}",
                frame.geometry, self.config.geometry
            )));
        }
        let geometry = self.config.geometry;
        self.source = FrameSource::new(frame.to_beats());
        self.stages = [
            Box::new(GrayStage::new(self.config.weights)),
            Box::new(WindowStage::new(geometry, WindowKernel::Average)),
            Box::new(WindowStage::new(geometry, WindowKernel::Sobel(self.config.sobel))),
        ];
        let captures: Vec<bool> = self.links.iter().map(|l| l.capture.is_some()).collect();
        self.links = [
            Link::direct(),
            Link::queued(self.config.fifo_capacity),
            Link::queued(self.config.fifo_capacity),
            Link::direct(),
        ];
        for (link, had) in self.links.iter_mut().zip(captures) {
            if had {
                link.capture = Some(Vec::with_capacity(geometry.pixel_count()));
            }
        }
        self.sink = FrameSink::new(geometry, self.config.decision, self.config.stalls.clone())?;
        self.cycle = 0;
        self.loaded = true;
        Ok(())
    }

    /// Whether the frame has fully drained and the lane report registered.
    pub fn is_done(&self) -> bool {
        self.sink.accumulator.frame_complete()
            && self.sink.report_cycle.is_some_and(|r| self.cycle > r)
    }

    /// Simulate one clock cycle.
    pub fn step(&mut self) -> Result<()> {
        let cycle = self.cycle;

        // Phase A: registered offers, valid since the previous edge.
        let offers = [
            self.source.offered(),
            self.stages[0].offered(),
            self.stages[1].offered(),
            self.stages[2].offered(),
        ];

        // Phase B: ready/fire decisions, walked sink-to-source so each
        // consumer knows whether its own output leaves this cycle.
        let sink_ready = self.sink.ready(cycle);
        let mut takes = [false; 4];
        let mut valids = [false; 4];
        let mut cons_input = [None::<StreamBeat>; 4];
        let mut prod_fires = [false; 4];
        let mut pops = [false; 4];
        let mut pushes = [false; 4];

        for i in (0..4).rev() {
            let front = self.links[i].fifo.as_ref().and_then(|f| f.front());
            let data = front.or(offers[i]);
            valids[i] = data.is_some();
            let accepts = valids[i]
                && if i == 3 {
                    sink_ready
                } else {
                    self.stages[i].can_accept(prod_fires[i + 1])
                };
            takes[i] = accepts;
            if accepts {
                cons_input[i] = data;
            }
            match &self.links[i].fifo {
                Some(fifo) => {
                    let from_fifo = front.is_some();
                    pops[i] = accepts && from_fifo;
                    let space_after = fifo.len() - usize::from(pops[i]) < fifo.capacity();
                    let bypass = !from_fifo && accepts;
                    prod_fires[i] = offers[i].is_some() && (bypass || space_after);
                    pushes[i] = prod_fires[i] && !bypass;
                }
                None => {
                    prod_fires[i] = accepts;
                }
            }
        }

        if valids[3] && !sink_ready {
            self.sink.stall_cycles += 1;
        }

        // Phase C: commit. All decisions are fixed, so order is free.
        for i in 0..4 {
            if pops[i] {
                self.links[i].fifo.as_mut().unwrap().dequeue();
            }
            if pushes[i] {
                let beat = offers[i].expect("push implies an offered beat");
                self.links[i]
                    .fifo
                    .as_mut()
                    .unwrap()
                    .try_enqueue(beat)
                    .expect("space was checked before pushing");
            }
            if prod_fires[i] {
                self.links[i].prod_fires += 1;
                self.links[i].first_prod_fire.get_or_insert(cycle);
                if let Some(cap) = self.links[i].capture.as_mut() {
                    cap.push(offers[i].expect("fired beat exists") as u8);
                }
            }
            if takes[i] {
                self.links[i].cons_takes += 1;
                self.links[i].first_cons_take.get_or_insert(cycle);
            }
        }

        self.source.clock(prod_fires[0]);
        for i in 0..3 {
            self.stages[i].clock(cons_input[i], prod_fires[i + 1])?;
        }
        if takes[3] {
            self.sink
                .accept(cycle, cons_input[3].expect("sink take carries a beat") as u8)?;
        }
        self.cycle += 1;
        Ok(())
    }

    /// Simulate `cycles` clock cycles.
    pub fn advance(&mut self, cycles: u64) -> Result<()> {
        for _ in 0..cycles {
            self.step()?;
        }
        Ok(())
    }

    /// Run the loaded frame until the lane report registers.
    pub fn run_to_completion(&mut self, max_cycles: u64) -> Result<FrameRun> {
        if !self.loaded {
            return Err(Error::config("no frame loaded"));
        }
        while !self.is_done() {
            if self.cycle >= max_cycles {
                return Err(Error::config(format!(
                    "frame not complete after {max_cycles} cycles; sink stalled?"
                )));
            }
            self.step()?;
        }
        let stats = CycleStats {
            cycles_elapsed: self.cycle,
            transfers_in: self.links[0].cons_takes,
            transfers_out: self.links[3].cons_takes,
            first_output_cycle: self.sink.first_output_cycle,
            stall_cycles: self.sink.stall_cycles,
        };
        let output = ByteFrame::from_data(self.config.geometry, self.sink.collected.clone())?;
        Ok(FrameRun {
            report: self.sink.accumulator.report(),
            stats,
            output,
        })
    }

    /// Load and run one frame.
    pub fn run_frame(&mut self, frame: &RgbFrame, max_cycles: u64) -> Result<FrameRun> {
        self.load_frame(frame)?;
        self.run_to_completion(max_cycles)
    }
}
