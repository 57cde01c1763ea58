//! Cycle-level I2C master, wire model, and protocol checker.
//!
//! The master talks to register-file sensor devices over a simulated
//! two-wire bus. Everything is derived from one clock divider: an SCL
//! period is four quarter-phases of `divisor` system cycles each, so a
//! bit cell occupies exactly `4 * divisor` cycles and consecutive rising
//! edges inside a byte are spaced by that same amount.
//!
//! Two independent records are kept for every transaction:
//!
//! * a change-point trace of the physical lines ([`WireSample`]), which
//!   an offline checker ([`check_wire`]) re-decodes with no knowledge of
//!   the master's intent, and
//! * a semantic event log ([`I2cEvent`]) that can be serialized to CSV
//!   and folded back into byte-level summaries
//!   ([`reconstruct_from_events`]).
//!
//! Agreement between the two routes is what the integration suite
//! leans on.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

/// SCL clock divider derived from the system clock and a target rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockDividerConfig {
    pub system_hz: u64,
    pub target_scl_hz: u64,
    /// System cycles per quarter of the SCL period (ceiling division,
    /// never below 1).
    pub divisor: u64,
}

impl ClockDividerConfig {
    pub fn new(system_hz: u64, target_scl_hz: u64) -> Result<Self> {
        if system_hz == 0 || target_scl_hz == 0 {
            return Err(Error::ZeroClock);
        }
        let denom = 4 * target_scl_hz;
        let divisor = system_hz.div_ceil(denom).max(1);
        Ok(Self {
            system_hz,
            target_scl_hz,
            divisor,
        })
    }

    /// Full SCL period in system cycles.
    pub fn scl_period_cycles(&self) -> u64 {
        4 * self.divisor
    }

    /// The SCL frequency actually produced. Ceiling division in the
    /// divisor guarantees this never exceeds the target.
    pub fn actual_scl_hz(&self) -> f64 {
        self.system_hz as f64 / self.scl_period_cycles() as f64
    }
}

/// Free-running SCL edge schedule for a bus that never idles: returns
/// `(cycle, level_after_edge)` pairs up to `cycles`, starting with a
/// rising edge after the first half period.
pub fn scl_tick_schedule(cfg: &ClockDividerConfig, cycles: u64) -> Vec<(u64, bool)> {
    let half = 2 * cfg.divisor;
    let mut edges = Vec::new();
    let mut at = half;
    let mut level = true;
    while at <= cycles {
        edges.push((at, level));
        at += half;
        level = !level;
    }
    edges
}

/// Transfer direction, as encoded in the address byte's low bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Write,
    Read,
}

/// Semantic bus events recorded alongside the wire trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I2cEventKind {
    Start,
    Stop,
    Bit,
    Ack,
    Nack,
}

impl fmt::Display for I2cEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            I2cEventKind::Start => "START",
            I2cEventKind::Stop => "STOP",
            I2cEventKind::Bit => "BIT",
            I2cEventKind::Ack => "ACK",
            I2cEventKind::Nack => "NACK",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for I2cEventKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "START" => I2cEventKind::Start,
            "STOP" => I2cEventKind::Stop,
            "BIT" => I2cEventKind::Bit,
            "ACK" => I2cEventKind::Ack,
            "NACK" => I2cEventKind::Nack,
            _ => return Err(()),
        })
    }
}

/// One semantic event: what happened, when, and the SDA level at that
/// instant. `scl_phase` is a debugging marker: the quarter-phase index
/// within the current clock cell when the event was latched (data and
/// acknowledge bits always latch at phase 2, the rising edge).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct I2cEvent {
    pub cycle: u64,
    pub kind: I2cEventKind,
    pub sda: bool,
    pub scl_phase: u8,
}

/// Change-point sample of the physical lines: the levels both wires
/// held from `cycle` until the next sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireSample {
    pub cycle: u64,
    pub sda: bool,
    pub scl: bool,
}

/// Open-drain line pair driven in quarter-phase steps.
struct Wire {
    divisor: u64,
    cycle: u64,
    sda: bool,
    scl: bool,
    /// Quarter-phase position within the current clock cell; reset on
    /// every SCL falling edge.
    cell_quarter: u8,
    samples: Vec<WireSample>,
    events: Vec<I2cEvent>,
}

impl Wire {
    fn new(divisor: u64) -> Self {
        Self {
            divisor,
            cycle: 0,
            sda: true,
            scl: true,
            cell_quarter: 0,
            samples: vec![WireSample {
                cycle: 0,
                sda: true,
                scl: true,
            }],
            events: Vec::new(),
        }
    }

    fn advance_quarters(&mut self, n: u8) {
        self.cycle += self.divisor * u64::from(n);
        self.cell_quarter = (self.cell_quarter + n) % 4;
    }

    fn sample(&mut self) {
        self.samples.push(WireSample {
            cycle: self.cycle,
            sda: self.sda,
            scl: self.scl,
        });
    }

    fn set_sda(&mut self, level: bool) {
        if self.sda != level {
            self.sda = level;
            self.sample();
        }
    }

    fn set_scl(&mut self, level: bool) {
        if self.scl != level {
            self.scl = level;
            if !level {
                self.cell_quarter = 0;
            }
            self.sample();
        }
    }

    fn event(&mut self, kind: I2cEventKind) {
        self.events.push(I2cEvent {
            cycle: self.cycle,
            kind,
            sda: self.sda,
            scl_phase: self.cell_quarter,
        });
    }

    /// START from an idle bus: SDA falls while SCL is high.
    fn start(&mut self) {
        debug_assert!(self.sda && self.scl);
        self.advance_quarters(1);
        self.set_sda(false);
        self.event(I2cEventKind::Start);
        self.advance_quarters(1);
        self.set_scl(false);
    }

    /// Repeated START from inside a transfer (SCL currently low):
    /// release SDA, raise SCL, then pull SDA low again.
    fn repeated_start(&mut self) {
        debug_assert!(!self.scl);
        self.set_sda(true);
        self.advance_quarters(1);
        self.set_scl(true);
        self.advance_quarters(1);
        self.set_sda(false);
        self.event(I2cEventKind::Start);
        self.advance_quarters(1);
        self.set_scl(false);
    }

    /// STOP: SDA rises while SCL is high; leaves the bus idle.
    fn stop(&mut self) {
        debug_assert!(!self.scl);
        self.set_sda(false);
        self.advance_quarters(1);
        self.set_scl(true);
        self.advance_quarters(1);
        self.set_sda(true);
        self.event(I2cEventKind::Stop);
        self.advance_quarters(1);
    }

    /// One bit cell: set SDA in the low half, expose it for the high
    /// half. `kind` tags the event recorded at the rising edge.
    fn write_bit(&mut self, level: bool, kind: I2cEventKind) {
        debug_assert!(!self.scl);
        self.set_sda(level);
        self.advance_quarters(2);
        self.set_scl(true);
        self.event(kind);
        self.advance_quarters(2);
        self.set_scl(false);
    }

    /// Eight data bits MSB-first, then the acknowledge cell.
    fn write_byte(&mut self, byte: u8, acked: bool) {
        for i in (0..8).rev() {
            self.write_bit((byte >> i) & 1 == 1, I2cEventKind::Bit);
        }
        let kind = if acked {
            I2cEventKind::Ack
        } else {
            I2cEventKind::Nack
        };
        // ACK drives SDA low; NACK leaves it released (high).
        self.write_bit(!acked, kind);
    }
}

/// What a register-file sensor pretends to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorKind {
    Light,
    Temperature,
}

/// Addressable device with byte-array registers.
#[derive(Debug, Clone)]
pub struct SensorDevice {
    pub address: u8,
    pub kind: SensorKind,
    registers: BTreeMap<u8, Vec<u8>>,
}

impl SensorDevice {
    pub fn new(address: u8, kind: SensorKind) -> Result<Self> {
        if address > 0x7F {
            return Err(Error::Transaction(format!(
                "address 0x{address:02X} exceeds the 7-bit range"
            )));
        }
        Ok(Self {
            address,
            kind,
            registers: BTreeMap::new(),
        })
    }

    /// Ambient light sensor at its conventional address, data register
    /// zeroed, control register present.
    pub fn light_default() -> Self {
        let mut dev = Self::new(0x23, SensorKind::Light).expect("fixed address");
        dev.registers.insert(0x00, vec![0x00, 0x00]);
        dev.registers.insert(0x01, vec![0x00]);
        dev
    }

    /// Temperature sensor at its conventional address, reading 25 C
    /// (0x190 in the left-justified 12-bit format).
    pub fn temperature_default() -> Self {
        let mut dev = Self::new(0x48, SensorKind::Temperature).expect("fixed address");
        dev.registers.insert(0x00, vec![0x19, 0x00]);
        dev.registers.insert(0x01, vec![0x00]);
        dev
    }

    /// Overwrite the data register (0x00) with a big-endian 16-bit
    /// value, as both sensors present their readings.
    pub fn set_reading_u16(&mut self, value: u16) {
        self.registers.insert(0x00, value.to_be_bytes().to_vec());
    }

    pub fn register(&self, reg: u8) -> Option<&[u8]> {
        self.registers.get(&reg).map(Vec::as_slice)
    }

    pub fn set_register(&mut self, reg: u8, bytes: Vec<u8>) {
        self.registers.insert(reg, bytes);
    }
}

/// Record of one master-initiated transaction, including the event
/// slice it produced on the wire.
#[derive(Debug, Clone)]
pub struct I2cTransaction {
    pub address: u8,
    pub direction: Direction,
    pub register: u8,
    pub payload: Vec<u8>,
    pub events: Vec<I2cEvent>,
    /// Device acknowledged its address.
    pub acked: bool,
    /// Payload bytes are meaningful (register existed, transfer ran to
    /// completion).
    pub data_valid: bool,
    pub start_cycle: u64,
    pub end_cycle: u64,
}

/// Single-master bus with attached devices and a full wire recording.
pub struct I2cBus {
    divider: ClockDividerConfig,
    devices: BTreeMap<u8, SensorDevice>,
    wire: Wire,
}

impl I2cBus {
    pub fn new(divider: ClockDividerConfig) -> Self {
        let wire = Wire::new(divider.divisor);
        Self {
            divider,
            devices: BTreeMap::new(),
            wire,
        }
    }

    pub fn divider(&self) -> &ClockDividerConfig {
        &self.divider
    }

    pub fn attach(&mut self, device: SensorDevice) -> Result<()> {
        if self.devices.contains_key(&device.address) {
            return Err(Error::config(format!(
                "duplicate device address 0x{:02X}",
                device.address
            )));
        }
        self.devices.insert(device.address, device);
        Ok(())
    }

    pub fn device(&self, address: u8) -> Option<&SensorDevice> {
        self.devices.get(&address)
    }

    pub fn device_mut(&mut self, address: u8) -> Option<&mut SensorDevice> {
        self.devices.get_mut(&address)
    }

    /// Current system-cycle position of the wire model.
    pub fn cycle(&self) -> u64 {
        self.wire.cycle
    }

    /// All events recorded since construction.
    pub fn events(&self) -> &[I2cEvent] {
        &self.wire.events
    }

    /// The full change-point trace since construction.
    pub fn samples(&self) -> &[WireSample] {
        &self.wire.samples
    }

    /// Let the idle bus sit for a stretch of cycles (both lines high).
    pub fn advance_idle(&mut self, cycles: u64) {
        debug_assert!(self.wire.sda && self.wire.scl);
        self.wire.cycle += cycles;
    }

    fn check_address(address: u8) -> Result<()> {
        if address > 0x7F {
            return Err(Error::Transaction(format!(
                "address 0x{address:02X} exceeds the 7-bit range"
            )));
        }
        Ok(())
    }

    /// Write `payload` into `register` of the device at `address`.
    /// An empty payload only moves the device's register pointer.
    pub fn master_write(&mut self, address: u8, register: u8, payload: &[u8]) -> Result<I2cTransaction> {
        Self::check_address(address)?;
        let events_from = self.wire.events.len();
        let start_cycle = self.wire.cycle;

        self.wire.start();
        let present = self.devices.contains_key(&address);
        self.wire.write_byte(address << 1, present);
        let mut acked = present;
        if acked {
            self.wire.write_byte(register, true);
            for &byte in payload {
                self.wire.write_byte(byte, true);
            }
        }
        self.wire.stop();

        if acked && !payload.is_empty() {
            // Committed only on a fully acknowledged transfer.
            self.devices
                .get_mut(&address)
                .expect("presence checked above")
                .set_register(register, payload.to_vec());
        }
        if !present {
            acked = false;
        }
        Ok(I2cTransaction {
            address,
            direction: Direction::Write,
            register,
            payload: payload.to_vec(),
            events: self.wire.events[events_from..].to_vec(),
            acked,
            data_valid: acked,
            start_cycle,
            end_cycle: self.wire.cycle,
        })
    }

    /// Read `count` bytes from `register` of the device at `address`:
    /// a pointer write, a repeated START, then the read transfer. The
    /// master acknowledges every byte except the last.
    pub fn master_read(&mut self, address: u8, register: u8, count: usize) -> Result<I2cTransaction> {
        Self::check_address(address)?;
        if count == 0 {
            return Err(Error::Transaction(
                "read of zero bytes never touches the wire".into(),
            ));
        }
        let events_from = self.wire.events.len();
        let start_cycle = self.wire.cycle;

        self.wire.start();
        let present = self.devices.contains_key(&address);
        self.wire.write_byte(address << 1, present);
        if !present {
            self.wire.stop();
            return Ok(I2cTransaction {
                address,
                direction: Direction::Read,
                register,
                payload: Vec::new(),
                events: self.wire.events[events_from..].to_vec(),
                acked: false,
                data_valid: false,
                start_cycle,
                end_cycle: self.wire.cycle,
            });
        }

        // Pointer byte: the device refuses registers it does not have,
        // and the master aborts on that refusal.
        let register_known = self.devices[&address].register(register).is_some();
        self.wire.write_byte(register, register_known);
        if !register_known {
            self.wire.stop();
            return Ok(I2cTransaction {
                address,
                direction: Direction::Read,
                register,
                payload: Vec::new(),
                events: self.wire.events[events_from..].to_vec(),
                acked: true,
                data_valid: false,
                start_cycle,
                end_cycle: self.wire.cycle,
            });
        }

        self.wire.repeated_start();
        self.wire.write_byte((address << 1) | 1, true);
        let stored = self.devices[&address]
            .register(register)
            .expect("checked above")
            .to_vec();
        let mut payload = Vec::with_capacity(count);
        for i in 0..count {
            // Registers shorter than the request pad with released-bus
            // bytes.
            let byte = stored.get(i).copied().unwrap_or(0xFF);
            let last = i + 1 == count;
            self.wire.write_byte(byte, !last);
            payload.push(byte);
        }
        self.wire.stop();

        Ok(I2cTransaction {
            address,
            direction: Direction::Read,
            register,
            payload,
            events: self.wire.events[events_from..].to_vec(),
            acked: true,
            data_valid: true,
            start_cycle,
            end_cycle: self.wire.cycle,
        })
    }
}

/// One address-framed segment recovered from the raw wire trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedTransfer {
    pub address: u8,
    pub read: bool,
    /// Data bytes following the address byte.
    pub bytes: Vec<u8>,
    /// Acknowledge flags: index 0 is the address byte's, then one per
    /// data byte. `true` means ACK (SDA held low).
    pub acks: Vec<bool>,
}

/// Re-decode a change-point wire trace with no side knowledge, or
/// report the first protocol violation found.
///
/// Every rising SCL edge samples SDA into the current byte. An SDA
/// transition while SCL is high is a START (falling) or STOP (rising)
/// condition; both legitimately arrive with at most one freshly
/// sampled bit pending from their own extra clock rise, so any larger
/// remainder means the data line moved mid-byte.
pub fn check_wire(samples: &[WireSample]) -> Result<Vec<CheckedTransfer>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Protocol("empty wire trace".into()))?;
    if !(first.sda && first.scl) {
        return Err(Error::Protocol("bus not idle at trace start".into()));
    }

    let mut sda = true;
    let mut scl = true;
    let mut transfers: Vec<CheckedTransfer> = Vec::new();
    let mut current: Option<CheckedTransfer> = None;
    let mut shift: u16 = 0;
    let mut pending_bits: u8 = 0;

    for sample in samples {
        let scl_rose = sample.scl && !scl;
        let sda_changed = sample.sda != sda;
        let during_high = sample.scl && scl;

        if scl_rose && sda_changed {
            return Err(Error::Protocol(format!(
                "cycle {}: SDA moved on the same edge SCL rose",
                sample.cycle
            )));
        }

        if scl_rose {
            if current.is_none() {
                return Err(Error::Protocol(format!(
                    "cycle {}: clock active outside a transaction",
                    sample.cycle
                )));
            }
            shift = (shift << 1) | u16::from(sample.sda);
            pending_bits += 1;
            if pending_bits == 9 {
                let seg = current.as_mut().expect("checked above");
                let byte = (shift >> 1) as u8;
                let ack = shift & 1 == 0;
                if seg.acks.is_empty() {
                    seg.address = byte >> 1;
                    seg.read = byte & 1 == 1;
                } else {
                    seg.bytes.push(byte);
                }
                seg.acks.push(ack);
                shift = 0;
                pending_bits = 0;
            }
        } else if sda_changed && during_high {
            if pending_bits > 1 {
                return Err(Error::Protocol(format!(
                    "cycle {}: SDA changed mid-byte with {} bits pending",
                    sample.cycle, pending_bits
                )));
            }
            shift = 0;
            pending_bits = 0;
            if sample.sda {
                // STOP
                match current.take() {
                    Some(seg) => transfers.push(seg),
                    None => {
                        return Err(Error::Protocol(format!(
                            "cycle {}: STOP without a transaction in flight",
                            sample.cycle
                        )))
                    }
                }
            } else {
                // START (possibly repeated)
                if let Some(seg) = current.take() {
                    transfers.push(seg);
                }
                current = Some(CheckedTransfer {
                    address: 0,
                    read: false,
                    bytes: Vec::new(),
                    acks: Vec::new(),
                });
            }
        }

        sda = sample.sda;
        scl = sample.scl;
    }

    if current.is_some() {
        return Err(Error::Protocol("trace ended without a STOP".into()));
    }
    Ok(transfers)
}

/// Byte-level summary folded from the semantic event log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSummary {
    pub address: u8,
    pub direction: Direction,
    /// Register pointer, when the transfer got far enough to send one.
    pub register: Option<u8>,
    pub payload: Vec<u8>,
}

/// Fold the event log back into per-transaction summaries. A write is
/// one segment; a register read is a pointer-write segment glued to a
/// read segment by a repeated START.
pub fn reconstruct_from_events(events: &[I2cEvent]) -> Result<Vec<EventSummary>> {
    struct Segment {
        address: u8,
        read: bool,
        addr_acked: bool,
        bytes: Vec<u8>,
    }

    let mut summaries = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    let mut in_transaction = false;
    let mut bits: Vec<bool> = Vec::new();
    let mut bytes_with_acks: Vec<(u8, bool)> = Vec::new();

    let close_segment = |segments: &mut Vec<Segment>,
                         bytes_with_acks: &mut Vec<(u8, bool)>|
     -> Result<()> {
        if bytes_with_acks.is_empty() {
            return Ok(());
        }
        let (addr_byte, addr_acked) = bytes_with_acks[0];
        segments.push(Segment {
            address: addr_byte >> 1,
            read: addr_byte & 1 == 1,
            addr_acked,
            bytes: bytes_with_acks[1..].iter().map(|&(b, _)| b).collect(),
        });
        bytes_with_acks.clear();
        Ok(())
    };

    for event in events {
        match event.kind {
            I2cEventKind::Start => {
                if !bits.is_empty() {
                    return Err(Error::Protocol(format!(
                        "cycle {}: START with {} bits of an unfinished byte",
                        event.cycle,
                        bits.len()
                    )));
                }
                close_segment(&mut segments, &mut bytes_with_acks)?;
                in_transaction = true;
            }
            I2cEventKind::Bit => {
                if !in_transaction {
                    return Err(Error::Protocol(format!(
                        "cycle {}: data bit outside a transaction",
                        event.cycle
                    )));
                }
                bits.push(event.sda);
            }
            I2cEventKind::Ack | I2cEventKind::Nack => {
                if bits.len() != 8 {
                    return Err(Error::Protocol(format!(
                        "cycle {}: acknowledge after {} bits",
                        event.cycle,
                        bits.len()
                    )));
                }
                let byte = bits.drain(..).fold(0u8, |acc, b| (acc << 1) | u8::from(b));
                bytes_with_acks.push((byte, event.kind == I2cEventKind::Ack));
            }
            I2cEventKind::Stop => {
                if !bits.is_empty() {
                    return Err(Error::Protocol(format!(
                        "cycle {}: STOP with {} bits of an unfinished byte",
                        event.cycle,
                        bits.len()
                    )));
                }
                close_segment(&mut segments, &mut bytes_with_acks)?;
                in_transaction = false;

                let summary = match segments.as_slice() {
                    [w] if !w.read => EventSummary {
                        address: w.address,
                        direction: Direction::Write,
                        register: if w.addr_acked {
                            w.bytes.first().copied()
                        } else {
                            None
                        },
                        payload: if w.addr_acked && !w.bytes.is_empty() {
                            w.bytes[1..].to_vec()
                        } else {
                            Vec::new()
                        },
                    },
                    [w, r] if !w.read && r.read && w.address == r.address => EventSummary {
                        address: w.address,
                        direction: Direction::Read,
                        register: w.bytes.first().copied(),
                        payload: r.bytes.clone(),
                    },
                    // A pointer write the device refused, recorded on
                    // its own before the abort STOP.
                    [w] if !w.read && w.bytes.len() <= 1 => EventSummary {
                        address: w.address,
                        direction: Direction::Write,
                        register: w.bytes.first().copied(),
                        payload: Vec::new(),
                    },
                    _ => {
                        return Err(Error::Protocol(format!(
                            "cycle {}: unrecognized segment shape at STOP",
                            event.cycle
                        )))
                    }
                };
                summaries.push(summary);
                segments.clear();
            }
        }
    }

    if in_transaction {
        return Err(Error::Protocol("event log ended without a STOP".into()));
    }
    Ok(summaries)
}

/// Serialize events as `cycle,kind,sda` CSV (header included).
pub fn events_to_csv(events: &[I2cEvent]) -> String {
    let mut out = String::from("cycle,kind,sda\n");
    for e in events {
        out.push_str(&format!("{},{},{}\n", e.cycle, e.kind, u8::from(e.sda)));
    }
    out
}

/// Parse the CSV form written by [`events_to_csv`]. The quarter-phase
/// marker is not round-tripped; parsed events carry the rising-edge
/// phase.
pub fn events_from_csv(text: &str) -> Result<Vec<I2cEvent>> {
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 {
            if trimmed != "cycle,kind,sda" {
                return Err(Error::parse(lineno, "expected header 'cycle,kind,sda'"));
            }
            continue;
        }
        let mut fields = trimmed.split(',');
        let (cycle, kind, sda) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(k), Some(s), None) => (c, k, s),
            _ => return Err(Error::parse(lineno, "expected three fields")),
        };
        let cycle: u64 = cycle
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad cycle '{cycle}'")))?;
        let kind: I2cEventKind = kind
            .trim()
            .parse()
            .map_err(|()| Error::parse(lineno, format!("unknown event kind '{kind}'")))?;
        let sda = match sda.trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(lineno, format!("bad sda level '{other}'"))),
        };
        events.push(I2cEvent {
            cycle,
            kind,
            sda,
            scl_phase: 2,
        });
    }
    Ok(events)
}

/// Parse a device preload file: one `address,register,hex_bytes` entry
/// per line, `#` comments and blank lines ignored. Address and register
/// accept decimal or 0x-prefixed hex; the byte string is plain hex
/// pairs.
pub fn parse_preload(text: &str) -> Result<Vec<(u8, u8, Vec<u8>)>> {
    fn parse_u8(token: &str, lineno: usize, what: &str) -> Result<u8> {
        let token = token.trim();
        let parsed = if let Some(hex) = token.strip_prefix("0x").or_else(|| token.strip_prefix("0X")) {
            u8::from_str_radix(hex, 16).ok()
        } else {
            token.parse().ok()
        };
        parsed.ok_or_else(|| Error::parse(lineno, format!("bad {what} '{token}'")))
    }

    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let (addr, reg, hex) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(r), Some(h), None) => (a, r, h),
            _ => {
                return Err(Error::parse(
                    lineno,
                    "expected 'address,register,hex_bytes'",
                ))
            }
        };
        let address = parse_u8(addr, lineno, "address")?;
        let register = parse_u8(reg, lineno, "register")?;
        let hex = hex.trim();
        if hex.len() % 2 != 0 {
            return Err(Error::parse(lineno, "hex byte string has odd length"));
        }
        let mut bytes = Vec::with_capacity(hex.len() / 2);
        for pair in hex.as_bytes().chunks(2) {
            let pair = std::str::from_utf8(pair).expect("split from str");
            let byte = u8::from_str_radix(pair, 16)
                .map_err(|_| Error::parse(lineno, format!("bad hex pair '{pair}'")))?;
            bytes.push(byte);
        }
        entries.push((address, register, bytes));
    }
    Ok(entries)
}

/// Corrupt a recorded trace for fault-injection tests: flip SDA briefly
/// during the high phase of a mid-byte clock pulse (the 13th rising
/// edge when the trace is long enough, the 4th otherwise), which a
/// correct checker must flag.
pub fn inject_sda_glitch(samples: &[WireSample]) -> Vec<WireSample> {
    let mut rises = Vec::new();
    let mut scl = true;
    for (i, s) in samples.iter().enumerate() {
        if s.scl && !scl {
            rises.push(i);
        }
        scl = s.scl;
    }
    let target = if rises.len() > 12 { 12 } else { 3.min(rises.len().saturating_sub(1)) };
    let Some(&rise_idx) = rises.get(target) else {
        return samples.to_vec();
    };
    let rise = samples[rise_idx];
    let mut out = samples.to_vec();
    out.insert(
        rise_idx + 1,
        WireSample {
            cycle: rise.cycle + 1,
            sda: !rise.sda,
            scl: true,
        },
    );
    out.insert(
        rise_idx + 2,
        WireSample {
            cycle: rise.cycle + 2,
            sda: rise.sda,
            scl: true,
        },
    );
    out
}
