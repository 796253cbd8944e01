//! Multi-controlled `R_y` circuits: construction, simulation and text formats.
//!
//! A [`ControlledRotation`] stores the table angle `θ`; the physical gate is
//! `R_y(2θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`, applied where every control
//! reads its required value. Open controls (required value 0) are native here
//! and only lowered to X-conjugation when exporting OpenQASM.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::angles::{AlphaTable, ThetaAngles};
use crate::digitization::Statevector;
use crate::error::{Error, Result};
use crate::scalar::{fmt17, CompensatedSum, Real};

/// A control condition on one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Control {
    pub qubit: usize,
    /// `true` for a closed (control-on-1) control.
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlledRotation<T> {
    pub target: usize,
    pub controls: Vec<Control>,
    /// Table angle; the rotation applied is `R_y(2·angle)`.
    pub angle: T,
}

impl<T: Real> ControlledRotation<T> {
    /// Rotation on `target` controlled on the `height` qubits directly above it reading `k`.
    pub fn from_pattern(target: usize, height: usize, k: u64, angle: T) -> Self {
        let controls = (0..height)
            .map(|i| Control {
                qubit: target - height + i,
                value: (k >> (height - 1 - i)) & 1 == 1,
            })
            .collect();
        Self {
            target,
            controls,
            angle,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<T> {
    n_qubits: usize,
    gates: Vec<ControlledRotation<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[ControlledRotation<T>] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Append a gate after checking qubit indices.
    pub fn push(&mut self, gate: ControlledRotation<T>) -> Result<()> {
        if gate.target >= self.n_qubits {
            return Err(Error::Index(format!("target {} outside {} qubits", gate.target, self.n_qubits)));
        }
        let mut seen = BTreeSet::new();
        for c in &gate.controls {
            if c.qubit >= self.n_qubits || c.qubit == gate.target || !seen.insert(c.qubit) {
                return Err(Error::Contract(format!(
                    "invalid control on qubit {} for target {}",
                    c.qubit, gate.target
                )));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Copy without gates whose angle is exactly zero.
    pub fn without_identity_gates(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().filter(|g| g.angle != T::zero()).cloned().collect(),
        }
    }

    /// Swap two gates; used to check commutation within a target block.
    pub fn swap_gates(&mut self, a: usize, b: usize) {
        self.gates.swap(a, b);
    }
}

/// Cascade circuit with one rotation per `(ℓ, k)`, blocks ordered by `ℓ`.
///
/// Every rotation is controlled on all preceding qubits. Zero-angle gates are
/// kept; use [`Circuit::without_identity_gates`] to drop them.
pub fn build_theta_circuit<T: Real>(table: &impl ThetaAngles<T>, n_qubits: usize) -> Result<Circuit<T>> {
    if table.n_qubits() != n_qubits {
        return Err(Error::Contract(format!(
            "angle table covers {} qubits, circuit has {n_qubits}",
            table.n_qubits()
        )));
    }
    if n_qubits >= 32 {
        return Err(Error::Resource(format!(
            "a full cascade on {n_qubits} qubits has 2^{n_qubits} gates"
        )));
    }
    let mut circuit = Circuit::new(n_qubits);
    for ell in 0..n_qubits {
        for k in 0..(1u64 << ell) {
            circuit
                .gates
                .push(ControlledRotation::from_pattern(ell, ell, k, table.theta(ell, k)));
        }
    }
    Ok(circuit)
}

/// Site-wise circuit from a nearest-neighbour α table.
///
/// Each rotation is controlled on the previous site and the inner bits of its
/// own site; vanishing long-range operators are not emitted, nor are gates
/// with a zero angle.
pub fn build_alpha_circuit<T: Real>(alpha: &AlphaTable<T>, n_qubits: usize, n_q: usize, d: usize) -> Result<Circuit<T>> {
    if d != 1 {
        return Err(Error::Contract(format!(
            "site-wise circuits are only synthesized for nearest-neighbour tables, got d={d}"
        )));
    }
    if alpha.n_qubits() != n_qubits || alpha.n_q() != n_q {
        return Err(Error::Contract("α table does not match the register layout".into()));
    }
    let mut circuit = Circuit::new(n_qubits);
    for e in alpha.entries() {
        if e.angle != T::zero() {
            circuit
                .gates
                .push(ControlledRotation::from_pattern(e.ell, e.height, e.k, e.angle));
        }
    }
    Ok(circuit)
}

fn apply_gate<T: Real>(amps: &mut [T], n_qubits: usize, gate: &ControlledRotation<T>) {
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    let tmask = bit(gate.target);
    let mut cmask = 0usize;
    let mut cval = 0usize;
    for c in &gate.controls {
        cmask |= bit(c.qubit);
        if c.value {
            cval |= bit(c.qubit);
        }
    }
    let full = (1usize << n_qubits) - 1;
    let free = full & !(cmask | tmask);
    let (s, c) = gate.angle.sin_cos();
    // iterate over all subsets of the free bits
    let mut sub = 0usize;
    loop {
        let i0 = cval | sub;
        let i1 = i0 | tmask;
        let a0 = amps[i0];
        let a1 = amps[i1];
        amps[i0] = c * a0 - s * a1;
        amps[i1] = s * a0 + c * a1;
        if sub == free {
            break;
        }
        sub = (sub.wrapping_sub(free)) & free;
    }
}

/// Apply the circuit to `|0…0⟩`.
pub fn simulate<T: Real>(circuit: &Circuit<T>, max_qubits: usize) -> Result<Statevector<T>> {
    let mut state = Statevector::zero_state(circuit.n_qubits, max_qubits)?;
    let n = circuit.n_qubits;
    let amps = state.amplitudes_mut();
    for gate in &circuit.gates {
        apply_gate(amps, n, gate);
    }
    Ok(state)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity<T: Real>(a: &Statevector<T>, b: &Statevector<T>) -> Result<T> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Contract(format!(
            "fidelity between {} and {} qubit states",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    let overlap = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| *x * *y)
        .collect::<CompensatedSum<T>>()
        .value();
    Ok((overlap * overlap).min(T::one()))
}

const QASM_HEADER: &str = "OPENQASM 3.0;\ninclude \"stdgates.inc\";\n";

/// OpenQASM 3 text. Controlled rotations use `ctrl(n) @ ry(2θ)`; open
/// controls are wrapped in `x` gates.
pub fn export_circuit_text<T: Real>(circuit: &Circuit<T>) -> String {
    let mut out = String::from(QASM_HEADER);
    let _ = writeln!(out, "qubit[{}] q;", circuit.n_qubits);
    for gate in &circuit.gates {
        let open: Vec<usize> = gate.controls.iter().filter(|c| !c.value).map(|c| c.qubit).collect();
        for q in &open {
            let _ = writeln!(out, "x q[{q}];");
        }
        let angle = fmt17(gate.angle + gate.angle);
        if gate.controls.is_empty() {
            let _ = writeln!(out, "ry({angle}) q[{}];", gate.target);
        } else {
            let wires: Vec<String> = gate
                .controls
                .iter()
                .map(|c| format!("q[{}]", c.qubit))
                .chain(std::iter::once(format!("q[{}]", gate.target)))
                .collect();
            let _ = writeln!(
                out,
                "ctrl({}) @ ry({angle}) {};",
                gate.controls.len(),
                wires.join(", ")
            );
        }
        for q in &open {
            let _ = writeln!(out, "x q[{q}];");
        }
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_wire(token: &str, line: usize) -> Result<usize> {
    let inner = token
        .trim()
        .strip_prefix("q[")
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, format!("expected q[i], found `{token}`")))?;
    inner
        .parse()
        .map_err(|_| parse_err(line, format!("bad qubit index `{inner}`")))
}

fn parse_angle<T: Real>(text: &str, line: usize) -> Result<T> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad angle `{text}`")))?;
    T::from_f64(v).ok_or_else(|| parse_err(line, format!("angle {v} not representable")))
}

enum QasmLine {
    X(usize),
    Rotation {
        angle: f64,
        wires: Vec<usize>,
        n_controls: usize,
    },
}

fn parse_qasm_line(text: &str, line: usize) -> Result<QasmLine> {
    let body = text
        .strip_suffix(';')
        .ok_or_else(|| parse_err(line, "missing `;`"))?
        .trim();
    if let Some(rest) = body.strip_prefix("x ") {
        return Ok(QasmLine::X(parse_wire(rest, line)?));
    }
    let (n_controls, rest) = match body.strip_prefix("ctrl(") {
        Some(rest) => {
            let (n, rest) = rest
                .split_once(')')
                .ok_or_else(|| parse_err(line, "unterminated ctrl modifier"))?;
            let n: usize = n.trim().parse().map_err(|_| parse_err(line, "bad control count"))?;
            let rest = rest
                .trim_start()
                .strip_prefix('@')
                .ok_or_else(|| parse_err(line, "expected `@` after ctrl"))?;
            (n, rest.trim_start())
        }
        None => (0, body),
    };
    let rest = rest
        .strip_prefix("ry(")
        .ok_or_else(|| parse_err(line, format!("unsupported instruction `{body}`")))?;
    let (angle, wires) = rest
        .split_once(')')
        .ok_or_else(|| parse_err(line, "unterminated angle"))?;
    let angle: f64 = parse_angle(angle, line)?;
    let wires: Vec<usize> = wires
        .split(',')
        .map(|w| parse_wire(w, line))
        .collect::<Result<_>>()?;
    if wires.len() != n_controls + 1 {
        return Err(parse_err(line, "wire count does not match control count"));
    }
    Ok(QasmLine::Rotation {
        angle,
        wires,
        n_controls,
    })
}

/// Read text produced by [`export_circuit_text`].
///
/// `x` gates are accepted only as conjugation pairs around a rotation on one
/// of its control wires.
pub fn parse_circuit_text<T: Real>(text: &str) -> Result<Circuit<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("//"))
        .peekable();

    match lines.next() {
        Some((_, "OPENQASM 3.0;")) => {}
        Some((n, other)) => return Err(parse_err(n, format!("expected OPENQASM 3.0 header, found `{other}`"))),
        None => return Err(parse_err(0, "empty input")),
    }
    let mut n_qubits = None;
    let mut parsed = Vec::new();
    for (n, l) in lines.by_ref() {
        if l.starts_with("include ") {
            continue;
        }
        if let Some(rest) = l.strip_prefix("qubit[") {
            let size = rest
                .strip_suffix("] q;")
                .ok_or_else(|| parse_err(n, "expected `qubit[n] q;`"))?;
            n_qubits = Some(size.parse::<usize>().map_err(|_| parse_err(n, "bad register size"))?);
            continue;
        }
        if n_qubits.is_none() {
            return Err(parse_err(n, "gate before register declaration"));
        }
        parsed.push((n, parse_qasm_line(l, n)?));
    }
    let n_qubits = n_qubits.ok_or_else(|| parse_err(0, "missing register declaration"))?;
    let mut circuit = Circuit::new(n_qubits);

    let mut i = 0;
    while i < parsed.len() {
        let mut flipped = Vec::new();
        while let (n, QasmLine::X(q)) = &parsed[i] {
            flipped.push(*q);
            i += 1;
            if i == parsed.len() {
                return Err(parse_err(*n, "dangling x gate"));
            }
        }
        let (n, QasmLine::Rotation { angle, wires, n_controls }) = &parsed[i] else {
            unreachable!("loop above stops at a rotation")
        };
        let (n, angle) = (*n, *angle);
        let controls: Vec<Control> = wires[..*n_controls]
            .iter()
            .map(|&qubit| Control {
                qubit,
                value: !flipped.contains(&qubit),
            })
            .collect();
        if flipped.iter().any(|q| !wires[..*n_controls].contains(q)) {
            return Err(parse_err(n, "x gate on a wire that is not a control"));
        }
        i += 1;
        for q in &flipped {
            match parsed.get(i) {
                Some((_, QasmLine::X(p))) if p == q => i += 1,
                _ => return Err(parse_err(n, format!("missing closing x on q[{q}]"))),
            }
        }
        let angle = T::from_f64(angle).ok_or_else(|| parse_err(n, "angle not representable"))? / T::lit(2.0);
        circuit
            .push(ControlledRotation {
                target: wires[*n_controls],
                controls,
                angle,
            })
            .map_err(|e| parse_err(n, e.to_string()))?;
    }
    Ok(circuit)
}

/// Line-oriented native format: a `qubits=<n>` header, then
/// `ry target=<ℓ> angle=<radians> controls=<q:b,q:b,...>` per gate.
pub fn export_native<T: Real>(circuit: &Circuit<T>) -> String {
    let mut out = format!("qubits={}\n", circuit.n_qubits);
    for g in &circuit.gates {
        let controls: Vec<String> = g
            .controls
            .iter()
            .map(|c| format!("{}:{}", c.qubit, u8::from(c.value)))
            .collect();
        let _ = writeln!(
            out,
            "ry target={} angle={} controls={}",
            g.target,
            fmt17(g.angle),
            controls.join(",")
        );
    }
    out
}

pub fn parse_native<T: Real>(text: &str) -> Result<Circuit<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (n, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    let n_qubits: usize = header
        .strip_prefix("qubits=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(n, "expected `qubits=<n>`"))?;
    let mut circuit = Circuit::new(n_qubits);
    for (n, l) in lines {
        let mut fields = l.split_whitespace();
        if fields.next() != Some("ry") {
            return Err(parse_err(n, "expected `ry`"));
        }
        let mut target = None;
        let mut angle = None;
        let mut controls = None;
        for f in fields {
            let (key, value) = f.split_once('=').ok_or_else(|| parse_err(n, format!("bad field `{f}`")))?;
            match key {
                "target" => target = Some(value.parse::<usize>().map_err(|_| parse_err(n, "bad target"))?),
                "angle" => angle = Some(parse_angle::<T>(value, n)?),
                "controls" => {
                    let list = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|c| {
                                let (q, b) = c.split_once(':').ok_or_else(|| parse_err(n, "bad control"))?;
                                let qubit = q.parse().map_err(|_| parse_err(n, "bad control qubit"))?;
                                let value = match b {
                                    "0" => false,
                                    "1" => true,
                                    _ => return Err(parse_err(n, "control bit must be 0 or 1")),
                                };
                                Ok(Control { qubit, value })
                            })
                            .collect::<Result<Vec<_>>>()?
                    };
                    controls = Some(list);
                }
                other => return Err(parse_err(n, format!("unknown field `{other}`"))),
            }
        }
        let gate = ControlledRotation {
            target: target.ok_or_else(|| parse_err(n, "missing target"))?,
            angle: angle.ok_or_else(|| parse_err(n, "missing angle"))?,
            controls: controls.ok_or_else(|| parse_err(n, "missing controls"))?,
        };
        circuit.push(gate).map_err(|e| parse_err(n, e.to_string()))?;
    }
    Ok(circuit)
}
