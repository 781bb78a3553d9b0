//! Pulse-sequence DSL: parser, pretty-printer, compiler and canned builders.
//!
//! The language is line oriented, `#` starts a comment. Files use the
//! `.pseq` extension and begin with the version header comment `#pseq v1`.
//!
//! ```text
//! let <ident> = <duration>
//! pulse <angle_deg> <phase: x|y|-x|-y>
//! pulse_t <duration-or-ident> <phase>
//! delay <duration-or-ident>
//! sweep <ident> from <duration> to <duration> step <duration>
//! ```
//!
//! Durations are a decimal number with a `ns`, `us` or `ms` suffix. At most
//! two sweep axes are allowed. `pulse` takes its rotation angle in degrees;
//! the duration is derived at compile time from the Rabi frequency.
//! `pulse_t` drives for a literal duration and exists for Rabi-type sweeps
//! of the pulse length itself.

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use std::fmt;

/// Time unit suffix of a duration literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Ns,
    Us,
    Ms,
}

impl Unit {
    fn seconds(self) -> f64 {
        match self {
            Unit::Ns => 1e-9,
            Unit::Us => 1e-6,
            Unit::Ms => 1e-3,
        }
    }
    fn suffix(self) -> &'static str {
        match self {
            Unit::Ns => "ns",
            Unit::Us => "us",
            Unit::Ms => "ms",
        }
    }
}

/// A duration literal, kept as (value, unit) so pretty-printing round-trips
/// bit exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DurationLit {
    pub value: f64,
    pub unit: Unit,
}

impl DurationLit {
    pub fn seconds(&self) -> f64 {
        self.value * self.unit.seconds()
    }

    /// Express a time in seconds as a nanosecond literal.
    pub fn from_seconds(s: f64) -> Self {
        DurationLit {
            value: s / 1e-9,
            unit: Unit::Ns,
        }
    }
}

impl fmt::Display for DurationLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit.suffix())
    }
}

/// Pulse phase, limited to the four cardinal axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    X,
    Y,
    MinusX,
    MinusY,
}

impl Phase {
    pub fn radians<T: Scalar>(self) -> T {
        match self {
            Phase::X => T::zero(),
            Phase::Y => T::pi() * T::half(),
            Phase::MinusX => T::pi(),
            Phase::MinusY => T::pi() * T::of(1.5),
        }
    }
    fn token(self) -> &'static str {
        match self {
            Phase::X => "x",
            Phase::Y => "y",
            Phase::MinusX => "-x",
            Phase::MinusY => "-y",
        }
    }
    fn parse(tok: &str) -> Option<Self> {
        match tok {
            "x" => Some(Phase::X),
            "y" => Some(Phase::Y),
            "-x" => Some(Phase::MinusX),
            "-y" => Some(Phase::MinusY),
            _ => None,
        }
    }
}

/// Duration operand: literal or named variable.
#[derive(Clone, Debug, PartialEq)]
pub enum DurationExpr {
    Literal(DurationLit),
    Var(String),
}

impl fmt::Display for DurationExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DurationExpr::Literal(d) => write!(f, "{d}"),
            DurationExpr::Var(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Statement {
    Let {
        name: String,
        value: DurationLit,
    },
    Pulse {
        angle_deg: f64,
        phase: Phase,
    },
    PulseT {
        duration: DurationExpr,
        phase: Phase,
    },
    Delay {
        duration: DurationExpr,
    },
    Sweep {
        name: String,
        from: DurationLit,
        to: DurationLit,
        step: DurationLit,
    },
}

/// Parsed program.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub statements: Vec<Statement>,
}

/// Machine-readable diagnostic category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagnosticCode {
    /// Malformed statement or unknown keyword.
    Syntax,
    /// Number without a valid time-unit suffix.
    Unit,
    /// Duration variable with no `let` or `sweep` declaration.
    UndefinedVariable,
    /// Same name declared twice (`let` or `sweep`).
    DuplicateLet,
    /// Sweep step that is zero, negative, or runs against the range.
    InvalidStep,
    /// More than two sweep axes.
    SweepOverflow,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCode::Syntax => "syntax",
            DiagnosticCode::Unit => "unit",
            DiagnosticCode::UndefinedVariable => "undefined-variable",
            DiagnosticCode::DuplicateLet => "duplicate-let",
            DiagnosticCode::InvalidStep => "invalid-step",
            DiagnosticCode::SweepOverflow => "sweep-overflow",
        };
        f.write_str(s)
    }
}

/// One parse problem, naming the offending line, column and token.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// 1-based line number.
    pub line: usize,
    /// 1-based column of the offending token.
    pub column: usize,
    pub token: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: [{}] {} (token `{}`)",
            self.line, self.column, self.code, self.message, self.token
        )
    }
}

fn parse_duration_token(tok: &str) -> std::result::Result<DurationLit, DiagnosticCode> {
    let lower = tok.to_ascii_lowercase();
    let (num, unit) = if let Some(n) = lower.strip_suffix("ns") {
        (n, Unit::Ns)
    } else if let Some(n) = lower.strip_suffix("us") {
        (n, Unit::Us)
    } else if let Some(n) = lower.strip_suffix("ms") {
        (n, Unit::Ms)
    } else {
        return Err(DiagnosticCode::Unit);
    };
    let value: f64 = num.parse().map_err(|_| DiagnosticCode::Unit)?;
    if !value.is_finite() {
        return Err(DiagnosticCode::Unit);
    }
    Ok(DurationLit { value, unit })
}

fn is_ident(tok: &str) -> bool {
    let mut chars = tok.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Token with its 1-based column.
fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut col = 0usize;
    for part in line.split_whitespace() {
        let off = line[col..].find(part).unwrap() + col;
        out.push((off + 1, part));
        col = off + part.len();
    }
    out
}

/// Parse DSL text into a [`Program`], or all diagnostics found.
pub fn parse(source: &str) -> std::result::Result<Program, Vec<Diagnostic>> {
    let mut statements = Vec::new();
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut declared: Vec<(String, usize)> = Vec::new();
    let mut sweep_count = 0usize;

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let toks = tokens_with_columns(line);
        if toks.is_empty() {
            continue;
        }
        let diag = |code, column: usize, token: &str, message: String| Diagnostic {
            code,
            line: line_no,
            column,
            token: token.to_string(),
            message,
        };
        let dur_operand = |(col, tok): (usize, &str), diags: &mut Vec<Diagnostic>| -> Option<DurationExpr> {
            if is_ident(tok) && parse_duration_token(tok).is_err() {
                return Some(DurationExpr::Var(tok.to_string()));
            }
            match parse_duration_token(tok) {
                Ok(d) => Some(DurationExpr::Literal(d)),
                Err(code) => {
                    diags.push(diag(code, col, tok, "expected a duration like `200ns`".into()));
                    None
                }
            }
        };

        match toks[0].1 {
            "let" => {
                if toks.len() != 4 || toks[2].1 != "=" {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[0].0,
                        toks[0].1,
                        "expected `let <name> = <duration>`".into(),
                    ));
                    continue;
                }
                let name = toks[1].1;
                if !is_ident(name) {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[1].0,
                        name,
                        "invalid identifier".into(),
                    ));
                    continue;
                }
                let value = match parse_duration_token(toks[3].1) {
                    Ok(v) => v,
                    Err(code) => {
                        diags.push(diag(code, toks[3].0, toks[3].1, "expected a duration like `200ns`".into()));
                        continue;
                    }
                };
                if value.value < 0.0 {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[3].0,
                        toks[3].1,
                        "durations must be non-negative".into(),
                    ));
                    continue;
                }
                if declared.iter().any(|(n, _)| n == name) {
                    diags.push(diag(
                        DiagnosticCode::DuplicateLet,
                        toks[1].0,
                        name,
                        "name already declared".into(),
                    ));
                    continue;
                }
                declared.push((name.to_string(), line_no));
                statements.push(Statement::Let {
                    name: name.to_string(),
                    value,
                });
            }
            "pulse" => {
                if toks.len() != 3 {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[0].0,
                        toks[0].1,
                        "expected `pulse <angle_deg> <phase>`".into(),
                    ));
                    continue;
                }
                let angle: f64 = match toks[1].1.parse() {
                    Ok(a) => a,
                    Err(_) => {
                        diags.push(diag(
                            DiagnosticCode::Syntax,
                            toks[1].0,
                            toks[1].1,
                            "expected an angle in degrees".into(),
                        ));
                        continue;
                    }
                };
                if !angle.is_finite() || angle < 0.0 {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[1].0,
                        toks[1].1,
                        "angle must be finite and non-negative".into(),
                    ));
                    continue;
                }
                let Some(phase) = Phase::parse(toks[2].1) else {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[2].0,
                        toks[2].1,
                        "phase must be one of x, y, -x, -y".into(),
                    ));
                    continue;
                };
                statements.push(Statement::Pulse {
                    angle_deg: angle,
                    phase,
                });
            }
            "pulse_t" => {
                if toks.len() != 3 {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[0].0,
                        toks[0].1,
                        "expected `pulse_t <duration> <phase>`".into(),
                    ));
                    continue;
                }
                let Some(duration) = dur_operand(toks[1], &mut diags) else {
                    continue;
                };
                if let DurationExpr::Literal(d) = &duration {
                    if d.value < 0.0 {
                        diags.push(diag(
                            DiagnosticCode::Syntax,
                            toks[1].0,
                            toks[1].1,
                            "durations must be non-negative".into(),
                        ));
                        continue;
                    }
                }
                let Some(phase) = Phase::parse(toks[2].1) else {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[2].0,
                        toks[2].1,
                        "phase must be one of x, y, -x, -y".into(),
                    ));
                    continue;
                };
                statements.push(Statement::PulseT { duration, phase });
            }
            "delay" => {
                if toks.len() != 2 {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[0].0,
                        toks[0].1,
                        "expected `delay <duration>`".into(),
                    ));
                    continue;
                }
                let Some(duration) = dur_operand(toks[1], &mut diags) else {
                    continue;
                };
                if let DurationExpr::Literal(d) = &duration {
                    if d.value < 0.0 {
                        diags.push(diag(
                            DiagnosticCode::Syntax,
                            toks[1].0,
                            toks[1].1,
                            "durations must be non-negative".into(),
                        ));
                        continue;
                    }
                }
                statements.push(Statement::Delay { duration });
            }
            "sweep" => {
                if toks.len() != 8 || toks[2].1 != "from" || toks[4].1 != "to" || toks[6].1 != "step" {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[0].0,
                        toks[0].1,
                        "expected `sweep <name> from <dur> to <dur> step <dur>`".into(),
                    ));
                    continue;
                }
                let name = toks[1].1;
                if !is_ident(name) {
                    diags.push(diag(
                        DiagnosticCode::Syntax,
                        toks[1].0,
                        name,
                        "invalid identifier".into(),
                    ));
                    continue;
                }
                let mut lits = [None; 3];
                let mut bad = false;
                for (k, &pos) in [3usize, 5, 7].iter().enumerate() {
                    match parse_duration_token(toks[pos].1) {
                        Ok(v) => lits[k] = Some(v),
                        Err(code) => {
                            diags.push(diag(code, toks[pos].0, toks[pos].1, "expected a duration like `200ns`".into()));
                            bad = true;
                        }
                    }
                }
                if bad {
                    continue;
                }
                let (from, to, step) = (lits[0].unwrap(), lits[1].unwrap(), lits[2].unwrap());
                if step.seconds() <= 0.0 {
                    diags.push(diag(
                        DiagnosticCode::InvalidStep,
                        toks[7].0,
                        toks[7].1,
                        "sweep step must be positive".into(),
                    ));
                    continue;
                }
                if to.seconds() < from.seconds() {
                    diags.push(diag(
                        DiagnosticCode::InvalidStep,
                        toks[5].0,
                        toks[5].1,
                        "sweep range is empty (`to` before `from`)".into(),
                    ));
                    continue;
                }
                if from.seconds() < 0.0 {
                    diags.push(diag(
                        DiagnosticCode::InvalidStep,
                        toks[3].0,
                        toks[3].1,
                        "sweep start must be non-negative".into(),
                    ));
                    continue;
                }
                if declared.iter().any(|(n, _)| n == name) {
                    diags.push(diag(
                        DiagnosticCode::DuplicateLet,
                        toks[1].0,
                        name,
                        "name already declared".into(),
                    ));
                    continue;
                }
                sweep_count += 1;
                if sweep_count > 2 {
                    diags.push(diag(
                        DiagnosticCode::SweepOverflow,
                        toks[0].0,
                        name,
                        "at most two sweep axes are supported".into(),
                    ));
                    continue;
                }
                declared.push((name.to_string(), line_no));
                statements.push(Statement::Sweep {
                    name: name.to_string(),
                    from,
                    to,
                    step,
                });
            }
            other => {
                diags.push(diag(
                    DiagnosticCode::Syntax,
                    toks[0].0,
                    other,
                    "unknown statement".into(),
                ));
            }
        }
    }

    // name resolution: variables may be declared after use
    let names: Vec<&str> = statements
        .iter()
        .filter_map(|s| match s {
            Statement::Let { name, .. } | Statement::Sweep { name, .. } => Some(name.as_str()),
            _ => None,
        })
        .collect();
    // re-scan the source for use sites so diagnostics carry line numbers
    for (idx, raw_line) in source.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        let toks = tokens_with_columns(line);
        if toks.len() == 2 && toks[0].1 == "delay" || toks.len() == 3 && toks[0].1 == "pulse_t" {
            let (col, tok) = toks[1];
            if is_ident(tok) && parse_duration_token(tok).is_err() && !names.contains(&tok) {
                diags.push(Diagnostic {
                    code: DiagnosticCode::UndefinedVariable,
                    line: idx + 1,
                    column: col,
                    token: tok.to_string(),
                    message: "no `let` or `sweep` declares this name".into(),
                });
            }
        }
    }

    if diags.is_empty() {
        Ok(Program { statements })
    } else {
        diags.sort_by_key(|d| (d.line, d.column));
        Err(diags)
    }
}

/// Canonical text for a program; `parse(pretty_print(p))` is structurally
/// identical to `p`.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::from("#pseq v1\n");
    for s in &program.statements {
        match s {
            Statement::Let { name, value } => out.push_str(&format!("let {name} = {value}\n")),
            Statement::Pulse { angle_deg, phase } => {
                out.push_str(&format!("pulse {} {}\n", angle_deg, phase.token()))
            }
            Statement::PulseT { duration, phase } => {
                out.push_str(&format!("pulse_t {} {}\n", duration, phase.token()))
            }
            Statement::Delay { duration } => out.push_str(&format!("delay {duration}\n")),
            Statement::Sweep {
                name,
                from,
                to,
                step,
            } => out.push_str(&format!("sweep {name} from {from} to {to} step {step}\n")),
        }
    }
    out
}

/// One event of a resolved timeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event<T: Scalar> {
    Pulse { angle: T, phase: T, duration: T },
    Delay { duration: T },
}

/// Event of a compiled sequence; swept durations reference a sweep axis.
#[derive(Clone, Debug, PartialEq)]
pub enum EventTemplate<T: Scalar> {
    Pulse { angle: T, phase: T, duration: T },
    Delay { duration: T },
    SweptPulse { axis: usize, phase: T },
    SweptDelay { axis: usize },
}

/// A sweep axis with its expanded values (seconds).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis<T: Scalar> {
    pub name: String,
    pub values: Vec<T>,
}

impl<T: Scalar> SweepAxis<T> {
    /// True when consecutive values are equally spaced (relative 1e-9).
    pub fn is_uniform(&self) -> bool {
        if self.values.len() < 3 {
            return true;
        }
        let step = self.values[1] - self.values[0];
        self.values
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= step.abs() * T::of(1e-9) + T::of(1e-18))
    }
}

/// Compiled pulse sequence: flat event templates plus expanded sweep axes.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence<T: Scalar> {
    pub events: Vec<EventTemplate<T>>,
    pub sweep_axes: Vec<SweepAxis<T>>,
}

impl<T: Scalar> PulseSequence<T> {
    /// Number of sweep points per axis (all 1 when no axes).
    pub fn axis_len(&self, axis: usize) -> usize {
        self.sweep_axes.get(axis).map_or(1, |a| a.values.len())
    }

    /// Resolve the timeline at the given sweep indices (one per axis).
    pub fn timeline(&self, idx: &[usize]) -> Vec<Event<T>> {
        self.events
            .iter()
            .map(|e| match e {
                EventTemplate::Pulse {
                    angle,
                    phase,
                    duration,
                } => Event::Pulse {
                    angle: *angle,
                    phase: *phase,
                    duration: *duration,
                },
                EventTemplate::Delay { duration } => Event::Delay {
                    duration: *duration,
                },
                EventTemplate::SweptPulse { axis, phase } => Event::Pulse {
                    angle: T::nan(),
                    phase: *phase,
                    duration: self.sweep_axes[*axis].values[idx[*axis]],
                },
                EventTemplate::SweptDelay { axis } => Event::Delay {
                    duration: self.sweep_axes[*axis].values[idx[*axis]],
                },
            })
            .collect()
    }

    /// Total duration of the timeline at the given sweep indices.
    pub fn total_duration(&self, idx: &[usize]) -> T {
        self.timeline(idx)
            .iter()
            .map(|e| match e {
                Event::Pulse { duration, .. } | Event::Delay { duration } => *duration,
            })
            .sum()
    }

    /// Sum of all fixed pulse rotation angles (rad).
    pub fn total_rotation(&self) -> T {
        self.events
            .iter()
            .map(|e| match e {
                EventTemplate::Pulse { angle, .. } => *angle,
                _ => T::zero(),
            })
            .sum()
    }
}

/// Number of sweep values: floor((to - from)/step) + 1, endpoints included
/// when the step divides the range.
pub fn sweep_len(from: f64, to: f64, step: f64) -> usize {
    (((to - from) / step) + 1e-9).floor() as usize + 1
}

/// Compile a parsed program against an angular Rabi frequency (rad/s).
pub fn compile<T: Scalar>(program: &Program, omega1: T) -> Result<PulseSequence<T>> {
    let has_pulse = program
        .statements
        .iter()
        .any(|s| matches!(s, Statement::Pulse { .. }));
    if has_pulse && !(omega1 > T::zero()) {
        return Err(CoreError::Compile(
            "sequence contains angle-defined pulses but omega1 is zero".into(),
        ));
    }

    let mut lets: Vec<(String, f64)> = Vec::new();
    let mut axes: Vec<SweepAxis<T>> = Vec::new();
    let mut axis_names: Vec<String> = Vec::new();
    for s in &program.statements {
        match s {
            Statement::Let { name, value } => lets.push((name.clone(), value.seconds())),
            Statement::Sweep {
                name,
                from,
                to,
                step,
            } => {
                let n = sweep_len(from.seconds(), to.seconds(), step.seconds());
                let values = (0..n)
                    .map(|k| T::of(from.seconds() + k as f64 * step.seconds()))
                    .collect();
                axis_names.push(name.clone());
                axes.push(SweepAxis {
                    name: name.clone(),
                    values,
                });
            }
            _ => {}
        }
    }

    let resolve = |expr: &DurationExpr| -> Result<std::result::Result<T, usize>> {
        match expr {
            DurationExpr::Literal(d) => Ok(Ok(T::of(d.seconds()))),
            DurationExpr::Var(n) => {
                if let Some((_, v)) = lets.iter().find(|(ln, _)| ln == n) {
                    Ok(Ok(T::of(*v)))
                } else if let Some(ax) = axis_names.iter().position(|a| a == n) {
                    Ok(Err(ax))
                } else {
                    Err(CoreError::Compile(format!("undefined variable `{n}`")))
                }
            }
        }
    };

    let mut events = Vec::new();
    for s in &program.statements {
        match s {
            Statement::Pulse { angle_deg, phase } => {
                let angle = T::of(angle_deg.to_radians());
                events.push(EventTemplate::Pulse {
                    angle,
                    phase: phase.radians(),
                    duration: angle / omega1,
                });
            }
            Statement::PulseT { duration, phase } => match resolve(duration)? {
                Ok(d) => events.push(EventTemplate::Pulse {
                    angle: d * omega1,
                    phase: phase.radians(),
                    duration: d,
                }),
                Err(axis) => events.push(EventTemplate::SweptPulse {
                    axis,
                    phase: phase.radians(),
                }),
            },
            Statement::Delay { duration } => match resolve(duration)? {
                Ok(d) => events.push(EventTemplate::Delay { duration: d }),
                Err(axis) => events.push(EventTemplate::SweptDelay { axis }),
            },
            _ => {}
        }
    }

    Ok(PulseSequence {
        events,
        sweep_axes: axes,
    })
}

fn fmt_ns(seconds: f64) -> String {
    format!("{}", DurationLit::from_seconds(seconds))
}

/// DSL text for an electrically detected Rabi experiment: one x pulse whose
/// duration is swept from 0 to `t_max` in steps of `step` (seconds).
pub fn rabi(t_max: f64, step: f64) -> String {
    format!(
        "#pseq v1\nsweep t_rabi from 0ns to {} step {}\npulse_t t_rabi x\n",
        fmt_ns(t_max),
        fmt_ns(step)
    )
}

/// DSL text for the Carr-Purcell echo tomography sequence
/// pi/2 - tau1 - pi - tau2 - pi/2 with tau2 swept.
pub fn cp_echo(tau1: f64, tau2_from: f64, tau2_to: f64, tau2_step: f64) -> String {
    format!(
        "#pseq v1\nlet tau1 = {}\nsweep tau2 from {} to {} step {}\npulse 90 x\ndelay tau1\npulse 180 x\ndelay tau2\npulse 90 x\n",
        fmt_ns(tau1),
        fmt_ns(tau2_from),
        fmt_ns(tau2_to),
        fmt_ns(tau2_step)
    )
}

/// DSL text for the echo-decay experiment: pi/2 - tau - pi - tau - pi/2 with
/// tau swept, sampling the echo at tau2 = tau1.
pub fn echo_decay(tau_from: f64, tau_to: f64, tau_step: f64) -> String {
    format!(
        "#pseq v1\nsweep tau from {} to {} step {}\npulse 90 x\ndelay tau\npulse 180 x\ndelay tau\npulse 90 x\n",
        fmt_ns(tau_from),
        fmt_ns(tau_to),
        fmt_ns(tau_step)
    )
}
