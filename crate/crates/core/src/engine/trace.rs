//! Rule-firing events.

use std::fmt;
use std::io::Write;

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    Bot,
    Lit,
    Free,
    Con,
    Choice,
    Fun,
    Let,
    Var,
    Part,
    CaseBot,
    CaseFwd,
    CaseFun,
    CaseChoice,
    CaseLit,
    CaseLitFree,
    CaseCon,
    CaseConFree,
    ApplyFree,
    ApplyChoice,
    ApplyUnder,
    ApplyFull,
    ApplyOver,
    NormBot,
    NormLit,
    NormFree,
    NormCon,
    NormChoice,
    NormPart,
    Bt,
    BtChoice,
}

impl RuleName {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Bot => "Bot",
            RuleName::Lit => "Lit",
            RuleName::Free => "Free",
            RuleName::Con => "Con",
            RuleName::Choice => "Choice",
            RuleName::Fun => "Fun",
            RuleName::Let => "Let",
            RuleName::Var => "Var",
            RuleName::Part => "Part",
            RuleName::CaseBot => "Case-Bot",
            RuleName::CaseFwd => "Case-Fwd",
            RuleName::CaseFun => "Case-Fun",
            RuleName::CaseChoice => "Case-Choice",
            RuleName::CaseLit => "Case-Lit",
            RuleName::CaseLitFree => "Case-LitFree",
            RuleName::CaseCon => "Case-Con",
            RuleName::CaseConFree => "Case-ConFree",
            RuleName::ApplyFree => "Apply-Free",
            RuleName::ApplyChoice => "Apply-Choice",
            RuleName::ApplyUnder => "Apply-Under",
            RuleName::ApplyFull => "Apply-Full",
            RuleName::ApplyOver => "Apply-Over",
            RuleName::NormBot => "Norm-Bot",
            RuleName::NormLit => "Norm-Lit",
            RuleName::NormFree => "Norm-Free",
            RuleName::NormCon => "Norm-Con",
            RuleName::NormChoice => "Norm-Choice",
            RuleName::NormPart => "Norm-Part",
            RuleName::Bt => "BT",
            RuleName::BtChoice => "BT-Choice",
        }
    }

    /// Backtracking events are traced but do not consume the step budget.
    pub fn is_step(self) -> bool {
        !matches!(self, RuleName::Bt | RuleName::BtChoice)
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub rule: RuleName,
    pub node: NodeId,
    /// Backtracking stack depth when the rule fired.
    pub depth: usize,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RULE {} node={} depth={}", self.rule, self.node, self.depth)
    }
}

pub trait Tracer: Send {
    fn event(&mut self, e: &TraceEvent);
}

/// Writes one line per event.
pub struct WriteTracer<W: Write + Send>(pub W);

impl<W: Write + Send> Tracer for WriteTracer<W> {
    fn event(&mut self, e: &TraceEvent) {
        let _ = writeln!(self.0, "{e}");
    }
}

/// Keeps every event in memory.
#[derive(Debug, Default, Clone)]
pub struct RecordingTracer {
    pub events: std::sync::Arc<std::sync::Mutex<Vec<TraceEvent>>>,
}

impl RecordingTracer {
    pub fn count(&self, rule: RuleName) -> usize {
        self.events.lock().unwrap().iter().filter(|e| e.rule == rule).count()
    }

    pub fn lines(&self) -> Vec<String> {
        self.events.lock().unwrap().iter().map(|e| e.to_string()).collect()
    }
}

impl Tracer for RecordingTracer {
    fn event(&mut self, e: &TraceEvent) {
        self.events.lock().unwrap().push(*e);
    }
}
