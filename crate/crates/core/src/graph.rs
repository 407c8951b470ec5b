//! The expression graph and the backtracking stack.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write};
use std::sync::Arc;

use thiserror::Error;

/// Interned function or constructor name.
pub type Sym = Arc<str>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeContent {
    Bot,
    Free,
    Choice(NodeId, NodeId),
    Fun(Sym, Vec<NodeId>),
    Con(Sym, Vec<NodeId>),
    Lit(i64),
    Fwd(NodeId),
    /// Head, number of missing arguments, supplied arguments.
    Part(Sym, usize, Vec<NodeId>),
}

impl NodeContent {
    pub fn con(name: &str, children: Vec<NodeId>) -> NodeContent {
        NodeContent::Con(Arc::from(name), children)
    }

    pub fn fun(name: &str, children: Vec<NodeId>) -> NodeContent {
        NodeContent::Fun(Arc::from(name), children)
    }

    pub fn part(name: &str, missing: usize, supplied: Vec<NodeId>) -> NodeContent {
        NodeContent::Part(Arc::from(name), missing, supplied)
    }

    /// Outgoing edges in order.
    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        let (pair, rest): ([Option<NodeId>; 2], &[NodeId]) = match self {
            NodeContent::Choice(a, b) => ([Some(*a), Some(*b)], &[]),
            NodeContent::Fwd(n) => ([Some(*n), None], &[]),
            NodeContent::Fun(_, xs) | NodeContent::Con(_, xs) | NodeContent::Part(_, _, xs) => ([None, None], xs),
            NodeContent::Bot | NodeContent::Free | NodeContent::Lit(_) => ([None, None], &[]),
        };
        pair.into_iter().flatten().chain(rest.iter().copied())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NodeContent::Bot => "Bot",
            NodeContent::Free => "Free",
            NodeContent::Choice(..) => "Choice",
            NodeContent::Fun(..) => "Fun",
            NodeContent::Con(..) => "Con",
            NodeContent::Lit(_) => "Lit",
            NodeContent::Fwd(_) => "Fwd",
            NodeContent::Part(..) => "Part",
        }
    }

    fn label(&self) -> String {
        match self {
            NodeContent::Bot => "fail".into(),
            NodeContent::Free => "free".into(),
            NodeContent::Choice(..) => "?".into(),
            NodeContent::Fun(f, _) | NodeContent::Con(f, _) => f.to_string(),
            NodeContent::Lit(l) => l.to_string(),
            NodeContent::Fwd(_) => "FWD".into(),
            NodeContent::Part(f, k, _) => format!("PART {f} {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0} does not exist")]
    InvalidNode(NodeId),
    #[error("node {0} would forward to itself")]
    SelfForward(NodeId),
    #[error("forwarding cycle through node {0}")]
    FwdCycle(NodeId),
    #[error("node store exhausted after {0} nodes")]
    Exhausted(usize),
    #[error("backtracking stack is empty")]
    EmptyStack,
    #[error("choice frame on node {0} does not match the node's content")]
    CorruptChoiceFrame(NodeId),
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<NodeContent>,
    free_list: Vec<NodeId>,
    capacity: usize,
    pub root: Option<NodeId>,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

impl Graph {
    pub fn new() -> Graph {
        Graph::with_capacity_limit(u32::MAX as usize)
    }

    /// A graph that refuses to hold more than `limit` live nodes.
    pub fn with_capacity_limit(limit: usize) -> Graph {
        Graph { nodes: Vec::new(), free_list: Vec::new(), capacity: limit, root: None }
    }

    pub fn len(&self) -> usize {
        self.nodes.len() - self.free_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, c: &NodeContent) -> Result<(), GraphError> {
        match c.children().find(|n| n.index() >= self.nodes.len()) {
            Some(n) => Err(GraphError::InvalidNode(n)),
            None => Ok(()),
        }
    }

    pub fn alloc(&mut self, c: NodeContent) -> Result<NodeId, GraphError> {
        self.check(&c)?;
        if let Some(n) = self.free_list.pop() {
            self.nodes[n.index()] = c;
            return Ok(n);
        }
        if self.nodes.len() >= self.capacity {
            return Err(GraphError::Exhausted(self.nodes.len()));
        }
        self.nodes.push(c);
        Ok(NodeId((self.nodes.len() - 1) as u32))
    }

    pub fn get(&self, n: NodeId) -> &NodeContent {
        &self.nodes[n.index()]
    }

    pub fn contains(&self, n: NodeId) -> bool {
        n.index() < self.nodes.len()
    }

    /// Overwrites a node in place; every referrer observes the new content.
    pub fn set(&mut self, n: NodeId, c: NodeContent) -> Result<(), GraphError> {
        if !self.contains(n) {
            return Err(GraphError::InvalidNode(n));
        }
        if c == NodeContent::Fwd(n) {
            return Err(GraphError::SelfForward(n));
        }
        self.check(&c)?;
        self.nodes[n.index()] = c;
        Ok(())
    }

    /// Replaces the content of `n`, returning the old one.
    pub fn replace(&mut self, n: NodeId, c: NodeContent) -> Result<NodeContent, GraphError> {
        let old = self.get(n).clone();
        self.set(n, c)?;
        Ok(old)
    }

    /// First node on the forwarding chain from `n` that is not a `Fwd`.
    pub fn contract_fwd(&self, n: NodeId) -> Result<NodeId, GraphError> {
        let mut cur = n;
        let mut hops = 0usize;
        while let NodeContent::Fwd(next) = self.get(cur) {
            cur = *next;
            hops += 1;
            if hops > self.nodes.len() {
                return Err(GraphError::FwdCycle(n));
            }
        }
        Ok(cur)
    }

    pub fn reachable(&self, from: NodeId) -> BTreeSet<NodeId> {
        self.reachable_from([from])
    }

    pub fn reachable_from(&self, roots: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<NodeId> = roots.into_iter().collect();
        while let Some(n) = todo.pop() {
            if seen.insert(n) {
                todo.extend(self.get(n).children());
            }
        }
        seen
    }

    /// Canonical encoding of the subgraph reachable from `from`. Two
    /// snapshots are equal iff the subgraphs are isomorphic, respecting
    /// sharing, node kinds and child order.
    pub fn snapshot_reachable(&self, from: NodeId) -> Snapshot {
        let mut label: HashMap<NodeId, usize> = HashMap::new();
        let mut order = Vec::new();
        let mut todo = vec![from];
        while let Some(n) = todo.pop() {
            if label.contains_key(&n) {
                continue;
            }
            label.insert(n, order.len());
            order.push(n);
            let children: Vec<NodeId> = self.get(n).children().collect();
            todo.extend(children.into_iter().rev());
        }
        let nodes = order
            .iter()
            .map(|&n| {
                let c = self.get(n);
                let tag = match c {
                    NodeContent::Fun(f, _) => format!("Fun {f}"),
                    NodeContent::Con(f, _) => format!("Con {f}"),
                    NodeContent::Part(f, k, _) => format!("Part {f} {k}"),
                    NodeContent::Lit(l) => format!("Lit {l}"),
                    other => other.kind().to_string(),
                };
                (tag, c.children().map(|m| label[&m]).collect())
            })
            .collect();
        Snapshot { nodes }
    }

    /// Graphviz rendering of the subgraph reachable from `from`, sorted by
    /// node id.
    pub fn to_dot(&self, from: NodeId) -> String {
        self.to_dot_named(from, "G")
    }

    pub fn to_dot_named(&self, from: NodeId, name: &str) -> String {
        let mut out = format!("digraph {name} {{\n");
        let nodes = self.reachable(from);
        for &n in &nodes {
            let shape = if n == from { ", shape=doublecircle" } else { "" };
            writeln!(out, "  n{n} [label=\"{}\"{shape}];", self.get(n).label().replace('"', "\\\"")).unwrap();
        }
        for &n in &nodes {
            for (i, m) in self.get(n).children().enumerate() {
                writeln!(out, "  n{n} -> n{m} [label=\"{i}\"];").unwrap();
            }
        }
        out.push_str("}\n");
        out
    }

    /// Reclaims every node not reachable from `roots`. Returns how many
    /// nodes were freed.
    pub fn collect_garbage(&mut self, roots: impl IntoIterator<Item = NodeId>) -> usize {
        let live = self.reachable_from(roots);
        let already: BTreeSet<NodeId> = self.free_list.iter().copied().collect();
        let mut freed = 0;
        for i in 0..self.nodes.len() {
            let n = NodeId(i as u32);
            if !live.contains(&n) && !already.contains(&n) {
                self.nodes[i] = NodeContent::Bot;
                self.free_list.push(n);
                freed += 1;
            }
        }
        // Reuse low ids first for stable output.
        self.free_list.sort_by(|a, b| b.cmp(a));
        freed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Snapshot {
    /// Nodes in depth-first preorder: tag and child labels.
    pub nodes: Vec<(String, Vec<usize>)>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    /// Undoes a deterministic rewrite.
    Undo,
    /// Right alternative of a choice.
    Choice,
    /// Remaining alternative of a narrowing step.
    Narrow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub target: NodeId,
    pub replacement: NodeContent,
    pub kind: FrameKind,
}

impl Frame {
    pub fn undo(target: NodeId, replacement: NodeContent) -> Frame {
        Frame { target, replacement, kind: FrameKind::Undo }
    }

    pub fn choice(target: NodeId, replacement: NodeContent) -> Frame {
        Frame { target, replacement, kind: FrameKind::Choice }
    }

    pub fn narrow(target: NodeId, replacement: NodeContent) -> Frame {
        Frame { target, replacement, kind: FrameKind::Narrow }
    }

    pub fn is_choice(&self) -> bool {
        self.kind != FrameKind::Undo
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BtStack {
    frames: Vec<Frame>,
}

impl BtStack {
    pub fn new() -> BtStack {
        BtStack::default()
    }

    pub fn push(&mut self, f: Frame) {
        self.frames.push(f);
    }

    pub fn pop(&mut self) -> Option<Frame> {
        self.frames.pop()
    }

    pub fn top(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Every node mentioned by a frame.
    pub fn roots(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.frames
            .iter()
            .flat_map(|f| std::iter::once(f.target).chain(f.replacement.children()))
    }
}

/// Content restoring the node a choice-marked frame is about to rewrite.
fn restore_content(g: &Graph, f: &Frame) -> Result<NodeContent, GraphError> {
    match f.kind {
        FrameKind::Undo => unreachable!("only choice frames are restored"),
        FrameKind::Narrow => Ok(NodeContent::Free),
        FrameKind::Choice => match (g.get(f.target), &f.replacement) {
            (NodeContent::Fwd(l), NodeContent::Fwd(r)) => Ok(NodeContent::Choice(*l, *r)),
            _ => Err(GraphError::CorruptChoiceFrame(f.target)),
        },
    }
}

/// Takes a choice-marked frame: rewrites its target to the alternative and
/// pushes a deterministic frame that restores the node as it was before the
/// choice was made.
pub fn take_choice(g: &mut Graph, s: &mut BtStack, f: Frame) -> Result<(), GraphError> {
    let restore = restore_content(g, &f)?;
    g.set(f.target, f.replacement)?;
    s.push(Frame::undo(f.target, restore));
    Ok(())
}

/// Pops the top frame and applies it. A choice-marked frame is taken as in
/// [`backtrack_to_choice`], so repeated single steps unwind to the graph
/// that existed before the frames were pushed.
pub fn backtrack_step(g: &mut Graph, s: &mut BtStack) -> Result<(), GraphError> {
    let f = s.pop().ok_or(GraphError::EmptyStack)?;
    if f.is_choice() {
        take_choice(g, s, f)
    } else {
        g.set(f.target, f.replacement)
    }
}

/// Undoes deterministic frames until a choice-marked frame is found and
/// taken. Returns false once the stack is exhausted.
pub fn backtrack_to_choice(g: &mut Graph, s: &mut BtStack) -> Result<bool, GraphError> {
    while let Some(f) = s.pop() {
        if f.is_choice() {
            take_choice(g, s, f)?;
            return Ok(true);
        }
        g.set(f.target, f.replacement)?;
    }
    Ok(false)
}
