use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use super::CausalError;

/// Directed acyclic graph over named variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    parents: Vec<BTreeSet<usize>>,
    children: Vec<BTreeSet<usize>>,
}

impl CausalDag {
    pub fn new<S: AsRef<str>>(nodes: &[S], edges: &[(S, S)]) -> Result<Self, CausalError> {
        let mut dag = CausalDag {
            names: Vec::new(),
            index: BTreeMap::new(),
            parents: Vec::new(),
            children: Vec::new(),
        };
        for n in nodes {
            let n = n.as_ref();
            if dag.index.contains_key(n) {
                return Err(CausalError::DuplicateNode(n.to_string()));
            }
            dag.push_node(n);
        }
        for (a, b) in edges {
            let (a, b) = (dag.id(a.as_ref())?, dag.id(b.as_ref())?);
            dag.parents[b].insert(a);
            dag.children[a].insert(b);
        }
        if let Some((a, b)) = dag.cycle_edge() {
            return Err(CausalError::Cycle(dag.names[a].clone(), dag.names[b].clone()));
        }
        Ok(dag)
    }

    fn push_node(&mut self, name: &str) -> usize {
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.parents.push(BTreeSet::new());
        self.children.push(BTreeSet::new());
        id
    }

    /// Kahn's algorithm; returns some edge on a cycle if one exists.
    fn cycle_edge(&self) -> Option<(usize, usize)> {
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if seen == self.len() {
            return None;
        }
        let v = (0..self.len()).find(|&v| indeg[v] > 0)?;
        let p = *self.parents[v].iter().find(|&&p| indeg[p] > 0)?;
        Some((p, v))
    }

    /// One `A -> B` edge per line; a line holding a single name declares an
    /// isolated node. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CausalError> {
        let mut nodes: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let declare = |n: &str, nodes: &mut Vec<String>| {
            if !nodes.iter().any(|m| m == n) {
                nodes.push(n.to_string());
            }
        };
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| CausalError::Parse {
                line: k + 1,
                message: message.to_string(),
            };
            let parts: Vec<&str> = line.split("->").map(str::trim).collect();
            match parts.as_slice() {
                [n] if valid_name(n) => declare(n, &mut nodes),
                [a, b] if valid_name(a) && valid_name(b) => {
                    declare(a, &mut nodes);
                    declare(b, &mut nodes);
                    edges.push((a.to_string(), b.to_string()));
                }
                _ => return Err(err("expected `A -> B` or a single node name")),
            }
        }
        CausalDag::new(&nodes, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} -> {b}");
        }
        for (v, name) in self.names.iter().enumerate() {
            if self.parents[v].is_empty() && self.children[v].is_empty() {
                let _ = writeln!(out, "{name}");
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Result<usize, CausalError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| CausalError::UnknownNode(name.to_string()))
    }

    pub fn ids<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>, CausalError> {
        names.iter().map(|n| self.id(n.as_ref())).collect()
    }

    pub fn parents(&self, id: usize) -> &BTreeSet<usize> {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &BTreeSet<usize> {
        &self.children[id]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.children[a].contains(&b)
    }

    pub fn edges(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        for (a, cs) in self.children.iter().enumerate() {
            for &b in cs {
                out.push((self.names[a].as_str(), self.names[b].as_str()));
            }
        }
        out
    }

    /// Adds `a -> b`, refusing edges that would close a cycle.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<(), CausalError> {
        let (ia, ib) = (self.id(a)?, self.id(b)?);
        if ia == ib || self.descendants(&BTreeSet::from([ib])).contains(&ia) {
            return Err(CausalError::Cycle(a.to_string(), b.to_string()));
        }
        self.parents[ib].insert(ia);
        self.children[ia].insert(ib);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: &str, b: &str) -> Result<bool, CausalError> {
        let (ia, ib) = (self.id(a)?, self.id(b)?);
        self.parents[ib].remove(&ia);
        Ok(self.children[ia].remove(&ib))
    }

    /// The set itself and everything reachable along directed edges.
    pub fn descendants(&self, from: &BTreeSet<usize>) -> BTreeSet<usize> {
        reach(from, &self.children)
    }

    /// The set itself and everything with a directed path into it.
    pub fn ancestors(&self, of: &BTreeSet<usize>) -> BTreeSet<usize> {
        reach(of, &self.parents)
    }

    /// Copy with every edge into `set` deleted.
    pub fn without_incoming(&self, set: &BTreeSet<usize>) -> Self {
        let mut g = self.clone();
        for &v in set {
            for p in std::mem::take(&mut g.parents[v]) {
                g.children[p].remove(&v);
            }
        }
        g
    }

    /// Copy with every edge out of `set` deleted.
    pub fn without_outgoing(&self, set: &BTreeSet<usize>) -> Self {
        let mut g = self.clone();
        for &v in set {
            for c in std::mem::take(&mut g.children[v]) {
                g.parents[c].remove(&v);
            }
        }
        g
    }

    /// Actions `A`, membrane voltage, cellular behaviours and environmental
    /// factors `E` confounding the last two.
    pub fn bioelectric() -> Self {
        CausalDag::parse("A -> Vmem\nVmem -> Behaviours\nE -> Vmem\nE -> Behaviours").expect("built-in graph")
    }

    /// [`bioelectric`](Self::bioelectric) with calcium and gene expression
    /// between voltage and behaviour.
    pub fn bioelectric_expanded() -> Self {
        CausalDag::parse(
            "A -> Vmem\nVmem -> Calcium\nCalcium -> GeneExpression\nGeneExpression -> Behaviours\nE -> Vmem\nE -> Behaviours",
        )
        .expect("built-in graph")
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "bioelectric" => Some(Self::bioelectric()),
            "bioelectric-expanded" => Some(Self::bioelectric_expanded()),
            _ => None,
        }
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace)
}

fn reach(start: &BTreeSet<usize>, next: &[BTreeSet<usize>]) -> BTreeSet<usize> {
    let mut seen = start.clone();
    let mut stack: Vec<usize> = start.iter().copied().collect();
    while let Some(v) = stack.pop() {
        for &w in &next[v] {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen
}
