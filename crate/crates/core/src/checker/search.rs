//! Graph searches over a [`StateGraph`]. Everything here works on state and
//! edge indices; turning results into BPMN-level traces happens in the
//! parent module.

use std::collections::VecDeque;

use crate::semantics::StateGraph;

/// A path of edge indices from the initial state, optionally closed into a
/// lasso. `lasso_start` indexes the visited-state sequence (0 = initial
/// state, `i` = state after edge `i-1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EdgePath {
    pub edges: Vec<usize>,
    pub lasso_start: Option<usize>,
}

impl EdgePath {
    fn straight(edges: Vec<usize>) -> Self {
        EdgePath { edges, lasso_start: None }
    }
}

/// First state in BFS order satisfying `bad`, with its BFS-tree path.
pub(crate) fn first_state(g: &StateGraph, bad: impl Fn(usize) -> bool) -> Option<EdgePath> {
    (0..g.state_count()).find(|&s| bad(s)).map(|s| EdgePath::straight(g.path_to(s)))
}

/// First edge in BFS order satisfying `bad`; the path ends with that edge.
pub(crate) fn first_edge(g: &StateGraph, bad: impl Fn(usize) -> bool) -> Option<EdgePath> {
    (0..g.edge_count()).find(|&e| bad(e)).map(|e| {
        let mut p = g.path_to(g.edges[e].from);
        p.push(e);
        EdgePath::straight(p)
    })
}

/// Shortest path that takes a `hit` edge without first taking a `block`
/// edge. Breadth-first over the graph with `block` edges removed; ties go
/// to the earliest state and canonical firing order, like the main BFS.
pub(crate) fn hit_before_block(g: &StateGraph, hit: impl Fn(usize) -> bool, block: impl Fn(usize) -> bool) -> Option<EdgePath> {
    // parent[s] = None: unseen; Some(None): the root; Some(Some(e)): via e
    let mut parent: Vec<Option<Option<usize>>> = vec![None; g.state_count()];
    parent[g.initial] = Some(None);
    let mut queue = VecDeque::from([g.initial]);
    while let Some(s) = queue.pop_front() {
        for ei in g.out_edges(s) {
            if block(ei) {
                continue;
            }
            if hit(ei) {
                let mut path = vec![ei];
                let mut cur = s;
                while let Some(Some(e)) = parent[cur] {
                    path.push(e);
                    cur = g.edges[e].from;
                }
                path.reverse();
                return Some(EdgePath::straight(path));
            }
            let to = g.edges[ei].to;
            if parent[to].is_none() {
                parent[to] = Some(Some(ei));
                queue.push_back(to);
            }
        }
    }
    None
}

/// Strongly connected component id per state (iterative Tarjan).
pub(crate) fn scc_ids(g: &StateGraph) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = g.state_count();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (state, next outgoing edge to look at)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, g.out_edges(root).start));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei < g.out_edges(v).end {
                let w = g.edges[*ei].to;
                *ei += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, g.out_edges(w).start));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(u, _)) = call.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Lasso through the lowest-index state that lies on a cycle: its BFS-tree
/// prefix, then the shortest way back to it.
pub(crate) fn first_cycle(g: &StateGraph) -> Option<EdgePath> {
    let comp = scc_ids(g);
    let mut size = vec![0usize; g.state_count()];
    for &c in &comp {
        size[c] += 1;
    }
    let on_cycle = |s: usize| size[comp[s]] > 1 || g.successors(s).iter().any(|e| e.to == s);
    let s = (0..g.state_count()).find(|&s| on_cycle(s))?;
    let mut prefix = g.path_to(s);
    let lasso_start = prefix.len();
    let back = shortest_return(g, s, |t| comp[t] == comp[s]).expect("state lies on a cycle");
    prefix.extend(back);
    Some(EdgePath { edges: prefix, lasso_start: Some(lasso_start) })
}

/// Shortest non-empty edge path from `s` back to `s`, staying in `allowed`.
fn shortest_return(g: &StateGraph, s: usize, allowed: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let mut parent: Vec<Option<usize>> = vec![None; g.state_count()];
    let mut seen = vec![false; g.state_count()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(v) = queue.pop_front() {
        for ei in g.out_edges(v) {
            let w = g.edges[ei].to;
            if w == s {
                let mut path = vec![ei];
                let mut cur = v;
                while let Some(e) = parent[cur] {
                    path.push(e);
                    cur = g.edges[e].from;
                }
                path.reverse();
                return Some(path);
            }
            if !seen[w] && allowed(w) {
                seen[w] = true;
                parent[w] = Some(ei);
                queue.push_back(w);
            }
        }
    }
    None
}

/// Accepting-cycle search for `F(a && G !b)` where `a`/`b` classify edges.
///
/// Product states are `state * 2 + q`. In `q = 0` anything goes and an edge
/// that is `a` but not `b` may move to `q = 1`; `q = 1` only follows non-`b`
/// edges and is accepting. Terminal states stutter (an implicit self-loop
/// that fires nothing), so a run that stops after `a` without `b` is a
/// violation. Returns a lasso; a stutter cycle has an empty loop part
/// (`lasso_start == edges.len()`).
pub(crate) fn accepting_lasso(g: &StateGraph, a: impl Fn(usize) -> bool, b: impl Fn(usize) -> bool) -> Option<EdgePath> {
    // Successor: (product state, edge or None for stutter)
    let succ = |p: usize| -> Vec<(usize, Option<usize>)> {
        let (s, q) = (p / 2, p % 2);
        if g.terminal[s] {
            return vec![(p, None)];
        }
        let mut out = Vec::new();
        for ei in g.out_edges(s) {
            let to = g.edges[ei].to;
            let is_b = b(ei);
            if q == 0 {
                out.push((to * 2, Some(ei)));
                if a(ei) && !is_b {
                    out.push((to * 2 + 1, Some(ei)));
                }
            } else if !is_b {
                out.push((to * 2 + 1, Some(ei)));
            }
        }
        out
    };

    let n = g.state_count() * 2;
    let mut seen1 = vec![false; n];
    let mut seen2 = vec![false; n];
    struct Frame {
        p: usize,
        via: Option<usize>,
        succ: Vec<(usize, Option<usize>)>,
        next: usize,
    }
    let root = g.initial * 2;
    seen1[root] = true;
    let mut stack1 = vec![Frame { p: root, via: None, succ: succ(root), next: 0 }];
    while let Some(top) = stack1.last_mut() {
        if top.next < top.succ.len() {
            let (t, via) = top.succ[top.next];
            top.next += 1;
            if !seen1[t] {
                seen1[t] = true;
                stack1.push(Frame { p: t, via, succ: succ(t), next: 0 });
            }
            continue;
        }
        let seed = top.p;
        if seed % 2 == 1 {
            // inner search for a cycle back to the seed
            let mut stack2 = vec![Frame { p: seed, via: None, succ: succ(seed), next: 0 }];
            seen2[seed] = true;
            while let Some(top2) = stack2.last_mut() {
                if top2.next < top2.succ.len() {
                    let (t, via) = top2.succ[top2.next];
                    top2.next += 1;
                    if t == seed {
                        let mut edges: Vec<usize> = stack1.iter().filter_map(|f| f.via).collect();
                        let lasso_start = edges.len();
                        edges.extend(stack2.iter().skip(1).filter_map(|f| f.via));
                        edges.extend(via);
                        return Some(EdgePath { edges, lasso_start: Some(lasso_start) });
                    }
                    if !seen2[t] {
                        seen2[t] = true;
                        stack2.push(Frame { p: t, via, succ: succ(t), next: 0 });
                    }
                    continue;
                }
                stack2.pop();
            }
        }
        stack1.pop();
    }
    None
}
