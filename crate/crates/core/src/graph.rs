//! Graph utilities shared by the analyses: strongly connected components and
//! backward reachability.

/// Strongly connected components of the subgraph induced by `active`,
/// following the successors returned by `succ`. Components come out in
/// reverse topological order (a component is emitted before any component
/// that can reach it).
pub fn sccs<F, I>(n: usize, active: &[bool], mut succ: F) -> Vec<Vec<usize>>
where
    F: FnMut(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0usize;
    // explicit DFS frames: (node, successor list, position)
    let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();

    for root in 0..n {
        if !active[root] || index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        let list: Vec<usize> = succ(root).into_iter().filter(|&t| active[t]).collect();
        frames.push((root, list, 0));

        while let Some((v, list, pos)) = frames.last_mut() {
            let v = *v;
            if *pos < list.len() {
                let w = list[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    let wl: Vec<usize> = succ(w).into_iter().filter(|&t| active[t]).collect();
                    frames.push((w, wl, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some((parent, _, _)) = frames.last() {
                    let p = *parent;
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// States of `active` from which some state of `target` is reachable using
/// the given successor relation (targets included).
pub fn can_reach<F, I>(n: usize, active: &[bool], target: &[bool], mut pred: F) -> Vec<bool>
where
    F: FnMut(usize) -> I,
    I: IntoIterator<Item = usize>,
{
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&s| active[s] && target[s]).collect();
    for &s in &queue {
        seen[s] = true;
    }
    while let Some(v) = queue.pop() {
        for u in pred(v) {
            if active[u] && !seen[u] {
                seen[u] = true;
                queue.push(u);
            }
        }
    }
    seen
}
