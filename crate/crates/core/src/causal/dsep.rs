use std::collections::BTreeSet;

use super::{CausalDag, CausalError};

/// Pearl's do-calculus rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Insertion/deletion of observations.
    One,
    /// Action/observation exchange.
    Two,
    /// Insertion/deletion of actions.
    Three,
}

impl TryFrom<u8> for Rule {
    type Error = CausalError;

    fn try_from(n: u8) -> Result<Self, CausalError> {
        match n {
            1 => Ok(Rule::One),
            2 => Ok(Rule::Two),
            3 => Ok(Rule::Three),
            other => Err(CausalError::UnknownRule(other)),
        }
    }
}

fn disjoint(dag: &CausalDag, sets: &[&BTreeSet<usize>]) -> Result<(), CausalError> {
    let mut seen = BTreeSet::new();
    for s in sets {
        for &v in s.iter() {
            if !seen.insert(v) {
                return Err(CausalError::Overlap(dag.name(v).to_string()));
            }
        }
    }
    Ok(())
}

/// Nodes joined to `x` by a trail that is active given `z` (Bayes-ball).
fn reachable(dag: &CausalDag, x: &BTreeSet<usize>, z: &BTreeSet<usize>) -> BTreeSet<usize> {
    let anc_z = dag.ancestors(z);
    // (node, arrived from a child)
    let mut stack: Vec<(usize, bool)> = x.iter().map(|&v| (v, true)).collect();
    let mut visited = BTreeSet::new();
    let mut out = BTreeSet::new();
    while let Some((v, up)) = stack.pop() {
        if !visited.insert((v, up)) {
            continue;
        }
        let observed = z.contains(&v);
        if !observed {
            out.insert(v);
        }
        if up {
            if !observed {
                stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
                stack.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !observed {
                stack.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if anc_z.contains(&v) {
                stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    out
}

pub(crate) fn d_separated_ids(dag: &CausalDag, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    let r = reachable(dag, x, z);
    y.iter().all(|v| !r.contains(v))
}

/// Whether `z` blocks every trail between `x` and `y`.
pub fn d_separated<S: AsRef<str>>(dag: &CausalDag, x: &[S], y: &[S], z: &[S]) -> Result<bool, CausalError> {
    let (x, y, z) = (dag.ids(x)?, dag.ids(y)?, dag.ids(z)?);
    disjoint(dag, &[&x, &y, &z])?;
    Ok(d_separated_ids(dag, &x, &y, &z))
}

/// Back-door criterion: no member of `z` descends from `x`, and `z` blocks
/// every trail from `x` to `y` that starts with an edge into `x`.
pub fn backdoor_admissible<S: AsRef<str>>(dag: &CausalDag, x: &[S], y: &[S], z: &[S]) -> Result<bool, CausalError> {
    let (x, y, z) = (dag.ids(x)?, dag.ids(y)?, dag.ids(z)?);
    disjoint(dag, &[&x, &y, &z])?;
    Ok(admissible_ids(dag, &x, &y, &z))
}

fn admissible_ids(dag: &CausalDag, x: &BTreeSet<usize>, y: &BTreeSet<usize>, z: &BTreeSet<usize>) -> bool {
    let desc = dag.descendants(x);
    z.is_disjoint(&desc) && d_separated_ids(&dag.without_outgoing(x), x, y, z)
}

/// All admissible back-door sets with at most `max_size` members, smallest
/// first and in name order within a size.
pub fn backdoor_sets<S: AsRef<str>>(
    dag: &CausalDag,
    x: &[S],
    y: &[S],
    max_size: usize,
) -> Result<Vec<Vec<String>>, CausalError> {
    let (x, y) = (dag.ids(x)?, dag.ids(y)?);
    disjoint(dag, &[&x, &y])?;
    let desc = dag.descendants(&x);
    let mut pool: Vec<usize> = (0..dag.len()).filter(|v| !desc.contains(v) && !y.contains(v)).collect();
    pool.sort_by(|&a, &b| dag.name(a).cmp(dag.name(b)));
    let cut = dag.without_outgoing(&x);
    let mut found = Vec::new();
    for size in 0..=max_size.min(pool.len()) {
        let mut pick = Vec::with_capacity(size);
        combinations(&pool, size, 0, &mut pick, &mut |z| {
            let zs: BTreeSet<usize> = z.iter().copied().collect();
            if d_separated_ids(&cut, &x, &y, &zs) {
                found.push(z.iter().map(|&v| dag.name(v).to_string()).collect());
            }
        });
    }
    Ok(found)
}

fn combinations(pool: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..pool.len() {
        if pool.len() - i < k - pick.len() {
            break;
        }
        pick.push(pool[i]);
        combinations(pool, k, i + 1, pick, f);
        pick.pop();
    }
}

/// Whether `rule` licenses its rewrite of `P(y | do(x), z, w)`: the rule's
/// independence `(Y ⟂ Z | X, W)` is checked by d-separation in the mutilated
/// graph the rule names. An empty `z` is vacuously licensed.
pub fn rule_applicable<S: AsRef<str>>(
    rule: Rule,
    dag: &CausalDag,
    y: &[S],
    x_do: &[S],
    z: &[S],
    w: &[S],
) -> Result<bool, CausalError> {
    let (y, x, z, w) = (dag.ids(y)?, dag.ids(x_do)?, dag.ids(z)?, dag.ids(w)?);
    disjoint(dag, &[&y, &x, &z, &w])?;
    if z.is_empty() {
        return Ok(true);
    }
    let bar_x = dag.without_incoming(&x);
    let graph = match rule {
        Rule::One => bar_x,
        Rule::Two => bar_x.without_outgoing(&z),
        Rule::Three => {
            let anc_w = bar_x.ancestors(&w);
            let z_w: BTreeSet<usize> = z.difference(&anc_w).copied().collect();
            dag.without_incoming(&x.union(&z_w).copied().collect())
        }
    };
    let given: BTreeSet<usize> = x.union(&w).copied().collect();
    Ok(d_separated_ids(&graph, &y, &z, &given))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Enumerates every simple trail and checks each one for blocking.
    pub(crate) fn oracle(dag: &CausalDag, x: usize, y: usize, z: &BTreeSet<usize>) -> bool {
        fn walk(dag: &CausalDag, path: &mut Vec<usize>, y: usize, z: &BTreeSet<usize>) -> bool {
            let v = *path.last().unwrap();
            if v == y {
                return !open(dag, path, z);
            }
            let nbrs: Vec<usize> = dag.parents(v).iter().chain(dag.children(v)).copied().collect();
            for n in nbrs {
                if path.contains(&n) {
                    continue;
                }
                path.push(n);
                let blocked = walk(dag, path, y, z);
                path.pop();
                if !blocked {
                    return false;
                }
            }
            true
        }
        fn open(dag: &CausalDag, path: &[usize], z: &BTreeSet<usize>) -> bool {
            path.windows(3).all(|w| {
                let (a, m, b) = (w[0], w[1], w[2]);
                if dag.has_edge(a, m) && dag.has_edge(b, m) {
                    !dag.descendants(&BTreeSet::from([m])).is_disjoint(z)
                } else {
                    !z.contains(&m)
                }
            })
        }
        walk(dag, &mut vec![x], y, z)
    }

    pub(crate) fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> CausalDag {
        let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((names[i].clone(), names[j].clone()));
                }
            }
        }
        CausalDag::new(&names, &edges).unwrap()
    }

    #[test]
    fn chain_fork_collider() {
        let chain = CausalDag::parse("A -> B\nB -> C").unwrap();
        assert!(d_separated(&chain, &["A"], &["C"], &["B"]).unwrap());
        assert!(!d_separated(&chain, &["A"], &["C"], &[] as &[&str]).unwrap());
        let collider = CausalDag::parse("A -> B\nC -> B\nB -> D").unwrap();
        assert!(d_separated(&collider, &["A"], &["C"], &[] as &[&str]).unwrap());
        assert!(!d_separated(&collider, &["A"], &["C"], &["B"]).unwrap());
        assert!(!d_separated(&collider, &["A"], &["C"], &["D"]).unwrap());
        assert_eq!(
            d_separated(&chain, &["A"], &["Q"], &[] as &[&str]),
            Err(CausalError::UnknownNode("Q".into()))
        );
        assert!(matches!(
            d_separated(&chain, &["A"], &["C"], &["A"]),
            Err(CausalError::Overlap(_))
        ));
    }

    #[test]
    fn bioelectric_graph() {
        let mut g = CausalDag::bioelectric();
        assert!(!d_separated(&g, &["Vmem"], &["Behaviours"], &[] as &[&str]).unwrap());
        g.remove_edge("Vmem", "Behaviours").unwrap();
        assert!(d_separated(&g, &["Vmem"], &["Behaviours"], &["E"]).unwrap());
    }

    #[test]
    fn matches_path_oracle_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.random_range(2..=7);
            let g = random_dag(n, 0.35, &mut rng);
            let (x, y) = (0, n - 1);
            let others: Vec<usize> = (1..n - 1).collect();
            for mask in 0u32..(1 << others.len()) {
                let z: BTreeSet<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                let fast = d_separated_ids(&g, &BTreeSet::from([x]), &BTreeSet::from([y]), &z);
                assert_eq!(fast, oracle(&g, x, y, &z), "{:?} z={z:?}", g.edges());
            }
        }
    }

    #[test]
    fn backdoor_on_builtin_graphs() {
        let g = CausalDag::bioelectric();
        let sets = backdoor_sets(&g, &["Vmem"], &["Behaviours"], 3).unwrap();
        assert_eq!(sets[0], vec!["E".to_string()]);
        assert!(!sets.contains(&vec![]));
        let g = CausalDag::bioelectric_expanded();
        let sets = backdoor_sets(&g, &["Calcium"], &["Behaviours"], 2).unwrap();
        assert!(sets.contains(&vec!["E".to_string()]));
        assert!(sets.contains(&vec!["Vmem".to_string()]));
        let no_parents = backdoor_sets(&g, &["A"], &["Behaviours"], 0).unwrap();
        assert_eq!(no_parents, vec![Vec::<String>::new()]);
    }

    #[test]
    fn backdoor_sets_satisfy_the_criterion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = random_dag(7, 0.4, &mut rng);
            let (x, y) = ("n1", "n6");
            let desc = g.descendants(&BTreeSet::from([g.id(x).unwrap()]));
            let cut = g.without_outgoing(&BTreeSet::from([g.id(x).unwrap()]));
            for z in backdoor_sets(&g, &[x], &[y], 4).unwrap() {
                let z: Vec<&str> = z.iter().map(String::as_str).collect();
                let zs = g.ids(&z).unwrap();
                assert!(zs.is_disjoint(&desc));
                assert!(d_separated(&cut, &[x], &[y], &z).unwrap());
                assert!(backdoor_admissible(&g, &[x], &[y], &z).unwrap());
            }
        }
    }

    #[test]
    fn rules() {
        let g = CausalDag::parse("X -> Y\nZ").unwrap();
        assert!(rule_applicable(Rule::One, &g, &["Y"], &["X"], &["Z"], &[]).unwrap());
        let chain = CausalDag::parse("X -> Y").unwrap();
        assert!(rule_applicable(Rule::Two, &chain, &["Y"], &[], &["X"], &[]).unwrap());
        let confounded = CausalDag::parse("X -> Y\nU -> X\nU -> Y").unwrap();
        assert!(!rule_applicable(Rule::Two, &confounded, &["Y"], &[], &["X"], &[]).unwrap());
        let g = CausalDag::parse("X -> Y\nZ -> Y").unwrap();
        assert!(!rule_applicable(Rule::Three, &g, &["Y"], &["X"], &["Z"], &[]).unwrap());
        let g = CausalDag::parse("Z -> X\nX -> Y").unwrap();
        assert!(rule_applicable(Rule::Three, &g, &["Y"], &["X"], &["Z"], &[]).unwrap());
        assert_eq!(Rule::try_from(4), Err(CausalError::UnknownRule(4)));
    }
}
