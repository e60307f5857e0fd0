//! Clique-indexed risk instances.
//!
//! States are the vertices of a graph, the prior is uniform, and the
//! receiver compares a target action `a_T` whose risk value is the largest
//! posterior mass on a K-clique against a fallback `a_0` with constant value
//! one. The sender gets 1 for `a_T` and 0 otherwise, so a value of `K/n` is
//! reachable exactly when the graph has a K-clique.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::model::{
    ic_regret, sender_value, InstanceMetadata, PersuasionInstance, Posterior, RiskSpec, Signal,
    SignalingScheme,
};

/// Index of the target action in generated instances.
pub const TARGET_ACTION: usize = 0;
/// Index of the fallback action in generated instances.
pub const FALLBACK_ACTION: usize = 1;

fn adjacency(m: usize, edges: &[[usize; 2]]) -> Result<Vec<Vec<bool>>> {
    let mut adj = vec![vec![false; m]; m];
    for &[i, j] in edges {
        if i >= m || j >= m {
            return Err(Error::Graph(format!(
                "edge ({i}, {j}) has an endpoint outside 0..{m}"
            )));
        }
        if i == j {
            return Err(Error::Graph(format!("self-loop at vertex {i}")));
        }
        adj[i][j] = true;
        adj[j][i] = true;
    }
    Ok(adj)
}

/// All K-cliques in lexicographic order, by exhaustive search.
pub fn k_cliques(m: usize, edges: &[[usize; 2]], k: usize, cap: usize) -> Result<Vec<Vec<usize>>> {
    if m > cap {
        return Err(Error::CliqueCap { vertices: m, cap });
    }
    if k == 0 {
        return Err(Error::Graph("clique size must be at least 1".into()));
    }
    let adj = adjacency(m, edges)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    extend(&adj, k, 0, &mut current, &mut out);
    Ok(out)
}

fn extend(
    adj: &[Vec<bool>],
    k: usize,
    start: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    let need = k - current.len();
    for v in start..adj.len() {
        if adj.len() - v < need {
            break;
        }
        if current.iter().all(|&u| adj[u][v]) {
            current.push(v);
            extend(adj, k, v + 1, current, out);
            current.pop();
        }
    }
}

/// Explicit facet lists: clique indicators for `a_T` (or the single zero
/// vector when no K-clique exists) and the all-ones vector for `a_0`.
pub fn clique_facets(
    m: usize,
    edges: &[[usize; 2]],
    k: usize,
    cap: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let cliques = k_cliques(m, edges, k, cap)?;
    let target = if cliques.is_empty() {
        vec![vec![0.0; m]]
    } else {
        cliques
            .iter()
            .map(|c| {
                let mut ind = vec![0.0; m];
                for &v in c {
                    ind[v] = 1.0;
                }
                ind
            })
            .collect()
    };
    Ok(vec![target, vec![vec![1.0; m]]])
}

/// Builds the decision instance for a graph on `num_vertices` vertices.
pub fn gen_clique_instance(
    num_vertices: usize,
    edges: &[[usize; 2]],
    k: usize,
) -> Result<PersuasionInstance> {
    if num_vertices == 0 {
        return Err(Error::Graph("graph has no vertices".into()));
    }
    if k == 0 || k > num_vertices {
        return Err(Error::Graph(format!(
            "K = {k} must lie in 1..={num_vertices}"
        )));
    }
    adjacency(num_vertices, edges)?;
    let mut canonical: Vec<[usize; 2]> = edges
        .iter()
        .map(|&[i, j]| if i < j { [i, j] } else { [j, i] })
        .collect();
    canonical.sort_unstable();
    canonical.dedup();
    let n = num_vertices as f64;
    Ok(PersuasionInstance {
        states: (0..num_vertices).map(|v| format!("v{v}")).collect(),
        actions: vec!["a_T".into(), "a_0".into()],
        prior: vec![1.0 / n; num_vertices],
        receiver_payoff: vec![vec![0.0, 0.0]; num_vertices],
        sender_payoff: vec![vec![1.0, 0.0]; num_vertices],
        risk: RiskSpec::SuccinctClique {
            edges: canonical,
            k,
        },
        metadata: Some(InstanceMetadata {
            threshold: Some(k as f64 / n),
        }),
    })
}

/// Same instance with the clique risk replaced by its explicit facet lists.
pub fn expand_clique_facets(inst: &PersuasionInstance, cap: usize) -> Result<PersuasionInstance> {
    let RiskSpec::SuccinctClique { edges, k } = &inst.risk else {
        return Err(Error::UnsupportedRisk(
            "expected a clique-indexed risk".into(),
        ));
    };
    let facets = clique_facets(inst.m(), edges, *k, cap)?;
    Ok(PersuasionInstance {
        risk: RiskSpec::ExplicitPolyhedral { facets },
        ..inst.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueDecision {
    pub achievable: bool,
    /// Optimal sender value of the expanded instance.
    pub value: f64,
    pub threshold: f64,
    /// First K-clique in lexicographic order, if any.
    pub clique: Option<Vec<usize>>,
    /// Two-signal scheme revealing whether the state lies in `clique`.
    pub witness: Option<SignalingScheme>,
    pub witness_value: Option<f64>,
}

/// Two signals: `s_T` on the clique's states, `s_0` on the rest.
pub fn clique_witness(inst: &PersuasionInstance, clique: &[usize]) -> Result<SignalingScheme> {
    let m = inst.m();
    let inside: f64 = clique.iter().map(|&v| inst.prior[v]).sum();
    let mut on = vec![0.0; m];
    let mut off = inst.prior.clone();
    for &v in clique {
        on[v] = inst.prior[v] / inside;
        off[v] = 0.0;
    }
    let mut signals = vec![Signal {
        probability: inside,
        posterior: Posterior::from_vec_unchecked(on),
        action: TARGET_ACTION,
        facet: None,
    }];
    let outside = 1.0 - inside;
    if outside > 0.0 {
        for p in &mut off {
            *p /= outside;
        }
        signals.push(Signal {
            probability: outside,
            posterior: Posterior::from_vec_unchecked(off),
            action: FALLBACK_ACTION,
            facet: None,
        });
    }
    Ok(SignalingScheme::new(signals))
}

/// Decides whether the sender can reach value `eta` and, when a K-clique
/// exists, builds and checks the witness scheme.
pub fn clique_decision(inst: &PersuasionInstance, eta: f64, cap: usize) -> Result<CliqueDecision> {
    let RiskSpec::SuccinctClique { edges, k } = &inst.risk else {
        return Err(Error::UnsupportedRisk(
            "expected a clique-indexed risk".into(),
        ));
    };
    let explicit = expand_clique_facets(inst, cap)?;
    let solved = exact::solve_exact(&explicit)?;
    let clique = k_cliques(inst.m(), edges, *k, cap)?.into_iter().next();
    let (witness, witness_value) = match &clique {
        Some(c) => {
            let scheme = clique_witness(inst, c)?;
            for s in &scheme.signals {
                let regret = ic_regret(inst, &s.posterior, s.action)?;
                if regret > 1e-9 {
                    return Err(Error::Verification(format!(
                        "witness signal for action {} has regret {regret:e}",
                        s.action
                    )));
                }
            }
            let value = sender_value(inst, &scheme)?;
            (Some(scheme), Some(value))
        }
        None => (None, None),
    };
    Ok(CliqueDecision {
        achievable: solved.value >= eta - 1e-9,
        value: solved.value,
        threshold: eta,
        clique,
        witness,
        witness_value,
    })
}

/// Parses an edge list: one `i j` pair per line, `#` comments, and an
/// optional `vertices N` line. Without it the vertex count is one more than
/// the largest endpoint.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<[usize; 2]>)> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Graph(format!("line {}: bad vertex {s:?}: {e}", idx + 1)))
        };
        match fields.as_slice() {
            ["vertices", n] => declared = Some(parse(n)?),
            [i, j] => edges.push([parse(i)?, parse(j)?]),
            _ => {
                return Err(Error::Graph(format!(
                    "line {}: expected `i j` or `vertices N`, got {line:?}",
                    idx + 1
                )))
            }
        }
    }
    let implied = edges.iter().flatten().map(|&v| v + 1).max().unwrap_or(0);
    let n = declared.unwrap_or(implied);
    if n < implied {
        return Err(Error::Graph(format!(
            "edge endpoint {} exceeds vertex count {n}",
            implied - 1
        )));
    }
    Ok((n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvar::{self, FacetSet, DEFAULT_CLIQUE_CAP};

    const TRIANGLE: [[usize; 2]; 3] = [[0, 1], [1, 2], [0, 2]];
    const PATH3: [[usize; 2]; 2] = [[0, 1], [1, 2]];
    const CYCLE4: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];

    #[test]
    fn generated_thresholds() {
        let t = gen_clique_instance(3, &TRIANGLE, 3).unwrap();
        assert_eq!(t.m(), 3);
        assert_eq!(t.metadata.as_ref().unwrap().threshold, Some(1.0));
        t.check().unwrap();
        let p = gen_clique_instance(3, &PATH3, 3).unwrap();
        assert_eq!(p.metadata.unwrap().threshold, Some(1.0));
        let c = gen_clique_instance(4, &CYCLE4, 2).unwrap();
        assert_eq!(c.metadata.unwrap().threshold, Some(0.5));
    }

    #[test]
    fn malformed_graphs_rejected() {
        assert!(gen_clique_instance(3, &[[0, 3]], 2).is_err());
        assert!(gen_clique_instance(3, &[[1, 1]], 2).is_err());
        assert!(gen_clique_instance(3, &TRIANGLE, 4).is_err());
        assert!(gen_clique_instance(3, &TRIANGLE, 0).is_err());
    }

    #[test]
    fn expanded_facets() {
        let t = expand_clique_facets(&gen_clique_instance(3, &TRIANGLE, 3).unwrap(), 20).unwrap();
        let RiskSpec::ExplicitPolyhedral { facets } = &t.risk else {
            panic!()
        };
        assert_eq!(facets[0], vec![vec![1.0, 1.0, 1.0]]);
        assert_eq!(facets[1], vec![vec![1.0, 1.0, 1.0]]);

        let c = expand_clique_facets(&gen_clique_instance(4, &CYCLE4, 2).unwrap(), 20).unwrap();
        let RiskSpec::ExplicitPolyhedral { facets } = &c.risk else {
            panic!()
        };
        assert_eq!(facets[0].len(), 4);

        let p = expand_clique_facets(&gen_clique_instance(3, &PATH3, 3).unwrap(), 20).unwrap();
        let RiskSpec::ExplicitPolyhedral { facets } = &p.risk else {
            panic!()
        };
        assert_eq!(facets[0], vec![vec![0.0; 3]]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = gen_clique_instance(21, &[[0, 1]], 2).unwrap();
        assert!(matches!(
            expand_clique_facets(&inst, 20),
            Err(Error::CliqueCap { .. })
        ));
        assert!(cvar::rho(&inst, &inst.prior, 0).is_err());
    }

    #[test]
    fn decisions_on_small_graphs() {
        let t = gen_clique_instance(3, &TRIANGLE, 3).unwrap();
        let d = clique_decision(&t, 1.0, 20).unwrap();
        assert!(d.achievable);
        assert!((d.value - 1.0).abs() < 1e-9);
        assert_eq!(d.witness_value, Some(1.0));

        let p = gen_clique_instance(3, &PATH3, 3).unwrap();
        let d = clique_decision(&p, 1.0, 20).unwrap();
        assert!(!d.achievable);
        assert!(d.value.abs() < 1e-9);
        assert!(d.witness.is_none());

        let c = gen_clique_instance(4, &CYCLE4, 2).unwrap();
        let d = clique_decision(&c, 0.5, 20).unwrap();
        assert!(d.achievable);
        assert!(d.value >= 0.5 - 1e-9);
        assert!((d.witness_value.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn succinct_matches_expanded() {
        let inst = gen_clique_instance(4, &CYCLE4, 2).unwrap();
        let explicit = expand_clique_facets(&inst, 20).unwrap();
        let facets = FacetSet::from_instance(&explicit).unwrap();
        for mu in [[0.25; 4], [0.7, 0.1, 0.1, 0.1], [0.0, 0.5, 0.0, 0.5]] {
            for a in 0..2 {
                let s = cvar::rho_with_cap(&inst, &mu, a, DEFAULT_CLIQUE_CAP).unwrap();
                assert!((s - facets.rho(&mu, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_list_parsing() {
        let (n, e) = parse_edge_list("# triangle\n0 1\n1 2 # inner\n0 2\n").unwrap();
        assert_eq!(n, 3);
        assert_eq!(e.len(), 3);
        let (n, _) = parse_edge_list("vertices 5\n0 1\n").unwrap();
        assert_eq!(n, 5);
        let err = parse_edge_list("0 1\n0 x\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(parse_edge_list("vertices 2\n0 4\n").is_err());
    }
}
