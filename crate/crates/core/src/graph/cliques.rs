/// Vertex set over at most 128 vertices.
pub type Bitset = u128;

fn members(set: Bitset) -> impl Iterator<Item = usize> {
    (0..128).filter(move |&i| set & (1u128 << i) != 0)
}

/// All maximal cliques of the graph with the given adjacency rows, found
/// by Bron–Kerbosch with Tomita pivoting. Each clique is returned as a
/// sorted vertex list; the list of cliques is sorted lexicographically.
pub fn maximal_cliques(adjacency: &[Bitset]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    assert!(n <= 128, "at most 128 vertices");
    let all: Bitset = if n == 128 { !0 } else { (1u128 << n) - 1 };
    let mut out = Vec::new();
    expand(adjacency, 0, all, 0, &mut out);
    let mut cliques: Vec<Vec<usize>> = out.into_iter().map(|c| members(c).collect()).collect();
    cliques.sort();
    cliques
}

fn expand(adj: &[Bitset], r: Bitset, mut p: Bitset, mut x: Bitset, out: &mut Vec<Bitset>) {
    if p == 0 {
        if x == 0 && r != 0 {
            out.push(r);
        }
        return;
    }
    let pivot = members(p | x)
        .max_by_key(|&u| (p & adj[u]).count_ones())
        .expect("p is nonempty");
    for v in members(p & !adj[pivot]) {
        let bit = 1u128 << v;
        expand(adj, r | bit, p & adj[v], x & adj[v], out);
        p &= !bit;
        x |= bit;
    }
}
