//! Sweep orderings for checkerboards: lexicographic and diagonal
//! generators, the exhaustiveness check, and a brute-force minimal-size
//! search.
//!
//! Subdomain (cell) indices are 0-based and row-major in the checkerboard
//! coordinates: cell `(c1, c2)` (1-based coordinates) has index
//! `(c2 - 1) * n1 + (c1 - 1)`.

use crate::error::Error;
use crate::Result;

/// A sweep ordering: the permutation giving the visiting order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ordering {
    /// `visit[p]` = subdomain visited at position `p`.
    visit: Vec<usize>,
    /// `rank[j]` = position at which subdomain `j` is visited.
    rank: Vec<usize>,
}

impl Ordering {
    pub fn from_visit(visit: Vec<usize>) -> Result<Self> {
        let n = visit.len();
        let mut rank = vec![usize::MAX; n];
        for (p, &j) in visit.iter().enumerate() {
            if j >= n || rank[j] != usize::MAX {
                return Err(Error::InvalidConfig(format!(
                    "visit sequence {visit:?} is not a permutation"
                )));
            }
            rank[j] = p;
        }
        Ok(Ordering { visit, rank })
    }

    pub fn identity(n: usize) -> Self {
        Ordering {
            visit: (0..n).collect(),
            rank: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.visit.len()
    }

    /// Subdomain visited at position `p` (0-based).
    pub fn visit(&self) -> &[usize] {
        &self.visit
    }

    /// Position of subdomain `j` in the sweep (0-based).
    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    /// The reverse sweep.
    pub fn reversed(&self) -> Ordering {
        let visit: Vec<usize> = self.visit.iter().rev().copied().collect();
        Ordering::from_visit(visit).expect("reverse of a permutation is a permutation")
    }
}

fn cell_coords(j: usize, dims: (usize, usize)) -> (usize, usize) {
    (j % dims.0 + 1, j / dims.0 + 1)
}

/// Coordinates of cell `j` with respect to the vertex selected by
/// `flips` (bit 0: mirror x, bit 1: mirror y), 1-based.
fn coords_from_vertex(j: usize, dims: (usize, usize), flips: usize) -> (usize, usize) {
    let (c1, c2) = cell_coords(j, dims);
    (
        if flips & 1 != 0 { dims.0 + 1 - c1 } else { c1 },
        if flips & 2 != 0 { dims.1 + 1 - c2 } else { c2 },
    )
}

fn dedup(orderings: Vec<Ordering>) -> Vec<Ordering> {
    let mut out: Vec<Ordering> = Vec::new();
    for o in orderings {
        if !out.contains(&o) {
            out.push(o);
        }
    }
    out
}

/// Lexicographic orderings with respect to each checkerboard vertex:
/// the position of cell `j` in sweep `n` is
/// `1 + sum_l (prod_{m<l} N_m) (c_l^n(j) - 1)` with `c^n` the coordinates
/// seen from vertex `n`. Coincident orderings arising from collapsed
/// directions (`N_l = 1`) are removed.
pub fn generate_lexicographic(dims: (usize, usize)) -> Vec<Ordering> {
    let n = dims.0 * dims.1;
    let mut orderings = Vec::with_capacity(4);
    for flips in 0..4usize {
        let mut visit = vec![0usize; n];
        for j in 0..n {
            let (c1, c2) = coords_from_vertex(j, dims, flips);
            let pos = (c1 - 1) + dims.0 * (c2 - 1);
            visit[pos] = j;
        }
        orderings.push(Ordering::from_visit(visit).expect("lexicographic order is a bijection"));
    }
    dedup(orderings)
}

/// Diagonal ("snake") orderings: for each vertex not yet covered, the
/// cells are visited by increasing coordinate sum with respect to that
/// vertex (a linear extension of the componentwise order), and the
/// diagonally opposite vertex receives the reversed sweep.
pub fn generate_snake(dims: (usize, usize)) -> Vec<Ordering> {
    let n = dims.0 * dims.1;
    let mut slots: Vec<Option<Ordering>> = vec![None; 4];
    for flips in 0..4usize {
        if slots[flips].is_some() {
            continue;
        }
        let mut cells: Vec<usize> = (0..n).collect();
        cells.sort_by_key(|&j| {
            let (c1, c2) = coords_from_vertex(j, dims, flips);
            (c1 + c2, c2, c1)
        });
        let fwd = Ordering::from_visit(cells).expect("diagonal order is a bijection");
        slots[flips ^ 3] = Some(fwd.reversed());
        slots[flips] = Some(fwd);
    }
    dedup(slots.into_iter().flatten().collect())
}

/// Result of the exhaustiveness check; on failure `witness` holds a
/// componentwise-monotonic cell sequence visited in order by no sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveCheck {
    pub exhaustive: bool,
    pub witness: Option<Vec<usize>>,
}

/// Maximal componentwise-monotonic chains of cells: corner-to-corner unit
/// lattice paths under each direction-sign pattern. Every monotonic
/// sequence is a subsequence of one of these, so checking them suffices.
fn maximal_monotone_chains(dims: (usize, usize)) -> Vec<Vec<usize>> {
    let mut chains = Vec::new();
    for flips in 0..4usize {
        let mut stack = vec![(1usize, 1usize)];
        let mut path = Vec::new();
        // depth-first enumeration of unit paths from (1,1) to dims in the
        // flipped coordinates
        fn rec(
            pos: (usize, usize),
            dims: (usize, usize),
            flips: usize,
            path: &mut Vec<usize>,
            chains: &mut Vec<Vec<usize>>,
        ) {
            // map flipped coordinates back to a cell index
            let c1 = if flips & 1 != 0 { dims.0 + 1 - pos.0 } else { pos.0 };
            let c2 = if flips & 2 != 0 { dims.1 + 1 - pos.1 } else { pos.1 };
            path.push((c2 - 1) * dims.0 + (c1 - 1));
            if pos == (dims.0, dims.1) {
                chains.push(path.clone());
            } else {
                if pos.0 < dims.0 {
                    rec((pos.0 + 1, pos.1), dims, flips, path, chains);
                }
                if pos.1 < dims.1 {
                    rec((pos.0, pos.1 + 1), dims, flips, path, chains);
                }
            }
            path.pop();
        }
        let _ = &mut stack;
        rec((1, 1), dims, flips, &mut path, &mut chains);
    }
    // collapsed directions produce duplicate chains
    let mut out: Vec<Vec<usize>> = Vec::new();
    for c in chains {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Checks the two exhaustiveness conditions: (i) the sequence is closed
/// under sweep reversal, and (ii) every componentwise-monotonic sequence
/// of cells is visited in order by some sweep.
pub fn check_exhaustive(seq: &[Ordering], dims: (usize, usize)) -> ExhaustiveCheck {
    for o in seq {
        let rev = o.reversed();
        if !seq.contains(&rev) {
            return ExhaustiveCheck {
                exhaustive: false,
                witness: Some(rev.visit().to_vec()),
            };
        }
    }
    for chain in maximal_monotone_chains(dims) {
        let in_order = seq.iter().any(|o| {
            chain
                .windows(2)
                .all(|w| o.rank()[w[0]] <= o.rank()[w[1]])
        });
        if !in_order {
            return ExhaustiveCheck {
                exhaustive: false,
                witness: Some(chain),
            };
        }
    }
    ExhaustiveCheck {
        exhaustive: true,
        witness: None,
    }
}

/// Smallest size of an exhaustive sequence, by brute force over subsets of
/// all permutations. Only instances with at most 4 cells are accepted.
pub fn min_exhaustive_size(dims: (usize, usize)) -> Result<usize> {
    let n = dims.0 * dims.1;
    if n > 4 {
        return Err(Error::TooLargeInstance(format!(
            "{} cells; brute force is limited to 4",
            n
        )));
    }
    let perms = permutations(n);
    let orderings: Vec<Ordering> = perms
        .into_iter()
        .map(|p| Ordering::from_visit(p).unwrap())
        .collect();
    for size in 1..=orderings.len() {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let seq: Vec<Ordering> = combo.iter().map(|&i| orderings[i].clone()).collect();
            if check_exhaustive(&seq, dims).exhaustive {
                return Ok(size);
            }
            if !next_combination(&mut combo, orderings.len()) {
                break;
            }
        }
    }
    unreachable!("the full permutation set is always exhaustive")
}

/// Advances `combo` to the next k-combination of `0..n`; false when done.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}
