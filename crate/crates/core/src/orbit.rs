//! Floating-point orbits, single-linkage cluster detection, and extraction
//! of a conditioning problem from the clusters an orbit visits.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use std::sync::Arc;

use crate::conditioning::{ConditioningProblem, SelfSymmetry, Transition};
use crate::error::{Error, Result};
use crate::geometry::{CoefficientMatrix, ConstraintMatrix};
use crate::maps::PiecewiseAffineMap;
use crate::rational::{rat, to_f64, Ext};
use crate::partition::AtomLabel;
use crate::symmetry::Symmetry;

pub const BOUNDARY_TOL: f64 = 1e-9;
pub const MIN_HITS: usize = 5;
pub const PLATEAU_FACTOR: f64 = 10.0;
pub const GRID_STEPS: usize = 64;
/// Smallest threshold of the sweep, relative to the bounding-box diameter.
pub const GRID_SPAN: f64 = 1e-4;
/// Slack below which a point counts as outside every atom.
const ESCAPE_TOL: f64 = 1e-7;
/// Largest relative hull gap still read as an equality transition.
pub const EQUALITY_GAP: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
pub struct Orbit {
    pub d: usize,
    pub seed: Vec<f64>,
    pub transient: usize,
    pub steps: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<AtomLabel>,
    /// Post-transient points dropped for lying within the boundary tolerance.
    pub dropped: usize,
}

impl Orbit {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head: Vec<String> = (1..=self.d).map(|i| format!("x{i}")).collect();
        head.push("atom".into());
        wr.write_record(&head).map_err(io_err)?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            let mut rec: Vec<String> = p.iter().map(|v| format!("{v:.17}")).collect();
            rec.push(l.clone());
            wr.write_record(&rec).map_err(io_err)?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Iterate `map` in double precision, discarding `transient` points first.
pub fn simulate(map: &PiecewiseAffineMap, seed: &[f64], steps: usize, transient: usize, boundary_tol: f64) -> Result<Orbit> {
    if seed.len() != map.d() {
        return Err(Error::DimensionMismatch("seed length vs map dimension".into()));
    }
    if steps == 0 {
        return Err(Error::ParameterOutOfRange("steps must be at least 1".into()));
    }
    if seed.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::ParameterOutOfRange("seed must lie in the open unit cube".into()));
    }
    let mut x = seed.to_vec();
    let mut points = Vec::with_capacity(steps);
    let mut labels = Vec::with_capacity(steps);
    let mut dropped = 0;
    for t in 0..transient + steps {
        let st = map.step_f64(&x);
        if st.slack < -ESCAPE_TOL {
            return Err(Error::EscapedAmbient(t));
        }
        if t >= transient {
            if st.slack < boundary_tol {
                dropped += 1;
            } else {
                points.push(x.clone());
                labels.push(map.atoms()[st.atom].label.clone());
            }
        }
        x = st.image;
    }
    if dropped * 2 > steps {
        return Err(Error::BoundaryFlood { dropped, steps });
    }
    Ok(Orbit { d: map.d(), seed: seed.to_vec(), transient, steps, points, labels, dropped })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Minimum spanning tree edge weights (Prim, dense).
fn mst(points: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return edges;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let dj = dist(&points[cur], &points[j]);
            if dj < best[j] {
                best[j] = dj;
                parent[j] = cur;
            }
            if best[j] < next_d || next == usize::MAX {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((parent[next], next, next_d));
        cur = next;
    }
    edges
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Plateau {
    pub hi: f64,
    pub lo: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Clusters {
    pub q: usize,
    /// Cluster index per orbit point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub plateau: Plateau,
    /// Images closer than this to a cluster are assigned to it.
    pub assignment_distance: f64,
    pub sweep: Vec<SweepPoint>,
}

impl Clusters {
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == k).collect()
    }
}

/// Single-linkage clusters at the first plateau of the threshold sweep.
pub fn cluster(orbit: &Orbit, plateau_factor: f64) -> Result<Clusters> {
    cluster_points(&orbit.points, plateau_factor)
}

pub fn cluster_points(points: &[Vec<f64>], plateau_factor: f64) -> Result<Clusters> {
    let n = points.len();
    if n == 0 {
        return Err(Error::ParameterOutOfRange("no points to cluster".into()));
    }
    let d = points[0].len();
    let mut diam2 = 0.0;
    for k in 0..d {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        diam2 += (hi - lo) * (hi - lo);
    }
    let diam = diam2.sqrt();
    let edges = mst(points);
    if diam == 0.0 {
        return Ok(Clusters {
            q: 1,
            assignments: vec![0; n],
            centroids: vec![points[0].clone()],
            sizes: vec![n],
            plateau: Plateau { hi: 0.0, lo: 0.0, count: 1 },
            assignment_distance: 0.0,
            sweep: vec![],
        });
    }
    let count_at = |t: f64| 1 + edges.iter().filter(|e| e.2 > t).count();
    let sweep: Vec<SweepPoint> = (0..GRID_STEPS)
        .map(|j| {
            let threshold = diam * GRID_SPAN.powf(j as f64 / (GRID_STEPS - 1) as f64);
            SweepPoint { threshold, count: count_at(threshold) }
        })
        .collect();
    let mut plateau = None;
    let mut start = 0;
    for j in 1..=sweep.len() {
        if j == sweep.len() || sweep[j].count != sweep[start].count {
            let (hi, lo) = (sweep[start].threshold, sweep[j - 1].threshold);
            let count = sweep[start].count;
            if hi / lo >= plateau_factor && count * 10 <= n {
                plateau = Some(Plateau { hi, lo, count });
                break;
            }
            start = j;
        }
    }
    let plateau = plateau.ok_or(Error::NoPlateau)?;
    let cut = (plateau.hi * plateau.lo).sqrt();
    // union-find over the MST edges below the cut
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &(a, b, w) in &edges {
        if w <= cut {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut roots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        roots.entry(r).or_default().push(i);
    }
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = roots
        .into_values()
        .map(|idx| {
            let mut c = vec![0.0; d];
            for &i in &idx {
                for k in 0..d {
                    c[k] += points[i][k];
                }
            }
            c.iter_mut().for_each(|v| *v /= idx.len() as f64);
            (c, idx)
        })
        .collect();
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut assignments = vec![0; n];
    for (k, (_, idx)) in groups.iter().enumerate() {
        for &i in idx {
            assignments[i] = k;
        }
    }
    Ok(Clusters {
        q: groups.len(),
        assignments,
        sizes: groups.iter().map(|g| g.1.len()).collect(),
        centroids: groups.into_iter().map(|g| g.0).collect(),
        plateau,
        assignment_distance: cut,
        sweep,
    })
}

fn nearest(points: &[Vec<f64>], idx: &[usize], y: &[f64]) -> f64 {
    idx.iter().map(|&i| dist(&points[i], y)).fold(f64::INFINITY, f64::min)
}

/// max over `a` of the distance to the nearest point of `b`.
fn directed(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Smallest α-polytope containing the points, rounded outward to a 10⁻⁹ grid.
pub fn alpha_hull(alpha: &Arc<CoefficientMatrix>, pts: &[Vec<f64>]) -> Result<ConstraintMatrix> {
    let grid = 1e9;
    let bounds = alpha
        .rows()
        .iter()
        .map(|r| {
            let rf: Vec<f64> = r.iter().map(to_f64).collect();
            let (lo, hi) = pts
                .iter()
                .map(|p| p.iter().zip(&rf).map(|(a, b)| a * b).sum::<f64>())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let lo = rat((lo * grid).floor() as i64 - 1, grid as i64);
            let hi = rat((hi * grid).ceil() as i64 + 1, grid as i64);
            (Ext::Fin(lo), Ext::Fin(hi))
        })
        .collect();
    ConstraintMatrix::new(alpha.clone(), bounds)
}

/// Largest bound difference between two optimized matrices, relative to the
/// width of `reference` along that row.
fn relative_gap(m: &ConstraintMatrix, reference: &ConstraintMatrix) -> f64 {
    (0..reference.e())
        .map(|i| {
            let (rl, rh) = (reference.lower()[i].to_f64(), reference.upper()[i].to_f64());
            let (ml, mh) = (m.lower()[i].to_f64(), m.upper()[i].to_f64());
            let w = rh - rl;
            if !(w > 0.0) {
                return f64::INFINITY;
            }
            ((ml - rl).abs()).max((mh - rh).abs()) / w
        })
        .fold(0.0, f64::max)
}

fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    directed(a, b).max(directed(b, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct Fold {
    pub cluster: usize,
    pub representative: usize,
    pub sym: String,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractedTransition {
    /// Raw cluster indices.
    pub cluster: usize,
    pub atom: AtomLabel,
    pub hits: usize,
    pub target_cluster: usize,
    pub to: usize,
    pub sym: String,
    pub equality: bool,
    /// Directed distance from the images to the target cluster.
    pub distance: f64,
    /// Relative gap between the exact image of the source cluster's α-hull
    /// and the target's α-hull.
    pub coverage_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub clusters: Clusters,
    /// Atom hit counts per raw cluster.
    pub hits: Vec<BTreeMap<AtomLabel, usize>>,
    pub folds: Vec<Fold>,
    /// Raw cluster index of each representative, in problem order.
    pub representatives: Vec<usize>,
    pub transitions: Vec<ExtractedTransition>,
    pub self_symmetry: Vec<(usize, String)>,
    pub min_hits: usize,
}

#[derive(Clone, Debug)]
pub struct ExtractOptions {
    pub min_hits: usize,
    /// Clusters nearest to these points become representatives first, in
    /// this order; the rest follow in centroid order.
    pub anchors: Vec<Vec<f64>>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { min_hits: MIN_HITS, anchors: vec![] }
    }
}

/// Build the reduced conditioning problem the orbit exhibits.
pub fn extract_problem(
    orbit: &Orbit,
    clusters: Clusters,
    map: &PiecewiseAffineMap,
    symmetries: &[Symmetry],
    opts: &ExtractOptions,
) -> Result<(ConditioningProblem, ClusterReport)> {
    let min_hits = opts.min_hits;
    let pts = &orbit.points;
    let q = clusters.q;
    let r = clusters.assignment_distance;
    let members: Vec<Vec<usize>> = (0..q).map(|k| clusters.members(k)).collect();
    let cloud = |k: usize| members[k].iter().map(|&i| pts[i].clone()).collect::<Vec<_>>();
    let clouds: Vec<Vec<Vec<f64>>> = (0..q).map(cloud).collect();

    let mut hits: Vec<BTreeMap<AtomLabel, usize>> = vec![BTreeMap::new(); q];
    for (i, l) in orbit.labels.iter().enumerate() {
        *hits[clusters.assignments[i]].entry(l.clone()).or_default() += 1;
    }

    // fold clusters that are symmetry images of earlier representatives
    let mut folds = Vec::new();
    let mut representatives: Vec<usize> = Vec::new();
    let mut fold_of: Vec<Option<(usize, String)>> = vec![None; q];
    let mut order: Vec<usize> = Vec::new();
    for a in &opts.anchors {
        let (best, _) = (0..q)
            .map(|c| (c, nearest(pts, &members[c], a)))
            .fold((0, f64::INFINITY), |acc, (c, v)| if v < acc.1 { (c, v) } else { acc });
        if !order.contains(&best) {
            order.push(best);
        }
    }
    order.extend((0..q).filter(|c| !order.contains(c)).collect::<Vec<_>>());
    for j in order {
        let mut found: Option<(usize, String, f64)> = None;
        'reps: for &i in &representatives {
            for s in symmetries {
                let img: Vec<Vec<f64>> = clouds[i].iter().map(|x| s.apply_f64(x)).collect();
                let h = hausdorff(&img, &clouds[j]);
                if h <= r {
                    found = Some((i, s.name().to_string(), h));
                    break 'reps;
                }
            }
        }
        match found {
            Some((i, sym, h)) => {
                fold_of[j] = Some((i, sym.clone()));
                folds.push(Fold { cluster: j, representative: i, sym, distance: h });
            }
            None => representatives.push(j),
        }
    }
    let hulls: Vec<ConstraintMatrix> = clouds
        .iter()
        .map(|c| alpha_hull(map.alpha(), c).map(|m| m.optimize()))
        .collect::<Result<_>>()?;
    let rep_index = |raw: usize| representatives.iter().position(|&x| x == raw).unwrap();

    let mut self_symmetry = Vec::new();
    for (k, &i) in representatives.iter().enumerate() {
        for s in symmetries {
            let img: Vec<Vec<f64>> = clouds[i].iter().map(|x| s.apply_f64(x)).collect();
            if hausdorff(&img, &clouds[i]) <= r {
                self_symmetry.push((k, s.name().to_string()));
            }
        }
    }

    let mut localisation = Vec::new();
    let mut transitions = Vec::new();
    let mut problem_transitions = Vec::new();
    for (k, &i) in representatives.iter().enumerate() {
        let atoms: Vec<AtomLabel> = hits[i].iter().filter(|(_, &c)| c >= min_hits).map(|(l, _)| l.clone()).collect();
        for omega in &atoms {
            let src: Vec<usize> = members[i].iter().copied().filter(|&p| &orbit.labels[p] == omega).collect();
            let images: Vec<Vec<f64>> = src.iter().map(|&p| map.step_f64(&pts[p]).image).collect();
            let mut per_cluster = vec![0usize; q];
            let mut worst = 0.0f64;
            for y in &images {
                let dists: Vec<f64> = (0..q).map(|c| nearest(pts, &members[c], y)).collect();
                let (best, bd) = dists
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (c, &v)| if v < acc.1 { (c, v) } else { acc });
                if bd > r {
                    return Err(Error::UnassignedImage { k, atom: omega.clone() });
                }
                let second = dists.iter().enumerate().filter(|(c, _)| *c != best).map(|(_, &v)| v).fold(f64::INFINITY, f64::min);
                if second < 10.0 * bd {
                    return Err(Error::AmbiguousTransition {
                        k,
                        atom: omega.clone(),
                        detail: format!("image at distance {bd:.3e} from cluster {best} and {second:.3e} from another"),
                    });
                }
                per_cluster[best] += 1;
                worst = worst.max(bd);
            }
            let hit: Vec<usize> = (0..q).filter(|&c| per_cluster[c] > 0).collect();
            if hit.len() != 1 {
                return Err(Error::AmbiguousTransition {
                    k,
                    atom: omega.clone(),
                    detail: format!("images split across clusters {hit:?}"),
                });
            }
            let target = hit[0];
            let (to_raw, sym) = match &fold_of[target] {
                Some((rep, s)) => (*rep, s.clone()),
                None => (target, "id".to_string()),
            };
            let image_hull = map.image_of_polytope(&hulls[i], omega)?;
            let coverage_gap = if image_hull.is_empty() { f64::INFINITY } else { relative_gap(&image_hull, &hulls[target]) };
            let equality = coverage_gap <= EQUALITY_GAP;
            transitions.push(ExtractedTransition {
                cluster: i,
                atom: omega.clone(),
                hits: src.len(),
                target_cluster: target,
                to: rep_index(to_raw),
                sym: sym.clone(),
                equality,
                distance: worst,
                coverage_gap,
            });
            problem_transitions.push(Transition {
                k,
                atom: omega.clone(),
                to: rep_index(to_raw),
                sym,
                equality,
                within_atom: None,
            });
        }
        localisation.push(atoms);
    }
    let problem = ConditioningProblem::new(
        localisation,
        problem_transitions,
        self_symmetry.iter().map(|(k, s)| SelfSymmetry { k: *k, sym: s.clone() }).collect(),
    )?;
    let report = ClusterReport { clusters, hits, folds, representatives, transitions, self_symmetry, min_hits };
    Ok((problem, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(rng: &mut ChaCha8Rng, c: [f64; 2], n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| vec![c[0] + rng.gen::<f64>() * 0.05, c[1] + rng.gen::<f64>() * 0.05]).collect()
    }

    #[test]
    fn two_separated_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, [0.1, 0.1], 400);
        pts.extend(blob(&mut rng, [0.4, 0.1], 400));
        let c = cluster_points(&pts, PLATEAU_FACTOR).unwrap();
        assert_eq!(c.q, 2);
        assert_eq!(c.sizes, vec![400, 400]);
        assert!(c.centroids[0][0] < c.centroids[1][0]);
    }

    #[test]
    fn identical_points() {
        let c = cluster_points(&vec![vec![0.3, 0.3]; 20], PLATEAU_FACTOR).unwrap();
        assert_eq!(c.q, 1);
    }

    #[test]
    fn scale_free_chain_has_no_plateau() {
        // gaps shrink by one grid step each, so the count changes at every threshold
        let ratio = GRID_SPAN.powf(1.0 / (GRID_STEPS - 1) as f64);
        let mut x = 0.0;
        let mut gap = 0.5;
        let mut pts = vec![vec![0.0]];
        for _ in 0..80 {
            x += gap;
            pts.push(vec![x]);
            gap *= ratio;
        }
        assert_eq!(cluster_points(&pts, PLATEAU_FACTOR).unwrap_err(), Error::NoPlateau);
    }
}
