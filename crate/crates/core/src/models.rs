//! Bundled finite models: a point blowup, the standard quadratic involution of
//! the projective plane, a map with an essential singularity at infinity, and
//! a pair of compactifications of one map.

use std::sync::Arc;

use crate::correspondence::{Correspondence, CorrespondenceData, EndoCorrespondence};
use crate::error::{Error, Result};
use crate::measure::{PositiveMeasure, SignedMeasure};
use crate::space::FiniteSpace;
use crate::submeasure::StrongSubmeasure;

/// Blowup of a point `p`: `Y` replaces `p ∈ X` by an exceptional fiber `V`.
#[derive(Debug, Clone)]
pub struct BlowupModel {
    pub base: Arc<FiniteSpace>,
    pub blown_up: Arc<FiniteSpace>,
    /// `π : Y → X`, collapsing `V` onto `p`.
    pub projection: Correspondence,
    /// `π^{-1} : X ⇢ Y`, indeterminate at `p` with fiber `V`.
    pub inverse: Correspondence,
    pub center: usize,
    pub exceptional: Vec<usize>,
    /// `lift[x]` is the point of `Y` over `x ≠ p`.
    pub lift: Vec<Option<usize>>,
}

pub fn build_blowup_model(n_base: usize, n_fiber: usize) -> Result<BlowupModel> {
    if n_base < 1 || n_fiber < 1 {
        return Err(Error::invalid("blowup", "need n_base >= 1 and n_fiber >= 1"));
    }
    let mut base_labels = vec!["p".to_string()];
    base_labels.extend((1..n_base).map(|i| format!("x{i}")));
    let mut up_labels: Vec<String> = (1..n_base).map(|i| format!("x{i}")).collect();
    up_labels.extend((0..n_fiber).map(|j| format!("v{j}")));
    let base = FiniteSpace::new(base_labels)?.into_shared();
    let exceptional: Vec<usize> = (n_base - 1..n_base - 1 + n_fiber).collect();
    let blown_up = FiniteSpace::new(up_labels)?
        .with_subset("V", exceptional.clone())?
        .into_shared();

    let mut proj = CorrespondenceData::new(blown_up.clone(), base.clone());
    for i in 1..n_base {
        proj = proj.edge(i - 1, i, 1);
    }
    for &v in &exceptional {
        proj = proj.edge(v, 0, 1);
    }
    proj.limit_fibers.insert(0, exceptional.iter().map(|&v| vec![(v, 1.0)]).collect());
    let projection = Correspondence::new(proj)?;

    let mut inv = CorrespondenceData::new(base.clone(), blown_up.clone());
    for i in 1..n_base {
        inv = inv.edge(i, i - 1, 1);
    }
    for &v in &exceptional {
        inv = inv.edge(0, v, 1);
        inv.limit_fibers.insert(v, vec![vec![(0, 1.0)]]);
    }
    let inverse = Correspondence::new(inv)?;

    let mut lift = vec![None];
    lift.extend((1..n_base).map(|i| Some(i - 1)));
    Ok(BlowupModel {
        base,
        blown_up,
        projection,
        inverse,
        center: 0,
        exceptional,
        lift,
    })
}

impl BlowupModel {
    /// The explicit generators of `π^*(μ)` for a positive measure μ: the part
    /// of μ off the center lifts unchanged and the mass at the center sits at
    /// one exceptional point, one generator per exceptional point.
    pub fn generating_family(&self, mu: &PositiveMeasure) -> Result<Vec<SignedMeasure>> {
        let w = mu.as_signed().weights();
        if w.len() != self.base.len() {
            return Err(Error::SpaceMismatch {
                context: "generating_family".into(),
            });
        }
        let mut off_center = vec![0.0; self.blown_up.len()];
        for (x, l) in self.lift.iter().enumerate() {
            if let Some(y) = l {
                off_center[*y] = w[x];
            }
        }
        self.exceptional
            .iter()
            .map(|&v| {
                let mut g = off_center.clone();
                g[v] += w[self.center];
                SignedMeasure::new(self.blown_up.clone(), g)
            })
            .collect()
    }
}

/// The quadratic involution `[x0:x1:x2] ↦ [1/x0:1/x1:1/x2]` on a finite sample
/// of the plane.
///
/// Points: the three vertices `e_i`, `n_line` interior samples `s{i}_{k}` on
/// each coordinate line `Σ_i` (which contains the other two vertices), and
/// `n_line` generic pairs `p{k} ↔ q{k}` swapped by the map. The map blows up
/// `e_i` onto `Σ_i` and contracts `Σ_i` onto `e_i`. The points `p{k}`
/// accumulate at `e0` while their images `q{k}` accumulate at `s0_0`.
#[derive(Debug, Clone)]
pub struct CremonaModel {
    pub space: Arc<FiniteSpace>,
    pub map: EndoCorrespondence,
    pub vertices: [usize; 3],
    /// `lines[i]` is `Σ_i`, vertices included.
    pub lines: [Vec<usize>; 3],
    pub approach: Vec<usize>,
    pub approach_images: Vec<usize>,
    pub approach_limit: usize,
    pub image_limit: usize,
}

pub fn build_cremona_model(n_line: usize) -> Result<CremonaModel> {
    if n_line < 1 {
        return Err(Error::invalid("cremona", "need n_line >= 1"));
    }
    let mut labels: Vec<String> = (0..3).map(|i| format!("e{i}")).collect();
    for i in 0..3 {
        labels.extend((0..n_line).map(|k| format!("s{i}_{k}")));
    }
    labels.extend((0..n_line).map(|k| format!("p{k}")));
    labels.extend((0..n_line).map(|k| format!("q{k}")));
    let interior = |i: usize, k: usize| 3 + i * n_line + k;
    let p = |k: usize| 3 + 3 * n_line + k;
    let q = |k: usize| 3 + 4 * n_line + k;
    let lines: [Vec<usize>; 3] = std::array::from_fn(|i| {
        let mut l: Vec<usize> = (0..3).filter(|&j| j != i).collect();
        l.extend((0..n_line).map(|k| interior(i, k)));
        l
    });
    let mut space = FiniteSpace::new(labels)?;
    for (i, l) in lines.iter().enumerate() {
        space = space.with_subset(format!("Sigma{i}"), l.clone())?;
    }
    let space = space.with_subset("I", vec![0, 1, 2])?.into_shared();

    let mut data = CorrespondenceData::new(space.clone(), space.clone());
    for i in 0..3 {
        for &y in &lines[i] {
            data = data.edge(i, y, 1);
        }
        for k in 0..n_line {
            data = data.edge(interior(i, k), i, 1);
        }
        data.limit_fibers.insert(i, lines[i].iter().map(|&x| vec![(x, 1.0)]).collect());
        for k in 0..n_line {
            data.limit_fibers.insert(interior(i, k), vec![vec![(i, 1.0)]]);
        }
    }
    for k in 0..n_line {
        data = data.edge(p(k), q(k), 1).edge(q(k), p(k), 1);
    }
    data.indeterminacy = Some(vec![0, 1, 2]);
    let map = EndoCorrespondence::new(Correspondence::new(data)?)?;
    Ok(CremonaModel {
        space,
        map,
        vertices: [0, 1, 2],
        lines,
        approach: (0..n_line).map(p).collect(),
        approach_images: (0..n_line).map(q).collect(),
        approach_limit: 0,
        image_limit: interior(0, 0),
    })
}

impl CremonaModel {
    /// The map is an involution, so its square as a birational map is the
    /// identity. The relational square of the finite graph is larger over the
    /// vertices and is what [`crate::correspondence::compose`] returns.
    pub fn birational_square(&self) -> Correspondence {
        Correspondence::identity(self.space.clone())
    }
}

/// A map of the plane with an essential singularity at infinity, compactified
/// by one point `inf` whose fiber is the whole space.
///
/// Pullback is undefined for such maps, so the correspondence is declared
/// not equal-dimensional.
#[derive(Debug, Clone)]
pub struct TranscendentalModel {
    pub space: Arc<FiniteSpace>,
    pub map: EndoCorrespondence,
    pub infinity: usize,
}

/// Default net dynamics: a cycle on `z0..z{n-2}` with `z{n-1}` contracted
/// onto `z0`.
pub fn build_transcendental_model(n_net: usize) -> Result<TranscendentalModel> {
    if n_net < 2 {
        return Err(Error::invalid("transcendental", "need n_net >= 2"));
    }
    let mut map: Vec<usize> = (0..n_net - 1).map(|i| (i + 1) % (n_net - 1)).collect();
    map.push(0);
    build_transcendental_model_with(&map)
}

/// Transcendental model with finite dynamics `z_i ↦ z_{map[i]}`.
pub fn build_transcendental_model_with(map: &[usize]) -> Result<TranscendentalModel> {
    let n_net = map.len();
    if let Some(i) = map.iter().position(|&t| t >= n_net) {
        return Err(Error::invalid(format!("map[{i}]"), "target out of range"));
    }
    let mut labels: Vec<String> = (0..n_net).map(|i| format!("z{i}")).collect();
    labels.push("inf".into());
    let infinity = n_net;
    let space = FiniteSpace::new(labels)?.into_shared();
    let mut data = CorrespondenceData::new(space.clone(), space.clone());
    data.equal_dimension = false;
    for (i, &t) in map.iter().enumerate() {
        data = data.edge(i, t, 1);
    }
    for y in 0..=n_net {
        data = data.edge(infinity, y, 1);
    }
    let map = EndoCorrespondence::new(Correspondence::new(data)?)?;
    Ok(TranscendentalModel {
        space,
        map,
        infinity,
    })
}

impl TranscendentalModel {
    pub fn full_sup(&self) -> StrongSubmeasure {
        StrongSubmeasure::full_sup(self.space.clone())
    }
}

/// Two compactifications of the translation `z_i ↦ z_{i+1 mod n}`.
///
/// The first keeps the cycle closed. The second adds a point at infinity
/// that the last net point may also escape to, and whose fiber is the whole
/// space; its orbit graph has positive entropy.
pub fn build_compactification_pair(n: usize) -> Result<[EndoCorrespondence; 2]> {
    if n < 2 {
        return Err(Error::invalid("compactification", "need n >= 2"));
    }
    let closed_space = FiniteSpace::indexed("z", n)?.into_shared();
    let map: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let closed = EndoCorrespondence::new(Correspondence::from_map(closed_space.clone(), closed_space, &map)?)?;

    let mut labels: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    labels.push("inf".into());
    let open_space = FiniteSpace::new(labels)?.into_shared();
    let mut data = CorrespondenceData::new(open_space.clone(), open_space.clone());
    data.equal_dimension = false;
    for i in 0..n {
        data = data.edge(i, (i + 1) % n, 1);
    }
    data = data.edge(n - 1, n, 1);
    for y in 0..=n {
        data = data.edge(n, y, 1);
    }
    let open = EndoCorrespondence::new(Correspondence::new(data)?)?;
    Ok([closed, open])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{pullback_submeasure, pushforward_submeasure};
    use crate::measure::{probe_panel, FunctionVector};
    use crate::submeasure::{set_value, SetMode};

    #[test]
    fn blowup_shapes() {
        let m = build_blowup_model(5, 4).unwrap();
        assert_eq!(m.base.len(), 5);
        assert_eq!(m.blown_up.len(), 8);
        assert_eq!(m.inverse.indeterminacy(), &[0]);
        assert!(m.projection.is_single_valued());
    }

    #[test]
    fn blowup_pullback_of_center_is_exceptional_sup() {
        let m = build_blowup_model(3, 2).unwrap();
        let delta = StrongSubmeasure::from_measure(SignedMeasure::dirac(m.base.clone(), m.center, 1.0));
        let pulled = pullback_submeasure(&m.projection, &delta).unwrap();
        let phi = FunctionVector::new(m.blown_up.clone(), vec![7.0, -1.0, 2.0, 5.0]).unwrap();
        assert_eq!(pulled.eval(&phi).unwrap(), 5.0);
        assert_eq!(set_value(&pulled, &[0, 1], SetMode::Closed).unwrap(), 0.0);
        let back = pushforward_submeasure(&m.projection, &pulled).unwrap();
        for phi in probe_panel(&m.base) {
            assert_eq!(back.eval(&phi).unwrap(), delta.eval(&phi).unwrap());
        }
    }

    #[test]
    fn blowup_generating_family_has_one_generator_per_fiber_point() {
        let m = build_blowup_model(4, 3).unwrap();
        let mu = PositiveMeasure::new(SignedMeasure::new(m.base.clone(), vec![0.5, 0.25, 0.25, 0.0]).unwrap()).unwrap();
        let fam = m.generating_family(&mu).unwrap();
        assert_eq!(fam.len(), 3);
        let sup = StrongSubmeasure::from_generators(m.blown_up.clone(), fam).unwrap();
        let pulled = pullback_submeasure(
            &m.projection,
            &StrongSubmeasure::from_measure(mu.as_signed().clone()),
        )
        .unwrap();
        for phi in probe_panel(&m.blown_up) {
            assert!((sup.eval(&phi).unwrap() - pulled.eval(&phi).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cremona_is_a_generic_involution() {
        let c = build_cremona_model(3).unwrap();
        assert_eq!(c.space.len(), 18);
        assert_eq!(c.map.indeterminacy(), &[0, 1, 2]);
        for (&pk, &qk) in c.approach.iter().zip(&c.approach_images) {
            assert_eq!(c.map.fiber(pk), &[qk]);
            assert_eq!(c.map.fiber(qk), &[pk]);
        }
        assert!(c.lines[0].contains(&1) && c.lines[0].contains(&2));
        assert!(c.lines[0].contains(&c.image_limit));
    }

    #[test]
    fn transcendental_infinity_fans_out() {
        let t = build_transcendental_model(6).unwrap();
        assert_eq!(t.map.fiber(t.infinity).len(), 7);
        assert_eq!(t.map.indeterminacy(), &[t.infinity]);
        assert!(!t.map.equal_dimension());
    }

    #[test]
    fn compactification_pair_validates() {
        let [a, b] = build_compactification_pair(4).unwrap();
        assert!(a.is_single_valued());
        assert_eq!(b.indeterminacy(), &[3, 4]);
    }
}
