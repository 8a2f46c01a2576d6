//! Differentiable point-cloud losses and the fixed-cycle gradient evolution
//! whose displacement field is used as classifier input.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{barycenter, euclidean, pairwise_distances, Matrix, PointCloud};
use crate::persistence::{
    self, vr_persistence_h0, vr_persistence_with_budget, Edge, PersistenceDiagram,
    DEFAULT_SIMPLEX_BUDGET,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// Sum over `dims` of the persistence entropy of the Rips diagram.
    TopoEntropy { dims: Vec<usize> },
    /// `sum_i |x_i - x0|^2` with the barycenter `x0` frozen within a cycle.
    VanillaBarycenter,
}

impl Default for LossKind {
    fn default() -> Self {
        LossKind::TopoEntropy { dims: vec![0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub num_cycles: usize,
    pub step_size: f64,
    pub loss: LossKind,
    pub simplex_budget: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            num_cycles: 30,
            step_size: 0.05,
            loss: LossKind::default(),
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

impl FlowConfig {
    pub fn topo(dims: Vec<usize>) -> Self {
        Self {
            loss: LossKind::TopoEntropy { dims },
            ..Self::default()
        }
    }

    pub fn vanilla() -> Self {
        Self {
            loss: LossKind::VanillaBarycenter,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_cycles == 0 {
            return Err(Error::invalid("flow needs at least one cycle"));
        }
        // zero is accepted as an explicit no-op flow
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!(
                "step size must be a finite nonnegative number, got {}",
                self.step_size
            )));
        }
        if let LossKind::TopoEntropy { dims } = &self.loss {
            validate_dims(dims)?;
        }
        Ok(())
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::invalid("topological loss needs at least one homology dimension"));
    }
    if let Some(d) = dims.iter().find(|&&d| d > 2) {
        return Err(Error::invalid(format!(
            "homology dimension {d} not supported (choose from 0, 1, 2)"
        )));
    }
    Ok(())
}

/// A loss value and its gradient with respect to every coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub grad: Matrix,
    pub degenerate: bool,
}

/// Adds `coef * d|x_i - x_j| / dX` to `grad`. Zero-length edges have no
/// well-defined direction and contribute nothing.
fn add_edge_gradient(grad: &mut Matrix, cloud: &PointCloud, (i, j): Edge, coef: f64) {
    let (xi, xj) = (cloud.point(i), cloud.point(j));
    let len = euclidean(xi, xj);
    if len == 0.0 || coef == 0.0 {
        return;
    }
    let scale = coef / len;
    for k in 0..cloud.dim() {
        let g = scale * (xi[k] - xj[k]);
        grad.row_mut(i)[k] += g;
        grad.row_mut(j)[k] -= g;
    }
}

/// Entropy of the finite bars of `dim` and its gradient, accumulated into
/// `grad`. Returns `None` for a degenerate dimension.
fn accumulate_entropy_gradient(
    diag: &PersistenceDiagram,
    dim: usize,
    cloud: &PointCloud,
    grad: &mut Matrix,
) -> Option<f64> {
    let bars: Vec<_> = diag.finite_in_dim(dim).collect();
    let total: f64 = bars.iter().map(|p| p.persistence()).sum();
    if bars.is_empty() || total <= 0.0 {
        return None;
    }
    let entropy = -bars
        .iter()
        .map(|p| {
            let q = p.persistence() / total;
            q * q.ln()
        })
        .sum::<f64>();
    // dE/dl_i = -(ln p_i + E) / L
    for p in bars {
        let q = p.persistence() / total;
        let coef = -(q.ln() + entropy) / total;
        if let Some(e) = p.critical_death_edge {
            add_edge_gradient(grad, cloud, e, coef);
        }
        if let Some(e) = p.critical_birth_edge {
            add_edge_gradient(grad, cloud, e, -coef);
        }
    }
    Some(entropy)
}

pub fn entropy_loss_and_gradient(cloud: &PointCloud, dims: &[usize]) -> Result<LossEval> {
    entropy_loss_and_gradient_with_budget(cloud, dims, DEFAULT_SIMPLEX_BUDGET)
}

/// Sum over `dims` of the persistence entropy, with its gradient obtained by
/// routing `dE/d(death - birth)` through each bar's critical edges.
pub fn entropy_loss_and_gradient_with_budget(
    cloud: &PointCloud,
    dims: &[usize],
    budget: usize,
) -> Result<LossEval> {
    validate_dims(dims)?;
    let dm = pairwise_distances(cloud);
    let max_dim = dims.iter().copied().max().unwrap_or(0);
    let diag = if max_dim == 0 {
        vr_persistence_h0(&dm)
    } else {
        vr_persistence_with_budget(&dm, max_dim, budget)?
    };
    let mut grad = Matrix::zeros(cloud.len(), cloud.dim());
    let mut loss = 0.0;
    let mut any = false;
    let mut seen = [false; 3];
    for &dim in dims {
        if std::mem::replace(&mut seen[dim], true) {
            continue;
        }
        if let Some(e) = accumulate_entropy_gradient(&diag, dim, cloud, &mut grad) {
            loss += e;
            any = true;
        }
    }
    Ok(LossEval {
        loss,
        grad,
        degenerate: !any,
    })
}

/// `sum_i |x_i - x0|^2` with gradient rows `2 (x_i - x0)`, where `x0` is the
/// barycenter held constant.
pub fn vanilla_loss_and_gradient(cloud: &PointCloud) -> LossEval {
    let center = barycenter(cloud);
    let mut grad = Matrix::zeros(cloud.len(), cloud.dim());
    let mut loss = 0.0;
    for i in 0..cloud.len() {
        for ((g, x), c) in grad.row_mut(i).iter_mut().zip(cloud.point(i)).zip(&center) {
            let t = x - c;
            loss += t * t;
            *g = 2.0 * t;
        }
    }
    LossEval {
        loss,
        grad,
        degenerate: false,
    }
}

pub fn loss_and_gradient(cloud: &PointCloud, cfg: &FlowConfig) -> Result<LossEval> {
    match &cfg.loss {
        LossKind::TopoEntropy { dims } => {
            entropy_loss_and_gradient_with_budget(cloud, dims, cfg.simplex_budget)
        }
        LossKind::VanillaBarycenter => Ok(vanilla_loss_and_gradient(cloud)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowResult {
    pub evolved: PointCloud,
    /// `evolved - original`, row by row.
    pub displacement: Matrix,
    /// Loss evaluated at the start of each cycle.
    pub loss_trace: Vec<f64>,
}

/// Plain gradient descent for `cfg.num_cycles` cycles. The diagram (or
/// barycenter) is recomputed on the current cloud every cycle.
pub fn evolve(cloud: &PointCloud, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    let mut current = cloud.clone();
    let mut loss_trace = Vec::with_capacity(cfg.num_cycles);
    for cycle in 0..cfg.num_cycles {
        let eval = loss_and_gradient(&current, cfg)?;
        if !eval.loss.is_finite() {
            return Err(Error::FlowDiverged {
                cycle,
                reason: format!("loss is {}", eval.loss),
            });
        }
        if !eval.grad.is_finite() {
            return Err(Error::FlowDiverged {
                cycle,
                reason: "gradient has non-finite entries".into(),
            });
        }
        loss_trace.push(eval.loss);
        let mut next = current.into_matrix();
        for (x, g) in next.as_mut_slice().iter_mut().zip(eval.grad.as_slice()) {
            *x -= cfg.step_size * g;
        }
        current = PointCloud::new(next).map_err(|_| Error::FlowDiverged {
            cycle,
            reason: "points left the finite range".into(),
        })?;
    }
    let mut displacement = current.points().clone();
    for (d, o) in displacement
        .as_mut_slice()
        .iter_mut()
        .zip(cloud.points().as_slice())
    {
        *d -= o;
    }
    Ok(FlowResult {
        evolved: current,
        displacement,
        loss_trace,
    })
}

/// CSV `cycle,loss`.
pub fn write_loss_trace_csv<W: Write>(mut w: W, trace: &[f64]) -> std::io::Result<()> {
    writeln!(w, "cycle,loss")?;
    for (i, l) in trace.iter().enumerate() {
        writeln!(w, "{i},{l}")?;
    }
    Ok(())
}

/// Diagram used by the topological loss, exposed for inspection.
pub fn loss_diagram(cloud: &PointCloud, dims: &[usize], budget: usize) -> Result<PersistenceDiagram> {
    validate_dims(dims)?;
    let max_dim = dims.iter().copied().max().unwrap_or(0);
    persistence::vr_persistence_with_budget(&pairwise_distances(cloud), max_dim, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Central differences of `f` at every coordinate.
    fn finite_differences(cloud: &PointCloud, h: f64, f: impl Fn(&PointCloud) -> f64) -> Matrix {
        let mut out = Matrix::zeros(cloud.len(), cloud.dim());
        for i in 0..cloud.len() {
            for k in 0..cloud.dim() {
                let mut plus = cloud.points().clone();
                plus.set(i, k, plus.get(i, k) + h);
                let mut minus = cloud.points().clone();
                minus.set(i, k, minus.get(i, k) - h);
                let fp = f(&PointCloud::new(plus).unwrap());
                let fm = f(&PointCloud::new(minus).unwrap());
                out.set(i, k, (fp - fm) / (2.0 * h));
            }
        }
        out
    }

    fn max_rel_err(a: &Matrix, b: &Matrix, floor: f64) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
            .fold(0.0, f64::max)
    }

    /// Rejection-samples a cloud whose sorted pairwise distances are separated
    /// by at least `gap`.
    fn tie_free_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, side: f64, gap: f64) -> PointCloud {
        loop {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(0.0..side)).collect())
                .collect();
            let c = PointCloud::from_rows(&rows).unwrap();
            let dm = pairwise_distances(&c);
            let mut ds: Vec<f64> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| dm.get(i, j))
                .collect();
            ds.sort_by(f64::total_cmp);
            if ds.windows(2).all(|w| w[1] - w[0] >= gap) {
                return c;
            }
        }
    }

    #[test]
    fn two_points_have_zero_gradient() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 2.0]]).unwrap();
        let e = entropy_loss_and_gradient(&c, &[0]).unwrap();
        assert_eq!(e.loss, 0.0);
        assert!(e.grad.as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn three_points_match_finite_differences() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]).unwrap();
        let e = entropy_loss_and_gradient(&c, &[0]).unwrap();
        let fd = finite_differences(&c, 1e-6, |x| entropy_loss_and_gradient(x, &[0]).unwrap().loss);
        for (a, f) in e.grad.as_slice().iter().zip(fd.as_slice()) {
            if *f == 0.0 {
                assert!(a.abs() < 1e-9);
            } else {
                assert!((a - f).abs() / f.abs() <= 1e-5, "{a} vs {f}");
            }
        }
    }

    #[test]
    fn random_cloud_h0_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = tie_free_cloud(&mut rng, 30, 4, 100.0, 1e-3);
        let e = entropy_loss_and_gradient(&c, &[0]).unwrap();
        let fd = finite_differences(&c, 1e-6, |x| entropy_loss_and_gradient(x, &[0]).unwrap().loss);
        let err = max_rel_err(&e.grad, &fd, 1e-2 * fd.max_abs());
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn higher_dims_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = tie_free_cloud(&mut rng, 12, 2, 100.0, 1e-3);
        let dims = [0, 1];
        let e = entropy_loss_and_gradient(&c, &dims).unwrap();
        let fd = finite_differences(&c, 1e-6, |x| entropy_loss_and_gradient(x, &dims).unwrap().loss);
        let err = max_rel_err(&e.grad, &fd, 1e-2 * fd.max_abs());
        assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn entropy_gradient_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = tie_free_cloud(&mut rng, 15, 3, 10.0, 1e-4);
        let t = c.translated(&[3.5, -7.25, 100.0]).unwrap();
        let (a, b) = (
            entropy_loss_and_gradient(&c, &[0]).unwrap(),
            entropy_loss_and_gradient(&t, &[0]).unwrap(),
        );
        assert!((a.loss - b.loss).abs() < 1e-12);
        for (x, y) in a.grad.as_slice().iter().zip(b.grad.as_slice()) {
            assert!((x - y).abs() <= 1e-9 * a.grad.max_abs());
        }
    }

    #[test]
    fn vanilla_examples() {
        let c = PointCloud::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let e = vanilla_loss_and_gradient(&c);
        assert_eq!(e.loss, 0.0);
        assert!(e.grad.as_slice().iter().all(|&g| g == 0.0));

        let c = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let e = vanilla_loss_and_gradient(&c);
        assert_eq!(e.loss, 2.0);
        assert_eq!(e.grad.row(0), &[-2.0, 0.0]);
        assert_eq!(e.grad.row(1), &[2.0, 0.0]);
    }

    #[test]
    fn vanilla_matches_frozen_barycenter_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let c = PointCloud::from_rows(&rows).unwrap();
        let x0 = barycenter(&c);
        let frozen = |x: &PointCloud| {
            x.points()
                .iter_rows()
                .map(|p| p.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .sum::<f64>()
        };
        let fd = finite_differences(&c, 1e-6, frozen);
        let e = vanilla_loss_and_gradient(&c);
        for (a, f) in e.grad.as_slice().iter().zip(fd.as_slice()) {
            assert!((a - f).abs() <= 1e-7 * f.abs().max(1.0));
        }
        for k in 0..3 {
            let s: f64 = (0..15).map(|i| e.grad.get(i, k)).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_step_is_noop() {
        let c = PointCloud::from_rows(&[[0.0, 1.0], [2.0, 0.5], [3.0, 3.0]]).unwrap();
        let cfg = FlowConfig {
            step_size: 0.0,
            ..FlowConfig::default()
        };
        let r = evolve(&c, &cfg).unwrap();
        assert_eq!(r.evolved, c);
        assert!(r.displacement.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(r.loss_trace.len(), 30);
    }

    #[test]
    fn one_vanilla_step() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let cfg = FlowConfig {
            num_cycles: 1,
            step_size: 0.1,
            ..FlowConfig::vanilla()
        };
        let r = evolve(&c, &cfg).unwrap();
        let e = r.evolved.points();
        assert!((e.get(0, 0) - 0.2).abs() < 1e-15 && e.get(0, 1) == 0.0);
        assert!((e.get(1, 0) - 1.8).abs() < 1e-15 && e.get(1, 1) == 0.0);
        assert_eq!(r.loss_trace, vec![2.0]);
    }

    #[test]
    fn displacement_consistent_with_evolved() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = tie_free_cloud(&mut rng, 20, 3, 5.0, 0.0);
        let r = evolve(&c, &FlowConfig::default()).unwrap();
        for i in 0..c.len() {
            for k in 0..c.dim() {
                let (o, e, d) = (c.points().get(i, k), r.evolved.points().get(i, k), r.displacement.get(i, k));
                assert_eq!(e - o, d);
                assert_eq!(o + d, e);
            }
        }
    }

    #[test]
    fn divergence_reports_cycle() {
        let c = PointCloud::from_rows(&[[0.0], [1e300], [-1e300]]).unwrap();
        let cfg = FlowConfig {
            step_size: 1e10,
            ..FlowConfig::vanilla()
        };
        match evolve(&c, &cfg) {
            Err(Error::FlowDiverged { cycle, .. }) => assert!(cycle < 30),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        let c = PointCloud::from_rows(&[[0.0]]).unwrap();
        for cfg in [
            FlowConfig { num_cycles: 0, ..FlowConfig::default() },
            FlowConfig { step_size: -1.0, ..FlowConfig::default() },
            FlowConfig::topo(vec![]),
            FlowConfig::topo(vec![3]),
        ] {
            assert!(matches!(evolve(&c, &cfg), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace_csv(&mut buf, &[1.5, 1.25]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cycle,loss\n0,1.5\n1,1.25\n");
    }
}
