use serde::Serialize;

use super::PersistenceDiagram;

/// Persistence entropy of one homology dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Entropy {
    pub value: f64,
    /// No finite bar, or total finite persistence is zero.
    pub degenerate: bool,
}

/// Lengths `death - birth` of the finite bars in `dim`, in diagram order.
pub fn bar_lengths(diag: &PersistenceDiagram, dim: usize) -> Vec<f64> {
    diag.finite_in_dim(dim).map(|p| p.persistence()).collect()
}

/// Shannon entropy (natural log) of the normalized finite bar lengths in
/// `dim`. Essential classes are ignored.
pub fn persistence_entropy(diag: &PersistenceDiagram, dim: usize) -> Entropy {
    entropy_of_lengths(&bar_lengths(diag, dim))
}

pub(crate) fn entropy_of_lengths(lengths: &[f64]) -> Entropy {
    let total: f64 = lengths.iter().sum();
    if lengths.is_empty() || total <= 0.0 {
        return Entropy {
            value: 0.0,
            degenerate: true,
        };
    }
    let value = -lengths
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| {
            let p = l / total;
            p * p.ln()
        })
        .sum::<f64>();
    Entropy {
        value,
        degenerate: false,
    }
}
