//! Bounded convex domains that every iterate is kept inside.

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

/// A closed, bounded, convex set together with a diameter bound `D_w >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    diameter_bound: f64,
}

impl Domain {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::EmptyInput);
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument(
                "box requires lower < upper in every coordinate".into(),
            ));
        }
        let diameter = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt();
        Ok(Self {
            kind: DomainKind::Box { lower, upper },
            diameter_bound: diameter.max(1.0),
        })
    }

    /// The cube `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::boxed(vec![lower; dim], vec![upper; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(
                "ball radius must be positive".into(),
            ));
        }
        Ok(Self {
            kind: DomainKind::Ball { center, radius },
            diameter_bound: (2.0 * radius).max(1.0),
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Box { lower, .. } => lower.len(),
            DomainKind::Ball { center, .. } => center.len(),
        }
    }

    pub fn diameter_bound(&self) -> f64 {
        self.diameter_bound
    }

    pub fn center(&self) -> Vec<f64> {
        match &self.kind {
            DomainKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            DomainKind::Ball { center, .. } => center.clone(),
        }
    }

    /// Largest Euclidean norm of any point in the domain.
    pub fn max_norm(&self) -> f64 {
        match &self.kind {
            DomainKind::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| {
                    let a = l.abs().max(u.abs());
                    a * a
                })
                .sum::<f64>()
                .sqrt(),
            DomainKind::Ball { center, radius } => {
                center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius
            }
        }
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        match &self.kind {
            DomainKind::Box { lower, upper } => w
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
            DomainKind::Ball { center, radius } => {
                let dist2: f64 = w.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                dist2.sqrt() <= radius + tol
            }
        }
    }

    /// Euclidean projection, in place.
    pub fn project_in_place(&self, w: &mut [f64]) {
        match &self.kind {
            DomainKind::Box { lower, upper } => {
                for ((x, l), u) in w.iter_mut().zip(lower).zip(upper) {
                    *x = x.clamp(*l, *u);
                }
            }
            DomainKind::Ball { center, radius } => {
                let dist2: f64 = w.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                let dist = dist2.sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (x, c) in w.iter_mut().zip(center) {
                        *x = c + (*x - c) * scale;
                    }
                }
            }
        }
    }

    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        let mut out = w.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }
}
