//! Precedence and parallelism over the dimensions of one statement.

use std::collections::BTreeSet;

use crate::cybersign::Dimension;

use super::ast::IntegrationDirective;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderError {
    /// `X>Y` together with `Y>X`, or a precedence between two dimensions
    /// that are also declared parallel.
    Contradictory(Dimension, Dimension),
    /// Precedence chain of length three or more that closes on itself.
    Cyclic(Vec<Dimension>),
}

/// The strict partial order induced by an operator's `>` and `||` directives.
///
/// Parallel directives are closed into equivalence classes; precedence is
/// lifted to classes and transitively closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionOrder {
    present: BTreeSet<Dimension>,
    class: [usize; 4],
    /// `above[x][y]`: dimension `x` strictly precedes dimension `y`.
    above: [[bool; 4]; 4],
}

impl DimensionOrder {
    pub fn new(
        directives: &[IntegrationDirective],
        present: &BTreeSet<Dimension>,
    ) -> Result<DimensionOrder, OrderError> {
        let precedences: Vec<(Dimension, Dimension)> = directives
            .iter()
            .filter_map(|d| match d {
                IntegrationDirective::Precedence { higher, lower } => Some((*higher, *lower)),
                _ => None,
            })
            .collect();
        for &(h, l) in &precedences {
            if precedences.contains(&(l, h)) {
                return Err(OrderError::Contradictory(h, l));
            }
        }

        let mut class = [0, 1, 2, 3];
        fn find(class: &mut [usize; 4], x: usize) -> usize {
            let mut r = x;
            while class[r] != r {
                r = class[r];
            }
            class[x] = r;
            r
        }
        for d in directives {
            if let IntegrationDirective::Parallel(a, b) = d {
                let (ra, rb) = (find(&mut class, a.index()), find(&mut class, b.index()));
                class[ra.max(rb)] = ra.min(rb);
            }
        }
        for i in 0..4 {
            class[i] = find(&mut class, i);
        }

        // class-level reachability
        let mut reach = [[false; 4]; 4];
        for &(h, l) in &precedences {
            let (ch, cl) = (class[h.index()], class[l.index()]);
            if ch == cl {
                return Err(OrderError::Contradictory(h, l));
            }
            reach[ch][cl] = true;
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        if let Some(c) = (0..4).find(|&c| reach[c][c]) {
            let members = Dimension::ALL
                .into_iter()
                .filter(|d| reach[c][class[d.index()]] && reach[class[d.index()]][c])
                .collect();
            return Err(OrderError::Cyclic(members));
        }

        let mut above = [[false; 4]; 4];
        for x in Dimension::ALL {
            for y in Dimension::ALL {
                above[x.index()][y.index()] = reach[class[x.index()]][class[y.index()]];
            }
        }
        Ok(DimensionOrder {
            present: present.clone(),
            class,
            above,
        })
    }

    pub fn precedes(&self, x: Dimension, y: Dimension) -> bool {
        self.above[x.index()][y.index()]
    }

    pub fn parallel(&self, x: Dimension, y: Dimension) -> bool {
        x != y && self.class[x.index()] == self.class[y.index()]
    }

    /// Dimensions of `x`'s parallel class (including `x`) that are present.
    pub fn parallel_class(&self, x: Dimension) -> Vec<Dimension> {
        self.present
            .iter()
            .copied()
            .filter(|d| self.class[d.index()] == self.class[x.index()])
            .collect()
    }

    /// No present dimension strictly precedes `x`.
    pub fn is_top(&self, x: Dimension) -> bool {
        !self.present.iter().any(|&d| self.precedes(d, x))
    }

    /// `|present| + #below(x) - #above(x)`, counted over present dimensions.
    /// Strictly larger for a dimension that precedes another; equal for
    /// parallel dimensions.
    pub fn rank_score(&self, x: Dimension) -> usize {
        let below = self.present.iter().filter(|&&d| self.precedes(x, d)).count();
        let above = self.present.iter().filter(|&&d| self.precedes(d, x)).count();
        self.present.len() + below - above
    }

    pub fn present(&self) -> &BTreeSet<Dimension> {
        &self.present
    }
}
