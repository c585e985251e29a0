//! Table factors used as the variable-elimination workspace.

/// Non-negative table over the joint states of `scope`, row-major with the last
/// variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub scope: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(scope.len(), cards.len());
        debug_assert_eq!(values.len(), cards.iter().product::<usize>());
        debug_assert!(values.iter().all(|&v| v >= 0.0));
        Factor { scope, cards, values }
    }

    pub fn scalar(value: f64) -> Self {
        Factor::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    fn strides(cards: &[usize]) -> Vec<usize> {
        let mut strides = vec![1; cards.len()];
        for i in (0..cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        strides
    }

    /// Fixes `var` to `state`, dropping it from the scope. No-op if `var` is absent.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = Self::strides(&self.cards);
        let outer: usize = self.cards[..pos].iter().product();
        let inner = strides[pos];
        let mut values = Vec::with_capacity(self.values.len() / self.cards[pos]);
        for o in 0..outer {
            let base = o * inner * self.cards[pos] + state * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor::new(scope, cards, values)
    }

    /// Pointwise product over the union of both scopes.
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(&v) {
                scope.push(v);
                cards.push(c);
            }
        }
        let stride_in = |f: &Factor| -> Vec<usize> {
            let own = Self::strides(&f.cards);
            scope
                .iter()
                .map(|v| f.scope.iter().position(|x| x == v).map_or(0, |p| own[p]))
                .collect()
        };
        let sa = stride_in(self);
        let sb = stride_in(other);

        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..total {
            values.push(self.values[ia] * other.values[ib]);
            // odometer increment, last digit fastest
            for d in (0..digits.len()).rev() {
                digits[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if digits[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                digits[d] = 0;
            }
        }
        Factor::new(scope, cards, values)
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = Self::strides(&self.cards);
        let outer: usize = self.cards[..pos].iter().product();
        let inner = strides[pos];
        let card = self.cards[pos];
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for i in 0..inner {
                    values[o * inner + i] += self.values[base + i];
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor::new(scope, cards, values)
    }
}
