/// Running sum with first-order (Neumaier) error compensation.
///
/// `value()` folds the compensation term back in; the absolute error stays
/// O(eps · Σ|xᵢ|) independent of the number of terms, which is what keeps
/// the per-run conservation identity at machine precision over 10⁸+ packets.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        // the larger-magnitude operand donates the rounding error exactly
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation_that_breaks_naive_summation() {
        // 1 + 1e-16 repeated: naive f64 addition drops every small term.
        let mut c = CompensatedSum::new();
        let mut naive = 0.0;
        c.add(1.0);
        naive += 1.0;
        for _ in 0..1_000_000 {
            c.add(1e-16);
            naive += 1e-16;
        }
        assert_eq!(naive, 1.0); // demonstrates the failure mode
        let exact = 1.0 + 1e-10;
        assert!((c.value() - exact).abs() < 1e-24);
    }

    #[test]
    fn exact_on_alternating_large_small() {
        let mut c = CompensatedSum::new();
        for k in 0..10_000 {
            c.add(1e10);
            c.add(3.25e-6);
            c.add(-1e10);
            let _ = k;
        }
        let exact = 10_000.0 * 3.25e-6;
        assert!((c.value() - exact).abs() / exact < 1e-12);
    }
}
