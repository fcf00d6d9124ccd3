use crate::Complex;

/// Neumaier-compensated accumulator. Summation order is the iteration order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedComplex {
    re: Compensated,
    im: Compensated,
}

impl CompensatedComplex {
    #[inline]
    pub(crate) fn add(&mut self, z: Complex) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub(crate) fn value(self) -> Complex {
        Complex::new(self.re.value(), self.im.value())
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = Compensated::default();
    for x in items {
        acc.add(x);
    }
    acc.value()
}
