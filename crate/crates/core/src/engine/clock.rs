/// Neumaier-compensated running sum for event times.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedClock {
    sum: f64,
    compensation: f64,
}

impl CompensatedClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Value after adding `x`, without committing it.
    pub fn peek(&self, x: f64) -> f64 {
        let mut c = *self;
        c.add(x);
        c.value()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
