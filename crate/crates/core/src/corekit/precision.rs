/// Working-precision ladder: start, then doubling up to a ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub start: u32,
    pub ceiling: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { start: 128, ceiling: 8192 }
    }
}

impl PrecisionPolicy {
    pub fn new(start: u32, ceiling: u32) -> Self {
        PrecisionPolicy { start: start.max(32), ceiling: ceiling.max(start.max(32)) }
    }

    pub fn ladder(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut p = self.start;
        while p <= self.ceiling {
            out.push(p);
            p *= 2;
        }
        if out.last() != Some(&self.ceiling) {
            out.push(self.ceiling);
        }
        out
    }

    /// Same ceiling, starting no lower than `p`.
    pub fn from_at_least(&self, p: u32) -> Self {
        PrecisionPolicy { start: self.start.max(p).min(self.ceiling), ceiling: self.ceiling }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_doubles() {
        assert_eq!(PrecisionPolicy::default().ladder(), vec![128, 256, 512, 1024, 2048, 4096, 8192]);
        assert_eq!(PrecisionPolicy::new(100, 500).ladder(), vec![100, 200, 400, 500]);
    }
}
