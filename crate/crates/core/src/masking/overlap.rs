use std::fmt;

use crate::error::{Error, Result};
use crate::masking::mask::TaskMask;

/// Connection counts by which tasks use them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OverlapCounts {
    pub shared: usize,
    pub ctr_only: usize,
    pub cvr_only: usize,
    pub dead: usize,
}

impl OverlapCounts {
    pub fn total(&self) -> usize {
        self.shared + self.ctr_only + self.cvr_only + self.dead
    }

    fn add(&mut self, ctr: bool, cvr: bool) {
        match (ctr, cvr) {
            (true, true) => self.shared += 1,
            (true, false) => self.ctr_only += 1,
            (false, true) => self.cvr_only += 1,
            (false, false) => self.dead += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskOverlapStats {
    pub totals: OverlapCounts,
    pub per_layer: Vec<OverlapCounts>,
}

impl MaskOverlapStats {
    pub fn shared_count(&self) -> usize {
        self.totals.shared
    }

    pub fn ctr_only_count(&self) -> usize {
        self.totals.ctr_only
    }

    pub fn cvr_only_count(&self) -> usize {
        self.totals.cvr_only
    }

    pub fn dead_count(&self) -> usize {
        self.totals.dead
    }

    pub fn total(&self) -> usize {
        self.totals.total()
    }

    /// `key=value` lines, one per count.
    pub fn to_kv_lines(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |k: String, c: &OverlapCounts| {
            out.push(format!("{prefix}{k}shared={}", c.shared));
            out.push(format!("{prefix}{k}ctr_only={}", c.ctr_only));
            out.push(format!("{prefix}{k}cvr_only={}", c.cvr_only));
            out.push(format!("{prefix}{k}dead={}", c.dead));
            out.push(format!("{prefix}{k}total={}", c.total()));
        };
        push(String::new(), &self.totals);
        for (i, c) in self.per_layer.iter().enumerate() {
            push(format!("layer{i}."), c);
        }
        out
    }
}

impl fmt::Display for MaskOverlapStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
            "layer", "shared", "ctr_only", "cvr_only", "dead", "total"
        )?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &OverlapCounts| {
            writeln!(
                f,
                "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10}",
                name,
                c.shared,
                c.ctr_only,
                c.cvr_only,
                c.dead,
                c.total()
            )
        };
        for (i, c) in self.per_layer.iter().enumerate() {
            row(f, &i.to_string(), c)?;
        }
        row(f, "all", &self.totals)
    }
}

/// Classifies every connection as shared, CTR-only, CVR-only or dead.
pub fn overlap_stats(mask_ctr: &TaskMask, mask_cvr: &TaskMask) -> Result<MaskOverlapStats> {
    if mask_ctr.shapes() != mask_cvr.shapes() {
        return Err(Error::Shape {
            op: "overlap_stats",
            left: (mask_ctr.layers().len(), mask_ctr.total()),
            right: (mask_cvr.layers().len(), mask_cvr.total()),
        });
    }
    let mut totals = OverlapCounts::default();
    let per_layer = mask_ctr
        .layers()
        .iter()
        .zip(mask_cvr.layers())
        .map(|(a, b)| {
            let mut c = OverlapCounts::default();
            for (&x, &y) in a.bits().iter().zip(b.bits()) {
                c.add(x, y);
                totals.add(x, y);
            }
            c
        })
        .collect();
    Ok(MaskOverlapStats { totals, per_layer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::MaskLayer;
    use crate::nn::RngSeed;
    use crate::task::Task;
    use rand::Rng as _;

    fn random_mask(seed: u64, task: Task) -> TaskMask {
        let mut rng = RngSeed(seed).rng();
        let bits = (0..64).map(|_| rng.gen::<bool>()).collect();
        TaskMask::new(vec![MaskLayer::from_bits(8, 8, bits).unwrap()], task, 0)
    }

    #[test]
    fn identical_masks_have_no_private_part() {
        let m = random_mask(1, Task::Ctr);
        let s = overlap_stats(&m, &m).unwrap();
        assert_eq!((s.ctr_only_count(), s.cvr_only_count()), (0, 0));
        assert_eq!(s.shared_count(), m.survivors());
    }

    #[test]
    fn complementary_masks_share_nothing() {
        let a = random_mask(2, Task::Ctr);
        let bits = a.layer(0).bits().iter().map(|b| !b).collect();
        let b = TaskMask::new(vec![MaskLayer::from_bits(8, 8, bits).unwrap()], Task::Cvr, 0);
        let s = overlap_stats(&a, &b).unwrap();
        assert_eq!((s.shared_count(), s.dead_count()), (0, 0));
        assert_eq!(s.total(), 64);
    }

    #[test]
    fn random_masks_match_enumeration() {
        for seed in 0..10 {
            let a = random_mask(seed, Task::Ctr);
            let b = random_mask(seed + 100, Task::Cvr);
            let s = overlap_stats(&a, &b).unwrap();
            let mut want = [0usize; 4];
            for r in 0..8 {
                for c in 0..8 {
                    let idx = match (a.layer(0).get(r, c), b.layer(0).get(r, c)) {
                        (true, true) => 0,
                        (true, false) => 1,
                        (false, true) => 2,
                        (false, false) => 3,
                    };
                    want[idx] += 1;
                }
            }
            assert_eq!([s.shared_count(), s.ctr_only_count(), s.cvr_only_count(), s.dead_count()], want);
            assert_eq!(s.per_layer[0], s.totals);
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = random_mask(1, Task::Ctr);
        let b = TaskMask::new(vec![MaskLayer::ones(4, 16)], Task::Cvr, 0);
        assert!(overlap_stats(&a, &b).is_err());
    }

    #[test]
    fn renders_text_and_kv() {
        let a = random_mask(3, Task::Ctr);
        let s = overlap_stats(&a, &a).unwrap();
        let text = s.to_string();
        assert!(text.lines().next().unwrap().contains("shared"));
        assert!(s.to_kv_lines("").contains(&"total=64".to_string()));
    }
}
