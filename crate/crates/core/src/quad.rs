//! Gauss–Kronrod quadrature on panels graded toward both ends of `[0, β]`.

// 15-point Kronrod abscissae on [-1, 1] (non-negative half) and weights,
// with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Quadrature nodes with Kronrod weights and embedded Gauss weights.
#[derive(Clone, Debug)]
pub struct NodeSet {
    pub t: Vec<f64>,
    pub kronrod: Vec<f64>,
    pub gauss: Vec<f64>,
}

impl NodeSet {
    /// G7/K15 on each panel.
    pub fn on_panels(panels: &[(f64, f64)]) -> Self {
        let mut s = NodeSet {
            t: Vec::new(),
            kronrod: Vec::new(),
            gauss: Vec::new(),
        };
        for &(a, b) in panels {
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            // ascending abscissae: −x_0 … −x_6, 0, x_6 … x_0
            let order = (0..8).map(|i| (i, -1.0)).chain((0..7).rev().map(|i| (i, 1.0)));
            for (i, sg) in order {
                let wg = match i {
                    1 => WG[0],
                    3 => WG[1],
                    5 => WG[2],
                    7 => WG[3],
                    _ => 0.0,
                };
                s.t.push(c + sg * h * XGK[i]);
                s.kronrod.push(h * WGK[i]);
                s.gauss.push(h * wg);
            }
        }
        s
    }

    /// Panels on `[0, β]` halving toward each end, `levels` panels per half,
    /// symmetric under `t ↦ β − t`.
    pub fn graded(beta: f64, levels: usize) -> Self {
        let half = 0.5 * beta;
        let mut cuts = vec![0.0];
        for i in (1..levels).rev() {
            cuts.push(half / (1u64 << i) as f64);
        }
        cuts.push(half);
        let mut panels: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let mirrored: Vec<(f64, f64)> = panels.iter().rev().map(|&(a, b)| (beta - b, beta - a)).collect();
        panels.extend(mirrored);
        Self::on_panels(&panels)
    }

    /// Grading depth adequate for integrands built from `e^{−tE}` with
    /// `E` spanning `width` (shifted spectrum).
    pub fn for_spectrum(beta: f64, width: f64) -> Self {
        let levels = (beta * width).max(1.0).log2().ceil() as usize + 3;
        Self::graded(beta, levels.min(60))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Kronrod estimate and `|K − G|` for sampled values.
    pub fn integrate(&self, f: &[f64]) -> (f64, f64) {
        let k: f64 = f.iter().zip(&self.kronrod).map(|(a, b)| a * b).sum();
        let g: f64 = f.iter().zip(&self.gauss).map(|(a, b)| a * b).sum();
        (k, (k - g).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let s = NodeSet::on_panels(&[(0.0, 2.0)]);
        for p in 0..=13 {
            let f: Vec<f64> = s.t.iter().map(|t| t.powi(p)).collect();
            let (v, _) = s.integrate(&f);
            let want = 2f64.powi(p + 1) / (p + 1) as f64;
            assert!((v - want).abs() < 1e-12 * want, "p={p}");
        }
        let f: Vec<f64> = s.t.iter().map(|t| t.powi(13)).collect();
        assert!(s.integrate(&f).1 < 1e-9);
    }

    #[test]
    fn graded_rule_handles_boundary_layers() {
        let beta = 2.0;
        let e = 300.0;
        let s = NodeSet::for_spectrum(beta, e);
        let f: Vec<f64> = s.t.iter().map(|t| (-t * e).exp() + (-(beta - t) * e).exp()).collect();
        let (v, err) = s.integrate(&f);
        let want = 2.0 * (1.0 - (-beta * e).exp()) / e;
        assert!((v - want).abs() < 1e-13, "{v} {want}");
        assert!(err < 1e-6);
        for (t, u) in s.t.iter().zip(s.t.iter().rev()) {
            assert!((t + u - beta).abs() < 1e-14);
        }
    }
}
