//! Product atlases: a decomposition of M and one of M' combine into a
//! decomposition of M × M' with chart rectangles `D_i × D'_{i'}`, factor-wise
//! transition maps, and the product metric.

use std::sync::Arc;

use super::{Atlas, Chart, EmbedFn, MetricFn, TransitionFn};

/// Atlas for M × M' with `m·m'` charts. Chart `(i, i')` has index
/// `i·m' + i'` (first factor slowest); its transition to `(j, j')` applies
/// the factor transitions independently and is defined only where both are.
///
/// The product metric gives `K = blockdiag(K(x)·w'(x'), K'(x')·w(x))` and
/// `w = w(x)·w'(x')`.
pub fn product_atlas(a: &Atlas, b: &Atlas) -> Atlas {
    let (da, db) = (a.dim(), b.dim());
    let (ma, mb) = (a.num_charts(), b.num_charts());
    let d = da + db;

    let mut charts = Vec::with_capacity(ma * mb);
    for ia in 0..ma {
        for ib in 0..mb {
            let rect = a.chart(ia).rect.product(&b.chart(ib).rect);
            let ka = a.chart(ia).metric_fn();
            let kb = b.chart(ib).metric_fn();
            let metric: MetricFn = Arc::new(move |x: &[f64], k: &mut [f64]| {
                let (xa, xb) = x.split_at(da);
                let mut kka = vec![0.0; da * da];
                let mut kkb = vec![0.0; db * db];
                let wa = ka(xa, &mut kka);
                let wb = kb(xb, &mut kkb);
                k.fill(0.0);
                for r in 0..da {
                    for c in 0..da {
                        k[r * d + c] = kka[r * da + c] * wb;
                    }
                }
                for r in 0..db {
                    for c in 0..db {
                        k[(da + r) * d + (da + c)] = kkb[r * db + c] * wa;
                    }
                }
                wa * wb
            });
            let embed = match (a.chart(ia).embed_fn(), b.chart(ib).embed_fn()) {
                (Some(ea), Some(eb)) => {
                    let f: EmbedFn = Arc::new(move |x: &[f64]| {
                        let (xa, xb) = x.split_at(da);
                        let mut out = ea(xa);
                        out.extend(eb(xb));
                        out
                    });
                    Some(f)
                }
                _ => None,
            };
            charts.push(Chart::new(ia * mb + ib, rect, metric, embed));
        }
    }

    let m = ma * mb;
    let mut transitions: Vec<Option<TransitionFn>> = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                transitions.push(None);
                continue;
            }
            let (ia, ib) = (i / mb, i % mb);
            let (ja, jb) = (j / mb, j % mb);
            let ta = if ia == ja { None } else { a.transition_fn(ia, ja) };
            let tb = if ib == jb { None } else { b.transition_fn(ib, jb) };
            let f: TransitionFn = Arc::new(move |x: &[f64]| {
                let (xa, xb) = x.split_at(da);
                let ya = match &ta {
                    Some(t) => t(xa)?,
                    None => xa.to_vec(),
                };
                let yb = match &tb {
                    Some(t) => t(xb)?,
                    None => xb.to_vec(),
                };
                let mut y = ya;
                y.extend(yb);
                Some(y)
            });
            transitions.push(Some(f));
        }
    }

    Atlas::from_parts(
        format!("{}x{}", a.name(), b.name()),
        charts,
        transitions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::sphere_atlas;
    use crate::tensor_grid::Rect;

    fn s2xs2(r: f64) -> Atlas {
        let a = sphere_atlas(2, r).unwrap();
        let b = sphere_atlas(2, r).unwrap();
        product_atlas(&a, &b)
    }

    #[test]
    fn four_charts_on_product() {
        let atlas = s2xs2(1.2);
        assert_eq!(atlas.num_charts(), 4);
        assert_eq!(atlas.dim(), 4);
        for chart in atlas.charts() {
            assert_eq!(chart.rect, Rect::cube(4, -1.2, 1.2).unwrap());
        }
    }

    #[test]
    fn transitions_match_componentwise_inversion() {
        let atlas = s2xs2(1.2);
        let x = [0.5, 0.25, -0.4, 0.8];
        // chart 0 = (1,1) to chart 3 = (2,2): both factors invert
        let y = atlas.transition(0, 3, &x).unwrap();
        let sa = 0.5f64 * 0.5 + 0.25 * 0.25;
        let sb = 0.4f64 * 0.4 + 0.8 * 0.8;
        assert!((y[0] - 0.5 / sa).abs() < 1e-14);
        assert!((y[1] - 0.25 / sa).abs() < 1e-14);
        assert!((y[2] + 0.4 / sb).abs() < 1e-14);
        assert!((y[3] - 0.8 / sb).abs() < 1e-14);
        // chart 0 to chart 1 = (1,2): first factor identity
        let y = atlas.transition(0, 1, &x).unwrap();
        assert_eq!(&y[..2], &x[..2]);
        // undefined when the swapping factor sits at its origin
        assert!(atlas.transition(0, 1, &[0.5, 0.25, 0.0, 0.0]).is_none());
        // ... but remaining defined for the factor that does not swap
        assert!(atlas.transition(0, 2, &[0.5, 0.25, 0.0, 0.0]).is_some());
    }

    #[test]
    fn product_metric_at_origin() {
        let atlas = s2xs2(1.2);
        let m = atlas.chart(0).metric(&[0.0; 4]);
        assert!((m.w - 16.0).abs() < 1e-14);
        for r in 0..4 {
            for c in 0..4 {
                let want = if r == c { 4.0 } else { 0.0 };
                assert!((m.k[r * 4 + c] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flat_factors_stay_flat() {
        let flat = |d: usize| {
            let rect = Rect::cube(d, 0.0, 1.0).unwrap();
            let chart = Chart::flat(rect);
            Atlas::from_parts(
                "flat",
                vec![
                    Chart::new(0, chart.rect.clone(), chart.metric_fn(), None),
                    Chart::new(1, chart.rect.clone(), chart.metric_fn(), None),
                ],
                vec![
                    None,
                    Some(Arc::new(|x: &[f64]| Some(x.to_vec())) as TransitionFn),
                    Some(Arc::new(|x: &[f64]| Some(x.to_vec())) as TransitionFn),
                    None,
                ],
            )
        };
        let p = product_atlas(&flat(2), &flat(1));
        let m = p.chart(0).metric(&[0.3, 0.3, 0.3]);
        assert!((m.w - 1.0).abs() < 1e-15);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((m.k[r * 3 + c] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn product_embed_concatenates_unit_vectors() {
        let atlas = s2xs2(1.2);
        let e = atlas.chart(0).embed(&[0.0; 4]).unwrap();
        assert_eq!(e, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }
}
