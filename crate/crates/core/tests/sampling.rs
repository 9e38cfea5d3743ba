use rand::SeedableRng;

use rmfs_core::inventory::Sku;
use rmfs_core::orders::SkuCatalog;
use rmfs_core::rng::SimRng;
use rmfs_core::SkuId;

// Pearson χ² goodness of fit of weighted SKU draws. 19 degrees of freedom,
// critical value at the 0.001 level.
#[test]
fn sku_draws_follow_weights() {
    let weights = [
        0.05, 0.3, 1.2, 0.7, 2.5, 0.01, 0.9, 1.8, 0.4, 0.6, 3.0, 0.2, 1.1, 0.8, 0.15, 2.2, 0.5, 1.4, 0.35, 0.95,
    ];
    let skus = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Sku { id: SkuId(i as u32), unit_size: 4, popularity_weight: w })
        .collect();
    let catalog = SkuCatalog::new(skus);
    let mut rng = SimRng::seed_from_u64(11);
    let n = 200_000;
    let mut counts = [0u64; 20];
    for _ in 0..n {
        counts[catalog.draw_sku(&mut rng).index()] += 1;
    }
    let total: f64 = weights.iter().sum();
    let chi2: f64 = weights
        .iter()
        .zip(counts)
        .map(|(w, o)| {
            let e = n as f64 * w / total;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    assert!(chi2 < 43.82, "chi2 = {chi2:.2}");
}

#[test]
fn zero_weight_is_never_drawn() {
    let skus = (0..3)
        .map(|i| Sku { id: SkuId(i), unit_size: 1, popularity_weight: if i == 1 { 0.0 } else { 1.0 } })
        .collect();
    let catalog = SkuCatalog::new(skus);
    let mut rng = SimRng::seed_from_u64(3);
    assert!((0..10_000).all(|_| catalog.draw_sku(&mut rng) != SkuId(1)));
}
