use modernzh_core::encoder::{loss_and_grad, mlm_loss, forward_weights, EncoderConfig, EncoderWeights, PackedBatch};

fn batch() -> (PackedBatch, Vec<Option<u32>>) {
    let batch = PackedBatch::from_sequences(&[vec![2u32, 5, 7, 9, 6, 3], vec![2, 10, 4, 3]]).unwrap();
    let labels = vec![None, Some(8), None, Some(1), Some(6), None, None, Some(0), Some(5), None];
    (batch, labels)
}

fn loss_of(w: &EncoderWeights<f64>, cfg: &EncoderConfig, b: &PackedBatch, labels: &[Option<u32>]) -> f64 {
    mlm_loss(&forward_weights(w, cfg, b).unwrap().logits, labels).unwrap().loss
}

/// Per-tensor relative error between analytic and central-difference
/// gradients.
fn check(cfg: &EncoderConfig, seed: u64) -> Vec<(String, f64)> {
    let (b, labels) = batch();
    let w = EncoderWeights::<f64>::init(cfg, seed);
    let (_, grads) = loss_and_grad(&w, cfg, &b, &labels).unwrap();
    let h = 1e-5;
    let names: Vec<String> = w.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
    let mut out = Vec::new();
    for (ti, name) in names.iter().enumerate() {
        let len = analytic[ti].len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..len {
            let mut plus = w.clone();
            plus.tensors_mut()[ti].1[i] += h;
            let mut minus = w.clone();
            minus.tensors_mut()[ti].1[i] -= h;
            let fd = (loss_of(&plus, cfg, &b, &labels) - loss_of(&minus, cfg, &b, &labels)) / (2.0 * h);
            num += (fd - analytic[ti][i]).powi(2);
            den += fd.powi(2);
        }
        out.push((name.clone(), num.sqrt() / den.sqrt().max(1e-12)));
    }
    out
}

#[test]
fn tied_toy_gradients_match_finite_differences() {
    for (name, rel) in check(&EncoderConfig::toy(), 3) {
        assert!(rel < 1e-4, "{name}: relative error {rel:e}");
    }
}

#[test]
fn untied_gradients_match_finite_differences() {
    let cfg = EncoderConfig {
        tie_embeddings: false,
        layers: 3,
        local_window_radius: 1,
        ..EncoderConfig::toy()
    };
    let errs = check(&cfg, 11);
    assert!(errs.iter().any(|(n, _)| n == "head.decoder"));
    for (name, rel) in errs {
        assert!(rel < 1e-4, "{name}: relative error {rel:e}");
    }
}
