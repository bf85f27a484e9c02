use radarsim_core::evalkit::Class;
use radarsim_core::objectives::*;
use radarsim_core::rng;

const TOL: f64 = 1e-6;

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= TOL, "{a} vs {b}");
}

#[test]
fn lsgan_values() {
    close(lsgan_discriminator_loss(&[1.0f64; 4], &[0.0; 4]).unwrap(), 0.0);
    close(lsgan_discriminator_loss(&[0.5f64], &[0.5]).unwrap(), 0.5);
    close(lsgan_discriminator_loss(&[0.0f64; 3], &[1.0; 5]).unwrap(), 2.0);
    close(lsgan_generator_loss(&[1.0f64; 6]).unwrap(), 0.0);
    close(lsgan_generator_loss(&[0.0f64; 6]).unwrap(), 1.0);
    close(lsgan_generator_loss(&[0.2f64, 0.6]).unwrap(), 0.4);
    assert!(lsgan_generator_loss::<f64>(&[]).is_err());
    assert!(lsgan_discriminator_loss::<f64>(&[1.0], &[]).is_err());
}

#[test]
fn l1_family_values() {
    let a = [0.3f64, -0.7, 0.1, 0.9];
    close(cycle_consistency_loss(&a, &a).unwrap(), 0.0);
    let shifted: Vec<f64> = a.iter().map(|v| v + 0.3).collect();
    close(cycle_consistency_loss(&a, &shifted).unwrap(), 0.3);
    close(cycle_consistency_loss(&[0.0f64; 4], &[0.1, -0.1, 0.2, 0.0]).unwrap(), 0.1);
    assert!(cycle_consistency_loss(&[0.0f64; 4], &[0.0; 3]).is_err());

    close(paired_regression_loss(&a, &a).unwrap(), 0.0);
    let gap: Vec<f64> = a.iter().map(|v| v - 0.5).collect();
    close(paired_regression_loss(&a, &gap).unwrap(), 0.5);

    let y = [0.0f64, 0.0, 0.0, 0.0];
    close(masked_alignment_loss(&a, &y, &[false; 4]).unwrap(), 0.0);
    close(
        masked_alignment_loss(&a, &y, &[true; 4]).unwrap(),
        cycle_consistency_loss(&a, &y).unwrap(),
    );
    close(masked_alignment_loss(&[0.2f64, 5.0, -0.4, 7.0], &y, &[true, false, true, false]).unwrap(), 0.3);
}

#[test]
fn paired_regression_matches_cell_sum() {
    let mut r = rng::rng(11);
    let a: Vec<f64> = (0..37).map(|_| rng::normal(&mut r)).collect();
    let b: Vec<f64> = (0..37).map(|_| rng::normal(&mut r)).collect();
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += (a[i] - b[i]).abs();
    }
    close(paired_regression_loss(&a, &b).unwrap(), sum / a.len() as f64);
}

#[test]
fn cross_entropy_values() {
    let n = 5;
    let uniform = vec![0.0f64; 3 * n];
    let free = vec![Class::Free; n];
    close(weighted_cross_entropy(&uniform, &free, &[1.0; 3]).unwrap(), 3f64.ln());
    close(weighted_cross_entropy(&uniform[..3], &[Class::Occupied], &DEFAULT_CLASS_WEIGHTS).unwrap(), 50.0 * 3f64.ln());

    let mut confident = vec![0.0f64; 3 * n];
    confident[..n].fill(1e3);
    assert!(weighted_cross_entropy(&confident, &free, &DEFAULT_CLASS_WEIGHTS).unwrap() < 1e-12);
}

#[test]
fn combined_total_follows_the_weights() {
    let w = LossWeights::default();
    let ones = LossParts {
        a_x: None,
        a_w: Some(1.0),
        g_x: Some(1.0),
        g_w: Some(1.0),
        c_x: Some(1.0),
        c_w: Some(1.0),
    };
    let active = [Term::Gx, Term::Gw, Term::Cx, Term::Cw, Term::Aw];
    close(combined_generator_objective(&ones, &w, &active).unwrap().total, 32.0);
    let zeros = LossParts {
        a_x: Some(0.0),
        a_w: Some(0.0),
        g_x: Some(0.0),
        g_w: Some(0.0),
        c_x: Some(0.0),
        c_w: Some(0.0),
    };
    close(combined_generator_objective(&zeros, &w, &Term::ALL).unwrap().total, 0.0);
    assert!(combined_generator_objective(&ones, &w, &[Term::Ax]).is_err());
}

fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], analytic: &[f64]) {
    let h = 1e-6;
    for i in 0..x.len() {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += h;
        m[i] -= h;
        let num = (f(&p) - f(&m)) / (2.0 * h);
        let err = (num - analytic[i]).abs() / num.abs().max(analytic[i].abs()).max(1e-8);
        assert!(err < 1e-3 || (num - analytic[i]).abs() < 1e-9, "cell {i}: {num} vs {}", analytic[i]);
    }
}

#[test]
fn gradients_agree_with_central_differences() {
    let mut r = rng::rng(5);
    for _ in 0..5 {
        let n = rng::int_range(&mut r, 2, 9);
        let v = |r: &mut rng::Rng| (0..n).map(|_| rng::uniform_range(r, -1.5, 1.5)).collect::<Vec<f64>>();
        let (a, b) = (v(&mut r), v(&mut r));
        let mask: Vec<bool> = (0..n).map(|i| i % 2 == 0 || rng::uniform(&mut r) < 0.5).collect();

        let (_, gr, gf) = lsgan_discriminator_grad(&a, &b).unwrap();
        fd(&|x| lsgan_discriminator_loss(x, &b).unwrap(), &a, &gr);
        fd(&|x| lsgan_discriminator_loss(&a, x).unwrap(), &b, &gf);
        fd(&|x| lsgan_generator_loss(x).unwrap(), &a, &lsgan_generator_grad(&a).unwrap().1);
        fd(&|x| cycle_consistency_loss(&a, x).unwrap(), &b, &cycle_consistency_grad(&a, &b).unwrap().1);
        fd(&|x| paired_regression_loss(x, &b).unwrap(), &a, &paired_regression_grad(&a, &b).unwrap().1);
        fd(&|x| masked_alignment_loss(x, &b, &mask).unwrap(), &a, &masked_alignment_grad(&a, &b, &mask).unwrap().1);

        let logits: Vec<f64> = (0..3 * n).map(|_| rng::uniform_range(&mut r, -2.0, 2.0)).collect();
        let labels: Vec<Class> = (0..n).map(|_| Class::from_index(rng::int_range(&mut r, 0, 2))).collect();
        let g = weighted_cross_entropy_grad(&logits, &labels, &DEFAULT_CLASS_WEIGHTS).unwrap().1;
        fd(&|x| weighted_cross_entropy(x, &labels, &DEFAULT_CLASS_WEIGHTS).unwrap(), &logits, &g);
    }
}
