use super::{Gradients, ParamStore};
use crate::{Error, Result, Scalar};

/// Bias-corrected Adam over the trainable entries of a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        let zeros = |id| vec![T::zero(); if store.is_trainable(id) { store.get(id).len() } else { 0 }];
        Adam {
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            step: 0,
            first: store.ids().map(zeros).collect(),
            second: store.ids().map(zeros).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update. Parameters without a gradient are treated as
    /// having a zero gradient. A non-finite gradient aborts before any
    /// parameter changes.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>, lr: T) -> Result<()> {
        for id in store.ids() {
            if let Some(g) = grads.param(id) {
                if g.len() != store.get(id).len() {
                    return Err(Error::arg(format!("gradient shape mismatch for {}", store.name(id))));
                }
                if store.is_trainable(id) && !g.is_finite() {
                    return Err(Error::NonFinite(format!("gradient of {}", store.name(id))));
                }
            }
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        for id in store.ids() {
            if !store.is_trainable(id) {
                continue;
            }
            let i = id.index();
            let g = grads.param(id).map(|g| g.data());
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (j, p) in store.get_mut(id).data_mut().iter_mut().enumerate() {
                let gj = g.map_or(T::zero(), |g| g[j]);
                m[j] = self.beta1 * m[j] + (T::one() - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (T::one() - self.beta2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Tape, Tensor};

    fn quadratic_grads(store: &ParamStore<f64>) -> Gradients<f64> {
        let id = store.ids().next().unwrap();
        let mut tape = Tape::new();
        let w = tape.param(store, id).unwrap();
        let sq = tape.mul(w, w).unwrap();
        let f = tape.sum(sq).unwrap();
        tape.backward(f).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::vector(vec![0.0, 0.0]), true);
        let mut adam = Adam::new(&store);
        let grads = quadratic_grads(&store);
        adam.step(&mut store, &grads, 0.1).unwrap();
        assert_eq!(store.get(id).data(), &[0.0, 0.0]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::vector(vec![0.7, -2.0, 3.0]), true);
        let mut adam = Adam::new(&store);
        let grads = quadratic_grads(&store);
        adam.step(&mut store, &grads, 0.01).unwrap();
        // m_hat = g and v_hat = g^2 after one step, so the update is
        // lr * g / (|g| + eps).
        for (&after, before) in store.get(id).data().iter().zip([0.7f64, -2.0, 3.0]) {
            let g = 2.0 * before;
            let want = before - 0.01 * g / (g.abs() + 1e-8);
            assert!((after - want).abs() < 1e-15);
            assert!(((before - after).abs() - 0.01).abs() < 1e-8);
        }
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::vector(vec![0.6, -0.8]), true);
        let mut adam = Adam::new(&store);
        for _ in 0..500 {
            let grads = quadratic_grads(&store);
            adam.step(&mut store, &grads, 0.01).unwrap();
        }
        let norm = store.get(id).data().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "norm {norm}");
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut store = ParamStore::new();
        let id = store.add("enc.weight", Tensor::vector(vec![1.0, 2.0]), true);
        let mut adam = Adam::new(&store);
        let grads = Gradients::from_params(vec![Some(Tensor::vector(vec![0.5, f64::INFINITY]))]);
        match adam.step(&mut store, &grads, 0.1) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("enc.weight")),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        assert_eq!(store.get(id).data(), &[1.0, 2.0]);
        assert_eq!(adam.steps(), 0);
    }

    #[test]
    fn buffers_are_not_updated() {
        let mut store = ParamStore::new();
        let w = store.add("w", Tensor::vector(vec![1.0]), true);
        let buf = store.add("running", Tensor::vector(vec![5.0]), false);
        let mut adam = Adam::new(&store);
        let mut tape = Tape::new();
        let a = tape.param(&store, w).unwrap();
        let b = tape.param(&store, buf).unwrap();
        let p = tape.mul(a, b).unwrap();
        let f = tape.sum(p).unwrap();
        let grads = tape.backward(f).unwrap();
        adam.step(&mut store, &grads, 0.1).unwrap();
        assert_eq!(store.get(buf).data(), &[5.0]);
        assert!(store.get(w).data()[0] < 1.0);
    }
}
