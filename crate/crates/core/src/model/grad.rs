use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Axis};

use super::forward::log_sum_exp;
use super::{ModelParams, ParamGrads};
use crate::error::Result;
use crate::lifelong::EmbTfContext;
use crate::scalar::Scalar;

/// Loss `-log p(v)` and its gradient with respect to W, U, b and c.
pub fn gradients<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
) -> Result<(T, ParamGrads<T>)> {
    let mut grads = ParamGrads::zeros_like(params);
    let loss = accumulate_gradients(words, params, emb, T::one(), &mut grads)?;
    Ok((loss, grads))
}

/// Add `scale * dL/dθ` into `grads` and return the unscaled loss.
///
/// Backpropagation runs through the softmax at every position, then through
/// the activation, and finally distributes each pre-activation delta to the
/// bias `c` and to the W columns of all earlier words.
pub fn accumulate_gradients<T: Scalar>(
    words: &[usize],
    params: &ModelParams<T>,
    emb: Option<&EmbTfContext<T>>,
    scale: T,
    grads: &mut ParamGrads<T>,
) -> Result<T> {
    params.check_doc(words)?;
    if let Some(ctx) = emb {
        ctx.check_compatible(params)?;
    }
    let act = params.activation;
    let mut a = params.c.clone();
    let mut loss = T::zero();
    let mut pre_deltas: Vec<Array1<T>> = Vec::with_capacity(words.len());

    for &v in words {
        let h = params.activate(&a);
        let z = params.logits(h.view());
        let lse = log_sum_exp(z.view());
        loss += lse - z[v];

        // d loss / d logits = softmax - onehot
        let mut dz = z.mapv(|x| (x - lse).exp());
        dz[v] -= T::one();

        grads.b.scaled_add(scale, &dz);
        general_mat_mul(
            scale,
            &dz.view().insert_axis(Axis(1)),
            &h.view().insert_axis(Axis(0)),
            T::one(),
            &mut grads.u,
        );
        let dh = params.u.t().dot(&dz);
        let da = ndarray::Zip::from(&dh)
            .and(&h)
            .map_collect(|&g, &y| g * act.derivative_from_output(y));
        pre_deltas.push(da);

        params.advance(&mut a, v, emb);
    }

    // W[:, v_q] feeds every position after q; c feeds all positions.
    let mut suffix = Array1::<T>::zeros(params.hidden_size());
    for (q, &v) in words.iter().enumerate().rev() {
        grads.w.column_mut(v).scaled_add(scale, &suffix);
        suffix += &pre_deltas[q];
    }
    grads.c.scaled_add(scale, &suffix);
    Ok(loss)
}
