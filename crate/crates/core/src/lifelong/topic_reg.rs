//! Topic regularization against the topic pool:
//!
//! `sum_t lambda_t * ( ||Z^t - A^t Z_masked||^2 + ||U^t - P^t U||^2 )`
//!
//! `Z_masked` is the current W restricted to words that task `t` also saw,
//! laid out in task `t`'s column order; columns of words task `t` never saw
//! are left out of the first norm.

use std::ops::AddAssign;

use ndarray::Array2;

use super::TopicPoolEntry;
use crate::corpus::{align_vocabs, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ParamGrads, Regularizer};
use crate::scalar::Scalar;

/// Map from the current decoder (K×H) to a past decoder (K_t×H).
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderMap<T> {
    /// Frozen 0/1 selection: past row `k` copies current row `rows[k]`, or
    /// is zero when the past word has no current counterpart.
    Selection { rows: Vec<Option<usize>>, current_len: usize },
    /// Learnable dense K_t×K matrix.
    Dense(Array2<T>),
}

impl<T: Scalar> DecoderMap<T> {
    pub fn to_dense(&self) -> Array2<T> {
        match self {
            DecoderMap::Dense(p) => p.clone(),
            DecoderMap::Selection { rows, current_len } => {
                let mut p = Array2::zeros((rows.len(), *current_len));
                for (k, j) in rows.iter().enumerate() {
                    if let Some(j) = j {
                        p[[k, *j]] = T::one();
                    }
                }
                p
            }
        }
    }

    pub fn past_len(&self) -> usize {
        match self {
            DecoderMap::Dense(p) => p.nrows(),
            DecoderMap::Selection { rows, .. } => rows.len(),
        }
    }

    pub fn current_len(&self) -> usize {
        match self {
            DecoderMap::Dense(p) => p.ncols(),
            DecoderMap::Selection { current_len, .. } => *current_len,
        }
    }

    pub fn is_learnable(&self) -> bool {
        matches!(self, DecoderMap::Dense(_))
    }
}

/// Alignment parameters toward one past task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskAlignment<T> {
    pub task_id: String,
    pub lambda: T,
    /// H×H topic alignment.
    pub a: Array2<T>,
    pub p: DecoderMap<T>,
    pub learn_a: bool,
    /// `(past index, current index)` for every shared word.
    pub columns: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentParams<T> {
    pub tasks: Vec<TaskAlignment<T>>,
}

impl<T: Scalar> AlignmentParams<T> {
    /// A^t starts at the identity and P^t at the 0/1 selection matrix of the
    /// shared vocabulary. With `learn_p` the selection becomes a dense
    /// trainable matrix.
    pub fn init(
        pool: &[TopicPoolEntry<T>],
        current_vocab: &Vocabulary,
        lambdas: &[f64],
        hidden: usize,
        learn_a: bool,
        learn_p: bool,
    ) -> Result<Self> {
        if lambdas.len() != pool.len() {
            return Err(Error::Config(format!(
                "{} regularization strengths for {} topic-pool entries",
                lambdas.len(),
                pool.len()
            )));
        }
        let mut tasks = Vec::with_capacity(pool.len());
        for (entry, &lambda) in pool.iter().zip(lambdas) {
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(Error::Config(format!("lambda_tr = {lambda} for `{}`", entry.task_id())));
            }
            if entry.hidden_size() != hidden {
                return Err(Error::Config(format!(
                    "topic pool entry `{}` has H={} but the current model has H={hidden}",
                    entry.task_id(),
                    entry.hidden_size()
                )));
            }
            let alignment = align_vocabs(entry.vocab(), current_vocab);
            let rows: Vec<Option<usize>> = (0..entry.vocab().len()).map(|k| alignment.target_of(k)).collect();
            let selection = DecoderMap::Selection {
                rows,
                current_len: current_vocab.len(),
            };
            let p = if learn_p {
                DecoderMap::Dense(selection.to_dense())
            } else {
                selection
            };
            tasks.push(TaskAlignment {
                task_id: entry.task_id().to_string(),
                lambda: T::of(lambda),
                a: Array2::eye(hidden),
                p,
                learn_a,
                columns: alignment.pairs().to_vec(),
            });
        }
        Ok(AlignmentParams { tasks })
    }

    pub fn all_zero(&self) -> bool {
        self.tasks.iter().all(|t| t.lambda == T::zero())
    }
}

/// Penalty value and gradients with respect to every argument.
#[derive(Debug, Clone, PartialEq)]
pub struct TrGrads<T> {
    pub value: T,
    pub w: Array2<T>,
    pub u: Array2<T>,
    pub a: Vec<Array2<T>>,
    /// Present only for learnable decoder maps.
    pub p: Vec<Option<Array2<T>>>,
}

fn check_task<T: Scalar>(params: &ModelParams<T>, entry: &TopicPoolEntry<T>, t: &TaskAlignment<T>) -> Result<()> {
    let (h, k) = params.w.dim();
    let kt = entry.vocab().len();
    let bad = |what: String| Err(Error::Shape(format!("alignment for `{}`: {what}", t.task_id)));
    if t.task_id != entry.task_id() {
        return bad(format!("paired with pool entry `{}`", entry.task_id()));
    }
    if entry.hidden_size() != h {
        return bad(format!("pool entry has H={} but the model has H={h}", entry.hidden_size()));
    }
    if t.a.dim() != (h, h) {
        return bad(format!("A is {:?}, expected ({h}, {h})", t.a.dim()));
    }
    if t.p.past_len() != kt || t.p.current_len() != k {
        return bad(format!(
            "P is {}x{}, expected {kt}x{k}",
            t.p.past_len(),
            t.p.current_len()
        ));
    }
    if t.columns.iter().any(|&(pk, j)| pk >= kt || j >= k) {
        return bad("shared-word column out of range".into());
    }
    Ok(())
}

/// Add `scale * grad` of the penalty into the buffers and return its value.
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_tr<T: Scalar>(
    params: &ModelParams<T>,
    pool: &[TopicPoolEntry<T>],
    align: &AlignmentParams<T>,
    shift: Option<&Array2<T>>,
    scale: T,
    gw: &mut Array2<T>,
    gu: &mut Array2<T>,
    ga: &mut [Array2<T>],
    gp: &mut [Option<Array2<T>>],
) -> Result<T> {
    if pool.len() != align.tasks.len() {
        return Err(Error::Shape(format!(
            "{} alignments for {} topic-pool entries",
            align.tasks.len(),
            pool.len()
        )));
    }
    let two = T::of(2.0);
    let h = params.hidden_size();
    let mut total = T::zero();
    for (t, (entry, task)) in pool.iter().zip(&align.tasks).enumerate() {
        check_task(params, entry, task)?;
        if task.lambda == T::zero() {
            continue;
        }
        let coef = -two * task.lambda * scale;

        // topic imitation over shared columns
        let m = task.columns.len();
        if m > 0 {
            let mut x = Array2::<T>::zeros((h, m));
            let mut z = Array2::<T>::zeros((h, m));
            for (i, &(pk, j)) in task.columns.iter().enumerate() {
                x.column_mut(i).assign(&params.w.column(j));
                if let Some(sh) = shift {
                    x.column_mut(i).add_assign(&sh.row(j));
                }
                z.column_mut(i).assign(&entry.topics().column(pk));
            }
            let res = &z - &task.a.dot(&x);
            total += task.lambda * res.iter().map(|&r| r * r).sum::<T>();
            ga[t].scaled_add(coef, &res.dot(&x.t()));
            let gx = task.a.t().dot(&res);
            for (i, &(_, j)) in task.columns.iter().enumerate() {
                gw.column_mut(j).scaled_add(coef, &gx.column(i));
            }
        }

        // decoder proximity
        let past_u = entry.decoder();
        match &task.p {
            DecoderMap::Selection { rows, .. } => {
                let mut sq = T::zero();
                for (k, j) in rows.iter().enumerate() {
                    let mut r = past_u.row(k).to_owned();
                    if let Some(j) = *j {
                        r -= &params.u.row(j);
                        gu.row_mut(j).scaled_add(coef, &r);
                    }
                    sq += r.iter().map(|&v| v * v).sum::<T>();
                }
                total += task.lambda * sq;
            }
            DecoderMap::Dense(p) => {
                let res = past_u - &p.dot(&params.u);
                total += task.lambda * res.iter().map(|&r| r * r).sum::<T>();
                gu.scaled_add(coef, &p.t().dot(&res));
                if let Some(g) = gp[t].as_mut() {
                    g.scaled_add(coef, &res.dot(&params.u.t()));
                }
            }
        }
    }
    Ok(total)
}

/// Penalty value and gradients w.r.t. W, U, every A^t and every learnable P^t.
pub fn delta_tr<T: Scalar>(
    params: &ModelParams<T>,
    pool: &[TopicPoolEntry<T>],
    align: &AlignmentParams<T>,
) -> Result<TrGrads<T>> {
    let mut w = Array2::zeros(params.w.dim());
    let mut u = Array2::zeros(params.u.dim());
    let mut a: Vec<Array2<T>> = align.tasks.iter().map(|t| Array2::zeros(t.a.dim())).collect();
    let mut p: Vec<Option<Array2<T>>> = align
        .tasks
        .iter()
        .map(|t| match &t.p {
            DecoderMap::Dense(m) => Some(Array2::zeros(m.dim())),
            DecoderMap::Selection { .. } => None,
        })
        .collect();
    let value = accumulate_tr(params, pool, align, None, T::one(), &mut w, &mut u, &mut a, &mut p)?;
    Ok(TrGrads { value, w, u, a, p })
}

/// Topic regularizer attached to per-document SGD steps. Each step carries
/// `scale` (the reciprocal of the training-set size) of the full penalty.
/// With embedding injection the imitated topics are those of the effective
/// encoder `W + shift^T`.
pub(crate) struct TrRegularizer<'a, T> {
    pool: &'a [TopicPoolEntry<T>],
    shift: Option<&'a Array2<T>>,
    pub(crate) align: AlignmentParams<T>,
    pub(crate) best: AlignmentParams<T>,
    scale: T,
    ga: Vec<Array2<T>>,
    gp: Vec<Option<Array2<T>>>,
}

impl<'a, T: Scalar> TrRegularizer<'a, T> {
    pub(crate) fn new(
        pool: &'a [TopicPoolEntry<T>],
        align: AlignmentParams<T>,
        params: &ModelParams<T>,
        shift: Option<&'a Array2<T>>,
        n_train: usize,
    ) -> Result<Self> {
        if pool.len() != align.tasks.len() {
            return Err(Error::Shape("alignment/pool length mismatch".into()));
        }
        for (entry, task) in pool.iter().zip(&align.tasks) {
            check_task(params, entry, task)?;
        }
        let ga = align.tasks.iter().map(|t| Array2::zeros(t.a.dim())).collect();
        let gp = align
            .tasks
            .iter()
            .map(|t| match &t.p {
                DecoderMap::Dense(m) => Some(Array2::zeros(m.dim())),
                DecoderMap::Selection { .. } => None,
            })
            .collect();
        Ok(TrRegularizer {
            pool,
            shift,
            best: align.clone(),
            align,
            scale: T::one() / T::of(n_train.max(1) as f64),
            ga,
            gp,
        })
    }
}

impl<T: Scalar> Regularizer<T> for TrRegularizer<'_, T> {
    fn accumulate(&mut self, params: &ModelParams<T>, grads: &mut ParamGrads<T>) -> Result<()> {
        accumulate_tr(
            params,
            self.pool,
            &self.align,
            self.shift,
            self.scale,
            &mut grads.w,
            &mut grads.u,
            &mut self.ga,
            &mut self.gp,
        )
        .map(|_| ())
    }

    fn step(&mut self, lr: T) {
        for (t, task) in self.align.tasks.iter_mut().enumerate() {
            if task.learn_a {
                task.a.scaled_add(-lr, &self.ga[t]);
            }
            if let (DecoderMap::Dense(p), Some(g)) = (&mut task.p, self.gp[t].as_ref()) {
                p.scaled_add(-lr, g);
            }
            self.ga[t].fill(T::zero());
            if let Some(g) = self.gp[t].as_mut() {
                g.fill(T::zero());
            }
        }
    }

    fn value(&self, params: &ModelParams<T>) -> f64 {
        let value = match self.shift {
            Some(sh) => {
                let mut eff = params.clone();
                eff.w += &sh.t();
                delta_tr_value(&eff, self.pool, &self.align)
            }
            None => delta_tr_value(params, self.pool, &self.align),
        };
        value.map(|v| v.wide()).unwrap_or(f64::NAN)
    }

    fn mark_best(&mut self) {
        self.best = self.align.clone();
    }
}

/// Value only, without gradient buffers.
pub(crate) fn delta_tr_value<T: Scalar>(
    params: &ModelParams<T>,
    pool: &[TopicPoolEntry<T>],
    align: &AlignmentParams<T>,
) -> Result<T> {
    let mut total = T::zero();
    for (entry, task) in pool.iter().zip(&align.tasks) {
        check_task(params, entry, task)?;
        if task.lambda == T::zero() {
            continue;
        }
        let mut sq = T::zero();
        for &(pk, j) in &task.columns {
            let ax = task.a.dot(&params.w.column(j));
            sq += entry
                .topics()
                .column(pk)
                .iter()
                .zip(&ax)
                .map(|(&z, &y)| (z - y) * (z - y))
                .sum::<T>();
        }
        let pu = match &task.p {
            DecoderMap::Dense(p) => p.dot(&params.u),
            DecoderMap::Selection { rows, .. } => {
                let mut pu = Array2::zeros(entry.decoder().dim());
                for (k, j) in rows.iter().enumerate() {
                    if let Some(j) = *j {
                        pu.row_mut(k).assign(&params.u.row(j));
                    }
                }
                pu
            }
        };
        sq += (entry.decoder() - &pu).iter().map(|&r| r * r).sum::<T>();
        total += task.lambda * sq;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifelong::{accumulate_knowledge, KnowledgeBase};
    use crate::scalar::Activation;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn setup(learn_p: bool) -> (KnowledgeBase<f64>, Vocabulary, ModelParams<f64>, AlignmentParams<f64>) {
        let past_vocab = vocab(&["a", "b", "c", "d"]);
        let cur_vocab = vocab(&["c", "e", "a", "f", "b"]);
        let past = ModelParams::<f64>::init(3, 4, Activation::Sigmoid, 10);
        let kb = accumulate_knowledge(&past, &past_vocab, "p", KnowledgeBase::new()).unwrap();
        let cur = ModelParams::<f64>::init(3, 5, Activation::Sigmoid, 11);
        let mut align = AlignmentParams::init(kb.topic_pool(), &cur_vocab, &[0.7], 3, true, learn_p).unwrap();
        // move A away from identity so its gradient is exercised generally
        align.tasks[0].a[[0, 1]] = 0.3;
        align.tasks[0].a[[2, 0]] = -0.2;
        (kb, cur_vocab, cur, align)
    }

    // Independent value: build the masked matrices by token lookup.
    fn oracle(kb: &KnowledgeBase<f64>, cur_vocab: &Vocabulary, cur: &ModelParams<f64>, align: &AlignmentParams<f64>) -> f64 {
        let entry = &kb.topic_pool()[0];
        let task = &align.tasks[0];
        let mut total = 0.0;
        for (k, tok) in entry.vocab().tokens().iter().enumerate() {
            if let Some(j) = cur_vocab.index_of(tok) {
                for r in 0..3 {
                    let mut ax = 0.0;
                    for c in 0..3 {
                        ax += task.a[[r, c]] * cur.w[[c, j]];
                    }
                    total += (entry.topics()[[r, k]] - ax).powi(2);
                }
            }
        }
        let p = task.p.to_dense();
        for k in 0..entry.vocab().len() {
            for c in 0..3 {
                let mut pu = 0.0;
                for j in 0..cur_vocab.len() {
                    pu += p[[k, j]] * cur.u[[j, c]];
                }
                total += (entry.decoder()[[k, c]] - pu).powi(2);
            }
        }
        task.lambda * total
    }

    #[test]
    fn value_matches_token_level_oracle() {
        for learn_p in [false, true] {
            let (kb, v, cur, align) = setup(learn_p);
            let g = delta_tr(&cur, kb.topic_pool(), &align).unwrap();
            let want = oracle(&kb, &v, &cur, &align);
            assert!((g.value - want).abs() < 1e-12 * want.max(1.0));
            let value_only = delta_tr_value(&cur, kb.topic_pool(), &align).unwrap();
            assert!((value_only - want).abs() < 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn perfect_imitation_has_zero_penalty() {
        let v = vocab(&["a", "b", "c"]);
        let p = ModelParams::<f64>::init(2, 3, Activation::Tanh, 3);
        let kb = accumulate_knowledge(&p, &v, "t", KnowledgeBase::new()).unwrap();
        let align = AlignmentParams::init(kb.topic_pool(), &v, &[1.0], 2, true, false).unwrap();
        let g = delta_tr(&p, kb.topic_pool(), &align).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.w.iter().chain(g.u.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn zero_strength_gives_zero_value_and_gradients() {
        let (kb, v, cur, _) = setup(false);
        let align = AlignmentParams::init(kb.topic_pool(), &v, &[0.0], 3, true, false).unwrap();
        let g = delta_tr(&cur, kb.topic_pool(), &align).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.w.iter().chain(g.u.iter()).chain(g.a[0].iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn gradients_match_central_differences() {
        let eps = 1e-6;
        for learn_p in [false, true] {
            let (kb, v, cur, align) = setup(learn_p);
            let pool = kb.topic_pool();
            let g = delta_tr(&cur, pool, &align).unwrap();
            let f = |p: &ModelParams<f64>, a: &AlignmentParams<f64>| oracle(&kb, &v, p, a);
            let check = |analytic: f64, plus: f64, minus: f64| {
                let numeric = (plus - minus) / (2.0 * eps);
                let denom = analytic.abs().max(numeric.abs()).max(1e-8);
                assert!((analytic - numeric).abs() / denom < 1e-5, "{analytic} vs {numeric}");
            };
            for idx in [[0, 0], [1, 2], [2, 4], [0, 3]] {
                let (mut p, mut m) = (cur.clone(), cur.clone());
                p.w[idx] += eps;
                m.w[idx] -= eps;
                check(g.w[idx], f(&p, &align), f(&m, &align));
            }
            for idx in [[0, 0], [4, 2], [3, 1]] {
                let (mut p, mut m) = (cur.clone(), cur.clone());
                p.u[idx] += eps;
                m.u[idx] -= eps;
                check(g.u[idx], f(&p, &align), f(&m, &align));
            }
            for idx in [[0, 1], [2, 2], [1, 0]] {
                let (mut p, mut m) = (align.clone(), align.clone());
                p.tasks[0].a[idx] += eps;
                m.tasks[0].a[idx] -= eps;
                check(g.a[0][idx], f(&cur, &p), f(&cur, &m));
            }
            if learn_p {
                let gp = g.p[0].as_ref().unwrap();
                for idx in [[0, 2], [1, 1], [3, 3]] {
                    let (mut p, mut m) = (align.clone(), align.clone());
                    if let DecoderMap::Dense(x) = &mut p.tasks[0].p {
                        x[idx] += eps;
                    }
                    if let DecoderMap::Dense(x) = &mut m.tasks[0].p {
                        x[idx] -= eps;
                    }
                    check(gp[idx], f(&cur, &p), f(&cur, &m));
                }
            } else {
                assert!(g.p[0].is_none());
            }
        }
    }

    #[test]
    fn hidden_size_mismatch_is_a_config_error() {
        let v = vocab(&["a", "b"]);
        let p = ModelParams::<f64>::init(2, 2, Activation::Sigmoid, 1);
        let kb = accumulate_knowledge(&p, &v, "t", KnowledgeBase::new()).unwrap();
        assert!(matches!(
            AlignmentParams::<f64>::init(kb.topic_pool(), &v, &[1.0], 3, true, false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn disjoint_vocabulary_keeps_only_decoder_term() {
        let past = ModelParams::<f64>::init(2, 2, Activation::Sigmoid, 1);
        let kb = accumulate_knowledge(&past, &vocab(&["a", "b"]), "t", KnowledgeBase::new()).unwrap();
        let cur = ModelParams::<f64>::init(2, 3, Activation::Sigmoid, 2);
        let align = AlignmentParams::init(kb.topic_pool(), &vocab(&["x", "y", "z"]), &[2.0], 2, true, false).unwrap();
        let g = delta_tr(&cur, kb.topic_pool(), &align).unwrap();
        let want = 2.0 * past.u.iter().map(|x| x * x).sum::<f64>();
        assert!((g.value - want).abs() < 1e-12);
        assert!(g.w.iter().all(|&x| x == 0.0));
    }
}
