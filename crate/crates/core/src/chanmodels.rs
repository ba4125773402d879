//! Channel models, channel draws and second-order channel statistics.
//!
//! All rate, bound and gradient computations in this crate depend on a channel
//! realization `H` only through its Gram matrix `H^H H` (push-through and Sylvester
//! determinant identities), so draws are stored as a [`GramEnsemble`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c, gram_inner, ComplexMatrix, HermitianPsd};

/// Random-channel generator for one receiver.
#[derive(Debug, Clone)]
pub enum ChannelModel {
    /// `H = R_r^{1/2} H_w R_t^{1/2}`.
    Kronecker { rx_corr: HermitianPsd, tx_corr: HermitianPsd },
    /// `H = sqrt(K/(K+1)) Hbar + sqrt(1/(K+1)) R_r^{1/2} H_w R_t^{1/2}`.
    Rician {
        los: ComplexMatrix,
        k_factor: f64,
        rx_corr: HermitianPsd,
        tx_corr: HermitianPsd,
    },
    /// Discrete distribution over channel matrices. Used for exact expectations.
    FiniteSupport { atoms: Vec<(ComplexMatrix, f64)> },
}

impl ChannelModel {
    pub fn kronecker(rx_corr: HermitianPsd, tx_corr: HermitianPsd) -> Self {
        ChannelModel::Kronecker { rx_corr, tx_corr }
    }

    /// White `n_r x n_t` Rayleigh channel.
    pub fn iid(n_r: usize, n_t: usize) -> Self {
        Self::kronecker(HermitianPsd::identity(n_r), HermitianPsd::identity(n_t))
    }

    pub fn rician(los: ComplexMatrix, k_factor: f64, rx_corr: HermitianPsd, tx_corr: HermitianPsd) -> Result<Self> {
        if !(k_factor >= 0.0) || !k_factor.is_finite() {
            return Err(Error::Validation(format!("Rician K-factor must be finite and >= 0, got {k_factor}")));
        }
        if !linalg::is_finite(&los) {
            return Err(Error::Validation("line-of-sight matrix has non-finite entries".into()));
        }
        if los.nrows() != rx_corr.dim() || los.ncols() != tx_corr.dim() {
            return Err(Error::Validation(format!(
                "line-of-sight matrix is {}x{} but correlations are {}x{} / {}x{}",
                los.nrows(),
                los.ncols(),
                rx_corr.dim(),
                rx_corr.dim(),
                tx_corr.dim(),
                tx_corr.dim()
            )));
        }
        Ok(ChannelModel::Rician {
            los,
            k_factor,
            rx_corr,
            tx_corr,
        })
    }

    pub fn finite_support(atoms: Vec<(ComplexMatrix, f64)>) -> Result<Self> {
        let (first, _) = atoms
            .first()
            .ok_or_else(|| Error::Validation("finite-support model needs at least one atom".into()))?;
        let shape = first.shape();
        let mut total = 0.0;
        for (i, (h, p)) in atoms.iter().enumerate() {
            if h.shape() != shape {
                return Err(Error::Validation(format!("atom {i} has shape {:?}, expected {shape:?}", h.shape())));
            }
            if !linalg::is_finite(h) {
                return Err(Error::Validation(format!("atom {i} has non-finite entries")));
            }
            if !(*p > 0.0) {
                return Err(Error::Validation(format!("atom {i} has non-positive probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("atom probabilities sum to {total}, expected 1")));
        }
        Ok(ChannelModel::FiniteSupport { atoms })
    }

    /// Deterministic channel: a single atom.
    pub fn deterministic(h: ComplexMatrix) -> Self {
        ChannelModel::FiniteSupport { atoms: vec![(h, 1.0)] }
    }

    /// `(n_r, n_t)`
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ChannelModel::Kronecker { rx_corr, tx_corr } | ChannelModel::Rician { rx_corr, tx_corr, .. } => {
                (rx_corr.dim(), tx_corr.dim())
            }
            ChannelModel::FiniteSupport { atoms } => atoms[0].0.shape(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ChannelModel::FiniteSupport { .. })
    }

    /// Average channel energy `E[tr(H H^H)]`.
    pub fn mean_energy(&self) -> f64 {
        self.second_order_stat().trace()
    }

    /// Checks the energy normalization `tr(R_r) tr(R_t) = N_r N_t` (and
    /// `tr(Hbar Hbar^H) = N_r N_t` for Rician models) to relative tolerance `tol`.
    /// Finite-support models are not required to be normalized.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let (n_r, n_t) = self.dims();
        let target = (n_r * n_t) as f64;
        let check = |what: &str, value: f64| {
            if (value - target).abs() > tol * target {
                Err(Error::Validation(format!("{what} = {value:.6}, expected N_r*N_t = {target}")))
            } else {
                Ok(())
            }
        };
        match self {
            ChannelModel::Kronecker { rx_corr, tx_corr } => check("tr(R_r)*tr(R_t)", rx_corr.trace() * tx_corr.trace()),
            ChannelModel::Rician {
                los, rx_corr, tx_corr, ..
            } => {
                check("tr(R_r)*tr(R_t)", rx_corr.trace() * tx_corr.trace())?;
                check("tr(Hbar Hbar^H)", linalg::frob2(los))
            }
            ChannelModel::FiniteSupport { .. } => Ok(()),
        }
    }

    /// Rescales correlation matrices (and the line-of-sight matrix) so that the model
    /// satisfies the energy normalization. Finite-support models are returned unchanged.
    pub fn normalized(&self) -> Result<Self> {
        let (n_r, n_t) = self.dims();
        let fix = |m: &HermitianPsd, n: usize| -> Result<HermitianPsd> {
            let t = m.trace();
            if !(t > 0.0) {
                return Err(Error::Validation("cannot normalize a zero correlation matrix".into()));
            }
            Ok(m.scaled(n as f64 / t))
        };
        Ok(match self {
            ChannelModel::Kronecker { rx_corr, tx_corr } => ChannelModel::Kronecker {
                rx_corr: fix(rx_corr, n_r)?,
                tx_corr: fix(tx_corr, n_t)?,
            },
            ChannelModel::Rician {
                los,
                k_factor,
                rx_corr,
                tx_corr,
            } => {
                let e = linalg::frob2(los);
                if !(e > 0.0) {
                    return Err(Error::Validation("cannot normalize a zero line-of-sight matrix".into()));
                }
                ChannelModel::Rician {
                    los: los * c(((n_r * n_t) as f64 / e).sqrt(), 0.0),
                    k_factor: *k_factor,
                    rx_corr: fix(rx_corr, n_r)?,
                    tx_corr: fix(tx_corr, n_t)?,
                }
            }
            ChannelModel::FiniteSupport { .. } => self.clone(),
        })
    }

    /// Closed-form `E[H^H H]`.
    pub fn second_order_stat(&self) -> HermitianPsd {
        let m = match self {
            ChannelModel::Kronecker { rx_corr, tx_corr } => tx_corr.matrix() * c(rx_corr.trace(), 0.0),
            ChannelModel::Rician {
                los,
                k_factor,
                rx_corr,
                tx_corr,
            } => {
                let k = *k_factor;
                gram_inner(los) * c(k / (k + 1.0), 0.0) + tx_corr.matrix() * c(rx_corr.trace() / (k + 1.0), 0.0)
            }
            ChannelModel::FiniteSupport { atoms } => {
                let n_t = atoms[0].0.ncols();
                atoms
                    .iter()
                    .fold(linalg::zeros(n_t), |acc, (h, p)| acc + gram_inner(h) * c(*p, 0.0))
            }
        };
        HermitianPsd::symmetrized(m).expect("a sum of Gram matrices is PSD")
    }

    pub fn sampler(&self) -> ChannelSampler {
        match self {
            ChannelModel::Kronecker { rx_corr, tx_corr } => ChannelSampler::Scattered {
                los: None,
                scatter_gain: 1.0,
                rx_sqrt: rx_corr.sqrt(),
                tx_sqrt: tx_corr.sqrt(),
            },
            ChannelModel::Rician {
                los,
                k_factor,
                rx_corr,
                tx_corr,
            } => {
                let k = *k_factor;
                ChannelSampler::Scattered {
                    los: Some(los * c((k / (k + 1.0)).sqrt(), 0.0)),
                    scatter_gain: (1.0 / (k + 1.0)).sqrt(),
                    rx_sqrt: rx_corr.sqrt(),
                    tx_sqrt: tx_corr.sqrt(),
                }
            }
            ChannelModel::FiniteSupport { atoms } => {
                let mut acc = 0.0;
                let cumulative = atoms
                    .iter()
                    .map(|(_, p)| {
                        acc += p;
                        acc
                    })
                    .collect();
                ChannelSampler::Discrete {
                    atoms: atoms.iter().map(|(h, _)| h.clone()).collect(),
                    cumulative,
                }
            }
        }
    }
}

/// A model with its matrix square roots precomputed.
#[derive(Debug, Clone)]
pub enum ChannelSampler {
    Scattered {
        los: Option<ComplexMatrix>,
        scatter_gain: f64,
        rx_sqrt: ComplexMatrix,
        tx_sqrt: ComplexMatrix,
    },
    Discrete {
        atoms: Vec<ComplexMatrix>,
        cumulative: Vec<f64>,
    },
}

impl ChannelSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        match self {
            ChannelSampler::Scattered {
                los,
                scatter_gain,
                rx_sqrt,
                tx_sqrt,
            } => {
                let white = white_gaussian(rx_sqrt.nrows(), tx_sqrt.nrows(), rng);
                let scattered = rx_sqrt * white * tx_sqrt * c(*scatter_gain, 0.0);
                match los {
                    Some(l) => l + scattered,
                    None => scattered,
                }
            }
            ChannelSampler::Discrete { atoms, cumulative } => {
                let u: f64 = rng.random();
                let idx = cumulative.iter().position(|&cp| u < cp).unwrap_or(atoms.len() - 1);
                atoms[idx].clone()
            }
        }
    }
}

/// Matrix of i.i.d. standard circularly-symmetric complex Gaussian entries.
pub fn white_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// One channel draw.
pub fn sample_channel<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> ComplexMatrix {
    model.sampler().draw(rng)
}

/// Seeded stream for user `user`. Streams for different users are independent.
pub fn user_rng(seed: u64, user: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user as u64 + 1);
    rng
}

/// Channel distribution seen through Gram matrices `K = H^H H`: either an equally
/// weighted Monte-Carlo sample or an exact probability-weighted support.
#[derive(Debug, Clone)]
pub struct GramEnsemble {
    grams: Vec<ComplexMatrix>,
    probs: Option<Vec<f64>>,
}

impl GramEnsemble {
    /// Equally weighted sample from channel realizations.
    pub fn from_channels(channels: &[ComplexMatrix]) -> Self {
        GramEnsemble {
            grams: channels.iter().map(gram_inner).collect(),
            probs: None,
        }
    }

    pub fn from_grams(grams: Vec<ComplexMatrix>) -> Self {
        GramEnsemble { grams, probs: None }
    }

    /// Degenerate distribution concentrated on one Gram matrix.
    pub fn point_mass(gram: ComplexMatrix) -> Self {
        GramEnsemble {
            grams: vec![gram],
            probs: Some(vec![1.0]),
        }
    }

    /// Exact ensemble of a finite-support model.
    pub fn exact(model: &ChannelModel) -> Result<Self> {
        match model {
            ChannelModel::FiniteSupport { atoms } => Ok(GramEnsemble {
                grams: atoms.iter().map(|(h, _)| gram_inner(h)).collect(),
                probs: Some(atoms.iter().map(|(_, p)| *p).collect()),
            }),
            _ => Err(Error::Precondition("exact ensembles exist only for finite-support models".into())),
        }
    }

    /// `n` Monte-Carlo draws, or the exact support for finite-support models.
    pub fn draw<R: Rng + ?Sized>(model: &ChannelModel, n: usize, rng: &mut R) -> Self {
        if let Ok(exact) = Self::exact(model) {
            return exact;
        }
        let sampler = model.sampler();
        GramEnsemble {
            grams: (0..n).map(|_| gram_inner(&sampler.draw(rng))).collect(),
            probs: None,
        }
    }

    /// First `n` draws of a Monte-Carlo ensemble; exact ensembles are returned whole.
    pub fn prefix(&self, n: usize) -> Self {
        if self.probs.is_some() {
            return self.clone();
        }
        GramEnsemble {
            grams: self.grams[..n.min(self.grams.len())].to_vec(),
            probs: None,
        }
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.probs.is_some()
    }

    pub fn grams(&self) -> &[ComplexMatrix] {
        &self.grams
    }

    /// Probability of entry `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match &self.probs {
            Some(p) => p[i],
            None => 1.0 / self.grams.len() as f64,
        }
    }

    /// Sample count reported for this ensemble: the draw count, or 0 for exact supports.
    pub fn samples_used(&self) -> usize {
        if self.is_exact() {
            0
        } else {
            self.grams.len()
        }
    }

    pub fn mean(&self) -> ComplexMatrix {
        let n = self.grams[0].nrows();
        self.grams
            .iter()
            .enumerate()
            .fold(linalg::zeros(n), |acc, (i, k)| acc + k * c(self.weight(i), 0.0))
    }

    /// Applies `f` to every entry and returns the weighted mean and the standard
    /// error of that mean (zero for exact ensembles). The reduction runs over fixed
    /// chunks in index order, so the result does not depend on the worker count.
    pub fn expect<F>(&self, f: F) -> Result<(f64, f64)>
    where
        F: Fn(&ComplexMatrix) -> Result<f64> + Sync,
    {
        let values = crate::par::map_indexed(&self.grams, |i, k| f(k).map_err(|e| e.at_sample(i)))?;
        if let Some(p) = &self.probs {
            return Ok((values.iter().zip(p).map(|(v, w)| v * w).sum(), 0.0));
        }
        let n = values.len() as f64;
        let mean = crate::par::ordered_sum(&values) / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok((mean, (var / n).sqrt()))
    }

    /// Weighted mean of a matrix-valued function.
    pub fn expect_matrix<F>(&self, f: F) -> Result<ComplexMatrix>
    where
        F: Fn(&ComplexMatrix) -> Result<ComplexMatrix> + Sync,
    {
        let values = crate::par::map_indexed(&self.grams, |i, k| f(k).map_err(|e| e.at_sample(i)))?;
        let (r, cols) = values[0].shape();
        let mut acc = ComplexMatrix::zeros(r, cols);
        for (i, v) in values.iter().enumerate() {
            acc += v * c(self.weight(i), 0.0);
        }
        Ok(acc)
    }
}

/// Full broadcast-channel problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub n_t: usize,
    pub n_r: usize,
    pub models: Vec<ChannelModel>,
    pub weights: Vec<f64>,
    pub power: f64,
    pub noise: f64,
}

impl Scenario {
    pub fn new(models: Vec<ChannelModel>, weights: Vec<f64>, power: f64, noise: f64) -> Result<Self> {
        let (n_r, n_t) = models
            .first()
            .map(ChannelModel::dims)
            .ok_or_else(|| Error::Validation("scenario needs at least one user".into()))?;
        for (l, m) in models.iter().enumerate() {
            if m.dims() != (n_r, n_t) {
                return Err(Error::Validation(format!(
                    "user {} channel is {:?}, expected {:?}",
                    l + 1,
                    m.dims(),
                    (n_r, n_t)
                )));
            }
        }
        if weights.len() != models.len() {
            return Err(Error::Validation(format!(
                "{} weights for {} users",
                weights.len(),
                models.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Validation("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - models.len() as f64).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "weights sum to {total}, expected the user count {}",
                models.len()
            )));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::Validation(format!("power budget must be positive, got {power}")));
        }
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(Error::Validation(format!("noise variance must be positive, got {noise}")));
        }
        Ok(Scenario {
            n_t,
            n_r,
            models,
            weights,
            power,
            noise,
        })
    }

    /// Equal weights `mu_l = 1`.
    pub fn equal_weights(models: Vec<ChannelModel>, power: f64, noise: f64) -> Result<Self> {
        let w = vec![1.0; models.len()];
        Self::new(models, w, power, noise)
    }

    pub fn users(&self) -> usize {
        self.models.len()
    }

    /// `P = N0 * 10^(snr/10)`.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        let mut s = self.clone();
        s.power = self.noise * 10f64.powf(snr_db / 10.0);
        s
    }

    pub fn with_power(&self, power: f64) -> Self {
        let mut s = self.clone();
        s.power = power;
        s
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.noise).log10()
    }

    /// Reorders users; `order[i]` is the original index of the new `i`-th user.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.users()];
        for &o in order {
            if o >= self.users() || seen[o] {
                return Err(Error::Validation(format!("invalid user permutation {order:?}")));
            }
            seen[o] = true;
        }
        if order.len() != self.users() {
            return Err(Error::Validation(format!("invalid user permutation {order:?}")));
        }
        let mut s = self.clone();
        s.models = order.iter().map(|&o| self.models[o].clone()).collect();
        s.weights = order.iter().map(|&o| self.weights[o]).collect();
        Ok(s)
    }

    /// Closed-form `R_{g,l}` for every user.
    pub fn second_order_stats(&self) -> Vec<HermitianPsd> {
        self.models.iter().map(ChannelModel::second_order_stat).collect()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for (l, m) in self.models.iter().enumerate() {
            m.check_normalized(tol)
                .map_err(|e| Error::Validation(format!("user {}: {e}", l + 1)))?;
        }
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let mut s = self.clone();
        s.models = self.models.iter().map(ChannelModel::normalized).collect::<Result<_>>()?;
        Ok(s)
    }

    /// One ensemble per user drawn from independent seeded streams.
    pub fn draw_ensembles(&self, samples: usize, seed: u64) -> Vec<GramEnsemble> {
        self.models
            .iter()
            .enumerate()
            .map(|(l, m)| GramEnsemble::draw(m, samples, &mut user_rng(seed, l)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    fn example1_user2() -> ChannelModel {
        let rr = from_rows(&[&[(1.0, 0.0), (-0.05, -0.1)], &[(-0.05, 0.1), (1.0, 0.0)]]);
        let rt = from_rows(&[&[(1.0, 0.0), (-0.8, -0.11)], &[(-0.8, 0.11), (1.0, 0.0)]]);
        ChannelModel::kronecker(HermitianPsd::new(rr).unwrap(), HermitianPsd::new(rt).unwrap())
    }

    #[test]
    fn white_kronecker_has_unit_entry_variance() {
        let model = ChannelModel::iid(2, 2);
        let sampler = model.sampler();
        let mut rng = user_rng(11, 0);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sampler.draw(&mut rng)[(0, 1)].norm_sqr();
        }
        let var = acc / n as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn rician_large_k_is_deterministic() {
        let los = from_rows(&[&[(0.5898, 0.0), (1.1795, 0.0)], &[(0.2949, 0.0), (1.4744, 0.0)]]);
        let model = ChannelModel::rician(los.clone(), 1e12, HermitianPsd::identity(2), HermitianPsd::identity(2)).unwrap();
        let mut rng = user_rng(3, 0);
        for _ in 0..10 {
            let h = sample_channel(&model, &mut rng);
            for (a, b) in h.iter().zip(los.iter()) {
                assert!((a - b).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn finite_support_frequencies() {
        let ha = linalg::identity(2);
        let hb = linalg::scaled_identity(2, 2.0);
        let model = ChannelModel::finite_support(vec![(ha.clone(), 0.3), (hb, 0.7)]).unwrap();
        let sampler = model.sampler();
        let mut rng = user_rng(5, 0);
        let n = 100_000;
        let hits = (0..n).filter(|_| sampler.draw(&mut rng) == ha).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn finite_support_validation() {
        let h = linalg::identity(2);
        assert!(ChannelModel::finite_support(vec![(h.clone(), 0.5), (h.clone(), 0.4)]).is_err());
        assert!(ChannelModel::finite_support(vec![(h.clone(), 1.2), (h.clone(), -0.2)]).is_err());
        assert!(ChannelModel::finite_support(vec![]).is_err());
    }

    #[test]
    fn kronecker_second_order_closed_form_and_monte_carlo() {
        let model = example1_user2();
        let rg = model.second_order_stat();
        let ChannelModel::Kronecker { tx_corr, .. } = &model else { unreachable!() };
        assert!(linalg::frob(&(rg.matrix() - tx_corr.matrix() * c(2.0, 0.0))) < 1e-14);

        let ens = GramEnsemble::draw(&model, 100_000, &mut user_rng(7, 0));
        let mc = ens.mean();
        for (a, b) in mc.iter().zip(rg.matrix().iter()) {
            // entries of 2*R_t have magnitude >= 1.6 except none near zero
            assert!((a - b).norm() <= 0.01 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn identity_second_order_stat() {
        let rg = ChannelModel::iid(3, 2).second_order_stat();
        assert!(linalg::frob(&(rg.matrix() - linalg::scaled_identity(2, 3.0))) < 1e-15);
    }

    #[test]
    fn rician_k_zero_is_kronecker() {
        let m = example1_user2();
        let ChannelModel::Kronecker { rx_corr, tx_corr } = m.clone() else { unreachable!() };
        let los = from_rows(&[&[(0.3, 0.1), (1.0, 0.0)], &[(0.2, 0.0), (1.5, -0.2)]]);
        let r = ChannelModel::rician(los, 0.0, rx_corr, tx_corr).unwrap();
        assert!(linalg::frob(&(r.second_order_stat().matrix() - m.second_order_stat().matrix())) < 1e-15);
    }

    #[test]
    fn energy_normalization_check_and_rescale() {
        let model = example1_user2();
        assert!(model.check_normalized(1e-9).is_ok());
        let ens = GramEnsemble::draw(&model, 100_000, &mut user_rng(1, 0));
        let energy = linalg::trace_re(&ens.mean());
        assert!((energy - 4.0).abs() < 0.04, "energy {energy}");

        let off = ChannelModel::kronecker(HermitianPsd::identity(2).scaled(3.0), HermitianPsd::identity(2));
        assert!(off.check_normalized(1e-9).is_err());
        let fixed = off.normalized().unwrap();
        assert!(fixed.check_normalized(1e-12).is_ok());
    }

    #[test]
    fn identical_seeds_identical_draws() {
        let model = example1_user2();
        let a = GramEnsemble::draw(&model, 50, &mut user_rng(42, 1));
        let b = GramEnsemble::draw(&model, 50, &mut user_rng(42, 1));
        assert_eq!(a.grams(), b.grams());
        let other = GramEnsemble::draw(&model, 50, &mut user_rng(42, 2));
        assert_ne!(a.grams(), other.grams());
    }

    #[test]
    fn scenario_validation() {
        let m = || ChannelModel::iid(2, 2);
        assert!(Scenario::new(vec![m(), m()], vec![1.0, 1.0], 1.0, 1.0).is_ok());
        assert!(Scenario::new(vec![m(), m()], vec![1.0, 0.5], 1.0, 1.0).is_err());
        assert!(Scenario::new(vec![m(), m()], vec![2.5, -0.5], 1.0, 1.0).is_err());
        assert!(Scenario::new(vec![m()], vec![1.0], 0.0, 1.0).is_err());
        assert!(Scenario::new(vec![m()], vec![1.0], 1.0, 0.0).is_err());
        assert!(Scenario::new(vec![m(), ChannelModel::iid(3, 2)], vec![1.0, 1.0], 1.0, 1.0).is_err());
    }
}
