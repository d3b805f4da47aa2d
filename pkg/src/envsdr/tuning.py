"""Data-driven choice of ``(nu, xi)``, plus the QDA classifier used for it.

Two criteria are available: leave-one-out classification accuracy of QDA on
the leading components (for categorical responses) and bootstrap
variability of the estimated subspace (``1 - mean trace correlation`` between
resample estimates and the full-data estimate).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BootstrapDegenerate, EnvSDRError, InvalidInput
from .estimator import envelope_basis, two_stage_estimate
from .kernels import KernelConfig, KernelSet, build_kernels, psir_directions
from .slicing import slice_continuous, slice_discrete

BOOTSTRAP_VARIABILITY = "BOOTSTRAP_VARIABILITY"
LOO_CA = "LOO_CA"

_RIDGE_TRIGGER = 1e-8
_RIDGE_SIZE = 1e-6


def _ridge(cov: np.ndarray) -> np.ndarray:
    """Add ``1e-6 * trace / k`` to the diagonal of near-singular covariances."""
    c = cov if cov.ndim == 3 else cov[None]
    k = c.shape[-1]
    vals = np.linalg.eigvalsh(c)
    bad = vals[:, 0] < _RIDGE_TRIGGER * vals[:, -1]
    if np.any(bad):
        c = c.copy()
        amount = np.maximum(_RIDGE_SIZE * np.trace(c, axis1=1, axis2=2) / k, 1e-12)
        c[bad] += amount[bad, None, None] * np.eye(k)
    return c if cov.ndim == 3 else c[0]


@dataclass(frozen=True)
class QdaModel:
    classes: np.ndarray
    priors: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    logdets: np.ndarray
    invs: np.ndarray

    def log_posterior(self, features) -> np.ndarray:
        """Unnormalized Gaussian log posterior, one column per class."""
        f = np.atleast_2d(np.asarray(features, dtype=float))
        out = np.empty((f.shape[0], self.classes.size))
        for c in range(self.classes.size):
            d = f - self.means[c]
            q = np.einsum("ij,jk,ik->i", d, self.invs[c], d)
            out[:, c] = np.log(self.priors[c]) - 0.5 * self.logdets[c] - 0.5 * q
        return out

    def predict(self, features) -> np.ndarray:
        return self.classes[np.argmax(self.log_posterior(features), axis=1)]


def _features(features) -> np.ndarray:
    f = np.asarray(features, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2 or not np.all(np.isfinite(f)):
        raise InvalidInput("features must be a finite n x k matrix")
    return f


def qda_fit(features, labels, ridge: bool = True) -> QdaModel:
    """Class priors, means and covariances (divisor ``n_c - 1``)."""
    f = _features(features)
    labels = np.asarray(labels).ravel()
    if labels.size != f.shape[0]:
        raise InvalidInput("features and labels differ in length")
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise InvalidInput("QDA needs at least two classes")
    if counts.min() < 2:
        raise InvalidInput("every class needs at least two members")
    k = f.shape[1]
    means = np.empty((classes.size, k))
    covs = np.empty((classes.size, k, k))
    for i, c in enumerate(classes):
        fc = f[labels == c]
        means[i] = fc.mean(axis=0)
        dc = fc - means[i]
        covs[i] = dc.T @ dc / (fc.shape[0] - 1)
    if ridge:
        covs = _ridge(covs)
    sign, logdets = np.linalg.slogdet(covs)
    if np.any(sign <= 0):
        raise InvalidInput("singular class covariance; enable ridge")
    return QdaModel(classes, counts / counts.sum(), means, covs, logdets, np.linalg.inv(covs))


def qda_loo_accuracy(features, labels, ridge: bool = True) -> float:
    """Leave-one-out accuracy of QDA.

    Deleting one point only changes its own class, so the class mean and
    covariance are downdated in closed form instead of refitting.
    """
    f = _features(features)
    labels = np.asarray(labels).ravel()
    n, k = f.shape
    if n < 4:
        raise InvalidInput("need at least four observations")
    full = qda_fit(f, labels, ridge=ridge)
    classes = full.classes
    counts = np.array([np.sum(labels == c) for c in classes])
    if counts.min() < 3:
        raise InvalidInput("every class needs at least three members for leave-one-out")

    scores = np.empty((n, classes.size))
    for j in range(classes.size):
        d = f - full.means[j]
        q = np.einsum("ij,jk,ik->i", d, full.invs[j], d)
        scores[:, j] = np.log(counts[j] / (n - 1)) - 0.5 * full.logdets[j] - 0.5 * q

    for j, c in enumerate(classes):
        idx = np.flatnonzero(labels == c)
        m = idx.size
        fc = f[idx]
        mu = fc.mean(axis=0)
        dc = fc - mu
        s = dc.T @ dc
        mu_loo = mu - dc / (m - 1)
        cov_loo = (s[None] - (m / (m - 1)) * dc[:, :, None] * dc[:, None, :]) / (m - 2)
        if ridge:
            cov_loo = _ridge(cov_loo)
        sign, logdet = np.linalg.slogdet(cov_loo)
        if np.any(sign <= 0):
            raise InvalidInput("singular leave-one-out covariance; enable ridge")
        r = fc - mu_loo
        q = np.einsum("ij,ij->i", r, np.linalg.solve(cov_loo, r[:, :, None])[:, :, 0])
        scores[idx, j] = np.log((m - 1) / (n - 1)) - 0.5 * logdet - 0.5 * q

    pred = classes[np.argmax(scores, axis=1)]
    return float(np.mean(pred == labels))


@dataclass
class TuningReport:
    candidates: list = field(default_factory=list)
    chosen: tuple | None = None
    score_kind: str = LOO_CA
    extra_scores: dict = field(default_factory=dict)

    def score_of(self, candidate) -> float:
        for nu, xi, score in self.candidates:
            if (nu, xi) == tuple(candidate):
                return score
        raise KeyError(candidate)


def _pick(cands, maximize: bool):
    """Best candidate; ties go to smaller ``nu`` and then smaller ``xi``."""
    best = None
    for nu, xi, score in sorted(cands, key=lambda t: (t[0], t[1])):
        if best is None or (score > best[2] if maximize else score < best[2]):
            best = (nu, xi, score)
    return best[0], best[1]


def _grid(nu_range, xi_grid, d):
    nus = sorted(int(v) for v in nu_range)
    xis = sorted(float(v) for v in xi_grid)
    if not nus or not xis:
        raise InvalidInput("nu_range and xi_grid must be nonempty")
    if nus[0] < d:
        raise InvalidInput(f"nu={nus[0]} is smaller than the number of components {d}")
    return [(nu, xi) for nu in nus for xi in xis]


def tune_by_loo(y, x, w, config: KernelConfig, nu_range, xi_grid, n_components: int = 2,
                kernels: KernelSet | None = None) -> TuningReport:
    """Maximize QDA leave-one-out accuracy of the leading two-stage components."""
    ks = kernels or build_kernels(y, x, w, config)
    labels = np.asarray(y).ravel()
    rep = TuningReport(score_kind=LOO_CA)
    for nu, xi in _grid(nu_range, xi_grid, n_components):
        est = two_stage_estimate(ks.k_yz, envelope_basis(ks.hybrid(xi), nu), n_components, xi=xi)
        rep.candidates.append((nu, xi, qda_loo_accuracy(est.scores(ks.data.z), labels)))
    rep.chosen = _pick(rep.candidates, maximize=True)
    return rep


def _hybrid_bases(ks: KernelSet, grid, d):
    """Orthonormal ``p x d`` two-stage bases for every ``(nu, xi)`` of the grid.

    Batched over the xi grid with raw ``eigh``; used where only spans matter.
    """
    xis = sorted({xi for _, xi in grid})
    nus = sorted({nu for nu, _ in grid})
    k = ks.k_yz.matrix
    p = k.shape[0]
    env = np.stack([ks.hybrid(xi).matrix for xi in xis])
    vecs = np.linalg.eigh(env)[1][:, :, ::-1]
    out = {}
    for nu in nus:
        if nu == p:
            full = np.linalg.eigh(k)[1][:, ::-1][:, :d]
            for i, xi in enumerate(xis):
                out[(nu, xi)] = full
            continue
        b = vecs[:, :, :nu]
        inner = np.einsum("xpi,pq,xqj->xij", b, k, b)
        u = np.linalg.eigh(inner)[1][:, :, ::-1][:, :, :d]
        bases = b @ u
        for i, xi in enumerate(xis):
            out[(nu, xi)] = bases[i]
    return {c: out[c] for c in grid}


def _span_corr(b1: np.ndarray, b2: np.ndarray) -> float:
    t = np.sum((b1.T @ b2) ** 2) / b1.shape[1]
    return float(np.sqrt(min(max(t, 0.0), 1.0)))


def tune_by_bootstrap(y, x, w, config: KernelConfig, nu_range, xi_grid, d: int, m: int = 100,
                      seed=None, stratify: bool = False,
                      kernels: KernelSet | None = None, extra=None) -> TuningReport:
    """Minimize bootstrap variability ``1 - mean_b r(B_b, B)`` over ``(nu, xi)``.

    Resample ``b`` draws from its own stream, the ``b``-th child of
    ``SeedSequence(seed)``.  A resample whose kernels cannot be formed (e.g.
    a singular covariance or a too-small slice) is redrawn from the same
    stream, at most ten times.

    ``extra`` maps names to functions ``KernelSet -> p x d basis``; their
    variability over the same resamples lands in ``report.extra_scores``.
    """
    if m < 2:
        raise InvalidInput("need at least two bootstrap resamples")
    y = np.asarray(y).ravel()
    x = np.asarray(x, dtype=float)
    w = None if w is None else np.asarray(w)
    n = y.size
    ks = kernels or build_kernels(y, x, w, config)
    grid = _grid(nu_range, xi_grid, d)
    full = _hybrid_bases(ks, grid, d)
    extra = dict(extra or {})
    extra_full = {k: np.asarray(f(ks)) for k, f in extra.items()}
    extra_tot = {k: 0.0 for k in extra}

    strata = None
    if stratify:
        sl = slice_discrete(y) if config.h_y is None else slice_continuous(y, config.h_y)
        strata = [sl.members(h) for h in range(1, sl.H + 1)]

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    totals = {c: 0.0 for c in grid}
    for child in root.spawn(m):
        rng = np.random.default_rng(child)
        for _attempt in range(10):
            if strata is None:
                idx = rng.integers(0, n, n)
            else:
                idx = np.concatenate([rng.choice(s, s.size, replace=True) for s in strata])
            try:
                kb = build_kernels(y[idx], x[idx], None if w is None else w[idx], config)
                boot = _hybrid_bases(kb, grid, d)
                eboot = {k: np.asarray(f(kb)) for k, f in extra.items()}
            except (EnvSDRError, np.linalg.LinAlgError):
                continue
            break
        else:
            raise BootstrapDegenerate("ten consecutive degenerate resamples")
        for c in grid:
            totals[c] += _span_corr(boot[c], full[c])
        for k in extra:
            extra_tot[k] += _span_corr(eboot[k], extra_full[k])

    rep = TuningReport(score_kind=BOOTSTRAP_VARIABILITY)
    for c in grid:
        rep.candidates.append((c[0], c[1], min(max(1.0 - totals[c] / m, 0.0), 1.0)))
    rep.chosen = _pick(rep.candidates, maximize=False)
    rep.extra_scores = {k: min(max(1.0 - t / m, 0.0), 1.0) for k, t in extra_tot.items()}
    return rep


def benchmark_psir_qda(y, x, w, config: KernelConfig, kernels: KernelSet | None = None,
                     n_components: int = 2) -> float:
    """QDA leave-one-out accuracy on ``W`` together with the leading PSIR components."""
    if w is None:
        raise InvalidInput("the benchmark needs the auxiliary variable W")
    ks = kernels or build_kernels(y, x, w, config)
    comps = ks.data.z @ psir_directions(ks.psir, n_components)
    w = np.asarray(w, dtype=float)
    feats = np.column_stack([w.reshape(w.shape[0], -1), comps])
    return qda_loo_accuracy(feats, y)
