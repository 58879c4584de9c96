"""Minimum-error measurements and classical baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .linalg import PSD_TOL, dagger, herm_sqrt, herm_sqrt_inv, hermitianize, is_density_matrix, trace_norm


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""


@dataclass
class DiscriminationProblem:
    states: list
    priors: tuple

    def __post_init__(self):
        self.states = [np.asarray(s, dtype=complex) for s in self.states]
        self.priors = tuple(float(p) for p in self.priors)
        if len(self.states) != len(self.priors) or len(self.states) < 2:
            raise ValueError("need at least two states and one prior per state")
        if min(self.priors) < 0 or abs(sum(self.priors) - 1.0) > 1e-12:
            raise ValueError(f"priors must be nonnegative and sum to 1, got {self.priors}")
        d = self.states[0].shape
        for i, s in enumerate(self.states):
            if s.shape != d:
                raise ValueError(f"state {i} has shape {s.shape}, expected {d}")
            if not is_density_matrix(s, trace_tol=1e-10):
                raise ValueError(f"state {i} is not a density matrix")

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def __len__(self) -> int:
        return len(self.states)


@dataclass
class Povm:
    elements: list

    def __post_init__(self):
        self.elements = [np.asarray(e, dtype=complex) for e in self.elements]
        d = self.elements[0].shape[0]
        for i, e in enumerate(self.elements):
            if np.max(np.abs(e - dagger(e))) > 1e-10:
                raise ValueError(f"POVM element {i} is not Hermitian")
            if np.linalg.eigvalsh(hermitianize(e))[0] < -PSD_TOL:
                raise ValueError(f"POVM element {i} is not PSD")
        err = self.completeness_residual
        if err > 1e-8:
            raise ValueError(f"POVM elements sum to identity only within {err:.3e}")
        self._dim = d

    @property
    def completeness_residual(self) -> float:
        total = sum(self.elements)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def is_projective(self, tol: float = 1e-8) -> bool:
        return all(np.max(np.abs(e @ e - e)) <= tol for e in self.elements)


def error_probability(prob: DiscriminationProblem, povm: Povm) -> float:
    """sum_j p_j (1 - tr(rho_j Pi_j))."""
    return float(sum(p * (1.0 - np.trace(r @ e).real) for p, r, e in zip(prob.priors, prob.states, povm.elements)))


# -- binary ------------------------------------------------------------------

def helstrom_binary_pure(overlap: complex, p1: float) -> float:
    """(1 - sqrt(1 - 4 p1 p2 |<psi1|psi2>|^2)) / 2."""
    g2 = min(abs(complex(overlap)) ** 2, 1.0)
    p2 = 1.0 - p1
    return float(0.5 * (1.0 - np.sqrt(max(1.0 - 4.0 * p1 * p2 * g2, 0.0))))


def helstrom_binary_mixed(rho1, rho2, p1: float) -> float:
    rho1, rho2 = np.asarray(rho1), np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    return float(0.5 * (1.0 - trace_norm(p1 * rho1 - (1.0 - p1) * rho2)))


def helstrom_binary_povm(rho1, rho2, p1: float) -> Povm:
    """Projector onto the positive part of p1 rho1 - p2 rho2 and its complement."""
    w, v = np.linalg.eigh(hermitianize(p1 * np.asarray(rho1) - (1.0 - p1) * np.asarray(rho2)))
    pos = v[:, w > 0]
    first = pos @ dagger(pos)
    return Povm([first, np.eye(len(w)) - first])


# -- three pure states, isoceles Gram matrix -----------------------------------

@dataclass
class IsocelesSolution:
    a: float
    b: float
    c: float
    d: float
    e: float
    error_prob: float
    x: float
    y: float
    roots: list = field(default_factory=list, repr=False)

    @property
    def residuals(self) -> list[float]:
        a, b, c, d, e, x, y = self.a, self.b, self.c, self.d, self.e, self.x, self.y
        return [
            abs(a * a + 2 * b * b - 1),
            abs(d * d + c * c + e * e - 1),
            abs(a * d + b * (c + e) - x),
            abs(d * d + 2 * c * e - y),
            abs(a * b - c * d),
        ]

    @property
    def inner_products(self) -> np.ndarray:
        """<w_i|psi_j>: rows are measurement vectors, columns hypotheses."""
        a, b, c, d, e = self.a, self.b, self.c, self.d, self.e
        return np.array([[a, d, d], [b, c, e], [b, e, c]])


def _isoceles_params(d: float, x: float, y: float):
    s = np.sqrt(max(y - 2 * d * d + 1, 0.0))
    t = np.sqrt(max(y - 2 * x * x + 1, 0.0))
    r = np.sqrt(max(1 - y, 0.0))
    a = (2 * d * x + t * s) / (1 + y)
    b = (x - 2 * d * d * x + x * y - d * t * s) / ((1 + y) * s)
    c = 0.5 * (s + r)
    e = 0.5 * (s - r)
    return a, b, c, e


def isoceles_three_pure(x: float, y: float, grid: int = 512, dtol: float = 1e-13) -> IsocelesSolution:
    """Optimal measurement for three equiprobable pure states with Gram [[1,x,x],[x,1,y],[x,y,1]].

    The first four optimality constraints fix a, b, c, e as functions of d; the
    remaining one, ab = cd, is solved for d by scanning for sign changes and
    bisecting.  Among several roots the one with the smallest error wins.
    """
    x, y = float(x), float(y)
    if abs(x) > 1 + 1e-12 or abs(y) > 1 + 1e-12 or 1 + y - 2 * x * x < -1e-12:
        raise ValueError(f"(x={x}, y={y}) is not a valid Gram matrix")
    y = min(y, 1.0)
    d_max = np.sqrt((1 + y) / 2) * (1 - 1e-12)

    def f(d):
        a, b, c, _ = _isoceles_params(d, x, y)
        return a * b - c * d

    ds = np.linspace(-d_max, d_max, grid)
    fs = np.array([f(d) for d in ds])
    roots = [float(d) for d, v in zip(ds, fs) if v == 0.0]
    for lo, hi, flo, fhi in zip(ds[:-1], ds[1:], fs[:-1], fs[1:]):
        if flo * fhi >= 0:
            continue
        while hi - lo > dtol:
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(lo if abs(f(lo)) <= abs(f(hi)) else hi)
    if not roots:
        raise ValueError(f"no sign change of ab - cd on a {grid}-point grid over [{-d_max:.6g}, {d_max:.6g}]")

    best = None
    for d in roots:
        a, b, c, e = _isoceles_params(d, x, y)
        err = 1.0 - (a * a + 2 * c * c) / 3.0
        if best is None or err < best.error_prob:
            best = IsocelesSolution(float(a), float(b), float(c), float(d), float(e), float(err), x, y)
    best.roots = roots
    best.error_prob = min(max(best.error_prob, 0.0), 2.0 / 3.0)
    return best


# -- general K, mixed states -------------------------------------------------

@dataclass
class PovmResult:
    povm: Povm
    error_prob: float
    iterations: int
    converged: bool
    history: list = field(repr=False, default_factory=list)
    certificate: dict = field(default_factory=dict)


def _optimality_certificate(prob: DiscriminationProblem, elements) -> dict:
    weighted = [p * r for p, r in zip(prob.priors, prob.states)]
    lag = sum(r @ e for r, e in zip(weighted, elements))
    herm = float(np.max(np.abs(lag - dagger(lag))))
    lag_h = hermitianize(lag)
    gaps = [float(np.linalg.eigvalsh(lag_h - r)[0]) for r in weighted]
    # L + g I dominates every R_j, so it is dual feasible: the optimal success
    # probability exceeds the achieved one, tr(L), by at most g * dim
    slack = max(0.0, -min(gaps))
    return {"hermitian_residual": herm, "min_eig_gap": min(gaps), "suboptimality_bound": slack * lag.shape[0]}


def povm_optimize(prob: DiscriminationProblem, tol: float = 1e-10, max_iters: int = 100_000,
                  cutoff: float = 1e-12) -> PovmResult:
    """Minimum-error POVM by the fixed-point iteration

        Pi_j <- L^{-1/2} R_j Pi_j R_j L^{-1/2},  L = sum_k R_k Pi_k R_k,  R_j = p_j rho_j,

    started from Pi_j = I/K and stopped once the error probability changes by
    less than ``tol`` and the geometric tail estimated from the last two
    changes is below ``tol`` as well.  The inverse square root is taken on the support of L;
    the kernel (never populated by any state) is assigned to the first outcome.
    """
    k, d = len(prob), prob.dim
    weighted = [p * r for p, r in zip(prob.priors, prob.states)]
    elements = [np.eye(d, dtype=complex) / k for _ in range(k)]

    def err_of(els):
        return 1.0 - sum(np.trace(r @ e).real for r, e in zip(weighted, els))

    history = [err_of(elements)]
    best_err, best = history[0], elements
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        lam = sum(r @ e @ r for r, e in zip(weighted, elements))
        s = herm_sqrt_inv(hermitianize(lam), pseudo=True, cutoff=cutoff * max(1.0, np.abs(lam).max()))
        elements = [hermitianize(s @ r @ e @ r @ s) for r, e in zip(weighted, elements)]
        err = err_of(elements)
        history.append(err)
        if err < best_err:
            best_err, best = err, elements
        step = abs(history[-2] - err)
        if step < tol:
            # linear convergence leaves about step * rho / (1 - rho) still to go
            prev = abs(history[-3] - history[-2]) if len(history) > 2 else 0.0
            rho = step / prev if prev > 0 else 0.0
            if rho >= 1.0 or step * rho / (1.0 - rho) < tol:
                converged = True
                break

    # sum(best) is the support projector of L up to rounding; renormalize on
    # that support and hand the kernel (never populated by any state) to outcome 0
    total = hermitianize(sum(best))
    w, v = np.linalg.eigh(total)
    keep = w > 0.5
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    s = (v * inv) @ dagger(v)
    vk = v[:, ~keep]
    final = [hermitianize(s @ e @ s) for e in best]
    final[0] = final[0] + vk @ dagger(vk)
    povm = Povm(final)
    return PovmResult(povm, float(error_probability(prob, povm)), it, converged, history,
                      _optimality_certificate(prob, final))


def pure_states_from_gram(gram) -> list:
    """Density matrices of pure states realizing ``gram`` (columns of gram^{1/2})."""
    root = herm_sqrt(np.asarray(gram, dtype=complex))
    return [np.outer(root[:, j], root[:, j].conj()) for j in range(root.shape[1])]


def _isoceles_form(gram: np.ndarray):
    """Return (order, x, y) if some ordering puts ``gram`` in isoceles form."""
    g = np.real_if_close(gram)
    if np.iscomplexobj(g) or g.shape != (3, 3):
        return None
    for apex in range(3):
        i, j = [t for t in range(3) if t != apex]
        if abs(g[apex, i] - g[apex, j]) <= 1e-14:
            return (apex, i, j), float(g[apex, i]), float(g[i, j])
    return None


def pure_helstrom(gram, priors=None) -> float:
    """Minimum error for pure states with Gram matrix ``gram``."""
    gram = np.asarray(gram, dtype=complex)
    k = gram.shape[0]
    priors = tuple(priors) if priors is not None else (1.0 / k,) * k
    equal = np.allclose(priors, 1.0 / k, rtol=0, atol=1e-15)
    if k == 2:
        return helstrom_binary_pure(gram[0, 1], priors[0])
    if k == 3 and equal:
        form = _isoceles_form(gram)
        if form is not None:
            _, x, y = form
            return isoceles_three_pure(x, y).error_prob
    res = povm_optimize(DiscriminationProblem(pure_states_from_gram(gram), priors))
    if not res.converged:
        raise ConvergenceError(f"POVM iteration did not converge in {res.iterations} iterations")
    return res.error_prob


def receiver_error(run) -> float:
    """Minimum error probability for the final register states of a receiver run."""
    if len(run.states) == 2:
        return helstrom_binary_mixed(run.states[0], run.states[1], run.priors[0])
    res = povm_optimize(DiscriminationProblem(run.states, run.priors))
    if not res.converged:
        raise ConvergenceError(f"POVM iteration did not converge in {res.iterations} iterations")
    return res.error_prob


def per_mode_error(mode_runs, codebook, priors=None) -> float:
    """Error of measuring each mode separately, then deciding the codeword by ML.

    Each mode gets the equal-prior binary Helstrom measurement between its
    two register states; the codeword decision maximizes p_w P(outcomes | w)
    over every outcome tuple.
    """
    from .compression import parse_codeword

    words = [parse_codeword(w) for w in codebook]
    k = len(words)
    priors = tuple(priors) if priors is not None else (1.0 / k,) * k
    # outcome 0 <-> "+" guess, 1 <-> "-" guess
    tables = []
    for run in mode_runs:
        plus, minus = run.state_for(1), run.state_for(-1)
        povm = helstrom_binary_povm(plus, minus, 0.5)
        tables.append({s: [float(np.trace(run.state_for(s) @ e).real) for e in povm.elements] for s in (1, -1)})
    success = 0.0
    for outcome in product((0, 1), repeat=len(mode_runs)):
        best = 0.0
        for p, w in zip(priors, words):
            lik = p
            for table, s, o in zip(tables, w, outcome):
                lik *= table[s][o]
            best = max(best, lik)
        success += best
    return float(1.0 - success)


# -- homodyne baselines ------------------------------------------------------

HOMODYNE_VAR = 0.5


def homodyne_ml_error_amplitudes(amplitudes, priors=None) -> float:
    """ML error for quadrature detection of real amplitudes.

    The outcome under hypothesis j is Normal(sqrt(2) alpha_j, 1/2); the
    decision regions are intervals bounded by pairwise likelihood crossings.
    """
    amps = np.asarray(amplitudes, dtype=complex)
    if np.any(np.abs(amps.imag) > 0):
        raise ValueError("homodyne baseline needs real amplitudes")
    mu = np.sqrt(2.0) * amps.real
    k = len(mu)
    priors = np.asarray(priors if priors is not None else [1.0 / k] * k, dtype=float)
    sigma = np.sqrt(HOMODYNE_VAR)
    active = [i for i in range(k) if priors[i] > 0]
    logp = {i: np.log(priors[i]) for i in active}

    cuts = set()
    for i in active:
        for j in active:
            if i < j and mu[i] != mu[j]:
                cuts.add(0.5 * (mu[i] + mu[j]) + HOMODYNE_VAR * (logp[j] - logp[i]) / (mu[i] - mu[j]))
    edges = [-np.inf] + sorted(cuts) + [np.inf]

    def winner(t):
        scores = [(logp[i] - (t - mu[i]) ** 2 / (2 * HOMODYNE_VAR), -i) for i in active]
        return -max(scores)[1]

    success = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if np.isinf(lo) and np.isinf(hi):
            probe = 0.0
        elif np.isinf(lo):
            probe = hi - 1.0
        elif np.isinf(hi):
            probe = lo + 1.0
        else:
            probe = 0.5 * (lo + hi)
        w = winner(probe)
        success += priors[w] * (ndtr((hi - mu[w]) / sigma) - ndtr((lo - mu[w]) / sigma))
    return float(1.0 - success)


def homodyne_ml_error(ens) -> float:
    return homodyne_ml_error_amplitudes(ens.amplitudes, ens.priors)


def _bivariate_cdf(s1: float, s2: float, rho: float) -> float:
    """P(W1 <= s1, W2 <= s2) for standard normals with correlation rho."""
    if rho >= 1 - 1e-12:
        return float(ndtr(min(s1, s2)))
    if rho <= -1 + 1e-12:
        return float(max(0.0, ndtr(s1) - ndtr(-s2)))
    scale = np.sqrt(1 - rho * rho)
    val, _ = integrate.quad(lambda w: np.exp(-0.5 * w * w) / np.sqrt(2 * np.pi) * ndtr((s2 - rho * w) / scale),
                            -np.inf, s1, epsabs=1e-14, epsrel=1e-12, limit=200)
    return float(val)


def homodyne_ml_error_codewords(codewords, priors=None) -> float:
    """ML error for per-mode homodyne on multimode real-amplitude codewords (K <= 3).

    Codeword k is a vector of real amplitudes; its outcome vector is
    Normal(sqrt(2) c_k, I/2).  P(correct | j) is the Gaussian mass of the
    ML cell of j, an intersection of at most two half-spaces.
    """
    c = np.atleast_2d(np.asarray(codewords, dtype=float))
    k = c.shape[0]
    if k > 3:
        raise ValueError("codeword homodyne baseline supports at most three codewords")
    priors = np.asarray(priors if priors is not None else [1.0 / k] * k, dtype=float)
    mu = np.sqrt(2.0) * c
    sigma = np.sqrt(HOMODYNE_VAR)
    success = 0.0
    for j in range(k):
        if priors[j] == 0:
            continue
        units, thresholds, lost = [], [], False
        for m in range(k):
            if m == j:
                continue
            delta = mu[m] - mu[j]
            dist = np.linalg.norm(delta)
            if dist == 0.0:
                if priors[m] > priors[j] or (priors[m] == priors[j] and m < j):
                    lost = True
                continue
            ratio = np.log(priors[j] / priors[m]) if priors[m] > 0 else np.inf
            units.append(delta / dist)
            thresholds.append((dist / 2 + HOMODYNE_VAR * ratio / dist) / sigma)
        if lost:
            continue
        if not units:
            p_ok = 1.0
        elif len(units) == 1:
            p_ok = float(ndtr(thresholds[0]))
        else:
            p_ok = _bivariate_cdf(thresholds[0], thresholds[1], float(units[0] @ units[1]))
        success += priors[j] * p_ok
    return float(1.0 - success)


def helstrom_bound(alphabet: str, alpha: float, priors=None, codebook=None) -> float:
    """Helstrom limit of the coherent-state alphabet itself (no slicing)."""
    from .coherent import coherent_overlap
    from .compression import DEFAULT_CODEBOOK, codeword_gram

    alphabet = alphabet.lower()
    if alphabet == "bpsk":
        p1 = priors[0] if priors is not None else 0.5
        return helstrom_binary_pure(coherent_overlap(-alpha, alpha), p1)
    if alphabet == "3ask":
        amps = (-alpha, 0.0, alpha)
        g = np.array([[1.0 if i == j else coherent_overlap(a, b) for j, b in enumerate(amps)] for i, a in enumerate(amps)])
        return pure_helstrom(g, priors)
    if alphabet == "multimode":
        g = codeword_gram(codebook or DEFAULT_CODEBOOK, coherent_overlap(-alpha, alpha))
        return pure_helstrom(g, priors)
    raise ValueError(f"unknown alphabet {alphabet!r}")


def homodyne_error(alphabet: str, alpha: float, priors=None, codebook=None) -> float:
    from .compression import DEFAULT_CODEBOOK, parse_codeword

    alphabet = alphabet.lower()
    if alphabet == "bpsk":
        return homodyne_ml_error_amplitudes((-alpha, alpha), priors)
    if alphabet == "3ask":
        return homodyne_ml_error_amplitudes((-alpha, 0.0, alpha), priors)
    if alphabet == "multimode":
        words = [parse_codeword(w) for w in (codebook or DEFAULT_CODEBOOK)]
        return homodyne_ml_error_codewords(np.array(words, dtype=float) * alpha, priors)
    raise ValueError(f"unknown alphabet {alphabet!r}")
