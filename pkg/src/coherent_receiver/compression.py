"""Sequential slice-and-compress receiver.

Each optical slice, once turned into a qubit, is absorbed into a small
register by a two-system unitary that maps

    |h_j> (x) |m_{j,l}>  ->  |0> (x) |m_{j,l+1}>

for every hypothesis j.  For BPSK the register is one qubit parameterized by
B_l; for the ternary {-alpha, 0, +alpha} alphabet it is two qubits
parameterized by (C_l, D_l).  Step unitaries are synthesized from that
mapping contract and then applied to the (possibly mixed) slice states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy.linalg import qr

from .coherent import CoherentEnsemble, TransferChannel, qubit_approx, transfer_apply
from .linalg import LinalgError, dagger, kron, orthonormal_completion, partial_trace, unitarity_residual

log = logging.getLogger(__name__)

BETA_MAX = 0.95
GRAM_TOL = 1e-8
CONTRACT_TOL = 1e-10
RANK_TOL = 1e-12

ALPHABET_LABELS = {"bpsk": (-1, 1), "3ask": (-1, 0, 1)}


class BetaGuardError(ValueError):
    """Slice amplitude too large for the single-rail approximation."""

    def __init__(self, alpha: float, n: int):
        self.alpha = alpha
        self.n = n
        self.min_n = minimal_slices(alpha)
        super().__init__(
            f"slice amplitude alpha/sqrt(n) = {alpha / np.sqrt(n):.4f} >= {BETA_MAX} "
            f"for alpha={alpha}, n={n}; need n >= {self.min_n}"
        )


def minimal_slices(alpha: float) -> int:
    """Smallest n with alpha/sqrt(n) < BETA_MAX."""
    n = max(1, int(np.floor((abs(alpha) / BETA_MAX) ** 2)))
    while abs(alpha) / np.sqrt(n) >= BETA_MAX:
        n += 1
    return n


@dataclass(frozen=True)
class AncillaParamsBPSK:
    ell: int
    B: float


@dataclass(frozen=True)
class AncillaParams3ASK:
    ell: int
    C: float
    D: float


def _check_steps(alpha: float, n: int, ell: int):
    if alpha < 0 or n < 1 or ell < 0:
        raise ValueError(f"need alpha >= 0, n >= 1, ell >= 0 (got {alpha}, {n}, {ell})")
    if ell > n:
        raise ValueError(f"step index {ell} exceeds slice count {n}")


# -- BPSK ------------------------------------------------------------------

def bpsk_B_recursion(alpha: float, n: int, ell: int) -> float:
    """B_l from B_{l+1} = sqrt((b^2 + B_l^2) / (1 + b^2 B_l^2)), B_0 = 0, b = alpha/sqrt(n)."""
    _check_steps(alpha, n, ell)
    b2 = alpha * alpha / n
    B = 0.0
    for _ in range(ell):
        B = np.sqrt((b2 + B * B) / (1.0 + b2 * B * B))
    return float(B)


def bpsk_B_closed(beta: float, ell: int) -> float:
    """Closed-form solution of the B recursion after ``ell`` steps.

    With q = (beta^2 + 1)/(beta^2 - 1),
    B_l = sqrt(1 + 2 / ((-1)^(l-1) q^l - 1)).
    Valid for every beta >= 0 except beta = 1, where q is singular.
    """
    if ell < 1:
        raise ValueError(f"closed form needs ell >= 1, got {ell}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    b2 = beta * beta
    if b2 == 1.0:
        raise ValueError("beta = 1 makes the closed form singular; increase the slice count")
    q = (b2 + 1.0) / (b2 - 1.0)
    sign = -1.0 if (ell - 1) % 2 else 1.0
    return float(np.sqrt(1.0 + 2.0 / (sign * q**ell - 1.0)))


def bpsk_register_state(B: float, j: int) -> np.ndarray:
    return np.array([1.0, j * B], dtype=complex) / np.sqrt(1.0 + B * B)


# -- ternary ---------------------------------------------------------------

def threeask_CD_recursion(alpha: float, n: int, ell: int) -> tuple[float, float]:
    """(C_l, D_l) from the coupled recursion with C_0 = D_0 = 0.

    C_{l+1} = sqrt(C_l^2 + b^2 + b^2 D_l^2),  D_{l+1} = sqrt(D_l^2 + b^2 C_l^2).
    """
    _check_steps(alpha, n, ell)
    b2 = alpha * alpha / n
    C = D = 0.0
    for _ in range(ell):
        C, D = np.sqrt(C * C + b2 + b2 * D * D), np.sqrt(D * D + b2 * C * C)
    return float(C), float(D)


def threeask_CD_closed(beta: float, ell: int) -> tuple[float, float]:
    if ell < 1:
        raise ValueError(f"closed form needs ell >= 1, got {ell}")
    b2 = beta * beta
    up, down = (1.0 + b2) ** ell, (1.0 - b2) ** ell
    C = np.sqrt((up - down) / 2.0)
    D = np.sqrt(max((up + down) / 2.0 - 1.0, 0.0))
    return float(C), float(D)


def threeask_register_state(C: float, D: float, j: int) -> np.ndarray:
    """(|00> + j C|01> + j^2 D|11>) / norm, register basis ordered |00>,|01>,|10>,|11>."""
    v = np.array([1.0, j * C, 0.0, j * j * D], dtype=complex)
    return v / np.linalg.norm(v)


# -- step synthesis --------------------------------------------------------

def _orthonormal_factor(m: np.ndarray, perm=None):
    """QR with nonnegative diagonal; column-pivoted when ``perm`` is None."""
    if perm is None:
        q, r, perm = qr(m, mode="economic", pivoting=True, check_finite=False)
    else:
        q, r = qr(m[:, perm], mode="economic", check_finite=False)
    s = np.where(np.real(np.diag(r)) < 0, -1.0, 1.0)
    return q * s, r * s[:, None], perm


def build_state_mapper(inputs, outputs, dim: int | None = None) -> np.ndarray:
    """Unitary U with U inputs[k] = outputs[k] for all k.

    Inputs and outputs must have matching Gram matrices.  Both sets are
    orthonormalized by the same column-pivoted QR ordering, the resulting
    bases are paired, and the orthogonal complements are paired after a
    deterministic Gram-Schmidt completion.
    """
    x = np.array(inputs, dtype=complex).T
    y = np.array(outputs, dtype=complex).T
    if x.shape != y.shape:
        raise LinalgError(f"input/output shapes differ: {x.shape} vs {y.shape}")
    dim = x.shape[0] if dim is None else dim
    if x.shape[0] != dim:
        raise LinalgError(f"vectors have length {x.shape[0]}, expected {dim}")

    gx, gy = dagger(x) @ x, dagger(y) @ y
    dev = np.abs(gx - gy)
    worst = float(dev.max())
    if worst > GRAM_TOL:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise LinalgError(f"Gram matrices differ by {worst:.3e} at pair ({i}, {j})")

    qx, rx, perm = _orthonormal_factor(x)
    qy, _, _ = _orthonormal_factor(y, perm)
    rank = int(np.sum(np.abs(np.diag(rx)) > RANK_TOL))
    full_x = orthonormal_completion(dagger(qx[:, :rank]), dim)
    full_y = orthonormal_completion(dagger(qy[:, :rank]), dim)
    return dagger(full_y) @ full_x


@dataclass
class CompressionStep:
    unitary: np.ndarray
    in_states: list
    out_states: list

    @cached_property
    def contract_residual(self) -> float:
        x, y = np.column_stack(self.in_states), np.column_stack(self.out_states)
        return float(np.max(np.linalg.norm(self.unitary @ x - y, axis=0)))

    @property
    def unitarity_residual(self) -> float:
        return unitarity_residual(self.unitary)

    def check(self, tol: float = CONTRACT_TOL) -> "CompressionStep":
        res = self.contract_residual
        if res > tol:
            raise LinalgError(f"step contract residual {res:.3e} exceeds {tol:.0e}")
        return self


def _synthesize(in_states, out_states) -> CompressionStep:
    u = build_state_mapper(in_states, out_states)
    return CompressionStep(u, list(in_states), list(out_states)).check()


def build_bpsk_step(beta: float, B: float) -> CompressionStep:
    b2 = beta * beta
    B_next = np.sqrt((b2 + B * B) / (1.0 + b2 * B * B))
    vac = np.array([1.0, 0.0], dtype=complex)
    ins = [kron(qubit_approx(j * beta), bpsk_register_state(B, j)) for j in (-1, 1)]
    outs = [kron(vac, bpsk_register_state(B_next, j)) for j in (-1, 1)]
    return _synthesize(ins, outs)


def build_3ask_step(beta: float, params: AncillaParams3ASK) -> CompressionStep:
    b2 = beta * beta
    C, D = params.C, params.D
    C_next, D_next = np.sqrt(C * C + b2 + b2 * D * D), np.sqrt(D * D + b2 * C * C)
    vac = np.array([1.0, 0.0], dtype=complex)
    labels = ALPHABET_LABELS["3ask"]
    ins = [kron(qubit_approx(j * beta), threeask_register_state(C, D, j)) for j in labels]
    outs = [kron(vac, threeask_register_state(C_next, D_next, j)) for j in labels]
    return _synthesize(ins, outs)


# -- receiver simulation ---------------------------------------------------

@dataclass
class ReceiverRun:
    alphabet: str
    alpha: float
    n: int
    channel: TransferChannel
    labels: tuple[int, ...]
    priors: tuple[float, ...]
    states: list
    register_kets: list
    max_contract_residual: float = 0.0
    max_unitarity_residual: float = 0.0
    max_trace_error: float = 0.0
    trajectory: list | None = field(default=None, repr=False)

    def state_for(self, label: int) -> np.ndarray:
        return self.states[self.labels.index(label)]


def _step_schedule(alphabet: str, alpha: float, n: int):
    """Yield (step, register kets after the step) for l = 0 .. n-1."""
    beta = alpha / np.sqrt(n)
    b2 = beta * beta
    if alphabet == "bpsk":
        B = 0.0
        for ell in range(n):
            step = build_bpsk_step(beta, B)
            B = np.sqrt((b2 + B * B) / (1.0 + b2 * B * B))
            yield step, AncillaParamsBPSK(ell + 1, float(B))
    else:
        C = D = 0.0
        for ell in range(n):
            step = build_3ask_step(beta, AncillaParams3ASK(ell, C, D))
            C, D = np.sqrt(C * C + b2 + b2 * D * D), np.sqrt(D * D + b2 * C * C)
            yield step, AncillaParams3ASK(ell + 1, float(C), float(D))


def _register_ket(alphabet: str, params, j: int) -> np.ndarray:
    if alphabet == "bpsk":
        return bpsk_register_state(params.B, j)
    return threeask_register_state(params.C, params.D, j)


def run_alphabet(alphabet: str, alpha: float, n: int, channel, priors=None,
                 keep_trajectory: bool = False) -> ReceiverRun:
    """Simulate the receiver for the BPSK or ternary alphabet of real amplitude ``alpha``.

    Unlike :func:`run_receiver` this accepts alpha = 0, where every
    hypothesis is the vacuum.
    """
    alphabet = alphabet.lower()
    if alphabet not in ALPHABET_LABELS:
        raise ValueError(f"unknown alphabet {alphabet!r}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if n < 1:
        raise ValueError(f"slice count must be >= 1, got {n}")
    if alpha / np.sqrt(n) >= BETA_MAX:
        raise BetaGuardError(alpha, n)
    channel = TransferChannel.parse(channel)
    labels = ALPHABET_LABELS[alphabet]
    k = len(labels)
    priors = tuple(float(p) for p in priors) if priors is not None else (1.0 / k,) * k

    beta = alpha / np.sqrt(n)
    reg_dim = 2 if alphabet == "bpsk" else 4
    slices = [transfer_apply(channel, j * beta) for j in labels]
    rhos = []
    for _ in labels:
        r = np.zeros((reg_dim, reg_dim), dtype=complex)
        r[0, 0] = 1.0
        rhos.append(r)

    run = ReceiverRun(alphabet, float(alpha), n, channel, labels, priors, rhos, [])
    trajectory = [[r.copy() for r in rhos]] if keep_trajectory else None
    params = AncillaParamsBPSK(0, 0.0) if alphabet == "bpsk" else AncillaParams3ASK(0, 0.0, 0.0)
    for step, params in _step_schedule(alphabet, alpha, n):
        u = step.unitary
        run.max_contract_residual = max(run.max_contract_residual, step.contract_residual)
        run.max_unitarity_residual = max(run.max_unitarity_residual, step.unitarity_residual)
        ud = u.conj().T
        for i, sl in enumerate(slices):
            joint = u @ kron(sl, rhos[i]) @ ud
            rhos[i] = partial_trace(joint, (2, reg_dim), keep=1)
            run.max_trace_error = max(run.max_trace_error, abs(float(np.trace(rhos[i]).real) - 1.0))
        if keep_trajectory:
            trajectory.append([r.copy() for r in rhos])
    run.states = rhos
    run.register_kets = [_register_ket(alphabet, params, j) for j in labels]
    run.trajectory = trajectory
    return run


def simulate_pure_kets(alphabet: str, alpha: float, n: int) -> tuple[list, float]:
    """Propagate register kets through the step unitaries with ideal qubit slices.

    Returns the final register kets (one per hypothesis, canonical label
    order) and the largest norm left in the slice's |1> branch over all steps,
    which the mapping contract says should vanish.
    """
    alphabet = alphabet.lower()
    if alpha / np.sqrt(n) >= BETA_MAX:
        raise BetaGuardError(alpha, n)
    labels = ALPHABET_LABELS[alphabet]
    beta = alpha / np.sqrt(n)
    reg_dim = 2 if alphabet == "bpsk" else 4
    kets = [np.eye(reg_dim, dtype=complex)[0] for _ in labels]
    leak = 0.0
    for step, _ in _step_schedule(alphabet, alpha, n):
        for i, j in enumerate(labels):
            out = (step.unitary @ kron(qubit_approx(j * beta), kets[i])).reshape(2, reg_dim)
            leak = max(leak, float(np.linalg.norm(out[1])))
            kets[i] = out[0]
    return kets, leak


def _classify(ens: CoherentEnsemble) -> tuple[str, float, list[int]]:
    amps = np.array(ens.amplitudes)
    if np.any(np.abs(amps.imag) > 0):
        raise ValueError("only real-amplitude alphabets are supported")
    alpha = float(np.max(np.abs(amps.real)))
    labels = [int(round(a / alpha)) for a in amps.real]
    if not np.allclose(np.array(labels) * alpha, amps.real, rtol=0, atol=1e-12 * max(alpha, 1.0)):
        raise ValueError(f"amplitudes {ens.amplitudes} are not a BPSK or ternary alphabet")
    if sorted(labels) == [-1, 1]:
        return "bpsk", alpha, labels
    if sorted(labels) == [-1, 0, 1]:
        return "3ask", alpha, labels
    raise ValueError(f"amplitudes {ens.amplitudes} are not a BPSK or ternary alphabet")


def run_receiver(ens: CoherentEnsemble, n: int, channel, keep_trajectory: bool = False) -> ReceiverRun:
    """Run the compression receiver on a BPSK {-a, a} or ternary {-a, 0, a} ensemble.

    Final register states follow the ensemble's hypothesis order.
    """
    alphabet, alpha, labels = _classify(ens)
    canon = ALPHABET_LABELS[alphabet]
    priors = [ens.priors[labels.index(j)] for j in canon]
    run = run_alphabet(alphabet, alpha, n, channel, priors, keep_trajectory)
    order = [canon.index(j) for j in labels]
    run.labels = tuple(labels)
    run.priors = tuple(ens.priors)
    run.states = [run.states[i] for i in order]
    run.register_kets = [run.register_kets[i] for i in order]
    if run.trajectory is not None:
        run.trajectory = [[snap[i] for i in order] for snap in run.trajectory]
    return run


# -- multimode -------------------------------------------------------------

def parse_codeword(word) -> tuple[int, ...]:
    """'++--' or (+1, +1, -1, -1) -> (1, 1, -1, -1)."""
    if isinstance(word, str):
        table = {"+": 1, "-": -1}
        try:
            return tuple(table[c] for c in word.strip())
        except KeyError:
            raise ValueError(f"codeword {word!r} must use only '+' and '-'") from None
    signs = tuple(int(s) for s in word)
    if any(s not in (-1, 1) for s in signs):
        raise ValueError(f"codeword {word!r} must contain only +1/-1")
    return signs


DEFAULT_CODEBOOK = ("++--", "-++-", "--++")


def compose_multimode(mode_runs, codebook, priors=None):
    """Joint register states for a codebook of BPSK sign patterns.

    ``mode_runs`` holds one BPSK run per mode (the same run may be repeated).
    Returns a DiscriminationProblem over the codewords.
    """
    from .discrimination import DiscriminationProblem

    words = [parse_codeword(w) for w in codebook]
    modes = len(mode_runs)
    if not words or any(len(w) != modes for w in words):
        raise ValueError(f"every codeword must have {modes} symbols")
    ref = mode_runs[0]
    for r in mode_runs:
        if r.alphabet != "bpsk":
            raise ValueError("multimode composition needs BPSK mode runs")
        if r.n != ref.n or r.channel is not ref.channel:
            raise ValueError("mode runs must share slice count and channel")
    states = []
    for w in words:
        joint = np.ones((1, 1), dtype=complex)
        for run, s in zip(mode_runs, w):
            joint = kron(joint, run.state_for(s))
        states.append(joint)
    k = len(words)
    priors = tuple(priors) if priors is not None else (1.0 / k,) * k
    return DiscriminationProblem(states, priors)


def codeword_gram(words, mode_overlap: complex) -> np.ndarray:
    """Gram matrix of product codewords given the single-mode <-|+> overlap."""
    words = [parse_codeword(w) for w in words]
    k = len(words)
    g = np.ones((k, k), dtype=complex)
    for i, j in product(range(k), repeat=2):
        flips = sum(a != b for a, b in zip(words[i], words[j]))
        g[i, j] = mode_overlap**flips
    return g
