"""Coherent states, slicing, and the optical-slice to qubit transfer channels."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CoherentEnsemble:
    """A coherent-state alphabet {|alpha_j>} with prior probabilities."""

    amplitudes: tuple[complex, ...]
    priors: tuple[float, ...] = field(default=())

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.amplitudes)
        k = len(amps)
        if k < 2:
            raise ValueError("an ensemble needs at least two amplitudes")
        for i in range(k):
            for j in range(i + 1, k):
                if amps[i] == amps[j]:
                    raise ValueError(f"amplitudes {i} and {j} coincide ({amps[i]})")
        priors = tuple(float(p) for p in self.priors) if self.priors else (1.0 / k,) * k
        if len(priors) != k:
            raise ValueError(f"got {len(priors)} priors for {k} amplitudes")
        if min(priors) < 0 or abs(sum(priors) - 1.0) > 1e-12:
            raise ValueError(f"priors must be nonnegative and sum to 1, got {priors}")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "priors", priors)

    @classmethod
    def bpsk(cls, alpha: float, priors=()) -> "CoherentEnsemble":
        return cls((-alpha, alpha), priors)

    @classmethod
    def three_ask(cls, alpha: float, priors=()) -> "CoherentEnsemble":
        return cls((-alpha, 0.0, alpha), priors)

    def __len__(self) -> int:
        return len(self.amplitudes)


def coherent_overlap(a: complex, b: complex) -> complex:
    """<a|b> = exp(-|a|^2/2 - |b|^2/2 + conj(a) b)."""
    a, b = complex(a), complex(b)
    return complex(np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + a.conjugate() * b))


def gram_matrix(ens: CoherentEnsemble) -> np.ndarray:
    amps = ens.amplitudes
    k = len(amps)
    g = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            g[i, j] = 1.0 if i == j else coherent_overlap(amps[i], amps[j])
    return g


@dataclass(frozen=True)
class SlicePlan:
    """Amplitudes of the ``n`` equal slices produced by a 1:n beamsplitter."""

    n: int
    betas: tuple[complex, ...]

    @classmethod
    def from_ensemble(cls, ens: CoherentEnsemble, n: int) -> "SlicePlan":
        if n < 1:
            raise ValueError(f"slice count must be >= 1, got {n}")
        root = np.sqrt(n)
        return cls(n, tuple(complex(a) / root for a in ens.amplitudes))


def qubit_approx(beta: complex) -> np.ndarray:
    """Single-rail qubit (|0> + beta|1>)/sqrt(1 + |beta|^2) approximating |beta>."""
    beta = complex(beta)
    return np.array([1.0, beta], dtype=complex) / np.sqrt(1.0 + abs(beta) ** 2)


class TransferChannel(enum.Enum):
    """How an optical slice becomes a qubit.

    EXACT_PURE uses the qubit approximation directly.  IDEAL_SWAP swaps the
    0/1-photon subspace into the qubit; STIRAP exchanges one excitation.  For
    both lossy maps the population outside the 0/1 subspace lands on |0> or
    |1> respectively.
    """

    EXACT_PURE = "exact-pure"
    IDEAL_SWAP = "ideal-swap"
    STIRAP = "stirap"

    @classmethod
    def parse(cls, value: "str | TransferChannel") -> "TransferChannel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown channel {value!r}; expected one of {names}") from None

    def apply(self, beta: complex) -> np.ndarray:
        return transfer_apply(self, beta)


def _pure_weight(beta: complex) -> float:
    # population of the 0/1-photon subspace of |beta>
    x = abs(complex(beta)) ** 2
    return float(np.exp(-x) * (1.0 + x))


def transfer_apply(ch: TransferChannel, beta: complex) -> np.ndarray:
    """Qubit density matrix obtained from the slice |beta> through ``ch``."""
    ch = TransferChannel.parse(ch)
    h = qubit_approx(beta)
    rho = np.outer(h, h.conj())
    if ch is TransferChannel.EXACT_PURE:
        return rho
    w = _pure_weight(beta)
    leak = np.diag([1.0, 0.0]) if ch is TransferChannel.IDEAL_SWAP else np.diag([0.0, 1.0])
    return w * rho + (1.0 - w) * leak


def transfer_infidelity(ch: TransferChannel, beta: complex) -> float:
    """1 - <h|rho|h>, evaluated without cancellation for small |beta|."""
    ch = TransferChannel.parse(ch)
    x = abs(complex(beta)) ** 2
    if ch is TransferChannel.EXACT_PURE:
        return 0.0
    if ch is TransferChannel.IDEAL_SWAP:
        # 1 - x e^-x - 1/(1+x)
        return x / (1.0 + x) - x * np.exp(-x)
    # 1 - e^-x - x/(1+x)
    return -np.expm1(-x) - x / (1.0 + x)


def transfer_fidelity(ch: TransferChannel, beta: complex) -> float:
    return 1.0 - transfer_infidelity(ch, beta)


def transfer_fidelity_power(ch: TransferChannel, alpha: float, n: int) -> float:
    """Fidelity of n transferred slices with the ideal qubit slices, F(alpha/sqrt(n))^n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eps = transfer_infidelity(ch, alpha / np.sqrt(n))
    return float(np.exp(n * np.log1p(-eps)))


def transfer_deficit_power(ch: TransferChannel, alpha: float, n: int) -> float:
    """1 - F(alpha/sqrt(n))^n, accurate when the deficit is tiny."""
    eps = transfer_infidelity(ch, alpha / np.sqrt(n))
    return float(-np.expm1(n * np.log1p(-eps)))
