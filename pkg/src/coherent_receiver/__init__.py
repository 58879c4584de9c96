"""Slice-and-compress receiver for minimum-error discrimination of coherent states."""

from .coherent import (
    CoherentEnsemble,
    SlicePlan,
    TransferChannel,
    coherent_overlap,
    gram_matrix,
    qubit_approx,
    transfer_apply,
    transfer_fidelity,
    transfer_fidelity_power,
)
from .compression import (
    BetaGuardError,
    ReceiverRun,
    bpsk_B_closed,
    bpsk_B_recursion,
    build_3ask_step,
    build_bpsk_step,
    build_state_mapper,
    compose_multimode,
    run_alphabet,
    run_receiver,
    threeask_CD_closed,
    threeask_CD_recursion,
)
from .discrimination import (
    DiscriminationProblem,
    Povm,
    helstrom_binary_mixed,
    helstrom_binary_pure,
    homodyne_ml_error,
    isoceles_three_pure,
    povm_optimize,
    receiver_error,
)

__version__ = "0.1.0"
