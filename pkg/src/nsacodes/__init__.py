"""Noise-strength-adapted approximate codes for amplitude damping noise.

Construction, Knill-Laflamme losses, filter recoveries and worst-case
fidelities, variational code search, and sweep drivers.
"""

from nsacodes.codes import (
    CodeSpace,
    Codeword,
    Family,
    SCBasisSet,
    binomial_codes,
    lncy_code,
    nonnsa_sc_code,
    nonnsa_sc_qudit_code,
    nsa_pc_code,
    nsa_sc_code,
    nsa_sc_qudit_code,
    build_family,
    search_sc_basis,
)
from nsacodes.klmetrics import kl_matrices, l1_loss, l2_loss, lemma_fidelity_bound, loss_report
from nsacodes.noise import ErrorSet, SiteKrausFamily, bosonic_ad, build_error_set, qubit_ad, qudit_ad
from nsacodes.recovery import (
    RecoveryPlan,
    build_recovery,
    closed_form_fidelity,
    fidelity_oracle_min_over_states,
    ordering_check,
    worst_case_fidelity,
)
from nsacodes.sweep import SweepConfig, fit_power_law, kink_at
from nsacodes.tensor import DitString, apply_channel, projector_from_vectors, tensor
from nsacodes.vql import ParamCircuit, encode, extract_ansatz, learn_code

__version__ = "0.1.0"
