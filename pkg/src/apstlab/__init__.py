"""State-transfer analysis of XX spin chains in the one-excitation sector."""

from .chain import ChainSpec, TridiagonalOperator, build_chain, is_mirror_symmetric, jacobi_operator
from .classify import APST, NEITHER, PST, UNKNOWN, TransferClass, WaitingTimeEstimate, classify, pst_check, waiting_times
from .diophantine import (
    ContinuedFraction,
    Convergent,
    IntegerRelationSet,
    KroneckerCertificate,
    affine_normalize,
    continued_fraction,
    convergents,
    integer_relations,
    intermediate_convergents,
    kronecker_solve,
    parity_filter,
)
from .dynamics import amplitude, end_fidelity, return_amplitude, scan_fidelity, transfer_deviation
from .errors import *  # noqa: F401,F403
from .numbers import AlgebraicReal, ExactSpectrum
from .spectral import EigenFrame, Spectrum, build_frame, chi_sign_pattern, eigenvalues, evaluate_chi, make_spectrum
from .synthesis import ModelParams, SurgeryPlan, chain_from_spectrum, generate_model, plan_surgery, spectral_surgery

__version__ = "0.1.0"
