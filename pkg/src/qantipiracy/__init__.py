"""Classical bits stored in 4-state registers that can be read by anyone but copied by no one."""

from .adversary import (
    GuessForge,
    MeasureResend,
    OpaqueRegister,
    UnitaryFlip,
    attack_measure_resend,
    attack_unitary_flip,
    expected_pass_prob,
    forge_guess,
)
from .analysis import (
    McEstimate,
    SweepResult,
    SweepRow,
    estimation_fidelity_scan,
    mc_forgery_pass_rate,
    nondisturbance_audit,
    pass_curve,
    sweep,
)
from .authcode import DELTA_MIN, SharedAuthKey, auth_encode, auth_keygen, auth_verify
from .protocol import (
    BitString,
    CheckReport,
    RegisterBank,
    SecretKey,
    check_bank,
    check_register,
    check_subset,
    prepare_register,
    read_bank,
    read_bit,
    store,
)
from .qcore import (
    ALPHA0,
    ALPHA1,
    BETA0,
    BETA1,
    SUBSPACE_SWAP,
    Projector,
    RandomSource,
    StateVec,
    Unitary4,
    apply_unitary,
    fidelity,
    inner,
    project_measure,
    rank1_projector,
    subspace_projector,
)

__version__ = "0.1.0"
