"""Concrete measurement records for the two-coherent-signal protocol, plus
independent analytic oracles.

The sender prepares one of two coherent signals with amplitudes whose squared
modulus is ``alpha_sq``; loss and noise on the channel turn the conditional
outcome states into displaced, symmetric-variance states with means ``+-c``
along x.  The only property of the signals that enters the analysis is their
overlap, which fixes the sender's coherence ``S``.

Two oracles live here because they are independent of the semidefinite
machinery: the pure-outcome theorem (two distinct, non-orthogonal, pure
conditional states can never come from a separable joint state) and explicit
separable constructions whose feasibility witness is known in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .evm import (
    DataError,
    ModeEVM,
    ProblemData,
    QubitDensity,
    Variant,
    gaussian_mode_evm,
    mode_evm_valid,
)

__all__ = [
    "CoherentScenario",
    "PureOutcomeResult",
    "coherence_from_overlap",
    "build_problem",
    "pure_outcome_entanglement_check",
    "separable_fixture",
]


@dataclass(frozen=True)
class CoherentScenario:
    """Axes of the two-coherent-signal protocol.

    ``alpha_sq`` is the squared signal amplitude at the sender, ``c`` the
    conditional mean displacement at the receiver, ``sigma_sq`` the common
    quadrature variance of both conditionals.  The operational transmission
    ratio is ``c**2 / alpha_sq``.
    """

    alpha_sq: float
    c: float
    sigma_sq: float
    p0: float = 0.5
    p1: float = 0.5
    kappa: float = 2.0
    variant: Variant = Variant.HETERODYNE

    def __post_init__(self):
        if self.alpha_sq < 0:
            raise DataError(f"alpha_sq must be nonnegative, got {self.alpha_sq!r}")
        if self.c < 0:
            raise DataError(f"c must be nonnegative, got {self.c!r}")
        if self.sigma_sq <= 0:
            raise DataError(f"sigma_sq must be positive, got {self.sigma_sq!r}")
        if self.kappa <= 0:
            raise DataError(f"kappa must be positive, got {self.kappa!r}")
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def transmission(self) -> float:
        if self.alpha_sq == 0:
            raise DataError("transmission ratio is undefined at alpha_sq = 0")
        return self.c ** 2 / self.alpha_sq


def coherence_from_overlap(alpha_sq: float, p0: float, p1: float) -> float:
    """Sender coherence sqrt(p0*p1) * exp(-2*alpha_sq).

    The exponential is the overlap of the two coherent signals; only this
    overlap (never the signal states themselves) enters the analysis.
    """
    if alpha_sq < 0:
        raise DataError(f"alpha_sq must be nonnegative, got {alpha_sq!r}")
    if p0 < 0 or p1 < 0:
        raise DataError("probabilities must be nonnegative")
    return math.sqrt(p0 * p1) * math.exp(-2.0 * alpha_sq)


def build_problem(sc: CoherentScenario) -> ProblemData:
    """Measurement record of a coherent-signal run.

    Conditional moment matrices have means ``(+-c, 0)``, symmetric variances
    ``sigma_sq`` and vanishing cross moment; the coherence follows from the
    signal overlap.  Unphysical variances are rejected with the violated
    condition named.
    """
    eta0 = gaussian_mode_evm(sc.c, 0.0, sc.sigma_sq, sc.sigma_sq, 0.0)
    eta1 = gaussian_mode_evm(-sc.c, 0.0, sc.sigma_sq, sc.sigma_sq, 0.0)
    qubit = QubitDensity(sc.p0, sc.p1, coherence_from_overlap(sc.alpha_sq, sc.p0, sc.p1))
    data = ProblemData(qubit=qubit, eta0=eta0, eta1=eta1, kappa=sc.kappa,
                       variant=sc.variant)
    data.validate()
    return data


class PureOutcomeResult(str, Enum):
    ENTANGLED = "entangled"
    NOT_APPLICABLE = "not_applicable"


def pure_outcome_entanglement_check(data: ProblemData,
                                    tol: float = 1e-9) -> PureOutcomeResult:
    """Analytic entanglement oracle for pure conditional outcomes.

    If both conditional states saturate the uncertainty relation
    (det(covariance) <= (kappa/2)^2 + tol, which forces a pure state that is
    fully determined by its moments) and the two states are neither identical
    nor orthogonal (moments differ and |S| > tol), no separable joint state
    is compatible with the record.  Anything else returns NOT_APPLICABLE: the
    theorem is silent and no claim is made.  Homodyne records cannot certify
    the saturation (the cross moment is unmeasured), so they always return
    NOT_APPLICABLE.
    """
    if data.variant is Variant.HOMODYNE:
        return PureOutcomeResult.NOT_APPLICABLE
    bound = (data.kappa / 2.0) ** 2
    for eta in (data.eta0, data.eta1):
        det = float(np.linalg.det(eta.covariance()))
        if det > bound + tol:
            return PureOutcomeResult.NOT_APPLICABLE
    if abs(data.qubit.s) <= tol:
        return PureOutcomeResult.NOT_APPLICABLE
    if np.allclose(data.eta0.mat, data.eta1.mat, rtol=0.0, atol=tol):
        return PureOutcomeResult.NOT_APPLICABLE
    return PureOutcomeResult.ENTANGLED


def separable_fixture(components: Sequence[tuple[float, Sequence[float], ModeEVM]],
                      kappa: float = 2.0):
    """Measurement record of an explicitly separable joint state, with witness.

    Each component is ``(weight, qubit_ket, ModeEVM)`` with a real unit ket;
    the joint EVM is the weighted sum of projector-tensor-moment terms, and
    the free off-diagonal entries it induces are returned as the known
    feasibility witness ``(a, b, c, d, e)``.  By construction the
    separability pencil evaluated at the witness is positive semidefinite.
    """
    if not components:
        raise DataError("at least one component is required")
    weights = np.array([w for w, _, _ in components], dtype=float)
    if np.any(weights < -1e-12):
        raise DataError("component weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise DataError(f"component weights must sum to 1, got {weights.sum()!r}")

    joint = np.zeros((6, 6))
    for weight, ket, eta in components:
        s = np.asarray(ket, dtype=float).reshape(-1)
        if s.shape != (2,):
            raise DataError("qubit kets must be real 2-vectors")
        if abs(np.linalg.norm(s) - 1.0) > 1e-9:
            raise DataError(f"qubit kets must be normalized, got norm {np.linalg.norm(s)!r}")
        ok, margin = mode_evm_valid(eta, kappa)
        if not ok:
            raise DataError(f"component mode EVM is unphysical (margin {margin:.3e})")
        joint += weight * np.kron(np.outer(s, s), eta.mat)

    p0 = float(joint[0, 0])
    p1 = float(joint[3, 3])
    if min(p0, p1) < 1e-10:
        raise DataError("degenerate mixture: one qubit level is never populated, "
                        "so its conditional state is undefined")
    qubit = QubitDensity(p0, p1, float(joint[0, 3]))
    eta0 = ModeEVM(joint[0:3, 0:3] / p0)
    eta1 = ModeEVM(joint[3:6, 3:6] / p1)
    upper = joint[0:3, 3:6]
    witness = np.array([upper[0, 1], upper[0, 2], upper[1, 1], upper[1, 2], upper[2, 2]])
    data = ProblemData(qubit=qubit, eta0=eta0, eta1=eta1, kappa=kappa,
                       variant=Variant.HETERODYNE)
    return data, witness
