"""Expectation-value-matrix model of a qubit--mode system.

The measurable record of a two-signal prepare-and-measure run consists of the
a priori probabilities ``p0, p1``, the sender's off-diagonal coherence ``S``,
and the receiver's conditional moment matrices ``eta0, eta1`` (first and
second quadrature moments, arranged in the basis ``(1, x, y)``).  A joint
state consistent with the record has a 6x6 bipartite expectation value matrix
whose diagonal blocks are ``p0*eta0`` and ``p1*eta1`` and whose off-diagonal
block carries five unknown entries besides the fixed corner ``S``.

Compatibility with a separable joint state requires the pair of linear matrix
inequalities

    EVM(x) + (i*kappa/2) * rho_A (x) J  >= 0    and its conjugate,

where ``J`` is the antisymmetric 3x3 form encoding ``[x, y] = i*kappa`` and
``rho_A`` is the sender's 2x2 reduced state.  This module builds that affine
matrix family (stacked and embedded as one real symmetric 24x24 pencil); the
companion :mod:`evmsep.solver` decides its feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import min_eig, real_embedding

__all__ = [
    "Variant",
    "DataError",
    "QubitDensity",
    "ModeEVM",
    "ProblemData",
    "LmiSystem",
    "ValidityCheck",
    "commutator_form",
    "gaussian_mode_evm",
    "mode_evm_valid",
    "free_param_names",
    "assemble_bipartite_evm",
    "conditional_mode_evm",
    "separability_lmi",
    "partial_transpose_qubit",
    "symmetrize",
]


class Variant(str, Enum):
    """Which second moments the receiver measured.

    Heterodyne yields the full set including the symmetrized cross moment;
    homodyne of two conjugate quadratures leaves the cross moment unmeasured,
    so it becomes one more unknown per conditional state.
    """

    HETERODYNE = "heterodyne"
    HOMODYNE = "homodyne"


class DataError(ValueError):
    """A measurement record violates a structural or physicality constraint."""


def commutator_form() -> np.ndarray:
    """The antisymmetric 3x3 constant encoding the quadrature commutator.

    In the ``(1, x, y)`` moment basis the only nonzero entries sit in the
    quadrature corner: ``J[1, 2] = -1``, ``J[2, 1] = +1``.  Callers scale by
    the ambient commutator constant kappa.
    """
    j = np.zeros((3, 3))
    j[1, 2] = -1.0
    j[2, 1] = 1.0
    return j


@dataclass(frozen=True)
class QubitDensity:
    """Sender's reduced 2x2 state: diagonal ``(p0, p1)``, real coherence ``s``.

    The basis phase is chosen so the off-diagonal element is real, which is
    always possible for a qubit.
    """

    p0: float
    p1: float
    s: float

    def __post_init__(self):
        for name in ("p0", "p1", "s"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise DataError(f"{name}: must be finite, got {val!r}")
        if self.p0 < -1e-12 or self.p1 < -1e-12:
            raise DataError(f"p0, p1 must be nonnegative (got {self.p0!r}, {self.p1!r})")
        if abs(self.p0 + self.p1 - 1.0) > 1e-9:
            raise DataError(f"p0+p1 must equal 1, got {self.p0 + self.p1!r}")
        if self.s * self.s > self.p0 * self.p1 + 1e-12:
            raise DataError(
                f"s^2 <= p0*p1 violated (s={self.s!r}, p0*p1={self.p0 * self.p1!r}): "
                "the 2x2 reduced state would not be positive"
            )

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.p0, self.s], [self.s, self.p1]])


@dataclass(frozen=True, eq=False)
class ModeEVM:
    """3x3 moment matrix of a single mode in the ``(1, x, y)`` basis.

    Layout::

        [[ 1,     <x>,    <y>   ],
         [ <x>,   <x^2>,  <S(xy)>],
         [ <y>,   <S(xy)>, <y^2> ]]

    Construction enforces exact symmetry and unit normalization; physicality
    (the uncertainty condition) is a separate check, see
    :func:`mode_evm_valid`.
    """

    mat: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=float)
        if m.shape != (3, 3):
            raise DataError(f"mode EVM must be 3x3, got shape {m.shape!r}")
        if not np.all(np.isfinite(m)):
            raise DataError("mode EVM contains non-finite entries")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-9 * max(1.0, float(np.max(np.abs(m))))):
            raise DataError("mode EVM must be symmetric")
        m = (m + m.T) / 2.0
        if abs(m[0, 0] - 1.0) > 1e-9:
            raise DataError(f"mode EVM entry (0,0) must be 1 (normalized state), got {m[0, 0]!r}")
        m[0, 0] = 1.0
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def mean_x(self) -> float:
        return float(self.mat[0, 1])

    @property
    def mean_y(self) -> float:
        return float(self.mat[0, 2])

    @property
    def var_x(self) -> float:
        return float(self.mat[1, 1] - self.mat[0, 1] ** 2)

    @property
    def var_y(self) -> float:
        return float(self.mat[2, 2] - self.mat[0, 2] ** 2)

    @property
    def cov_xy(self) -> float:
        return float(self.mat[1, 2] - self.mat[0, 1] * self.mat[0, 2])

    def covariance(self) -> np.ndarray:
        """Central second moments as a 2x2 matrix."""
        return np.array([[self.var_x, self.cov_xy], [self.cov_xy, self.var_y]])


def gaussian_mode_evm(mean_x: float, mean_y: float, var_x: float, var_y: float,
                      cov: float = 0.0) -> ModeEVM:
    """Moment matrix from first moments and central second moments.

    Second raw moments are covariance plus mean products.  Physicality is
    not enforced here; run :func:`mode_evm_valid` on the result.
    """
    if var_x <= 0 or var_y <= 0:
        raise DataError(f"variances must be positive (got var_x={var_x!r}, var_y={var_y!r})")
    xx = var_x + mean_x * mean_x
    yy = var_y + mean_y * mean_y
    sxy = cov + mean_x * mean_y
    return ModeEVM(np.array([
        [1.0, mean_x, mean_y],
        [mean_x, xx, sxy],
        [mean_y, sxy, yy],
    ]))


class ValidityCheck(NamedTuple):
    ok: bool
    margin: float


def mode_evm_valid(eta: ModeEVM, kappa: float, tol: float = 1e-9) -> ValidityCheck:
    """Uncertainty test ``eta + (i*kappa/2) * J >= 0`` for the ambient kappa.

    ``margin`` is the smallest eigenvalue of that Hermitian matrix; ``ok``
    allows a ``-tol`` slack.  Passing this condition implies the conjugate
    condition and plain positivity of ``eta`` as well.
    """
    if kappa <= 0:
        raise DataError(f"kappa must be positive, got {kappa!r}")
    h = eta.mat + 0.5j * kappa * commutator_form()
    margin = min_eig(h)
    return ValidityCheck(margin >= -tol, margin)


def _homodyne_checkable(eta: ModeEVM) -> ModeEVM:
    # With the cross moment unmeasured, physicality means *some* value makes
    # the test pass; zero central cross moment maximizes the margin, so
    # testing that single completion decides existence.
    m = np.array(eta.mat)
    m[1, 2] = m[2, 1] = eta.mean_x * eta.mean_y
    return ModeEVM(m)


@dataclass(frozen=True, eq=False)
class ProblemData:
    """Complete measurable record of a two-signal prepare-and-measure run."""

    qubit: QubitDensity
    eta0: ModeEVM
    eta1: ModeEVM
    kappa: float = 1.0
    variant: Variant = Variant.HETERODYNE

    def __post_init__(self):
        if self.kappa <= 0 or not np.isfinite(self.kappa):
            raise DataError(f"kappa must be a positive real, got {self.kappa!r}")
        object.__setattr__(self, "variant", Variant(self.variant))

    def validate(self, tol: float = 1e-9) -> None:
        """Raise :class:`DataError` naming the violated condition if either
        conditional moment matrix is unphysical under the ambient kappa.

        In the homodyne variant the stored cross moments are ignored and
        physicality means a valid completion exists.
        """
        for name, eta in (("eta0", self.eta0), ("eta1", self.eta1)):
            checked = eta if self.variant is Variant.HETERODYNE else _homodyne_checkable(eta)
            ok, margin = mode_evm_valid(checked, self.kappa, tol)
            if not ok:
                raise DataError(
                    f"{name} violates the uncertainty condition "
                    f"eta + (i*kappa/2)*J >= 0 (margin {margin:.6e} at kappa={self.kappa})"
                )


_PARAM_BLOCK_POSITIONS = {
    # Positions of each free off-diagonal-block unknown inside the 3x3 block;
    # 'a', 'b', 'd' appear twice because the underlying operator matrix is
    # symmetric, so both entries are expectations of the same operator.
    "a": ((0, 1), (1, 0)),
    "b": ((0, 2), (2, 0)),
    "c": ((1, 1),),
    "d": ((1, 2), (2, 1)),
    "e": ((2, 2),),
}
_OFFBLOCK_ORDER = ("a", "b", "c", "d", "e")


def free_param_names(variant: Variant, complex_params: bool = False,
                     tied_f: bool = False) -> tuple[str, ...]:
    """Names of the free parameters, in solver order.

    Real mode: ``(a, b, c, d, e)`` plus, under homodyne, the unknown cross
    moments ``(f0, f1)`` (or a single tied ``f``).  Complex mode appends the
    imaginary parts ``*_im`` of the off-diagonal-block unknowns; the cross
    moments stay real because the diagonal blocks must remain Hermitian.
    """
    names = list(_OFFBLOCK_ORDER)
    if complex_params:
        names += [f"{p}_im" for p in _OFFBLOCK_ORDER]
    variant = Variant(variant)
    if variant is Variant.HOMODYNE:
        names += ["f"] if tied_f else ["f0", "f1"]
    return tuple(names)


def _offblock_patterns(complex_params: bool):
    """6x6 Hermitian indicator pattern per off-diagonal-block unknown."""
    patterns = []
    for p in _OFFBLOCK_ORDER:
        mat = np.zeros((6, 6))
        for (u, v) in _PARAM_BLOCK_POSITIONS[p]:
            mat[u, 3 + v] = 1.0
            mat[3 + v, u] = 1.0
        patterns.append((p, mat))
    if complex_params:
        for p in _OFFBLOCK_ORDER:
            mat = np.zeros((6, 6), dtype=complex)
            for (u, v) in _PARAM_BLOCK_POSITIONS[p]:
                mat[u, 3 + v] = 1.0j
                mat[3 + v, u] = -1.0j
            patterns.append((f"{p}_im", mat))
    return patterns


def _cross_moment_patterns(variant: Variant, tied_f: bool):
    f0 = np.zeros((6, 6))
    f0[1, 2] = f0[2, 1] = 1.0
    f1 = np.zeros((6, 6))
    f1[4, 5] = f1[5, 4] = 1.0
    if Variant(variant) is not Variant.HOMODYNE:
        return []
    if tied_f:
        return [("f", f0 + f1)]
    return [("f0", f0), ("f1", f1)]


def _constant_evm(data: ProblemData) -> np.ndarray:
    """The data-determined part of the bipartite EVM (free entries zeroed)."""
    m = np.zeros((6, 6))
    m[0:3, 0:3] = data.qubit.p0 * data.eta0.mat
    m[3:6, 3:6] = data.qubit.p1 * data.eta1.mat
    m[0, 3] = m[3, 0] = data.qubit.s
    if data.variant is Variant.HOMODYNE:
        m[1, 2] = m[2, 1] = 0.0
        m[4, 5] = m[5, 4] = 0.0
    return m


def assemble_bipartite_evm(data: ProblemData, params: Sequence[float],
                           complex_params: bool = False,
                           tied_f: bool = False) -> np.ndarray:
    """Fill the free entries of the 6x6 bipartite EVM with ``params``.

    Parameter order follows :func:`free_param_names`.  The corner entry of
    the off-diagonal block is always the fixed coherence ``s``; the diagonal
    blocks are ``p0*eta0`` and ``p1*eta1`` except that under homodyne the
    unmeasured cross-moment entries are taken from the parameters instead of
    the stored matrices.  Real parameters give a real symmetric result;
    complex mode returns a complex Hermitian matrix.
    """
    names = free_param_names(data.variant, complex_params, tied_f)
    params = np.asarray(params, dtype=float)
    if params.shape != (len(names),):
        raise DataError(
            f"expected {len(names)} parameters {names} for variant "
            f"{data.variant.value} (complex_params={complex_params}, tied_f={tied_f}), "
            f"got shape {params.shape!r}"
        )
    patterns = _offblock_patterns(complex_params) + _cross_moment_patterns(data.variant, tied_f)
    out = _constant_evm(data).astype(complex if complex_params else float)
    for value, (_, pat) in zip(params, patterns):
        out = out + value * pat
    return out


def conditional_mode_evm(evm: np.ndarray, qubit_ket: Sequence[complex],
                         prob_tol: float = 1e-12) -> ModeEVM:
    """Mode EVM conditioned on projecting the qubit onto ``qubit_ket``.

    Contracts the qubit index of the 6x6 bipartite EVM with the rank-one
    projector and renormalizes by the detection probability, so the result
    satisfies the unit-normalization invariant of :class:`ModeEVM`.
    """
    m = np.asarray(evm)
    if m.shape != (6, 6):
        raise DataError(f"bipartite EVM must be 6x6, got {m.shape!r}")
    s = np.asarray(qubit_ket, dtype=complex).reshape(-1)
    if s.shape != (2,):
        raise DataError("qubit_ket must be a 2-vector")
    nrm = float(np.linalg.norm(s))
    if abs(nrm - 1.0) > 1e-9:
        raise DataError(f"qubit_ket must be normalized, got norm {nrm!r}")
    out = np.zeros((3, 3), dtype=complex)
    for i in range(2):
        for j in range(2):
            out += np.conj(s[i]) * s[j] * m[3 * i:3 * i + 3, 3 * j:3 * j + 3]
    prob = out[0, 0].real
    if prob <= prob_tol:
        raise DataError(f"projector detects the state with probability {prob!r}; "
                        "conditional EVM is undefined")
    out = out / prob
    if np.max(np.abs(out.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(out.real)))):
        raise DataError("conditional EVM is not real; the completion carries complex "
                        "cross correlations")
    return ModeEVM(out.real)


def _stacked_embedding(h_plus: np.ndarray, h_minus: np.ndarray) -> np.ndarray:
    e_plus = real_embedding(h_plus)
    e_minus = real_embedding(h_minus)
    out = np.zeros((24, 24))
    out[0:12, 0:12] = e_plus
    out[12:24, 12:24] = e_minus
    return out


@dataclass(frozen=True, eq=False)
class LmiSystem:
    """Affine family ``F(x) = f0 + sum_k x_k * fs[k]`` of real symmetric matrices."""

    f0: np.ndarray
    fs: tuple[np.ndarray, ...]
    param_names: tuple[str, ...] = ()

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=float)
        if f0.ndim != 2 or f0.shape[0] != f0.shape[1]:
            raise ValueError(f"f0 must be square, got shape {f0.shape!r}")
        if not np.all(np.isfinite(f0)):
            raise ValueError("f0 contains non-finite entries")
        if not np.allclose(f0, f0.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.max(np.abs(f0))))):
            raise ValueError("f0 must be symmetric")
        fs = tuple(np.asarray(f, dtype=float) for f in self.fs)
        for k, f in enumerate(fs):
            if f.shape != f0.shape:
                raise ValueError(f"fs[{k}] has shape {f.shape!r}, expected {f0.shape!r}")
            if not np.allclose(f, f.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.max(np.abs(f))))):
                raise ValueError(f"fs[{k}] must be symmetric")
        names = tuple(self.param_names) or tuple(f"x{k}" for k in range(len(fs)))
        if len(names) != len(fs):
            raise ValueError("param_names length must match the number of fs")
        object.__setattr__(self, "f0", (f0 + f0.T) / 2.0)
        object.__setattr__(self, "fs", tuple((f + f.T) / 2.0 for f in fs))
        object.__setattr__(self, "param_names", names)

    @property
    def dim(self) -> int:
        return self.f0.shape[0]

    @property
    def dim_x(self) -> int:
        return len(self.fs)

    def evaluate(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim_x,):
            raise ValueError(f"expected {self.dim_x} parameters, got shape {x.shape!r}")
        out = np.array(self.f0)
        for xk, fk in zip(x, self.fs):
            out += xk * fk
        return out


def separability_lmi(data: ProblemData, complex_params: bool = False,
                     tied_f: bool = False, tol: float = 1e-9) -> LmiSystem:
    """Build the separability feasibility pencil for a measurement record.

    ``F(x)`` is the real embedding of the stacked pair of Hermitian
    conditions ``EVM(x) +- (i*kappa/2) * rho_A (x) J``; it is positive
    semidefinite for some ``x`` exactly when both conditions hold, which
    every separable joint state's EVM must satisfy.  The data enter the
    constant term only; each free parameter contributes its fixed embedded
    indicator pattern.
    """
    data.validate(tol)
    const = _constant_evm(data)
    shift = 0.5 * data.kappa * np.kron(data.qubit.matrix, commutator_form())
    f0 = _stacked_embedding(const + 1j * shift, const - 1j * shift)
    names = []
    fs = []
    patterns = _offblock_patterns(complex_params) + _cross_moment_patterns(data.variant, tied_f)
    for name, pat in patterns:
        names.append(name)
        fs.append(_stacked_embedding(pat, pat))
    return LmiSystem(f0=f0, fs=tuple(fs), param_names=tuple(names))


def partial_transpose_qubit(evm: np.ndarray) -> np.ndarray:
    """Transpose the qubit index of a 6x6 bipartite EVM.

    This swaps the two off-diagonal 3x3 blocks and leaves the diagonal
    blocks untouched; for a real symmetric EVM it coincides with the full
    transpose, so symmetric completions are invariant.
    """
    m = np.asarray(evm)
    if m.shape != (6, 6):
        raise DataError(f"bipartite EVM must be 6x6, got {m.shape!r}")
    out = np.array(m)
    out[0:3, 3:6] = m[3:6, 0:3]
    out[3:6, 0:3] = m[0:3, 3:6]
    return out


def symmetrize(evm: np.ndarray) -> np.ndarray:
    """Average a bipartite EVM with its transpose.

    For a Hermitian input this equals the (real) entrywise real part, and it
    preserves both separability conditions because the commutator form is
    antisymmetric while the data blocks are symmetric.
    """
    m = np.asarray(evm)
    out = (m + m.T) / 2.0
    if np.iscomplexobj(out):
        scale = max(1.0, float(np.max(np.abs(out))))
        if np.max(np.abs(out.imag)) > 1e-10 * scale:
            raise DataError("symmetrization of a Hermitian EVM should be real")
        out = out.real
    return out
