"""Value types and elementary algebra for truncated bosonic Fock spaces.

Single-mode states live on occupations n = 0..cutoff. Two-mode states use the
fixed lexicographic layout with mode A major: basis index of (m, n) is
m*(cutoff+1) + n, where m is the occupation of mode A and n of mode B. Every
module in the package shares this layout so outputs are bit-comparable.

All values are immutable after construction and all operations are pure
functions; everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import ShapeError, TruncationError, ValidationError

#: Default per-mode occupation cutoff.
DEFAULT_CUTOFF = 12

#: Default ceiling on probability mass lost to truncation.
TAIL_THRESHOLD = 1e-10

_NORM_TOL = 1e-12
_HERMITIAN_TOL = 1e-10
_EIGENVALUE_FLOOR = -1e-9


@dataclass(frozen=True)
class ComplexAmplitude:
    """A dimensionless complex amplitude stored as a real pair."""

    re: float
    im: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.re) and np.isfinite(self.im)):
            raise ValidationError("complex amplitude must be finite")

    @staticmethod
    def of(value: Union["ComplexAmplitude", complex, float, int]) -> "ComplexAmplitude":
        """Coerce a python number (or pass an existing instance through)."""
        if isinstance(value, ComplexAmplitude):
            return value
        z = complex(value)
        return ComplexAmplitude(z.real, z.imag)

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(self.as_complex())


def _basis_size(cutoff: int, mode_count: int) -> int:
    return (cutoff + 1) ** mode_count


def _check_basis_args(cutoff: int, mode_count: int) -> None:
    if not isinstance(cutoff, (int, np.integer)) or cutoff < 0:
        raise ValidationError(f"cutoff must be a non-negative integer, got {cutoff!r}")
    if mode_count not in (1, 2):
        raise ValidationError(f"mode_count must be 1 or 2, got {mode_count!r}")


class PureState:
    """Complex amplitude vector over a truncated one- or two-mode Fock basis.

    Parameters
    ----------
    amplitudes : array_like of complex
        Length (cutoff+1)**mode_count, in the fixed lexicographic layout.
    cutoff : int
        Largest occupation per mode.
    mode_count : int
        1 or 2.

    Notes
    -----
    The constructor requires a finite, nonzero norm but does not rescale;
    use :meth:`normalized` (the factory functions below always return
    normalized states).
    """

    __slots__ = ("amplitudes", "cutoff", "mode_count")

    def __init__(self, amplitudes, cutoff: int, mode_count: int = 1):
        _check_basis_args(cutoff, mode_count)
        amp = np.asarray(amplitudes, dtype=np.complex128).reshape(-1).copy()
        expected = _basis_size(cutoff, mode_count)
        if amp.shape[0] != expected:
            raise ShapeError(
                f"amplitude vector has length {amp.shape[0]}, "
                f"expected {expected} for cutoff {cutoff} with {mode_count} mode(s)"
            )
        if not np.all(np.isfinite(amp.view(np.float64))):
            raise ValidationError("amplitudes must be finite")
        n = float(np.linalg.norm(amp))
        if not np.isfinite(n) or n <= 0.0:
            raise ValidationError("state norm must be finite and positive")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "cutoff", int(cutoff))
        object.__setattr__(self, "mode_count", int(mode_count))

    def __setattr__(self, name, value):  # immutable value type
        raise AttributeError("PureState is immutable")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def index(self, m: int, n: int | None = None) -> int:
        """Basis index of occupation m (single mode) or (m, n) (two modes)."""
        if self.mode_count == 1:
            if n is not None:
                raise ShapeError("single-mode state takes one occupation")
            if not 0 <= m <= self.cutoff:
                raise ValidationError(f"occupation {m} outside 0..{self.cutoff}")
            return m
        if n is None:
            raise ShapeError("two-mode state takes two occupations")
        if not (0 <= m <= self.cutoff and 0 <= n <= self.cutoff):
            raise ValidationError(f"occupation ({m},{n}) outside 0..{self.cutoff}")
        return m * (self.cutoff + 1) + n

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        return PureState(self.amplitudes / self.norm(), self.cutoff, self.mode_count)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other> (no normalization applied)."""
        self._require_same_basis(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def as_two_mode_matrix(self) -> np.ndarray:
        """Two-mode amplitudes reshaped to (mode A occupation, mode B occupation)."""
        if self.mode_count != 2:
            raise ShapeError("two-mode state required")
        d = self.cutoff + 1
        return self.amplitudes.reshape(d, d)

    def _require_same_basis(self, other: "PureState") -> None:
        if self.cutoff != other.cutoff or self.mode_count != other.mode_count:
            raise ShapeError(
                f"basis mismatch: cutoff {self.cutoff} x{self.mode_count} vs "
                f"cutoff {other.cutoff} x{other.mode_count}"
            )

    def __repr__(self):
        return f"PureState(cutoff={self.cutoff}, mode_count={self.mode_count})"


class DensityOperator:
    """Complex matrix over a truncated Fock basis, for mixed states.

    Construction validates hermiticity (1e-10 entrywise), finiteness, a
    positive finite trace, and eigenvalues >= -1e-9.
    """

    __slots__ = ("matrix", "cutoff", "mode_count")

    def __init__(self, matrix, cutoff: int, mode_count: int = 1):
        _check_basis_args(cutoff, mode_count)
        mat = np.asarray(matrix, dtype=np.complex128).copy()
        expected = _basis_size(cutoff, mode_count)
        if mat.shape != (expected, expected):
            raise ShapeError(
                f"matrix has shape {mat.shape}, expected "
                f"({expected}, {expected}) for cutoff {cutoff} with {mode_count} mode(s)"
            )
        if not np.all(np.isfinite(mat.view(np.float64))):
            raise ValidationError("matrix entries must be finite")
        if np.max(np.abs(mat - mat.conj().T)) > _HERMITIAN_TOL:
            raise ValidationError("matrix is not Hermitian within 1e-10")
        tr = float(np.trace(mat).real)
        if not np.isfinite(tr) or tr <= 0.0:
            raise ValidationError("trace must be finite and positive")
        # smallest eigenvalue may round slightly negative; beyond -1e-9 it is a bug
        low = float(np.linalg.eigvalsh(mat)[0])
        if low < _EIGENVALUE_FLOOR:
            raise ValidationError(f"matrix has eigenvalue {low:.3e} below -1e-9")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "cutoff", int(cutoff))
        object.__setattr__(self, "mode_count", int(mode_count))

    def __setattr__(self, name, value):
        raise AttributeError("DensityOperator is immutable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        return DensityOperator(self.matrix / self.trace(), self.cutoff, self.mode_count)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def __repr__(self):
        return f"DensityOperator(cutoff={self.cutoff}, mode_count={self.mode_count})"


def coherent_state(
    alpha: Union[ComplexAmplitude, complex, float],
    cutoff: int = DEFAULT_CUTOFF,
    tail_threshold: float = TAIL_THRESHOLD,
) -> PureState:
    """Truncated coherent state with amplitude alpha, renormalized.

    Amplitudes follow c_n = exp(-|alpha|^2/2) alpha^n / sqrt(n!) up to the
    cutoff. The discarded tail mass is the exact Poisson tail
    P(N > cutoff; |alpha|^2); construction fails if it exceeds
    ``tail_threshold``.

    Raises
    ------
    TruncationError
        If the cutoff is too small for the requested tail mass.
    """
    a = ComplexAmplitude.of(alpha).as_complex()
    if cutoff < 1:
        raise ValidationError("coherent_state requires cutoff >= 1")
    tail = float(poisson.sf(cutoff, abs(a) ** 2))
    if tail > tail_threshold:
        raise TruncationError(
            f"coherent tail mass {tail:.3e} beyond cutoff {cutoff} exceeds "
            f"threshold {tail_threshold:.1e}",
            tail_mass=tail,
            threshold=tail_threshold,
        )
    n = np.arange(cutoff + 1)
    if a == 0:
        amp = np.zeros(cutoff + 1, dtype=np.complex128)
        amp[0] = 1.0
        return PureState(amp, cutoff, 1)
    # log-domain magnitudes avoid overflow in alpha^n / sqrt(n!)
    log_mag = n * np.log(abs(a)) - 0.5 * gammaln(n + 1.0) - abs(a) ** 2 / 2.0
    amp = np.exp(log_mag) * np.exp(1j * n * np.angle(a))
    amp /= np.linalg.norm(amp)
    return PureState(amp, cutoff, 1)


def number_state(n: int, cutoff: int) -> PureState:
    """Fock state |n> on a single mode with the given cutoff."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValidationError(f"occupation must be a non-negative integer, got {n!r}")
    if n > cutoff:
        raise ValidationError(f"occupation {n} exceeds cutoff {cutoff}")
    amp = np.zeros(cutoff + 1, dtype=np.complex128)
    amp[n] = 1.0
    return PureState(amp, cutoff, 1)


def tensor_product(a: PureState, b: PureState) -> PureState:
    """Two-mode product state; a supplies mode A, b supplies mode B."""
    if a.mode_count != 1 or b.mode_count != 1:
        raise ShapeError("tensor_product takes two single-mode states")
    if a.cutoff != b.cutoff:
        raise ShapeError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    return PureState(np.kron(a.amplitudes, b.amplitudes), a.cutoff, 2)


def fidelity(a: Union[PureState, DensityOperator], b: PureState) -> float:
    """|<a|b>|^2 for pure a, <b|rho|b> for mixed a; inputs normalized first."""
    if not isinstance(b, PureState):
        raise ValidationError("second argument must be a pure state")
    if isinstance(a, PureState):
        if a.cutoff != b.cutoff or a.mode_count != b.mode_count:
            raise ShapeError("fidelity requires a common basis")
        an, bn = a.norm(), b.norm()
        if an < 1e-300 or bn < 1e-300:
            raise ValidationError("fidelity of a zero-norm state is undefined")
        val = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 / (an * bn) ** 2
    elif isinstance(a, DensityOperator):
        if a.cutoff != b.cutoff or a.mode_count != b.mode_count:
            raise ShapeError("fidelity requires a common basis")
        bn = b.norm()
        if bn < 1e-300:
            raise ValidationError("fidelity of a zero-norm state is undefined")
        v = b.amplitudes / bn
        val = float(np.real(np.vdot(v, a.matrix @ v))) / a.trace()
    else:
        raise ValidationError("first argument must be a PureState or DensityOperator")
    # clamp floating-point spill just outside [0, 1]
    return float(min(max(val, 0.0), 1.0))


def to_density(s: PureState) -> DensityOperator:
    """Projector |s><s| of a normalized copy of s."""
    v = s.amplitudes / s.norm()
    return DensityOperator(np.outer(v, v.conj()), s.cutoff, s.mode_count)


def mix(
    weights: Sequence[float],
    operators: Sequence[Union[DensityOperator, PureState]],
) -> DensityOperator:
    """Convex mixture sum_i w_i rho_i.

    Weights must be non-negative and sum to 1 within 1e-12. Pure states are
    accepted and converted to their projectors.
    """
    if len(weights) != len(operators) or not operators:
        raise ValidationError("mix requires matching, nonempty weights and operators")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValidationError("mixture weights must be non-negative")
    if abs(float(w.sum()) - 1.0) > 1e-12:
        raise ValidationError(f"mixture weights sum to {w.sum()!r}, not 1")
    mats = []
    first = operators[0]
    for op in operators:
        rho = to_density(op) if isinstance(op, PureState) else op
        if rho.cutoff != first.cutoff or rho.mode_count != first.mode_count:
            raise ShapeError("all mixture components must share a basis")
        mats.append(rho.matrix / rho.trace())
    total = sum(wi * mi for wi, mi in zip(w, mats))
    return DensityOperator(total, first.cutoff, first.mode_count)
