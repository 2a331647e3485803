"""Dynamical models of a two-level atom in a quantized standing-wave cavity mode.

Three nested descriptions of the same physical system:

* semiclassical: five real variables (x, p, u, v, z) with a conserved
  excitation number N entering as a parameter,
* Fock pair: position/momentum plus two Bloch triples for the adjacent
  excitation subspaces populated by a Fock-state field and an arbitrary
  internal atomic state,
* ladder: position/momentum plus one Bloch triple per photon-number index
  up to a caller-chosen truncation.

All state types are immutable values and all right-hand sides are pure
functions, so instances can be copied freely between worker processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ControlParams",
    "SemiclassicalState",
    "FockPairState",
    "LadderState",
    "InitialPreparation",
    "SemiclassicalModel",
    "FockPairModel",
    "LadderModel",
    "RunningWaveBlochModel",
    "amplitudes_to_bloch",
    "prepare_initial",
    "reduce_to_semiclassical",
    "semiclassical_rhs",
    "semiclassical_integrals",
    "fock_pair_rhs",
    "fock_pair_integrals",
    "ladder_rhs",
    "ladder_integrals",
    "embed_fock_pair",
]


def _require_finite(name, values):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite components: {values!r}")
    return arr


@dataclass(frozen=True)
class ControlParams:
    """Dimensionless knobs of the atom-cavity system.

    alpha: recoil frequency (kinetic-energy change per photon exchange).
    delta: detuning between field and atomic transition frequencies.
    nbar:  initial photon number of the Fock field state.
    """

    alpha: float
    delta: float
    nbar: int

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")
        if int(self.nbar) != self.nbar or self.nbar < 0:
            raise ValueError(f"nbar must be a non-negative integer, got {self.nbar}")
        object.__setattr__(self, "nbar", int(self.nbar))


@dataclass(frozen=True)
class SemiclassicalState:
    """Phase point (x, p, u, v, z) with conserved excitation number N."""

    x: float
    p: float
    u: float
    v: float
    z: float
    N: float

    def __post_init__(self):
        _require_finite("SemiclassicalState", self.as_array())
        if not (self.N > 0):
            raise ValueError(f"excitation number N must be > 0, got {self.N}")

    def as_array(self):
        return np.array([self.x, self.p, self.u, self.v, self.z], dtype=float)

    @classmethod
    def from_array(cls, y, N):
        x, p, u, v, z = (float(c) for c in y)
        return cls(x=x, p=p, u=u, v=v, z=z, N=N)

    def bloch_norm(self):
        return math.sqrt(self.u**2 + self.v**2 + self.z**2)


@dataclass(frozen=True)
class FockPairState:
    """Phase point of the two-subspace reduction for a Fock field state.

    The lower triple lives in the subspace with nbar excitations, the upper
    one in the subspace with nbar + 1.
    """

    x: float
    p: float
    u_lower: float
    v_lower: float
    z_lower: float
    u_upper: float
    v_upper: float
    z_upper: float

    def __post_init__(self):
        _require_finite("FockPairState", self.as_array())

    def as_array(self):
        return np.array(
            [self.x, self.p,
             self.u_lower, self.v_lower, self.z_lower,
             self.u_upper, self.v_upper, self.z_upper],
            dtype=float,
        )

    @classmethod
    def from_array(cls, y):
        return cls(*(float(c) for c in y))

    def lower_norm(self):
        return math.sqrt(self.u_lower**2 + self.v_lower**2 + self.z_lower**2)

    def upper_norm(self):
        return math.sqrt(self.u_upper**2 + self.v_upper**2 + self.z_upper**2)


@dataclass(frozen=True)
class LadderState:
    """Phase point of the truncated ladder: one Bloch triple per index n."""

    x: float
    p: float
    components: tuple  # ((u_0, v_0, z_0), ..., (u_nmax, v_nmax, z_nmax))
    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")
        if len(self.components) != self.n_max + 1:
            raise ValueError(
                f"expected {self.n_max + 1} Bloch triples, got {len(self.components)}"
            )
        _require_finite("LadderState", self.as_array())

    def as_array(self):
        flat = [self.x, self.p]
        for triple in self.components:
            flat.extend(triple)
        return np.array(flat, dtype=float)

    @classmethod
    def from_array(cls, y, n_max):
        y = np.asarray(y, dtype=float)
        triples = tuple(
            tuple(y[2 + 3 * n: 5 + 3 * n]) for n in range(n_max + 1)
        )
        return cls(x=float(y[0]), p=float(y[1]), components=triples, n_max=n_max)

    def norms(self):
        return np.array([math.sqrt(u * u + v * v + z * z)
                         for (u, v, z) in self.components])


@dataclass(frozen=True)
class InitialPreparation:
    """Injection point and internal atomic state before entering the cavity.

    Amplitudes are taken relatively real and positive, so the atom-field
    quadratures start at u = v = 0 for every subspace.
    """

    x0: float
    p0: float
    z_in: float

    def __post_init__(self):
        _require_finite("InitialPreparation", (self.x0, self.p0, self.z_in))
        if not -1.0 <= self.z_in <= 1.0:
            raise ValueError(f"z_in must lie in [-1, 1], got {self.z_in}")


def amplitudes_to_bloch(a, b_next):
    """Map a pair of probability amplitudes to a Bloch triple (u, v, z)."""
    a = complex(a)
    b_next = complex(b_next)
    if abs(a) ** 2 + abs(b_next) ** 2 > 1.0 + 1e-12:
        raise ValueError("amplitude norms exceed 1")
    cross = a * b_next.conjugate()
    return (2.0 * cross.real, -2.0 * cross.imag, abs(a) ** 2 - abs(b_next) ** 2)


def prepare_initial(prep: InitialPreparation, params: ControlParams) -> FockPairState:
    """Initial Fock-pair state: quadratures zero, inversion split by z_in."""
    return FockPairState(
        x=prep.x0, p=prep.p0,
        u_lower=0.0, v_lower=0.0, z_lower=-(1.0 - prep.z_in) / 2.0,
        u_upper=0.0, v_upper=0.0, z_upper=(1.0 + prep.z_in) / 2.0,
    )


def reduce_to_semiclassical(prep: InitialPreparation,
                            params: ControlParams) -> SemiclassicalState:
    """Collapse an energetic-eigenstate preparation (z_in = +/-1) to the
    five-variable model with N = nbar + 1 (excited) or N = nbar (ground)."""
    if prep.z_in == 1.0:
        n_exc = params.nbar + 1
    elif prep.z_in == -1.0:
        n_exc = params.nbar
    else:
        raise ValueError(
            f"reduction requires z_in = +1 or -1 exactly, got {prep.z_in}"
        )
    if n_exc <= 0:
        raise ValueError("ground preparation with nbar = 0 has no excitations")
    return SemiclassicalState(x=prep.x0, p=prep.p0, u=0.0, v=0.0,
                              z=prep.z_in, N=float(n_exc))


@dataclass(frozen=True)
class SemiclassicalModel:
    """Five-variable factorized model; N enters as a fixed parameter."""

    params: ControlParams
    N: float
    dim: int = field(default=5, init=False)
    labels: tuple = field(default=("x", "p", "u", "v", "z"), init=False)

    def __post_init__(self):
        if not (self.N > 0 and math.isfinite(self.N)):
            raise ValueError(f"N must be finite and > 0, got {self.N}")

    def rhs(self, y):
        y = _require_finite("state", y)
        x, p, u, v, z = y
        a, d, s = self.params.alpha, self.params.delta, math.sqrt(self.N)
        cx, sx = math.cos(x), math.sin(x)
        return np.array([
            a * p,
            -s * u * sx,
            d * v,
            -d * u + 2.0 * s * z * cx,
            -2.0 * s * v * cx,
        ])

    def jacobian(self, y):
        x, p, u, v, z = np.asarray(y, dtype=float)
        a, d, s = self.params.alpha, self.params.delta, math.sqrt(self.N)
        cx, sx = math.cos(x), math.sin(x)
        J = np.zeros((5, 5))
        J[0, 1] = a
        J[1, 0] = -s * u * cx
        J[1, 2] = -s * sx
        J[2, 3] = d
        J[3, 0] = -2.0 * s * z * sx
        J[3, 2] = -d
        J[3, 4] = 2.0 * s * cx
        J[4, 0] = 2.0 * s * v * sx
        J[4, 3] = -2.0 * s * cx
        return J

    def integrals(self, y):
        x, p, u, v, z = np.asarray(y, dtype=float)
        a, d, s = self.params.alpha, self.params.delta, math.sqrt(self.N)
        W = 0.5 * a * p * p - u * s * math.cos(x) - 0.5 * d * z
        R = math.sqrt(u * u + v * v + z * z)
        return {"W": W, "R": R}

    def inversion(self, y):
        return float(y[4])


@dataclass(frozen=True)
class FockPairModel:
    """Eight-variable model for a Fock field plus arbitrary atomic state.

    For nbar = 0 the lower subspace does not exist: its triple must stay
    identically zero and its derivatives are frozen.
    """

    params: ControlParams
    dim: int = field(default=8, init=False)
    labels: tuple = field(
        default=("x", "p", "u_lower", "v_lower", "z_lower",
                 "u_upper", "v_upper", "z_upper"),
        init=False,
    )

    @property
    def coupling_lower(self):
        return math.sqrt(self.params.nbar)

    @property
    def coupling_upper(self):
        return math.sqrt(self.params.nbar + 1)

    def validate_state(self, y):
        y = _require_finite("state", y)
        if self.params.nbar == 0 and np.any(y[2:5] != 0.0):
            raise ValueError(
                "nbar = 0 admits no lower subspace; its triple must be zero"
            )
        return y

    def rhs(self, y):
        y = _require_finite("state", y)
        x, p, u0, v0, z0, u1, v1, z1 = y
        a, d = self.params.alpha, self.params.delta
        c0, c1 = self.coupling_lower, self.coupling_upper
        cx, sx = math.cos(x), math.sin(x)
        out = np.array([
            a * p,
            -(c0 * u0 + c1 * u1) * sx,
            d * v0,
            -d * u0 + 2.0 * c0 * z0 * cx,
            -2.0 * c0 * v0 * cx,
            d * v1,
            -d * u1 + 2.0 * c1 * z1 * cx,
            -2.0 * c1 * v1 * cx,
        ])
        if self.params.nbar == 0:
            out[2:5] = 0.0
        return out

    def jacobian(self, y):
        x, p, u0, v0, z0, u1, v1, z1 = np.asarray(y, dtype=float)
        a, d = self.params.alpha, self.params.delta
        c0, c1 = self.coupling_lower, self.coupling_upper
        cx, sx = math.cos(x), math.sin(x)
        J = np.zeros((8, 8))
        J[0, 1] = a
        J[1, 0] = -(c0 * u0 + c1 * u1) * cx
        J[1, 2] = -c0 * sx
        J[1, 5] = -c1 * sx
        J[2, 3] = d
        J[3, 0] = -2.0 * c0 * z0 * sx
        J[3, 2] = -d
        J[3, 4] = 2.0 * c0 * cx
        J[4, 0] = 2.0 * c0 * v0 * sx
        J[4, 3] = -2.0 * c0 * cx
        J[5, 6] = d
        J[6, 0] = -2.0 * c1 * z1 * sx
        J[6, 5] = -d
        J[6, 7] = 2.0 * c1 * cx
        J[7, 0] = 2.0 * c1 * v1 * sx
        J[7, 6] = -2.0 * c1 * cx
        if self.params.nbar == 0:
            J[2:5, :] = 0.0
        return J

    def integrals(self, y):
        x, p, u0, v0, z0, u1, v1, z1 = np.asarray(y, dtype=float)
        a, d = self.params.alpha, self.params.delta
        c0, c1 = self.coupling_lower, self.coupling_upper
        W = (0.5 * a * p * p
             - (c0 * u0 + c1 * u1) * math.cos(x)
             - 0.5 * d * (z0 + z1))
        R_lower = math.sqrt(u0 * u0 + v0 * v0 + z0 * z0)
        R_upper = math.sqrt(u1 * u1 + v1 * v1 + z1 * z1)
        return {"W": W, "R_lower": R_lower, "R_upper": R_upper}

    def inversion(self, y):
        return float(y[4] + y[7])


@dataclass(frozen=True)
class LadderModel:
    """Truncated ladder of Bloch triples; index n couples with sqrt(n + 1).

    Truncation leakage of the total probability is a diagnostic quantity,
    never renormalized away.
    """

    params: ControlParams
    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")

    @property
    def dim(self):
        return 2 + 3 * (self.n_max + 1)

    @property
    def labels(self):
        names = ["x", "p"]
        for n in range(self.n_max + 1):
            names += [f"u_{n}", f"v_{n}", f"z_{n}"]
        return tuple(names)

    @property
    def couplings(self):
        return np.sqrt(np.arange(1, self.n_max + 2, dtype=float))

    def rhs(self, y):
        y = _require_finite("state", y)
        x, p = y[0], y[1]
        triples = y[2:].reshape(-1, 3)
        u, v, z = triples[:, 0], triples[:, 1], triples[:, 2]
        a, d = self.params.alpha, self.params.delta
        c = self.couplings
        cx, sx = math.cos(x), math.sin(x)
        du = d * v
        dv = -d * u + 2.0 * c * z * cx
        dz = -2.0 * c * v * cx
        out = np.empty_like(y)
        out[0] = a * p
        out[1] = -np.dot(c, u) * sx
        out[2:] = np.column_stack([du, dv, dz]).ravel()
        return out

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        x = y[0]
        triples = y[2:].reshape(-1, 3)
        u, v, z = triples[:, 0], triples[:, 1], triples[:, 2]
        a, d = self.params.alpha, self.params.delta
        c = self.couplings
        cx, sx = math.cos(x), math.sin(x)
        m = self.dim
        J = np.zeros((m, m))
        J[0, 1] = a
        J[1, 0] = -np.dot(c, u) * cx
        for n in range(self.n_max + 1):
            iu, iv, iz = 2 + 3 * n, 3 + 3 * n, 4 + 3 * n
            J[1, iu] = -c[n] * sx
            J[iu, iv] = d
            J[iv, 0] = -2.0 * c[n] * z[n] * sx
            J[iv, iu] = -d
            J[iv, iz] = 2.0 * c[n] * cx
            J[iz, 0] = 2.0 * c[n] * v[n] * sx
            J[iz, iv] = -2.0 * c[n] * cx
        return J

    def integrals(self, y):
        y = np.asarray(y, dtype=float)
        x, p = y[0], y[1]
        triples = y[2:].reshape(-1, 3)
        u, z = triples[:, 0], triples[:, 2]
        a, d = self.params.alpha, self.params.delta
        c = self.couplings
        W = 0.5 * a * p * p - np.dot(c, u) * math.cos(x) - 0.5 * d * np.sum(z)
        norms = np.sqrt(np.sum(triples**2, axis=1))
        return {
            "W": W,
            "R_n": norms,
            "R_total": float(np.sum(norms)),
            "z": float(np.sum(z)),
        }

    def inversion(self, y):
        return float(np.sum(np.asarray(y)[4::3]))


@dataclass(frozen=True)
class RunningWaveBlochModel:
    """Single Bloch triple precessing about a static axis (g, 0, detuning).

    Linear and integrable; serves both as the reduced description of an
    atom resonant with one running wave and as a known-regular reference
    system for exponent estimators.
    """

    detuning: float
    coupling: float
    dim: int = field(default=3, init=False)
    labels: tuple = field(default=("u", "v", "z"), init=False)

    def rhs(self, y):
        y = _require_finite("state", y)
        u, v, z = y
        d, g = self.detuning, self.coupling
        return np.array([d * v, -d * u + g * z, -g * v])

    def jacobian(self, y):
        d, g = self.detuning, self.coupling
        return np.array([
            [0.0, d, 0.0],
            [-d, 0.0, g],
            [0.0, -g, 0.0],
        ])

    def integrals(self, y):
        u, v, z = np.asarray(y, dtype=float)
        return {"R": math.sqrt(u * u + v * v + z * z)}

    def inversion(self, y):
        return float(y[2])


def embed_fock_pair(state: FockPairState, params: ControlParams,
                    n_max: int) -> LadderState:
    """Embed a Fock-pair state at ladder indices nbar - 1 and nbar."""
    if params.nbar == 0:
        raise ValueError("embedding needs nbar >= 1 (two adjacent subspaces)")
    if n_max < params.nbar:
        raise ValueError("n_max too small to hold the upper subspace")
    triples = [(0.0, 0.0, 0.0)] * (n_max + 1)
    triples[params.nbar - 1] = (state.u_lower, state.v_lower, state.z_lower)
    triples[params.nbar] = (state.u_upper, state.v_upper, state.z_upper)
    return LadderState(x=state.x, p=state.p, components=tuple(triples),
                       n_max=n_max)


# Thin functional wrappers mirroring the state types above; each returns the
# derivative (or integrals) as plain floats/arrays.

def semiclassical_rhs(state: SemiclassicalState, params: ControlParams):
    return SemiclassicalModel(params, state.N).rhs(state.as_array())


def semiclassical_integrals(state: SemiclassicalState, params: ControlParams):
    ints = SemiclassicalModel(params, state.N).integrals(state.as_array())
    return ints["W"], ints["R"]


def fock_pair_rhs(state: FockPairState, params: ControlParams):
    model = FockPairModel(params)
    return model.rhs(model.validate_state(state.as_array()))


def fock_pair_integrals(state: FockPairState, params: ControlParams):
    ints = FockPairModel(params).integrals(state.as_array())
    return ints["W"], ints["R_lower"], ints["R_upper"]


def ladder_rhs(state: LadderState, params: ControlParams):
    return LadderModel(params, state.n_max).rhs(state.as_array())


def ladder_integrals(state: LadderState, params: ControlParams):
    return LadderModel(params, state.n_max).integrals(state.as_array())
