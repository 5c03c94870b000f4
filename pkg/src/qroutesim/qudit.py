"""Dense linear algebra for mixed-dimension qudit registers.

A register is a product of sites, each of dimension 2 or 3.  Basis labels
are digit strings read most-significant-first: in ``|1100⟩`` over sites
(Q_I, Q_C, Q_L, Q_R), site 0 (Q_I) holds the leading digit.  This matches
the ket strings used throughout the route/transfer algebra, and it is the
one place in the package where the ordering convention is fixed.

Registers are value-like: every operation returns a new register and never
mutates its input, so independent sweep points can be evaluated
concurrently without locking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllDiscarded, InvalidLabel, RequiresMixed, ShapeError


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances for the algebraic validity checks."""

    atol: float = 1e-10
    trace_atol: float = 1e-10
    eig_floor: float = -1e-9
    discard_floor: float = 1e-12


DEFAULT_POLICY = NumericPolicy()


@dataclass(frozen=True)
class QuditRegister:
    """State of a mixed-dimension register, pure (vector) or mixed (matrix).

    ``data`` has length ``prod(dims)`` for a pure state or that shape squared
    for a density matrix.
    """

    dims: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    def density(self) -> np.ndarray:
        """Density matrix of the state regardless of representation."""
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> "QuditRegister":
        if self.is_pure:
            return QuditRegister(self.dims, np.outer(self.data, self.data.conj()))
        return self

    def validate(self, policy: NumericPolicy = DEFAULT_POLICY) -> None:
        """Raise ShapeError if norm/trace/Hermiticity/positivity are violated."""
        if self.is_pure:
            norm = float(np.vdot(self.data, self.data).real)
            if abs(norm - 1.0) > policy.trace_atol:
                raise ShapeError(f"pure state norm {norm} != 1")
        else:
            rho = self.data
            if abs(np.trace(rho).real - 1.0) > policy.trace_atol:
                raise ShapeError(f"trace {np.trace(rho)} != 1")
            if np.abs(rho - rho.conj().T).max() > policy.atol:
                raise ShapeError("density matrix not Hermitian")
            if np.linalg.eigvalsh(rho).min() < policy.eig_floor:
                raise ShapeError("density matrix not positive semidefinite")


def digits_of(index: int, dims: tuple[int, ...] | list[int]) -> tuple[int, ...]:
    """Mixed-radix digits of a flat basis index, most significant first."""
    out = []
    for d in reversed(dims):
        out.append(index % d)
        index //= d
    return tuple(reversed(out))


def index_of(digits, dims) -> int:
    idx = 0
    for dig, d in zip(digits, dims):
        idx = idx * d + dig
    return idx


def new_basis_state(dims, label: str) -> QuditRegister:
    """Pure computational basis state from a digit string like ``"1100"``."""
    dims = tuple(int(d) for d in dims)
    if len(label) != len(dims):
        raise InvalidLabel(f"label {label!r} has {len(label)} digits, register has {len(dims)} sites")
    digits = []
    for pos, ch in enumerate(label):
        if not ch.isdigit() or int(ch) >= dims[pos]:
            raise InvalidLabel(f"digit {ch!r} at site {pos} exceeds dimension {dims[pos]}")
        digits.append(int(ch))
    vec = np.zeros(int(np.prod(dims)), dtype=complex)
    vec[index_of(digits, dims)] = 1.0
    return QuditRegister(dims, vec)


def from_site_states(dims, site_vectors) -> QuditRegister:
    """Pure product state from per-site amplitude vectors."""
    dims = tuple(int(d) for d in dims)
    vec = np.array([1.0], dtype=complex)
    for d, sv in zip(dims, site_vectors):
        sv = np.asarray(sv, dtype=complex)
        if sv.shape != (d,):
            raise ShapeError(f"site vector shape {sv.shape} != ({d},)")
        vec = np.kron(vec, sv)
    vec = vec / np.linalg.norm(vec)
    return QuditRegister(dims, vec)


def _check_sites(reg: QuditRegister, sites) -> list[int]:
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ShapeError(f"duplicate sites in {sites}")
    for s in sites:
        if not 0 <= s < reg.n_sites:
            raise ShapeError(f"site {s} out of range for {reg.n_sites} sites")
    return sites


def _contract_axes(tensor: np.ndarray, gate_t: np.ndarray, target_axes) -> np.ndarray:
    """Contract a reshaped k-site operator into the given tensor axes,
    restoring the original axis order afterwards."""
    k = len(target_axes)
    nd = tensor.ndim
    tensor = np.tensordot(gate_t, tensor, axes=(list(range(k, 2 * k)), target_axes))
    rest = [a for a in range(nd) if a not in target_axes]
    order = [0] * nd
    for i, s in enumerate(target_axes):
        order[s] = i
    for i, r in enumerate(rest):
        order[r] = k + i
    return tensor.transpose(order)


def apply_gate(state: QuditRegister, gate: np.ndarray, sites) -> QuditRegister:
    """Apply a unitary (or general operator) on the given sites.

    ``gate`` is indexed in the sites' own order: for ``sites=[a, b]`` the
    row/column labels are ``|x_a x_b⟩`` with x_a the leading digit.
    """
    sites = _check_sites(state, sites)
    site_dims = [state.dims[s] for s in sites]
    dg = int(np.prod(site_dims))
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (dg, dg):
        raise ShapeError(f"gate shape {gate.shape} does not match sites {sites} (dim {dg})")
    gate_t = gate.reshape(site_dims + site_dims)
    n = state.n_sites
    if state.is_pure:
        tensor = _contract_axes(state.data.reshape(state.dims), gate_t, sites)
        return QuditRegister(state.dims, tensor.reshape(-1))
    # rho -> U rho U†: contract ket axes with U, bra axes with U*
    tensor = state.data.reshape(list(state.dims) * 2)
    tensor = _contract_axes(tensor, gate_t, sites)
    tensor = _contract_axes(tensor, gate_t.conj(), [s + n for s in sites])
    return QuditRegister(state.dims, tensor.reshape(state.dim, state.dim))


def populations(state: QuditRegister) -> np.ndarray:
    """Probabilities over the full computational basis (sum to 1)."""
    if state.is_pure:
        p = np.abs(state.data) ** 2
    else:
        p = np.real(np.diag(state.data)).copy()
        p[p < 0] = 0.0
    return p


def marginal_population(state: QuditRegister, site: int, digit: int) -> float:
    """Probability of finding ``digit`` at ``site``."""
    p = populations(state)
    strides = state.dims
    total = 0.0
    for idx, prob in enumerate(p):
        if digits_of(idx, strides)[site] == digit:
            total += prob
    return float(total)


def postselect(
    state: QuditRegister,
    site: int,
    forbidden: int,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> tuple[QuditRegister, float]:
    """Project out every component carrying ``forbidden`` at ``site``.

    Returns the renormalized register and the kept probability.  Raises
    AllDiscarded when the kept weight is numerically zero.
    """
    _check_sites(state, [site])
    keep = np.array(
        [digits_of(i, state.dims)[site] != forbidden for i in range(state.dim)]
    )
    if state.is_pure:
        vec = state.data * keep
        kept = float(np.vdot(vec, vec).real)
        if kept < policy.discard_floor:
            raise AllDiscarded(f"post-selection on site {site} kept {kept}")
        return QuditRegister(state.dims, vec / np.sqrt(kept)), kept
    rho = state.data * np.outer(keep, keep)
    kept = float(np.trace(rho).real)
    if kept < policy.discard_floor:
        raise AllDiscarded(f"post-selection on site {site} kept {kept}")
    return QuditRegister(state.dims, rho / kept), kept


def partial_trace(state: QuditRegister, keep) -> QuditRegister:
    """Reduced density matrix over ``keep`` (result site order follows ``keep``)."""
    keep = _check_sites(state, list(keep))
    if not keep:
        raise ShapeError("keep must be nonempty")
    n = state.n_sites
    rho = state.density().reshape(list(state.dims) * 2)
    traced = [a for a in range(n) if a not in keep]
    # contract bra/ket axes of each traced site, highest axis first
    for a in sorted(traced, reverse=True):
        rho = np.trace(rho, axis1=a, axis2=a + rho.ndim // 2)
    # remaining axes follow original site order; permute to requested order
    remaining = sorted(keep)
    perm = [remaining.index(s) for s in keep]
    half = rho.ndim // 2
    rho = rho.transpose(perm + [p + half for p in perm])
    d = int(np.prod([state.dims[s] for s in keep]))
    return QuditRegister(tuple(state.dims[s] for s in keep), rho.reshape(d, d))


def fidelity_to_pure(state: QuditRegister, target: np.ndarray) -> float:
    """⟨Ψ|ρ|Ψ⟩ against a pure target vector."""
    target = np.asarray(target, dtype=complex)
    if state.is_pure:
        return float(abs(np.vdot(target, state.data)) ** 2)
    return float(np.real(target.conj() @ state.data @ target))


# --- single-site channels -------------------------------------------------


@dataclass(frozen=True)
class ChannelMap:
    """Transfer matrix acting on a vectorized single-site density matrix.

    The vectorization is row-major: (ρ00, ρ01, ..., ρ_{d-1,d-1}).
    """

    site: int
    transfer: np.ndarray = field(repr=False)

    @property
    def site_dim(self) -> int:
        return int(round(np.sqrt(self.transfer.shape[0])))


def choi_matrix(transfer: np.ndarray) -> np.ndarray:
    """Choi matrix C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) of a transfer matrix."""
    d = int(round(np.sqrt(transfer.shape[0])))
    C = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            out = (transfer @ unit.reshape(-1)).reshape(d, d)
            C += np.kron(unit, out)
    return C


def is_cptp(transfer: np.ndarray, eig_floor: float = -1e-9, tp_atol: float = 1e-9) -> bool:
    """Complete positivity (Choi ⪰ 0) and trace preservation."""
    d = int(round(np.sqrt(transfer.shape[0])))
    C = choi_matrix(transfer)
    if np.linalg.eigvalsh((C + C.conj().T) / 2).min() < eig_floor:
        return False
    for j in range(d):
        for k in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[j, k] = 1.0
            out = (transfer @ unit.reshape(-1)).reshape(d, d)
            want = 1.0 if j == k else 0.0
            if abs(np.trace(out) - want) > tp_atol:
                return False
    return True


def apply_channel(state: QuditRegister, channel: ChannelMap) -> QuditRegister:
    """Apply a single-site transfer matrix to a density-matrix register."""
    if state.is_pure:
        raise RequiresMixed("channels act on density matrices; call to_mixed() first")
    site = _check_sites(state, [channel.site])[0]
    d = state.dims[site]
    if channel.transfer.shape != (d * d, d * d):
        raise ShapeError(
            f"transfer shape {channel.transfer.shape} does not fit site dim {d}"
        )
    n = state.n_sites
    rho = state.data.reshape(list(state.dims) * 2)
    # bring the (ket, bra) axes of the site to the front, apply, restore
    rho = np.moveaxis(rho, (site, site + n), (0, 1))
    shape = rho.shape
    flat = rho.reshape(d * d, -1)
    flat = channel.transfer @ flat
    rho = np.moveaxis(flat.reshape(shape), (0, 1), (site, site + n))
    return QuditRegister(state.dims, rho.reshape(state.dim, state.dim))
