"""Measurement protocols on a single router: scans, tomography, Floquet.

Address convention (fixed package-wide): an address cosθ|0⟩ + e^{iφ}sinθ|h⟩,
with h the high level of the encoding (1 or 2), routes the sinθ component to
Q_L and the cosθ component to Q_R, so a θ scan reads P_L = sin²θ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import run_circuit
from .errors import CapacityError, FitError
from .gates import (
    FloquetParams,
    SqrtCzParams,
    qrouter_circuit,
    sqrt_cz_matrix,
    x01_half_matrix,
)
from .noise import NoiseModel
from .qudit import (
    QuditRegister,
    apply_gate,
    digits_of,
    from_site_states,
    partial_trace,
    populations,
    postselect,
)

ROUTER_SITES = ("Q_I", "Q_C", "Q_L", "Q_R")
ROUTER_DIMS = (2, 3, 2, 2)


# --- deterministic PRNG for address sequences ---------------------------------


class SplitMix64:
    """SplitMix64 stream; bit-reproducible across platforms and numpy versions."""

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self._MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self._MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def choice(self, n: int) -> int:
        # n must divide 2^64 for exact uniformity; address draws use n=4
        return self.next_u64() % n

    @classmethod
    def for_trial(cls, seed: int, trial: int) -> "SplitMix64":
        root = cls(seed)
        root.state = (root.state + (trial + 1) * 0xD1B54A32D192ED03) & cls._MASK
        return root


# --- addresses -----------------------------------------------------------------


@dataclass(frozen=True)
class AddressState:
    """cosθ|0⟩ + e^{iφ} sinθ|h⟩ with h=1 ("01" basis) or 2 ("02")."""

    theta: float
    phi: float = 0.0
    basis: str = "02"

    @property
    def high_level(self) -> int:
        return 1 if self.basis == "01" else 2

    def site_vector(self) -> np.ndarray:
        v = np.zeros(3, dtype=complex)
        v[0] = math.cos(self.theta)
        v[self.high_level] = np.exp(1j * self.phi) * math.sin(self.theta)
        return v

    @classmethod
    def named(cls, name: str, basis: str) -> "AddressState":
        table = {
            "0": (0.0, 0.0),
            "h": (math.pi / 2, 0.0),
            "+": (math.pi / 4, 0.0),
            "-": (math.pi / 4, math.pi),
        }
        theta, phi = table[name]
        return cls(theta, phi, basis)


ADDRESS_NAMES = ("0", "h", "+", "-")


def scheme_basis(scheme: str) -> str:
    return "02" if scheme == "eraser" else "01"


def router_input(address: AddressState, dims=ROUTER_DIMS) -> QuditRegister:
    """|1⟩ at Q_I, the address on Q_C, paths empty."""
    one = np.array([0.0, 1.0], dtype=complex)
    zero2 = np.array([1.0, 0.0], dtype=complex)
    return from_site_states(dims, [one, address.site_vector(), zero2, zero2])


def _path_populations(state: QuditRegister) -> tuple[float, float, float]:
    """(P_L, P_R, P_I): marginal excitation of each path/input site."""
    p = populations(state)
    pl = pr = pi = 0.0
    for idx, prob in enumerate(p):
        d = digits_of(idx, state.dims)
        if d[2] != 0:
            pl += prob
        if d[3] != 0:
            pr += prob
        if d[0] != 0:
            pi += prob
    return pl, pr, pi


@dataclass
class ThetaScanResult:
    thetas: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    p_input: np.ndarray
    scheme: str


def theta_scan(thetas, scheme: str = "eraser", noise: NoiseModel | None = None,
               phi: float = 0.0) -> ThetaScanResult:
    """Routing populations versus the address angle; noiseless law sin²θ/cos²θ."""
    theta_gate = math.pi - (noise.leakage.delta_theta if noise else 0.0)
    circ = qrouter_circuit(scheme, theta=theta_gate, dims=ROUTER_DIMS)
    basis = scheme_basis(scheme)
    rows = []
    for th in np.asarray(thetas, dtype=float):
        state = router_input(AddressState(th, phi, basis))
        out = run_circuit(state, circ, noise).state
        rows.append(_path_populations(out))
    arr = np.array(rows)
    return ThetaScanResult(np.asarray(thetas, float), arr[:, 0], arr[:, 1], arr[:, 2], scheme)


@dataclass
class PhiScanResult:
    phis: np.ndarray
    p_odd: np.ndarray
    p_even: np.ndarray
    state_pops: np.ndarray  # (n_phi, 8) over (Q_C, Q_L, Q_R) parity-basis states
    phi0: float
    scheme: str


def _interference_layer(state: QuditRegister, basis: str) -> QuditRegister:
    """X_{π/2} on the address subspace of Q_C and on Q_L, Q_R."""
    half2 = x01_half_matrix(dim=2)
    if basis == "01":
        qc_half = x01_half_matrix(dim=3)
    else:
        qc_half = np.eye(3, dtype=complex)
        sub = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)
        qc_half[np.ix_([0, 2], [0, 2])] = sub
    state = apply_gate(state, qc_half, [1])
    state = apply_gate(state, half2, [2])
    return apply_gate(state, half2, [3])


def phi_scan(phis, scheme: str = "eraser", noise: NoiseModel | None = None) -> PhiScanResult:
    """Parity interference at θ=π/4: P_O = (1 − sin(φ+φ0))/2.

    The three π/2 rotations act on Q_C (in its address subspace), Q_L and
    Q_R; populations are read over those three sites with basis labels
    mapping the high address level to 1.
    """
    theta_gate = math.pi - (noise.leakage.delta_theta if noise else 0.0)
    circ = qrouter_circuit(scheme, theta=theta_gate, dims=ROUTER_DIMS)
    basis = scheme_basis(scheme)
    high = 1 if basis == "01" else 2
    phis = np.asarray(phis, dtype=float)
    p_odd, p_even, per_state = [], [], []
    for ph in phis:
        state = router_input(AddressState(math.pi / 4, ph, basis))
        out = run_circuit(state, circ, noise).state
        out = _interference_layer(out, basis)
        p = populations(out)
        pops = np.zeros(8)
        po = pe = 0.0
        for idx, prob in enumerate(p):
            d = digits_of(idx, out.dims)
            if d[0] != 0:
                continue  # residual input excitation: not part of the 8-state set
            if d[1] == high:
                c = 1
            elif d[1] == 0:
                c = 0
            else:
                continue  # eraser-detected leakage level
            key = c * 4 + d[2] * 2 + d[3]
            pops[key] += prob
            if (c + d[2] + d[3]) % 2:
                po += prob
            else:
                pe += prob
        p_odd.append(po)
        p_even.append(pe)
        per_state.append(pops)
    p_odd = np.array(p_odd)
    p_even = np.array(p_even)
    # one shared offset: P_O = 1/2 − sin(φ+φ0)/2 ⇒ project onto sin/cos
    y = 0.5 - p_odd
    a = 2.0 * np.mean(y * np.sin(phis))
    b = 2.0 * np.mean(y * np.cos(phis))
    phi0 = math.atan2(b, a)
    return PhiScanResult(phis, p_odd, p_even, np.array(per_state), phi0, scheme)


# --- quantum state tomography ---------------------------------------------------


@dataclass
class QstResult:
    rho: np.ndarray
    fidelity: float
    target: np.ndarray
    method: str
    qubit_block: np.ndarray | None = None


_V_X = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_V_Y = np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2)
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def _qubit_levels(dim: int, basis: str) -> tuple[int, int]:
    if dim == 2:
        return (0, 1)
    return (0, 1) if basis == "01" else (0, 2)


def _setting_probs(rho_block: np.ndarray, setting: str) -> np.ndarray:
    """Outcome probabilities of a pre-rotated Z measurement on the qubit block."""
    V = np.array([1.0], dtype=complex)
    for ch in setting:
        V = np.kron(V, {"Z": np.eye(2, dtype=complex), "X": _V_X, "Y": _V_Y}[ch])
    rot = V @ rho_block @ V.conj().T
    p = np.real(np.diag(rot)).copy()
    p[p < 0] = 0.0
    return p / p.sum()


def qst(
    address: AddressState,
    scheme: str = "eraser",
    sites=(1, 2, 3),
    method: str = "exact",
    shots: int = 0,
    seed: int = 0,
    noise: NoiseModel | None = None,
    max_iter: int = 500,
):
    """Tomograph the router output on up to three sites.

    Pre-rotations {I, X, Y} act on each site's qubit subspace ({0,1}, or
    {0,2} for the eraser address site); ``shots`` counts samples per basis
    setting (0 = exact probabilities straight into the estimator).
    """
    sites = list(sites)
    if len(sites) > 3:
        raise CapacityError("tomography enumerated over at most 3 sites")
    basis = scheme_basis(scheme)
    circ = qrouter_circuit(scheme, dims=ROUTER_DIMS)
    out = run_circuit(router_input(address), circ, noise).state
    if noise is not None and scheme == "eraser":
        out, _ = postselect(out, 1, 1)
    reduced = partial_trace(out, sites)

    # noiseless oracle fixes the pure target
    oracle = run_circuit(router_input(address), circ, None).state
    target_red = partial_trace(oracle, sites).data
    vals, vecs = np.linalg.eigh(target_red)
    target = vecs[:, -1]

    if method == "exact":
        rho = reduced.data
        fid = float(np.real(target.conj() @ rho @ target))
        return QstResult(rho, fid, target, method)

    # qubit-subspace block of the reduced state
    levels = [_qubit_levels(reduced.dims[k], basis) for k in range(len(sites))]
    block_idx = []
    for flat in range(2 ** len(sites)):
        digs = [(flat >> (len(sites) - 1 - k)) & 1 for k in range(len(sites))]
        full = [levels[k][d] for k, d in enumerate(digs)]
        block_idx.append(int(np.ravel_multi_index(full, reduced.dims)))
    block = reduced.data[np.ix_(block_idx, block_idx)]
    block = block / np.trace(block).real

    rng = np.random.default_rng(seed)
    settings = []
    freqs = {}
    n = len(sites)
    for code in range(3**n):
        setting = ""
        c = code
        for _ in range(n):
            setting = "ZXY"[c % 3] + setting
            c //= 3
        settings.append(setting)
        p = _setting_probs(block, setting)
        if shots:
            counts = rng.multinomial(shots, p)
            freqs[setting] = counts / shots
        else:
            freqs[setting] = p

    if method == "linear-inversion":
        rho = np.zeros((2**n, 2**n), dtype=complex)
        for code in range(4**n):
            label = ""
            c = code
            for _ in range(n):
                label = "IXYZ"[c % 4] + label
                c //= 4
            setting = label.replace("I", "Z")
            f = freqs[setting]
            exp = 0.0
            for o in range(2**n):
                sgn = 1.0
                for k in range(n):
                    if label[k] != "I" and (o >> (n - 1 - k)) & 1:
                        sgn = -sgn
                exp += sgn * f[o]
            P = np.array([1.0], dtype=complex)
            for ch in label:
                P = np.kron(P, _PAULI[ch])
            rho += exp * P
        rho /= 2**n
        rho = (rho + rho.conj().T) / 2
    elif method == "mle":
        rho = np.eye(2**n, dtype=complex) / 2**n
        projs = {}
        for setting in settings:
            V = np.array([1.0], dtype=complex)
            for ch in setting:
                V = np.kron(V, {"Z": np.eye(2, dtype=complex), "X": _V_X, "Y": _V_Y}[ch])
            projs[setting] = [np.outer(V[o, :].conj(), V[o, :]) for o in range(2**n)]
        for it in range(max_iter):
            R = np.zeros_like(rho)
            for setting in settings:
                f = freqs[setting]
                for o, proj in enumerate(projs[setting]):
                    pr = float(np.real(np.trace(proj @ rho)))
                    if pr > 1e-12 and f[o] > 0:
                        R += (f[o] / pr) * proj
            new = R @ rho @ R
            new /= np.trace(new).real
            if np.abs(new - rho).max() < 1e-10:
                rho = new
                break
            rho = new
        else:
            raise FitError(f"MLE did not converge in {max_iter} iterations")
    else:
        raise FitError(f"unknown method {method!r}")

    # fidelity against the target expressed in the qubit block
    tvec = target[block_idx]
    tvec = tvec / np.linalg.norm(tvec)
    fid = float(np.real(tvec.conj() @ rho @ tvec))
    return QstResult(rho, fid, tvec, method, qubit_block=block)


# --- Floquet analysis ------------------------------------------------------------


@dataclass(frozen=True)
class FloquetCost:
    m: int
    value: float


def floquet_populations(theta: float, eta: float = 0.0, zeta: float = 0.0,
                        n: int = 1) -> tuple[float, float]:
    """(P11, P02) after n applications of Z_qq·√CZ·Z_qq, from |11⟩.

    Closed form via Ω = arccos(cos(ϑ/2)cos(ζ/2−η)); at ϑ=π the populations
    alternate exactly (P11=1 even n, P02=1 odd n) for every η, ζ.
    """
    fp = FloquetParams(theta, eta, zeta)
    omega = fp.omega
    s = math.sin(omega)
    if s < 1e-15:
        return 1.0, 0.0
    nz = math.cos(theta / 2) * math.sin(zeta / 2 - eta) / s
    nx = math.sin(theta / 2) / s
    cn, sn = math.cos(n * omega), math.sin(n * omega)
    p11 = cn * cn + (nz * sn) ** 2
    p02 = (nx * sn) ** 2
    return p11, p02


def _floquet_composite(theta: float, eta: float, zeta: float) -> np.ndarray:
    """The 9×9 two-qutrit unitary of one Z_qq·√CZ·Z_qq application."""
    g = sqrt_cz_matrix(SqrtCzParams(theta=theta, eta=eta))
    z = np.eye(9, dtype=complex)
    i11 = 1 * 3 + 1
    z[i11, i11] = np.exp(1j * zeta / 2)
    return z @ g @ z


def floquet_cost(params: FloquetParams, m: int = 15,
                 noise: NoiseModel | None = None,
                 sqrt_cz_ns: float = 25.0) -> FloquetCost:
    """Average alternating |02⟩/|11⟩ population over 2m repeated gates."""
    if m < 1:
        raise ValueError("m must be >= 1")
    from .noise import apply_noise_step

    U = _floquet_composite(params.theta, params.eta, params.zeta)
    state = QuditRegister((3, 3), np.eye(9, dtype=complex)[4].astype(complex))
    if noise is not None:
        state = state.to_mixed()
    total = 0.0
    i11, i02 = 4, 2
    for k in range(2 * m):
        if k % 2 == 0:
            total += populations(state)[i11]
        state = apply_gate(state, U, [0, 1])
        if noise is not None:
            state = apply_noise_step(state, noise.rates, sqrt_cz_ns * 1e-3)
        if k % 2 == 0:
            total += populations(state)[i02]
    return FloquetCost(m, total / (2 * m))


# --- Nelder-Mead ------------------------------------------------------------------


@dataclass
class NelderMeadResult:
    x: np.ndarray
    value: float
    converged: bool
    iterations: int


def nelder_mead(f, x0, step=0.1, max_iter: int = 500, tol: float = 1e-8) -> NelderMeadResult:
    """Minimize f with the classic simplex moves (1, 2, 0.5, 0.5).

    Returns best-so-far with converged=False when max_iter is exhausted;
    convergence means the simplex value spread dropped below tol.
    """
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    if k > 8:
        raise CapacityError("nelder_mead supports at most 8 parameters")
    steps = np.broadcast_to(np.asarray(step, dtype=float), (k,))
    simplex = [x0.copy()]
    for i in range(k):
        v = x0.copy()
        v[i] += steps[i]
        simplex.append(v)
    values = [f(v) for v in simplex]
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5

    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if max(values) - min(values) < tol:
            converged = True
            break
        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        refl = centroid + alpha * (centroid - worst)
        f_refl = f(refl)
        if values[0] <= f_refl < values[-2]:
            simplex[-1], values[-1] = refl, f_refl
        elif f_refl < values[0]:
            exp = centroid + gamma * (refl - centroid)
            f_exp = f(exp)
            if f_exp < f_refl:
                simplex[-1], values[-1] = exp, f_exp
            else:
                simplex[-1], values[-1] = refl, f_refl
        else:
            contr = centroid + rho * (worst - centroid)
            f_contr = f(contr)
            if f_contr < values[-1]:
                simplex[-1], values[-1] = contr, f_contr
            else:
                best = simplex[0]
                simplex = [best] + [best + sigma * (v - best) for v in simplex[1:]]
                values = [values[0]] + [f(v) for v in simplex[1:]]
    best = int(np.argmin(values))
    return NelderMeadResult(simplex[best], values[best], converged, it)


# --- leakage interference (repeated router, imperfect √CZ) -------------------------


@dataclass
class LeakageScan:
    repetitions: np.ndarray
    survival: np.ndarray
    scheme: str
    phase: float


def leakage_repetition_scan(
    max_reps: int = 20,
    scheme: str = "eraser",
    phase: float = 0.0,
    delta_theta: float = 0.01 * math.pi,
) -> LeakageScan:
    """Initial-state survival after 2k router applications, ϑ = π − δϑ.

    The parasitic phases (φ′, φ″) steer whether the per-pass leakage
    interferes constructively (π/2, worst case) or destructively (0).
    """
    circ = qrouter_circuit(
        scheme, parasitic=(phase, phase), theta=math.pi - delta_theta, dims=ROUTER_DIMS
    )
    # excited input with the high-level address: |1100⟩ or |1200⟩
    state = router_input(AddressState(math.pi / 2, 0.0, scheme_basis(scheme)))
    idx = int(np.argmax(populations(state)))
    reps, survival = [], []
    cur = state
    for k in range(1, max_reps + 1):
        cur = run_circuit(cur, circ).state
        cur = run_circuit(cur, circ).state
        reps.append(k)
        survival.append(float(populations(cur)[idx]))
    return LeakageScan(np.array(reps), np.array(survival), scheme, phase)
