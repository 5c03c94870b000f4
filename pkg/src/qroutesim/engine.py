"""Circuit execution on qudit registers, with layer-wise decoherence.

Gates inside a moment are ideal and instantaneous; the moment's duration
(max over its gates) is then charged as a decoherence interval on every
site, idle or not.  Post-selection markers project and renormalize,
accumulating the kept probability.

The density-matrix noise step is fused: one diagonal damping mask over the
whole register plus the three population-flow updates per qutrit site,
which is what makes depth-60 random-access-test sweeps cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .gates import Circuit, GateSpec, Moment, PostselectMarker, gate_matrix
from .noise import DecayRates, NoiseModel, _v_entries
from .qudit import QuditRegister, _contract_axes, new_basis_state, postselect


@dataclass
class RunResult:
    state: QuditRegister
    kept_probability: float = 1.0


def _site_factors(rates: DecayRates, t: float, dim: int) -> np.ndarray:
    """Diagonal damping factors, entry [a, b] for coherence (a, b)."""
    e10 = math.exp(-rates.gamma10 * t)
    e2 = math.exp(-rates.gamma2 * t)
    if dim == 2:
        return np.array([[1.0, e2], [e2, e10]])
    e21 = math.exp(-rates.gamma21 * t)
    e3 = math.exp(-rates.gamma3 * t)
    e4 = math.exp(-rates.gamma4 * t)
    return np.array([[1.0, e2, e3], [e2, e10, e4], [e3, e4, e21]])


def _noise_step_inplace(rho_t: np.ndarray, dims, rates: DecayRates, t_us: float) -> None:
    """Apply the per-site cascade channel to a dims*2-shaped ρ tensor."""
    if t_us <= 0:
        return
    n = len(dims)
    e10 = math.exp(-rates.gamma10 * t_us)
    v1, v2 = _v_entries(rates, t_us)
    for s, d in enumerate(dims):
        view = np.moveaxis(rho_t, (s, s + n), (0, 1))
        slab11 = view[1, 1].copy()
        slab22 = view[2, 2].copy() if d == 3 else None
        fac = _site_factors(rates, t_us, d)
        for a in range(d):
            for b in range(d):
                if fac[a, b] != 1.0:
                    view[a, b] *= fac[a, b]
        view[0, 0] += (1.0 - e10) * slab11
        if d == 3:
            view[0, 0] += v1 * slab22
            view[1, 1] += v2 * slab22


def run_circuit(
    state: QuditRegister,
    circuit: Circuit,
    noise: NoiseModel | None = None,
    site_order: list[str] | None = None,
) -> RunResult:
    """Run a circuit on a register whose sites match the circuit's.

    With a NoiseModel the register is promoted to a density matrix and each
    moment is followed by the fused decoherence step.  The coherent-leakage
    part of the model (δϑ) is a property of how circuits are *built* and is
    not applied here.
    """
    names = site_order or list(circuit.site_dims)
    if len(names) != state.n_sites:
        raise ShapeError(f"register has {state.n_sites} sites, circuit {len(names)}")
    for name, d in zip(names, state.dims):
        if circuit.site_dims.get(name) != d:
            raise ShapeError(f"site {name}: circuit dim {circuit.site_dims.get(name)} != register {d}")
    pos = {n: i for i, n in enumerate(names)}
    dims = state.dims

    noisy = noise is not None
    if noisy and state.is_pure:
        state = state.to_mixed()
    kept = 1.0
    dim = state.dim

    # the fused noise step mutates in place; never touch the caller's array
    data = state.data.copy() if noisy else state.data
    for op in circuit.ops:
        if isinstance(op, PostselectMarker):
            reg, k = postselect(QuditRegister(dims, data), pos[op.site], op.forbidden)
            data, kept = reg.data, kept * k
            continue
        assert isinstance(op, Moment)
        for g in op.gates:
            gdims = [dims[pos[s]] for s in g.sites]
            gm = gate_matrix(g, tuple(gdims))
            gate_t = gm.reshape(gdims + gdims)
            sites = [pos[s] for s in g.sites]
            if data.ndim == 1:
                data = _contract_axes(data.reshape(dims), gate_t, sites).reshape(-1)
            else:
                t = data.reshape(list(dims) * 2)
                t = _contract_axes(t, gate_t, sites)
                t = _contract_axes(t, gate_t.conj(), [s + len(dims) for s in sites])
                data = t.reshape(dim, dim)
        if noisy and op.gates:
            dt = op.duration_ns * 1e-3
            if noise.excitation_rate > 0:
                from .noise import apply_noise_step

                data = apply_noise_step(
                    QuditRegister(dims, data), noise.rates, dt, noise.excitation_rate
                ).data
            else:
                data = np.ascontiguousarray(data)
                rho_t = data.reshape(list(dims) * 2)
                _noise_step_inplace(rho_t, dims, noise.rates, dt)
                data = rho_t.reshape(dim, dim)
    return RunResult(QuditRegister(dims, data), kept)


def run_on_labels(circuit: Circuit, label: str, noise: NoiseModel | None = None) -> RunResult:
    """Convenience: run from a computational basis state given as digits."""
    dims = tuple(circuit.site_dims.values())
    return run_circuit(new_basis_state(dims, label), circuit, noise)
