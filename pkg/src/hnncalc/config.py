"""Scenario configuration files (JSON) -> validated :class:`Scenario` objects.

Three kinds are understood:

``group``
    ``{"kind": "group", "group": {"kind": "hnn-of-Z", "m": 2, "n": 3}}`` builds
    the base C[Z] with D = C[nZ], theta(a^n) = a^m and trace-preserving
    expectations; ``m`` may be a list for several stable letters sharing n.
``torus``
    ``{"kind": "torus", "alpha": "1/7", "D": [1, 0], "thetas": [{"image": [0, 1]}]}``
    (D generated by u^p v^q; theta sends its generator to another monomial).
``matrix``
    block dimensions, a basis of D, theta images of that basis, densities
    for the state-preserving expectations and the reference state.

Complex numbers are ``[re, im]`` pairs; matrices are row-major nested arrays.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import AlgebraElement, ConditionalExpectation
from .engine import Scenario, Theta
from .groups import Group, GroupAlgebra, GroupSpec, power_embedding, subgroup_expectation
from .matrix import DensityState, MultiMatrixAlgebra, gns_expectation, linear_embedding
from .torus import TorusAlgebra, monomial_embedding, monomial_expectation, parse_alpha


class ConfigError(ValueError):
    pass


def load_scenario(path: str | Path, validate: bool = True) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    data.setdefault("name", path.stem)
    return build_scenario(data, validate=validate)


def build_scenario(data: dict, validate: bool = True) -> Scenario:
    kind = data.get("kind")
    builders = {"group": _group_scenario, "torus": _torus_scenario, "matrix": _matrix_scenario}
    if kind not in builders:
        raise ConfigError(f"unknown scenario kind {kind!r}; expected one of {sorted(builders)}")
    try:
        scenario = builders[kind](data)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {kind} scenario: {exc}") from exc
    if validate:
        scenario.validate()
    return scenario


def _finish_bindings(base, extra: dict[str, AlgebraElement], n_letters: int) -> dict[str, AlgebraElement]:
    bindings = dict(base.default_bindings())
    bindings.update(extra)
    letters = {f"t{k + 1}" for k in range(n_letters)}
    clash = letters & set(bindings)
    if clash:
        raise ConfigError(f"binding names clash with stable letters: {sorted(clash)}")
    return bindings


# -- group ------------------------------------------------------------------------


def _group_scenario(data: dict) -> Scenario:
    g = data["group"]
    if g.get("kind", "hnn-of-Z") != "hnn-of-Z":
        raise ConfigError("group scenarios are HNN extensions of Z: group.kind must be 'hnn-of-Z'")
    if "relations" in g:
        relations = [tuple(int(v) for v in r) for r in g["relations"]]
    else:
        ms = g["m"] if isinstance(g["m"], list) else [g["m"]]
        relations = [(int(m), int(g["n"])) for m in ms]
    ns = {n for _, n in relations}
    if len(ns) != 1:
        raise ConfigError("all stable letters must share the same D = C[nZ] (common n)")
    (n,) = ns
    spec = GroupSpec("hnn-of-Z", relations=tuple(relations))
    oracle = Group(spec)
    base = GroupAlgebra(GroupSpec.free_abelian(1))
    e_d = subgroup_expectation(base, {"multiples": [n]}, name=f"E[{n}Z]")
    thetas = []
    for k, (m, _) in enumerate(relations):
        name = f"theta{k + 1}"
        emb = power_embedding(base, n, m, name=name)
        thetas.append(Theta(name, emb, subgroup_expectation(base, {"multiples": [m]}, name=f"E[{m}Z]")))
    tau = base.trace_state()
    return Scenario(
        name=data["name"],
        base=base,
        e_d=e_d,
        thetas=tuple(thetas),
        phi=tau,
        trace=tau,
        bindings=_finish_bindings(base, {}, len(thetas)),
        seed=int(data.get("seed", 0)),
        oracle=oracle,
    )


# -- torus ------------------------------------------------------------------------


def _torus_scenario(data: dict) -> Scenario:
    alpha = parse_alpha(data["alpha"])
    base = TorusAlgebra(alpha)
    d_gen = tuple(data.get("D", (1, 0)))
    e_d = monomial_expectation(base, d_gen, name="E_D")
    thetas = []
    for k, spec in enumerate(data.get("thetas", [{"image": [0, 1]}])):
        name = spec.get("name", f"theta{k + 1}")
        image = tuple(spec["image"])
        thetas.append(
            Theta(name, monomial_embedding(base, d_gen, image, name=name), monomial_expectation(base, image, name=f"E_{name}"))
        )
    tau = base.trace_state()
    return Scenario(
        name=data["name"],
        base=base,
        e_d=e_d,
        thetas=tuple(thetas),
        phi=tau,
        trace=tau,
        bindings=_finish_bindings(base, {}, len(thetas)),
        seed=int(data.get("seed", 0)),
    )


# -- matrix -----------------------------------------------------------------------


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(float(re), float(im))
    if isinstance(v, str):
        return complex(v.replace("i", "j"))
    return complex(v)


def _matrix(spec) -> np.ndarray:
    if isinstance(spec, dict):
        if "kron" in spec:
            out = np.eye(1, dtype=complex)
            for factor in spec["kron"]:
                out = np.kron(out, _matrix(factor))
            return out
        if "diag" in spec:
            return np.diag([_complex(v) for v in spec["diag"]])
        if "eye" in spec:
            return np.eye(int(spec["eye"]), dtype=complex)
        if "unit" in spec:
            d, i, j = spec["unit"]
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = 1
            return m
        if "sum" in spec:
            return sum(_matrix(s) for s in spec["sum"])
        if "scale" in spec:
            c, inner = spec["scale"]
            return _complex(c) * _matrix(inner)
        raise ConfigError(f"unknown matrix constructor {sorted(spec)}")
    return np.array([[_complex(v) for v in row] for row in spec], dtype=complex)


def _element(alg: MultiMatrixAlgebra, spec) -> AlgebraElement:
    if isinstance(spec, dict) and "blocks" in spec:
        return alg.from_blocks([_matrix(b) for b in spec["blocks"]])
    if len(alg.blocks) != 1:
        raise ConfigError("multi-block elements need the {'blocks': [...]} form")
    return alg.from_blocks([_matrix(spec)])


def _density(alg: MultiMatrixAlgebra, spec) -> DensityState:
    if spec == "trace":
        return DensityState.tracial(alg)
    elem = _element(alg, spec)
    return DensityState.normalized(alg, alg.to_blocks(elem))


def _matrix_expectation(alg, spec, image, default_density, name, seed) -> ConditionalExpectation:
    spec = spec or {}
    kind = spec.get("type", "state-preserving")
    if kind == "table":
        P = np.array([[_complex(v) for v in row] for row in spec["matrix"]], dtype=complex)
        if P.shape != (alg.dim, alg.dim):
            raise ConfigError(f"{name}: table must be {alg.dim}x{alg.dim}")
        return ConditionalExpectation(name, alg, lambda x: alg.from_vec(P @ alg.to_vec(x)))
    if kind == "trace-preserving":
        dens = DensityState.tracial(alg)
    elif kind == "state-preserving":
        dens = _density(alg, spec["density"]) if "density" in spec else default_density
    else:
        raise ConfigError(f"{name}: unknown expectation type {kind!r}")
    return gns_expectation(alg, image, dens, name=name, seed=seed)


def _matrix_scenario(data: dict) -> Scenario:
    alg = MultiMatrixAlgebra(data["blocks"])
    seed = int(data.get("seed", 0))
    state_spec = data.get("state", "trace")
    state_density = _density(alg, state_spec["density"] if isinstance(state_spec, dict) else state_spec)
    d_basis = [_element(alg, b) for b in data["D"]["basis"]]
    e_d = _matrix_expectation(alg, data.get("E_D"), d_basis, state_density, "E_D", seed)
    thetas = []
    for k, spec in enumerate(data["thetas"]):
        name = spec.get("name", f"theta{k + 1}")
        images = [_element(alg, b) for b in spec["images"]]
        emb = linear_embedding(alg, d_basis, images, name=name)
        E = _matrix_expectation(alg, spec.get("expectation"), images, state_density, f"E_{name}", seed)
        thetas.append(Theta(name, emb, E))
    phi = state_density.as_state("phi")
    trace = None
    if "trace" in data:
        trace = _density(alg, data["trace"]).as_state("tau")
    extra = {name: _element(alg, spec) for name, spec in data.get("bindings", {}).items()}
    return Scenario(
        name=data["name"],
        base=alg,
        e_d=e_d,
        thetas=tuple(thetas),
        phi=phi,
        trace=trace,
        bindings=_finish_bindings(alg, extra, len(thetas)),
        seed=seed,
        density_data={"state": state_density},
    )


def describe(s: Scenario) -> dict[str, Any]:
    return {
        "name": s.name,
        "base": s.base.backend_id,
        "letters": s.letter_names,
        "thetas": [th.name for th in s.thetas],
    }

