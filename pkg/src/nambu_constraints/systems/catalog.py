"""The five worked systems, built directly as expression trees.

Constant ordering inside each family follows the listing order the
signed brackets were derived with; reordering a family flips signs.
"""
from __future__ import annotations

from typing import Callable

from .. import expr as ex
from ..brackets import Observable, PhaseSpace
from ..constraints import ConstantFamily, ConstraintSet
from .model import Guard, MotionSystem, SystemDefinitionError

V = ex.Var
half = ex.const(0.5)


def _family(ps: PhaseSpace, members: list[tuple[str, ex.Expr]], hamiltonian: ex.Expr | str) -> ConstantFamily:
    obs = [Observable(name, body) for name, body in members]
    if isinstance(hamiltonian, str):
        idx = [o.name for o in obs].index(hamiltonian)
        return ConstantFamily(obs, obs[idx], ps, idx)
    return ConstantFamily(obs, Observable("H", hamiltonian), ps, None)


def _cset(label: str, items: list[tuple[str, ex.Expr]]) -> ConstraintSet:
    return ConstraintSet(label, tuple(items))


# ---------------------------------------------------------------------------
# harmonic oscillator, two degrees of freedom


def _ho_constants():
    q1, p1, q2, p2, k = V("q1"), V("p1"), V("q2"), V("p2"), V("k")
    c2 = p1**2 / 2 + k * q1**2 / 2
    c3 = p2**2 / 2 + k * q2**2 / 2
    c4 = q1 * p2 - q2 * p1
    c5 = p1 * p2 + k * q1 * q2
    h = (p1**2 + p2**2) / 2 + k * (q1**2 + q2**2) / 2
    return h, c2, c3, c4, c5


def _ho_f2():
    C2, C3, C4, C5, k = V("C2"), V("C3"), V("C4"), V("C5"), V("k")
    return 2 * C2 * C3 - k * C4**2 / 2 - C5**2 / 2


def harmonic_oscillator(variant: str | None = None) -> MotionSystem:
    ps = PhaseSpace(2)
    h, c2, c3, c4, c5 = _ho_constants()
    C = {f"C{i}": V(f"C{i}") for i in range(1, 8)}
    f1 = C["C1"] - C["C2"] - C["C3"]
    f2 = _ho_f2()
    members = [("C1", h), ("C2", c2), ("C3", c3), ("C4", c4), ("C5", c5)]
    name = "harmonic-oscillator"
    if variant is None:
        fam = _family(ps, members, "C1")
        sets = [_cset("default", [("F1", f1), ("F2", f2)])]
    elif variant == "hamiltonian-free":
        fam = _family(ps, members[1:], h)
        sets = [_cset("default", [("F", -f2)])]
    elif variant == "extended-c6":
        fam = _family(ps, members + [("C6", c2 - c3)], "C1")
        sets = [_cset("default", [("F1", f1), ("F2", f2), ("F3", C["C6"] - C["C2"] + C["C3"])])]
    elif variant == "extended-c7":
        fam = _family(ps, members + [("C6", c2 - c3), ("C7", c4 * c5)], "C1")
        sets = [_cset("default", [("F1", f1), ("F2", f2), ("F3", C["C6"] - C["C2"] + C["C3"]),
                                  ("F4", C["C7"] - C["C4"] * C["C5"])])]
    else:
        raise SystemDefinitionError(f"unknown harmonic-oscillator variant {variant!r}")
    if variant:
        name = f"{name}/{variant}"
    return MotionSystem(
        name=name,
        phase_space=ps,
        params={"k": 1.0},
        family=fam,
        constraint_sets={cs.label: cs for cs in sets},
        description="isotropic oscillator in the plane; C2, C3 partial energies, C4 angular momentum",
    )


# ---------------------------------------------------------------------------
# Smorodinsky-Winternitz


def smorodinsky_winternitz() -> MotionSystem:
    ps = PhaseSpace(2)
    q1, p1, q2, p2 = V("q1"), V("p1"), V("q2"), V("p2")
    w, a1, a2 = V("omega"), V("alpha1"), V("alpha2")
    l3 = q1 * p2 - q2 * p1
    h = (p1**2 + p2**2) / 2 + w**2 * (4 * q1**2 + q2**2) + a1 * q1 + a2 / q2**2
    c2 = p1**2 / 2 + a1 * q1 + 4 * w**2 * q1**2
    c3 = 2 * p2 * l3 - 4 * w**2 * q1 * q2**2 + 4 * a2 * q1 / q2**2 - a1 * q2**2
    c4 = -2 * (a1 + 8 * w**2 * q1) * q2 * p2 - p1 * (2 * p2**2 - 4 * w**2 * q2**2 + 4 * a2 / q2**2)
    fam = _family(ps, [("C1", h), ("C2", c2), ("C3", c3), ("C4", c4)], "C1")
    return MotionSystem(
        name="smorodinsky-winternitz",
        phase_space=ps,
        params={"omega": 1.0, "alpha1": 1.0, "alpha2": 1.0},
        family=fam,
        constraint_sets={"default": _cset("default", [("F", smorodinsky_winternitz_casimir())])},
        guards=[Guard(q2, 0.1)],
        description="superintegrable potential with quadratic integrals and a cubic Casimir",
    )


def smorodinsky_winternitz_casimir() -> ex.Expr:
    C1, C2, C3, C4 = (V(f"C{i}") for i in range(1, 5))
    w, a1, a2 = V("omega"), V("alpha1"), V("alpha2")
    return (C4**2 / 2 - 4 * a1 * C2 * C3 + 4 * w**2 * C3**2 + 4 * a1 * C1 * C3 - 16 * C2**3
            + 32 * C1 * C2**2 + 64 * w**2 * a2 * C2 - 16 * C1**2 * C2 + 4 * a1**2 * a2)


# ---------------------------------------------------------------------------
# Kepler-Coulomb, three degrees of freedom


def kepler_coulomb() -> MotionSystem:
    ps = PhaseSpace(3)
    q = [V(c) for c in ps.positions]
    p = [V(c) for c in ps.momenta]
    alpha = V("alpha")
    r = ex.sqrt(q[0]**2 + q[1]**2 + q[2]**2)
    L = [q[1] * p[2] - q[2] * p[1], q[2] * p[0] - q[0] * p[2], q[0] * p[1] - q[1] * p[0]]
    A = [p[1] * L[2] - p[2] * L[1] - alpha * q[0] / r,
         p[2] * L[0] - p[0] * L[2] - alpha * q[1] / r,
         p[0] * L[1] - p[1] * L[0] - alpha * q[2] / r]
    h = (p[0]**2 + p[1]**2 + p[2]**2) / 2 - alpha / r
    members = [("H", h)] + [(f"L{i + 1}", L[i]) for i in range(3)] + [(f"A{i + 1}", A[i]) for i in range(3)]
    H, L1, L2, L3, A1, A2, A3 = (V(n) for n in ("H", "L1", "L2", "L3", "A1", "A2", "A3"))
    f1 = A1 * L1 + A2 * L2 + A3 * L3
    f2 = alpha**2 / 2 + H * (L1**2 + L2**2 + L3**2) - (A1**2 + A2**2 + A3**2) / 2
    return MotionSystem(
        name="kepler-coulomb",
        phase_space=ps,
        params={"alpha": 1.0},
        family=_family(ps, members, "H"),
        constraint_sets={"default": _cset("default", [("F1", f1), ("F2", f2)])},
        guards=[Guard(r, 0.1)],
        description="attractive 1/r potential with angular momentum and the Runge-Lenz vector",
    )


# ---------------------------------------------------------------------------
# Winternitz system, three degrees of freedom


def winternitz_parts(n: int = 3):
    """Per-direction energies H_i and the amplitudes A_i, A_i* used in T_ij."""
    ps = PhaseSpace(n)
    k = V("k")
    energies, amps, conj = [], [], []
    for i in range(n):
        x, p, ki = V(ps.positions[i]), V(ps.momenta[i]), V(f"k{i + 1}")
        energies.append((p**2 + k**2 * x**2 + ki**2 / x**2) / 2)
        real_part = p**2 + ki**2 / x**2 - k**2 * x**2
        cross = 2 * k * x * p
        # orientation of the imaginary part fixed so that
        # {T_ij, T_rs} = i d_jr T_is - i d_is T_rj under {q, p} = 1
        amps.append((real_part - ex.Const(1j) * cross) / (4 * k))
        conj.append((real_part + ex.Const(1j) * cross) / (4 * k))
    return ps, energies, amps, conj


def winternitz_T(i: int, j: int, n: int = 3) -> ex.Expr:
    ps, energies, amps, conj = winternitz_parts(n)
    k = V("k")
    if i == j:
        return (energies[i] - k * V(f"k{i + 1}")) / (2 * k)

    def f(idx):
        return ex.sqrt(2 * k / (energies[idx] + k * V(f"k{idx + 1}")))

    return f(i) * f(j) * amps[i] * conj[j]


def winternitz_3() -> MotionSystem:
    n = 3
    ps, energies, _, _ = winternitz_parts(n)
    k = V("k")
    h = energies[0] + energies[1] + energies[2]
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2)]
    members = [("H", h)] + [(f"T{i + 1}{j + 1}", winternitz_T(i, j, n)) for i, j in pairs]
    H, T11, T22, T33, T12, T13 = (V(nm) for nm, _ in members)
    ks = V("k1") + V("k2") + V("k3")
    f = T12 * T13 * (-H / (2 * k) + T11 + T22 + T33 + ks / 2)
    guards = [Guard(V(c), 0.1) for c in ps.positions]
    guards += [Guard(energies[i] + k * V(f"k{i + 1}"), 0.1, absolute=False) for i in range(n)]
    return MotionSystem(
        name="winternitz-3",
        phase_space=ps,
        params={"k": 1.0, "k1": 1.0, "k2": 1.0, "k3": 1.0},
        family=_family(ps, members, "H"),
        constraint_sets={"default": _cset("default", [("F", f)])},
        guards=guards,
        description="isotropic oscillator with centrifugal terms; SU(3) generators T_ij (complex)",
    )


# ---------------------------------------------------------------------------
# free particle on the 4-sphere


def sphere_names(n: int = 4) -> list[str]:
    names = ["H"] + [f"P{a}" for a in range(1, n + 1)]
    names += [f"L{a}{b}" for a in range(1, n + 1) for b in range(a + 1, n + 1)]
    return names


def sphere_4() -> MotionSystem:
    n = 4
    ps = PhaseSpace(n)
    q = [V(c) for c in ps.positions]
    p = [V(c) for c in ps.momenta]
    radial = 1 - ex.add(*(x**2 for x in q))
    root = ex.sqrt(radial)
    P = [root * pa for pa in p]
    L = {(a, b): q[a] * p[b] - q[b] * p[a] for a in range(n) for b in range(a + 1, n)}
    h = half * (ex.add(*(x**2 for x in P)) + ex.add(*(x**2 for x in L.values())))
    members = [("H", h)] + [(f"P{a + 1}", P[a]) for a in range(n)]
    members += [(f"L{a + 1}{b + 1}", L[(a, b)]) for (a, b) in L]
    s = {nm: V(nm) for nm in sphere_names(n)}
    P1, P2, P3, P4 = s["P1"], s["P2"], s["P3"], s["P4"]
    L12, L13, L14, L23, L24, L34 = s["L12"], s["L13"], s["L14"], s["L23"], s["L24"], s["L34"]
    f1 = (s["H"] - half * (P1**2 + P2**2 + P3**2 + P4**2)
          - half * (L12**2 + L13**2 + L14**2 + L23**2 + L24**2 + L34**2))
    default = _cset("default", [
        ("F1", f1),
        ("F2", L12 * L34 + L14 * L23 - L13 * L24),
        ("F3", L12 * P3 - L13 * P2 + L23 * P1),
        ("F4", P4 - L14 / L13 * P3 + L34 / L13 * P1),
    ])
    primed = _cset("primed", [
        ("F1p", f1),
        ("F2p", L14 * P2 * P3 - L13 * P2 * P4 - L24 * P1 * P3 + L23 * P1 * P4),
        ("F3p", L23 / P3 - L24 / P4 + L34 / (P3 * P4) * P2),
        ("F4p", P3 * P4 / P2 * L12 - P3 * L14 + P1 * L34 + P1 * P4 / P2 * L23),
    ])
    guards = [Guard(radial, 0.1, absolute=False), Guard(L[(0, 2)], 0.1)]
    guards += [Guard(P[a], 0.1) for a in (1, 2, 3)]
    return MotionSystem(
        name="sphere-4",
        phase_space=ps,
        params={},
        family=_family(ps, members, "H"),
        constraint_sets={"default": default, "primed": primed},
        guards=guards,
        boxes={c: (-1.0, 1.0) for c in ps.positions},
        description="free particle on the 4-sphere; so(5) charges P_a and L_ab",
    )


BUILDERS: dict[str, Callable[[], MotionSystem]] = {
    "harmonic-oscillator": harmonic_oscillator,
    "harmonic-oscillator/hamiltonian-free": lambda: harmonic_oscillator("hamiltonian-free"),
    "harmonic-oscillator/extended-c6": lambda: harmonic_oscillator("extended-c6"),
    "harmonic-oscillator/extended-c7": lambda: harmonic_oscillator("extended-c7"),
    "smorodinsky-winternitz": smorodinsky_winternitz,
    "kepler-coulomb": kepler_coulomb,
    "winternitz-3": winternitz_3,
    "sphere-4": sphere_4,
}

BASE_SYSTEMS = ("harmonic-oscillator", "smorodinsky-winternitz", "kepler-coulomb", "winternitz-3", "sphere-4")

_cache: dict[str, MotionSystem] = {}


def builtin(name: str) -> MotionSystem:
    if name not in BUILDERS:
        raise SystemDefinitionError(f"unknown system {name!r}; known: {', '.join(BUILDERS)}")
    if name not in _cache:
        _cache[name] = BUILDERS[name]()
    return _cache[name]


def names() -> list[str]:
    return list(BUILDERS)
