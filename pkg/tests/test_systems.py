import pytest

from nambu_constraints import expr as ex
from nambu_constraints.harness import run_suite
from nambu_constraints.systems import (
    BASE_SYSTEMS,
    Guard,
    SamplingExhausted,
    SystemDefinitionError,
    builtin,
    constants_at,
    names,
    sample,
)
from nambu_constraints.systems.sysfile import (
    DATA_FILES,
    SystemFileError,
    load,
    load_table,
    shipped,
    shipped_table,
)

MINIMAL = """
system "toy"
dof 2
param k = 1
hamiltonian = C1
constant C1 = (p1^2 + p2^2)/2 + k*(q1^2 + q2^2)/2
constant C2 = p1^2/2 + k*q1^2/2
constant C3 = p2^2/2 + k*q2^2/2
constant C4 = q1*p2 - q2*p1
constraint F1 = C1 - C2 - C3
"""


# ---------------------------------------------------------------------------
# catalog


@pytest.mark.parametrize("name, n, m, s", [
    ("harmonic-oscillator", 2, 5, 2),
    ("smorodinsky-winternitz", 2, 4, 1),
    ("kepler-coulomb", 3, 7, 2),
    ("winternitz-3", 3, 6, 1),
    ("sphere-4", 4, 11, 4),
])
def test_catalog_shapes(name, n, m, s):
    system = builtin(name)
    assert (system.n, system.m, system.default_set.s) == (n, m, s)


def test_catalog_constraint_forms():
    ho = builtin("harmonic-oscillator")
    assert ex.to_string(ho.default_set.body("F1")) == "C1 - C2 - C3"
    kc = builtin("kepler-coulomb")
    assert kc.family.names == ("H", "L1", "L2", "L3", "A1", "A2", "A3")
    wz = builtin("winternitz-3")
    assert wz.family.names == ("H", "T11", "T22", "T33", "T12", "T13")
    sp = builtin("sphere-4")
    assert sp.family.names[:7] == ("H", "P1", "P2", "P3", "P4", "L12", "L13")
    assert set(sp.constraint_sets) == {"default", "primed"}


def test_default_parameters():
    assert builtin("harmonic-oscillator").params == {"k": 1.0}
    assert builtin("smorodinsky-winternitz").params == {"omega": 1.0, "alpha1": 1.0, "alpha2": 1.0}
    assert builtin("kepler-coulomb").params == {"alpha": 1.0}
    assert builtin("winternitz-3").params == {"k": 1.0, "k1": 1.0, "k2": 1.0, "k3": 1.0}


def test_unknown_builtin():
    with pytest.raises(SystemDefinitionError):
        builtin("pendulum")


def test_variants_listed():
    assert set(BASE_SYSTEMS) <= set(names())
    assert "harmonic-oscillator/extended-c7" in names()


def test_with_params_overrides_and_validates():
    ho = builtin("harmonic-oscillator").with_params({"k": 2.5})
    assert ho.params["k"] == 2.5
    with pytest.raises(SystemDefinitionError):
        builtin("harmonic-oscillator").with_params({"omega": 1})


@pytest.mark.parametrize("params", [{"k": 0.7}, {"k": 2.0}])
def test_identities_hold_for_other_parameter_values(params):
    system = builtin("harmonic-oscillator").with_params(params)
    assert run_suite([system], seed=5, samples=20).passed


# ---------------------------------------------------------------------------
# sampling


def test_sampling_is_deterministic():
    system = builtin("kepler-coulomb")
    a, b = sample(system, 42, 10), sample(system, 42, 10)
    assert [p.coords for p in a] == [p.coords for p in b]
    assert [p.coords for p in sample(system, 43, 10)] != [p.coords for p in a]


def test_guards_hold_for_smorodinsky_winternitz():
    for p in sample(builtin("smorodinsky-winternitz"), 1, 200):
        assert abs(p.coords["q2"]) >= 0.1


def test_guards_hold_for_sphere():
    for p in sample(builtin("sphere-4"), 1, 200):
        q2 = sum(p.coords[f"q{a}"] ** 2 for a in range(1, 5))
        assert 1 - q2 >= 0.1
        assert abs(p.constants["L13"]) >= 0.1
        assert all(-1 <= p.coords[f"q{a}"] <= 1 for a in range(1, 5))


def test_default_box():
    for p in sample(builtin("harmonic-oscillator"), 0, 50):
        assert all(-2 <= v <= 2 for v in p.coords.values())


def test_sampling_exhaustion():
    system = builtin("harmonic-oscillator")
    tight = type(system)(system.name, system.phase_space, system.params, system.family,
                         system.constraint_sets, [Guard(ex.Var("q1"), 10.0)])
    with pytest.raises(SamplingExhausted):
        sample(tight, 0, 1)


def test_sample_count_must_be_positive():
    with pytest.raises(ValueError):
        sample(builtin("harmonic-oscillator"), 0, 0)


def test_signed_guard_uses_real_part():
    g = Guard(ex.Var("x"), 0.1, absolute=False)
    assert not g.holds(-5.0)
    assert g.holds(0.2)
    assert Guard(ex.Var("x"), 0.1).holds(-5.0)


# ---------------------------------------------------------------------------
# constants at points


def test_oscillator_energy_split():
    ho = builtin("harmonic-oscillator")
    for p in sample(ho, 2, 20):
        c = p.constants
        assert abs(c["C1"] - c["C2"] - c["C3"]) < 1e-12


def test_kepler_orthogonality():
    kc = builtin("kepler-coulomb")
    for p in sample(kc, 2, 20):
        c = p.constants
        assert abs(c["A1"] * c["L1"] + c["A2"] * c["L2"] + c["A3"] * c["L3"]) < 1e-10


def test_winternitz_diagonal_constants_are_real():
    wz = builtin("winternitz-3")
    for p in sample(wz, 2, 20):
        for name in ("H", "T11", "T22", "T33"):
            assert abs(p.constants[name].imag) < 1e-10
    assert constants_at(wz, sample(wz, 2, 1)[0].coords)["T12"].imag != 0


# ---------------------------------------------------------------------------
# loader


def test_load_minimal_file():
    system = load(MINIMAL)
    assert system.name == "toy"
    assert system.family.hamiltonian_index == 0
    assert system.default_set.names == ("F1",)


@pytest.mark.parametrize("name", sorted(DATA_FILES))
def test_shipped_files_match_builtins(name):
    a, b = builtin(name), shipped(name)
    assert a.summary() == b.summary()
    assert a.family.names == b.family.names
    ra = run_suite([a], seed=7, samples=20).to_json()
    rb = run_suite([b], seed=7, samples=20).to_json()
    assert ra == rb


def test_constraint_with_phase_coordinate_is_rejected():
    text = MINIMAL.replace("constraint F1 = C1 - C2 - C3", "constraint F1 = C1 - C2 - q1")
    with pytest.raises(SystemDefinitionError, match="phase coordinate"):
        load(text)


def test_missing_hamiltonian_is_rejected():
    text = MINIMAL.replace("hamiltonian = C1\n", "")
    with pytest.raises(SystemFileError, match="hamiltonian"):
        load(text)


def test_undeclared_symbol_is_rejected():
    text = MINIMAL.replace("k*q1^2/2", "w*q1^2/2")
    with pytest.raises(SystemDefinitionError, match="undeclared"):
        load(text)
    text = MINIMAL.replace("C1 - C2 - C3", "C1 - C2 - C9")
    with pytest.raises(SystemDefinitionError, match="undeclared"):
        load(text)


def test_parse_error_carries_file_position():
    text = MINIMAL.replace("constant C4 = q1*p2 - q2*p1", "constant C4 = q1*p2 -* q2*p1")
    with pytest.raises(SystemFileError) as err:
        load(text)
    line = text.splitlines().index("constant C4 = q1*p2 -* q2*p1") + 1
    assert err.value.line == line
    assert err.value.column == text.splitlines()[line - 1].index("*", 18) + 1


@pytest.mark.parametrize("bad, message", [
    ("frobnicate 3", "unknown directive"),
    ("dof two", "dof"),
    ("box q1 1 -1", "empty"),
    ("box x9 0 1", "unknown coordinate"),
    ("guard q1 > 0.1", "guard"),
    ('system toy', "system"),
    ("param k = one", "number"),
])
def test_malformed_directives(bad, message):
    with pytest.raises(SystemDefinitionError, match=message):
        load(MINIMAL + bad + "\n")


def test_hamiltonian_expression_outside_family():
    text = MINIMAL.replace("hamiltonian = C1", "hamiltonian = (p1^2 + p2^2)/2 + k*(q1^2 + q2^2)/2")
    system = load(text)
    assert system.family.hamiltonian_index is None


def test_defines_and_comments():
    text = """
    system "defined"   # trailing comment
    dof 1
    define e = p1^2/2 + q1^2/2
    hamiltonian = C1
    constant C1 = e
    constant C2 = 2*e
    constraint F = C2 - 2*C1
    guard abs(q1) >= 0.2
    """
    system = load("\n".join(line.strip() for line in text.splitlines()))
    assert ex.free_variables(system.family.members[1].body) == {"p1", "q1"}
    assert system.guards[0].absolute


def test_tables_load():
    ho = shipped_table("harmonic-oscillator")
    assert ho.target == "F2"
    assert set(ho.partials) == {"C2", "C3", "C4", "C5"}
    t = load_table("target F\npartial C2 = C3\ngauge C2 = 1\n")
    assert t.gauge == {"C2": 1}
    with pytest.raises(SystemFileError):
        load_table("partial C2 = C3\npartial C2 = C4\n")
    with pytest.raises(SystemFileError):
        load_table("# nothing\n")


def test_constant_count_must_match_constraints():
    text = MINIMAL.replace("constant C4 = q1*p2 - q2*p1\n", "")
    with pytest.raises(SystemDefinitionError, match="m = 2n - 1 \\+ s"):
        load(text)
