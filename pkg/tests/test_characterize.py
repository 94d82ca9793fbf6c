import numpy as np
import pytest

from krauscope import matcore
from krauscope.characterize import (
    ObservableEstimatorConfig,
    Setup,
    density_element,
    density_full,
    estimate_observable,
    full_reconstruction,
    kraus_element,
    kraus_full,
    kraus_set_full,
    observable_element,
    observable_full,
    povm_element,
    povm_full,
    unitary_element,
    unitary_full,
)
from krauscope.errors import VanishingDenominatorError
from krauscope.matcore import SIGMA_X
from krauscope.quantum import (
    DensityMatrix,
    Dilation,
    KrausSet,
    ambiguous_kraus_pair,
    default_input_state,
    dilation_from_kraus,
    kraus_from_dilation,
    random_dilation,
)

I2 = np.eye(2)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
PLUS = np.array([1, 1]) / np.sqrt(2)
THETAS = (np.pi / 4, np.pi / 2, np.pi)


def flip_setup(**kw):
    u_se = np.kron(P0, I2) + np.kron(P1, SIGMA_X)
    return Setup(dil=Dilation(u_se, PLUS, d_s=2), rho_s=default_input_state(2), **kw)


# -- Kraus -------------------------------------------------------------------

def test_kraus_element_controlled_flip():
    s = flip_setup()
    assert kraus_element(s, 0, 0, 0) == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    assert kraus_element(s, 0, 1, 0) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_kraus_elements_random_dilation(seed):
    dil = random_dilation(3, 2, seed)
    s = Setup(dil=dil)
    truth = kraus_from_dilation(dil, 0)
    for i in range(3):
        for j in range(3):
            assert abs(kraus_element(s, i, j, 0) - truth[i, j]) <= 1e-9


def test_kraus_element_diagonal_state_fails():
    s = Setup(dil=random_dilation(2, 2, 0), rho_s=DensityMatrix(np.diag([0.3, 0.7])))
    assert abs(kraus_element(s, 0, 0, 0) - kraus_from_dilation(s.dil, 0)[0, 0]) < 1e-9
    with pytest.raises(VanishingDenominatorError) as exc:
        kraus_element(s, 0, 1, 0)
    assert exc.value.factor == "rho overlap"
    assert exc.value.location == (0, 1, 0)


def test_kraus_env_overlap_error_is_located():
    s = Setup(dil=Dilation(np.eye(4), [1, 0], d_s=2))
    with pytest.raises(VanishingDenominatorError) as exc:
        kraus_full(s, 1)
    assert exc.value.factor == "env overlap"
    assert exc.value.location is not None and exc.value.location[2] == 1


def test_kraus_full_dephasing():
    s = Setup(dil=dilation_from_kraus(KrausSet((P0, P1))))
    rec = kraus_full(s, 0)
    assert matcore.allclose(rec.elements, P0, 1e-9)
    assert rec.settings_used == 3
    assert set(rec.settings) == {0, 1, "I"}


@pytest.mark.parametrize("d_s,d_e", [(2, 2), (3, 2), (2, 3), (4, 4)])
def test_kraus_set_completeness(d_s, d_e):
    recs = kraus_set_full(Setup(dil=random_dilation(d_s, d_e, 7)))
    es = [r.elements.conj().T @ r.elements for r in recs]
    assert np.max(np.abs(sum(es) - np.eye(d_s))) <= 1e-8
    assert all(r.settings_used == d_s + 1 for r in recs)
    assert recs[0].diagnostics["completeness"] <= 1e-8


def test_baselines_shared_across_columns():
    rec = kraus_full(Setup(dil=random_dilation(3, 2, 1)), 1)
    assert set(rec.baseline_values) == {(i, "I") for i in range(3)}


# -- POVM ----------------------------------------------------------------------

def test_povm_ambiguous_pair():
    ks, ks_tilde = ambiguous_kraus_pair()
    for kset in (ks, ks_tilde):
        s = Setup(dil=dilation_from_kraus(kset))
        assert matcore.allclose(povm_full(s, 0).elements, I2 / 2, 1e-9)
        for i in range(2):
            for j in range(2):
                assert abs(povm_element(s, i, j, 0) - 0.5 * (i == j)) <= 1e-9


def test_povm_second_element():
    s = Setup(dil=dilation_from_kraus(ambiguous_kraus_pair()[0]))
    e1 = povm_full(s, 1).elements
    assert matcore.allclose(np.diag(e1), [0.25, 0.0], 1e-9)
    e2 = povm_full(s, 2).elements
    assert matcore.allclose(e2, (3 * I2 - matcore.SIGMA_Z) / 8, 1e-9)


def test_povm_hermitian_pairing():
    s = Setup(dil=random_dilation(3, 3, 2))
    for i in range(3):
        for j in range(3):
            assert abs(povm_element(s, i, j, 1) - np.conj(povm_element(s, j, i, 1))) <= 1e-9
    e = povm_full(s, 1).elements
    assert np.max(np.abs(e - e.conj().T)) <= 1e-9


def test_kraus_ambiguity_resolved():
    ks, ks_tilde = ambiguous_kraus_pair()
    a = kraus_full(Setup(dil=dilation_from_kraus(ks)), 0).elements
    a_t = kraus_full(Setup(dil=dilation_from_kraus(ks_tilde)), 0).elements
    assert matcore.frobenius_distance(a, a_t) > 0.5
    assert matcore.allclose(a, ks[0], 1e-9) and matcore.allclose(a_t, ks_tilde[0], 1e-9)


# -- unitary -------------------------------------------------------------------

def test_unitary_element_examples():
    s = Setup(u1=np.eye(3), rho_s=default_input_state(3))
    for i in range(3):
        for j in range(3):
            assert abs(unitary_element(s, i, j) - (i == j)) <= 1e-12
    s = Setup(u1=SIGMA_X, rho_s=default_input_state(2))
    assert unitary_element(s, 0, 1) == pytest.approx(1, abs=1e-12)
    assert unitary_element(s, 0, 0) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_unitary_full_random(seed):
    u = matcore.random_unitary(4, seed)
    rec = unitary_full(Setup(u1=u))
    assert np.max(np.abs(rec.elements - u)) <= 1e-9
    assert rec.settings_used == 5


# -- observable ----------------------------------------------------------------

def test_observable_sigma_x_closed_form():
    dt = 0.01
    fo = ObservableEstimatorConfig(0.8, 0.8 - dt, "first_order")
    rf = ObservableEstimatorConfig(0.8, 0.8 - dt, "refined")
    s = Setup(generator=SIGMA_X, rho_s=default_input_state(2))
    # <0|exp(-i dt X)|1> = -i sin(dt), <0|exp(-i dt X)|0> = cos(dt)
    assert observable_element(s, 0, 1, fo) == pytest.approx(np.sin(dt) / dt, abs=1e-10)
    assert observable_element(s, 0, 0, fo) == pytest.approx(-1j * (1 - np.cos(dt)) / dt, abs=1e-10)
    assert observable_element(s, 0, 0, rf) == pytest.approx(0, abs=1e-12)
    # refined keeps an O(dt^2) off-diagonal bias: sin(dt)/dt, not exactly 1
    assert observable_element(s, 0, 1, rf) == pytest.approx(np.sin(dt) / dt, abs=1e-10)


def test_observable_estimators_converge():
    a = matcore.random_hermitian(3, 4)
    exact_u = lambda dt: matcore.expm_hermitian(a, dt)  # noqa: E731
    for method in ("first_order", "refined"):
        cfg = ObservableEstimatorConfig(1e-6, 0.0, method)
        est = estimate_observable(exact_u(1e-6), exact_u(-1e-6), np.eye(3), cfg)
        assert np.max(np.abs(est - a)) < 1e-5


def test_observable_config_guards():
    with pytest.raises(VanishingDenominatorError):
        ObservableEstimatorConfig(0.5, 0.5)
    with pytest.raises(ValueError):
        ObservableEstimatorConfig(2.0, 0.5)
    with pytest.raises(ValueError):
        ObservableEstimatorConfig(0.6, 0.5, "third_order")


def _observable_errors(a, method, dts):
    errs = []
    for dt in dts:
        cfg = ObservableEstimatorConfig(0.9, 0.9 - dt, method)
        rec = observable_full(Setup(generator=a, observable=cfg, rho_s=default_input_state(3)))
        errs.append(np.max(np.abs(rec.elements - a)))
    return np.array(errs)


def test_observable_error_orders():
    dts = np.array([0.1, 0.05, 0.025, 0.0125])
    for seed in range(3):
        a = matcore.random_hermitian(3, seed)
        fo = _observable_errors(a, "first_order", dts)
        rf = _observable_errors(a, "refined", dts)
        assert abs(np.polyfit(np.log(dts), np.log(fo), 1)[0] - 1) <= 0.2
        assert abs(np.polyfit(np.log(dts), np.log(rf), 1)[0] - 2) <= 0.2
        assert np.all(rf <= fo)
        # halving dt halves the first-order error within x1.3
        ratios = fo[:-1] / fo[1:]
        assert np.all((ratios >= 2 / 1.3) & (ratios <= 2 * 1.3))


def test_observable_full_settings():
    cfg = ObservableEstimatorConfig(0.5, 0.45)
    rec = observable_full(Setup(generator=matcore.random_hermitian(3, 1), observable=cfg))
    assert rec.settings_used == 4


# -- density -------------------------------------------------------------------

def test_density_examples():
    s = Setup(rho_s=DensityMatrix.from_vector(PLUS))
    assert density_element(s, 0, 1) == pytest.approx(0.5, abs=1e-12)
    s = Setup(rho_s=DensityMatrix(np.eye(3) / 3))
    rec = density_full(s)
    assert matcore.allclose(rec.elements, np.eye(3) / 3, 1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_density_full_random(seed):
    rho = DensityMatrix(matcore.random_density(4, seed))
    rec = density_full(Setup(rho_s=rho))
    assert matcore.frobenius_distance(rec.elements, rho.mat) <= 1e-9
    assert rec.settings_used == 5


def test_density_bad_reference_unitary():
    s = Setup(rho_s=DensityMatrix(matcore.random_density(2, 0)), u1=np.eye(2))
    with pytest.raises(VanishingDenominatorError) as exc:
        density_element(s, 0, 1)
    assert exc.value.factor == "reference overlap"


def test_density_custom_reference_unitary():
    rho = DensityMatrix(matcore.random_density(3, 9))
    u1 = matcore.random_unitary(3, 2)  # generic: no vanishing entries
    rec = density_full(Setup(rho_s=rho, u1=u1))
    assert matcore.allclose(rec.elements, rho.mat, 1e-9)


# -- full_reconstruction / invariants -------------------------------------------

def test_full_reconstruction_density_trace():
    rec = full_reconstruction("density", Setup(rho_s=DensityMatrix(matcore.random_density(3, 1))))
    assert abs(np.trace(rec.elements) - 1) <= 1e-8
    assert rec.diagnostics["hermiticity"] <= 1e-9


def test_full_reconstruction_unitary_residual():
    rec = full_reconstruction("unitary", Setup(u1=matcore.random_unitary(3, 1)))
    assert rec.diagnostics["unitarity"] <= 1e-8


def test_full_reconstruction_kraus_povm_sum():
    s = Setup(dil=random_dilation(3, 3, 5))
    es = [full_reconstruction("povm", s, k).elements for k in range(3)]
    assert matcore.allclose(sum(es), np.eye(3), 1e-8)


def test_full_reconstruction_unknown_kind():
    with pytest.raises(ValueError):
        full_reconstruction("channel", Setup(rho_s=default_input_state(2)))


def test_theta_independence():
    dil = random_dilation(3, 2, 3)
    u = matcore.random_unitary(3, 3)
    rho = DensityMatrix(matcore.random_density(3, 3))
    for make in (
        lambda t: kraus_full(Setup(dil=dil, theta=t), 1).elements,
        lambda t: unitary_full(Setup(u1=u, theta=t)).elements,
        lambda t: density_full(Setup(rho_s=rho, theta=t)).elements,
    ):
        ref = make(THETAS[0])
        for t in THETAS[1:]:
            assert np.max(np.abs(make(t) - ref)) <= 1e-9


# -- sampled mode --------------------------------------------------------------

def test_sampled_kraus_is_deterministic_and_close():
    dil = random_dilation(2, 2, 0)
    a = kraus_full(Setup(dil=dil, shots=200_000, seed=4), 0)
    b = kraus_full(Setup(dil=dil, shots=200_000, seed=4), 0)
    assert np.array_equal(a.elements, b.elements)
    truth = kraus_from_dilation(dil, 0)
    # per-element 5 sigma
    assert np.all(np.abs(a.elements - truth) <= 5 * a.stderr)
    assert not a.unreliable.any()
    assert a.mode.startswith("sampled")


def test_sampled_low_shots_flags_unreliable():
    s = Setup(dil=random_dilation(3, 3, 1), shots=100, seed=0)
    rec = kraus_full(s, 0)
    assert rec.unreliable.any()
    assert np.array_equal(rec.unreliable, rec.stderr > 1 / 3)
