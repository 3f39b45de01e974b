import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spheredyn.errors import SingularInertia, TangencyViolation
from spheredyn.geometry import Rep, SystemState, qdot_from_omega, random_states
from spheredyn.hamiltonian import (
    dH_dq,
    ham_rhs_mu,
    ham_rhs_pi,
    hamiltonian,
    hamiltonian_mu,
    hamiltonian_pi,
    inverse_legendre_mu,
    inverse_legendre_pi,
    legendre_mu,
    legendre_pi,
)
from spheredyn.integrate import IntegratorSpec, integrate, vector_field
from spheredyn.lagrangian import lagrangian_value
from spheredyn.library import ChainForceParams, ChainPendulumParams, chain_forces, chain_pendulum
from spheredyn.model import QuadraticModel

E1, E2, E3 = np.eye(3)
seeds = st.integers(0, 2**32 - 1)


def scalar_model(m, potential=lambda q: 0.0):
    return QuadraticModel(1, lambda q: np.array([[m]]), potential, constant_inertia=True)


def states(model, rng, scale=1.5):
    q, w = random_states(rng, model.n, scale)
    om = SystemState(q, w, Rep.OMEGA)
    vel = SystemState(q, qdot_from_omega(q, w), Rep.VELOCITY)
    return vel, om


@pytest.fixture(params=["double_pendulum", "modulated", "triple_chain"])
def model(request):
    return request.getfixturevalue(request.param)


def test_legendre_examples():
    q = np.array([E3])
    mu = legendre_mu(scalar_model(2.0), SystemState(q, np.array([[0.3, 0, 0]]), Rep.VELOCITY))
    assert mu.rep is Rep.MOMENTUM_MU
    np.testing.assert_allclose(mu.v, [[0.6, 0, 0]])
    pi = legendre_pi(scalar_model(3.0), SystemState(np.array([E1]), np.array([[0, 0.5, 0]]), Rep.OMEGA))
    np.testing.assert_allclose(pi.v, [[0, 1.5, 0]])


def test_zero_momenta_map_to_zero(double_pendulum):
    q = np.array([E1, -E3])
    zero = np.zeros_like(q)
    assert not inverse_legendre_mu(double_pendulum, SystemState(q, zero, Rep.MOMENTUM_MU)).v.any()
    assert not inverse_legendre_pi(double_pendulum, SystemState(q, zero, Rep.MOMENTUM_PI)).v.any()
    assert not legendre_mu(double_pendulum, SystemState(q, zero, Rep.VELOCITY)).v.any()


def test_scalar_inverse():
    q = np.array([E3])
    vel = inverse_legendre_mu(scalar_model(4.0), SystemState(q, np.array([[2.0, -1.0, 0]]), Rep.MOMENTUM_MU))
    np.testing.assert_allclose(vel.v, [[0.5, -0.25, 0]])


def test_round_trips(model, rng):
    for _ in range(20):
        vel, om = states(model, rng)
        mu = legendre_mu(model, vel)
        pi = legendre_pi(model, om)
        assert np.abs(np.sum(mu.q * mu.v, axis=1)).max() < 1e-12
        assert np.abs(np.sum(pi.q * pi.v, axis=1)).max() < 1e-12
        np.testing.assert_allclose(inverse_legendre_mu(model, mu).v, vel.v, atol=1e-10)
        np.testing.assert_allclose(inverse_legendre_pi(model, pi).v, om.v, atol=1e-10)
        # the other direction, starting from momenta
        np.testing.assert_allclose(legendre_mu(model, inverse_legendre_mu(model, mu)).v, mu.v, atol=1e-10)
        np.testing.assert_allclose(legendre_pi(model, inverse_legendre_pi(model, pi)).v, pi.v, atol=1e-10)


def test_hamiltonian_at_rest():
    model = chain_pendulum(ChainPendulumParams((1.0, 1.0), (1.0, 1.0), 10.0))
    q = np.array([-E3, -E3])
    for rep in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        assert hamiltonian(model, SystemState(q, np.zeros_like(q), rep)) == pytest.approx(-30.0)


def test_zero_momenta_give_potential(model, rng):
    q, _ = random_states(rng, model.n)
    assert hamiltonian_mu(model, SystemState(q, np.zeros_like(q), Rep.MOMENTUM_MU)) == pytest.approx(model.potential(q))


def test_hamiltonian_is_legendre_dual(model, rng):
    for _ in range(20):
        vel, om = states(model, rng)
        lag = lagrangian_value(model, vel)
        mu, pi = legendre_mu(model, vel), legendre_pi(model, om)
        assert hamiltonian_mu(model, mu) == pytest.approx(np.sum(mu.v * vel.v) - lag, abs=1e-10)
        assert hamiltonian_pi(model, pi) == pytest.approx(np.sum(pi.v * om.v) - lag, abs=1e-10)


def test_equilibrium_rates(triple_chain):
    q = np.tile(-E3, (3, 1))
    zero = np.zeros_like(q)
    for rhs, rep in ((ham_rhs_mu, Rep.MOMENTUM_MU), (ham_rhs_pi, Rep.MOMENTUM_PI)):
        qdot, pdot = rhs(triple_chain, None, SystemState(q, zero, rep))
        np.testing.assert_allclose(qdot, 0.0, atol=1e-15)
        np.testing.assert_allclose(pdot, 0.0, atol=1e-14)


@given(seeds)
def test_free_sphere_pi_constant(seed):
    q, p = random_states(np.random.default_rng(seed), 1, 2.0)
    qdot, pidot = ham_rhs_pi(scalar_model(1.7), None, SystemState(q, p, Rep.MOMENTUM_PI))
    np.testing.assert_allclose(pidot, 0.0, atol=1e-13)
    # q moves in the plane normal to pi
    assert abs(qdot[0] @ p[0]) < 1e-13


@pytest.mark.parametrize("forced", [False, True])
def test_momentum_rates_match_lagrangian_flow(forced, double_pendulum, rng):
    """Differentiate the Legendre images of a short Euler-Lagrange solution."""
    forces = None
    if forced:
        forces = chain_forces(ChainForceParams(tau=(0.1, -0.2, 0.3), d=(0.0, 0.5, 0.1)), (1.0, 1.0))
    delta = 1e-4
    spec = IntegratorSpec(step=delta / 4, horizon=delta)
    for _ in range(3):
        vel, om = states(double_pendulum, rng)
        for rep, start, rhs, to_p in (
            (Rep.MOMENTUM_MU, vel, ham_rhs_mu, legendre_mu),
            (Rep.MOMENTUM_PI, om, ham_rhs_pi, legendre_pi),
        ):
            ahead = integrate(double_pendulum, start, spec, forces).final
            back = integrate(double_pendulum, start.replace(v=-start.v), spec, _reverse(forces))
            behind = _reversed_state(back.final)
            p_dot_fd = (to_p(double_pendulum, ahead).v - to_p(double_pendulum, behind).v) / (2 * delta)
            qdot, pdot = rhs(double_pendulum, forces, to_p(double_pendulum, start))
            np.testing.assert_allclose(pdot, p_dot_fd, rtol=2e-6, atol=1e-6)
            np.testing.assert_allclose(qdot, (ahead.q - behind.q) / (2 * delta), atol=1e-6)


def _tangent(q, g):
    return g - q * np.sum(q * g, axis=1, keepdims=True)


def _reverse(forces):
    # integrating backwards in time = forwards with flipped velocities; forces here are time-independent
    if forces is None:
        return None
    return lambda t, s: forces(-t, s)


def _reversed_state(state):
    return state.replace(v=-state.v)


@given(seeds)
def test_normal_momentum_identity(seed):
    model = chain_pendulum(ChainPendulumParams((1.0, 2.0), (0.5, 1.0)))
    rng = np.random.default_rng(seed)
    vel, _ = states(model, rng)
    mu = legendre_mu(model, vel)
    qdot, mudot = ham_rhs_mu(model, None, mu)
    np.testing.assert_allclose(np.sum(mu.q * mudot, axis=1), -np.sum(qdot * mu.v, axis=1), atol=1e-9)
    assert np.abs(np.sum(mu.q * qdot, axis=1)).max() < 1e-12


def test_dH_dq_single_link():
    model = scalar_model(2.0, potential=lambda q: 3.0 * q[0, 2])
    model._potential_grad = lambda q: np.array([[0.0, 0.0, 3.0]])
    q, p = random_states(np.random.default_rng(0), 1)
    for rep in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        s = SystemState(q, p, rep)
        np.testing.assert_allclose(dH_dq(model, s), [[0, 0, 3.0]], atol=1e-14)
        np.testing.assert_allclose(dH_dq(model, s, 0), [0, 0, 3.0], atol=1e-14)


def test_dH_dq_constant_potential():
    model = scalar_model(2.0, potential=lambda q: 7.0)
    q, p = random_states(np.random.default_rng(1), 1)
    for rep in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        for method in ("analytic", "fd"):
            # off the sphere the pi-form operator scales with |q|^2, so only the tangent part is meaningful
            g = dH_dq(model, SystemState(q, p, rep), method=method)
            np.testing.assert_allclose(_tangent(q, g), 0.0, atol=1e-8)


@pytest.mark.parametrize("rep", [Rep.MOMENTUM_MU, Rep.MOMENTUM_PI])
def test_dH_dq_analytic_matches_fd(model, rep, rng):
    for _ in range(5):
        vel, om = states(model, rng)
        s = legendre_mu(model, vel) if rep is Rep.MOMENTUM_MU else legendre_pi(model, om)
        exact = dH_dq(model, s)
        fd = dH_dq(model, s, method="fd")
        # the fallback potential gradient of the modulated model is projected, so compare tangent parts
        fd_t = fd - s.q * np.sum(s.q * fd, axis=1, keepdims=True)
        exact_t = exact - s.q * np.sum(s.q * exact, axis=1, keepdims=True)
        np.testing.assert_allclose(fd_t, exact_t, atol=2e-7)


@pytest.mark.parametrize("rep", [Rep.MOMENTUM_MU, Rep.MOMENTUM_PI])
def test_dH_dq_fd_converges_at_second_order(double_pendulum, rep):
    vel, om = states(double_pendulum, np.random.default_rng(7))
    s = legendre_mu(double_pendulum, vel) if rep is Rep.MOMENTUM_MU else legendre_pi(double_pendulum, om)
    exact = dH_dq(double_pendulum, s)
    errs = [
        np.abs(_tangent(s.q, dH_dq(double_pendulum, s, method="fd", step=h) - exact)).max() for h in (4e-2, 2e-2, 1e-2)
    ]
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 < coarse / fine < 4.5


def test_dH_dq_rejects_velocity_state(double_pendulum):
    q = np.array([-E3, -E3])
    with pytest.raises(ValueError):
        dH_dq(double_pendulum, SystemState(q, np.zeros_like(q), Rep.VELOCITY))
    with pytest.raises(ValueError, match="method"):
        dH_dq(double_pendulum, SystemState(q, np.zeros_like(q), Rep.MOMENTUM_MU), method="symbolic")


@pytest.mark.parametrize("rep", [Rep.MOMENTUM_MU, Rep.MOMENTUM_PI])
def test_energy_rate_vanishes_without_forces(modulated, rep, rng):
    """dH/dt = dH/dq . qdot + dH/dp . pdot along the vector field."""
    field = vector_field(modulated, None, rep)
    for _ in range(5):
        vel, om = states(modulated, rng)
        s = legendre_mu(modulated, vel) if rep is Rep.MOMENTUM_MU else legendre_pi(modulated, om)
        qdot, pdot = field(0.0, s.q, s.v)
        h = 1e-5
        rate = (hamiltonian(modulated, s.replace(q=s.q + h * qdot, v=s.v + h * pdot), tol=1e-6)
                - hamiltonian(modulated, s.replace(q=s.q - h * qdot, v=s.v - h * pdot), tol=1e-6)) / (2 * h)
        assert abs(rate) < 1e-6


def test_fd_and_analytic_flows_agree(double_pendulum):
    vel, om = states(double_pendulum, np.random.default_rng(4))
    spec = IntegratorSpec(step=1e-2, horizon=0.2)
    for start in (legendre_mu(double_pendulum, vel), legendre_pi(double_pendulum, om)):
        a = integrate(double_pendulum, start, spec, dh_method="analytic")
        b = integrate(double_pendulum, start, spec, dh_method="fd")
        np.testing.assert_allclose(a.q, b.q, atol=1e-7)


def test_invalid_momentum_state(double_pendulum):
    q = np.array([-E3, -E3])
    with pytest.raises(TangencyViolation):
        hamiltonian_mu(double_pendulum, SystemState(q, np.array([[0, 0, 1.0], [0, 0, 0]]), Rep.MOMENTUM_MU))
    with pytest.raises(ValueError):
        hamiltonian_pi(double_pendulum, SystemState(q, np.zeros_like(q), Rep.MOMENTUM_MU))


def test_inverse_legendre_singular():
    model = scalar_model(0.0)
    q = np.array([E3])
    with pytest.raises(SingularInertia):
        inverse_legendre_pi(model, SystemState(q, np.array([[1.0, 0, 0]]), Rep.MOMENTUM_PI))
